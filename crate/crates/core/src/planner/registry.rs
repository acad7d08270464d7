// SPDX-License-Identifier: Apache-2.0

//! Named plugin factories for the three pipeline stages.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{GraspCandidate, PlanContext, PlannerError};
use crate::geometry::TriMesh;
use crate::kinematics::EndEffectorModel;
use crate::taskmodel::Grasp;

pub trait GraspGenerator: Send + Sync {
    fn name(&self) -> &str;
    /// Stable hash of the effective parameters, recorded as cache provenance.
    fn params_hash(&self) -> String;
    /// Grasps for `object` (in its own frame), deterministic in `seed`.
    fn generate(&self, object: &TriMesh, ee: &EndEffectorModel, seed: u64) -> Result<Vec<Grasp>, PlannerError>;
}

pub trait GraspFilter: Send + Sync {
    fn name(&self) -> &str;
    /// Candidates that survive, in input order; `gen_index` is the input position.
    fn filter(&self, grasps: &[Grasp], ctx: &PlanContext<'_>) -> Result<Vec<GraspCandidate>, PlannerError>;
}

pub trait GraspEvaluator: Send + Sync {
    fn name(&self) -> &str;
    /// One finite score per candidate, higher is better. Scores may depend on
    /// the whole batch (normalization).
    fn evaluate(&self, candidates: &[GraspCandidate], ctx: &PlanContext<'_>) -> Result<Vec<f64>, PlannerError>;
}

pub type GeneratorFactory = Arc<dyn Fn(&Value) -> Result<Box<dyn GraspGenerator>, PlannerError> + Send + Sync>;
pub type FilterFactory = Arc<dyn Fn(&Value) -> Result<Box<dyn GraspFilter>, PlannerError> + Send + Sync>;
pub type EvaluatorFactory = Arc<dyn Fn(&Value) -> Result<Box<dyn GraspEvaluator>, PlannerError> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PluginKind {
    Generator,
    Filter,
    Evaluator,
}

impl std::fmt::Display for PluginKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PluginKind::Generator => "generator",
            PluginKind::Filter => "filter",
            PluginKind::Evaluator => "evaluator",
        })
    }
}

#[derive(Clone, Default)]
pub struct PluginRegistry {
    generators: BTreeMap<String, GeneratorFactory>,
    filters: BTreeMap<String, FilterFactory>,
    evaluators: BTreeMap<String, EvaluatorFactory>,
}

fn insert<F>(map: &mut BTreeMap<String, F>, kind: PluginKind, name: &str, f: F) -> Result<(), PlannerError> {
    if map.contains_key(name) {
        return Err(PlannerError::DuplicatePlugin {
            kind,
            name: name.into(),
        });
    }
    map.insert(name.into(), f);
    Ok(())
}

fn lookup<'a, F>(map: &'a BTreeMap<String, F>, kind: PluginKind, name: &str) -> Result<&'a F, PlannerError> {
    map.get(name).ok_or_else(|| PlannerError::UnknownPlugin {
        kind,
        name: name.into(),
        available: map.keys().cloned().collect(),
    })
}

impl PluginRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the built-in plugins.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register_generator(super::surface::NAME, Arc::new(|p| Ok(Box::new(super::surface::SurfaceSampling::from_params(p)?))))
            .expect("unique");
        r.register_generator(super::antipodal::NAME, Arc::new(|p| Ok(Box::new(super::antipodal::Antipodal::from_params(p)?))))
            .expect("unique");
        r.register_filter(super::filter::NAME, Arc::new(|p| Ok(Box::new(super::filter::Reachability::from_params(p)?))))
            .expect("unique");
        r.register_evaluator(super::evaluate::COMBINED, Arc::new(|p| Ok(Box::new(super::evaluate::Combined::from_params(p)?))))
            .expect("unique");
        r.register_evaluator(
            super::evaluate::CAPABILITY_INDEX,
            Arc::new(|p| Ok(Box::new(super::evaluate::CapabilityIndex::from_params(p)?))),
        )
        .expect("unique");
        r
    }

    pub fn register_generator(&mut self, name: &str, f: GeneratorFactory) -> Result<(), PlannerError> {
        insert(&mut self.generators, PluginKind::Generator, name, f)
    }

    pub fn register_filter(&mut self, name: &str, f: FilterFactory) -> Result<(), PlannerError> {
        insert(&mut self.filters, PluginKind::Filter, name, f)
    }

    pub fn register_evaluator(&mut self, name: &str, f: EvaluatorFactory) -> Result<(), PlannerError> {
        insert(&mut self.evaluators, PluginKind::Evaluator, name, f)
    }

    pub fn generator(&self, name: &str, params: &Value) -> Result<Box<dyn GraspGenerator>, PlannerError> {
        lookup(&self.generators, PluginKind::Generator, name)?(params)
    }

    pub fn filter(&self, name: &str, params: &Value) -> Result<Box<dyn GraspFilter>, PlannerError> {
        lookup(&self.filters, PluginKind::Filter, name)?(params)
    }

    pub fn evaluator(&self, name: &str, params: &Value) -> Result<Box<dyn GraspEvaluator>, PlannerError> {
        lookup(&self.evaluators, PluginKind::Evaluator, name)?(params)
    }

    pub fn names(&self, kind: PluginKind) -> Vec<String> {
        match kind {
            PluginKind::Generator => self.generators.keys().cloned().collect(),
            PluginKind::Filter => self.filters.keys().cloned().collect(),
            PluginKind::Evaluator => self.evaluators.keys().cloned().collect(),
        }
    }
}

/// Parses plugin parameters, filling defaults for absent keys. `null` means
/// all defaults.
pub fn parse_params<P: DeserializeOwned + Default>(plugin: &str, params: &Value) -> Result<P, PlannerError> {
    if params.is_null() {
        return Ok(P::default());
    }
    serde_json::from_value(params.clone()).map_err(|e| PlannerError::InvalidParams {
        plugin: plugin.into(),
        message: e.to_string(),
    })
}

/// Short hex hash of the serialized parameters.
pub fn hash_params<P: Serialize>(params: &P) -> String {
    let text = serde_json::to_string(params).expect("parameters serialize");
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve_and_unknown_names_fail() {
        let r = PluginRegistry::with_builtins();
        for name in r.names(PluginKind::Generator) {
            assert!(r.generator(&name, &Value::Null).is_ok());
        }
        assert!(r.filter("reachability", &Value::Null).is_ok());
        assert!(r.evaluator("capability_index", &Value::Null).is_ok());
        let err = r.generator("gpd", &Value::Null).err().unwrap();
        assert!(err.to_string().contains("gpd"));
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut r = PluginRegistry::with_builtins();
        let err = r
            .register_filter("reachability", Arc::new(|p| Ok(Box::new(super::super::filter::Reachability::from_params(p)?))))
            .unwrap_err();
        assert!(matches!(err, PlannerError::DuplicatePlugin { .. }));
    }

    #[test]
    fn bad_params_are_reported() {
        let r = PluginRegistry::with_builtins();
        let err = r.generator("surface_sampling", &serde_json::json!({"n_samples": "many"})).err().unwrap();
        assert!(err.to_string().contains("surface_sampling"));
    }
}
