// SPDX-License-Identifier: Apache-2.0

//! Incremental (beneath-beyond) convex hull in `D` dimensions.
//!
//! Facets are simplices given by `D` point indices and an outward unit
//! normal. Inputs with coplanar subsets produce valid but non-unique
//! triangulations of the coplanar facets; heavily degenerate inputs can be
//! handled by joggling the points by a tiny seeded random offset.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HullError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points span only {rank} dimensions")]
    Degenerate { rank: usize },
    #[error("numerically degenerate facet while adding point {point}")]
    Numerical { point: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct HullOptions {
    /// Relative magnitude of the random perturbation applied to every
    /// coordinate (0 disables joggling).
    pub joggle: f64,
    pub seed: u64,
    /// Relative visibility / rank tolerance.
    pub tolerance: f64,
}

impl Default for HullOptions {
    fn default() -> Self {
        Self {
            joggle: 0.0,
            seed: 0,
            tolerance: 1e-11,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Facet<const D: usize> {
    pub vertices: [usize; D],
    /// Outward unit normal; interior points satisfy `normal · x <= offset`.
    pub normal: [f64; D],
    pub offset: f64,
}

impl<const D: usize> Facet<D> {
    pub fn signed_distance(&self, p: &[f64; D]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

#[derive(Clone, Debug)]
pub struct ConvexHull<const D: usize> {
    points: Vec<[f64; D]>,
    facets: Vec<Facet<D>>,
}

fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| a[i] - b[i])
}

/// Unit normal of the hyperplane through `pts` (exactly `D` points), or
/// `None` when they are affinely dependent.
pub(crate) fn hyperplane<const D: usize>(pts: &[[f64; D]], tol: f64) -> Option<([f64; D], f64)> {
    debug_assert_eq!(pts.len(), D);
    let mut rows: Vec<[f64; D]> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    let m = rows.len();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    // Gaussian elimination with partial pivoting; exactly one free column expected.
    let mut pivot_cols = Vec::with_capacity(m);
    let mut free = None;
    let mut r = 0;
    for c in 0..D {
        if r == m {
            if free.is_some() {
                return None;
            }
            free = Some(c);
            continue;
        }
        let (best, val) = (r..m)
            .map(|i| (i, rows[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol * scale {
            if free.is_some() {
                return None;
            }
            free = Some(c);
            continue;
        }
        rows.swap(r, best);
        for i in 0..m {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                if f != 0.0 {
                    for k in c..D {
                        rows[i][k] -= f * rows[r][k];
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free = free?;
    let mut n = [0.0; D];
    n[free] = 1.0;
    for (i, &c) in pivot_cols.iter().enumerate() {
        n[c] = -rows[i][free] / rows[i][c];
    }
    let len = dot(&n, &n).sqrt();
    if !len.is_finite() || len == 0.0 {
        return None;
    }
    n.iter_mut().for_each(|v| *v /= len);
    let off = dot(&n, &pts[0]);
    Some((n, off))
}

impl<const D: usize> ConvexHull<D> {
    pub fn build(input: &[[f64; D]], opts: HullOptions) -> Result<Self, HullError> {
        if input.len() < D + 1 {
            return Err(HullError::TooFewPoints {
                needed: D + 1,
                got: input.len(),
            });
        }
        let scale = input
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let tol = opts.tolerance * scale;
        let mut points = input.to_vec();
        if opts.joggle > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let amp = opts.joggle * scale;
            for p in &mut points {
                for c in p.iter_mut() {
                    *c += amp * rng.gen_range(-1.0..1.0);
                }
            }
        }

        let simplex = initial_simplex(&points, tol)?;
        let mut interior = [0.0; D];
        for &i in &simplex {
            for k in 0..D {
                interior[k] += points[i][k] / (D + 1) as f64;
            }
        }
        let make = |verts: [usize; D], points: &[[f64; D]]| -> Option<Facet<D>> {
            let pts: Vec<[f64; D]> = verts.iter().map(|&v| points[v]).collect();
            let (mut normal, mut offset) = hyperplane(&pts, 1e-12)?;
            if dot(&normal, &interior) - offset > 0.0 {
                normal.iter_mut().for_each(|v| *v = -*v);
                offset = -offset;
            }
            Some(Facet {
                vertices: verts,
                normal,
                offset,
            })
        };

        let mut facets: Vec<Facet<D>> = Vec::new();
        for skip in 0..=D {
            let mut verts = [0usize; D];
            let mut k = 0;
            for (j, &v) in simplex.iter().enumerate() {
                if j != skip {
                    verts[k] = v;
                    k += 1;
                }
            }
            facets.push(make(verts, &points).ok_or(HullError::Degenerate { rank: D - 1 })?);
        }

        let mut in_simplex = vec![false; points.len()];
        simplex.iter().for_each(|&i| in_simplex[i] = true);
        for p in 0..points.len() {
            if in_simplex[p] {
                continue;
            }
            let (visible, kept): (Vec<Facet<D>>, Vec<Facet<D>>) = facets
                .into_iter()
                .partition(|f| f.signed_distance(&points[p]) > tol);
            facets = kept;
            if visible.is_empty() {
                continue;
            }
            let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
            for f in &visible {
                for skip in 0..D {
                    let mut r: Vec<usize> = (0..D).filter(|&j| j != skip).map(|j| f.vertices[j]).collect();
                    r.sort_unstable();
                    *ridges.entry(r).or_default() += 1;
                }
            }
            let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
            horizon.sort_unstable();
            for ridge in horizon {
                let mut verts = [p; D];
                verts[..D - 1].copy_from_slice(&ridge);
                facets.push(make(verts, &points).ok_or(HullError::Numerical { point: p })?);
            }
        }
        Ok(Self { points, facets })
    }

    pub fn facets(&self) -> &[Facet<D>] {
        &self.facets
    }

    /// Points the hull was built from (after joggling).
    pub fn points(&self) -> &[[f64; D]] {
        &self.points
    }
}

fn initial_simplex<const D: usize>(points: &[[f64; D]], tol: f64) -> Result<Vec<usize>, HullError> {
    let first = (0..points.len())
        .min_by(|&a, &b| points[a][0].total_cmp(&points[b][0]))
        .unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<[f64; D]> = Vec::with_capacity(D);
    for rank in 0..D {
        let mut best = (0usize, -1.0f64, [0.0; D]);
        for (i, p) in points.iter().enumerate() {
            let mut r = sub(p, &points[first]);
            for b in &basis {
                let d = dot(&r, b);
                for k in 0..D {
                    r[k] -= d * b[k];
                }
            }
            let n = dot(&r, &r).sqrt();
            if n > best.1 {
                best = (i, n, r);
            }
        }
        if best.1 <= tol {
            return Err(HullError::Degenerate { rank });
        }
        basis.push(std::array::from_fn(|k| best.2[k] / best.1));
        chosen.push(best.0);
    }
    Ok(chosen)
}
