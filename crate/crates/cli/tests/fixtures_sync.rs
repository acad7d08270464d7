// SPDX-License-Identifier: Apache-2.0

//! The JSON fixtures shipped with the CLI are renderings of the in-code
//! fixtures. Run with `UPDATE_FIXTURES=1` to regenerate them.

use std::path::PathBuf;

use graspforge_core::fixtures;
use graspforge_core::planner::{antipodal, PlannerConfig, PluginSpec};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn rendered() -> Vec<(&'static str, String)> {
    let antipodal = PlannerConfig {
        generator: PluginSpec::named(antipodal::NAME),
        ..Default::default()
    };
    let json = |s: String| s + "\n";
    vec![
        ("robot.json", json(fixtures::reference_robot().to_json())),
        ("painting.json", json(fixtures::painting_task().to_json())),
        ("pour.json", json(fixtures::pour_task().to_json())),
        ("handover.json", json(fixtures::handover_task().to_json())),
        ("infeasible.json", json(fixtures::infeasible_task().to_json())),
        ("can.json", json(fixtures::can_task().to_json())),
        (
            "config_default.json",
            json(serde_json::to_string_pretty(&PlannerConfig::default()).unwrap()),
        ),
        ("config_antipodal.json", json(serde_json::to_string_pretty(&antipodal).unwrap())),
    ]
}

#[test]
fn shipped_fixtures_match_code() {
    let dir = fixture_dir();
    let update = std::env::var_os("UPDATE_FIXTURES").is_some();
    for (name, text) in rendered() {
        let path = dir.join(name);
        if update {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_default();
        assert!(on_disk == text, "{name} is out of date; rerun with UPDATE_FIXTURES=1");
    }
}
