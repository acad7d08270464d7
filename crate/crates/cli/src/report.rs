// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use graspforge_core::kinematics::ReachStatus;
use graspforge_core::planner::{GraspCandidate, PlanOutput, StageTimings};

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    /// 1-based.
    pub rank: usize,
    pub score: f64,
    pub statuses: Vec<ReachStatus>,
}

/// Candidate table plus run metadata.
#[derive(Clone, Debug)]
pub struct PlanReport {
    pub rows: Vec<ReportRow>,
    /// Candidates before the `--top` cut.
    pub total: usize,
    pub generated: usize,
    pub timings: StageTimings,
    pub cache_hit: bool,
    pub seed: u64,
}

pub fn status_label(s: ReachStatus) -> &'static str {
    match s {
        ReachStatus::Exact => "exact",
        ReachStatus::ToleranceOnly => "tolerance_only",
    }
}

impl PlanReport {
    pub fn new(out: &PlanOutput, top: Option<usize>) -> Self {
        let n = top.unwrap_or(out.candidates.len()).min(out.candidates.len());
        PlanReport {
            rows: out.candidates[..n]
                .iter()
                .enumerate()
                .map(|(i, c): (usize, &GraspCandidate)| ReportRow {
                    rank: i + 1,
                    score: c.score,
                    statuses: c.per_step_status.clone(),
                })
                .collect(),
            total: out.candidates.len(),
            generated: out.generated,
            timings: out.timings,
            cache_hit: out.cache_hit,
            seed: out.seed,
        }
    }

    /// Human-readable report for standard output.
    pub fn table(&self) -> String {
        let t = &self.timings;
        let mut s = String::new();
        let cache = if self.cache_hit { "hit" } else { "miss" };
        let _ = writeln!(s, "seed {}  generated {}  cache {cache}", self.seed, self.generated);
        let _ = writeln!(
            s,
            "timings (ms): generate {:.1}  filter {:.1}  evaluate {:.1}",
            t.generate_ms, t.filter_ms, t.evaluate_ms
        );
        if self.total == 0 {
            s.push_str("0 candidates\n");
            return s;
        }
        if self.rows.len() < self.total {
            let _ = writeln!(s, "{} candidates, best {} shown", self.total, self.rows.len());
        } else {
            let _ = writeln!(s, "{} candidates", self.total);
        }
        let _ = writeln!(s, "{:>5}  {:>9}  steps", "rank", "score");
        for r in &self.rows {
            let steps: Vec<&str> = r.statuses.iter().map(|&st| status_label(st)).collect();
            let _ = writeln!(s, "{:>5}  {:>9.6}  {}", r.rank, r.score, steps.join(" "));
        }
        s
    }

    /// Candidate table as TSV. Carries no timings so identical plans give
    /// identical files.
    pub fn tsv(&self) -> String {
        let steps = self.rows.first().map_or(0, |r| r.statuses.len());
        let mut s = String::from("rank\tscore");
        for i in 1..=steps {
            let _ = write!(s, "\tstep_{i}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{}\t{}", r.rank, r.score);
            for &st in &r.statuses {
                let _ = write!(s, "\t{}", status_label(st));
            }
            s.push('\n');
        }
        s
    }
}
