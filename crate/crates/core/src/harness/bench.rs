use serde::{Deserialize, Serialize};

use crate::oracle::{generate, Family, GenError, Mode};
use crate::policy::PolicyConfig;

use super::solve::{solve, SolveConfig, SolveReport, SolveStatus};

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

/// Generator specs crossed with seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub families: Vec<Family>,
    #[serde(default)]
    pub max_restarts: Option<usize>,
    #[serde(default)]
    pub policy: Option<PolicyConfig>,
}

impl Default for Suite {
    fn default() -> Self {
        let families = vec![
            Family::PlantedCycle { n: 12, p: 0.15 },
            Family::PlantedCycle { n: 20, p: 0.15 },
            Family::PlantedCycle { n: 30, p: 0.15 },
            Family::Grid { rows: 4, cols: 4 },
            Family::Named { name: "petersen".into() },
        ];
        Suite { mode: Mode::Circuit, seeds: default_seeds(), families, max_restarts: None, policy: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchEntry {
    pub family: String,
    pub seed: u64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub instances: usize,
    pub found: usize,
    pub aborted: usize,
    pub mapping_failed: usize,
    pub success_rate: f64,
    pub mean_mu_x: f64,
    pub min_mu_x: f64,
    pub max_mu_x: f64,
    pub reports: Vec<BenchEntry>,
}

pub fn run_suite(suite: &Suite, timing: bool) -> Result<BenchSummary, GenError> {
    let mut reports = Vec::new();
    for family in &suite.families {
        for &seed in &suite.seeds {
            let g = generate(family, seed)?;
            let cfg = SolveConfig {
                mode: suite.mode,
                seed,
                max_restarts: suite.max_restarts,
                policy: suite.policy.clone().unwrap_or_default(),
                timing,
                ..SolveConfig::default()
            };
            reports.push(BenchEntry { family: family.label(), seed, report: solve(&g, &cfg).report });
        }
    }
    let count = |s: SolveStatus| reports.iter().filter(|e| e.report.status == s).count();
    let instances = reports.len();
    let mus: Vec<f64> = reports.iter().map(|e| e.report.mu_x).collect();
    let found = count(SolveStatus::Found);
    Ok(BenchSummary {
        instances,
        found,
        aborted: count(SolveStatus::Aborted),
        mapping_failed: count(SolveStatus::MappingFailed),
        success_rate: if instances == 0 { 0.0 } else { found as f64 / instances as f64 },
        mean_mu_x: if instances == 0 { 0.0 } else { mus.iter().sum::<f64>() / instances as f64 },
        min_mu_x: mus.iter().copied().fold(f64::INFINITY, f64::min).min(1.0),
        max_mu_x: mus.iter().copied().fold(0.0, f64::max),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_add_up() {
        let suite: Suite = serde_json::from_str(
            r#"{"mode":"path","seeds":[1,2],"families":[{"family":"grid","rows":3,"cols":3},{"family":"named","name":"star4"}]}"#,
        )
        .unwrap();
        let s = run_suite(&suite, false).unwrap();
        assert_eq!(s.instances, 4);
        assert_eq!(s.found + s.aborted + s.mapping_failed, 4);
        assert!(s.reports.iter().filter(|e| e.family == "star4").all(|e| e.report.status != SolveStatus::Found));
    }
}
