use std::collections::BTreeMap;

use alert_swarm::sim::{ProfileKind, RunSummary};
use alert_swarm::ThreatLevel;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Mean and sample standard deviation over the runs where a value exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub stdev: Option<f64>,
    pub n: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Stat {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        let n = v.len();
        if n == 0 {
            return Stat {
                mean: None,
                stdev: None,
                n,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let stdev = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat {
            mean: Some(mean),
            stdev: Some(stdev),
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindAggregate {
    pub expected_label: ThreatLevel,
    pub precision: Stat,
    pub recall: Stat,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub seeds: Vec<u64>,
    pub detection: BTreeMap<ProfileKind, KindAggregate>,
    pub mean_messages_per_tick: Stat,
    pub ticks_to_stable: Stat,
    pub unstable_runs: usize,
    pub queries_near_noxious: Stat,
    pub queries_clear: Stat,
    pub runs: Vec<RunSummary>,
}

impl Summary {
    /// Aggregates per-seed summaries; runs are ordered by seed.
    pub fn aggregate(mut runs: Vec<RunSummary>) -> Summary {
        runs.sort_by_key(|r| r.seed);
        let detection = ProfileKind::ADVERSARIAL
            .iter()
            .map(|&kind| {
                let get = |r: &RunSummary| r.detection.get(&kind).cloned();
                (
                    kind,
                    KindAggregate {
                        expected_label: kind.expected_label(),
                        precision: Stat::of(runs.iter().map(|r| get(r).and_then(|d| d.precision))),
                        recall: Stat::of(runs.iter().map(|r| get(r).and_then(|d| d.recall))),
                    },
                )
            })
            .collect();
        let applicable: Vec<&RunSummary> = runs.iter().filter(|r| r.applicable).collect();
        Summary {
            schema_version: SCHEMA_VERSION,
            seeds: runs.iter().map(|r| r.seed).collect(),
            detection,
            mean_messages_per_tick: Stat::of(runs.iter().map(|r| r.mean_messages_per_tick)),
            ticks_to_stable: Stat::of(runs.iter().map(|r| r.ticks_to_stable.map(|t| t as f64))),
            unstable_runs: applicable
                .iter()
                .filter(|r| r.ticks_to_stable.is_none())
                .count(),
            queries_near_noxious: Stat::of(runs.iter().map(|r| r.queries_near_noxious)),
            queries_clear: Stat::of(runs.iter().map(|r| r.queries_clear)),
            runs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
