use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ProfileKind, WorldConfig};
use super::world::World;
use crate::error::Result;
use crate::model::{distance, ThreatLevel};

/// Number of trailing ticks averaged for the query-rate comparison.
pub const QUERY_RATE_WINDOW: usize = 50;

/// Observations taken after one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickMetrics {
    /// Index of the tick that was just simulated (0-based).
    pub tick: u64,
    /// Mean risk of the agents of each profile kind, indexed by
    /// [`ProfileKind::index`].
    pub mean_risk: [Option<f64>; 4],
    pub belief_queries: u64,
    pub report_requests: u64,
    /// All requests sent this tick: belief queries plus report requests.
    pub messages: u64,
    pub responses: u64,
    pub mean_domain_size: f64,
    pub max_domain_size: u64,
    pub mean_range: f64,
    /// Mean alertness index (Low 0, Elevated 1, High 2) of honest agents.
    pub mean_alertness_honest: Option<f64>,
    pub mean_kappa: Option<f64>,
    /// Mean belief queries sent by honest agents with a responsive liar in
    /// sensor range.
    pub queries_near_noxious: Option<f64>,
    /// Mean belief queries sent by honest agents with no adversary in range.
    pub queries_clear: Option<f64>,
    /// Labels held by honest observers: `confusion[true kind][label]`.
    pub confusion: [[u64; 4]; 4],
}

/// One-vs-rest counts for an adversarial kind against its expected label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl DetectionCounts {
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }
}

impl TickMetrics {
    pub fn detection(&self, kind: ProfileKind) -> DetectionCounts {
        let target = kind.expected_label().index();
        let mut c = DetectionCounts::default();
        for (truth, row) in self.confusion.iter().enumerate() {
            for (label, &n) in row.iter().enumerate() {
                match (truth == kind.index(), label == target) {
                    (true, true) => c.tp += n,
                    (true, false) => c.fn_ += n,
                    (false, true) => c.fp += n,
                    (false, false) => c.tn += n,
                }
            }
        }
        c
    }

    /// Most frequent label honest observers give `kind`; ties go to the less
    /// severe label. `None` when no such pair was evaluated.
    pub fn modal_label(&self, kind: ProfileKind) -> Option<ThreatLevel> {
        let row = &self.confusion[kind.index()];
        let best = (0..4).max_by(|&a, &b| row[a].cmp(&row[b]).then(b.cmp(&a)))?;
        (row[best] > 0).then_some(ThreatLevel::ALL[best])
    }

    pub fn collect(before: &World, after: &World) -> TickMetrics {
        let agents = after.agents();
        let r_s = after.config().gso.r_s;
        let mut risk_sum = [0.0; 4];
        let mut risk_n = [0u32; 4];
        let mut m = TickMetrics {
            tick: before.tick().0,
            mean_risk: [None; 4],
            belief_queries: 0,
            report_requests: 0,
            messages: 0,
            responses: 0,
            mean_domain_size: 0.0,
            max_domain_size: 0,
            mean_range: 0.0,
            mean_alertness_honest: None,
            mean_kappa: None,
            queries_near_noxious: None,
            queries_clear: None,
            confusion: [[0; 4]; 4],
        };
        let (mut domain_sum, mut range_sum) = (0usize, 0.0);
        let (mut alert_sum, mut honest) = (0usize, 0u32);
        let (mut kappa_sum, mut kappa_n) = (0.0, 0u32);
        let (mut near_sum, mut near_n, mut clear_sum, mut clear_n) = (0u64, 0u32, 0u64, 0u32);

        for a in agents {
            let k = a.kind().index();
            risk_sum[k] += a.risk;
            risk_n[k] += 1;
            let act = a.activity;
            m.belief_queries += u64::from(act.belief_queries);
            m.report_requests += u64::from(act.report_requests);
            m.responses += u64::from(act.belief_responses + act.report_responses);
            domain_sum += a.domain.len();
            m.max_domain_size = m.max_domain_size.max(a.domain.len() as u64);
            range_sum += a.gso.r_d;
            if let Some(kappa) = act.kappa {
                kappa_sum += kappa;
                kappa_n += 1;
            }
            if a.kind() != ProfileKind::Honest {
                continue;
            }
            honest += 1;
            alert_sum += a.alertness.index();
            for (&subject, &label) in &a.labels {
                m.confusion[after.agent(subject).kind().index()][label.index()] += 1;
            }
            let nearby = agents
                .iter()
                .filter(|b| b.id != a.id && distance(a.position, b.position) < r_s);
            let (mut noxious, mut adversary) = (false, false);
            for b in nearby {
                noxious |= b.kind() == ProfileKind::ResponsiveLiar;
                adversary |= b.kind().is_adversarial();
            }
            if noxious {
                near_sum += u64::from(act.belief_queries);
                near_n += 1;
            }
            if !adversary {
                clear_sum += u64::from(act.belief_queries);
                clear_n += 1;
            }
        }

        let n = agents.len().max(1) as f64;
        for k in 0..4 {
            if risk_n[k] > 0 {
                m.mean_risk[k] = Some(risk_sum[k] / f64::from(risk_n[k]));
            }
        }
        m.messages = m.belief_queries + m.report_requests;
        m.mean_domain_size = domain_sum as f64 / n;
        m.mean_range = range_sum / n;
        m.mean_alertness_honest = (honest > 0).then(|| alert_sum as f64 / f64::from(honest));
        m.mean_kappa = (kappa_n > 0).then(|| kappa_sum / f64::from(kappa_n));
        m.queries_near_noxious = (near_n > 0).then(|| near_sum as f64 / f64::from(near_n));
        m.queries_clear = (clear_n > 0).then(|| clear_sum as f64 / f64::from(clear_n));
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindDetection {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub modal_label: Option<ThreatLevel>,
    pub counts: DetectionCounts,
}

/// Final-state summary of one run, derived entirely from its tick series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub ticks: u64,
    /// False for an empty run, in which case every statistic is absent.
    pub applicable: bool,
    /// Detection of each adversarial kind at the last tick.
    pub detection: BTreeMap<ProfileKind, KindDetection>,
    /// Last-tick confusion matrix, true kind -> label -> count.
    pub confusion: BTreeMap<ProfileKind, BTreeMap<ThreatLevel, u64>>,
    pub mean_messages_per_tick: Option<f64>,
    /// First tick from which every present adversarial kind keeps its
    /// expected modal label until the end of the run.
    pub ticks_to_stable: Option<u64>,
    pub queries_near_noxious: Option<f64>,
    pub queries_clear: Option<f64>,
}

impl RunSummary {
    pub fn from_series(seed: u64, rows: &[TickMetrics]) -> RunSummary {
        let Some(last) = rows.last() else {
            return RunSummary {
                seed,
                ticks: 0,
                applicable: false,
                detection: BTreeMap::new(),
                confusion: BTreeMap::new(),
                mean_messages_per_tick: None,
                ticks_to_stable: None,
                queries_near_noxious: None,
                queries_clear: None,
            };
        };

        let detection = ProfileKind::ADVERSARIAL
            .iter()
            .map(|&kind| {
                let counts = last.detection(kind);
                (
                    kind,
                    KindDetection {
                        precision: counts.precision(),
                        recall: counts.recall(),
                        modal_label: last.modal_label(kind),
                        counts,
                    },
                )
            })
            .collect();
        let confusion = ProfileKind::ALL
            .iter()
            .map(|&kind| {
                let row = ThreatLevel::ALL
                    .iter()
                    .map(|&l| (l, last.confusion[kind.index()][l.index()]))
                    .collect();
                (kind, row)
            })
            .collect();

        let stable = |row: &TickMetrics| {
            ProfileKind::ADVERSARIAL.iter().all(|&kind| {
                row.confusion[kind.index()].iter().sum::<u64>() == 0
                    || row.modal_label(kind) == Some(kind.expected_label())
            })
        };
        let ticks_to_stable = if stable(last) {
            let first_unstable_from_end = rows.iter().rposition(|r| !stable(r));
            Some(match first_unstable_from_end {
                Some(p) => rows[p + 1].tick,
                None => rows[0].tick,
            })
        } else {
            None
        };

        let tail = &rows[rows.len().saturating_sub(QUERY_RATE_WINDOW)..];
        let mean_of = |f: &dyn Fn(&TickMetrics) -> Option<f64>| {
            let vals: Vec<f64> = tail.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };

        RunSummary {
            seed,
            ticks: rows.len() as u64,
            applicable: true,
            detection,
            confusion,
            mean_messages_per_tick: Some(
                rows.iter().map(|r| r.messages as f64).sum::<f64>() / rows.len() as f64,
            ),
            ticks_to_stable,
            queries_near_noxious: mean_of(&|r| r.queries_near_noxious),
            queries_clear: mean_of(&|r| r.queries_clear),
        }
    }
}

/// Per-tick series plus the summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub seed: u64,
    pub series: Vec<TickMetrics>,
    pub summary: RunSummary,
}

/// Spawns the world described by `config`, runs it for `config.ticks` and
/// collects metrics after every tick.
pub fn run_experiment(config: &WorldConfig) -> Result<MetricsRecord> {
    run_experiment_with(config, |_| {})
}

/// Like [`run_experiment`], calling `inspect` on the world after every tick.
pub fn run_experiment_with(
    config: &WorldConfig,
    mut inspect: impl FnMut(&World),
) -> Result<MetricsRecord> {
    let mut world = World::spawn(config.clone())?;
    let mut series = Vec::with_capacity(config.ticks as usize);
    for _ in 0..config.ticks {
        let next = world.step();
        series.push(TickMetrics::collect(&world, &next));
        world = next;
        inspect(&world);
    }
    let summary = RunSummary::from_series(config.seed, &series);
    log::debug!("seed {} finished {} ticks", config.seed, series.len());
    Ok(MetricsRecord {
        seed: config.seed,
        series,
        summary,
    })
}
