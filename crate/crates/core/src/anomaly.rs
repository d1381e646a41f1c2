//! Anomaly detection: the model generator merges behavior reports from the
//! communication domain into one model per observed peer, and the detector
//! turns those models into threat labels, a scalar risk and an alertness
//! level.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::awareness::{BehaviorRecord, Reputation};
use crate::error::{Error, Result};
use crate::model::{distance, AgentId, AlertnessLevel, Position, ThreatLevel, Tick};

/// Weight of the merging agent's own observations.
pub const OWN_OBSERVATION_WEIGHT: f64 = 1.0;

/// What `reporter` has observed about `subject`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorReport {
    pub reporter: AgentId,
    pub subject: AgentId,
    pub responsiveness: f64,
    pub truthfulness: f64,
    pub reported_at: Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergedBehavior {
    pub subject: AgentId,
    pub responsiveness: f64,
    pub truthfulness: f64,
    pub total_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub respond_threshold: f64,
    pub truth_threshold: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            respond_threshold: 0.5,
            truth_threshold: 0.5,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("respond_threshold", self.respond_threshold),
            ("truth_threshold", self.truth_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid_config(
                    format!("thresholds.{name}"),
                    v,
                    format!("{name} must be in (0,1)"),
                ));
            }
        }
        Ok(())
    }
}

/// Severity weight of each label in the risk score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskWeights {
    pub cooperative: f64,
    pub suspicious: f64,
    pub malicious: f64,
    pub noxious: f64,
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self {
            cooperative: 0.0,
            suspicious: 0.3,
            malicious: 0.7,
            noxious: 1.0,
        }
    }
}

impl RiskWeights {
    pub fn weight(&self, level: ThreatLevel) -> f64 {
        match level {
            ThreatLevel::Cooperative => self.cooperative,
            ThreatLevel::Suspicious => self.suspicious,
            ThreatLevel::Malicious => self.malicious,
            ThreatLevel::Noxious => self.noxious,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for level in ThreatLevel::ALL {
            let w = self.weight(level);
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid_config(
                    format!("risk.weights.{}", level.name()),
                    w,
                    "weights must be in [0,1]",
                ));
            }
        }
        Ok(())
    }
}

/// Cut points between alertness levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlertnessBands {
    pub low_cut: f64,
    pub high_cut: f64,
}

impl Default for AlertnessBands {
    fn default() -> Self {
        Self {
            low_cut: 0.25,
            high_cut: 0.6,
        }
    }
}

impl AlertnessBands {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.low_cut && self.low_cut < self.high_cut && self.high_cut <= 1.0) {
            return Err(Error::invalid_config(
                "risk.bands",
                format!("({}, {})", self.low_cut, self.high_cut),
                "bands must satisfy 0 <= low_cut < high_cut <= 1",
            ));
        }
        Ok(())
    }
}

/// Output of the detector for one agent and tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub viewpoint: AgentId,
    pub risk: f64,
    pub alertness: AlertnessLevel,
    pub labels: BTreeMap<AgentId, ThreatLevel>,
}

/// Reputation-weighted mean of the reports per subject, with the caller's
/// own record (if any) entering at weight 1. Subjects whose total weight is
/// zero are left out. Reports a reporter files about itself are ignored.
pub fn merge_behavior_data(
    reports: &[BehaviorReport],
    reputations: &BTreeMap<AgentId, Reputation>,
    own: &BTreeMap<AgentId, BehaviorRecord>,
) -> Result<BTreeMap<AgentId, MergedBehavior>> {
    // subject -> (weighted responsiveness, weighted truthfulness, weight)
    let mut sums: BTreeMap<AgentId, (f64, f64, f64)> = BTreeMap::new();
    for (&subject, record) in own {
        let acc = sums.entry(subject).or_default();
        acc.0 += OWN_OBSERVATION_WEIGHT * record.responsiveness;
        acc.1 += OWN_OBSERVATION_WEIGHT * record.truthfulness;
        acc.2 += OWN_OBSERVATION_WEIGHT;
    }
    for report in reports {
        let weight = reputations
            .get(&report.reporter)
            .ok_or(Error::UnknownReporter(report.reporter))?
            .value();
        if report.reporter == report.subject {
            continue;
        }
        let acc = sums.entry(report.subject).or_default();
        acc.0 += weight * report.responsiveness.clamp(0.0, 1.0);
        acc.1 += weight * report.truthfulness.clamp(0.0, 1.0);
        acc.2 += weight;
    }
    Ok(sums
        .into_iter()
        .filter(|(_, (_, _, w))| *w > 0.0)
        .map(|(subject, (r, t, w))| {
            (
                subject,
                MergedBehavior {
                    subject,
                    responsiveness: (r / w).clamp(0.0, 1.0),
                    truthfulness: (t / w).clamp(0.0, 1.0),
                    total_weight: w,
                },
            )
        })
        .collect())
}

/// Four-way split on responsiveness and truthfulness. The comparisons are
/// strict, so a responsive agent sitting exactly on the truth threshold is
/// Noxious, and an unresponsive one there is Suspicious.
pub fn classify_threat(merged: &MergedBehavior, th: &Thresholds) -> ThreatLevel {
    if merged.responsiveness > th.respond_threshold {
        if merged.truthfulness > th.truth_threshold {
            ThreatLevel::Cooperative
        } else {
            ThreatLevel::Noxious
        }
    } else if merged.truthfulness < th.truth_threshold {
        ThreatLevel::Malicious
    } else {
        ThreatLevel::Suspicious
    }
}

/// Proximity-weighted mean severity of the labeled peers. A peer at distance
/// `d` counts with `max(0, 1 - d / r_s)`; peers without a known position are
/// skipped. Returns 0 when there is nothing within range.
pub fn assess_risk(
    labels: &BTreeMap<AgentId, ThreatLevel>,
    positions: &BTreeMap<AgentId, Position>,
    own: Position,
    r_s: f64,
    weights: &RiskWeights,
) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (id, &level) in labels {
        let Some(&pos) = positions.get(id) else {
            continue;
        };
        let prox = (1.0 - distance(own, pos) / r_s).max(0.0);
        num += weights.weight(level) * prox;
        den += prox;
    }
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn update_alertness(risk: f64, bands: &AlertnessBands) -> AlertnessLevel {
    if risk < bands.low_cut {
        AlertnessLevel::Low
    } else if risk < bands.high_cut {
        AlertnessLevel::Elevated
    } else {
        AlertnessLevel::High
    }
}
