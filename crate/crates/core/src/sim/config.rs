use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::anomaly::{AlertnessBands, RiskWeights, Thresholds};
use crate::error::{Error, Result};
use crate::gso::GsoParams;
use crate::model::ThreatLevel;

/// Behavioral archetype an agent is spawned with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Honest,
    SilentTruthful,
    SilentLiar,
    ResponsiveLiar,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 4] = [
        ProfileKind::Honest,
        ProfileKind::SilentTruthful,
        ProfileKind::SilentLiar,
        ProfileKind::ResponsiveLiar,
    ];

    pub const ADVERSARIAL: [ProfileKind; 3] = [
        ProfileKind::SilentTruthful,
        ProfileKind::SilentLiar,
        ProfileKind::ResponsiveLiar,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Honest => "honest",
            ProfileKind::SilentTruthful => "silent_truthful",
            ProfileKind::SilentLiar => "silent_liar",
            ProfileKind::ResponsiveLiar => "responsive_liar",
        }
    }

    /// The label a correct detector assigns to this archetype.
    pub fn expected_label(self) -> ThreatLevel {
        match self {
            ProfileKind::Honest => ThreatLevel::Cooperative,
            ProfileKind::SilentTruthful => ThreatLevel::Suspicious,
            ProfileKind::SilentLiar => ThreatLevel::Malicious,
            ProfileKind::ResponsiveLiar => ThreatLevel::Noxious,
        }
    }

    pub fn is_adversarial(self) -> bool {
        self != ProfileKind::Honest
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryProfile {
    pub kind: ProfileKind,
    /// Probability of answering any single request.
    pub respond_prob: f64,
    /// Probability that an answer is a lie.
    pub lie_prob: f64,
}

impl AdversaryProfile {
    pub fn default_for(kind: ProfileKind) -> Self {
        let (respond_prob, lie_prob) = match kind {
            ProfileKind::Honest => (0.95, 0.0),
            ProfileKind::SilentTruthful => (0.1, 0.0),
            ProfileKind::SilentLiar => (0.1, 0.9),
            ProfileKind::ResponsiveLiar => (0.95, 0.9),
        };
        Self {
            kind,
            respond_prob,
            lie_prob,
        }
    }
}

/// Response and lie probabilities for each archetype.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileTable {
    pub honest: ProfileProbs,
    pub silent_truthful: ProfileProbs,
    pub silent_liar: ProfileProbs,
    pub responsive_liar: ProfileProbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileProbs {
    pub respond_prob: f64,
    pub lie_prob: f64,
}

impl Default for ProfileTable {
    fn default() -> Self {
        let probs = |k| {
            let p = AdversaryProfile::default_for(k);
            ProfileProbs {
                respond_prob: p.respond_prob,
                lie_prob: p.lie_prob,
            }
        };
        Self {
            honest: probs(ProfileKind::Honest),
            silent_truthful: probs(ProfileKind::SilentTruthful),
            silent_liar: probs(ProfileKind::SilentLiar),
            responsive_liar: probs(ProfileKind::ResponsiveLiar),
        }
    }
}

impl ProfileTable {
    pub fn profile(&self, kind: ProfileKind) -> AdversaryProfile {
        let p = match kind {
            ProfileKind::Honest => self.honest,
            ProfileKind::SilentTruthful => self.silent_truthful,
            ProfileKind::SilentLiar => self.silent_liar,
            ProfileKind::ResponsiveLiar => self.responsive_liar,
        };
        AdversaryProfile {
            kind,
            respond_prob: p.respond_prob,
            lie_prob: p.lie_prob,
        }
    }

    fn validate(&self) -> Result<()> {
        for kind in ProfileKind::ALL {
            let p = self.profile(kind);
            for (what, v) in [("respond_prob", p.respond_prob), ("lie_prob", p.lie_prob)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid_config(
                        format!("profiles.{kind}.{what}"),
                        v,
                        "probabilities must be in [0,1]",
                    ));
                }
            }
            let truthful = matches!(kind, ProfileKind::Honest | ProfileKind::SilentTruthful);
            if truthful && p.lie_prob != 0.0 {
                return Err(Error::invalid_config(
                    format!("profiles.{kind}.lie_prob"),
                    p.lie_prob,
                    "truthful profiles must have lie_prob 0",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AwarenessParams {
    /// Weight of the newest response in the truthfulness average.
    pub alpha: f64,
    /// Responsiveness window, in ticks.
    pub window: u64,
    /// Own observations older than this many ticks are not used to score
    /// peer answers.
    pub staleness: u64,
}

impl Default for AwarenessParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            window: 20,
            staleness: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskParams {
    pub weights: RiskWeights,
    pub bands: AlertnessBands,
    /// The model generator runs on ticks divisible by this period.
    pub merge_period: u64,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self {
            weights: RiskWeights::default(),
            bands: AlertnessBands::default(),
            merge_period: 1,
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub n_agents: u32,
    /// Side length of the square world.
    pub world_size: f64,
    /// Grid cells per axis.
    pub grid_cells: u32,
    /// Size of the observation alphabet.
    pub categories: u8,
    pub profile_mix: BTreeMap<ProfileKind, f64>,
    pub profiles: ProfileTable,
    pub gso: GsoParams,
    pub thresholds: Thresholds,
    pub awareness: AwarenessParams,
    pub risk: RiskParams,
    pub seed: u64,
    pub ticks: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_agents: 50,
            world_size: 100.0,
            grid_cells: 10,
            categories: 4,
            profile_mix: [
                (ProfileKind::Honest, 0.7),
                (ProfileKind::SilentTruthful, 0.1),
                (ProfileKind::SilentLiar, 0.1),
                (ProfileKind::ResponsiveLiar, 0.1),
            ]
            .into(),
            profiles: ProfileTable::default(),
            gso: GsoParams::default(),
            thresholds: Thresholds::default(),
            awareness: AwarenessParams::default(),
            risk: RiskParams::default(),
            seed: 0,
            ticks: 300,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::invalid_config(
                "n_agents",
                self.n_agents,
                "n_agents must be >= 2",
            ));
        }
        self.validate_except_population()
    }

    /// Everything except the population-size bound, for hand-built worlds.
    pub(crate) fn validate_except_population(&self) -> Result<()> {
        if !(self.world_size > 0.0 && self.world_size.is_finite()) {
            return Err(Error::invalid_config(
                "world_size",
                self.world_size,
                "world_size must be > 0",
            ));
        }
        if self.grid_cells == 0 {
            return Err(Error::invalid_config(
                "grid_cells",
                0,
                "grid_cells must be >= 1",
            ));
        }
        if self.categories < 2 {
            return Err(Error::invalid_config(
                "categories",
                self.categories,
                "categories must be >= 2",
            ));
        }
        let sum: f64 = self.profile_mix.values().sum();
        if self.profile_mix.values().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_config(
                "profile_mix",
                format!("{sum}"),
                "profile_mix fractions must be in [0,1] and sum to 1",
            ));
        }
        self.profiles.validate()?;
        self.gso.validate()?;
        self.thresholds.validate()?;
        let a = &self.awareness;
        if !(a.alpha > 0.0 && a.alpha <= 1.0) {
            return Err(Error::invalid_config(
                "awareness.alpha",
                a.alpha,
                "alpha must be in (0,1]",
            ));
        }
        if a.window == 0 {
            return Err(Error::invalid_config(
                "awareness.window",
                0,
                "window must be >= 1",
            ));
        }
        self.risk.weights.validate()?;
        self.risk.bands.validate()?;
        if self.risk.merge_period == 0 {
            return Err(Error::invalid_config(
                "risk.merge_period",
                0,
                "merge_period must be >= 1",
            ));
        }
        Ok(())
    }

    /// Agents per archetype, by largest-remainder rounding of the mix.
    pub fn profile_counts(&self) -> BTreeMap<ProfileKind, u32> {
        largest_remainder(&self.profile_mix, self.n_agents)
    }
}

/// Splits `total` according to `fractions`: every kind gets the floor of its
/// share, and the leftover units go to the largest fractional parts (ties to
/// the earlier kind).
pub fn largest_remainder(
    fractions: &BTreeMap<ProfileKind, f64>,
    total: u32,
) -> BTreeMap<ProfileKind, u32> {
    let mut counts = BTreeMap::new();
    let mut remainders = Vec::new();
    let mut assigned = 0u32;
    for (&kind, &f) in fractions {
        let exact = f * f64::from(total);
        let floor = exact.floor();
        counts.insert(kind, floor as u32);
        assigned += floor as u32;
        remainders.push((kind, exact - floor));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (kind, _) in remainders
        .iter()
        .cycle()
        .take(total.saturating_sub(assigned) as usize)
    {
        *counts.get_mut(kind).expect("present") += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        WorldConfig::default().validate().unwrap();
    }

    #[test]
    fn mix_must_sum_to_one() {
        let mut c = WorldConfig::default();
        c.profile_mix.insert(ProfileKind::Honest, 0.6);
        let err = c.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "profile_mix"));
    }

    #[test]
    fn rejects_small_population_and_bad_gso() {
        let c = WorldConfig {
            n_agents: 1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = WorldConfig::default();
        c.gso.rho = 1.2;
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("rho must be in (0,1)"));
    }

    #[test]
    fn honest_must_not_lie() {
        let mut c = WorldConfig::default();
        c.profiles.honest.lie_prob = 0.1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rounding_examples() {
        let mix: BTreeMap<_, _> = [(ProfileKind::Honest, 1.0)].into();
        assert_eq!(largest_remainder(&mix, 10)[&ProfileKind::Honest], 10);

        let mix: BTreeMap<_, _> = [
            (ProfileKind::Honest, 0.8),
            (ProfileKind::ResponsiveLiar, 0.2),
        ]
        .into();
        let counts = largest_remainder(&mix, 50);
        assert_eq!(counts[&ProfileKind::Honest], 40);
        assert_eq!(counts[&ProfileKind::ResponsiveLiar], 10);

        // 7 * (1/3) each: floors 2,2,2 and the leftover unit goes to the first kind
        let third = 1.0 / 3.0;
        let mix: BTreeMap<_, _> = [
            (ProfileKind::Honest, third),
            (ProfileKind::SilentLiar, third),
            (ProfileKind::ResponsiveLiar, third),
        ]
        .into();
        let counts = largest_remainder(&mix, 7);
        assert_eq!(counts.values().sum::<u32>(), 7);
        assert_eq!(counts[&ProfileKind::Honest], 3);
    }

    #[test]
    fn expected_labels() {
        assert_eq!(
            ProfileKind::SilentTruthful.expected_label(),
            ThreatLevel::Suspicious
        );
        assert_eq!(
            ProfileKind::SilentLiar.expected_label(),
            ThreatLevel::Malicious
        );
        assert_eq!(
            ProfileKind::ResponsiveLiar.expected_label(),
            ThreatLevel::Noxious
        );
    }
}
