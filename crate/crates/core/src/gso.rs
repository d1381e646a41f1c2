//! Glowworm swarm optimization applied to communication-domain selection.
//!
//! Each agent carries a luciferin level driven by how trustworthy its peers
//! find it, and a decision range `r_d` bounded by the sensor range `r_s`.
//! Its communication domain is the set of brighter peers within `r_d`,
//! trimmed to at most `s` members by dropping the least likely inclusion
//! first. The range then adapts so the neighborhood size drifts toward the
//! target `n_t`.
//!
//! Agents do not move; the inclusion probability is only used to rank
//! candidates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{distance, AgentId, Position};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsoParams {
    /// Luciferin decay, in (0, 1).
    pub rho: f64,
    /// Fitness gain, > 0.
    pub gamma: f64,
    /// Range gain, > 0.
    pub beta: f64,
    /// Target neighborhood size.
    pub n_t: u32,
    /// Sensor range, the upper bound of every decision range.
    pub r_s: f64,
    /// Maximum communication-domain size.
    pub s: usize,
    /// Initial luciferin.
    pub g0: f64,
}

impl Default for GsoParams {
    fn default() -> Self {
        Self {
            rho: 0.4,
            gamma: 0.6,
            beta: 0.08,
            n_t: 5,
            r_s: 20.0,
            s: 6,
            g0: 5.0,
        }
    }
}

impl GsoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, value: f64, rule: &str| {
            Err(Error::invalid_config(format!("gso.{field}"), value, rule))
        };
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho", self.rho, "rho must be in (0,1)");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", self.gamma, "gamma must be > 0");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta", self.beta, "beta must be > 0");
        }
        if self.n_t == 0 {
            return bad("n_t", 0.0, "n_t must be >= 1");
        }
        if !(self.r_s > 0.0 && self.r_s.is_finite()) {
            return bad("r_s", self.r_s, "r_s must be > 0");
        }
        if self.s == 0 {
            return bad("s", 0.0, "s must be >= 1");
        }
        if !(self.g0 >= 0.0 && self.g0.is_finite()) {
            return bad("g0", self.g0, "g0 must be >= 0");
        }
        Ok(())
    }

    /// Upper bound on luciferin for fitness values in `[0, 1]`.
    pub fn luciferin_bound(&self) -> f64 {
        self.g0.max(self.gamma / self.rho)
    }
}

/// Per-agent GSO state: luciferin `g` and decision range `r_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuciferinState {
    pub g: f64,
    pub r_d: f64,
}

impl LuciferinState {
    pub fn initial(params: &GsoParams) -> Self {
        Self {
            g: params.g0,
            r_d: params.r_s / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunicationDomain {
    members: Vec<AgentId>,
    capacity: usize,
}

impl CommunicationDomain {
    pub fn empty(capacity: usize) -> Self {
        Self {
            members: Vec::new(),
            capacity,
        }
    }

    /// Members in ascending id order.
    pub fn members(&self) -> &[AgentId] {
        &self.members
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// What an agent can see of a peer when picking its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerView {
    pub id: AgentId,
    pub position: Position,
    pub luciferin: f64,
}

/// A neighborhood member with its luciferin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: AgentId,
    pub luciferin: f64,
}

/// `(1 - rho) * prev + gamma * fitness`.
pub fn update_luciferin(prev: f64, fitness: f64, params: &GsoParams) -> f64 {
    let fitness = fitness.clamp(0.0, 1.0);
    ((1.0 - params.rho) * prev.max(0.0) + params.gamma * fitness).max(0.0)
}

/// Peers strictly closer than `r_d` and strictly brighter than `owner`,
/// in ascending id order.
pub fn neighborhood(owner: &PeerView, r_d: f64, swarm: &[PeerView]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = swarm
        .iter()
        .filter(|p| p.id != owner.id)
        .filter(|p| distance(owner.position, p.position) < r_d && owner.luciferin < p.luciferin)
        .map(|p| Candidate {
            id: p.id,
            luciferin: p.luciferin,
        })
        .collect();
    out.sort_by_key(|c| c.id);
    out
}

/// Probability of `j` joining the owner's domain: its luciferin excess over
/// the owner, normalized by the total excess of all candidates.
pub fn inclusion_probability(owner_g: f64, j: AgentId, candidates: &[Candidate]) -> Result<f64> {
    let probs = inclusion_probabilities(owner_g, candidates)?;
    probs
        .into_iter()
        .find(|(id, _)| *id == j)
        .map(|(_, p)| p)
        .ok_or(Error::NotACandidate(j))
}

/// Inclusion probabilities for every candidate, in candidate order.
pub fn inclusion_probabilities(
    owner_g: f64,
    candidates: &[Candidate],
) -> Result<Vec<(AgentId, f64)>> {
    if candidates.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    if !owner_g.is_finite() || candidates.iter().any(|c| !c.luciferin.is_finite()) {
        return Err(Error::NonFiniteLuciferin);
    }
    let total: f64 = candidates.iter().map(|c| c.luciferin - owner_g).sum();
    if total <= 0.0 {
        return Err(Error::NonFiniteLuciferin);
    }
    Ok(candidates
        .iter()
        .map(|c| (c.id, (c.luciferin - owner_g) / total))
        .collect())
}

/// `min(r_s, max(0, r_d + beta * (n_t - neighbor_count)))`.
pub fn update_domain_range(r_d: f64, neighbor_count: usize, params: &GsoParams) -> f64 {
    let delta = params.beta * (f64::from(params.n_t) - neighbor_count as f64);
    (r_d + delta).max(0.0).min(params.r_s)
}

/// Result of one domain selection round.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainUpdate {
    pub domain: CommunicationDomain,
    pub state: LuciferinState,
    /// Size of the neighborhood before trimming.
    pub neighborhood_size: usize,
}

/// One full round for agent `owner`: refresh its luciferin from `fitness`,
/// gather the brighter peers inside its current range, drop the least likely
/// members until at most `s` remain (ties drop the lowest id first), then
/// adapt the range using the untrimmed neighborhood size.
///
/// `swarm` must hold every peer's luciferin for the current tick; the
/// owner's own entry, if present, is ignored.
pub fn select_communication_domain(
    owner: AgentId,
    position: Position,
    prev: LuciferinState,
    fitness: f64,
    swarm: &[PeerView],
    params: &GsoParams,
) -> DomainUpdate {
    let g = update_luciferin(prev.g, fitness, params);
    let me = PeerView {
        id: owner,
        position,
        luciferin: g,
    };
    let candidates = neighborhood(&me, prev.r_d, swarm);
    let neighborhood_size = candidates.len();

    let mut members: Vec<(AgentId, f64)> =
        inclusion_probabilities(g, &candidates).unwrap_or_default();
    while members.len() > params.s {
        let weakest = members
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .expect("non-empty");
        members.remove(weakest);
    }

    let r_d = update_domain_range(prev.r_d, neighborhood_size, params);
    DomainUpdate {
        domain: CommunicationDomain {
            members: members.into_iter().map(|(id, _)| id).collect(),
            capacity: params.s,
        },
        state: LuciferinState { g, r_d },
        neighborhood_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> GsoParams {
        GsoParams::default()
    }

    fn peer(id: u32, x: f64, y: f64, g: f64) -> PeerView {
        PeerView {
            id: AgentId(id),
            position: Position::new(x, y),
            luciferin: g,
        }
    }

    #[test]
    fn luciferin_examples() {
        let p = params();
        assert_eq!(update_luciferin(0.0, 0.0, &p), 0.0);
        assert!((update_luciferin(5.0, 1.0, &p) - 3.6).abs() < 1e-12);
        let mut g = p.g0;
        for _ in 0..100 {
            g = update_luciferin(g, 1.0, &p);
        }
        // fixed point gamma / rho
        assert!((g - 1.5).abs() < 1e-12);
    }

    #[test]
    fn neighborhood_examples() {
        let me = peer(0, 0.0, 0.0, 1.0);
        let swarm = vec![me, peer(1, 1.0, 0.0, 2.0), peer(2, 0.0, 1.0, 3.0)];
        assert!(neighborhood(&me, 0.0, &swarm).is_empty());
        let dim = peer(0, 0.0, 0.0, 10.0);
        assert!(neighborhood(&dim, 5.0, &swarm).is_empty());
    }

    #[test]
    fn neighborhood_hand_placed_fixture() {
        // owner at origin with luciferin 2.0 and range 3.0
        let me = peer(0, 0.0, 0.0, 2.0);
        let swarm = vec![
            me,
            peer(1, 1.0, 1.0, 3.0),  // in range, brighter
            peer(2, 3.0, 0.0, 4.0),  // exactly at range: excluded
            peer(3, 0.5, 0.5, 2.0),  // equally bright: excluded
            peer(4, -2.0, 1.0, 2.5), // in range, brighter
        ];
        let ids: Vec<u32> = neighborhood(&me, 3.0, &swarm)
            .iter()
            .map(|c| c.id.0)
            .collect();
        assert_eq!(ids, vec![1, 4]);
    }

    #[test]
    fn inclusion_examples() {
        let single = [Candidate {
            id: AgentId(4),
            luciferin: 7.0,
        }];
        assert_eq!(inclusion_probability(1.0, AgentId(4), &single), Ok(1.0));
        let two = [
            Candidate {
                id: AgentId(1),
                luciferin: 2.0,
            },
            Candidate {
                id: AgentId(2),
                luciferin: 3.0,
            },
        ];
        assert!((inclusion_probability(1.0, AgentId(1), &two).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((inclusion_probability(1.0, AgentId(2), &two).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            inclusion_probability(1.0, AgentId(1), &[]),
            Err(Error::EmptyNeighborhood)
        );
        assert_eq!(
            inclusion_probability(1.0, AgentId(9), &two),
            Err(Error::NotACandidate(AgentId(9)))
        );
        let nan = [Candidate {
            id: AgentId(1),
            luciferin: f64::NAN,
        }];
        assert_eq!(
            inclusion_probabilities(1.0, &nan),
            Err(Error::NonFiniteLuciferin)
        );
    }

    #[test]
    fn range_examples() {
        let p = GsoParams {
            r_s: 3.0,
            ..params()
        };
        assert_eq!(update_domain_range(3.0, 0, &p), 3.0);
        assert_eq!(update_domain_range(1.0, 5, &p), 1.0);
        assert!((update_domain_range(1.0, 2, &p) - 1.24).abs() < 1e-12);
        assert_eq!(update_domain_range(0.0, 50, &p), 0.0);
    }

    #[test]
    fn isolated_agent_grows_range() {
        let p = params();
        let prev = LuciferinState { g: 5.0, r_d: 4.0 };
        let swarm = vec![peer(0, 0.0, 0.0, 5.0), peer(1, 90.0, 90.0, 9.0)];
        let up =
            select_communication_domain(AgentId(0), Position::new(0.0, 0.0), prev, 0.5, &swarm, &p);
        assert!(up.domain.is_empty());
        assert!((up.state.r_d - (4.0 + p.beta * 5.0)).abs() < 1e-12);
        assert_eq!(up.neighborhood_size, 0);
    }

    #[test]
    fn trimming_keeps_the_most_likely() {
        let p = GsoParams { s: 5, ..params() };
        let prev = LuciferinState { g: 1.0, r_d: 10.0 };
        // owner's refreshed luciferin: 0.6 * 1.0 + 0.6 * 0 = 0.6
        let lum = [2.0, 5.0, 1.5, 4.0, 3.0, 7.0, 6.0];
        let mut swarm = vec![peer(0, 0.0, 0.0, 1.0)];
        for (k, g) in lum.iter().enumerate() {
            swarm.push(peer(k as u32 + 1, 1.0, k as f64 * 0.5, *g));
        }
        let up =
            select_communication_domain(AgentId(0), Position::new(0.0, 0.0), prev, 0.0, &swarm, &p);
        let kept: Vec<u32> = up.domain.members().iter().map(|a| a.0).collect();
        // the two dimmest (ids 1 and 3) are dropped
        assert_eq!(kept, vec![2, 4, 5, 6, 7]);
        assert_eq!(up.neighborhood_size, 7);
        // range uses the untrimmed count: 10 + 0.08 * (5 - 7)
        assert!((up.state.r_d - 9.84).abs() < 1e-12);
    }

    #[test]
    fn trimming_ties_drop_lowest_id() {
        let p = GsoParams { s: 2, ..params() };
        let prev = LuciferinState { g: 0.0, r_d: 10.0 };
        let swarm = vec![
            peer(5, 1.0, 0.0, 2.0),
            peer(3, 0.0, 1.0, 2.0),
            peer(9, 1.0, 1.0, 2.0),
        ];
        let up =
            select_communication_domain(AgentId(0), Position::new(0.0, 0.0), prev, 0.0, &swarm, &p);
        let kept: Vec<u32> = up.domain.members().iter().map(|a| a.0).collect();
        assert_eq!(kept, vec![5, 9]);
    }

    #[test]
    fn validation_messages() {
        let err = GsoParams {
            rho: 1.2,
            ..params()
        }
        .validate()
        .unwrap_err();
        assert!(err.to_string().contains("rho must be in (0,1)"));
        assert!(GsoParams { s: 0, ..params() }.validate().is_err());
        assert!(GsoParams {
            r_s: 0.0,
            ..params()
        }
        .validate()
        .is_err());
        assert!(params().validate().is_ok());
    }

    fn arb_swarm(max: usize) -> impl Strategy<Value = Vec<PeerView>> {
        proptest::collection::vec((0.0..50.0f64, 0.0..50.0f64, 0.0..3.0f64), 1..max).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (x, y, g))| peer(i as u32, x, y, g))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn luciferin_stays_bounded(fitness in proptest::collection::vec(0.0..=1.0f64, 0..200)) {
            let p = params();
            let mut g = p.g0;
            for f in fitness {
                g = update_luciferin(g, f, &p);
                prop_assert!(g >= 0.0 && g <= p.luciferin_bound() + 1e-12);
            }
        }

        #[test]
        fn range_stays_clamped(counts in proptest::collection::vec(0usize..30, 0..200)) {
            let p = params();
            let mut r = p.r_s / 2.0;
            for c in counts {
                r = update_domain_range(r, c, &p);
                prop_assert!((0.0..=p.r_s).contains(&r));
            }
        }

        #[test]
        fn probabilities_normalize(owner in 0.0..2.0f64, lifts in proptest::collection::vec(1e-6..5.0f64, 1..40)) {
            let candidates: Vec<Candidate> = lifts
                .iter()
                .enumerate()
                .map(|(i, l)| Candidate { id: AgentId(i as u32), luciferin: owner + l })
                .collect();
            let probs = inclusion_probabilities(owner, &candidates).unwrap();
            let sum: f64 = probs.iter().map(|(_, p)| p).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(probs.iter().all(|(_, p)| *p > 0.0 && *p <= 1.0));
        }

        #[test]
        fn domain_respects_capacity_and_excludes_owner(swarm in arb_swarm(50), s in 1usize..8, fitness in 0.0..=1.0f64, r_d in 0.0..40.0f64) {
            let p = GsoParams { s, r_s: 40.0, ..params() };
            let owner = swarm[0];
            let prev = LuciferinState { g: owner.luciferin, r_d };
            let up = select_communication_domain(owner.id, owner.position, prev, fitness, &swarm, &p);
            prop_assert!(up.domain.len() <= s);
            prop_assert!(!up.domain.contains(owner.id));
            prop_assert!((0.0..=p.r_s).contains(&up.state.r_d));
        }
    }
}
