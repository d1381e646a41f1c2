use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{AdversaryProfile, ProfileKind, WorldConfig};
use super::rng::{Phase, RngStreams};
use crate::anomaly::{
    assess_risk, classify_threat, merge_behavior_data, update_alertness, BehaviorReport,
};
use crate::awareness::{
    fleiss_kappa_or_unanimous, score_response, update_reputation, update_responsiveness,
    BehaviorRecord, Interaction, InteractionLog, Reputation, TruthEwma,
};
use crate::error::{Error, Result};
use crate::gso::{
    select_communication_domain, update_luciferin, CommunicationDomain, LuciferinState, PeerView,
};
use crate::model::{
    distance, AgentId, AlertnessLevel, Belief, Category, CellId, Position, ThreatLevel, Tick,
};

/// What an agent knows about one peer in sensor range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerHistory {
    /// Interactions still inside the responsiveness window.
    log: InteractionLog,
    truth: TruthEwma,
    samples: u64,
    record: BehaviorRecord,
}

impl PeerHistory {
    fn new(alpha: f64) -> Self {
        Self {
            log: InteractionLog::new(),
            truth: TruthEwma::new(alpha),
            samples: 0,
            record: BehaviorRecord::default(),
        }
    }

    fn record_interaction(&mut self, entry: Interaction) {
        if self.log.push(entry) {
            self.samples += 1;
            if let Some(a) = entry.agreement {
                self.truth.observe(a);
            }
        }
    }

    fn refresh(&mut self, now: Tick, window: u64) {
        if let Some(cutoff) = now.0.checked_sub(window) {
            self.log.prune_through(Tick(cutoff));
        }
        self.record = BehaviorRecord::new(
            update_responsiveness(&self.log, now, window),
            self.truth.value(),
            self.samples,
        );
    }

    pub fn record(&self) -> &BehaviorRecord {
        &self.record
    }

    pub fn reputation(&self) -> Reputation {
        update_reputation(&self.record)
    }
}

/// A belief query waiting for its answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub to: AgentId,
    pub cell: CellId,
    pub sent_at: Tick,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Answer {
    from: AgentId,
    query: Query,
    belief: Option<Belief>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub position: Position,
    pub profile: AdversaryProfile,
    pub gso: LuciferinState,
    pub domain: CommunicationDomain,
    pub beliefs: BTreeMap<CellId, Belief>,
    pub peers: BTreeMap<AgentId, PeerHistory>,
    pub risk: f64,
    pub alertness: AlertnessLevel,
    pub labels: BTreeMap<AgentId, ThreatLevel>,
    pub outbox: Vec<Query>,
    /// Counters for the last completed tick.
    pub activity: Activity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub belief_queries: u32,
    pub report_requests: u32,
    pub belief_responses: u32,
    pub report_responses: u32,
    pub kappa: Option<f64>,
}

impl Agent {
    pub fn kind(&self) -> ProfileKind {
        self.profile.kind
    }
}

/// Complete simulation state. Derived geometry (who is in sensor range of
/// whom and which cells each agent perceives) is fixed at spawn since agents
/// do not move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    config: WorldConfig,
    tick: Tick,
    truth: Vec<Category>,
    agents: Vec<Agent>,
    neighbors: Vec<Vec<AgentId>>,
    perceived: Vec<Vec<CellId>>,
}

impl World {
    /// Spawns a swarm with random placement and profile assignment, both
    /// determined by the config seed.
    pub fn spawn(config: WorldConfig) -> Result<World> {
        config.validate()?;
        let streams = RngStreams::new(config.seed);

        let mut kinds = Vec::with_capacity(config.n_agents as usize);
        for (kind, count) in config.profile_counts() {
            kinds.extend(std::iter::repeat_n(kind, count as usize));
        }
        kinds.shuffle(&mut streams.stream(Phase::Assignment, 0, 0, 0));

        let mut rng = streams.stream(Phase::Placement, 0, 0, 0);
        let placement = kinds
            .into_iter()
            .map(|k| {
                let x = rng.gen_range(0.0..config.world_size);
                let y = rng.gen_range(0.0..config.world_size);
                (Position::new(x, y), k)
            })
            .collect();
        Self::build(config, placement)
    }

    /// Builds a world from hand-placed agents. Ids follow the order of
    /// `placement`. Any population size, including one, is accepted.
    pub fn from_placement(
        config: WorldConfig,
        placement: Vec<(Position, ProfileKind)>,
    ) -> Result<World> {
        config.validate_except_population()?;
        for (i, (p, _)) in placement.iter().enumerate() {
            let inside = |v: f64| v.is_finite() && (0.0..config.world_size).contains(&v);
            if !(inside(p.x) && inside(p.y)) {
                return Err(Error::invalid_config(
                    format!("placement[{i}]"),
                    format!("({}, {})", p.x, p.y),
                    "positions must lie in [0, world_size)",
                ));
            }
        }
        Self::build(config, placement)
    }

    fn build(config: WorldConfig, placement: Vec<(Position, ProfileKind)>) -> Result<World> {
        let streams = RngStreams::new(config.seed);
        let cells = (config.grid_cells * config.grid_cells) as usize;
        let mut rng = streams.stream(Phase::Grid, 0, 0, 0);
        let truth = (0..cells)
            .map(|_| Category(rng.gen_range(0..config.categories)))
            .collect();

        let r_s = config.gso.r_s;
        let positions: Vec<Position> = placement.iter().map(|(p, _)| *p).collect();
        let neighbors: Vec<Vec<AgentId>> = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                positions
                    .iter()
                    .enumerate()
                    .filter(|&(j, &q)| j != i && distance(p, q) < r_s)
                    .map(|(j, _)| AgentId(j as u32))
                    .collect()
            })
            .collect();
        let perceived = positions
            .iter()
            .map(|&p| perceivable_cells(&config, p))
            .collect();

        let agents = placement
            .iter()
            .enumerate()
            .map(|(i, &(position, kind))| Agent {
                id: AgentId(i as u32),
                position,
                profile: config.profiles.profile(kind),
                gso: LuciferinState::initial(&config.gso),
                domain: CommunicationDomain::empty(config.gso.s),
                beliefs: BTreeMap::new(),
                peers: neighbors[i]
                    .iter()
                    .map(|&j| (j, PeerHistory::new(config.awareness.alpha)))
                    .collect(),
                risk: 0.0,
                alertness: AlertnessLevel::Low,
                labels: BTreeMap::new(),
                outbox: Vec::new(),
                activity: Activity::default(),
            })
            .collect();

        Ok(World {
            config,
            tick: Tick(0),
            truth,
            agents,
            neighbors,
            perceived,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    /// Number of ticks already simulated.
    pub fn tick(&self) -> Tick {
        self.tick
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.index()]
    }

    /// Peers strictly inside the sensor range of `id`, ascending.
    pub fn sensor_neighbors(&self, id: AgentId) -> &[AgentId] {
        &self.neighbors[id.index()]
    }

    pub fn ground_truth(&self, cell: CellId) -> Category {
        self.truth[cell.0 as usize]
    }

    pub fn streams(&self) -> RngStreams {
        RngStreams::new(self.config.seed)
    }

    /// Advances one tick in place.
    pub fn advance(&mut self) {
        *self = self.step();
    }

    pub fn step(&self) -> World {
        let order: Vec<usize> = (0..self.agents.len()).collect();
        self.step_in_order(&order)
    }

    /// Runs one tick visiting agents in `order` within each phase. Every
    /// phase reads only the state committed by earlier phases, so the order
    /// does not affect the result.
    pub fn step_in_order(&self, order: &[usize]) -> World {
        assert_eq!(
            order.len(),
            self.agents.len(),
            "order must be a permutation"
        );
        let now = self.tick;
        let streams = self.streams();
        let mut next = self.clone();
        for a in &mut next.agents {
            a.activity = Activity::default();
        }

        // 1. perceive
        for &i in order {
            let agent = &mut next.agents[i];
            for &cell in &self.perceived[i] {
                agent.beliefs.insert(
                    cell,
                    Belief {
                        subject: cell,
                        value: self.truth[cell.0 as usize],
                        origin: agent.id,
                        observed_at: now,
                    },
                );
            }
        }

        // 2. answer the queries sent last tick
        let mut answers: Vec<Vec<Answer>> = vec![Vec::new(); next.agents.len()];
        for &i in order {
            answers[i] = next.agents[i]
                .outbox
                .iter()
                .map(|q| next.answer(&streams, now, AgentId(i as u32), q))
                .collect();
        }

        // 3. score answers and refresh behavior records
        let awareness = self.config.awareness;
        for &i in order {
            let agent = &mut next.agents[i];
            let mut kappa_rounds: BTreeMap<CellId, Vec<Category>> = BTreeMap::new();
            for ans in &answers[i] {
                let entry = match ans.belief {
                    None => Interaction::unanswered(ans.query.sent_at),
                    Some(belief) => {
                        agent.activity.belief_responses += 1;
                        kappa_rounds
                            .entry(belief.subject)
                            .or_default()
                            .push(belief.value);
                        let agreement = agent
                            .beliefs
                            .get(&ans.query.cell)
                            .filter(|own| own.observed_at.0 + awareness.staleness >= now.0)
                            .and_then(|own| score_response(own, &belief).ok());
                        Interaction::answered(ans.query.sent_at, agreement)
                    }
                };
                if let Some(h) = agent.peers.get_mut(&ans.from) {
                    h.record_interaction(entry);
                }
            }
            for h in agent.peers.values_mut() {
                h.refresh(now, awareness.window);
            }
            agent.activity.kappa = round_kappa(&kappa_rounds, self.config.categories);
            agent.outbox.clear();
        }

        // 4. luciferin and communication domain
        let gso = self.config.gso;
        let fitness: Vec<f64> = (0..next.agents.len()).map(|i| next.fitness(i)).collect();
        let views: Vec<PeerView> = next
            .agents
            .iter()
            .map(|a| PeerView {
                id: a.id,
                position: a.position,
                luciferin: update_luciferin(a.gso.g, fitness[a.id.index()], &gso),
            })
            .collect();
        for &i in order {
            let agent = &next.agents[i];
            let local: Vec<PeerView> = self.neighbors[i].iter().map(|j| views[j.index()]).collect();
            let update = select_communication_domain(
                agent.id,
                agent.position,
                agent.gso,
                fitness[i],
                &local,
                &gso,
            );
            let agent = &mut next.agents[i];
            agent.gso = update.state;
            agent.domain = update.domain;
        }

        // 5. issue queries at the rate set by alertness
        let merge_tick = now.0.is_multiple_of(self.config.risk.merge_period);
        for &i in order {
            let queries = next.plan_queries(&streams, now, i);
            let agent = &mut next.agents[i];
            agent.activity.belief_queries = queries.len() as u32;
            agent.outbox = queries;
            if merge_tick {
                agent.activity.report_requests = agent.domain.len() as u32;
            }
        }

        // 6. model generator and anomaly detector
        if merge_tick {
            let positions: BTreeMap<AgentId, Position> =
                next.agents.iter().map(|a| (a.id, a.position)).collect();
            let mut outcomes = vec![None; next.agents.len()];
            for &i in order {
                outcomes[i] = Some(next.detect(&streams, now, i, &positions));
            }
            for (agent, outcome) in next.agents.iter_mut().zip(outcomes) {
                let (labels, risk, alertness, responses) = outcome.expect("every agent visited");
                agent.labels = labels;
                agent.risk = risk;
                agent.alertness = alertness;
                agent.activity.report_responses = responses;
            }
        }

        next.tick = now.next();
        next
    }

    fn answer(&self, streams: &RngStreams, now: Tick, asker: AgentId, query: &Query) -> Answer {
        let responder = &self.agents[query.to.index()];
        let mut rng = streams.stream(
            Phase::Respond,
            u64::from(responder.id.0),
            now.0,
            u64::from(asker.0),
        );
        let belief = if rng.gen::<f64>() < responder.profile.respond_prob {
            responder.beliefs.get(&query.cell).map(|own| {
                let mut reply = *own;
                if rng.gen::<f64>() < responder.profile.lie_prob {
                    let k = self.config.categories;
                    let mut v = rng.gen_range(0..k - 1);
                    if v >= own.value.0 {
                        v += 1;
                    }
                    reply.value = Category(v);
                }
                reply
            })
        } else {
            None
        };
        Answer {
            from: responder.id,
            query: *query,
            belief,
        }
    }

    /// Mean reputation that sensor neighbors who have interacted with agent
    /// `i` assign to it, 0.5 when nobody has.
    fn fitness(&self, i: usize) -> f64 {
        let id = AgentId(i as u32);
        let (sum, n) = self.neighbors[i]
            .iter()
            .filter_map(|k| self.agents[k.index()].peers.get(&id))
            .filter(|h| h.record.sample_count > 0)
            .fold((0.0, 0u32), |(s, n), h| (s + h.reputation().value(), n + 1));
        if n == 0 {
            0.5
        } else {
            sum / f64::from(n)
        }
    }

    /// One query per sensor neighbor on this agent's query ticks. Peers that
    /// can see the round's focus cell are asked about it, the rest about a
    /// random cell both sides perceive.
    fn plan_queries(&self, streams: &RngStreams, now: Tick, i: usize) -> Vec<Query> {
        let agent = &self.agents[i];
        if !(now.0 + i as u64).is_multiple_of(agent.alertness.query_period()) {
            return Vec::new();
        }
        let mine = &self.perceived[i];
        if mine.is_empty() {
            return Vec::new();
        }
        let mut rng = streams.stream(Phase::Query, i as u64, now.0, 0);
        let focus = mine[rng.gen_range(0..mine.len())];
        let mut out = Vec::new();
        for &j in &self.neighbors[i] {
            let theirs = &self.perceived[j.index()];
            let cell = if theirs.binary_search(&focus).is_ok() {
                focus
            } else {
                let shared: Vec<CellId> = mine
                    .iter()
                    .filter(|c| theirs.binary_search(c).is_ok())
                    .copied()
                    .collect();
                match shared.choose(&mut rng) {
                    Some(&c) => c,
                    None => continue,
                }
            };
            out.push(Query {
                to: j,
                cell,
                sent_at: now,
            });
        }
        out
    }

    /// Gathers reports from the domain members that answer, merges them with
    /// this agent's own records and labels every peer in sensor range that has
    /// data.
    fn detect(
        &self,
        streams: &RngStreams,
        now: Tick,
        i: usize,
        positions: &BTreeMap<AgentId, Position>,
    ) -> (BTreeMap<AgentId, ThreatLevel>, f64, AlertnessLevel, u32) {
        let agent = &self.agents[i];
        let in_range = &self.neighbors[i];
        let mut reports = Vec::new();
        let mut reputations = BTreeMap::new();
        let mut responses = 0;
        for &m in agent.domain.members() {
            let member = &self.agents[m.index()];
            let mut rng = streams.stream(Phase::Report, u64::from(m.0), now.0, i as u64);
            if rng.gen::<f64>() >= member.profile.respond_prob {
                continue;
            }
            responses += 1;
            let trust = agent
                .peers
                .get(&m)
                .map(PeerHistory::reputation)
                .unwrap_or_default();
            reputations.insert(m, trust);
            for (&subject, h) in &member.peers {
                if subject == agent.id
                    || h.record.sample_count == 0
                    || in_range.binary_search(&subject).is_err()
                {
                    continue;
                }
                reports.push(BehaviorReport {
                    reporter: m,
                    subject,
                    responsiveness: h.record.responsiveness,
                    truthfulness: h.record.truthfulness,
                    reported_at: now,
                });
            }
        }
        let own: BTreeMap<AgentId, BehaviorRecord> = agent
            .peers
            .iter()
            .filter(|(_, h)| h.record.sample_count > 0)
            .map(|(&j, h)| (j, h.record))
            .collect();
        let merged = merge_behavior_data(&reports, &reputations, &own)
            .expect("every responding reporter has a reputation entry");
        let labels: BTreeMap<AgentId, ThreatLevel> = merged
            .iter()
            .map(|(&j, m)| (j, classify_threat(m, &self.config.thresholds)))
            .collect();
        let risk = assess_risk(
            &labels,
            positions,
            agent.position,
            self.config.gso.r_s,
            &self.config.risk.weights,
        );
        let alertness = update_alertness(risk, &self.config.risk.bands);
        (labels, risk, alertness, responses)
    }
}

/// Cells whose centers lie within the sensor range, plus the agent's own
/// cell, ascending.
fn perceivable_cells(config: &WorldConfig, p: Position) -> Vec<CellId> {
    let n = config.grid_cells;
    let size = config.world_size / f64::from(n);
    let own_x = ((p.x / size) as u32).min(n - 1);
    let own_y = ((p.y / size) as u32).min(n - 1);
    let mut out = Vec::new();
    for cy in 0..n {
        for cx in 0..n {
            let center = Position::new((f64::from(cx) + 0.5) * size, (f64::from(cy) + 0.5) * size);
            if (cx == own_x && cy == own_y) || distance(p, center) <= config.gso.r_s {
                out.push(CellId(cy * n + cx));
            }
        }
    }
    out
}

/// Kappa over the cells that drew the most answers this tick; `None` when no
/// cell has at least two.
fn round_kappa(rounds: &BTreeMap<CellId, Vec<Category>>, categories: u8) -> Option<f64> {
    let most = rounds.values().map(Vec::len).max()?;
    if most < 2 {
        return None;
    }
    let rows: Vec<Vec<u32>> = rounds
        .values()
        .filter(|v| v.len() == most)
        .map(|v| {
            let mut row = vec![0u32; categories as usize];
            for c in v {
                row[c.0 as usize] += 1;
            }
            row
        })
        .collect();
    fleiss_kappa_or_unanimous(&rows).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> WorldConfig {
        WorldConfig {
            n_agents: 12,
            ticks: 20,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn spawn_is_deterministic() {
        let a = World::spawn(small_config()).unwrap();
        let b = World::spawn(small_config()).unwrap();
        assert_eq!(a, b);
        let c = World::spawn(WorldConfig {
            seed: 8,
            ..small_config()
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spawn_initial_state() {
        let w = World::spawn(small_config()).unwrap();
        let g = w.config().gso;
        for a in w.agents() {
            assert_eq!(a.gso.g, g.g0);
            assert_eq!(a.gso.r_d, g.r_s / 2.0);
            assert!(a.position.x >= 0.0 && a.position.x < 100.0);
            for h in a.peers.values() {
                assert_eq!(h.reputation().value(), 0.5);
            }
        }
    }

    #[test]
    fn spawn_rejects_invalid_config() {
        let mut c = small_config();
        c.gso.s = 0;
        assert!(matches!(World::spawn(c), Err(Error::InvalidConfig { .. })));
    }

    #[test]
    fn perception_includes_own_cell() {
        let c = WorldConfig {
            gso: crate::gso::GsoParams {
                r_s: 0.1,
                ..Default::default()
            },
            ..small_config()
        };
        assert_eq!(
            perceivable_cells(&c, Position::new(12.0, 3.0)),
            vec![CellId(1)]
        );
    }

    #[test]
    fn single_agent_world_stays_quiet() {
        let mut w = World::from_placement(
            small_config(),
            vec![(Position::new(50.0, 50.0), ProfileKind::Honest)],
        )
        .unwrap();
        for _ in 0..30 {
            w.advance();
            let a = &w.agents()[0];
            assert!(a.domain.is_empty());
            assert_eq!(a.risk, 0.0);
            assert_eq!(a.alertness, AlertnessLevel::Low);
        }
    }

    #[test]
    fn placement_must_be_inside_the_world() {
        let err = World::from_placement(
            small_config(),
            vec![(Position::new(100.0, 1.0), ProfileKind::Honest)],
        );
        assert!(err.is_err());
    }

    #[test]
    fn step_is_a_pure_function() {
        let mut w = World::spawn(small_config()).unwrap();
        for _ in 0..5 {
            w.advance();
        }
        assert_eq!(w.step(), w.step());
        assert_eq!(w.tick(), Tick(5));
    }

    #[test]
    fn iteration_order_does_not_matter() {
        let mut w = World::spawn(small_config()).unwrap();
        for _ in 0..6 {
            w.advance();
        }
        let mut rev: Vec<usize> = (0..w.agents().len()).collect();
        rev.reverse();
        assert_eq!(w.step(), w.step_in_order(&rev));
    }

    #[test]
    fn liars_answer_with_a_wrong_category() {
        let mut c = small_config();
        c.profiles.responsive_liar.respond_prob = 1.0;
        c.profiles.responsive_liar.lie_prob = 1.0;
        let mut w = World::from_placement(
            c,
            vec![
                (Position::new(50.0, 50.0), ProfileKind::Honest),
                (Position::new(52.0, 50.0), ProfileKind::ResponsiveLiar),
            ],
        )
        .unwrap();
        for _ in 0..12 {
            w.advance();
        }
        let rec = w.agents()[0].peers[&AgentId(1)].record;
        assert!(rec.sample_count > 0);
        assert_eq!(rec.truthfulness, 0.0);
        assert_eq!(w.agents()[0].labels[&AgentId(1)], ThreatLevel::Noxious);
    }

    #[test]
    fn round_kappa_uses_the_busiest_cells() {
        let rounds: BTreeMap<_, _> = [
            (CellId(0), vec![Category(0), Category(0), Category(0)]),
            (CellId(1), vec![Category(1)]),
        ]
        .into();
        assert_eq!(round_kappa(&rounds, 4), Some(1.0));
        let single: BTreeMap<_, _> = [(CellId(0), vec![Category(0)])].into();
        assert_eq!(round_kappa(&single, 4), None);
    }
}
