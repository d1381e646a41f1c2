//! Situational-awareness bookkeeping.
//!
//! Every query an agent sends to a peer ends up as one [`Interaction`] in the
//! per-peer [`InteractionLog`]. From that log the agent derives how responsive
//! and how truthful the peer has been ([`BehaviorRecord`]) and from those a
//! single trust weight ([`Reputation`]).
//!
//! Truthfulness is scored pairwise: a peer's answer about a grid cell is
//! compared with the agent's own observation of the same cell
//! ([`score_response`]). Fleiss' kappa ([`fleiss_kappa`]) measures agreement of
//! a whole reporting round; it cannot attribute disagreement to individual
//! peers, so it only serves as a diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Belief, Tick};

/// Default reputation for a peer that has never been observed.
pub const DEFAULT_REPUTATION: f64 = 0.5;

/// Truthfulness reported before any response has been scored.
pub const UNINFORMED_TRUTHFULNESS: f64 = 0.5;

/// One query sent to a peer and its outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub tick: Tick,
    pub queried: bool,
    pub responded: bool,
    /// Agreement in `[-1, 1]` between the response and the querying agent's
    /// own observation. Only present for scored responses.
    pub agreement: Option<f64>,
}

impl Interaction {
    pub fn unanswered(tick: Tick) -> Self {
        Self {
            tick,
            queried: true,
            responded: false,
            agreement: None,
        }
    }

    pub fn answered(tick: Tick, agreement: Option<f64>) -> Self {
        Self {
            tick,
            queried: true,
            responded: true,
            agreement: agreement.map(|a| a.clamp(-1.0, 1.0)),
        }
    }
}

/// Append-only, tick-ordered interaction history with one peer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionLog {
    entries: Vec<Interaction>,
}

impl InteractionLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an entry. Entries older than the newest one are rejected
    /// (returns `false`) so the log stays ordered by tick; an agreement on an
    /// unanswered query is dropped.
    pub fn push(&mut self, mut entry: Interaction) -> bool {
        if let Some(last) = self.entries.last() {
            if entry.tick < last.tick {
                return false;
            }
        }
        if !entry.responded {
            entry.agreement = None;
        }
        self.entries.push(entry);
        true
    }

    pub fn entries(&self) -> &[Interaction] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops every entry with `tick <= cutoff`.
    pub fn prune_through(&mut self, cutoff: Tick) {
        let keep_from = self.entries.partition_point(|e| e.tick <= cutoff);
        self.entries.drain(..keep_from);
    }
}

impl FromIterator<Interaction> for InteractionLog {
    fn from_iter<I: IntoIterator<Item = Interaction>>(iter: I) -> Self {
        let mut log = InteractionLog::new();
        for entry in iter {
            log.push(entry);
        }
        log
    }
}

/// Observed behavior of one peer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub responsiveness: f64,
    pub truthfulness: f64,
    pub sample_count: u64,
}

impl Default for BehaviorRecord {
    fn default() -> Self {
        Self {
            responsiveness: 1.0,
            truthfulness: UNINFORMED_TRUTHFULNESS,
            sample_count: 0,
        }
    }
}

impl BehaviorRecord {
    pub fn new(responsiveness: f64, truthfulness: f64, sample_count: u64) -> Self {
        Self {
            responsiveness: clamp_unit(responsiveness),
            truthfulness: clamp_unit(truthfulness),
            sample_count,
        }
    }

    /// Scores a whole log as seen at tick `now`.
    pub fn from_log(log: &InteractionLog, now: Tick, window: u64, alpha: f64) -> Self {
        Self::new(
            update_responsiveness(log, now, window),
            update_truthfulness(log, alpha),
            log.len() as u64,
        )
    }
}

/// Trust weight of a peer, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Reputation(f64);

impl Reputation {
    pub fn new(value: f64) -> Self {
        Reputation(clamp_unit(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Reputation {
    fn default() -> Self {
        Reputation(DEFAULT_REPUTATION)
    }
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Outcome of a successful kappa evaluation, with the two agreement terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaStats {
    pub kappa: f64,
    /// Mean observed agreement over subjects.
    pub observed: f64,
    /// Agreement expected by chance.
    pub expected: f64,
}

/// Fleiss' kappa for `ratings`, one row per subject holding how many raters
/// chose each category. Every row must sum to the same rater count `n >= 2`
/// and there must be at least two categories.
///
/// Returns [`Error::DegenerateAgreement`] when chance agreement is exactly 1;
/// see [`fleiss_kappa_or_unanimous`] for the usual resolution.
pub fn fleiss_kappa<R: AsRef<[u32]>>(ratings: &[R]) -> Result<KappaStats> {
    let first = ratings
        .first()
        .ok_or_else(|| Error::InvalidRatings("no subjects".into()))?
        .as_ref();
    let categories = first.len();
    if categories < 2 {
        return Err(Error::InvalidRatings(format!(
            "need at least 2 categories, got {categories}"
        )));
    }
    let raters: u64 = first.iter().map(|&c| u64::from(c)).sum();
    if raters < 2 {
        return Err(Error::InvalidRatings(format!(
            "need at least 2 raters per subject, got {raters}"
        )));
    }

    let mut column_totals = vec![0u64; categories];
    let mut agreement_sum = 0.0;
    for (i, row) in ratings.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != categories {
            return Err(Error::InvalidRatings(format!(
                "subject {i} has {} categories, expected {categories}",
                row.len()
            )));
        }
        let row_sum: u64 = row.iter().map(|&c| u64::from(c)).sum();
        if row_sum != raters {
            return Err(Error::InvalidRatings(format!(
                "subject {i} has {row_sum} ratings, expected {raters}"
            )));
        }
        let squares: u64 = row.iter().map(|&c| u64::from(c) * u64::from(c)).sum();
        agreement_sum += (squares - raters) as f64 / (raters * (raters - 1)) as f64;
        for (total, &c) in column_totals.iter_mut().zip(row) {
            *total += u64::from(c);
        }
    }

    let subjects = ratings.len() as f64;
    let observed = agreement_sum / subjects;
    let all_ratings = subjects * raters as f64;
    let expected: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / all_ratings;
            p * p
        })
        .sum();

    // Only reachable when every rating sits in one column.
    if column_totals.iter().any(|&t| t as f64 == all_ratings) {
        return Err(Error::DegenerateAgreement {
            mean_agreement: observed,
        });
    }

    Ok(KappaStats {
        kappa: (observed - expected) / (1.0 - expected),
        observed,
        expected,
    })
}

/// Like [`fleiss_kappa`] but resolves the unanimous degenerate case to 1.
pub fn fleiss_kappa_or_unanimous<R: AsRef<[u32]>>(ratings: &[R]) -> Result<f64> {
    match fleiss_kappa(ratings) {
        Ok(stats) => Ok(stats.kappa),
        Err(Error::DegenerateAgreement {
            mean_agreement: 1.0,
        }) => Ok(1.0),
        Err(e) => Err(e),
    }
}

/// Fraction of queries with `now - window < tick <= now` that got a response.
/// Returns 1.0 when no query falls in the window.
pub fn update_responsiveness(log: &InteractionLog, now: Tick, window: u64) -> f64 {
    let window = window.max(1);
    let start = log
        .entries()
        .partition_point(|e| e.tick.0 + window <= now.0);
    let (mut queried, mut responded) = (0u64, 0u64);
    for e in &log.entries()[start..] {
        if e.tick > now {
            break;
        }
        if e.queried {
            queried += 1;
            if e.responded {
                responded += 1;
            }
        }
    }
    if queried == 0 {
        1.0
    } else {
        responded as f64 / queried as f64
    }
}

/// Exponentially weighted moving average of scored responses, each
/// agreement mapped from `[-1, 1]` to `[0, 1]`. The first scored response
/// seeds the average and every later one enters with weight `alpha`.
/// Returns 0.5 when nothing has been scored.
pub fn update_truthfulness(log: &InteractionLog, alpha: f64) -> f64 {
    let mut ewma = TruthEwma::new(alpha);
    for e in log.entries() {
        if let Some(a) = e.agreement.filter(|_| e.responded) {
            ewma.observe(a);
        }
    }
    ewma.value()
}

/// Incremental form of [`update_truthfulness`], for callers that prune
/// their logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthEwma {
    alpha: f64,
    value: Option<f64>,
}

impl TruthEwma {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, value: None }
    }

    /// Feeds one agreement in `[-1, 1]`.
    pub fn observe(&mut self, agreement: f64) {
        let x = (agreement.clamp(-1.0, 1.0) + 1.0) / 2.0;
        self.value = Some(match self.value {
            None => x,
            Some(v) => self.alpha * x + (1.0 - self.alpha) * v,
        });
    }

    pub fn value(&self) -> f64 {
        self.value.map_or(UNINFORMED_TRUTHFULNESS, clamp_unit)
    }
}

/// Reputation as truthfulness times responsiveness, so silence costs as much
/// as lying. An unobserved peer gets the default prior.
pub fn update_reputation(record: &BehaviorRecord) -> Reputation {
    if record.sample_count == 0 {
        return Reputation::default();
    }
    Reputation::new(record.truthfulness * record.responsiveness)
}

/// +1 when the peer's answer matches our own observation, -1 otherwise.
pub fn score_response(own_observation: &Belief, peer_response: &Belief) -> Result<f64> {
    if own_observation.subject != peer_response.subject {
        return Err(Error::SubjectMismatch {
            own: own_observation.subject,
            peer: peer_response.subject,
        });
    }
    Ok(if own_observation.value == peer_response.value {
        1.0
    } else {
        -1.0
    })
}
