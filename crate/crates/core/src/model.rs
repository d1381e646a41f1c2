//! Shared vocabulary: identifiers, positions, beliefs and the two ordered
//! label scales (threat severity and alertness).

use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of an agent, unique within one world. The derived ordering is
/// used wherever ties must be broken deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent-{}", self.0)
    }
}

/// Simulation step counter.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Tick(pub u64);

impl Tick {
    pub fn next(self) -> Tick {
        Tick(self.0 + 1)
    }
}

/// Point in the bounded 2-D world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Grid cell identifier; the subject of a belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell-{}", self.0)
    }
}

/// Categorical observation value, an index into the observation alphabet
/// (`0 => A`, `1 => B`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Category(pub u8);

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 26 {
            write!(f, "{}", (b'A' + self.0) as char)
        } else {
            write!(f, "#{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Belief {
    pub subject: CellId,
    pub value: Category,
    pub origin: AgentId,
    pub observed_at: Tick,
}

/// Threat label assigned to a peer. Variants are declared in increasing
/// severity so the derived `Ord` is the severity order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatLevel {
    /// Responsive and truthful.
    Cooperative,
    /// Unresponsive but truthful when it does answer.
    Suspicious,
    /// Unresponsive and untruthful.
    Malicious,
    /// Responsive and untruthful.
    Noxious,
}

impl ThreatLevel {
    pub const ALL: [ThreatLevel; 4] = [
        ThreatLevel::Cooperative,
        ThreatLevel::Suspicious,
        ThreatLevel::Malicious,
        ThreatLevel::Noxious,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ThreatLevel::Cooperative => "cooperative",
            ThreatLevel::Suspicious => "suspicious",
            ThreatLevel::Malicious => "malicious",
            ThreatLevel::Noxious => "noxious",
        }
    }
}

impl fmt::Display for ThreatLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AlertnessLevel {
    #[default]
    Low,
    Elevated,
    High,
}

impl AlertnessLevel {
    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of ticks between belief-query rounds at this level.
    pub fn query_period(self) -> u64 {
        match self {
            AlertnessLevel::Low => 4,
            AlertnessLevel::Elevated => 2,
            AlertnessLevel::High => 1,
        }
    }
}
