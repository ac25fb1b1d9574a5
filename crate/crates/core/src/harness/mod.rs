//! Replicated experiments: cells, runs, budget matching and metrics.

mod emit;
mod metrics;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use emit::{emit_document, emit_results, format_sig6, Format, RunHeader};
pub use metrics::{summarize, AlgoSummary, CellSummary};
pub use run::{
    run_cell, run_cell_records, run_replication, run_shared_phase1_cell, ReplicationRecord,
};

use crate::algorithms::{default_n1, Phase1Stop, StrikeRule, UniformMode};
use crate::error::{Error, Result};
use crate::user::{RhoPolicy, UserParams};

/// The policies the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoKind {
    Bair,
    Uni,
    Exp3,
    Ts,
}

impl AlgoKind {
    pub const ALL: [AlgoKind; 4] = [AlgoKind::Bair, AlgoKind::Uni, AlgoKind::Exp3, AlgoKind::Ts];

    pub fn name(self) -> &'static str {
        match self {
            AlgoKind::Bair => "bair",
            AlgoKind::Uni => "uni",
            AlgoKind::Exp3 => "exp3",
            AlgoKind::Ts => "ts",
        }
    }

    /// Stable id mixed into the random stream keys.
    pub fn id(self) -> u64 {
        match self {
            AlgoKind::Bair => 1,
            AlgoKind::Uni => 2,
            AlgoKind::Exp3 => 3,
            AlgoKind::Ts => 4,
        }
    }

    /// Whether the policy needs an externally supplied horizon.
    pub fn needs_budget(self) -> bool {
        matches!(self, AlgoKind::Uni | AlgoKind::Exp3)
    }
}

impl fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        AlgoKind::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = AlgoKind::ALL.iter().map(|a| a.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown algorithm '{s}' (valid names: {})",
                    valid.join(", ")
                ))
            })
    }
}

/// How BAIR's Phase-1 acceptance budget is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "N1Repr", into = "N1Repr")]
pub enum N1Choice {
    /// `(2K/delta)^(1/alpha) / rho0`.
    #[default]
    Default,
    /// `(sqrt(K)/delta)^(1/alpha) / rho0`.
    SqrtK,
    /// `(ln K/delta)^(1/alpha) / rho0`.
    LogK,
    /// Exactly `K`: one acceptance per arm.
    K,
    Fixed(u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum N1Repr {
    Fixed(u64),
    Named(String),
}

impl TryFrom<N1Repr> for N1Choice {
    type Error = Error;

    fn try_from(r: N1Repr) -> Result<Self> {
        match r {
            N1Repr::Fixed(n) => N1Choice::Fixed(n).checked(),
            N1Repr::Named(s) => s.parse(),
        }
    }
}

impl From<N1Choice> for N1Repr {
    fn from(c: N1Choice) -> Self {
        match c {
            N1Choice::Fixed(n) => N1Repr::Fixed(n),
            other => N1Repr::Named(other.label()),
        }
    }
}

impl FromStr for N1Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "default" | "2k" => Ok(N1Choice::Default),
            "sqrtk" => Ok(N1Choice::SqrtK),
            "logk" => Ok(N1Choice::LogK),
            "k" => Ok(N1Choice::K),
            other => other
                .parse::<u64>()
                .map_err(|_| {
                    Error::InvalidParameter(format!(
                        "invalid n1 '{s}' (expected a positive integer or one of default, sqrtk, logk, k)"
                    ))
                })
                .and_then(|n| N1Choice::Fixed(n).checked()),
        }
    }
}

impl N1Choice {
    fn checked(self) -> Result<Self> {
        match self {
            N1Choice::Fixed(0) => Err(Error::InvalidBudget),
            c => Ok(c),
        }
    }

    pub fn label(self) -> String {
        match self {
            N1Choice::Default => "default".into(),
            N1Choice::SqrtK => "sqrtk".into(),
            N1Choice::LogK => "logk".into(),
            N1Choice::K => "k".into(),
            N1Choice::Fixed(n) => n.to_string(),
        }
    }

    pub fn resolve(self, k: usize, delta: f64, alpha: f64, rho0: f64) -> Result<u64> {
        let scaled = |numerator: f64| -> u64 {
            let raw = (numerator / delta).powf(1.0 / alpha) / rho0;
            (crate::algorithms::ceil_tolerant(raw) as u64).max(1)
        };
        match self {
            N1Choice::Default => default_n1(k, delta, alpha, rho0),
            N1Choice::SqrtK => Ok(scaled((k as f64).sqrt())),
            N1Choice::LogK => Ok(scaled((k as f64).ln())),
            N1Choice::K => Ok(k as u64),
            N1Choice::Fixed(n) => Ok(n),
        }
    }
}

/// Which BAIR average sets the horizon of UNI and EXP3.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMatching {
    /// Mean BAIR stopping time on the same instance.
    #[default]
    PerInstance,
    /// Mean BAIR stopping time over the whole cell.
    PerCell,
}

fn default_rho() -> RhoPolicy {
    RhoPolicy::LinearAcceptance
}

fn default_alpha() -> f64 {
    1.0
}

fn default_runs() -> usize {
    1
}

/// One configuration of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentCell {
    pub delta: f64,
    pub k: usize,
    pub gap: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_rho")]
    pub rho: RhoPolicy,
    #[serde(default)]
    pub noise_p: f64,
    pub algos: Vec<AlgoKind>,
    /// Number of problem instances.
    pub reps: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<N1Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    /// Independent runs on each instance.
    #[serde(default = "default_runs")]
    pub runs_per_instance: usize,
    #[serde(default)]
    pub budget_matching: BudgetMatching,
    #[serde(default)]
    pub uni_mode: UniformMode,
    #[serde(default)]
    pub phase1_stop: Phase1Stop,
    /// How BAIR counts rejections toward `m`.
    #[serde(default)]
    pub strikes: StrikeRule,
    /// Share user and reward randomness across algorithms on an instance.
    #[serde(default)]
    pub coupled: bool,
}

impl ExperimentCell {
    /// A cell with the standard user (alpha = 1, linear rho, no noise).
    pub fn new(
        delta: f64,
        k: usize,
        gap: f64,
        algos: Vec<AlgoKind>,
        reps: usize,
        seed: u64,
    ) -> Self {
        Self {
            delta,
            k,
            gap,
            alpha: 1.0,
            rho: RhoPolicy::LinearAcceptance,
            noise_p: 0.0,
            algos,
            reps,
            seed,
            n1: None,
            m: None,
            runs_per_instance: 1,
            budget_matching: BudgetMatching::PerInstance,
            uni_mode: UniformMode::Random,
            phase1_stop: Phase1Stop::Acceptances,
            strikes: StrikeRule::Consecutive,
            coupled: false,
        }
    }

    pub fn user_params(&self) -> Result<UserParams> {
        UserParams::new(self.alpha, self.rho, self.noise_p)
    }

    pub fn validate(&self) -> Result<()> {
        crate::algorithms::check_delta(self.delta)?;
        if self.k < 2 {
            return Err(Error::TooFewArms(self.k));
        }
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::InvalidGap(self.gap));
        }
        if self.algos.is_empty() {
            return Err(Error::EmptyAlgorithmList);
        }
        if self.reps == 0 || self.runs_per_instance == 0 {
            return Err(Error::InvalidParameter(
                "reps and runs_per_instance must be at least 1".into(),
            ));
        }
        if self.m == Some(0) {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        self.user_params()?;
        Ok(())
    }

    /// Display label for `algo`, tagging non-default BAIR settings.
    pub fn algo_label(&self, algo: AlgoKind) -> String {
        let mut tags = Vec::new();
        if algo == AlgoKind::Bair {
            if let Some(n1) = self.n1.filter(|c| *c != N1Choice::Default) {
                tags.push(format!("n1={}", n1.label()));
            }
            if let Some(m) = self.m {
                tags.push(format!("m={m}"));
            }
            if self.strikes == StrikeRule::Cumulative {
                tags.push("strikes=cumulative".into());
            }
        }
        if tags.is_empty() {
            algo.name().to_string()
        } else {
            format!("{}[{}]", algo.name(), tags.join(","))
        }
    }
}

/// A grid of cells as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub cells: Vec<ExperimentCell>,
}
