//! System-side policies. All of them see nothing but accept/reject verdicts.

mod bair;
mod exp3;
mod phase1;
mod phase2;
mod session;
mod track_and_stop;
mod uniform;

use serde::{Deserialize, Serialize};

pub use bair::{bair, bair_detailed, BairOptions, BairRun};
pub use exp3::{exp3, Exp3Params};
pub use phase1::{default_n1, phase1_sweep, Phase1Output, Phase1Stop, RoundRecord};
pub use phase2::{default_m, phase2_eliminate, Phase2Output, StrikeRule};
pub use session::{Mark, Session, Transcript, TranscriptEntry};
pub use track_and_stop::{
    bernoulli_kl, default_t_max, glr_statistic, optimal_weights, track_and_stop,
    TrackAndStopParams, WeightSolver,
};
pub use uniform::{uniform_explore, UniformMode};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Identified,
    BudgetExhausted,
}

/// Result of one policy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmOutcome {
    pub chosen_arm: usize,
    /// Recommendations made, accepted or not.
    pub total_steps: u64,
    pub total_rejections: u64,
    pub per_arm_accepts: Vec<u64>,
    pub termination: Termination,
    /// Steps spent in the first phase, for two-phase policies.
    pub phase_boundary: Option<u64>,
}

impl AlgorithmOutcome {
    pub fn rejection_rate(&self) -> f64 {
        if self.total_steps == 0 {
            0.0
        } else {
            self.total_rejections as f64 / self.total_steps as f64
        }
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta {
            value: delta,
            range: "(0, 1)",
        })
    }
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn argmax_count(counts: &[u64]) -> usize {
    counts
        .iter()
        .enumerate()
        .fold(
            (0, 0),
            |best, (i, &c)| if c > best.1 { (i, c) } else { best },
        )
        .0
}

/// `ceil(x)` that ignores floating noise just above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_count(&[3, 5, 5, 1]), 1);
        assert_eq!(argmax_count(&[0, 0]), 0);
    }

    #[test]
    fn tolerant_ceiling() {
        assert_eq!(ceil_tolerant(40.000_000_000_000_01), 40.0);
        assert_eq!(ceil_tolerant(14.142), 15.0);
        assert_eq!(ceil_tolerant(20.0), 20.0);
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::Session;
    use crate::env::{BanditInstance, Environment, NoiseModel};
    use crate::rng::{Purpose, StreamKey};
    use crate::user::{ExplorativeUser, UserParams};

    pub fn session(means: &[f64], params: UserParams, seed: u64) -> Session {
        let key = StreamKey::new(seed, 0, 0, 1);
        let inst = BanditInstance::new(means.to_vec()).unwrap();
        let env = Environment::new(inst, &key, NoiseModel::Gaussian);
        let user = ExplorativeUser::new(params, means.len(), key.stream(Purpose::UserNoise, 0));
        Session::new(env, user).unwrap()
    }
}
