//! UNI: spread a fixed budget evenly, keep the most-accepted arm.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_count, AlgorithmOutcome, Session, Termination};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformMode {
    /// An independent uniformly random arm at every step.
    #[default]
    Random,
    /// Arms in cyclic order.
    RoundRobin,
}

/// Makes exactly `budget` recommendations and returns the arm with the most
/// acceptances (lowest index on ties).
pub fn uniform_explore<R: Rng + ?Sized>(
    session: &mut Session,
    budget: u64,
    mode: UniformMode,
    rng: &mut R,
) -> Result<AlgorithmOutcome> {
    if budget == 0 {
        return Err(Error::InvalidBudget);
    }
    let k = session.num_arms();
    let mark = session.mark();
    for step in 0..budget {
        let arm = match mode {
            UniformMode::Random => rng.random_range(0..k),
            UniformMode::RoundRobin => (step % k as u64) as usize,
        };
        session.interact(arm)?;
    }
    let chosen = argmax_count(&session.accepts_since(&mark));
    Ok(session.outcome_since(&mark, chosen, Termination::BudgetExhausted, None))
}
