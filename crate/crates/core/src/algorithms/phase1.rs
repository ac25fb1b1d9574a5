//! Phase 1: sweep the arms to build up acceptances while drawing as few
//! rejections as possible.

use serde::{Deserialize, Serialize};

use super::{ceil_tolerant, check_delta, Session};
use crate::error::{Error, Result};
use crate::user::Verdict;

/// When Phase 1 hands over to Phase 2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase1Stop {
    /// Once the user has accepted at least `N1` recommendations in total.
    #[default]
    Acceptances,
    /// Once `N1` recommendations have been made, accepted or not.
    Steps,
}

/// `ceil((1/rho0) (2K/delta)^(1/alpha))`, never below `K`.
pub fn default_n1(k: usize, delta: f64, alpha: f64, rho0: f64) -> Result<u64> {
    check_delta(delta)?;
    if k < 2 {
        return Err(Error::TooFewArms(k));
    }
    if !(alpha > 0.0 && rho0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha and rho0 must be positive (alpha = {alpha}, rho0 = {rho0})"
        )));
    }
    let raw = (2.0 * k as f64 / delta).powf(1.0 / alpha) / rho0;
    Ok((ceil_tolerant(raw) as u64).max(k as u64))
}

/// Bookkeeping for one completed main-loop round.
///
/// Empirical means and gamma are the user's private quantities; they are
/// recorded for verification only and never reach the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Steps completed when the round began.
    pub start_step: u64,
    /// Step of the rejection that closed the round.
    pub end_step: u64,
    pub start_max_empirical_mean: f64,
    pub end_max_empirical_mean: f64,
    /// Smallest gamma seen by any decision in the round.
    pub min_gamma_in_round: f64,
    pub acceptances_at_end: u64,
}

impl RoundRecord {
    /// Guaranteed drop `2 sqrt(min_gamma / n(t_e))` of the highest empirical
    /// mean across the round.
    pub fn guaranteed_descent(&self) -> f64 {
        2.0 * (self.min_gamma_in_round / self.acceptances_at_end as f64).sqrt()
    }

    /// `None` when the round saw a zero gamma and the inequality is not
    /// claimed; otherwise whether the maximum mean fell by at least
    /// [`guaranteed_descent`](Self::guaranteed_descent).
    pub fn satisfies_descent(&self) -> Option<bool> {
        if !(self.min_gamma_in_round > 0.0) {
            return None;
        }
        let slack = 1e-9 * self.start_max_empirical_mean.abs().max(1.0);
        Some(
            self.end_max_empirical_mean
                <= self.start_max_empirical_mean - self.guaranteed_descent() + slack,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Output {
    pub accept_counts: Vec<u64>,
    pub reject_counts: Vec<u64>,
    pub rounds: Vec<RoundRecord>,
    pub total_steps: u64,
    /// Steps spent in the initialization sweeps.
    pub init_steps: u64,
}

/// Runs Phase 1 until `N1` is reached under the chosen stop rule.
///
/// Initialization sweeps the surviving arms, recommending each once and
/// dropping every arm that gets rejected, until none survive. The main loop
/// then runs rounds: each arm in turn is recommended until rejected. The
/// stop rule is checked after every interaction, so the phase may end
/// mid-round; only completed rounds are recorded.
pub fn phase1_sweep(session: &mut Session, n1: u64, stop: Phase1Stop) -> Result<Phase1Output> {
    if n1 == 0 {
        return Err(Error::InvalidBudget);
    }
    let k = session.num_arms();
    let base_steps = session.steps();
    let base_accepts = session.acceptances();
    let start_accepts = session.accepts().to_vec();
    let start_rejects = session.rejects().to_vec();
    let noiseless = session.user().params().noise_p() == 0.0;
    let done = |s: &Session| match stop {
        Phase1Stop::Acceptances => s.acceptances() - base_accepts >= n1,
        Phase1Stop::Steps => s.steps() - base_steps >= n1,
    };

    let mut rounds = Vec::new();
    let mut survivors: Vec<usize> = (0..k).collect();
    'init: while !survivors.is_empty() {
        let mut kept = Vec::with_capacity(survivors.len());
        for &arm in &survivors {
            if session.interact(arm)?.verdict.is_accept() {
                kept.push(arm);
            }
            if done(session) {
                break 'init;
            }
        }
        survivors = kept;
    }
    let init_steps = session.steps() - base_steps;

    'main: while !done(session) {
        let start_step = session.steps();
        let start_max = session.user().state().max_empirical_mean();
        let mut min_gamma = f64::INFINITY;
        for arm in 0..k {
            loop {
                let response = session.interact(arm)?;
                min_gamma = min_gamma.min(response.gamma);
                if response.verdict == Verdict::Reject {
                    break;
                }
                if done(session) {
                    break 'main;
                }
            }
            if arm + 1 < k && done(session) {
                break 'main;
            }
        }
        let state = session.user().state();
        let record = RoundRecord {
            start_step,
            end_step: session.steps(),
            start_max_empirical_mean: start_max,
            end_max_empirical_mean: state.max_empirical_mean(),
            min_gamma_in_round: min_gamma,
            acceptances_at_end: state.n_total(),
        };
        debug_assert!(
            !noiseless || record.satisfies_descent() != Some(false),
            "round violates the max-mean descent bound: {record:?}"
        );
        rounds.push(record);
    }

    let diff = |now: &[u64], then: &[u64]| -> Vec<u64> {
        now.iter().zip(then).map(|(a, b)| a - b).collect()
    };
    Ok(Phase1Output {
        accept_counts: diff(session.accepts(), &start_accepts),
        reject_counts: diff(session.rejects(), &start_rejects),
        rounds,
        total_steps: session.steps() - base_steps,
        init_steps,
    })
}
