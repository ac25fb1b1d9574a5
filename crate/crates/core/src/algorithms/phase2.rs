//! Phase 2: elimination on rejection.

use serde::{Deserialize, Serialize};

use super::{ceil_tolerant, check_delta, Session};
use crate::error::{Error, Result};
use crate::user::Verdict;

/// Rejections needed to eliminate an arm: 1 for a noiseless user, otherwise
/// `ceil(2 ln(K/delta))`.
pub fn default_m(k: usize, delta: f64, noise_p: f64) -> Result<u64> {
    check_delta(delta)?;
    if noise_p == 0.0 {
        return Ok(1);
    }
    Ok(ceil_tolerant(2.0 * (k as f64 / delta).ln()).max(1.0) as u64)
}

/// Which rejections count toward the `m` needed to eliminate an arm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrikeRule {
    /// Rejections in a row; an acceptance of the arm clears its count.
    #[default]
    Consecutive,
    /// Every Phase-2 rejection of the arm counts.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2Output {
    pub survivor: usize,
    pub steps: u64,
    pub rejections: u64,
    /// Final acceptance counts, Phase-1 counts included.
    pub counts: Vec<u64>,
    /// The step limit ran out before a single arm remained.
    pub exhausted: bool,
}

/// Recommends the least-accepted surviving arm (lowest index on ties) and
/// drops an arm at its `m`-th rejection, counted per `rule`, until one arm
/// survives. With `m = 1` both rules coincide.
///
/// A rejected arm stays the least accepted, so it is recommended again at
/// once; a user that really rejects it does so `m` times in a row. Counting
/// across acceptances instead lets coin-flip rejections pile up on the best
/// arm over a long phase.
///
/// `counts` are the per-arm acceptance counts carried over from Phase 1.
/// `max_steps` bounds the phase; if it runs out, the survivor with the most
/// acceptances is returned and `exhausted` is set.
pub fn phase2_eliminate(
    session: &mut Session,
    counts: &[u64],
    m: u64,
    rule: StrikeRule,
    max_steps: Option<u64>,
) -> Result<Phase2Output> {
    let k = session.num_arms();
    if counts.len() != k {
        return Err(Error::ArmCountMismatch {
            cell: counts.len(),
            instance: k,
        });
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let mut counts = counts.to_vec();
    let mut alive = vec![true; k];
    let mut strikes = vec![0u64; k];
    let mut remaining = k;
    let (mut steps, mut rejections) = (0u64, 0u64);

    while remaining > 1 {
        if max_steps.is_some_and(|cap| steps >= cap) {
            let survivor = (0..k)
                .filter(|&i| alive[i])
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if counts[b] >= counts[i] => Some(b),
                    _ => Some(i),
                })
                .expect("at least two alive");
            return Ok(Phase2Output {
                survivor,
                steps,
                rejections,
                counts,
                exhausted: true,
            });
        }
        let arm = (0..k)
            .filter(|&i| alive[i])
            .min_by_key(|&i| (counts[i], i))
            .expect("at least two alive");
        steps += 1;
        match session.interact(arm)?.verdict {
            Verdict::Accept => {
                counts[arm] += 1;
                if rule == StrikeRule::Consecutive {
                    strikes[arm] = 0;
                }
            }
            Verdict::Reject => {
                rejections += 1;
                strikes[arm] += 1;
                if strikes[arm] >= m {
                    alive[arm] = false;
                    remaining -= 1;
                }
            }
        }
    }
    let survivor = alive.iter().position(|&a| a).expect("one survivor");
    Ok(Phase2Output {
        survivor,
        steps,
        rejections,
        counts,
        exhausted: false,
    })
}
