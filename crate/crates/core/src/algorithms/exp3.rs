//! EXP3 on binary feedback (accept = 1, reject = 0).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_count, AlgorithmOutcome, Session, Termination};
use crate::error::{Error, Result};

/// Learning rate `gamma` and uniform mixing weight `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exp3Params {
    pub gamma: f64,
    pub eps: f64,
}

impl Exp3Params {
    /// `gamma = sqrt(ln K / (K T))`, `eps = min(1, sqrt(K ln K / T))`.
    pub fn defaults(k: usize, budget: u64) -> Self {
        let (k, t) = (k as f64, budget as f64);
        Self {
            gamma: (k.ln() / (k * t)).sqrt(),
            eps: (k * k.ln() / t).sqrt().min(1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "EXP3 gamma = {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::InvalidParameter(format!(
                "EXP3 eps = {} outside [0, 1]",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Sampling law `(1 - eps) softmax(logw) + eps / K`.
pub(crate) fn exp3_probabilities(log_weights: &[f64], eps: f64) -> Vec<f64> {
    let k = log_weights.len() as f64;
    let top = log_weights
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter()
        .map(|wi| (1.0 - eps) * wi / total + eps / k)
        .collect()
}

/// Runs EXP3 for exactly `budget` steps; outputs the most-accepted arm.
///
/// Requires `budget > K ln K`. Weights are kept in log space.
pub fn exp3<R: Rng + ?Sized>(
    session: &mut Session,
    budget: u64,
    params: Option<Exp3Params>,
    rng: &mut R,
) -> Result<AlgorithmOutcome> {
    let k = session.num_arms();
    let threshold = k as f64 * (k as f64).ln();
    if budget as f64 <= threshold {
        return Err(Error::BudgetTooSmall {
            budget,
            k,
            threshold,
        });
    }
    let params = params.unwrap_or_else(|| Exp3Params::defaults(k, budget));
    params.validate()?;

    let mark = session.mark();
    let mut log_w = vec![0.0f64; k];
    for _ in 0..budget {
        let probs = exp3_probabilities(&log_w, params.eps);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut arm = k - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                arm = i;
                break;
            }
        }
        if session.interact(arm)?.verdict.is_accept() {
            log_w[arm] += params.gamma / probs[arm];
        }
    }
    let chosen = argmax_count(&session.accepts_since(&mark));
    Ok(session.outcome_since(&mark, chosen, Termination::BudgetExhausted, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::testutil::session;
    use crate::rng::RngStream;
    use crate::user::UserParams;

    #[test]
    fn default_constants() {
        let p = Exp3Params::defaults(2, 400);
        assert!((p.gamma - (2f64.ln() / 800.0).sqrt()).abs() < 1e-15);
        assert!((p.eps - (2.0 * 2f64.ln() / 400.0).sqrt()).abs() < 1e-15);
        assert_eq!(Exp3Params::defaults(20, 10).eps, 1.0);
    }

    #[test]
    fn full_mixing_is_uniform() {
        let p = exp3_probabilities(&[5.0, -3.0, 0.0, 40.0], 1.0);
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn equal_weights_sample_uniformly() {
        let p = exp3_probabilities(&[0.0; 5], 0.3);
        assert!(p.iter().all(|&x| (x - 0.2).abs() < 1e-15));
        let q = exp3_probabilities(&[1.0, 0.0], 0.0);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(q[0] > q[1]);
    }

    #[test]
    fn budget_threshold() {
        let mut rng = RngStream::new(2);
        let mut s = session(&[1.0, 0.0, -1.0], UserParams::standard(), 2);
        // 3 ln 3 = 3.2958
        assert!(matches!(
            exp3(&mut s, 3, None, &mut rng),
            Err(Error::BudgetTooSmall { .. })
        ));
        let out = exp3(&mut s, 4, None, &mut rng).unwrap();
        assert_eq!(out.total_steps, 4);
    }

    #[test]
    fn runs_exact_budget_and_prefers_accepted_arm() {
        let mut rng = RngStream::new(8);
        let mut s = session(&[3.0, -3.0], UserParams::standard(), 8);
        let out = exp3(&mut s, 500, None, &mut rng).unwrap();
        assert_eq!(out.total_steps, 500);
        assert_eq!(out.chosen_arm, 0);
        assert_eq!(out.termination, Termination::BudgetExhausted);
    }

    #[test]
    fn rejects_bad_params() {
        let mut rng = RngStream::new(2);
        let mut s = session(&[1.0, 0.0], UserParams::standard(), 2);
        let bad = Exp3Params {
            gamma: 0.1,
            eps: 1.5,
        };
        assert!(exp3(&mut s, 100, Some(bad), &mut rng).is_err());
    }
}
