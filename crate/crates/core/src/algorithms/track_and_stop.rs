//! Track-and-Stop with a Chernoff stopping rule, on Bernoulli feedback
//! (accept = 1, reject = 0).
//!
//! Allocation uses D-tracking toward the optimal weights of the Bernoulli
//! pure-exploration problem, with forced exploration of any arm pulled fewer
//! than `sqrt(t) - K/2` times. While several arms share the highest empirical
//! mean, one of them is pulled at random instead. The run stops once the
//! generalized likelihood ratio exceeds `ln(2 t (K-1) / delta)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_count, check_delta, default_n1, AlgorithmOutcome, Session, Termination};
use crate::error::{Error, Result};

const CLAMP: f64 = 1e-6;

fn clamp(p: f64) -> f64 {
    p.clamp(CLAMP, 1.0 - CLAMP)
}

/// `KL(Bern(p) || Bern(q))`, both arguments clamped away from 0 and 1.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let (p, q) = (clamp(p), clamp(q));
    let v = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    v.max(0.0)
}

/// Empirical best arm and the Chernoff statistic
/// `min_b N_a d(mu_a, m) + N_b d(mu_b, m)` with `m` the pooled mean.
///
/// Every arm must have been pulled at least once.
pub fn glr_statistic(pulls: &[u64], means: &[f64]) -> (usize, f64) {
    let best = argmax_f64(means);
    let (na, ma) = (pulls[best] as f64, means[best]);
    let z = (0..means.len())
        .filter(|&b| b != best)
        .map(|b| {
            let (nb, mb) = (pulls[b] as f64, means[b]);
            let pooled = (na * ma + nb * mb) / (na + nb);
            na * bernoulli_kl(ma, pooled) + nb * bernoulli_kl(mb, pooled)
        })
        .fold(f64::INFINITY, f64::min);
    (best, z)
}

fn argmax_f64(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Solves for the optimal allocation, remembering the last solution to
/// narrow the next search.
#[derive(Debug, Clone, Default)]
pub struct WeightSolver {
    last_ratio: Option<f64>,
}

impl WeightSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Optimal weights for Bernoulli means `mu`. Uniform when the two
    /// largest means tie.
    pub fn solve(&mut self, mu: &[f64]) -> Vec<f64> {
        let k = mu.len();
        let mu: Vec<f64> = mu.iter().map(|&m| clamp(m)).collect();
        let best = argmax_f64(&mu);
        let others: Vec<usize> = (0..k).filter(|&b| b != best).collect();
        let top = mu[best];
        let y_max = others
            .iter()
            .map(|&b| bernoulli_kl(top, mu[b]))
            .fold(f64::INFINITY, f64::min);
        if !(y_max > 0.0) {
            return vec![1.0 / k as f64; k];
        }

        let mut xs = vec![0.0; others.len()];
        let f = |ratio: f64, xs: &mut [f64]| -> f64 {
            let y = ratio * y_max;
            others
                .iter()
                .zip(xs.iter_mut())
                .map(|(&b, x)| {
                    *x = invert_g(top, mu[b], y, *x);
                    let m = (top + *x * mu[b]) / (1.0 + *x);
                    let den = bernoulli_kl(mu[b], m);
                    if den > 0.0 {
                        bernoulli_kl(top, m) / den
                    } else {
                        f64::INFINITY
                    }
                })
                .sum()
        };

        // F is increasing in y with F(0) = 0 and F -> inf at y_max.
        let (mut lo, mut hi) = (0.0, 1.0);
        if let Some(r) = self.last_ratio {
            let (a, b) = (r * 0.8, 1.0 - (1.0 - r) * 0.8);
            if f(a, &mut xs) < 1.0 {
                lo = a;
            }
            xs.iter_mut().for_each(|x| *x = 0.0);
            if f(b, &mut xs) > 1.0 {
                hi = b;
            }
        }
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            xs.iter_mut().for_each(|x| *x = 0.0);
            if f(mid, &mut xs) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let ratio = 0.5 * (lo + hi);
        self.last_ratio = Some(ratio);
        xs.iter_mut().for_each(|x| *x = 0.0);
        f(ratio, &mut xs);

        let total = 1.0 + xs.iter().sum::<f64>();
        let mut w = vec![0.0; k];
        w[best] = 1.0 / total;
        for (&b, x) in others.iter().zip(&xs) {
            w[b] = x / total;
        }
        w
    }
}

/// `g(x) = d(mu_a, m) + x d(mu_b, m)` with `m = (mu_a + x mu_b) / (1 + x)`.
fn g(mu_a: f64, mu_b: f64, x: f64) -> (f64, f64) {
    let m = (mu_a + x * mu_b) / (1.0 + x);
    let gp = bernoulli_kl(mu_b, m);
    (bernoulli_kl(mu_a, m) + x * gp, gp)
}

/// Solves `g(x) = y` by Newton from below. `g` is concave and increasing,
/// so iterates stay below the root and rise monotonically.
fn invert_g(mu_a: f64, mu_b: f64, y: f64, start: f64) -> f64 {
    let mut x = start.max(0.0);
    if y <= 0.0 {
        return 0.0;
    }
    if g(mu_a, mu_b, x).0 > y {
        x = 0.0;
    }
    for _ in 0..200 {
        let (v, slope) = g(mu_a, mu_b, x);
        if y - v <= 1e-12 * y || slope <= 0.0 {
            break;
        }
        let next = x + (y - v) / slope;
        if !next.is_finite() || next - x <= 1e-14 * x.max(1.0) {
            x = if next.is_finite() { next } else { x };
            break;
        }
        x = next;
    }
    x
}

/// One-shot optimal weights.
pub fn optimal_weights(mu: &[f64]) -> Vec<f64> {
    WeightSolver::new().solve(mu)
}

/// `200 * N1(K, delta, alpha = 1, rho0)`.
pub fn default_t_max(k: usize, delta: f64, rho0: f64) -> Result<u64> {
    Ok(200 * default_n1(k, delta, 1.0, rho0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackAndStopParams {
    pub delta: f64,
    pub t_max: u64,
    /// Weights are recomputed once `t` has grown by this fraction since the
    /// last solve; 0 recomputes every step.
    pub refresh: f64,
}

impl TrackAndStopParams {
    pub fn new(delta: f64, t_max: u64) -> Self {
        Self {
            delta,
            t_max,
            refresh: 0.01,
        }
    }
}

/// Core loop over an arbitrary binary feedback source.
///
/// Returns `(chosen arm, steps, pulls, successes, termination)`.
pub(crate) fn track_and_stop_core<F, R>(
    k: usize,
    params: &TrackAndStopParams,
    rng: &mut R,
    mut feedback: F,
) -> Result<(usize, u64, Vec<u64>, Vec<u64>, Termination)>
where
    F: FnMut(usize) -> Result<bool>,
    R: Rng + ?Sized,
{
    check_delta(params.delta)?;
    if k < 2 {
        return Err(Error::TooFewArms(k));
    }
    if params.t_max == 0 {
        return Err(Error::InvalidBudget);
    }
    let mut pulls = vec![0u64; k];
    let mut wins = vec![0u64; k];
    let mut solver = WeightSolver::new();
    let mut weights = vec![1.0 / k as f64; k];
    let mut solved_at = 0u64;
    let mut t = 0u64;
    let threshold = |t: u64| (2.0 * t as f64 * (k - 1) as f64 / params.delta).ln();

    while t < params.t_max {
        let leaders = if pulls.iter().all(|&n| n > 0) {
            tied_leaders(&pulls, &wins)
        } else {
            Vec::new()
        };
        let arm = if let Some(a) = pulls.iter().position(|&n| n == 0) {
            a
        } else if leaders.len() > 1 {
            leaders[rng.random_range(0..leaders.len())]
        } else {
            let tf = (t + 1) as f64;
            let floor = tf.sqrt() - k as f64 / 2.0;
            let starved = (0..k)
                .filter(|&a| (pulls[a] as f64) < floor)
                .min_by_key(|&a| (pulls[a], a));
            match starved {
                Some(a) => a,
                None => {
                    if solved_at == 0 || t as f64 >= solved_at as f64 * (1.0 + params.refresh) {
                        let mu: Vec<f64> =
                            (0..k).map(|a| wins[a] as f64 / pulls[a] as f64).collect();
                        weights = solver.solve(&mu);
                        solved_at = t.max(1);
                    }
                    (0..k)
                        .map(|a| (tf * weights[a] - pulls[a] as f64, a))
                        .fold(
                            (f64::NEG_INFINITY, 0),
                            |best, c| if c.0 > best.0 { c } else { best },
                        )
                        .1
                }
            }
        };
        let accepted = feedback(arm)?;
        t += 1;
        pulls[arm] += 1;
        wins[arm] += accepted as u64;

        if pulls.iter().all(|&n| n > 0) {
            let mu: Vec<f64> = (0..k).map(|a| wins[a] as f64 / pulls[a] as f64).collect();
            let (best, z) = glr_statistic(&pulls, &mu);
            if z >= threshold(t) {
                return Ok((best, t, pulls, wins, Termination::Identified));
            }
        }
    }
    let chosen = argmax_count(&wins);
    Ok((chosen, t, pulls, wins, Termination::BudgetExhausted))
}

/// Arms sharing the highest empirical mean, compared exactly as fractions.
fn tied_leaders(pulls: &[u64], wins: &[u64]) -> Vec<usize> {
    let beats = |a: usize, b: usize| {
        wins[a] as u128 * pulls[b] as u128 > wins[b] as u128 * pulls[a] as u128
    };
    let mut top = 0;
    for a in 1..pulls.len() {
        if beats(a, top) {
            top = a;
        }
    }
    (0..pulls.len()).filter(|&a| !beats(top, a)).collect()
}

/// Runs Track-and-Stop on `session` until the Chernoff rule fires or
/// `t_max` recommendations have been made. `rng` breaks ties among leaders.
pub fn track_and_stop<R: Rng + ?Sized>(
    session: &mut Session,
    params: &TrackAndStopParams,
    rng: &mut R,
) -> Result<AlgorithmOutcome> {
    let k = session.num_arms();
    let mark = session.mark();
    let (chosen, _, _, _, termination) = track_and_stop_core(k, params, rng, |arm| {
        Ok(session.interact(arm)?.verdict.is_accept())
    })?;
    Ok(session.outcome_since(&mark, chosen, termination, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::testutil::session;
    use crate::rng::RngStream;
    use crate::user::UserParams;

    #[test]
    fn kl_basics() {
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        let v = bernoulli_kl(0.5, 0.25);
        let exact = 0.5 * (2.0f64).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((v - exact).abs() < 1e-12);
        assert!(bernoulli_kl(1.0, 0.0).is_finite());
    }

    #[test]
    fn glr_of_identical_arms_is_zero() {
        let (_, z) = glr_statistic(&[10, 10], &[0.4, 0.4]);
        assert!(z.abs() < 1e-12);
        let (best, z) = glr_statistic(&[50, 50, 50], &[0.2, 0.9, 0.5]);
        assert_eq!(best, 1);
        assert!(z > 5.0);
    }

    fn objective(mu: &[f64], w: &[f64]) -> f64 {
        let a = argmax_f64(mu);
        (0..mu.len())
            .filter(|&b| b != a)
            .map(|b| {
                let m = (w[a] * mu[a] + w[b] * mu[b]) / (w[a] + w[b]);
                w[a] * bernoulli_kl(mu[a], m) + w[b] * bernoulli_kl(mu[b], m)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn weights_match_simplex_grid_search() {
        for mu in [[0.7, 0.5, 0.3], [0.4, 0.9, 0.85], [0.2, 0.1, 0.6]] {
            let w = optimal_weights(&mu);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let n = 400;
            let mut grid_best = (0.0, [0.0; 3]);
            for i in 1..n {
                for j in 1..(n - i) {
                    let g = [
                        i as f64 / n as f64,
                        j as f64 / n as f64,
                        (n - i - j) as f64 / n as f64,
                    ];
                    let v = objective(&mu, &g);
                    if v > grid_best.0 {
                        grid_best = (v, g);
                    }
                }
            }
            let ours = objective(&mu, &w);
            assert!(
                ours >= grid_best.0 * (1.0 - 1e-6),
                "{mu:?}: {ours} < {}",
                grid_best.0
            );
            for a in 0..3 {
                assert!(
                    (w[a] - grid_best.1[a]).abs() < 0.02,
                    "{mu:?}: {w:?} vs {:?}",
                    grid_best.1
                );
            }
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_solve() {
        let mut solver = WeightSolver::new();
        let first = [0.6, 0.5, 0.45, 0.2];
        solver.solve(&first);
        let second = [0.62, 0.48, 0.46, 0.25];
        let warm = solver.solve(&second);
        let cold = optimal_weights(&second);
        for (a, b) in warm.iter().zip(&cold) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn tied_top_means_give_uniform_weights() {
        assert_eq!(optimal_weights(&[0.5, 0.5, 0.1]), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn forced_feedback_stops() {
        let params = TrackAndStopParams::new(0.01, 100_000);
        let (chosen, steps, pulls, _, term) =
            track_and_stop_core(2, &params, &mut RngStream::new(1), |arm| Ok(arm == 0)).unwrap();
        assert_eq!(term, Termination::Identified);
        assert_eq!(chosen, 0);
        assert!(steps < 100);
        assert_eq!(pulls.iter().sum::<u64>(), steps);
    }

    #[test]
    fn indistinguishable_arms_exhaust_budget() {
        let params = TrackAndStopParams::new(0.1, 500);
        let (_, steps, _, _, term) =
            track_and_stop_core(3, &params, &mut RngStream::new(1), |_| Ok(true)).unwrap();
        assert_eq!(term, Termination::BudgetExhausted);
        assert_eq!(steps, 500);
    }

    #[test]
    fn ties_at_the_top_pull_a_leader() {
        assert_eq!(tied_leaders(&[2, 4, 3], &[2, 4, 1]), vec![0, 1]);
        assert_eq!(tied_leaders(&[2, 4, 3], &[1, 4, 1]), vec![1]);
        // arm 2 is rejected on its second pull and never pulled again while
        // the other two stay tied at a perfect record
        let params = TrackAndStopParams::new(0.1, 300);
        let mut seen = [0u64; 3];
        let mut rng = RngStream::new(5);
        track_and_stop_core(3, &params, &mut rng, |arm| {
            seen[arm] += 1;
            Ok(arm != 2 || seen[2] == 1)
        })
        .unwrap();
        assert_eq!(seen[2], 2);
        assert!(seen[0] > 100 && seen[1] > 100);
    }

    #[test]
    fn default_budget() {
        assert_eq!(default_t_max(2, 0.1, 1.0).unwrap(), 8000);
    }

    #[test]
    fn runs_on_a_session() {
        let mut s = session(&[1.0, -1.0], UserParams::standard(), 6);
        let out = track_and_stop(
            &mut s,
            &TrackAndStopParams::new(0.1, 8000),
            &mut RngStream::new(6),
        )
        .unwrap();
        assert_eq!(out.total_steps, s.steps());
        assert!(out.phase_boundary.is_none());
    }
}
