//! The explorative user.
//!
//! The user keeps a confidence interval per arm built from the rewards of
//! the recommendations it accepted, and rejects a recommended arm exactly
//! when some other arm's lower bound reaches the recommended arm's upper
//! bound. The system only ever sees the resulting accept/reject verdict.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// How the user's trust multiplier evolves with the interaction history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoPolicy {
    Constant {
        value: f64,
    },
    /// `1 + n(t)/t`, the acceptance rate shifted into `[1, 2]`.
    LinearAcceptance,
}

impl RhoPolicy {
    /// `(rho0, rho1)`: the range every evaluation lies in.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            RhoPolicy::Constant { value } => (value, value),
            RhoPolicy::LinearAcceptance => (1.0, 2.0),
        }
    }

    /// Evaluates the policy at step `t >= 1` with `n_total` prior acceptances.
    pub fn evaluate(&self, t: u64, n_total: u64) -> f64 {
        match *self {
            RhoPolicy::Constant { value } => value,
            RhoPolicy::LinearAcceptance => rho_linear(t, n_total),
        }
    }
}

/// `1 + n/t` for the current step `t >= 1` and the acceptances before it.
pub fn rho_linear(t: u64, n_total: u64) -> f64 {
    debug_assert!(t >= 1 && n_total <= t);
    1.0 + n_total as f64 / t.max(1) as f64
}

/// Confidence-width driver `max{0, 2 alpha ln(rho n)}`, taken as 0 when no
/// recommendation has been accepted yet.
pub fn gamma(n_total: u64, rho: f64, alpha: f64) -> f64 {
    if n_total == 0 {
        return 0.0;
    }
    (2.0 * alpha * (rho * n_total as f64).ln()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserParams {
    alpha: f64,
    rho: RhoPolicy,
    noise_p: f64,
}

impl UserParams {
    pub fn new(alpha: f64, rho: RhoPolicy, noise_p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidUserParams(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let (rho0, rho1) = rho.bounds();
        if !(rho0 > 0.0 && rho0 <= rho1 && rho1.is_finite()) {
            return Err(Error::InvalidUserParams(format!(
                "rho range [{rho0}, {rho1}] must satisfy 0 < rho0 <= rho1 < inf"
            )));
        }
        if !(0.0..1.0).contains(&noise_p) {
            return Err(Error::InvalidUserParams(format!(
                "noise probability must lie in [0, 1), got {noise_p}"
            )));
        }
        Ok(Self {
            alpha,
            rho,
            noise_p,
        })
    }

    /// `alpha = 1`, `rho_t = 1 + n(t)/t`, no decision noise.
    pub fn standard() -> Self {
        Self::new(1.0, RhoPolicy::LinearAcceptance, 0.0).expect("valid defaults")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho_policy(&self) -> RhoPolicy {
        self.rho
    }

    pub fn rho0(&self) -> f64 {
        self.rho.bounds().0
    }

    pub fn rho1(&self) -> f64 {
        self.rho.bounds().1
    }

    pub fn noise_p(&self) -> f64 {
        self.noise_p
    }

    /// Same user with a different decision-noise probability.
    pub fn with_noise(self, noise_p: f64) -> Result<Self> {
        Self::new(self.alpha, self.rho, noise_p)
    }
}

/// The user's private running statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateSnapshot", into = "StateSnapshot")]
pub struct UserState {
    t: u64,
    accept_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    n_total: u64,
}

/// JSON form `{t, accept_counts, reward_sums}`.
#[derive(Serialize, Deserialize)]
struct StateSnapshot {
    t: u64,
    accept_counts: Vec<u64>,
    reward_sums: Vec<f64>,
}

impl TryFrom<StateSnapshot> for UserState {
    type Error = Error;

    fn try_from(s: StateSnapshot) -> Result<Self> {
        let n_total: u64 = s.accept_counts.iter().sum();
        if s.accept_counts.len() != s.reward_sums.len() || n_total > s.t {
            return Err(Error::InvalidParameter(
                "inconsistent user state snapshot".into(),
            ));
        }
        Ok(Self {
            t: s.t,
            accept_counts: s.accept_counts,
            reward_sums: s.reward_sums,
            n_total,
        })
    }
}

impl From<UserState> for StateSnapshot {
    fn from(s: UserState) -> Self {
        Self {
            t: s.t,
            accept_counts: s.accept_counts,
            reward_sums: s.reward_sums,
        }
    }
}

impl UserState {
    pub fn new(k: usize) -> Self {
        Self {
            t: 0,
            accept_counts: vec![0; k],
            reward_sums: vec![0.0; k],
            n_total: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.accept_counts.len()
    }

    /// Interactions so far, rejections included.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn accept_counts(&self) -> &[u64] {
        &self.accept_counts
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    pub fn empirical_mean(&self, arm: usize) -> Option<f64> {
        match self.accept_counts.get(arm) {
            Some(&n) if n > 0 => Some(self.reward_sums[arm] / n as f64),
            _ => None,
        }
    }

    /// Highest empirical mean over visited arms (`-inf` if none).
    pub fn max_empirical_mean(&self) -> f64 {
        (0..self.num_arms())
            .filter_map(|i| self.empirical_mean(i))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm < self.num_arms() {
            Ok(())
        } else {
            Err(Error::ArmOutOfRange {
                arm,
                k: self.num_arms(),
            })
        }
    }

    /// Gamma for the decision about to be made at step `t + 1`.
    pub fn current_gamma(&self, params: &UserParams) -> f64 {
        let rho = params.rho.evaluate(self.t + 1, self.n_total);
        gamma(self.n_total, rho, params.alpha)
    }

    fn interval_with(&self, arm: usize, gamma: f64) -> (f64, f64) {
        match self.accept_counts[arm] {
            0 => (f64::NEG_INFINITY, f64::INFINITY),
            n => {
                let mean = self.reward_sums[arm] / n as f64;
                let half = (gamma / n as f64).sqrt();
                (mean - half, mean + half)
            }
        }
    }

    /// Applies one interaction. A reward must accompany exactly the accepted
    /// recommendations.
    pub fn record_interaction(
        &mut self,
        arm: usize,
        verdict: Verdict,
        reward: Option<f64>,
    ) -> Result<()> {
        self.check_arm(arm)?;
        match (verdict, reward) {
            (Verdict::Accept, None) => return Err(Error::RewardMissing),
            (Verdict::Reject, Some(_)) => return Err(Error::RewardUnexpected),
            (Verdict::Accept, Some(r)) => {
                self.accept_counts[arm] += 1;
                self.reward_sums[arm] += r;
                self.n_total += 1;
            }
            (Verdict::Reject, None) => {}
        }
        self.t += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "A")]
    Accept,
    #[serde(rename = "R")]
    Reject,
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    /// The verdict came from a coin flip rather than the interval rule.
    pub via_noise: bool,
}

/// `(lcb, ucb)` of `arm` under the current state; `(-inf, +inf)` for an arm
/// that was never accepted.
pub fn confidence_interval(
    state: &UserState,
    params: &UserParams,
    arm: usize,
) -> Result<(f64, f64)> {
    state.check_arm(arm)?;
    Ok(state.interval_with(arm, state.current_gamma(params)))
}

/// Rejects iff some other arm's lcb is at least the recommended arm's ucb.
pub fn decide(state: &UserState, params: &UserParams, arm: usize) -> Result<Decision> {
    state.check_arm(arm)?;
    let gamma = state.current_gamma(params);
    Ok(Decision {
        verdict: rule_verdict(state, arm, gamma),
        via_noise: false,
    })
}

fn rule_verdict(state: &UserState, arm: usize, gamma: f64) -> Verdict {
    let (_, ucb) = state.interval_with(arm, gamma);
    let dominated = (0..state.num_arms())
        .filter(|&j| j != arm)
        .any(|j| state.interval_with(j, gamma).0 >= ucb);
    if dominated {
        Verdict::Reject
    } else {
        Verdict::Accept
    }
}

/// With probability `noise_p` the user flips a fair coin instead of applying
/// the interval rule.
pub fn decide_noisy<R: Rng + ?Sized>(
    state: &UserState,
    params: &UserParams,
    arm: usize,
    rng: &mut R,
) -> Result<Decision> {
    decide_with_noise(state, params, arm, params.noise_p, rng)
}

/// [`decide_noisy`] with an explicit flip probability `p` in `[0, 1]`; `p = 1`
/// is a pure coin flip, which a configured user cannot be.
pub fn decide_with_noise<R: Rng + ?Sized>(
    state: &UserState,
    params: &UserParams,
    arm: usize,
    p: f64,
    rng: &mut R,
) -> Result<Decision> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidUserParams(format!(
            "noise probability must lie in [0, 1], got {p}"
        )));
    }
    let rule = decide(state, params, arm)?;
    if p > 0.0 && rng.random::<f64>() < p {
        let verdict = if rng.random::<bool>() {
            Verdict::Accept
        } else {
            Verdict::Reject
        };
        return Ok(Decision {
            verdict,
            via_noise: true,
        });
    }
    Ok(rule)
}

/// What one step of the protocol produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub verdict: Verdict,
    pub via_noise: bool,
    /// Gamma in force when the decision was made.
    pub gamma: f64,
    /// Realized reward, private to the user; present on acceptance only.
    pub reward: Option<f64>,
}

/// A user with its parameters, state and decision-noise stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorativeUser {
    params: UserParams,
    state: UserState,
    noise: RngStream,
}

impl ExplorativeUser {
    pub fn new(params: UserParams, k: usize, noise: RngStream) -> Self {
        Self {
            params,
            state: UserState::new(k),
            noise,
        }
    }

    pub fn params(&self) -> &UserParams {
        &self.params
    }

    pub fn state(&self) -> &UserState {
        &self.state
    }

    /// Decides on `arm`, consumes it from `env` if accepted, and updates the
    /// state.
    pub fn respond(&mut self, arm: usize, env: &mut Environment) -> Result<Response> {
        let gamma = self.state.current_gamma(&self.params);
        let decision = decide_noisy(&self.state, &self.params, arm, &mut self.noise)?;
        let reward = match decision.verdict {
            Verdict::Accept => Some(env.pull(arm)?),
            Verdict::Reject => None,
        };
        self.state
            .record_interaction(arm, decision.verdict, reward)?;
        Ok(Response {
            verdict: decision.verdict,
            via_noise: decision.via_noise,
            gamma,
            reward,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with(arms: &[(u64, f64)]) -> UserState {
        let n_total = arms.iter().map(|a| a.0).sum();
        UserState {
            t: n_total,
            accept_counts: arms.iter().map(|a| a.0).collect(),
            reward_sums: arms.iter().map(|a| a.0 as f64 * a.1).collect(),
            n_total,
        }
    }

    fn constant(value: f64) -> UserParams {
        UserParams::new(1.0, RhoPolicy::Constant { value }, 0.0).unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(1, 1.0, 1.0), 0.0);
        let expected = 4.158_883_083_359_671_5;
        assert!((gamma(8, 1.0, 1.0) - expected).abs() / expected < 1e-12);
        assert_eq!(gamma(1, 0.5, 1.0), 0.0);
        assert_eq!(gamma(0, 2.0, 3.0), 0.0);
    }

    #[test]
    fn rho_linear_examples() {
        assert_eq!(rho_linear(10, 5), 1.5);
        assert_eq!(rho_linear(7, 7), 2.0);
        assert_eq!(rho_linear(1, 0), 1.0);
    }

    #[test]
    fn interval_examples() {
        // n_i = 4, mean 1.0, gamma 4: constant rho chosen so that
        // 2 ln(rho * n) = 4 with n = 4 total acceptances.
        let state = state_with(&[(4, 1.0), (0, 0.0)]);
        let rho = (2.0f64).exp() / 4.0;
        let params = constant(rho);
        let (lo, hi) = confidence_interval(&state, &params, 0).unwrap();
        assert!((lo - 0.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);

        let (lo, hi) = confidence_interval(&state, &params, 1).unwrap();
        assert_eq!((lo, hi), (f64::NEG_INFINITY, f64::INFINITY));

        // gamma = 0 gives a point interval
        let state = state_with(&[(1, 0.3), (0, 0.0)]);
        let (lo, hi) = confidence_interval(&state, &constant(1.0), 0).unwrap();
        assert_eq!((lo, hi), (0.3, 0.3));

        assert!(confidence_interval(&state, &constant(1.0), 2).is_err());
    }

    #[test]
    fn decide_examples() {
        // CIs arm0 = (0.5, 1.0), arm1 = (0.0, 0.4): gamma = 1 with 16 and 25
        // acceptances gives half-widths 0.25 and 0.2.
        let state = state_with(&[(16, 0.75), (25, 0.2)]);
        let rho = (0.5f64).exp() / 41.0;
        let params = constant(rho);
        assert!((state.current_gamma(&params) - 1.0).abs() < 1e-12);
        let ci0 = confidence_interval(&state, &params, 0).unwrap();
        let ci1 = confidence_interval(&state, &params, 1).unwrap();
        assert!((ci0.0 - 0.5).abs() < 1e-12 && (ci0.1 - 1.0).abs() < 1e-12);
        assert!((ci1.0 - 0.0).abs() < 1e-12 && (ci1.1 - 0.4).abs() < 1e-12);
        assert_eq!(decide(&state, &params, 1).unwrap().verdict, Verdict::Reject);
        assert_eq!(decide(&state, &params, 0).unwrap().verdict, Verdict::Accept);

        let fresh = UserState::new(3);
        for arm in 0..3 {
            assert_eq!(
                decide(&fresh, &constant(1.0), arm).unwrap().verdict,
                Verdict::Accept
            );
        }
        assert!(decide(&fresh, &constant(1.0), 3).is_err());
    }

    #[test]
    fn tie_rejects_under_point_intervals() {
        let state = state_with(&[(1, 0.3), (1, 0.3)]);
        // n_total = 2, rho = 0.5 -> gamma = max(0, 2 ln 1) = 0
        let params = constant(0.5);
        assert_eq!(state.current_gamma(&params), 0.0);
        assert_eq!(decide(&state, &params, 0).unwrap().verdict, Verdict::Reject);
    }

    #[test]
    fn unvisited_arm_is_never_rejected() {
        let state = state_with(&[(100, 5.0), (100, 4.0), (0, 0.0)]);
        assert_eq!(
            decide(&state, &constant(1.0), 2).unwrap().verdict,
            Verdict::Accept
        );
    }

    #[test]
    fn record_interaction_bookkeeping() {
        let mut s = UserState::new(2);
        s.record_interaction(0, Verdict::Accept, Some(0.7)).unwrap();
        assert_eq!(s.accept_counts(), &[1, 0]);
        assert_eq!(s.empirical_mean(0), Some(0.7));
        assert_eq!((s.t(), s.n_total()), (1, 1));

        s.record_interaction(1, Verdict::Reject, None).unwrap();
        assert_eq!(s.accept_counts(), &[1, 0]);
        assert_eq!((s.t(), s.n_total()), (2, 1));

        assert_eq!(
            s.record_interaction(1, Verdict::Accept, None),
            Err(Error::RewardMissing)
        );
        assert_eq!(
            s.record_interaction(1, Verdict::Reject, Some(1.0)),
            Err(Error::RewardUnexpected)
        );
        assert_eq!((s.t(), s.n_total()), (2, 1));
    }

    #[test]
    fn noiseless_noisy_decide_matches_rule() {
        let state = state_with(&[(30, 1.0), (30, 0.0), (5, 0.4)]);
        let params = UserParams::standard();
        let mut rng = RngStream::new(3);
        for arm in 0..3 {
            for _ in 0..50 {
                assert_eq!(
                    decide_noisy(&state, &params, arm, &mut rng).unwrap(),
                    decide(&state, &params, arm).unwrap()
                );
            }
        }
    }

    #[test]
    fn noisy_decision_frequencies() {
        let state = state_with(&[(200, 1.0), (200, 0.0)]);
        let base = UserParams::standard();
        // arm 1 is rejected by the rule
        assert_eq!(decide(&state, &base, 1).unwrap().verdict, Verdict::Reject);
        let n = 100_000;

        let full = base.with_noise(0.999_999).unwrap();
        let mut rng = RngStream::new(17);
        let accepts = (0..n)
            .filter(|_| {
                decide_noisy(&state, &full, 1, &mut rng)
                    .unwrap()
                    .verdict
                    .is_accept()
            })
            .count();
        assert!((accepts as f64 / n as f64 - 0.5).abs() < 0.01);

        let p10 = base.with_noise(0.1).unwrap();
        let agree = (0..n)
            .filter(|_| decide_noisy(&state, &p10, 1, &mut rng).unwrap().verdict == Verdict::Reject)
            .count();
        assert!((agree as f64 / n as f64 - 0.95).abs() < 0.01);
    }

    #[test]
    fn params_validation() {
        assert!(UserParams::new(0.0, RhoPolicy::LinearAcceptance, 0.0).is_err());
        assert!(UserParams::new(1.0, RhoPolicy::Constant { value: 0.0 }, 0.0).is_err());
        assert!(UserParams::new(1.0, RhoPolicy::LinearAcceptance, 1.0).is_err());
        let p = UserParams::standard();
        assert_eq!((p.rho0(), p.rho1()), (1.0, 2.0));
    }

    #[test]
    fn snapshot_json_shape() {
        let mut s = UserState::new(2);
        s.record_interaction(1, Verdict::Accept, Some(0.5)).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"t": 1, "accept_counts": [0, 1], "reward_sums": [0.0, 0.5]})
        );
        let back: UserState = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
    }
}
