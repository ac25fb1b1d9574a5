//! The pair of instances behind the `delta^(-1/alpha)` lower bound, and a
//! Monte-Carlo probe of how often a policy cannot tell them apart.
//!
//! The two instances differ only in arm 0's mean: `1 + eps - d` in `nu`
//! (so arm 1 is best) and `1 + eps` in `nu_prime` (so arm 0 is best). All
//! other arms sit at `-1/delta`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    bair, ceil_tolerant, default_t_max, exp3, track_and_stop, uniform_explore, BairOptions,
    Session, TrackAndStopParams, TranscriptEntry, UniformMode,
};
use crate::env::{BanditInstance, Environment, NoiseModel};
use crate::error::{Error, Result};
use crate::harness::AlgoKind;
use crate::rng::{Purpose, StreamKey};
use crate::user::{ExplorativeUser, UserParams};

/// `ceil(max(delta^(c - 1/alpha) / rho0, (2 / gap^2) ln(1 / (4 delta))))`.
pub fn n0(delta: f64, alpha: f64, c: f64, rho0: f64, gap: f64) -> Result<u64> {
    if !(c > 0.0 && c < 0.5) {
        return Err(Error::InvalidC(c));
    }
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::InvalidDelta {
            value: delta,
            range: "(0, 1/4)",
        });
    }
    if !(alpha > 0.0 && rho0 > 0.0 && gap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha, rho0 and gap must be positive (alpha = {alpha}, rho0 = {rho0}, gap = {gap})"
        )));
    }
    let first = delta.powf(c - 1.0 / alpha) / rho0;
    let second = 2.0 / (gap * gap) * (1.0 / (4.0 * delta)).ln();
    Ok(ceil_tolerant(first.max(second)) as u64)
}

/// Parameters the pair was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairParams {
    pub k: usize,
    pub delta: f64,
    pub alpha: f64,
    pub c: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstancePair {
    pub nu: BanditInstance,
    pub nu_prime: BanditInstance,
    pub n0: u64,
    pub d: f64,
    pub eps: f64,
    pub params: PairParams,
}

/// The separation `d` and the offset `eps` for budget `n0`.
pub fn construction_constants(k: usize, n0: u64, alpha: f64, rho0: f64, rho1: f64) -> (f64, f64) {
    let m = (n0 - k as u64 + 1) as f64;
    let n = n0 as f64;
    let d = (2.0 * alpha * (rho1 * n).ln()).sqrt() * (1.0 + 2.0 / m.sqrt())
        + 2.0 * ((2.0 * m).ln() / m).sqrt();
    let eps = (2.0 * alpha * (rho0 * n).ln() / m).sqrt();
    (d, eps)
}

pub fn hard_instance_pair(params: PairParams) -> Result<HardInstancePair> {
    let PairParams {
        k,
        delta,
        alpha,
        c,
        rho0,
        rho1,
        gap,
    } = params;
    if k < 2 {
        return Err(Error::TooFewArms(k));
    }
    if !(rho0 <= rho1) {
        return Err(Error::InvalidParameter(format!(
            "need rho0 <= rho1, got {rho0} > {rho1}"
        )));
    }
    let n0 = n0(delta, alpha, c, rho0, gap)?;
    if n0 <= k as u64 {
        return Err(Error::BudgetBelowK { n0, k });
    }
    let (d, eps) = construction_constants(k, n0, alpha, rho0, rho1);
    if !(d > eps) {
        return Err(Error::DegenerateConstruction { d, eps });
    }
    let mut nu = vec![-1.0 / delta; k];
    nu[0] = 1.0 + eps - d;
    nu[1] = 1.0;
    let mut nu_prime = nu.clone();
    nu_prime[0] = 1.0 + eps;
    Ok(HardInstancePair {
        nu: BanditInstance::new(nu)?,
        nu_prime: BanditInstance::new(nu_prime)?,
        n0,
        d,
        eps,
        params,
    })
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == n {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub n0: u64,
    pub d: f64,
    pub eps: f64,
    pub reps: u64,
    /// Frequency of "no arm but arm 1 accepted more than once within the
    /// first `n0` acceptances" on `nu`.
    pub freq_nu: f64,
    pub freq_nu_prime: f64,
    pub ci_nu: (f64, f64),
    pub ci_nu_prime: (f64, f64),
    /// Runs whose truncated binary transcripts coincide on the two instances.
    pub identical_transcripts: u64,
    /// Runs where the event holds on both instances.
    pub event_both: u64,
    /// Of those, runs whose transcripts coincide.
    pub event_both_identical: u64,
    /// Runs where arm 0's first reward on `nu_prime` fell below `1 + eps - d`.
    pub low_first_reward: u64,
    /// Whether the first `K` recommendations were accepted in every run.
    pub first_k_accepted: bool,
}

struct RunResult {
    prefix: Vec<TranscriptEntry>,
    event: bool,
    first_k_accepted: bool,
}

fn probe_run(
    instance: &BanditInstance,
    user: UserParams,
    algo: AlgoKind,
    delta: f64,
    n0: u64,
    key: &StreamKey,
) -> Result<RunResult> {
    let k = instance.num_arms();
    let env = Environment::new(instance.clone(), key, NoiseModel::Gaussian);
    let u = ExplorativeUser::new(user, k, key.stream(Purpose::UserNoise, 0));
    let mut session = Session::new(env, u)?;
    let mut rng = key.stream(Purpose::Policy, algo.id());
    // Policies are deterministic in their feedback, so running to completion
    // and cutting the transcript equals stopping at the n0-th acceptance.
    match algo {
        AlgoKind::Bair => {
            let opts = BairOptions {
                n1: Some(n0),
                ..Default::default()
            };
            bair(&mut session, delta, &opts)?;
        }
        AlgoKind::Uni => {
            uniform_explore(&mut session, 2 * n0, UniformMode::Random, &mut rng)?;
        }
        AlgoKind::Exp3 => {
            exp3(
                &mut session,
                (2 * n0).max(k as u64 * k as u64),
                None,
                &mut rng,
            )?;
        }
        AlgoKind::Ts => {
            let params = TrackAndStopParams::new(delta, default_t_max(k, delta, user.rho0())?);
            track_and_stop(&mut session, &params, &mut rng)?;
        }
    }
    let transcript = session.into_transcript().expect("recording");
    let prefix = transcript.prefix_with_acceptances(n0).to_vec();
    let mut accepted = vec![0u64; k];
    for e in &prefix {
        if e.decision.is_accept() {
            accepted[e.arm] += 1;
        }
    }
    let event = accepted
        .iter()
        .enumerate()
        .all(|(arm, &n)| arm == 1 || n <= 1);
    let first_k_accepted = prefix.iter().take(k).all(|e| e.decision.is_accept());
    Ok(RunResult {
        prefix,
        event,
        first_k_accepted,
    })
}

/// Runs `algo` against the user on both instances, `reps` times each.
///
/// Run `r` uses the same random streams on both instances, so every arm's
/// noise sequence is shared and arm 0's rewards differ by exactly `d`.
/// BAIR's first phase is given `n0` acceptances.
pub fn indistinguishability_probe(
    pair: &HardInstancePair,
    user: UserParams,
    algo: AlgoKind,
    reps: u64,
    seed: u64,
) -> Result<ProbeStats> {
    if reps < 100 {
        return Err(Error::TooFewReplications(reps as usize));
    }
    let delta = pair.params.delta;
    let threshold = 1.0 + pair.eps - pair.d;
    let results: Vec<(RunResult, RunResult, bool)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let key = StreamKey::new(seed, 0, r, algo.id());
            let a = probe_run(&pair.nu, user, algo, delta, pair.n0, &key)?;
            let b = probe_run(&pair.nu_prime, user, algo, delta, pair.n0, &key)?;
            let z = NoiseModel::Gaussian.draw(&mut key.stream(Purpose::Reward, 0));
            Ok((a, b, pair.nu_prime.means()[0] + z < threshold))
        })
        .collect::<Result<_>>()?;

    let count = |f: &dyn Fn(&(RunResult, RunResult, bool)) -> bool| {
        results.iter().filter(|x| f(x)).count() as u64
    };
    let hits_nu = count(&|x| x.0.event);
    let hits_nu_prime = count(&|x| x.1.event);
    Ok(ProbeStats {
        n0: pair.n0,
        d: pair.d,
        eps: pair.eps,
        reps,
        freq_nu: hits_nu as f64 / reps as f64,
        freq_nu_prime: hits_nu_prime as f64 / reps as f64,
        ci_nu: wilson_interval(hits_nu, reps),
        ci_nu_prime: wilson_interval(hits_nu_prime, reps),
        identical_transcripts: count(&|x| x.0.prefix == x.1.prefix),
        event_both: count(&|x| x.0.event && x.1.event),
        event_both_identical: count(&|x| x.0.event && x.1.event && x.0.prefix == x.1.prefix),
        low_first_reward: count(&|x| x.2),
        first_k_accepted: results
            .iter()
            .all(|x| x.0.first_k_accepted && x.1.first_k_accepted),
    })
}
