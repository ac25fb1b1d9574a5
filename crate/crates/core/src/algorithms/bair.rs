//! The two-phase BAIR policy.

use serde::{Deserialize, Serialize};

use super::{
    check_delta, default_m, default_n1, phase1_sweep, phase2_eliminate, AlgorithmOutcome,
    Phase1Output, Phase1Stop, Phase2Output, Session, StrikeRule, Termination,
};
use crate::error::Result;

/// Overrides for BAIR. `None` picks the default from the user's parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BairOptions {
    pub n1: Option<u64>,
    pub m: Option<u64>,
    #[serde(default)]
    pub phase1_stop: Phase1Stop,
    #[serde(default)]
    pub strikes: StrikeRule,
    /// Cap on Phase-2 steps; unbounded when `None`.
    pub max_steps: Option<u64>,
}

/// A BAIR run with both phases' details.
#[derive(Debug, Clone, PartialEq)]
pub struct BairRun {
    pub outcome: AlgorithmOutcome,
    pub phase1: Phase1Output,
    pub phase2: Phase2Output,
    pub n1: u64,
    pub m: u64,
}

/// Runs Phase 1 then Phase 2 on `session`.
///
/// `N1` defaults to `default_n1(K, delta, alpha, rho0)` and `m` to
/// `default_m(K, delta, noise_p)`, both read from the simulated user.
pub fn bair_detailed(session: &mut Session, delta: f64, opts: &BairOptions) -> Result<BairRun> {
    check_delta(delta)?;
    let k = session.num_arms();
    let params = *session.user().params();
    let n1 = match opts.n1 {
        Some(n) => n,
        None => default_n1(k, delta, params.alpha(), params.rho0())?,
    };
    let m = match opts.m {
        Some(m) => m,
        None => default_m(k, delta, params.noise_p())?,
    };

    let mark = session.mark();
    let phase1 = phase1_sweep(session, n1, opts.phase1_stop)?;
    let phase2 = phase2_eliminate(
        session,
        &phase1.accept_counts,
        m,
        opts.strikes,
        opts.max_steps,
    )?;
    let termination = if phase2.exhausted {
        Termination::BudgetExhausted
    } else {
        Termination::Identified
    };
    let outcome = session.outcome_since(
        &mark,
        phase2.survivor,
        termination,
        Some(phase1.total_steps),
    );
    Ok(BairRun {
        outcome,
        phase1,
        phase2,
        n1,
        m,
    })
}

pub fn bair(session: &mut Session, delta: f64, opts: &BairOptions) -> Result<AlgorithmOutcome> {
    bair_detailed(session, delta, opts).map(|r| r.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::testutil::session;
    use crate::user::{RhoPolicy, UserParams};

    #[test]
    fn identifies_easy_instance() {
        let mut s = session(&[1.0, 0.5], UserParams::standard(), 3);
        let run = bair_detailed(&mut s, 0.1, &BairOptions::default()).unwrap();
        assert_eq!(run.n1, 40);
        assert_eq!(run.m, 1);
        assert_eq!(run.outcome.termination, Termination::Identified);
        assert_eq!(run.outcome.phase_boundary, Some(run.phase1.total_steps));
        assert_eq!(
            run.outcome.total_steps,
            run.phase1.total_steps + run.phase2.steps
        );
        let accepted: u64 = run.outcome.per_arm_accepts.iter().sum();
        assert_eq!(
            accepted + run.outcome.total_rejections,
            run.outcome.total_steps
        );
        assert_eq!(run.phase2.rejections, 1);
    }

    #[test]
    fn overrides_are_used() {
        let mut s = session(&[1.0, 0.5, 0.0], UserParams::standard(), 3);
        let opts = BairOptions {
            n1: Some(3),
            m: Some(2),
            ..Default::default()
        };
        let run = bair_detailed(&mut s, 0.1, &opts).unwrap();
        assert_eq!((run.n1, run.m), (3, 2));
        assert_eq!(run.phase1.accept_counts.iter().sum::<u64>(), 3);
    }

    #[test]
    fn constant_rho_shrinks_n1() {
        let params = UserParams::new(1.0, RhoPolicy::Constant { value: 2.0 }, 0.0).unwrap();
        let mut s = session(&[1.0, 0.5], params, 3);
        let run = bair_detailed(&mut s, 0.1, &BairOptions::default()).unwrap();
        assert_eq!(run.n1, 20);
    }

    #[test]
    fn rejects_bad_delta() {
        let mut s = session(&[1.0, 0.5], UserParams::standard(), 3);
        assert!(bair(&mut s, 0.0, &BairOptions::default()).is_err());
        assert!(bair(&mut s, 1.0, &BairOptions::default()).is_err());
    }

    #[test]
    fn same_seed_same_transcript() {
        let run = |seed| {
            let mut s = session(&[0.3, 0.1, -0.2, 0.0], UserParams::standard(), seed);
            bair(&mut s, 0.05, &BairOptions::default()).unwrap();
            s.into_transcript().unwrap()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
