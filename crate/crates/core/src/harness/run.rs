use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{summarize, AlgoKind, BudgetMatching, CellSummary, ExperimentCell};
use crate::algorithms::{
    bair, default_m, default_t_max, exp3, phase1_sweep, phase2_eliminate, track_and_stop,
    uniform_explore, AlgorithmOutcome, BairOptions, Session, Termination, TrackAndStopParams,
};
use crate::env::{generate_instance_batch, BanditInstance, Environment, NoiseModel};
use crate::error::{Error, Result};
use crate::rng::{Purpose, StreamKey};
use crate::user::ExplorativeUser;

/// One policy run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub instance: u64,
    pub replication: u64,
    pub algo: AlgoKind,
    pub seed: u64,
    pub outcome: AlgorithmOutcome,
    pub success: bool,
}

impl ReplicationRecord {
    fn new(
        cell: &ExperimentCell,
        instance: &BanditInstance,
        index: u64,
        replication: u64,
        algo: AlgoKind,
        outcome: AlgorithmOutcome,
    ) -> Self {
        Self {
            instance: index,
            replication,
            algo,
            seed: cell.seed,
            success: outcome.chosen_arm == instance.best_arm(),
            outcome,
        }
    }
}

fn stream_key(cell: &ExperimentCell, index: u64, replication: u64, algo: AlgoKind) -> StreamKey {
    let id = if cell.coupled { 0 } else { algo.id() };
    StreamKey::new(cell.seed, index, replication, id)
}

fn new_session(
    cell: &ExperimentCell,
    instance: &BanditInstance,
    key: &StreamKey,
) -> Result<Session> {
    if instance.num_arms() != cell.k {
        return Err(Error::ArmCountMismatch {
            cell: cell.k,
            instance: instance.num_arms(),
        });
    }
    let params = cell.user_params()?;
    let env = Environment::new(instance.clone(), key, NoiseModel::Gaussian);
    let user = ExplorativeUser::new(params, cell.k, key.stream(Purpose::UserNoise, 0));
    Ok(Session::new(env, user)?.without_transcript())
}

fn bair_options(cell: &ExperimentCell) -> Result<BairOptions> {
    let params = cell.user_params()?;
    let n1 =
        cell.n1
            .unwrap_or_default()
            .resolve(cell.k, cell.delta, params.alpha(), params.rho0())?;
    Ok(BairOptions {
        n1: Some(n1),
        m: cell.m,
        phase1_stop: cell.phase1_stop,
        strikes: cell.strikes,
        max_steps: None,
    })
}

/// EXP3 needs `T > K ln K`; shorter matched horizons are raised to the
/// smallest admissible value.
fn exp3_budget(k: usize, budget: u64) -> u64 {
    let floor = (k as f64 * (k as f64).ln()).floor() as u64 + 1;
    budget.max(floor)
}

fn ts_params(cell: &ExperimentCell) -> Result<TrackAndStopParams> {
    let rho0 = cell.user_params()?.rho0();
    Ok(TrackAndStopParams::new(
        cell.delta,
        default_t_max(cell.k, cell.delta, rho0)?,
    ))
}

/// Runs `algo` once on `instance`. UNI and EXP3 need `budget`.
pub fn run_replication(
    cell: &ExperimentCell,
    instance: &BanditInstance,
    index: u64,
    replication: u64,
    algo: AlgoKind,
    budget: Option<u64>,
) -> Result<ReplicationRecord> {
    let key = stream_key(cell, index, replication, algo);
    let mut session = new_session(cell, instance, &key)?;
    let mut policy_rng = key.stream(Purpose::Policy, algo.id());
    let outcome = match algo {
        AlgoKind::Bair => bair(&mut session, cell.delta, &bair_options(cell)?)?,
        AlgoKind::Ts => track_and_stop(&mut session, &ts_params(cell)?, &mut policy_rng)?,
        AlgoKind::Uni | AlgoKind::Exp3 => {
            let budget =
                budget.ok_or_else(|| Error::InvalidParameter(format!("{algo} needs a horizon")))?;
            if algo == AlgoKind::Uni {
                uniform_explore(&mut session, budget, cell.uni_mode, &mut policy_rng)?
            } else {
                exp3(
                    &mut session,
                    exp3_budget(cell.k, budget),
                    None,
                    &mut policy_rng,
                )?
            }
        }
    };
    Ok(ReplicationRecord::new(
        cell,
        instance,
        index,
        replication,
        algo,
        outcome,
    ))
}

fn mean_steps<'a>(records: impl Iterator<Item = &'a ReplicationRecord>) -> u64 {
    let (sum, n) = records.fold((0u64, 0u64), |(s, n), r| (s + r.outcome.total_steps, n + 1));
    (sum as f64 / n as f64).round().max(1.0) as u64
}

/// All records of a cell, in (algorithm, instance, replication) order.
///
/// Pass 1 runs BAIR and Track-and-Stop. Pass 2 runs UNI and EXP3 with the
/// horizon set to BAIR's mean stopping time, per instance or per cell. BAIR
/// runs even when not listed if a horizon is needed.
pub fn run_cell_records(cell: &ExperimentCell) -> Result<Vec<ReplicationRecord>> {
    cell.validate()?;
    let instances = generate_instance_batch(cell.k, cell.gap, cell.reps, cell.seed)?;
    let runs = cell.runs_per_instance as u64;
    let jobs: Vec<(usize, u64)> = (0..instances.len())
        .flat_map(|i| (0..runs).map(move |r| (i, r)))
        .collect();
    let run_all = |algo: AlgoKind, budgets: Option<&[u64]>| -> Result<Vec<ReplicationRecord>> {
        jobs.par_iter()
            .map(|&(i, r)| {
                let budget = budgets.map(|b| b[i]);
                run_replication(cell, &instances[i], i as u64, r, algo, budget)
            })
            .collect()
    };

    let needs_budget = cell.algos.iter().any(|a| a.needs_budget());
    let mut out = Vec::new();
    let bair_records = if cell.algos.contains(&AlgoKind::Bair) || needs_budget {
        Some(run_all(AlgoKind::Bair, None)?)
    } else {
        None
    };
    let budgets: Option<Vec<u64>> =
        bair_records
            .as_ref()
            .filter(|_| needs_budget)
            .map(|recs| match cell.budget_matching {
                BudgetMatching::PerInstance => recs
                    .chunks(cell.runs_per_instance)
                    .map(|chunk| mean_steps(chunk.iter()))
                    .collect(),
                BudgetMatching::PerCell => vec![mean_steps(recs.iter()); instances.len()],
            });

    for &algo in &cell.algos {
        match algo {
            AlgoKind::Bair => out.extend(bair_records.clone().expect("ran above")),
            AlgoKind::Ts => out.extend(run_all(algo, None)?),
            AlgoKind::Uni | AlgoKind::Exp3 => out.extend(run_all(algo, budgets.as_deref())?),
        }
    }
    Ok(out)
}

pub fn run_cell(cell: &ExperimentCell) -> Result<CellSummary> {
    let records = run_cell_records(cell)?;
    Ok(summarize(cell, &records, false))
}

/// Shared-Phase-1 ablation.
///
/// Each run performs BAIR's Phase 1 once and snapshots the session. BAIR
/// finishes with Phase 2; UNI and EXP3 restart from the snapshot with BAIR's
/// Phase-2 length as horizon, and Track-and-Stop restarts from it under its
/// own rule. Reported steps and rejections cover the post-snapshot part only.
pub fn run_shared_phase1_cell(cell: &ExperimentCell) -> Result<CellSummary> {
    let records = run_shared_phase1_records(cell)?;
    Ok(summarize(cell, &records, true))
}

pub(crate) fn run_shared_phase1_records(cell: &ExperimentCell) -> Result<Vec<ReplicationRecord>> {
    cell.validate()?;
    let instances = generate_instance_batch(cell.k, cell.gap, cell.reps, cell.seed)?;
    let runs = cell.runs_per_instance as u64;
    let jobs: Vec<(usize, u64)> = (0..instances.len())
        .flat_map(|i| (0..runs).map(move |r| (i, r)))
        .collect();
    let opts = bair_options(cell)?;
    let m = match cell.m {
        Some(m) => m,
        None => default_m(cell.k, cell.delta, cell.noise_p)?,
    };
    let ts = ts_params(cell)?;

    let per_job: Vec<Vec<ReplicationRecord>> = jobs
        .par_iter()
        .map(|&(i, r)| -> Result<Vec<ReplicationRecord>> {
            let instance = &instances[i];
            let key = stream_key(cell, i as u64, r, AlgoKind::Bair);
            let mut session = new_session(cell, instance, &key)?;
            let phase1 = phase1_sweep(&mut session, opts.n1.expect("resolved"), opts.phase1_stop)?;
            let snapshot = session.clone();

            let mark = session.mark();
            let phase2 =
                phase2_eliminate(&mut session, &phase1.accept_counts, m, cell.strikes, None)?;
            let bair_out =
                session.outcome_since(&mark, phase2.survivor, Termination::Identified, Some(0));
            let horizon = bair_out.total_steps.max(1);

            let mut recs = Vec::with_capacity(cell.algos.len());
            for &algo in &cell.algos {
                let outcome = match algo {
                    AlgoKind::Bair => bair_out.clone(),
                    other => {
                        let mut s = snapshot.clone();
                        let mut rng = key.stream(Purpose::Policy, other.id());
                        match other {
                            AlgoKind::Uni => {
                                uniform_explore(&mut s, horizon, cell.uni_mode, &mut rng)?
                            }
                            AlgoKind::Exp3 => {
                                exp3(&mut s, exp3_budget(cell.k, horizon), None, &mut rng)?
                            }
                            AlgoKind::Ts => track_and_stop(&mut s, &ts, &mut rng)?,
                            AlgoKind::Bair => unreachable!(),
                        }
                    }
                };
                recs.push(ReplicationRecord::new(
                    cell, instance, i as u64, r, algo, outcome,
                ));
            }
            Ok(recs)
        })
        .collect::<Result<_>>()?;

    // regroup by algorithm, keeping (instance, replication) order
    let mut out = Vec::with_capacity(per_job.len() * cell.algos.len());
    for slot in 0..cell.algos.len() {
        out.extend(per_job.iter().map(|recs| recs[slot].clone()));
    }
    Ok(out)
}
