use serde::{Deserialize, Serialize};

use super::{ExperimentCell, ReplicationRecord};
use crate::user::RhoPolicy;

/// Aggregate metrics of one algorithm in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub algo: String,
    pub reps: usize,
    pub success_rate: f64,
    /// `(1 - success_rate) / delta`.
    pub failure_ratio: f64,
    pub mean_stop_time: f64,
    /// Standard error of the mean stopping time.
    pub stop_time_se: f64,
    /// Average over runs of rejections / steps.
    pub mean_rejection_rate: f64,
    /// Share of runs that ended on a budget rather than a stopping rule.
    pub budget_exhausted_rate: f64,
}

impl AlgoSummary {
    /// Standard error of the success rate.
    pub fn success_se(&self) -> f64 {
        if self.reps == 0 {
            return 0.0;
        }
        (self.success_rate * (1.0 - self.success_rate) / self.reps as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub delta: f64,
    pub k: usize,
    pub gap: f64,
    pub alpha: f64,
    pub rho: RhoPolicy,
    pub noise_p: f64,
    /// Steps and rejections count only what follows a shared Phase 1.
    pub shared_phase1: bool,
    pub algos: Vec<AlgoSummary>,
}

impl CellSummary {
    pub fn get(&self, label: &str) -> Option<&AlgoSummary> {
        self.algos.iter().find(|a| a.algo == label)
    }
}

/// Reduces records in the order given; the callers produce them in
/// (algorithm, instance, replication) order so the floating-point sums do
/// not depend on scheduling.
pub fn summarize(
    cell: &ExperimentCell,
    records: &[ReplicationRecord],
    shared_phase1: bool,
) -> CellSummary {
    let algos = cell
        .algos
        .iter()
        .map(|&algo| {
            let recs: Vec<&ReplicationRecord> = records.iter().filter(|r| r.algo == algo).collect();
            let n = recs.len();
            let nf = n.max(1) as f64;
            let success_rate = recs.iter().filter(|r| r.success).count() as f64 / nf;
            let steps: Vec<f64> = recs.iter().map(|r| r.outcome.total_steps as f64).collect();
            let mean = steps.iter().sum::<f64>() / nf;
            let se = if n > 1 {
                let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            AlgoSummary {
                algo: cell.algo_label(algo),
                reps: n,
                success_rate,
                failure_ratio: (1.0 - success_rate) / cell.delta,
                mean_stop_time: mean,
                stop_time_se: se,
                mean_rejection_rate: recs.iter().map(|r| r.outcome.rejection_rate()).sum::<f64>()
                    / nf,
                budget_exhausted_rate: recs
                    .iter()
                    .filter(|r| {
                        r.outcome.termination == crate::algorithms::Termination::BudgetExhausted
                    })
                    .count() as f64
                    / nf,
            }
        })
        .collect();
    CellSummary {
        delta: cell.delta,
        k: cell.k,
        gap: cell.gap,
        alpha: cell.alpha,
        rho: cell.rho,
        noise_p: cell.noise_p,
        shared_phase1,
        algos,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{AlgorithmOutcome, Termination};
    use crate::harness::AlgoKind;

    fn record(steps: u64, rejections: u64, success: bool) -> ReplicationRecord {
        ReplicationRecord {
            instance: 0,
            replication: 0,
            algo: AlgoKind::Bair,
            seed: 0,
            outcome: AlgorithmOutcome {
                chosen_arm: 0,
                total_steps: steps,
                total_rejections: rejections,
                per_arm_accepts: vec![steps - rejections, 0],
                termination: Termination::Identified,
                phase_boundary: None,
            },
            success,
        }
    }

    #[test]
    fn failure_ratio_definition() {
        let cell = ExperimentCell::new(0.05, 2, 0.5, vec![AlgoKind::Bair], 20, 0);
        let recs: Vec<_> = (0..20).map(|i| record(10, 1, i != 0)).collect();
        let s = summarize(&cell, &recs, false);
        let a = &s.algos[0];
        assert_eq!(a.success_rate, 0.95);
        assert_eq!(a.failure_ratio, (1.0 - 0.95) / 0.05);
        assert!((a.failure_ratio - 1.0).abs() < 1e-12);
        assert!((a.mean_rejection_rate - 0.1).abs() < 1e-15);
        assert_eq!(a.stop_time_se, 0.0);
    }

    #[test]
    fn standard_error() {
        let cell = ExperimentCell::new(0.1, 2, 0.5, vec![AlgoKind::Bair], 4, 0);
        let recs = vec![
            record(10, 0, true),
            record(20, 0, true),
            record(30, 0, true),
            record(40, 0, true),
        ];
        let a = &summarize(&cell, &recs, false).algos[0];
        assert_eq!(a.mean_stop_time, 25.0);
        // sd = sqrt(500/3)
        assert!((a.stop_time_se - (500.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
    }
}
