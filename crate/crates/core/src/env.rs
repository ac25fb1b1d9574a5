//! Bandit problem instances, reward sampling and instance-batch generation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, RngStream, StreamKey};

/// A K-armed problem with a unique best arm. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct BanditInstance {
    arm_means: Vec<f64>,
    best_arm: usize,
}

/// Wire form of an instance: `{"means": [...], "best_arm": i}` (0-based arm).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceRecord {
    means: Vec<f64>,
    best_arm: usize,
}

impl TryFrom<InstanceRecord> for BanditInstance {
    type Error = Error;

    fn try_from(rec: InstanceRecord) -> Result<Self> {
        let inst = BanditInstance::new(rec.means)?;
        if inst.best_arm != rec.best_arm {
            return Err(Error::InvalidParameter(format!(
                "best_arm {} does not match the maximum mean (arm {})",
                rec.best_arm, inst.best_arm
            )));
        }
        Ok(inst)
    }
}

impl From<BanditInstance> for InstanceRecord {
    fn from(inst: BanditInstance) -> Self {
        InstanceRecord {
            means: inst.arm_means,
            best_arm: inst.best_arm,
        }
    }
}

impl BanditInstance {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::TooFewArms(means.len()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFiniteMean);
        }
        let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut at_max = means.iter().enumerate().filter(|(_, &m)| m == max);
        let (best_arm, _) = at_max.next().expect("non-empty");
        if at_max.next().is_some() {
            return Err(Error::DuplicateMax);
        }
        Ok(Self {
            arm_means: means,
            best_arm,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arm_means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.arm_means
    }

    pub fn mean(&self, arm: usize) -> Result<f64> {
        self.check_arm(arm)?;
        Ok(self.arm_means[arm])
    }

    pub fn best_arm(&self) -> usize {
        self.best_arm
    }

    pub fn check_arm(&self, arm: usize) -> Result<()> {
        if arm < self.num_arms() {
            Ok(())
        } else {
            Err(Error::ArmOutOfRange {
                arm,
                k: self.num_arms(),
            })
        }
    }

    /// Best mean minus the largest of the remaining means.
    pub fn top_gap(&self) -> f64 {
        let best = self.arm_means[self.best_arm];
        best - self.second_best_mean()
    }

    fn second_best_mean(&self) -> f64 {
        self.arm_means
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.best_arm)
            .map(|(_, &m)| m)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Per-arm gaps and the hardness constant `H = sum 1/gap^2`.
    ///
    /// The best arm's entry is its margin over the runner-up; every other
    /// arm's entry is its distance to the best mean.
    pub fn hardness(&self) -> GapProfile {
        let best = self.arm_means[self.best_arm];
        let top = self.top_gap();
        let gaps: Vec<f64> = self
            .arm_means
            .iter()
            .enumerate()
            .map(|(i, &m)| if i == self.best_arm { top } else { best - m })
            .collect();
        let hardness = gaps.iter().map(|g| 1.0 / (g * g)).sum();
        GapProfile { gaps, hardness }
    }

    /// One reward draw for `arm` with the given unit-variance noise.
    pub fn sample_reward<R: Rng + ?Sized>(
        &self,
        arm: usize,
        rng: &mut R,
        noise: NoiseModel,
    ) -> Result<f64> {
        self.check_arm(arm)?;
        Ok(self.arm_means[arm] + noise.draw(rng))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub gaps: Vec<f64>,
    pub hardness: f64,
}

/// Zero-mean, unit-variance, sub-Gaussian reward noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Gaussian,
    /// Uniform on {-1, +1}.
    Rademacher,
}

impl NoiseModel {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian => rng.sample(StandardNormal),
            NoiseModel::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// The reward side of a simulation: an instance plus one stream per arm.
///
/// Each arm draws from its own stream, so the n-th reward of an arm is the
/// same no matter how pulls of different arms interleave. Two environments
/// built from the same key therefore share noise arm by arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    instance: BanditInstance,
    streams: Vec<RngStream>,
    noise: NoiseModel,
}

impl Environment {
    pub fn new(instance: BanditInstance, key: &StreamKey, noise: NoiseModel) -> Self {
        let streams = (0..instance.num_arms() as u64)
            .map(|arm| key.stream(Purpose::Reward, arm))
            .collect();
        Self {
            instance,
            streams,
            noise,
        }
    }

    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }

    pub fn num_arms(&self) -> usize {
        self.instance.num_arms()
    }

    pub fn pull(&mut self, arm: usize) -> Result<f64> {
        self.instance.check_arm(arm)?;
        Ok(self.instance.arm_means[arm] + self.noise.draw(&mut self.streams[arm]))
    }
}

/// Generates `count` instances with `K` arms whose top gap equals `gap`.
///
/// Means are drawn i.i.d. from N(0, 1); the sampled maximum is then moved to
/// `second + gap`, leaving every other mean in place. Instance `i` depends
/// only on `(k, gap, i, master_seed)`.
pub fn generate_instance_batch(
    k: usize,
    gap: f64,
    count: usize,
    master_seed: u64,
) -> Result<Vec<BanditInstance>> {
    if k < 2 {
        return Err(Error::TooFewArms(k));
    }
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::InvalidGap(gap));
    }
    if count == 0 {
        return Err(Error::EmptyBatch);
    }
    (0..count)
        .map(|i| {
            let mut rng = StreamKey::new(master_seed, i as u64, 0, 0).stream(Purpose::Instance, 0);
            let means: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
            BanditInstance::new(reset_top_gap(means, gap))
        })
        .collect()
}

fn reset_top_gap(mut means: Vec<f64>, gap: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let (top, second) = (order[0], order[1]);
    let third = order.get(2).map(|&i| means[i]);

    let best = means[second] + gap;
    means[top] = best;
    // Re-derive the runner-up from the rounded best so that best - second
    // reproduces `gap` bit-exactly whenever the floating grid allows it.
    let snapped = best - gap;
    if best - snapped == gap && best - means[second] != gap && third.is_none_or(|t| snapped > t) {
        means[second] = snapped;
    }
    means
}
