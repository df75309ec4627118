//! On-policy training loop: group rollouts in the live world, tiered reward,
//! group-normalized advantages, one clipped-surrogate ascent step per batch.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::advantage::compute_advantages;
use super::reward::{compute_reward, RewardConfig};
use super::surrogate::{batch_surrogate_gradient, RolloutGroup};
use crate::error::{Error, Result};
use crate::orchestrator::{run_episode, EpisodeConfig};
use crate::policy::PolicyParams;
use crate::scene::SceneQuery;
use crate::seeding::{derive_seed, rng_for, stream};
use crate::world::World;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Rollouts per query (G).
    pub group_size: usize,
    /// Cycle budget (T).
    pub cycles: usize,
    pub epsilon: f64,
    /// KL weight against the reference policy.
    pub beta: f64,
    pub entropy_coeff: f64,
    pub learning_rate: f64,
    pub groups_per_batch: usize,
    pub std_floor: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            group_size: 8,
            cycles: 5,
            epsilon: 0.2,
            beta: 0.01,
            entropy_coeff: 0.005,
            learning_rate: 16.0,
            groups_per_batch: 16,
            std_floor: 1e-6,
            iterations: 200,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn check(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::Config("trainer.group_size must be >= 2".into()));
        }
        if self.cycles == 0 {
            return Err(Error::Config("trainer.cycles must be >= 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("trainer.epsilon must lie in (0, 1)".into()));
        }
        for (name, v) in [
            ("beta", self.beta),
            ("entropy_coeff", self.entropy_coeff),
            ("learning_rate", self.learning_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("trainer.{name} must be finite and >= 0")));
            }
        }
        if !(self.std_floor > 0.0) {
            return Err(Error::Config("trainer.std_floor must be > 0".into()));
        }
        if self.groups_per_batch == 0 {
            return Err(Error::Config("trainer.groups_per_batch must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Version of the policy the rollouts were sampled from.
    pub policy_version: u64,
    pub objective: f64,
    pub mean_reward: f64,
    pub sa_pass_rate: f64,
    pub pc_pass_rate: f64,
    pub joint_pass_rate: f64,
    pub violation_rate: f64,
    pub kl: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub iterations: Vec<IterationRecord>,
}

/// Samples `groups_per_batch` queries and rolls out `G` trajectories for each
/// under `policy`. Groups come back in a fixed order regardless of threading.
pub fn collect_groups(
    world: &dyn World,
    policy: &PolicyParams,
    bank: &[SceneQuery],
    config: &TrainerConfig,
    episode: &EpisodeConfig,
    reward: &RewardConfig,
    iteration: usize,
) -> Result<Vec<RolloutGroup>> {
    let mut pick = rng_for(config.seed, &[stream::QUERY_PICK, iteration as u64]);
    let queries: Vec<&SceneQuery> = (0..config.groups_per_batch)
        .map(|_| &bank[pick.random_range(0..bank.len())])
        .collect();
    let jobs: Vec<(usize, usize)> = (0..queries.len())
        .flat_map(|g| (0..config.group_size).map(move |i| (g, i)))
        .collect();
    let trajectories = jobs
        .par_iter()
        .map(|&(g, i)| {
            let seed = derive_seed(config.seed, &[stream::ROLLOUT, iteration as u64, g as u64, i as u64]);
            let mut traj = run_episode(queries[g], policy, world, episode, seed)?;
            traj.reward = Some(compute_reward(&traj, reward));
            Ok(traj)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut it = trajectories.into_iter();
    queries
        .into_iter()
        .map(|q| {
            let trajectories: Vec<_> = it.by_ref().take(config.group_size).collect();
            let rewards: Vec<f64> = trajectories
                .iter()
                .map(|t| t.reward.map_or(0.0, |r| r.total))
                .collect();
            Ok(RolloutGroup {
                query: q.clone(),
                advantages: compute_advantages(&rewards, config.std_floor)?,
                trajectories,
                policy_version: policy.version,
            })
        })
        .collect()
}

fn batch_stats(groups: &[RolloutGroup], pass: f64) -> (f64, f64, f64, f64, f64) {
    let trajs: Vec<_> = groups.iter().flat_map(|g| &g.trajectories).collect();
    let n = trajs.len().max(1) as f64;
    let frac = |f: &dyn Fn(&crate::orchestrator::Trajectory) -> bool| {
        trajs.iter().filter(|t| f(t)).count() as f64 / n
    };
    let mean_reward = trajs.iter().map(|t| t.reward.map_or(0.0, |r| r.total)).sum::<f64>() / n;
    let sa = frac(&|t| t.best.is_some_and(|b| b.score.sa >= pass));
    let pc = frac(&|t| t.best.is_some_and(|b| b.score.pc >= pass));
    let joint = frac(&|t| t.best.is_some_and(|b| b.score.joint_pass(pass)));
    let violations = frac(&|t| t.cycles.iter().any(|c| c.has_violation()));
    (mean_reward, sa, pc, joint, violations)
}

/// Observer invoked after every update with the record, the updated policy and
/// the batch that produced it.
pub type IterationHook<'a> = dyn FnMut(&IterationRecord, &PolicyParams, &[RolloutGroup]) -> Result<()> + 'a;

pub fn train_loop(
    world: &dyn World,
    init: &PolicyParams,
    config: &TrainerConfig,
    episode: &EpisodeConfig,
    reward: &RewardConfig,
    bank: &[SceneQuery],
    iterations: usize,
) -> Result<(PolicyParams, TrainingReport)> {
    train_loop_with(world, init, config, episode, reward, bank, iterations, &mut |_, _, _| Ok(()))
}

#[allow(clippy::too_many_arguments)]
pub fn train_loop_with(
    world: &dyn World,
    init: &PolicyParams,
    config: &TrainerConfig,
    episode: &EpisodeConfig,
    reward: &RewardConfig,
    bank: &[SceneQuery],
    iterations: usize,
    hook: &mut IterationHook<'_>,
) -> Result<(PolicyParams, TrainingReport)> {
    config.check()?;
    reward.check()?;
    if iterations == 0 {
        return Err(Error::Config("iterations must be >= 1".into()));
    }
    if bank.is_empty() {
        return Err(Error::Config("training bank is empty".into()));
    }
    init.check()?;
    let episode = EpisodeConfig {
        cycles: config.cycles,
        ..episode.clone()
    };
    episode.check()?;

    let reference = init.clone();
    let mut params = init.clone();
    let mut report = TrainingReport::default();
    for iteration in 0..iterations {
        let groups = collect_groups(world, &params, bank, config, &episode, reward, iteration)?;
        // one step per batch: the rollout policy is the current policy
        let out = batch_surrogate_gradient(&groups, &params, &params, &reference, config)?;
        let (mean_reward, sa, pc, joint, violations) = batch_stats(&groups, episode.thresholds.pass);
        let record = IterationRecord {
            iteration,
            policy_version: params.version,
            objective: out.objective,
            mean_reward,
            sa_pass_rate: sa,
            pc_pass_rate: pc,
            joint_pass_rate: joint,
            violation_rate: violations,
            kl: out.kl,
            entropy: out.entropy,
            clip_fraction: out.clip_fraction,
            grad_norm: out.gradient.norm(),
        };
        params.ascend(&out.gradient, config.learning_rate);
        hook(&record, &params, &groups)?;
        report.iterations.push(record);
    }
    Ok((params, report))
}
