//! Subcommand bodies behind the `physplan` binary.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::checkpoint::{load_checkpoint, save_checkpoint};
use super::config::{RunConfig, Strategy};
use super::logs::{LogPayload, LogWriter, TrajectoryLogRecord};
use crate::error::{Error, Result};
use crate::orchestrator::{run_episode, MemoryPool, Planner, ScriptedOracle, Trajectory};
use crate::policy::PolicyParams;
use crate::seeding::{derive_seed, stream};
use crate::trainer::{
    compute_reward, evaluate_policy, fit_sft_baseline, train_loop_with, EvalReport, RewardBreakdown,
};
use crate::world::{sample_scene_bank, SyntheticWorld};

pub const TRAIN_LOG: &str = "train.jsonl";
pub const HASH_FILE: &str = "determinism.sha256";
/// Present while a run is in progress or after it failed.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const FINAL_CHECKPOINT: &str = "policy-final.ckpt";

pub fn checkpoint_name(iteration: usize) -> String {
    format!("policy-{iteration:06}.ckpt")
}

pub fn build_world(config: &RunConfig, bank_seed: u64) -> Result<SyntheticWorld> {
    let w = &config.world;
    let scenes = sample_scene_bank(bank_seed, w.bank_size, &w.kind_mix, w.base_corruption, &w.constants)?;
    SyntheticWorld::new(scenes, w.constants.clone())
}

/// Scripted-oracle episodes over the training bank, rewards attached.
pub fn oracle_rollouts(config: &RunConfig, world: &SyntheticWorld) -> Result<Vec<Trajectory>> {
    let queries = world.queries();
    let jobs: Vec<(usize, usize)> = (0..config.sft.episodes_per_scene)
        .flat_map(|k| (0..queries.len()).map(move |i| (k, i)))
        .collect();
    jobs.par_iter()
        .map(|&(k, i)| {
            let seed = derive_seed(config.trainer.seed, &[stream::ROLLOUT, u64::MAX, k as u64, i as u64]);
            let mut t = run_episode(&queries[i], &ScriptedOracle, world, &config.episode, seed)?;
            t.reward = Some(compute_reward(&t, &config.reward));
            Ok(t)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainOutcome {
    pub strategy: Strategy,
    pub final_checkpoint: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub log_file: PathBuf,
    pub determinism_hash: String,
    pub eval: EvalReport,
}

pub fn cmd_train(config_path: Option<&Path>, overrides: &[String]) -> Result<TrainOutcome> {
    let config = RunConfig::load(config_path, overrides)?;
    train_with_config(&config)
}

pub fn train_with_config(config: &RunConfig) -> Result<TrainOutcome> {
    config.check()?;
    let log_dir = &config.paths.log_dir;
    let ckpt_dir = &config.paths.checkpoint_dir;
    std::fs::create_dir_all(log_dir).map_err(|e| Error::io(log_dir, e))?;
    std::fs::create_dir_all(ckpt_dir).map_err(|e| Error::io(ckpt_dir, e))?;
    let marker = log_dir.join(INCOMPLETE_MARKER);
    std::fs::write(&marker, "run started; artifacts in this directory may be partial\n")
        .map_err(|e| Error::io(&marker, e))?;

    let world = build_world(config, config.world.bank_seed)?;
    let eval_world = build_world(config, config.eval.bank_seed)?;
    let log_file = log_dir.join(TRAIN_LOG);
    let mut log = LogWriter::create(&log_file)?;
    log.write(LogPayload::RunStart {
        config: Box::new(config.clone()),
    })?;

    let init = PolicyParams::zeros();
    let mut checkpoints = Vec::new();
    let params = match config.strategy {
        Strategy::Frozen => init,
        Strategy::OfflineSft => {
            let logged = oracle_rollouts(config, &world)?;
            let s = &config.sft;
            fit_sft_baseline(&init, &logged, s.reward_floor, s.epochs, s.learning_rate)?
        }
        Strategy::FlowGrpo => {
            let iterations = config.trainer.iterations;
            let every_ckpt = config.paths.checkpoint_every;
            let every_traj = config.paths.trajectory_log_every;
            let mut hook = |record: &crate::trainer::IterationRecord,
                            params: &PolicyParams,
                            groups: &[crate::trainer::RolloutGroup]|
             -> Result<()> {
                log.write(LogPayload::Iteration(record.clone()))?;
                if every_traj > 0 && record.iteration % every_traj == 0 {
                    for (g, group) in groups.iter().enumerate() {
                        for (i, (t, a)) in group.trajectories.iter().zip(&group.advantages).enumerate() {
                            log.write(LogPayload::Trajectory(Box::new(TrajectoryLogRecord {
                                iteration: record.iteration,
                                group: g,
                                index: i,
                                policy_version: group.policy_version,
                                advantage: *a,
                                trajectory: t.clone(),
                            })))?;
                        }
                    }
                }
                let done = record.iteration + 1;
                if every_ckpt > 0 && done % every_ckpt == 0 && done < iterations {
                    let name = checkpoint_name(done);
                    save_checkpoint(&ckpt_dir.join(&name), params)?;
                    log.write(LogPayload::Checkpoint {
                        iteration: done,
                        file: name.clone(),
                        policy_version: params.version,
                    })?;
                    checkpoints.push(ckpt_dir.join(name));
                }
                Ok(())
            };
            let (params, _) = train_loop_with(
                &world,
                &init,
                &config.trainer,
                &config.episode,
                &config.reward,
                &world.queries(),
                iterations,
                &mut hook,
            )?;
            params
        }
    };

    let final_checkpoint = ckpt_dir.join(FINAL_CHECKPOINT);
    save_checkpoint(&final_checkpoint, &params)?;
    log.write(LogPayload::Checkpoint {
        iteration: config.trainer.iterations,
        file: FINAL_CHECKPOINT.into(),
        policy_version: params.version,
    })?;
    checkpoints.push(final_checkpoint.clone());

    let eval = evaluate_policy(
        &params,
        &eval_world,
        &eval_world.queries(),
        &config.episode,
        &config.reward,
        &config.eval.seeds,
    )?;
    log.write(LogPayload::Eval {
        label: "final".into(),
        report: Box::new(eval.clone()),
    })?;
    let determinism_hash = log.finish()?;
    let hash_file = log_dir.join(HASH_FILE);
    std::fs::write(&hash_file, format!("{determinism_hash}  {TRAIN_LOG}\n")).map_err(|e| Error::io(&hash_file, e))?;
    std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(TrainOutcome {
        strategy: config.strategy,
        final_checkpoint,
        checkpoints,
        log_file,
        determinism_hash,
        eval,
    })
}

/// Loads `checkpoint`, or the untrained initial policy when absent.
pub fn load_policy(checkpoint: Option<&Path>) -> Result<PolicyParams> {
    checkpoint.map_or_else(|| Ok(PolicyParams::zeros()), load_checkpoint)
}

/// Evaluates a checkpoint on the bank drawn from `bank_seed` (default: the
/// configured held-out bank) and appends the report to `eval-{bank_seed}.jsonl`.
pub fn cmd_eval(
    config_path: Option<&Path>,
    overrides: &[String],
    checkpoint: Option<&Path>,
    bank_seed: Option<u64>,
) -> Result<EvalReport> {
    let config = RunConfig::load(config_path, overrides)?;
    let params = load_policy(checkpoint)?;
    let bank_seed = bank_seed.unwrap_or(config.eval.bank_seed);
    let world = build_world(&config, bank_seed)?;
    let report = evaluate_policy(
        &params,
        &world,
        &world.queries(),
        &config.episode,
        &config.reward,
        &config.eval.seeds,
    )?;
    let path = config.paths.log_dir.join(format!("eval-{bank_seed}.jsonl"));
    let label = checkpoint.map_or_else(|| "initial".to_string(), |p| p.display().to_string());
    let mut log = LogWriter::create(&path)?;
    log.write(LogPayload::Eval {
        label,
        report: Box::new(report.clone()),
    })?;
    log.finish()?;
    Ok(report)
}

/// Single episode with its full memory dump.
#[derive(Debug, Clone, Serialize)]
pub struct RolloutDump {
    pub trajectory: Trajectory,
    pub memory: MemoryPool,
    pub reward: RewardBreakdown,
}

pub fn cmd_rollout(
    config_path: Option<&Path>,
    overrides: &[String],
    checkpoint: Option<&Path>,
    scene: usize,
    seed: u64,
    oracle: bool,
) -> Result<RolloutDump> {
    let config = RunConfig::load(config_path, overrides)?;
    let world = build_world(&config, config.world.bank_seed)?;
    let query = world
        .scenes()
        .get(scene)
        .map(|s| s.query.clone())
        .ok_or_else(|| Error::InvalidArgument(format!("scene index {scene} outside the bank of {}", world.scenes().len())))?;
    let params;
    let planner: &dyn Planner = if oracle {
        &ScriptedOracle
    } else {
        params = load_policy(checkpoint)?;
        &params
    };
    let mut trajectory = run_episode(&query, planner, &world, &config.episode, seed)?;
    let reward = compute_reward(&trajectory, &config.reward);
    trajectory.reward = Some(reward);
    Ok(RolloutDump {
        memory: trajectory.replay_memory(),
        trajectory,
        reward,
    })
}
