//! Paired evaluation over a scene bank: pass rates, best-so-far curves and a
//! per-kind breakdown.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reward::{compute_reward, RewardConfig};
use crate::error::{Error, Result};
use crate::orchestrator::{run_episode, EpisodeConfig, Planner, ScoredVideo, Trajectory};
use crate::scene::{ScenarioKind, SceneQuery};
use crate::seeding::{derive_seed, stream};
use crate::world::World;

/// Value of a best-so-far curve before any video exists.
pub const CURVE_FLOOR: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub caption: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub best: Option<ScoredVideo>,
    pub reward: f64,
    pub violation: bool,
    /// Per-cycle running maxima; length T.
    pub best_sa: Vec<f64>,
    pub best_pc: Vec<f64>,
    /// 1 once some video so far jointly passes, else 0.
    pub joint: Vec<f64>,
}

impl EpisodeSummary {
    pub fn from_trajectory(traj: &Trajectory, cycles: usize, pass: f64, reward: &RewardConfig) -> Self {
        let (mut sa, mut pc, mut joint) = (CURVE_FLOOR, CURVE_FLOOR, 0.0);
        let mut best_sa = Vec::with_capacity(cycles);
        let mut best_pc = Vec::with_capacity(cycles);
        let mut joint_curve = Vec::with_capacity(cycles);
        for t in 1..=cycles {
            if let Some(v) = traj.videos.iter().find(|v| v.cycle_index == t) {
                sa = sa.max(v.score.sa);
                pc = pc.max(v.score.pc);
                if v.score.joint_pass(pass) {
                    joint = 1.0;
                }
            }
            best_sa.push(sa);
            best_pc.push(pc);
            joint_curve.push(joint);
        }
        let breakdown = traj.reward.unwrap_or_else(|| compute_reward(traj, reward));
        EpisodeSummary {
            caption: traj.query.caption.clone(),
            kind: traj.query.scenario_kind,
            seed: traj.rng_seed,
            best: traj.best,
            reward: breakdown.total,
            violation: breakdown.format_penalty_applied,
            best_sa,
            best_pc,
            joint: joint_curve,
        }
    }

    fn passes(&self, pass: f64) -> (bool, bool, bool) {
        self.best.map_or((false, false, false), |b| {
            (b.score.sa >= pass, b.score.pc >= pass, b.score.joint_pass(pass))
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PassRates {
    pub episodes: usize,
    pub sa_pass_pct: f64,
    pub pc_pass_pct: f64,
    pub joint_pass_pct: f64,
    pub mean_best_sa: f64,
    pub mean_best_pc: f64,
    pub mean_reward: f64,
}

impl PassRates {
    fn of<'a>(episodes: impl Iterator<Item = &'a EpisodeSummary>, pass: f64) -> Self {
        let mut r = PassRates::default();
        for e in episodes {
            let (sa, pc, joint) = e.passes(pass);
            r.episodes += 1;
            r.sa_pass_pct += f64::from(u8::from(sa));
            r.pc_pass_pct += f64::from(u8::from(pc));
            r.joint_pass_pct += f64::from(u8::from(joint));
            r.mean_best_sa += e.best_sa.last().copied().unwrap_or(CURVE_FLOOR);
            r.mean_best_pc += e.best_pc.last().copied().unwrap_or(CURVE_FLOOR);
            r.mean_reward += e.reward;
        }
        if r.episodes > 0 {
            let n = r.episodes as f64;
            r.sa_pass_pct *= 100.0 / n;
            r.pc_pass_pct *= 100.0 / n;
            r.joint_pass_pct *= 100.0 / n;
            r.mean_best_sa /= n;
            r.mean_best_pc /= n;
            r.mean_reward /= n;
        }
        r
    }
}

/// Mean best-so-far curves over episodes, one entry per cycle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub sa: Vec<f64>,
    pub pc: Vec<f64>,
    /// Percentage of episodes with a joint pass so far.
    pub joint_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cycles: usize,
    pub overall: PassRates,
    pub per_kind: BTreeMap<ScenarioKind, PassRates>,
    pub curves: Curves,
    pub violation_pct: f64,
    pub episodes: Vec<EpisodeSummary>,
}

impl EvalReport {
    pub fn joint_pass_pct(&self) -> f64 {
        self.overall.joint_pass_pct
    }

    /// Joint-pass percentage gained between cycle 1 and cycle T.
    pub fn joint_gain(&self) -> f64 {
        match (self.curves.joint_pct.first(), self.curves.joint_pct.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// Runs every (scene, seed) pair once. Episode seeds depend only on the seed
/// and the scene's position in the bank, so two planners evaluated on the same
/// bank and seeds see identical generator noise.
pub fn evaluate_policy(
    planner: &dyn Planner,
    world: &dyn World,
    bank: &[SceneQuery],
    episode: &EpisodeConfig,
    reward: &RewardConfig,
    seeds: &[u64],
) -> Result<EvalReport> {
    if bank.is_empty() {
        return Err(Error::Config("evaluation bank is empty".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("evaluation needs at least one seed".into()));
    }
    episode.check()?;
    let pass = episode.thresholds.pass;
    let jobs: Vec<(u64, usize)> = seeds
        .iter()
        .flat_map(|&s| (0..bank.len()).map(move |i| (s, i)))
        .collect();
    let episodes = jobs
        .par_iter()
        .map(|&(s, i)| {
            let seed = derive_seed(s, &[stream::ROLLOUT, i as u64]);
            let traj = run_episode(&bank[i], planner, world, episode, seed)?;
            Ok(EpisodeSummary::from_trajectory(&traj, episode.cycles, pass, reward))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(episodes, episode.cycles, pass))
}

pub fn summarize(episodes: Vec<EpisodeSummary>, cycles: usize, pass: f64) -> EvalReport {
    let n = episodes.len().max(1) as f64;
    let mean_at = |f: &dyn Fn(&EpisodeSummary) -> f64| episodes.iter().map(f).sum::<f64>() / n;
    let curves = Curves {
        sa: (0..cycles).map(|t| mean_at(&|e| e.best_sa[t])).collect(),
        pc: (0..cycles).map(|t| mean_at(&|e| e.best_pc[t])).collect(),
        joint_pct: (0..cycles).map(|t| 100.0 * mean_at(&|e| e.joint[t])).collect(),
    };
    let per_kind = ScenarioKind::ALL
        .iter()
        .filter(|k| episodes.iter().any(|e| e.kind == **k))
        .map(|k| (*k, PassRates::of(episodes.iter().filter(|e| e.kind == *k), pass)))
        .collect();
    EvalReport {
        cycles,
        overall: PassRates::of(episodes.iter(), pass),
        per_kind,
        curves,
        violation_pct: 100.0 * mean_at(&|e| f64::from(u8::from(e.violation))),
        episodes,
    }
}
