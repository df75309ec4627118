use serde::{Deserialize, Serialize};

use super::action::{Action, InputSource, Tool, ToolArgs, ToolInvocation};
use super::memory::{update_memory, MemoryPool};
use crate::error::{Error, Result};
use crate::policy::{featurize, PolicyParams, StateFeatures};
use crate::scene::{ParamMap, SceneQuery};
use crate::seeding::{derive_seed, stream};
use crate::toolbox::{
    self, generate_keyframes, refine_prompt, validate_computation, ComputationResult, DetailFlag,
    KeyframeSet, RefinedPrompt,
};
use crate::trainer::RewardBreakdown;
use crate::world::{ConditioningBundle, VerifierScore, World};

/// Origin of an observation: one of the tools, or the generator/verifier pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    NumericSolver,
    KeyframeGen,
    PromptRefiner,
    Generator,
}

impl From<Tool> for Source {
    fn from(t: Tool) -> Self {
        match t {
            Tool::NumericSolver => Source::NumericSolver,
            Tool::KeyframeGen => Source::KeyframeGen,
            Tool::PromptRefiner => Source::PromptRefiner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Payload {
    Computation(ComputationResult),
    Keyframes(KeyframeSet),
    Prompt(RefinedPrompt),
    Score(VerifierScore),
    Failure { diagnostic: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub source: Source,
    pub payload: Payload,
    /// Semantic correctness: computation valid for the scene, keyframes
    /// backed by a matching computation, refiner ran, video scored.
    pub valid: bool,
    /// The invocation broke the action schema or the backend failed.
    pub violation: bool,
}

impl Observation {
    fn ok(source: Source, payload: Payload, valid: bool) -> Self {
        Observation {
            source,
            payload,
            valid,
            violation: false,
        }
    }

    fn violation(source: Source, diagnostic: impl Into<String>) -> Self {
        Observation {
            source,
            payload: Payload::Failure {
                diagnostic: diagnostic.into(),
            },
            valid: false,
            violation: true,
        }
    }

    pub fn score(&self) -> Option<VerifierScore> {
        match self.payload {
            Payload::Score(s) if !self.violation => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreThresholds {
    /// A dimension passes at or above this score.
    pub pass: f64,
}

impl Default for ScoreThresholds {
    fn default() -> Self {
        ScoreThresholds { pass: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Cycle budget T.
    pub cycles: usize,
    pub tool_call_cap: usize,
    pub thresholds: ScoreThresholds,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            cycles: 5,
            tool_call_cap: 3,
            thresholds: ScoreThresholds::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn with_cycles(cycles: usize) -> Self {
        EpisodeConfig {
            cycles,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.cycles == 0 {
            return Err(Error::Config("episode.cycles must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredVideo {
    pub cycle_index: usize,
    pub score: VerifierScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle_index: usize,
    pub action: Action,
    pub observations: Vec<Observation>,
    /// Featurized memory the action was sampled from.
    pub features: StateFeatures,
}

impl CycleRecord {
    pub fn has_violation(&self) -> bool {
        self.observations.iter().any(|o| o.violation)
    }

    pub fn score(&self) -> Option<VerifierScore> {
        self.observations.iter().find_map(Observation::score)
    }

    /// A keyframe set was produced in this cycle.
    pub fn introduced_keyframes(&self) -> bool {
        self.observations
            .iter()
            .any(|o| matches!(o.payload, Payload::Keyframes(_)) && !o.violation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub query: SceneQuery,
    pub cycles: Vec<CycleRecord>,
    pub videos: Vec<ScoredVideo>,
    pub best: Option<ScoredVideo>,
    pub reward: Option<RewardBreakdown>,
    pub rng_seed: u64,
}

impl Trajectory {
    /// Rebuilds the final memory pool from the recorded cycles.
    pub fn replay_memory(&self) -> MemoryPool {
        self.cycles
            .iter()
            .fold(MemoryPool::new(self.query.clone()), |m, c| {
                update_memory(&m, &c.action, &c.observations)
            })
    }

    pub fn computations(&self) -> impl Iterator<Item = &ComputationResult> {
        self.cycles
            .iter()
            .flat_map(|c| c.observations.iter())
            .filter_map(|o| match &o.payload {
                Payload::Computation(c) if !o.violation => Some(c),
                _ => None,
            })
    }
}

/// Anything that can pick a cycle's action from memory.
pub trait Planner: Sync {
    fn plan(&self, query: &SceneQuery, memory: &MemoryPool, features: &StateFeatures, seed: u64)
        -> Action;
}

impl Planner for PolicyParams {
    fn plan(&self, _: &SceneQuery, _: &MemoryPool, features: &StateFeatures, seed: u64) -> Action {
        self.sample_action(features, seed).0
    }
}

/// Deterministic reference agent: solve, then anchor keyframes at start, apex
/// and end, then refine the prompt with every detail flag, then generate in
/// every remaining cycle. One step per cycle.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedOracle;

impl Planner for ScriptedOracle {
    fn plan(&self, query: &SceneQuery, memory: &MemoryPool, _: &StateFeatures, _: u64) -> Action {
        if !memory.has_valid_computation() {
            Action::build(Some((query.scenario_kind, InputSource::Observable)), None, None, false)
        } else if !memory.has_keyframes() {
            Action::build(None, Some(1), None, false)
        } else if !memory.prompt_refined() {
            let all = DetailFlag::ALL.into_iter().collect();
            Action::build(None, None, Some(&all), false)
        } else {
            Action::build(None, None, None, true)
        }
    }
}

/// Runs one T-cycle episode.
pub fn run_episode(
    query: &SceneQuery,
    planner: &dyn Planner,
    world: &dyn World,
    config: &EpisodeConfig,
    seed: u64,
) -> Result<Trajectory> {
    config.check()?;
    if !world.contains(query) {
        return Err(Error::UnknownScene(query.caption.clone()));
    }
    let mut memory = MemoryPool::new(query.clone());
    let mut bundle = ConditioningBundle::default();
    let mut cycles = Vec::with_capacity(config.cycles);
    let mut videos = Vec::new();

    for t in 1..=config.cycles {
        let features = featurize(&memory, config.cycles);
        let action = planner.plan(
            query,
            &memory,
            &features,
            derive_seed(seed, &[stream::POLICY, t as u64]),
        );
        let noise_seed = derive_seed(seed, &[stream::GENERATOR, t as u64]);
        let observations = execute_cycle(query, &action, &mut bundle, world, config, noise_seed);
        if let Some(score) = observations.iter().find_map(Observation::score) {
            videos.push(ScoredVideo {
                cycle_index: t,
                score,
            });
        }
        memory.push(&action, &observations);
        cycles.push(CycleRecord {
            cycle_index: t,
            action,
            observations,
            features,
        });
    }

    let best = best_video(&videos, &config.thresholds);
    Ok(Trajectory {
        query: query.clone(),
        cycles,
        videos,
        best,
        reward: None,
        rng_seed: seed,
    })
}

fn solver_inputs(query: &SceneQuery, kind: crate::scene::ScenarioKind, source: InputSource) -> Result<ParamMap> {
    kind.required_params()
        .iter()
        .map(|&name| {
            let v = query.param(name).ok_or_else(|| {
                Error::InvalidArgument(format!("{kind} solver needs {name}, not in the scene"))
            })?;
            // restitution selects the collision mode and is never rescaled
            let v = if name == "restitution" { v } else { v * source.scale() };
            Ok((name.to_string(), v))
        })
        .collect()
}

fn dispatch(query: &SceneQuery, call: &ToolInvocation, bundle: &mut ConditioningBundle) -> Observation {
    let source = Source::from(call.tool);
    if !call.is_well_formed() {
        return Observation::violation(source, format!("{:?} called with mismatched arguments", call.tool));
    }
    match &call.args {
        ToolArgs::Solver { solver, source: input } => {
            match solver_inputs(query, *solver, *input).and_then(|p| toolbox::solve(*solver, &p)) {
                Ok(result) => {
                    let valid = validate_computation(query, &result);
                    bundle.add_computation(result.clone());
                    Observation::ok(source, Payload::Computation(result), valid)
                }
                // a well-formed call to the wrong solver is a wrong computation,
                // not a schema breach
                Err(e) => Observation::ok(
                    source,
                    Payload::Failure {
                        diagnostic: e.to_string(),
                    },
                    false,
                ),
            }
        }
        ToolArgs::Keyframes { positions } => {
            match generate_keyframes(query, positions, bundle.latest_computation()) {
                Ok(set) => {
                    let valid = set.is_computed_for(query.scenario_kind);
                    bundle.set_keyframes(set.clone());
                    Observation::ok(source, Payload::Keyframes(set), valid)
                }
                Err(e) => Observation::violation(source, e.to_string()),
            }
        }
        ToolArgs::Refiner { flags } => match refine_prompt(query, flags, bundle.latest_computation()) {
            Ok(prompt) => {
                bundle.set_prompt(prompt.clone());
                Observation::ok(source, Payload::Prompt(prompt), true)
            }
            Err(e) => Observation::violation(source, e.to_string()),
        },
    }
}

/// Executes one cycle: tools in listed order, then generation if flagged.
fn execute_cycle(
    query: &SceneQuery,
    action: &Action,
    bundle: &mut ConditioningBundle,
    world: &dyn World,
    config: &EpisodeConfig,
    noise_seed: u64,
) -> Vec<Observation> {
    let mut observations = Vec::with_capacity(action.tool_calls.len() + 1);
    if action.tool_calls.len() > config.tool_call_cap {
        observations.extend(action.tool_calls.iter().map(|c| {
            Observation::violation(
                Source::from(c.tool),
                format!(
                    "{} tool calls exceed the cap of {}",
                    action.tool_calls.len(),
                    config.tool_call_cap
                ),
            )
        }));
    } else {
        observations.extend(action.tool_calls.iter().map(|c| dispatch(query, c, bundle)));
    }

    if action.generate {
        let scored = world
            .generate(query, bundle, noise_seed)
            .and_then(|video| world.verify(query, &video));
        observations.push(match scored {
            Ok(score) => Observation::ok(Source::Generator, Payload::Score(score), true),
            Err(e) => Observation::violation(Source::Generator, e.to_string()),
        });
    }
    observations
}

fn rank_key(v: &ScoredVideo, thresholds: &ScoreThresholds) -> (bool, f64) {
    (v.score.joint_pass(thresholds.pass), v.score.sa + v.score.pc)
}

/// Best video under the lexicographic ranking (joint pass, SA + PC), earliest
/// cycle winning ties.
pub fn best_video(videos: &[ScoredVideo], thresholds: &ScoreThresholds) -> Option<ScoredVideo> {
    videos.iter().fold(None, |best: Option<ScoredVideo>, v| match best {
        Some(b) if rank_key(v, thresholds) <= rank_key(&b, thresholds) => Some(b),
        _ => Some(*v),
    })
}

pub fn select_best_video(trajectory: &Trajectory, thresholds: &ScoreThresholds) -> Option<ScoredVideo> {
    best_video(&trajectory.videos, thresholds)
}
