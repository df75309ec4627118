//! Deterministic stand-in for a frozen video generator and its verifier.
//!
//! A scene carries exact ground truth; the generator hallucinates the scene's
//! dynamic parameters with an error that shrinks as the conditioning bundle
//! gets richer, and the verifier scores semantic adherence (SA) and physical
//! commonsense (PC) on `[1, 5]` from residuals that are computable from the
//! video and the scene alone.

mod bank;
mod generator;
mod verifier;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ParamMap, ScenarioKind, SceneQuery};
use crate::toolbox::kinematics::KinematicState;
use crate::toolbox::{validate_computation, ComputationResult, KeyframeSet, RefinedPrompt};

pub use bank::{ground_truth, sample_scene_bank, KindMix};
pub use generator::{generate_video, perturbation_draws, corruption_magnitude};
pub use verifier::{physics_residual, semantic_residual, verify};

/// Tunable constants of the synthetic world. Defaults are the frozen
/// calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConstants {
    /// Frames per clip.
    pub frames: usize,
    /// Corruption reduction when the bundle holds a computation valid for the scene.
    pub alpha_compute: f64,
    /// Corruption reduction at full prompt detail (scaled by detail fraction).
    pub alpha_prompt: f64,
    /// Convex pull toward the anchor path, applied once per anchor.
    pub alpha_keyframe: f64,
    /// PC = 5 - lambda_pc * physics residual.
    pub lambda_pc: f64,
    /// SA = 5 - lambda_sa * semantic residual.
    pub lambda_sa: f64,
    /// Weight of frame roughness inside the physics residual.
    pub roughness_weight: f64,
    /// Semantic residual added when the scene's key event is missing.
    pub event_weight: f64,
    /// Per-frame positional noise, relative to the scene's length scale.
    pub jitter: f64,
    /// Mean whole-clip placement drift, relative to the scene's length scale.
    pub drift: f64,
    /// Round scores to the nearest integer, as a discrete 1–5 judge would.
    pub integer_scores: bool,
}

impl Default for WorldConstants {
    fn default() -> Self {
        WorldConstants {
            frames: 16,
            alpha_compute: 0.7,
            alpha_prompt: 0.2,
            alpha_keyframe: 0.25,
            lambda_pc: 7.5,
            lambda_sa: 5.0,
            roughness_weight: 5.0,
            event_weight: 0.5,
            jitter: 0.002,
            drift: 0.24,
            integer_scores: false,
        }
    }
}

impl WorldConstants {
    pub fn check(&self) -> Result<()> {
        if self.frames < 6 {
            return Err(Error::Config("world.frames must be >= 6".into()));
        }
        let unit = [
            ("alpha_compute", self.alpha_compute),
            ("alpha_prompt", self.alpha_prompt),
            ("alpha_keyframe", self.alpha_keyframe),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("world.{name} must lie in [0, 1]")));
            }
        }
        let non_negative = [
            ("lambda_pc", self.lambda_pc),
            ("lambda_sa", self.lambda_sa),
            ("roughness_weight", self.roughness_weight),
            ("event_weight", self.event_weight),
            ("jitter", self.jitter),
            ("drift", self.drift),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("world.{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub query: SceneQuery,
    /// True constants the planner cannot observe (gravity, momentum gain,
    /// semantic drift scale).
    pub hidden_params: ParamMap,
    /// `frames` exact states over `[0, duration]`.
    pub ground_truth: Vec<KinematicState>,
    pub duration: f64,
    pub base_corruption: f64,
}

impl SceneSpec {
    pub fn kind(&self) -> ScenarioKind {
        self.query.scenario_kind
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        self.duration * k as f64 / (self.ground_truth.len() - 1) as f64
    }

    /// Characteristic length of the clip, used to normalize residuals.
    pub fn length_scale(&self) -> f64 {
        let extent = self
            .ground_truth
            .iter()
            .flat_map(|s| s.position.iter())
            .fold(0.0_f64, |m, p| m.max(p.abs()));
        match self.kind() {
            ScenarioKind::Rotation => extent.max(0.5),
            _ => extent.max(1e-3),
        }
    }

    pub fn hidden(&self, name: &str) -> f64 {
        self.hidden_params[name]
    }
}

/// Tool outputs accumulated across cycles and handed to the generator.
///
/// Later prompts and keyframe sets replace earlier ones; computations
/// accumulate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditioningBundle {
    pub refined_prompt: Option<RefinedPrompt>,
    pub keyframes: Option<KeyframeSet>,
    pub computations: Vec<ComputationResult>,
}

impl ConditioningBundle {
    pub fn add_computation(&mut self, c: ComputationResult) {
        self.computations.push(c);
    }

    pub fn set_keyframes(&mut self, k: KeyframeSet) {
        self.keyframes = Some(k);
    }

    pub fn set_prompt(&mut self, p: RefinedPrompt) {
        self.refined_prompt = Some(p);
    }

    pub fn latest_computation(&self) -> Option<&ComputationResult> {
        self.computations.last()
    }

    pub fn has_valid_computation(&self, query: &SceneQuery) -> bool {
        self.computations.iter().any(|c| validate_computation(query, c))
    }

    pub fn detail_fraction(&self) -> f64 {
        self.refined_prompt
            .as_ref()
            .map_or(0.0, RefinedPrompt::detail_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractVideo {
    pub frames: Vec<KinematicState>,
    pub realized_params: ParamMap,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifierScore {
    pub sa: f64,
    pub pc: f64,
}

impl VerifierScore {
    pub fn new(sa: f64, pc: f64) -> Self {
        VerifierScore {
            sa: sa.clamp(1.0, 5.0),
            pc: pc.clamp(1.0, 5.0),
        }
    }

    pub fn joint_pass(&self, threshold: f64) -> bool {
        self.sa >= threshold && self.pc >= threshold
    }
}

/// Failure modes of a generator or verifier backend.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown scene {0}")]
    UnknownScene(String),
    #[error("endpoint timed out")]
    Timeout,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("{0}")]
    Backend(String),
}

/// Generator + verifier backend an episode talks to.
pub trait World: Sync {
    fn contains(&self, query: &SceneQuery) -> bool;

    fn generate(
        &self,
        query: &SceneQuery,
        conditioning: &ConditioningBundle,
        noise_seed: u64,
    ) -> std::result::Result<AbstractVideo, WorldError>;

    fn verify(
        &self,
        query: &SceneQuery,
        video: &AbstractVideo,
    ) -> std::result::Result<VerifierScore, WorldError>;
}

/// In-process world over a fixed scene bank.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    scenes: Vec<SceneSpec>,
    index: HashMap<String, usize>,
    constants: WorldConstants,
}

impl SyntheticWorld {
    pub fn new(scenes: Vec<SceneSpec>, constants: WorldConstants) -> Result<Self> {
        constants.check()?;
        let mut index = HashMap::with_capacity(scenes.len());
        for (i, s) in scenes.iter().enumerate() {
            if index.insert(s.query.caption.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate scene caption {}", s.query.caption)));
            }
        }
        Ok(SyntheticWorld {
            scenes,
            index,
            constants,
        })
    }

    pub fn scenes(&self) -> &[SceneSpec] {
        &self.scenes
    }

    pub fn queries(&self) -> Vec<SceneQuery> {
        self.scenes.iter().map(|s| s.query.clone()).collect()
    }

    pub fn constants(&self) -> &WorldConstants {
        &self.constants
    }

    pub fn scene(&self, query: &SceneQuery) -> Option<&SceneSpec> {
        self.index
            .get(&query.caption)
            .map(|&i| &self.scenes[i])
            .filter(|s| s.query == *query)
    }

    fn lookup(&self, query: &SceneQuery) -> std::result::Result<&SceneSpec, WorldError> {
        self.scene(query)
            .ok_or_else(|| WorldError::UnknownScene(query.caption.clone()))
    }
}

impl World for SyntheticWorld {
    fn contains(&self, query: &SceneQuery) -> bool {
        self.scene(query).is_some()
    }

    fn generate(
        &self,
        query: &SceneQuery,
        conditioning: &ConditioningBundle,
        noise_seed: u64,
    ) -> std::result::Result<AbstractVideo, WorldError> {
        let scene = self.lookup(query)?;
        Ok(generate_video(scene, conditioning, noise_seed, &self.constants))
    }

    fn verify(
        &self,
        query: &SceneQuery,
        video: &AbstractVideo,
    ) -> std::result::Result<VerifierScore, WorldError> {
        let scene = self.lookup(query)?;
        verify(scene, video, &self.constants).map_err(|e| WorldError::Backend(e.to_string()))
    }
}
