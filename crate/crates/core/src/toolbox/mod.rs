//! Physics-aware tools: closed-form solvers, keyframe anchoring and prompt
//! refinement. Every operation here is a pure function of its arguments.

pub mod keyframes;
pub mod kinematics;
pub mod refine;
pub mod solvers;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ParamMap, ScenarioKind, SceneQuery, DEFAULT_GRAVITY};

pub use keyframes::{generate_keyframes, KeyframeAnchor, KeyframeSet};
pub use kinematics::KinematicState;
pub use refine::{refine_prompt, DetailFlag, RefinedPrompt};
pub use solvers::{solve_collision_1d, solve_projectile, solve_rotation, CollisionMode};

use kinematics::{
    collision_start, collision_state, projectile_state, rotation_state, COLLISION_DURATION,
    COLLISION_TIME,
};

/// Number of sampled positions the solver tool requests for projectiles.
pub const PROJECTILE_SAMPLES: usize = 16;

/// Output of one solver invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationResult {
    pub solver_kind: ScenarioKind,
    pub inputs: ParamMap,
    pub outputs: ParamMap,
    /// Projectile only: `(x, y)` positions evenly spaced over the flight.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sampled_positions: Vec<[f64; 2]>,
}

impl ComputationResult {
    fn input(&self, name: &str) -> f64 {
        self.inputs[name]
    }

    /// Clip duration implied by the computed motion.
    pub fn duration(&self) -> f64 {
        match self.solver_kind {
            ScenarioKind::Projectile => self.outputs["time_of_flight"],
            ScenarioKind::Collision1D => COLLISION_DURATION,
            ScenarioKind::Rotation => self.input("duration"),
        }
    }

    /// Exact kinematic state at `fraction` of the clip.
    pub fn state_at_fraction(&self, fraction: f64) -> KinematicState {
        let t = fraction * self.duration();
        match self.solver_kind {
            ScenarioKind::Projectile => projectile_state(
                self.input("launch_speed"),
                self.input("launch_angle"),
                self.input("gravity"),
                t,
            ),
            ScenarioKind::Collision1D => {
                let v = [self.input("v1"), self.input("v2")];
                let after = [self.outputs["v1_final"], self.outputs["v2_final"]];
                collision_state(collision_start(v), v, after, Some(COLLISION_TIME), t)
            }
            ScenarioKind::Rotation => rotation_state(
                self.input("inertia"),
                self.input("torque"),
                self.input("omega0"),
                t,
            ),
        }
    }
}

/// Runs the solver for `kind` on an input mapping (observable names, plus an
/// optional `gravity` for projectiles).
pub fn solve(kind: ScenarioKind, inputs: &ParamMap) -> Result<ComputationResult> {
    let get = |name: &str| {
        inputs
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("missing solver input {name}")))
    };
    match kind {
        ScenarioKind::Projectile => solve_projectile(
            get("launch_speed")?,
            get("launch_angle")?,
            inputs.get("gravity").copied().unwrap_or(DEFAULT_GRAVITY),
            PROJECTILE_SAMPLES,
        ),
        ScenarioKind::Collision1D => solve_collision_1d(
            get("m1")?,
            get("m2")?,
            get("v1")?,
            get("v2")?,
            CollisionMode::from_restitution(get("restitution")?)?,
        ),
        ScenarioKind::Rotation => solve_rotation(
            get("inertia")?,
            get("torque")?,
            get("duration")?,
            get("omega0")?,
        ),
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale == 0.0 || (a - b).abs() <= rel * scale
}

/// True iff the result was computed with the scene's solver on the scene's
/// observable parameters (1e-9 relative on every shared key).
///
/// Hidden parameters are never consulted.
pub fn validate_computation(query: &SceneQuery, result: &ComputationResult) -> bool {
    result.solver_kind == query.scenario_kind
        && query
            .observable_params
            .iter()
            .filter_map(|(k, v)| result.inputs.get(k).map(|r| (*v, *r)))
            .all(|(q, r)| close(q, r, 1e-9))
}
