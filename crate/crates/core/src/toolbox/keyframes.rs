//! Keyframe anchoring: symbolic kinematic states pinned at fractional clip
//! positions, acting as temporal boundary conditions for the generator.

use serde::{Deserialize, Serialize};

use super::kinematics::{collision_start, collision_state, KinematicState, COLLISION_DURATION};
use super::ComputationResult;
use crate::error::{Error, Result};
use crate::scene::{ScenarioKind, SceneQuery, DEFAULT_GRAVITY};

pub const MAX_ANCHORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeAnchor {
    pub position_fraction: f64,
    pub state: KinematicState,
    pub anchor_prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeSet {
    /// Strictly increasing in `position_fraction`.
    pub anchors: Vec<KeyframeAnchor>,
    pub source_computation: Option<ComputationResult>,
}

impl KeyframeSet {
    /// True when the anchors came from a solver result of the scene's kind.
    pub fn is_computed_for(&self, kind: ScenarioKind) -> bool {
        self.source_computation
            .as_ref()
            .is_some_and(|c| c.solver_kind == kind)
    }
}

/// Builds 1–3 anchors. With a computation of the scene's kind the anchor
/// states are exact; otherwise they are a constant-velocity extrapolation of
/// the observable initial conditions.
pub fn generate_keyframes(
    query: &SceneQuery,
    positions: &[f64],
    computation: Option<&ComputationResult>,
) -> Result<KeyframeSet> {
    if positions.is_empty() || positions.len() > MAX_ANCHORS {
        return Err(Error::InvalidArgument(format!(
            "expected 1..={MAX_ANCHORS} keyframe positions, got {}",
            positions.len()
        )));
    }
    if let Some(p) = positions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!(
            "keyframe position {p} outside [0, 1]"
        )));
    }
    let mut sorted = positions.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate keyframe position".into()));
    }

    let computation = computation.filter(|c| c.solver_kind == query.scenario_kind);
    let anchors = sorted
        .into_iter()
        .map(|f| {
            let state = match computation {
                Some(c) => c.state_at_fraction(f),
                None => extrapolate(query, f)?,
            };
            Ok(KeyframeAnchor {
                position_fraction: f,
                anchor_prompt: describe(query.scenario_kind, f, &state),
                state,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(KeyframeSet {
        anchors,
        source_computation: computation.cloned(),
    })
}

/// Clip duration a planner can infer from the caption alone.
pub fn nominal_duration(query: &SceneQuery) -> Result<f64> {
    Ok(match query.scenario_kind {
        ScenarioKind::Projectile => {
            2.0 * query.require("launch_speed")? * query.require("launch_angle")?.sin()
                / DEFAULT_GRAVITY
        }
        ScenarioKind::Collision1D => COLLISION_DURATION,
        ScenarioKind::Rotation => query.require("duration")?,
    })
}

fn extrapolate(query: &SceneQuery, fraction: f64) -> Result<KinematicState> {
    let t = fraction * nominal_duration(query)?;
    Ok(match query.scenario_kind {
        ScenarioKind::Projectile => {
            let (v, th) = (query.require("launch_speed")?, query.require("launch_angle")?);
            let vel = [v * th.cos(), v * th.sin()];
            KinematicState::new(vec![vel[0] * t, vel[1] * t], vel.to_vec())
        }
        ScenarioKind::Collision1D => {
            let v = [query.require("v1")?, query.require("v2")?];
            collision_state(collision_start(v), v, v, None, t)
        }
        ScenarioKind::Rotation => {
            let w = query.require("omega0")?;
            KinematicState::new(vec![w * t], vec![w])
        }
    })
}

fn describe(kind: ScenarioKind, fraction: f64, s: &KinematicState) -> String {
    let pct = fraction * 100.0;
    match kind {
        ScenarioKind::Projectile => format!(
            "frame at {pct:.0}% of the clip: ball at x={:.3} m, height {:.3} m, moving ({:.3}, {:.3}) m/s",
            s.position[0], s.position[1], s.velocity[0], s.velocity[1]
        ),
        ScenarioKind::Collision1D => format!(
            "frame at {pct:.0}% of the clip: body A at {:.3} m moving {:.3} m/s, body B at {:.3} m moving {:.3} m/s",
            s.position[0], s.velocity[0], s.position[1], s.velocity[1]
        ),
        ScenarioKind::Rotation => format!(
            "frame at {pct:.0}% of the clip: rotor turned {:.3} rad, spinning at {:.3} rad/s",
            s.position[0], s.velocity[0]
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::params;
    use crate::toolbox::solve;
    use std::f64::consts::FRAC_PI_4;

    fn ball(speed: f64, angle: f64) -> SceneQuery {
        SceneQuery::new(
            "ball",
            ScenarioKind::Projectile,
            params([("launch_angle", angle), ("launch_speed", speed)]),
        )
        .unwrap()
    }

    #[test]
    fn symmetric_flight_midpoint_is_apex() {
        let q = ball(10.0, FRAC_PI_4);
        let c = solve(ScenarioKind::Projectile, &q.observable_params).unwrap();
        let set = generate_keyframes(&q, &[0.0, 0.5, 1.0], Some(&c)).unwrap();
        let mid = &set.anchors[1].state;
        assert!((mid.position[1] - c.outputs["apex_height"]).abs() < 1e-12);
        assert!((mid.position[0] - c.outputs["range"] / 2.0).abs() < 1e-12);
        assert!(mid.velocity[1].abs() < 1e-12);
    }

    #[test]
    fn final_anchor_lands_at_range() {
        let q = ball(10.0, FRAC_PI_4);
        let c = solve(ScenarioKind::Projectile, &q.observable_params).unwrap();
        let set = generate_keyframes(&q, &[0.0, 1.0], Some(&c)).unwrap();
        let end = &set.anchors[1].state;
        assert!((end.position[0] - 10.19368).abs() < 1e-5);
        assert!(end.position[1].abs() < 1e-12);
    }

    #[test]
    fn fallback_ignores_gravity() {
        let q = ball(10.0, FRAC_PI_4);
        let set = generate_keyframes(&q, &[0.5], None).unwrap();
        let s = &set.anchors[0].state;
        let t = 0.5 * nominal_duration(&q).unwrap();
        let v = 10.0 * FRAC_PI_4.sin();
        assert!((s.position[1] - v * t).abs() < 1e-12);
        assert_eq!(s.velocity[1], v);
        assert!(set.source_computation.is_none());
    }

    #[test]
    fn mismatched_computation_falls_back() {
        let q = ball(10.0, 0.5);
        let c = crate::toolbox::solve_rotation(1.0, 1.0, 1.0, 0.0).unwrap();
        let with = generate_keyframes(&q, &[1.0], Some(&c)).unwrap();
        let without = generate_keyframes(&q, &[1.0], None).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn anchors_are_sorted() {
        let q = ball(8.0, 0.5);
        let set = generate_keyframes(&q, &[1.0, 0.0, 0.5], None).unwrap();
        let f: Vec<f64> = set.anchors.iter().map(|a| a.position_fraction).collect();
        assert_eq!(f, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_positions() {
        let q = ball(8.0, 0.5);
        assert!(generate_keyframes(&q, &[], None).is_err());
        assert!(generate_keyframes(&q, &[0.0, 0.25, 0.5, 1.0], None).is_err());
        assert!(generate_keyframes(&q, &[1.2], None).is_err());
        assert!(generate_keyframes(&q, &[0.3, 0.3], None).is_err());
    }
}
