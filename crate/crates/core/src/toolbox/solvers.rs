//! Closed-form Newtonian solvers backing the numeric-solver tool.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::kinematics::{projectile_flight_time, projectile_state};
use super::ComputationResult;
use crate::error::{Error, Result};
use crate::scene::{params, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollisionMode {
    Elastic,
    PerfectlyInelastic,
}

impl CollisionMode {
    /// Restitution coefficient as stored in scene parameters.
    pub fn restitution(self) -> f64 {
        match self {
            CollisionMode::Elastic => 1.0,
            CollisionMode::PerfectlyInelastic => 0.0,
        }
    }

    pub fn from_restitution(e: f64) -> Result<Self> {
        if e == 1.0 {
            Ok(CollisionMode::Elastic)
        } else if e == 0.0 {
            Ok(CollisionMode::PerfectlyInelastic)
        } else {
            Err(Error::InvalidArgument(format!(
                "restitution must be 0 or 1, got {e}"
            )))
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// Ballistic flight over flat ground, launched from the origin.
pub fn solve_projectile(
    launch_speed: f64,
    launch_angle: f64,
    gravity: f64,
    n_samples: usize,
) -> Result<ComputationResult> {
    finite("launch_speed", launch_speed)?;
    finite("launch_angle", launch_angle)?;
    finite("gravity", gravity)?;
    if launch_speed < 0.0 {
        return Err(invalid("launch_speed must be >= 0"));
    }
    if gravity <= 0.0 {
        return Err(invalid("gravity must be > 0"));
    }
    if !(0.0..=FRAC_PI_2).contains(&launch_angle) {
        return Err(invalid("launch_angle must lie in [0, pi/2]"));
    }
    if n_samples < 2 {
        return Err(invalid("n_samples must be >= 2"));
    }

    let vy = launch_speed * launch_angle.sin();
    let vx = launch_speed * launch_angle.cos();
    let tof = projectile_flight_time(launch_speed, launch_angle, gravity);
    let apex_time = vy / gravity;
    let sampled_positions = (0..n_samples)
        .map(|k| {
            let t = tof * k as f64 / (n_samples - 1) as f64;
            let s = projectile_state(launch_speed, launch_angle, gravity, t);
            [s.position[0], s.position[1]]
        })
        .collect();

    Ok(ComputationResult {
        solver_kind: ScenarioKind::Projectile,
        inputs: params([
            ("gravity", gravity),
            ("launch_angle", launch_angle),
            ("launch_speed", launch_speed),
        ]),
        outputs: params([
            ("apex_height", vy * vy / (2.0 * gravity)),
            ("apex_time", apex_time),
            ("range", vx * tof),
            ("time_of_flight", tof),
        ]),
        sampled_positions,
    })
}

/// Head-on collision of two point masses.
pub fn solve_collision_1d(
    m1: f64,
    m2: f64,
    v1: f64,
    v2: f64,
    mode: CollisionMode,
) -> Result<ComputationResult> {
    for (name, v) in [("m1", m1), ("m2", m2), ("v1", v1), ("v2", v2)] {
        finite(name, v)?;
    }
    if m1 <= 0.0 || m2 <= 0.0 {
        return Err(invalid("masses must be > 0"));
    }
    let (u1, u2) = collision_outcome(m1, m2, v1, v2, mode);
    let ke = |a: f64, b: f64| 0.5 * m1 * a * a + 0.5 * m2 * b * b;

    Ok(ComputationResult {
        solver_kind: ScenarioKind::Collision1D,
        inputs: params([
            ("m1", m1),
            ("m2", m2),
            ("restitution", mode.restitution()),
            ("v1", v1),
            ("v2", v2),
        ]),
        outputs: params([
            ("kinetic_energy_after", ke(u1, u2)),
            ("kinetic_energy_before", ke(v1, v2)),
            ("momentum_after", m1 * u1 + m2 * u2),
            ("momentum_before", m1 * v1 + m2 * v2),
            ("v1_final", u1),
            ("v2_final", u2),
        ]),
        sampled_positions: Vec::new(),
    })
}

/// Post-impact velocities.
pub fn collision_outcome(m1: f64, m2: f64, v1: f64, v2: f64, mode: CollisionMode) -> (f64, f64) {
    let total = m1 + m2;
    match mode {
        CollisionMode::Elastic => (
            ((m1 - m2) * v1 + 2.0 * m2 * v2) / total,
            ((m2 - m1) * v2 + 2.0 * m1 * v1) / total,
        ),
        CollisionMode::PerfectlyInelastic => {
            let v = (m1 * v1 + m2 * v2) / total;
            (v, v)
        }
    }
}

/// Rigid body spun by a constant torque about a fixed axis.
pub fn solve_rotation(
    inertia: f64,
    torque: f64,
    duration: f64,
    omega0: f64,
) -> Result<ComputationResult> {
    for (name, v) in [
        ("inertia", inertia),
        ("torque", torque),
        ("duration", duration),
        ("omega0", omega0),
    ] {
        finite(name, v)?;
    }
    if inertia <= 0.0 {
        return Err(invalid("inertia must be > 0"));
    }
    if duration < 0.0 {
        return Err(invalid("duration must be >= 0"));
    }
    let alpha = torque / inertia;

    Ok(ComputationResult {
        solver_kind: ScenarioKind::Rotation,
        inputs: params([
            ("duration", duration),
            ("inertia", inertia),
            ("omega0", omega0),
            ("torque", torque),
        ]),
        outputs: params([
            ("angular_acceleration", alpha),
            ("omega_final", omega0 + alpha * duration),
            ("total_angle", omega0 * duration + 0.5 * alpha * duration * duration),
        ]),
        sampled_positions: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn out(r: &ComputationResult, k: &str) -> f64 {
        r.outputs[k]
    }

    #[test]
    fn projectile_reference_values() {
        let r = solve_projectile(10.0, FRAC_PI_4, 9.81, 16).unwrap();
        assert_relative_eq!(out(&r, "time_of_flight"), 1.44161, epsilon = 1e-5);
        assert_relative_eq!(out(&r, "range"), 10.19368, epsilon = 1e-5);
        assert_relative_eq!(out(&r, "apex_height"), 2.54842, epsilon = 1e-5);
    }

    #[test]
    fn projectile_zero_speed_is_a_point() {
        let r = solve_projectile(0.0, 0.7, 9.81, 5).unwrap();
        assert!(r.outputs.values().all(|&v| v == 0.0));
        assert!(r.sampled_positions.iter().all(|p| *p == [0.0, 0.0]));
    }

    #[test]
    fn projectile_vertical_launch() {
        let r = solve_projectile(10.0, FRAC_PI_2, 9.81, 8).unwrap();
        assert!(out(&r, "range").abs() < 1e-12);
        assert_relative_eq!(out(&r, "apex_height"), 100.0 / (2.0 * 9.81), max_relative = 1e-15);
    }

    #[test]
    fn projectile_samples_on_parabola() {
        let (v, th, g) = (13.0, 0.9, 9.81);
        let r = solve_projectile(v, th, g, 33).unwrap();
        for p in &r.sampled_positions {
            let x = p[0];
            let t = x / (v * th.cos());
            let y = v * th.sin() * t - 0.5 * g * t * t;
            assert!((p[1] - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn projectile_rejects_bad_args() {
        assert!(solve_projectile(-1.0, 0.5, 9.81, 4).is_err());
        assert!(solve_projectile(1.0, 2.0, 9.81, 4).is_err());
        assert!(solve_projectile(1.0, 0.5, 0.0, 4).is_err());
        assert!(solve_projectile(1.0, 0.5, 9.81, 1).is_err());
    }

    #[test]
    fn collision_reference_values() {
        let r = solve_collision_1d(1.5, 1.5, 5.0, 0.0, CollisionMode::Elastic).unwrap();
        assert_relative_eq!(out(&r, "v1_final"), 0.0, epsilon = 1e-12);
        assert_relative_eq!(out(&r, "v2_final"), 5.0, epsilon = 1e-12);

        let r = solve_collision_1d(2.0, 1.0, 3.0, 0.0, CollisionMode::PerfectlyInelastic).unwrap();
        assert_relative_eq!(out(&r, "v1_final"), 2.0, epsilon = 1e-12);
        assert_eq!(out(&r, "v1_final"), out(&r, "v2_final"));
    }

    #[test]
    fn collision_elastic_by_substitution() {
        let r = solve_collision_1d(2.0, 1.0, 3.0, 0.0, CollisionMode::Elastic).unwrap();
        let (u1, u2) = (out(&r, "v1_final"), out(&r, "v2_final"));
        assert_relative_eq!(u1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(u2, 4.0, epsilon = 1e-12);
        // direct substitution: momentum 6 -> 6, energy 9 -> 9
        assert_relative_eq!(2.0 * u1 + 1.0 * u2, 6.0, epsilon = 1e-12);
        assert_relative_eq!(0.5 * 2.0 * u1 * u1 + 0.5 * u2 * u2, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn collision_rejects_non_positive_mass() {
        assert!(solve_collision_1d(0.0, 1.0, 1.0, 0.0, CollisionMode::Elastic).is_err());
        assert!(solve_collision_1d(1.0, -2.0, 1.0, 0.0, CollisionMode::Elastic).is_err());
    }

    #[test]
    fn rotation_reference_values() {
        let r = solve_rotation(2.0, 4.0, 3.0, 0.0).unwrap();
        assert_relative_eq!(out(&r, "omega_final"), 6.0);
        assert_relative_eq!(out(&r, "total_angle"), 9.0);

        let r = solve_rotation(3.0, 0.0, 2.5, 1.2).unwrap();
        assert_eq!(out(&r, "omega_final"), 1.2);
        assert_relative_eq!(out(&r, "total_angle"), 3.0);

        assert!(solve_rotation(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(solve_rotation(1.0, 1.0, -1.0, 0.0).is_err());
    }
}
