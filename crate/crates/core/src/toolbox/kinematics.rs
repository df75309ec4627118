//! Closed-form state evaluation shared by the solvers, the keyframe tool and
//! the synthetic world's ground truth.
//!
//! Timeline conventions:
//! - projectile clips span launch to landing (`[0, time_of_flight]`);
//! - collision clips span [`COLLISION_DURATION`] seconds, the two point bodies
//!   meet at the origin at [`COLLISION_TIME`];
//! - rotation clips span the scene's `duration`.

use serde::{Deserialize, Serialize};

pub const COLLISION_TIME: f64 = 1.0;
pub const COLLISION_DURATION: f64 = 2.0 * COLLISION_TIME;

/// Kinematic state of a scene at one instant.
///
/// Projectile: position `[x, y]` m, velocity `[vx, vy]` m/s.
/// Collision: position `[x1, x2]` m, velocity `[v1, v2]` m/s.
/// Rotation: position `[angle]` rad, velocity `[omega]` rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl KinematicState {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Self {
        KinematicState { position, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.velocity).all(|v| v.is_finite())
    }

    /// Euclidean distance between positions.
    pub fn position_distance(&self, other: &KinematicState) -> f64 {
        self.position
            .iter()
            .zip(&other.position)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Convex combination `(1 - w) * self + w * target`, componentwise.
    pub fn pulled_toward(&self, target: &KinematicState, w: f64) -> KinematicState {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
        };
        KinematicState {
            position: mix(&self.position, &target.position),
            velocity: mix(&self.velocity, &target.velocity),
        }
    }
}

pub fn projectile_state(speed: f64, angle: f64, gravity: f64, t: f64) -> KinematicState {
    let (vx, vy) = (speed * angle.cos(), speed * angle.sin());
    KinematicState::new(
        vec![vx * t, vy * t - 0.5 * gravity * t * t],
        vec![vx, vy - gravity * t],
    )
}

pub fn projectile_flight_time(speed: f64, angle: f64, gravity: f64) -> f64 {
    2.0 * speed * angle.sin() / gravity
}

/// Two point bodies starting at `start`, moving at `before` until `impact`,
/// then at `after` from the shared contact point. Velocity is right-continuous
/// at the impact instant. `impact = None` means the bodies never meet.
pub fn collision_state(
    start: [f64; 2],
    before: [f64; 2],
    after: [f64; 2],
    impact: Option<f64>,
    t: f64,
) -> KinematicState {
    match impact {
        Some(tc) if t >= tc => {
            let contact = start[0] + before[0] * tc;
            let dt = t - tc;
            KinematicState::new(
                vec![contact + after[0] * dt, contact + after[1] * dt],
                after.to_vec(),
            )
        }
        _ => KinematicState::new(
            vec![start[0] + before[0] * t, start[1] + before[1] * t],
            before.to_vec(),
        ),
    }
}

/// Initial positions that make bodies with velocities `v` meet at the origin
/// at [`COLLISION_TIME`].
pub fn collision_start(v: [f64; 2]) -> [f64; 2] {
    [-v[0] * COLLISION_TIME, -v[1] * COLLISION_TIME]
}

pub fn rotation_state(inertia: f64, torque: f64, omega0: f64, t: f64) -> KinematicState {
    let alpha = torque / inertia;
    KinematicState::new(
        vec![omega0 * t + 0.5 * alpha * t * t],
        vec![omega0 + alpha * t],
    )
}
