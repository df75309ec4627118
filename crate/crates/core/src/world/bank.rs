use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SceneSpec, WorldConstants};
use crate::error::{Error, Result};
use crate::scene::{params, ParamMap, ScenarioKind, SceneQuery, DEFAULT_GRAVITY};
use crate::seeding::{rng_for, stream};
use crate::toolbox::kinematics::{
    collision_start, collision_state, projectile_flight_time, projectile_state, rotation_state,
    KinematicState, COLLISION_DURATION, COLLISION_TIME,
};
use crate::toolbox::solvers::{collision_outcome, CollisionMode};

/// Relative weight per scenario kind. Missing kinds weigh zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KindMix(pub BTreeMap<ScenarioKind, f64>);

impl KindMix {
    pub fn uniform() -> Self {
        KindMix(ScenarioKind::ALL.iter().map(|k| (*k, 1.0)).collect())
    }

    pub fn only(kind: ScenarioKind) -> Self {
        KindMix(BTreeMap::from([(kind, 1.0)]))
    }

    pub fn weights(&self) -> Result<[f64; 3]> {
        let mut w = [0.0; 3];
        for (kind, &v) in &self.0 {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("weight for {kind} must be finite and >= 0")));
            }
            w[kind.index()] = v;
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("kind weights are all zero".into()));
        }
        Ok(w)
    }
}

impl Default for KindMix {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Draws `n` scenes. Parameter ranges:
/// - projectile: speed U[5, 20] m/s, angle U[0.35, 1.22] rad;
/// - collision: masses U[0.5, 5] kg, v1 U[1, 6] m/s, v2 U[-3, 0.5] m/s,
///   elastic or perfectly inelastic with equal odds;
/// - rotation: inertia U[0.5, 4] kg·m², |torque| U[0.5, 5] N·m with random
///   sign, omega0 U[-2, 2] rad/s, duration U[1, 4] s.
pub fn sample_scene_bank(
    seed: u64,
    n: usize,
    kind_mix: &KindMix,
    corruption: f64,
    constants: &WorldConstants,
) -> Result<Vec<SceneSpec>> {
    if n == 0 {
        return Err(Error::Config("scene bank size must be >= 1".into()));
    }
    if !(corruption.is_finite() && corruption >= 0.0) {
        return Err(Error::Config("base corruption must be finite and >= 0".into()));
    }
    constants.check()?;
    let picker = WeightedIndex::new(kind_mix.weights()?)
        .map_err(|e| Error::Config(format!("kind weights: {e}")))?;
    let mut rng = rng_for(seed, &[stream::SCENE_BANK]);

    (0..n)
        .map(|i| {
            let kind = ScenarioKind::ALL[picker.sample(&mut rng)];
            let (caption, observable) = match kind {
                ScenarioKind::Projectile => {
                    let v = rng.random_range(5.0..20.0);
                    let th: f64 = rng.random_range(0.35..1.22);
                    (
                        format!(
                            "a ball is launched at {v:.1} m/s, {:.0} degrees above the ground",
                            th * 180.0 / PI
                        ),
                        params([("launch_angle", th), ("launch_speed", v)]),
                    )
                }
                ScenarioKind::Collision1D => {
                    let m1 = rng.random_range(0.5..5.0);
                    let m2 = rng.random_range(0.5..5.0);
                    let v1 = rng.random_range(1.0..6.0);
                    let v2 = rng.random_range(-3.0..0.5);
                    let elastic = rng.random_bool(0.5);
                    let how = if elastic { "bounces off" } else { "sticks to" };
                    (
                        format!("a {m1:.1} kg cart at {v1:.1} m/s {how} a {m2:.1} kg cart at {v2:.1} m/s"),
                        params([
                            ("m1", m1),
                            ("m2", m2),
                            ("restitution", if elastic { 1.0 } else { 0.0 }),
                            ("v1", v1),
                            ("v2", v2),
                        ]),
                    )
                }
                ScenarioKind::Rotation => {
                    let inertia = rng.random_range(0.5..4.0);
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let torque = sign * rng.random_range(0.5..5.0);
                    let omega0 = rng.random_range(-2.0..2.0);
                    let duration = rng.random_range(1.0..4.0);
                    (
                        format!(
                            "a wheel of inertia {inertia:.2} kg m^2 spinning at {omega0:.1} rad/s receives {torque:.1} N m for {duration:.1} s"
                        ),
                        params([
                            ("duration", duration),
                            ("inertia", inertia),
                            ("omega0", omega0),
                            ("torque", torque),
                        ]),
                    )
                }
            };
            let mut hidden = ParamMap::new();
            match kind {
                ScenarioKind::Projectile => {
                    hidden.insert("gravity".into(), DEFAULT_GRAVITY);
                }
                ScenarioKind::Collision1D => {
                    hidden.insert("momentum_gain".into(), 1.0);
                }
                ScenarioKind::Rotation => {}
            }
            hidden.insert(
                "semantic_drift".into(),
                constants.drift * rng.random_range(0.5..1.5),
            );
            let query = SceneQuery::new(format!("[{seed}:{i:04}] {caption}"), kind, observable)?;
            let (ground_truth, duration) = ground_truth(&query, &hidden, constants.frames)?;
            Ok(SceneSpec {
                query,
                hidden_params: hidden,
                ground_truth,
                duration,
                base_corruption: corruption,
            })
        })
        .collect()
}

/// Exact states at `frames` evenly spaced instants, and the clip duration.
pub fn ground_truth(
    query: &SceneQuery,
    hidden: &ParamMap,
    frames: usize,
) -> Result<(Vec<KinematicState>, f64)> {
    let p = |k: &str| query.require(k);
    let times = |d: f64| (0..frames).map(move |k| d * k as f64 / (frames - 1) as f64);
    Ok(match query.scenario_kind {
        ScenarioKind::Projectile => {
            let g = hidden.get("gravity").copied().unwrap_or(DEFAULT_GRAVITY);
            let (v, th) = (p("launch_speed")?, p("launch_angle")?);
            let d = projectile_flight_time(v, th, g);
            (times(d).map(|t| projectile_state(v, th, g, t)).collect(), d)
        }
        ScenarioKind::Collision1D => {
            let v = [p("v1")?, p("v2")?];
            let mode = CollisionMode::from_restitution(p("restitution")?)?;
            let (u1, u2) = collision_outcome(p("m1")?, p("m2")?, v[0], v[1], mode);
            let start = collision_start(v);
            let states = times(COLLISION_DURATION)
                .map(|t| collision_state(start, v, [u1, u2], Some(COLLISION_TIME), t))
                .collect();
            (states, COLLISION_DURATION)
        }
        ScenarioKind::Rotation => {
            let d = p("duration")?;
            let (i, tau, w) = (p("inertia")?, p("torque")?, p("omega0")?);
            (times(d).map(|t| rotation_state(i, tau, w, t)).collect(), d)
        }
    })
}
