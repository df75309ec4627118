//! Corruption model of the synthetic generator.
//!
//! Each dynamic parameter is realized as `true * (1 + e * u)` with `u` drawn
//! from U[-1, 1] and
//! `e = base_corruption * (1 - alpha_compute * c) * (1 - alpha_prompt * p)`,
//! where `c` flags a computation valid for the scene and `p` is the refined
//! prompt's detail fraction. Frames are then pulled toward the keyframe anchor
//! path, and a whole-clip placement drift plus per-frame jitter is added last.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::{AbstractVideo, ConditioningBundle, SceneSpec, WorldConstants};
use crate::scene::{ParamMap, ScenarioKind};
use crate::seeding::{rng_for, stream};
use crate::toolbox::kinematics::{
    collision_state, projectile_state, rotation_state, KinematicState,
};
use crate::toolbox::solvers::{collision_outcome, CollisionMode};
use crate::toolbox::KeyframeSet;

const N_DRAWS: usize = 3;

fn generator_rng(noise_seed: u64) -> ChaCha8Rng {
    rng_for(noise_seed, &[stream::GENERATOR])
}

fn draw_perturbations(rng: &mut ChaCha8Rng) -> [f64; N_DRAWS] {
    std::array::from_fn(|_| rng.random_range(-1.0..=1.0))
}

/// The U[-1, 1] draws a given noise seed assigns to the scene's perturbed
/// parameters, in order: projectile (speed, angle, gravity); collision
/// (v1, v2, momentum gain); rotation (omega0, torque, unused).
pub fn perturbation_draws(noise_seed: u64) -> [f64; N_DRAWS] {
    draw_perturbations(&mut generator_rng(noise_seed))
}

/// Relative parameter error magnitude for a scene under a bundle.
pub fn corruption_magnitude(
    scene: &SceneSpec,
    conditioning: &ConditioningBundle,
    constants: &WorldConstants,
) -> f64 {
    let c = if conditioning.has_valid_computation(&scene.query) { 1.0 } else { 0.0 };
    let p = conditioning.detail_fraction();
    scene.base_corruption * (1.0 - constants.alpha_compute * c) * (1.0 - constants.alpha_prompt * p)
}

pub fn generate_video(
    scene: &SceneSpec,
    conditioning: &ConditioningBundle,
    noise_seed: u64,
    constants: &WorldConstants,
) -> AbstractVideo {
    let mut rng = generator_rng(noise_seed);
    let u = draw_perturbations(&mut rng);
    let e = corruption_magnitude(scene, conditioning, constants);
    let (realized_params, mut frames) = realize(scene, e, &u);

    if let Some(keyframes) = &conditioning.keyframes {
        pull_toward_anchors(scene, keyframes, constants.alpha_keyframe, &mut frames);
    }

    let scale = scene.length_scale();
    let drift: f64 = scene.hidden("semantic_drift") * Distribution::<f64>::sample(&Exp1, &mut rng) * scale;
    let offset: Vec<f64> = match scene.kind() {
        ScenarioKind::Projectile => {
            let phi = rng.random_range(0.0..TAU);
            vec![drift * phi.cos(), drift * phi.sin()]
        }
        ScenarioKind::Collision1D => {
            let d = if rng.random_bool(0.5) { drift } else { -drift };
            vec![d, d]
        }
        ScenarioKind::Rotation => vec![if rng.random_bool(0.5) { drift } else { -drift }],
    };
    let sigma = constants.jitter * scale;
    for frame in &mut frames {
        for (x, o) in frame.position.iter_mut().zip(&offset) {
            let n: f64 = StandardNormal.sample(&mut rng);
            *x += o + sigma * n;
        }
    }

    AbstractVideo {
        frames,
        realized_params,
        noise_seed,
    }
}

fn realize(scene: &SceneSpec, e: f64, u: &[f64; N_DRAWS]) -> (ParamMap, Vec<KinematicState>) {
    let q = &scene.query;
    let obs = |k: &str| q.observable_params[k];
    let perturb = |v: f64, i: usize| v * (1.0 + e * u[i]);
    let times: Vec<f64> = (0..scene.ground_truth.len()).map(|k| scene.frame_time(k)).collect();

    match scene.kind() {
        ScenarioKind::Projectile => {
            let v = perturb(obs("launch_speed"), 0);
            let th = perturb(obs("launch_angle"), 1);
            let g = perturb(scene.hidden("gravity"), 2);
            let frames = times.iter().map(|&t| projectile_state(v, th, g, t)).collect();
            let realized = [("gravity", g), ("launch_angle", th), ("launch_speed", v)];
            (to_map(realized), frames)
        }
        ScenarioKind::Collision1D => {
            let (m1, m2) = (obs("m1"), obs("m2"));
            let v = [perturb(obs("v1"), 0), perturb(obs("v2"), 1)];
            let gain = perturb(scene.hidden("momentum_gain"), 2);
            let mode = CollisionMode::from_restitution(obs("restitution"))
                .unwrap_or(CollisionMode::Elastic);
            let (a1, a2) = collision_outcome(m1, m2, v[0], v[1], mode);
            let after = [a1 * gain, a2 * gain];
            // Staging (initial placement) follows the caption, not the hallucinated speeds.
            let start = [
                scene.ground_truth[0].position[0],
                scene.ground_truth[0].position[1],
            ];
            let closing = v[0] - v[1];
            let impact = (closing > 0.0).then(|| (start[1] - start[0]) / closing);
            let frames = times
                .iter()
                .map(|&t| collision_state(start, v, after, impact, t))
                .collect();
            let realized = [("momentum_gain", gain), ("v1", v[0]), ("v2", v[1])];
            (to_map(realized), frames)
        }
        ScenarioKind::Rotation => {
            let inertia = obs("inertia");
            let w = perturb(obs("omega0"), 0);
            let tau = perturb(obs("torque"), 1);
            let frames = times.iter().map(|&t| rotation_state(inertia, tau, w, t)).collect();
            let realized = [("inertia", inertia), ("omega0", w), ("torque", tau)];
            (to_map(realized), frames)
        }
    }
}

fn to_map<const N: usize>(pairs: [(&str, f64); N]) -> ParamMap {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Pulls every frame inside the anchors' span toward the anchor path with
/// weight `1 - (1 - alpha)^n` (one convex pull of weight `alpha` per anchor).
fn pull_toward_anchors(
    scene: &SceneSpec,
    keyframes: &KeyframeSet,
    alpha: f64,
    frames: &mut [KinematicState],
) {
    let anchors = &keyframes.anchors;
    if anchors.is_empty() {
        return;
    }
    let w = 1.0 - (1.0 - alpha).powi(anchors.len() as i32);
    let last = (frames.len() - 1) as f64;
    for (k, frame) in frames.iter_mut().enumerate() {
        let s = k as f64 / last;
        if let Some(target) = anchor_path(scene.kind(), keyframes, s, scene.duration) {
            *frame = frame.pulled_toward(&target, w);
        }
    }
}

const SPAN_TOL: f64 = 1e-12;

/// State on the path through the anchors at clip fraction `s`, or `None`
/// outside the anchors' span.
pub(crate) fn anchor_path(
    kind: ScenarioKind,
    keyframes: &KeyframeSet,
    s: f64,
    duration: f64,
) -> Option<KinematicState> {
    let anchors = &keyframes.anchors;
    let first = anchors.first()?;
    let last = anchors.last()?;
    if s < first.position_fraction - SPAN_TOL || s > last.position_fraction + SPAN_TOL {
        return None;
    }
    if let Some(a) = anchors
        .iter()
        .find(|a| (a.position_fraction - s).abs() <= SPAN_TOL)
    {
        return Some(a.state.clone());
    }
    let seg = anchors
        .windows(2)
        .find(|w| w[0].position_fraction < s && s < w[1].position_fraction)?;
    let (a, b) = (&seg[0], &seg[1]);
    let span = (b.position_fraction - a.position_fraction) * duration;
    let ds = (s - a.position_fraction) * duration;

    let mut position = Vec::with_capacity(a.state.position.len());
    let mut velocity = Vec::with_capacity(a.state.position.len());
    for i in 0..a.state.position.len() {
        let (pa, va) = (a.state.position[i], a.state.velocity[i]);
        let (pb, vb) = (b.state.position[i], b.state.velocity[i]);
        let (p, v) = match kind {
            ScenarioKind::Collision1D => two_sided(pa, va, pb, vb, span, ds),
            _ => constant_acceleration(pa, va, pb, span, ds),
        };
        position.push(p);
        velocity.push(v);
    }
    Some(KinematicState::new(position, velocity))
}

/// Constant-acceleration segment leaving `pa` at `va` and reaching `pb`
/// after `span`.
fn constant_acceleration(pa: f64, va: f64, pb: f64, span: f64, ds: f64) -> (f64, f64) {
    let acc = 2.0 * (pb - pa - va * span) / (span * span);
    (pa + va * ds + 0.5 * acc * ds * ds, va + acc * ds)
}

/// Uniform motion out of `a` and into `b`, switching where the two lines
/// cross (a single impact inside the segment). Falls back to constant
/// acceleration when the lines do not cross inside the segment.
fn two_sided(pa: f64, va: f64, pb: f64, vb: f64, span: f64, ds: f64) -> (f64, f64) {
    let dv = va - vb;
    if dv.abs() > 1e-12 {
        let cross = (pb - pa - vb * span) / dv;
        if (-SPAN_TOL..=span * (1.0 + SPAN_TOL)).contains(&cross) {
            return if ds < cross {
                (pa + va * ds, va)
            } else {
                (pb + vb * (ds - span), vb)
            };
        }
    }
    constant_acceleration(pa, va, pb, span, ds)
}
