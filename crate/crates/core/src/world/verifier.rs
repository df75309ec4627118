//! Residual-based SA/PC scorer.
//!
//! Physics residual (PC) is intrinsic to the clip: fitted acceleration against
//! true gravity, momentum and energy bookkeeping across the impact, fitted
//! angular acceleration against torque over inertia, plus frame roughness.
//! Semantic residual (SA) compares the clip's final state with the scene's
//! ground-truth endpoint and checks the scene's key event happened.

use super::{AbstractVideo, SceneSpec, VerifierScore, WorldConstants};
use crate::error::{Error, Result};
use crate::scene::ScenarioKind;

/// Frames used on each side of the impact to estimate collision velocities.
const COLLISION_WINDOW: usize = 5;
/// The bodies count as having met when their gap drops below this fraction
/// of the length scale.
const CONTACT_GAP: f64 = 0.15;
/// Residuals below this are fitting round-off on an exact clip.
const RESIDUAL_FLOOR: f64 = 1e-9;

fn floored(r: f64) -> f64 {
    if r < RESIDUAL_FLOOR { 0.0 } else { r }
}

pub fn verify(
    scene: &SceneSpec,
    video: &AbstractVideo,
    constants: &WorldConstants,
) -> Result<VerifierScore> {
    if video.frames.len() != scene.ground_truth.len() {
        return Err(Error::Verification(format!(
            "video has {} frames, scene has {}",
            video.frames.len(),
            scene.ground_truth.len()
        )));
    }
    if video.frames.iter().any(|f| !f.is_finite()) {
        return Err(Error::Verification("video has non-finite frames".into()));
    }
    let pc = 5.0 - constants.lambda_pc * floored(physics_residual(scene, video, constants));
    let sa = 5.0 - constants.lambda_sa * floored(semantic_residual(scene, video, constants));
    let score = VerifierScore::new(sa, pc);
    Ok(if constants.integer_scores {
        VerifierScore::new(score.sa.round(), score.pc.round())
    } else {
        score
    })
}

/// Least-squares polynomial fit (degree 1 or 2). Returns coefficients in
/// ascending order and the RMS residual.
fn polyfit(t: &[f64], y: &[f64], degree: usize) -> ([f64; 3], f64) {
    let n = degree + 1;
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&ti, &yi) in t.iter().zip(y) {
        let pows = [1.0, ti, ti * ti];
        for r in 0..n {
            aty[r] += pows[r] * yi;
            for c in 0..n {
                ata[r][c] += pows[r] * pows[c];
            }
        }
    }
    let coef = solve_small(ata, aty, n);
    let rms = (t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let fit = coef[0] + coef[1] * ti + coef[2] * ti * ti;
            (yi - fit).powi(2)
        })
        .sum::<f64>()
        / t.len() as f64)
        .sqrt();
    (coef, rms)
}

/// Gaussian elimination with partial pivoting on the leading `n`×`n` block.
fn solve_small(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: usize) -> [f64; 3] {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        if a[col][col] == 0.0 {
            continue;
        }
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = if a[row][row] == 0.0 { 0.0 } else { (b[row] - s) / a[row][row] };
    }
    x
}

fn component(video: &AbstractVideo, i: usize, range: std::ops::Range<usize>) -> Vec<f64> {
    video.frames[range].iter().map(|f| f.position[i]).collect()
}

/// Dynamics violation intrinsic to the clip (0 for exact ground truth).
pub fn physics_residual(scene: &SceneSpec, video: &AbstractVideo, constants: &WorldConstants) -> f64 {
    let n = video.frames.len();
    let times: Vec<f64> = (0..n).map(|k| scene.frame_time(k)).collect();
    let scale = scene.length_scale();
    let q = &scene.query;

    match scene.kind() {
        ScenarioKind::Projectile => {
            let g = scene.hidden("gravity");
            let (cx, rx) = polyfit(&times, &component(video, 0, 0..n), 2);
            let (cy, ry) = polyfit(&times, &component(video, 1, 0..n), 2);
            let accel_error = ((2.0 * cy[2] + g).abs() + (2.0 * cx[2]).abs()) / g;
            let rough = (rx * rx + ry * ry).sqrt() / scale;
            accel_error + constants.roughness_weight * rough
        }
        ScenarioKind::Rotation => {
            let alpha = q.observable_params["torque"] / q.observable_params["inertia"];
            let (c, r) = polyfit(&times, &component(video, 0, 0..n), 2);
            let alpha_scale = alpha.abs().max(scale / (scene.duration * scene.duration));
            (2.0 * c[2] - alpha).abs() / alpha_scale + constants.roughness_weight * r / scale
        }
        ScenarioKind::Collision1D => {
            let (m1, m2) = (q.observable_params["m1"], q.observable_params["m2"]);
            let (v1, v2) = (q.observable_params["v1"], q.observable_params["v2"]);
            let w = COLLISION_WINDOW.min(n / 2);
            let mut rough = 0.0;
            let mut velocity = |range: std::ops::Range<usize>| -> [f64; 2] {
                let t = &times[range.clone()];
                std::array::from_fn(|i| {
                    let (c, r) = polyfit(t, &component(video, i, range.clone()), 1);
                    rough += r * r;
                    c[1]
                })
            };
            let before = velocity(0..w);
            let after = velocity(n - w..n);
            let momentum = |v: [f64; 2]| m1 * v[0] + m2 * v[1];
            let energy = |v: [f64; 2]| 0.5 * m1 * v[0] * v[0] + 0.5 * m2 * v[1] * v[1];
            let p_scale = (m1 * v1.abs() + m2 * v2.abs()).max(1e-12);
            let drift = (momentum(after) - momentum(before)).abs() / p_scale;
            let ke_before = energy(before).max(1e-12);
            let gain = (energy(after) - ke_before).max(0.0) / ke_before;
            drift.max(0.5 * gain) + constants.roughness_weight * (rough / 4.0).sqrt() / scale
        }
    }
}

/// Endpoint mismatch against ground truth plus a missed-event penalty.
pub fn semantic_residual(scene: &SceneSpec, video: &AbstractVideo, constants: &WorldConstants) -> f64 {
    let n = video.frames.len();
    let scale = scene.length_scale();
    let end = &video.frames[n - 1];
    let endpoint = end.position_distance(&scene.ground_truth[n - 1]) / scale;

    let event = match scene.kind() {
        ScenarioKind::Projectile => {
            // apex: the fitted parabola opens downward with its vertex inside the clip
            let times: Vec<f64> = (0..n).map(|k| scene.frame_time(k)).collect();
            let (c, _) = polyfit(&times, &component(video, 1, 0..n), 2);
            c[2] < 0.0 && {
                let t_apex = -c[1] / (2.0 * c[2]);
                t_apex > 0.0 && t_apex < scene.duration
            }
        }
        ScenarioKind::Collision1D => video
            .frames
            .iter()
            .any(|f| (f.position[1] - f.position[0]).abs() <= CONTACT_GAP * scale),
        ScenarioKind::Rotation => {
            let truth = scene.ground_truth[n - 1].position[0];
            truth.abs() < 1e-9 || truth.signum() == end.position[0].signum()
        }
    };
    endpoint + if event { 0.0 } else { constants.event_weight }
}
