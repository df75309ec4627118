//! Helpers and suites shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use physplan::orchestrator::{
    best_video, Action, CycleRecord, EpisodeConfig, Observation, Payload, ScoredVideo, Source,
    Trajectory,
};
use physplan::policy::{PolicyParams, StateFeatures, FEATURE_DIM};
use physplan::scene::{params, ScenarioKind, SceneQuery};
use physplan::toolbox::{
    generate_keyframes, solve, solve_collision_1d, solve_projectile, solve_rotation, CollisionMode,
};
use physplan::trainer::{
    compute_advantages, compute_reward, surrogate_gradient, RewardConfig, RolloutGroup,
    TrainerConfig,
};
use physplan::world::VerifierScore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Classic fixed-step fourth-order Runge-Kutta.
pub fn rk4<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], t1: f64, steps: usize) -> [f64; N] {
    let h = t1 / steps as f64;
    let axpy = |y: &[f64; N], k: &[f64; N], a: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let mut y = y0;
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + h / 2.0, &axpy(&y, &k1, h / 2.0));
        let k3 = f(t + h / 2.0, &axpy(&y, &k2, h / 2.0));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

/// `|a - b|` relative to `scale` (never below `f64::MIN_POSITIVE`).
pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

pub fn projectile_query() -> SceneQuery {
    SceneQuery::new(
        "a ball is launched at 10 m/s, 45 degrees",
        ScenarioKind::Projectile,
        params([("launch_angle", FRAC_PI_4), ("launch_speed", 10.0)]),
    )
    .unwrap()
}

// ---------------------------------------------------------------- toolbox

/// Closed forms against RK4 on random draws, plus collision conservation.
/// Returns the worst errors seen.
pub fn toolbox_oracle_suite(draws: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let (mut worst_proj, mut worst_rot, mut worst_p, mut worst_ke) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..draws {
        let v = r.random_range(0.5..30.0);
        let th = r.random_range(0.05..FRAC_PI_2 - 0.05);
        let g = r.random_range(1.0..20.0);
        let sol = solve_projectile(v, th, g, 16).map_err(|e| e.to_string())?;
        let f = |_: f64, y: &[f64; 4]| [y[2], y[3], 0.0, -g];
        let y0 = [0.0, 0.0, v * th.cos(), v * th.sin()];
        let tof = sol.outputs["time_of_flight"];
        let apex_t = sol.outputs["apex_time"];
        let end = rk4(f, y0, tof, 200);
        let apex = rk4(f, y0, apex_t, 200);
        let scale = sol.outputs["range"].abs().max(sol.outputs["apex_height"]);
        let errs = [
            rel_err(end[0], sol.outputs["range"], scale),
            rel_err(end[1], 0.0, scale),
            rel_err(apex[1], sol.outputs["apex_height"], scale),
            rel_err(apex[3], 0.0, v),
        ];
        worst_proj = errs.iter().copied().fold(worst_proj, f64::max);

        let inertia = r.random_range(0.1..10.0);
        let torque = r.random_range(-10.0..10.0);
        let omega0 = r.random_range(-5.0..5.0);
        let duration = r.random_range(0.1..10.0);
        let rot = solve_rotation(inertia, torque, duration, omega0).map_err(|e| e.to_string())?;
        let alpha = torque / inertia;
        let y = rk4(|_, y: &[f64; 2]| [y[1], alpha], [0.0, omega0], duration, 200);
        let angle_scale = omega0.abs() * duration + 0.5 * alpha.abs() * duration * duration;
        let omega_scale = omega0.abs() + alpha.abs() * duration;
        worst_rot = worst_rot
            .max(rel_err(y[0], rot.outputs["total_angle"], angle_scale))
            .max(rel_err(y[1], rot.outputs["omega_final"], omega_scale));

        let m1 = r.random_range(0.1..10.0);
        let m2 = r.random_range(0.1..10.0);
        let v1 = r.random_range(-10.0..10.0);
        let v2 = r.random_range(-10.0..10.0);
        let mode = if i % 2 == 0 { CollisionMode::Elastic } else { CollisionMode::PerfectlyInelastic };
        let col = solve_collision_1d(m1, m2, v1, v2, mode).map_err(|e| e.to_string())?;
        let (u1, u2) = (col.outputs["v1_final"], col.outputs["v2_final"]);
        let p_scale = m1 * v1.abs() + m2 * v2.abs();
        worst_p = worst_p.max(rel_err(m1 * v1 + m2 * v2, m1 * u1 + m2 * u2, p_scale));
        if mode == CollisionMode::Elastic {
            let ke = |a: f64, b: f64| 0.5 * m1 * a * a + 0.5 * m2 * b * b;
            worst_ke = worst_ke.max(rel_err(ke(v1, v2), ke(u1, u2), ke(v1, v2)));
        }
    }
    let detail = format!(
        "{draws} draws; worst rel err projectile {worst_proj:.1e}, rotation {worst_rot:.1e}, momentum {worst_p:.1e}, elastic KE {worst_ke:.1e}"
    );
    if worst_proj <= 1e-6 && worst_rot <= 1e-6 && worst_p <= 1e-9 && worst_ke <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- advantages

pub fn population_mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

pub fn advantage_suite(groups: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let tiers = [-1.0, 0.0, 0.75, 1.25, 1.5, 2.0, 3.0, 3.5, 4.0];
    let (mut worst_mean, mut worst_std, mut worst_shift) = (0.0f64, 0.0f64, 0.0f64);
    let mut degenerate = 0;
    for k in 0..groups {
        let g = [2, 4, 8][r.random_range(0..3)];
        let rewards: Vec<f64> = if k % 2 == 0 {
            (0..g).map(|_| tiers[r.random_range(0..tiers.len())]).collect()
        } else {
            (0..g).map(|_| r.random_range(-1.0..4.0)).collect()
        };
        let adv = compute_advantages(&rewards, 1e-6).map_err(|e| e.to_string())?;
        if rewards.iter().all(|x| *x == rewards[0]) {
            degenerate += 1;
            if adv.iter().any(|a| *a != 0.0) {
                return Err(format!("all-equal group {rewards:?} gave {adv:?}"));
            }
        } else {
            let (m, s) = population_mean_std(&adv);
            worst_mean = worst_mean.max(m.abs());
            worst_std = worst_std.max((s - 1.0).abs());
        }
        let c = r.random_range(-10.0..10.0);
        let shifted: Vec<f64> = rewards.iter().map(|x| x + c).collect();
        let adv2 = compute_advantages(&shifted, 1e-6).map_err(|e| e.to_string())?;
        for (a, b) in adv.iter().zip(&adv2) {
            worst_shift = worst_shift.max((a - b).abs());
        }
    }
    // a constant group is degenerate whatever its value
    for g in [2, 4, 8] {
        let adv = compute_advantages(&vec![2.5; g], 1e-6).map_err(|e| e.to_string())?;
        if adv.iter().any(|a| *a != 0.0) {
            return Err("constant group gave nonzero advantages".into());
        }
    }
    let detail = format!(
        "{groups} groups ({degenerate} degenerate); |mean| {worst_mean:.1e}, |std-1| {worst_std:.1e}, shift {worst_shift:.1e}"
    );
    if worst_mean <= 1e-9 && worst_std <= 1e-9 && worst_shift <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- trajectories

pub fn score_obs(sa: f64, pc: f64) -> Observation {
    Observation {
        source: Source::Generator,
        payload: Payload::Score(VerifierScore::new(sa, pc)),
        valid: true,
        violation: false,
    }
}

pub fn violation_obs(source: Source) -> Observation {
    Observation {
        source,
        payload: Payload::Failure {
            diagnostic: "injected".into(),
        },
        valid: false,
        violation: true,
    }
}

pub fn computation_obs(query: &SceneQuery) -> Observation {
    let c = solve(query.scenario_kind, &query.observable_params).unwrap();
    Observation {
        source: Source::NumericSolver,
        payload: Payload::Computation(c),
        valid: true,
        violation: false,
    }
}

pub fn keyframes_obs(query: &SceneQuery) -> Observation {
    let c = solve(query.scenario_kind, &query.observable_params).unwrap();
    Observation {
        source: Source::KeyframeGen,
        payload: Payload::Keyframes(generate_keyframes(query, &[0.0, 0.5, 1.0], Some(&c)).unwrap()),
        valid: true,
        violation: false,
    }
}

pub fn cycle(index: usize, action: Action, observations: Vec<Observation>) -> CycleRecord {
    let mut x = vec![0.0; FEATURE_DIM];
    x[0] = 1.0;
    CycleRecord {
        cycle_index: index,
        action,
        observations,
        features: StateFeatures(x),
    }
}

/// Trajectory from hand-written cycles; videos and best follow the cycles.
pub fn trajectory(query: &SceneQuery, cycles: Vec<CycleRecord>) -> Trajectory {
    let videos: Vec<ScoredVideo> = cycles
        .iter()
        .filter_map(|c| {
            c.score().map(|score| ScoredVideo {
                cycle_index: c.cycle_index,
                score,
            })
        })
        .collect();
    Trajectory {
        query: query.clone(),
        best: best_video(&videos, &EpisodeConfig::default().thresholds),
        videos,
        cycles,
        reward: None,
        rng_seed: 0,
    }
}

pub const GRID: [f64; 6] = [1.0, 3.0, 3.5, 4.0, 4.5, 5.0];

/// The tier table written out case by case.
pub fn expected_quality(sa: f64, pc: f64) -> f64 {
    match (sa >= 4.0, pc >= 4.0, sa >= 3.0, pc >= 3.0) {
        (true, true, _, _) => 3.0,
        (true, false, _, true) | (false, true, true, _) => 1.5,
        (false, false, true, true) => 0.75,
        _ => 0.0,
    }
}

pub fn reward_grid_suite() -> Result<String, String> {
    let q = projectile_query();
    let cfg = RewardConfig::default();
    let gen = || Action::build(None, None, None, true);
    let solve_gen = || Action::build(Some((ScenarioKind::Projectile, physplan::orchestrator::InputSource::Observable)), None, None, true);
    let mut checked = 0;
    for &sa in &GRID {
        for &pc in &GRID {
            let want = expected_quality(sa, pc);
            let cases: [(Trajectory, f64); 4] = [
                (trajectory(&q, vec![cycle(1, gen(), vec![score_obs(sa, pc)])]), want),
                (
                    trajectory(&q, vec![cycle(1, solve_gen(), vec![computation_obs(&q), score_obs(sa, pc)])]),
                    if want > 0.0 { want + 0.5 } else { 0.0 },
                ),
                (
                    trajectory(
                        &q,
                        vec![cycle(1, Action::build(None, Some(1), None, true), vec![keyframes_obs(&q), score_obs(sa, pc)])],
                    ),
                    want + if sa >= 4.0 { 0.5 } else { 0.0 },
                ),
                (
                    trajectory(
                        &q,
                        vec![
                            cycle(1, solve_gen(), vec![computation_obs(&q), score_obs(sa, pc)]),
                            cycle(2, gen(), vec![violation_obs(Source::Generator)]),
                        ],
                    ),
                    -1.0,
                ),
            ];
            for (k, (t, total)) in cases.iter().enumerate() {
                let r = compute_reward(t, &cfg);
                if r.total != *total || !r.is_consistent(cfg.format_penalty) {
                    return Err(format!("SA {sa} PC {pc} case {k}: got {r:?}, want total {total}"));
                }
                if r.quality == 0.0 && r.compute_bonus != 0.0 {
                    return Err(format!("compute bonus with zero quality at SA {sa} PC {pc}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} trajectories over the 6x6 grid"))
}

// ---------------------------------------------------------------- surrogate

fn random_features(r: &mut ChaCha8Rng) -> StateFeatures {
    let mut x: Vec<f64> = (0..FEATURE_DIM).map(|_| r.random_range(-1.0..1.0)).collect();
    x[0] = 1.0;
    StateFeatures(x)
}

/// Two trajectories of two cycles each, actions sampled from `params`.
pub fn random_group(params: &PolicyParams, r: &mut ChaCha8Rng) -> RolloutGroup {
    let q = projectile_query();
    let trajectories: Vec<Trajectory> = (0..2)
        .map(|_| {
            let cycles = (1..=2)
                .map(|c| {
                    let x = random_features(r);
                    let (action, _) = params.sample_action(&x, r.random());
                    CycleRecord {
                        cycle_index: c,
                        action,
                        observations: Vec::new(),
                        features: x,
                    }
                })
                .collect();
            trajectory(&q, cycles)
        })
        .collect();
    let rewards = [r.random_range(-1.0..4.0), r.random_range(-1.0..4.0)];
    RolloutGroup {
        query: q,
        advantages: compute_advantages(&rewards, 1e-6).unwrap(),
        trajectories,
        policy_version: 0,
    }
}

fn ratios(group: &RolloutGroup, params: &PolicyParams, old: &PolicyParams) -> Vec<f64> {
    group
        .trajectories
        .iter()
        .flat_map(|t| &t.cycles)
        .flat_map(|c| {
            let a = params.log_prob(&c.features, &c.action).unwrap();
            let b = old.log_prob(&c.features, &c.action).unwrap();
            a.0.into_iter().zip(b.0).map(|(x, y)| (x - y).exp()).collect::<Vec<_>>()
        })
        .collect()
}

/// Analytic surrogate gradient against central differences, and the identity
/// ratio at params = params_old.
pub fn surrogate_suite(instances: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let config = TrainerConfig::default();
    let eps = config.epsilon;
    let (mut worst, mut done, mut clipped_instances) = (0.0f64, 0, 0);
    while done < instances {
        let params = PolicyParams::random(0.3, r.random());
        let mut old = params.clone();
        for w in &mut old.weights {
            *w += r.random_range(-0.15..0.15);
        }
        let reference = PolicyParams::random(0.3, r.random());
        let group = random_group(&old, &mut r);
        let rho = ratios(&group, &params, &old);
        // stay off the clip kinks, where the objective is not differentiable
        if rho.iter().any(|p| (p - (1.0 - eps)).abs() < 1e-3 || (p - (1.0 + eps)).abs() < 1e-3) {
            continue;
        }
        if rho.iter().any(|p| (p - 1.0).abs() > eps) {
            clipped_instances += 1;
        }
        let out = surrogate_gradient(&group, &params, &old, &reference, &config).map_err(|e| e.to_string())?;
        let objective = |p: &PolicyParams| surrogate_gradient(&group, p, &old, &reference, &config).unwrap().objective;
        let h = 1e-6;
        let mut fd = vec![0.0; params.weights.len()];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut plus = params.clone();
            plus.weights[i] += h;
            let mut minus = params.clone();
            minus.weights[i] -= h;
            *slot = (objective(&plus) - objective(&minus)) / (2.0 * h);
        }
        let scale = fd.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-8);
        let err = fd
            .iter()
            .zip(&out.gradient.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        worst = worst.max(err);

        let same = ratios(&group, &params, &params);
        if same.iter().any(|p| *p != 1.0) {
            return Err("params = params_old gave a ratio other than 1".into());
        }
        let at_identity = surrogate_gradient(&group, &params, &params, &reference, &config).map_err(|e| e.to_string())?;
        if at_identity.clip_fraction != 0.0 {
            return Err("clip active at identity ratio".into());
        }
        done += 1;
    }
    let detail = format!("{instances} instances ({clipped_instances} with ratios outside the clip range); worst rel err {worst:.1e}");
    if worst <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
