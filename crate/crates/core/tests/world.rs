use std::collections::BTreeSet;

use physplan::scene::ScenarioKind;
use physplan::toolbox::{generate_keyframes, refine_prompt, solve, DetailFlag, KinematicState};
use physplan::world::{
    generate_video, perturbation_draws, sample_scene_bank, verify, AbstractVideo, ConditioningBundle, KindMix,
    SceneSpec, WorldConstants,
};
use physplan::Error;

fn projectile_scene(corruption: f64, constants: &WorldConstants) -> SceneSpec {
    sample_scene_bank(7, 1, &KindMix::only(ScenarioKind::Projectile), corruption, constants)
        .unwrap()
        .remove(0)
}

fn full_bundle(scene: &SceneSpec, anchors: bool, prompt: bool) -> ConditioningBundle {
    let q = &scene.query;
    let c = solve(q.scenario_kind, &q.observable_params).unwrap();
    let mut b = ConditioningBundle::default();
    if anchors {
        b.set_keyframes(generate_keyframes(q, &[0.0, 0.5, 1.0], Some(&c)).unwrap());
    }
    if prompt {
        let all: BTreeSet<DetailFlag> = DetailFlag::ALL.into_iter().collect();
        b.set_prompt(refine_prompt(q, &all, Some(&c)).unwrap());
    }
    b.add_computation(c);
    b
}

fn max_deviation(video: &AbstractVideo, scene: &SceneSpec) -> f64 {
    video
        .frames
        .iter()
        .zip(&scene.ground_truth)
        .map(|(a, b)| a.position_distance(b))
        .fold(0.0, f64::max)
}

#[test]
fn bank_is_deterministic() {
    let c = WorldConstants::default();
    let a = projectile_scene(0.4, &c);
    assert_eq!(a.kind(), ScenarioKind::Projectile);
    assert_eq!(a, projectile_scene(0.4, &c));
    let b1 = sample_scene_bank(3, 50, &KindMix::uniform(), 0.4, &c).unwrap();
    let b2 = sample_scene_bank(3, 50, &KindMix::uniform(), 0.4, &c).unwrap();
    assert_eq!(b1, b2);
    assert_ne!(b1, sample_scene_bank(4, 50, &KindMix::uniform(), 0.4, &c).unwrap());
}

/// Smallest interval [lo, hi] of Binomial(n, p) leaving at most 0.5% in each tail.
fn binomial_99(n: u64, p: f64) -> (u64, u64) {
    let mut pmf = vec![(1.0 - p).powi(n as i32)];
    for k in 1..=n {
        let prev = pmf[k as usize - 1];
        pmf.push(prev * (n - k + 1) as f64 / k as f64 * p / (1.0 - p));
    }
    let mut lo = 0;
    let mut acc = 0.0;
    while acc + pmf[lo as usize] <= 0.005 {
        acc += pmf[lo as usize];
        lo += 1;
    }
    let mut hi = n;
    acc = 0.0;
    while acc + pmf[hi as usize] <= 0.005 {
        acc += pmf[hi as usize];
        hi -= 1;
    }
    (lo, hi)
}

#[test]
fn uniform_mix_counts_within_binomial_bounds() {
    let bounds = binomial_99(300, 1.0 / 3.0);
    assert_eq!(bounds, (79, 121));
    let bank = sample_scene_bank(7, 300, &KindMix::uniform(), 0.4, &WorldConstants::default()).unwrap();
    for kind in ScenarioKind::ALL {
        let n = bank.iter().filter(|s| s.kind() == kind).count() as u64;
        assert!((bounds.0..=bounds.1).contains(&n), "{kind}: {n}");
    }
}

#[test]
fn invalid_weights_are_config_errors() {
    let c = WorldConstants::default();
    let mut mix = KindMix::uniform();
    mix.0.insert(ScenarioKind::Rotation, -1.0);
    assert!(matches!(sample_scene_bank(1, 5, &mix, 0.4, &c), Err(Error::Config(_))));
    let zero = KindMix(ScenarioKind::ALL.iter().map(|k| (*k, 0.0)).collect());
    assert!(matches!(sample_scene_bank(1, 5, &zero, 0.4, &c), Err(Error::Config(_))));
}

#[test]
fn zero_corruption_leaves_only_observation_noise() {
    let c = WorldConstants {
        drift: 0.0,
        ..WorldConstants::default()
    };
    let scene = projectile_scene(0.0, &c);
    for seed in 0..20 {
        let v = generate_video(&scene, &ConditioningBundle::default(), seed, &c);
        assert!(max_deviation(&v, &scene) <= 6.0 * c.jitter * scene.length_scale());
    }
}

#[test]
fn corruption_formula_instances() {
    let c = WorldConstants::default();
    let scene = projectile_scene(0.4, &c);
    let truth = scene.query.observable_params["launch_speed"];
    for seed in [1, 2, 3, 99] {
        let u = perturbation_draws(seed)[0];
        let empty = generate_video(&scene, &ConditioningBundle::default(), seed, &c);
        let dev = empty.realized_params["launch_speed"] / truth - 1.0;
        assert!((dev - 0.4 * u).abs() < 1e-12);

        let full = generate_video(&scene, &full_bundle(&scene, false, true), seed, &c);
        let dev = full.realized_params["launch_speed"] / truth - 1.0;
        assert!((dev - 0.4 * 0.3 * 0.8 * u).abs() < 1e-12, "{dev} vs {}", 0.096 * u);
    }
}

#[test]
fn anchors_pull_frames_toward_ground_truth() {
    let c = WorldConstants {
        drift: 0.0,
        jitter: 0.0,
        ..WorldConstants::default()
    };
    let scene = projectile_scene(0.4, &c);
    let without = full_bundle(&scene, false, false);
    let with = full_bundle(&scene, true, false);
    for seed in 0..200 {
        let a = max_deviation(&generate_video(&scene, &with, seed, &c), &scene);
        let b = max_deviation(&generate_video(&scene, &without, seed, &c), &scene);
        assert!(a < b || b == 0.0, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn verifier_examples() {
    let c = WorldConstants::default();
    let scene = projectile_scene(0.4, &c);
    let exact = AbstractVideo {
        frames: scene.ground_truth.clone(),
        realized_params: Default::default(),
        noise_seed: 0,
    };
    let s = verify(&scene, &exact, &c).unwrap();
    assert_eq!((s.sa, s.pc), (5.0, 5.0));

    // gravity ignored: straight-line flight at the launch velocity
    let v = scene.query.observable_params["launch_speed"];
    let th = scene.query.observable_params["launch_angle"];
    let (vx, vy) = (v * th.cos(), v * th.sin());
    let straight = AbstractVideo {
        frames: (0..scene.ground_truth.len())
            .map(|k| {
                let t = scene.frame_time(k);
                KinematicState::new(vec![vx * t, vy * t], vec![vx, vy])
            })
            .collect(),
        realized_params: Default::default(),
        noise_seed: 0,
    };
    let s = verify(&scene, &straight, &c).unwrap();
    assert!(s.pc < 4.0, "pc {}", s.pc);
    assert_eq!(s, verify(&scene, &straight, &c).unwrap());

    let mut short = exact.clone();
    short.frames.pop();
    assert!(matches!(verify(&scene, &short, &c), Err(Error::Verification(_))));
}

#[test]
fn conditioning_raises_mean_scores() {
    let c = WorldConstants::default();
    let bank = sample_scene_bank(5, 60, &KindMix::uniform(), 0.4, &c).unwrap();
    let mean = |full: bool| {
        let mut total = 0.0;
        for (i, scene) in bank.iter().enumerate() {
            let b = if full { full_bundle(scene, true, true) } else { ConditioningBundle::default() };
            let s = verify(scene, &generate_video(scene, &b, i as u64, &c), &c).unwrap();
            total += s.sa + s.pc;
        }
        total / bank.len() as f64
    };
    assert!(mean(true) > mean(false) + 0.5);
}
