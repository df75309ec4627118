mod common;

use std::collections::BTreeSet;

use physplan::orchestrator::{
    best_video, run_episode, update_memory, Action, EpisodeConfig, Factor, FactorChoice, InputSource, MemoryPool,
    Planner, ScoreThresholds, ScoredVideo, ScriptedOracle, Source,
};
use physplan::policy::{featurize, feature, PolicyParams, StateFeatures};
use physplan::scene::{ScenarioKind, SceneQuery};
use physplan::toolbox::DetailFlag;
use physplan::trainer::{compute_reward, RewardConfig};
use physplan::world::{sample_scene_bank, KindMix, SyntheticWorld, VerifierScore, WorldConstants};
use physplan::Error;

struct Fixed(Action);

impl Planner for Fixed {
    fn plan(&self, _: &SceneQuery, _: &MemoryPool, _: &StateFeatures, _: u64) -> Action {
        self.0.clone()
    }
}

fn world(kind: Option<ScenarioKind>, n: usize) -> SyntheticWorld {
    let mix = kind.map_or_else(KindMix::uniform, KindMix::only);
    let c = WorldConstants::default();
    SyntheticWorld::new(sample_scene_bank(13, n, &mix, 0.4, &c).unwrap(), c).unwrap()
}

fn generate_only() -> Action {
    Action::build(None, None, None, true)
}

#[test]
fn single_forced_generation() {
    let w = world(None, 3);
    let q = &w.queries()[0];
    let t = run_episode(q, &Fixed(generate_only()), &w, &EpisodeConfig::with_cycles(1), 5).unwrap();
    assert_eq!(t.cycles.len(), 1);
    assert_eq!(t.videos.len(), 1);
    assert_eq!(t.best, Some(t.videos[0]));
    assert_eq!(t.cycles[0].action.decision_factors.len(), 2);
}

#[test]
fn episodes_are_deterministic() {
    let w = world(None, 6);
    let p = PolicyParams::random(0.5, 1);
    for q in w.queries() {
        let a = run_episode(&q, &p, &w, &EpisodeConfig::default(), 77).unwrap();
        let b = run_episode(&q, &p, &w, &EpisodeConfig::default(), 77).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn oracle_passes_physics_on_projectiles() {
    let w = world(Some(ScenarioKind::Projectile), 10);
    for (i, q) in w.queries().iter().enumerate() {
        let t = run_episode(q, &ScriptedOracle, &w, &EpisodeConfig::default(), i as u64).unwrap();
        assert!(!t.videos.is_empty());
        for v in &t.videos {
            assert!(v.score.pc >= 4.0, "scene {i} cycle {}: pc {}", v.cycle_index, v.score.pc);
        }
        // solve, keyframes, refine, then generate
        assert_eq!(t.videos[0].cycle_index, 4);
    }
}

#[test]
fn unknown_scene_is_an_error() {
    let w = world(None, 2);
    let stranger = world(None, 40).queries().pop().unwrap();
    let r = run_episode(&stranger, &ScriptedOracle, &w, &EpisodeConfig::default(), 0);
    assert!(matches!(r, Err(Error::UnknownScene(_))));
}

#[test]
fn memory_transition_examples() {
    let q = common::projectile_query();
    let empty = MemoryPool::new(q.clone());
    let solve = Action::build(Some((ScenarioKind::Projectile, InputSource::Observable)), None, None, false);
    let obs = vec![common::computation_obs(&q)];
    let m = update_memory(&empty, &solve, &obs);
    assert_eq!(m.entries.len(), 1);
    assert_eq!(m.entries[0].cycle_index, 1);
    assert_eq!(m.entries[0].verifier_score, None);
    assert!(empty.entries.is_empty());
    assert_eq!(m, update_memory(&empty, &solve, &obs));

    let m2 = update_memory(&m, &generate_only(), &[common::score_obs(4.2, 3.1)]);
    assert_eq!(m2.entries[1].cycle_index, 2);
    let x = featurize(&m2, 5);
    assert_eq!((x.0[feature::LAST_SA], x.0[feature::LAST_PC]), (4.2, 3.1));
    assert_eq!(x.0[feature::VALID_COMPUTATION], 1.0);
    assert_eq!(x.0[feature::GENERATIONS], 1.0);
    assert_eq!(x.0[feature::CYCLE], 3.0 / 5.0);
}

#[test]
fn best_video_examples() {
    let th = ScoreThresholds::default();
    let v = |c: usize, sa: f64, pc: f64| ScoredVideo {
        cycle_index: c,
        score: VerifierScore::new(sa, pc),
    };
    assert_eq!(best_video(&[v(1, 3.0, 4.5), v(2, 4.0, 4.0)], &th).unwrap().cycle_index, 2);
    assert_eq!(best_video(&[], &th), None);
    assert_eq!(best_video(&[v(1, 4.5, 4.5), v(2, 4.5, 4.5)], &th).unwrap().cycle_index, 1);
    assert_eq!(best_video(&[v(1, 3.0, 3.0), v(2, 3.5, 3.0), v(3, 2.0, 2.0)], &th).unwrap().cycle_index, 2);
}

#[test]
fn never_generating_episode_has_no_best() {
    let w = world(None, 2);
    let t = run_episode(&w.queries()[0], &Fixed(Action::build(None, None, None, false)), &w, &EpisodeConfig::default(), 1)
        .unwrap();
    assert!(t.videos.is_empty() && t.best.is_none());
    assert_eq!(compute_reward(&t, &RewardConfig::default()).total, 0.0);
}

#[test]
fn schema_breaches_are_violations() {
    let w = world(Some(ScenarioKind::Projectile), 2);
    let q = &w.queries()[0];
    let cfg = EpisodeConfig::with_cycles(1);
    let all: BTreeSet<DetailFlag> = DetailFlag::ALL.into_iter().collect();

    // five anchors
    let five = Action::build(None, Some(3), None, true);
    // empty refine flags
    let empty_flags = Action::from_choices(vec![
        FactorChoice::new(Factor::Tools, 4),
        FactorChoice::new(Factor::RefineFlags, 0),
        FactorChoice::new(Factor::Generate, 0),
    ])
    .unwrap();
    for a in [five, empty_flags] {
        let t = run_episode(q, &Fixed(a), &w, &cfg, 0).unwrap();
        assert!(t.cycles[0].has_violation());
        assert_eq!(compute_reward(&t, &RewardConfig::default()).total, -1.0);
    }

    // three tools against a cap of two
    let every = Action::build(Some((ScenarioKind::Projectile, InputSource::Observable)), Some(1), Some(&all), true);
    let capped = EpisodeConfig {
        tool_call_cap: 2,
        ..cfg.clone()
    };
    let t = run_episode(q, &Fixed(every.clone()), &w, &capped, 0).unwrap();
    let tool_obs: Vec<_> = t.cycles[0].observations.iter().filter(|o| o.source != Source::Generator).collect();
    assert_eq!(tool_obs.len(), 3);
    assert!(tool_obs.iter().all(|o| o.violation));
    assert_eq!(compute_reward(&t, &RewardConfig::default()).total, -1.0);

    // within the cap the same action is clean
    let t = run_episode(q, &Fixed(every), &w, &cfg, 0).unwrap();
    assert!(!t.cycles[0].has_violation());
}

#[test]
fn wrong_solver_and_decoys_are_invalid_not_violations() {
    let w = world(Some(ScenarioKind::Projectile), 2);
    let q = &w.queries()[0];
    let cfg = EpisodeConfig::with_cycles(1);
    for (kind, source) in [
        (ScenarioKind::Collision1D, InputSource::Observable),
        (ScenarioKind::Rotation, InputSource::Observable),
        (ScenarioKind::Projectile, InputSource::DecoyLow),
        (ScenarioKind::Projectile, InputSource::DecoyHigh),
    ] {
        let a = Action::build(Some((kind, source)), None, None, false);
        let t = run_episode(q, &Fixed(a), &w, &cfg, 0).unwrap();
        let o = &t.cycles[0].observations[0];
        assert!(!o.violation && !o.valid, "{kind} {source:?}");
    }
    let a = Action::build(Some((ScenarioKind::Projectile, InputSource::Observable)), None, None, false);
    let t = run_episode(q, &Fixed(a), &w, &cfg, 0).unwrap();
    assert!(t.cycles[0].observations[0].valid);
}

#[test]
fn replayed_memory_matches_features() {
    let w = world(None, 4);
    let p = PolicyParams::random(0.7, 2);
    for q in w.queries() {
        let t = run_episode(&q, &p, &w, &EpisodeConfig::default(), 3).unwrap();
        let mut m = MemoryPool::new(q.clone());
        for c in &t.cycles {
            assert_eq!(featurize(&m, 5), c.features);
            m = update_memory(&m, &c.action, &c.observations);
        }
        assert_eq!(m, t.replay_memory());
    }
}
