//! Offline supervised baseline: maximum likelihood on logged high-reward
//! trajectories.

use crate::error::{Error, Result};
use crate::orchestrator::Trajectory;
use crate::policy::{ParamGradient, PolicyParams};

/// Full-batch gradient ascent on the mean per-factor log-likelihood of every
/// action in trajectories whose reward total is at least `reward_floor`.
/// Trajectories without a recorded reward are never retained.
pub fn fit_sft_baseline(
    init: &PolicyParams,
    logged: &[Trajectory],
    reward_floor: f64,
    epochs: usize,
    learning_rate: f64,
) -> Result<PolicyParams> {
    init.check()?;
    let retained: Vec<&Trajectory> = logged
        .iter()
        .filter(|t| t.reward.is_some_and(|r| r.total >= reward_floor))
        .collect();
    if retained.is_empty() {
        return Err(Error::Data(format!(
            "no logged trajectory reaches the reward floor {reward_floor}"
        )));
    }
    let decisions: Vec<_> = retained
        .iter()
        .flat_map(|t| t.cycles.iter())
        .flat_map(|c| c.action.decision_factors.iter().map(move |f| (&c.features, f)))
        .collect();
    for (x, choice) in &decisions {
        init.check_features(x)?;
        init.check_choice(choice)?;
    }

    let mut params = init.clone();
    if learning_rate == 0.0 || decisions.is_empty() {
        return Ok(params);
    }
    let w = 1.0 / decisions.len() as f64;
    for _ in 0..epochs {
        let mut grad = ParamGradient::zeros_like(&params);
        for (x, choice) in &decisions {
            params.add_choice_grad(x, choice, w, &mut grad.0);
        }
        params.ascend(&grad, learning_rate);
    }
    Ok(params)
}
