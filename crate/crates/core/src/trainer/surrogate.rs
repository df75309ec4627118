//! Clipped surrogate objective over factor-level importance ratios.

use serde::{Deserialize, Serialize};

use super::TrainerConfig;
use crate::error::{Error, Result};
use crate::orchestrator::Trajectory;
use crate::policy::{ParamGradient, PolicyParams, StateFeatures};
use crate::scene::SceneQuery;

/// `G` trajectories for one query under one policy version, with their
/// group-normalized advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub query: SceneQuery,
    pub trajectories: Vec<Trajectory>,
    pub advantages: Vec<f64>,
    pub policy_version: u64,
}

impl RolloutGroup {
    pub fn check(&self) -> Result<()> {
        if self.trajectories.len() != self.advantages.len() {
            return Err(Error::Contract(format!(
                "{} trajectories but {} advantages",
                self.trajectories.len(),
                self.advantages.len()
            )));
        }
        if self.trajectories.iter().any(|t| t.query != self.query) {
            return Err(Error::Contract("group mixes queries".into()));
        }
        Ok(())
    }

    pub fn visited_states(&self) -> impl Iterator<Item = &StateFeatures> {
        self.trajectories
            .iter()
            .flat_map(|t| t.cycles.iter().map(|c| &c.features))
    }
}

/// `min(ρA, clip(ρ, 1−ε, 1+ε)A)`.
pub fn clipped_term(rho: f64, advantage: f64, epsilon: f64) -> f64 {
    (rho * advantage).min(rho.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage)
}

/// The unclipped branch is the one `min` selects, so the term carries gradient.
fn unclipped_active(rho: f64, advantage: f64, epsilon: f64) -> bool {
    rho * advantage <= rho.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage
}

#[derive(Debug, Clone)]
pub struct SurrogateOutput {
    pub objective: f64,
    /// Clipped policy term alone.
    pub policy_term: f64,
    pub kl: f64,
    pub entropy: f64,
    pub gradient: ParamGradient,
    /// Fraction of factor terms whose clipped branch won.
    pub clip_fraction: f64,
}

/// Objective and exact gradient for one group.
pub fn surrogate_gradient(
    group: &RolloutGroup,
    params: &PolicyParams,
    params_old: &PolicyParams,
    reference: &PolicyParams,
    config: &TrainerConfig,
) -> Result<SurrogateOutput> {
    batch_surrogate_gradient(std::slice::from_ref(group), params, params_old, reference, config)
}

/// Objective averaged over the groups of a batch: each group contributes its
/// `1/G` trajectory mean; KL and entropy are taken over every visited state.
pub fn batch_surrogate_gradient(
    groups: &[RolloutGroup],
    params: &PolicyParams,
    params_old: &PolicyParams,
    reference: &PolicyParams,
    config: &TrainerConfig,
) -> Result<SurrogateOutput> {
    params.same_shape(params_old)?;
    params.same_shape(reference)?;
    if groups.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let eps = config.epsilon;
    let mut gradient = ParamGradient::zeros_like(params);
    let mut policy_term = 0.0;
    let (mut terms, mut clipped) = (0usize, 0usize);

    for group in groups {
        group.check()?;
        if group.trajectories.is_empty() {
            return Err(Error::Contract("empty rollout group".into()));
        }
        let w_group = 1.0 / (groups.len() * group.trajectories.len()) as f64;
        for (traj, &adv) in group.trajectories.iter().zip(&group.advantages) {
            if traj.cycles.is_empty() {
                continue;
            }
            let w_traj = w_group / traj.cycles.len() as f64;
            for cycle in &traj.cycles {
                let factors = &cycle.action.decision_factors;
                if factors.is_empty() {
                    continue;
                }
                let w = w_traj / factors.len() as f64;
                let lp = params.log_prob(&cycle.features, &cycle.action)?;
                let lp_old = params_old.log_prob(&cycle.features, &cycle.action)?;
                for ((choice, a), b) in factors.iter().zip(&lp.0).zip(&lp_old.0) {
                    let rho = (a - b).exp();
                    policy_term += w * clipped_term(rho, adv, eps);
                    terms += 1;
                    if unclipped_active(rho, adv, eps) {
                        if adv != 0.0 {
                            params.add_choice_grad(&cycle.features, choice, w * adv * rho, &mut gradient.0);
                        }
                    } else {
                        clipped += 1;
                    }
                }
            }
        }
    }

    let states: Vec<StateFeatures> = groups
        .iter()
        .flat_map(|g| g.visited_states().cloned())
        .collect();
    let reg = params.kl_entropy(reference, &states)?;
    gradient.add_scaled(&reg.kl_grad, -config.beta);
    gradient.add_scaled(&reg.entropy_grad, config.entropy_coeff);

    Ok(SurrogateOutput {
        objective: policy_term - config.beta * reg.kl + config.entropy_coeff * reg.entropy,
        policy_term,
        kl: reg.kl,
        entropy: reg.entropy,
        gradient,
        clip_fraction: if terms == 0 { 0.0 } else { clipped as f64 / terms as f64 },
    })
}
