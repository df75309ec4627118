//! Tiered trajectory reward with tool bonuses and a format penalty.

use serde::{Deserialize, Serialize};

use crate::orchestrator::Trajectory;
use crate::toolbox::validate_computation;

/// Quality tier values over the per-dimension maxima (SA*, PC*).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// A dimension "passes" at or above this score.
    pub pass: f64,
    /// A dimension is "partial" at or above this score.
    pub partial: f64,
    /// Both pass.
    pub tier_both_pass: f64,
    /// One passes, the other is partial.
    pub tier_one_pass: f64,
    /// Both partial.
    pub tier_both_partial: f64,
    pub keyframe_bonus: f64,
    /// SA a keyframed generation must reach for the keyframe bonus.
    pub keyframe_sa: f64,
    pub compute_bonus: f64,
    /// Magnitude of the fixed negative reward for any violation.
    pub format_penalty: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            pass: 4.0,
            partial: 3.0,
            tier_both_pass: 3.0,
            tier_one_pass: 1.5,
            tier_both_partial: 0.75,
            keyframe_bonus: 0.5,
            keyframe_sa: 4.0,
            compute_bonus: 0.5,
            format_penalty: 1.0,
        }
    }
}

impl RewardConfig {
    pub fn check(&self) -> crate::Result<()> {
        let all = [
            self.pass,
            self.partial,
            self.tier_both_pass,
            self.tier_one_pass,
            self.tier_both_partial,
            self.keyframe_bonus,
            self.keyframe_sa,
            self.compute_bonus,
            self.format_penalty,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::Config("reward constants must be finite".into()));
        }
        if self.partial > self.pass {
            return Err(crate::Error::Config("reward.partial must not exceed reward.pass".into()));
        }
        Ok(())
    }

    /// Tier value for per-dimension maxima.
    pub fn quality(&self, sa: f64, pc: f64) -> f64 {
        let (sa_pass, pc_pass) = (sa >= self.pass, pc >= self.pass);
        let (sa_part, pc_part) = (sa >= self.partial, pc >= self.partial);
        if sa_pass && pc_pass {
            self.tier_both_pass
        } else if (sa_pass && pc_part) || (pc_pass && sa_part) {
            self.tier_one_pass
        } else if sa_part && pc_part {
            self.tier_both_partial
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub quality: f64,
    pub kf_bonus: f64,
    pub compute_bonus: f64,
    pub format_penalty_applied: bool,
    pub total: f64,
}

impl RewardBreakdown {
    /// `total` agrees with the components.
    pub fn is_consistent(&self, penalty: f64) -> bool {
        if self.format_penalty_applied {
            self.total == -penalty
        } else {
            self.total == self.quality + self.kf_bonus + self.compute_bonus
        }
    }
}

pub fn compute_reward(trajectory: &Trajectory, config: &RewardConfig) -> RewardBreakdown {
    if trajectory.cycles.iter().any(|c| c.has_violation()) {
        return RewardBreakdown {
            quality: 0.0,
            kf_bonus: 0.0,
            compute_bonus: 0.0,
            format_penalty_applied: true,
            total: -config.format_penalty,
        };
    }

    let quality = if trajectory.videos.is_empty() {
        0.0
    } else {
        let sa = trajectory.videos.iter().map(|v| v.score.sa).fold(f64::MIN, f64::max);
        let pc = trajectory.videos.iter().map(|v| v.score.pc).fold(f64::MIN, f64::max);
        config.quality(sa, pc)
    };
    let keyframed_hit = trajectory.cycles.iter().any(|c| {
        c.introduced_keyframes() && c.score().is_some_and(|s| s.sa >= config.keyframe_sa)
    });
    let kf_bonus = if keyframed_hit { config.keyframe_bonus } else { 0.0 };
    let valid_computation = trajectory
        .computations()
        .any(|c| validate_computation(&trajectory.query, c));
    let compute_bonus = if valid_computation && quality > 0.0 {
        config.compute_bonus
    } else {
        0.0
    };
    RewardBreakdown {
        quality,
        kf_bonus,
        compute_bonus,
        format_penalty_applied: false,
        total: quality + kf_bonus + compute_bonus,
    }
}
