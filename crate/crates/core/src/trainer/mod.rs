//! Flow-GRPO training of the planner, plus the frozen and offline-SFT
//! baselines and the evaluation harness.

mod advantage;
mod eval;
mod grpo;
mod reward;
mod sft;
mod surrogate;

pub use advantage::compute_advantages;
pub use eval::{evaluate_policy, summarize, Curves, EpisodeSummary, EvalReport, PassRates, CURVE_FLOOR};
pub use grpo::{
    collect_groups, train_loop, train_loop_with, IterationHook, IterationRecord, TrainerConfig,
    TrainingReport,
};
pub use reward::{compute_reward, RewardBreakdown, RewardConfig};
pub use sft::fit_sft_baseline;
pub use surrogate::{batch_surrogate_gradient, clipped_term, surrogate_gradient, RolloutGroup, SurrogateOutput};
