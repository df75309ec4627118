//! Episode execution: the planner acts on featurized memory, the executor
//! dispatches tools and the generator, the verifier's scores flow back into
//! memory, and the best video across all cycles is kept.

pub mod action;
pub mod episode;
pub mod memory;

pub use action::{
    Action, Factor, FactorChoice, InputSource, Tool, ToolArgs, ToolInvocation, KEYFRAME_GRID,
};
pub use episode::{
    best_video, run_episode, select_best_video, CycleRecord, EpisodeConfig, Observation, Payload,
    Planner, ScoreThresholds, ScoredVideo, ScriptedOracle, Source, Trajectory,
};
pub use memory::{update_memory, MemoryEntry, MemoryPool, ObservationSummary};
