//! Configuration, checkpoints, run logs, report tables, the wire adapter and
//! the subcommand bodies.

pub mod adapter;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod logs;
pub mod report;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use commands::{cmd_eval, cmd_rollout, cmd_train, train_with_config, RolloutDump, TrainOutcome};
pub use config::{RunConfig, Strategy, LOG_DIR_ENV};
pub use logs::{determinism_hash, read_log, LogLine, LogPayload, LogWriter, TrajectoryLogRecord};
pub use report::cmd_report;
