//! Trainable tool-orchestrating planner for physics-conditioned video
//! generation, trained with group-relative policy optimization against a
//! deterministic synthetic generator/verifier world.

pub mod error;
pub mod orchestrator;
pub mod persist;
pub mod policy;
pub mod scene;
pub mod seeding;
pub mod toolbox;
pub mod trainer;
pub mod world;

pub use error::{Error, Result};
