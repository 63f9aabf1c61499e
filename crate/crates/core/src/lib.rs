//! Deterministic abstract 2D multi-robot soccer simulator.
//!
//! The crate is layered bottom-up:
//!
//! * [`geometry`], [`field`], [`config`], [`scenario`]: value types, the
//!   ablation presets and the fixed evaluation layouts;
//! * [`dynamics`]: the world transition function;
//! * [`env`] and [`batch`]: the multi-agent reset/step boundary and its
//!   vectorized runner;
//! * [`policy`]: portable MLP policies and the binary policy file format;
//! * [`stats`], [`evaluation`]: trial suites, Student-t summaries, replay
//!   traces and reports;
//! * [`bench`]: throughput measurement.

pub mod batch;
pub mod bench;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod evaluation;
pub mod field;
pub mod geometry;
pub mod policy;
pub mod scenario;
pub mod stats;

/// Deterministic generator carried by every world.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub use batch::{batch_step, Executor, VecEnv};
pub use config::{ConfigPreset, PresetName, SimConfig};
pub use dynamics::{step_world, BallState, RobotState, StepEvents, WorldState};
pub use env::{env_step, reset, Action, EpisodeOutcome, ObsLayout, Observation, StepResult};
pub use geometry::{Pose2D, Vec2};
pub use policy::{Controller, MlpPolicy};
pub use scenario::{ScenarioName, ScenarioSpec};
