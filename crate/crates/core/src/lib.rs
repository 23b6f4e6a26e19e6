//! Critic-guided tri-system scheduling for long-horizon bimanual manipulation,
//! together with the deterministic tabletop world, scripted agents, critic
//! value labeling and the subtask annotation pipeline used to exercise it.
//!
//! Module map:
//!
//! * [`world`]: seeded point-kinematic dual-arm tabletop simulator.
//! * [`agents`]: planner ("brain"), controller ("cerebellum") and critic
//!   interfaces with scripted, biased and oracle implementations.
//! * [`critic_train`]: Monte Carlo progress targets, bin quantization,
//!   anomaly-window labeling and a learned 102-way critic.
//! * [`scheduler`]: the critic-guided preemption loop and the single/dual
//!   reference schedulers.
//! * [`annotator`]: keyframe proposal (RDP, gripper events, proximity filter)
//!   and label retrieval into contiguous subtask segments.
//! * [`harness`]: seeded campaigns, corpus generation, ablations and reports.

pub mod agents;
pub mod annotator;
pub mod critic_train;
mod error;
pub mod harness;
pub mod scheduler;
pub mod seed;
pub mod world;

pub use crate::error::{Error, Result};
