//! Discrete-time simulator and online scheduler for computation offloading in a
//! space-air-ground integrated network.
//!
//! Ground devices generate tasks, UAVs perceive them with a simulated FMCW
//! radar plus a surrogate vision classifier, and a drift-plus-penalty scheduler
//! (DDPG for offloading/UAV CPU, DQN for UAV-BS association, harmony search for
//! BS CPU) keeps every task queue stable while minimizing the time-averaged
//! network cost.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! waveform-level radar oracle live in the `sagin` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agents;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod cost;
mod error;
pub mod lyapunov;
pub mod math;
pub mod orchestrator;
pub mod perception;
pub mod queueing;
pub mod rng;
pub mod sghs;
pub mod world;

pub use error::{Error, Result};
