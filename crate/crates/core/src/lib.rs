//! A temporal-difference learner that binds state, a transient signal,
//! gated working memory, an abstract task representation and a reward token
//! into one holographic reduced representation, and evaluates it with a
//! single-layer optimistic critic.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision used by the harness and CLI.

pub mod agent;
pub mod atr;
pub mod config;
pub mod error;
pub mod harness;
pub mod hrr;
pub mod ledger;
pub mod maze;
pub mod network;
pub mod output;
pub mod scalar;
pub mod solve;

pub use agent::{Agent, AgentConfig, EpisodeRecord, GrowthMethod, Phase};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use harness::{run_experiment, RunResult};
pub use hrr::{convolve, Hrr};
pub use ledger::{grow_dimension, Symbol, SymbolLedger};
pub use scalar::Scalar;

pub type Hrr64 = hrr::Hrr<f64>;
pub type Hrr32 = hrr::Hrr<f32>;
pub type Ledger64 = ledger::SymbolLedger<f64>;
pub type Ledger32 = ledger::SymbolLedger<f32>;
pub type Network64 = network::ValueNetwork<f64>;
pub type Network32 = network::ValueNetwork<f32>;
pub type Agent64 = agent::Agent<f64>;
pub type Agent32 = agent::Agent<f32>;
