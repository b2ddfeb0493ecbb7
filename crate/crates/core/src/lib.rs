//! Detection of mutual influences between autonomous learning agents, and
//! exploitation of detected influences by expanding a tabular Q-learner's
//! state space at runtime.
//!
//! The crate is organized around the influence-detection workflow:
//! observation logs ([`influence`]) feed stochastic dependence estimators
//! ([`depmeasures`]), whose scores are compared against a notional
//! (independent) baseline and ranked into reports. Agents ([`agent`]) act in
//! deterministic simulated scenarios ([`env`]) with tabular Q-learning
//! ([`rl`]), and the experiment harness ([`harness`]) reproduces detection
//! rate and reward curves as CSV files.

pub mod agent;
pub mod config;
pub mod depmeasures;
pub mod env;
pub mod harness;
pub mod influence;
pub mod rl;

mod seed;

pub use seed::derive_seed;
