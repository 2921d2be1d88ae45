//! Learning which sounds convey a robot's functional state.
//!
//! The crate holds the UCB1 learner ([`bandit`]), the parameterized sound
//! library renderer ([`synth`]), simulated participants ([`sim`]), the cohort
//! runner ([`simulate`]), the study protocol state machine ([`study`]), JSONL
//! event logs with replay ([`eventlog`]) and cohort analysis ([`analysis`]).

pub mod analysis;
pub mod bandit;
pub mod error;
pub mod eventlog;
pub mod fsio;
pub mod grid;
pub mod seed;
pub mod sim;
pub mod simulate;
pub mod states;
pub mod study;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{ActionId, Parameter, ParameterGrid};
pub use states::StateSet;
