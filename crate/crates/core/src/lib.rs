//! Translationese measurement toolkit.
//!
//! The T-index of a translation is the log-likelihood it receives from a
//! model fine-tuned on literal (high-translationese) translations minus the
//! log-likelihood from a model fine-tuned on idiomatic (low-translationese)
//! translations of the same sources. This crate scores model-output dumps
//! with the T-index and a set of unsupervised baselines, and carries the
//! statistics needed to evaluate those scores.

pub mod annotations;
pub mod backend;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod features;
pub mod fixture;
pub mod rng;
pub mod scoring;
pub mod serde_util;
pub mod shifts;
pub mod stats;

pub use error::ErrorClass;
pub use exec::Execution;
