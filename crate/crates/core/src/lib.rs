//! Temporal privacy leakage of differentially private release sequences.
//!
//! An adversary who knows how a user's value evolves over time (a Markov
//! chain, in the backward and/or forward direction) learns more from a
//! sequence of `eps`-DP releases than `eps` alone suggests. This crate
//! quantifies that leakage step by step ([`leakage`]), bounds it over an
//! unbounded horizon ([`supremum`]), and allocates per-step budgets that keep
//! it under a target ([`allocate`]). The per-step loss function is solved in
//! polynomial time ([`lfp`]) and checked against an exhaustive reference
//! solver ([`oracle`]).
//!
//! All leakage values are in nats.

pub mod allocate;
pub mod correlate;
pub mod error;
pub mod io;
pub mod leakage;
pub mod lfp;
pub mod matrix;
pub mod oracle;
pub mod release;
pub mod schedule;
pub mod supremum;
pub mod trace;

pub use error::{Error, Result};
pub use matrix::{AdversaryModel, TransitionMatrix};
pub use schedule::{BudgetSchedule, Horizon};
pub use trace::{LeakageEntry, LeakageTrace};
