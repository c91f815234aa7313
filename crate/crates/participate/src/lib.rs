//! Reward-share participation markets for multi-agent social dilemmas.
//!
//! Instead of paying or punishing each other, agents in this crate trade
//! shares of their environmental reward streams. Holding a slice of another
//! agent's rewards aligns formerly conflicting objectives, which lets
//! independent learners discover cooperative policies in games where
//! defection otherwise dominates.
//!
//! The crate bundles:
//! - the share-allocation data model and every redistribution mechanism
//!   ([`shares`]),
//! - an iterated prisoner's dilemma with five participation variants
//!   ([`ipd`]),
//! - the cleanup gridworld in two- and three-agent configurations
//!   ([`cleanup`]),
//! - tabular and neural actor-critic learners ([`learner`]),
//! - an exact simulator of the broker-priced trading dynamics ([`theory`]),
//! - an experiment harness with seeded runs, CSV metrics and SVG plots
//!   ([`harness`]).

pub mod cleanup;
pub mod error;
pub mod harness;
pub mod ipd;
pub mod learner;
pub mod rng;
pub mod shares;
pub mod snapshot;
pub mod theory;

pub use error::{Error, Result};
