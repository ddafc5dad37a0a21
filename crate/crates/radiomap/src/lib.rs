//! Crowd-sensed radio mapping: a Gaussian-process spatial model values
//! subsets of mobile users via mutual information, and posted-price
//! mechanisms (sequential, single-batch, multi-batch, and budgeted
//! variants) maximize the platform's expected utility under random
//! sensing costs and offer expiration.
//!
//! The crate is organized bottom-up:
//!
//! - [`geo`] / [`field`]: locations, kernels, the joint Gaussian model
//!   over user and grid sites, conditional variances and mutual
//!   information;
//! - [`cost`]: private sensing-cost distributions (uniform, truncated
//!   normal);
//! - [`valuation`]: monetary value of a user subset, `κ·ln(1 + MI + α|A|)`;
//! - [`submodular`]: generic set-function maximizers (double-greedy USM,
//!   budgeted greedy knapsack, brute-force oracles, instance generators);
//! - [`eu`]: pricing rule, recruit probabilities, exact and Monte-Carlo
//!   expected utility / expected value, best single price;
//! - [`mechanisms`]: the offering mechanisms and their transcripts;
//! - [`scenario`]: experiment worlds, outcome simulation, and paired
//!   mechanism comparisons;
//! - [`config`]: the experiment configuration file schema;
//! - [`two_user`]: the two-user worked example (closed forms used by the
//!   CLI tutorial and the acceptance suite).

pub mod config;
pub mod cost;
pub mod eu;
pub mod field;
pub mod geo;
pub mod mechanisms;
pub mod rng;
pub mod scenario;
pub mod submodular;
pub mod two_user;
pub mod valuation;

mod error;

pub use error::ModelError;
