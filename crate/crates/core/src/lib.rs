//! Values of the zero-sum jamming game between an encoder-decoder team and a
//! finite-state jammer over families of discrete memoryless channels.
//!
//! The library computes, at three scales:
//! - exact game values by brute enumeration at tiny blocklengths ([`exact`]),
//! - finite-blocklength achievability and converse bounds ([`bounds`]) with
//!   the constructive schemes behind them ([`codes`]),
//! - the limiting step-function value of the game, driven by compound-channel
//!   capacities of state subsets ([`curves`], [`capacity`]).
//!
//! Rates and capacities are bits/channel use on every public surface; the
//! information-density plumbing underneath works in nats.

pub mod bounds;
pub mod capacity;
pub mod channel;
pub mod codes;
pub mod curves;
pub mod error;
pub mod exact;
pub mod optim;
pub mod prob;
pub mod runner;
pub mod spectrum;

pub use channel::{ChannelFamily, Dmc};
pub use curves::{CurvePair, StepFunction};
pub use error::{Error, Result};
pub use prob::Prob;
pub use spectrum::Spectrum;

pub const LN2: f64 = std::f64::consts::LN_2;
