//! Feedback capacity of the trapdoor (chemical) channel.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: the two-state unifilar channel itself.
//! - [`dp`]: the belief-state average-reward dynamic program, its Bellman
//!   operator and discretized value iteration.
//! - [`golden`]: the closed-form golden-ratio solution and its numerical
//!   verification against the Bellman equation.
//! - [`codec`]: the zero-error feedback code over no-`11` action sequences.
//! - [`sim`]: seeded experiments tying the pieces together.
//! - [`export`]: CSV/JSON artifacts.

pub mod channel;
pub mod codec;
pub mod dp;
pub mod error;
pub mod export;
pub mod golden;
pub mod info;
pub mod report;
pub mod search;
pub mod sim;

pub use channel::{Bit, ChannelState, ChannelStep, Trapdoor, UnifilarChannel};
pub use error::{Error, Result};
pub use golden::GoldenConstants;
