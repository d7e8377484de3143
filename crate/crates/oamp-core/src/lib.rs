//! Core algorithms for MIMO symbol detection.
//!
//! This crate is `no_std` (alloc only) and holds everything that computes:
//! dense real/complex linear algebra, QAM constellations, channel synthesis,
//! the OAMP family of detectors (plain OAMP, OAMPNet2, self-attention OAMP),
//! and a small reverse-mode differentiation engine with the training loop for
//! the learned variants. File formats, the CLI and anything that touches the
//! OS live in the companion `oamp-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channel;
pub mod detect;
pub mod error;
mod fmath;
pub mod modem;
pub mod neural;
pub mod numerics;
pub mod rng;

pub use error::Error;
pub use rng::Rng;
