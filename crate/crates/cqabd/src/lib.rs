//! Quantization-aware block-diagonalization precoding for the multiuser
//! MIMO broadcast channel: BD/RBD/ZF precoders, the Bussgang linearization
//! of few-bit DACs, achievable sum-rate formulas, converter power
//! arithmetic, and a reproducible Monte Carlo sweep harness.

pub mod channel;
pub mod error;
pub mod numerics;
pub mod power;
pub mod precoding;
pub mod quantization;
pub mod rate;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
