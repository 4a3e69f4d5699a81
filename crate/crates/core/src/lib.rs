//! Semantic-aware power allocation for two-stream generative semantic
//! communication links.
//!
//! A source image is carried by two bit streams (a textual prompt and an
//! edge map) over orthogonal, quasi-static Rayleigh-faded links. The
//! perceptual error of the regenerated image is modelled as a monotone
//! function `P(ψ₁, ψ₂)` of the per-stream bit error rates, and the
//! allocators in [`solvers`] find per-stream transmit powers that meet a
//! perception target `P̄` at minimum total cost `Σ Kᵢ qᵢ`.

pub mod channel;
pub mod error;
pub mod modulation;
pub mod numerics;
pub mod perception;
pub mod simulator;
pub mod solvers;

pub use error::{Error, Result};
