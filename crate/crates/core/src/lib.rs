//! Spectral and connection problem for the order-`N` modified Mathieu
//! difference operator
//!
//! ```text
//! Λ^N (ψ(y + iħ) + ψ(y − iħ)) + V_N(y) ψ(y) = (−1)^{N+1} u_N ψ(y)
//! ```
//!
//! Floquet exponents come from zeros of the quantum Wronskian of the
//! Baxter Q-functions, the connection matrix from the Floquet multipliers,
//! and bound states or resonances from roots of the Weyl-orbit
//! quantization conditions in `u_N`.

pub mod connection;
pub mod error;
pub mod floquet;
pub mod oracle;
pub mod qfn;
pub mod rootsys;
pub mod special;
pub mod spectrum;

pub mod cli;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;

/// Crate version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
