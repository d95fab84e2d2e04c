//! Restoration of images whose pixels live in the product space (S¹)^m × ℝⁿ.
//!
//! The crate implements denoising, inpainting, and joint restoration of such
//! images by minimizing first-plus-second-order TV-type functionals with a
//! cyclic proximal point algorithm (CPPA).  Every inner step of the solver is
//! a closed-form proximal mapping of a single finite-difference term or of the
//! data term, so the iteration is cheap and deterministic.
//!
//! Module map:
//! - [`geometry`]: circle arithmetic, wrapped angles, product-space distances.
//! - [`differences`]: absolute finite differences for the weights b₁, b₂, b₁₁.
//! - [`prox`]: closed-form proximal mappings plus brute-force oracles.
//! - [`functional`]: evaluation of the TV terms, the data term, the full
//!   objectives, and neighbor-distance diagnostics.
//! - [`cppa`]: functional splitting, sweep scheduling, and the main solver.
//! - [`imaging`]: HSV/RGB conversion, noise synthesis, metrics, and the
//!   synthetic image/video generators.
//! - [`pfi`]: raw planar float image format and mask I/O.
//! - [`manifest`]: run manifests for reproducibility.
//! - [`experiments`]: end-to-end restoration pipelines and grid search.

pub mod cppa;
pub mod differences;
pub mod error;
pub mod experiments;
pub mod functional;
pub mod geometry;
pub mod imaging;
pub mod manifest;
pub mod pfi;
pub mod prox;

pub use error::{Error, Result};
