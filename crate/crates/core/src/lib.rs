//! Hierarchic neighbors embedding.
//!
//! Locally linear embedding reconstructs every point from its `k` nearest
//! neighbors and looks for low-dimensional coordinates that keep those
//! reconstructions. The hierarchic variants add a second layer: each
//! neighbor is itself reconstructed from *its* neighbors, and the embedding
//! has to respect both layers.
//!
//! ```
//! use hne::{datasets::swiss_roll, pipeline, EmbedConfig, Variant};
//!
//! let roll = swiss_roll(300, 7, false);
//! let out = pipeline::run(&roll.data, &EmbedConfig::new(Variant::Ihne, 6, 2))?;
//! let y = out.embedding.to_points()?;
//! assert_eq!((y.n(), y.dim()), (300, 2));
//! # Ok::<(), hne::HneError>(())
//! ```
//!
//! The steps are available one by one in [`neighbors`], [`lle`],
//! [`hierarchic`], [`alignment`] and [`spectral`].

#![allow(clippy::needless_range_loop)]

pub mod alignment;
pub mod datasets;
pub mod error;
pub mod hierarchic;
pub mod lle;
pub mod metrics;
pub mod neighbors;
pub mod pipeline;
pub mod spectral;
pub mod types;

pub use error::{HneError, Result};
pub use types::{DataMatrix, EmbedConfig, EmbeddingResult, NeighborIndex, SpectralWarning, Variant, WeightSet};

/// Library version, recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/neighbors.md")]
    mod neighbors {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/hierarchic.md")]
    mod hierarchic {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
}
