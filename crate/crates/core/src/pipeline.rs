//! The full embedding pipeline in one call.

use crate::alignment::{build_alignment, check_null_vector, AlignmentMatrix};
use crate::error::Result;
use crate::hierarchic::{hierarchic_residuals, solve_outer};
use crate::lle::solve_inner;
use crate::neighbors::build_hierarchic;
use crate::spectral::embed;
use crate::types::{validate_config, DataMatrix, EmbedConfig, EmbeddingResult, NeighborIndex, WeightSet};

/// Intermediate products of [`run`], kept for diagnostics.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub config: EmbedConfig,
    pub index: NeighborIndex,
    pub weights: WeightSet,
    pub alignment: AlignmentMatrix,
    /// `max |G e|` for the all-ones vector `e`.
    pub null_residual: f64,
    pub embedding: EmbeddingResult,
}

/// Neighbors, weights, alignment matrix and spectral embedding for `data`.
///
/// ```
/// use hne::{datasets::swiss_roll, pipeline, EmbedConfig, Variant};
///
/// let data = swiss_roll(200, 1, false).data;
/// let out = pipeline::run(&data, &EmbedConfig::new(Variant::Rhne, 5, 2)).unwrap();
/// assert_eq!(out.embedding.coords.len(), 2);
/// assert!(out.null_residual < 1e-8);
/// ```
pub fn run(data: &DataMatrix, cfg: &EmbedConfig) -> Result<PipelineOutput> {
    let cfg = validate_config(cfg.clone(), data)?;
    let index = build_hierarchic(data, cfg.k)?;
    let inner = solve_inner(data, &index, cfg.sigma_reg)?;
    let weights = solve_outer(cfg.variant, data, &index, &inner, cfg.sigma_reg, cfg.bhne_rotations)?;
    let alignment = build_alignment(&index, &weights, cfg.gamma)?;
    let null_residual = check_null_vector(&alignment);
    let mut embedding = embed(&alignment, cfg.d)?;
    embedding.residuals = Some(hierarchic_residuals(data, &index, &weights));
    Ok(PipelineOutput {
        config: cfg,
        index,
        weights,
        alignment,
        null_residual,
        embedding,
    })
}

/// Weights only, for reconstruction benchmarks that skip the eigensolve.
pub fn weights(data: &DataMatrix, cfg: &EmbedConfig) -> Result<(NeighborIndex, WeightSet)> {
    let index = build_hierarchic(data, cfg.k)?;
    let inner = solve_inner(data, &index, cfg.sigma_reg)?;
    let weights = solve_outer(cfg.variant, data, &index, &inner, cfg.sigma_reg, cfg.bhne_rotations)?;
    Ok((index, weights))
}
