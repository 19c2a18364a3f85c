//! Reconstruction error and neighborhood-preservation scores.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HneError, Result};
use crate::hierarchic::hierarchic_residuals;
use crate::neighbors::squared_distance;
use crate::types::{DataMatrix, EmbeddingResult, NeighborIndex, WeightSet};

/// Mean Euclidean reconstruction residual over all points: the inner
/// residual for LLE weights, the hierarchic residual for the other variants.
pub fn avg_reconstruction_error(data: &DataMatrix, idx: &NeighborIndex, weights: &WeightSet) -> f64 {
    let res = hierarchic_residuals(data, idx, weights);
    res.iter().map(|r| r.1).sum::<f64>() / res.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingQuality {
    pub trustworthiness: f64,
    pub continuity: f64,
    pub knn_preservation: f64,
}

/// Scores `embedding` against ground-truth coordinates with `k_eval`
/// neighbors.
pub fn embedding_quality(
    embedding: &EmbeddingResult,
    intrinsic: &DataMatrix,
    k_eval: usize,
) -> Result<EmbeddingQuality> {
    neighborhood_quality(intrinsic, &embedding.to_points()?, k_eval)
}

/// Every other point ordered by distance to `i`, ties by index.
fn ranking(data: &DataMatrix, i: usize) -> Vec<usize> {
    let p = data.point(i);
    let mut others: Vec<(f64, usize)> = (0..data.n())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(p, data.point(j)), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().map(|(_, j)| j).collect()
}

/// Trustworthiness penalizes points that enter the `k`-neighborhood in
/// `embedded` without being near in `reference`, weighted by how far down
/// the reference ranking they sit. Continuity is the same with the roles
/// swapped.
pub fn neighborhood_quality(reference: &DataMatrix, embedded: &DataMatrix, k: usize) -> Result<EmbeddingQuality> {
    let n = reference.n();
    if embedded.n() != n {
        return Err(HneError::DimensionMismatch(format!(
            "embedding has {} points, reference has {n}",
            embedded.n()
        )));
    }
    if k == 0 || k >= n {
        return Err(HneError::KTooLarge { k, n });
    }
    // (trust penalty, continuity penalty, shared neighbors) per point.
    let per_point: Vec<(usize, usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ref_order = ranking(reference, i);
            let emb_order = ranking(embedded, i);
            let mut ref_rank = vec![0; n];
            let mut emb_rank = vec![0; n];
            for (r, &j) in ref_order.iter().enumerate() {
                ref_rank[j] = r + 1;
            }
            for (r, &j) in emb_order.iter().enumerate() {
                emb_rank[j] = r + 1;
            }
            let trust: usize = emb_order[..k]
                .iter()
                .filter(|&&j| ref_rank[j] > k)
                .map(|&j| ref_rank[j] - k)
                .sum();
            let cont: usize = ref_order[..k]
                .iter()
                .filter(|&&j| emb_rank[j] > k)
                .map(|&j| emb_rank[j] - k)
                .sum();
            let shared = ref_order[..k].iter().filter(|&&j| emb_rank[j] <= k).count();
            (trust, cont, shared)
        })
        .collect();
    let (nf, kf) = (n as f64, k as f64);
    // Largest possible penalty sum, valid for k < n / 2.
    let norm = if 2 * k < n {
        2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0))
    } else {
        2.0 / (nf * (nf - kf) * (nf - kf - 1.0))
    };
    let sum = |f: fn(&(usize, usize, usize)) -> usize| per_point.iter().map(f).sum::<usize>() as f64;
    Ok(EmbeddingQuality {
        trustworthiness: 1.0 - norm * sum(|p| p.0),
        continuity: 1.0 - norm * sum(|p| p.1),
        knn_preservation: sum(|p| p.2) / (nf * kf),
    })
}
