//! Hierarchic k-NN graph: inner neighbors of every point, and the inner
//! neighbors of those neighbors as the outer layer.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{HneError, Result};
use crate::types::{DataMatrix, NeighborIndex};

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest neighbors of `point` among `data`, skipping index `skip`,
/// ordered by ascending distance with ties going to the smaller index.
pub(crate) fn nearest(data: &DataMatrix, point: &[f64], skip: Option<usize>, k: usize) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = data
        .rows()
        .enumerate()
        .filter(|&(j, _)| Some(j) != skip)
        .map(|(j, q)| (squared_distance(point, q), j))
        .collect();
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Brute-force Euclidean k-NN. Row `i` of the result holds the `k` points
/// closest to `x_i` (never `i` itself), nearest first.
pub fn build_knn(data: &DataMatrix, k: usize) -> Result<Vec<usize>> {
    let n = data.n();
    if k == 0 || k >= n {
        return Err(HneError::KTooLarge { k, n });
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| nearest(data, data.point(i), Some(i), k))
        .collect();
    Ok(rows.concat())
}

/// Builds the two-layer neighbor graph. Repeated outer points, including
/// `i` itself, are kept.
pub fn build_hierarchic(data: &DataMatrix, k: usize) -> Result<NeighborIndex> {
    let inner = build_knn(data, k)?;
    NeighborIndex::from_inner(data.n(), k, inner)
}

/// Undirected edge list of the inner graph, each pair once with `a < b`.
pub fn inner_edges(idx: &NeighborIndex) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (0..idx.n())
        .flat_map(|i| idx.inner(i).iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}
