//! Inner-layer reconstruction weights: sum-to-one constrained least squares
//! on the local Gram matrix, with Tikhonov regularization.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{HneError, Result};
use crate::types::{DataMatrix, NeighborIndex, Variant, WeightSet};

/// Gram matrix `Z^T Z` of the difference vectors `center - neighbor_j`.
pub fn local_gram(center: &[f64], neighbors: &[&[f64]]) -> DMatrix<f64> {
    let m = neighbors.len();
    let diffs: Vec<Vec<f64>> = neighbors
        .iter()
        .map(|nb| center.iter().zip(*nb).map(|(c, x)| c - x).collect())
        .collect();
    let mut gram = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let dot: f64 = diffs[a].iter().zip(&diffs[b]).map(|(x, y)| x * y).sum();
            gram[(a, b)] = dot;
            gram[(b, a)] = dot;
        }
    }
    gram
}

/// Minimizes `||sum_j w_j (center - neighbor_j)||^2 + sigma ||w||^2` subject
/// to `sum_j w_j = 1`.
///
/// The ridge is relative: `sigma = sigma_reg * trace(C) / m` for the local
/// Gram matrix `C`, so it tracks the neighborhood's scale. When every neighbor coincides with the center all
/// feasible weights are optimal and the uniform vector is returned.
pub fn solve_local(center: &[f64], neighbors: &[&[f64]], sigma_reg: f64) -> Result<Vec<f64>> {
    let m = neighbors.len();
    if m == 0 {
        return Err(HneError::DimensionMismatch("empty neighborhood".into()));
    }
    if let Some(nb) = neighbors.iter().find(|nb| nb.len() != center.len()) {
        return Err(HneError::DimensionMismatch(format!(
            "neighbor has dimension {}, center has {}",
            nb.len(),
            center.len()
        )));
    }
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let gram = local_gram(center, neighbors);
    solve_gram(gram, sigma_reg)
}

/// Same as [`solve_local`] for a precomputed Gram matrix.
///
/// Solves the bordered system `[C + sigma I, 1; 1^T, 0] [w; mu] = [0; 1]`
/// after normalizing `C` by its mean diagonal. The bordered matrix stays
/// invertible whenever the constrained minimizer is unique, including
/// exact reconstructions where `C` itself is singular.
pub fn solve_gram(gram: DMatrix<f64>, sigma_reg: f64) -> Result<Vec<f64>> {
    let m = gram.nrows();
    let trace = gram.trace();
    if trace == 0.0 {
        return Ok(vec![1.0 / m as f64; m]);
    }
    let scale = trace / m as f64;
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    kkt.view_mut((0, 0), (m, m)).copy_from(&(gram / scale));
    for a in 0..m {
        kkt[(a, a)] += sigma_reg;
        kkt[(a, m)] = 1.0;
        kkt[(m, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = 1.0;

    let lu = kkt.full_piv_lu();
    let pivots = lu.u().diagonal().map(f64::abs);
    if sigma_reg == 0.0 && pivots.min() <= SINGULAR_PIVOT_RATIO * pivots.max() {
        return Err(HneError::SingularSystem { point: None });
    }
    let sol = lu.solve(&rhs).ok_or(HneError::SingularSystem { point: None })?;
    let w = sol.rows(0, m);
    let total: f64 = w.iter().sum();
    if !total.is_finite() || total.abs() < f64::MIN_POSITIVE || w.iter().any(|v| !v.is_finite()) {
        return Err(HneError::SingularSystem { point: None });
    }
    Ok(w.iter().map(|v| v / total).collect())
}

/// Unregularized bordered systems whose smallest LU pivot falls below this
/// fraction of the largest are reported as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Inner weights of every point: row `i` reconstructs `x_i` from its `k`
/// nearest neighbors.
pub fn solve_inner(data: &DataMatrix, idx: &NeighborIndex, sigma_reg: f64) -> Result<WeightSet> {
    check_shapes(data, idx)?;
    let rows: Vec<Vec<f64>> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let nbrs: Vec<&[f64]> = idx.inner(i).iter().map(|&j| data.point(j)).collect();
            solve_local(data.point(i), &nbrs, sigma_reg).map_err(|e| e.at_point(i))
        })
        .collect::<Result<_>>()?;
    WeightSet::from_parts(Variant::Lle, data.n(), idx.k(), rows.concat(), Vec::new())
}

pub(crate) fn check_shapes(data: &DataMatrix, idx: &NeighborIndex) -> Result<()> {
    if data.n() != idx.n() {
        return Err(HneError::DimensionMismatch(format!(
            "neighbor index covers {} points, data has {}",
            idx.n(),
            data.n()
        )));
    }
    Ok(())
}
