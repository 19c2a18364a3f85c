//! Outer-layer weights for the three hierarchic variants.
//!
//! Every variant starts from the inner LLE weights `w_{i_l}` and attaches a
//! block of `k` outer weights `w_{i_l}^{(j)}` to each inner neighbor. They
//! differ in which constraint the outer blocks satisfy and how the blocks
//! are solved:
//!
//! * IHNE solves each block independently, with `sum_j w^{(j)} = 1`.
//! * RHNE solves one joint problem over all `k^2` outer points, with only
//!   the joint constraint `sum_l w_l sum_j w_l^{(j)} = 1`, then factors the
//!   joint weights back through the inner weights.
//! * BHNE keeps the per-block constraint but runs block coordinate descent
//!   on the full hierarchic residual.

use rayon::prelude::*;

use crate::error::{HneError, Result};
use crate::lle::{check_shapes, solve_local};
use crate::types::{DataMatrix, NeighborIndex, Variant, WeightSet};

/// Inner weights at or below this magnitude are treated as zero.
pub const ZERO_WEIGHT_EPS: f64 = 1e-12;

fn check_inner(idx: &NeighborIndex, inner: &WeightSet) -> Result<()> {
    if inner.n() != idx.n() || inner.k() != idx.k() {
        return Err(HneError::DimensionMismatch(format!(
            "inner weights are {} x {}, neighbor index is {} x {}",
            inner.n(),
            inner.k(),
            idx.n(),
            idx.k()
        )));
    }
    Ok(())
}

fn points<'a>(data: &'a DataMatrix, ids: &[usize]) -> Vec<&'a [f64]> {
    ids.iter().map(|&j| data.point(j)).collect()
}

fn collect_blocks(variant: Variant, inner: &WeightSet, blocks: Vec<(Vec<f64>, u32)>) -> Result<WeightSet> {
    let mut outer = Vec::with_capacity(inner.n() * inner.k() * inner.k());
    let mut warnings = Vec::with_capacity(blocks.len());
    for (block, warn) in blocks {
        outer.extend(block);
        warnings.push(warn);
    }
    let mut ws = WeightSet::from_parts(variant, inner.n(), inner.k(), inner.inner.clone(), outer)?;
    ws.zero_inner_warnings = warnings;
    Ok(ws)
}

/// IHNE: each outer block reconstructs `x_i` from `N(i_l)` on its own.
///
/// The inner weight only scales the block objective, so it does not move
/// the minimizer; blocks whose inner weight is numerically zero get uniform
/// weights.
pub fn solve_ihne(data: &DataMatrix, idx: &NeighborIndex, inner: &WeightSet, sigma_reg: f64) -> Result<WeightSet> {
    check_shapes(data, idx)?;
    check_inner(idx, inner)?;
    let k = idx.k();
    let blocks = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let mut block = Vec::with_capacity(k * k);
            for l in 0..k {
                if inner.inner(i)[l].abs() <= ZERO_WEIGHT_EPS {
                    block.extend(std::iter::repeat_n(1.0 / k as f64, k));
                } else {
                    let nbrs = points(data, idx.outer(i, l));
                    block.extend(solve_local(data.point(i), &nbrs, sigma_reg).map_err(|e| e.at_point(i))?);
                }
            }
            Ok((block, 0))
        })
        .collect::<Result<Vec<_>>>()?;
    collect_blocks(Variant::Ihne, inner, blocks)
}

/// Factors joint weights `w~_{lj}` into outer blocks `w~_{lj} / w_l`.
///
/// Blocks with a zero inner weight cannot be divided out; they are set to
/// uniform and the remaining blocks are rescaled so the joint sum stays one.
/// Returns the outer block and the number of such blocks.
pub fn factor_joint(joint: &[f64], inner: &[f64]) -> (Vec<f64>, u32) {
    let k = inner.len();
    let uniform = 1.0 / k as f64;
    let mut outer = vec![0.0; k * k];
    let mut zero_mass = 0.0;
    let mut kept_joint = 0.0;
    let mut zero_blocks = 0u32;
    for l in 0..k {
        let block = &mut outer[l * k..(l + 1) * k];
        if inner[l].abs() <= ZERO_WEIGHT_EPS {
            block.fill(uniform);
            zero_mass += inner[l];
            zero_blocks += 1;
        } else {
            for j in 0..k {
                block[j] = joint[l * k + j] / inner[l];
            }
            kept_joint += joint[l * k..(l + 1) * k].iter().sum::<f64>();
        }
    }
    if zero_blocks > 0 {
        if kept_joint.abs() > ZERO_WEIGHT_EPS {
            let scale = (1.0 - zero_mass) / kept_joint;
            for l in 0..k {
                if inner[l].abs() > ZERO_WEIGHT_EPS {
                    outer[l * k..(l + 1) * k].iter_mut().for_each(|v| *v *= scale);
                }
            }
        } else {
            outer.fill(uniform);
        }
    }
    (outer, zero_blocks)
}

/// RHNE: one sum-to-one solve over all `k^2` outer points of `x_i` (with
/// multiplicity), then division by the inner weights.
pub fn solve_rhne(data: &DataMatrix, idx: &NeighborIndex, inner: &WeightSet, sigma_reg: f64) -> Result<WeightSet> {
    check_shapes(data, idx)?;
    check_inner(idx, inner)?;
    let blocks = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let nbrs = points(data, &idx.outer_flat(i));
            let joint = solve_local(data.point(i), &nbrs, sigma_reg).map_err(|e| e.at_point(i))?;
            Ok(factor_joint(&joint, inner.inner(i)))
        })
        .collect::<Result<Vec<_>>>()?;
    collect_blocks(Variant::Rhne, inner, blocks)
}

/// BHNE weights of a single point plus the squared hierarchic residual
/// after every sweep (`rotations + 1` entries).
///
/// The first sweep approximates the other blocks by their inner points,
/// later sweeps use the freshest outer blocks (Gauss-Seidel order).
pub fn bhne_point(
    data: &DataMatrix,
    idx: &NeighborIndex,
    inner: &WeightSet,
    i: usize,
    sigma_reg: f64,
    rotations: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = idx.k();
    let dim = data.dim();
    let w = inner.inner(i);
    let xi = data.point(i);
    let mut outer = vec![1.0 / k as f64; k * k];

    // Current stand-in for each inner neighbor: the point itself during the
    // first sweep, its outer combination afterwards.
    let mut proxies: Vec<Vec<f64>> = idx.inner(i).iter().map(|&m| data.point(m).to_vec()).collect();
    let mut objectives = Vec::with_capacity(rotations + 1);

    for sweep in 0..=rotations {
        for l in 0..k {
            if w[l].abs() <= ZERO_WEIGHT_EPS {
                continue;
            }
            let mut center = xi.to_vec();
            for (m, proxy) in proxies.iter().enumerate() {
                if m != l {
                    for c in 0..dim {
                        center[c] -= w[m] * proxy[c];
                    }
                }
            }
            center.iter_mut().for_each(|v| *v /= w[l]);
            let nbrs = points(data, idx.outer(i, l));
            let block = solve_local(&center, &nbrs, sigma_reg).map_err(|e| e.at_point(i))?;
            outer[l * k..(l + 1) * k].copy_from_slice(&block);
            if sweep > 0 {
                proxies[l] = combine(&nbrs, &block, dim);
            }
        }
        if sweep == 0 {
            for l in 0..k {
                proxies[l] = combine(&points(data, idx.outer(i, l)), &outer[l * k..(l + 1) * k], dim);
            }
        }
        let recon = combine(&proxies, w, dim);
        objectives.push(xi.iter().zip(&recon).map(|(a, b)| (a - b) * (a - b)).sum());
    }
    Ok((outer, objectives))
}

/// BHNE: block coordinate descent over the outer blocks of each point,
/// `rotations` passes after the initial sweep.
pub fn solve_bhne(
    data: &DataMatrix,
    idx: &NeighborIndex,
    inner: &WeightSet,
    sigma_reg: f64,
    rotations: usize,
) -> Result<WeightSet> {
    check_shapes(data, idx)?;
    check_inner(idx, inner)?;
    if rotations == 0 {
        return Err(HneError::InvalidConfig("rotations must be at least 1".into()));
    }
    let blocks = (0..data.n())
        .into_par_iter()
        .map(|i| bhne_point(data, idx, inner, i, sigma_reg, rotations).map(|(b, _)| (b, 0)))
        .collect::<Result<Vec<_>>>()?;
    collect_blocks(Variant::Bhne, inner, blocks)
}

fn combine<P: AsRef<[f64]>>(points: &[P], weights: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (p, w) in points.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(p.as_ref()) {
            *o += w * x;
        }
    }
    out
}

fn norm_of_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Per-point `(inner, hierarchic)` reconstruction residuals as Euclidean
/// norms. For [`Variant::Lle`] the hierarchic residual equals the inner one.
pub fn hierarchic_residuals(data: &DataMatrix, idx: &NeighborIndex, weights: &WeightSet) -> Vec<(f64, f64)> {
    let dim = data.dim();
    let k = idx.k();
    (0..data.n())
        .into_par_iter()
        .map(|i| {
            let xi = data.point(i);
            let w = weights.inner(i);
            let inner_pts = points(data, idx.inner(i));
            let inner_res = norm_of_difference(xi, &combine(&inner_pts, w, dim));
            if !weights.has_outer() {
                return (inner_res, inner_res);
            }
            let proxies: Vec<Vec<f64>> = (0..k)
                .map(|l| combine(&points(data, idx.outer(i, l)), weights.outer(i, l), dim))
                .collect();
            let hier_res = norm_of_difference(xi, &combine(&proxies, w, dim));
            (inner_res, hier_res)
        })
        .collect()
}

/// Outer weights for `variant`, given inner weights.
pub fn solve_outer(
    variant: Variant,
    data: &DataMatrix,
    idx: &NeighborIndex,
    inner: &WeightSet,
    sigma_reg: f64,
    rotations: usize,
) -> Result<WeightSet> {
    match variant {
        Variant::Lle => Ok(inner.clone()),
        Variant::Ihne => solve_ihne(data, idx, inner, sigma_reg),
        Variant::Rhne => solve_rhne(data, idx, inner, sigma_reg),
        Variant::Bhne => solve_bhne(data, idx, inner, sigma_reg, rotations),
    }
}
