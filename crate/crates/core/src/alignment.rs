//! Global alignment matrix `G = gamma * L + L~`.
//!
//! Each point contributes two symmetric rank-one terms. The inner term is
//! `v v^T` with `v = [-1; w_i]` placed on the rows and columns
//! `[i, N(i)]`; the outer term is `u u^T` with `u = [-1; w_{i_1} w_{i_1}^{(.)}; ...]`
//! placed on `[i, N(i_1), ..., N(i_k)]`. Selection matrices are never built:
//! the placement is an index scatter, and an index that appears several
//! times in one term has its coefficients summed first, which is the same
//! as scattering each copy separately.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{HneError, Result};
use crate::types::{NeighborIndex, Variant, WeightSet};

/// Above this many points the matrix is kept in compressed sparse rows.
pub const DENSE_LIMIT: usize = 2000;

/// Compressed sparse row storage of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate `(row, col)` entries in the order they were pushed.
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub(crate) fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut triplets = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if m[(r, c)] != 0.0 {
                    triplets.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(n, triplets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |p| vals[p])
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c)] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

/// Requested storage for [`build_alignment_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageKind {
    /// Dense up to [`DENSE_LIMIT`] points, sparse above.
    Auto,
    Dense,
    Sparse,
}

/// The symmetric positive semidefinite matrix whose bottom eigenvectors
/// give the embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix {
    gamma: f64,
    storage: Storage,
}

impl AlignmentMatrix {
    pub fn n(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.n(),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(r, c)],
            Storage::Sparse(m) => m.get(r, c),
        }
    }

    /// `y = G x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        match &self.storage {
            Storage::Dense(m) => {
                for c in 0..n {
                    let xc = x[c];
                    if xc != 0.0 {
                        for (yr, g) in y.iter_mut().zip(m.column(c).iter()) {
                            *yr += g * xc;
                        }
                    }
                }
            }
            Storage::Sparse(m) => m.mul_vec(x, &mut y),
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.iter().filter(|v| **v != 0.0).count(),
            Storage::Sparse(m) => m.nnz(),
        }
    }

    /// Writes every nonzero as a `row col value` line.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.n();
        match &self.storage {
            Storage::Dense(m) => {
                for r in 0..n {
                    for c in 0..n {
                        let v = m[(r, c)];
                        if v != 0.0 {
                            writeln!(out, "{r} {c} {v:e}")?;
                        }
                    }
                }
            }
            Storage::Sparse(m) => {
                for r in 0..n {
                    let (cols, vals) = m.row(r);
                    for (c, v) in cols.iter().zip(vals) {
                        writeln!(out, "{r} {c} {v:e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Merges repeated indices of a scatter vector by summing their
/// coefficients, keeping first-occurrence order.
fn compress(entries: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (idx, v) in entries {
        match out.iter_mut().find(|(j, _)| *j == idx) {
            Some((_, acc)) => *acc += v,
            None => out.push((idx, v)),
        }
    }
    out
}

struct PointTerms {
    inner: Vec<(usize, f64)>,
    outer: Option<Vec<(usize, f64)>>,
}

fn point_terms(idx: &NeighborIndex, weights: &WeightSet, i: usize) -> PointTerms {
    let w = weights.inner(i);
    let inner = compress(std::iter::once((i, -1.0)).chain(idx.inner(i).iter().copied().zip(w.iter().copied())));
    let outer = weights.has_outer().then(|| {
        let joint = weights.joint(i);
        compress(std::iter::once((i, -1.0)).chain(idx.outer_flat(i).into_iter().zip(joint)))
    });
    PointTerms { inner, outer }
}

/// Assembles `G` with automatic dense/sparse storage.
pub fn build_alignment(idx: &NeighborIndex, weights: &WeightSet, gamma: f64) -> Result<AlignmentMatrix> {
    build_alignment_with(idx, weights, gamma, StorageKind::Auto)
}

/// Assembles `G = gamma * L + L~`. For [`Variant::Lle`] only `L` exists and
/// `gamma` is taken as 1.
pub fn build_alignment_with(
    idx: &NeighborIndex,
    weights: &WeightSet,
    gamma: f64,
    kind: StorageKind,
) -> Result<AlignmentMatrix> {
    let n = idx.n();
    if weights.n() != n || weights.k() != idx.k() {
        return Err(HneError::DimensionMismatch(format!(
            "weights are {} x {}, neighbor index is {} x {}",
            weights.n(),
            weights.k(),
            n,
            idx.k()
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(HneError::InvalidConfig(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let gamma = if weights.variant() == Variant::Lle { 1.0 } else { gamma };

    let terms: Vec<PointTerms> = (0..n).into_par_iter().map(|i| point_terms(idx, weights, i)).collect();

    let sparse = match kind {
        StorageKind::Auto => n > DENSE_LIMIT,
        StorageKind::Dense => false,
        StorageKind::Sparse => true,
    };
    let storage = if sparse {
        let mut triplets = Vec::new();
        scatter(&terms, gamma, |r, c, v| triplets.push((r, c, v)));
        Storage::Sparse(CsrMatrix::from_triplets(n, triplets))
    } else {
        let mut g = DMatrix::zeros(n, n);
        scatter(&terms, gamma, |r, c, v| g[(r, c)] += v);
        Storage::Dense(g)
    };
    Ok(AlignmentMatrix { gamma, storage })
}

// Every (r, c) slot receives its contributions in point order with the same
// products as (c, r), so the assembled matrix is exactly symmetric.
fn scatter(terms: &[PointTerms], gamma: f64, mut add: impl FnMut(usize, usize, f64)) {
    for t in terms {
        if gamma != 0.0 {
            for &(r, a) in &t.inner {
                for &(c, b) in &t.inner {
                    add(r, c, gamma * (a * b));
                }
            }
        }
        if let Some(outer) = &t.outer {
            for &(r, a) in outer {
                for &(c, b) in outer {
                    add(r, c, a * b);
                }
            }
        }
    }
}

/// Largest entry of `|G e|`, which vanishes whenever the weights satisfy
/// their sum constraints.
pub fn check_null_vector(g: &AlignmentMatrix) -> f64 {
    g.mul_vec(&vec![1.0; g.n()]).iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchic::{solve_bhne, solve_ihne, solve_rhne};
    use crate::lle::solve_inner;
    use crate::neighbors::build_hierarchic;
    use crate::types::DataMatrix;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, dim: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(n, dim, (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn all_variants(data: &DataMatrix, k: usize) -> (NeighborIndex, Vec<WeightSet>) {
        let idx = build_hierarchic(data, k).unwrap();
        let inner = solve_inner(data, &idx, 1e-3).unwrap();
        let ws = vec![
            solve_ihne(data, &idx, &inner, 1e-3).unwrap(),
            solve_rhne(data, &idx, &inner, 1e-3).unwrap(),
            solve_bhne(data, &idx, &inner, 1e-3, 2).unwrap(),
            inner,
        ];
        (idx, ws)
    }

    #[test]
    fn three_point_chain_matches_hand_expansion() {
        let idx = NeighborIndex::from_inner(3, 1, vec![1, 0, 1]).unwrap();
        let ws = WeightSet::from_parts(Variant::Lle, 3, 1, vec![1.0; 3], vec![]).unwrap();
        let g = build_alignment(&idx, &ws, 1.0).unwrap().to_dense();
        // (e0-e1)(e0-e1)^T + (e1-e0)(e1-e0)^T + (e2-e1)(e2-e1)^T
        let expected = DMatrix::from_row_slice(3, 3, &[2.0, -2.0, 0.0, -2.0, 3.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(g, expected);
    }

    #[test]
    fn null_vector_for_every_variant() {
        let data = random_data(60, 4, 1);
        let (idx, all) = all_variants(&data, 5);
        for ws in &all {
            let g = build_alignment(&idx, ws, 1.0).unwrap();
            assert!(check_null_vector(&g) <= 1e-8, "{:?}", ws.variant());
        }
    }

    #[test]
    fn perturbed_row_breaks_null_vector() {
        let data = random_data(30, 3, 2);
        let idx = build_hierarchic(&data, 4).unwrap();
        let mut ws = solve_inner(&data, &idx, 1e-3).unwrap();
        let scale = 1.1 / ws.inner(7).iter().sum::<f64>();
        for l in 0..4 {
            ws.inner[7 * 4 + l] *= scale;
        }
        let g = build_alignment(&idx, &ws, 1.0).unwrap();
        // Row 7 of G e picks up (-1)(-1 + 1.1) = -0.1 from point 7's own term.
        assert!(check_null_vector(&g) > 1e-3);
    }

    #[test]
    fn assembly_is_linear_in_gamma() {
        let data = random_data(40, 3, 3);
        let (idx, all) = all_variants(&data, 4);
        let rhne = &all[1];
        let l_only = WeightSet::from_parts(Variant::Lle, 40, 4, rhne.inner.clone(), vec![]).unwrap();
        let l = build_alignment(&idx, &l_only, 1.0).unwrap().to_dense();
        let l_tilde = build_alignment(&idx, rhne, 0.0).unwrap().to_dense();
        for gamma in [0.0, 0.5, 1.0] {
            let g = build_alignment(&idx, rhne, gamma).unwrap().to_dense();
            let expected = &l * gamma + &l_tilde;
            assert!((g - expected).abs().max() < 1e-12);
        }
    }

    #[test]
    fn exactly_symmetric_and_psd() {
        let data = random_data(50, 5, 4);
        let (idx, all) = all_variants(&data, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for ws in &all {
            let g = build_alignment(&idx, ws, 0.7).unwrap();
            let dense = g.to_dense();
            assert_eq!(dense, dense.transpose());
            for _ in 0..100 {
                let v: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
                let gv = g.mul_vec(&v);
                let q: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
                assert!(q >= -1e-9);
            }
        }
    }

    #[test]
    fn sparse_and_dense_storage_agree() {
        let data = random_data(45, 3, 5);
        let (idx, all) = all_variants(&data, 4);
        for ws in &all {
            let dense = build_alignment_with(&idx, ws, 1.0, StorageKind::Dense).unwrap();
            let sparse = build_alignment_with(&idx, ws, 1.0, StorageKind::Sparse).unwrap();
            assert!(sparse.is_sparse());
            let (a, b) = (dense.to_dense(), sparse.to_dense());
            for r in 0..45 {
                for c in 0..45 {
                    assert_abs_diff_eq!(a[(r, c)], b[(r, c)], epsilon = 1e-12);
                    assert_eq!(b[(r, c)], b[(c, r)]);
                }
            }
            assert!(check_null_vector(&sparse) <= 1e-8);
        }
    }

    #[test]
    fn repeated_outer_points_accumulate() {
        // Mutual nearest pair: the outer list of 0 is [0] itself.
        let idx = NeighborIndex::from_inner(3, 1, vec![1, 0, 1]).unwrap();
        let ws = WeightSet::from_parts(Variant::Ihne, 3, 1, vec![1.0; 3], vec![1.0; 3]).unwrap();
        let g = build_alignment(&idx, &ws, 0.0).unwrap().to_dense();
        // u for point 0 is [-1 at 0, +1 at 0] which cancels; point 1 the same;
        // point 2 has u = [-1 at 2, +1 at 0].
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0]);
        assert_eq!(g, expected);
    }

    #[test]
    fn coo_dump_lists_nonzeros() {
        let idx = NeighborIndex::from_inner(3, 1, vec![1, 0, 1]).unwrap();
        let ws = WeightSet::from_parts(Variant::Lle, 3, 1, vec![1.0; 3], vec![]).unwrap();
        let g = build_alignment(&idx, &ws, 1.0).unwrap();
        let mut buf = Vec::new();
        g.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("0 0 2e0\n"));
    }
}
