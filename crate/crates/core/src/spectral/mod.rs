//! Bottom eigenvectors of the alignment matrix.
//!
//! Minimizing `tr(Y G Y^T)` under `Y Y^T = I` picks the eigenvectors of the
//! smallest eigenvalues. The very smallest belongs to the constant vector
//! (every `G` built from sum-to-one weights annihilates it) and is dropped;
//! the next `d` form the rows of `Y`.

mod krylov;
mod skyline;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::alignment::{AlignmentMatrix, CsrMatrix, Storage, DENSE_LIMIT};
use crate::error::{HneError, Result};
use crate::types::{EmbeddingResult, SpectralWarning};

/// Eigenvalue gaps at or below this are reported as a degenerate spectrum.
pub const DEGENERATE_GAP: f64 = 1e-10;

/// Which eigensolver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    /// Dense up to [`DENSE_LIMIT`] points, shift-invert above.
    #[default]
    Auto,
    /// Full symmetric eigendecomposition.
    Dense,
    /// Krylov iteration on `(G + shift I)^{-1}` with a sparse envelope
    /// Cholesky factorization.
    ShiftInvert,
}

/// Eigenpairs in ascending eigenvalue order. Each vector has unit norm.
pub type Eigenpairs = (Vec<f64>, Vec<Vec<f64>>);

/// The `count` algebraically smallest eigenpairs of `G`.
pub fn smallest_eigenpairs(g: &AlignmentMatrix, count: usize, solver: EigenSolver) -> Result<Eigenpairs> {
    let n = g.n();
    if count == 0 || count > n {
        return Err(HneError::DimensionMismatch(format!(
            "cannot extract {count} eigenpairs from a {n} x {n} matrix"
        )));
    }
    let iterative = match solver {
        EigenSolver::Auto => n > DENSE_LIMIT,
        EigenSolver::Dense => false,
        EigenSolver::ShiftInvert => true,
    };
    // The Krylov basis needs room beyond the wanted pairs.
    if iterative && count + 2 < n {
        let csr;
        let sparse = match g.storage() {
            Storage::Sparse(m) => m,
            Storage::Dense(m) => {
                csr = CsrMatrix::from_dense(m);
                &csr
            }
        };
        shift_invert(sparse, count)
    } else {
        Ok(dense_smallest(&g.to_dense(), count))
    }
}

fn dense_smallest(g: &DMatrix<f64>, count: usize) -> Eigenpairs {
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..g.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(count)
        .map(|c| (eig.eigenvalues[c], eig.eigenvectors.column(c).iter().copied().collect()))
        .unzip()
}

fn shift_invert(g: &CsrMatrix, count: usize) -> Result<Eigenpairs> {
    let n = g.n();
    let max_diag = (0..n).map(|r| g.get(r, r)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut shift = 1e-7 * max_diag;
    let factor = loop {
        if let Some(f) = skyline::SkylineCholesky::factor(g, shift) {
            break f;
        }
        shift *= 100.0;
        if shift > max_diag {
            return Err(HneError::ConvergenceFailure { iterations: 0 });
        }
    };
    let opts = krylov::KrylovOptions {
        nev: count,
        basis_size: (2 * count + 20).max(40),
        rel_tol: 1e-12,
        max_restarts: 300,
        seed: 0x5eed,
    };
    let (mus, vecs) = krylov::largest_eigenpairs(n, |x| factor.solve(x), &opts)?;
    // mu = 1 / (lambda + shift), descending mu is ascending lambda.
    let lambdas = mus.iter().map(|mu| 1.0 / mu - shift).collect();
    Ok((lambdas, vecs))
}

/// Flips `v` so that its largest-magnitude entry (lowest index on ties) is
/// positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Embedding from eigenvectors `2..=d+1` of `G`.
pub fn embed(g: &AlignmentMatrix, d: usize) -> Result<EmbeddingResult> {
    embed_with(g, d, EigenSolver::Auto)
}

pub fn embed_with(g: &AlignmentMatrix, d: usize, solver: EigenSolver) -> Result<EmbeddingResult> {
    let n = g.n();
    if d == 0 || d + 1 > n {
        return Err(HneError::DTooLarge { d, dim: n, n });
    }
    let (values, mut vectors) = smallest_eigenpairs(g, d + 1, solver)?;
    let mut warnings = Vec::new();
    if values[1] - values[0] <= DEGENERATE_GAP {
        warnings.push(SpectralWarning::DegenerateSpectrum {
            lambda1: values[0],
            lambda2: values[1],
        });
    }
    for v in vectors.iter_mut() {
        fix_sign(v);
    }
    let null_eigenvalue = values[0];
    Ok(EmbeddingResult {
        coords: vectors.split_off(1),
        eigenvalues: values[1..].to_vec(),
        null_eigenvalue,
        residuals: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{build_alignment, build_alignment_with, StorageKind};
    use crate::hierarchic::solve_rhne;
    use crate::lle::solve_inner;
    use crate::neighbors::build_hierarchic;
    use crate::types::{DataMatrix, NeighborIndex, Variant, WeightSet};

    fn chain_g(n: usize) -> AlignmentMatrix {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let idx = build_hierarchic(&data, 1).unwrap();
        let ws = solve_inner(&data, &idx, 1e-3).unwrap();
        build_alignment(&idx, &ws, 1.0).unwrap()
    }

    fn quad(g: &AlignmentMatrix, v: &[f64]) -> f64 {
        g.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn chain_embedding_is_rayleigh_quotient() {
        let g = chain_g(5);
        let res = embed(&g, 1).unwrap();
        let y = &res.coords[0];
        let norm: f64 = y.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(y.iter().sum::<f64>().abs() < 1e-10);
        assert!((quad(&g, y) - res.eigenvalues[0]).abs() < 1e-10);
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut tie = vec![-0.5, 0.5];
        fix_sign(&mut tie);
        assert_eq!(tie, vec![0.5, -0.5]);
    }

    #[test]
    fn disconnected_clusters_warn() {
        // Two pairs far apart: no cross-neighbors.
        let data = DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [100.0, 0.0], [101.0, 0.0]]).unwrap();
        let idx = build_hierarchic(&data, 1).unwrap();
        let ws = solve_inner(&data, &idx, 1e-3).unwrap();
        let g = build_alignment(&idx, &ws, 1.0).unwrap();
        let res = embed(&g, 1).unwrap();
        assert!(matches!(res.warnings[0], SpectralWarning::DegenerateSpectrum { .. }));
    }

    #[test]
    fn rejects_too_many_dimensions() {
        let g = chain_g(4);
        assert!(matches!(embed(&g, 4), Err(HneError::DTooLarge { .. })));
        assert!(embed(&g, 3).is_ok());
    }

    #[test]
    fn shift_invert_agrees_with_dense() {
        let data = crate::datasets::swiss_roll(500, 3, false).data;
        let idx = build_hierarchic(&data, 8).unwrap();
        let inner = solve_inner(&data, &idx, 1e-3).unwrap();
        let ws = solve_rhne(&data, &idx, &inner, 1e-3).unwrap();
        let g = build_alignment_with(&idx, &ws, 1.0, StorageKind::Sparse).unwrap();
        let dense = embed_with(&g, 2, EigenSolver::Dense).unwrap();
        let iter = embed_with(&g, 2, EigenSolver::ShiftInvert).unwrap();
        // A repeated eigenvalue would leave the eigenvectors undetermined.
        assert!(dense.warnings.is_empty());
        for r in 0..2 {
            assert!((dense.eigenvalues[r] - iter.eigenvalues[r]).abs() < 1e-9);
            let overlap: f64 = dense.coords[r].iter().zip(&iter.coords[r]).map(|(a, b)| a * b).sum();
            assert!((overlap.abs() - 1.0).abs() < 1e-8, "row {r}: overlap {overlap}");
            let gv = g.mul_vec(&iter.coords[r]);
            let res: f64 = gv
                .iter()
                .zip(&iter.coords[r])
                .map(|(a, b)| (a - iter.eigenvalues[r] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-8);
        }
    }

    #[test]
    fn skyline_solve_inverts_shifted_matrix() {
        let idx = NeighborIndex::from_inner(6, 1, vec![1, 0, 1, 2, 3, 4]).unwrap();
        let ws = WeightSet::from_parts(Variant::Lle, 6, 1, vec![1.0; 6], vec![]).unwrap();
        let g = build_alignment_with(&idx, &ws, 1.0, StorageKind::Sparse).unwrap();
        let Storage::Sparse(csr) = g.storage() else {
            unreachable!()
        };
        let f = skyline::SkylineCholesky::factor(csr, 0.5).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let x = f.solve(&b);
        let gx = g.mul_vec(&x);
        for r in 0..6 {
            assert!((gx[r] + 0.5 * x[r] - b[r]).abs() < 1e-12);
        }
    }
}
