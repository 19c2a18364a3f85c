//! Thick-restart Krylov eigensolver for the largest eigenpairs of a
//! symmetric operator, with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HneError, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two passes of classical Gram-Schmidt against `basis`, then normalization.
/// Returns `None` if the vector vanishes in the process.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let before = dot(&v, &v).sqrt();
    if before == 0.0 {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|b| dot(b, &v)).collect();
        for (b, c) in basis.iter().zip(coeffs) {
            axpy(-c, b, &mut v);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if norm <= 1e-10 * before {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

pub(crate) struct KrylovOptions {
    pub nev: usize,
    pub basis_size: usize,
    /// A pair is converged when `||A u - theta u|| <= rel_tol * |theta|`.
    pub rel_tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

/// The `nev` algebraically largest eigenpairs of the symmetric operator
/// `apply` on `R^n`, descending.
pub(crate) fn largest_eigenpairs<F>(n: usize, apply: F, opts: &KrylovOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let nev = opts.nev;
    let m_max = opts.basis_size.clamp(nev + 2, n);
    let keep = (nev + (m_max - nev) / 2).min(m_max - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut next = random(&mut rng);

    for _ in 0..=opts.max_restarts {
        let mut stalls = 0;
        while basis.len() < m_max {
            match orthonormalize(next, &basis) {
                Some(v) => {
                    let av = apply(&v);
                    next = av.clone();
                    basis.push(v);
                    images.push(av);
                }
                None => {
                    // Invariant subspace reached; continue with a fresh direction.
                    stalls += 1;
                    if stalls > 10 {
                        break;
                    }
                    next = random(&mut rng);
                }
            }
        }
        let m = basis.len();
        let mut h = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                h[(a, b)] = dot(&basis[a], &images[b]);
            }
        }
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

        let ritz = |col: usize, src: &[Vec<f64>]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (a, s) in src.iter().enumerate() {
                axpy(eig.eigenvectors[(a, col)], s, &mut out);
            }
            out
        };

        let take = keep.max(nev).min(m);
        let mut vecs = Vec::with_capacity(take);
        let mut imgs = Vec::with_capacity(take);
        let mut thetas = Vec::with_capacity(take);
        let mut first_unconverged = None;
        for (slot, &col) in order.iter().take(take).enumerate() {
            let theta = eig.eigenvalues[col];
            let u = ritz(col, &basis);
            let au = ritz(col, &images);
            if slot < nev && first_unconverged.is_none() {
                let mut r = au.clone();
                axpy(-theta, &u, &mut r);
                if dot(&r, &r).sqrt() > opts.rel_tol * theta.abs().max(f64::MIN_POSITIVE) {
                    first_unconverged = Some(r);
                }
            }
            vecs.push(u);
            imgs.push(au);
            thetas.push(theta);
        }

        match first_unconverged {
            None => {
                thetas.truncate(nev);
                vecs.truncate(nev);
                return Ok((thetas, vecs));
            }
            Some(residual) => {
                basis = vecs;
                images = imgs;
                next = residual;
            }
        }
    }
    Err(HneError::ConvergenceFailure {
        iterations: opts.max_restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_top_of_diagonal_operator() {
        let diag: Vec<f64> = (0..200).map(|i| 1.0 + i as f64 * 0.5).collect();
        let opts = KrylovOptions {
            nev: 4,
            basis_size: 30,
            rel_tol: 1e-12,
            max_restarts: 500,
            seed: 1,
        };
        let (vals, vecs) =
            largest_eigenpairs(200, |x| x.iter().zip(&diag).map(|(a, d)| a * d).collect(), &opts).unwrap();
        for (j, v) in vals.iter().enumerate() {
            assert!((v - diag[199 - j]).abs() < 1e-9);
            assert!((vecs[j][199 - j].abs() - 1.0).abs() < 1e-8);
        }
    }
}
