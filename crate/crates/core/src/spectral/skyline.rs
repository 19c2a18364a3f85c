//! Envelope (skyline) Cholesky factorization under reverse Cuthill-McKee
//! ordering, used to apply `(G + shift I)^{-1}` for shift-invert.

use std::collections::VecDeque;

use crate::alignment::CsrMatrix;

/// Reverse Cuthill-McKee permutation of a symmetric sparsity pattern.
/// `perm[new] = old`.
pub(crate) fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|r| a.row(r).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&r| (degree[r], r));

    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(r) = queue.pop_front() {
            order.push(r);
            let mut next: Vec<usize> = a.row(r).0.iter().copied().filter(|&c| !visited[c]).collect();
            next.sort_by_key(|&c| (degree[c], c));
            for c in next {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

/// Lower-triangular Cholesky factor of `P (A + shift I) P^T` stored row by
/// row from the first nonzero column to the diagonal.
pub(crate) struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineCholesky {
    /// Returns `None` when the shifted matrix is not numerically positive
    /// definite.
    pub(crate) fn factor(a: &CsrMatrix, shift: f64) -> Option<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &c in a.row(old).0 {
                let c_new = inv[c];
                if c_new < new {
                    first[new] = first[new].min(c_new);
                }
            }
        }
        let mut offset = vec![0; n + 1];
        for r in 0..n {
            offset[r + 1] = offset[r] + (r - first[r] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let c_new = inv[c];
                if c_new <= new {
                    values[offset[new] + c_new - first[new]] = v;
                }
            }
            values[offset[new] + new - first[new]] += shift;
        }

        for r in 0..n {
            let fr = first[r];
            for c in fr..=r {
                let fc = first[c];
                let start = fr.max(fc);
                let mut sum = values[offset[r] + c - fr];
                for t in start..c {
                    sum -= values[offset[r] + t - fr] * values[offset[c] + t - fc];
                }
                if c == r {
                    if sum.is_nan() || sum <= 0.0 {
                        return None;
                    }
                    values[offset[r] + r - fr] = sum.sqrt();
                } else {
                    values[offset[r] + c - fr] = sum / values[offset[c] + c - fc];
                }
            }
        }
        Some(Self {
            perm,
            first,
            offset,
            values,
        })
    }

    fn entry(&self, r: usize, c: usize) -> f64 {
        self.values[self.offset[r] + c - self.first[r]]
    }

    /// Solves `(A + shift I) x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for r in 0..n {
            let mut sum = y[r];
            for t in self.first[r]..r {
                sum -= self.entry(r, t) * y[t];
            }
            y[r] = sum / self.entry(r, r);
        }
        for r in (0..n).rev() {
            y[r] /= self.entry(r, r);
            let yr = y[r];
            for t in self.first[r]..r {
                y[t] -= self.entry(r, t) * yr;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
