//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HneError, Result};

/// `n` points in `D` dimensions, stored row-major with one point per row.
///
/// Construction rejects empty shapes and non-finite entries, so every
/// `DataMatrix` in circulation satisfies both invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n: usize,
    dim: usize,
}

impl DataMatrix {
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(HneError::DimensionMismatch(format!(
                "data matrix must be non-empty, got {n} x {dim}"
            )));
        }
        if values.len() != n * dim {
            return Err(HneError::DimensionMismatch(format!(
                "expected {} values for a {n} x {dim} matrix, got {}",
                n * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(HneError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { values, n, dim })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(HneError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, values)
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient dimensionality `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Shifts every point by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(HneError::DimensionMismatch(format!(
                "offset has {} entries, data has dimension {}",
                offset.len(),
                self.dim
            )));
        }
        let values = self
            .rows()
            .flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        Self::new(self.n, self.dim, values)
    }

    /// Applies the linear map `x -> A x` to every point. `a` is row-major `D x D`.
    pub fn linear_map(&self, a: &[f64]) -> Result<Self> {
        let dim = self.dim;
        if a.len() != dim * dim {
            return Err(HneError::DimensionMismatch(format!("linear map must be {dim} x {dim}")));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for p in self.rows() {
            for r in 0..dim {
                values.push(a[r * dim..(r + 1) * dim].iter().zip(p).map(|(x, y)| x * y).sum());
            }
        }
        Self::new(self.n, dim, values)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.n, self.dim, self.values.iter().map(|v| v * factor).collect())
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            values.extend_from_slice(self.point(r));
        }
        Self::new(rows.len(), self.dim, values)
    }
}

/// The embedding strategy, which also determines how outer weights are
/// constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Plain locally linear embedding: inner layer only.
    Lle,
    /// Invariance-prioritizing: every outer block sums to one on its own.
    Ihne,
    /// Reconstruction-prioritizing: one joint least-squares solve over all
    /// `k^2` outer points.
    Rhne,
    /// Balanced: block coordinate descent over the outer blocks.
    Bhne,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Lle, Variant::Ihne, Variant::Rhne, Variant::Bhne];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lle => "lle",
            Variant::Ihne => "ihne",
            Variant::Rhne => "rhne",
            Variant::Bhne => "bhne",
        }
    }

    pub fn is_hierarchic(self) -> bool {
        self != Variant::Lle
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = HneError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lle" => Ok(Variant::Lle),
            "ihne" => Ok(Variant::Ihne),
            "rhne" => Ok(Variant::Rhne),
            "bhne" => Ok(Variant::Bhne),
            other => Err(HneError::InvalidConfig(format!(
                "unknown method '{other}', expected one of lle, ihne, rhne, bhne"
            ))),
        }
    }
}

/// Inner and outer k-NN lists of every point.
///
/// Only the inner lists are stored. The outer list of `(i, l)` is the inner
/// list of point `inner(i)[l]`, so that relation holds by construction.
/// Outer lists may repeat points and may contain `i` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborIndex {
    inner: Vec<usize>,
    n: usize,
    k: usize,
}

impl NeighborIndex {
    /// Wraps a row-major `n x k` table of inner neighbors.
    pub fn from_inner(n: usize, k: usize, inner: Vec<usize>) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(HneError::KTooLarge { k, n });
        }
        if inner.len() != n * k {
            return Err(HneError::DimensionMismatch(format!(
                "neighbor table has {} entries, expected {}",
                inner.len(),
                n * k
            )));
        }
        for (i, row) in inner.chunks_exact(k).enumerate() {
            if let Some(&bad) = row.iter().find(|&&j| j >= n || j == i) {
                return Err(HneError::InvalidConfig(format!(
                    "point {i} lists invalid neighbor {bad}"
                )));
            }
        }
        Ok(Self { inner, n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inner(&self, i: usize) -> &[usize] {
        &self.inner[i * self.k..(i + 1) * self.k]
    }

    /// The `k` nearest neighbors of the `l`-th inner neighbor of `i`.
    pub fn outer(&self, i: usize, l: usize) -> &[usize] {
        self.inner(self.inner(i)[l])
    }

    /// All `k^2` outer points of `i` in `(l, j)` order, with multiplicity.
    pub fn outer_flat(&self, i: usize) -> Vec<usize> {
        self.inner(i)
            .iter()
            .flat_map(|&m| self.inner(m).iter().copied())
            .collect()
    }

    pub fn inner_table(&self) -> &[usize] {
        &self.inner
    }
}

/// Inner weights (`n x k`) and, for hierarchic variants, outer weights
/// (`n x k x k`), both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub(crate) variant: Variant,
    pub(crate) n: usize,
    pub(crate) k: usize,
    pub(crate) inner: Vec<f64>,
    pub(crate) outer: Vec<f64>,
    pub(crate) zero_inner_warnings: Vec<u32>,
}

impl WeightSet {
    /// Assembles a weight set from raw tables without checking the sum
    /// constraints. Use [`WeightSet::max_constraint_violation`] to audit.
    pub fn from_parts(variant: Variant, n: usize, k: usize, inner: Vec<f64>, outer: Vec<f64>) -> Result<Self> {
        let expected_outer = if variant.is_hierarchic() { n * k * k } else { 0 };
        if inner.len() != n * k || outer.len() != expected_outer {
            return Err(HneError::DimensionMismatch(format!(
                "weight tables have {} inner and {} outer entries, expected {} and {}",
                inner.len(),
                outer.len(),
                n * k,
                expected_outer
            )));
        }
        Ok(Self {
            variant,
            n,
            k,
            inner,
            outer,
            zero_inner_warnings: vec![0; n],
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inner(&self, i: usize) -> &[f64] {
        &self.inner[i * self.k..(i + 1) * self.k]
    }

    pub fn has_outer(&self) -> bool {
        !self.outer.is_empty()
    }

    /// Outer weights of block `(i, l)`. Panics for [`Variant::Lle`].
    pub fn outer(&self, i: usize, l: usize) -> &[f64] {
        let k = self.k;
        let start = (i * k + l) * k;
        &self.outer[start..start + k]
    }

    /// Joint weights `inner[l] * outer[l][j]` of point `i` in `(l, j)` order.
    pub fn joint(&self, i: usize) -> Vec<f64> {
        let k = self.k;
        let inner = self.inner(i);
        (0..k)
            .flat_map(|l| self.outer(i, l).iter().map(move |o| inner[l] * o))
            .collect()
    }

    /// Number of RHNE blocks per point whose inner weight was too small to
    /// divide by.
    pub fn zero_inner_warnings(&self) -> &[u32] {
        &self.zero_inner_warnings
    }

    /// Largest deviation from the variant's sum constraints.
    pub fn max_constraint_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            worst = worst.max((self.inner(i).iter().sum::<f64>() - 1.0).abs());
            match self.variant {
                Variant::Lle => {}
                Variant::Ihne | Variant::Bhne => {
                    for l in 0..self.k {
                        worst = worst.max((self.outer(i, l).iter().sum::<f64>() - 1.0).abs());
                    }
                }
                Variant::Rhne => {
                    worst = worst.max((self.joint(i).iter().sum::<f64>() - 1.0).abs());
                }
            }
        }
        worst
    }
}

/// Low-dimensional coordinates plus diagnostics.
#[derive(Debug, Clone)]
pub struct EmbeddingResult {
    /// `d x n`, row `r` is the `r`-th embedding coordinate of every point.
    pub coords: Vec<Vec<f64>>,
    /// The retained eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// The discarded smallest eigenvalue.
    pub null_eigenvalue: f64,
    /// Per-point `(inner, hierarchic)` residuals in the input space, when
    /// the embedding came out of the full pipeline.
    pub residuals: Option<Vec<(f64, f64)>>,
    pub warnings: Vec<SpectralWarning>,
}

impl EmbeddingResult {
    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn n(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    /// The embedding as an `n x d` point matrix.
    pub fn to_points(&self) -> Result<DataMatrix> {
        let (n, d) = (self.n(), self.d());
        let mut values = Vec::with_capacity(n * d);
        for i in 0..n {
            values.extend(self.coords.iter().map(|row| row[i]));
        }
        DataMatrix::new(n, d, values)
    }
}

/// Non-fatal conditions detected by the eigensolver.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralWarning {
    /// The second-smallest eigenvalue is indistinguishable from the smallest,
    /// which happens when the neighbor graph is disconnected.
    DegenerateSpectrum { lambda1: f64, lambda2: f64 },
}

/// Everything needed to run one embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub k: usize,
    pub d: usize,
    pub variant: Variant,
    /// Weight of the inner-layer term in `G = gamma * L + L~`.
    pub gamma: f64,
    /// Relative Tikhonov scale for every local Gram solve.
    pub sigma_reg: f64,
    /// Number of BHNE rotations after the initial sweep.
    pub bhne_rotations: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            k: 5,
            d: 2,
            variant: Variant::Rhne,
            gamma: 1.0,
            sigma_reg: 1e-3,
            bhne_rotations: 2,
            seed: 0,
        }
    }
}

impl EmbedConfig {
    pub fn new(variant: Variant, k: usize, d: usize) -> Self {
        Self {
            k,
            d,
            variant,
            ..Self::default()
        }
    }
}

/// Checks `cfg` against the shape of `data`, returning it unchanged when
/// every bound holds. Non-finite input is already rejected when the
/// [`DataMatrix`] is built.
pub fn validate_config(cfg: EmbedConfig, data: &DataMatrix) -> Result<EmbedConfig> {
    let (n, dim) = (data.n(), data.dim());
    if cfg.k == 0 {
        return Err(HneError::InvalidConfig("k must be at least 1".into()));
    }
    if cfg.k >= n {
        return Err(HneError::KTooLarge { k: cfg.k, n });
    }
    if cfg.d == 0 {
        return Err(HneError::InvalidConfig("d must be at least 1".into()));
    }
    if cfg.d >= dim || cfg.d >= n {
        return Err(HneError::DTooLarge { d: cfg.d, dim, n });
    }
    if !(0.0..=1.0).contains(&cfg.gamma) {
        return Err(HneError::InvalidConfig(format!(
            "gamma must lie in [0, 1], got {}",
            cfg.gamma
        )));
    }
    if !(cfg.sigma_reg >= 0.0 && cfg.sigma_reg.is_finite()) {
        return Err(HneError::InvalidConfig(format!(
            "sigma_reg must be finite and non-negative, got {}",
            cfg.sigma_reg
        )));
    }
    if cfg.bhne_rotations == 0 {
        return Err(HneError::InvalidConfig("rotations must be at least 1".into()));
    }
    Ok(cfg)
}
