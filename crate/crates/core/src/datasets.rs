//! Synthetic manifolds and loaders for user-supplied data.
//!
//! Every generator is a pure function of its parameters and seed.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{HneError, Result};
use crate::types::DataMatrix;

/// Roll parameter range.
pub const SWISS_T_RANGE: (f64, f64) = (1.5 * PI, 4.5 * PI);
/// Height range.
pub const SWISS_H_RANGE: (f64, f64) = (0.0, 21.0);
/// The rectangle `(t, h)` removed for the Swiss-Hole variant.
pub const SWISS_HOLE_T: (f64, f64) = (2.5 * PI, 3.5 * PI);
pub const SWISS_HOLE_H: (f64, f64) = (7.0, 14.0);

/// Five cluster centers on a non-planar zigzag, consecutive centers 10 apart.
pub const CLUSTER_CENTERS: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.0],
    [6.0, 8.0, 0.0],
    [12.0, 0.0, 0.0],
    [18.0, 0.0, 8.0],
    [24.0, 0.0, 0.0],
];
pub const CLUSTER_SPACING: f64 = 10.0;
/// Blob standard deviation as a fraction of the center spacing.
pub const CLUSTER_SPREAD: f64 = 0.1;
pub const DEFAULT_BRIDGE_POINTS: usize = 9;

/// Two parallel unit patches: `z = 0` over `x in [0, 10]` and `z = 6` over
/// `x in [14, 24]`, both with `y in [0, 10]`.
pub const SURFACE_HEIGHTS: [f64; 2] = [0.0, 6.0];
pub const SURFACE_X_RANGES: [(f64, f64); 2] = [(0.0, 10.0), (14.0, 24.0)];
pub const SURFACE_Y_RANGE: (f64, f64) = (0.0, 10.0);

/// Label carried by bridge points in labelled datasets.
pub const BRIDGE_LABEL: i32 = -1;

/// Generator settings recorded next to every synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetParams {
    pub name: &'static str,
    pub seed: u64,
    /// Total number of generated points.
    pub n: usize,
    /// Points on bridges, over all gaps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bridge_points: Option<usize>,
    /// Points that are not on a bridge.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body_points: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub data: DataMatrix,
    /// Ground-truth manifold coordinates, when the manifold has them.
    pub intrinsic: Option<DataMatrix>,
    pub labels: Option<Vec<i32>>,
    pub params: DatasetParams,
}

fn in_hole(t: f64, h: f64) -> bool {
    (SWISS_HOLE_T.0..=SWISS_HOLE_T.1).contains(&t) && (SWISS_HOLE_H.0..=SWISS_HOLE_H.1).contains(&h)
}

/// Swiss roll `(t cos t, h, t sin t)` with `t` and `h` uniform. With `hole`,
/// samples inside the central `(t, h)` rectangle are rejected and redrawn, so
/// exactly `n` points are always returned. Intrinsic coordinates are `(t, h)`.
pub fn swiss_roll(n: usize, seed: u64, hole: bool) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n * 3);
    let mut intrinsic = Vec::with_capacity(n * 2);
    while intrinsic.len() < n * 2 {
        let t = rng.random_range(SWISS_T_RANGE.0..=SWISS_T_RANGE.1);
        let h = rng.random_range(SWISS_H_RANGE.0..=SWISS_H_RANGE.1);
        if hole && in_hole(t, h) {
            continue;
        }
        points.extend([t * t.cos(), h, t * t.sin()]);
        intrinsic.extend([t, h]);
    }
    SyntheticDataset {
        data: DataMatrix::new(n, 3, points).expect("finite by construction"),
        intrinsic: Some(DataMatrix::new(n, 2, intrinsic).expect("finite by construction")),
        labels: None,
        params: DatasetParams {
            name: if hole { "swiss-hole" } else { "swiss-roll" },
            seed,
            n,
            bridge_points: None,
            body_points: None,
        },
    }
}

/// `count` points strictly between `a` and `b`, equally spaced.
fn bridge(a: [f64; 3], b: [f64; 3], count: usize) -> impl Iterator<Item = [f64; 3]> {
    (1..=count).map(move |s| {
        let f = s as f64 / (count + 1) as f64;
        [
            a[0] + f * (b[0] - a[0]),
            a[1] + f * (b[1] - a[1]),
            a[2] + f * (b[2] - a[2]),
        ]
    })
}

/// Five Gaussian blobs joined by straight chains of `bridge_points` points
/// between consecutive centers; `n` counts every point, bridges included,
/// and the remaining points are split as evenly as possible over the blobs.
/// Labels are the cluster index, or [`BRIDGE_LABEL`].
pub fn cluster_3d(n: usize, bridge_points: usize, seed: u64) -> Result<SyntheticDataset> {
    let bridges = bridge_points * (CLUSTER_CENTERS.len() - 1);
    if n < bridges + CLUSTER_CENTERS.len() {
        return Err(HneError::InvalidConfig(format!(
            "3d-cluster with {bridge_points} bridge points per gap needs at least {} points, got {n}",
            bridges + CLUSTER_CENTERS.len()
        )));
    }
    let body = n - bridges;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, CLUSTER_SPREAD * CLUSTER_SPACING).expect("positive spread");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let clusters = CLUSTER_CENTERS.len();
    for (c, center) in CLUSTER_CENTERS.iter().enumerate() {
        let size = body / clusters + usize::from(c < body % clusters);
        for _ in 0..size {
            rows.push([
                center[0] + noise.sample(&mut rng),
                center[1] + noise.sample(&mut rng),
                center[2] + noise.sample(&mut rng),
            ]);
            labels.push(c as i32);
        }
    }
    for pair in CLUSTER_CENTERS.windows(2) {
        for p in bridge(pair[0], pair[1], bridge_points) {
            rows.push(p);
            labels.push(BRIDGE_LABEL);
        }
    }
    Ok(SyntheticDataset {
        data: DataMatrix::from_rows(&rows)?,
        intrinsic: None,
        labels: Some(labels),
        params: DatasetParams {
            name: "3d-cluster",
            seed,
            n,
            bridge_points: Some(bridges),
            body_points: Some(body),
        },
    })
}

/// Two offset planar patches plus a straight bridge of `bridge_points`
/// between them; `n` counts every point, bridge included. Labels are 0 and 1
/// for the patches, [`BRIDGE_LABEL`] for the bridge.
pub fn two_surfaces(n: usize, bridge_points: usize, seed: u64) -> Result<SyntheticDataset> {
    if n < bridge_points + 2 {
        return Err(HneError::InvalidConfig(format!(
            "two-surfaces needs more than {bridge_points} points, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let body = n - bridge_points;
    let sizes = [body.div_ceil(2), body / 2];
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for s in 0..2 {
        for _ in 0..sizes[s] {
            let x = rng.random_range(SURFACE_X_RANGES[s].0..=SURFACE_X_RANGES[s].1);
            let y = rng.random_range(SURFACE_Y_RANGE.0..=SURFACE_Y_RANGE.1);
            rows.push([x, y, SURFACE_HEIGHTS[s]]);
            labels.push(s as i32);
        }
    }
    let mid_y = 0.5 * (SURFACE_Y_RANGE.0 + SURFACE_Y_RANGE.1);
    let start = [SURFACE_X_RANGES[0].1, mid_y, SURFACE_HEIGHTS[0]];
    let end = [SURFACE_X_RANGES[1].0, mid_y, SURFACE_HEIGHTS[1]];
    for p in bridge(start, end, bridge_points) {
        rows.push(p);
        labels.push(BRIDGE_LABEL);
    }
    Ok(SyntheticDataset {
        data: DataMatrix::from_rows(&rows)?,
        intrinsic: None,
        labels: Some(labels),
        params: DatasetParams {
            name: "2-surfaces",
            seed,
            n,
            bridge_points: Some(bridge_points),
            body_points: Some(body),
        },
    })
}

/// On-disk layout understood by [`load_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Comma-separated numbers, one point per line, no header.
    Csv,
    /// A directory of equally sized images, one point per image in
    /// lexicographic file-name order.
    ImageDir,
}

impl MatrixFormat {
    /// Directories are image sets, everything else is CSV.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            MatrixFormat::ImageDir
        } else {
            MatrixFormat::Csv
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HneError + '_ {
    move |source| HneError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DataMatrix> {
    match format {
        MatrixFormat::Csv => load_csv(path),
        MatrixFormat::ImageDir => load_image_dir(path),
    }
}

fn load_csv(path: &Path) -> Result<DataMatrix> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let parse_err = |detail: String| HneError::Parse {
        path: path.to_path_buf(),
        detail,
    };
    let mut values = Vec::new();
    let mut dim = None;
    let mut n = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(HneError::InconsistentDimensions {
                    path: path.to_path_buf(),
                    detail: format!("line {} has {} fields, expected {d}", line + 1, record.len()),
                })
            }
            Some(_) => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("line {}: '{field}' is not a number", line + 1)))?;
            values.push(v);
        }
        n += 1;
    }
    DataMatrix::new(n, dim.unwrap_or(0), values)
}

fn load_image_dir(dir: &Path) -> Result<DataMatrix> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().is_some_and(|f| f.to_string_lossy().starts_with('.')))
        .collect();
    files.sort();
    let mut values = Vec::new();
    let mut shape: Option<(u32, u32, usize)> = None;
    for file in &files {
        let img = image::open(file).map_err(|e| HneError::Parse {
            path: file.clone(),
            detail: e.to_string(),
        })?;
        let (w, h) = (img.width(), img.height());
        let pixels: Vec<u8> = if img.color().has_color() {
            img.to_rgb8().into_raw()
        } else {
            img.to_luma8().into_raw()
        };
        let channels = pixels.len() / (w as usize * h as usize).max(1);
        match shape {
            None => shape = Some((w, h, channels)),
            Some(s) if s != (w, h, channels) => {
                return Err(HneError::InconsistentDimensions {
                    path: file.clone(),
                    detail: format!(
                        "image is {w}x{h} with {channels} channel(s), expected {}x{} with {}",
                        s.0, s.1, s.2
                    ),
                })
            }
            Some(_) => {}
        }
        values.extend(pixels.into_iter().map(f64::from));
    }
    let dim = shape.map_or(0, |(w, h, c)| w as usize * h as usize * c);
    DataMatrix::new(files.len(), dim, values)
}

/// Writes one point per line, comma-separated, shortest round-trip floats.
pub fn write_csv<W: Write>(mut out: W, data: &DataMatrix) -> std::io::Result<()> {
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
