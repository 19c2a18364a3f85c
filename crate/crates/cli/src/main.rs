use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hne::datasets::{self, MatrixFormat, SyntheticDataset, DEFAULT_BRIDGE_POINTS};
use hne::metrics::{avg_reconstruction_error, embedding_quality, EmbeddingQuality};
use hne::neighbors::inner_edges;
use hne::{pipeline, DataMatrix, EmbedConfig, Variant};

#[derive(Parser)]
#[command(name = "hne", version, about = "Hierarchic neighbors embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV plus a `.meta.json` sidecar.
    Generate(GenerateArgs),
    /// Embed a dataset and write the coordinates plus a `.diagnostics.json` sidecar.
    Embed(EmbedArgs),
    /// Tabulate reconstruction error for several methods and neighborhood sizes.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    SwissRoll,
    SwissHole,
    #[value(name = "3d-cluster")]
    Cluster3d,
    #[value(name = "2-surfaces")]
    TwoSurfaces,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    dataset: Dataset,
    /// Number of points, bridges included [default: 1000 for the rolls,
    /// 300 for 3d-cluster, 150 for 2-surfaces]
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Solver settings shared by `embed` and `evaluate`.
#[derive(Args)]
struct SolverArgs {
    /// Weight of the inner layer in the alignment matrix.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Relative ridge added to every local Gram matrix.
    #[arg(long, default_value_t = 1e-3)]
    sigma_reg: f64,
    /// BHNE sweeps after the initial one.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    rotations: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep image intensities in 0..=255 instead of dividing by 255.
    #[arg(long)]
    raw_pixels: bool,
}

#[derive(Args)]
struct EmbedArgs {
    /// CSV file, or a directory of images.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    method: Variant,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    d: u32,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the inner neighbor graph as `a,b` lines.
    #[arg(long, value_name = "PATH")]
    emit_edges: Option<PathBuf>,
    /// Also write the alignment matrix as `row col value` lines.
    #[arg(long, value_name = "PATH")]
    dump_g: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "lle,ihne,rhne,bhne")]
    methods: Vec<Variant>,
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u32).range(1..), default_value = "4,6,8,10,12")]
    k_list: Vec<u32>,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth coordinates (CSV); adds embedding-quality columns.
    #[arg(long)]
    intrinsic: Option<PathBuf>,
    /// Embedding dimension for the quality columns.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    d: u32,
    /// Neighborhood size for the quality scores.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    k_eval: u32,
    #[command(flatten)]
    solver: SolverArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Embed(args) => embed(args),
        Command::Evaluate(args) => evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn write_matrix(path: &Path, m: &DataMatrix) -> Result<()> {
    let mut out = create(path)?;
    datasets::write_csv(&mut out, m)?;
    out.flush()?;
    Ok(())
}

/// `dir/name.csv` becomes `dir/name.<suffix>`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn rows(m: &DataMatrix) -> Vec<&[f64]> {
    m.rows().collect()
}

fn generate(args: GenerateArgs) -> Result<()> {
    let ds: SyntheticDataset = match args.dataset {
        Dataset::SwissRoll => datasets::swiss_roll(args.n.unwrap_or(1000), args.seed, false),
        Dataset::SwissHole => datasets::swiss_roll(args.n.unwrap_or(1000), args.seed, true),
        Dataset::Cluster3d => datasets::cluster_3d(args.n.unwrap_or(300), DEFAULT_BRIDGE_POINTS, args.seed)?,
        Dataset::TwoSurfaces => datasets::two_surfaces(args.n.unwrap_or(150), DEFAULT_BRIDGE_POINTS, args.seed)?,
    };
    write_matrix(&args.out, &ds.data)?;
    let meta = json!({
        "version": hne::VERSION,
        "params": ds.params,
        "dim": ds.data.dim(),
        "intrinsic": ds.intrinsic.as_ref().map(rows),
        "labels": ds.labels,
    });
    write_json(&sidecar(&args.out, "meta.json"), &meta)
}

fn load_input(path: &Path, raw_pixels: bool) -> Result<DataMatrix> {
    let format = MatrixFormat::detect(path);
    let data = datasets::load_matrix(path, format).with_context(|| format!("cannot load {}", path.display()))?;
    Ok(match format {
        MatrixFormat::ImageDir if !raw_pixels => data.scaled(1.0 / 255.0)?,
        _ => data,
    })
}

fn config(solver: &SolverArgs, variant: Variant, k: u32, d: u32) -> EmbedConfig {
    EmbedConfig {
        k: k as usize,
        d: d as usize,
        variant,
        gamma: solver.gamma,
        sigma_reg: solver.sigma_reg,
        bhne_rotations: solver.rotations as usize,
        seed: solver.seed,
    }
}

#[derive(Serialize)]
struct ResidualSummary {
    mean_inner: f64,
    max_inner: f64,
    mean_hierarchic: f64,
    max_hierarchic: f64,
}

fn summarize(res: &[(f64, f64)]) -> ResidualSummary {
    let n = res.len() as f64;
    ResidualSummary {
        mean_inner: res.iter().map(|r| r.0).sum::<f64>() / n,
        max_inner: res.iter().map(|r| r.0).fold(0.0, f64::max),
        mean_hierarchic: res.iter().map(|r| r.1).sum::<f64>() / n,
        max_hierarchic: res.iter().map(|r| r.1).fold(0.0, f64::max),
    }
}

fn embed(args: EmbedArgs) -> Result<()> {
    let data = load_input(&args.input, args.solver.raw_pixels)?;
    let cfg = config(&args.solver, args.method, args.k, args.d);
    let out = pipeline::run(&data, &cfg)?;
    for w in &out.embedding.warnings {
        eprintln!("warning: {}", serde_json::to_string(w)?);
    }
    let zero_inner: u64 = out.weights.zero_inner_warnings().iter().map(|&c| u64::from(c)).sum();
    if zero_inner > 0 {
        eprintln!("warning: {zero_inner} outer block(s) fell back to uniform weights after a zero inner weight");
    }

    write_matrix(&args.out, &out.embedding.to_points()?)?;
    if let Some(path) = &args.emit_edges {
        let mut w = create(path)?;
        for (a, b) in inner_edges(&out.index) {
            writeln!(w, "{a},{b}")?;
        }
        w.flush()?;
    }
    if let Some(path) = &args.dump_g {
        let mut w = create(path)?;
        out.alignment.write_coo(&mut w)?;
        w.flush()?;
    }

    let diagnostics = json!({
        "version": hne::VERSION,
        "input": args.input,
        "n": data.n(),
        "dim": data.dim(),
        "params": out.config,
        "raw_pixels": args.solver.raw_pixels,
        "eigenvalues": out.embedding.eigenvalues,
        "null_eigenvalue": out.embedding.null_eigenvalue,
        "null_vector_check": out.null_residual,
        "constraint_violation": out.weights.max_constraint_violation(),
        "zero_inner_weight_fallbacks": zero_inner,
        "residuals": out.embedding.residuals.as_deref().map(summarize),
        "warnings": out.embedding.warnings,
        "sparse_alignment": out.alignment.is_sparse(),
    });
    write_json(&sidecar(&args.out, "diagnostics.json"), &diagnostics)
}

#[derive(Serialize)]
struct Cell {
    method: Variant,
    k: u32,
    reconstruction_error: f64,
    #[serde(skip_serializing_if = "Option::is_none", flatten)]
    quality: Option<EmbeddingQuality>,
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let data = load_input(&args.input, args.solver.raw_pixels)?;
    let intrinsic = args
        .intrinsic
        .as_deref()
        .map(|p| datasets::load_matrix(p, MatrixFormat::Csv).with_context(|| format!("cannot load {}", p.display())))
        .transpose()?;

    let mut cells = Vec::new();
    for &method in &args.methods {
        for &k in &args.k_list {
            let cfg = config(&args.solver, method, k, args.d);
            let context = || format!("{method} with k = {k}");
            let cell = match &intrinsic {
                Some(truth) => {
                    let out = pipeline::run(&data, &cfg).with_context(context)?;
                    Cell {
                        method,
                        k,
                        reconstruction_error: avg_reconstruction_error(&data, &out.index, &out.weights),
                        quality: Some(embedding_quality(&out.embedding, truth, args.k_eval as usize)?),
                    }
                }
                None => {
                    hne::types::validate_config(cfg.clone(), &data).with_context(context)?;
                    let (idx, weights) = pipeline::weights(&data, &cfg).with_context(context)?;
                    Cell {
                        method,
                        k,
                        reconstruction_error: avg_reconstruction_error(&data, &idx, &weights),
                        quality: None,
                    }
                }
            };
            cells.push(cell);
        }
    }

    print_table("average reconstruction error", &args, &cells, |c| {
        Some(c.reconstruction_error)
    });
    if intrinsic.is_some() {
        print_table("trustworthiness", &args, &cells, |c| {
            c.quality.map(|q| q.trustworthiness)
        });
        print_table("continuity", &args, &cells, |c| c.quality.map(|q| q.continuity));
        print_table("knn preservation", &args, &cells, |c| {
            c.quality.map(|q| q.knn_preservation)
        });
    }

    let report = json!({
        "version": hne::VERSION,
        "input": args.input,
        "n": data.n(),
        "dim": data.dim(),
        "gamma": args.solver.gamma,
        "sigma_reg": args.solver.sigma_reg,
        "rotations": args.solver.rotations,
        "seed": args.solver.seed,
        "raw_pixels": args.solver.raw_pixels,
        "d": intrinsic.as_ref().map(|_| args.d),
        "k_eval": intrinsic.as_ref().map(|_| args.k_eval),
        "results": cells,
    });
    write_json(&args.out, &report)
}

/// Methods down, neighborhood sizes across.
fn print_table(title: &str, args: &EvaluateArgs, cells: &[Cell], value: impl Fn(&Cell) -> Option<f64>) {
    println!("{title}");
    print!("{:<8}", "method");
    for k in &args.k_list {
        print!("{:>12}", format!("k={k}"));
    }
    println!();
    for (m, method) in args.methods.iter().enumerate() {
        print!("{:<8}", method.name().to_uppercase());
        for c in &cells[m * args.k_list.len()..(m + 1) * args.k_list.len()] {
            match value(c) {
                Some(v) => print!("{v:>12.4}"),
                None => print!("{:>12}", "-"),
            }
        }
        println!();
    }
    println!();
}
