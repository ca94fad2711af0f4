//! Sparse PCA over a sweep of component counts.
//!
//! CSV columns: `q,pve,seconds,r,mode,explained,iters,status`. Matrix mode
//! with `r ≥ q` first solves column mode at `⌊r/q⌋` nonzeros per column and
//! starts from that solution.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use nalgebra::DMatrix;

use proxdist::generate;
use proxdist::linalg::{read_dense, write_dense};
use proxdist::projections::SparsityMode;
use proxdist::solvers::{
    solve_spca, solve_spca_with_start, SpcaData, SpcaInstance, SpcaResult, SpcaStart,
};

use crate::TuningArgs;

#[derive(Args)]
pub struct SpcaArgs {
    /// Data matrix, one whitespace-separated sample per line.
    #[arg(
        long,
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    data: Option<PathBuf>,
    /// Synthetic data with `P` variables and `N` samples.
    #[arg(long, num_args = 2, value_names = ["P", "N"])]
    synthetic: Option<Vec<usize>>,
    /// Seed for synthetic data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated component counts.
    #[arg(long, value_delimiter = ',', required = true)]
    q: Vec<usize>,
    /// Nonzeros per column (column mode) or in total (matrix mode).
    #[arg(long)]
    r: usize,
    #[arg(long, default_value = "column")]
    mode: SparsityMode,
    /// random or principal.
    #[arg(long, default_value = "random", value_parser = parse_start)]
    start: SpcaStart,
    /// Loadings output. With several q values, `.q<k>` is inserted before
    /// the extension.
    #[arg(long)]
    loadings: Option<PathBuf>,
    /// PVE table; standard output when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

fn parse_start(s: &str) -> Result<SpcaStart, String> {
    match s {
        "random" => Ok(SpcaStart::Random),
        "principal" => Ok(SpcaStart::Principal),
        _ => Err(format!(
            "unknown start {s:?} (expected random or principal)"
        )),
    }
}

fn loadings_path(base: &Path, q: usize, sweep: bool) -> PathBuf {
    if !sweep {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.q{q}.{}", ext.to_string_lossy()),
        None => format!("{stem}.q{q}"),
    };
    base.with_file_name(name)
}

fn load_data(args: &SpcaArgs) -> Result<DMatrix<f64>> {
    if let Some(path) = &args.data {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let x =
            read_dense(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
        if x.is_empty() {
            bail!("{} holds no data", path.display());
        }
        return Ok(x);
    }
    match args.synthetic.as_deref() {
        Some(&[p, n]) if p > 0 && n > 0 => Ok(generate::spca_data(p, n, args.seed)),
        _ => bail!("--synthetic needs two positive sizes"),
    }
}

fn solve_one(args: &SpcaArgs, x: &DMatrix<f64>, q: usize) -> Result<SpcaResult> {
    let inst = SpcaInstance::new(SpcaData::Data(x.clone()), q, args.r, args.mode)?;
    let options = args.tuning.options();
    options.validate()?;
    let schedule = args.tuning.apply(SpcaInstance::default_schedule());
    schedule.validate()?;
    let per_column = args.r / q;
    if args.mode == SparsityMode::Matrix && per_column >= 1 {
        let column = SpcaInstance::new(
            SpcaData::Data(x.clone()),
            q,
            per_column.min(inst.dim()),
            SparsityMode::Column,
        )?;
        let warm = solve_spca(&column, args.start, &schedule, &options)?;
        return Ok(solve_spca_with_start(
            &inst,
            warm.result.solution,
            &schedule,
            &options,
        )?);
    }
    Ok(solve_spca(&inst, args.start, &schedule, &options)?)
}

pub fn run(args: &SpcaArgs) -> Result<ExitCode> {
    if args.q.is_empty() || args.q.contains(&0) {
        bail!("--q values must be positive");
    }
    let x = load_data(args)?;
    let sink: Box<dyn std::io::Write> = match &args.csv {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "q",
        "pve",
        "seconds",
        "r",
        "mode",
        "explained",
        "iters",
        "status",
    ])?;
    let mode = match args.mode {
        SparsityMode::Column => "column",
        SparsityMode::Matrix => "matrix",
    };
    let mut all_converged = true;
    for &q in &args.q {
        let start = Instant::now();
        let fit = solve_one(args, &x, q).with_context(|| format!("q = {q}"))?;
        let seconds = start.elapsed().as_secs_f64();
        all_converged &= fit.result.converged();
        if let Some(base) = &args.loadings {
            let path = loadings_path(base, q, args.q.len() > 1);
            let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_dense(BufWriter::new(f), &fit.loadings)?;
        }
        let pve = fit.pve.expect("data supplied");
        w.write_record([
            q.to_string(),
            pve.to_string(),
            format!("{seconds:.6}"),
            args.r.to_string(),
            mode.to_string(),
            fit.explained.to_string(),
            fit.result.iterations().to_string(),
            fit.result.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(if all_converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
