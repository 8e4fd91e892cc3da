#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{error::ErrorKind, Args, Parser, Subcommand};

use qfsnet::imaging::Mask;
use qfsnet::lattice::{threads_from_env, RunStatus, UpdateMode, DEFAULT_DELTA};
use qfsnet::metrics::ks_test_one_sided;
use qfsnet::pgm::{read_pgm, write_pgm};
use qfsnet::phantom::{gen_phantom, PhantomSpec};
use qfsnet::pipeline::{
    default_lambdas, evaluate, load_corpus, read_dice_column, segment, sweep, write_sweep_csv, SegmentConfig,
    SweepSpec,
};
use qfsnet::qsig::BoundarySet;
use qfsnet::schemes::SchemeId;

#[derive(Parser)]
#[command(name = "qfsnet", version, about = "Qutrit-inspired self-supervised image segmentation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Segment one PGM image.
    Segment(SegmentArgs),
    /// Run a parameter sweep over a corpus of NAME.pgm / NAME_gt.pgm pairs.
    Sweep(SweepArgs),
    /// Generate synthetic lesion phantoms with ground truth and manifest.
    Phantom(PhantomArgs),
    /// Score a predicted mask against ground truth.
    Eval(EvalArgs),
    /// One-sided KS test on the Dice columns of two sweep reports.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct RunFlags {
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value = "recompute")]
    mode: UpdateMode,
    #[arg(long, default_value_t = 3)]
    t_exp: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    radius: usize,
    #[arg(long, default_value_t = 0.5)]
    thresh: f64,
    /// Rotation offset added to link phases.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Output mask (PGM, values 0/255).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Metrics JSON path; printed to stdout when omitted.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Loss trace as gnuplot data.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    levels: usize,
    #[arg(long, default_value_t = 0.239)]
    lambda: f64,
    #[arg(long, default_value = "xi")]
    scheme: SchemeId,
    #[arg(long, default_value = "S2")]
    set: BoundarySet,
    /// Exit with status 2 when the run does not converge.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![4, 6, 8])]
    levels: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "xi")]
    scheme: Vec<SchemeId>,
    #[arg(long, value_delimiter = ',', default_value = "S1,S2")]
    set: Vec<BoundarySet>,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct PhantomArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of consecutive seeds to generate.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    lesions: usize,
    #[arg(long, default_value_t = 10.0)]
    rmin: f64,
    #[arg(long, default_value_t = 20.0)]
    rmax: f64,
    #[arg(long, default_value_t = 0.4)]
    contrast: f64,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0.1)]
    bias: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    gt: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn check_lambda(l: f64) -> Result<()> {
    if !(l > 0.0 && l < 1.0) {
        bail!("--lambda must be in (0, 1), got {l}");
    }
    Ok(())
}

fn base_config(r: &RunFlags) -> Result<SegmentConfig> {
    if !(r.thresh > 0.0 && r.thresh < 1.0) {
        bail!("--thresh must be in (0, 1), got {}", r.thresh);
    }
    if r.radius < 1 {
        bail!("--radius must be >= 1");
    }
    if !(r.tol > 0.0) {
        bail!("--tol must be > 0, got {}", r.tol);
    }
    if r.max_iters < 1 {
        bail!("--max-iters must be >= 1");
    }
    if r.t_exp < 3 {
        bail!("--t-exp must be >= 3, got {}", r.t_exp);
    }
    Ok(SegmentConfig {
        max_epochs: r.max_iters,
        tolerance: r.tol,
        mode: r.mode,
        t_exponent: r.t_exp,
        seed: r.seed,
        radius: r.radius,
        thresh: r.thresh,
        delta: r.delta,
        threads: threads_from_env(),
        ..SegmentConfig::default()
    })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn cmd_segment(a: SegmentArgs) -> Result<u8> {
    check_lambda(a.lambda)?;
    if a.levels < 2 {
        bail!("--levels must be >= 2, got {}", a.levels);
    }
    let cfg = SegmentConfig {
        levels: a.levels,
        lambda: a.lambda,
        scheme: a.scheme,
        set: a.set,
        ..base_config(&a.run)?
    };
    let img = read_pgm(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let gt = match &a.gt {
        Some(p) => Some(Mask::from_gray(
            &read_pgm(p).with_context(|| format!("reading {}", p.display()))?,
        )),
        None => None,
    };
    let seg = segment(&img, &cfg)?;
    write_pgm(&a.out, &seg.mask.to_gray()?).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.trace {
        seg.trace.write_csv(create(p)?)?;
    }
    if let Some(p) = &a.gnuplot {
        seg.trace.write_gnuplot(create(p)?)?;
    }
    if let Some(gt) = gt {
        let report = evaluate(&seg.mask, &gt)?;
        let json = serde_json::to_string_pretty(&report)?;
        match &a.metrics {
            Some(p) => writeln!(create(p)?, "{json}")?,
            None => println!("{json}"),
        }
    }
    let converged = seg.trace.status == RunStatus::Converged;
    eprintln!(
        "{} after {} epochs, final loss {:e}",
        if converged { "converged" } else { "not converged" },
        seg.trace.iterations(),
        seg.trace.records.last().map_or(0.0, |r| r.loss)
    );
    Ok(if a.strict && !converged { 2 } else { 0 })
}

fn cmd_sweep(a: SweepArgs) -> Result<u8> {
    let lambdas = if a.lambda.is_empty() { default_lambdas() } else { a.lambda };
    for &l in &lambdas {
        check_lambda(l)?;
    }
    let spec = SweepSpec {
        levels: a.levels,
        lambdas,
        schemes: a.scheme,
        sets: a.set,
        base: base_config(&a.run)?,
    };
    let corpus = load_corpus(&a.corpus).with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    if corpus.is_empty() {
        bail!("no NAME.pgm / NAME_gt.pgm pairs in {}", a.corpus.display());
    }
    let rows = sweep(&corpus, &spec)?;
    write_sweep_csv(create(&a.out)?, &rows)?;
    eprintln!("{} rows for {} images", rows.len() - 1, corpus.len());
    Ok(0)
}

fn cmd_phantom(a: PhantomArgs) -> Result<u8> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for seed in a.seed..a.seed + a.count {
        let spec = PhantomSpec {
            size: a.size,
            lesion_count: a.lesions,
            radius_min: a.rmin,
            radius_max: a.rmax,
            contrast: a.contrast,
            noise_sigma: a.noise,
            bias_amplitude: a.bias,
            seed,
        };
        let p = gen_phantom(&spec)?;
        let stem = a.out.join(format!("phantom_{seed:03}"));
        write_pgm(stem.with_extension("pgm"), &p.image)?;
        write_pgm(a.out.join(format!("phantom_{seed:03}_gt.pgm")), &p.truth.to_gray()?)?;
        let json = serde_json::to_string_pretty(&p.manifest)?;
        fs::write(stem.with_extension("json"), json + "\n")?;
    }
    Ok(0)
}

fn cmd_eval(a: EvalArgs) -> Result<u8> {
    let pred = Mask::from_gray(&read_pgm(&a.input).with_context(|| format!("reading {}", a.input.display()))?);
    let gt = Mask::from_gray(&read_pgm(&a.gt).with_context(|| format!("reading {}", a.gt.display()))?);
    println!("{}", serde_json::to_string_pretty(&evaluate(&pred, &gt)?)?);
    Ok(0)
}

fn cmd_compare(a: CompareArgs) -> Result<u8> {
    let da = read_dice_column(&a.a).with_context(|| format!("reading {}", a.a.display()))?;
    let db = read_dice_column(&a.b).with_context(|| format!("reading {}", a.b.display()))?;
    let r = ks_test_one_sided(&da, &db, a.alpha)?;
    println!("{}", serde_json::to_string(&r)?);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let res = match cli.cmd {
        Cmd::Segment(a) => cmd_segment(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Phantom(a) => cmd_phantom(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Compare(a) => cmd_compare(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
