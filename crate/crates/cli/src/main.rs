use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bifactor::admm::EffectiveOptions;
use bifactor::bench::experiments::{
    inpaint, parse_range, parse_usize_range, phase_transition, table3_experiment, CompletionMethod,
    PhaseConfig, RpcaMethod, Table3Config,
};
use bifactor::bench::rng::RNG_NAME;
use bifactor::dense::io::{read_mask, read_matrix, write_matrix};
use bifactor::pnm::{read_pnm, write_pnm};
use bifactor::{estimate_rank, DenseMatrix, Error, ObservationMask, SolverOptions, SolverReport};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bifactor",
    version,
    about = "Bilinear factor norm solvers for robust PCA and matrix completion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a matrix into low-rank and sparse parts.
    Rpca(RpcaArgs),
    /// Fill in the missing entries of a partially observed matrix.
    Complete(CompleteArgs),
    /// Drop random pixels from an image and restore them.
    Inpaint(InpaintArgs),
    /// Recovery success over a grid of ranks and corruption ratios.
    Phase(PhaseArgs),
    /// Noisy robust PCA benchmark comparing all three solvers.
    Table3(Table3Args),
    /// Estimate the rank of a (partially observed) matrix.
    Rankest(RankArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RpcaChoice {
    SlHalf,
    SlTwoThirds,
    Nuclear,
}

impl From<RpcaChoice> for RpcaMethod {
    fn from(c: RpcaChoice) -> Self {
        match c {
            RpcaChoice::SlHalf => RpcaMethod::SlHalf,
            RpcaChoice::SlTwoThirds => RpcaMethod::SlTwoThirds,
            RpcaChoice::Nuclear => RpcaMethod::Nuclear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CompletionChoice {
    Dn,
    Fn,
}

impl From<CompletionChoice> for CompletionMethod {
    fn from(c: CompletionChoice) -> Self {
        match c {
            CompletionChoice::Dn => CompletionMethod::DoubleNuclear,
            CompletionChoice::Fn => CompletionMethod::FrobeniusNuclear,
        }
    }
}

/// Flags shared by `rpca` and `complete`.
#[derive(Args)]
struct SolveTail {
    /// Factor rank d.
    #[arg(long, conflicts_with = "estimate_rank")]
    rank: Option<usize>,
    /// Pick d from the singular value ratios of the input (the default).
    #[arg(long)]
    estimate_rank: bool,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out_l: PathBuf,
    #[arg(long)]
    out_s: PathBuf,
    /// Per-iteration CSV with the effective configuration on every row.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct RpcaArgs {
    #[arg(long, value_enum)]
    method: RpcaChoice,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    tail: SolveTail,
}

#[derive(Args)]
struct CompleteArgs {
    #[arg(long, value_enum)]
    method: CompletionChoice,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[command(flatten)]
    tail: SolveTail,
}

#[derive(Args)]
struct InpaintArgs {
    #[arg(long, value_enum)]
    method: CompletionChoice,
    /// PGM or PPM image with maxval 255.
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    missing_ratio: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 9)]
    rank: usize,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct Jobs {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, env = "BIFACTOR_JOBS")]
    jobs: Option<usize>,
}

impl Jobs {
    fn resolve(&self) -> Result<usize> {
        match self.jobs {
            Some(0) => Err(Error::InvalidArgument("--jobs must be at least 1".into())),
            Some(j) => Ok(j),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, value_enum)]
    method: RpcaChoice,
    #[arg(long)]
    size: usize,
    /// start:stop:step
    #[arg(long)]
    ranks: String,
    /// start:stop:step
    #[arg(long)]
    corruptions: String,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args)]
struct Table3Args {
    /// Comma-separated matrix sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Add mean wall time per solve (makes the CSV machine dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Number of leading singular values inspected.
    #[arg(long)]
    k: Option<usize>,
}

type Result<T> = std::result::Result<T, Error>;

/// Prefixes I/O and parse failures with the offending path.
fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(_) | Error::Parse { .. } => {
            Error::InvalidArgument(format!("{}: {e}", path.display()))
        }
        other => other,
    })
}

fn load(input: &Path, mask: Option<&Path>) -> Result<(DenseMatrix, ObservationMask)> {
    let (d, present) = in_file(input, read_matrix(input))?;
    let mask = match mask {
        Some(p) => {
            let m = in_file(p, read_mask(p))?;
            if m.shape() != d.shape() {
                return Err(Error::Dimension(format!(
                    "mask is {}x{} but input is {}x{}",
                    m.rows(),
                    m.cols(),
                    d.rows(),
                    d.cols()
                )));
            }
            m.intersect(&present)?
        }
        None => present,
    };
    Ok((d, mask))
}

fn solver_options(
    mut opts: SolverOptions,
    tail: &SolveTail,
    d: &DenseMatrix,
    mask: &ObservationMask,
) -> Result<SolverOptions> {
    opts.d = match tail.rank {
        Some(r) => r,
        None => estimate_rank(d, mask, None)?.rank,
    };
    opts.lambda = tail.lambda.or(opts.lambda);
    if let Some(e) = tail.epsilon {
        opts.epsilon = e;
    }
    if let Some(n) = tail.max_iters {
        opts.max_iters = n;
    }
    Ok(opts)
}

fn config_fields(o: &EffectiveOptions) -> [String; 7] {
    [
        o.d.to_string(),
        o.lambda.to_string(),
        o.mu0.to_string(),
        o.rho.to_string(),
        o.mu_max.to_string(),
        o.epsilon.to_string(),
        o.max_iters.to_string(),
    ]
}

const CONFIG_HEADER: [&str; 7] = [
    "d",
    "lambda",
    "mu0",
    "rho",
    "mu_max",
    "epsilon",
    "max_iters",
];

fn write_trace(path: &Path, method: &str, input: &Path, rep: &SolverReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header = vec!["method", "input"];
    header.extend(CONFIG_HEADER);
    header.extend([
        "iteration",
        "objective",
        "residual",
        "stop_metric",
        "multiplier_norm_1",
        "multiplier_norm_2",
        "termination",
    ]);
    w.write_record(&header)?;
    let config = config_fields(&rep.options);
    for k in 0..rep.objective_trace.len() {
        let mut rec = vec![method.to_string(), input.display().to_string()];
        rec.extend(config.iter().cloned());
        let [y1, y2] = rep.multiplier_norm_trace[k];
        rec.extend([
            (k + 1).to_string(),
            rep.objective_trace[k].to_string(),
            rep.residual_trace[k].to_string(),
            rep.stop_metric_trace[k].to_string(),
            y1.to_string(),
            y2.to_string(),
            rep.termination.as_str().to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn finish_solve(method: &str, input: &Path, tail: &SolveTail, rep: &SolverReport) -> Result<()> {
    write_matrix(&tail.out_l, &rep.l, None)?;
    write_matrix(&tail.out_s, &rep.s, None)?;
    if let Some(path) = &tail.trace {
        write_trace(path, method, input, rep)?;
    }
    println!(
        "{method}: d={} lambda={} iterations={} termination={}",
        rep.options.d,
        rep.options.lambda,
        rep.iterations,
        rep.termination.as_str()
    );
    Ok(())
}

fn run_rpca(a: &RpcaArgs) -> Result<()> {
    let (d, mask) = load(&a.input, a.mask.as_deref())?;
    let opts = solver_options(SolverOptions::rpca(1), &a.tail, &d, &mask)?;
    let method = RpcaMethod::from(a.method);
    let rep = method.solve(&d, &mask, &opts)?;
    finish_solve(method.as_str(), &a.input, &a.tail, &rep)
}

fn run_complete(a: &CompleteArgs) -> Result<()> {
    let (d, mask) = load(&a.input, Some(&a.mask))?;
    let opts = solver_options(SolverOptions::completion(1), &a.tail, &d, &mask)?;
    let method = CompletionMethod::from(a.method);
    let rep = method.solve(&d, &mask, &opts)?;
    finish_solve(method.as_str(), &a.input, &a.tail, &rep)
}

fn run_inpaint(a: &InpaintArgs) -> Result<()> {
    let image = in_file(&a.image, read_pnm(&a.image))?;
    let method = CompletionMethod::from(a.method);
    let mut opts = SolverOptions::completion(a.rank);
    opts.lambda = a.lambda;
    if let Some(n) = a.max_iters {
        opts.max_iters = n;
    }
    let out = inpaint(&image, method, a.missing_ratio, a.seed, &opts)?;
    write_pnm(&a.out, &out.image)?;
    if let Some(path) = &a.report {
        let mut w = csv::Writer::from_writer(File::create(path)?);
        let mut header = vec!["rng", "method", "image", "missing_ratio", "seed", "channel"];
        header.extend(CONFIG_HEADER);
        header.extend(["iterations", "converged", "psnr", "psnr_zero_fill"]);
        w.write_record(&header)?;
        for (c, (eff, iters, converged)) in out.channels.iter().enumerate() {
            let mut rec = vec![
                RNG_NAME.to_string(),
                method.as_str().to_string(),
                a.image.display().to_string(),
                a.missing_ratio.to_string(),
                a.seed.to_string(),
                c.to_string(),
            ];
            rec.extend(config_fields(eff));
            rec.extend([
                iters.to_string(),
                converged.to_string(),
                out.psnr.to_string(),
                out.psnr_zero_fill.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    println!(
        "psnr={:.4} zero_fill={:.4} gain={:.4}",
        out.psnr,
        out.psnr_zero_fill,
        out.psnr - out.psnr_zero_fill
    );
    Ok(())
}

fn run_phase(a: &PhaseArgs) -> Result<()> {
    let mut options = SolverOptions::rpca(1);
    if let Some(n) = a.max_iters {
        options.max_iters = n;
    }
    let cfg = PhaseConfig {
        method: a.method.into(),
        size: a.size,
        ranks: parse_usize_range(&a.ranks)?,
        corruptions: parse_range(&a.corruptions)?,
        trials: a.trials,
        seed: a.seed,
        options,
    };
    let grid = phase_transition(&cfg, a.jobs.resolve()?)?;
    grid.write_csv(File::create(&a.out)?)?;
    println!("{} cells written to {}", grid.cells.len(), a.out.display());
    Ok(())
}

fn run_table3(a: &Table3Args) -> Result<()> {
    let cfg = Table3Config::new(a.sizes.clone(), a.trials, a.seed);
    let mut options = SolverOptions::rpca(1);
    if let Some(n) = a.max_iters {
        options.max_iters = n;
    }
    let res = table3_experiment(&cfg, &options, a.jobs.resolve()?)?;
    res.write_csv(File::create(&a.out)?, a.timing)?;
    for r in &res.rows {
        println!(
            "{:>5} {:<14} rse={:.4} f_measure={:.4} f_measure_noise={:.4}",
            r.size,
            r.method.as_str(),
            r.mean_rse,
            r.mean_f_measure,
            r.mean_f_measure_noise
        );
    }
    Ok(())
}

fn run_rankest(a: &RankArgs) -> Result<()> {
    let (d, mask) = load(&a.input, a.mask.as_deref())?;
    println!("{}", estimate_rank(&d, &mask, a.k)?.rank);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Rpca(a) => run_rpca(a),
        Command::Complete(a) => run_complete(a),
        Command::Inpaint(a) => run_inpaint(a),
        Command::Phase(a) => run_phase(a),
        Command::Table3(a) => run_table3(a),
        Command::Rankest(a) => run_rankest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
