//! Experiment drivers: phase-transition grids, the Table-3 style benchmark
//! and synthetic inpainting. Every trial draws from its own RNG stream, so
//! results do not depend on how many worker threads run them.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::admm::{
    complete_dn, complete_fn, solve_rpca_nuclear, solve_sl_half, solve_sl_two_thirds,
    SolverOptions, SolverReport,
};
use crate::bench::metrics::{f_measure, f_measure_with_tol, psnr, rse, SUPPORT_TOL};
use crate::bench::rng::RNG_NAME;
use crate::bench::synth::{gen_synthetic, random_mask, DRule, ExperimentConfig};
use crate::dense::{DenseMatrix, ObservationMask};
use crate::error::{Error, Result};
use crate::pnm::PortableImage;

/// Success threshold on the relative error of the recovered low-rank part.
pub const SUCCESS_RSE: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RpcaMethod {
    SlHalf,
    SlTwoThirds,
    Nuclear,
}

impl RpcaMethod {
    pub const ALL: [RpcaMethod; 3] = [
        RpcaMethod::SlHalf,
        RpcaMethod::SlTwoThirds,
        RpcaMethod::Nuclear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RpcaMethod::SlHalf => "sl-half",
            RpcaMethod::SlTwoThirds => "sl-two-thirds",
            RpcaMethod::Nuclear => "nuclear",
        }
    }

    pub fn solve(
        self,
        d: &DenseMatrix,
        mask: &ObservationMask,
        opts: &SolverOptions,
    ) -> Result<SolverReport> {
        match self {
            RpcaMethod::SlHalf => solve_sl_half(d, mask, opts),
            RpcaMethod::SlTwoThirds => solve_sl_two_thirds(d, mask, opts),
            RpcaMethod::Nuclear => solve_rpca_nuclear(d, mask, opts),
        }
    }
}

impl FromStr for RpcaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown robust PCA method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompletionMethod {
    DoubleNuclear,
    FrobeniusNuclear,
}

impl CompletionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CompletionMethod::DoubleNuclear => "dn",
            CompletionMethod::FrobeniusNuclear => "fn",
        }
    }

    pub fn solve(
        self,
        d: &DenseMatrix,
        mask: &ObservationMask,
        opts: &SolverOptions,
    ) -> Result<SolverReport> {
        match self {
            CompletionMethod::DoubleNuclear => complete_dn(d, mask, opts),
            CompletionMethod::FrobeniusNuclear => complete_fn(d, mask, opts),
        }
    }
}

impl FromStr for CompletionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dn" => Ok(CompletionMethod::DoubleNuclear),
            "fn" => Ok(CompletionMethod::FrobeniusNuclear),
            _ => Err(Error::InvalidArgument(format!(
                "unknown completion method {s:?}"
            ))),
        }
    }
}

/// Runs `f(0..n)` on a pool of `jobs` threads (or serially when `jobs == 1`)
/// and returns the results in index order.
fn run_indexed<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if jobs <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

/// Parses `start:stop:step`; `stop` is included when it lands on the grid.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("range {text:?} is not start:stop:step"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidArgument(format!(
            "range {text:?} needs a positive step and start <= stop"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

/// Integer flavour of [`parse_range`].
pub fn parse_usize_range(text: &str) -> Result<Vec<usize>> {
    parse_range(text)?
        .into_iter()
        .map(|v| {
            let r = v.round();
            if r < 0.0 || (r - v).abs() > 1e-9 {
                Err(Error::InvalidArgument(format!(
                    "range {text:?} must contain integers"
                )))
            } else {
                Ok(r as usize)
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseConfig {
    pub method: RpcaMethod,
    pub size: usize,
    pub ranks: Vec<usize>,
    pub corruptions: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Options template; `d` is replaced by `floor(1.25 r)` in each cell.
    pub options: SolverOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCell {
    pub rank: usize,
    pub corruption: f64,
    pub d: usize,
    pub successes: usize,
    pub trials: usize,
    pub mean_rse: f64,
}

impl PhaseCell {
    pub fn success_ratio(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    pub config: PhaseConfig,
    /// Row-major over `(rank, corruption)`.
    pub cells: Vec<PhaseCell>,
}

impl PhaseGrid {
    pub fn cell(&self, rank: usize, corruption: f64) -> Option<&PhaseCell> {
        self.cells
            .iter()
            .find(|c| c.rank == rank && (c.corruption - corruption).abs() < 1e-12)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let cfg = &self.config;
        let o = &cfg.options;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "rng",
            "method",
            "size",
            "rank",
            "corruption",
            "trials",
            "seed",
            "d",
            "lambda",
            "mu0",
            "rho",
            "mu_max",
            "epsilon",
            "max_iters",
            "success_rse",
            "successes",
            "success_ratio",
            "mean_rse",
        ])?;
        let lambda = o
            .lambda
            .unwrap_or_else(|| crate::admm::default_rpca_lambda(cfg.size, cfg.size));
        for c in &self.cells {
            w.write_record([
                RNG_NAME.to_string(),
                cfg.method.as_str().into(),
                cfg.size.to_string(),
                c.rank.to_string(),
                c.corruption.to_string(),
                c.trials.to_string(),
                cfg.seed.to_string(),
                c.d.to_string(),
                lambda.to_string(),
                o.mu0.map_or_else(|| "1/sigma1".into(), |v| v.to_string()),
                o.rho.to_string(),
                o.mu_max.to_string(),
                o.epsilon.to_string(),
                o.max_iters.to_string(),
                SUCCESS_RSE.to_string(),
                c.successes.to_string(),
                c.success_ratio().to_string(),
                c.mean_rse.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Recovery-success grid over `(rank, corruption)` cells on square
/// `size x size` problems. A trial succeeds when the recovered `L` has
/// relative error below [`SUCCESS_RSE`].
pub fn phase_transition(cfg: &PhaseConfig, jobs: usize) -> Result<PhaseGrid> {
    if cfg.ranks.is_empty() || cfg.corruptions.is_empty() {
        return Err(Error::InvalidArgument(
            "phase grids must be nonempty".into(),
        ));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let cells: Vec<(usize, f64)> = cfg
        .ranks
        .iter()
        .flat_map(|&r| cfg.corruptions.iter().map(move |&c| (r, c)))
        .collect();
    for &(r, c) in &cells {
        ExperimentConfig {
            outlier_ratio: c,
            ..ExperimentConfig::new(cfg.size, cfg.size, r)
        }
        .validate()?;
    }

    let total = cells.len() * cfg.trials;
    let rses = run_indexed(total, jobs, |job| {
        let (r, c) = cells[job / cfg.trials];
        let exp = ExperimentConfig {
            outlier_ratio: c,
            seed: cfg.seed,
            d_rule: DRule::OneQuarterOverR,
            ..ExperimentConfig::new(cfg.size, cfg.size, r)
        };
        let gt = gen_synthetic(&exp, job as u64)?;
        let mut opts = cfg.options.clone();
        opts.d = exp.factor_rank(&gt.d, &gt.mask)?;
        let rep = cfg.method.solve(&gt.d, &gt.mask, &opts)?;
        rse(&rep.l, &gt.l_star)
    })?;

    let cells = cells
        .iter()
        .enumerate()
        .map(|(k, &(rank, corruption))| {
            let chunk = &rses[k * cfg.trials..(k + 1) * cfg.trials];
            PhaseCell {
                rank,
                corruption,
                d: ((5 * rank) / 4).clamp(1, cfg.size),
                successes: chunk.iter().filter(|&&e| e < SUCCESS_RSE).count(),
                trials: cfg.trials,
                mean_rse: chunk.iter().sum::<f64>() / cfg.trials as f64,
            }
        })
        .collect();
    Ok(PhaseGrid {
        config: cfg.clone(),
        cells,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table3Config {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub rank: usize,
    pub outlier_ratio: f64,
    pub noise_factor: f64,
    pub methods: Vec<RpcaMethod>,
}

impl Table3Config {
    /// rank 10, 20% outliers, noise factor 0.5, all three methods.
    pub fn new(sizes: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            sizes,
            trials,
            seed,
            rank: 10,
            outlier_ratio: 0.2,
            noise_factor: 0.5,
            methods: RpcaMethod::ALL.to_vec(),
        }
    }

    /// Detection threshold that sits above the dense noise absorbed by `S`.
    pub fn noise_support_tol(&self) -> f64 {
        SUPPORT_TOL.max(3.0 * self.noise_factor)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table3Trial {
    pub size: usize,
    pub trial: usize,
    pub method: RpcaMethod,
    pub d: usize,
    pub lambda: f64,
    pub mu0: f64,
    pub rse: f64,
    pub f_measure: f64,
    pub f_measure_noise: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table3Row {
    pub size: usize,
    pub method: RpcaMethod,
    pub trials: usize,
    pub mean_d: f64,
    pub mean_rse: f64,
    pub mean_f_measure: f64,
    pub mean_f_measure_noise: f64,
    pub mean_iterations: f64,
    pub converged: usize,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table3Result {
    pub config: Table3Config,
    pub options: SolverOptions,
    pub trials: Vec<Table3Trial>,
    pub rows: Vec<Table3Row>,
}

impl Table3Result {
    pub fn row(&self, size: usize, method: RpcaMethod) -> Option<&Table3Row> {
        self.rows
            .iter()
            .find(|r| r.size == size && r.method == method)
    }

    /// One row per `(method, size)`. Wall times are machine dependent, so
    /// they are written only when `timing` is set.
    pub fn write_csv<W: Write>(&self, out: W, timing: bool) -> Result<()> {
        let cfg = &self.config;
        let o = &self.options;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "rng",
            "method",
            "size",
            "rank",
            "outlier_ratio",
            "noise_factor",
            "trials",
            "seed",
            "d_rule",
            "mean_d",
            "lambda",
            "mu0",
            "rho",
            "mu_max",
            "epsilon",
            "max_iters",
            "support_tol",
            "noise_support_tol",
            "mean_rse",
            "mean_f_measure",
            "mean_f_measure_noise",
            "mean_iterations",
            "converged",
        ];
        if timing {
            header.push("mean_seconds");
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                RNG_NAME.to_string(),
                r.method.as_str().into(),
                r.size.to_string(),
                cfg.rank.to_string(),
                cfg.outlier_ratio.to_string(),
                cfg.noise_factor.to_string(),
                r.trials.to_string(),
                cfg.seed.to_string(),
                DRule::Estimate.label(),
                r.mean_d.to_string(),
                o.lambda
                    .map_or_else(|| "sqrt(max(m,n))".into(), |v| v.to_string()),
                o.mu0.map_or_else(|| "1/sigma1".into(), |v| v.to_string()),
                o.rho.to_string(),
                o.mu_max.to_string(),
                o.epsilon.to_string(),
                o.max_iters.to_string(),
                SUPPORT_TOL.to_string(),
                cfg.noise_support_tol().to_string(),
                r.mean_rse.to_string(),
                r.mean_f_measure.to_string(),
                r.mean_f_measure_noise.to_string(),
                r.mean_iterations.to_string(),
                r.converged.to_string(),
            ];
            if timing {
                rec.push(r.mean_seconds.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Noisy robust PCA benchmark: rank-10 data with outliers and dense noise,
/// `d` estimated from the data, every method run on every trial.
pub fn table3_experiment(
    cfg: &Table3Config,
    options: &SolverOptions,
    jobs: usize,
) -> Result<Table3Result> {
    if cfg.sizes.is_empty() || cfg.trials == 0 || cfg.methods.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one size, one trial and one method".into(),
        ));
    }
    let jobs_list: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    for &s in &cfg.sizes {
        ExperimentConfig {
            outlier_ratio: cfg.outlier_ratio,
            noise_factor: cfg.noise_factor,
            ..ExperimentConfig::new(s, s, cfg.rank)
        }
        .validate()?;
    }

    let tol = cfg.noise_support_tol();
    let per_job = run_indexed(jobs_list.len(), jobs, |job| {
        let (size, trial) = jobs_list[job];
        let exp = ExperimentConfig {
            outlier_ratio: cfg.outlier_ratio,
            noise_factor: cfg.noise_factor,
            seed: cfg.seed,
            d_rule: DRule::Estimate,
            ..ExperimentConfig::new(size, size, cfg.rank)
        };
        let gt = gen_synthetic(&exp, job as u64)?;
        let d = exp.factor_rank(&gt.d, &gt.mask)?;
        let mut opts = options.clone();
        opts.d = d;
        cfg.methods
            .iter()
            .map(|&method| {
                let start = Instant::now();
                let rep = method.solve(&gt.d, &gt.mask, &opts)?;
                let seconds = start.elapsed().as_secs_f64();
                Ok(Table3Trial {
                    size,
                    trial,
                    method,
                    d,
                    lambda: rep.options.lambda,
                    mu0: rep.options.mu0,
                    rse: rse(&rep.l, &gt.l_star)?,
                    f_measure: f_measure(&rep.s, &gt.s_star, &gt.mask)?,
                    f_measure_noise: f_measure_with_tol(&rep.s, &gt.s_star, &gt.mask, tol)?,
                    iterations: rep.iterations,
                    converged: rep.termination == crate::admm::Termination::Converged,
                    seconds,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let trials: Vec<Table3Trial> = per_job.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        for &method in &cfg.methods {
            let sel: Vec<&Table3Trial> = trials
                .iter()
                .filter(|t| t.size == size && t.method == method)
                .collect();
            let k = sel.len() as f64;
            let mean = |f: &dyn Fn(&Table3Trial) -> f64| sel.iter().map(|t| f(t)).sum::<f64>() / k;
            rows.push(Table3Row {
                size,
                method,
                trials: sel.len(),
                mean_d: mean(&|t| t.d as f64),
                mean_rse: mean(&|t| t.rse),
                mean_f_measure: mean(&|t| t.f_measure),
                mean_f_measure_noise: mean(&|t| t.f_measure_noise),
                mean_iterations: mean(&|t| t.iterations as f64),
                converged: sel.iter().filter(|t| t.converged).count(),
                mean_seconds: mean(&|t| t.seconds),
            });
        }
    }
    Ok(Table3Result {
        config: cfg.clone(),
        options: options.clone(),
        trials,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InpaintOutcome {
    pub image: PortableImage,
    pub mask: ObservationMask,
    pub psnr: f64,
    pub psnr_zero_fill: f64,
    /// Effective options and iteration count for each channel.
    pub channels: Vec<(crate::admm::EffectiveOptions, usize, bool)>,
}

/// Drops `missing_ratio` of the pixel positions uniformly at random (the
/// same positions in every channel), completes each channel independently
/// and reports PSNR against the original.
pub fn inpaint(
    image: &PortableImage,
    method: CompletionMethod,
    missing_ratio: f64,
    seed: u64,
    options: &SolverOptions,
) -> Result<InpaintOutcome> {
    let mask = random_mask(image.height, image.width, missing_ratio, seed, 0)?;
    let mut restored = Vec::with_capacity(image.channels);
    let mut zero_fill = Vec::with_capacity(image.channels);
    let mut originals = Vec::with_capacity(image.channels);
    let mut channels = Vec::with_capacity(image.channels);
    for c in 0..image.channels {
        let truth = image.channel(c)?;
        let observed = mask.project(&truth)?;
        let rep = method.solve(&observed, &mask, options)?;
        // observed pixels are known exactly
        let mut filled = rep.l.clone();
        for &p in mask.linear_indices() {
            filled.as_mut_slice()[p] = truth.as_slice()[p];
        }
        channels.push((
            rep.options.clone(),
            rep.iterations,
            rep.termination == crate::admm::Termination::Converged,
        ));
        restored.push(filled.map(|v| v.clamp(0.0, 255.0)));
        zero_fill.push(observed);
        originals.push(truth);
    }
    let stack = |parts: &[DenseMatrix]| -> Result<DenseMatrix> {
        let (h, w) = parts[0].shape();
        let data = parts
            .iter()
            .flat_map(|p| p.as_slice().iter().copied())
            .collect();
        DenseMatrix::from_vec(h * parts.len(), w, data)
    };
    let truth = stack(&originals)?;
    Ok(InpaintOutcome {
        psnr: psnr(&stack(&restored)?, &truth, 255.0)?,
        psnr_zero_fill: psnr(&stack(&zero_fill)?, &truth, 255.0)?,
        image: PortableImage::from_channels(&restored)?,
        mask,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(
            parse_usize_range("5:50:5").unwrap(),
            (1..=10).map(|k| 5 * k).collect::<Vec<_>>()
        );
        let c = parse_range("0:0.35:0.05").unwrap();
        assert_eq!(c.len(), 8);
        assert!((c[7] - 0.35).abs() < 1e-12);
        assert_eq!(parse_range("1:2:0.3").unwrap().len(), 4);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("2:1:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_usize_range("0:1:0.5").is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in RpcaMethod::ALL {
            assert_eq!(m.as_str().parse::<RpcaMethod>().unwrap(), m);
        }
        assert!("pcp".parse::<RpcaMethod>().is_err());
        assert_eq!(
            "fn".parse::<CompletionMethod>().unwrap(),
            CompletionMethod::FrobeniusNuclear
        );
    }

    #[test]
    fn phase_grid_shape_and_parallel_agreement() {
        let cfg = PhaseConfig {
            method: RpcaMethod::SlTwoThirds,
            size: 30,
            ranks: vec![1, 2],
            corruptions: vec![0.0, 0.05, 0.1],
            trials: 2,
            seed: 4,
            options: SolverOptions::rpca(1).with_max_iters(60),
        };
        let serial = phase_transition(&cfg, 1).unwrap();
        assert_eq!(serial.cells.len(), 6);
        assert!(serial
            .cells
            .iter()
            .all(|c| (0.0..=1.0).contains(&c.success_ratio())));
        let parallel = phase_transition(&cfg, 3).unwrap();
        assert_eq!(serial, parallel);
        let mut a = Vec::new();
        serial.write_csv(&mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("ChaCha20,sl-two-thirds,30,1,0,"));
    }

    #[test]
    fn small_table3_is_deterministic() {
        let cfg = Table3Config {
            rank: 2,
            ..Table3Config::new(vec![30], 2, 1)
        };
        let opts = SolverOptions::rpca(1).with_max_iters(40);
        let a = table3_experiment(&cfg, &opts, 1).unwrap();
        let b = table3_experiment(&cfg, &opts, 2).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x, false).unwrap();
        b.write_csv(&mut y, false).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.rows.len(), 3);
        assert_eq!(a.trials.len(), 6);
    }

    #[test]
    fn inpaint_restores_observed_pixels() {
        let img = crate::bench::synth::low_rank_image(24, 20, 2, 3).unwrap();
        let pnm = PortableImage::from_channels(&[img]).unwrap();
        let out = inpaint(
            &pnm,
            CompletionMethod::FrobeniusNuclear,
            0.5,
            2,
            &SolverOptions::completion(2).with_lambda(1.0),
        )
        .unwrap();
        assert!(out.psnr > out.psnr_zero_fill);
        for &p in out.mask.linear_indices() {
            assert_eq!(out.image.pixels[p], pnm.pixels[p]);
        }
    }
}
