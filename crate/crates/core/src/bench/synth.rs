use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::bench::rng::seeded;
use crate::dense::{DenseMatrix, ObservationMask};
use crate::error::{Error, Result};

/// How the factor rank `d` is chosen for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DRule {
    /// Estimate from the observed data.
    Estimate,
    Fixed(usize),
    /// `floor(1.25 r)` from the true rank.
    OneQuarterOverR,
}

impl DRule {
    pub fn label(self) -> String {
        match self {
            DRule::Estimate => "estimate".into(),
            DRule::Fixed(d) => format!("fixed:{d}"),
            DRule::OneQuarterOverR => "1.25r".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub outlier_ratio: f64,
    pub noise_factor: f64,
    pub missing_ratio: f64,
    pub seed: u64,
    pub trials: usize,
    pub d_rule: DRule,
}

impl ExperimentConfig {
    pub fn new(m: usize, n: usize, r: usize) -> Self {
        Self {
            m,
            n,
            r,
            outlier_ratio: 0.0,
            noise_factor: 0.0,
            missing_ratio: 0.0,
            seed: 0,
            trials: 1,
            d_rule: DRule::OneQuarterOverR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.m == 0 || self.n == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.r == 0 || self.r > self.m.min(self.n) {
            return bad(format!(
                "rank {} outside 1..={}",
                self.r,
                self.m.min(self.n)
            ));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return bad(format!(
                "outlier ratio {} outside [0, 1)",
                self.outlier_ratio
            ));
        }
        if !(0.0..1.0).contains(&self.missing_ratio) {
            return bad(format!(
                "missing ratio {} outside [0, 1)",
                self.missing_ratio
            ));
        }
        if !(self.noise_factor >= 0.0) || !self.noise_factor.is_finite() {
            return bad(format!("noise factor {} must be >= 0", self.noise_factor));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        Ok(())
    }

    /// Rank passed to the solvers for data `observed`.
    pub fn factor_rank(&self, observed: &DenseMatrix, mask: &ObservationMask) -> Result<usize> {
        Ok(match self.d_rule {
            DRule::Estimate => crate::rank::estimate_rank(observed, mask, None)?.rank,
            DRule::Fixed(d) => d,
            DRule::OneQuarterOverR => ((5 * self.r) / 4).max(1),
        }
        .min(self.m.min(self.n)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub l_star: DenseMatrix,
    pub s_star: DenseMatrix,
    pub mask: ObservationMask,
    /// `P_Omega(L* + S* + N)`
    pub d: DenseMatrix,
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Draws one trial of the synthetic protocol.
///
/// Draw order on the `(seed, trial)` stream: `P`, `Q`, observed set,
/// outlier positions (within the observed set), outlier values, noise.
pub fn gen_synthetic(cfg: &ExperimentConfig, trial: u64) -> Result<GroundTruth> {
    cfg.validate()?;
    let (m, n, r) = (cfg.m, cfg.n, cfg.r);
    let mn = m * n;
    let mut rng = seeded(cfg.seed, trial);

    let p = gaussian(m, r, &mut rng);
    let q = gaussian(n, r, &mut rng);
    let l_star = p.matmul_t(&q);

    let missing = (cfg.missing_ratio * mn as f64).round() as usize;
    let mask = if missing == 0 {
        ObservationMask::full(m, n)
    } else {
        let mut flags = vec![true; mn];
        for i in sample(&mut rng, mn, missing) {
            flags[i] = false;
        }
        ObservationMask::from_flags(m, n, &flags)?
    };

    let observed = mask.linear_indices();
    let outliers = ((cfg.outlier_ratio * mn as f64).round() as usize).min(observed.len());
    let mut s_star = DenseMatrix::zeros(m, n);
    if outliers > 0 {
        let picks = sample(&mut rng, observed.len(), outliers).into_vec();
        let values = Uniform::new_inclusive(-5.0, 5.0).expect("valid range");
        let s = s_star.as_mut_slice();
        for k in picks {
            s[observed[k]] = values.sample(&mut rng);
        }
    }

    let mut d = l_star.add(&s_star);
    if cfg.noise_factor > 0.0 {
        let noise = gaussian(m, n, &mut rng);
        d.axpy(cfg.noise_factor, &noise);
    }
    let d = mask.project(&d)?;
    Ok(GroundTruth {
        l_star,
        s_star,
        mask,
        d,
    })
}

/// Nonnegative rank-`rank` test image with peak value 255.
pub fn low_rank_image(height: usize, width: usize, rank: usize, seed: u64) -> Result<DenseMatrix> {
    if rank == 0 || rank > height.min(width) {
        return Err(Error::InvalidArgument(format!(
            "image rank {rank} outside 1..={}",
            height.min(width)
        )));
    }
    let mut rng = seeded(seed, 0);
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let p = DenseMatrix::from_fn(height, rank, |_, _| unit.sample(&mut rng));
    let q = DenseMatrix::from_fn(width, rank, |_, _| unit.sample(&mut rng));
    let img = p.matmul_t(&q);
    let peak = img.max_abs();
    Ok(img.scale(255.0 / peak))
}

/// Drops `round(ratio * rows * cols)` entries uniformly at random.
pub fn random_mask(
    rows: usize,
    cols: usize,
    missing_ratio: f64,
    seed: u64,
    stream: u64,
) -> Result<ObservationMask> {
    if !(0.0..1.0).contains(&missing_ratio) {
        return Err(Error::InvalidArgument(format!(
            "missing ratio {missing_ratio} outside [0, 1)"
        )));
    }
    let total = rows * cols;
    let missing = (missing_ratio * total as f64).round() as usize;
    let mut flags = vec![true; total];
    let mut rng = seeded(seed, stream);
    for i in sample(&mut rng, total, missing) {
        flags[i] = false;
    }
    ObservationMask::from_flags(rows, cols, &flags)
}
