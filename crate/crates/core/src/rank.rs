//! Rank estimation from the decay of the leading singular values.

use crate::dense::{singular_values, DenseMatrix, ObservationMask};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RankEstimate {
    pub rank: usize,
    /// Top-`k` singular values of the observed data.
    pub singular_values: Vec<f64>,
    /// `sigma_{i+1} / sigma_i`, the selection criterion. Entries whose
    /// `sigma_i` falls below the numerical floor are `+inf`.
    pub ratios: Vec<f64>,
    /// `sigma_i - sigma_{i+1}`, diagnostics only.
    pub gaps: Vec<f64>,
}

pub fn default_k(rows: usize, cols: usize) -> usize {
    100.min(rows.min(cols))
}

/// Picks the index minimising the ratio of consecutive singular values of
/// `P_Omega(D)`, among indices with `sigma_i > 1e-10 * sigma_1`. Ties go to
/// the smallest index.
pub fn estimate_rank(
    d: &DenseMatrix,
    mask: &ObservationMask,
    k: Option<usize>,
) -> Result<RankEstimate> {
    let (m, n) = d.shape();
    let k = k.unwrap_or_else(|| default_k(m, n));
    if k < 2 || k > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 2..={}",
            m.min(n)
        )));
    }
    if mask.is_empty() {
        return Err(Error::InvalidArgument("observation mask is empty".into()));
    }
    let observed = mask.project(d)?;
    let mut sv = singular_values(&observed)?;
    sv.truncate(k);
    let top = sv[0];
    if top == 0.0 {
        return Err(Error::RankUndefined);
    }
    let floor = 1e-10 * top;
    let ratios: Vec<f64> = sv
        .windows(2)
        .map(|w| {
            if w[0] > floor {
                w[1] / w[0]
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let gaps: Vec<f64> = sv.windows(2).map(|w| w[0] - w[1]).collect();
    let mut best = 0;
    for (i, &r) in ratios.iter().enumerate() {
        if r < ratios[best] {
            best = i;
        }
    }
    Ok(RankEstimate {
        rank: best + 1,
        singular_values: sv,
        ratios,
        gaps,
    })
}
