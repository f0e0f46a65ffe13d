use crate::dense::DenseMatrix;
use crate::error::{dim_err, Result};

/// Above this observed fraction a dense boolean view is kept alongside the
/// sorted index list.
const DENSE_VIEW_DENSITY: f64 = 0.25;

/// The set of observed entries of an `rows x cols` matrix.
///
/// Indices are stored as sorted row-major linear offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<usize>,
    dense: Option<Vec<bool>>,
}

impl ObservationMask {
    pub fn full(rows: usize, cols: usize) -> Self {
        Self::from_sorted_unchecked(rows, cols, (0..rows * cols).collect())
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_sorted_unchecked(rows, cols, Vec::new())
    }

    /// Builds a mask from `(row, col)` pairs. Out-of-range or duplicate
    /// pairs are rejected.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut lin = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            if i >= rows || j >= cols {
                return dim_err(format!("index ({i}, {j}) outside a {rows}x{cols} mask"));
            }
            lin.push(i * cols + j);
        }
        lin.sort_unstable();
        if lin.windows(2).any(|w| w[0] == w[1]) {
            return Err(crate::Error::InvalidArgument(
                "duplicate index in mask".into(),
            ));
        }
        Ok(Self::from_sorted_unchecked(rows, cols, lin))
    }

    /// Observed wherever `flags` is true (row-major).
    pub fn from_flags(rows: usize, cols: usize, flags: &[bool]) -> Result<Self> {
        if flags.len() != rows * cols {
            return dim_err(format!("{} flags for a {rows}x{cols} mask", flags.len()));
        }
        let lin = flags
            .iter()
            .enumerate()
            .filter_map(|(p, &f)| f.then_some(p))
            .collect();
        Ok(Self::from_sorted_unchecked(rows, cols, lin))
    }

    fn from_sorted_unchecked(rows: usize, cols: usize, observed: Vec<usize>) -> Self {
        let total = rows * cols;
        let dense =
            (total > 0 && observed.len() as f64 > DENSE_VIEW_DENSITY * total as f64).then(|| {
                let mut flags = vec![false; total];
                for &p in &observed {
                    flags[p] = true;
                }
                flags
            });
        Self {
            rows,
            cols,
            observed,
            dense,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of observed entries.
    pub fn count(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.observed.len() == self.rows * self.cols
    }

    pub fn density(&self) -> f64 {
        self.observed.len() as f64 / (self.rows * self.cols).max(1) as f64
    }

    pub fn has_dense_view(&self) -> bool {
        self.dense.is_some()
    }

    /// Sorted row-major offsets of the observed entries.
    pub fn linear_indices(&self) -> &[usize] {
        &self.observed
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.observed
            .iter()
            .map(move |&p| (p / self.cols, p % self.cols))
    }

    #[inline]
    pub fn contains_linear(&self, p: usize) -> bool {
        match &self.dense {
            Some(flags) => flags[p],
            None => self.observed.binary_search(&p).is_ok(),
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && self.contains_linear(i * self.cols + j)
    }

    /// The unobserved entries.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.rows * self.cols - self.observed.len());
        let mut next = self.observed.iter().peekable();
        for p in 0..self.rows * self.cols {
            if next.peek() == Some(&&p) {
                next.next();
            } else {
                out.push(p);
            }
        }
        Self::from_sorted_unchecked(self.rows, self.cols, out)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_shape(other.shape())?;
        let lin = self
            .observed
            .iter()
            .copied()
            .filter(|&p| other.contains_linear(p))
            .collect();
        Ok(Self::from_sorted_unchecked(self.rows, self.cols, lin))
    }

    fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if shape != self.shape() {
            return dim_err(format!(
                "matrix is {}x{} but mask is {}x{}",
                shape.0, shape.1, self.rows, self.cols
            ));
        }
        Ok(())
    }

    /// Keeps the observed entries of `a` and zeroes the rest.
    pub fn project(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_shape(a.shape())?;
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        let src = a.as_slice();
        let dst = out.as_mut_slice();
        for &p in &self.observed {
            dst[p] = src[p];
        }
        Ok(out)
    }

    /// `a - project(a)`: keeps only the unobserved entries.
    pub fn project_complement(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_shape(a.shape())?;
        let mut out = a.clone();
        let dst = out.as_mut_slice();
        for &p in &self.observed {
            dst[p] = 0.0;
        }
        Ok(out)
    }

    /// Applies `on` to observed entries and `off` to the rest, in place.
    pub(crate) fn apply_split(
        &self,
        a: &mut DenseMatrix,
        on: impl Fn(f64) -> f64,
        off: impl Fn(f64) -> f64,
    ) {
        debug_assert_eq!(a.shape(), self.shape());
        let data = a.as_mut_slice();
        match &self.dense {
            Some(flags) => {
                for (v, &f) in data.iter_mut().zip(flags) {
                    *v = if f { on(*v) } else { off(*v) };
                }
            }
            None => {
                let mut next = self.observed.iter().peekable();
                for (p, v) in data.iter_mut().enumerate() {
                    if next.peek() == Some(&&p) {
                        next.next();
                        *v = on(*v);
                    } else {
                        *v = off(*v);
                    }
                }
            }
        }
    }
}
