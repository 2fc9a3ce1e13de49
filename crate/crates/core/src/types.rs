//! Shared domain types.
//!
//! Time is 1-based throughout the public API: instant `t` of a dataset with
//! period `T` falls in period slot `((t - 1) mod T) + 1`. Storage indices
//! (`row`, `col` arguments of the accessors below) are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `n × t` panel of records, one row per individual (series-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMatrix {
    n: usize,
    t: usize,
    values: Vec<f64>,
}

impl DatasetMatrix {
    /// Builds a matrix from row-major storage, validating shape and finiteness.
    pub fn new(n: usize, t: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || t == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.len() != n * t {
            return Err(Error::DimensionMismatch {
                expected: n * t,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: pos / t + 1,
                col: pos % t + 1,
            });
        }
        Ok(Self { n, t, values })
    }

    /// Builds a matrix from per-series rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        validate_dataset(rows)
    }

    pub fn zeros(n: usize, t: usize) -> Result<Self> {
        Self::new(n, t, vec![0.0; n * t])
    }

    /// Number of series.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of time instants.
    pub fn t(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.t + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.t..(row + 1) * self.t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.t)
    }

    /// Column at 0-based instant `col`, i.e. the records of time `col + 1`.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, col)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First `k` instants of the panel.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyDataset);
        }
        if k > self.t {
            return Err(Error::DimensionMismatch {
                expected: self.t,
                got: k,
            });
        }
        let values = self.rows().flat_map(|r| r[..k].iter().copied()).collect();
        Ok(Self {
            n: self.n,
            t: k,
            values,
        })
    }

    pub(crate) fn from_parts_unchecked(n: usize, t: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * t);
        Self { n, t, values }
    }
}

/// Validates a raw `n × t` array into a [`DatasetMatrix`].
pub fn validate_dataset<R: AsRef<[f64]>>(rows: &[R]) -> Result<DatasetMatrix> {
    let n = rows.len();
    let t = rows.first().map_or(0, |r| r.as_ref().len());
    if n == 0 || t == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut values = Vec::with_capacity(n * t);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != t {
            return Err(Error::RaggedRows {
                row: i + 1,
                expected: t,
                got: row.len(),
            });
        }
        values.extend_from_slice(row);
    }
    DatasetMatrix::new(n, t, values)
}

/// Number of instants per period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Period(usize);

impl Period {
    pub fn new(t: usize) -> Result<Self> {
        if t == 0 {
            Err(Error::ZeroPeriod)
        } else {
            Ok(Self(t))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Period slot (1-based) of the 1-based instant `t`.
    ///
    /// `t = kT` maps to slot `T`, not 0.
    #[inline]
    pub fn slot(self, t: u64) -> usize {
        debug_assert!(t >= 1);
        ((t - 1) % self.0 as u64) as usize + 1
    }
}

impl TryFrom<usize> for Period {
    type Error = Error;
    fn try_from(t: usize) -> Result<Self> {
        Period::new(t)
    }
}

impl From<Period> for usize {
    fn from(p: Period) -> usize {
        p.0
    }
}

/// Closed bounding interval `[lo, hi]` for a record domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    lo: f64,
    hi: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;
    fn try_from(r: RawInterval) -> Result<Self> {
        Interval::new(r.lo, r.hi)
    }
}

impl From<Interval> for RawInterval {
    fn from(i: Interval) -> Self {
        RawInterval { lo: i.lo, hi: i.hi }
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn diameter(&self) -> f64 {
        self.hi - self.lo
    }

    /// Interval of all sums `a + b` with `a ∈ self`, `b ∈ other`.
    pub fn minkowski_sum(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Linear query `f(x) = Σ cᵢ xᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearQuery {
    weights: Vec<f64>,
}

impl LinearQuery {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteEntry { row: pos + 1, col: 1 });
        }
        Ok(Self { weights })
    }

    /// Averaging query over `n` series.
    pub fn mean(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn sum(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Largest weight magnitude.
    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Evaluates the query, summing in series order.
    pub fn apply(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(self.weights.iter().zip(x).map(|(c, v)| c * v).sum())
    }

    /// Query value at every instant of `data`, `f(x(1)), …, f(x(t))`.
    pub fn apply_columns(&self, data: &DatasetMatrix) -> Result<Vec<f64>> {
        if data.n() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: data.n(),
            });
        }
        let mut out = vec![0.0; data.t()];
        // Same accumulation order as `apply`: series 1 first.
        for (c, row) in self.weights.iter().zip(data.rows()) {
            for (acc, v) in out.iter_mut().zip(row) {
                *acc += c * v;
            }
        }
        Ok(out)
    }
}

/// Privacy budget `ε` together with the period it is spent over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    period: Period,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, period: Period) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::NonPositiveEpsilon(epsilon));
        }
        Ok(Self { epsilon, period })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn period(&self) -> Period {
        self.period
    }
}
