//! Periodic/residual split of a panel.
//!
//! The periodic component of each series is its per-slot average over all
//! complete periods. A trailing partial period does not contribute to that
//! average but still gets residuals. [`decompose_with_periodic`] accepts a
//! periodic component estimated elsewhere (for example on calibration data)
//! and only computes residuals.
//!
//! Estimating the periodic component from the full horizon reads the private
//! data; the privacy guarantees of the reporters do not cover that step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{DatasetMatrix, Period};

/// Periodic component `z` (`n × T`) and residuals `w` (`n × t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    period: Period,
    periodic: DatasetMatrix,
    residual: DatasetMatrix,
}

impl Decomposition {
    pub fn from_parts(period: Period, periodic: DatasetMatrix, residual: DatasetMatrix) -> Result<Self> {
        if periodic.t() != period.get() {
            return Err(Error::DimensionMismatch {
                expected: period.get(),
                got: periodic.t(),
            });
        }
        if periodic.n() != residual.n() {
            return Err(Error::DimensionMismatch {
                expected: periodic.n(),
                got: residual.n(),
            });
        }
        Ok(Self {
            period,
            periodic,
            residual,
        })
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn periodic(&self) -> &DatasetMatrix {
        &self.periodic
    }

    pub fn residual(&self) -> &DatasetMatrix {
        &self.residual
    }

    pub fn n(&self) -> usize {
        self.residual.n()
    }

    pub fn horizon(&self) -> usize {
        self.residual.t()
    }

    /// Number of complete periods in the horizon.
    pub fn complete_periods(&self) -> usize {
        self.horizon() / self.period.get()
    }
}

/// Splits `data` into per-slot means over complete periods and residuals.
pub fn decompose(data: &DatasetMatrix, period: Period) -> Result<Decomposition> {
    let tp = period.get();
    if data.t() < tp {
        return Err(Error::HorizonShorterThanPeriod {
            horizon: data.t(),
            period: tp,
        });
    }
    let k = data.t() / tp;
    let mut z = Vec::with_capacity(data.n() * tp);
    for row in data.rows() {
        let mut acc = vec![0.0; tp];
        for block in row.chunks_exact(tp).take(k) {
            for (a, v) in acc.iter_mut().zip(block) {
                *a += v;
            }
        }
        z.extend(acc.into_iter().map(|s| s / k as f64));
    }
    let periodic = DatasetMatrix::from_parts_unchecked(data.n(), tp, z);
    decompose_with_periodic(data, &periodic)
}

/// Residuals of `data` against a supplied `n × T` periodic component.
pub fn decompose_with_periodic(data: &DatasetMatrix, periodic: &DatasetMatrix) -> Result<Decomposition> {
    if periodic.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            got: periodic.n(),
        });
    }
    let period = Period::new(periodic.t())?;
    let tp = period.get();
    let mut w = Vec::with_capacity(data.n() * data.t());
    for (row, z) in data.rows().zip(periodic.rows()) {
        w.extend(row.iter().enumerate().map(|(c, x)| x - z[c % tp]));
    }
    let residual = DatasetMatrix::new(data.n(), data.t(), w)?;
    Decomposition::from_parts(period, periodic.clone(), residual)
}

/// `x(t) = z(((t-1) mod T) + 1) + w(t)`.
pub fn recompose(dec: &Decomposition) -> DatasetMatrix {
    let tp = dec.period.get();
    let (n, t) = (dec.n(), dec.horizon());
    let mut x = Vec::with_capacity(n * t);
    for (z, w) in dec.periodic.rows().zip(dec.residual.rows()) {
        x.extend(w.iter().enumerate().map(|(c, w)| z[c % tp] + w));
    }
    DatasetMatrix::from_parts_unchecked(n, t, x)
}

/// Residual blocks `w_k`, one `n × T` matrix per complete period.
pub fn residual_blocks(dec: &Decomposition) -> Vec<DatasetMatrix> {
    let tp = dec.period.get();
    let n = dec.n();
    (0..dec.complete_periods())
        .map(|k| {
            let values = dec
                .residual
                .rows()
                .flat_map(|r| r[k * tp..(k + 1) * tp].iter().copied())
                .collect();
            DatasetMatrix::from_parts_unchecked(n, tp, values)
        })
        .collect()
}
