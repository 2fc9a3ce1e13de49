//! Cross-period Pearson correlation of residual blocks.
//!
//! Each realization (one household, one series) contributes `K` residual
//! blocks of length `T`. For every pair of periods `(k, l)` the blocks are
//! centered on their across-realization mean and correlated:
//!
//! ```text
//! ρ_kl = 1/(J-1) · Σ_j (w_k^j - μ_k)·(w_l^j - μ_l) / (σ_k σ_l)
//! ```
//!
//! Small off-diagonal magnitudes are evidence that residual blocks are
//! uncorrelated across periods, which is what the continual reporters rely on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConsistentWithAlmostPeriodicity,
    Inconclusive,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub accept_max: f64,
    pub reject_median: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            accept_max: 0.5,
            reject_median: 0.5,
        }
    }
}

/// Histogram of off-diagonal `|ρ_kl|` over `[0, 1]`, counts in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub percent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub rho: Vec<Vec<f64>>,
    pub max_offdiag: f64,
    pub median_offdiag: f64,
    pub histogram: Histogram,
    pub verdict: Verdict,
}

impl CorrelationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Re-evaluates the verdict under other thresholds.
    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Result<Self> {
        self.verdict = verdict(&self, thresholds)?;
        Ok(self)
    }

    fn offdiag_magnitudes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k * self.k.saturating_sub(1));
        for (a, row) in self.rho.iter().enumerate() {
            for (b, r) in row.iter().enumerate() {
                if a != b {
                    out.push(r.abs());
                }
            }
        }
        out
    }
}

/// Correlation matrix from `blocks[j][k]`, the length-`T` residual block of
/// period `k` in realization `j`. Verdict uses [`Thresholds::default`].
pub fn correlation_matrix<B: AsRef<[f64]>>(blocks: &[Vec<B>]) -> Result<CorrelationReport> {
    let j_count = blocks.len();
    if j_count < 2 {
        return Err(Error::TooFewRealizations { got: j_count });
    }
    let k_count = blocks[0].len();
    if k_count == 0 {
        return Err(Error::EmptyDataset);
    }
    let tp = blocks[0][0].as_ref().len();
    for realization in blocks {
        if realization.len() != k_count {
            return Err(Error::DimensionMismatch {
                expected: k_count,
                got: realization.len(),
            });
        }
        if let Some(b) = realization.iter().find(|b| b.as_ref().len() != tp) {
            return Err(Error::DimensionMismatch {
                expected: tp,
                got: b.as_ref().len(),
            });
        }
    }

    let denom = (j_count - 1) as f64;
    // centered[k] holds (w_k^j - μ_k) for every j, laid out j-major.
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(k_count);
    let mut sigma = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let mut mu = vec![0.0; tp];
        for realization in blocks {
            for (m, v) in mu.iter_mut().zip(realization[k].as_ref()) {
                *m += v;
            }
        }
        for m in &mut mu {
            *m /= j_count as f64;
        }
        let mut c = Vec::with_capacity(j_count * tp);
        let mut scale = 0.0f64;
        for realization in blocks {
            for (v, m) in realization[k].as_ref().iter().zip(&mu) {
                c.push(v - m);
                scale = scale.max(v.abs());
            }
        }
        let var = c.iter().map(|d| d * d).sum::<f64>() / denom;
        let s = var.sqrt();
        if !(s > 1e-12 * scale) {
            return Err(Error::DegenerateBlock { period: k + 1 });
        }
        centered.push(c);
        sigma.push(s);
    }

    let rho: Vec<Vec<f64>> = (0..k_count)
        .into_par_iter()
        .map(|k| {
            (0..k_count)
                .map(|l| {
                    if k == l {
                        return 1.0;
                    }
                    // Symmetric entries are evaluated with the smaller index first.
                    let (a, b) = if k < l { (k, l) } else { (l, k) };
                    let mut acc = 0.0;
                    for (ca, cb) in centered[a].chunks_exact(tp).zip(centered[b].chunks_exact(tp)) {
                        let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                        acc += dot;
                    }
                    (acc / denom / (sigma[a] * sigma[b])).clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();

    let mut report = CorrelationReport {
        k: k_count,
        rho,
        max_offdiag: 0.0,
        median_offdiag: 0.0,
        histogram: Histogram {
            edges: Vec::new(),
            percent: Vec::new(),
        },
        verdict: Verdict::Inconclusive,
    };
    let mags = report.offdiag_magnitudes();
    report.max_offdiag = mags.iter().copied().fold(0.0, f64::max);
    report.median_offdiag = median(&mags);
    report.histogram = histogram(&mags);
    report.verdict = verdict(&report, Thresholds::default())?;
    Ok(report)
}

/// Runs the test on a decomposed panel, one realization per series.
pub fn correlation_from_decomposition(dec: &Decomposition) -> Result<CorrelationReport> {
    let tp = dec.period().get();
    let k = dec.complete_periods();
    let blocks: Vec<Vec<&[f64]>> = dec
        .residual()
        .rows()
        .map(|r| (0..k).map(|p| &r[p * tp..(p + 1) * tp]).collect())
        .collect();
    correlation_matrix(&blocks)
}

pub fn verdict(report: &CorrelationReport, thresholds: Thresholds) -> Result<Verdict> {
    let Thresholds {
        accept_max,
        reject_median,
    } = thresholds;
    if !(accept_max > 0.0 && reject_median > 0.0) {
        return Err(Error::InvalidThresholds {
            accept_max,
            reject_median,
        });
    }
    // A single period carries no cross-period evidence.
    if report.k < 2 {
        return Ok(Verdict::Inconclusive);
    }
    Ok(if report.max_offdiag < accept_max {
        Verdict::ConsistentWithAlmostPeriodicity
    } else if report.median_offdiag > reject_median {
        Verdict::Inconsistent
    } else {
        Verdict::Inconclusive
    })
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn histogram(mags: &[f64]) -> Histogram {
    let edges = (0..=HISTOGRAM_BINS).map(|b| b as f64 / HISTOGRAM_BINS as f64).collect();
    let mut counts = [0usize; HISTOGRAM_BINS];
    for m in mags {
        let b = ((m * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    let total = mags.len().max(1) as f64;
    Histogram {
        edges,
        percent: counts.iter().map(|c| 100.0 * *c as f64 / total).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with(max: f64, median: f64) -> CorrelationReport {
        CorrelationReport {
            k: 3,
            rho: vec![],
            max_offdiag: max,
            median_offdiag: median,
            histogram: histogram(&[]),
            verdict: Verdict::Inconclusive,
        }
    }

    #[test]
    fn verdict_thresholds() {
        let t = Thresholds::default();
        assert_eq!(verdict(&report_with(0.12, 0.05), t).unwrap(), Verdict::ConsistentWithAlmostPeriodicity);
        assert_eq!(verdict(&report_with(0.9, 0.8), t).unwrap(), Verdict::Inconsistent);
        assert_eq!(verdict(&report_with(0.6, 0.2), t).unwrap(), Verdict::Inconclusive);
        let bad = Thresholds {
            accept_max: 0.0,
            reject_median: 0.5,
        };
        assert!(matches!(verdict(&report_with(0.1, 0.1), bad), Err(Error::InvalidThresholds { .. })));
    }

    #[test]
    fn identical_realizations_are_degenerate() {
        let block_a = vec![1.0, 2.0];
        let block_b = vec![-3.0, 0.5];
        let blocks = vec![vec![block_a.clone(), block_b.clone()]; 3];
        assert_eq!(correlation_matrix(&blocks).unwrap_err(), Error::DegenerateBlock { period: 1 });
    }

    #[test]
    fn too_few_realizations() {
        let blocks = vec![vec![vec![1.0, 2.0]]];
        assert_eq!(correlation_matrix(&blocks).unwrap_err(), Error::TooFewRealizations { got: 1 });
    }

    #[test]
    fn diagonal_is_one_and_matrix_symmetric() {
        let blocks = vec![
            vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 0.0]],
            vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 2.0]],
            vec![vec![3.0, 1.0], vec![0.0, -1.0], vec![2.0, 0.0]],
        ];
        let r = correlation_matrix(&blocks).unwrap();
        for k in 0..3 {
            assert_eq!(r.rho[k][k], 1.0);
            for l in 0..3 {
                assert_eq!(r.rho[k][l], r.rho[l][k]);
                assert!(r.rho[k][l].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn median_and_histogram() {
        assert_eq!(median(&[0.3, 0.1, 0.2]), 0.2);
        assert_eq!(median(&[0.4, 0.1, 0.2, 0.3]), 0.25);
        let h = histogram(&[0.0, 0.01, 1.0, 0.5]);
        assert_eq!(h.edges.len(), 21);
        assert_eq!(h.percent[0], 50.0);
        assert_eq!(h.percent[10], 25.0);
        assert_eq!(h.percent[19], 25.0);
    }

    #[test]
    fn json_shape() {
        let blocks = vec![
            vec![vec![1.0, 0.0], vec![2.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 1.5]],
            vec![vec![3.0, 1.0], vec![0.0, -1.0]],
        ];
        let json: serde_json::Value = serde_json::from_str(&correlation_matrix(&blocks).unwrap().to_json().unwrap()).unwrap();
        for key in ["K", "rho", "max_offdiag", "median_offdiag", "histogram", "verdict"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["K"], 2);
        assert!(json["histogram"]["edges"].is_array());
        assert!(json["histogram"]["percent"].is_array());
    }
}
