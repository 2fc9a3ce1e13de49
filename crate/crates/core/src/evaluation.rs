//! Utility metrics and an empirical privacy audit.
//!
//! Relative error is the RMS report error divided by the peak true query
//! value. Its expectation is estimated by averaging over independent runs
//! and over the horizon. Run `r` uses seed `base_seed + r`; results are
//! accumulated in run order so reported numbers are reproducible.
//!
//! [`empirical_dp_check`] estimates output probabilities of a reporter on two
//! neighbouring panels over a grid of bins and compares them. It is a
//! statistical audit on tiny instances, not a proof.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{recompose, Decomposition};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, ReporterConfig, ReporterState};
use crate::types::{DatasetMatrix, LinearQuery};

/// `sqrt(mean |y − f|²) / max |f|` over all runs and instants.
pub fn relative_error(reports: &[Vec<f64>], truths: &[f64]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let peak = peak_abs(truths)?;
    let mut sq = 0.0;
    for run in reports {
        if run.len() != truths.len() {
            return Err(Error::DimensionMismatch {
                expected: truths.len(),
                got: run.len(),
            });
        }
        sq += run.iter().zip(truths).map(|(y, f)| (y - f) * (y - f)).sum::<f64>();
    }
    Ok((sq / (reports.len() * truths.len()) as f64).sqrt() / peak)
}

fn peak_abs(truths: &[f64]) -> Result<f64> {
    let peak = truths.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if peak > 0.0 {
        Ok(peak)
    } else {
        Err(Error::ZeroDenominator)
    }
}

/// Query aggregates `f(x(t))` and `f(w(t))` over a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySeries {
    pub truth: Vec<f64>,
    pub residual: Vec<f64>,
}

impl QuerySeries {
    pub fn new(query: &LinearQuery, data: &DatasetMatrix, residual: &DatasetMatrix) -> Result<Self> {
        if data.t() != residual.t() {
            return Err(Error::DimensionMismatch {
                expected: data.t(),
                got: residual.t(),
            });
        }
        Ok(Self {
            truth: query.apply_columns(data)?,
            residual: query.apply_columns(residual)?,
        })
    }

    pub fn horizon(&self) -> usize {
        self.truth.len()
    }
}

/// One full reporting run over the series.
pub fn run_reporter(config: &ReporterConfig, series: &QuerySeries) -> Result<Vec<f64>> {
    ReporterState::new(config.clone())?.report_aggregate_series(&series.truth, &series.residual)
}

/// Monte-Carlo relative error of one configuration over `runs` seeds.
pub fn monte_carlo_relative_error(config: &ReporterConfig, series: &QuerySeries, runs: usize) -> Result<f64> {
    if runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let peak = peak_abs(&series.truth)?;
    let per_run: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = config.clone().with_seed(config.seed.wrapping_add(r as u64));
            let y = run_reporter(&cfg, series)?;
            Ok(y.iter().zip(&series.truth).map(|(y, f)| (y - f) * (y - f)).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    let sq: f64 = per_run.iter().sum();
    Ok((sq / (runs * series.horizon()) as f64).sqrt() / peak)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epsilon: f64,
    pub mechanism: Mechanism,
    pub relative_error: f64,
}

/// Relative error for every `(mechanism, ε)` pair, mechanisms in input order.
///
/// The epsilon carried by each config is replaced by each entry of
/// `epsilons`. A baseline without an explicit horizon uses the panel length.
pub fn error_vs_epsilon_curve(
    configs: &[ReporterConfig],
    series: &QuerySeries,
    epsilons: &[f64],
    runs: usize,
) -> Result<Vec<CurveRow>> {
    if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::NonPositiveEpsilon(*e));
    }
    let mut rows = Vec::with_capacity(configs.len() * epsilons.len());
    for cfg in configs {
        let mut cfg = cfg.clone();
        if cfg.mechanism == Mechanism::BudgetSplitBaseline && cfg.horizon_tau.is_none() {
            cfg.horizon_tau = Some(series.horizon() as u64);
        }
        for &eps in epsilons {
            let c = cfg.clone().with_epsilon(eps)?;
            rows.push(CurveRow {
                epsilon: eps,
                mechanism: c.mechanism,
                relative_error: monte_carlo_relative_error(&c, series, runs)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_curve_csv(mut out: impl Write, rows: &[CurveRow]) -> Result<()> {
    writeln!(out, "epsilon,mechanism,relative_error")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.epsilon, r.mechanism.name(), r.relative_error)?;
    }
    Ok(())
}

pub fn write_curve_csv_file(path: impl AsRef<Path>, rows: &[CurveRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_curve_csv(&mut f, rows)?;
    f.flush()?;
    Ok(())
}

/// Which neighbourhood relation the two audited panels satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighbourKind {
    /// Differ in one series' periodic component only.
    Definition2,
    /// Additionally allows one series to differ in a single residual block.
    Definition4,
}

/// Checks that two decompositions are neighbours of the given kind.
pub fn check_neighbours(a: &Decomposition, b: &Decomposition, kind: NeighbourKind) -> Result<()> {
    if a.period() != b.period() || a.n() != b.n() || a.horizon() != b.horizon() {
        return Err(Error::NotNeighbours("shapes differ".into()));
    }
    let tp = a.period().get();
    let differing: Vec<usize> = (0..a.n())
        .filter(|&i| a.periodic().row(i) != b.periodic().row(i) || a.residual().row(i) != b.residual().row(i))
        .collect();
    if differing.len() > 1 {
        return Err(Error::NotNeighbours(format!("{} series differ", differing.len())));
    }
    let Some(&i) = differing.first() else {
        return Ok(());
    };
    let z_same = a.periodic().row(i) == b.periodic().row(i);
    let (wa, wb) = (a.residual().row(i), b.residual().row(i));
    let blocks_differing = wa
        .chunks(tp)
        .zip(wb.chunks(tp))
        .filter(|(x, y)| x != y)
        .count();
    let ok = match kind {
        NeighbourKind::Definition2 => blocks_differing == 0,
        NeighbourKind::Definition4 => blocks_differing == 0 || (z_same && blocks_differing == 1),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotNeighbours(format!(
            "series {} differs in {} residual block(s){}",
            i + 1,
            blocks_differing,
            if z_same { "" } else { " and in its periodic component" }
        )))
    }
}

/// Copy of `dec` with `delta[s]` added to slot `s` of series `series`' periodic component.
pub fn perturb_periodic(dec: &Decomposition, series: usize, delta: &[f64]) -> Result<Decomposition> {
    let tp = dec.period().get();
    if delta.len() != tp || series >= dec.n() {
        return Err(Error::DimensionMismatch { expected: tp, got: delta.len() });
    }
    let mut z = dec.periodic().values().to_vec();
    for (v, d) in z[series * tp..(series + 1) * tp].iter_mut().zip(delta) {
        *v += d;
    }
    Decomposition::from_parts(dec.period(), DatasetMatrix::new(dec.n(), tp, z)?, dec.residual().clone())
}

/// Copy of `dec` with `delta` added to residual block `block` (1-based) of one series.
pub fn perturb_residual_block(dec: &Decomposition, series: usize, block: usize, delta: &[f64]) -> Result<Decomposition> {
    let tp = dec.period().get();
    let t = dec.horizon();
    if series >= dec.n() || block == 0 || (block - 1) * tp >= t {
        return Err(Error::InvalidArgument(format!("no residual block {block} for series {}", series + 1)));
    }
    let start = (block - 1) * tp;
    let end = (start + tp).min(t);
    if delta.len() != end - start {
        return Err(Error::DimensionMismatch {
            expected: end - start,
            got: delta.len(),
        });
    }
    let mut w = dec.residual().values().to_vec();
    for (v, d) in w[series * t + start..series * t + end].iter_mut().zip(delta) {
        *v += d;
    }
    Decomposition::from_parts(dec.period(), dec.periodic().clone(), DatasetMatrix::new(dec.n(), t, w)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpCheckOptions {
    /// Monte-Carlo runs per side.
    pub trials: usize,
    /// Bins per report coordinate.
    pub bins: usize,
    /// Minimum count on both sides for a bin to enter the ratio.
    pub count_floor: u64,
    pub seed: u64,
}

impl Default for DpCheckOptions {
    fn default() -> Self {
        Self {
            trials: 200_000,
            bins: 8,
            count_floor: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpCheckResult {
    pub max_log_ratio: f64,
    /// Estimated standard error of the log ratio in the bin attaining the max.
    pub standard_error: f64,
    pub epsilon: f64,
    /// Every qualifying bin satisfies `|log ratio| ≤ ε + 3·SE`.
    pub pass: bool,
    pub bins_compared: usize,
}

/// Estimates `max_B |log P(Y∈B|X)/P(Y∈B|X')|` for the joint report vector.
///
/// Bin edges per coordinate are pooled quantiles of an independent pilot
/// sample, with open outer bins. Both sides use the same edges. Side `X`
/// uses seeds `seed + r`, side `X'` uses `seed + trials + r`.
pub fn empirical_dp_check(
    config: &ReporterConfig,
    x: &Decomposition,
    x_neighbour: &Decomposition,
    kind: NeighbourKind,
    epsilon: f64,
    options: &DpCheckOptions,
) -> Result<DpCheckResult> {
    check_neighbours(x, x_neighbour, kind)?;
    if options.trials == 0 || options.bins == 0 {
        return Err(Error::InvalidArgument("trials and bins must be positive".into()));
    }
    let config = config.clone().with_epsilon(epsilon)?;
    let series = |d: &Decomposition| QuerySeries::new(&config.query, &recompose(d), d.residual());
    let (sa, sb) = (series(x)?, series(x_neighbour)?);
    let n = options.trials as u64;
    let base = options.seed;

    let sample = |s: &QuerySeries, offset: u64, count: u64| -> Result<Vec<Vec<f64>>> {
        (0..count)
            .into_par_iter()
            .map(|r| run_reporter(&config.clone().with_seed(base.wrapping_add(offset + r)), s))
            .collect()
    };

    let pilot_n = (n / 10).clamp(1, 20_000);
    let mut pilot = sample(&sa, 2 * n, pilot_n)?;
    pilot.extend(sample(&sb, 2 * n + pilot_n, pilot_n)?);
    let edges = quantile_edges(&pilot, options.bins);

    let counts = |s: &QuerySeries, offset: u64| -> Result<HashMap<Vec<u16>, u64>> {
        let keys: Vec<Vec<u16>> = sample(s, offset, n)?.iter().map(|y| bin_key(y, &edges)).collect();
        let mut m = HashMap::new();
        for k in keys {
            *m.entry(k).or_insert(0) += 1;
        }
        Ok(m)
    };
    let ca = counts(&sa, 0)?;
    let cb = counts(&sb, n)?;

    let total = n as f64;
    let mut max_lr = 0.0f64;
    let mut se_at_max = 0.0;
    let mut pass = true;
    let mut compared = 0;
    let mut keys: Vec<&Vec<u16>> = ca.keys().collect();
    keys.sort();
    for key in keys {
        let a = ca[key];
        let Some(&b) = cb.get(key) else { continue };
        if a < options.count_floor || b < options.count_floor {
            continue;
        }
        compared += 1;
        let (pa, pb) = (a as f64 / total, b as f64 / total);
        let lr = (pa / pb).ln().abs();
        let se = ((1.0 - pa) / a as f64 + (1.0 - pb) / b as f64).sqrt();
        if lr > epsilon + 3.0 * se {
            pass = false;
        }
        if lr > max_lr || compared == 1 {
            max_lr = lr;
            se_at_max = se;
        }
    }
    if compared == 0 {
        return Err(Error::InsufficientCounts {
            floor: options.count_floor,
        });
    }
    Ok(DpCheckResult {
        max_log_ratio: max_lr,
        standard_error: se_at_max,
        epsilon,
        pass,
        bins_compared: compared,
    })
}

/// Interior bin edges per coordinate from pooled sample quantiles.
fn quantile_edges(samples: &[Vec<f64>], bins: usize) -> Vec<Vec<f64>> {
    let dim = samples.first().map_or(0, Vec::len);
    (0..dim)
        .map(|d| {
            let mut col: Vec<f64> = samples.iter().map(|y| y[d]).collect();
            col.sort_by(f64::total_cmp);
            let mut e: Vec<f64> = (1..bins).map(|q| col[q * col.len() / bins]).collect();
            e.dedup();
            e
        })
        .collect()
}

fn bin_key(y: &[f64], edges: &[Vec<f64>]) -> Vec<u16> {
    y.iter()
        .zip(edges)
        .map(|(v, e)| e.partition_point(|edge| edge <= v) as u16)
        .collect()
}

pub fn write_dp_check_csv(mut out: impl Write, rows: &[(String, DpCheckResult)]) -> Result<()> {
    writeln!(out, "check,max_log_ratio,epsilon,pass")?;
    for (name, r) in rows {
        writeln!(out, "{},{},{},{}", name, r.max_log_ratio, r.epsilon, r.pass)?;
    }
    Ok(())
}
