//! Synthetic panels: almost-periodic series and a correlated negative control.
//!
//! Every `(series, period)` pair gets its own RNG substream derived from the
//! seed, so output does not depend on generation order.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::noise::{mix64, NoiseRng};
use crate::types::{DatasetMatrix, Interval};

/// A generated panel together with the periodic component it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanel {
    pub data: DatasetMatrix,
    /// `n × T` periodic component used during generation.
    pub periodic: DatasetMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriodicParams {
    pub n: usize,
    pub num_periods: usize,
    pub period: usize,
    pub sine_amplitude: f64,
    pub block_const_range: Interval,
    pub uniform_noise_range: Interval,
}

impl AlmostPeriodicParams {
    pub fn new(n: usize, num_periods: usize, period: usize) -> Self {
        Self {
            n,
            num_periods,
            period,
            sine_amplitude: 1.0,
            block_const_range: Interval::new(-0.3, 0.3).expect("valid"),
            uniform_noise_range: Interval::new(-0.1, 0.1).expect("valid"),
        }
    }
}

fn substream(seed: u64, series: usize, period: usize) -> NoiseRng {
    NoiseRng::seed_from_u64(mix64(mix64(mix64(seed) ^ series as u64) ^ period as u64))
}

fn check_shape(n: usize, num_periods: usize, period: usize) -> Result<()> {
    if n == 0 || num_periods == 0 || period == 0 {
        return Err(Error::InvalidArgument(format!(
            "n, num_periods and T must be positive (got {n}, {num_periods}, {period})"
        )));
    }
    Ok(())
}

/// `A·sin(2π·s/T)` for slots `s = 0..T`, repeated for every series.
fn sine_periodic(n: usize, period: usize, amplitude: f64) -> DatasetMatrix {
    let slot: Vec<f64> = (0..period)
        .map(|s| amplitude * (2.0 * PI * s as f64 / period as f64).sin())
        .collect();
    DatasetMatrix::from_parts_unchecked(n, period, slot.repeat(n))
}

fn uniform(rng: &mut NoiseRng, range: &Interval) -> f64 {
    if range.diameter() == 0.0 {
        range.lo()
    } else {
        rng.uniform_in(range.lo(), range.hi())
    }
}

/// Sinusoid plus, per period, a random constant offset and smaller
/// per-instant uniform noise. Residual blocks are independent across periods.
pub fn gen_almost_periodic(params: &AlmostPeriodicParams, seed: u64) -> Result<SyntheticPanel> {
    let AlmostPeriodicParams {
        n,
        num_periods,
        period,
        sine_amplitude,
        ref block_const_range,
        ref uniform_noise_range,
    } = *params;
    check_shape(n, num_periods, period)?;
    let periodic = sine_periodic(n, period, sine_amplitude);
    let t = num_periods * period;
    let mut values = Vec::with_capacity(n * t);
    for i in 0..n {
        let z = periodic.row(i);
        for k in 0..num_periods {
            let mut rng = substream(seed, i, k + 1);
            let c = uniform(&mut rng, block_const_range);
            values.extend(z.iter().map(|z| z + c + uniform(&mut rng, uniform_noise_range)));
        }
    }
    Ok(SyntheticPanel {
        data: DatasetMatrix::new(n, t, values)?,
        periodic,
    })
}

/// Negative control: each series' residual block is a random walk across
/// periods with a persistent per-series drift, so block `k + 1` is block `k`
/// plus a small increment. Consecutive blocks are almost perfectly correlated.
///
/// With `num_periods = 1` there is no cross-period pair and the output is a
/// single random block on top of the sinusoid.
pub fn gen_correlated_counterexample(n: usize, num_periods: usize, period: usize, seed: u64) -> Result<SyntheticPanel> {
    check_shape(n, num_periods, period)?;
    let periodic = sine_periodic(n, period, 1.0);
    let t = num_periods * period;
    let mut values = Vec::with_capacity(n * t);
    for i in 0..n {
        let z = periodic.row(i);
        let mut rng = substream(seed, i, 0);
        let mut block: Vec<f64> = (0..period).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let drift: Vec<f64> = (0..period).map(|_| rng.uniform_in(-0.02, 0.02)).collect();
        for k in 0..num_periods {
            if k > 0 {
                let mut step = substream(seed, i, k);
                for (b, d) in block.iter_mut().zip(&drift) {
                    *b += d + step.uniform_in(-0.005, 0.005);
                }
            }
            values.extend(z.iter().zip(&block).map(|(z, b)| z + b));
        }
    }
    Ok(SyntheticPanel {
        data: DatasetMatrix::new(n, t, values)?,
        periodic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, decompose_with_periodic};
    use crate::periodicity::correlation_from_decomposition;
    use crate::types::Period;

    #[test]
    fn noiseless_sinusoid_is_exactly_periodic() {
        let mut p = AlmostPeriodicParams::new(2, 4, 10);
        p.block_const_range = Interval::new(0.0, 0.0).unwrap();
        p.uniform_noise_range = Interval::new(0.0, 0.0).unwrap();
        let panel = gen_almost_periodic(&p, 9).unwrap();
        let dec = decompose(&panel.data, Period::new(10).unwrap()).unwrap();
        for (a, b) in dec.periodic().values().iter().zip(panel.periodic.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(dec.residual().values().iter().all(|w| w.abs() < 1e-12));
        assert!((panel.data.get(0, 0)).abs() < 1e-15);
        assert!((panel.data.get(0, 2) - (2.0 * PI * 0.2).sin()).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_zero_noise_is_all_zero() {
        let mut p = AlmostPeriodicParams::new(3, 2, 4);
        p.sine_amplitude = 0.0;
        p.block_const_range = Interval::new(0.0, 0.0).unwrap();
        p.uniform_noise_range = Interval::new(0.0, 0.0).unwrap();
        let panel = gen_almost_periodic(&p, 1).unwrap();
        assert!(panel.data.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn same_seed_same_panel() {
        let p = AlmostPeriodicParams::new(5, 3, 4);
        assert_eq!(gen_almost_periodic(&p, 3).unwrap(), gen_almost_periodic(&p, 3).unwrap());
        assert_ne!(gen_almost_periodic(&p, 3).unwrap(), gen_almost_periodic(&p, 4).unwrap());
        assert_eq!(
            gen_correlated_counterexample(4, 3, 5, 8).unwrap(),
            gen_correlated_counterexample(4, 3, 5, 8).unwrap()
        );
    }

    #[test]
    fn residuals_stay_in_configured_ranges() {
        let p = AlmostPeriodicParams::new(4, 6, 5);
        let panel = gen_almost_periodic(&p, 12).unwrap();
        let dec = decompose_with_periodic(&panel.data, &panel.periodic).unwrap();
        assert!(dec.residual().values().iter().all(|w| w.abs() <= 0.4 + 1e-12));
    }

    #[test]
    fn counterexample_single_period() {
        let panel = gen_correlated_counterexample(3, 1, 4, 2).unwrap();
        assert_eq!((panel.data.n(), panel.data.t()), (3, 4));
        assert!(gen_correlated_counterexample(0, 1, 4, 2).is_err());
    }

    #[test]
    fn counterexample_adjacent_blocks_correlate() {
        let panel = gen_correlated_counterexample(40, 6, 5, 21).unwrap();
        let dec = decompose_with_periodic(&panel.data, &panel.periodic).unwrap();
        let r = correlation_from_decomposition(&dec).unwrap();
        for k in 0..5 {
            assert!(r.rho[k][k + 1] >= 0.99, "rho {} {}", k, r.rho[k][k + 1]);
        }
    }
}
