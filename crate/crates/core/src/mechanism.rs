//! Continual Laplace reporters for linear queries on almost-periodic panels.
//!
//! Three reporters share one state type:
//!
//! * [`Mechanism::TheoremOne`] protects the periodic component. During the
//!   first period it reports `f(x(t)) + v(t)` with `v ~ Laplace(T·Δf_z/ε)`.
//!   Afterwards it replays the noisy report of the same slot, corrected by
//!   the change in the residual aggregate:
//!   `y(t) = y(m) − f(w(m)) + f(w(t))`, `m = ((t−1) mod T) + 1`.
//!   Only `T` noise values are ever drawn, whatever the horizon.
//! * [`Mechanism::CorollaryOne`] runs the same recursion and adds fresh noise
//!   at every instant, with scale `T(Δf_z+Δf_w)/ε` in the first period and
//!   `T·Δf_w/ε` afterwards, so residual blocks are protected as well.
//! * [`Mechanism::BudgetSplitBaseline`] ignores periodicity and splits `ε`
//!   evenly over a fixed horizon `τ`: `y(t) = f(x(t)) + Laplace(τ·Δf_x/ε)`.
//!
//! Reports must be requested in order `t = 1, 2, 3, …`. The state serializes
//! to JSON, RNG included, so a reporting process can stop and resume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{laplace_from_uniform, NoiseRng};
use crate::types::{DatasetMatrix, Interval, LinearQuery, Period, PrivacyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    TheoremOne,
    CorollaryOne,
    BudgetSplitBaseline,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::TheoremOne,
        Mechanism::CorollaryOne,
        Mechanism::BudgetSplitBaseline,
    ];

    /// Short name used by the CLI and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::TheoremOne => "theorem1",
            Mechanism::CorollaryOne => "corollary1",
            Mechanism::BudgetSplitBaseline => "baseline",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mechanism {s:?}")))
    }
}

/// Sensitivities of a query over the periodic and residual domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub delta_f_z: f64,
    pub delta_f_w: f64,
}

/// Largest change of a linear query when one record moves within `domain`.
///
/// For `f = Σ cᵢxᵢ` the other records cancel, so the supremum is
/// `maxᵢ |cᵢ| · diameter`, attained at the interval endpoints.
pub fn interval_sensitivity(query: &LinearQuery, domain: &Interval) -> f64 {
    query.max_abs_weight() * domain.diameter()
}

pub fn sensitivity_linear(query: &LinearQuery, z_bounds: &Interval, w_bounds: &Interval) -> Sensitivity {
    Sensitivity {
        delta_f_z: interval_sensitivity(query, z_bounds),
        delta_f_w: interval_sensitivity(query, w_bounds),
    }
}

/// Everything needed to start a reporter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReporterConfig {
    pub query: LinearQuery,
    pub params: PrivacyParams,
    pub mechanism: Mechanism,
    pub z_bounds: Interval,
    pub w_bounds: Interval,
    pub seed: u64,
    /// Budgeted horizon `τ`; required by the baseline, ignored otherwise.
    pub horizon_tau: Option<u64>,
    /// Multiplies every noise scale. Anything other than 1 voids the privacy
    /// guarantee; used to audit the empirical checker.
    #[serde(default = "one")]
    pub noise_multiplier: f64,
}

fn one() -> f64 {
    1.0
}

impl ReporterConfig {
    pub fn new(
        query: LinearQuery,
        params: PrivacyParams,
        mechanism: Mechanism,
        z_bounds: Interval,
        w_bounds: Interval,
        seed: u64,
    ) -> Self {
        Self {
            query,
            params,
            mechanism,
            z_bounds,
            w_bounds,
            seed,
            horizon_tau: None,
            noise_multiplier: 1.0,
        }
    }

    pub fn with_horizon(mut self, tau: u64) -> Self {
        self.horizon_tau = Some(tau);
        self
    }

    pub fn with_noise_multiplier(mut self, m: f64) -> Self {
        self.noise_multiplier = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.params = PrivacyParams::new(epsilon, self.params.period())?;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReporterState {
    query: LinearQuery,
    params: PrivacyParams,
    mechanism: Mechanism,
    z_bounds: Interval,
    w_bounds: Interval,
    horizon_tau: Option<u64>,
    sensitivity: Sensitivity,
    /// Scale used for `t ≤ T` (every `t` for the baseline).
    first_period_scale: f64,
    /// Scale used for `t > T`; `None` when no fresh noise is added there.
    later_scale: Option<f64>,
    first_period_reports: Vec<f64>,
    first_period_residual_agg: Vec<f64>,
    rng: NoiseRng,
    next_t: u64,
    noise_draws: u64,
}

/// Builds a reporter with `next_t = 1` and precomputed noise scales.
pub fn make_reporter(config: ReporterConfig) -> Result<ReporterState> {
    ReporterState::new(config)
}

impl ReporterState {
    pub fn new(config: ReporterConfig) -> Result<Self> {
        let ReporterConfig {
            query,
            params,
            mechanism,
            z_bounds,
            w_bounds,
            seed,
            horizon_tau,
            noise_multiplier,
        } = config;
        let epsilon = params.epsilon();
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::NonPositiveEpsilon(epsilon));
        }
        if !(noise_multiplier.is_finite() && noise_multiplier >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise multiplier must be finite and nonnegative, got {noise_multiplier}"
            )));
        }
        let tp = params.period().get() as f64;
        let sensitivity = sensitivity_linear(&query, &z_bounds, &w_bounds);
        let Sensitivity { delta_f_z, delta_f_w } = sensitivity;
        let (first, later, horizon_tau) = match mechanism {
            Mechanism::TheoremOne => (tp * delta_f_z / epsilon, None, None),
            Mechanism::CorollaryOne => (
                tp * (delta_f_z + delta_f_w) / epsilon,
                Some(tp * delta_f_w / epsilon),
                None,
            ),
            Mechanism::BudgetSplitBaseline => {
                let tau = match horizon_tau {
                    Some(tau) if tau >= 1 => tau,
                    _ => return Err(Error::MissingHorizon),
                };
                let delta_f_x = interval_sensitivity(&query, &z_bounds.minkowski_sum(&w_bounds));
                (tau as f64 * delta_f_x / epsilon, None, Some(tau))
            }
        };
        let scale = |s: f64| if noise_multiplier == 1.0 { s } else { s * noise_multiplier };
        Ok(Self {
            first_period_scale: scale(first),
            later_scale: later.map(scale),
            first_period_reports: Vec::with_capacity(params.period().get()),
            first_period_residual_agg: Vec::with_capacity(params.period().get()),
            rng: NoiseRng::seed_from_u64(seed),
            next_t: 1,
            noise_draws: 0,
            query,
            params,
            mechanism,
            z_bounds,
            w_bounds,
            horizon_tau,
            sensitivity,
        })
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    pub fn query(&self) -> &LinearQuery {
        &self.query
    }

    pub fn params(&self) -> PrivacyParams {
        self.params
    }

    pub fn period(&self) -> Period {
        self.params.period()
    }

    pub fn sensitivity(&self) -> Sensitivity {
        self.sensitivity
    }

    pub fn next_t(&self) -> u64 {
        self.next_t
    }

    /// Number of Laplace values drawn so far.
    pub fn noise_draws(&self) -> u64 {
        self.noise_draws
    }

    pub fn first_period_reports(&self) -> &[f64] {
        &self.first_period_reports
    }

    pub fn first_period_residual_agg(&self) -> &[f64] {
        &self.first_period_residual_agg
    }

    /// Laplace scale applied at instant `t`; 0 when no noise is added.
    pub fn scale_at(&self, t: u64) -> f64 {
        match self.mechanism {
            Mechanism::BudgetSplitBaseline => self.first_period_scale,
            _ if t <= self.params.period().get() as u64 => self.first_period_scale,
            _ => self.later_scale.unwrap_or(0.0),
        }
    }

    /// Reports `y(t)` from the raw column `x(t)` and residual column `w(t)`.
    pub fn report(&mut self, t: u64, x_col: &[f64], w_col: &[f64]) -> Result<f64> {
        let n = self.query.n();
        for col in [x_col, w_col] {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: col.len(),
                });
            }
        }
        let fx = self.query.apply(x_col)?;
        let fw = self.query.apply(w_col)?;
        self.report_aggregates(t, fx, fw)
    }

    /// Same as [`report`](Self::report) with `f(x(t))` and `f(w(t))` already evaluated.
    pub fn report_aggregates(&mut self, t: u64, fx: f64, fw: f64) -> Result<f64> {
        if t != self.next_t {
            return Err(Error::OutOfOrderReport {
                expected: self.next_t,
                got: t,
            });
        }
        let tp = self.params.period().get() as u64;
        let y = match self.mechanism {
            Mechanism::BudgetSplitBaseline => {
                let tau = self.horizon_tau.ok_or(Error::MissingHorizon)?;
                if t > tau {
                    return Err(Error::HorizonExceeded { t, horizon: tau });
                }
                fx + self.draw(self.first_period_scale)
            }
            _ if t <= tp => {
                let y = fx + self.draw(self.first_period_scale);
                self.first_period_reports.push(y);
                self.first_period_residual_agg.push(fw);
                y
            }
            mech => {
                let m = self.params.period().slot(t) - 1;
                let replay = self.first_period_reports[m] - self.first_period_residual_agg[m] + fw;
                match (mech, self.later_scale) {
                    (Mechanism::CorollaryOne, Some(b)) => replay + self.draw(b),
                    _ => replay,
                }
            }
        };
        self.next_t += 1;
        Ok(y)
    }

    /// Reports every instant of a panel in order, starting from `next_t`.
    pub fn report_panel(&mut self, data: &DatasetMatrix, residual: &DatasetMatrix) -> Result<Vec<f64>> {
        if data.t() != residual.t() {
            return Err(Error::DimensionMismatch {
                expected: data.t(),
                got: residual.t(),
            });
        }
        let fx = self.query.apply_columns(data)?;
        let fw = self.query.apply_columns(residual)?;
        self.report_aggregate_series(&fx, &fw)
    }

    pub fn report_aggregate_series(&mut self, fx: &[f64], fw: &[f64]) -> Result<Vec<f64>> {
        fx.iter()
            .zip(fw)
            .map(|(x, w)| {
                let t = self.next_t;
                self.report_aggregates(t, *x, *w)
            })
            .collect()
    }

    fn draw(&mut self, scale: f64) -> f64 {
        self.noise_draws += 1;
        laplace_from_uniform(scale, self.rng.centered_uniform())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Restores a snapshot written by [`to_json`](Self::to_json).
    pub fn from_json(s: &str) -> Result<Self> {
        let state: Self = serde_json::from_str(s)?;
        let tp = state.params.period().get();
        let recorded = state.first_period_reports.len();
        let expected = match state.mechanism {
            Mechanism::BudgetSplitBaseline => 0,
            _ => (state.next_t.saturating_sub(1) as usize).min(tp),
        };
        if state.next_t == 0 || recorded != expected || state.first_period_residual_agg.len() != recorded {
            return Err(Error::Serialization("inconsistent reporter snapshot".into()));
        }
        if state.mechanism == Mechanism::BudgetSplitBaseline && state.horizon_tau.is_none() {
            return Err(Error::MissingHorizon);
        }
        Ok(state)
    }
}
