//! Differentially private continual reporting of linear queries on
//! almost-periodic time-series panels.
//!
//! A panel of `n` series is split into a periodic component and residuals
//! ([`decomposition`]), the residuals are checked for cross-period
//! correlation ([`periodicity`]), and linear queries are answered at every
//! instant by Laplace reporters whose privacy budget stays bounded over an
//! unbounded horizon ([`mechanism`]). [`evaluation`] measures utility and
//! audits the privacy bound empirically; [`datagen`] and [`ingestion`]
//! produce and load panels.

pub mod datagen;
pub mod decomposition;
pub mod error;
pub mod evaluation;
pub mod ingestion;
pub mod mechanism;
pub mod noise;
pub mod periodicity;
pub mod types;

pub use decomposition::{decompose, decompose_with_periodic, recompose, residual_blocks, Decomposition};
pub use error::{Error, Result};
pub use mechanism::{make_reporter, sensitivity_linear, Mechanism, ReporterConfig, ReporterState, Sensitivity};
pub use noise::{laplace_sample, NoiseRng};
pub use periodicity::{correlation_matrix, verdict, CorrelationReport, Thresholds, Verdict};
pub use types::{validate_dataset, DatasetMatrix, Interval, LinearQuery, Period, PrivacyParams};
