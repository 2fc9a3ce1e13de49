use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use apdp::datagen::{gen_almost_periodic, gen_correlated_counterexample, AlmostPeriodicParams};
use apdp::evaluation::{error_vs_epsilon_curve, write_curve_csv_file, QuerySeries};
use apdp::ingestion::{
    default_series_ids, load_wide_csv, sidecar_path, write_series_index, write_wide_csv, LoadOptions,
};
use apdp::periodicity::{correlation_from_decomposition, Thresholds};
use apdp::{
    decompose, decompose_with_periodic, DatasetMatrix, Decomposition, Error, Interval, LinearQuery, Mechanism, Period,
    PrivacyParams, ReporterConfig, ReporterState, Result, Verdict,
};

#[derive(Parser)]
#[command(name = "apdp", version, about = "Private continual reporting on almost-periodic panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic panel as wide CSV.
    Synth(SynthArgs),
    /// Correlate residual blocks across periods and emit a JSON report.
    TestPeriodicity(PeriodicityArgs),
    /// Run one reporter over a panel and write `t,y,f_true`.
    Report(ReportArgs),
    /// Relative error versus epsilon for several mechanisms.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    periods: usize,
    #[arg(long = "T")]
    period: usize,
    #[arg(long, env = "APDP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Generate the cross-period correlated negative control instead.
    #[arg(long)]
    counterexample: bool,
}

#[derive(Args)]
struct PanelArgs {
    #[arg(long = "in", alias = "in_path")]
    input: PathBuf,
    #[arg(long = "T")]
    period: usize,
    /// Wide CSV with the periodic component (one row of length T per series).
    /// Without it the per-slot mean over complete periods is used.
    #[arg(long)]
    periodic: Option<PathBuf>,
}

#[derive(Args)]
struct PeriodicityArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, alias = "accept_max", default_value_t = 0.5)]
    accept_max: f64,
    #[arg(long, alias = "reject_median", default_value_t = 0.5)]
    reject_median: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    Mean,
    Sum,
    #[value(alias = "weights_file")]
    WeightsFile,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Theorem1,
    Corollary1,
    Baseline,
}

impl From<Mode> for Mechanism {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Theorem1 => Mechanism::TheoremOne,
            Mode::Corollary1 => Mechanism::CorollaryOne,
            Mode::Baseline => Mechanism::BudgetSplitBaseline,
        }
    }
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, value_enum, default_value = "mean")]
    query: QueryKind,
    /// One weight per line, one line per series.
    #[arg(long, alias = "weights_file")]
    weights_file: Option<PathBuf>,
    #[arg(long, alias = "z_lo", allow_hyphen_values = true)]
    z_lo: f64,
    #[arg(long, alias = "z_hi", allow_hyphen_values = true)]
    z_hi: f64,
    #[arg(long, alias = "w_lo", allow_hyphen_values = true)]
    w_lo: f64,
    #[arg(long, alias = "w_hi", allow_hyphen_values = true)]
    w_hi: f64,
    #[arg(long, env = "APDP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Budgeted horizon; required by the baseline.
    #[arg(long)]
    tau: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    epsilons: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1.., default_values = ["theorem1", "corollary1", "baseline"])]
    modes: Vec<Mode>,
    #[arg(long, default_value_t = 200)]
    runs: usize,
    /// Baseline horizon; defaults to the panel length.
    #[arg(long)]
    tau: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Domain-level outcome mapped onto the process exit code.
enum Outcome {
    Done,
    Inconclusive,
    Negative,
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("ERROR Usage: {first}");
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::TestPeriodicity(a) => test_periodicity(a),
        Command::Report(a) => report(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive) => ExitCode::from(1),
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("ERROR {}: {}", e.code(), e);
    ExitCode::from(1)
}

/// Replaces `--config file.json` with the flags it holds. Flags given on the
/// command line take precedence over the file.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = match argv[pos].split_once('=') {
        Some((_, p)) => {
            let p = p.to_string();
            argv.remove(pos);
            p
        }
        None => {
            if pos + 1 >= argv.len() {
                return Err(Error::InvalidArgument("--config needs a path".into()));
            }
            let p = argv.remove(pos + 1);
            argv.remove(pos);
            p
        }
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
    let cfg: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)?;
    for (key, value) in cfg {
        let flag = format!("--{key}");
        let present = argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if present {
            continue;
        }
        match value {
            serde_json::Value::Bool(true) => argv.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(json_scalar).collect();
                argv.push(format!("{flag}={}", joined.join(",")));
            }
            other => argv.push(format!("{flag}={}", json_scalar(&other))),
        }
    }
    Ok(argv)
}

fn json_scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(m) => Error::Io(format!("{}: {m}", path.display())),
        Error::ParseError { row, col, value } => Error::ParseError {
            row,
            col,
            value: format!("{value} ({}, line {})", path.display(), row + 1),
        },
        other => other,
    }
}

fn synth(a: SynthArgs) -> Result<Outcome> {
    let panel = if a.counterexample {
        gen_correlated_counterexample(a.n, a.periods, a.period, a.seed)?
    } else {
        gen_almost_periodic(&AlmostPeriodicParams::new(a.n, a.periods, a.period), a.seed)?
    };
    let ids = default_series_ids(a.n);
    write_wide_csv(&a.out, &panel.data, &ids).map_err(|e| with_path(&a.out, e))?;
    write_series_index(sidecar_path(&a.out), &ids)?;
    Ok(Outcome::Done)
}

fn load_decomposition(p: &PanelArgs) -> Result<(DatasetMatrix, Decomposition)> {
    let panel = load_wide_csv(&p.input, LoadOptions::default()).map_err(|e| with_path(&p.input, e))?;
    let period = Period::new(p.period)?;
    let dec = match &p.periodic {
        None => decompose(&panel.data, period)?,
        Some(path) => {
            let z = load_wide_csv(path, LoadOptions::default()).map_err(|e| with_path(path, e))?;
            if z.data.t() != period.get() {
                return Err(Error::DimensionMismatch {
                    expected: period.get(),
                    got: z.data.t(),
                });
            }
            decompose_with_periodic(&panel.data, &z.data)?
        }
    };
    Ok((panel.data, dec))
}

fn test_periodicity(a: PeriodicityArgs) -> Result<Outcome> {
    let (_, dec) = load_decomposition(&a.panel)?;
    let report = correlation_from_decomposition(&dec)?.with_thresholds(Thresholds {
        accept_max: a.accept_max,
        reject_median: a.reject_median,
    })?;
    std::fs::write(&a.out, report.to_json()?).map_err(|e| with_path(&a.out, e.into()))?;
    Ok(match report.verdict {
        Verdict::ConsistentWithAlmostPeriodicity => Outcome::Done,
        Verdict::Inconclusive => Outcome::Inconclusive,
        Verdict::Inconsistent => Outcome::Negative,
    })
}

fn build_query(q: &QueryArgs, n: usize) -> Result<LinearQuery> {
    match q.query {
        QueryKind::Mean => LinearQuery::mean(n),
        QueryKind::Sum => LinearQuery::sum(n),
        QueryKind::WeightsFile => {
            let path = q
                .weights_file
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--query weights_file needs --weights-file".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| with_path(path, e.into()))?;
            let weights = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .enumerate()
                .map(|(i, l)| {
                    l.parse::<f64>().map_err(|_| Error::ParseError {
                        row: i + 1,
                        col: 1,
                        value: l.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if weights.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: weights.len(),
                });
            }
            LinearQuery::new(weights)
        }
    }
}

fn base_config(q: &QueryArgs, dec: &Decomposition, epsilon: f64, mode: Mode) -> Result<ReporterConfig> {
    let query = build_query(q, dec.n())?;
    let params = PrivacyParams::new(epsilon, dec.period())?;
    Ok(ReporterConfig::new(
        query,
        params,
        mode.into(),
        Interval::new(q.z_lo, q.z_hi)?,
        Interval::new(q.w_lo, q.w_hi)?,
        q.seed,
    ))
}

fn report(a: ReportArgs) -> Result<Outcome> {
    let (data, dec) = load_decomposition(&a.panel)?;
    let mut cfg = base_config(&a.query, &dec, a.epsilon, a.mode)?;
    cfg.horizon_tau = a.tau;
    let mut reporter = ReporterState::new(cfg)?;
    let series = QuerySeries::new(reporter.query(), &data, dec.residual())?;
    let ys = reporter.report_aggregate_series(&series.truth, &series.residual)?;
    let mut out = BufWriter::new(File::create(&a.out).map_err(|e| with_path(&a.out, e.into()))?);
    writeln!(out, "t,y,f_true")?;
    for (t, (y, f)) in ys.iter().zip(&series.truth).enumerate() {
        writeln!(out, "{},{},{}", t + 1, y, f)?;
    }
    out.flush()?;
    Ok(Outcome::Done)
}

fn evaluate(a: EvaluateArgs) -> Result<Outcome> {
    let (data, dec) = load_decomposition(&a.panel)?;
    let configs = a
        .modes
        .iter()
        .map(|m| {
            let mut c = base_config(&a.query, &dec, 1.0, *m)?;
            if matches!(m, Mode::Baseline) {
                c.horizon_tau = a.tau;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let series = QuerySeries::new(&configs[0].query, &data, dec.residual())?;
    let rows = error_vs_epsilon_curve(&configs, &series, &a.epsilons, a.runs)?;
    write_curve_csv_file(&a.out, &rows).map_err(|e| with_path(&a.out, e))?;
    Ok(Outcome::Done)
}
