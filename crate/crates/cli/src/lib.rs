//! The `krige` command-line tool.
//!
//! Every command writes JSON lines to standard output (or `--out`). Failures
//! are written to standard error as one JSON object and mapped to exit
//! codes: 0 success, 2 user or configuration error, 3 numerical error.

pub mod args;
pub mod ingest;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::Parser;
use krige::{
    CorrelationKind, CorrelationModel, KrigeError, Layout, LayoutKind, Location, NumericPolicy,
    SampleSet, SimulationConfig,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{Cli, Command, DataArgs, ModelArgs, OutputArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Environment variable naming a JSON file of tolerance overrides.
pub const POLICY_ENV: &str = "KRIGE_NUMERIC_POLICY";

/// Monte Carlo acceptance band, in standard errors.
pub const MC_STANDARD_ERRORS: f64 = 4.0;

#[derive(Debug)]
pub enum CliError {
    /// A flag failed validation.
    Flag { flag: &'static str, message: String },
    Krige(KrigeError),
    Output(String),
}

impl From<KrigeError> for CliError {
    fn from(e: KrigeError) -> Self {
        CliError::Krige(e)
    }
}

impl CliError {
    fn flag(flag: &'static str, message: impl Into<String>) -> Self {
        CliError::Flag {
            flag,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Krige(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Flag { flag, message } => json!({
                "error": "invalid_flag",
                "flag": flag,
                "message": format!("{flag}: {message}"),
            }),
            CliError::Krige(KrigeError::InvalidModel { param, reason }) => {
                let flag = model_flag(param);
                json!({
                    "error": "invalid_flag",
                    "flag": flag,
                    "message": format!("{flag}: {reason}"),
                })
            }
            CliError::Krige(e) => json!({ "error": e.kind(), "message": e.to_string() }),
            CliError::Output(message) => json!({ "error": "output", "message": message }),
        }
    }
}

fn model_flag(param: &str) -> &'static str {
    match param {
        "sigma2" => "--sigma2",
        "range" => "--range",
        "nugget" => "--nugget",
        _ => "--model",
    }
}

/// Parse `args` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let detail = e.to_string();
            let message = detail
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(|l| l.trim().trim_start_matches("error: "))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(stderr, "{}", json!({ "error": "usage", "message": message }));
            return EXIT_USAGE;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.exit_code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let policy = load_policy()?;
    match command {
        Command::Predict(a) => cmd_predict(a, &policy, stdout, stderr),
        Command::Mean(a) => cmd_mean(a, &policy, stdout, stderr),
        Command::Validate(a) => cmd_validate(a, &policy, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(a, &policy, stdout),
        Command::Stats(a) => cmd_stats(a, stdout, stderr),
    }
}

fn load_policy() -> Result<NumericPolicy, CliError> {
    match std::env::var_os(POLICY_ENV) {
        Some(path) if !path.is_empty() => Ok(NumericPolicy::from_json_file(Path::new(&path))?),
        _ => Ok(NumericPolicy::default()),
    }
}

pub fn parse_model(m: &ModelArgs) -> Result<CorrelationModel, CliError> {
    let kind: CorrelationKind = m
        .model
        .parse()
        .map_err(|_| CliError::flag("--model", format!("unknown model `{}`", m.model)))?;
    Ok(CorrelationModel::new(kind, m.range, m.sigma2, m.nugget)?)
}

fn parse_coords(flag: &'static str, s: &str) -> Result<Location, CliError> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::flag(flag, format!("`{s}` is not a comma-separated list of numbers")))?;
    Location::new(coords).map_err(|e| CliError::flag(flag, format!("`{s}`: {e}")))
}

/// One `min:max:steps` axis.
fn parse_axis(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::flag("--grid", format!("`{s}` is not min:max:steps"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || steps == 0 {
        return Err(CliError::flag(
            "--grid",
            format!("`{s}` needs finite min <= max and steps >= 1"),
        ));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Grid points, first axis outermost.
pub fn grid_targets(specs: &[String]) -> Result<Vec<Location>, CliError> {
    if specs.is_empty() {
        return Ok(Vec::new());
    }
    let axes = specs.iter().map(|s| parse_axis(s)).collect::<Result<Vec<_>, _>>()?;
    if axes.len() > 3 {
        return Err(CliError::flag("--grid", "at most three axes"));
    }
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    points
        .into_iter()
        .map(|p| Location::new(p).map_err(CliError::from))
        .collect()
}

fn load_data(data: &DataArgs, stderr: &mut dyn Write) -> Result<SampleSet, CliError> {
    let ingested = ingest::ingest(&data.data, data.dim)?;
    if !ingested.duplicates.is_empty() {
        let _ = writeln!(
            stderr,
            "{}",
            json!({
                "warning": "duplicate_locations",
                "message": "rows share a location; kriging systems over them are singular",
                "pairs": ingested.duplicates,
            })
        );
    }
    Ok(ingested.samples)
}

fn write_records(output: &OutputArgs, stdout: &mut dyn Write, records: &[Value]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| CliError::Output(e.to_string()))?;
        buf.push(b'\n');
    }
    let result = match &output.out {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(&buf)?;
            w.flush()
        }),
        None => stdout.write_all(&buf).and_then(|_| stdout.flush()),
    };
    result.map_err(|e| CliError::Output(e.to_string()))
}

fn cmd_predict(
    a: args::PredictArgs,
    policy: &NumericPolicy,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let model = parse_model(&a.model)?;
    let mut targets = a
        .target
        .iter()
        .map(|t| parse_coords("--target", t))
        .collect::<Result<Vec<_>, _>>()?;
    targets.extend(grid_targets(&a.grid)?);
    if targets.is_empty() {
        return Err(CliError::flag("--target", "give at least one --target or --grid"));
    }
    let samples = load_data(&a.data, stderr)?;
    if let Some(t) = targets.iter().find(|t| t.dim() != samples.dim()) {
        return Err(CliError::flag(
            "--target",
            format!("target `{t}` has {} coordinates, data has {}", t.dim(), samples.dim()),
        ));
    }

    let results = targets
        .par_iter()
        .map(|t| krige::predict_full(&model, &samples, t, policy))
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<Value> = targets
        .iter()
        .zip(results)
        .map(|(t, (solution, p))| {
            let mut r = json!({
                "target": t.coords(),
                "estimate": p.estimate,
                "kriging_variance": p.kriging_variance,
                "estimator_variance": p.estimator_variance,
            });
            if a.output.verbose {
                r["weights"] = json!(solution.weights);
                r["lagrange"] = json!(solution.lagrange);
            }
            r
        })
        .collect();
    write_records(&a.output, stdout, &records)
}

fn cmd_mean(
    a: args::MeanArgs,
    policy: &NumericPolicy,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let model = parse_model(&a.model)?;
    let samples = load_data(&a.data, stderr)?;
    let est = krige::gls_mean(&model, &samples, policy)?;
    let mut r = json!({
        "mean": est.mean,
        "xi": est.xi,
        "mse": est.mse,
        "n": samples.len(),
    });
    if a.check {
        let other = krige::gls_mean_via_kriging(&model, &samples, policy)?;
        r["max_discrepancy"] = json!(krige::mean::max_discrepancy(&est, &other));
    }
    if a.output.verbose {
        r["weights"] = json!(est.weights);
    }
    write_records(&a.output, stdout, &[r])
}

fn cmd_validate(
    a: args::ValidateArgs,
    policy: &NumericPolicy,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let model = parse_model(&a.model)?;
    let samples = load_data(&a.data, stderr)?;
    let cv = krige::cross_validate(&model, &samples, policy)?;
    let mut records: Vec<Value> = cv
        .folds
        .iter()
        .map(|f| {
            json!({
                "record": "fold",
                "held_out_index": f.held_out_index,
                "target": samples.locations()[f.held_out_index].coords(),
                "actual": f.actual,
                "estimate": f.prediction.estimate,
                "residual": f.residual(),
                "kriging_variance": f.prediction.kriging_variance,
                "estimator_variance": f.prediction.estimator_variance,
            })
        })
        .collect();
    records.extend(cv.skipped.iter().map(|s| {
        json!({ "record": "skipped", "held_out_index": s.held_out_index, "reason": s.reason })
    }));
    let s = cv.summary;
    records.push(json!({
        "record": "summary",
        "mean_squared_residual": s.mean_squared_residual,
        "mean_kriging_variance": s.mean_kriging_variance,
        "ratio": s.ratio,
        "folds": s.folds,
        "skipped": s.skipped,
    }));
    write_records(&a.output, stdout, &records)
}

fn parse_bbox(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::flag("--bbox", format!("`{s}` is not lo:hi with finite lo < hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_schedule(s: &str) -> Result<Vec<usize>, CliError> {
    let schedule = s
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::flag("--schedule", format!("`{s}` is not a list of counts")))?;
    if schedule.is_empty() || schedule.contains(&0) || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::flag(
            "--schedule",
            "counts must be positive and strictly increasing",
        ));
    }
    Ok(schedule)
}

fn report_json(r: &krige::McReport) -> Value {
    json!({
        "n": r.n,
        "replicates": r.replicates,
        "seed": r.seed,
        "empirical_mse_prediction": r.empirical_mse_prediction,
        "empirical_estimator_variance": r.empirical_estimator_variance,
        "analytic_kriging_variance": r.analytic_kriging_variance,
        "analytic_estimator_variance": r.analytic_estimator_variance,
        "standard_error": r.standard_error,
        "estimator_standard_error": r.estimator_standard_error,
        "mse_pass": r.mse_within(MC_STANDARD_ERRORS),
        "estimator_pass": r.estimator_within(MC_STANDARD_ERRORS),
    })
}

fn cmd_simulate(a: args::SimulateArgs, policy: &NumericPolicy, stdout: &mut dyn Write) -> Result<(), CliError> {
    let model = parse_model(&a.model)?;
    let kind: LayoutKind = a
        .layout
        .parse()
        .map_err(|_| CliError::flag("--layout", format!("unknown layout `{}`", a.layout)))?;
    if !(1..=3).contains(&a.dim) {
        return Err(CliError::flag("--dim", "must be 1, 2 or 3"));
    }
    let (lo, hi) = parse_bbox(&a.bbox)?;
    let layout = Layout {
        kind,
        dim: a.dim,
        lo,
        hi,
    };
    if a.replicates == 0 {
        return Err(CliError::flag("--replicates", "must be at least 1"));
    }
    if !a.mean.is_finite() {
        return Err(CliError::flag("--mean", "must be finite"));
    }
    let schedule = match (&a.schedule, a.n) {
        (Some(_), Some(_)) => return Err(CliError::flag("--schedule", "use either --n or --schedule")),
        (Some(s), None) => parse_schedule(s)?,
        (None, Some(0)) => return Err(CliError::flag("--n", "must be at least 1")),
        (None, Some(n)) => vec![n],
        (None, None) => return Err(CliError::flag("--n", "give --n or --schedule")),
    };
    let target = match &a.target {
        Some(t) => parse_coords("--target", t)?,
        None => Location::new(vec![lo; a.dim])?,
    };
    if target.dim() != a.dim {
        return Err(CliError::flag(
            "--target",
            format!("has {} coordinates but --dim is {}", target.dim(), a.dim),
        ));
    }
    let largest = *schedule.last().unwrap_or(&1);
    let draws = a.replicates as u128 * (largest as u128 + 1);
    if draws > a.budget as u128 {
        return Err(CliError::flag(
            "--replicates",
            format!("{draws} normal draws exceed the budget of {} (raise --budget)", a.budget),
        ));
    }

    let base = SimulationConfig::new(model, schedule[0], a.replicates, a.seed)
        .with_layout(layout)
        .with_mean(a.mean)
        .with_budget(a.budget);
    let reports = if schedule.len() == 1 {
        vec![krige::verify_prediction_variance(&base, &target, policy)?]
    } else {
        krige::verify_asymptotics(&base, &schedule, &target, policy)?.reports
    };
    let records: Vec<Value> = reports.iter().map(report_json).collect();
    write_records(&a.output, stdout, &records)
}

fn cmd_stats(a: args::StatsArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let samples = load_data(&a.data, stderr)?;
    let v = krige::sample_variance(samples.values())?;
    let r = json!({
        "n": v.n,
        "mean": v.mean,
        "biased": v.biased,
        "unbiased": v.unbiased,
    });
    write_records(&a.output, stdout, &[r])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_row_major() {
        let pts = grid_targets(&["0:1:2".into(), "10:12:3".into()]).unwrap();
        let coords: Vec<Vec<f64>> = pts.iter().map(|p| p.coords().to_vec()).collect();
        assert_eq!(
            coords,
            vec![
                vec![0.0, 10.0],
                vec![0.0, 11.0],
                vec![0.0, 12.0],
                vec![1.0, 10.0],
                vec![1.0, 11.0],
                vec![1.0, 12.0]
            ]
        );
        assert_eq!(grid_targets(&["3:3:1".into()]).unwrap()[0].coords(), &[3.0]);
    }

    #[test]
    fn flag_errors_name_the_flag() {
        for spec in ["0:1", "1:0:3", "0:1:0", "a:1:2"] {
            match grid_targets(&[spec.into()]) {
                Err(CliError::Flag { flag, .. }) => assert_eq!(flag, "--grid"),
                other => panic!("{spec}: {other:?}"),
            }
        }
        assert!(matches!(parse_coords("--target", "0.5,x"), Err(CliError::Flag { flag: "--target", .. })));
        assert!(parse_schedule("10,5").is_err());
        assert!(parse_schedule("1,10,100").is_ok());
        assert!(parse_bbox("1:1").is_err());
    }

    #[test]
    fn model_errors_map_to_flags() {
        let m = ModelArgs {
            model: "exponential".into(),
            range: None,
            sigma2: 1.0,
            nugget: 0.0,
        };
        let err = parse_model(&m).unwrap_err();
        assert_eq!(err.to_json()["flag"], "--range");
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }
}
