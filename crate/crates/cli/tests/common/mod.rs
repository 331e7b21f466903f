//! Helpers shared by the CLI integration tests and the acceptance suite.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub const BIN: &str = env!("CARGO_BIN_EXE_krige");

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn data_file() -> String {
    manifest_dir()
        .join("tests/data/sample10.csv")
        .to_string_lossy()
        .into_owned()
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_cli(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("KRIGE_NUMERIC_POLICY");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn krige");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
    }
}

pub fn json_lines(s: &str) -> Result<Vec<Value>, String> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| format!("bad JSON line `{l}`: {e}")))
        .collect()
}

pub fn schema(name: &str) -> jsonschema::Validator {
    let path = manifest_dir().join("schema").join(format!("{name}.schema.json"));
    let text = std::fs::read_to_string(&path).expect("read schema");
    let schema: Value = serde_json::from_str(&text).expect("schema JSON");
    jsonschema::validator_for(&schema).expect("compile schema")
}

pub fn validate_lines(schema_name: &str, text: &str) -> Result<usize, String> {
    let validator = schema(schema_name);
    let lines = json_lines(text)?;
    for (i, v) in lines.iter().enumerate() {
        let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
        if !errors.is_empty() {
            return Err(format!("{schema_name} line {}: {}", i + 1, errors.join("; ")));
        }
    }
    Ok(lines.len())
}

/// Structural comparison with a relative tolerance on numbers.
pub fn json_close(a: &Value, b: &Value, rel: f64, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            let scale = x.abs().max(y.abs()).max(1e-300);
            if (x - y).abs() <= rel * scale || (x - y).abs() <= 1e-15 {
                Ok(())
            } else {
                Err(format!("{path}: {x} != {y}"))
            }
        }
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                return Err(format!("{path}: length {} != {}", xs.len(), ys.len()));
            }
            for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                json_close(x, y, rel, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (Value::Object(xs), Value::Object(ys)) => {
            let mut kx: Vec<_> = xs.keys().collect();
            let mut ky: Vec<_> = ys.keys().collect();
            kx.sort();
            ky.sort();
            if kx != ky {
                return Err(format!("{path}: keys {kx:?} != {ky:?}"));
            }
            for k in kx {
                json_close(&xs[k], &ys[k], rel, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} != {b}")),
    }
}

pub struct GoldenCase {
    pub name: &'static str,
    pub schema: &'static str,
    pub args: &'static [&'static str],
}

/// `@DATA` is replaced by the checked-in 10-row dataset.
pub const GOLDEN: &[GoldenCase] = &[
    GoldenCase {
        name: "predict_white_noise",
        schema: "predict",
        args: &["predict", "--data", "@DATA", "--model", "white_noise", "--sigma2", "1", "--target", "0.5,0.5", "--target", "1,1"],
    },
    GoldenCase {
        name: "predict_exponential_grid",
        schema: "predict",
        args: &[
            "predict", "--data", "@DATA", "--model", "exponential", "--range", "1.5", "--sigma2", "2",
            "--grid", "0:2:3", "--grid", "0:1:2", "--verbose",
        ],
    },
    GoldenCase {
        name: "mean_white_noise",
        schema: "mean",
        args: &["mean", "--data", "@DATA", "--model", "white_noise", "--sigma2", "1"],
    },
    GoldenCase {
        name: "mean_gaussian_check",
        schema: "mean",
        args: &["mean", "--data", "@DATA", "--model", "gaussian", "--range", "0.8", "--sigma2", "1.5", "--nugget", "0.05", "--check"],
    },
    GoldenCase {
        name: "validate_spherical",
        schema: "validate",
        args: &["validate", "--data", "@DATA", "--model", "spherical", "--range", "2.5", "--sigma2", "1", "--nugget", "0.1"],
    },
    GoldenCase {
        name: "simulate_white_noise",
        schema: "simulate",
        args: &["simulate", "--model", "white_noise", "--sigma2", "1", "--n", "4", "--replicates", "20000", "--seed", "7"],
    },
    GoldenCase {
        name: "simulate_schedule",
        schema: "simulate",
        args: &["simulate", "--model", "white_noise", "--sigma2", "1", "--schedule", "1,10,100", "--replicates", "5000", "--seed", "3"],
    },
    GoldenCase {
        name: "stats",
        schema: "stats",
        args: &["stats", "--data", "@DATA"],
    },
];

fn golden_path(name: &str) -> PathBuf {
    manifest_dir().join("tests/golden").join(format!("{name}.jsonl"))
}

/// Run a golden case: exit 0, schema-valid output, matching the checked-in
/// file to 1e-9 relative. With `KRIGE_BLESS=1` the file is rewritten.
pub fn check_golden(case: &GoldenCase) -> Result<(), String> {
    let data = data_file();
    let args: Vec<&str> = case
        .args
        .iter()
        .map(|a| if *a == "@DATA" { data.as_str() } else { a })
        .collect();
    let out = run_cli(&args, &[]);
    if out.code != 0 {
        return Err(format!("{}: exit {} stderr {}", case.name, out.code, out.stderr));
    }
    validate_lines(case.schema, &out.stdout)?;
    let path = golden_path(case.name);
    if std::env::var_os("KRIGE_BLESS").is_some() {
        std::fs::write(&path, &out.stdout).map_err(|e| e.to_string())?;
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let got = json_lines(&out.stdout)?;
    let want = json_lines(&expected)?;
    json_close(&Value::Array(got), &Value::Array(want), 1e-9, case.name)
}

pub struct ExitCase {
    pub label: &'static str,
    pub args: Vec<String>,
    pub env: Vec<(&'static str, String)>,
    pub expected: i32,
}

fn owned(args: &[&str]) -> Vec<String> {
    args.iter().map(|s| s.to_string()).collect()
}

pub fn write_temp(dir: &Path, name: &str, contents: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, contents).expect("write temp file");
    p.to_string_lossy().into_owned()
}

pub fn exit_matrix(dir: &Path) -> Vec<ExitCase> {
    let data = data_file();
    let nan = write_temp(dir, "nan.csv", "x,value\n0,1\n1,NaN\n");
    let dup = write_temp(dir, "dup.csv", "x,y,value\n0,0,1\n1,0,2\n0,0,3\n");
    let single = write_temp(dir, "single.csv", "x,value\n0,4.5\n");
    let strict = write_temp(dir, "strict.json", r#"{"condition_threshold": 1.5}"#);
    let broken = write_temp(dir, "broken.json", "{not json");
    let d = data.as_str();
    vec![
        ExitCase { label: "predict ok", args: owned(&["predict", "--data", d, "--sigma2", "1", "--target", "0.5,0.5"]), env: vec![], expected: 0 },
        ExitCase { label: "help", args: owned(&["--help"]), env: vec![], expected: 0 },
        ExitCase { label: "malformed --target", args: owned(&["predict", "--data", d, "--sigma2", "1", "--target", "0.5;0.5"]), env: vec![], expected: 2 },
        ExitCase { label: "target dimension", args: owned(&["predict", "--data", d, "--sigma2", "1", "--target", "0.5"]), env: vec![], expected: 2 },
        ExitCase { label: "malformed --grid", args: owned(&["predict", "--data", d, "--sigma2", "1", "--grid", "0:1"]), env: vec![], expected: 2 },
        ExitCase { label: "no targets", args: owned(&["predict", "--data", d, "--sigma2", "1"]), env: vec![], expected: 2 },
        ExitCase { label: "missing --sigma2", args: owned(&["predict", "--data", d, "--target", "0,0"]), env: vec![], expected: 2 },
        ExitCase { label: "negative --sigma2", args: owned(&["mean", "--data", d, "--sigma2=-1"]), env: vec![], expected: 2 },
        ExitCase { label: "unknown --model", args: owned(&["mean", "--data", d, "--model", "cubic", "--sigma2", "1"]), env: vec![], expected: 2 },
        ExitCase { label: "missing --range", args: owned(&["mean", "--data", d, "--model", "exponential", "--sigma2", "1"]), env: vec![], expected: 2 },
        ExitCase { label: "nugget out of range", args: owned(&["mean", "--data", d, "--model", "spherical", "--range", "1", "--sigma2", "1", "--nugget", "1"]), env: vec![], expected: 2 },
        ExitCase { label: "missing data file", args: owned(&["mean", "--data", "/no/such/file.csv", "--sigma2", "1"]), env: vec![], expected: 2 },
        ExitCase { label: "NaN in data", args: owned(&["stats", "--data", &nan]), env: vec![], expected: 2 },
        ExitCase { label: "stats on one row", args: owned(&["stats", "--data", &single]), env: vec![], expected: 2 },
        ExitCase { label: "validate on one row", args: owned(&["validate", "--data", &single, "--sigma2", "1"]), env: vec![], expected: 2 },
        ExitCase { label: "budget exceeded", args: owned(&["simulate", "--sigma2", "1", "--n", "4", "--replicates", "1000", "--budget", "100"]), env: vec![], expected: 2 },
        ExitCase { label: "decreasing --schedule", args: owned(&["simulate", "--sigma2", "1", "--schedule", "10,5"]), env: vec![], expected: 2 },
        ExitCase { label: "broken policy file", args: owned(&["stats", "--data", d]), env: vec![("KRIGE_NUMERIC_POLICY", broken)], expected: 2 },
        ExitCase { label: "duplicate locations predict", args: owned(&["predict", "--data", &dup, "--model", "exponential", "--range", "1", "--sigma2", "1", "--target", "0.5,0.5"]), env: vec![], expected: 3 },
        ExitCase { label: "duplicate locations mean", args: owned(&["mean", "--data", &dup, "--model", "exponential", "--range", "1", "--sigma2", "1", "--check"]), env: vec![], expected: 3 },
        ExitCase { label: "condition threshold from policy", args: owned(&["predict", "--data", d, "--model", "exponential", "--range", "1", "--sigma2", "1", "--target", "0.5,0.5"]), env: vec![("KRIGE_NUMERIC_POLICY", strict)], expected: 3 },
    ]
}

/// Run every exit-code case; stderr of failures must be schema-valid JSON and
/// stdout must stay empty.
pub fn check_exit_matrix() -> Result<usize, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases = exit_matrix(dir.path());
    for case in &cases {
        let args: Vec<&str> = case.args.iter().map(String::as_str).collect();
        let env: Vec<(&str, &str)> = case.env.iter().map(|(k, v)| (*k, v.as_str())).collect();
        let out = run_cli(&args, &env);
        if out.code != case.expected {
            return Err(format!(
                "{}: exit {} expected {} (stderr {})",
                case.label, out.code, case.expected, out.stderr
            ));
        }
        if case.expected != 0 {
            if !out.stdout.is_empty() {
                return Err(format!("{}: wrote to stdout on failure", case.label));
            }
            let n = validate_lines("error", &out.stderr)?;
            if n == 0 {
                return Err(format!("{}: no diagnostic on stderr", case.label));
            }
        }
    }
    Ok(cases.len())
}
