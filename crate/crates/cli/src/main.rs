//! `cpc`: independence tests, simulation campaigns, benchmarks and the
//! oracle suite.
//!
//! Exit status: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numeric failure (including a failed `check`). Warnings go to stderr and
//! never change the status.

mod args;

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use cpc_core::classifiers::FeatureMap;
use cpc_core::{
    cpc_test, cpc_test_rows, dcor_test, load_paired_csv, load_sparse_market, ClassifierConfig, CpcConfig,
    DcorReport, Error, ErrorCategory, PairedSample, SparsePairedSample,
};
use cpc_simlab::calibration::{null_calibration, variance_validity, CalibrationConfig, CalibrationResult};
use cpc_simlab::checks::{run_checks, CheckSizes};
use cpc_simlab::config::{load_experiment, ClassifierOverrides, Experiment};
use cpc_simlab::lasso::lasso_rate_experiment;
use cpc_simlab::mu::mu_condition_check;
use cpc_simlab::output::{artifact_path, plot_rows, write_csv, Manifest};
use cpc_simlab::power::{power_experiment, Method};
use cpc_simlab::timing::{timing_bench, TimingConfig};
use serde::Serialize;
use serde_json::{json, Value};

use args::{BenchArgs, CalibrateArgs, CheckArgs, ClassifierArgs, Cli, Command, FeaturesArg, Format, MethodArg, SimulateArgs, TestArgs};

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.category() {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numeric => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => run_test(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Bench(a) => run_bench(a),
        Command::Check(a) => run_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn classifier(args: &ClassifierArgs, default: ClassifierConfig) -> CliResult<ClassifierConfig> {
    let base = match args.classifier {
        Some(c) => ClassifierConfig::by_name(c.name())?,
        None => default,
    };
    let overrides = ClassifierOverrides {
        lambda: args.lambda,
        features: args.features.map(|f| match f {
            FeaturesArg::Identity => FeatureMap::Identity,
            FeaturesArg::CrossProducts => FeatureMap::CrossProducts,
        }),
        max_iter: args.max_iter,
        tol: args.tol,
        hidden: args.hidden,
        l1_penalty: args.l1_penalty,
        dropout_rate: args.dropout_rate,
        epochs: args.epochs,
        batch: args.batch,
        step: args.step,
        s1: args.s1,
        k_n: args.k_n,
        cap: None,
    };
    overrides
        .apply(base)
        .map_err(|e| Failure::usage(format!("classifier flags: {e}")))
}

fn any_classifier_flag(a: &ClassifierArgs) -> bool {
    a.classifier.is_some()
        || a.lambda.is_some()
        || a.features.is_some()
        || a.max_iter.is_some()
        || a.tol.is_some()
        || a.hidden.is_some()
        || a.l1_penalty.is_some()
        || a.dropout_rate.is_some()
        || a.epochs.is_some()
        || a.batch.is_some()
        || a.step.is_some()
        || a.s1.is_some()
        || a.k_n.is_some()
}

enum Input {
    Dense(PairedSample),
    Sparse(SparsePairedSample),
}

fn load_input(a: &TestArgs) -> CliResult<Input> {
    match (&a.csv, &a.sparse_x, &a.sparse_y) {
        (Some(path), None, None) => {
            if a.x.is_empty() || a.y.is_empty() {
                return Err(Failure::usage("--csv needs both --x and --y column lists"));
            }
            let xs: BTreeSet<&str> = a.x.iter().map(String::as_str).collect();
            let overlap: Vec<&str> = a.y.iter().map(String::as_str).filter(|c| xs.contains(c)).collect();
            if !overlap.is_empty() {
                return Err(Failure::usage(format!(
                    "--x and --y are overlapping selectors: both name {}",
                    overlap.join(",")
                )));
            }
            Ok(Input::Dense(load_paired_csv(path, &a.x, &a.y)?))
        }
        (None, Some(px), Some(py)) => {
            if !a.x.is_empty() || !a.y.is_empty() {
                return Err(Failure::usage("--x and --y select CSV columns and cannot be combined with --sparse-x/--sparse-y"));
            }
            Ok(Input::Sparse(load_sparse_market(px, py)?))
        }
        (None, Some(_), None) => Err(Failure::usage("--sparse-x needs --sparse-y")),
        (None, None, Some(_)) => Err(Failure::usage("--sparse-y needs --sparse-x")),
        _ => Err(Failure::usage("give --csv with --x and --y, or --sparse-x with --sparse-y")),
    }
}

fn run_test(a: TestArgs) -> CliResult<()> {
    let input = load_input(&a)?;
    let report: Value = match a.method {
        MethodArg::Cpc => {
            let cls = classifier(&a.classifier, ClassifierConfig::mlp())?;
            let report = match &input {
                Input::Dense(s) => cpc_test(
                    s,
                    &CpcConfig {
                        classifier: cls,
                        standardize: !a.no_standardize,
                    },
                    a.seed,
                )?,
                Input::Sparse(s) => cpc_test_rows(s, &cls, a.seed)?,
            };
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            serde_json::to_value(&report)?
        }
        MethodArg::Dcor => {
            if any_classifier_flag(&a.classifier) {
                return Err(Failure::usage("classifier flags such as --classifier apply only to --method cpc"));
            }
            if a.permutations == 0 {
                return Err(Failure::usage("--permutations must be >= 1"));
            }
            let dense = match input {
                Input::Dense(s) => s,
                Input::Sparse(s) => s.to_dense()?,
            };
            let res = dcor_test(dense.x(), dense.y(), a.permutations, a.seed)?;
            let (n, d1) = dense.x().dim();
            serde_json::to_value(DcorReport::new(res, a.permutations, a.seed, n, d1, dense.y().ncols()))?
        }
    };
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => flat_csv(&report)?,
    };
    match &a.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure {
            code: 3,
            message: format!("cannot write --output {}: {e}", p.display()),
        }),
        None => {
            std::io::stdout().write_all(text.as_bytes()).ok();
            Ok(())
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|x| match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.push((prefix.into(), parts.join(";")));
        }
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Null => out.push((prefix.into(), String::new())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

/// A report as one header line and one value line, nested keys dotted.
fn flat_csv(report: &Value) -> CliResult<String> {
    let mut cells = Vec::new();
    flatten("", report, &mut cells);
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure {
        code: 3,
        message: e.to_string(),
    };
    w.write_record(cells.iter().map(|c| &c.0)).map_err(fail)?;
    w.write_record(cells.iter().map(|c| &c.1)).map_err(fail)?;
    let bytes = w.into_inner().map_err(|e| Failure {
        code: 3,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize, files: &mut Vec<String>) -> CliResult<()> {
    let p = artifact_path(dir, name)?;
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(&p, text).map_err(|e| Failure {
        code: 3,
        message: format!("cannot write {}: {e}", p.display()),
    })?;
    files.push(name.into());
    Ok(())
}

fn write_table<T: Serialize>(dir: &Path, name: &str, rows: &[T], files: &mut Vec<String>) -> CliResult<()> {
    write_csv(rows, &artifact_path(dir, name)?)?;
    files.push(name.into());
    Ok(())
}

fn finish(dir: &Path, experiment: &str, config: &impl Serialize, seeds: Vec<u64>, files: Vec<String>) -> CliResult<()> {
    let manifest = Manifest::new(experiment, config, seeds, files.clone())?;
    manifest.write(&artifact_path(dir, "manifest.json")?)?;
    for f in files.iter().chain(std::iter::once(&"manifest.json".to_string())) {
        println!("{}", dir.join(f).display());
    }
    Ok(())
}

#[derive(Serialize)]
struct StatRow {
    rep: usize,
    statistic: f64,
    p_value: f64,
}

fn calibration_summary(r: &CalibrationResult) -> Value {
    json!({
        "ks": r.ks,
        "mean": r.mean,
        "sd": r.sd,
        "chi_square": r.chi_square,
        "chi_square_critical": r.chi_square_critical,
        "rejection_05": r.rejection_05,
        "rejection_01": r.rejection_01,
        "floored": r.floored,
        "failed": r.failed,
        "reps": r.statistics.len(),
    })
}

fn write_calibration(dir: &Path, cfg: &CalibrationConfig) -> CliResult<()> {
    let r = null_calibration(cfg)?;
    let mut files = Vec::new();
    let rows: Vec<StatRow> = r
        .statistics
        .iter()
        .zip(&r.p_values)
        .enumerate()
        .map(|(rep, (&statistic, &p_value))| StatRow { rep, statistic, p_value })
        .collect();
    write_table(dir, "statistics.csv", &rows, &mut files)?;
    write_table(dir, "qq.csv", &r.qq, &mut files)?;
    write_json(dir, "summary.json", &calibration_summary(&r), &mut files)?;
    finish(dir, "calibration", cfg, vec![cfg.master_seed], files)
}

fn run_simulate(a: SimulateArgs) -> CliResult<()> {
    let mut exp = load_experiment(&a.config)
        .map_err(|e| Failure::usage(format!("--config {}: {e}", a.config.display())))?;
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(Failure::usage("--jobs must be >= 1"));
        }
    }
    match &mut exp {
        Experiment::Power(c) => {
            if let Some(s) = a.seed {
                c.master_seed = s;
            }
            if let Some(j) = a.jobs {
                c.jobs = j;
            }
        }
        Experiment::Calibration(c) => {
            if let Some(s) = a.seed {
                c.master_seed = s;
            }
            if let Some(j) = a.jobs {
                c.jobs = j;
            }
        }
        Experiment::Variance(c) => {
            if let Some(s) = a.seed {
                c.master_seed = s;
            }
        }
        Experiment::Mu(c) => {
            if let Some(s) = a.seed {
                c.master_seed = s;
            }
        }
        Experiment::Lasso(c) => {
            if let Some(s) = a.seed {
                c.master_seed = s;
            }
        }
        Experiment::Timing(c) => {
            if let Some(s) = a.seed {
                c.master_seed = s;
            }
        }
    }
    let dir = a.out.as_path();
    let mut files = Vec::new();
    match &exp {
        Experiment::Power(c) => {
            let out = power_experiment(c)?;
            let failed = out.records.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("warning: {failed} replicate(s) failed and were excluded; see records.csv");
            }
            write_table(dir, "records.csv", &out.records, &mut files)?;
            write_table(dir, "cells.csv", &out.curve.cells, &mut files)?;
            for &m in &c.models {
                write_table(dir, &format!("plot_{m}.csv"), &plot_rows(&out.curve, m), &mut files)?;
            }
            let mut sorted = out.seeds.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != out.seeds.len() {
                return Err(Failure {
                    code: 4,
                    message: "replicate seed collision".into(),
                });
            }
            finish(dir, exp.name(), &exp, out.seeds, files)
        }
        Experiment::Calibration(c) => write_calibration(dir, c),
        Experiment::Variance(c) => {
            let v = variance_validity(c)?;
            write_json(dir, "variance.json", &v, &mut files)?;
            finish(dir, exp.name(), &exp, vec![c.master_seed], files)
        }
        Experiment::Mu(c) => {
            let rows = mu_condition_check(c)?;
            write_table(dir, "mu.csv", &rows, &mut files)?;
            finish(dir, exp.name(), &exp, vec![c.master_seed], files)
        }
        Experiment::Lasso(c) => {
            let r = lasso_rate_experiment(c)?;
            write_table(dir, "lasso.csv", &r.rows, &mut files)?;
            write_json(dir, "lasso_summary.json", &json!({"m": r.m, "slope": r.slope}), &mut files)?;
            finish(dir, exp.name(), &exp, vec![c.master_seed], files)
        }
        Experiment::Timing(c) => {
            let rows = timing_bench(c)?;
            write_table(dir, "timing.csv", &rows, &mut files)?;
            finish(dir, exp.name(), &exp, vec![c.master_seed], files)
        }
    }
}

fn run_calibrate(a: CalibrateArgs) -> CliResult<()> {
    if a.jobs == 0 {
        return Err(Failure::usage("--jobs must be >= 1"));
    }
    if a.reps < 50 {
        return Err(Failure::usage("--reps must be >= 50 for calibration"));
    }
    let cfg = CalibrationConfig {
        n: a.n,
        d1: a.d1,
        d2: a.d2,
        reps: a.reps,
        classifier: classifier(&a.classifier, ClassifierConfig::logistic())?,
        master_seed: a.seed,
        standardize: a.standardize,
        jobs: a.jobs,
    };
    write_calibration(&a.out, &cfg)
}

fn parse_axis(token: &str) -> CliResult<(String, Vec<usize>)> {
    let bad = || Failure::usage(format!("--grid entry '{token}' must look like n=1000,2000 or d=100"));
    let (key, vals) = token.split_once('=').ok_or_else(bad)?;
    let vals: Vec<usize> = vals
        .split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    if vals.is_empty() {
        return Err(bad());
    }
    Ok((key.trim().to_string(), vals))
}

fn run_bench(a: BenchArgs) -> CliResult<()> {
    let mut cfg = TimingConfig {
        methods: a
            .methods
            .iter()
            .map(|m| match m {
                MethodArg::Cpc => Method::Cpc,
                MethodArg::Dcor => Method::Dcor,
            })
            .collect(),
        reps: a.reps,
        master_seed: a.seed,
        classifier: classifier(&a.classifier, ClassifierConfig::mlp())?,
        permutations: a.permutations,
        ..Default::default()
    };
    for token in a.grid.iter().flat_map(|g| g.split_whitespace()) {
        let (key, mut vals) = parse_axis(token)?;
        vals.sort_unstable();
        match key.as_str() {
            "n" => cfg.n_grid = vals,
            "d" => cfg.d_grid = vals,
            other => return Err(Failure::usage(format!("--grid axis '{other}' is not one of n, d"))),
        }
    }
    if a.reps == 0 {
        return Err(Failure::usage("--reps must be >= 1"));
    }
    let rows = timing_bench(&cfg)?;
    let mut files = Vec::new();
    write_table(&a.out, "timing.csv", &rows, &mut files)?;
    finish(&a.out, "timing", &cfg, vec![cfg.master_seed], files)
}

fn run_check(a: CheckArgs) -> CliResult<()> {
    let sizes = if a.fast { CheckSizes::FAST } else { CheckSizes::FULL };
    let outcomes = run_checks(sizes, a.seed);
    for o in &outcomes {
        println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: 4,
            message: format!("{failed} oracle check(s) failed"),
        })
    }
}
