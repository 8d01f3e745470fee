//! Scenario-driven front end: loads operator scenarios, runs the selected
//! experiment suites, and writes machine-readable reports with CSV curves.
//!
//! Exit codes: 0 all assertions passed, 1 input or I/O error, 2 at least one
//! assertion failed.

use clap::{Parser, Subcommand};
use cylab_core::policy::NumericPolicy;
use cylab_core::report::{Report, Versions};
use cylab_core::scenario::ScenarioJson;
use cylab_core::suites::{experiment_catalog, run_experiment};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cylab", version, about = "Numerical laboratory for boundary value problems of first-order elliptic operators on a model cylinder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments selected by a scenario file.
    Run {
        /// Path to the scenario JSON file.
        scenario: PathBuf,
        /// Output directory for report.json and curve CSV files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Comma-separated subset of the scenario's experiments to run.
        #[arg(long)]
        experiments: Option<String>,
        /// Stop at the first failing experiment.
        #[arg(long)]
        fail_fast: bool,
        /// Exclude timings from the report (normalizes for byte-identical
        /// comparisons).
        #[arg(long)]
        no_timings: bool,
        /// Worker threads for running independent experiments.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Compare two reports fieldwise within a numeric tolerance.
    Compare {
        report_a: PathBuf,
        report_b: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Print the experiment catalog.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, experiments, fail_fast, no_timings, threads } => {
            run_command(&scenario, &out, experiments.as_deref(), fail_fast, no_timings, threads)
        }
        Command::Compare { report_a, report_b, tol } => compare_command(&report_a, &report_b, tol),
        Command::List => {
            for (name, description) in experiment_catalog() {
                println!("{name:14} {description}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn run_command(
    scenario_path: &Path,
    out_dir: &Path,
    experiments: Option<&str>,
    fail_fast: bool,
    no_timings: bool,
    threads: usize,
) -> ExitCode {
    let text = match std::fs::read_to_string(scenario_path) {
        Ok(t) => t,
        Err(e) => return input_error(format!("cannot read {}: {e}", scenario_path.display())),
    };
    let scenario = match ScenarioJson::parse(&text) {
        Ok(s) => s,
        Err(e) => return input_error(format!("schema_error: {e}")),
    };
    let policy = NumericPolicy::default();
    let built = match scenario.build(&policy) {
        Ok(b) => b,
        Err(e) => return input_error(format!("{} ({})", e, e.reason_code())),
    };
    let selected: Vec<String> = match experiments {
        None => built.experiments.clone(),
        Some(list) => {
            let requested: Vec<&str> = list.split(',').map(str::trim).collect();
            let mut out = Vec::new();
            for r in &requested {
                if !built.experiments.iter().any(|e| e == r) {
                    return input_error(format!(
                        "experiment '{r}' is not in the scenario selection {:?}",
                        built.experiments
                    ));
                }
                out.push(r.to_string());
            }
            out
        }
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        return input_error(format!("cannot create {}: {e}", out_dir.display()));
    }

    // run experiments, optionally on a small worker pool; records are
    // re-assembled in declaration order so reports stay deterministic
    let mut records = Vec::with_capacity(selected.len());
    let mut timings: std::collections::BTreeMap<String, u64> = Default::default();
    if fail_fast || threads <= 1 {
        for name in &selected {
            let start = std::time::Instant::now();
            let rec = run_experiment(name, &built, &policy);
            timings.insert(name.clone(), start.elapsed().as_millis() as u64);
            let failed = !rec.passed();
            records.push(rec);
            if fail_fast && failed {
                break;
            }
        }
    } else {
        let chunk_results: Vec<(usize, cylab_core::report::ExperimentRecord, u64)> =
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for (idx, name) in selected.iter().enumerate() {
                    let built_ref = &built;
                    let policy_ref = &policy;
                    handles.push(scope.spawn(move || {
                        let start = std::time::Instant::now();
                        let rec = run_experiment(name, built_ref, policy_ref);
                        (idx, rec, start.elapsed().as_millis() as u64)
                    }));
                    if handles.len() >= threads {
                        // simple throttle: join the oldest before spawning more
                        let done: (usize, _, u64) = handles.remove(0).join().unwrap();
                        handles.push(scope.spawn(move || done));
                    }
                }
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
        let mut sorted = chunk_results;
        sorted.sort_by_key(|(idx, _, _)| *idx);
        for (_, rec, ms) in sorted {
            timings.insert(rec.name.clone(), ms);
            records.push(rec);
        }
    }

    // write curves as CSV (comma separated, header row, LF endings)
    for rec in &records {
        for curve in &rec.curves {
            let file = out_dir.join(format!(
                "{}_{}_{}.csv",
                sanitize(&built.name),
                sanitize(&rec.name),
                sanitize(&curve.name)
            ));
            let mut body = String::new();
            body.push_str(&curve.columns.join(","));
            body.push_str(",flag\n");
            for (row, flag) in curve.rows.iter().zip(&curve.flags) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                body.push_str(&cells.join(","));
                body.push(',');
                body.push_str(flag.as_deref().unwrap_or(""));
                body.push('\n');
            }
            if let Err(e) = std::fs::write(&file, body) {
                return input_error(format!("cannot write {}: {e}", file.display()));
            }
        }
    }

    let all_passed = records.iter().all(|r| r.passed());
    let report = Report {
        scenario_name: built.name.clone(),
        seed: built.seed_value,
        versions: Versions::current(),
        experiments: records,
        timings_ms: if no_timings { None } else { Some(timings) },
    };
    let path = out_dir.join("report.json");
    let serialized = match serde_json::to_string_pretty(&report) {
        Ok(s) => s,
        Err(e) => return input_error(format!("serialization failed: {e}")),
    };
    if let Err(e) = std::fs::write(&path, serialized + "\n") {
        return input_error(format!("cannot write {}: {e}", path.display()));
    }

    for rec in &report.experiments {
        let status = if rec.passed() { "pass" } else { "FAIL" };
        println!("{:14} {status}", rec.name);
        if let Some(e) = &rec.error {
            println!("    error: {e}");
        }
        for check in rec.checks.iter().filter(|c| !c.pass) {
            println!(
                "    {}: measured {:.6e} vs bound {:.6e} (tolerance {:.1e}){}",
                check.name,
                check.lhs,
                check.rhs,
                check.tolerance,
                check.flag.as_deref().map(|f| format!(" [{f}]")).unwrap_or_default()
            );
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

fn compare_command(path_a: &Path, path_b: &Path, tol: f64) -> ExitCode {
    let load = |p: &Path| -> Result<Report, String> {
        let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
    };
    let a = match load(path_a) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    let b = match load(path_b) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    if a.scenario_name != b.scenario_name {
        eprintln!(
            "error: incompatible_reports: scenario '{}' vs '{}'",
            a.scenario_name, b.scenario_name
        );
        return ExitCode::from(1);
    }
    let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
    let mut diffs: Vec<String> = Vec::new();
    for ra in &a.experiments {
        let Some(rb) = b.experiments.iter().find(|r| r.name == ra.name) else {
            diffs.push(format!("experiment '{}' missing on the right", ra.name));
            continue;
        };
        for ca in &ra.checks {
            let Some(cb) = rb.checks.iter().find(|c| c.name == ca.name) else {
                diffs.push(format!("{}/{} missing on the right", ra.name, ca.name));
                continue;
            };
            for (field, va, vb) in
                [("lhs", ca.lhs, cb.lhs), ("rhs", ca.rhs, cb.rhs)]
            {
                if !close(va, vb) {
                    diffs.push(format!(
                        "{}/{}.{field}: {va:.9e} vs {vb:.9e}",
                        ra.name, ca.name
                    ));
                }
            }
            if ca.pass != cb.pass {
                diffs.push(format!("{}/{}.pass: {} vs {}", ra.name, ca.name, ca.pass, cb.pass));
            }
        }
        for curve_a in &ra.curves {
            let Some(curve_b) = rb.curves.iter().find(|c| c.name == curve_a.name) else {
                diffs.push(format!("{}/curve {} missing", ra.name, curve_a.name));
                continue;
            };
            if curve_a.rows.len() != curve_b.rows.len() {
                diffs.push(format!(
                    "{}/curve {} row counts {} vs {}",
                    ra.name,
                    curve_a.name,
                    curve_a.rows.len(),
                    curve_b.rows.len()
                ));
                continue;
            }
            for (i, (row_a, row_b)) in curve_a.rows.iter().zip(&curve_b.rows).enumerate() {
                for (j, (va, vb)) in row_a.iter().zip(row_b).enumerate() {
                    if !close(*va, *vb) {
                        diffs.push(format!(
                            "{}/curve {} row {i} col {j}: {va:.9e} vs {vb:.9e}",
                            ra.name, curve_a.name
                        ));
                    }
                }
            }
        }
    }
    for rb in &b.experiments {
        if !a.experiments.iter().any(|r| r.name == rb.name) {
            diffs.push(format!("experiment '{}' missing on the left", rb.name));
        }
    }
    if diffs.is_empty() {
        println!("reports agree within tolerance {tol:.1e}");
        ExitCode::SUCCESS
    } else {
        for d in &diffs {
            println!("diff: {d}");
        }
        ExitCode::from(2)
    }
}
