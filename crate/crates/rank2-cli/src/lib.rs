//! Experiment runner for the `rank2` crate.
//!
//! A run reads one TOML config, executes a verification suite and writes
//! `report.json` plus one CSV per table. Exit codes: 0 when every check
//! passes, 1 when a check fails, 2 on a config error (no outputs written).

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

pub mod config;
pub mod generator;
pub mod report;
pub mod suites;

use config::{ConfigError, Resolved};
use report::{emit_report, Report, Table, Versions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    EllipticCheck,
    BuildOperators,
    CommuteScan,
    BaVerify,
    FlowRun,
    FullSuite,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::EllipticCheck => "elliptic-check",
            Suite::BuildOperators => "build-operators",
            Suite::CommuteScan => "commute-scan",
            Suite::BaVerify => "ba-verify",
            Suite::FlowRun => "flow-run",
            Suite::FullSuite => "full-suite",
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Loads and resolves a config file with command-line overrides.
pub fn prepare(suite: Suite, config: &Path, seed: Option<u64>, tols: &[String]) -> Result<Resolved, ConfigError> {
    let tols = tols.iter().map(|t| config::parse_tol(t)).collect::<Result<Vec<_>, _>>()?;
    config::resolve(config::load(config)?, suite, seed, &tols)
}

/// Runs `suite` in memory.
pub fn execute(suite: Suite, r: &Resolved) -> (Report, Vec<Table>) {
    let t0 = Instant::now();
    let out = match suite {
        Suite::EllipticCheck => suites::elliptic_check(r),
        Suite::BuildOperators => suites::build_operators(r),
        Suite::CommuteScan => suites::commute_scan(r),
        Suite::BaVerify => suites::ba_verify(r),
        Suite::FlowRun => suites::flow_run(r),
        Suite::FullSuite => suites::full_suite(r),
    };
    let mut timings = out.timings;
    timings.insert("total".into(), t0.elapsed().as_secs_f64());
    let report = Report {
        subcommand: suite.name().into(),
        config: serde_json::to_value(&r.config).expect("config is plain data"),
        seed: r.seed,
        versions: Versions::default(),
        checks: out.checks,
        timings,
        tables: out.tables.iter().map(|t| t.file.clone()).collect(),
        details: out.details,
    };
    (report, out.tables)
}

/// The whole command: prepare, execute, write, and map the outcome to an exit code.
pub fn run(suite: Suite, config: &Path, out_dir: &Path, seed: Option<u64>, tols: &[String]) -> i32 {
    let resolved = match prepare(suite, config, seed, tols) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let (report, tables) = execute(suite, &resolved);
    for c in &report.checks {
        let value = c.value.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
        let rel = serde_json::to_value(c.relation).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        println!("{} {:<40} {value} {rel} {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.tolerance);
        if let Some(n) = &c.note {
            if !c.pass {
                println!("     {n}");
            }
        }
    }
    if let Err(e) = emit_report(&report, &tables, out_dir) {
        eprintln!("error: {e:#}");
        return EXIT_CHECK_FAILURE;
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILURE
    }
}
