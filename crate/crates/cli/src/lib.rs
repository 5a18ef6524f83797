//! Configuration, suites and reports behind the `hmtlab` binary.

pub mod config;
pub mod report;
pub mod suites;

use std::path::Path;
use std::time::Instant;

pub use config::RunConfig;
pub use report::{AllReport, Check, SuiteReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Precondition(m) => m.clone(),
            e => e.to_string(),
        }
    }

    /// 2 for usage errors, 3 for preconditions and I/O; 1 is reserved for
    /// failed checks.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Green,
    Maximize,
    Certify,
    RearrangeCheck,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Green, Suite::Maximize, Suite::Certify, Suite::RearrangeCheck];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Green => "green",
            Suite::Maximize => "maximize",
            Suite::Certify => "certify",
            Suite::RearrangeCheck => "rearrange-check",
        }
    }
}

/// Runs one suite, writing `report.json` and its CSV tables into `dir`.
pub fn run_suite(suite: Suite, cfg: &RunConfig, dir: &Path) -> Result<SuiteReport, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let start = Instant::now();
    let mut rep = SuiteReport::new(suite.name());
    match suite {
        Suite::Green => suites::green(cfg, dir, &mut rep)?,
        Suite::Maximize => suites::maximize(cfg, dir, &mut rep)?,
        Suite::Certify => suites::certify(cfg, dir, &mut rep)?,
        Suite::RearrangeCheck => suites::rearrange_check(cfg, dir, &mut rep)?,
    }
    rep.finish(start.elapsed().as_secs_f64());
    report::write_json(&dir.join("report.json"), &rep)?;
    Ok(rep)
}

pub fn cmd_green(cfg: &RunConfig, dir: &Path) -> Result<SuiteReport, CliError> {
    run_suite(Suite::Green, cfg, dir)
}

pub fn cmd_maximize(cfg: &RunConfig, dir: &Path) -> Result<SuiteReport, CliError> {
    run_suite(Suite::Maximize, cfg, dir)
}

pub fn cmd_certify(cfg: &RunConfig, dir: &Path) -> Result<SuiteReport, CliError> {
    run_suite(Suite::Certify, cfg, dir)
}

pub fn cmd_rearrange_check(cfg: &RunConfig, dir: &Path) -> Result<SuiteReport, CliError> {
    run_suite(Suite::RearrangeCheck, cfg, dir)
}

/// Runs every suite concurrently, each in its own subdirectory of `out`,
/// and writes a combined `report.json` into `out`.
pub fn run_all(cfg: &RunConfig, out: &Path) -> Result<AllReport, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let start = Instant::now();
    let results: Vec<Result<SuiteReport, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = Suite::ALL
            .iter()
            .map(|&suite| s.spawn(move || run_suite(suite, cfg, &out.join(suite.name()))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    });
    let suites = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let all = AllReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    report::write_json(&out.join("report.json"), &all)?;
    Ok(all)
}
