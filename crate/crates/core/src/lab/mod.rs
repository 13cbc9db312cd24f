//! Experiment runner: configuration, seeded input suites, the verification
//! checks and the headline experiments, with CSV reports.

mod calibrate;
mod checks;
mod config;
mod experiments;
pub mod suite;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use calibrate::{calibrate, Calibration};
pub use checks::*;
pub use config::{Constants, ExperimentConfig};
pub use experiments::{decay_input, decay_point, fit_delta, large_part_chain, run_decay, run_orthogonality, run_weak11, weak11_samples, DecayPoint, WeakSample};

use crate::error::Result;

/// Gating rows decide the exit status; advisory rows are reported only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Advisory,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Advisory => "advisory",
        }
    }
}

/// One assertion: `value` compared against `bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Module or experiment the invariant belongs to.
    pub suite: String,
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub status: Status,
}

impl Row {
    fn gate(suite: &str, check: &str, value: f64, bound: f64, ok: bool) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { suite: suite.into(), check: check.into(), value, bound, status }
    }

    pub fn at_most(suite: &str, check: &str, value: f64, bound: f64) -> Self {
        Self::gate(suite, check, value, bound, value <= bound)
    }

    pub fn below(suite: &str, check: &str, value: f64, bound: f64) -> Self {
        Self::gate(suite, check, value, bound, value < bound)
    }

    pub fn above(suite: &str, check: &str, value: f64, bound: f64) -> Self {
        Self::gate(suite, check, value, bound, value > bound)
    }

    /// A yes/no property, recorded as 1 or 0 against 1.
    pub fn holds(suite: &str, check: &str, ok: bool) -> Self {
        Self::gate(suite, check, ok as u8 as f64, 1.0, ok)
    }

    pub fn advisory(suite: &str, check: &str, value: f64, bound: f64) -> Self {
        Self { suite: suite.into(), check: check.into(), value, bound, status: Status::Advisory }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Rows, notes and CSV files produced by one run.
#[derive(Clone, Debug, Default)]
pub struct ExperimentReport {
    pub name: String,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    pub delta_hat: Option<f64>,
}

impl ExperimentReport {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(Row::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.passed())
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        self.rows.extend(rows);
    }

    pub fn merge(&mut self, other: ExperimentReport) {
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
        self.files.extend(other.files);
        if self.delta_hat.is_none() {
            self.delta_hat = other.delta_hat;
        }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// CSV with header `suite,check,value,bound,status`.
    pub fn rows_csv(&self) -> String {
        let mut s = String::from("suite,check,value,bound,status\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:e},{:e},{}", r.suite, r.check, r.value, r.bound, r.status.label());
        }
        s
    }

    /// Writes every CSV into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(s, "[{:>8}] {}/{}: {:.6e} (bound {:.6e})", r.status.label(), r.suite, r.check, r.value, r.bound);
        }
        if let Some(d) = self.delta_hat {
            let _ = writeln!(s, "fitted decay rate: {d:.4}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(s, "{}: {}", self.name, if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Every module check on seeded instances; writes `verify.csv`.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rep = ExperimentReport::new("verify");
    rep.extend(sphere_checks(cfg)?);
    rep.extend(partition_of_unity(cfg.seed));
    rep.extend(cover_identity(cfg.mesh));
    rep.extend(dichotomy(cfg.seed));
    rep.extend(kernel_checks(cfg)?);
    rep.extend(cz_properties(cfg)?);
    rep.extend(convolution_oracle(cfg.seed)?);
    rep.extend(support_exactness(cfg)?);
    rep.extend(identity_check(cfg)?);
    rep.extend(pointwise_control(cfg)?.0);
    rep.extend(direction_nets(cfg)?);
    rep.extend(microlocal_trends(cfg)?);
    rep.extend(packing_chain_check(cfg)?);
    let (rows, decay) = f_level_decay(cfg, cfg.c0)?;
    rep.extend(rows);
    rep.files.push(("f_levels.csv".into(), decay.csv));
    rep.extend(linearization(cfg)?);
    rep.extend(rademacher_menshov(cfg)?);
    rep.files.push(("verify.csv".into(), rep.rows_csv()));
    Ok(rep)
}
