//! `solve`: load, normalize, dispatch to an engine, summarize.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::branch;
use crate::classical;
use crate::config::{EngineKind, RunConfig};
use crate::error::{Error, Result};
use crate::faults::Faults;
use crate::io;
use crate::report::{Iteration, RunReport, RunSettings, Status};
use crate::statevector::{self, SimOptions};
use crate::system::{LinearSystem, Normalization};

/// Largest dimension for which a direct reference solution is computed.
pub const REFERENCE_LIMIT: usize = 2000;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_STEPS: i32 = 2;

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_CONVERGED,
        Status::MaxSteps => EXIT_MAX_STEPS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: String,
    pub status: Status,
    pub steps: usize,
    pub final_residual: f64,
    /// Iterate mapped back to the coordinates of the loaded system.
    pub solution: Vec<f64>,
    pub normalization: Normalization,
    pub v: Option<f64>,
    pub success_probability: Option<f64>,
    pub ancillas: Option<usize>,
    pub qubits: Option<usize>,
}

impl Summary {
    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode: {}", self.mode);
        let _ = writeln!(
            out,
            "status: {}",
            match self.status {
                Status::Converged => "converged",
                Status::MaxSteps => "max-steps",
            }
        );
        let _ = writeln!(out, "steps: {}", self.steps);
        let _ = writeln!(out, "final residual: {:.6e}", self.final_residual);
        let sol: Vec<String> = self.solution.iter().map(|v| format!("{v:.12}")).collect();
        let _ = writeln!(out, "solution: [{}]", sol.join(", "));
        let _ = writeln!(
            out,
            "normalization: {}",
            match self.normalization {
                Normalization::Raw => "none",
                Normalization::RowsNormalized => "rows",
                Normalization::ColumnsNormalized => "columns (solution de-normalized)",
            }
        );
        if let Some(v) = self.v {
            let _ = writeln!(out, "v: {v:.12}");
        }
        if let Some(p) = self.success_probability {
            let _ = writeln!(out, "success probability: {p:.12}");
        }
        if let (Some(a), Some(q)) = (self.ancillas, self.qubits) {
            let _ = writeln!(out, "ancillas: {a}");
            let _ = writeln!(out, "qubits: {q}");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub summary: Summary,
    pub system: LinearSystem,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.report.status)
    }
}

pub fn load(config: &RunConfig) -> Result<LinearSystem> {
    let source = config
        .system
        .as_ref()
        .ok_or_else(|| Error::Usage("no system given (use --system or --inline)".into()))?;
    match &config.rhs {
        Some(rhs) => io::load_system_with_rhs(source, rhs, config.format),
        None => io::load_system(source, config.format),
    }
}

/// Normalizes rows or columns to match the mode.
pub fn prepare(system: &LinearSystem, mode: Iteration) -> Result<LinearSystem> {
    match mode {
        Iteration::Row => system.normalize_rows(),
        Iteration::Column => system.normalize_columns(),
    }
}

/// Runs the configured engine on an already-loaded system.
pub fn solve_system(config: &RunConfig, raw: &LinearSystem, faults: &Faults) -> Result<Outcome> {
    let schedule = config.relaxation_schedule()?;
    let system = prepare(raw, config.mode.iteration())?;
    let x0 = config.x0.resolve(system.dim())?;
    let reference = if system.dim() <= REFERENCE_LIMIT {
        classical::exact_solution(&system)
    } else {
        None
    };
    let settings = RunSettings::new(config.steps())
        .with_tolerance(config.tolerance)
        .with_reference(reference);
    let strategy = &config.strategy;
    let mode = config.mode.iteration();
    let report = match config.mode.engine() {
        EngineKind::Classical => classical::run_classical(&system, &x0, &schedule, strategy, &settings, mode)?,
        EngineKind::Branch => branch::run_branch(&system, &x0, &schedule, strategy, &settings, mode, faults)?,
        EngineKind::Statevector => {
            let options = SimOptions {
                memory_limit: config.memory_limit,
                faults: *faults,
            };
            let run = match mode {
                Iteration::Row => statevector::run_algorithm1,
                Iteration::Column => statevector::run_algorithm2,
            };
            run(&system, &x0, &schedule, strategy, &settings, &options)?.0
        }
    };
    let last = report.last().expect("every run records its initial state");
    let solution = system.denormalize_solution(&DVector::from_column_slice(&report.solution));
    let summary = Summary {
        mode: config.mode.to_string(),
        status: report.status,
        steps: report.steps(),
        final_residual: last.residual,
        solution: solution.as_slice().to_vec(),
        normalization: system.normalization(),
        v: last.v,
        success_probability: last.success_probability,
        ancillas: last.ancillas,
        qubits: last.qubits,
    };
    Ok(Outcome {
        report,
        summary,
        system,
    })
}

pub fn solve(config: &RunConfig, faults: &Faults) -> Result<Outcome> {
    let raw = load(config)?;
    solve_system(config, &raw, faults)
}

/// Writes `records.jsonl`, `summary.txt`, `config.toml` and `scaling.json`.
pub fn write_outputs(outcome: &Outcome, config: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("records.jsonl"), outcome.report.to_json_lines())?;
    fs::write(dir.join("summary.txt"), outcome.summary.text())?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    let scaling = serde_json::to_string_pretty(outcome.system.scaling())
        .map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join("scaling.json"), scaling)?;
    Ok(())
}
