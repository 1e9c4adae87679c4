//! Per-step run records shared by every engine.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which family of iteration a run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Iteration {
    /// Relaxed Kaczmarz over rows.
    Row,
    /// Relaxed column iteration (coordinate descent).
    Column,
}

/// Loop controls common to every engine.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Maximum number of steps `T`.
    pub steps: usize,
    /// Stop once the residual norm is at or below this.
    pub tolerance: f64,
    /// Known solution, used to fill the `error` column.
    pub reference: Option<DVector<f64>>,
    /// Keep every iterate in `RunReport::iterates`.
    pub record_iterates: bool,
}

impl RunSettings {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            tolerance: DEFAULT_TOLERANCE,
            reference: None,
            record_iterates: false,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_reference(mut self, reference: Option<DVector<f64>>) -> Self {
        self.reference = reference;
        self
    }

    pub fn with_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }

    pub fn error_of(&self, x: &DVector<f64>) -> Option<f64> {
        self.reference.as_ref().map(|r| (x - r).norm())
    }
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxSteps,
}

/// One row of a run. Record `k` describes the iterate `x_k`; `t` and
/// `relaxation` are the index and parameter of the step that produced it
/// (absent for `k = 0`). Simulator-only fields are `None` for classical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub t: Option<usize>,
    pub relaxation: Option<f64>,
    pub x_norm: f64,
    pub residual: f64,
    pub error: Option<f64>,
    /// Good-branch amplitude `‖x_k‖ / v_k`.
    pub amplitude: Option<f64>,
    pub success_probability: Option<f64>,
    pub v: Option<f64>,
    /// Mixing coefficient used by the step (`β_{t_k}` or `√(v δ / (1 + v δ))`).
    pub beta: Option<f64>,
    /// Residual-register amplitude `δ ‖r_k‖` (column mode).
    pub residual_amplitude: Option<f64>,
    /// `|⟨x̂_sim, x̂_oracle⟩|` for statevector runs.
    pub fidelity: Option<f64>,
    pub ancillas: Option<usize>,
    pub qubits: Option<usize>,
}

impl StepRecord {
    pub fn classical(k: usize, t: Option<usize>, relaxation: Option<f64>, x_norm: f64, residual: f64) -> Self {
        Self {
            k,
            t,
            relaxation,
            x_norm,
            residual,
            error: None,
            amplitude: None,
            success_probability: None,
            v: None,
            beta: None,
            residual_amplitude: None,
            fidelity: None,
            ancillas: None,
            qubits: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub engine: String,
    pub records: Vec<StepRecord>,
    pub status: Status,
    /// Final iterate in the coordinates of the system that was iterated on.
    pub solution: Vec<f64>,
    /// `x_k` for every record, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterates: Vec<Vec<f64>>,
}

impl RunReport {
    pub fn new(engine: impl Into<String>) -> Self {
        Self {
            engine: engine.into(),
            records: Vec::new(),
            status: Status::MaxSteps,
            solution: Vec::new(),
            iterates: Vec::new(),
        }
    }

    /// Appends a record; `k` must strictly increase.
    pub fn push(&mut self, record: StepRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.k <= last.k {
                return Err(Error::Usage(format!(
                    "record k={} does not follow k={}",
                    record.k, last.k
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn steps(&self) -> usize {
        self.last().map_or(0, |r| r.k)
    }

    pub fn final_residual(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.residual)
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Vec<StepRecord>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Parse {
                    line: i + 1,
                    column: e.column(),
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// Fixed-width table of the records.
    pub fn table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>5} {:>4} {:>10} {:>13} {:>13} {:>13} {:>13} {:>13}",
            "k", "t", "relax", "|x|", "residual", "error", "amplitude", "p_success"
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>5} {:>4} {:>10} {:>13} {:>13.6e} {:>13} {:>13} {:>13}",
                r.k,
                r.t.map_or_else(|| "-".into(), |t| t.to_string()),
                r.relaxation.map_or_else(|| "-".into(), |v| format!("{v:.4}")),
                format!("{:.6e}", r.x_norm),
                r.residual,
                opt(r.error),
                opt(r.amplitude),
                opt(r.success_probability),
            );
        }
        out
    }
}

/// `⌈log₂ n⌉`, the qubit count of an `n`-level data register.
pub fn data_qubits(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_strictly_ordered() {
        let mut report = RunReport::new("test");
        report.push(StepRecord::classical(0, None, None, 1.0, 1.0)).unwrap();
        report.push(StepRecord::classical(1, Some(1), Some(1.0), 1.0, 0.5)).unwrap();
        assert!(report.push(StepRecord::classical(1, Some(1), Some(1.0), 1.0, 0.5)).is_err());
        assert_eq!(report.steps(), 1);
    }

    #[test]
    fn json_lines_carry_every_field() {
        let mut report = RunReport::new("test");
        report.push(StepRecord::classical(0, None, None, 1.0, 2.0)).unwrap();
        let text = report.to_json_lines();
        let value: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        for key in [
            "k",
            "t",
            "relaxation",
            "x_norm",
            "residual",
            "error",
            "amplitude",
            "success_probability",
        ] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        assert_eq!(RunReport::from_json_lines(&text).unwrap(), report.records);
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(data_qubits(1), 0);
        assert_eq!(data_qubits(2), 1);
        assert_eq!(data_qubits(3), 2);
        assert_eq!(data_qubits(4), 2);
        assert_eq!(data_qubits(5), 3);
        assert_eq!(data_qubits(1000), 10);
    }
}
