//! Run configuration and its TOML text form.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{SystemFormat, Source};
use crate::report::{Iteration, DEFAULT_TOLERANCE};
use crate::schedule::{Domain, RelaxationSchedule, ScheduleKind, SelectionStrategy};
use crate::statevector::DEFAULT_MEMORY_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    ClassicalRow,
    ClassicalColumn,
    SimRow,
    SimColumn,
    BranchRow,
    BranchColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Classical,
    Statevector,
    Branch,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::ClassicalRow,
        Mode::ClassicalColumn,
        Mode::SimRow,
        Mode::SimColumn,
        Mode::BranchRow,
        Mode::BranchColumn,
    ];

    pub fn iteration(self) -> Iteration {
        match self {
            Mode::ClassicalRow | Mode::SimRow | Mode::BranchRow => Iteration::Row,
            _ => Iteration::Column,
        }
    }

    pub fn engine(self) -> EngineKind {
        match self {
            Mode::ClassicalRow | Mode::ClassicalColumn => EngineKind::Classical,
            Mode::SimRow | Mode::SimColumn => EngineKind::Statevector,
            Mode::BranchRow | Mode::BranchColumn => EngineKind::Branch,
        }
    }

    /// Relaxation domain accepted by the engine.
    pub fn domain(self) -> Domain {
        match self.engine() {
            EngineKind::Classical => Domain::Classical,
            _ => Domain::Quantum,
        }
    }

    /// Step budget used when none is configured. Statevector runs grow
    /// exponentially, so they get a small one.
    pub fn default_steps(self) -> usize {
        match self {
            Mode::SimRow => 4,
            Mode::SimColumn => 6,
            _ => 10_000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::ClassicalRow => "classical-row",
            Mode::ClassicalColumn => "classical-column",
            Mode::SimRow => "sim-row",
            Mode::SimColumn => "sim-column",
            Mode::BranchRow => "branch-row",
            Mode::BranchColumn => "branch-column",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

/// Starting vector: `e1` (default), `basis:I`, or a comma-separated vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum X0Spec {
    #[default]
    Default,
    Basis(usize),
    Vector(Vec<f64>),
}

impl X0Spec {
    pub fn resolve(&self, n: usize) -> Result<DVector<f64>> {
        match self {
            X0Spec::Default => X0Spec::Basis(1).resolve(n),
            X0Spec::Basis(i) => {
                if *i == 0 || *i > n {
                    return Err(Error::IndexOutOfRange { index: *i, len: n });
                }
                let mut x = DVector::zeros(n);
                x[i - 1] = 1.0;
                Ok(x)
            }
            X0Spec::Vector(v) => {
                if v.len() != n {
                    return Err(Error::Dimension(format!(
                        "x0 has {} entries, system has dimension {n}",
                        v.len()
                    )));
                }
                Ok(DVector::from_column_slice(v))
            }
        }
    }
}

impl fmt::Display for X0Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            X0Spec::Default => f.write_str("e1"),
            X0Spec::Basis(i) => write!(f, "basis:{i}"),
            X0Spec::Vector(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

impl FromStr for X0Spec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e1" || s == "default" {
            return Ok(X0Spec::Default);
        }
        if let Some(i) = s.strip_prefix("basis:").or_else(|| s.strip_prefix('e')) {
            return i
                .trim()
                .parse()
                .map(X0Spec::Basis)
                .map_err(|_| Error::Config(format!("invalid basis index in `{s}`")));
        }
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid x0 entry `{v}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(X0Spec::Vector)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub system: Option<Source>,
    pub rhs: Option<Source>,
    pub format: SystemFormat,
    pub x0: X0Spec,
    pub schedule: ScheduleKind,
    pub strategy: SelectionStrategy,
    /// `None` means `Mode::default_steps`.
    pub steps: Option<usize>,
    pub tolerance: f64,
    pub seed: u64,
    pub memory_limit: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::ClassicalRow,
            system: None,
            rhs: None,
            format: SystemFormat::Csv,
            x0: X0Spec::Default,
            schedule: ScheduleKind::Constant(1.0),
            strategy: SelectionStrategy::Cyclic,
            steps: None,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            memory_limit: DEFAULT_MEMORY_LIMIT,
            out: None,
        }
    }
}

/// Flat string-valued form used for TOML.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    mode: Option<String>,
    system: Option<PathBuf>,
    system_inline: Option<String>,
    rhs: Option<PathBuf>,
    rhs_inline: Option<String>,
    format: Option<String>,
    x0: Option<String>,
    schedule: Option<String>,
    strategy: Option<String>,
    steps: Option<u64>,
    tol: Option<f64>,
    seed: Option<u64>,
    mem_limit: Option<u64>,
    out: Option<PathBuf>,
}

impl RunConfig {
    pub fn steps(&self) -> usize {
        self.steps.unwrap_or_else(|| self.mode.default_steps())
    }

    pub fn relaxation_schedule(&self) -> Result<RelaxationSchedule> {
        RelaxationSchedule::new(self.schedule.clone(), self.mode.domain())
    }

    pub fn to_toml(&self) -> Result<String> {
        let split = |s: &Option<Source>| match s {
            Some(Source::Path(p)) => (Some(p.clone()), None),
            Some(Source::Inline(t)) => (None, Some(t.clone())),
            None => (None, None),
        };
        let (system, system_inline) = split(&self.system);
        let (rhs, rhs_inline) = split(&self.rhs);
        let file = ConfigFile {
            mode: Some(self.mode.to_string()),
            system,
            system_inline,
            rhs,
            rhs_inline,
            format: Some(self.format.to_string()),
            x0: Some(self.x0.to_string()),
            schedule: Some(self.schedule.to_string()),
            strategy: Some(self.strategy.to_string()),
            steps: self.steps.map(|s| s as u64),
            tol: Some(self.tolerance),
            seed: Some(self.seed),
            mem_limit: Some(self.memory_limit),
            out: self.out.clone(),
        };
        toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses TOML; absent keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let join = |path: Option<PathBuf>, inline: Option<String>, what: &str| match (path, inline) {
            (Some(_), Some(_)) => Err(Error::Config(format!("both {what} and {what}_inline are set"))),
            (Some(p), None) => Ok(Some(Source::Path(p))),
            (None, Some(t)) => Ok(Some(Source::Inline(t))),
            (None, None) => Ok(None),
        };
        cfg.system = join(file.system, file.system_inline, "system")?;
        cfg.rhs = join(file.rhs, file.rhs_inline, "rhs")?;
        if let Some(m) = file.mode {
            cfg.mode = m.parse()?;
        }
        if let Some(f) = file.format {
            cfg.format = f.parse()?;
        }
        if let Some(x) = file.x0 {
            cfg.x0 = x.parse()?;
        }
        if let Some(s) = file.schedule {
            cfg.schedule = s.parse()?;
        }
        if let Some(s) = file.strategy {
            cfg.strategy = s.parse()?;
        }
        cfg.steps = file.steps.map(|s| s as usize);
        if let Some(t) = file.tol {
            cfg.tolerance = t;
        }
        if let Some(s) = file.seed {
            cfg.seed = s;
        }
        if let Some(m) = file.mem_limit {
            cfg.memory_limit = m;
        }
        cfg.out = file.out;
        Ok(cfg)
    }
}
