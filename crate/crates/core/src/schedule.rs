//! Relaxation schedules and row/column selection rules.
//!
//! Step indices `k` are 0-based; selected indices `t` are 1-based.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where relaxation values are allowed to live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// `[0, 2]`, the classical convergence range.
    Classical,
    /// `[0, 1]`, where the block-encoded unitaries stay real.
    Quantum,
}

impl Domain {
    pub fn upper(self) -> f64 {
        match self {
            Domain::Classical => 2.0,
            Domain::Quantum => 1.0,
        }
    }

    pub fn contains(self, value: f64) -> bool {
        (0.0..=self.upper()).contains(&value)
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Classical => "classical [0, 2]",
            Domain::Quantum => "quantum-constructible [0, 1]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant(f64),
    Sequence(Vec<f64>),
    /// `initial / (k + 1)`.
    Decaying(f64),
}

impl FromStr for ScheduleKind {
    type Err = Error;

    /// `const:V`, `seq:V1,V2,...`, `decay:V`, or a bare number for a constant.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or(("const", s));
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid relaxation value `{v}`")))
        };
        match kind {
            "const" | "constant" => Ok(Self::Constant(num(rest)?)),
            "decay" | "decaying" => Ok(Self::Decaying(num(rest)?)),
            "seq" | "sequence" => Ok(Self::Sequence(
                rest.split(',').map(num).collect::<Result<Vec<_>>>()?,
            )),
            other => Err(Error::Config(format!("unknown schedule kind `{other}`"))),
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "const:{v}"),
            Self::Decaying(v) => write!(f, "decay:{v}"),
            Self::Sequence(vs) => {
                let parts: Vec<String> = vs.iter().map(f64::to_string).collect();
                write!(f, "seq:{}", parts.join(","))
            }
        }
    }
}

/// A validated relaxation sequence `λ_k` (or `ω_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSchedule {
    kind: ScheduleKind,
    domain: Domain,
}

impl RelaxationSchedule {
    pub fn new(kind: ScheduleKind, domain: Domain) -> Result<Self> {
        let check = |k: usize, v: f64| {
            if domain.contains(v) {
                Ok(())
            } else {
                Err(Error::ScheduleDomain {
                    k,
                    value: v,
                    domain: domain.name(),
                })
            }
        };
        match &kind {
            ScheduleKind::Constant(v) | ScheduleKind::Decaying(v) => check(0, *v)?,
            ScheduleKind::Sequence(vs) => {
                if vs.is_empty() {
                    return Err(Error::Config("relaxation sequence is empty".into()));
                }
                for (k, v) in vs.iter().enumerate() {
                    check(k, *v)?;
                }
            }
        }
        Ok(Self { kind, domain })
    }

    pub fn constant(value: f64, domain: Domain) -> Result<Self> {
        Self::new(ScheduleKind::Constant(value), domain)
    }

    pub fn sequence(values: Vec<f64>, domain: Domain) -> Result<Self> {
        Self::new(ScheduleKind::Sequence(values), domain)
    }

    pub fn decaying(initial: f64, domain: Domain) -> Result<Self> {
        Self::new(ScheduleKind::Decaying(initial), domain)
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Re-validates the same values against another domain.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Self::new(self.kind.clone(), domain)
    }

    /// Number of steps the schedule can drive, if finite.
    pub fn finite_len(&self) -> Option<usize> {
        match &self.kind {
            ScheduleKind::Sequence(vs) => Some(vs.len()),
            _ => None,
        }
    }

    pub fn relaxation_at(&self, k: usize) -> Result<f64> {
        let value = match &self.kind {
            ScheduleKind::Constant(v) => *v,
            ScheduleKind::Decaying(v) => v / (k as f64 + 1.0),
            ScheduleKind::Sequence(vs) => *vs.get(k).ok_or_else(|| {
                Error::Usage(format!(
                    "relaxation sequence has {} values, step {k} requested",
                    vs.len()
                ))
            })?,
        };
        if !self.domain.contains(value) {
            return Err(Error::ScheduleDomain {
                k,
                value,
                domain: self.domain.name(),
            });
        }
        Ok(value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    Cyclic,
    RandomUniform { seed: u64 },
    /// Largest absolute entry of the supplied scores (row residuals in row
    /// mode, column correlations `A^T r` in column mode).
    GreedyResidual,
    /// Fixed 1-based indices, one per step.
    Explicit(Vec<usize>),
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    /// `cyclic`, `random:SEED`, `greedy`, or `seq:T1,T2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "cyclic" => Ok(Self::Cyclic),
            "greedy" | "greedy-residual" => Ok(Self::GreedyResidual),
            "random" | "random-uniform" => {
                let seed = if rest.is_empty() {
                    0
                } else {
                    rest.parse()
                        .map_err(|_| Error::Config(format!("invalid seed `{rest}`")))?
                };
                Ok(Self::RandomUniform { seed })
            }
            "seq" | "explicit" => Ok(Self::Explicit(
                rest.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Config(format!("invalid index `{v}`")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            )),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cyclic => f.write_str("cyclic"),
            Self::GreedyResidual => f.write_str("greedy"),
            Self::RandomUniform { seed } => write!(f, "random:{seed}"),
            Self::Explicit(ts) => {
                let parts: Vec<String> = ts.iter().map(usize::to_string).collect();
                write!(f, "seq:{}", parts.join(","))
            }
        }
    }
}

impl SelectionStrategy {
    pub fn needs_scores(&self) -> bool {
        matches!(self, Self::GreedyResidual)
    }

    /// Chooses `t_k` for an `n`-dimensional system.
    ///
    /// Cyclic returns `(k mod n) + 1`. Random draws are a pure function of
    /// `(seed, k)`, so replaying a run reproduces every index.
    pub fn select_index(&self, n: usize, k: usize, scores: Option<&[f64]>) -> Result<usize> {
        if n == 0 {
            return Err(Error::Dimension("cannot select from an empty system".into()));
        }
        let t = match self {
            Self::Cyclic => k % n + 1,
            Self::RandomUniform { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(*seed, k as u64));
                rng.random_range(1..=n)
            }
            Self::GreedyResidual => {
                let scores = scores.ok_or_else(|| {
                    Error::Usage("greedy selection needs the current residual".into())
                })?;
                if scores.len() != n {
                    return Err(Error::Dimension(format!(
                        "residual has length {}, system has {n} rows",
                        scores.len()
                    )));
                }
                // first maximum wins ties
                let mut best = 0;
                for (i, s) in scores.iter().enumerate() {
                    if s.abs() > scores[best].abs() {
                        best = i;
                    }
                }
                best + 1
            }
            Self::Explicit(ts) => *ts.get(k).ok_or_else(|| {
                Error::Usage(format!(
                    "explicit index sequence has {} entries, step {k} requested",
                    ts.len()
                ))
            })?,
        };
        if t == 0 || t > n {
            return Err(Error::IndexOutOfRange { index: t, len: n });
        }
        Ok(t)
    }
}

// splitmix64 finalizer over (seed, k)
fn mix(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
