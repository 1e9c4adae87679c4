//! Reproduction of the two worked two-step examples on every engine.
//!
//! Expected values are written as exact expressions and evaluated in double
//! precision. Each engine is driven through its own step functions so the
//! three trajectories are computed independently.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::DVector;

use crate::branch::{self, BranchState};
use crate::classical::{self, ColumnIterate, RowIterate};
use crate::error::Result;
use crate::faults::Faults;
use crate::report::Iteration;
use crate::statevector;
use crate::system::LinearSystem;

pub const TOLERANCE: f64 = 1e-10;

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Rows `(1/√2, 1/√2)`, `(1/√2, −1/√2)`, `b = (2√2, √2)`.
pub fn row_example() -> LinearSystem {
    LinearSystem::from_rows(&[vec![S, S], vec![S, -S]], &[2.0 * 2f64.sqrt(), 2f64.sqrt()])
        .expect("embedded system is valid")
}

/// Columns `(−1/√2, −1/√2)`, `(1/√2, −1/√2)`, `b = (√2, 0)`.
pub fn column_example() -> LinearSystem {
    LinearSystem::from_rows(&[vec![-S, S], vec![-S, -S]], &[2f64.sqrt(), 0.0])
        .expect("embedded system is valid")
}

pub const ROW_X0: [f64; 2] = [1.0, 0.0];
pub const ROW_STEPS: [(usize, f64); 2] = [(1, 1.0 / 3.0), (2, 1.0)];
pub const COLUMN_X0: [f64; 2] = [0.0, 1.0];
pub const COLUMN_STEPS: [(usize, f64); 2] = [(1, 0.5), (1, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Classical,
    Branch,
    Statevector,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Classical, Engine::Branch, Engine::Statevector];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Classical => "classical",
            Engine::Branch => "branch",
            Engine::Statevector => "statevector",
        }
    }
}

/// State after one step, as seen by one engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x_norm: f64,
    pub direction: DVector<f64>,
    pub beta: Option<f64>,
    pub v: Option<f64>,
    pub r: Option<DVector<f64>>,
}

fn unit(x: &DVector<f64>) -> DVector<f64> {
    let n = x.norm();
    if n == 0.0 {
        x.clone()
    } else {
        x / n
    }
}

fn classical_snapshot(x: &DVector<f64>, r: Option<DVector<f64>>) -> Snapshot {
    Snapshot {
        x_norm: x.norm(),
        direction: unit(x),
        beta: None,
        v: None,
        r,
    }
}

/// Trajectory of the given engine over the listed `(t, relaxation)` steps.
pub fn trajectory(
    engine: Engine,
    mode: Iteration,
    system: &LinearSystem,
    x0: &DVector<f64>,
    steps: &[(usize, f64)],
    faults: &Faults,
) -> Result<Vec<Snapshot>> {
    let mut out = Vec::with_capacity(steps.len());
    match (engine, mode) {
        (Engine::Classical, Iteration::Row) => {
            let mut it = RowIterate::new(x0.clone());
            for &(t, relax) in steps {
                it = classical::kaczmarz_step(&it, system, t, relax)?;
                out.push(classical_snapshot(&it.x, None));
            }
        }
        (Engine::Classical, Iteration::Column) => {
            let mut st = ColumnIterate::new(system, x0.clone());
            for &(t, relax) in steps {
                st = classical::column_step(&st, system, t, relax)?;
                out.push(classical_snapshot(&st.x, Some(st.r.clone())));
            }
        }
        (Engine::Branch, _) => {
            let mut st = match mode {
                Iteration::Row => BranchState::row(x0.clone()),
                Iteration::Column => BranchState::column(system, x0.clone()),
            };
            for &(t, relax) in steps {
                let (next, beta) = branch::step(&st, system, t, relax, mode, faults)?;
                st = next;
                out.push(Snapshot {
                    x_norm: st.x.norm(),
                    direction: unit(&st.x),
                    beta: Some(beta),
                    v: Some(st.v),
                    r: st.r.clone(),
                });
            }
        }
        (Engine::Statevector, Iteration::Row) => {
            let mut regs = statevector::init_row_state(x0)?;
            for &(t, relax) in steps {
                let a = system.row(t)?;
                let y = statevector::prepare_y(&regs.x, regs.v, &a, system.rhs_at(t)?, faults)?;
                let x = statevector::apply_row_iteration(y.y, &a, relax)?;
                regs = statevector::RowRegisters {
                    x,
                    v: regs.v / y.beta,
                };
                let (amp, direction) = regs.x.extract_good_branch();
                out.push(Snapshot {
                    x_norm: amp * regs.v,
                    direction,
                    beta: Some(y.beta),
                    v: Some(regs.v),
                    r: None,
                });
            }
        }
        (Engine::Statevector, Iteration::Column) => {
            let mut regs = statevector::init_column_states(x0, system)?;
            for &(t, relax) in steps {
                let step = statevector::apply_column_iteration(&regs, system, t, relax, faults)?;
                regs = step.registers;
                let (amp, direction) = regs.x.extract_good_branch();
                let r = regs.r.as_ref().map(|r| r.good_branch() / regs.delta);
                out.push(Snapshot {
                    x_norm: amp * regs.v,
                    direction,
                    beta: Some(step.beta),
                    v: Some(regs.v),
                    r,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub example: &'static str,
    pub engine: &'static str,
    pub quantity: String,
    pub expected: f64,
    pub actual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.failures().next()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:<12} {:<14} {:>22} {:>22} {:>10}  result",
            "example", "engine", "quantity", "expected", "actual", "|diff|"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<8} {:<12} {:<14} {:>22.16e} {:>22.16e} {:>10.2e}  {}",
                c.example,
                c.engine,
                c.quantity,
                c.expected,
                c.actual,
                (c.expected - c.actual).abs(),
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(
            out,
            "{passed}/{} checks passed in {:.3} s",
            self.checks.len(),
            self.elapsed.as_secs_f64()
        );
        out
    }
}

struct Collector<'a> {
    example: &'static str,
    engine: &'static str,
    checks: &'a mut Vec<Check>,
}

impl Collector<'_> {
    fn value(&mut self, quantity: impl Into<String>, expected: f64, actual: Option<f64>) {
        let actual = actual.unwrap_or(f64::NAN);
        self.checks.push(Check {
            example: self.example,
            engine: self.engine,
            quantity: quantity.into(),
            expected,
            actual,
            passed: (expected - actual).abs() <= TOLERANCE,
        });
    }

    fn vector(&mut self, name: &str, expected: &[f64], actual: Option<&DVector<f64>>) {
        for (i, e) in expected.iter().enumerate() {
            self.value(format!("{name}[{}]", i + 1), *e, actual.and_then(|a| a.get(i).copied()));
        }
    }

    fn error(&mut self, message: String) {
        self.checks.push(Check {
            example: self.example,
            engine: self.engine,
            quantity: format!("run ({message})"),
            expected: 0.0,
            actual: f64::NAN,
            passed: false,
        });
    }
}

fn check_row_example(engine: Engine, faults: &Faults, checks: &mut Vec<Check>) {
    let mut c = Collector {
        example: "row",
        engine: engine.name(),
        checks,
    };
    let sys = row_example();
    let traj = match trajectory(engine, Iteration::Row, &sys, &DVector::from_column_slice(&ROW_X0), &ROW_STEPS, faults) {
        Ok(t) => t,
        Err(e) => return c.error(e.to_string()),
    };
    let (s1, s2) = (&traj[0], &traj[1]);
    let r10 = 10f64.sqrt();
    let r11 = 11f64.sqrt();
    let quantum = engine != Engine::Classical;
    if quantum {
        c.value("beta_1", 1.0 / 3.0, s1.beta);
        c.value("v_1", 3.0, s1.v);
    }
    c.value("|x_1|", r10 / 2.0, Some(s1.x_norm));
    c.vector("x_1/|x_1|", &[3.0 / r10, 1.0 / r10], Some(&s1.direction));
    if quantum {
        c.value("beta_2", 3.0 / r11, s2.beta);
        c.value("v_2", r11, s2.v);
    }
    c.value("|x_2|", 2.0, Some(s2.x_norm));
    c.vector("x_2/|x_2|", &[1.0, 0.0], Some(&s2.direction));
    if quantum {
        let p = s2.v.map(|v| (s2.x_norm / v).powi(2));
        c.value("p_2", 4.0 / 11.0, p);
    }
}

fn check_column_example(engine: Engine, faults: &Faults, checks: &mut Vec<Check>) {
    let mut c = Collector {
        example: "column",
        engine: engine.name(),
        checks,
    };
    let sys = column_example();
    let traj = match trajectory(
        engine,
        Iteration::Column,
        &sys,
        &DVector::from_column_slice(&COLUMN_X0),
        &COLUMN_STEPS,
        faults,
    ) {
        Ok(t) => t,
        Err(e) => return c.error(e.to_string()),
    };
    let (s1, s2) = (&traj[0], &traj[1]);
    let r5 = 5f64.sqrt();
    let quantum = engine != Engine::Classical;
    c.value("|x_1|", r5 / 2.0, Some(s1.x_norm));
    c.vector("x_1/|x_1|", &[-1.0 / r5, 2.0 / r5], Some(&s1.direction));
    c.value("|r_1|", 0.5, s1.r.as_ref().map(|r| r.norm()));
    c.vector("r_1/|r_1|", &[S, S], s1.r.as_ref().map(unit).as_ref());
    if quantum {
        c.value("v_1", 2.0, s1.v);
    }
    c.value("|x_2|", 2f64.sqrt(), Some(s2.x_norm));
    c.vector("x_2/|x_2|", &[-S, S], Some(&s2.direction));
    c.value("|r_2|", 0.0, s2.r.as_ref().map(|r| r.norm()));
    if quantum {
        c.value("v_2", 3.0, s2.v);
    }
}

/// Runs every check; engine errors become failed checks.
pub fn reproduce_paper(faults: &Faults) -> Reproduction {
    let start = Instant::now();
    let mut checks = Vec::new();
    for engine in Engine::ALL {
        check_row_example(engine, faults, &mut checks);
    }
    for engine in Engine::ALL {
        check_column_example(engine, faults, &mut checks);
    }
    Reproduction {
        checks,
        elapsed: start.elapsed(),
    }
}
