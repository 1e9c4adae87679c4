//! Good-branch simulator: the post-selected iterate plus its amplitude
//! bookkeeping, without the ancilla registers.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::faults::Faults;
use crate::report::{data_qubits, Iteration, RunReport, RunSettings, Status, StepRecord};
use crate::schedule::{Domain, RelaxationSchedule, SelectionStrategy};
use crate::statevector::column_weights;
use crate::system::LinearSystem;

const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    pub x: DVector<f64>,
    pub v: f64,
    /// Tracked residual, column mode only.
    pub r: Option<DVector<f64>>,
    pub delta: f64,
    pub k: usize,
}

impl BranchState {
    /// Row-mode state; `v_0 = ‖x0‖`, or 1 for `x0 = 0`.
    pub fn row(x0: DVector<f64>) -> Self {
        let norm = x0.norm();
        Self {
            x: x0,
            v: if norm > 0.0 { norm } else { 1.0 },
            r: None,
            delta: 1.0,
            k: 0,
        }
    }

    /// Column-mode state with `δ = 1/‖r_0‖` (1 when `r_0` is zero or unit).
    pub fn column(system: &LinearSystem, x0: DVector<f64>) -> Self {
        let mut state = Self::row(x0);
        state.v = 1.0;
        let r = system.residual(&state.x);
        let norm = r.norm();
        state.delta = if norm == 0.0 || (norm - 1.0).abs() <= UNIT_TOLERANCE {
            1.0
        } else {
            1.0 / norm
        };
        state.r = Some(r);
        state
    }

    pub fn amplitude(&self) -> f64 {
        self.x.norm() / self.v
    }

    /// `‖x‖² / v²`.
    pub fn success_probability(&self) -> f64 {
        let a = self.amplitude();
        a * a
    }

    pub fn residual_amplitude(&self) -> Option<f64> {
        self.r.as_ref().map(|r| self.delta * r.norm())
    }
}

fn check_relaxation(name: &'static str, value: f64) -> Result<()> {
    if Domain::Quantum.contains(value) {
        Ok(())
    } else {
        Err(Error::Domain {
            parameter: name,
            value,
        })
    }
}

/// `x ← x + λ(b_t − a_tᵀx)a_t`, `v ← √(v² + b_t²)`.
pub fn row_branch_step(state: &BranchState, system: &LinearSystem, t: usize, relaxation: f64) -> Result<BranchState> {
    row_step(state, system, t, relaxation, &Faults::none()).map(|(s, _)| s)
}

/// `x_t += ω c_tᵀr`, `r ← (I − ω c_t c_tᵀ) r`, `v ← v + 1/δ`.
pub fn column_branch_step(state: &BranchState, system: &LinearSystem, t: usize, relaxation: f64) -> Result<BranchState> {
    column_step(state, system, t, relaxation, &Faults::none()).map(|(s, _)| s)
}

/// One step of either mode; also returns the mixing coefficient `β` used.
pub fn step(
    state: &BranchState,
    system: &LinearSystem,
    t: usize,
    relaxation: f64,
    mode: Iteration,
    faults: &Faults,
) -> Result<(BranchState, f64)> {
    match mode {
        Iteration::Row => row_step(state, system, t, relaxation, faults),
        Iteration::Column => column_step(state, system, t, relaxation, faults),
    }
}

fn row_step(
    state: &BranchState,
    system: &LinearSystem,
    t: usize,
    relaxation: f64,
    faults: &Faults,
) -> Result<(BranchState, f64)> {
    check_relaxation("lambda", relaxation)?;
    system.require_unit_rows()?;
    system.check_index(t)?;
    let a = system.matrix().row(t - 1);
    let b = system.rhs()[t - 1];
    let mut gap = b;
    for (ai, xi) in a.iter().zip(state.x.iter()) {
        gap -= ai * xi;
    }
    let mut x = state.x.clone();
    for (xi, ai) in x.iter_mut().zip(a.iter()) {
        *xi += relaxation * gap * ai;
    }
    let h = state.v.hypot(b);
    let (beta, _) = faults.mixing(state.v / h, b / h);
    let v = if faults.beta_offset == 0.0 { h } else { state.v / beta };
    Ok((
        BranchState {
            x,
            v,
            r: None,
            delta: state.delta,
            k: state.k + 1,
        },
        beta,
    ))
}

fn column_step(
    state: &BranchState,
    system: &LinearSystem,
    t: usize,
    relaxation: f64,
    faults: &Faults,
) -> Result<(BranchState, f64)> {
    check_relaxation("omega", relaxation)?;
    system.require_unit_columns()?;
    system.check_index(t)?;
    let r = state
        .r
        .as_ref()
        .ok_or_else(|| Error::Precondition("column step on a row-mode branch state".into()))?;
    let c = system.matrix().column(t - 1);
    let mut proj = 0.0;
    for (ci, ri) in c.iter().zip(r.iter()) {
        proj += ci * ri;
    }
    let step = relaxation * proj;
    let mut x = state.x.clone();
    x[t - 1] += step;
    let mut next_r = r.clone();
    for (ri, ci) in next_r.iter_mut().zip(c.iter()) {
        *ri -= step * ci;
    }
    let (beta, gamma) = column_weights(state.v, state.delta);
    let (beta, _) = faults.mixing(beta, gamma);
    Ok((
        BranchState {
            x,
            v: state.v + 1.0 / state.delta,
            r: Some(next_r),
            delta: state.delta,
            k: state.k + 1,
        },
        beta,
    ))
}

fn branch_record(
    state: &BranchState,
    t: Option<usize>,
    relaxation: Option<f64>,
    beta: Option<f64>,
    residual: f64,
    mode: Iteration,
    settings: &RunSettings,
) -> StepRecord {
    let ancillas = match mode {
        Iteration::Row => 3 * state.k + 2,
        Iteration::Column => 2 * (state.k + 1),
    };
    let mut rec = StepRecord::classical(state.k, t, relaxation, state.x.norm(), residual);
    rec.error = settings.error_of(&state.x);
    rec.amplitude = Some(state.amplitude());
    rec.success_probability = Some(state.success_probability());
    rec.v = Some(state.v);
    rec.beta = beta;
    rec.residual_amplitude = state.residual_amplitude();
    rec.ancillas = Some(ancillas);
    rec.qubits = Some(ancillas + data_qubits(state.x.len()));
    rec
}

/// Runs the compressed simulation. Rows (or columns) must already be unit.
pub fn run_branch(
    system: &LinearSystem,
    x0: &DVector<f64>,
    schedule: &RelaxationSchedule,
    strategy: &SelectionStrategy,
    settings: &RunSettings,
    mode: Iteration,
    faults: &Faults,
) -> Result<RunReport> {
    let n = system.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has length {}, system has dimension {n}",
            x0.len()
        )));
    }
    schedule.with_domain(Domain::Quantum)?;
    match mode {
        Iteration::Row => system.require_unit_rows()?,
        Iteration::Column => system.require_unit_columns()?,
    }
    let mut report = RunReport::new(match mode {
        Iteration::Row => "branch-row",
        Iteration::Column => "branch-column",
    });
    let mut state = match mode {
        Iteration::Row => BranchState::row(x0.clone()),
        Iteration::Column => BranchState::column(system, x0.clone()),
    };
    let residual_of = |s: &BranchState| match &s.r {
        Some(r) => r.norm(),
        None => system.residual_norm(&s.x),
    };
    let keep = |report: &mut RunReport, s: &BranchState| {
        if settings.record_iterates {
            report.iterates.push(s.x.as_slice().to_vec());
        }
    };

    let mut residual = residual_of(&state);
    report.push(branch_record(&state, None, None, None, residual, mode, settings))?;
    keep(&mut report, &state);
    if residual <= settings.tolerance {
        report.status = Status::Converged;
    }
    while report.status != Status::Converged && state.k < settings.steps {
        let k = state.k;
        let scores = if strategy.needs_scores() {
            Some(match &state.r {
                Some(r) => system.matrix().tr_mul(r),
                None => system.residual(&state.x),
            })
        } else {
            None
        };
        let t = strategy.select_index(n, k, scores.as_ref().map(|s| s.as_slice()))?;
        let relax = schedule.relaxation_at(k)?;
        let (next, beta) = step(&state, system, t, relax, mode, faults)?;
        state = next;
        residual = residual_of(&state);
        report.push(branch_record(&state, Some(t), Some(relax), Some(beta), residual, mode, settings))?;
        keep(&mut report, &state);
        if residual <= settings.tolerance {
            report.status = Status::Converged;
        }
    }
    report.solution = state.x.as_slice().to_vec();
    Ok(report)
}
