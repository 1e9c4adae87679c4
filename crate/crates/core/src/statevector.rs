//! Dense statevector simulation of the row and column algorithms.
//!
//! Amplitudes are stored flat with index `anc · n + d`, where `anc` is the
//! ancilla basis index (qubit 1 is its most significant bit) and `d` indexes
//! the `n`-level data register. Operators acting on the last `q` ancillas
//! plus data are therefore applied to contiguous chunks of `2^q · n` entries.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classical::{self, ColumnIterate, RowIterate};
use crate::encoding::{self, GivensParams};
use crate::error::{Error, Result};
use crate::faults::Faults;
use crate::report::{data_qubits, RunReport, RunSettings, Status, StepRecord};
use crate::schedule::{Domain, RelaxationSchedule, SelectionStrategy};
use crate::system::LinearSystem;

pub const DEFAULT_MEMORY_LIMIT: u64 = 2 << 30;
pub const STATE_NORM_TOLERANCE: f64 = 1e-10;
pub const INPUT_UNIT_TOLERANCE: f64 = 1e-12;
const DUMP_THRESHOLD: f64 = 1e-14;
// chunks per rayon task below which operators are applied serially
const PARALLEL_CHUNKS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub ancillas: usize,
    pub dim: usize,
}

impl RegisterLayout {
    pub fn len(&self) -> usize {
        (1usize << self.ancillas) * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn qubits(&self) -> usize {
        self.ancillas + data_qubits(self.dim)
    }

    /// Bytes needed for a real state with this many ancillas.
    pub fn bytes(ancillas: usize, dim: usize) -> u128 {
        if ancillas >= 120 {
            return u128::MAX;
        }
        (1u128 << ancillas) * dim as u128 * 8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    amps: Vec<f64>,
    layout: RegisterLayout,
    pub step: usize,
}

impl SimState {
    /// `|0…0⟩ ⊗ data`.
    pub fn from_data(ancillas: usize, data: &DVector<f64>) -> Self {
        let layout = RegisterLayout {
            ancillas,
            dim: data.len(),
        };
        let mut amps = vec![0.0; layout.len()];
        amps[..data.len()].copy_from_slice(data.as_slice());
        Self {
            amps,
            layout,
            step: 0,
        }
    }

    pub fn from_amplitudes(amps: Vec<f64>, ancillas: usize, dim: usize) -> Result<Self> {
        let layout = RegisterLayout { ancillas, dim };
        if amps.len() != layout.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a layout of length {}",
                amps.len(),
                layout.len()
            )));
        }
        Ok(Self {
            amps,
            layout,
            step: 0,
        })
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn ancillas(&self) -> usize {
        self.layout.ancillas
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn check_norm(&self, operation: &str) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOLERANCE {
            return Err(Error::NormDrift {
                operation: operation.to_string(),
                norm,
            });
        }
        Ok(())
    }

    /// `β|0⟩|a⟩ + γ|1⟩|b⟩`, with the new qubit in position 1.
    pub fn superpose(beta: f64, a: &SimState, gamma: f64, b: &SimState) -> Result<SimState> {
        if a.layout != b.layout {
            return Err(Error::Dimension(format!(
                "cannot superpose layouts {:?} and {:?}",
                a.layout, b.layout
            )));
        }
        let mut amps = Vec::with_capacity(2 * a.amps.len());
        amps.extend(a.amps.iter().map(|v| beta * v));
        amps.extend(b.amps.iter().map(|v| gamma * v));
        Ok(SimState {
            amps,
            layout: RegisterLayout {
                ancillas: a.layout.ancillas + 1,
                dim: a.layout.dim,
            },
            step: a.step,
        })
    }

    /// `|0⟩^{⊗j} ⊗ self`.
    pub fn prepend_zeros(&self, j: usize) -> SimState {
        let mut amps = self.amps.clone();
        amps.resize(self.amps.len() << j, 0.0);
        SimState {
            amps,
            layout: RegisterLayout {
                ancillas: self.layout.ancillas + j,
                dim: self.layout.dim,
            },
            step: self.step,
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q == 0 || q > self.layout.ancillas {
            return Err(Error::IndexOutOfRange {
                index: q,
                len: self.layout.ancillas,
            });
        }
        Ok(())
    }

    /// SWAP of ancilla qubits `i` and `j` (1-based, qubit 1 leftmost).
    pub fn swap_qubits(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_qubit(i)?;
        self.check_qubit(j)?;
        if i == j {
            return Ok(());
        }
        let m = self.layout.ancillas;
        let n = self.layout.dim;
        let bi = 1usize << (m - i);
        let bj = 1usize << (m - j);
        for a in 0..(1usize << m) {
            if a & bi != 0 && a & bj == 0 {
                let b = a ^ bi ^ bj;
                for d in 0..n {
                    self.amps.swap(a * n + d, b * n + d);
                }
            }
        }
        Ok(())
    }

    /// Applies `I ⊗ op` where `op` acts on the last `q` ancillas plus data.
    pub fn apply_tail(&mut self, op: &DMatrix<f64>, q: usize) -> Result<()> {
        if q > self.layout.ancillas {
            return Err(Error::IndexOutOfRange {
                index: q,
                len: self.layout.ancillas,
            });
        }
        let block = (1usize << q) * self.layout.dim;
        if op.nrows() != block || op.ncols() != block {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, tail block is {block}",
                op.nrows(),
                op.ncols()
            )));
        }
        let before = self.norm();
        let apply = |chunk: &mut [f64]| {
            if chunk.iter().all(|v| *v == 0.0) {
                return;
            }
            let out = op * DVectorView::from_slice(chunk, block);
            chunk.copy_from_slice(out.as_slice());
        };
        if self.amps.len() / block >= PARALLEL_CHUNKS {
            self.amps.par_chunks_mut(block).for_each(apply);
        } else {
            self.amps.chunks_mut(block).for_each(apply);
        }
        let after = self.norm();
        if (after - before).abs() > STATE_NORM_TOLERANCE * before.max(1.0) {
            return Err(Error::NormDrift {
                operation: format!("tail operator on {q} ancillas"),
                norm: after,
            });
        }
        Ok(())
    }

    /// Applies `I ⊗ op` on the data register alone.
    pub fn apply_data(&mut self, op: &DMatrix<f64>) -> Result<()> {
        self.apply_tail(op, 0)
    }

    /// Data vector attached to the all-zero ancilla string.
    pub fn good_branch(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.amps[..self.layout.dim])
    }

    /// `(amplitude, direction)` of the all-zero projection; a zero projection
    /// gives amplitude 0 and the zero vector.
    pub fn extract_good_branch(&self) -> (f64, DVector<f64>) {
        let g = self.good_branch();
        let amp = g.norm();
        if amp == 0.0 {
            (0.0, g)
        } else {
            (amp, g / amp)
        }
    }

    /// Applies `f(ancilla index, data index, amplitude)` to every amplitude
    /// outside the good branch.
    pub fn map_junk(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        let n = self.layout.dim;
        for (i, v) in self.amps.iter_mut().enumerate().skip(n) {
            *v = f(i / n, i % n, *v);
        }
    }

    pub fn ancilla_probabilities(&self) -> Vec<f64> {
        self.amps
            .chunks(self.layout.dim.max(1))
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect()
    }

    /// Probability of observing all ancillas in `|0⟩`.
    pub fn success_probability(&self) -> f64 {
        self.good_branch().norm_squared()
    }

    pub fn measure_ancillas(&self, rng: &mut impl Rng) -> Result<Measurement> {
        let probs = self.ancilla_probabilities();
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| Error::Precondition(format!("cannot sample state: {e}")))?;
        let outcome = dist.sample(rng);
        Ok(Measurement {
            outcome,
            bits: self.bits(outcome),
            success_probability: probs[0],
        })
    }

    /// Number of all-zero outcomes in `shots` seeded measurements.
    pub fn sample_successes(&self, shots: usize, seed: u64) -> Result<usize> {
        let probs = self.ancilla_probabilities();
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| Error::Precondition(format!("cannot sample state: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..shots).filter(|_| dist.sample(&mut rng) == 0).count())
    }

    fn bits(&self, anc: usize) -> String {
        let m = self.layout.ancillas;
        if m == 0 {
            String::new()
        } else {
            format!("{anc:0m$b}")
        }
    }

    /// One `bits data-index amplitude` line per amplitude above 1e-14.
    pub fn dump(&self) -> String {
        let n = self.layout.dim;
        let mut out = String::new();
        for (i, v) in self.amps.iter().enumerate() {
            if v.abs() > DUMP_THRESHOLD {
                let _ = writeln!(out, "{} {} {:.17e}", self.bits(i / n), i % n + 1, v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: usize,
    pub bits: String,
    pub success_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub memory_limit: u64,
    pub faults: Faults,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            memory_limit: DEFAULT_MEMORY_LIMIT,
            faults: Faults::none(),
        }
    }
}

fn require_unit(x0: &DVector<f64>, what: &str) -> Result<()> {
    let norm = x0.norm();
    if (norm - 1.0).abs() > INPUT_UNIT_TOLERANCE {
        return Err(Error::Precondition(format!(
            "{what} has norm {norm}; the statevector simulator needs a unit vector \
             (normalize it, or use a branch mode, which embeds any norm)"
        )));
    }
    Ok(())
}

/// Row algorithm registers: `|X_k⟩` and the denominator `v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowRegisters {
    pub x: SimState,
    pub v: f64,
}

/// `|00⟩ ⊗ x0` with `v_0 = 1`.
pub fn init_row_state(x0: &DVector<f64>) -> Result<RowRegisters> {
    require_unit(x0, "x0")?;
    Ok(RowRegisters {
        x: SimState::from_data(2, x0),
        v: 1.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedY {
    pub y: SimState,
    pub beta: f64,
    pub gamma: f64,
}

/// `|Y_k⟩ = β|0⟩|X_k⟩ + γ|1⟩|0…0⟩|a_t⟩` with `β = v/√(v² + b_t²)`, `γ = β b_t / v`.
pub fn prepare_y(x: &SimState, v: f64, a: &DVector<f64>, b_t: f64, faults: &Faults) -> Result<PreparedY> {
    if a.len() != x.dim() {
        return Err(Error::Dimension(format!(
            "row has length {}, data register has {}",
            a.len(),
            x.dim()
        )));
    }
    let h = v.hypot(b_t);
    let (beta, gamma) = faults.mixing(v / h, b_t / h);
    let prep = encoding::state_prep_row(a)?;
    let mut e1 = DVector::zeros(a.len());
    e1[0] = 1.0;
    let row_state = SimState::from_data(x.ancillas(), &(prep.matrix() * e1));
    let mut y = SimState::superpose(beta, x, gamma, &row_state)?;
    y.step = x.step;
    Ok(PreparedY { y, beta, gamma })
}

/// SWAP(1, 3k+2), `U_t` on the last two ancillas, then two fresh zero qubits
/// routed to the end by SWAP(1, 3k+4) and SWAP(2, 3k+5).
pub fn apply_row_iteration(y: SimState, a: &DVector<f64>, relaxation: f64) -> Result<SimState> {
    let m = y.ancillas();
    if m < 3 || !(m - 3).is_multiple_of(3) {
        return Err(Error::Dimension(format!("{m} ancillas is not a |Y_k⟩ layout")));
    }
    let k = (m - 3) / 3;
    let u = encoding::row_unitary(a, relaxation)?;
    let mut s = y;
    s.swap_qubits(1, 3 * k + 2)?;
    s.apply_tail(u.matrix(), 2)?;
    let mut s = s.prepend_zeros(2);
    s.swap_qubits(1, 3 * (k + 1) + 1)?;
    s.swap_qubits(2, 3 * (k + 1) + 2)?;
    s.step = k + 1;
    Ok(s)
}

/// Column algorithm registers. `r` is `None` when `r_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRegisters {
    pub x: SimState,
    pub r: Option<SimState>,
    pub v: f64,
    pub delta: f64,
}

/// `|00⟩ ⊗ x0` and `|00⟩ ⊗ δ r_0` with `δ = 1/‖r_0‖`.
pub fn init_column_states(x0: &DVector<f64>, system: &LinearSystem) -> Result<ColumnRegisters> {
    require_unit(x0, "x0")?;
    if x0.len() != system.dim() {
        return Err(Error::Dimension(format!(
            "x0 has length {}, system has dimension {}",
            x0.len(),
            system.dim()
        )));
    }
    let r0 = system.residual(x0);
    let norm = r0.norm();
    let (r, delta) = if norm == 0.0 {
        (None, 1.0)
    } else if (norm - 1.0).abs() <= INPUT_UNIT_TOLERANCE {
        (Some(SimState::from_data(2, &r0)), 1.0)
    } else {
        (Some(SimState::from_data(2, &(&r0 / norm))), 1.0 / norm)
    };
    Ok(ColumnRegisters {
        x: SimState::from_data(2, x0),
        r,
        v: 1.0,
        delta,
    })
}

/// Mixing weights for the column step: `β² = c² = vδ/(1 + vδ)`.
pub fn column_weights(v: f64, delta: f64) -> (f64, f64) {
    let s = 1.0 / (1.0 + v * delta).sqrt();
    ((v * delta).sqrt() * s, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStep {
    pub registers: ColumnRegisters,
    pub beta: f64,
}

pub fn apply_column_iteration(
    regs: &ColumnRegisters,
    system: &LinearSystem,
    t: usize,
    relaxation: f64,
    faults: &Faults,
) -> Result<ColumnStep> {
    let Some(r) = regs.r.as_ref() else {
        return Err(Error::Precondition(
            "residual register is empty because r_0 = 0".into(),
        ));
    };
    let m = regs.x.ancillas();
    if m < 2 || !m.is_multiple_of(2) || r.layout() != regs.x.layout() {
        return Err(Error::Dimension(format!(
            "X has {m} ancillas and R has {}; expected equal even counts",
            r.ancillas()
        )));
    }
    let k = m / 2 - 1;
    let n = system.dim();
    let c = system.column(t)?;
    let (beta0, gamma0) = column_weights(regs.v, regs.delta);
    let (beta, gamma) = faults.mixing(beta0, gamma0);

    let prep = encoding::state_prep_col(&c, t)?;
    let mut sr = r.clone();
    sr.apply_data(prep.matrix())?;
    let mut psi = SimState::superpose(beta, &regs.x.prepend_zeros(1), gamma, &sr.prepend_zeros(1))?;
    psi.swap_qubits(1, 2 * (k + 1) + 1)?;
    psi.swap_qubits(2, 2 * (k + 1) + 2)?;
    let w = encoding::column_update_unitary(t, relaxation, n)?;
    psi.apply_tail(w.matrix(), 2)?;
    let (gc, gs) = column_weights(regs.v, regs.delta);
    let g = if faults.flip_givens_sign {
        encoding::givens(GivensParams::new(gc, -gs)?)
    } else {
        encoding::givens(GivensParams::new(gc, gs)?)
    };
    psi.apply_tail(g.kron_identity(n).matrix(), 1)?;
    psi.step = k + 1;

    let u = encoding::column_residual_unitary(&c, relaxation)?;
    let mut next_r = r.clone();
    next_r.apply_tail(u.matrix(), 2)?;
    let mut next_r = next_r.prepend_zeros(2);
    next_r.swap_qubits(1, 2 * (k + 1) + 1)?;
    next_r.swap_qubits(2, 2 * (k + 1) + 2)?;
    next_r.step = k + 1;

    Ok(ColumnStep {
        registers: ColumnRegisters {
            x: psi,
            r: Some(next_r),
            v: regs.v + 1.0 / regs.delta,
            delta: regs.delta,
        },
        beta,
    })
}

fn guard(k_max: usize, ancillas: impl Fn(usize) -> usize, copies: u128, n: usize, limit: u64) -> Result<()> {
    for k in 0..k_max {
        let required = RegisterLayout::bytes(ancillas(k + 1), n).saturating_mul(copies);
        if required > limit as u128 {
            return Err(Error::Resource {
                k,
                required,
                limit: limit as u128,
            });
        }
    }
    Ok(())
}

fn fidelity(direction: &DVector<f64>, amplitude: f64, shadow: &DVector<f64>) -> f64 {
    let norm = shadow.norm();
    match (amplitude == 0.0, norm == 0.0) {
        (true, true) => 1.0,
        (false, false) => direction.dot(shadow).abs() / norm,
        _ => 0.0,
    }
}

struct SimSnapshot<'a> {
    k: usize,
    t: Option<usize>,
    relaxation: Option<f64>,
    state: &'a SimState,
    v: f64,
    beta: Option<f64>,
    shadow: &'a DVector<f64>,
    residual: f64,
    residual_amplitude: Option<f64>,
}

fn sim_record(snap: SimSnapshot<'_>, settings: &RunSettings) -> (StepRecord, DVector<f64>) {
    let (amp, dir) = snap.state.extract_good_branch();
    let x = &dir * (amp * snap.v);
    let mut rec = StepRecord::classical(snap.k, snap.t, snap.relaxation, amp * snap.v, snap.residual);
    rec.error = settings.error_of(&x);
    rec.amplitude = Some(amp);
    rec.success_probability = Some(amp * amp);
    rec.v = Some(snap.v);
    rec.beta = snap.beta;
    rec.residual_amplitude = snap.residual_amplitude;
    rec.fidelity = Some(fidelity(&dir, amp, snap.shadow));
    rec.ancillas = Some(snap.state.ancillas());
    rec.qubits = Some(snap.state.layout().qubits());
    (rec, x)
}

fn quantum_schedule(schedule: &RelaxationSchedule) -> Result<()> {
    schedule.with_domain(Domain::Quantum).map(|_| ())
}

/// Row iteration on a growing statevector.
///
/// Convergence is judged on the classical shadow iterate, which also supplies
/// the fidelity column.
pub fn run_algorithm1(
    system: &LinearSystem,
    x0: &DVector<f64>,
    schedule: &RelaxationSchedule,
    strategy: &SelectionStrategy,
    settings: &RunSettings,
    options: &SimOptions,
) -> Result<(RunReport, SimState)> {
    let n = system.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has length {}, system has dimension {n}",
            x0.len()
        )));
    }
    system.require_unit_rows()?;
    quantum_schedule(schedule)?;
    guard(settings.steps, |k| 3 * k + 2, 1, n, options.memory_limit)?;

    let mut regs = init_row_state(x0)?;
    let mut shadow = RowIterate::new(x0.clone());
    let mut report = RunReport::new("statevector-row");
    let mut residual = system.residual(&shadow.x);

    let push = |report: &mut RunReport, snap: SimSnapshot<'_>| -> Result<DVector<f64>> {
        let (rec, x) = sim_record(snap, settings);
        report.push(rec)?;
        if settings.record_iterates {
            report.iterates.push(x.as_slice().to_vec());
        }
        Ok(x)
    };

    let mut x = push(
        &mut report,
        SimSnapshot {
            k: 0,
            t: None,
            relaxation: None,
            state: &regs.x,
            v: regs.v,
            beta: None,
            shadow: &shadow.x,
            residual: residual.norm(),
            residual_amplitude: None,
        },
    )?;
    if residual.norm() <= settings.tolerance {
        report.status = Status::Converged;
    }
    while report.status != Status::Converged && shadow.k < settings.steps {
        let k = shadow.k;
        let scores = strategy.needs_scores().then(|| residual.as_slice());
        let t = strategy.select_index(n, k, scores)?;
        let relax = schedule.relaxation_at(k)?;
        let a = system.row(t)?;
        let b_t = system.rhs_at(t)?;
        let prepared = prepare_y(&regs.x, regs.v, &a, b_t, &options.faults)?;
        let state = apply_row_iteration(prepared.y, &a, relax)?;
        state.check_norm(&format!("row step {}", k + 1))?;
        regs = RowRegisters {
            x: state,
            v: regs.v / prepared.beta,
        };
        shadow = classical::kaczmarz_step(&shadow, system, t, relax)?;
        residual = system.residual(&shadow.x);
        x = push(
            &mut report,
            SimSnapshot {
                k: k + 1,
                t: Some(t),
                relaxation: Some(relax),
                state: &regs.x,
                v: regs.v,
                beta: Some(prepared.beta),
                shadow: &shadow.x,
                residual: residual.norm(),
                residual_amplitude: None,
            },
        )?;
        if residual.norm() <= settings.tolerance {
            report.status = Status::Converged;
        }
    }
    report.solution = x.as_slice().to_vec();
    Ok((report, regs.x))
}

/// Column iteration with separate X and R registers.
pub fn run_algorithm2(
    system: &LinearSystem,
    x0: &DVector<f64>,
    schedule: &RelaxationSchedule,
    strategy: &SelectionStrategy,
    settings: &RunSettings,
    options: &SimOptions,
) -> Result<(RunReport, SimState)> {
    let n = system.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has length {}, system has dimension {n}",
            x0.len()
        )));
    }
    system.require_unit_columns()?;
    quantum_schedule(schedule)?;
    guard(settings.steps, |k| 2 * (k + 1), 2, n, options.memory_limit)?;

    let mut regs = init_column_states(x0, system)?;
    let mut shadow = ColumnIterate::new(system, x0.clone());
    let mut report = RunReport::new("statevector-column");

    let push = |report: &mut RunReport, snap: SimSnapshot<'_>| -> Result<DVector<f64>> {
        let (rec, x) = sim_record(snap, settings);
        report.push(rec)?;
        if settings.record_iterates {
            report.iterates.push(x.as_slice().to_vec());
        }
        Ok(x)
    };
    let r_amp = |regs: &ColumnRegisters| regs.r.as_ref().map_or(Some(0.0), |r| Some(r.good_branch().norm()));

    let mut x = push(
        &mut report,
        SimSnapshot {
            k: 0,
            t: None,
            relaxation: None,
            state: &regs.x,
            v: regs.v,
            beta: None,
            shadow: &shadow.x,
            residual: shadow.r.norm(),
            residual_amplitude: r_amp(&regs),
        },
    )?;
    if shadow.r.norm() <= settings.tolerance || regs.r.is_none() {
        report.status = Status::Converged;
    }
    while report.status != Status::Converged && shadow.k < settings.steps {
        let k = shadow.k;
        let scores = strategy.needs_scores().then(|| system.matrix().tr_mul(&shadow.r));
        let t = strategy.select_index(n, k, scores.as_ref().map(|s| s.as_slice()))?;
        let relax = schedule.relaxation_at(k)?;
        let step = apply_column_iteration(&regs, system, t, relax, &options.faults)?;
        step.registers.x.check_norm(&format!("column step {} (X)", k + 1))?;
        if let Some(r) = &step.registers.r {
            r.check_norm(&format!("column step {} (R)", k + 1))?;
        }
        regs = step.registers;
        shadow = classical::column_step(&shadow, system, t, relax)?;
        x = push(
            &mut report,
            SimSnapshot {
                k: k + 1,
                t: Some(t),
                relaxation: Some(relax),
                state: &regs.x,
                v: regs.v,
                beta: Some(step.beta),
                shadow: &shadow.x,
                residual: shadow.r.norm(),
                residual_amplitude: r_amp(&regs),
            },
        )?;
        if shadow.r.norm() <= settings.tolerance {
            report.status = Status::Converged;
        }
    }
    report.solution = x.as_slice().to_vec();
    Ok((report, regs.x))
}
