//! Randomized property suites behind `verify` and the acceptance tests.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::branch::{self, BranchState};
use crate::classical;
use crate::encoding::{self, GivensParams};
use crate::error::{Error, Result};
use crate::faults::Faults;
use crate::gen;
use crate::report::{data_qubits, Iteration, RunReport, RunSettings};
use crate::schedule::{Domain, RelaxationSchedule, SelectionStrategy};
use crate::statevector::{self, SimOptions, SimState};
use crate::system::LinearSystem;

pub const UNITARY_TOLERANCE: f64 = 1e-12;
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;
pub const JUNK_TOLERANCE: f64 = 1e-12;
pub const BRANCH_TOLERANCE: f64 = 1e-12;
pub const MAX_UNITARY_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Forces every unitarity draw to use this parameter.
    pub inject_relaxation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub trials: usize,
    pub deviations: Vec<(&'static str, f64)>,
    pub failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str, trials: usize) -> Self {
        Self {
            name,
            trials,
            deviations: Vec::new(),
            failure: None,
        }
    }

    fn track(&mut self, key: &'static str, value: f64) {
        match self.deviations.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => *v = v.max(value),
            None => self.deviations.push((key, value)),
        }
    }

    fn fail(&mut self, message: String) {
        if self.failure.is_none() {
            self.failure = Some(message);
        }
    }

    pub fn deviation(&self, key: &str) -> Option<f64> {
        self.deviations.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let _ = writeln!(
                out,
                "{:<12} {:>6} trials  {}",
                s.name,
                s.trials,
                if s.passed() { "PASS" } else { "FAIL" }
            );
            for (k, v) in &s.deviations {
                let _ = writeln!(out, "    max {k:<28} {v:.3e}");
            }
            if let Some(f) = &s.failure {
                let _ = writeln!(out, "    counterexample: {f}");
            }
        }
        out
    }
}

fn trial_rng(seed: u64, suite: u64, trial: usize) -> ChaCha8Rng {
    let mut z = seed ^ suite.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (trial as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 31)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z)
}

fn draw_parameter(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.random_range(0.0..=1.0),
    }
}

/// Orthogonality, symmetry and involution of every constructor over random
/// `(unit vector, parameter)` draws with `n ≤ 16`.
pub fn unitarity_suite(trials: usize, seed: u64, inject: Option<f64>) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("unitarity", trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, 1, trial);
        let n = rng.random_range(1..=MAX_UNITARY_DIM);
        let a = gen::unit_vector(&mut rng, n);
        let p = inject.unwrap_or_else(|| draw_parameter(&mut rng));
        let t = rng.random_range(1..=n);
        let ctx = |name: &str| format!("trial {trial} (seed {seed}): {name} n={n} t={t} parameter={p}");

        let involutions = [
            ("row_unitary", encoding::row_unitary(&a, p)?),
            ("column_residual_unitary", encoding::column_residual_unitary(&a, p)?),
            ("column_update_unitary", encoding::column_update_unitary(t, p, n)?),
        ];
        for (name, m) in &involutions {
            let check = encoding::verify_unitary(m, UNITARY_TOLERANCE);
            suite.track("|M^T M - I|", check.unitary_deviation);
            suite.track("|M - M^T|", check.symmetric_deviation);
            suite.track("|M M - I|", check.involution_deviation);
            if !(check.is_unitary() && check.is_symmetric() && check.is_involutory()) {
                suite.fail(ctx(name));
            }
        }

        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let others = [
            ("givens", encoding::givens(GivensParams::new(theta.cos(), theta.sin())?)),
            ("state_prep_row", encoding::state_prep_row(&a)?),
            ("state_prep_col", encoding::state_prep_col(&a, t)?),
        ];
        for (name, m) in &others {
            let check = encoding::verify_unitary(m, UNITARY_TOLERANCE);
            suite.track("|M^T M - I|", check.unitary_deviation);
            if !check.is_unitary() {
                suite.fail(ctx(name));
            }
        }
        let prep_row = others[1].1.matrix().column(0) - &a;
        let prep_col = others[2].1.matrix().row(t - 1).transpose() - &a;
        let prep = prep_row.amax().max(prep_col.amax());
        suite.track("state-prep column/row error", prep);
        if prep > UNITARY_TOLERANCE {
            suite.fail(ctx("state preparation"));
        }
    }
    Ok(suite)
}

/// Worst-case gaps between the three engines on one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EquivalenceStats {
    /// `1 - |⟨x̂_sim, x̂_classical⟩|`.
    pub fidelity_gap: f64,
    /// `|amplitude_sim - ‖x_classical‖ / v|`.
    pub amplitude_gap: f64,
    /// Branch against statevector: direction, amplitude, probability, `v`,
    /// residual amplitude.
    pub branch_gap: f64,
    /// Row: `|v_k² − v_0² − Σ b_t²|`. Column with `δ = 1`: `|v_k − (k+1)|`.
    pub v_identity_gap: f64,
    pub registers_ok: bool,
    pub steps: usize,
}

fn unit_or_zero(x: &[f64]) -> DVector<f64> {
    let v = DVector::from_column_slice(x);
    let n = v.norm();
    if n == 0.0 {
        v
    } else {
        v / n
    }
}

fn direction_fidelity(a: &[f64], b: &[f64]) -> f64 {
    let (ua, ub) = (unit_or_zero(a), unit_or_zero(b));
    match (ua.norm() == 0.0, ub.norm() == 0.0) {
        (true, true) => 1.0,
        (false, false) => ua.dot(&ub).abs(),
        _ => 0.0,
    }
}

/// Runs classical, branch and statevector engines on one configuration and
/// measures how far apart they are.
pub fn compare_engines(
    system: &LinearSystem,
    x0: &DVector<f64>,
    schedule: &RelaxationSchedule,
    strategy: &SelectionStrategy,
    steps: usize,
    mode: Iteration,
) -> Result<EquivalenceStats> {
    // tolerance < 0 disables early stopping so all engines take `steps` steps
    let settings = RunSettings::new(steps).with_tolerance(-1.0).with_iterates();
    let classical = classical::run_classical(system, x0, schedule, strategy, &settings, mode)?;
    let branch = branch::run_branch(system, x0, schedule, strategy, &settings, mode, &Faults::none())?;
    let sim = match mode {
        Iteration::Row => statevector::run_algorithm1,
        Iteration::Column => statevector::run_algorithm2,
    };
    let (sim, _) = sim(system, x0, schedule, strategy, &settings, &SimOptions::default())?;
    Ok(engine_gaps(system, x0, mode, &classical, &branch, &sim))
}

fn engine_gaps(
    system: &LinearSystem,
    x0: &DVector<f64>,
    mode: Iteration,
    classical: &RunReport,
    branch: &RunReport,
    sim: &RunReport,
) -> EquivalenceStats {
    let n = system.dim();
    let mut stats = EquivalenceStats {
        registers_ok: true,
        steps: sim.steps(),
        ..Default::default()
    };
    if classical.records.len() != sim.records.len() || branch.records.len() != sim.records.len() {
        stats.registers_ok = false;
        stats.fidelity_gap = f64::INFINITY;
        return stats;
    }
    let v0_sq = x0.norm_squared();
    let mut b_sq = 0.0;
    for (k, ((rc, rb), rs)) in classical.records.iter().zip(&branch.records).zip(&sim.records).enumerate() {
        let xc = &classical.iterates[k];
        let xb = &branch.iterates[k];
        let xs = &sim.iterates[k];
        stats.fidelity_gap = stats.fidelity_gap.max(1.0 - direction_fidelity(xs, xc));

        let v_b = rb.v.unwrap_or(f64::NAN);
        let v_s = rs.v.unwrap_or(f64::NAN);
        let amp_s = rs.amplitude.unwrap_or(f64::NAN);
        stats.amplitude_gap = stats.amplitude_gap.max((amp_s - rc.x_norm / v_b).abs());

        let dir_gap = (unit_or_zero(xb) - unit_or_zero(xs)).amax();
        let gaps = [
            dir_gap,
            (rb.amplitude.unwrap_or(f64::NAN) - amp_s).abs(),
            (rb.success_probability.unwrap_or(f64::NAN) - rs.success_probability.unwrap_or(f64::NAN)).abs(),
            (v_b - v_s).abs(),
            match (rb.residual_amplitude, rs.residual_amplitude) {
                (Some(a), Some(b)) => (a - b).abs(),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            },
        ];
        for g in gaps {
            stats.branch_gap = stats.branch_gap.max(if g.is_nan() { f64::INFINITY } else { g });
        }

        if let Some(t) = rs.t {
            b_sq += system.rhs()[t - 1].powi(2);
        }
        match mode {
            Iteration::Row => {
                let expected = v0_sq + b_sq;
                for v in [v_b, v_s] {
                    stats.v_identity_gap = stats.v_identity_gap.max((v * v - expected).abs());
                }
            }
            Iteration::Column => {
                let r0 = system.residual_norm(x0);
                if (r0 - 1.0).abs() <= 1e-12 {
                    let expected = (k + 1) as f64;
                    for v in [v_b, v_s] {
                        stats.v_identity_gap = stats.v_identity_gap.max((v - expected).abs());
                    }
                }
            }
        }

        let ancillas = match mode {
            Iteration::Row => 3 * k + 2,
            Iteration::Column => 2 * (k + 1),
        };
        for r in [rs, rb] {
            if r.k != k || r.ancillas != Some(ancillas) || r.qubits != Some(ancillas + data_qubits(n)) {
                stats.registers_ok = false;
            }
        }
    }
    stats
}

/// Zeroes (or scrambles) every amplitude outside the good branch before one
/// more step and returns the largest change in the resulting good branch.
pub fn junk_isolation_gap(
    system: &LinearSystem,
    x0: &DVector<f64>,
    steps: &[(usize, f64)],
    mode: Iteration,
    seed: u64,
) -> Result<f64> {
    let Some((&(t_last, relax_last), prefix)) = steps.split_last() else {
        return Ok(0.0);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    match mode {
        Iteration::Row => {
            let mut regs = statevector::init_row_state(x0)?;
            for &(t, relax) in prefix {
                regs = row_step(&regs, system, t, relax)?;
            }
            let base = row_step(&regs, system, t_last, relax_last)?.x.good_branch();
            for scramble in [false, true] {
                let mut edited = regs.clone();
                edit_junk(&mut edited.x, scramble, true, &mut rng);
                let g = row_step(&edited, system, t_last, relax_last)?.x.good_branch();
                worst = worst.max((g - &base).amax());
            }
        }
        Iteration::Column => {
            let mut regs = statevector::init_column_states(x0, system)?;
            for &(t, relax) in prefix {
                regs = statevector::apply_column_iteration(&regs, system, t, relax, &Faults::none())?.registers;
            }
            let next = |r: &statevector::ColumnRegisters| -> Result<(DVector<f64>, DVector<f64>)> {
                let s = statevector::apply_column_iteration(r, system, t_last, relax_last, &Faults::none())?.registers;
                let rr = s.r.as_ref().map_or_else(|| DVector::zeros(system.dim()), SimState::good_branch);
                Ok((s.x.good_branch(), rr))
            };
            let (bx, br) = next(&regs)?;
            for scramble in [false, true] {
                let mut edited = regs.clone();
                edit_junk(&mut edited.x, scramble, false, &mut rng);
                if let Some(r) = edited.r.as_mut() {
                    edit_junk(r, scramble, true, &mut rng);
                }
                let (gx, gr) = next(&edited)?;
                worst = worst.max((gx - &bx).amax()).max((gr - &br).amax());
            }
        }
    }
    Ok(worst)
}

fn row_step(
    regs: &statevector::RowRegisters,
    system: &LinearSystem,
    t: usize,
    relax: f64,
) -> Result<statevector::RowRegisters> {
    let a = system.row(t)?;
    let y = statevector::prepare_y(&regs.x, regs.v, &a, system.rhs_at(t)?, &Faults::none())?;
    Ok(statevector::RowRegisters {
        x: statevector::apply_row_iteration(y.y, &a, relax)?,
        v: regs.v / y.beta,
    })
}

/// Zeroes or randomizes junk amplitudes. With `fresh_tail`, the register's
/// last two ancillas were just prepended as `|00⟩` and only amplitudes with
/// that tail are reachable, so scrambling leaves the rest at zero.
fn edit_junk(state: &mut SimState, scramble: bool, fresh_tail: bool, rng: &mut ChaCha8Rng) {
    if scramble {
        state.map_junk(|anc, _, v| {
            if fresh_tail && anc & 3 != 0 {
                v
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
    } else {
        state.map_junk(|_, _, _| 0.0);
    }
}

/// Random configuration used by the equivalence suite.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub system: LinearSystem,
    pub x0: DVector<f64>,
    pub schedule: RelaxationSchedule,
    pub strategy: SelectionStrategy,
    pub steps: usize,
    pub mode: Iteration,
    pub description: String,
}

/// Draws `n ∈ [2, 8]`, `T ∈ [1, 5]`, a random quantum-domain sequence, cyclic
/// or random selection. Column cases alternate between `‖r_0‖ = 1` and a
/// general residual norm.
pub fn random_case(rng: &mut ChaCha8Rng, mode: Iteration, unit_residual: bool) -> Result<RandomCase> {
    let n = rng.random_range(2..=8);
    let steps = rng.random_range(1..=5);
    let values: Vec<f64> = (0..steps).map(|_| draw_parameter(rng)).collect();
    let schedule = RelaxationSchedule::sequence(values.clone(), Domain::Quantum)?;
    let strategy = if rng.random_bool(0.5) {
        SelectionStrategy::Cyclic
    } else {
        SelectionStrategy::RandomUniform { seed: rng.random() }
    };
    let (system, x0) = match (mode, unit_residual) {
        (Iteration::Row, _) => {
            let (s, _) = gen::consistent_rows(rng, n)?;
            (s, gen::unit_vector(rng, n))
        }
        (Iteration::Column, true) => {
            let (s, x0, _) = gen::consistent_columns(rng, n)?;
            (s, x0)
        }
        (Iteration::Column, false) => {
            let a = gen::well_conditioned(rng, n, gen::DEFAULT_SPREAD);
            let b = &a * gen::gaussian_vector(rng, n);
            (LinearSystem::new(a, b)?.normalize_columns()?, gen::unit_vector(rng, n))
        }
    };
    let description = format!(
        "{mode:?} n={n} T={steps} schedule={values:?} strategy={strategy} unit_residual={unit_residual}"
    );
    Ok(RandomCase {
        system,
        x0,
        schedule,
        strategy,
        steps,
        mode,
        description,
    })
}

/// Statevector against classical and branch engines on random small systems,
/// plus junk isolation.
pub fn equivalence_suite(trials: usize, seed: u64) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("statevector", trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, 2, trial);
        let mode = if trial % 2 == 0 { Iteration::Row } else { Iteration::Column };
        let case = random_case(&mut rng, mode, trial % 4 != 3)?;
        let ctx = |what: &str| format!("trial {trial} (seed {seed}): {what}; {}", case.description);
        let stats = compare_engines(&case.system, &case.x0, &case.schedule, &case.strategy, case.steps, mode)?;
        suite.track("1 - fidelity", stats.fidelity_gap);
        suite.track("amplitude vs |x_k|/v_k", stats.amplitude_gap);
        suite.track("branch vs statevector", stats.branch_gap);
        suite.track("v identity", stats.v_identity_gap);
        if stats.fidelity_gap > EQUIVALENCE_TOLERANCE {
            suite.fail(ctx("fidelity below 1 - 1e-9"));
        }
        if stats.amplitude_gap > EQUIVALENCE_TOLERANCE {
            suite.fail(ctx("amplitude differs from |x_k|/v_k"));
        }
        if stats.branch_gap > EQUIVALENCE_TOLERANCE {
            suite.fail(ctx("branch and statevector disagree"));
        }
        if stats.v_identity_gap > 1e-10 {
            suite.fail(ctx("v recursion identity broken"));
        }
        if !stats.registers_ok {
            suite.fail(ctx("register accounting"));
        }

        let schedule_steps: Vec<(usize, f64)> = (0..case.steps.min(3))
            .map(|k| {
                let t = (k % case.system.dim()) + 1;
                (t, case.schedule.relaxation_at(k).unwrap_or(1.0))
            })
            .collect();
        let junk = junk_isolation_gap(&case.system, &case.x0, &schedule_steps, mode, rng.random())?;
        suite.track("junk isolation", junk);
        if junk > JUNK_TOLERANCE {
            suite.fail(ctx("good branch depends on junk amplitudes"));
        }
    }
    Ok(suite)
}

/// Branch engine invariants at sizes beyond the statevector guard.
pub fn branch_suite(trials: usize, seed: u64) -> Result<SuiteResult> {
    let mut suite = SuiteResult::new("branch", trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, 3, trial);
        let n = rng.random_range(2..=48);
        let steps = rng.random_range(1..=200);
        let relax = draw_parameter(&mut rng);
        let mode = if trial % 2 == 0 { Iteration::Row } else { Iteration::Column };
        let ctx = |what: &str| format!("trial {trial} (seed {seed}): {what}; {mode:?} n={n} T={steps} relaxation={relax}");
        let (system, x0) = match mode {
            Iteration::Row => {
                let (s, _) = gen::consistent_rows(&mut rng, n)?;
                let scale = rng.random_range(0.1..10.0);
                (s, gen::unit_vector(&mut rng, n) * scale)
            }
            Iteration::Column => {
                let (s, x0, _) = gen::consistent_columns(&mut rng, n)?;
                (s, x0)
            }
        };
        let (worst, v_gap, p_gap) = branch_invariants(&system, &x0, relax, steps, mode)?;
        suite.track("branch vs classical x", worst);
        suite.track("v identity (relative)", v_gap);
        suite.track("p v^2 - |x|^2 (relative)", p_gap);
        if worst > BRANCH_TOLERANCE {
            suite.fail(ctx("branch iterate differs from classical"));
        }
        if v_gap > BRANCH_TOLERANCE {
            suite.fail(ctx("v identity broken"));
        }
        if p_gap > BRANCH_TOLERANCE {
            suite.fail(ctx("success probability identity broken"));
        }
    }
    Ok(suite)
}

/// Steps branch and classical engines side by side with cyclic selection.
/// Returns (max relative iterate gap, max relative v-identity gap,
/// max relative `p v² − ‖x‖²` gap, with `p > 1 + 1e-12` counted as a gap).
pub fn branch_invariants(
    system: &LinearSystem,
    x0: &DVector<f64>,
    relax: f64,
    steps: usize,
    mode: Iteration,
) -> Result<(f64, f64, f64)> {
    let n = system.dim();
    let mut b = match mode {
        Iteration::Row => BranchState::row(x0.clone()),
        Iteration::Column => BranchState::column(system, x0.clone()),
    };
    let mut row = classical::RowIterate::new(x0.clone());
    let mut col = classical::ColumnIterate::new(system, x0.clone());
    let v0 = b.v;
    let mut b_sq = 0.0;
    let (mut worst, mut v_gap, mut p_gap) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..steps {
        let t = k % n + 1;
        let (next, _) = branch::step(&b, system, t, relax, mode, &Faults::none())?;
        b = next;
        let xc = match mode {
            Iteration::Row => {
                row = classical::kaczmarz_step(&row, system, t, relax)?;
                &row.x
            }
            Iteration::Column => {
                col = classical::column_step(&col, system, t, relax)?;
                &col.x
            }
        };
        worst = worst.max((&b.x - xc).amax() / (1.0 + xc.amax()));
        match mode {
            Iteration::Row => {
                b_sq += system.rhs()[t - 1].powi(2);
                let expected = v0 * v0 + b_sq;
                v_gap = v_gap.max((b.v * b.v - expected).abs() / expected);
            }
            Iteration::Column => {
                if b.delta == 1.0 && b.v != (k + 2) as f64 {
                    v_gap = f64::INFINITY;
                }
            }
        }
        let p = b.success_probability();
        let xx = b.x.norm_squared();
        p_gap = p_gap.max((p * b.v * b.v - xx).abs() / xx.max(1.0));
        if !(0.0..=1.0 + 1e-12).contains(&p) {
            p_gap = f64::INFINITY;
        }
    }
    Ok((worst, v_gap, p_gap))
}

/// Runs all three suites. A constructor error (for instance from an injected
/// out-of-domain parameter) is returned as an error.
pub fn verify(options: &VerifyOptions) -> Result<VerifyReport> {
    if options.trials == 0 {
        return Err(Error::Usage("verify needs at least one trial".into()));
    }
    Ok(VerifyReport {
        suites: vec![
            unitarity_suite(options.trials, options.seed, options.inject_relaxation)?,
            equivalence_suite(options.trials.min(200), options.seed)?,
            branch_suite(options.trials.min(200), options.seed)?,
        ],
    })
}
