//! Classical relaxed row (Kaczmarz) and column iterations.
//!
//! These are the ground truth the simulators are checked against. Both step
//! functions assume the relevant rows or columns already have unit norm, so
//! the projections need no per-step division.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::report::{Iteration, RunReport, RunSettings, Status, StepRecord};
use crate::schedule::{Domain, RelaxationSchedule, SelectionStrategy};
use crate::system::LinearSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct RowIterate {
    pub x: DVector<f64>,
    pub k: usize,
}

impl RowIterate {
    pub fn new(x: DVector<f64>) -> Self {
        Self { x, k: 0 }
    }
}

/// Column-iteration state; `r` tracks `b - A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnIterate {
    pub x: DVector<f64>,
    pub r: DVector<f64>,
    pub k: usize,
}

impl ColumnIterate {
    pub fn new(system: &LinearSystem, x: DVector<f64>) -> Self {
        let r = system.residual(&x);
        Self { x, r, k: 0 }
    }

    /// `‖(b - A x) - r‖_∞`, the drift of the tracked residual.
    pub fn residual_drift(&self, system: &LinearSystem) -> f64 {
        (system.residual(&self.x) - &self.r).amax()
    }
}

fn check_classical(k: usize, value: f64) -> Result<()> {
    if Domain::Classical.contains(value) {
        Ok(())
    } else {
        Err(Error::ScheduleDomain {
            k,
            value,
            domain: Domain::Classical.name(),
        })
    }
}

/// `x + λ (b_t - a_tᵀ x) a_t`.
pub fn kaczmarz_step(
    iterate: &RowIterate,
    system: &LinearSystem,
    t: usize,
    relaxation: f64,
) -> Result<RowIterate> {
    system.require_unit_rows()?;
    check_classical(iterate.k, relaxation)?;
    system.check_index(t)?;
    Ok(row_update(iterate, system, t, relaxation))
}

fn row_update(iterate: &RowIterate, system: &LinearSystem, t: usize, relaxation: f64) -> RowIterate {
    let a = system.matrix().row(t - 1);
    let gap = system.rhs()[t - 1] - a.dot(&iterate.x.transpose());
    let mut x = iterate.x.clone();
    x.axpy(relaxation * gap, &a.transpose(), 1.0);
    RowIterate { x, k: iterate.k + 1 }
}

/// `x_t += ω c_tᵀ r`, `r ← (I - ω c_t c_tᵀ) r`.
pub fn column_step(
    state: &ColumnIterate,
    system: &LinearSystem,
    t: usize,
    relaxation: f64,
) -> Result<ColumnIterate> {
    system.require_unit_columns()?;
    check_classical(state.k, relaxation)?;
    system.check_index(t)?;
    Ok(column_update(state, system, t, relaxation))
}

fn column_update(state: &ColumnIterate, system: &LinearSystem, t: usize, relaxation: f64) -> ColumnIterate {
    let c = system.matrix().column(t - 1);
    let step = relaxation * c.dot(&state.r);
    let mut x = state.x.clone();
    x[t - 1] += step;
    let mut r = state.r.clone();
    r.axpy(-step, &c, 1.0);
    ColumnIterate { x, r, k: state.k + 1 }
}

fn schedule_ok(schedule: &RelaxationSchedule) -> Result<()> {
    // quantum-domain schedules are a subset of the classical one
    schedule.with_domain(Domain::Classical).map(|_| ())
}

/// Runs up to `settings.steps` steps, stopping early once the residual norm
/// reaches `settings.tolerance`.
pub fn run_classical(
    system: &LinearSystem,
    x0: &DVector<f64>,
    schedule: &RelaxationSchedule,
    strategy: &SelectionStrategy,
    settings: &RunSettings,
    mode: Iteration,
) -> Result<RunReport> {
    let n = system.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has length {}, system has dimension {n}",
            x0.len()
        )));
    }
    schedule_ok(schedule)?;
    match mode {
        Iteration::Row => system.require_unit_rows()?,
        Iteration::Column => system.require_unit_columns()?,
    }
    let engine = match mode {
        Iteration::Row => "classical-row",
        Iteration::Column => "classical-column",
    };
    let mut report = RunReport::new(engine);

    let keep = |report: &mut RunReport, x: &DVector<f64>| {
        if settings.record_iterates {
            report.iterates.push(x.as_slice().to_vec());
        }
    };
    let record = |k, t, relax, x: &DVector<f64>, residual: f64| {
        let mut rec = StepRecord::classical(k, t, relax, x.norm(), residual);
        rec.error = settings.error_of(x);
        rec
    };

    match mode {
        Iteration::Row => {
            let mut it = RowIterate::new(x0.clone());
            let mut residual = system.residual(&it.x);
            report.push(record(0, None, None, &it.x, residual.norm()))?;
            keep(&mut report, &it.x);
            if residual.norm() <= settings.tolerance {
                report.status = Status::Converged;
            }
            while report.status != Status::Converged && it.k < settings.steps {
                let k = it.k;
                let scores = strategy.needs_scores().then(|| residual.as_slice());
                let t = strategy.select_index(n, k, scores)?;
                let relax = schedule.relaxation_at(k)?;
                it = row_update(&it, system, t, relax);
                residual = system.residual(&it.x);
                report.push(record(it.k, Some(t), Some(relax), &it.x, residual.norm()))?;
                keep(&mut report, &it.x);
                if residual.norm() <= settings.tolerance {
                    report.status = Status::Converged;
                }
            }
            report.solution = it.x.as_slice().to_vec();
        }
        Iteration::Column => {
            let mut st = ColumnIterate::new(system, x0.clone());
            report.push(record(0, None, None, &st.x, st.r.norm()))?;
            keep(&mut report, &st.x);
            if st.r.norm() <= settings.tolerance {
                report.status = Status::Converged;
            }
            while report.status != Status::Converged && st.k < settings.steps {
                let k = st.k;
                let scores = strategy
                    .needs_scores()
                    .then(|| system.matrix().tr_mul(&st.r));
                let t = strategy.select_index(n, k, scores.as_ref().map(|s| s.as_slice()))?;
                let relax = schedule.relaxation_at(k)?;
                st = column_update(&st, system, t, relax);
                report.push(record(st.k, Some(t), Some(relax), &st.x, st.r.norm()))?;
                keep(&mut report, &st.x);
                if st.r.norm() <= settings.tolerance {
                    report.status = Status::Converged;
                }
            }
            report.solution = st.x.as_slice().to_vec();
        }
    }
    Ok(report)
}

/// Direct solve by LU with partial pivoting. Returns `None` when `A` is
/// singular or the solve does not meet `‖Ax - b‖ ≤ 1e-10 (1 + ‖b‖)`.
pub fn exact_solution(system: &LinearSystem) -> Option<DVector<f64>> {
    let lu = system.matrix().clone().lu();
    let x = lu.solve(system.rhs())?;
    let bound = 1e-10 * (1.0 + system.rhs().norm());
    (x.iter().all(|v| v.is_finite()) && system.residual_norm(&x) <= bound).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn row_example() -> LinearSystem {
        LinearSystem::from_rows(&[vec![S, S], vec![S, -S]], &[2.0 * 2f64.sqrt(), 2f64.sqrt()]).unwrap()
    }

    fn column_example() -> LinearSystem {
        LinearSystem::from_rows(&[vec![-S, S], vec![-S, -S]], &[2f64.sqrt(), 0.0]).unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn kaczmarz_worked_example() {
        let sys = row_example();
        let x0 = RowIterate::new(v(&[1.0, 0.0]));
        let x1 = kaczmarz_step(&x0, &sys, 1, 1.0 / 3.0).unwrap();
        assert!((x1.x[0] - 1.5).abs() < 1e-15 && (x1.x[1] - 0.5).abs() < 1e-15);
        assert!((x1.x.norm() - 10f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(x1.k, 1);
        let x2 = kaczmarz_step(&x1, &sys, 2, 1.0).unwrap();
        assert!((x2.x[0] - 2.0).abs() < 1e-15 && x2.x[1].abs() < 1e-15);
    }

    #[test]
    fn zero_relaxation_is_identity() {
        let sys = row_example();
        let x = RowIterate::new(v(&[0.3, -7.0]));
        assert_eq!(kaczmarz_step(&x, &sys, 2, 0.0).unwrap().x, x.x);
        let col = column_example();
        let st = ColumnIterate::new(&col, v(&[0.3, -7.0]));
        let next = column_step(&st, &col, 1, 0.0).unwrap();
        assert_eq!(next.x, st.x);
        assert_eq!(next.r, st.r);
    }

    #[test]
    fn column_worked_example() {
        let sys = column_example();
        let st = ColumnIterate::new(&sys, v(&[0.0, 1.0]));
        assert!((st.r[0] - S).abs() < 1e-15 && (st.r[1] - S).abs() < 1e-15);
        let s1 = column_step(&st, &sys, 1, 0.5).unwrap();
        assert!((s1.x[0] + 0.5).abs() < 1e-15 && (s1.x[1] - 1.0).abs() < 1e-15);
        let q = 1.0 / (2.0 * 2f64.sqrt());
        assert!((s1.r[0] - q).abs() < 1e-15 && (s1.r[1] - q).abs() < 1e-15);
        assert!((s1.r.norm() - 0.5).abs() < 1e-15);
        let s2 = column_step(&s1, &sys, 1, 1.0).unwrap();
        assert!((s2.x[0] + 1.0).abs() < 1e-15 && (s2.x[1] - 1.0).abs() < 1e-15);
        assert!(s2.r.norm() < 1e-15);
    }

    #[test]
    fn non_normalized_rejected() {
        let sys = LinearSystem::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]], &[1.0, 1.0]).unwrap();
        let x = RowIterate::new(v(&[0.0, 0.0]));
        assert!(matches!(kaczmarz_step(&x, &sys, 1, 1.0), Err(Error::Usage(_))));
        let st = ColumnIterate::new(&sys, v(&[0.0, 0.0]));
        assert!(matches!(column_step(&st, &sys, 1, 1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn classical_domain_enforced() {
        let sys = row_example();
        let x = RowIterate::new(v(&[0.0, 0.0]));
        assert!(kaczmarz_step(&x, &sys, 1, 2.0).is_ok());
        assert!(matches!(kaczmarz_step(&x, &sys, 1, 2.1), Err(Error::ScheduleDomain { .. })));
    }

    #[test]
    fn run_column_example_to_exact_solution() {
        let sys = column_example();
        let schedule = RelaxationSchedule::sequence(vec![0.5, 1.0], Domain::Quantum).unwrap();
        let strategy = SelectionStrategy::Explicit(vec![1, 1]);
        let report = run_classical(
            &sys,
            &v(&[0.0, 1.0]),
            &schedule,
            &strategy,
            &RunSettings::new(2),
            Iteration::Column,
        )
        .unwrap();
        assert_eq!(report.records.len(), 3);
        assert!(report.final_residual() < 1e-15);
        assert_eq!(report.status, Status::Converged);
        let x = v(&report.solution);
        let dir = &x / x.norm();
        assert!((dir[0] + S).abs() < 1e-15 && (dir[1] - S).abs() < 1e-15);
    }

    #[test]
    fn identity_converges_at_zero() {
        let sys = LinearSystem::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]).unwrap();
        let schedule = RelaxationSchedule::constant(1.0, Domain::Classical).unwrap();
        let report = run_classical(
            &sys,
            &v(&[1.0, 0.0]),
            &schedule,
            &SelectionStrategy::Cyclic,
            &RunSettings::new(10),
            Iteration::Row,
        )
        .unwrap();
        assert_eq!(report.status, Status::Converged);
        assert_eq!(report.steps(), 0);
        assert_eq!(report.final_residual(), 0.0);
    }

    #[test]
    fn exact_solutions() {
        let x = exact_solution(&row_example()).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let x = exact_solution(&column_example()).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let zero = LinearSystem::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[1.0, 1.0]).unwrap();
        assert!(exact_solution(&zero).is_none());
        let rank_one = LinearSystem::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 3.0]).unwrap();
        assert!(exact_solution(&rank_one).is_none());
    }

    #[test]
    fn greedy_row_picks_worst_equation() {
        let sys = LinearSystem::from_rows(
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            &[0.0, 5.0, 0.0],
        )
        .unwrap();
        let schedule = RelaxationSchedule::constant(1.0, Domain::Classical).unwrap();
        let report = run_classical(
            &sys,
            &v(&[0.0, 0.0, 0.0]),
            &schedule,
            &SelectionStrategy::GreedyResidual,
            &RunSettings::new(5),
            Iteration::Row,
        )
        .unwrap();
        assert_eq!(report.records[1].t, Some(2));
        assert_eq!(report.status, Status::Converged);
    }
}
