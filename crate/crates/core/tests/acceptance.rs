use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qrelax::classical::{self, ColumnIterate};
use qrelax::faults::Faults;
use qrelax::gen;
use qrelax::reproduce::reproduce_paper;
use qrelax::verify::{self, compare_engines, random_case, EquivalenceStats};
use qrelax::{Iteration, RelaxationSchedule, RunSettings, SelectionStrategy, Status};

struct Line {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn criterion_reproduce() -> Line {
    let start = Instant::now();
    let rep = reproduce_paper(&Faults::none());
    let elapsed = start.elapsed();
    let passed = rep.passed() && elapsed.as_secs_f64() < 5.0;
    let mut detail = format!(
        "{}/{} checks within 1e-10 in {:.3}s",
        rep.checks.iter().filter(|c| c.passed).count(),
        rep.checks.len(),
        elapsed.as_secs_f64()
    );
    if let Some(c) = rep.first_failure() {
        detail += &format!("; first mismatch {} {} {}", c.example, c.engine, c.quantity);
    }
    Line { id: "1 reproduce worked examples", passed, detail }
}

fn criterion_unitarity() -> Line {
    let start = Instant::now();
    let suite = verify::unitarity_suite(1000, 2024, None).expect("suite runs");
    let elapsed = start.elapsed().as_secs_f64();
    let dev = |k| suite.deviation(k).unwrap_or(f64::INFINITY);
    let worst = dev("|M^T M - I|");
    let passed = suite.passed() && worst <= 1e-12 && elapsed < 30.0;
    Line {
        id: "2 unitarity suite",
        passed,
        detail: format!(
            "1000 draws per constructor, max |MᵀM−I| {worst:.2e}, |M−Mᵀ| {:.2e}, |MM−I| {:.2e}, {elapsed:.2}s{}",
            dev("|M - M^T|"),
            dev("|M M - I|"),
            suite.failure.as_deref().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    }
}

struct EquivalenceRuns {
    stats: Vec<(Iteration, bool, EquivalenceStats)>,
    cyclic: usize,
    random: usize,
}

fn equivalence_runs() -> EquivalenceRuns {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut out = EquivalenceRuns {
        stats: Vec::new(),
        cyclic: 0,
        random: 0,
    };
    for i in 0..200 {
        let mode = if i % 2 == 0 { Iteration::Row } else { Iteration::Column };
        // every third column case has a general residual norm, so δ ≠ 1
        let unit_residual = mode == Iteration::Row || i % 6 != 1;
        let case = random_case(&mut rng, mode, unit_residual).expect("case");
        match case.strategy {
            SelectionStrategy::Cyclic => out.cyclic += 1,
            _ => out.random += 1,
        }
        let stats = compare_engines(&case.system, &case.x0, &case.schedule, &case.strategy, case.steps, mode)
            .expect("engines run");
        out.stats.push((mode, unit_residual, stats));
    }
    out
}

fn criterion_equivalence(runs: &EquivalenceRuns) -> Line {
    let max = |f: fn(&EquivalenceStats) -> f64| runs.stats.iter().map(|(_, _, s)| f(s)).fold(0.0, f64::max);
    let fid = max(|s| s.fidelity_gap);
    let amp = max(|s| s.amplitude_gap);
    let branch = max(|s| s.branch_gap);
    let passed = fid <= 1e-9 && amp <= 1e-9 && branch <= 1e-9 && runs.cyclic > 0 && runs.random > 0;
    Line {
        id: "3 engine equivalence",
        passed,
        detail: format!(
            "{} systems ({} cyclic, {} random), max 1−fidelity {fid:.2e}, amplitude gap {amp:.2e}, branch gap {branch:.2e}",
            runs.stats.len(),
            runs.cyclic,
            runs.random
        ),
    }
}

fn criterion_identities(runs: &EquivalenceRuns) -> Line {
    let row = runs
        .stats
        .iter()
        .filter(|(m, _, _)| *m == Iteration::Row)
        .map(|(_, _, s)| s.v_identity_gap)
        .fold(0.0, f64::max);
    let unit_cols: Vec<f64> = runs
        .stats
        .iter()
        .filter(|(m, unit, _)| *m == Iteration::Column && *unit)
        .map(|(_, _, s)| s.v_identity_gap)
        .collect();
    let exact = unit_cols.iter().all(|&g| g == 0.0);
    Line {
        id: "4 amplitude bookkeeping",
        passed: row <= 1e-10 && exact && !unit_cols.is_empty(),
        detail: format!(
            "row max |v_T²−v_0²−Σb²| {row:.2e}; v_k = k+1 exactly in {}/{} δ=1 column runs",
            unit_cols.iter().filter(|&&g| g == 0.0).count(),
            unit_cols.len()
        ),
    }
}

fn criterion_convergence() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(5050);
    let n = 50;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut max_steps = 0;
    let mut unconverged = 0;
    let mut drift = 0.0f64;
    for _ in 0..20 {
        let (system, x_star) = gen::consistent_rows(&mut rng, n).expect("system");
        for lambda in [0.5, 1.0, 1.5] {
            let schedule = RelaxationSchedule::constant(lambda, qrelax::Domain::Classical).expect("schedule");
            let settings = RunSettings::new(100_000)
                .with_tolerance(1e-6)
                .with_reference(Some(x_star.clone()));
            let rep = classical::run_classical(
                &system,
                &DVector::zeros(n),
                &schedule,
                &SelectionStrategy::Cyclic,
                &settings,
                Iteration::Row,
            )
            .expect("run");
            if rep.status != Status::Converged {
                unconverged += 1;
            }
            max_steps = max_steps.max(rep.steps());
            let errors: Vec<f64> = rep.records.iter().map(|r| r.error.expect("reference")).collect();
            for w in errors.windows(2) {
                worst_rise = worst_rise.max(w[1] - w[0]);
            }
        }

        let (cols, x0, _) = gen::consistent_columns(&mut rng, n).expect("system");
        let mut state = ColumnIterate::new(&cols, x0);
        for k in 0..20 * n {
            state = classical::column_step(&state, &cols, k % n + 1, 1.0).expect("step");
            drift = drift.max(state.residual_drift(&cols));
        }
    }
    Line {
        id: "5 convergence properties",
        passed: worst_rise <= 1e-12 && unconverged == 0 && drift <= 1e-10,
        detail: format!(
            "60 runs, largest per-step error rise {worst_rise:.2e}, {unconverged} unconverged, most steps {max_steps}; column residual drift {drift:.2e}"
        ),
    }
}

fn criterion_registers(runs: &EquivalenceRuns) -> Line {
    let bad = runs.stats.iter().filter(|(_, _, s)| !s.registers_ok).count();
    Line {
        id: "6 register accounting",
        passed: bad == 0,
        detail: format!("{bad} of {} runs with wrong ancilla or qubit counts", runs.stats.len()),
    }
}

fn criterion_mutation() -> Line {
    let givens = reproduce_paper(&Faults {
        flip_givens_sign: true,
        ..Faults::none()
    });
    let beta = reproduce_paper(&Faults {
        beta_offset: 1e-6,
        ..Faults::none()
    });
    let caught = |r: &qrelax::reproduce::Reproduction| r.failures().count();
    Line {
        id: "7 mutation sensitivity",
        passed: !givens.passed() && !beta.passed(),
        detail: format!(
            "flipped Givens sign: {} mismatches; beta offset 1e-6: {} mismatches",
            caught(&givens),
            caught(&beta)
        ),
    }
}

fn main() -> ExitCode {
    let runs = equivalence_runs();
    let lines = [
        criterion_reproduce(),
        criterion_unitarity(),
        criterion_equivalence(&runs),
        criterion_identities(&runs),
        criterion_convergence(),
        criterion_registers(&runs),
        criterion_mutation(),
    ];
    for l in &lines {
        println!("{} criterion {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.detail);
    }
    if lines.iter().all(|l| l.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
