//! Relaxation sweeps: one summary row per grid value, run in parallel and
//! reported in grid order.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::faults::Faults;
use crate::run;
use crate::schedule::ScheduleKind;
use crate::system::LinearSystem;

/// Slack allowed when checking that the error never increases.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub relaxation: f64,
    pub strategy: String,
    pub seed: u64,
    pub status: String,
    pub steps: usize,
    pub final_residual: f64,
    pub final_success_probability: Option<f64>,
    /// `None` when no reference solution is known.
    pub monotone_error: Option<bool>,
}

/// Parses `0.25,0.5,1` or `start:stop:step`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid grid value `{v}`")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(Error::Config(format!("bad grid range `{text}`")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + step * i as f64).collect()
        }
        _ => return Err(Error::Config(format!("bad grid `{text}`"))),
    };
    if grid.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    Ok(grid)
}

/// Runs `config` once per grid value with a constant schedule. Every value is
/// checked against the mode's domain before anything runs.
pub fn sweep(config: &RunConfig, system: &LinearSystem, grid: &[f64], faults: &Faults) -> Result<Vec<SweepRow>> {
    let configs: Vec<RunConfig> = grid
        .iter()
        .map(|&g| RunConfig {
            schedule: ScheduleKind::Constant(g),
            ..config.clone()
        })
        .collect();
    for c in &configs {
        c.relaxation_schedule()?;
    }
    configs
        .par_iter()
        .map(|c| {
            let out = run::solve_system(c, system, faults)?;
            let errors: Vec<f64> = out.report.records.iter().filter_map(|r| r.error).collect();
            let monotone = (errors.len() == out.report.records.len())
                .then(|| errors.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOLERANCE));
            let ScheduleKind::Constant(relaxation) = c.schedule else {
                unreachable!("sweep builds constant schedules")
            };
            Ok(SweepRow {
                relaxation,
                strategy: c.strategy.to_string(),
                seed: c.seed,
                status: match out.report.status {
                    crate::report::Status::Converged => "converged".into(),
                    crate::report::Status::MaxSteps => "max-steps".into(),
                },
                steps: out.summary.steps,
                final_residual: out.summary.final_residual,
                final_success_probability: out.summary.success_probability,
                monotone_error: monotone,
            })
        })
        .collect()
}

/// Comma-separated table with a header row.
pub fn to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mode;
    use crate::gen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5, 1").unwrap(), vec![0.5, 1.0]);
        assert_eq!(parse_grid("0.25:1:0.25").unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a").is_err());
    }

    fn system() -> LinearSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        gen::consistent_rows(&mut rng, 20).unwrap().0
    }

    #[test]
    fn rows_follow_grid_order_and_are_monotone() {
        let cfg = RunConfig {
            mode: Mode::BranchRow,
            tolerance: 1e-6,
            steps: Some(5000),
            ..RunConfig::default()
        };
        let grid = parse_grid("0.25:1:0.25").unwrap();
        let rows = sweep(&cfg, &system(), &grid, &Faults::none()).unwrap();
        assert_eq!(rows.iter().map(|r| r.relaxation).collect::<Vec<_>>(), grid);
        for r in &rows {
            assert_eq!(r.monotone_error, Some(true));
            assert_eq!(r.status, "converged");
            assert!(r.final_success_probability.is_some());
        }
        let csv = to_csv(&rows).unwrap();
        assert!(csv.starts_with("relaxation,strategy,seed,status,steps,final_residual,final_success_probability,monotone_error"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn out_of_domain_value_rejected_before_running() {
        let cfg = RunConfig {
            mode: Mode::BranchRow,
            ..RunConfig::default()
        };
        assert!(sweep(&cfg, &system(), &[0.5, 1.5], &Faults::none()).is_err());
        let cfg = RunConfig {
            mode: Mode::ClassicalRow,
            steps: Some(10),
            ..cfg
        };
        assert!(sweep(&cfg, &system(), &[0.5, 1.5], &Faults::none()).is_ok());
    }

    #[test]
    fn single_point_matches_solve() {
        let cfg = RunConfig {
            mode: Mode::BranchRow,
            tolerance: 1e-8,
            steps: Some(3000),
            schedule: ScheduleKind::Constant(0.75),
            ..RunConfig::default()
        };
        let sys = system();
        let rows = sweep(&cfg, &sys, &[0.75], &Faults::none()).unwrap();
        let solo = run::solve_system(&cfg, &sys, &Faults::none()).unwrap();
        assert_eq!(rows[0].steps, solo.summary.steps);
        assert_eq!(rows[0].final_residual, solo.summary.final_residual);
    }
}
