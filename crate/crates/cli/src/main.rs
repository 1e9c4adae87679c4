use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrelax::config::{Mode, RunConfig, X0Spec};
use qrelax::error::{Error, Result};
use qrelax::faults::Faults;
use qrelax::io::{Source, SystemFormat};
use qrelax::reproduce;
use qrelax::run::{self, EXIT_ERROR};
use qrelax::schedule::{ScheduleKind, SelectionStrategy};
use qrelax::sweep;
use qrelax::verify::{self, VerifyOptions};

#[derive(Parser)]
#[command(name = "qrelax", version, about = "Relaxed Kaczmarz and column iterations with block-encoding simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one engine on a system.
    Solve(RunArgs),
    /// Check the two built-in worked examples on every engine.
    ReproducePaper {
        #[arg(long, hide = true)]
        inject: Option<String>,
    },
    /// Run the unitarity, equivalence and branch property suites.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_relaxation: Option<f64>,
    },
    /// Run one solve per relaxation value and print a CSV table.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated values or start:stop:step.
        #[arg(long)]
        grid: String,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config; other flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "inline")]
    system: Option<PathBuf>,
    /// System text given directly on the command line.
    #[arg(long)]
    inline: Option<String>,
    /// Separate file holding b.
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<SystemFormat>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// e1, basis:I, or comma-separated entries.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// const:V, seq:V1,V2,..., decay:V, or a bare number.
    #[arg(long)]
    schedule: Option<String>,
    /// cyclic, random[:SEED], greedy, or seq:T1,T2,...
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bytes, optionally with a K, M or G suffix.
    #[arg(long, value_parser = parse_bytes)]
    mem_limit: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject: Option<String>,
}

fn parse_format(s: &str) -> std::result::Result<SystemFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_bytes(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let (digits, mult) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 1u64 << 10),
        Some('M') => (&s[..s.len() - 1], 1 << 20),
        Some('G') => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    digits
        .trim()
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(mult))
        .ok_or_else(|| format!("invalid byte count `{s}`"))
}

/// `givens`, `beta:OFFSET`, or both joined by a comma.
fn parse_faults(spec: Option<&str>) -> Result<Faults> {
    let mut faults = Faults::none();
    let Some(spec) = spec else {
        return Ok(faults);
    };
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once(':') {
            None if part == "givens" => faults.flip_givens_sign = true,
            Some(("beta", v)) => {
                faults.beta_offset = v
                    .parse()
                    .map_err(|_| Error::Usage(format!("invalid beta offset `{v}`")))?
            }
            _ => return Err(Error::Usage(format!("unknown fault `{part}`"))),
        }
    }
    Ok(faults)
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.system {
            cfg.system = Some(Source::Path(p.clone()));
            if self.format.is_none() {
                cfg.format = SystemFormat::from_path(p);
            }
        }
        if let Some(t) = &self.inline {
            cfg.system = Some(Source::Inline(t.clone()));
        }
        if let Some(p) = &self.rhs {
            cfg.rhs = Some(Source::Path(p.clone()));
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(x) = &self.x0 {
            cfg.x0 = x.parse::<X0Spec>()?;
        }
        if let Some(s) = &self.schedule {
            cfg.schedule = s.parse::<ScheduleKind>()?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(s) = &self.strategy {
            cfg.strategy = if s.trim() == "random" {
                SelectionStrategy::RandomUniform { seed: cfg.seed }
            } else {
                s.parse()?
            };
        }
        if self.steps.is_some() {
            cfg.steps = self.steps;
        }
        if let Some(t) = self.tol {
            cfg.tolerance = t;
        }
        if let Some(m) = self.mem_limit {
            cfg.memory_limit = m;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn solve(args: &RunArgs) -> Result<i32> {
    let cfg = args.config()?;
    let faults = parse_faults(args.inject.as_deref())?;
    let outcome = run::solve(&cfg, &faults)?;
    print!("{}", outcome.summary.text());
    if let Some(dir) = &cfg.out {
        run::write_outputs(&outcome, &cfg, dir)?;
    }
    Ok(outcome.exit_code())
}

fn reproduce_paper(inject: Option<&str>) -> Result<i32> {
    let rep = reproduce::reproduce_paper(&parse_faults(inject)?);
    print!("{}", rep.table());
    match rep.first_failure() {
        None => Ok(0),
        Some(c) => {
            eprintln!(
                "mismatch: {} example, {} engine, {}: expected {:.16e}, got {:.16e}",
                c.example, c.engine, c.quantity, c.expected, c.actual
            );
            Ok(1)
        }
    }
}

fn run_verify(options: &VerifyOptions) -> Result<i32> {
    let rep = verify::verify(options)?;
    print!("{}", rep.text());
    if let Some(s) = rep.suites.iter().find(|s| !s.passed()) {
        eprintln!(
            "suite {} failed: {}",
            s.name,
            s.failure.as_deref().unwrap_or("unknown")
        );
        return Ok(1);
    }
    Ok(0)
}

fn run_sweep(args: &RunArgs, grid: &str) -> Result<i32> {
    let cfg = args.config()?;
    let faults = parse_faults(args.inject.as_deref())?;
    let grid = sweep::parse_grid(grid)?;
    let system = run::load(&cfg)?;
    let rows = sweep::sweep(&cfg, &system, &grid, &faults)?;
    let table = sweep::to_csv(&rows)?;
    print!("{table}");
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("sweep.csv"), &table)?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::ReproducePaper { inject } => reproduce_paper(inject.as_deref()),
        Command::Verify {
            trials,
            seed,
            inject_relaxation,
        } => run_verify(&VerifyOptions {
            trials: *trials,
            seed: *seed,
            inject_relaxation: *inject_relaxation,
        }),
        Command::Sweep { run, grid } => run_sweep(run, grid),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
