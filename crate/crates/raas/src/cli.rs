//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use raas_core::coupling::fixed_point;
use raas_core::strategy::{run_strategy, Setup, StrategyError, StrategyKind, SweepParam, SweepRow};
use raas_core::synth::{synth_corridor, CorridorSpec};
use raas_core::{ReallocationPlan, Scenario, SolveReport};

use crate::io::{self, LoadError};
use crate::report::{self, MetricsRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Load(_) | CliError::Usage(_) => 2,
            CliError::Strategy(StrategyError::Partition(_) | StrategyError::NoDisruption) => 2,
            CliError::Strategy(_) | CliError::Write { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "raas",
    version,
    about = "Rail disruption bridging: optimize, simulate, benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file.
    Validate { file: PathBuf },
    /// Write the synthetic corridor.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Road capacity low enough for vehicles to slow each other down.
        #[arg(long, conflicts_with = "uncongested")]
        congested: bool,
        /// Road capacity high enough to stay at free flow.
        #[arg(long)]
        uncongested: bool,
    },
    /// Solve and simulate one strategy.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Include the boarding and alighting trace in kpi.json.
        #[arg(long)]
        trace: bool,
    },
    /// Optimizer-only sensitivity sweep.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// volume, alpha or ca_rate.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Blocked passengers for the arrangement-rate sweep (default: the
        /// scenario's own).
        #[arg(long)]
        volume: Option<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "DoNothing,RaaS,BusBridging,TaxiBridging,VanBridging"
        )]
        strategies: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Alternate optimization and simulation until arrival durations agree.
    Couple {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "RaaS")]
        strategy: String,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long, default_value_t = 20)]
        max_iter: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all six strategies and write the comparison tables.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    io::write_atomic(path, text.as_bytes()).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn strategy(name: &str) -> Result<StrategyKind, CliError> {
    StrategyKind::parse(name).ok_or_else(|| {
        let known: Vec<&str> = StrategyKind::ALL.iter().map(|k| k.name()).collect();
        CliError::Usage(format!(
            "unknown strategy {:?} (known: {})",
            name,
            known.join(", ")
        ))
    })
}

#[derive(Serialize)]
struct PlanFile<'a> {
    strategy: StrategyKind,
    plan: &'a ReallocationPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve: Option<&'a SolveReport>,
}

fn write_outcome(dir: &Path, o: &raas_core::strategy::Outcome) -> Result<MetricsRow, CliError> {
    if let Some(plan) = &o.plan {
        let file = PlanFile {
            strategy: o.kind,
            plan,
            solve: o.solve.as_ref(),
        };
        write(&dir.join("plan.json"), &json(&file))?;
    }
    write(&dir.join("kpi.json"), &json(&o.kpi))?;
    let row = MetricsRow::from_outcome(o);
    write(
        &dir.join("metrics.csv"),
        &report::metrics_csv(std::slice::from_ref(&row)),
    )?;
    Ok(row)
}

/// Runs every strategy of the sweep at every value, in parallel.
pub fn sweep_rows(
    setup: &Setup,
    param: SweepParam,
    values: &[f64],
    kinds: &[StrategyKind],
) -> Vec<SweepRow> {
    let points: Vec<(f64, StrategyKind)> = values
        .iter()
        .flat_map(|&v| kinds.iter().map(move |&k| (v, k)))
        .collect();
    points
        .par_iter()
        .map(|&(v, k)| setup.sweep_row(param, v, k))
        .collect()
}

/// Every strategy on one scenario, in `StrategyKind::ALL` order.
pub fn bench(
    scenario: &Scenario,
    seed: u64,
) -> Result<Vec<raas_core::strategy::Outcome>, StrategyError> {
    StrategyKind::ALL
        .par_iter()
        .map(|&k| run_strategy(scenario, k, seed, false))
        .collect()
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { file } => {
            let s = io::load_scenario(&file)?;
            println!(
                "{}: ok ({} stations, {} links, {} lines, {} vehicles)",
                file.display(),
                s.stations().len(),
                s.links().len(),
                s.lines().len(),
                s.vehicles().len()
            );
        }
        Command::Synth {
            seed,
            out,
            congested,
            uncongested,
        } => {
            let spec = if congested {
                CorridorSpec::congested()
            } else if uncongested {
                CorridorSpec::uncongested()
            } else {
                CorridorSpec::default()
            };
            let s = synth_corridor(seed, &spec);
            io::save_scenario(&out, &s).map_err(|source| CliError::Write {
                path: out.clone(),
                source,
            })?;
        }
        Command::Run {
            scenario,
            strategy: name,
            seed,
            out,
            trace,
        } => {
            let kind = strategy(&name)?;
            let s = io::load_scenario(&scenario)?;
            let o = run_strategy(&s, kind, seed, trace)?;
            let row = write_outcome(&out, &o)?;
            println!(
                "{}: travel {} wait {} vehicles {} total {:.2}",
                kind,
                report::hms(row.avg_travel),
                report::hms(row.avg_wait),
                row.vehicles,
                row.total
            );
        }
        Command::Sweep {
            scenario,
            param,
            values,
            volume,
            strategies,
            out,
        } => {
            let p = SweepParam::parse(&param)
                .ok_or_else(|| CliError::Usage(format!("unknown sweep parameter {:?}", param)))?;
            if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Usage(
                    "sweep values must be finite and nonempty".into(),
                ));
            }
            let kinds = strategies
                .iter()
                .map(|n| strategy(n))
                .collect::<Result<Vec<_>, _>>()?;
            if kinds.is_empty() {
                return Err(CliError::Usage("no strategies given".into()));
            }
            let s = io::load_scenario(&scenario)?;
            let d = s
                .disruption()
                .ok_or(CliError::Strategy(StrategyError::NoDisruption))?;
            let mut setup = Setup::new(&s, d).map_err(StrategyError::from)?;
            if let Some(v) = volume {
                setup = setup.with_param(SweepParam::Volume, v);
            }
            let rows = sweep_rows(&setup, p, &values, &kinds);
            let text = report::sweep_csv(p, &rows);
            for name in report::sweep_file_names(p, setup.ctx.v) {
                write(&out.join(name), &text)?;
            }
        }
        Command::Couple {
            scenario,
            strategy: name,
            tol,
            max_iter,
            seed,
            out,
        } => {
            if !(tol > 0.0) || max_iter == 0 {
                return Err(CliError::Usage("need tol > 0 and max-iter >= 1".into()));
            }
            let kind = strategy(&name)?;
            let s = io::load_scenario(&scenario)?;
            let c = fixed_point(&s, kind, seed, tol, max_iter)?;
            for r in &c.iterations {
                println!(
                    "iteration {}: gap {:.6} objective {:.2}",
                    r.i, r.gap, r.objective
                );
            }
            println!(
                "{} after {} iteration(s); best objective {:.2}",
                if c.converged {
                    "converged"
                } else {
                    "not converged"
                },
                c.iterations.len(),
                c.plan.objective
            );
            if let Some(dir) = out {
                write(
                    &dir.join("iterations.csv"),
                    &report::iterations_csv(&c.iterations),
                )?;
                write(&dir.join("plan.json"), &json(&c.plan))?;
                write(&dir.join("kpi.json"), &json(&c.kpi))?;
            }
        }
        Command::Bench {
            scenario,
            seed,
            out,
        } => {
            let s = io::load_scenario(&scenario)?;
            let outcomes = bench(&s, seed)?;
            let mut rows = Vec::new();
            for o in &outcomes {
                rows.push(write_outcome(&out.join(o.kind.name()), o)?);
            }
            write(&out.join("metrics.csv"), &report::metrics_csv(&rows))?;
            let t4 = report::table4(&rows);
            let t5 = report::table5(&rows);
            write(&out.join("table4.md"), &t4)?;
            write(&out.join("table5.md"), &t5)?;
            print!("{}\n{}", t4, t5);
        }
    }
    Ok(())
}
