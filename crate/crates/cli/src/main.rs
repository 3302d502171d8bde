//! `photolith`: generate instances, solve them, check schedules, export the
//! MILP, run experiment grids and draw Gantt charts.

mod gantt;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use photolith::evaluator::{check_feasibility, metrics, read_schedule_csv, write_schedule_csv, Schedule};
use photolith::exact::{export_milp, solve_exact, ExactStatus};
use photolith::experiments::{format_table, run_grid, write_records_csv, write_timings_csv, GridConfig, RatioKind};
use photolith::instgen::{generate_instance, EquipmentScenario, GenConfig, ReadyScenario};
use photolith::search::{run_ga, run_sp, GAConfig, SPConfig};
use photolith::{Error, Instance, Objective};

#[derive(Parser)]
#[command(name = "photolith", version, about = "Photolithography flowshop scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Sp,
    Ga,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance (JSON).
    Generate {
        #[arg(long)]
        n: usize,
        /// Ready-time scenario: zero or mixed.
        #[arg(long, default_value = "zero")]
        ready: ReadyScenario,
        /// Tardiness factor T.
        #[arg(long, default_value_t = 0.3)]
        tardiness: f64,
        /// Due-date range R.
        #[arg(long, default_value_t = 0.5)]
        range: f64,
        /// Equipment scenario: 1 or 2.
        #[arg(long, default_value = "1")]
        equipment: EquipmentScenario,
        #[arg(long)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and print the schedule's metrics.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "ga")]
        alg: Algorithm,
        #[arg(long, default_value = "cmax")]
        objective: Objective,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exact solver time limit in seconds.
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        /// SP iterations / GA generations.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        pop_size: Option<usize>,
        /// GA stall window in generations.
        #[arg(long)]
        stall_window: Option<usize>,
        /// Schedule CSV output; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a schedule against an instance and print its metrics.
    Evaluate { schedule: PathBuf, instance: PathBuf },
    /// Write the instance's mixed-integer model in LP format.
    ExportLp {
        instance: PathBuf,
        #[arg(long, default_value = "cmax")]
        objective: Objective,
        /// Print model size counts instead of the model.
        #[arg(long)]
        counts: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid and write records, timings and ratio tables.
    Experiment {
        /// Grid configuration (JSON); defaults when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Master seed; overrides the grid file's.
        #[arg(long)]
        seed: u64,
        /// Restrict to these objectives.
        #[arg(long, value_delimiter = ',')]
        objective: Vec<Objective>,
    },
    /// Draw a schedule as an SVG Gantt chart.
    Gantt {
        schedule: PathBuf,
        instance: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_instance(path: &Path) -> Result<Instance, Error> {
    Instance::from_json(&read(path)?)
}

fn load_schedule(path: &Path, instance: &Instance) -> Result<Schedule, Error> {
    read_schedule_csv(instance, read(path)?.as_bytes())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn print_metrics(instance: &Instance, schedule: &Schedule) {
    let m = metrics(instance, schedule);
    eprintln!("cmax={} wct={} twt={}", m.cmax, m.wct, m.twt);
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Generate { n, ready, tardiness, range, equipment, seed, out } => {
            let inst = generate_instance(&GenConfig { n, ready, tardiness, range, equipment, seed })?;
            emit(out.as_deref(), &(inst.to_json()? + "\n"))
        }
        Command::Solve { instance, alg, objective, seed, time_limit, iterations, pop_size, stall_window, out } => {
            let inst = load_instance(&instance)?;
            let (schedule, value, note) = match alg {
                Algorithm::Sp => {
                    let mut cfg = SPConfig { seed, ..SPConfig::default() };
                    if let Some(it) = iterations {
                        cfg.max_iterations = it;
                    }
                    let o = run_sp(&inst, objective, &cfg)?;
                    (o.schedule, o.value, format!("iterations={}", o.trace.len()))
                }
                Algorithm::Ga => {
                    let mut cfg = GAConfig { seed, ..GAConfig::default() };
                    if let Some(it) = iterations {
                        cfg.max_generations = it;
                    }
                    if let Some(p) = pop_size {
                        cfg.pop_size = p;
                    }
                    if let Some(w) = stall_window {
                        cfg.stall_window = w;
                    }
                    let o = run_ga(&inst, objective, &cfg)?;
                    (o.schedule, o.value, format!("generations={} stalled={}", o.trace.len(), o.stalled))
                }
                Algorithm::Exact => {
                    if !(time_limit >= 0.0) {
                        return Err(Error::Config("time limit must be nonnegative".into()));
                    }
                    let o = solve_exact(&inst, objective, Duration::from_secs_f64(time_limit))?;
                    (o.schedule, o.value, format!("status={} nodes={}", o.status, o.nodes))
                }
            };
            let violations = check_feasibility(&inst, &schedule);
            if !violations.is_empty() {
                return Err(Error::Infeasible(violations));
            }
            let mut csv = Vec::new();
            write_schedule_csv(&inst, &schedule, &mut csv)?;
            emit(out.as_deref(), &String::from_utf8_lossy(&csv))?;
            eprintln!("{objective}={value} {note}");
            print_metrics(&inst, &schedule);
            Ok(())
        }
        Command::Evaluate { schedule, instance } => {
            let inst = load_instance(&instance)?;
            let s = load_schedule(&schedule, &inst)?;
            let violations = check_feasibility(&inst, &s);
            if !violations.is_empty() {
                return Err(Error::Infeasible(violations));
            }
            let m = metrics(&inst, &s);
            println!("feasible\ncmax={}\nwct={}\ntwt={}", m.cmax, m.wct, m.twt);
            Ok(())
        }
        Command::ExportLp { instance, objective, counts, out } => {
            let inst = load_instance(&instance)?;
            let model = export_milp(&inst, objective);
            if counts {
                let c = model.counts();
                let text = format!(
                    "constraints={}\ncontinuous={}\nbinary={}\ntotal={}\n",
                    c.constraints, c.continuous, c.binary, c.total
                );
                emit(out.as_deref(), &text)
            } else {
                emit(out.as_deref(), &model.to_lp(&inst.label))
            }
        }
        Command::Experiment { grid, out, seed, objective } => {
            let mut cfg = match grid {
                Some(path) => serde_json::from_str::<GridConfig>(&read(&path)?)?,
                None => GridConfig::new(seed),
            };
            cfg.master_seed = seed;
            if !objective.is_empty() {
                cfg.objectives = objective;
            }
            let results = run_grid(&cfg)?;
            fs::create_dir_all(&out)?;
            write_records_csv(&results.records, fs::File::create(out.join("records.csv"))?)?;
            write_timings_csv(&results.timings, fs::File::create(out.join("timings.csv"))?)?;
            let tables = format!(
                "{}\n{}",
                format_table(&results.records, RatioKind::Performance, &cfg),
                format_table(&results.records, RatioKind::Heuristic, &cfg)
            );
            fs::write(out.join("tables.txt"), &tables)?;
            let optimal = results.records.iter().filter(|r| r.exact_status == Some(ExactStatus::Optimal)).count();
            let failed = results.records.iter().filter(|r| r.error.is_some()).count();
            eprintln!("{} records ({optimal} solved optimally, {failed} with errors)", results.records.len());
            print!("{tables}");
            Ok(())
        }
        Command::Gantt { schedule, instance, out } => {
            let inst = load_instance(&instance)?;
            let s = load_schedule(&schedule, &inst)?;
            emit(out.as_deref(), &gantt::render(&inst, &s)?)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Infeasible(violations)) => {
            eprintln!("error: schedule is infeasible");
            for v in violations {
                eprintln!("  {v}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
