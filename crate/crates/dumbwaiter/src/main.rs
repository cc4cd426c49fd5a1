use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dumbwaiter::chain::{
    hitting_time_report, monte_carlo_objective_estimates, ChainError, ChainSpec, TransitionMatrix,
};
use dumbwaiter::config::{self, ConfigError};
use dumbwaiter::fleet::{fleet_simulation, FleetError, FleetSpec};
use dumbwaiter::optimize::{optimize_policy, GaConfig, OptimizeError};
use dumbwaiter::report::{
    ChainEvalReport, FleetReport, OptimizeReport, OutputFormat, SecondsReport, SpatialReport,
};
use dumbwaiter::spatial::{
    analytic_leg_moments, waitress_summary, BuildingSpec, CallSequence, SpatialError,
};

/// Elevator dispatch models: continuous trajectory statistics, composite
/// state Markov chains, policy search, and fleet load balancing.
#[derive(Parser)]
#[command(name = "dumbwaiter", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(format: Format) -> Self {
        match format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory and report leg statistics, empirical next to
    /// analytic; with building flags, convert the mean leg to seconds
    Spatial {
        /// Number of legs to simulate
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        legs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Building floor count (enables the travel-time conversion)
        #[arg(long, requires = "floor_height", requires = "speed")]
        floors: Option<u32>,
        /// Height of one floor in meters
        #[arg(long, value_name = "METERS", requires = "floors")]
        floor_height: Option<f64>,
        /// Elevator speed in meters per minute
        #[arg(long, value_name = "M_PER_MIN", requires = "floors")]
        speed: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare three-call batched service against in-order service over
    /// random batches
    Waitress {
        /// Number of random batches
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        batches: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a chain spec file: state count, irreducibility, exact
    /// per-target hitting times, and the summed objective
    ChainEval {
        /// Chain spec document (JSON)
        spec: PathBuf,
        /// Append Monte Carlo estimates from this many episodes per
        /// (target, start) pair
        #[arg(long, value_name = "EPISODES")]
        mc_check: Option<usize>,
        /// Fix the start floor instead of averaging over empty states
        #[arg(long, value_name = "FLOOR")]
        start: Option<usize>,
        /// Seed for the Monte Carlo check
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the transition matrix document here
        #[arg(long, value_name = "PATH")]
        matrix_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Search movement policies with the genetic algorithm and report the
    /// best found against the uniform baseline
    ChainOptimize {
        /// Chain spec document (JSON)
        spec: PathBuf,
        #[arg(long, default_value_t = GaConfig::default().population_size)]
        population: usize,
        #[arg(long, default_value_t = GaConfig::default().generations)]
        generations: usize,
        #[arg(long, default_value_t = GaConfig::default().mutation_stddev)]
        mutation_stddev: f64,
        #[arg(long, default_value_t = GaConfig::default().crossover_rate)]
        crossover_rate: f64,
        #[arg(long, default_value_t = GaConfig::default().elite_count)]
        elites: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Split passengers over a fleet and pool per-car trajectory statistics
    Fleet {
        /// Number of cars
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        elevators: u32,
        /// Per-car passenger capacity
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        capacity: u32,
        /// Total passengers to distribute
        #[arg(long)]
        passengers: u32,
        /// Legs simulated per car
        #[arg(long, value_parser = clap::value_parser!(u64).range(3..))]
        legs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug)]
enum CliError {
    Io(PathBuf, std::io::Error),
    Config(ConfigError),
    Spatial(SpatialError),
    Chain(ChainError),
    Optimize(OptimizeError),
    Fleet(FleetError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Spatial(e) => write!(f, "{e}"),
            CliError::Chain(e) => write!(f, "{e}"),
            CliError::Optimize(e) => write!(f, "{e}"),
            CliError::Fleet(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    /// Stable contract: 0 success, 2 usage or parse failure, 3 unreachable
    /// target, 4 infeasible fleet; internal numerical failures are 1.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(..) | CliError::Config(_) | CliError::Spatial(_) => 2,
            CliError::Chain(e) | CliError::Optimize(OptimizeError::Chain(e)) => match e {
                ChainError::UnreachableTarget { .. } => 3,
                ChainError::SolverResidual { .. }
                | ChainError::NoStationaryDistribution
                | ChainError::EpisodeCap { .. } => 1,
                _ => 2,
            },
            CliError::Optimize(OptimizeError::InvalidConfig { .. }) => 2,
            CliError::Fleet(FleetError::Infeasible { .. }) => 4,
            CliError::Fleet(_) => 2,
        }
    }
}

fn write_output(output: &OutputArgs, text: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(path.clone(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_chain_spec(path: &PathBuf) -> Result<ChainSpec, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(path.clone(), e))?;
    config::parse_payload::<ChainSpec>(&bytes).map_err(CliError::Config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spatial {
            legs,
            seed,
            floors,
            floor_height,
            speed,
            output,
        } => {
            let sequence =
                CallSequence::generate(legs as usize, seed).map_err(CliError::Spatial)?;
            let series = sequence.leg_series().map_err(CliError::Spatial)?;
            let empirical = (series.len() >= 3)
                .then(|| series.empirical_moments())
                .transpose()
                .map_err(CliError::Spatial)?;
            let seconds = match (floors, floor_height, speed) {
                (Some(floors), Some(height), Some(speed)) => {
                    let building =
                        BuildingSpec::new(floors, height, speed).map_err(CliError::Spatial)?;
                    Some(
                        SecondsReport::for_building(&building, 1.0 / 3.0)
                            .map_err(CliError::Spatial)?,
                    )
                }
                _ => None,
            };
            let report = SpatialReport {
                n_legs: series.len(),
                seed,
                total_distance: series.total_distance(),
                mean_leg: series.total_distance() / series.len() as f64,
                positions: sequence.positions().to_vec(),
                legs: series.legs().to_vec(),
                empirical,
                analytic: analytic_leg_moments(),
                seconds,
            };
            write_output(&output, &report.render(output.format.into()))
        }
        Command::Waitress {
            batches,
            seed,
            output,
        } => {
            let summary = waitress_summary(batches as usize, seed).map_err(CliError::Spatial)?;
            write_output(
                &output,
                &dumbwaiter::report::waitress_report(&summary, seed, output.format.into()),
            )
        }
        Command::ChainEval {
            spec,
            mc_check,
            start,
            seed,
            matrix_out,
            output,
        } => {
            let spec = read_chain_spec(&spec)?;
            let matrix = TransitionMatrix::build(&spec).map_err(CliError::Chain)?;
            let validation = matrix.validate();
            let report = hitting_time_report(&matrix, start).map_err(CliError::Chain)?;
            let mc = match mc_check {
                Some(episodes) => Some(
                    monte_carlo_objective_estimates(&matrix, episodes, seed, start)
                        .map_err(CliError::Chain)?,
                ),
                None => None,
            };
            if let Some(path) = matrix_out {
                fs::write(&path, dumbwaiter::report::render_matrix(&matrix))
                    .map_err(|e| CliError::Io(path.clone(), e))?;
            }
            let eval = ChainEvalReport {
                floors: spec.floors,
                state_count: matrix.dimension(),
                irreducible: validation.irreducible,
                report,
                mc_check: mc,
            };
            write_output(&output, &eval.render(output.format.into()))
        }
        Command::ChainOptimize {
            spec,
            population,
            generations,
            mutation_stddev,
            crossover_rate,
            elites,
            seed,
            output,
        } => {
            let spec = read_chain_spec(&spec)?;
            let baseline = dumbwaiter::chain::objective(&spec)
                .map_err(CliError::Chain)?
                .objective;
            let ga = GaConfig {
                population_size: population,
                generations,
                mutation_stddev,
                crossover_rate,
                elite_count: elites,
                seed,
            };
            let result = optimize_policy(&spec, &ga).map_err(CliError::Optimize)?;
            let report = OptimizeReport {
                floors: spec.floors,
                baseline_objective: baseline,
                result,
            };
            eprintln!(
                "baseline objective {:.6}, optimized {:.6} (improvement {:.2}%)",
                report.baseline_objective,
                report.result.best_objective,
                report.improvement_percent()
            );
            write_output(&output, &report.render(output.format.into()))
        }
        Command::Fleet {
            elevators,
            capacity,
            passengers,
            legs,
            seed,
            output,
        } => {
            let spec = FleetSpec {
                elevators,
                capacity,
                passengers,
            };
            let metrics = fleet_simulation(&spec, legs as usize, seed).map_err(|e| {
                if let FleetError::Infeasible { max, .. } = &e {
                    eprintln!(
                        "feasible loads satisfy passengers <= elevators x capacity = {max}"
                    );
                }
                CliError::Fleet(e)
            })?;
            let report = FleetReport {
                elevators,
                capacity,
                passengers,
                legs_per_elevator: legs as usize,
                seed,
                metrics,
            };
            write_output(&output, &report.render(output.format.into()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
