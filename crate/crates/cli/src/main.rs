use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use svbound::io::atomic_write;
use svbound::oracle::seesaw_max;
use svbound::scan::{default_p_grid, figure_data, parse_p_grid, scan, Figure, FilterSearch, Mode, ScanSpec};
use svbound::{
    certify_bound, correlation_matrix, filtered_bound, optimize_filter, unfiltered_bound, AnalysisConfig,
    DensityMatrix, Error, Family, FilterParams, FilterTriple, OracleConfig, ThresholdOutcome, DEFAULT_SEED,
};

mod report;

/// Svetlichny-operator bounds for three-qubit states, with and without
/// local filtering.
#[derive(Parser, Debug)]
#[command(name = "svbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Correlation matrix, bound 4λ₁, tightness and violation verdict.
    Bound {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Apply a local filter (or search for the best one) and bound the result.
    Filter {
        #[command(flatten)]
        state: StateArgs,
        #[arg(short = 'x', default_value_t = 1.0, conflicts_with = "optimize")]
        x: f64,
        #[arg(short = 'y', default_value_t = 1.0, conflicts_with = "optimize")]
        y: f64,
        #[arg(short = 'z', default_value_t = 1.0, conflicts_with = "optimize")]
        z: f64,
        /// Search diagonal filters for the largest attainable λ₁′.
        #[arg(long)]
        optimize: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// See-saw maximization of tr(Sρ) only.
    Oracle {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Curves and violation thresholds over a grid of p.
    Scan {
        /// Preset curves: fig1 is the chi family at θ = π/8, fig2 GHZ with colored noise.
        #[arg(long, value_enum, conflicts_with_all = ["family", "theta"])]
        figure: Option<FigureArg>,
        #[arg(long, value_enum, required_unless_present = "figure")]
        family: Option<FamilyArg>,
        /// Chi family angle in radians (default π/8).
        #[arg(long)]
        theta: Option<f64>,
        /// Grid as start:end:step (default 0:1:0.01).
        #[arg(long)]
        p_grid: Option<String>,
        /// Compute only one curve; both by default.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = true)]
struct StateArgs {
    #[arg(long, value_enum, conflicts_with = "state", requires = "p")]
    family: Option<FamilyArg>,
    #[arg(long)]
    p: Option<f64>,
    /// Chi family angle in radians (default π/8).
    #[arg(long)]
    theta: Option<f64>,
    /// JSON state file: {"dim": 8, "re": [[..]], "im": [[..]]}.
    #[arg(long)]
    state: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Write a machine-readable report here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Chi,
    GhzNoise,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Unfiltered,
    Filtered,
}

const EXIT_INVALID: u8 = 2;
const EXIT_PHYSICALITY: u8 = 3;
const EXIT_ANNIHILATION: u8 = 4;
const EXIT_NON_MONOTONE: u8 = 5;

fn family_of(arg: FamilyArg, theta: Option<f64>) -> Result<Family, Error> {
    match (arg, theta) {
        (FamilyArg::Chi, None) => Ok(Family::chi()),
        (FamilyArg::Chi, Some(theta)) => Ok(Family::ChiGhzClass { theta }),
        (FamilyArg::GhzNoise, None) => Ok(Family::GhzColoredNoise),
        (FamilyArg::GhzNoise, Some(_)) => Err(Error::Argument("--theta only applies to the chi family".into())),
    }
}

/// The resolved state and a one-line description of where it came from.
fn resolve_state(args: &StateArgs) -> Result<(DensityMatrix, String), Error> {
    match (&args.state, args.family) {
        (Some(path), None) => {
            if args.p.is_some() || args.theta.is_some() {
                return Err(Error::Argument("--p and --theta cannot be combined with --state".into()));
            }
            Ok((DensityMatrix::load(path)?, format!("file {}", path.display())))
        }
        (None, Some(arg)) => {
            let family = family_of(arg, args.theta)?;
            let p = args.p.ok_or_else(|| Error::Argument("--p is required with --family".into()))?;
            let label = match family {
                Family::ChiGhzClass { theta } => format!("chi (p = {p}, theta = {theta})"),
                Family::GhzColoredNoise => format!("ghz-noise (p = {p})"),
            };
            Ok((family.build(p)?, label))
        }
        _ => Err(Error::Argument("give exactly one of --family or --state".into())),
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    atomic_write(path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Bound { state, common } => {
            let (rho, label) = resolve_state(&state)?;
            let cfg = AnalysisConfig { always_run_oracle: true, ..AnalysisConfig::with_seed(common.seed) };
            let corr = correlation_matrix(&rho)?;
            let rep = certify_bound(&rho, &corr, &cfg)?;
            print!("{}", report::bound_text(&label, &corr, &rep));
            if let Some(path) = &common.json {
                write_file(path, &report::bound_json(&label, &corr, &rep))?;
            }
        }
        Command::Filter { state, x, y, z, optimize, common } => {
            let (rho, label) = resolve_state(&state)?;
            let cfg = AnalysisConfig { always_run_oracle: true, ..AnalysisConfig::with_seed(common.seed) };
            let (params, fa) = if optimize {
                let opt = optimize_filter(&rho, &FilterSearch::default())?;
                (opt.params, opt.analysis)
            } else {
                let params = FilterParams::new(x, y, z)?;
                (params, filtered_bound(&rho, &FilterTriple::diagonal(params))?)
            };
            let rep = certify_bound(&fa.rho_prime, &fa.m_prime, &cfg)?;
            let unfiltered = if optimize { Some(unfiltered_bound(&rho, &cfg)?) } else { None };
            print!("{}", report::filter_text(&label, params, optimize, &fa, &rep, unfiltered.as_ref()));
            if let Some(path) = &common.json {
                write_file(path, &report::filter_json(&label, params, optimize, &fa, &rep, unfiltered.as_ref()))?;
            }
        }
        Command::Oracle { state, restarts, common } => {
            let (rho, label) = resolve_state(&state)?;
            let cfg = OracleConfig { restarts, seed: common.seed, ..OracleConfig::default() };
            let res = seesaw_max(&rho, &cfg)?;
            print!("{}", report::oracle_text(&label, &res, restarts));
            if let Some(path) = &common.json {
                write_file(path, &report::oracle_json(&label, &res, restarts))?;
            }
        }
        Command::Scan { figure, family, theta, p_grid, mode, csv, common } => {
            let grid = match &p_grid {
                Some(text) => parse_p_grid(text)?,
                None => default_p_grid(),
            };
            let family = match (figure, family) {
                (Some(FigureArg::Fig1), _) => Family::chi(),
                (Some(FigureArg::Fig2), _) => Family::GhzColoredNoise,
                (None, Some(arg)) => family_of(arg, theta)?,
                (None, None) => return Err(Error::Argument("give --figure or --family".into()).into()),
            };
            let spec = ScanSpec::new(family, grid, common.seed)?;
            let report = match (figure, mode) {
                (Some(fig), None) => figure_data(
                    match fig {
                        FigureArg::Fig1 => Figure::Fig1,
                        FigureArg::Fig2 => Figure::Fig2,
                    },
                    &spec,
                )?,
                (Some(_), Some(_)) => {
                    return Err(Error::Argument("--mode cannot be combined with --figure".into()).into())
                }
                (None, Some(ModeArg::Unfiltered)) => scan(&spec, &[Mode::Unfiltered])?,
                (None, Some(ModeArg::Filtered)) => scan(&spec, &[Mode::Filtered])?,
                (None, None) => scan(&spec, &[Mode::Unfiltered, Mode::Filtered])?,
            };
            print!("{}", report::scan_text(&report));
            if let Some(path) = &csv {
                write_file(path, &report.to_csv())?;
            }
            if let Some(path) = &common.json {
                write_file(path, &report.to_json())?;
            }
            let thresholds = [&report.thresholds.unfiltered, &report.thresholds.filtered];
            if thresholds.iter().any(|t| matches!(t, Some(ThresholdOutcome::NonMonotone { .. }))) {
                return Ok(EXIT_NON_MONOTONE);
            }
        }
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Physicality { .. }) => EXIT_PHYSICALITY,
        Some(Error::Annihilation(_)) => EXIT_ANNIHILATION,
        Some(Error::Io(_)) => 1,
        Some(_) => EXIT_INVALID,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
