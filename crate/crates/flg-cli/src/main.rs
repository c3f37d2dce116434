//! `flg`: scripted experiments on two-sided facility location games.
//!
//! Instances arrive on stdin or via `--input`; generators emit the same
//! text format, so commands compose in pipes:
//!
//! ```text
//! flg gen lower-bound --k 2 --x 4 | flg find-spe
//! ```
//!
//! Exit codes: 0 success, 2 malformed input, 3 enumeration budget exceeded,
//! 4 internal invariant violation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use flg::distribution::LoadVector;
use flg::dot::export_dot;
use flg::dynamics::{
    best_response, check_spe, empirical_poa, find_spe, optimal_placement_exact,
    optimal_placement_greedy, InitialPlacement,
};
use flg::equilibrium::{
    compute_equilibrium_loads, extract_client_equilibrium, is_client_equilibrium,
};
use flg::generators::{gen_3sat, gen_lower_bound, gen_random, CnfFormula};
use flg::graph::{HostGraph, Placement};
use flg::instance::{
    parse_distribution, parse_instance, parse_placement, serialize_distribution,
    serialize_instance, serialize_loads,
};
use flg::rational::{format_ratio, rat, rat_int};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "flg",
    version,
    about = "Two-sided facility location games: equilibrium loads, facility dynamics, generators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArg {
    /// Instance file; read from stdin when omitted
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Client-equilibrium facility loads for a placement
    Loads {
        #[command(flatten)]
        input: InputArg,
        /// Placement file (one `s <id_1> ... <id_k>` line)
        #[arg(long)]
        placement: PathBuf,
    },
    /// An explicit client equilibrium, as `d <client> <facility> <num>/<den>` lines
    ClientEq {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        placement: PathBuf,
    },
    /// Check whether a distribution file is a client equilibrium
    CheckClientEq {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        placement: PathBuf,
        #[arg(long)]
        distribution: PathBuf,
    },
    /// Best location and load for one facility, the others fixed
    BestResponse {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        placement: PathBuf,
        /// Facility index to optimize
        #[arg(long)]
        facility: usize,
    },
    /// Improving-response dynamics to a subgame perfect equilibrium
    FindSpe {
        #[command(flatten)]
        input: InputArg,
        /// Start from this placement instead of a seeded random one
        #[arg(long)]
        placement: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        move_cap: u64,
        /// Trace format; csv columns are
        /// move,mover,from,to,locations,loads,potential
        #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
        format: TraceFormat,
        /// Budget for the exact-optimum part of the ratio report
        #[arg(long, default_value_t = 1_000_000)]
        opt_budget: u64,
    },
    /// Check whether a placement is a subgame perfect equilibrium
    CheckSpe {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        placement: PathBuf,
    },
    /// Social optimum placement (exhaustive with greedy fallback)
    Opt {
        #[command(flatten)]
        input: InputArg,
        /// Require the exhaustive search (budget overrun becomes an error)
        #[arg(long, conflicts_with = "greedy")]
        exact: bool,
        /// Use the greedy max-coverage heuristic
        #[arg(long)]
        greedy: bool,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Empirical PoA/PoS report over discovered equilibria
    Poa {
        #[command(flatten)]
        input: InputArg,
        /// First seed for the improving-response restarts
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        restarts: u64,
        /// Budget for exhaustive SPE multiset enumeration
        #[arg(long, default_value_t = 200_000)]
        enum_budget: u64,
        #[arg(long, default_value_t = 1_000_000)]
        opt_budget: u64,
        #[arg(long, default_value_t = 100_000)]
        move_cap: u64,
    },
    /// Emit an instance from the built-in families
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Render the instance as DOT (placements add facility markers + loads)
    ExportDot {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        placement: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Star family with unique SPE and ratio ((2k-1)x+1)/(kx+1)
    LowerBound {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        x: u64,
    },
    /// Hardness-reduction graph from a DIMACS CNF file (k = variables)
    #[command(name = "3sat")]
    ThreeSat {
        #[arg(long)]
        cnf: PathBuf,
    },
    /// Seeded uniform random instance
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        max_weight: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<flg::Error> for CliError {
    fn from(e: flg::Error) -> Self {
        let code = match &e {
            flg::Error::Parse(_)
            | flg::Error::InvalidVertex { .. }
            | flg::Error::InvalidFacility { .. }
            | flg::Error::EmptyFacilitySet
            | flg::Error::SelfLoop { .. }
            | flg::Error::DuplicateEdge { .. }
            | flg::Error::InfeasibleDistribution { .. }
            | flg::Error::BadGeneratorParams { .. } => 2,
            flg::Error::EnumerationBudget { .. } | flg::Error::UtilitySetTooLarge { .. } => 3,
            flg::Error::MoveCapExhausted { .. } | flg::Error::NonConvergence { .. } => 4,
        };
        CliError {
            message: e.to_string(),
            code,
        }
    }
}

impl From<flg::ParseError> for CliError {
    fn from(e: flg::ParseError) -> Self {
        CliError {
            message: e.to_string(),
            code: 2,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(input: &InputArg) -> Result<(HostGraph, usize), CliError> {
    let text = match &input.input {
        Some(path) => read_to_string(path)?,
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::input(format!("cannot read stdin: {e}")))?;
            buf
        }
    };
    Ok(parse_instance(&text)?)
}

fn load_placement(path: &Path, g: &HostGraph, k: usize) -> Result<Placement, CliError> {
    Ok(parse_placement(&read_to_string(path)?, g, k)?)
}

/// Exact optimum within budget, greedy beyond it.
fn optimum_with_fallback(g: &HostGraph, k: usize, budget: u64) -> (u64, &'static str) {
    match optimal_placement_exact(g, k, budget) {
        Ok((_, w)) => (w, "exact"),
        Err(_) => (optimal_placement_greedy(g, k).1, "greedy"),
    }
}

fn welfare_ratio(opt: u64, welfare: u64) -> String {
    if welfare == 0 {
        format_ratio(&rat_int(1))
    } else {
        format_ratio(&rat(opt, welfare))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Loads { input, placement } => {
            let (g, k) = load_instance(&input)?;
            let s = load_placement(&placement, &g, k)?;
            let comp = compute_equilibrium_loads(&g, &s);
            print!("{}", serialize_loads(&comp.loads));
        }
        Command::ClientEq { input, placement } => {
            let (g, k) = load_instance(&input)?;
            let s = load_placement(&placement, &g, k)?;
            let comp = compute_equilibrium_loads(&g, &s);
            print!("{}", serialize_distribution(&extract_client_equilibrium(&comp)));
        }
        Command::CheckClientEq {
            input,
            placement,
            distribution,
        } => {
            let (g, k) = load_instance(&input)?;
            let s = load_placement(&placement, &g, k)?;
            let sigma = parse_distribution(&read_to_string(&distribution)?, &g, k)?;
            println!("{}", is_client_equilibrium(&g, &s, &sigma)?);
        }
        Command::BestResponse {
            input,
            placement,
            facility,
        } => {
            let (g, k) = load_instance(&input)?;
            let s = load_placement(&placement, &g, k)?;
            if facility >= k {
                return Err(flg::Error::InvalidFacility { index: facility, k }.into());
            }
            let (location, load) = best_response(&g, &s, facility);
            println!("facility {facility}");
            println!("location {location}");
            println!("load {}", format_ratio(&load));
        }
        Command::FindSpe {
            input,
            placement,
            seed,
            move_cap,
            format,
            opt_budget,
        } => {
            let (g, k) = load_instance(&input)?;
            let initial = match placement {
                Some(path) => InitialPlacement::Given(load_placement(&path, &g, k)?),
                None => InitialPlacement::Random { seed },
            };
            let trace = find_spe(&g, k, initial, move_cap)?;
            match format {
                TraceFormat::Text => print!("{}", trace.to_log()),
                TraceFormat::Csv => print!("{}", trace.to_csv()),
            }
            let welfare = g.social_welfare(&trace.terminal);
            let (opt, method) = optimum_with_fallback(&g, k, opt_budget);
            print!("{}", flg::instance::serialize_placement(&trace.terminal));
            println!("moves {}", trace.move_count());
            println!("welfare {welfare}");
            println!("opt {opt} {method}");
            println!("ratio {}", welfare_ratio(opt, welfare));
        }
        Command::CheckSpe { input, placement } => {
            let (g, k) = load_instance(&input)?;
            let s = load_placement(&placement, &g, k)?;
            match check_spe(&g, &s) {
                None => println!("true"),
                Some(dev) => {
                    println!("false");
                    println!(
                        "deviation f{} {} -> {} load {} -> {}",
                        dev.facility,
                        dev.from,
                        dev.to,
                        format_ratio(&dev.old_load),
                        format_ratio(&dev.new_load)
                    );
                }
            }
        }
        Command::Opt {
            input,
            exact,
            greedy,
            budget,
        } => {
            let (g, k) = load_instance(&input)?;
            let (locations, welfare, method) = if greedy {
                let (locs, w) = optimal_placement_greedy(&g, k);
                (locs, w, "greedy")
            } else if exact {
                let (locs, w) = optimal_placement_exact(&g, k, budget)?;
                (locs, w, "exact")
            } else {
                match optimal_placement_exact(&g, k, budget) {
                    Ok((locs, w)) => (locs, w, "exact"),
                    Err(flg::Error::EnumerationBudget { .. }) => {
                        let (locs, w) = optimal_placement_greedy(&g, k);
                        (locs, w, "greedy")
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            println!("welfare {welfare}");
            let ids: Vec<String> = locations.iter().map(|v| v.to_string()).collect();
            println!("locations {}", ids.join(" "));
            println!("method {method}");
        }
        Command::Poa {
            input,
            seed,
            restarts,
            enum_budget,
            opt_budget,
            move_cap,
        } => {
            let (g, k) = load_instance(&input)?;
            let seeds: Vec<u64> = (0..restarts).map(|i| seed + i).collect();
            let report = empirical_poa(&g, k, &seeds, enum_budget, opt_budget, move_cap)?;
            println!(
                "opt {} {}",
                report.opt_welfare,
                if report.opt_exact { "exact" } else { "greedy" }
            );
            for spe in &report.spes {
                let ids: Vec<String> = spe.locations.iter().map(|v| v.to_string()).collect();
                println!(
                    "spe {} welfare {} ratio {}",
                    ids.join(" "),
                    spe.welfare,
                    format_ratio(&spe.ratio)
                );
            }
            println!("poa {}", format_ratio(&report.poa_estimate));
            println!("pos {}", format_ratio(&report.pos_estimate));
            println!("exhaustive {}", report.exhaustive);
        }
        Command::Gen { family } => {
            let (g, k) = match family {
                GenFamily::LowerBound { k, x } => gen_lower_bound(k, x)?,
                GenFamily::ThreeSat { cnf } => {
                    let phi = CnfFormula::parse_dimacs(&read_to_string(&cnf)?)?;
                    gen_3sat(&phi)
                }
                GenFamily::Random {
                    n,
                    density,
                    max_weight,
                    k,
                    seed,
                } => {
                    if !(0.0..=1.0).contains(&density) {
                        return Err(CliError::input("density must lie in [0, 1]"));
                    }
                    if max_weight == 0 {
                        return Err(CliError::input("max weight must be at least 1"));
                    }
                    gen_random(n, density, max_weight, k, seed)
                }
            };
            print!("{}", serialize_instance(&g, k));
        }
        Command::ExportDot { input, placement } => {
            let (g, k) = load_instance(&input)?;
            match placement {
                Some(path) => {
                    let s = load_placement(&path, &g, k)?;
                    let comp = compute_equilibrium_loads(&g, &s);
                    let loads: LoadVector = comp.loads;
                    print!("{}", export_dot(&g, Some(&s), Some(&loads)));
                }
                None => print!("{}", export_dot(&g, None, None)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flg: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
