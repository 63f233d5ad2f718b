//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::auction::{run_auction, AuctionConfig, EquilibriumReport};
use crate::baselines::{
    allocation_for, efficiency_share_table, simulate_realized_utilities, welfare_report,
    BaselineAllocation, Method,
};
use crate::core_check::{check_ssc, SolverOptions, SscConfig};
use crate::error::{Error, Result};
use crate::report::{self, OutputSet, RunManifest};
use crate::scenario::{builtin, endowment_shares, load_scenario, ValidatedScenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "TASKMARKET_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "taskmarket",
    version,
    about = "Walrasian allocation of stochastic tasks among risk-averse agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the auction and write prices, shares and the price trace.
    Solve(RunArgs),
    /// Run the auction and test the allocation against every coalition.
    CoreCheck(RunArgs),
    /// Compare welfare of the market allocation with the baselines.
    Baselines(RunArgs),
    /// Monte Carlo check of certainty-equivalent indifference.
    Simulate(RunArgs),
    /// All of the above into one directory.
    Reproduce(RunArgs),
    /// Write a scenario (built-in or file) as JSON.
    ExportScenario {
        #[arg(long, default_value = "general-example")]
        scenario: String,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Built-in name (general-example, toy-sbs) or path to a JSON scenario.
    #[arg(long, default_value = "general-example")]
    scenario: String,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Seed for random baselines, Monte Carlo draws and solver restarts; defaults to the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to $TASKMARKET_OUT, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
}

impl RunArgs {
    fn auction(&self) -> AuctionConfig {
        AuctionConfig {
            alpha: self.alpha,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            ..AuctionConfig::default()
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::DemandNonConvergence { .. } => EXIT_NOT_CONVERGED,
                _ => EXIT_INVALID,
            }
        }
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::ExportScenario { scenario, out } => {
            let raw = match builtin(&scenario) {
                Some(raw) => raw,
                None => load_scenario(&scenario)?.0.scenario().clone(),
            };
            let json = raw.to_json();
            match out {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => println!("{json}"),
            }
            Ok(EXIT_OK)
        }
        Command::Solve(args) => execute(
            "solve",
            &args,
            Parts {
                solve: true,
                ..Parts::default()
            },
        ),
        Command::CoreCheck(args) => execute(
            "core-check",
            &args,
            Parts {
                core: true,
                ..Parts::default()
            },
        ),
        Command::Baselines(args) => execute(
            "baselines",
            &args,
            Parts {
                baselines: true,
                ..Parts::default()
            },
        ),
        Command::Simulate(args) => execute(
            "simulate",
            &args,
            Parts {
                simulate: true,
                ..Parts::default()
            },
        ),
        Command::Reproduce(args) => execute(
            "reproduce",
            &args,
            Parts {
                solve: true,
                core: true,
                baselines: true,
                simulate: true,
            },
        ),
    }
}

#[derive(Default)]
struct Parts {
    solve: bool,
    core: bool,
    baselines: bool,
    simulate: bool,
}

fn execute(name: &str, args: &RunArgs, parts: Parts) -> Result<i32> {
    let auction = args.auction();
    auction.validate()?;
    if parts.simulate && args.draws == 0 {
        return Err(Error::Parameter("draws must be at least 1".into()));
    }
    let (scn, source) = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(scn.seed());
    let mut out = OutputSet::new(args.out_dir());
    let mut manifest = RunManifest::new(name, source.to_string(), &scn, seed, auction.clone());

    let eq = run_auction(&scn, &auction)?;
    println!(
        "auction: {} after {} rounds (max |z| = {}), settled in {} more",
        if eq.converged {
            "converged"
        } else {
            "not converged"
        },
        eq.iterations,
        report::fmt_float(eq.trace.last().map_or(f64::NAN, |t| t.max_abs_z)),
        eq.settle_iterations,
    );
    if parts.solve || !eq.converged {
        solve_outputs(&scn, &eq, &mut out)?;
    }
    if !eq.converged {
        out.write(manifest)?;
        eprintln!(
            "error: auction did not reach max |z| <= {} within {} rounds",
            auction.epsilon, auction.max_iters
        );
        return Ok(EXIT_NOT_CONVERGED);
    }
    if parts.core {
        let cfg = SscConfig {
            solver: SolverOptions {
                seed,
                ..SolverOptions::default()
            },
            ..SscConfig::default()
        };
        let ssc = check_ssc(&scn, &eq.allocation, &cfg)?;
        println!(
            "core check: weak {} strong {} ({} inconclusive)",
            verdict(ssc.weak_verdict),
            verdict(ssc.strong_verdict),
            ssc.inconclusive
        );
        if let Some(w) = &ssc.worst_offender {
            println!(
                "  largest gain: coalition {} agent {} {} relative {}",
                w.coalition,
                w.target + 1,
                w.mode,
                report::fmt_float(w.improvement.relative)
            );
        }
        out.add("ssc_blocking.csv", report::ssc_csv(&ssc)?);
        out.add("ssc_strong.csv", report::ssc_strong_csv(&ssc)?);
    }
    if parts.baselines {
        let mut allocs: Vec<BaselineAllocation> = vec![BaselineAllocation {
            method: Method::Walrasian,
            shares: eq.allocation.clone(),
        }];
        for method in [Method::WeightedMatching, Method::Random, Method::Equal] {
            match allocation_for(&scn, method, &auction, seed) {
                Ok(a) => allocs.push(a),
                Err(e @ Error::MatchingUndefined { .. }) => eprintln!("skipping {method}: {e}"),
                Err(e) => return Err(e),
            }
        }
        let welfare = welfare_report(&scn, &allocs)?;
        for row in &welfare.rows {
            println!(
                "welfare {:<18} {}",
                row.method.name(),
                report::fmt_float(row.welfare)
            );
        }
        out.add("fig9_welfare.csv", report::welfare_csv(&welfare)?);
        out.add(
            "baseline_allocations.csv",
            report::allocations_csv(&allocs)?,
        );
    }
    if parts.simulate {
        let rows = simulate_realized_utilities(&scn, &eq.allocation, args.draws, seed)?;
        let worst = rows
            .iter()
            .filter(|r| r.predicted > 0.0)
            .map(|r| (r.mean - r.predicted).abs() / r.predicted)
            .fold(0.0, f64::max);
        println!(
            "simulate: {} draws, largest relative gap {}",
            args.draws,
            report::fmt_float(worst)
        );
        out.add("fig4_indifference.csv", report::indifference_csv(&rows)?);
        manifest.draws = Some(args.draws);
    }
    let written = out.write(manifest)?;
    println!(
        "wrote {} files to {}",
        written.len(),
        args.out_dir().display()
    );
    Ok(EXIT_OK)
}

fn solve_outputs(
    scn: &ValidatedScenario,
    eq: &EquilibriumReport,
    out: &mut OutputSet,
) -> Result<()> {
    let w = endowment_shares(scn)?;
    out.add("equilibrium_prices.csv", report::prices_csv(eq)?);
    out.add("equilibrium_shares.csv", report::shares_csv(eq, &w)?);
    out.add("auction_trace.csv", report::trace_csv(eq)?);
    out.add(
        "fig5_efficiency.csv",
        report::efficiency_csv(&efficiency_share_table(scn, &eq.allocation))?,
    );
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "no blocking coalition"
    } else {
        "blocked"
    }
}
