//! Command line front end.
//!
//! Subcommands map onto the library pipeline: `estimate` recovers valuation
//! distributions from a bid log, `solve` computes equilibrium bid functions,
//! `outcomes` sweeps discount rates and tabulates market statistics,
//! `verify` replays the discount-regime identity checks, and `plotdata`
//! exports solved curves in a plot-friendly shape.
//!
//! Exit codes: 0 on success, 2 for input or configuration problems, 3 when
//! the numerical search itself fails. All progress goes to standard error;
//! data goes to files or standard output. Given the same configuration and
//! seed, every command writes byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use discount_auctions::equivalence::{
    equal_rate_sweep, run_additive_trials, run_multiplicative_trials, EqualRateRow,
    EquivalenceReport,
};
use discount_auctions::estimation::{ingest, run_estimation, EstimationConfig};
use discount_auctions::outcomes::{
    evaluate_outcomes, sweep, OutcomeConfig, OutcomeMethod, SweepRow,
};
use discount_auctions::solver::{solve, SolverConfig};
use discount_auctions::{dist::ValuationDistribution, Error, Result};

const OUTCOMES_HEADER: &str =
    "r,e_rev,eff,win_disc,win_other,surp_disc,surp_other,cost_disc,cost_other";
const DEFAULT_SWEEP: [f64; 6] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25];

#[derive(Parser)]
#[command(
    name = "discount-auctions",
    version,
    about = "First-price auctions with bidder discounts: solve, estimate, sweep"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover valuation distribution parameters from a bid log.
    Estimate(EstimateArgs),
    /// Solve the equilibrium bid functions for one configuration.
    Solve(SolveArgs),
    /// Tabulate expected outcomes across a grid of discount rates.
    Outcomes(OutcomesArgs),
    /// Replay the discount-regime identity checks.
    Verify(VerifyArgs),
    /// Export a solve result as plot-ready CSV.
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Bid log CSV with columns auction_id,bidder_class,bid.
    #[arg(long)]
    bids: Option<PathBuf>,
    /// Discount rate applied to the discounted class; overrides the config.
    #[arg(long)]
    rate: Option<f64>,
    /// Output path for the estimate report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional TOML run configuration (keys under [estimation] and [paths]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Optional CSV dump of the retained pseudo-values per class.
    #[arg(long)]
    dump_pseudo: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// TOML run configuration containing a [solver] table.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; receives bid_functions.csv and report.toml.
    #[arg(long)]
    out: PathBuf,
    /// Override the integration step count from the config.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the discount rate from the config.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Args)]
struct OutcomesArgs {
    /// TOML run configuration containing a [solver] table.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated discount rates, e.g. "0,0.05,0.1"; overrides the
    /// config's [outcomes] rates.
    #[arg(long)]
    sweep: Option<String>,
    /// Output path for the outcome table CSV.
    #[arg(long)]
    out: PathBuf,
    /// Present statistics rounded to three decimals.
    #[arg(long)]
    round3: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which identity to replay.
    #[arg(long)]
    theorem: Theorem,
    /// Randomized trial count for the additive and multiplicative checks.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Seed for the trial generator.
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Optional TOML run configuration; equal-rate uses its [solver] table.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem {
    Additive,
    Multiplicative,
    EqualRate,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Solve output directory, as written by the solve command.
    #[arg(long)]
    solve: PathBuf,
    /// Output path for the plot CSV (columns role,r,valuation,bid).
    #[arg(long)]
    out: PathBuf,
}

/// Declarative run configuration. Every command accepts one; command line
/// flags override individual keys. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    /// Seed for any stochastic evaluation method.
    seed: Option<u64>,
    solver: Option<SolverConfig>,
    estimation: Option<EstimationConfig>,
    outcomes: Option<OutcomeSection>,
    paths: Option<PathsSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutcomeSection {
    /// Discount rates for the sweep.
    rates: Option<Vec<f64>>,
    /// Evaluation method: "integration" (default) or "monte_carlo".
    method: Option<String>,
    /// Sample count when the method is monte_carlo.
    samples: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PathsSection {
    /// Default bid log location for the estimate command.
    bids: Option<PathBuf>,
    /// Default output location.
    out: Option<PathBuf>,
}

/// The machine-readable half of a solve output directory.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveArtifact {
    r: f64,
    n: usize,
    steps: usize,
    bstar: f64,
    feasible: bool,
    best_response_gap1: f64,
    best_response_gap2: f64,
    clamped1: bool,
    clamped2: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Outcomes(args) => cmd_outcomes(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Plotdata(args) => cmd_plotdata(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
}

fn load_optional_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn solver_section(cfg: &RunConfig, path: &Path) -> Result<SolverConfig> {
    cfg.solver.clone().ok_or_else(|| {
        Error::invalid(format!("config {} has no [solver] table", path.display()))
    })
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let cfg = load_optional_config(args.config.as_ref())?;
    let paths = cfg.paths.unwrap_or_default();
    let mut est_cfg = cfg.estimation.unwrap_or_default();
    if let Some(r) = args.rate {
        est_cfg.r = r;
    }
    est_cfg.validate()?;

    let bids_path = args
        .bids
        .or(paths.bids)
        .ok_or_else(|| Error::invalid("no bid log given; pass --bids or set paths.bids"))?;
    let out_path = args
        .out
        .or(paths.out)
        .ok_or_else(|| Error::invalid("no output path given; pass --out or set paths.out"))?;

    let file = fs::File::open(&bids_path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", bids_path.display())))?;
    let report = ingest(file)?;
    if !report.row_errors.is_empty() {
        eprintln!(
            "warning: skipped {} malformed row(s) in {}",
            report.row_errors.len(),
            bids_path.display()
        );
        for err in report.row_errors.iter().take(5) {
            eprintln!("  line {}: {}", err.line, err.message);
        }
    }

    let result = run_estimation(&report.records, &est_cfg)?;
    let summary = result.summary();
    fs::write(&out_path, &summary)?;
    print!("{summary}");

    if let Some(dump) = args.dump_pseudo {
        let mut csv = String::from("class,pseudo_value\n");
        for est in result.classes() {
            for v in &est.pseudo_values {
                let _ = writeln!(csv, "{},{v}", est.class.label());
            }
        }
        fs::write(&dump, csv)?;
    }
    eprintln!("estimate written to {}", out_path.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let mut solver_cfg = solver_section(&cfg, &args.config)?;
    if let Some(steps) = args.steps {
        solver_cfg.steps = steps;
    }
    if let Some(rate) = args.rate {
        solver_cfg.r = rate;
    }
    solver_cfg.validate()?;

    let report = solve(&solver_cfg)?;
    write_solve_dir(&args.out, &solver_cfg, &report)?;
    eprintln!(
        "solved: b* = {:.6}, audit gaps {:.3e} / {:.3e}, output in {}",
        report.bstar,
        report.best_response_gap1,
        report.best_response_gap2,
        args.out.display()
    );
    Ok(())
}

fn write_solve_dir(
    dir: &Path,
    cfg: &SolverConfig,
    report: &discount_auctions::solver::SolveReport,
) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut csv = String::from("role,valuation,bid\n");
    for table in [&report.bid1, &report.bid2] {
        for &(v, b) in table.points() {
            let _ = writeln!(csv, "{},{v},{b}", table.role());
        }
    }
    fs::write(dir.join("bid_functions.csv"), csv)?;

    let artifact = SolveArtifact {
        r: cfg.r,
        n: cfg.n,
        steps: cfg.steps,
        bstar: report.bstar,
        feasible: report.feasible,
        best_response_gap1: report.best_response_gap1,
        best_response_gap2: report.best_response_gap2,
        clamped1: report.clamped1,
        clamped2: report.clamped2,
    };
    let toml_text = toml::to_string(&artifact)
        .map_err(|e| Error::invalid(format!("cannot serialize solve report: {e}")))?;
    fs::write(dir.join("report.toml"), toml_text)?;
    Ok(())
}

fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let mut rates = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let r: f64 = part
            .parse()
            .map_err(|_| Error::invalid(format!("bad sweep rate {part:?}")))?;
        if !r.is_finite() || !(0.0..1.0).contains(&r) {
            return Err(Error::invalid(format!(
                "sweep rate {r} outside [0, 1)"
            )));
        }
        rates.push(r);
    }
    if rates.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    Ok(rates)
}

fn cmd_outcomes(args: OutcomesArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let solver_cfg = solver_section(&cfg, &args.config)?;
    let section = cfg.outcomes.unwrap_or_default();

    let rates = match &args.sweep {
        Some(text) => parse_sweep(text)?,
        None => match section.rates {
            Some(rates) if !rates.is_empty() => rates,
            _ => DEFAULT_SWEEP.to_vec(),
        },
    };

    let method = match section.method.as_deref() {
        None | Some("integration") => OutcomeMethod::FullIntegration,
        Some("monte_carlo") => OutcomeMethod::MonteCarlo {
            samples: section.samples.unwrap_or(1_000_000),
            seed: cfg.seed.unwrap_or(0),
        },
        Some(other) => {
            return Err(Error::invalid(format!(
                "unknown outcomes method {other:?}; use \"integration\" or \"monte_carlo\""
            )))
        }
    };

    let rows = match method {
        OutcomeMethod::FullIntegration => sweep(&rates, &solver_cfg),
        mc => sweep_simulated(&rates, &solver_cfg, mc),
    };

    let mut csv = String::from(OUTCOMES_HEADER);
    csv.push('\n');
    for row in &rows {
        if let Some(failure) = &row.failure {
            eprintln!("warning: r = {}: {failure}; row written as nan", row.r);
        }
        let _ = writeln!(csv, "{}", format_row(row, args.round3));
    }
    fs::write(&args.out, csv)?;
    eprintln!(
        "{} sweep row(s) written to {}",
        rows.len(),
        args.out.display()
    );
    Ok(())
}

/// Sweep evaluated by simulation rather than integration; keeps the same
/// row-level failure semantics as `sweep`.
fn sweep_simulated(rates: &[f64], template: &SolverConfig, method: OutcomeMethod) -> Vec<SweepRow> {
    rates
        .iter()
        .map(|&r| {
            let mut cfg = template.clone();
            cfg.r = r;
            let outcome = solve(&cfg).and_then(|report| {
                let stats = evaluate_outcomes(
                    &OutcomeConfig::from_solve(&report, &cfg).with_method(method),
                )?;
                Ok((report.bstar, stats))
            });
            match outcome {
                Ok((bstar, stats)) => SweepRow {
                    r,
                    bstar: Some(bstar),
                    stats: Some(stats),
                    failure: None,
                },
                Err(err) => SweepRow {
                    r,
                    bstar: None,
                    stats: None,
                    failure: Some(err.to_string()),
                },
            }
        })
        .collect()
}

fn format_row(row: &SweepRow, round3: bool) -> String {
    let fmt = |x: f64| -> String {
        if round3 {
            format!("{x:.3}")
        } else {
            format!("{x}")
        }
    };
    match &row.stats {
        Some(s) => format!(
            "{},{},{},{},{},{},{},{},{}",
            row.r,
            fmt(s.expected_revenue),
            fmt(s.efficiency),
            fmt(s.win_rate_discounted),
            fmt(s.win_rate_other),
            fmt(s.surplus_discounted),
            fmt(s.surplus_other),
            fmt(s.cost_discounted),
            fmt(s.cost_other)
        ),
        None => format!("{},nan,nan,nan,nan,nan,nan,nan,nan", row.r),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    if args.trials == 0 {
        return Err(Error::invalid("trial count must be positive"));
    }
    match args.theorem {
        Theorem::Additive => print_equivalence(run_additive_trials(args.trials, args.seed)?),
        Theorem::Multiplicative => {
            print_equivalence(run_multiplicative_trials(args.trials, args.seed)?)
        }
        Theorem::EqualRate => {
            let cfg = load_optional_config(args.config.as_ref())?;
            let solver_cfg = match cfg.solver {
                Some(sc) => sc,
                None => default_equal_rate_config()?,
            };
            let section = cfg.outcomes.unwrap_or_default();
            let rates = section
                .rates
                .filter(|r| !r.is_empty())
                .unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
            let rows = equal_rate_sweep(&rates, &solver_cfg);
            let (text, passed) = equal_rate_report(&rows);
            print!("{text}");
            if !passed {
                return Err(Error::Infeasible(
                    "equal-rate check failed; see report above".into(),
                ));
            }
        }
    }
    Ok(())
}

fn print_equivalence(report: EquivalenceReport) {
    print!("{}", report.summary());
    if !report.passed {
        eprintln!("warning: equivalence deviation exceeded tolerance");
    }
}

/// A small, fast configuration for the default equal-rate replay: four
/// uniform bidders on [0, 1] against a discounted bidder on the same support.
fn default_equal_rate_config() -> Result<SolverConfig> {
    let mut cfg = SolverConfig::new(
        0.0,
        ValuationDistribution::uniform(0.0, 1.0)?,
        ValuationDistribution::uniform(0.0, 1.0)?,
    );
    cfg.steps = 2_000;
    Ok(cfg)
}

fn equal_rate_report(rows: &[EqualRateRow]) -> (String, bool) {
    let mut out = String::from("check=equal_rate\n");
    let mut passed = true;
    for row in rows {
        match (row.utility_at_r, row.utility_at_equivalent, row.loss) {
            (Some(at_r), Some(at_eq), Some(loss)) => {
                let _ = writeln!(
                    out,
                    "r={} equivalent_rate={:.6} utility_at_r={:.6} utility_at_equivalent={:.6} loss={:.3e}",
                    row.r, row.equivalent_rate, at_r, at_eq, loss
                );
                if loss < 0.0 {
                    passed = false;
                }
            }
            _ => {
                let failure = row.failure.as_deref().unwrap_or("unknown failure");
                let _ = writeln!(out, "r={} failed: {failure}", row.r);
                passed = false;
            }
        }
    }
    if rows.is_empty() {
        passed = false;
    }
    let _ = writeln!(out, "pass={passed}");
    (out, passed)
}

fn cmd_plotdata(args: PlotdataArgs) -> Result<()> {
    let report_path = args.solve.join("report.toml");
    let report_text = fs::read_to_string(&report_path).map_err(|e| {
        Error::invalid(format!("cannot read {}: {e}", report_path.display()))
    })?;
    let artifact: SolveArtifact = toml::from_str(&report_text)
        .map_err(|e| Error::invalid(format!("bad solve report {}: {e}", report_path.display())))?;

    let csv_path = args.solve.join("bid_functions.csv");
    let csv_text = fs::read_to_string(&csv_path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", csv_path.display())))?;
    let mut lines = csv_text.lines();
    match lines.next() {
        Some("role,valuation,bid") => {}
        _ => {
            return Err(Error::invalid(format!(
                "{} is not a bid-function table",
                csv_path.display()
            )))
        }
    }

    let mut out = String::from("role,r,valuation,bid\n");
    let mut rows = 0usize;
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (role, v, b) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(role), Some(v), Some(b), None) => (role, v, b),
            _ => {
                return Err(Error::invalid(format!(
                    "{}: malformed line {}",
                    csv_path.display(),
                    idx + 2
                )))
            }
        };
        if role != "discounted" && role != "undiscounted" {
            return Err(Error::invalid(format!(
                "{}: unknown role {role:?} on line {}",
                csv_path.display(),
                idx + 2
            )));
        }
        let _ = writeln!(out, "{role},{},{v},{b}", artifact.r);
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::invalid(format!(
            "{} holds no bid points",
            csv_path.display()
        )));
    }
    fs::write(&args.out, out)?;
    eprintln!("{rows} plot row(s) written to {}", args.out.display());
    Ok(())
}
