use clap::{ArgGroup, Args, Parser, Subcommand};
use rayon::prelude::*;
use shuffle_dp::amplification::{
    calibrate_epsilon, calibrate_epsilon0, delta_mixture_bound, BennettBound, Calibration, CalibrationOptions,
    HoeffdingBound, Mechanism, Method, METHOD_NAMES,
};
use shuffle_dp::blanket::profile_krr;
use shuffle_dp::oracle::{exact_mixture_delta_krr, exact_shuffled_divergence_krr, DIVERGENCE_MAX_N};
use shuffle_dp::sim::{mse_experiment, InputDistribution};
use shuffle_dp::Error;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const SWEEP_HEADER: &str = "n,epsilon0,epsilon,delta,method,gamma,certified_by";
const ORACLE_HEADER: &str = "n,k,eps0,eps,exact,mixture_exact,hoeffding,bennett";
const SIMULATE_HEADER: &str = "n,eps,delta,trials,empirical_mse,empirical_bias,theoretical_bound,seed";

/// Slack allowed when checking `exact ≤ mixture ≤ bound`.
const SANDWICH_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "shuffle-dp",
    version,
    about = "Privacy amplification by shuffling: calibration, oracle checks and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the one unknown of (ε₀, ε) and print a single CSV row.
    Calibrate(CalibrateArgs),
    /// Calibrate every (method, n) cell of a grid.
    Sweep(SweepArgs),
    /// Check exact ≤ mixture ≤ bound for shuffled randomized response on small n.
    Oracle(OracleArgs),
    /// Monte Carlo MSE and bias of the summation protocol.
    Simulate(SimulateArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("unknown").required(true).args(["eps0", "eps"])))]
struct Budget {
    /// Local budget; the central ε is solved for.
    #[arg(long)]
    eps0: Option<f64>,
    /// Central target; the largest local ε₀ is solved for.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_parser = parse_method_name)]
    method: String,
    /// Optional check that the method's mechanism is this one (generic, rr or laplace).
    #[arg(long)]
    mechanism: Option<String>,
    /// Alphabet size for the randomized response methods.
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[command(flatten)]
    budget: Budget,
    #[arg(long, value_parser = parse_count)]
    n: u64,
    #[arg(long)]
    delta: f64,
    /// Fail instead of falling back to ε = ε₀.
    #[arg(long)]
    no_clamp: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', value_parser = parse_method_name, default_values_t = METHOD_NAMES.map(String::from))]
    methods: Vec<String>,
    /// Comma-separated party counts; `1e4` notation is accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_count, required = true)]
    n_grid: Vec<u64>,
    #[command(flatten)]
    budget: Budget,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 8)]
    n_max: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    k_set: Vec<u32>,
    /// Comma-separated local budgets; `ln3` style values are accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_real, default_value = "0.5,1,2")]
    eps0_grid: Vec<f64>,
    /// Absolute central budgets; overrides `--eps-fractions`.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    eps_grid: Option<Vec<f64>>,
    /// Central budgets as fractions of each ε₀.
    #[arg(long, value_delimiter = ',', value_parser = parse_real, default_value = "0,0.1,0.3,0.7,1")]
    eps_fractions: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_count)]
    n: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// uniform, grid, two-point, constant0 or constant:<v>.
    #[arg(long, default_value = "uniform")]
    dist: InputDistribution,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_method_name(s: &str) -> Result<String, String> {
    if METHOD_NAMES.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("expected one of {}", METHOD_NAMES.join(", ")))
    }
}

/// A positive integer, written plainly or as `1e5`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return if v >= 1 { Ok(v) } else { Err("must be >= 1".into()) };
    }
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if !((1.0..=9.007_199_254_740_992e15).contains(&v) && v.fract() == 0.0) {
        return Err(format!("expected a positive integer, got {s}"));
    }
    Ok(v as u64)
}

/// A real number, or `ln<x>` for its natural logarithm.
fn parse_real(s: &str) -> Result<f64, String> {
    let parsed = match s.strip_prefix("ln") {
        Some(arg) => arg.parse::<f64>().map(f64::ln),
        None => s.parse::<f64>(),
    };
    parsed.map_err(|_| format!("not a number: {s}"))
}

fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

enum Failure {
    Input(String),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(format!("i/o error: {e}"))
    }
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn mechanism_label(m: Mechanism) -> &'static str {
    match m {
        Mechanism::Generic => "generic",
        Mechanism::RandomizedResponse { .. } => "rr",
        Mechanism::Laplace => "laplace",
    }
}

struct SweepRow {
    n: u64,
    epsilon0: f64,
    epsilon: f64,
    delta: f64,
    method: String,
    gamma: f64,
    certified_by: &'static str,
}

impl SweepRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            fmt_real(self.epsilon0),
            fmt_real(self.epsilon),
            fmt_real(self.delta),
            self.method,
            fmt_real(self.gamma),
            self.certified_by
        )
    }
}

fn calibrate_cell(
    method: &Method,
    budget: &Budget,
    n: u64,
    delta: f64,
    opts: &CalibrationOptions,
) -> Result<SweepRow, Error> {
    let (eps0, eps, cal): (f64, f64, Calibration) = match (budget.eps0, budget.eps) {
        (Some(eps0), _) => {
            let c = calibrate_epsilon(method, eps0, n, delta, opts)?;
            (eps0, c.value, c)
        }
        (None, Some(eps)) => {
            let c = calibrate_epsilon0(method, n, delta, eps, opts)?;
            (c.value, eps, c)
        }
        (None, None) => unreachable!("clap requires one of --eps0, --eps"),
    };
    Ok(SweepRow {
        n,
        epsilon0: eps0,
        epsilon: eps,
        delta,
        method: method.to_string(),
        gamma: method.mechanism.gamma(eps0),
        certified_by: cal.certified_by.as_str(),
    })
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), Failure> {
    let method = Method::from_name(&args.method, args.k)?;
    if let Some(mech) = &args.mechanism {
        let have = mechanism_label(method.mechanism);
        if mech != have {
            return Err(Failure::Input(format!(
                "method {} uses the {have} mechanism, not {mech}",
                args.method
            )));
        }
    }
    let opts = CalibrationOptions {
        allow_clamp: !args.no_clamp,
        ..Default::default()
    };
    let row = calibrate_cell(&method, &args.budget, args.n, args.delta, &opts)?;
    let mut out = open_output(&None)?;
    writeln!(out, "{SWEEP_HEADER}")?;
    writeln!(out, "{}", row.csv())?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let methods = args
        .methods
        .iter()
        .map(|name| Method::from_name(name, args.k))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(Method, u64)> = methods
        .iter()
        .flat_map(|m| args.n_grid.iter().map(move |&n| (*m, n)))
        .collect();
    let opts = CalibrationOptions::default();
    let mut rows = cells
        .par_iter()
        .map(
            |&(method, n)| match calibrate_cell(&method, &args.budget, n, args.delta, &opts) {
                Ok(row) => Ok(row),
                Err(Error::Infeasible(_) | Error::Validity(_)) => {
                    let (eps0, eps) = match (args.budget.eps0, args.budget.eps) {
                        (Some(e0), _) => (e0, f64::INFINITY),
                        (None, Some(e)) => (f64::INFINITY, e),
                        (None, None) => unreachable!("clap requires one of --eps0, --eps"),
                    };
                    let gamma = if eps0.is_finite() {
                        method.mechanism.gamma(eps0)
                    } else {
                        f64::NAN
                    };
                    Ok(SweepRow {
                        n,
                        epsilon0: eps0,
                        epsilon: eps,
                        delta: args.delta,
                        method: method.to_string(),
                        gamma,
                        certified_by: "infeasible",
                    })
                }
                Err(e) => Err(e),
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.n.cmp(&b.n)));
    let mut out = open_output(&args.out)?;
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in &rows {
        writeln!(out, "{}", row.csv())?;
    }
    out.flush()?;
    Ok(())
}

struct OracleCell {
    n: u64,
    k: u32,
    eps0: f64,
    eps: f64,
    exact: f64,
    mixture: f64,
    hoeffding: f64,
    bennett: f64,
}

impl OracleCell {
    fn holds(&self) -> bool {
        self.exact <= self.mixture + SANDWICH_TOL
            && self.mixture <= self.hoeffding + SANDWICH_TOL
            && self.mixture <= self.bennett + SANDWICH_TOL
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            fmt_real(self.eps0),
            fmt_real(self.eps),
            fmt_real(self.exact),
            fmt_real(self.mixture),
            fmt_real(self.hoeffding),
            fmt_real(self.bennett)
        )
    }
}

fn oracle_cell(n: u64, k: u32, eps0: f64, eps: f64) -> Result<OracleCell, Error> {
    let exact = exact_shuffled_divergence_krr(n, k, eps0, eps)?;
    let p = profile_krr(k, eps0, eps)?;
    // With ε = 0 there is no negative drift and the bounds certify nothing.
    let (mixture, hoeffding, bennett) = if p.a > 0.0 {
        (
            exact_mixture_delta_krr(n, k, eps0, eps)?,
            delta_mixture_bound(n, p.gamma, &HoeffdingBound::from_profile(&p)?)?,
            delta_mixture_bound(n, p.gamma, &BennettBound::from_profile(&p)?)?,
        )
    } else {
        (1.0, 1.0, 1.0)
    };
    Ok(OracleCell {
        n,
        k,
        eps0,
        eps,
        exact,
        mixture,
        hoeffding,
        bennett,
    })
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    if args.n_max > DIVERGENCE_MAX_N {
        return Err(Failure::Input(format!(
            "--n-max {} exceeds the oracle cap {DIVERGENCE_MAX_N}",
            args.n_max
        )));
    }
    let mut cells = Vec::new();
    for n in 1..=args.n_max {
        for &k in &args.k_set {
            for &eps0 in &args.eps0_grid {
                let epsilons: Vec<f64> = match &args.eps_grid {
                    Some(grid) => grid.clone(),
                    None => args.eps_fractions.iter().map(|f| f * eps0).collect(),
                };
                for eps in epsilons {
                    cells.push((n, k, eps0, eps));
                }
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|&(n, k, eps0, eps)| oracle_cell(n, k, eps0, eps))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = open_output(&args.out)?;
    writeln!(out, "{ORACLE_HEADER}")?;
    for row in &rows {
        writeln!(out, "{}", row.csv())?;
    }
    out.flush()?;
    let bad: Vec<String> = rows.iter().filter(|r| !r.holds()).map(OracleCell::csv).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "sandwich violated in {} cells:\n{}",
            bad.len(),
            bad.join("\n")
        )))
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let r = mse_experiment(args.n, args.dist, args.trials, args.eps, args.delta, args.seed)?;
    let mut out = open_output(&None)?;
    writeln!(out, "{SIMULATE_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        args.n,
        fmt_real(args.eps),
        fmt_real(args.delta),
        r.trials,
        fmt_real(r.empirical_mse),
        fmt_real(r.empirical_bias),
        fmt_real(r.theoretical_bound),
        r.seed
    )?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
