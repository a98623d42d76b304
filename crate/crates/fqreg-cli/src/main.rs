//! Command-line surface: the significance test on curve data from CSV,
//! the Monte Carlo size/power study, and the spectra analysis.
//!
//! Exit codes: 0 on success, 2 on computation or degenerate-input
//! errors, 64 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fqreg::{
    choose_p_by_variance, load_spectra_csv, run_power_study, run_tecator_analysis, run_test,
    Curve, Design, FunctionalDataset, Grid, PSelection, PowerRow, SimScenario, TestResult,
};

const EXIT_COMPUTATION: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "fqreg",
    version,
    about = "Significance test for the quadratic term in scalar-on-function regression"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Test curves from a CSV file (rows: m values then a final y column;
    /// the grid is uniform on [0, 1]).
    Test(TestArgs),
    /// Monte Carlo size/power study.
    Simulate(SimulateArgs),
    /// Significance analysis of a spectra/fat CSV file.
    Tecator(TecatorArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV with one row per observation.
    #[arg(long)]
    curves: PathBuf,
    /// Number of principal components to keep.
    #[arg(long)]
    p: Option<usize>,
    /// Keep the fewest components explaining this variance fraction.
    #[arg(long, conflicts_with = "p")]
    var_threshold: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Predictor/noise design.
    #[arg(long, value_enum)]
    design: DesignArg,
    /// Curves per replication.
    #[arg(long = "N")]
    n_curves: usize,
    /// Quadratic strength (0 simulates the null).
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// Components kept by the test.
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Nominal level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Stream seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid resolution for simulated curves.
    #[arg(long, default_value_t = 101)]
    grid_size: usize,
    /// Worker threads (defaults to FQREG_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignArg {
    Gaussian,
    ChebyshevT5,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Gaussian => Design::Gaussian,
            DesignArg::ChebyshevT5 => Design::ChebyshevT5,
        }
    }
}

#[derive(Args)]
struct TecatorArgs {
    /// Spectra CSV (wavelength-named columns plus a final fat column).
    #[arg(long)]
    file: PathBuf,
    /// Component counts to test, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    p: Vec<usize>,
    /// Analysis grid resolution.
    #[arg(long, default_value_t = 101)]
    grid_size: usize,
}

/// Serializable summary of one test run; JSON output round-trips through
/// this struct byte for byte.
#[derive(Serialize, Deserialize)]
struct TestReport {
    u_stat: f64,
    dof: usize,
    p_value: f64,
    p_value_underflowed: bool,
    p: usize,
    variance_explained: f64,
    eigenvalues: Vec<f64>,
    quad_coefficients: Vec<f64>,
    quad_pairs: Vec<(usize, usize)>,
    b_hat: Vec<f64>,
    mu_hat: f64,
}

impl TestReport {
    fn from_result(result: &TestResult) -> Self {
        TestReport {
            u_stat: result.u_stat,
            dof: result.dof,
            p_value: result.p_value,
            p_value_underflowed: result.p_value_underflowed,
            p: result.basis.p,
            variance_explained: result.basis.variance_explained(),
            eigenvalues: result.basis.eigenvalues.clone(),
            quad_coefficients: result.fit.quad_coefficients(),
            quad_pairs: result
                .fit
                .vech
                .pairs()
                .iter()
                .map(|&(i, j)| (i + 1, j + 1))
                .collect(),
            b_hat: result.fit.b_hat.clone(),
            mu_hat: result.fit.mu_hat,
        }
    }

    fn print_text(&self) {
        println!("U_N                = {:.6}", self.u_stat);
        println!("dof (r)            = {}", self.dof);
        if self.p_value_underflowed {
            println!("p-value            = 0 (underflow)");
        } else {
            println!("p-value            = {:.6} ({:.2}%)", self.p_value, 100.0 * self.p_value);
        }
        println!("components (p)     = {}", self.p);
        println!("variance explained = {:.4}", self.variance_explained);
        let eig: Vec<String> = self.eigenvalues.iter().map(|l| format!("{l:.6}")).collect();
        println!("eigenvalues        = [{}]", eig.join(", "));
        println!("mu_hat             = {:.6}", self.mu_hat);
        println!("B_hat:");
        for (i, b) in self.b_hat.iter().enumerate() {
            println!("  b[{}] = {b:.6}", i + 1);
        }
        println!("A_hat (kernel coordinates):");
        for (&(i, j), a) in self.quad_pairs.iter().zip(&self.quad_coefficients) {
            println!("  a[{i},{j}] = {a:.6}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Computation(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_COMPUTATION)
        }
    }
}

enum CliError {
    Usage(String),
    Computation(fqreg::Error),
}

impl From<fqreg::Error> for CliError {
    fn from(e: fqreg::Error) -> Self {
        CliError::Computation(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Test(args) => cmd_test(args, cli.output),
        Command::Simulate(args) => cmd_simulate(args, cli.output),
        Command::Tecator(args) => cmd_tecator(args, cli.output),
    }
}

fn cmd_test(args: TestArgs, output: OutputFormat) -> Result<(), CliError> {
    let selection = match (args.p, args.var_threshold) {
        (Some(0), _) => return Err(CliError::Usage("--p must be at least 1".into())),
        (Some(p), None) => PSelection::Fixed(p),
        (None, Some(th)) if th > 0.0 && th <= 1.0 => PSelection::VarianceThreshold(th),
        (None, Some(th)) => {
            return Err(CliError::Usage(format!(
                "--var-threshold must lie in (0, 1], got {th}"
            )))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --p or --var-threshold is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let data = load_curves_csv(&args.curves)?;
    let result = run_test(&data, selection)?;
    let report = TestReport::from_result(&result);
    match output {
        OutputFormat::Json => println!("{}", serde_json::to_string(&report).expect("serializable")),
        OutputFormat::Text => report.print_text(),
    }
    Ok(())
}

/// Plain numeric CSV: every row is m curve values followed by the
/// response; no header.
fn load_curves_csv(path: &PathBuf) -> Result<FunctionalDataset, fqreg::Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => fqreg::Error::Io(io),
            kind => fqreg::Error::Parse {
                line: 0,
                message: format!("{kind:?}"),
            },
        })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| fqreg::Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: format!("{:?}", e.into_kind()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(record.len());
        for (idx, cell) in record.iter().enumerate() {
            row.push(cell.parse::<f64>().map_err(|_| fqreg::Error::Parse {
                line,
                message: format!("column {} value '{cell}' is not numeric", idx + 1),
            })?);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(fqreg::Error::Parse {
                    line,
                    message: format!("expected {} columns, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if cols < 5 {
        return Err(fqreg::Error::Parse {
            line: 1,
            message: format!(
                "need at least 4 curve columns plus a response column, got {cols}"
            ),
        });
    }
    let m = cols - 1;
    let grid = Grid::uniform(m)?;
    let mut curves = Vec::with_capacity(rows.len());
    let mut responses = Vec::with_capacity(rows.len());
    for mut row in rows {
        responses.push(row.pop().expect("row is nonempty"));
        curves.push(Curve::new(grid.clone(), row)?);
    }
    FunctionalDataset::new(curves, responses)
}

fn cmd_simulate(args: SimulateArgs, output: OutputFormat) -> Result<(), CliError> {
    let scenario = SimScenario {
        n_curves: args.n_curves,
        grid_size: args.grid_size,
        c: args.c,
        p: args.p,
        alpha: args.alpha,
        iterations: args.iters,
        design: args.design.into(),
        seed: args.seed,
    };
    let threads = match args.threads {
        Some(t) => Some(t),
        None => match std::env::var("FQREG_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                CliError::Usage(format!("FQREG_THREADS value '{v}' is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }

    let row = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_power_study(&scenario))?
        }
        None => run_power_study(&scenario)?,
    };

    let json = serde_json::to_string(&row).expect("serializable");
    match output {
        OutputFormat::Json => println!("{json}"),
        OutputFormat::Text => {
            print_power_table(&row);
            println!("{json}");
        }
    }
    Ok(())
}

fn print_power_table(row: &PowerRow) {
    let s = &row.scenario;
    println!(
        "{:>12} {:>6} {:>6} {:>4} {:>6} {:>7} {:>12} {:>10}",
        "design", "N", "c", "p", "alpha", "iters", "rejection(%)", "mc_stderr"
    );
    println!(
        "{:>12} {:>6} {:>6} {:>4} {:>6} {:>7} {:>12.2} {:>10.4}",
        s.design.to_string(),
        s.n_curves,
        s.c,
        s.p,
        s.alpha,
        s.iterations,
        100.0 * row.rejection_rate,
        row.mc_stderr
    );
}

fn cmd_tecator(args: TecatorArgs, output: OutputFormat) -> Result<(), CliError> {
    if args.p.is_empty() || args.p.contains(&0) {
        return Err(CliError::Usage("--p needs positive component counts".into()));
    }
    let table = load_spectra_csv(&args.file)?;
    let results = run_tecator_analysis(&table, &args.p, args.grid_size)?;
    let reports: Vec<TestReport> = results.iter().map(TestReport::from_result).collect();
    let suggested = choose_p_by_variance(&results[0].basis.spectrum, 0.85)?;

    match output {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct TecatorReport<'a> {
                samples: usize,
                channels: usize,
                suggested_p_85pct: usize,
                results: &'a [TestReport],
            }
            let report = TecatorReport {
                samples: table.len(),
                channels: table.channels(),
                suggested_p_85pct: suggested,
                results: &reports,
            };
            println!("{}", serde_json::to_string(&report).expect("serializable"));
        }
        OutputFormat::Text => {
            println!(
                "{} samples, {} channels; 85% variance rule keeps p = {}",
                table.len(),
                table.channels(),
                suggested
            );
            let header: Vec<String> = reports.iter().map(|r| format!("{:>8}", r.p)).collect();
            println!("p        {}", header.join(" "));
            let cells: Vec<String> = reports
                .iter()
                .map(|r| format!("{:>8.2}", 100.0 * r.p_value))
                .collect();
            println!("p-value  {}", cells.join(" "));
            for r in &reports {
                println!(
                    "p={}: U_N = {:.4}, dof = {}, p-value = {:.2}%, variance explained = {:.4}",
                    r.p,
                    r.u_stat,
                    r.dof,
                    100.0 * r.p_value,
                    r.variance_explained
                );
            }
        }
    }
    Ok(())
}
