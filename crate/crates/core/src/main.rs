use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ivi::error::Error;
use ivi::harness::config::{parse_kv, ExperimentConfig};
use ivi::harness::{
    builtin_case, reference_value, run_convergence, run_paths, run_smile, write_csv, RunReport,
    CASE_IDS,
};

const THREADS_ENV: &str = "IVI_THREADS";

#[derive(Parser)]
#[command(
    name = "ivi",
    version,
    about = "Integrated-variance Monte Carlo experiments for the Heston model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the built-in parameter cases.
    Cases,
    /// Error against analytical references over a range of step counts.
    Converge(ExperimentArgs),
    /// Implied-volatility slices from simulated call prices.
    Smile(ExperimentArgs),
    /// Analytical reference values only.
    Reference(ExperimentArgs),
    /// Estimates over a range of path counts at a fixed step count.
    Paths(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// File of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Case id (1, 2, 3) or `custom`.
    #[arg(long)]
    case: Option<String>,
    /// Comma-separated schemes: ivi, ivi-simple, qe, euler.
    #[arg(long)]
    schemes: Option<String>,
    /// Comma-separated quantities, e.g. `variance_swap,laplace(1),call(0.8),iv_slice(0.8:1:1.2)`.
    #[arg(long)]
    quantities: Option<String>,
    /// Step counts, e.g. `1,2,4` or `1..100`.
    #[arg(long)]
    steps: Option<String>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<String>,
    /// Path counts of the `paths` sweep.
    #[arg(long)]
    path_counts: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    maturity: Option<String>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full path counts of the original study (10x the default).
    #[arg(long)]
    paper_scale: bool,
    /// Extra `key=value` settings such as `rho=-0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn pairs(&self) -> Result<BTreeMap<String, String>, Error> {
        let mut m = match &self.config {
            Some(path) => parse_kv(
                &std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
            )?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("case", &self.case),
            ("schemes", &self.schemes),
            ("quantities", &self.quantities),
            ("steps", &self.steps),
            ("paths", &self.paths),
            ("path_counts", &self.path_counts),
            ("seed", &self.seed),
            ("maturity", &self.maturity),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        }
        if let Some(out) = &self.out {
            m.insert("out".into(), out.display().to_string());
        }
        if self.paper_scale {
            m.insert("paper_scale".into(), "true".into());
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            m.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(m)
    }

    fn config(&self, defaults: &[(&str, &str)]) -> Result<ExperimentConfig, Error> {
        let defaults = defaults
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        ExperimentConfig::from_pairs(&defaults, &self.pairs()?)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::UnknownCase(_)
        | Error::InvalidParameter { .. }
        | Error::Io(_) => 1,
        _ => 2,
    }
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(s) = std::env::var(THREADS_ENV) {
        let n: usize = s.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{s}'"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn output(cfg: &ExperimentConfig) -> Result<Box<dyn Write>, Error> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(cfg: &ExperimentConfig, report: &RunReport) -> Result<u8, Error> {
    let mut out = output(cfg)?;
    write_csv(&mut out, cfg.seed, &report.records, &report.flags)?;
    out.flush()?;
    for f in &report.flags {
        eprintln!(
            "warning: {} / {} / n={}: {}",
            f.scheme, f.quantity, f.n_steps, f.message
        );
    }
    Ok(if report.reference_failed { 2 } else { 0 })
}

fn print_cases() -> Result<u8, Error> {
    let mut out = io::stdout().lock();
    writeln!(out, "case,v0,a,b,c,rho,s0,feller_gap")?;
    for id in CASE_IDS {
        let p = builtin_case(id)?;
        writeln!(
            out,
            "{id},{},{},{},{},{},{},{}",
            p.cir.v0,
            p.cir.a,
            p.cir.b,
            p.cir.c,
            p.rho,
            p.s0,
            p.cir.feller_gap()
        )?;
    }
    Ok(0)
}

fn print_references(cfg: &ExperimentConfig) -> Result<u8, Error> {
    let p = cfg.params();
    let mut out = output(cfg)?;
    writeln!(out, "case,quantity,maturity,reference")?;
    let mut code = 0;
    for q in &cfg.quantities {
        match reference_value(q, &p, cfg.maturity) {
            Ok(values) => {
                for v in values {
                    writeln!(out, "{},{},{},{}", cfg.case.label(), q, cfg.maturity, v)?;
                }
            }
            Err(e) => {
                eprintln!("error: reference for {q} failed: {e}");
                code = 2;
            }
        }
    }
    out.flush()?;
    Ok(code)
}

fn run(cli: Cli) -> Result<u8, Error> {
    configure_threads()?;
    match cli.command {
        Command::Cases => print_cases(),
        Command::Converge(args) => {
            let cfg = args.config(&[("quantities", "variance_swap,vol_swap,laplace(1)")])?;
            emit(&cfg, &run_convergence(&cfg)?)
        }
        Command::Smile(args) => {
            let cfg = args.config(&[("quantities", "iv_slice(0.8:1:1.2)"), ("steps", "1,15")])?;
            emit(&cfg, &run_smile(&cfg)?)
        }
        Command::Reference(args) => {
            let cfg = args.config(&[(
                "quantities",
                "variance_swap,vol_swap,laplace(1),call(0.8),call(1),call(1.2)",
            )])?;
            print_references(&cfg)
        }
        Command::Paths(args) => {
            let cfg = args.config(&[
                ("quantities", "call(0.8),call(1),call(1.2)"),
                ("steps", "50"),
            ])?;
            emit(&cfg, &run_paths(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
