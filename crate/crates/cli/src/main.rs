use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdqkit_core::io::{convert_document, read_document, write_document, ConvertOptions, Format};
use hdqkit_core::suite::{bench_csv, bench_row, run_suite, BenchTarget, RunConfig, SuiteName};

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "hdqkit", version, about = "Validation suites, benchmarks and file conversion for Hilbert-algebra star products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a validation suite: hilbert, moyal, matrix, symmetry, jgroup, clifford or all.
    Validate {
        suite: String,
        #[command(flatten)]
        opts: ConfigArgs,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time a kernel at several sizes: moyal_fast, intertwiner or quantize.
    Bench {
        target: String,
        /// Comma-separated grid sizes (default depends on the target).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[command(flatten)]
        opts: ConfigArgs,
        /// Write the CSV table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert between HDQ1, HDQM1, HDQS1 and CSV files.
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Target format; defaults to the input's own format.
        #[arg(long)]
        to: Option<String>,
        /// Half-width of the grid when synthesizing a matrix symbol (default 6√θ).
        #[arg(long = "half-width")]
        half_width: Option<f64>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat JSON config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        if let Some(v) = self.trunc {
            cfg.trunc = v;
        }
        if self.tol.is_some() {
            cfg.tol = self.tol;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn validate(suite: &str, opts: &ConfigArgs, report: Option<&Path>) -> Result<u8, (u8, String)> {
    let name: SuiteName = suite.parse().map_err(|e: hdqkit_core::HdqError| (USAGE, e.to_string()))?;
    let cfg = opts.resolve().map_err(|e| (USAGE, e))?;
    let r = run_suite(name, &cfg).map_err(|e| (FAIL, e.to_string()))?;
    for c in &r.checks {
        eprintln!("{} {} ({:.3e} <= {:.0e})", if c.pass { "pass" } else { "FAIL" }, c.name, c.residual, c.tolerance);
    }
    let json = serde_json::to_string_pretty(&r).expect("report serializes");
    emit(&json, report).map_err(|e| (USAGE, e))?;
    Ok(if r.pass { PASS } else { FAIL })
}

fn bench(target: &str, sizes: Option<&[usize]>, opts: &ConfigArgs, out: Option<&Path>) -> Result<u8, (u8, String)> {
    let target: BenchTarget = target.parse().map_err(|e: hdqkit_core::HdqError| (USAGE, e.to_string()))?;
    let cfg = opts.resolve().map_err(|e| (USAGE, e))?;
    let sizes = sizes.unwrap_or(target.default_sizes());
    let rows = sizes.iter().map(|&s| bench_row(target, s, &cfg)).collect::<Result<Vec<_>, _>>().map_err(|e| (FAIL, e.to_string()))?;
    emit(bench_csv(&rows).trim_end(), out).map_err(|e| (USAGE, e))?;
    Ok(PASS)
}

fn convert(input: &Path, output: &Path, to: Option<&str>, half_width: Option<f64>, opts: &ConfigArgs) -> Result<u8, (u8, String)> {
    let cfg = opts.resolve().map_err(|e| (USAGE, e))?;
    let text = fs::read_to_string(input).map_err(|e| (USAGE, format!("{}: {e}", input.display())))?;
    let doc = read_document(&text).map_err(|e| (USAGE, format!("{}: {e}", input.display())))?;
    let target = match to {
        Some(t) => t.parse::<Format>().map_err(|e| (USAGE, e.to_string()))?,
        None => doc.native_format(),
    };
    let opts = ConvertOptions { m: cfg.grid, l: half_width, trunc: cfg.trunc };
    let doc = convert_document(doc, target, opts).map_err(|e| (USAGE, e.to_string()))?;
    let text = write_document(&doc, target).map_err(|e| (USAGE, e.to_string()))?;
    fs::write(output, text).map_err(|e| (USAGE, format!("{}: {e}", output.display())))?;
    Ok(PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { suite, opts, report } => validate(suite, opts, report.as_deref()),
        Command::Bench { target, sizes, opts, out } => bench(target, sizes.as_deref(), opts, out.as_deref()),
        Command::Convert { input, output, to, half_width, opts } => convert(input, output, to.as_deref(), *half_width, opts),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("hdqkit: {msg}");
            ExitCode::from(code)
        }
    }
}
