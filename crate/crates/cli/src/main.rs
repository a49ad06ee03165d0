//! Command-line harness: workload execution, data conversion, self tests, and
//! report emission.
//!
//! Exit codes: 0 success, 1 failed self test, 2 configuration error,
//! 3 I/O error, 4 kernel or numeric error.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hrfna_cli::config::{threads_from_env, RunConfig};
use hrfna_cli::report::{render_csv, render_summary, write_report, RunReport};
use hrfna_cli::run::WorkloadRows;
use hrfna_cli::{jsonl, run};

#[derive(Parser)]
#[command(name = "hrfna", version, about = "Hybrid residue-floating arithmetic benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed for generated inputs.
    #[arg(long)]
    seed: Option<u64>,
    /// Report output path (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Long mode: 10^6-step integration and 64k dot products.
    #[arg(long)]
    long: bool,
    /// Baselines to run, comma separated: fp32, fp64, bfp.
    #[arg(long, value_delimiter = ',')]
    baselines: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded dot-product accuracy runs, or one run over explicit vectors.
    Dotprod {
        #[command(flatten)]
        common: Common,
        /// JSONL vector file for the left operand.
        #[arg(long, requires = "ys")]
        xs: Option<PathBuf>,
        /// JSONL vector file for the right operand.
        #[arg(long, requires = "xs")]
        ys: Option<PathBuf>,
    },
    /// Seeded square matrix products, or one product of explicit matrices.
    Matmul {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
    },
    /// Fixed-step ODE integration against the high-precision reference.
    Rk4 {
        #[command(flatten)]
        common: Common,
    },
    /// Converts JSONL value records to hybrid records or back.
    Convert {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        direction: Direction,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the reduced-scale invariant suites.
    Selftest {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// All workloads in one report.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Direction {
    ToHybrid,
    ToDecimal,
}

const EXIT_SELFTEST: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_IO: i32 = 3;
const EXIT_KERNEL: i32 = 4;

struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Failure { code: EXIT_CONFIG, kind: "config", message: message.to_string() }
    }

    fn io(message: impl ToString) -> Self {
        Failure { code: EXIT_IO, kind: "io", message: message.to_string() }
    }

    fn kernel(message: impl ToString) -> Self {
        Failure { code: EXIT_KERNEL, kind: "kernel", message: message.to_string() }
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(failure) => {
            let record = ErrorRecord {
                error: ErrorBody { kind: failure.kind, message: &failure.message },
            };
            eprintln!("{}", serde_json::to_string(&record).unwrap());
            std::process::exit(failure.code);
        }
    }
}

fn load_config(path: &Option<PathBuf>, common: Option<&Common>) -> Result<RunConfig, Failure> {
    let mut config = match path {
        Some(p) => RunConfig::from_path(&p.to_string_lossy()).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    if let Some(common) = common {
        if let Some(seed) = common.seed {
            config.workload.seed = Some(seed);
        }
        if let Some(out) = &common.out {
            config.output.out = out.to_string_lossy().into_owned();
        }
        if let Some(baselines) = &common.baselines {
            config.baselines.systems = baselines.clone();
        }
        if common.long {
            config.apply_long_mode();
        }
    }
    Ok(config)
}

fn emit(command: &str, config: &RunConfig, results: WorkloadRows, started: Instant) -> Result<i32, Failure> {
    let mut report = RunReport::new(command, config, results.rows, &results.tape);
    report.wall_clock_ms = started.elapsed().as_millis() as u64;
    print!("{}", render_summary(&report));
    if !config.output.out.is_empty() {
        write_report(&report, &config.output.out).map_err(Failure::io)?;
        println!("report written to {}", config.output.out);
    }
    if !config.output.csv.is_empty() {
        std::fs::write(&config.output.csv, render_csv(&report))
            .map_err(|e| Failure::io(format!("writing {}: {e}", config.output.csv)))?;
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Dotprod { common, xs, ys } => {
            let started = Instant::now();
            let config = load_config(&common.config, Some(&common))?;
            let rt = config.build_runtime().map_err(Failure::config)?;
            let results = match (xs, ys) {
                (Some(xs), Some(ys)) => {
                    let xs = read_vector_file(&xs)?;
                    let ys = read_vector_file(&ys)?;
                    run::run_dotprod_explicit(&rt, &xs, &ys).map_err(Failure::kernel)?
                }
                _ => run::run_dotprod(&config, &rt).map_err(Failure::kernel)?,
            };
            emit("dotprod", &config, results, started)
        }
        Command::Matmul { common, a, b } => {
            let started = Instant::now();
            let config = load_config(&common.config, Some(&common))?;
            let rt = config.build_runtime().map_err(Failure::config)?;
            let threads = threads_from_env();
            let results = match (a, b) {
                (Some(a), Some(b)) => {
                    let a = read_matrix_file(&a)?;
                    let b = read_matrix_file(&b)?;
                    run::run_matmul_explicit(&rt, &a, &b, threads).map_err(Failure::kernel)?
                }
                _ => run::run_matmul(&config, &rt, threads).map_err(Failure::kernel)?,
            };
            emit("matmul", &config, results, started)
        }
        Command::Rk4 { common } => {
            let started = Instant::now();
            let config = load_config(&common.config, Some(&common))?;
            let rt = config.build_runtime().map_err(Failure::config)?;
            let results = run::run_rk4(&config, &rt).map_err(Failure::kernel)?;
            emit("rk4", &config, results, started)
        }
        Command::Bench { common } => {
            let started = Instant::now();
            let config = load_config(&common.config, Some(&common))?;
            let rt = config.build_runtime().map_err(Failure::config)?;
            let threads = threads_from_env();
            let mut rows = Vec::new();
            let mut tape = hrfna::Tape::new();
            for part in [
                run::run_dotprod(&config, &rt).map_err(Failure::kernel)?,
                run::run_matmul(&config, &rt, threads).map_err(Failure::kernel)?,
                run::run_rk4(&config, &rt).map_err(Failure::kernel)?,
            ] {
                rows.extend(part.rows);
                tape.merge_in(&part.tape);
            }
            emit("bench", &config, WorkloadRows { rows, tape }, started)
        }
        Command::Convert { config, input, direction, out } => {
            let config = load_config(&config, None)?;
            let rt = config.build_runtime().map_err(Failure::config)?;
            let reader = BufReader::new(
                File::open(&input).map_err(|e| Failure::io(format!("{}: {e}", input.display())))?,
            );
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(
                    File::create(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?,
                ),
                None => Box::new(std::io::stdout()),
            };
            let converted = match direction {
                Direction::ToHybrid => {
                    jsonl::convert_to_hybrid(reader, &mut sink, &rt.ms, rt.input_bits)
                }
                Direction::ToDecimal => jsonl::convert_to_values(reader, &mut sink, &rt.ms),
            }
            .map_err(Failure::io)?;
            eprintln!("converted {converted} records");
            Ok(0)
        }
        Command::Selftest { config, seed } => {
            let mut config = load_config(&config, None)?;
            if let Some(seed) = seed {
                config.workload.seed = Some(seed);
            }
            // Configuration is validated (and rejected) before any suite runs.
            let rt = config.build_runtime().map_err(Failure::config)?;
            let seed = config.seed().map_err(Failure::config)?;
            let results = hrfna::selftest::run_all(&rt.ms, &rt.policy, rt.input_bits, seed);
            let mut failed = 0;
            for r in &results {
                println!("{} {:<28} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                failed += u32::from(!r.passed);
            }
            println!("{} of {} suites passed", results.len() - failed as usize, results.len());
            Ok(if failed == 0 { 0 } else { EXIT_SELFTEST })
        }
    }
}

fn read_vector_file(path: &PathBuf) -> Result<Vec<hrfna::Dyadic>, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    jsonl::read_vector(BufReader::new(file))
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn read_matrix_file(path: &PathBuf) -> Result<hrfna::Matrix<hrfna::Dyadic>, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    jsonl::read_matrix(BufReader::new(file))
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}
