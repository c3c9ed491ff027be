//! The `dpim` command line.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use dpim_core::kernels::{build, kernel_key, verify_kernel, ArithOp, LatencyMode, Sampling, Verification};
use dpim_core::workloads::{model_macs, CnnModel, CountOptions};
use dpim_core::NumberFormat;

use crate::config::Config;
use crate::error::{exit, BenchError, Result};
use crate::reference::ReferenceSet;
use crate::report::{self, Report, ReportRow};
use crate::run::{Overrides, Runner};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "dpim", version, about = "Digital processing-in-memory kernels and performance models")]
pub struct Cli {
    /// Configuration JSON; defaults to the bundled configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Reference data CSV; defaults to the bundled figure data.
    #[arg(long, global = true)]
    pub reference: Option<PathBuf>,
    /// `calibrated` (default) or `measured` (cycle counts from the simulated kernels)
    #[arg(long, global = true)]
    pub latency_mode: Option<LatencyMode>,
    /// GPU bandwidth efficiency in (0, 1].
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Directory for output files; without it, results go to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format for `bench` and `report`.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Seed for random verification samples.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Omit timestamps so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub deterministic_output: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check kernel programs against host arithmetic.
    Verify {
        /// Number formats to check (fixed8, fixed16, fixed32, fp16, fp32, ...).
        #[arg(long = "format", value_name = "FORMAT")]
        formats: Vec<NumberFormat>,
        /// Every operand pair; formats of at most 16 bits.
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        /// Random pairs per kernel, in addition to the directed edge cases.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Evaluate scenarios and compare with the reference data.
    Bench {
        /// Scenario names; all configured scenarios when omitted.
        scenarios: Vec<String>,
        #[arg(long = "format", value_enum)]
        output_format: Option<OutputFormat>,
    },
    /// Re-emit a saved CSV or JSON report in another format.
    Report {
        input: PathBuf,
        #[arg(long = "format", value_enum)]
        output_format: Option<OutputFormat>,
    },
    /// Print configured PIM architectures and GPUs.
    ListArchs,
    /// Print bundled CNN models and their multiply-accumulate counts.
    ListModels,
}

const DEFAULT_FORMATS: [&str; 5] = ["fixed8", "fixed16", "fixed32", "fp16", "fp32"];
const DEFAULT_SAMPLES: u64 = 100_000;

/// Parses arguments, runs the command, and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit::USAGE
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::bundled(),
    };
    let reference = match &cli.reference {
        Some(p) => ReferenceSet::load(p)?,
        None => ReferenceSet::bundled(),
    };
    let overrides = Overrides { latency_mode: cli.latency_mode, eta: cli.eta };
    if let Some(eta) = cli.eta {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(BenchError::Usage(format!("--eta {eta} outside (0, 1]")));
        }
    }
    let runner = Runner::new(config, reference, overrides);
    match &cli.command {
        Command::Verify { formats, exhaustive, samples } => verify(cli, formats, *exhaustive, *samples),
        Command::Bench { scenarios, output_format } => {
            let rows = if scenarios.is_empty() {
                runner.run_all()?
            } else {
                let mut rows = Vec::new();
                for s in scenarios {
                    rows.extend(runner.run_named(s)?);
                }
                rows
            };
            let mode = runner.overrides.latency_mode.unwrap_or_default();
            let fmt = output_format.or(cli.format).unwrap_or(OutputFormat::Csv);
            emit(cli, "bench", Report::new(mode.to_string(), rows), fmt)
        }
        Command::Report { input, output_format } => {
            let rows = report::read_rows(input)?;
            let fmt = output_format.or(cli.format).unwrap_or(OutputFormat::Csv);
            let mode = cli.latency_mode.unwrap_or_default();
            emit(cli, "report", Report::new(mode.to_string(), rows), fmt)
        }
        Command::ListArchs => {
            list_archs(&runner.config)?;
            Ok(exit::OK)
        }
        Command::ListModels => {
            list_models(&runner.config)?;
            Ok(exit::OK)
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| BenchError::io(&path, e))?;
    Ok(path)
}

/// Writes rows in `fmt`; returns 1 if any row is outside its tolerance.
pub fn emit(cli: &Cli, stem: &str, mut report: Report, fmt: OutputFormat) -> Result<i32> {
    if report.rows.is_empty() {
        return Err(BenchError::Usage("no rows to report".into()));
    }
    if !cli.deterministic_output {
        report.generated_at = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    match (&cli.out, fmt) {
        (None, OutputFormat::Csv) => print!("{}", report::to_csv(&report.rows)?),
        (None, OutputFormat::Json) => print!("{}", report::to_json(&report)?),
        (None, OutputFormat::Svg) => return Err(BenchError::Usage("--format svg needs --out <dir>".into())),
        (Some(dir), f) => {
            let written = match f {
                OutputFormat::Csv => vec![write_file(dir, &format!("{stem}.csv"), &report::to_csv(&report.rows)?)?],
                OutputFormat::Json => vec![write_file(dir, &format!("{stem}.json"), &report::to_json(&report)?)?],
                OutputFormat::Svg => svg::charts(&report.rows)
                    .iter()
                    .map(|(name, body)| write_file(dir, name, body))
                    .collect::<Result<_>>()?,
            };
            print!("{}", report::table(&report.rows));
            for p in written {
                println!("wrote {}", p.display());
            }
        }
    }
    let failed: Vec<&ReportRow> = report.failures().collect();
    eprintln!("{} rows, {} outside tolerance", report.rows.len(), failed.len());
    for r in &failed {
        eprintln!(
            "  {} {} {} {}: {:.4e} vs {:.4e}",
            r.scenario,
            r.architecture,
            r.workload,
            r.metric,
            r.value,
            r.reference.unwrap_or(f64::NAN)
        );
    }
    Ok(if failed.is_empty() { exit::OK } else { exit::TOLERANCE })
}

fn verify(cli: &Cli, formats: &[NumberFormat], exhaustive: bool, samples: Option<u64>) -> Result<i32> {
    let formats: Vec<NumberFormat> = if formats.is_empty() {
        DEFAULT_FORMATS.iter().map(|f| f.parse().expect("default formats parse")).collect()
    } else {
        formats.to_vec()
    };
    let sampling = if exhaustive {
        Sampling::Exhaustive
    } else {
        Sampling::Random { samples: samples.unwrap_or(DEFAULT_SAMPLES), seed: cli.seed }
    };
    let mut results: Vec<Verification> = Vec::new();
    for format in formats {
        if !format.kernel_supported() {
            return Err(BenchError::Usage(format!("no kernels for {}", format.name())));
        }
        if exhaustive && format.total_bits() > 16 {
            return Err(BenchError::Usage(format!("{} is too wide for --exhaustive", format.name())));
        }
        for op in [ArithOp::Add, ArithOp::Mult] {
            let program = build(op, format)?;
            let v = verify_kernel(&program, sampling)?;
            println!(
                "{:<20} {:>10} cases {:>6} mismatches  {} cycles  {}",
                kernel_key(op, format),
                v.cases,
                v.mismatches,
                program.latency(),
                if v.passed() { "pass" } else { "FAIL" }
            );
            if let Some(m) = &v.first_mismatch {
                println!("  first mismatch: {m}");
            }
            results.push(v);
        }
    }
    if let Some(dir) = &cli.out {
        let path = write_file(dir, "verify.json", &format!("{}\n", serde_json::to_string_pretty(&results)?))?;
        println!("wrote {}", path.display());
    }
    Ok(if results.iter().all(Verification::passed) { exit::OK } else { exit::TOLERANCE })
}

fn list_archs(config: &Config) -> Result<()> {
    println!(
        "{:<12} {:>8} {:>6} {:>10} {:>10} {:>10} {:>12} {:>10}",
        "name", "rows", "cols", "memory", "energy/J", "clock/Hz", "total rows", "power/W"
    );
    for a in &config.architectures {
        let d = a.derive()?;
        println!(
            "{:<12} {:>8} {:>6} {:>7} GiB {:>10.3e} {:>10.3e} {:>12} {:>10.2}",
            a.name,
            a.crossbar_rows,
            a.crossbar_cols,
            a.memory_bytes >> 30,
            a.gate_energy,
            a.clock,
            d.total_rows,
            d.max_power
        );
    }
    println!();
    println!("{:<12} {:>7} {:>12} {:>10} {:>8} {:>12} {:>6}", "gpu", "cores", "bandwidth", "clock/Hz", "power/W", "peak ops/s", "eta");
    for g in &config.gpu {
        println!(
            "{:<12} {:>7} {:>12.3e} {:>10.3e} {:>8} {:>12.3e} {:>6}",
            g.name, g.cores, g.bandwidth, g.clock, g.max_power, g.peak_flops, g.bandwidth_efficiency
        );
    }
    Ok(())
}

fn list_models(config: &Config) -> Result<()> {
    println!("{:<12} {:>7} {:>14} {:>14} {:>14} {:>14}", "model", "layers", "macs", "+aux", "-shortcuts", "calibrated");
    let d = CountOptions::default();
    for name in CnnModel::bundled_names() {
        let m = CnnModel::bundled(name)?;
        let calibrated = config.calibrated_macs(name).map(|c| c.to_string()).unwrap_or_else(|_| "-".into());
        println!(
            "{:<12} {:>7} {:>14} {:>14} {:>14} {:>14}",
            name,
            m.layers.len(),
            model_macs(&m, d)?,
            model_macs(&m, CountOptions { include_aux: true, ..d })?,
            model_macs(&m, CountOptions { include_shortcuts: false, ..d })?,
            calibrated
        );
    }
    Ok(())
}
