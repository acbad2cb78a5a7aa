//! `prt` — command-line front end for the pseudo-ring RAM test workbench.
//!
//! Exit codes: 0 on success or a passing test, 1 when a test fails or
//! coverage falls below the requested threshold, 2 on usage and
//! configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prt_core::campaign::{
    compare_reports, run_campaign_with, search_tdb, CoverageReport, TestPlan,
};
use prt_core::config::{parse_poly, CampaignDocument, RealizedConfig};
use prt_core::galois::{poly_is_irreducible, FieldSpec};
use prt_core::lfsr::{LfsrDef, LfsrState};
use prt_core::march::{execute_march, execute_march_trace, parse_march};
use prt_core::memory::{FaultDescriptor, Memory, MemoryConfig};
use prt_core::pi::run_prt_schedule;
use prt_core::xornet::synthesize_multiplier;

#[derive(Parser)]
#[command(name = "prt", version, about = "Pseudo-ring RAM self-test workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect GF(2^m) fields: multiplication tables, irreducibility.
    Field {
        #[command(subcommand)]
        command: FieldCommand,
    },
    /// Synthesize the XOR network multiplying by a constant.
    Synth(SynthArgs),
    /// Inspect the virtual shift register: period, expected final state.
    Lfsr {
        #[command(subcommand)]
        command: LfsrCommand,
    },
    /// Execute a March test against a (possibly faulted) memory.
    RunMarch(RunMarchArgs),
    /// Execute the pseudo-ring schedule of a config file.
    RunPrt(RunPrtArgs),
    /// Run a single-fault coverage campaign and write a report.
    Campaign(CampaignArgs),
    /// Diff two campaign reports over the same fault universe.
    Compare(CompareArgs),
    /// Random search for seed states maximizing campaign coverage.
    TdbSearch(TdbSearchArgs),
}

#[derive(Subcommand)]
enum FieldCommand {
    /// Print the full multiplication table.
    MulTable(FieldArgs),
    /// Check a polynomial for irreducibility over GF(2). Exits 1 if reducible.
    Irreducible {
        /// Polynomial bitmask, e.g. 0x13 for 1 + z + z^4.
        #[arg(long)]
        poly: String,
    },
}

#[derive(Args)]
struct FieldArgs {
    /// Word width in bits.
    #[arg(long)]
    m: u8,
    /// Reduction polynomial bitmask (hex), e.g. 0x13.
    #[arg(long)]
    poly: String,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// The constant to multiply by (hex or decimal).
    #[arg(long, value_parser = parse_word)]
    constant: u32,
    /// Write the netlist here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LfsrArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Explicit tap vector, comma-separated, lowest stage first.
    #[arg(long, value_delimiter = ',', value_parser = parse_word)]
    taps: Option<Vec<u32>>,
    /// Raw generator coefficients a_0..a_k; normalized by the leading one.
    #[arg(long, value_delimiter = ',', value_parser = parse_word)]
    generator: Option<Vec<u32>>,
    /// Initial stage values, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_word)]
    init: Vec<u32>,
}

#[derive(Subcommand)]
enum LfsrCommand {
    /// Orbit length of the initial state.
    Period(LfsrArgs),
    /// State after walking an n-cell array.
    ExpectedFinal {
        #[command(flatten)]
        lfsr: LfsrArgs,
        /// Cell count of the walk.
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args)]
struct RunMarchArgs {
    /// Number of memory cells.
    #[arg(long)]
    n: usize,
    /// Bits per cell.
    #[arg(long, default_value_t = 1)]
    m: u8,
    /// Number of ports.
    #[arg(long, default_value_t = 1)]
    ports: u8,
    /// March notation, e.g. "{a(w0); u(r0,w1); d(r1,w0)}".
    #[arg(long)]
    test: String,
    /// Inject one fault before running, e.g. "sa:c3:b0:v1".
    #[arg(long)]
    fault: Option<String>,
    /// Report every mismatch instead of failing fast.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct RunPrtArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Inject one fault before running, e.g. "tf:c3:b0:up".
    #[arg(long)]
    fault: Option<String>,
}

#[derive(Args)]
struct CampaignArgs {
    /// JSON configuration file (must carry a universe section).
    #[arg(long)]
    config: PathBuf,
    /// Evaluate this March test instead of the config's schedule.
    #[arg(long)]
    march: Option<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the CSV rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Exit 1 if any class coverage falls below this ratio.
    #[arg(long)]
    min_coverage: Option<f64>,
    /// Evaluate faults one at a time instead of in parallel.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// First report (A).
    #[arg(long)]
    a: PathBuf,
    /// Second report (B).
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct TdbSearchArgs {
    /// JSON configuration file (universe + at least one schedule entry,
    /// whose first entry is the base iteration).
    #[arg(long)]
    config: PathBuf,
    /// Iterations per candidate schedule.
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    /// Number of random candidates to evaluate.
    #[arg(long, default_value_t = 64)]
    trials: u64,
    /// Search seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_word(text: &str) -> Result<u32, String> {
    let parsed = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        u32::from_str_radix(hex, 16)
    } else {
        text.parse()
    };
    parsed.map_err(|_| format!("bad number {text:?} (decimal or 0x-hex)"))
}

fn main() -> ExitCode {
    // Restore default SIGPIPE handling so `prt ... | head` exits quietly
    // when the reader closes early instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Field { command } => field_command(command),
        Command::Synth(args) => synth_command(args),
        Command::Lfsr { command } => lfsr_command(command),
        Command::RunMarch(args) => run_march_command(args),
        Command::RunPrt(args) => run_prt_command(args),
        Command::Campaign(args) => campaign_command(args),
        Command::Compare(args) => compare_command(args),
        Command::TdbSearch(args) => tdb_search_command(args),
    }
}

fn build_field(args: &FieldArgs) -> Result<FieldSpec> {
    Ok(FieldSpec::new(args.m, parse_poly(&args.poly)?)?)
}

fn field_command(command: FieldCommand) -> Result<ExitCode> {
    match command {
        FieldCommand::MulTable(args) => {
            let field = build_field(&args)?;
            let order = field.order() as u16;
            let width = ((order - 1) as f32).log(16.0).ceil().max(1.0) as usize;
            print!("{:>width$} |", "*");
            for b in 0..order {
                print!(" {b:>width$x}");
            }
            println!();
            println!(
                "{}-+{}",
                "-".repeat(width),
                "-".repeat((width + 1) * order as usize)
            );
            for a in 0..order {
                print!("{a:>width$x} |");
                for b in 0..order {
                    print!(" {:>width$x}", field.mul(a, b));
                }
                println!();
            }
            Ok(ExitCode::SUCCESS)
        }
        FieldCommand::Irreducible { poly } => {
            let mask = parse_poly(&poly)?;
            if poly_is_irreducible(mask)? {
                println!("{poly} is irreducible over GF(2)");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{poly} is reducible over GF(2)");
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn synth_command(args: SynthArgs) -> Result<ExitCode> {
    let field = build_field(&args.field)?;
    let constant = field.element(args.constant)?;
    let net = synthesize_multiplier(&field, constant);
    let netlist = net.to_netlist();
    match &args.out {
        Some(path) => std::fs::write(path, &netlist)
            .with_context(|| format!("writing netlist to {}", path.display()))?,
        None => print!("{netlist}"),
    }
    eprintln!(
        "constant {:#x} over {}: {} XOR gate(s)",
        constant,
        field,
        net.gate_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn build_lfsr(args: &LfsrArgs) -> Result<(FieldSpec, LfsrDef, LfsrState)> {
    let field = build_field(&args.field)?;
    let def = match (&args.taps, &args.generator) {
        (Some(taps), None) => {
            let taps = taps
                .iter()
                .map(|&t| field.element(t))
                .collect::<Result<Vec<_>, _>>()?;
            LfsrDef::new(field, taps)?
        }
        (None, Some(coeffs)) => {
            let coeffs = coeffs
                .iter()
                .map(|&c| field.element(c))
                .collect::<Result<Vec<_>, _>>()?;
            LfsrDef::from_generator(field, &coeffs)?
        }
        _ => bail!("pass exactly one of --taps or --generator"),
    };
    let init = LfsrState::new(
        args.init
            .iter()
            .map(|&v| field.element(v))
            .collect::<Result<Vec<_>, _>>()?,
    );
    Ok((field, def, init))
}

fn lfsr_command(command: LfsrCommand) -> Result<ExitCode> {
    match command {
        LfsrCommand::Period(args) => {
            let (_, def, init) = build_lfsr(&args)?;
            println!("{}", def.period(&init)?);
        }
        LfsrCommand::ExpectedFinal { lfsr, n } => {
            let (_, def, init) = build_lfsr(&lfsr)?;
            println!("{}", def.expected_final(&init, n)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_fault(text: &str) -> Result<FaultDescriptor> {
    text.parse::<FaultDescriptor>()
        .map_err(|e| anyhow!(e.to_string()))
}

fn run_march_command(args: RunMarchArgs) -> Result<ExitCode> {
    let test = parse_march(&args.test).map_err(|e| anyhow!("{e}"))?;
    let mut mem = Memory::new(MemoryConfig::new(args.n, args.m, args.ports)?)?;
    if let Some(fault) = &args.fault {
        mem.inject_fault(parse_fault(fault)?)?;
    }
    if args.trace {
        let failures = execute_march_trace(&test, &mut mem)?;
        for f in &failures {
            println!(
                "mismatch: element {} op {} address {}: read {:#x}, expected {:#x}",
                f.element, f.op, f.address, f.read, f.expected
            );
        }
        let stats = mem.stats();
        println!(
            "{} mismatches; reads {} writes {} cycles {}",
            failures.len(),
            stats.reads,
            stats.writes,
            stats.cycles
        );
        return Ok(if failures.is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        });
    }
    let verdict = execute_march(&test, &mut mem)?;
    let stats = mem.stats();
    match verdict.failure() {
        None => {
            println!(
                "PASS; reads {} writes {} cycles {}",
                stats.reads, stats.writes, stats.cycles
            );
            Ok(ExitCode::SUCCESS)
        }
        Some(f) => {
            println!(
                "FAIL at element {} op {} address {}: read {:#x}, expected {:#x}",
                f.element, f.op, f.address, f.read, f.expected
            );
            Ok(ExitCode::from(1))
        }
    }
}

fn load_config(path: &PathBuf) -> Result<RealizedConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok(CampaignDocument::from_json(&text)?.realize()?)
}

fn run_prt_command(args: RunPrtArgs) -> Result<ExitCode> {
    let config = load_config(&args.config)?;
    if config.schedule.is_empty() {
        bail!("config schedule is empty");
    }
    let mut mem = Memory::new(config.memory)?;
    if let Some(fault) = &args.fault {
        mem.inject_fault(parse_fault(fault)?)?;
    }
    let verdict = run_prt_schedule(&config.schedule, &mut mem)?;
    for (idx, iter) in verdict.iterations.iter().enumerate() {
        println!(
            "iteration {idx}: {} (fin {}, expected {}, reads {} writes {} cycles {})",
            if iter.pass { "PASS" } else { "FAIL" },
            iter.fin,
            iter.fin_expected,
            iter.stats.reads,
            iter.stats.writes,
            iter.stats.cycles
        );
        if let Some(lanes) = &iter.lanes {
            for lane in lanes.iter().filter(|l| !l.pass) {
                println!("  lane {} failed", lane.lane);
            }
        }
    }
    println!(
        "schedule: {} (total reads {} writes {} cycles {})",
        if verdict.pass { "PASS" } else { "FAIL" },
        verdict.stats.reads,
        verdict.stats.writes,
        verdict.stats.cycles
    );
    if let Some(first) = verdict.first_failure {
        println!("first detection at iteration {first}");
    }
    Ok(if verdict.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn campaign_command(args: CampaignArgs) -> Result<ExitCode> {
    let config = load_config(&args.config)?;
    let universe = config
        .universe
        .ok_or_else(|| anyhow!("config has no universe section"))?;
    let plan = match &args.march {
        Some(text) => TestPlan::March(parse_march(text).map_err(|e| anyhow!("{e}"))?),
        None => {
            if config.schedule.is_empty() {
                bail!("config schedule is empty and no --march was given");
            }
            TestPlan::Prt(config.schedule)
        }
    };
    let report = run_campaign_with(&plan, &universe, !args.serial)?;

    println!(
        "{:<22} {:>8} {:>8} {:>9}",
        "class", "total", "detected", "coverage"
    );
    for summary in &report.classes {
        println!(
            "{:<22} {:>8} {:>8} {:>9.4}",
            summary.class.name(),
            summary.total,
            summary.detected,
            summary.coverage
        );
    }
    println!(
        "overall: {:.4} over {} faults",
        report.overall_coverage(),
        report.rows.len()
    );

    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json())
            .with_context(|| format!("writing report to {}", path.display()))?;
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, report.to_csv())
            .with_context(|| format!("writing CSV to {}", path.display()))?;
    }
    if let Some(threshold) = args.min_coverage {
        let below: Vec<String> = report
            .classes
            .iter()
            .filter(|s| s.coverage < threshold)
            .map(|s| format!("{} ({:.4})", s.class.name(), s.coverage))
            .collect();
        if !below.is_empty() {
            eprintln!("below threshold {threshold}: {}", below.join(", "));
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn compare_command(args: CompareArgs) -> Result<ExitCode> {
    let load = |path: &PathBuf| -> Result<CoverageReport> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading report {}", path.display()))?;
        Ok(CoverageReport::from_json(&text)?)
    };
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    let diff = compare_reports(&a, &b)?;
    print!("{diff}");
    Ok(ExitCode::SUCCESS)
}

fn tdb_search_command(args: TdbSearchArgs) -> Result<ExitCode> {
    let config = load_config(&args.config)?;
    let universe = config
        .universe
        .ok_or_else(|| anyhow!("config has no universe section"))?;
    let base = config
        .schedule
        .first()
        .ok_or_else(|| anyhow!("config schedule is empty; the first entry seeds the search"))?;
    let outcome = search_tdb(base, &universe, args.iterations, args.trials, args.seed)?;
    println!(
        "best coverage {:.4} after {} trials ({} skipped)",
        outcome.coverage, args.trials, outcome.skipped_trials
    );
    for (idx, init) in outcome.inits.iter().enumerate() {
        let rendered: Vec<String> = init.iter().map(|v| format!("{v}")).collect();
        println!("iteration {idx}: init [{}]", rendered.join(", "));
    }
    for summary in &outcome.report.classes {
        println!(
            "{:<22} {:>8} {:>8} {:>9.4}",
            summary.class.name(),
            summary.total,
            summary.detected,
            summary.coverage
        );
    }
    Ok(ExitCode::SUCCESS)
}
