//! Command-line front end: verification suites, protocol runs, blindness
//! audits and overhead tables.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qudit_bqc::blind::{self, Program, ProtocolTranscript};
use qudit_bqc::galois::{make_field, Field};
use qudit_bqc::mbqc::OpenKind;
use qudit_bqc::verify::{run_suite, SuiteReport, VerifyConfig, SUITES};
use qudit_bqc::{gates, mbqc, sim, Caps};

#[derive(Parser)]
#[command(name = "qudit-bqc", version, about = "Qudit MBQC and blind-protocol toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Field as `p,m` or `p,m,c0,c1,...,cm` (explicit modulus, low degree
    /// first, must be monic and irreducible).
    #[arg(long, global = true)]
    field: Option<String>,
    /// Seed for every pseudo-random choice; required for `run`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report output path (defaults to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Resource caps as `amps=N,branches=N`.
    #[arg(long, global = true)]
    caps: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one named invariant suite and write its JSON report.
    Verify {
        /// One of: algebra, gadgets, mirror, blindness.
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Execute a blind-protocol program and write its transcript.
    Run {
        /// Architecture: brickwork, open-ended or decorated.
        #[arg(long)]
        arch: String,
        /// Program file: a JSON program object, or a bare JSON list of gate
        /// menu entries for brickwork/decorated.
        program: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Audit instructed-angle distributions across transcript files.
    Audit {
        /// Transcript files (JSON lines). Split half/half into the two
        /// compared collections unless `--split` gives a boundary.
        files: Vec<PathBuf>,
        /// Number of leading files forming the first collection.
        #[arg(long)]
        split: Option<usize>,
        /// Significance level for the chi-square tests.
        #[arg(long, default_value_t = 0.01)]
        significance: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Print per-architecture resource overhead as a table and JSON.
    Overhead {
        /// Comma-separated architecture filter (default: all).
        #[arg(long)]
        arch: Option<String>,
        /// Logical wires.
        #[arg(long, default_value_t = 2)]
        wires: usize,
        /// Gate layers / blocks.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Debug)]
struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse_field(arg: &str) -> CliResult<Field> {
    let parts: Vec<u32> = arg
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError(format!("bad --field `{arg}`: {e}")))?;
    match parts.as_slice() {
        [p, m] => Ok(make_field(*p, *m)?),
        [p, m, coeffs @ ..] => Ok(Field::with_modulus(*p, *m, coeffs.to_vec())?),
        _ => Err(CliError(format!("bad --field `{arg}`: expected p,m[,c0,...,cm]"))),
    }
}

fn parse_caps(arg: &str) -> CliResult<Caps> {
    let mut caps = Caps::default();
    for piece in arg.split(',') {
        let (key, value) = piece
            .split_once('=')
            .ok_or_else(|| CliError(format!("bad --caps entry `{piece}`: expected key=N")))?;
        let n: usize =
            value.trim().parse().map_err(|e| CliError(format!("bad --caps value: {e}")))?;
        match key.trim() {
            "amps" => caps.max_amps = n,
            "branches" => caps.max_branches = n,
            other => return Err(CliError(format!("unknown cap `{other}`"))),
        }
    }
    Ok(caps)
}

/// Serialize with floats at 17 significant digits so reports are
/// byte-stable across runs and platforms.
fn json_stable(value: &serde_json::Value, out: &mut String, indent: usize) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() && n.as_i64().is_none() && n.as_u64().is_none() {
                out.push_str(&format!("{:.16e}", n.as_f64().unwrap()));
            } else {
                out.push_str(&n.to_string());
            }
        }
        serde_json::Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent + 1));
                json_stable(item, out, indent + 1);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        serde_json::Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                json_stable(v, out, indent + 1);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn emit(report: &serde_json::Value, out: &Option<PathBuf>) -> CliResult<()> {
    let mut text = String::new();
    json_stable(report, &mut text, 0);
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_verify(suite: &str, common: &CommonOpts) -> CliResult<SuiteReport> {
    if !SUITES.contains(&suite) {
        return Err(CliError(format!("unknown suite `{suite}`; expected one of {SUITES:?}")));
    }
    let mut cfg = VerifyConfig::default();
    if let Some(arg) = &common.field {
        cfg.fields = Some(vec![parse_field(arg)?]);
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(arg) = &common.caps {
        cfg.caps = parse_caps(arg)?;
    }
    let report = run_suite(suite, &cfg)?;
    emit(&serde_json::to_value(&report)?, &common.out)?;
    for check in &report.checks {
        eprintln!(
            "{} {} ({} ms) {}",
            if check.passed { "ok  " } else { "FAIL" },
            check.name,
            check.millis,
            check.detail
        );
    }
    Ok(report)
}

fn load_program(path: &PathBuf, arch: &str) -> CliResult<Program> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read program {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.is_array() {
        // bare gate-menu list; inputs default to zero
        return match arch {
            "brickwork" => Ok(Program::Brickwork {
                units: serde_json::from_value(value)?,
                inputs: Default::default(),
                traps: Vec::new(),
            }),
            "decorated" => {
                let ops: Vec<mbqc::DecoratedOp> = serde_json::from_value(value)?;
                Ok(Program::Decorated {
                    len: ops.len() + 1,
                    ops,
                    input: Default::default(),
                    traps: 0,
                })
            }
            "open-ended" => Err(CliError(
                "open-ended programs need the object form (n and inputs are required)".into(),
            )),
            other => Err(CliError(format!("unknown architecture `{other}`"))),
        };
    }
    let program: Program = serde_json::from_value(value)?;
    if program.architecture() != arch {
        return Err(CliError(format!(
            "program file is for architecture `{}`, not `{arch}`",
            program.architecture()
        )));
    }
    Ok(program)
}

fn cmd_run(arch: &str, path: &PathBuf, common: &CommonOpts) -> CliResult<()> {
    let seed = common
        .seed
        .ok_or_else(|| CliError("run needs an explicit --seed for reproducibility".into()))?;
    let f = match &common.field {
        Some(arg) => parse_field(arg)?,
        None => make_field(2, 1)?,
    };
    let caps = match &common.caps {
        Some(arg) => parse_caps(arg)?,
        None => Caps::default(),
    };
    let program = load_program(path, arch)?;
    let run = blind::run_protocol(&program, &f, seed, true, &caps)?;
    let jsonl = run.transcript.to_jsonl()?;
    match &common.out {
        Some(p) => std::fs::write(p, &jsonl)?,
        None => print!("{jsonl}"),
    }
    let outcomes: Vec<u32> = run.corrected.iter().map(|k| k.0).collect();
    println!("corrected outcomes: {outcomes:?}");
    println!("traps: {}", if run.trap_ok { "ok" } else { "FAILED" });
    if let Program::OpenEnded { n, block: OpenKind::Entangle { m, lambda }, .. } = &program {
        // the steered gate this block applies has a Clifford closed form
        let angles = sim::angles_of_diagonal(&gates::phase(*lambda, &f));
        let parity_even = (n + 2 - m) % 2 == 0;
        let g = mbqc::steered_gate_closed_form(&angles, parity_even, &f);
        let certified = gates::is_clifford_two_qudit(&g, &f);
        println!(
            "steered gate (m={m}, λ={}): {}",
            lambda.0,
            if certified { "certified Clifford" } else { "NOT Clifford" }
        );
    }
    Ok(())
}

fn cmd_audit(
    files: &[PathBuf],
    split: Option<usize>,
    significance: f64,
    common: &CommonOpts,
) -> CliResult<bool> {
    if files.is_empty() {
        return Err(CliError("no transcript files given".into()));
    }
    let mut transcripts = Vec::with_capacity(files.len());
    for path in files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))?;
        transcripts.push(ProtocolTranscript::from_jsonl(&text)?);
    }
    let boundary = split.unwrap_or(transcripts.len() / 2);
    if boundary == 0 || boundary >= transcripts.len() {
        return Err(CliError(format!(
            "split boundary {boundary} leaves an empty collection ({} transcripts)",
            transcripts.len()
        )));
    }
    let f = match &common.field {
        Some(arg) => parse_field(arg)?,
        None => {
            let desc = &transcripts[0].header.field;
            Field::with_modulus(desc.p, desc.m, desc.modulus.clone())?
        }
    };
    let (a, b) = transcripts.split_at(boundary);
    let report = blind::blindness_audit(a, b, &f, significance)?;
    emit(&serde_json::to_value(&report)?, &common.out)?;
    eprintln!(
        "audit: {} + {} transcripts, {} cells, min p = {:.4}, {}",
        report.samples_a,
        report.samples_b,
        report.cells.len(),
        report.min_p,
        if report.passed() { "no cell flagged" } else { "FLAGGED" }
    );
    Ok(report.passed())
}

fn cmd_overhead(
    arch: &Option<String>,
    wires: usize,
    depth: usize,
    common: &CommonOpts,
) -> CliResult<()> {
    let f = match &common.field {
        Some(arg) => parse_field(arg)?,
        None => make_field(2, 1)?,
    };
    let wanted: Option<Vec<&str>> = arch.as_ref().map(|a| a.split(',').map(str::trim).collect());
    let rows: Vec<_> = blind::overhead_report(&f, wires, depth)?
        .into_iter()
        .filter(|r| {
            wanted
                .as_ref()
                .map(|w| w.iter().any(|a| r.architecture.starts_with(a)))
                .unwrap_or(true)
        })
        .collect();
    if rows.is_empty() {
        return Err(CliError("architecture filter matched nothing".into()));
    }
    let mut table = format!(
        "{:<22} {:>7} {:>11} {:>13} {:>13} {:>9}  notes\n",
        "architecture", "qudits", "entanglers", "applications", "measurements", "messages"
    );
    for r in &rows {
        table.push_str(&format!(
            "{:<22} {:>7} {:>11} {:>13} {:>13} {:>9}  {}\n",
            r.architecture,
            r.qudits,
            r.entanglers,
            r.entangler_applications,
            r.measurements,
            r.classical_messages,
            r.notes
        ));
    }
    print!("{table}");
    emit(&serde_json::to_value(&rows)?, &common.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: CliResult<bool> = match &cli.command {
        Command::Verify { suite, common } => cmd_verify(suite, common).map(|r| r.passed),
        Command::Run { arch, program, common } => cmd_run(arch, program, common).map(|()| true),
        Command::Audit { files, split, significance, common } => {
            cmd_audit(files, *split, *significance, common)
        }
        Command::Overhead { arch, wires, depth, common } => {
            cmd_overhead(arch, *wires, *depth, common).map(|()| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
