//! `flaudit`: run an instrumented federation, verify its ledger, render a
//! FactSheet, tamper with a stored ledger, or replay fusion steps.
//!
//! Exit codes: 0 all checks pass, 1 predicate or integrity failure,
//! 2 usage or configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use flaudit_core::factsheet::{build_factsheet, render, Format};
use flaudit_core::ledger::{encode_value, from_document, parse_document, tamper, LedgerError, TamperMode};
use flaudit_core::protocol::{
    load_run, replay_fusion, run_config, save_ledger, save_run, ProtocolError, ReplayStatus, RunConfig,
};
use flaudit_core::verifier::{verify, Status, VerificationReport, VerifierConfig};

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const REPORT_FILE: &str = "verification_report.json";

#[derive(Parser)]
#[command(name = "flaudit", version, about = "Accountable federated learning simulator and audit toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a federation and write its run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check ledger integrity and every predicate; write the report.
    Verify {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to `<run>/verification_report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Allowed spread in per-party fusion inclusion counts.
        #[arg(long, default_value_t = 0)]
        fairness_slack: usize,
    },
    /// Render the FactSheet into the run directory.
    Factsheet {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to `<run>/verification_report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Output format; all three when omitted.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Corrupt one entry of a stored ledger.
    Tamper {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        entry: usize,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Recompute every recorded fusion step from stored replies.
    Replay {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    #[value(alias = "markdown")]
    Md,
    Html,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Md => Format::Markdown,
            FormatArg::Html => Format::Html,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    FlipByte,
    DropEntry,
    Reorder,
}

impl From<ModeArg> for TamperMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FlipByte => TamperMode::FlipByte,
            ModeArg::DropEntry => TamperMode::DropEntry,
            ModeArg::Reorder => TamperMode::Reorder,
        }
    }
}

/// A command outcome that maps onto an exit code.
enum Failure {
    Check(String),
    Usage(String),
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<LedgerError> for Failure {
    fn from(e: LedgerError) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_run(config: &Path, out: &Path) -> Outcome {
    let cfg = RunConfig::from_file(config)?;
    let run = run_config(&cfg)?;
    save_run(&run, out)?;
    say!(
        "{} claims, stop reason {}, {} rounds, final model {}",
        run.ledger.len(),
        run.stop_reason,
        run.rounds_executed,
        run.final_model_digest().map_or_else(|| "none".to_owned(), |d| d.short(16).to_owned())
    );
    Ok(())
}

fn cmd_verify(run_dir: &Path, report_path: &Path, config: VerifierConfig) -> Outcome {
    let report = match load_run(run_dir) {
        Ok(stored) => verify(&stored.ledger, &stored.artifacts, config).map_err(|e| Failure::Usage(e.to_string()))?,
        // A ledger file that no longer parses is itself tamper evidence.
        Err(ProtocolError::Ledger(e @ LedgerError::Malformed { .. })) => VerificationReport::unreadable(e.to_string()),
        Err(e) => return Err(e.into()),
    };
    let mut bytes = encode_value(&report)?;
    bytes.push(b'\n');
    write_file(report_path, &bytes)?;

    say!("integrity: {}", if report.integrity.ok { "ok" } else { "FAILED" });
    for finding in &report.integrity.findings {
        say!("  {finding}");
    }
    for r in &report.results {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Inapplicable => "n/a",
        };
        say!("{:<12} {:<5} {}", r.predicate_id, status, r.detail);
        if r.status == Status::Fail {
            say!("{:<18} evidence seqs {:?}", "", r.evidence);
        }
    }
    if report.overall_ok {
        say!("overall: PASS");
        Ok(())
    } else {
        Err(Failure::Check("overall: FAIL".into()))
    }
}

fn cmd_factsheet(run_dir: &Path, report_path: &Path, format: Option<FormatArg>) -> Outcome {
    let stored = load_run(run_dir)?;
    let bytes = fs::read(report_path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", report_path.display())))?;
    let report: VerificationReport = from_document(&parse_document(&bytes)?)?;
    let sheet = build_factsheet(&stored.ledger, &report).map_err(|e| Failure::Check(e.to_string()))?;
    let formats: Vec<Format> = match format {
        Some(f) => vec![f.into()],
        None => Format::ALL.to_vec(),
    };
    for f in formats {
        let path = run_dir.join(format!("factsheet.{}", f.extension()));
        write_file(&path, &render(&sheet, f).map_err(|e| Failure::Usage(e.to_string()))?)?;
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_tamper(run_dir: &Path, entry: usize, mode: TamperMode) -> Outcome {
    let mut stored = load_run(run_dir)?;
    tamper(&mut stored.ledger, entry, mode)?;
    save_ledger(&stored.ledger, run_dir)?;
    say!("applied {} to entry {entry}", mode.as_str());
    Ok(())
}

fn cmd_replay(run_dir: &Path) -> Outcome {
    let stored = load_run(run_dir).map_err(|e| match e {
        ProtocolError::Ledger(e @ LedgerError::Malformed { .. }) => Failure::Check(e.to_string()),
        e => e.into(),
    })?;
    let integrity = stored.ledger.verify_integrity();
    if !integrity.ok {
        let failing = integrity.failing_positions();
        let where_ = match failing.first() {
            Some(p) => format!("{} entries, first at position {p}", failing.len()),
            None => "checkpoint does not match".to_owned(),
        };
        return Err(Failure::Check(format!("ledger failed integrity checks ({where_}); refusing to replay")));
    }
    let report = replay_fusion(&stored.ledger, &stored.artifacts)?;
    for r in &report.rounds {
        let status = match r.status {
            ReplayStatus::Match => "match",
            ReplayStatus::Mismatch => "MISMATCH",
            ReplayStatus::Unverifiable => "UNVERIFIABLE",
        };
        say!("round {:>3} (seq {:>4}) {:<12} {}", r.round, r.seq, status, r.detail);
    }
    if report.ok() {
        say!("{} fusion steps reproduced", report.rounds.len());
        Ok(())
    } else {
        Err(Failure::Check("replay found discrepancies".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Verify {
            run,
            report,
            fairness_slack,
        } => {
            let report = report.unwrap_or_else(|| run.join(REPORT_FILE));
            cmd_verify(&run, &report, VerifierConfig { fairness_slack })
        }
        Command::Factsheet { run, report, format } => {
            let report = report.unwrap_or_else(|| run.join(REPORT_FILE));
            cmd_factsheet(&run, &report, format)
        }
        Command::Tamper { run, entry, mode } => cmd_tamper(&run, entry, mode.into()),
        Command::Replay { run } => cmd_replay(&run),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
