//! Command-line entry point. `dispatch` takes the argument list and output
//! streams so it can be driven in-process by tests.

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use proofline_core::{Coordinates, RetryBudget, RunMode};

use crate::agent::Agents;
use crate::config::{load_config, RunConfig, DEFAULT_CONFIG};
use crate::orchestrator::{
    resume, run_decomposition_mode, run_simple_mode, scan_run, OutcomeKind, RunError, RunOutcome,
};
use crate::report_file::report_to_yaml;
use crate::run_state::RunDir;
use crate::verification::{run_standalone_verifier, CheckOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

const SYNOPSIS: &str = "\
Usage:
  proofline prove --problem <file> --config <file> --out <dir> [--mode simple|decomposition]
  proofline resume <dir>
  proofline verify --problem <file> --proof <file> [--config <file>] [--report <file>]
  proofline status <dir>
  proofline init --out <file>
";

/// Looked up in the working directory when `verify` gets no `--config`.
pub const VERIFY_CONFIG: &str = "proofline.yaml";

#[derive(Debug, Parser)]
#[command(name = "proofline", version, about = "Multi-agent proof pipeline over crash-safe run directories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Simple,
    Decomposition,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Start a run (or continue one started with the same config and problem).
    Prove {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Continue an interrupted run.
    Resume { dir: PathBuf },
    /// Verify one proof with the standalone verifier.
    Verify {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        /// Defaults to ./proofline.yaml.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the report; defaults to `<proof>.report.yaml`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Show where a run stands. Never writes to the run directory.
    Status { dir: PathBuf },
    /// Write a commented default config.
    Init {
        #[arg(long)]
        out: PathBuf,
    },
}

struct Ui<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

impl Ui<'_> {
    fn paint(&self, text: &str, code: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn good(&self, text: &str) -> String {
        self.paint(text, "32")
    }

    fn bad(&self, text: &str) -> String {
        self.paint(text, "31")
    }

    fn fail(&mut self, message: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "proofline: {message}");
        EXIT_ERROR
    }
}

/// Colour only for a terminal, and never when `NO_COLOR` is set.
pub fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{}\n{SYNOPSIS}", text.trim_end().trim_end_matches("For more information, try '--help'.").trim_end());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let mut ui = Ui { out, err, color };
    match cli.command {
        Command::Prove { problem, config, out, mode } => prove(&mut ui, &problem, &config, &out, mode),
        Command::Resume { dir } => match resume(&dir) {
            Ok(outcome) => report_outcome(&mut ui, &dir, &outcome),
            Err(e) => ui.fail(format_args!("{}: {e}", dir.display())),
        },
        Command::Verify { problem, proof, config, report } => verify(&mut ui, &problem, &proof, config, report),
        Command::Status { dir } => status(&mut ui, &dir),
        Command::Init { out } => init(&mut ui, &out),
    }
}

fn read_text(ui: &mut Ui<'_>, path: &Path, what: &str) -> Result<String, i32> {
    fs::read_to_string(path).map_err(|e| ui.fail(format_args!("cannot read {what} file {}: {e}", path.display())))
}

fn load(ui: &mut Ui<'_>, path: &Path) -> Result<RunConfig, i32> {
    load_config(path).map_err(|e| ui.fail(format_args!("{}: {e}", path.display())))
}

fn prove(ui: &mut Ui<'_>, problem: &Path, config: &Path, out: &Path, mode: Option<ModeArg>) -> i32 {
    let problem = match read_text(ui, problem, "problem") {
        Ok(text) => text,
        Err(code) => return code,
    };
    let config = match load(ui, config) {
        Ok(config) => config,
        Err(code) => return code,
    };
    let mode = match mode {
        Some(ModeArg::Simple) => RunMode::Simple,
        Some(ModeArg::Decomposition) => RunMode::Decomposition,
        None => config.mode,
    };
    let result = match mode {
        RunMode::Simple => run_simple_mode(&problem, &config, out),
        RunMode::Decomposition => run_decomposition_mode(&problem, &config, out),
    };
    match result {
        Ok(outcome) => report_outcome(ui, out, &outcome),
        Err(e) => ui.fail(format_args!("{}: {e}", out.display())),
    }
}

fn report_outcome(ui: &mut Ui<'_>, dir: &Path, outcome: &RunOutcome) -> i32 {
    match (&outcome.kind, &outcome.accepted) {
        (OutcomeKind::Proved, Some(path)) => {
            let _ = writeln!(ui.out, "{} {}", ui.good("proved:"), dir.join(path).display());
            EXIT_OK
        }
        _ => {
            let _ = writeln!(ui.out, "{} no proof accepted", ui.bad("exhausted:"));
            if let Some(b) = outcome.final_budget {
                let _ = writeln!(ui.out, "final budget: {b}");
            }
            let _ = writeln!(ui.out, "summary: {}", dir.join(crate::orchestrator::SUMMARY_FILE).display());
            EXIT_FAILED
        }
    }
}

fn verify(ui: &mut Ui<'_>, problem: &Path, proof: &Path, config: Option<PathBuf>, report: Option<PathBuf>) -> i32 {
    let problem_text = match read_text(ui, problem, "problem") {
        Ok(text) => text,
        Err(code) => return code,
    };
    let proof_text = match read_text(ui, proof, "proof") {
        Ok(text) => text,
        Err(code) => return code,
    };
    let config_path = config.unwrap_or_else(|| PathBuf::from(VERIFY_CONFIG));
    let config = match load(ui, &config_path) {
        Ok(config) => config,
        Err(code) => return code,
    };
    let agents = match Agents::from_config(&config) {
        Ok(agents) => agents,
        Err(e) => return ui.fail(format_args!("{}: {e}", config_path.display())),
    };
    let options = CheckOptions::from_config(&config);
    let outcome = match run_standalone_verifier(&problem_text, &proof_text, &config.rules, &agents, &options) {
        Ok(outcome) => outcome,
        Err(e) => return ui.fail(e),
    };
    let report_path = report.unwrap_or_else(|| {
        let mut name = proof.file_name().map(OsString::from).unwrap_or_default();
        name.push(".report.yaml");
        proof.with_file_name(name)
    });
    if let Err(e) = fs::write(&report_path, report_to_yaml(&outcome.report)) {
        return ui.fail(format_args!("cannot write report {}: {e}", report_path.display()));
    }
    let passed = outcome.report.passed();
    let word = if passed { ui.good("PASS") } else { ui.bad("FAIL") };
    let difficulty = outcome.difficulty.as_deref().unwrap_or("not judged");
    let _ = writeln!(ui.out, "{word} ({difficulty})");
    let _ = writeln!(ui.out, "report: {}", report_path.display());
    if passed {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn status(ui: &mut Ui<'_>, dir: &Path) -> i32 {
    let run = RunDir::new(dir);
    let (point, outcome) = match scan_run(&run) {
        Ok(found) => found,
        Err(RunError::NotARunDir(_)) => return ui.fail(format_args!("{} is not a run directory", dir.display())),
        Err(e) => return ui.fail(format_args!("{}: {e}", dir.display())),
    };
    let config = match crate::orchestrator::load_run(&run) {
        Ok((config, _)) => config,
        Err(e) => return ui.fail(e),
    };
    let mut lines = vec![format!("run: {}", dir.display()), format!("progress: {point}")];
    match point.coordinates {
        Coordinates::Round { round, .. } => lines.push(format!("round: {round} of {}", config.max_rounds)),
        Coordinates::Decomposition { budget } => lines.push(budget_line(budget, &config)),
        Coordinates::Run | Coordinates::Slot { .. } if config.mode == RunMode::Decomposition && outcome.is_none() => {
            lines.push(budget_line(RetryBudget::START, &config))
        }
        _ => {}
    }
    if let Some(outcome) = &outcome {
        let kind = match outcome.kind {
            OutcomeKind::Proved => ui.good("proved"),
            OutcomeKind::Exhausted => ui.bad("exhausted"),
        };
        lines.push(format!("outcome: {kind}"));
        match outcome.mode {
            RunMode::Simple => lines.push(format!("rounds: {} of {}", outcome.rounds, config.max_rounds)),
            RunMode::Decomposition => {
                if let Some(b) = outcome.final_budget {
                    lines.push(budget_line(b, &config));
                }
                let t = outcome.tally();
                lines.push(format!(
                    "tally: attempts={} revisions={} proofs={} (proof attempts in total: {})",
                    t.attempts,
                    t.revisions,
                    t.proofs,
                    outcome.budget_history.len()
                ));
            }
        }
        if let Some(path) = &outcome.accepted {
            lines.push(format!("accepted: {}", dir.join(path).display()));
        }
    }
    for line in lines {
        let _ = writeln!(ui.out, "{line}");
    }
    EXIT_OK
}

fn budget_line(b: RetryBudget, config: &RunConfig) -> String {
    format!(
        "budget: decomposition {}/{}, plan revision {}/{}, proof {}/{}",
        b.attempt,
        config.max_decompositions,
        b.revision,
        config.max_plan_revisions,
        b.proof,
        config.max_proofs_per_plan
    )
}

fn init(ui: &mut Ui<'_>, out: &Path) -> i32 {
    if out.exists() {
        return ui.fail(format_args!("{} already exists", out.display()));
    }
    match fs::write(out, DEFAULT_CONFIG) {
        Ok(()) => {
            let _ = writeln!(ui.out, "wrote {}", out.display());
            EXIT_OK
        }
        Err(e) => ui.fail(format_args!("cannot write {}: {e}", out.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = dispatch(std::iter::once("proofline").chain(args.iter().copied()), &mut out, &mut err, false);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_error_exits_one() {
        let (code, _, err) = run(&["frobnicate"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("Usage"));
        assert_eq!(run(&[]).0, EXIT_ERROR);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("prove"));
    }

    #[test]
    fn missing_problem_names_the_path() {
        let tmp = tempfile::tempdir().unwrap();
        let missing = tmp.path().join("nope.md");
        let out = tmp.path().join("run");
        let (code, _, err) = run(&[
            "prove",
            "--problem",
            missing.to_str().unwrap(),
            "--config",
            "c.yaml",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains(missing.to_str().unwrap()), "{err}");
        assert!(!out.exists());
    }

    #[test]
    fn init_writes_a_loadable_config_once() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("proofline.yaml");
        assert_eq!(run(&["init", "--out", path.to_str().unwrap()]).0, EXIT_OK);
        assert!(load_config(&path).is_ok());
        assert_eq!(run(&["init", "--out", path.to_str().unwrap()]).0, EXIT_ERROR);
    }

    #[test]
    fn status_on_a_plain_directory_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let (code, _, err) = run(&["status", tmp.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("not a run directory"));
    }

    #[test]
    fn colour_is_optional() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let ui = Ui { out: &mut out, err: &mut err, color: true };
        assert_eq!(ui.good("ok"), "\x1b[32mok\x1b[0m");
        let ui = Ui { out: &mut out, err: &mut err, color: false };
        assert_eq!(ui.bad("no"), "no");
    }
}
