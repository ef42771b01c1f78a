//! The `vartrace` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use vartrace_core::baseline::{generate_baseline_with, record_all_with, BaselineError, ConcreteTrace};
use vartrace_core::export::{to_dot, to_json, to_text};
use vartrace_core::minilang::{parse, Limits, ParseError, Program};
use vartrace_core::projection::{project, projection_report, ProjectionError};
use vartrace_core::tracegraph::{NodeKind, VariationalTrace};
use vartrace_core::varinterp::{run_variational_with, Recording};

use crate::server;

#[derive(Parser, Debug)]
#[command(name = "vartrace", version, about = "Variational traces for configurable programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a program over all its configurations and print the trace.
    Run(RunArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Source file of the subject program.
    pub file: PathBuf,
    /// Generate the trace by running every configuration separately.
    #[arg(long)]
    pub baseline: bool,
    /// Focus the trace on these options (comma separated; empty for none).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub project: Option<Vec<String>>,
    /// Report the size of the projections on every k-subset of options.
    #[arg(long, value_name = "K")]
    pub project_report: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print trace size and step counters to standard error.
    #[arg(long)]
    pub stats: bool,
    /// Step budget; the default is one million.
    #[arg(long, value_name = "N")]
    pub max_steps: Option<u64>,
    /// Serve the trace over HTTP on this port instead of printing it.
    #[arg(long, value_name = "PORT")]
    pub serve: Option<u16>,
    /// Write one JSON-lines log per configuration into this directory.
    #[arg(long, value_name = "DIR")]
    pub dump_logs: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Json,
    Text,
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Some configuration raised a runtime error; the trace was still written.
    pub const SUBJECT_EXCEPTION: i32 = 1;
    pub const USAGE: i32 = 2;
    /// Step budget, recursion depth or configuration cap exceeded.
    pub const LIMIT: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{file}:{source}")]
    Parse { file: String, source: ParseError },
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Baseline(_) | CliError::Budget(_) => exit::LIMIT,
            _ => exit::USAGE,
        }
    }
}

pub fn render(t: &VariationalTrace, format: Format) -> String {
    match format {
        Format::Dot => to_dot(t),
        Format::Json => {
            let mut s = to_json(t);
            s.push('\n');
            s
        }
        Format::Text => to_text(t),
    }
}

pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse(&src, &file).map_err(|source| CliError::Parse { file, source })
}

fn write_logs(dir: &Path, traces: &[ConcreteTrace]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in traces {
        std::fs::write(dir.join(format!("{}.jsonl", t.label())), t.to_jsonl())?;
    }
    Ok(())
}

fn emit(args: &RunArgs, text: &str, stdout: &mut dyn Write) -> std::io::Result<()> {
    match &args.out {
        Some(path) => std::fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

/// Runs the `run` subcommand and returns the exit code.
pub fn execute(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match run(args, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn run(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let p = load_program(&args.file)?;
    let limits = Limits {
        max_steps: args.max_steps.unwrap_or(Limits::default().max_steps),
        ..Limits::default()
    };

    let mut logs = Vec::new();
    let trace = if args.baseline {
        let keep = args.dump_logs.is_some();
        let run = generate_baseline_with(&p, limits, |t| {
            if keep {
                logs.push(t.clone());
            }
        })?;
        if args.stats {
            let c = run.counters;
            writeln!(
                stderr,
                "configurations: {}\nconcrete steps: {}\nretained events: {}",
                c.configurations, c.concrete_steps, c.retained_events
            )?;
        }
        run.trace
    } else {
        if args.dump_logs.is_some() {
            logs = record_all_with(&p, limits)?;
        }
        match run_variational_with(&p, limits, Recording::Reduced) {
            Ok(run) => {
                if args.stats {
                    let c = run.counters;
                    writeln!(
                        stderr,
                        "variational steps: {}\npeak retained nodes: {}",
                        c.variational_steps, c.peak_retained_nodes
                    )?;
                }
                run.trace
            }
            Err(e) => {
                // the partial trace is still useful for diagnosis
                emit(args, &render(&e.partial.trace, args.format), stdout)?;
                return Err(CliError::Budget(e.error.to_string()));
            }
        }
    };
    if let Some(dir) = &args.dump_logs {
        write_logs(dir, &logs)?;
    }
    let exceptions = trace.nodes().iter().any(|n| n.kind() == NodeKind::Exception);

    if let Some(k) = args.project_report {
        let report = projection_report(&trace, k)?;
        writeln!(stdout, "{report}")?;
        if let Some(path) = &args.out {
            std::fs::write(path, report.to_csv())?;
        }
        return Ok(if exceptions { exit::SUBJECT_EXCEPTION } else { exit::OK });
    }

    let focus: Option<Vec<String>> = args
        .project
        .as_ref()
        .map(|f| f.iter().filter(|s| !s.is_empty()).cloned().collect());

    if let Some(port) = args.serve {
        let state = server::AppState::new(p, trace, focus)?;
        writeln!(stderr, "serving on http://127.0.0.1:{port}")?;
        let rt = tokio::runtime::Runtime::new()?;
        rt.block_on(server::serve(state, port))?;
        return Ok(exit::OK);
    }

    let shown = match &focus {
        Some(f) => project(&trace, f)?,
        None => trace,
    };
    if args.stats {
        let s = shown.stats();
        writeln!(stderr, "decisions: {}\nstatements: {}", s.decisions, s.statements)?;
    }
    emit(args, &render(&shown, args.format), stdout)?;
    Ok(if exceptions { exit::SUBJECT_EXCEPTION } else { exit::OK })
}

