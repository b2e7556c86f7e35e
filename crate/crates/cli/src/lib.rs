//! The `seqc` command line.
//!
//! Exit status: 0 on success, 1 when the program has error findings or
//! generation fails on it, 2 for usage, I/O and parse failures. Reports go
//! to stdout, diagnostics to stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use seqc_core::codegen::{self, ConfigError, GenerateError, WriteError};
use seqc_core::program_io::ProgramDocument;
use seqc_core::sim::SimError;
use seqc_core::{
    export_dot, load_dsl, load_program, simulate, validate, DslError, DurationMap, Program,
    ProgramIoError, RenderMode, RobotClassDsl, Ticks, ValidationReport, XmlError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

/// Extra template search roots, separated like `PATH`.
pub const TEMPLATE_PATH_VAR: &str = "SEQC_TEMPLATE_PATH";

#[derive(Debug, Parser)]
#[command(
    name = "seqc",
    version,
    about = "Validate, simulate and generate code for robot action sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Inputs {
    /// Robot-class DSL the program targets.
    #[arg(long, value_name = "PATH")]
    dsl: PathBuf,
    /// Program XML.
    program: PathBuf,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a program for completeness and forbidden parallelism.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
        /// Treat warnings like errors for the exit status.
        #[arg(long)]
        strict_warnings: bool,
    },
    /// Run the deterministic scheduler and print the timeline.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        /// JSON file: {"default": N, "durations": {"Action": N}}.
        #[arg(long, value_name = "FILE")]
        durations: Option<PathBuf>,
        /// Per-action duration override, repeatable.
        #[arg(long = "duration", value_name = "NAME=TICKS")]
        duration: Vec<String>,
        /// Write the trace as JSON.
        #[arg(long, value_name = "OUT")]
        trace: Option<PathBuf>,
        /// Simulate even if validation fails; mutex pairs are serialized.
        #[arg(long)]
        force: bool,
    },
    /// Render target source files from templates.
    Generate {
        #[command(flatten)]
        inputs: Inputs,
        /// Generator configuration XML.
        #[arg(long, value_name = "CONFIG")]
        templates: PathBuf,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
        /// Overwrite existing output files.
        #[arg(long)]
        force: bool,
        /// Render unresolved references as empty text instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Export the dependency graph.
    Graph {
        /// Resolve the program against this DSL first.
        #[arg(long, value_name = "PATH")]
        dsl: Option<PathBuf>,
        program: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Dot,
}

/// A run that stops early with a message for stderr.
struct Exit {
    code: i32,
    message: String,
}

impl Exit {
    fn failure(message: impl Into<String>) -> Self {
        Exit {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }

    fn findings(message: impl Into<String>) -> Self {
        Exit {
            code: EXIT_FINDINGS,
            message: message.into(),
        }
    }
}

type Outcome = Result<i32, Exit>;

/// Runs one command line and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Validate {
            inputs,
            strict_warnings,
        } => cmd_validate(&inputs, strict_warnings, stdout),
        Command::Simulate {
            inputs,
            durations,
            duration,
            trace,
            force,
        } => cmd_simulate(
            &inputs,
            durations.as_deref(),
            &duration,
            trace.as_deref(),
            force,
            stdout,
        ),
        Command::Generate {
            inputs,
            templates,
            out,
            force,
            lenient,
        } => cmd_generate(&inputs, &templates, &out, force, lenient, stdout, stderr),
        Command::Graph {
            dsl,
            program,
            format,
            json,
        } => cmd_graph(dsl.as_deref(), &program, format, json, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(exit) => {
            let _ = writeln!(stderr, "seqc: {}", exit.message);
            exit.code
        }
    }
}

fn read(path: &Path) -> Result<String, Exit> {
    std::fs::read_to_string(path).map_err(|e| Exit::failure(format!("{}: {e}", path.display())))
}

fn xml_diagnostic(path: &Path, e: &XmlError) -> String {
    let message = match e {
        XmlError::Syntax { message, .. } | XmlError::Malformed { message, .. } => message,
    };
    format!("{}:{}: {message}", path.display(), e.line())
}

fn read_dsl(path: &Path) -> Result<RobotClassDsl, Exit> {
    load_dsl(&read(path)?).map_err(|e| match &e {
        DslError::Xml(x) => Exit::failure(xml_diagnostic(path, x)),
        _ => Exit::failure(format!("{}: {e}", path.display())),
    })
}

fn program_error(path: &Path, e: ProgramIoError) -> Exit {
    match &e {
        ProgramIoError::Xml(x) => Exit::failure(xml_diagnostic(path, x)),
        _ => Exit::failure(format!("{}: {e}", path.display())),
    }
}

fn read_program(path: &Path, dsl: &RobotClassDsl) -> Result<Program, Exit> {
    load_program(&read(path)?, dsl).map_err(|e| program_error(path, e))
}

fn load(inputs: &Inputs) -> Result<(RobotClassDsl, Program), Exit> {
    let dsl = read_dsl(&inputs.dsl)?;
    let program = read_program(&inputs.program, &dsl)?;
    Ok((dsl, program))
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), Exit> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Exit::failure(format!("cannot write output: {e}")))
}

fn print_report(stdout: &mut dyn Write, report: &ValidationReport, json: bool) -> Result<(), Exit> {
    if json {
        emit(stdout, &(report.to_json() + "\n"))
    } else {
        emit(stdout, &format!("{}\n", report.to_string().trim_end()))
    }
}

fn cmd_validate(inputs: &Inputs, strict_warnings: bool, stdout: &mut dyn Write) -> Outcome {
    let (dsl, program) = load(inputs)?;
    let report = validate(&program, &dsl);
    print_report(stdout, &report, inputs.json)?;
    let failed = !report.ok() || (strict_warnings && report.has_warnings());
    Ok(if failed { EXIT_FINDINGS } else { EXIT_OK })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DurationsFile {
    default: Option<Ticks>,
    #[serde(default)]
    durations: BTreeMap<String, Ticks>,
}

fn durations(file: Option<&Path>, overrides: &[String]) -> Result<DurationMap, Exit> {
    let mut map = DurationMap::default();
    if let Some(path) = file {
        let parsed: DurationsFile = serde_json::from_str(&read(path)?)
            .map_err(|e| Exit::failure(format!("{}: {e}", path.display())))?;
        if let Some(d) = parsed.default {
            map = DurationMap::uniform(d)
                .map_err(|e| Exit::failure(format!("{}: {e}", path.display())))?;
        }
        for (name, ticks) in parsed.durations {
            map.insert(name, ticks)
                .map_err(|e| Exit::failure(format!("{}: {e}", path.display())))?;
        }
    }
    for item in overrides {
        let parsed = item
            .split_once('=')
            .and_then(|(name, t)| Some((name.trim(), t.trim().parse::<Ticks>().ok()?)))
            .filter(|(name, _)| !name.is_empty());
        let Some((name, ticks)) = parsed else {
            return Err(Exit::failure(format!(
                "--duration expects NAME=TICKS, got `{item}`"
            )));
        };
        map.insert(name, ticks)
            .map_err(|e| Exit::failure(format!("--duration {item}: {e}")))?;
    }
    Ok(map)
}

fn cmd_simulate(
    inputs: &Inputs,
    durations_file: Option<&Path>,
    overrides: &[String],
    trace_out: Option<&Path>,
    force: bool,
    stdout: &mut dyn Write,
) -> Outcome {
    let (dsl, program) = load(inputs)?;
    let map = durations(durations_file, overrides)?;
    let trace = match simulate(&program, &dsl, &map, force) {
        Ok(t) => t,
        Err(SimError::InvalidProgram(report)) => {
            print_report(stdout, &report, inputs.json)?;
            return Err(Exit::findings(
                "program is invalid; use --force to simulate anyway",
            ));
        }
        Err(SimError::Model(e)) => return Err(Exit::failure(e.to_string())),
    };
    if let Some(path) = trace_out {
        std::fs::write(path, trace.to_json() + "\n")
            .map_err(|e| Exit::failure(format!("{}: {e}", path.display())))?;
    }
    if inputs.json {
        emit(stdout, &(trace.to_json() + "\n"))?;
    } else {
        emit(stdout, &trace.timeline())?;
    }
    Ok(EXIT_OK)
}

/// The config's own directory, then each entry of `SEQC_TEMPLATE_PATH`.
fn template_roots(config: &Path) -> Vec<PathBuf> {
    let mut roots = vec![config.parent().map(Path::to_path_buf).unwrap_or_default()];
    if let Some(extra) = std::env::var_os(TEMPLATE_PATH_VAR) {
        roots.extend(std::env::split_paths(&extra).filter(|p| !p.as_os_str().is_empty()));
    }
    roots
}

fn cmd_generate(
    inputs: &Inputs,
    templates: &Path,
    out: &Path,
    force: bool,
    lenient: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Outcome {
    let (dsl, program) = load(inputs)?;
    let config = codegen::load_generator_config(&read(templates)?, &template_roots(templates))
        .map_err(|e| match &e {
            ConfigError::Xml(x) => Exit::failure(xml_diagnostic(templates, x)),
            _ => Exit::failure(format!("{}: {e}", templates.display())),
        })?;
    let mode = if lenient {
        RenderMode::Lenient
    } else {
        RenderMode::Strict
    };
    let generated = match codegen::generate(&program, &dsl, &config, mode) {
        Ok(g) => g,
        Err(GenerateError::InvalidProgram(report)) => {
            print_report(stdout, &report, inputs.json)?;
            return Err(Exit::findings("program is invalid; nothing generated"));
        }
        Err(e) => return Err(Exit::findings(e.to_string())),
    };
    for w in &generated.warnings {
        let _ = writeln!(stderr, "seqc: warning: {w}");
    }
    let written = codegen::write_outputs(out, &generated.files, force).map_err(|e| match e {
        WriteError::Exists(_) => Exit::failure(format!("{e}; pass --force to overwrite")),
        WriteError::Io { .. } => Exit::failure(e.to_string()),
    })?;
    if inputs.json {
        let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        let warnings: Vec<String> = generated.warnings.iter().map(ToString::to_string).collect();
        let doc = serde_json::json!({ "files": files, "warnings": warnings });
        emit(
            stdout,
            &(serde_json::to_string_pretty(&doc).expect("json") + "\n"),
        )?;
    } else {
        for p in &written {
            emit(stdout, &format!("{}\n", p.display()))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_graph(
    dsl_path: Option<&Path>,
    program_path: &Path,
    _format: GraphFormat,
    json: bool,
    stdout: &mut dyn Write,
) -> Outcome {
    let program = match dsl_path {
        Some(d) => read_program(program_path, &read_dsl(d)?)?,
        None => ProgramDocument::parse(&read(program_path)?)
            .and_then(ProgramDocument::into_program_unchecked)
            .map_err(|e| program_error(program_path, e))?,
    };
    if json {
        let nodes: Vec<_> = program
            .actions()
            .map(|a| serde_json::json!({"name": a.name(), "type": a.action_type(), "resource": a.resource()}))
            .collect();
        let edges: Vec<_> = program
            .actions()
            .flat_map(|a| {
                a.predecessors()
                    .map(move |p| serde_json::json!([p, a.name()]))
            })
            .collect();
        let doc = serde_json::json!({ "name": program.name(), "nodes": nodes, "edges": edges });
        emit(
            stdout,
            &(serde_json::to_string_pretty(&doc).expect("json") + "\n"),
        )?;
    } else {
        emit(stdout, &export_dot(&program))?;
    }
    Ok(EXIT_OK)
}
