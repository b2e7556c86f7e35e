//! Template-based code generation.
//!
//! A generator configuration names per-action-type and per-component-type
//! templates plus any number of main templates. Each main template is
//! rendered once with `$Program` bound and produces one output file; it pulls
//! in action fragments with `#insert($action)`.

mod config;
mod render;
mod template;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    action_template_id, component_template_id, load_generator_config, ConfigError, GeneratorConfig,
    MainTemplate,
};
pub use render::{
    render, Location, RenderContext, RenderError, RenderMode, Rendered, TemplateLibrary, Value,
};
pub use template::{
    escape_template_text, parse_template, Node, Reference, SetValue, Template, TemplateError,
};

use crate::dsl::RobotClassDsl;
use crate::model::{ModelError, Program};
use crate::validate::{validate, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("program has validation errors:\n{0}")]
    InvalidProgram(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("output name {0:?} is not a plain file name")]
    BadOutputName(String),
    #[error("two main templates both produce `{0}`")]
    DuplicateOutput(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Generated {
    /// Output file name to contents.
    pub files: BTreeMap<String, String>,
    pub warnings: Vec<RenderError>,
}

fn plain_file_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name.trim() == name
        && !name.contains(['/', '\\', '\n', '\r', '\0'])
}

/// Renders every main template of `config` for `program`.
pub fn generate(
    program: &Program,
    dsl: &RobotClassDsl,
    config: &GeneratorConfig,
    mode: RenderMode,
) -> Result<Generated, GenerateError> {
    let report = validate(program, dsl);
    if !report.ok() {
        return Err(GenerateError::InvalidProgram(report));
    }
    let ctx = RenderContext::for_program(program, dsl)?;
    let library = config.library();
    let mut out = Generated::default();
    for main in &config.mains {
        let name = render(&main.output, &ctx, &library, mode)?;
        let body = render(&main.template, &ctx, &library, mode)?;
        if !plain_file_name(&name.text) {
            return Err(GenerateError::BadOutputName(name.text));
        }
        if out.files.contains_key(&name.text) {
            return Err(GenerateError::DuplicateOutput(name.text));
        }
        out.warnings.extend(name.warnings);
        out.warnings.extend(body.warnings);
        out.files.insert(name.text, body.text);
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("refusing to overwrite existing file(s): {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    Exists(Vec<PathBuf>),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Writes `files` into `dir`, creating it if needed.
///
/// Without `force`, nothing is written when any target already exists.
pub fn write_outputs(
    dir: &Path,
    files: &BTreeMap<String, String>,
    force: bool,
) -> Result<Vec<PathBuf>, WriteError> {
    let targets: Vec<PathBuf> = files.keys().map(|n| dir.join(n)).collect();
    if !force {
        let existing: Vec<PathBuf> = targets.iter().filter(|p| p.exists()).cloned().collect();
        if !existing.is_empty() {
            return Err(WriteError::Exists(existing));
        }
    }
    std::fs::create_dir_all(dir).map_err(|source| WriteError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (path, text) in targets.iter().zip(files.values()) {
        std::fs::write(path, text).map_err(|source| WriteError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(targets)
}
