//! Generator configuration files.
//!
//! ```xml
//! <Generator name="csharp-mrds">
//!   <ActionTemplate actionType="MoveManipulator" file="templates/move_manipulator.vt"/>
//!   <ComponentTemplate componentType="Manipulator" file="templates/manipulator.vt"/>
//!   <Main file="templates/main.vt" output="${Program.getName()}.cs"/>
//! </Generator>
//! ```
//!
//! Relative template paths are tried against each search root in turn.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::render::TemplateLibrary;
use super::template::{Template, TemplateError};
use crate::xml::{self, XmlError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("template file `{file}` not found (searched {})", display_roots(.searched))]
    MissingTemplateFile {
        file: String,
        searched: Vec<PathBuf>,
    },
    #[error("cannot read template `{}`: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Template {
        path: PathBuf,
        #[source]
        source: TemplateError,
    },
    #[error("line {line}: more than one template for {kind} `{key}`")]
    DuplicateTemplate {
        kind: &'static str,
        key: String,
        line: u32,
    },
}

fn display_roots(roots: &[PathBuf]) -> String {
    if roots.is_empty() {
        return "no roots".into();
    }
    roots
        .iter()
        .map(|r| r.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MainTemplate {
    pub template: Template,
    /// One-line template producing the output file name.
    pub output: Template,
    pub output_pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeneratorConfig {
    pub name: String,
    pub action_templates: BTreeMap<String, Template>,
    pub component_templates: BTreeMap<String, Template>,
    pub mains: Vec<MainTemplate>,
}

impl GeneratorConfig {
    /// Action and component templates under their `#insert` ids.
    pub fn library(&self) -> TemplateLibrary {
        let actions = self.action_templates.values();
        let components = self.component_templates.values();
        actions
            .chain(components)
            .map(|t| (t.id().to_string(), t.clone()))
            .collect()
    }
}

pub fn action_template_id(action_type: &str) -> String {
    format!("action:{action_type}")
}

pub fn component_template_id(component_type: &str) -> String {
    format!("component:{component_type}")
}

fn resolve(file: &str, roots: &[PathBuf]) -> Result<PathBuf, ConfigError> {
    let path = Path::new(file);
    if path.is_absolute() {
        if path.is_file() {
            return Ok(path.to_path_buf());
        }
    } else if let Some(found) = roots.iter().map(|r| r.join(path)).find(|p| p.is_file()) {
        return Ok(found);
    }
    Err(ConfigError::MissingTemplateFile {
        file: file.to_string(),
        searched: roots.to_vec(),
    })
}

fn load_template(id: String, file: &str, roots: &[PathBuf]) -> Result<Template, ConfigError> {
    let path = resolve(file, roots)?;
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
        path: path.clone(),
        source,
    })?;
    Template::parse(id, &text).map_err(|source| ConfigError::Template { path, source })
}

/// Parses a generator configuration and loads every template it names.
pub fn load_generator_config(
    source: &str,
    search_roots: &[PathBuf],
) -> Result<GeneratorConfig, ConfigError> {
    let doc = xml::parse(source)?;
    let root = doc.root_element();
    xml::expect_tag(root, "Generator")?;
    let mut config = GeneratorConfig {
        name: root.attribute("name").unwrap_or_default().to_string(),
        ..GeneratorConfig::default()
    };
    for node in xml::elements(root)? {
        let line = xml::line(node);
        match node.tag_name().name() {
            "ActionTemplate" => {
                let key = xml::attr(node, "actionType")?.to_string();
                let t = load_template(
                    action_template_id(&key),
                    xml::attr(node, "file")?,
                    search_roots,
                )?;
                if config.action_templates.insert(key.clone(), t).is_some() {
                    return Err(ConfigError::DuplicateTemplate {
                        kind: "action type",
                        key,
                        line,
                    });
                }
            }
            "ComponentTemplate" => {
                let key = xml::attr(node, "componentType")?.to_string();
                let t = load_template(
                    component_template_id(&key),
                    xml::attr(node, "file")?,
                    search_roots,
                )?;
                if config.component_templates.insert(key.clone(), t).is_some() {
                    return Err(ConfigError::DuplicateTemplate {
                        kind: "component type",
                        key,
                        line,
                    });
                }
            }
            "Main" => {
                let file = xml::attr(node, "file")?;
                let pattern = xml::attr(node, "output")?;
                let template = load_template(format!("main:{file}"), file, search_roots)?;
                let output =
                    Template::parse(format!("output:{file}"), pattern).map_err(|source| {
                        ConfigError::Template {
                            path: PathBuf::from(file),
                            source,
                        }
                    })?;
                config.mains.push(MainTemplate {
                    template,
                    output,
                    output_pattern: pattern.to_string(),
                });
            }
            _ => return Err(xml::unexpected(node, "Generator").into()),
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roots(dir: &tempfile::TempDir) -> Vec<PathBuf> {
        vec![dir.path().to_path_buf()]
    }

    #[test]
    fn empty_generator() {
        let c = load_generator_config("<Generator/>", &[]).unwrap();
        assert_eq!(c, GeneratorConfig::default());
        assert!(c.library().is_empty());
    }

    #[test]
    fn loads_templates_from_roots() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("t")).unwrap();
        std::fs::write(dir.path().join("t/mm.vt"), "$Action.name\n").unwrap();
        std::fs::write(
            dir.path().join("t/main.vt"),
            "#foreach($a in $Program.actions)\n#insert($a)\n#end\n",
        )
        .unwrap();
        let src = r#"<Generator name="g">
  <ActionTemplate actionType="MoveManipulator" file="t/mm.vt"/>
  <Main file="t/main.vt" output="${Program.getName()}.cs"/>
</Generator>"#;
        let empty = tempfile::tempdir().unwrap();
        let c = load_generator_config(src, &[empty.path().to_path_buf(), dir.path().to_path_buf()])
            .unwrap();
        assert_eq!(c.name, "g");
        assert_eq!(c.action_templates.len(), 1);
        assert_eq!(c.mains.len(), 1);
        assert_eq!(c.mains[0].output_pattern, "${Program.getName()}.cs");
        assert!(c.library().contains_key("action:MoveManipulator"));
    }

    #[test]
    fn missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_generator_config(
            r#"<Generator><Main file="nope.vt" output="x"/></Generator>"#,
            &roots(&dir),
        )
        .unwrap_err();
        assert!(
            matches!(err, ConfigError::MissingTemplateFile { ref file, .. } if file == "nope.vt")
        );
    }

    #[test]
    fn template_errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.vt"), "ok\n#foreach($x in $y)\n").unwrap();
        let err = load_generator_config(
            r#"<Generator><Main file="bad.vt" output="x"/></Generator>"#,
            &roots(&dir),
        )
        .unwrap_err();
        assert!(err.to_string().contains("bad.vt"), "{err}");
        assert!(matches!(
            err,
            ConfigError::Template {
                source: TemplateError::UnclosedBlock { line: 2, .. },
                ..
            }
        ));
    }

    #[test]
    fn duplicate_and_unknown_entries() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.vt"), "a").unwrap();
        let src = r#"<Generator>
  <ActionTemplate actionType="X" file="a.vt"/>
  <ActionTemplate actionType="X" file="a.vt"/>
</Generator>"#;
        assert!(matches!(
            load_generator_config(src, &roots(&dir)),
            Err(ConfigError::DuplicateTemplate { line: 3, .. })
        ));
        assert!(matches!(
            load_generator_config("<Generator><Other/></Generator>", &[]),
            Err(ConfigError::Xml(_))
        ));
        assert!(matches!(
            load_generator_config("<Generator>", &[]),
            Err(ConfigError::Xml(_))
        ));
    }
}
