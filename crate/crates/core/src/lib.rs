//! Toolchain for concurrent robot action sequences.
//!
//! Programs are dependency graphs of actions running on resource instances of
//! a robot class. This crate loads robot-class DSLs and programs from XML,
//! validates programs for completeness and forbidden overlaps, simulates
//! their parallel execution, and generates target code from templates.

pub mod codegen;
pub mod dsl;
pub mod model;
pub mod program_io;
pub mod sim;
pub mod validate;
mod xml;

pub use codegen::{
    generate, load_generator_config, parse_template, render, write_outputs, GenerateError,
    GeneratorConfig, RenderContext, RenderMode, Template,
};
pub use dsl::{load_dsl, save_dsl, DslError, RobotClassDsl};
pub use model::{
    ActionInstance, Binding, DependencyGraph, DurationMap, Literal, ModelError, Program,
    ResourceInstance, Ticks, VariableDecl,
};
pub use program_io::{export_dot, load_program, save_program, ProgramIoError};
pub use sim::{
    makespan, simulate, verify_trace, EventKind, ExecutionTrace, Interval, SimError, TraceEvent,
    TraceViolation, ViolationRule,
};
pub use validate::{validate, Finding, FindingCode, Severity, ValidationReport};
pub use xml::XmlError;
