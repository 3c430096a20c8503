//! End-to-end statement execution shared by the CLI and the HTTP service.

use crate::analyzer::{analyze, ResolvedGraphic};
use crate::datasource::Database;
use crate::diagnostic::Diagnostic;
use crate::parser::parse_str;
use crate::pipeline::{execute, EngineConfig, ExecutionResult};
use crate::renderer::{render, RenderConfig};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub engine: EngineConfig,
    pub render: RenderConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub svg: String,
    pub warnings: Vec<Diagnostic>,
    pub result: ExecutionResult,
}

/// Parse and analyze `sgl` against the tables in `db`.
pub fn compile(db: &Database, sgl: &str) -> Result<ResolvedGraphic, Vec<Diagnostic>> {
    let stmt = parse_str(sgl).map_err(|d| vec![d])?;
    analyze(&stmt, db)
}

/// Run a statement through every stage and render it to SVG.
pub fn run_statement(db: &Database, sgl: &str, options: &RunOptions) -> Result<RunOutput, Vec<Diagnostic>> {
    let graphic = compile(db, sgl)?;
    let result = execute(&graphic, db, &options.engine).map_err(|d| vec![d])?;
    let svg = render(&result, &options.render);
    Ok(RunOutput {
        svg,
        warnings: result.warnings.clone(),
        result,
    })
}
