//! SGL: a SQL-styled grammar of graphics.
//!
//! A statement flows through [`lexer`] → [`parser`] → [`analyzer`] →
//! [`pipeline`] (fed by [`datasource`]) → [`renderer`]. [`engine`] wires the
//! stages together for the CLI and HTTP service.

pub mod analyzer;
pub mod ast;
pub mod datasource;
pub mod diagnostic;
pub mod engine;
pub mod lexer;
pub mod parser;
pub mod pipeline;
pub mod renderer;

pub use analyzer::{analyze, Coord, ResolvedGraphic, ScaleKind};
pub use ast::*;
pub use datasource::{ColumnType, Database, ReplacePolicy, TableSchema};
pub use diagnostic::{Code, Diagnostic, Severity, Span};
pub use engine::{run_statement, RunOptions, RunOutput};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_str, unparse};
pub use pipeline::{execute, EngineConfig, ExecutionResult};
pub use renderer::{render, RenderConfig};
