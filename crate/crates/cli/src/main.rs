use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgl_core::{Database, Diagnostic, RenderConfig, ReplacePolicy, RunOptions, Severity};
use sgl_service::AppState;

/// Stable exit codes for scripting.
mod exit {
    pub const STATEMENT: u8 = 1;
    pub const INGESTION: u8 = 2;
    pub const SERVICE: u8 = 3;
    /// Malformed command line.
    pub const USAGE: u8 = 64;
}

#[derive(Parser)]
#[command(name = "sgl", version, about = "Render SQL-style grammar-of-graphics statements to SVG")]
struct Cli {
    /// SQLite database file; in-memory when unset.
    #[arg(long, global = true, env = "SGL_DB_PATH")]
    db: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a CSV file as a table.
    Load {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        table: String,
        /// Fail instead of replacing an existing table.
        #[arg(long)]
        no_replace: bool,
    },
    /// Execute one statement and write the SVG.
    Run(RunArgs),
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "SGL_PORT", default_value_t = sgl_service::DEFAULT_PORT)]
        port: u16,
        #[command(flatten)]
        tables: Preload,
    },
}

#[derive(Args)]
struct Preload {
    /// Load `name=path.csv` before starting; repeatable.
    #[arg(long = "table", value_name = "NAME=PATH", value_parser = parse_table_arg)]
    tables: Vec<(String, PathBuf)>,
}

#[derive(Args)]
struct RunArgs {
    /// Statement text.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    statement: Option<String>,
    /// File holding the statement, or `-` for standard input.
    #[arg(long)]
    input: Option<String>,
    /// SVG destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Render settings file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[command(flatten)]
    tables: Preload,
}

fn parse_table_arg(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=PATH, got `{s}`"))?;
    Ok((name.to_string(), PathBuf::from(path)))
}

fn report(origin: &str, d: &Diagnostic) {
    let kind = match d.severity {
        Severity::Error => "",
        Severity::Warning => "warning: ",
    };
    eprintln!("{origin}:{}:{}: {kind}{} {}", d.line, d.col, d.code, d.message);
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("sgl: {message}");
    ExitCode::from(code)
}

fn open_db(path: Option<&Path>) -> Result<Database, Diagnostic> {
    match path {
        Some(p) => Database::open(p),
        None => Database::open_in_memory(),
    }
}

fn preload(db: &Database, tables: &Preload) -> Result<(), ExitCode> {
    for (name, path) in &tables.tables {
        if let Err(d) = db.load_csv_path(path, name, ReplacePolicy::Replace) {
            report(&path.display().to_string(), &d);
            return Err(ExitCode::from(exit::INGESTION));
        }
    }
    Ok(())
}

fn load(db: Option<&Path>, file: &Path, table: &str, no_replace: bool) -> ExitCode {
    let db = match open_db(db) {
        Ok(db) => db,
        Err(d) => return fail(exit::INGESTION, d.message),
    };
    let policy = if no_replace {
        ReplacePolicy::Forbid
    } else {
        ReplacePolicy::Replace
    };
    match db.load_csv_path(file, table, policy) {
        Ok(schema) => {
            println!("{}: {} columns", schema.name, schema.columns.len());
            ExitCode::SUCCESS
        }
        Err(d) => {
            report(&file.display().to_string(), &d);
            ExitCode::from(exit::INGESTION)
        }
    }
}

fn read_statement(args: &RunArgs) -> Result<(String, String), String> {
    match (&args.statement, args.input.as_deref()) {
        (Some(text), _) => Ok(("<statement>".to_string(), text.clone())),
        (None, Some("-")) => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| format!("cannot read standard input: {e}"))?;
            Ok(("<stdin>".to_string(), text))
        }
        (None, Some(path)) => std::fs::read_to_string(path)
            .map(|text| (path.to_string(), text))
            .map_err(|e| format!("cannot read {path}: {e}")),
        (None, None) => Err("one of --statement or --input is required".to_string()),
    }
}

fn run_options(args: &RunArgs) -> Result<RunOptions, String> {
    let mut options = RunOptions::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        options.render = RenderConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(seed) = args.seed {
        options.engine.seed = seed;
    }
    if let Some(w) = args.width {
        options.render.width = w;
    }
    if let Some(h) = args.height {
        options.render.height = h;
    }
    options.render.validate().map_err(|e| e.to_string())?;
    Ok(options)
}

fn run(db: Option<&Path>, args: &RunArgs) -> ExitCode {
    let (origin, text) = match read_statement(args) {
        Ok(s) => s,
        Err(e) => return fail(exit::STATEMENT, e),
    };
    let options = match run_options(args) {
        Ok(o) => o,
        Err(e) => return fail(exit::STATEMENT, e),
    };
    let db = match open_db(db) {
        Ok(db) => db,
        Err(d) => return fail(exit::STATEMENT, d.message),
    };
    if let Err(code) = preload(&db, &args.tables) {
        return code;
    }
    let out = match sgl_core::run_statement(&db, &text, &options) {
        Ok(out) => out,
        Err(diagnostics) => {
            for d in &diagnostics {
                report(&origin, d);
            }
            return ExitCode::from(exit::STATEMENT);
        }
    };
    for w in &out.warnings {
        report(&origin, w);
    }
    let written = match &args.output {
        Some(path) => std::fs::write(path, &out.svg).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(out.svg.as_bytes())
            .map_err(|e| format!("cannot write standard output: {e}")),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(exit::STATEMENT, e),
    }
}

fn serve(db: Option<&Path>, port: u16, tables: &Preload) -> ExitCode {
    let db = match open_db(db) {
        Ok(db) => db,
        Err(d) => return fail(exit::SERVICE, d.message),
    };
    if let Err(code) = preload(&db, tables) {
        return code;
    }
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => return fail(exit::SERVICE, e),
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind(("127.0.0.1", port)).await {
            Ok(l) => l,
            Err(e) => return fail(exit::SERVICE, format!("cannot bind 127.0.0.1:{port}: {e}")),
        };
        let addr = listener.local_addr().map(|a| a.to_string()).unwrap_or_default();
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        match sgl_service::serve(listener, AppState::new(db)).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(exit::SERVICE, e),
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let db = cli.db.as_deref();
    match &cli.command {
        Command::Load { file, table, no_replace } => load(db, file, table, *no_replace),
        Command::Run(args) => run(db, args),
        Command::Serve { port, tables } => serve(db, *port, tables),
    }
}
