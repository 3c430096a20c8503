//! Tabular data access backed by an embedded SQLite database.
//!
//! Tables are populated from CSV files; statements read either a whole table
//! or the result of a raw SQL subquery. A single connection sits behind a
//! mutex, so ingestion is atomic with respect to concurrent queries: a query
//! observes the catalog either before or after a load, never a partial table.

mod csv_load;
mod table;

use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use rusqlite::functions::FunctionFlags;
use rusqlite::types::ValueRef;
use rusqlite::Connection;

use crate::ast::DataSource;
use crate::diagnostic::{Code, Diagnostic, Span};

pub use csv_load::{infer_cell_type, is_valid_table_name};
pub use table::{Column, ColumnData, ColumnSchema, ColumnTable, ColumnType, TableError, TableSchema};

/// Environment variable naming the database file; unset means in-memory.
pub const DB_PATH_ENV: &str = "SGL_DB_PATH";

/// What to do when `load_csv` targets an existing table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplacePolicy {
    #[default]
    Replace,
    Forbid,
}

/// Abstraction over schema lookup so the analyzer can run without a backend.
pub trait SchemaProvider {
    fn schema_of(&self, source: &DataSource, span: Span) -> Result<TableSchema, Diagnostic>;
}

impl SchemaProvider for [TableSchema] {
    fn schema_of(&self, source: &DataSource, span: Span) -> Result<TableSchema, Diagnostic> {
        match source {
            DataSource::TableRef(name) => self
                .iter()
                .find(|t| t.name.eq_ignore_ascii_case(name))
                .cloned()
                .ok_or_else(|| no_table(name, span)),
            DataSource::Subquery(_) => Err(Diagnostic::error(
                Code::Sql,
                span,
                "subqueries need a database connection to resolve",
            )),
        }
    }
}

impl SchemaProvider for Vec<TableSchema> {
    fn schema_of(&self, source: &DataSource, span: Span) -> Result<TableSchema, Diagnostic> {
        self.as_slice().schema_of(source, span)
    }
}

fn no_table(name: &str, span: Span) -> Diagnostic {
    Diagnostic::error(Code::NoTable, span, format!("table `{name}` does not exist"))
}

fn backend(err: impl std::fmt::Display) -> Diagnostic {
    Diagnostic::error(Code::Backend, Span::default(), format!("database error: {err}"))
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub struct Database {
    conn: Mutex<Connection>,
}

impl Database {
    pub fn open_in_memory() -> Result<Self, Diagnostic> {
        Self::init(Connection::open_in_memory().map_err(backend)?)
    }

    pub fn open(path: &Path) -> Result<Self, Diagnostic> {
        Self::init(Connection::open(path).map_err(backend)?)
    }

    /// Opens the file named by `SGL_DB_PATH`, or an in-memory database.
    pub fn open_from_env() -> Result<Self, Diagnostic> {
        match std::env::var_os(DB_PATH_ENV) {
            Some(path) if !path.is_empty() => Self::open(Path::new(&path)),
            _ => Self::open_in_memory(),
        }
    }

    fn init(conn: Connection) -> Result<Self, Diagnostic> {
        register_functions(&conn).map_err(backend)?;
        Ok(Database {
            conn: Mutex::new(conn),
        })
    }

    fn lock(&self) -> Result<MutexGuard<'_, Connection>, Diagnostic> {
        self.conn
            .lock()
            .map_err(|_| backend("connection lock poisoned"))
    }

    /// Ingest CSV text as table `name`, inferring column types.
    pub fn load_csv<R: std::io::Read>(
        &self,
        reader: R,
        name: &str,
        policy: ReplacePolicy,
    ) -> Result<TableSchema, Diagnostic> {
        let parsed = csv_load::read_csv(reader, name)?;
        let mut conn = self.lock()?;
        if policy == ReplacePolicy::Forbid && table_exists(&conn, name)? {
            return Err(Diagnostic::error(
                Code::NameCollision,
                Span::new(0, 0, 1, 1),
                format!("table `{name}` already exists and replacement is disabled"),
            ));
        }
        csv_load::store(&mut conn, name, &parsed).map_err(backend)?;
        Ok(TableSchema {
            name: name.to_string(),
            columns: parsed
                .header
                .iter()
                .zip(&parsed.types)
                .map(|(n, t)| ColumnSchema {
                    name: n.clone(),
                    ty: *t,
                })
                .collect(),
            row_count: Some(parsed.rows.len()),
        })
    }

    pub fn load_csv_path(
        &self,
        path: &Path,
        name: &str,
        policy: ReplacePolicy,
    ) -> Result<TableSchema, Diagnostic> {
        let file = std::fs::File::open(path).map_err(|e| {
            Diagnostic::error(
                Code::Io,
                Span::new(0, 0, 1, 1),
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        self.load_csv(std::io::BufReader::new(file), name, policy)
    }

    /// Materialize a data source. `span` locates the source in the statement.
    pub fn fetch(&self, source: &DataSource, span: Span) -> Result<ColumnTable, Diagnostic> {
        let conn = self.lock()?;
        let result = run_query(&conn, source, span)?;
        let columns = result
            .names
            .into_iter()
            .zip(result.decltypes)
            .zip(result.values)
            .map(|((name, decl), values)| {
                let ty = resolve_type(decl.as_deref(), &values, true);
                Column {
                    name,
                    data: to_column_data(ty, values),
                }
            })
            .collect();
        ColumnTable::new(columns).map_err(|e| Diagnostic::error(Code::Sql, span, e.to_string()))
    }

    /// Column names and types. Declared types come from prepared-statement
    /// metadata; computed columns without one are typed from their values.
    pub fn schema_of(&self, source: &DataSource, span: Span) -> Result<TableSchema, Diagnostic> {
        let conn = self.lock()?;
        let name = match source {
            DataSource::TableRef(name) => name.clone(),
            DataSource::Subquery(_) => "subquery".to_string(),
        };
        let sql = query_text(&conn, source, span)?;
        let stmt = prepare(&conn, &sql, span)?;
        let names: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
        let decls: Vec<Option<String>> = stmt
            .columns()
            .iter()
            .map(|c| c.decl_type().map(str::to_string))
            .collect();
        drop(stmt);
        let all_declared = decls.iter().all(|d| d.as_deref().and_then(affinity).is_some());
        let columns = if all_declared {
            names
                .into_iter()
                .zip(&decls)
                .map(|(n, d)| ColumnSchema {
                    name: n,
                    ty: resolve_type(d.as_deref(), &[], false),
                })
                .collect()
        } else {
            let result = run_query(&conn, source, span)?;
            result
                .names
                .into_iter()
                .zip(result.decltypes)
                .zip(result.values)
                .map(|((name, decl), values)| ColumnSchema {
                    name,
                    ty: resolve_type(decl.as_deref(), &values, true),
                })
                .collect()
        };
        let row_count = match source {
            DataSource::TableRef(_) => Some(count_rows(&conn, &sql)?),
            DataSource::Subquery(_) => None,
        };
        Ok(TableSchema {
            name,
            columns,
            row_count,
        })
    }

    /// Snapshot of every table in the catalog, sorted by name.
    pub fn tables(&self) -> Result<Vec<TableSchema>, Diagnostic> {
        let names: Vec<String> = {
            let conn = self.lock()?;
            let mut stmt = conn
                .prepare(
                    "SELECT name FROM sqlite_master WHERE type = 'table' \
                     AND name NOT LIKE 'sqlite_%' ORDER BY name",
                )
                .map_err(backend)?;
            let rows = stmt
                .query_map([], |r| r.get::<_, String>(0))
                .map_err(backend)?;
            rows.collect::<Result<_, _>>().map_err(backend)?
        };
        // One lock per table keeps each schema consistent; a concurrent load
        // between lookups can only swap a whole table.
        names
            .into_iter()
            .map(|n| self.schema_of(&DataSource::TableRef(n), Span::default()))
            .collect()
    }
}

impl SchemaProvider for Database {
    fn schema_of(&self, source: &DataSource, span: Span) -> Result<TableSchema, Diagnostic> {
        Database::schema_of(self, source, span)
    }
}

fn register_functions(conn: &Connection) -> rusqlite::Result<()> {
    let flags = FunctionFlags::SQLITE_UTF8 | FunctionFlags::SQLITE_DETERMINISTIC;
    conn.create_scalar_function("log", 1, flags, |ctx| {
        let v: Option<f64> = ctx.get(0)?;
        Ok(v.filter(|x| *x > 0.0).map(f64::log10))
    })?;
    conn.create_scalar_function("log", 2, flags, |ctx| {
        let base: Option<f64> = ctx.get(0)?;
        let v: Option<f64> = ctx.get(1)?;
        Ok(match (base, v) {
            (Some(b), Some(x)) if b > 0.0 && b != 1.0 && x > 0.0 => Some(x.ln() / b.ln()),
            _ => None,
        })
    })?;
    Ok(())
}

fn table_exists(conn: &Connection, name: &str) -> Result<bool, Diagnostic> {
    conn.query_row(
        "SELECT count(*) FROM sqlite_master WHERE type IN ('table', 'view') AND name = ?1 COLLATE NOCASE",
        [name],
        |r| r.get::<_, i64>(0),
    )
    .map(|n| n > 0)
    .map_err(backend)
}

fn query_text(conn: &Connection, source: &DataSource, span: Span) -> Result<String, Diagnostic> {
    match source {
        DataSource::TableRef(name) => {
            if !table_exists(conn, name)? {
                return Err(no_table(name, span));
            }
            Ok(format!("SELECT * FROM {}", quote_ident(name)))
        }
        DataSource::Subquery(sql) => Ok(sql.clone()),
    }
}

fn prepare<'c>(conn: &'c Connection, sql: &str, span: Span) -> Result<rusqlite::Statement<'c>, Diagnostic> {
    let stmt = conn
        .prepare(sql)
        .map_err(|e| Diagnostic::error(Code::Sql, span, format!("subquery failed: {e}")))?;
    if !stmt.readonly() {
        return Err(Diagnostic::error(
            Code::Sql,
            span,
            "subquery must be a read-only SELECT",
        ));
    }
    Ok(stmt)
}

fn count_rows(conn: &Connection, sql: &str) -> Result<usize, Diagnostic> {
    conn.query_row(&format!("SELECT count(*) FROM ({sql})"), [], |r| r.get::<_, i64>(0))
        .map(|n| n as usize)
        .map_err(backend)
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
}

struct QueryResult {
    names: Vec<String>,
    decltypes: Vec<Option<String>>,
    values: Vec<Vec<Cell>>,
}

fn run_query(conn: &Connection, source: &DataSource, span: Span) -> Result<QueryResult, Diagnostic> {
    let sql = query_text(conn, source, span)?;
    let mut stmt = prepare(conn, &sql, span)?;
    let names: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
    let decltypes: Vec<Option<String>> = stmt
        .columns()
        .iter()
        .map(|c| c.decl_type().map(str::to_string))
        .collect();
    let ncols = names.len();
    let mut values: Vec<Vec<Cell>> = vec![Vec::new(); ncols];
    let sql_err = |e: rusqlite::Error| Diagnostic::error(Code::Sql, span, format!("subquery failed: {e}"));
    let mut rows = stmt.query([]).map_err(sql_err)?;
    while let Some(row) = rows.next().map_err(sql_err)? {
        for (i, column) in values.iter_mut().enumerate() {
            let cell = match row.get_ref(i).map_err(sql_err)? {
                ValueRef::Null => Cell::Null,
                ValueRef::Integer(v) => Cell::Int(v),
                ValueRef::Real(v) => Cell::Real(v),
                ValueRef::Text(t) => Cell::Text(String::from_utf8_lossy(t).into_owned()),
                ValueRef::Blob(b) => Cell::Text(format!("<blob {} bytes>", b.len())),
            };
            column.push(cell);
        }
    }
    Ok(QueryResult {
        names,
        decltypes,
        values,
    })
}

/// SQLite type-affinity rules applied to a declared column type.
fn affinity(decl: &str) -> Option<ColumnType> {
    let d = decl.to_ascii_uppercase();
    if d.contains("INT") {
        Some(ColumnType::Int)
    } else if d.contains("CHAR") || d.contains("CLOB") || d.contains("TEXT") {
        Some(ColumnType::Text)
    } else if d.contains("REAL") || d.contains("FLOA") || d.contains("DOUB") {
        Some(ColumnType::Float)
    } else {
        None
    }
}

/// Declared type widened by the types actually observed in `values`.
fn resolve_type(decl: Option<&str>, values: &[Cell], observe: bool) -> ColumnType {
    let declared = decl.and_then(affinity);
    let observed = if observe {
        values.iter().fold(None, |acc: Option<ColumnType>, cell| {
            let t = match cell {
                Cell::Null => return acc,
                Cell::Int(_) => ColumnType::Int,
                Cell::Real(_) => ColumnType::Float,
                Cell::Text(_) => ColumnType::Text,
            };
            Some(acc.map_or(t, |a| a.widen(t)))
        })
    } else {
        None
    };
    match (declared, observed) {
        (Some(d), Some(o)) => d.widen(o),
        (Some(d), None) => d,
        (None, Some(o)) => o,
        (None, None) => ColumnType::Text,
    }
}

fn to_column_data(ty: ColumnType, values: Vec<Cell>) -> ColumnData {
    match ty {
        ColumnType::Int => ColumnData::Int(
            values
                .into_iter()
                .map(|c| match c {
                    Cell::Int(v) => Some(v),
                    _ => None,
                })
                .collect(),
        ),
        ColumnType::Float => ColumnData::Float(
            values
                .into_iter()
                .map(|c| match c {
                    Cell::Int(v) => Some(v as f64),
                    Cell::Real(v) => Some(v),
                    _ => None,
                })
                .collect(),
        ),
        ColumnType::Text => ColumnData::Text(
            values
                .into_iter()
                .map(|c| match c {
                    Cell::Null => None,
                    Cell::Int(v) => Some(v.to_string()),
                    Cell::Real(v) => Some(v.to_string()),
                    Cell::Text(s) => Some(s),
                })
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CARS: &str = "car_id,horsepower,miles_per_gallon,origin,year\n\
        1,130,18,USA,1970\n2,165,15,USA,1970\n3,150,18,USA,1970\n4,150,16,USA,1970\n5,140,17,USA,1970\n";
    const TREES: &str = "tree_id,age,circumference\n1,118,30\n1,484,58\n1,664,87\n1,1004,115\n1,1231,120\n";

    fn db() -> Database {
        let db = Database::open_in_memory().unwrap();
        db.load_csv(CARS.as_bytes(), "cars", ReplacePolicy::Replace).unwrap();
        db.load_csv(TREES.as_bytes(), "trees", ReplacePolicy::Replace).unwrap();
        db
    }

    fn types(schema: &TableSchema) -> Vec<ColumnType> {
        schema.columns.iter().map(|c| c.ty).collect()
    }

    #[test]
    fn load_infers_types() {
        use ColumnType::*;
        let db = Database::open_in_memory().unwrap();
        let s = db.load_csv(CARS.as_bytes(), "cars", ReplacePolicy::Replace).unwrap();
        assert_eq!(types(&s), vec![Int, Int, Int, Text, Int]);
        assert_eq!(s.row_count, Some(5));
        let s = db.load_csv(TREES.as_bytes(), "trees", ReplacePolicy::Replace).unwrap();
        assert_eq!(types(&s), vec![Int, Int, Int]);
        let s = db.load_csv("a\n1\n2.5\n".as_bytes(), "t", ReplacePolicy::Replace).unwrap();
        assert_eq!(types(&s), vec![Float]);
    }

    #[test]
    fn fetch_table_and_subquery() {
        let db = db();
        let t = db.fetch(&DataSource::TableRef("cars".into()), Span::default()).unwrap();
        assert_eq!(t.row_count(), 5);
        let japan = db
            .fetch(
                &DataSource::Subquery("select * from cars where origin = 'Japan'".into()),
                Span::default(),
            )
            .unwrap();
        assert_eq!(japan.row_count(), 0);
        let usa = db
            .fetch(
                &DataSource::Subquery("select * from cars where origin = 'USA'".into()),
                Span::default(),
            )
            .unwrap();
        assert_eq!(usa.row_count(), 5);
    }

    #[test]
    fn log_is_base_ten_in_subqueries() {
        let db = db();
        let t = db
            .fetch(
                &DataSource::Subquery(
                    "select log(horsepower) as log_hp, log(100) as two, log(0) as z from cars".into(),
                ),
                Span::default(),
            )
            .unwrap();
        let hp = t.column("log_hp").unwrap();
        assert_eq!(hp.data.column_type(), ColumnType::Float);
        assert_eq!(hp.data.number(0), Some(130f64.log10()));
        assert_eq!(t.column("two").unwrap().data.number(0), Some(2.0));
        assert!(t.column("z").unwrap().data.is_null(0));
    }

    #[test]
    fn schema_of_examples() {
        use ColumnType::*;
        let db = db();
        let s = db.schema_of(&DataSource::TableRef("trees".into()), Span::default()).unwrap();
        let cols: Vec<(&str, ColumnType)> = s.columns.iter().map(|c| (c.name.as_str(), c.ty)).collect();
        assert_eq!(cols, vec![("tree_id", Int), ("age", Int), ("circumference", Int)]);

        let s = db.schema_of(&DataSource::Subquery("select 1 as k".into()), Span::default()).unwrap();
        assert_eq!(s.columns, vec![ColumnSchema { name: "k".into(), ty: Int }]);

        let era = "select *, case when year < 1977 then '< 1977' else '>= 1977' end as 'era' from cars";
        let s = db.schema_of(&DataSource::Subquery(era.into()), Span::default()).unwrap();
        assert_eq!(s.column("era").unwrap().ty, Text);
        assert_eq!(s.column("horsepower").unwrap().ty, Int);
    }

    #[test]
    fn errors() {
        let db = db();
        let span = Span::new(10, 4, 2, 6);
        let e = db.fetch(&DataSource::TableRef("planes".into()), span).unwrap_err();
        assert_eq!(e.code, Code::NoTable);
        assert_eq!((e.line, e.col), (2, 6));
        let e = db.fetch(&DataSource::Subquery("select nope from cars".into()), span).unwrap_err();
        assert_eq!(e.code, Code::Sql);
        let e = db.fetch(&DataSource::Subquery("delete from cars".into()), span).unwrap_err();
        assert_eq!(e.code, Code::Sql);
        assert_eq!(db.fetch(&DataSource::TableRef("cars".into()), span).unwrap().row_count(), 5);
    }

    #[test]
    fn replace_policy() {
        let db = db();
        let e = db
            .load_csv("a\n1\n".as_bytes(), "cars", ReplacePolicy::Forbid)
            .unwrap_err();
        assert_eq!(e.code, Code::NameCollision);
        db.load_csv("a\n1\n".as_bytes(), "CARS", ReplacePolicy::Replace).unwrap();
        let tables = db.tables().unwrap();
        assert_eq!(tables.len(), 2);
        let cars = tables.iter().find(|t| t.name.eq_ignore_ascii_case("cars")).unwrap();
        assert_eq!(cars.row_count, Some(1));
    }

    #[test]
    fn table_and_select_star_agree() {
        let db = db();
        let a = db.fetch(&DataSource::TableRef("cars".into()), Span::default()).unwrap();
        let b = db
            .fetch(&DataSource::Subquery("select * from cars".into()), Span::default())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nulls_from_empty_cells() {
        let db = Database::open_in_memory().unwrap();
        let s = db.load_csv("a,b\n1,\n,x\n".as_bytes(), "t", ReplacePolicy::Replace).unwrap();
        assert_eq!(types(&s), vec![ColumnType::Int, ColumnType::Text]);
        let t = db.fetch(&DataSource::TableRef("t".into()), Span::default()).unwrap();
        assert!(t.column("a").unwrap().data.is_null(1));
        assert!(t.column("b").unwrap().data.is_null(0));
    }
}
