use std::io::Read;

use rusqlite::types::Value;
use rusqlite::Connection;

use super::{quote_ident, ColumnType};
use crate::diagnostic::{Code, Diagnostic, Span};

pub(super) struct ParsedCsv {
    pub header: Vec<String>,
    pub types: Vec<ColumnType>,
    pub rows: Vec<Vec<String>>,
}

fn at_line(code: Code, line: usize, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, Span::new(0, 0, line.max(1), 1), message)
}

/// Table names must be plain identifiers so statements can refer to them.
pub fn is_valid_table_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Type of a single CSV cell; `None` for an empty cell.
pub fn infer_cell_type(cell: &str) -> Option<ColumnType> {
    let s = cell.trim();
    if s.is_empty() {
        return None;
    }
    if s.parse::<i64>().is_ok() {
        return Some(ColumnType::Int);
    }
    let numeric_chars = s
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'));
    if numeric_chars && s.chars().any(|c| c.is_ascii_digit()) && s.parse::<f64>().is_ok() {
        return Some(ColumnType::Float);
    }
    Some(ColumnType::Text)
}

pub(super) fn read_csv<R: Read>(reader: R, table: &str) -> Result<ParsedCsv, Diagnostic> {
    if !is_valid_table_name(table) {
        return Err(at_line(
            Code::InvalidTableName,
            1,
            format!("`{table}` is not a valid table name (letters, digits and `_`, not starting with a digit)"),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(at_line(Code::EmptyFile, 1, "CSV input is empty")),
        Some(Err(e)) => return Err(csv_error(e)),
        Some(Ok(rec)) => rec.iter().map(|h| h.trim().to_string()).collect::<Vec<_>>(),
    };
    if header.len() == 1 && header[0].is_empty() {
        return Err(at_line(Code::EmptyFile, 1, "CSV input has no header"));
    }
    for (i, name) in header.iter().enumerate() {
        if name.is_empty() {
            return Err(at_line(Code::InvalidCsv, 1, format!("header column {} is empty", i + 1)));
        }
        if header[..i].iter().any(|h| h.eq_ignore_ascii_case(name)) {
            return Err(at_line(Code::DuplicateColumn, 1, format!("duplicate column `{name}`")));
        }
    }

    let mut rows = Vec::new();
    for (index, rec) in records.enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(index + 2);
        if rec.len() == 1 && rec[0].is_empty() && header.len() > 1 {
            continue;
        }
        if rec.len() != header.len() {
            return Err(at_line(
                Code::RaggedRow,
                line,
                format!(
                    "row {} has {} fields, expected {}",
                    index + 1,
                    rec.len(),
                    header.len()
                ),
            ));
        }
        rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }

    let types = (0..header.len())
        .map(|c| {
            rows.iter()
                .filter_map(|r| infer_cell_type(&r[c]))
                .reduce(ColumnType::widen)
                .unwrap_or(ColumnType::Text)
        })
        .collect();
    Ok(ParsedCsv {
        header,
        types,
        rows,
    })
}

fn csv_error(e: csv::Error) -> Diagnostic {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(1);
    at_line(Code::InvalidCsv, line, format!("malformed CSV: {e}"))
}

fn cell_value(cell: &str, ty: ColumnType) -> Value {
    let s = cell.trim();
    if s.is_empty() {
        return Value::Null;
    }
    match ty {
        ColumnType::Int => s.parse::<i64>().map(Value::Integer).unwrap_or(Value::Null),
        ColumnType::Float => s.parse::<f64>().map(Value::Real).unwrap_or(Value::Null),
        ColumnType::Text => Value::Text(cell.to_string()),
    }
}

/// Replace `table` with the parsed contents in a single transaction.
pub(super) fn store(conn: &mut Connection, table: &str, csv: &ParsedCsv) -> rusqlite::Result<()> {
    let tx = conn.transaction()?;
    let quoted = quote_ident(table);
    tx.execute(&format!("DROP TABLE IF EXISTS {quoted}"), [])?;
    let cols: Vec<String> = csv
        .header
        .iter()
        .zip(&csv.types)
        .map(|(n, t)| format!("{} {}", quote_ident(n), t.sql_type()))
        .collect();
    tx.execute(&format!("CREATE TABLE {quoted} ({})", cols.join(", ")), [])?;
    {
        let placeholders = vec!["?"; csv.header.len()].join(", ");
        let mut insert = tx.prepare(&format!("INSERT INTO {quoted} VALUES ({placeholders})"))?;
        for row in &csv.rows {
            let values: Vec<Value> = row
                .iter()
                .zip(&csv.types)
                .map(|(cell, ty)| cell_value(cell, *ty))
                .collect();
            insert.execute(rusqlite::params_from_iter(values))?;
        }
    }
    tx.commit()
}
