//! Diagnostics shared by every stage: lexing, parsing, analysis, ingestion
//! and execution all report problems as a [`Diagnostic`] with a stable code
//! and a source position.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A region of the statement source. Positions are 1-based.
///
/// Spans never participate in structural equality or hashing, so two ASTs
/// parsed from differently formatted text compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    /// Byte offset of the first character.
    pub offset: usize,
    /// Length in bytes.
    pub len: usize,
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(offset: usize, len: usize, line: usize, col: usize) -> Self {
        Span {
            offset,
            len,
            line,
            col,
        }
    }

    /// Span covering `self` through the end of `other`.
    pub fn to(self, other: Span) -> Span {
        if other.offset + other.len <= self.offset {
            return self;
        }
        Span {
            len: other.offset + other.len - self.offset,
            ..self
        }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

macro_rules! codes {
    ($($variant:ident => $text:literal),+ $(,)?) => {
        /// Stable diagnostic codes. The textual form is part of the wire
        /// format consumed by the service, CLI and console.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Code {
            $($variant),+
        }

        impl Code {
            pub fn as_str(self) -> &'static str {
                match self {
                    $(Code::$variant => $text),+
                }
            }
        }

        impl FromStr for Code {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok(Code::$variant),)+
                    other => Err(format!("unknown diagnostic code `{other}`")),
                }
            }
        }
    };
}

codes! {
    // lexical
    UnterminatedString => "UnterminatedString",
    IllegalCharacter => "IllegalCharacter",
    UnbalancedParens => "UnbalancedParens",
    // syntactic
    UnexpectedToken => "UnexpectedToken",
    MisplacedClause => "MisplacedClause",
    EmptyClause => "EmptyClause",
    UnknownGeom => "UnknownGeom",
    UnknownQualifier => "UnknownQualifier",
    UnknownFunction => "UnknownFunction",
    InvalidArgument => "InvalidArgument",
    DuplicateAesthetic => "DuplicateAesthetic",
    DuplicateTitle => "DuplicateTitle",
    // semantic
    CoordMix => "E_COORD_MIX",
    NoPosition => "E_NO_POSITION",
    TypeConflict => "E_TYPE_CONFLICT",
    TypeUnsupported => "E_TYPE_UNSUPPORTED",
    GroupByIncomplete => "E_GROUPBY_INCOMPLETE",
    BadQualifier => "E_BAD_QUALIFIER",
    UnknownColumn => "E_UNKNOWN_COLUMN",
    FacetArity => "E_FACET_ARITY",
    ScaleOnDiscrete => "E_SCALE_ON_DISCRETE",
    TitleUnmapped => "E_TITLE_UNMAPPED",
    DuplicateScale => "E_DUPLICATE_SCALE",
    MissingAesthetic => "E_MISSING_AESTHETIC",
    // ingestion and data access
    RaggedRow => "RaggedRow",
    EmptyFile => "EmptyFile",
    NameCollision => "NameCollision",
    InvalidTableName => "InvalidTableName",
    DuplicateColumn => "DuplicateColumn",
    InvalidCsv => "InvalidCsv",
    Io => "E_IO",
    NoTable => "E_NO_TABLE",
    Sql => "E_SQL",
    Backend => "E_BACKEND",
    // service requests
    InvalidRequest => "E_REQUEST",
    // execution
    EmptyInput => "E_EMPTY_INPUT",
    RegressionUnderdetermined => "E_REGRESSION_UNDERDETERMINED",
    NegativeStack => "E_NEGATIVE_STACK",
    FacetCardinality => "E_FACET_CARDINALITY",
    // warnings
    NullDropped => "W_NULL_DROPPED",
    NonpositiveLog => "W_NONPOSITIVE_LOG",
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An error or warning attached to a source position.
///
/// Serialized field names (`code`, `severity`, `message`, `line`, `col`,
/// `length`) are stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub col: usize,
    pub length: usize,
}

impl Diagnostic {
    pub fn error(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            message: message.into(),
            line: span.line.max(1),
            col: span.col.max(1),
            length: span.len,
        }
    }

    pub fn warning(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, span, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {} {}", self.line, self.col, self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}
