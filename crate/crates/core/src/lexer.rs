//! Tokenizer for SGL statements.
//!
//! The body of a `from ( ... )` subquery is not tokenized: it is captured as
//! a single [`TokenKind::RawSql`] token and handed to the SQL backend as-is.

use std::fmt;

use crate::diagnostic::{Code, Diagnostic, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Visualize,
    From,
    Using,
    Group,
    Collect,
    Scale,
    Facet,
    Title,
    By,
    As,
    Layer,
    Vertically,
    Horizontally,
    Point,
    Points,
    Bar,
    Bars,
    Line,
    Lines,
    Regression,
    Jittered,
    Unstacked,
    Stacked,
}

impl Keyword {
    pub const ALL: [Keyword; 23] = [
        Keyword::Visualize,
        Keyword::From,
        Keyword::Using,
        Keyword::Group,
        Keyword::Collect,
        Keyword::Scale,
        Keyword::Facet,
        Keyword::Title,
        Keyword::By,
        Keyword::As,
        Keyword::Layer,
        Keyword::Vertically,
        Keyword::Horizontally,
        Keyword::Point,
        Keyword::Points,
        Keyword::Bar,
        Keyword::Bars,
        Keyword::Line,
        Keyword::Lines,
        Keyword::Regression,
        Keyword::Jittered,
        Keyword::Unstacked,
        Keyword::Stacked,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Visualize => "visualize",
            Keyword::From => "from",
            Keyword::Using => "using",
            Keyword::Group => "group",
            Keyword::Collect => "collect",
            Keyword::Scale => "scale",
            Keyword::Facet => "facet",
            Keyword::Title => "title",
            Keyword::By => "by",
            Keyword::As => "as",
            Keyword::Layer => "layer",
            Keyword::Vertically => "vertically",
            Keyword::Horizontally => "horizontally",
            Keyword::Point => "point",
            Keyword::Points => "points",
            Keyword::Bar => "bar",
            Keyword::Bars => "bars",
            Keyword::Line => "line",
            Keyword::Lines => "lines",
            Keyword::Regression => "regression",
            Keyword::Jittered => "jittered",
            Keyword::Unstacked => "unstacked",
            Keyword::Stacked => "stacked",
        }
    }

    /// Case-insensitive keyword lookup.
    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(word))
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword(Keyword),
    Identifier,
    Number,
    StringLiteral,
    Comma,
    LParen,
    RParen,
    Star,
    Semicolon,
    RawSql,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{k}`"),
            TokenKind::Identifier => f.write_str("identifier"),
            TokenKind::Number => f.write_str("number"),
            TokenKind::StringLiteral => f.write_str("string literal"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Semicolon => f.write_str("`;`"),
            TokenKind::RawSql => f.write_str("SQL subquery"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: usize,
    pub col: usize,
    /// Byte offset of the lexeme in the source.
    pub offset: usize,
}

impl Token {
    pub fn span(&self) -> Span {
        Span::new(self.offset, self.lexeme.len(), self.line, self.col)
    }

    /// Unescaped contents of a string literal.
    pub fn string_value(&self) -> String {
        let inner = &self.lexeme[1..self.lexeme.len() - 1];
        inner.replace("''", "'")
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn advance_to(&mut self, offset: usize) {
        while self.pos < offset {
            self.bump();
        }
    }

    fn span_here(&self, len: usize) -> Span {
        Span::new(self.pos, len, self.line, self.col)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.peek_second() == Some('-') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }
}

/// Line and column (1-based, counted in characters) of a byte offset.
pub fn position_of(source: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for c in source[..offset.min(source.len())].chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// Tokenize a complete statement.
///
/// Whenever the tokens `from` `(` have just been produced, the balanced
/// region up to the matching `)` is captured as one `RawSql` token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor::new(source);
    let mut tokens: Vec<Token> = Vec::new();

    loop {
        cur.skip_trivia();
        let Some(c) = cur.peek() else { break };

        if subquery_opened(&tokens) {
            let (raw, end) = capture_raw_sql(source, cur.pos)?;
            tokens.push(raw);
            cur.advance_to(end);
            continue;
        }

        let start = cur.pos;
        let (line, col) = (cur.line, cur.col);
        let kind = match c {
            ',' => single(&mut cur, TokenKind::Comma),
            '(' => single(&mut cur, TokenKind::LParen),
            ')' => single(&mut cur, TokenKind::RParen),
            '*' => single(&mut cur, TokenKind::Star),
            ';' => single(&mut cur, TokenKind::Semicolon),
            '\'' => lex_string(&mut cur)?,
            c if c.is_ascii_digit() => lex_number(&mut cur),
            c if c.is_ascii_alphabetic() || c == '_' => {
                while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    cur.bump();
                }
                match Keyword::lookup(&source[start..cur.pos]) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Identifier,
                }
            }
            other => {
                return Err(Diagnostic::error(
                    Code::IllegalCharacter,
                    cur.span_here(other.len_utf8()),
                    format!("illegal character `{other}`"),
                ))
            }
        };
        tokens.push(Token {
            kind,
            lexeme: source[start..cur.pos].to_string(),
            line,
            col,
            offset: start,
        });
    }
    Ok(tokens)
}

fn subquery_opened(tokens: &[Token]) -> bool {
    matches!(
        tokens,
        [.., Token { kind: TokenKind::Keyword(Keyword::From), .. }, Token { kind: TokenKind::LParen, .. }]
    )
}

fn single(cur: &mut Cursor<'_>, kind: TokenKind) -> TokenKind {
    cur.bump();
    kind
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<TokenKind, Diagnostic> {
    let open = cur.span_here(1);
    cur.bump();
    loop {
        match cur.bump() {
            None => {
                return Err(Diagnostic::error(
                    Code::UnterminatedString,
                    open,
                    "unterminated string literal",
                ))
            }
            Some('\'') if cur.peek() == Some('\'') => {
                cur.bump();
            }
            Some('\'') => return Ok(TokenKind::StringLiteral),
            Some(_) => {}
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> TokenKind {
    while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && matches!(cur.peek_second(), Some(c) if c.is_ascii_digit()) {
        cur.bump();
        while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            cur.bump();
        }
    }
    TokenKind::Number
}

/// Capture the body of a subquery whose `(` ends just before `start`.
///
/// Returns the `RawSql` token (outer parentheses and surrounding whitespace
/// excluded) and the byte offset of the matching `)`. Quotes, double-quoted
/// identifiers and SQL comments are skipped when balancing.
pub fn capture_raw_sql(source: &str, start: usize) -> Result<(Token, usize), Diagnostic> {
    let bytes = source.as_bytes();
    let open_paren = start.saturating_sub(1);
    let diag_at = |offset: usize, len: usize, code: Code, msg: &str| {
        let (line, col) = position_of(source, offset);
        Diagnostic::error(code, Span::new(offset, len, line, col), msg)
    };

    let mut depth = 0usize;
    let mut i = start;
    let end = loop {
        if i >= bytes.len() {
            return Err(diag_at(open_paren, 1, Code::UnbalancedParens, "subquery is missing its closing `)`"));
        }
        match bytes[i] {
            b'(' => depth += 1,
            b')' if depth == 0 => break i,
            b')' => depth -= 1,
            q @ (b'\'' | b'"') => {
                let quote_at = i;
                i += 1;
                loop {
                    if i >= bytes.len() {
                        return Err(diag_at(quote_at, 1, Code::UnterminatedString, "unterminated quoted text in subquery"));
                    }
                    if bytes[i] == q {
                        if bytes.get(i + 1) == Some(&q) {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    i += 1;
                }
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                match source[i + 2..].find("*/") {
                    Some(rel) => i += 2 + rel + 2,
                    None => i = bytes.len(),
                }
                continue;
            }
            _ => {}
        }
        i += 1;
    };

    let body = &source[start..end];
    let trimmed_start = start + (body.len() - body.trim_start().len());
    let lexeme = body.trim();
    if lexeme.is_empty() {
        return Err(diag_at(open_paren, end + 1 - open_paren, Code::EmptyClause, "subquery is empty"));
    }
    let (line, col) = position_of(source, trimmed_start);
    Ok((
        Token {
            kind: TokenKind::RawSql,
            lexeme: lexeme.to_string(),
            line,
            col,
            offset: trimmed_start,
        },
        end,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn using_points() {
        assert_eq!(
            kinds("using points;"),
            vec![
                TokenKind::Keyword(Keyword::Using),
                TokenKind::Keyword(Keyword::Points),
                TokenKind::Semicolon
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  -- only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn subquery_is_one_raw_token() {
        let src = "from (\n  select *\n  from cars\n  where origin = 'Japan'\n)\nusing points";
        let toks = tokenize(src).unwrap();
        assert_eq!(toks[2].kind, TokenKind::RawSql);
        assert_eq!(toks[2].lexeme, "select *\n  from cars\n  where origin = 'Japan'");
        assert_eq!((toks[2].line, toks[2].col), (2, 3));
        assert_eq!(toks[3].kind, TokenKind::RParen);
        assert_eq!(toks[3].line, 5);
    }

    #[test]
    fn capture_examples() {
        let cap = |s: &str| capture_raw_sql(s, 1).map(|(t, _)| t.lexeme);
        assert_eq!(cap("(select * from cars)").unwrap(), "select * from cars");
        assert_eq!(cap("(select (1))").unwrap(), "select (1)");
        assert_eq!(cap("(select ')' as c)").unwrap(), "select ')' as c");
        assert_eq!(cap("(select 'it''s)' as c)").unwrap(), "select 'it''s)' as c");
        assert_eq!(cap("(select 1 -- )\n)").unwrap(), "select 1 -- )");
        assert_eq!(cap("(select (1)").unwrap_err().code, Code::UnbalancedParens);
        assert_eq!(cap("(  )").unwrap_err().code, Code::EmptyClause);
    }

    #[test]
    fn using_parens_are_tokenized() {
        assert_eq!(
            kinds("using (points layer regression line)"),
            vec![
                TokenKind::Keyword(Keyword::Using),
                TokenKind::LParen,
                TokenKind::Keyword(Keyword::Points),
                TokenKind::Keyword(Keyword::Layer),
                TokenKind::Keyword(Keyword::Regression),
                TokenKind::Keyword(Keyword::Line),
                TokenKind::RParen,
            ]
        );
    }

    #[test]
    fn strings_numbers_identifiers() {
        let toks = tokenize("x as 'Miles ''Per'' Gallon' 12 3.5 Horse_Power").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Identifier);
        assert_eq!(toks[2].kind, TokenKind::StringLiteral);
        assert_eq!(toks[2].string_value(), "Miles 'Per' Gallon");
        assert_eq!(toks[3].kind, TokenKind::Number);
        assert_eq!(toks[4].lexeme, "3.5");
        assert_eq!(toks[5].lexeme, "Horse_Power");
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(kinds("VISUALIZE Using POINTS"), kinds("visualize using points"));
        assert_eq!(tokenize("Horsepower").unwrap()[0].lexeme, "Horsepower");
    }

    #[test]
    fn lexical_errors_carry_positions() {
        let e = tokenize("visualize\n  a + b as x").unwrap_err();
        assert_eq!(e.code, Code::IllegalCharacter);
        assert_eq!((e.line, e.col), (2, 5));

        let e = tokenize("title x as 'oops").unwrap_err();
        assert_eq!(e.code, Code::UnterminatedString);
        assert_eq!((e.line, e.col), (1, 12));

        let e = tokenize("from (select * from t").unwrap_err();
        assert_eq!(e.code, Code::UnbalancedParens);
        assert_eq!((e.line, e.col), (1, 6));
    }

    #[test]
    fn number_without_fraction_digits_stops_at_dot() {
        let e = tokenize("1.").unwrap_err();
        assert_eq!(e.code, Code::IllegalCharacter);
        assert_eq!(e.col, 2);
    }
}
