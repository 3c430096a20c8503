//! Recursive-descent parser producing an [`SglStatement`].
//!
//! Clause order is fixed:
//!
//! ```text
//! visualize .. from .. [group by ..] [collect by ..] using ..
//!   [layer visualize .. ]*
//! [scale by ..] [facet by ..] [title ..] [;]
//! ```

use crate::ast::*;
use crate::diagnostic::{Code, Diagnostic, Span};
use crate::lexer::{tokenize, Keyword, Token, TokenKind};

/// Tokenize and parse in one step.
pub fn parse_str(source: &str) -> Result<SglStatement, Diagnostic> {
    let tokens = tokenize(source)?;
    parse(&tokens)
}

pub fn parse(tokens: &[Token]) -> Result<SglStatement, Diagnostic> {
    let mut p = Parser { tokens, pos: 0 };
    p.statement()
}

/// Parse a `using` body: either one geom expression or a parenthesized
/// `g1 layer g2 ...` list. `tokens` start right after `using`.
pub fn parse_geom_chain(tokens: &[Token]) -> Result<Vec<GeomExpr>, Diagnostic> {
    let mut p = Parser { tokens, pos: 0 };
    let chain = p.geom_chain()?;
    if let Some(tok) = p.peek() {
        return Err(p.unexpected(tok, "end of geom expression"));
    }
    Ok(chain)
}

fn is_clause_keyword(k: Keyword) -> bool {
    matches!(
        k,
        Keyword::Visualize
            | Keyword::From
            | Keyword::Group
            | Keyword::Collect
            | Keyword::Using
            | Keyword::Scale
            | Keyword::Facet
            | Keyword::Title
            | Keyword::Layer
    )
}

fn geom_of(k: Keyword) -> Option<Geom> {
    match k {
        Keyword::Point | Keyword::Points => Some(Geom::Point),
        Keyword::Bar | Keyword::Bars => Some(Geom::Bar),
        Keyword::Line | Keyword::Lines => Some(Geom::Line),
        _ => None,
    }
}

fn qualifier_of(k: Keyword) -> Option<Qualifier> {
    match k {
        Keyword::Regression => Some(Qualifier::Regression),
        Keyword::Jittered => Some(Qualifier::Jittered),
        Keyword::Unstacked => Some(Qualifier::Unstacked),
        Keyword::Stacked => Some(Qualifier::Stacked),
        _ => None,
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn peek_keyword(&self) -> Option<Keyword> {
        match self.peek_kind() {
            Some(TokenKind::Keyword(k)) => Some(k),
            _ => None,
        }
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at_keyword(&self, k: Keyword) -> bool {
        self.peek_keyword() == Some(k)
    }

    /// Span used for diagnostics at end of input: the last token.
    fn eof_span(&self) -> Span {
        self.tokens.last().map(Token::span).unwrap_or_default()
    }

    fn unexpected(&self, tok: &Token, expected: &str) -> Diagnostic {
        Diagnostic::error(
            Code::UnexpectedToken,
            tok.span(),
            format!("unexpected `{}`; expected {expected}", tok.lexeme),
        )
    }

    fn unexpected_here(&self, expected: &str) -> Diagnostic {
        match self.peek() {
            Some(tok) => self.unexpected(tok, expected),
            None => Diagnostic::error(
                Code::UnexpectedToken,
                self.eof_span(),
                format!("unexpected end of input; expected {expected}"),
            ),
        }
    }

    fn misplaced(&self, tok: &Token, context: &str) -> Diagnostic {
        Diagnostic::error(
            Code::MisplacedClause,
            tok.span(),
            format!("`{}` clause is not allowed here; {context}", tok.lexeme.to_ascii_lowercase()),
        )
    }

    /// Expect the keyword that opens a mandatory clause.
    fn expect_clause(&mut self, k: Keyword, context: &str) -> Result<&'t Token, Diagnostic> {
        match self.peek() {
            Some(tok) if tok.kind == TokenKind::Keyword(k) => {
                self.pos += 1;
                Ok(tok)
            }
            Some(tok) if matches!(tok.kind, TokenKind::Keyword(other) if is_clause_keyword(other)) => {
                Err(self.misplaced(tok, context))
            }
            _ => Err(self.unexpected_here(&format!("`{k}`"))),
        }
    }

    fn expect_keyword(&mut self, k: Keyword) -> Result<&'t Token, Diagnostic> {
        match self.peek() {
            Some(tok) if tok.kind == TokenKind::Keyword(k) => {
                self.pos += 1;
                Ok(tok)
            }
            _ => Err(self.unexpected_here(&format!("`{k}`"))),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'t Token, Diagnostic> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.pos += 1;
                Ok(tok)
            }
            _ => Err(self.unexpected_here(&kind.to_string())),
        }
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek_kind() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Fails with `EmptyClause` when the clause body is missing.
    fn require_body(&self, clause: &Token, name: &str) -> Result<(), Diagnostic> {
        let empty = match self.peek_kind() {
            None | Some(TokenKind::Semicolon) => true,
            Some(TokenKind::Keyword(k)) => is_clause_keyword(k),
            _ => false,
        };
        if empty {
            Err(Diagnostic::error(
                Code::EmptyClause,
                clause.span(),
                format!("`{name}` clause has no content"),
            ))
        } else {
            Ok(())
        }
    }

    fn statement(&mut self) -> Result<SglStatement, Diagnostic> {
        let mut layers = vec![self.layer()?];
        while self.at_keyword(Keyword::Layer) {
            self.bump();
            layers.push(self.layer()?);
        }

        let mut stmt = SglStatement {
            layers,
            scale_specs: Vec::new(),
            facet_spec: None,
            title_specs: Vec::new(),
        };

        // 0 = none yet, 1 = scale by, 2 = facet by, 3 = title
        let mut stage = 0;
        while let Some(k) = self.peek_keyword() {
            let order = match k {
                Keyword::Scale => 1,
                Keyword::Facet => 2,
                Keyword::Title => 3,
                _ => break,
            };
            let tok = self.peek().unwrap();
            if order <= stage {
                return Err(self.misplaced(tok, "graphic clauses appear once, in the order scale by, facet by, title"));
            }
            stage = order;
            match k {
                Keyword::Scale => stmt.scale_specs = self.scale_clause()?,
                Keyword::Facet => stmt.facet_spec = Some(self.facet_clause()?),
                _ => stmt.title_specs = self.title_clause()?,
            }
        }

        self.eat(TokenKind::Semicolon);
        if let Some(tok) = self.peek() {
            return Err(match tok.kind {
                TokenKind::Keyword(Keyword::Layer) if stage > 0 => self.misplaced(
                    tok,
                    "scale by, facet by and title must follow the last layer",
                ),
                TokenKind::Keyword(k) if is_clause_keyword(k) => {
                    self.misplaced(tok, "clauses must appear in the standard order")
                }
                _ if self.tokens[self.pos - 1].kind == TokenKind::Semicolon => {
                    self.unexpected(tok, "end of statement after `;`")
                }
                _ => self.unexpected(tok, "`layer`, `scale`, `facet`, `title` or `;`"),
            });
        }
        Ok(stmt)
    }

    fn layer(&mut self) -> Result<LayerSpec, Diagnostic> {
        self.expect_clause(Keyword::Visualize, "a layer starts with `visualize`")?;
        let mut mappings: Vec<AestheticMapping> = Vec::new();
        loop {
            let mapping = self.mapping()?;
            if mappings.iter().any(|m| m.aesthetic == mapping.aesthetic) {
                return Err(Diagnostic::error(
                    Code::DuplicateAesthetic,
                    mapping.span,
                    format!("aesthetic `{}` is mapped more than once", mapping.aesthetic),
                ));
            }
            mappings.push(mapping);
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }

        let from = self.expect_clause(Keyword::From, "expected `from` after the visualize clause")?;
        let (source, source_span) = self.data_source(from)?;

        let mut group_by = Vec::new();
        if self.at_keyword(Keyword::Group) {
            group_by = self.by_clause(Keyword::Group, "group by")?;
        }
        let mut collect_by = Vec::new();
        if self.at_keyword(Keyword::Collect) {
            collect_by = self.by_clause(Keyword::Collect, "collect by")?;
        }

        let using = self.expect_clause(
            Keyword::Using,
            "expected `using` (layer clauses are visualize, from, group by, collect by, using)",
        )?;
        self.require_body(using, "using")?;
        let geom_chain = self.geom_chain()?;

        Ok(LayerSpec {
            mappings,
            source,
            source_span,
            group_by,
            collect_by,
            geom_chain,
        })
    }

    fn mapping(&mut self) -> Result<AestheticMapping, Diagnostic> {
        let expr = self.expr()?;
        self.expect_keyword(Keyword::As)?;
        let (aesthetic, aes_span) = self.aesthetic()?;
        Ok(AestheticMapping {
            span: expr.span.to(aes_span),
            expr,
            aesthetic,
        })
    }

    fn aesthetic(&mut self) -> Result<(Aesthetic, Span), Diagnostic> {
        const EXPECTED: &str = "an aesthetic (x, y, theta, r, color)";
        match self.peek() {
            Some(tok) if tok.kind == TokenKind::Identifier => match Aesthetic::lookup(&tok.lexeme) {
                Some(a) => {
                    self.pos += 1;
                    Ok((a, tok.span()))
                }
                None => Err(self.unexpected(tok, EXPECTED)),
            },
            _ => Err(self.unexpected_here(EXPECTED)),
        }
    }

    fn data_source(&mut self, from: &Token) -> Result<(DataSource, Span), Diagnostic> {
        match self.peek() {
            Some(tok) if tok.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok((DataSource::TableRef(tok.lexeme.clone()), tok.span()))
            }
            Some(open) if open.kind == TokenKind::LParen => {
                self.pos += 1;
                let raw = self.expect(TokenKind::RawSql)?;
                if !self.eat(TokenKind::RParen) {
                    return Err(Diagnostic::error(
                        Code::UnbalancedParens,
                        open.span(),
                        "subquery is missing its closing `)`",
                    ));
                }
                Ok((DataSource::Subquery(raw.lexeme.clone()), raw.span()))
            }
            Some(tok) if matches!(tok.kind, TokenKind::Keyword(k) if is_clause_keyword(k)) => {
                Err(Diagnostic::error(
                    Code::EmptyClause,
                    from.span(),
                    "`from` clause has no data source",
                ))
            }
            None => Err(Diagnostic::error(
                Code::EmptyClause,
                from.span(),
                "`from` clause has no data source",
            )),
            _ => Err(self.unexpected_here("a table name or a parenthesized SQL subquery")),
        }
    }

    fn by_clause(&mut self, k: Keyword, name: &str) -> Result<Vec<Expr>, Diagnostic> {
        let head = self.expect_keyword(k)?;
        let by = self.expect_keyword(Keyword::By)?;
        self.require_body(by, name).map_err(|mut d| {
            d.col = head.col;
            d.line = head.line;
            d
        })?;
        self.expr_list()
    }

    fn expr_list(&mut self) -> Result<Vec<Expr>, Diagnostic> {
        let mut exprs = vec![self.expr()?];
        while self.eat(TokenKind::Comma) {
            exprs.push(self.expr()?);
        }
        Ok(exprs)
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        const EXPECTED: &str = "an expression (column, function call or literal)";
        let Some(tok) = self.peek() else {
            return Err(self.unexpected_here(EXPECTED));
        };
        match tok.kind {
            TokenKind::Identifier => {
                self.pos += 1;
                if self.peek_kind() == Some(TokenKind::LParen) {
                    self.call(tok)
                } else {
                    Ok(Expr::new(ExprKind::Column(tok.lexeme.clone()), tok.span()))
                }
            }
            TokenKind::Number => {
                self.pos += 1;
                let value = tok.lexeme.parse::<f64>().map_err(|_| self.unexpected(tok, "a number"))?;
                Ok(Expr::new(ExprKind::Number(value), tok.span()))
            }
            TokenKind::StringLiteral => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Str(tok.string_value()), tok.span()))
            }
            _ => Err(self.unexpected(tok, EXPECTED)),
        }
    }

    fn call(&mut self, name: &Token) -> Result<Expr, Diagnostic> {
        let func = Func::lookup(&name.lexeme).ok_or_else(|| {
            Diagnostic::error(
                Code::UnknownFunction,
                name.span(),
                format!(
                    "unknown function `{}`; expected bin, count, mean, sum, min or max",
                    name.lexeme
                ),
            )
        })?;
        let open = self.expect(TokenKind::LParen)?;
        let arg = match self.peek() {
            Some(tok) if tok.kind == TokenKind::Star => {
                self.pos += 1;
                if func != Func::Count {
                    return Err(Diagnostic::error(
                        Code::InvalidArgument,
                        tok.span(),
                        format!("`*` is only valid in count(*), not {}(*)", func.as_str()),
                    ));
                }
                Expr::new(ExprKind::Star, tok.span())
            }
            Some(tok) if tok.kind == TokenKind::Identifier => {
                self.pos += 1;
                if self.peek_kind() == Some(TokenKind::LParen) {
                    return Err(Diagnostic::error(
                        Code::InvalidArgument,
                        tok.span(),
                        format!("{}(...) takes a column name, not a nested call", func.as_str()),
                    ));
                }
                Expr::new(ExprKind::Column(tok.lexeme.clone()), tok.span())
            }
            Some(tok) if tok.kind == TokenKind::RParen => {
                return Err(Diagnostic::error(
                    Code::InvalidArgument,
                    open.span().to(tok.span()),
                    format!("{}() requires exactly one argument", func.as_str()),
                ))
            }
            _ => return Err(self.unexpected_here("a column name")),
        };
        match self.peek() {
            Some(close) if close.kind == TokenKind::RParen => {
                self.pos += 1;
                Ok(Expr::new(
                    ExprKind::Call {
                        func,
                        args: vec![arg],
                    },
                    name.span().to(close.span()),
                ))
            }
            Some(tok) if tok.kind == TokenKind::Comma => Err(Diagnostic::error(
                Code::InvalidArgument,
                tok.span(),
                format!("{}() takes exactly one argument", func.as_str()),
            )),
            Some(_) => Err(self.unexpected_here("`)`")),
            None => Err(Diagnostic::error(
                Code::UnbalancedParens,
                open.span(),
                "missing closing `)`",
            )),
        }
    }

    fn geom_chain(&mut self) -> Result<Vec<GeomExpr>, Diagnostic> {
        let Some(open) = self.peek() else {
            return Err(self.unexpected_here("a geom"));
        };
        if open.kind != TokenKind::LParen {
            return Ok(vec![self.geom_expr()?]);
        }
        self.pos += 1;
        let mut chain = vec![self.geom_expr()?];
        while self.at_keyword(Keyword::Layer) {
            self.pos += 1;
            chain.push(self.geom_expr()?);
        }
        match self.peek_kind() {
            Some(TokenKind::RParen) => {
                self.pos += 1;
                Ok(chain)
            }
            None | Some(TokenKind::Semicolon) => Err(Diagnostic::error(
                Code::UnbalancedParens,
                open.span(),
                "geom expression list is missing its closing `)`",
            )),
            _ => Err(self.unexpected_here("`layer` or `)`")),
        }
    }

    fn geom_expr(&mut self) -> Result<GeomExpr, Diagnostic> {
        let Some(first) = self.peek() else {
            return Err(self.unexpected_here("a geom"));
        };
        let unknown_geom = |tok: &Token| {
            Diagnostic::error(
                Code::UnknownGeom,
                tok.span(),
                format!("unknown geom `{}`; expected point(s), bar(s) or line(s)", tok.lexeme),
            )
        };
        match first.kind {
            TokenKind::Keyword(k) if geom_of(k).is_some() => {
                self.pos += 1;
                Ok(GeomExpr {
                    qualifier: None,
                    geom: geom_of(k).unwrap(),
                    span: first.span(),
                })
            }
            TokenKind::Keyword(k) if qualifier_of(k).is_some() => {
                self.pos += 1;
                match self.peek() {
                    Some(tok) => match tok.kind {
                        TokenKind::Keyword(g) if geom_of(g).is_some() => {
                            self.pos += 1;
                            Ok(GeomExpr {
                                qualifier: qualifier_of(k),
                                geom: geom_of(g).unwrap(),
                                span: first.span().to(tok.span()),
                            })
                        }
                        _ => Err(unknown_geom(tok)),
                    },
                    None => Err(self.unexpected_here("a geom")),
                }
            }
            TokenKind::Identifier => {
                let next_is_geom = matches!(
                    self.tokens.get(self.pos + 1).map(|t| t.kind),
                    Some(TokenKind::Keyword(g)) if geom_of(g).is_some()
                );
                if next_is_geom {
                    Err(Diagnostic::error(
                        Code::UnknownQualifier,
                        first.span(),
                        format!(
                            "unknown geom qualifier `{}`; expected regression, jittered, stacked or unstacked",
                            first.lexeme
                        ),
                    ))
                } else {
                    Err(unknown_geom(first))
                }
            }
            _ => Err(self.unexpected(first, "a geom")),
        }
    }

    fn scale_clause(&mut self) -> Result<Vec<ScaleSpec>, Diagnostic> {
        self.by_clause_head(Keyword::Scale, "scale by")?;
        let mut specs = Vec::new();
        loop {
            let name = self.expect(TokenKind::Identifier)?;
            if !name.lexeme.eq_ignore_ascii_case("log") {
                return Err(Diagnostic::error(
                    Code::UnknownFunction,
                    name.span(),
                    format!("unknown scale `{}`; expected log", name.lexeme),
                ));
            }
            self.expect(TokenKind::LParen)?;
            let (aesthetic, aes_span) = self.aesthetic()?;
            if !aesthetic.is_positional() {
                return Err(Diagnostic::error(
                    Code::InvalidArgument,
                    aes_span,
                    "log scales apply to positional aesthetics only",
                ));
            }
            let close = self.expect(TokenKind::RParen)?;
            specs.push(ScaleSpec {
                transform: Transform::Log,
                aesthetic,
                span: name.span().to(close.span()),
            });
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }
        Ok(specs)
    }

    fn by_clause_head(&mut self, k: Keyword, name: &str) -> Result<Span, Diagnostic> {
        let head = self.expect_keyword(k)?;
        self.expect_keyword(Keyword::By)?;
        self.require_body(head, name)?;
        Ok(head.span())
    }

    fn facet_clause(&mut self) -> Result<FacetSpec, Diagnostic> {
        let head = self.by_clause_head(Keyword::Facet, "facet by")?;
        let exprs = self.expr_list()?;
        let mut end = exprs.last().map(|e| e.span).unwrap_or(head);
        let orientation = match self.peek_keyword() {
            Some(Keyword::Vertically) => Some(Orientation::Vertical),
            Some(Keyword::Horizontally) => Some(Orientation::Horizontal),
            _ => None,
        };
        if orientation.is_some() {
            end = self.bump().unwrap().span();
        }
        Ok(FacetSpec {
            exprs,
            orientation,
            span: head.to(end),
        })
    }

    fn title_clause(&mut self) -> Result<Vec<TitleSpec>, Diagnostic> {
        let head = self.expect_keyword(Keyword::Title)?;
        self.require_body(head, "title")?;
        let mut titles: Vec<TitleSpec> = Vec::new();
        loop {
            let (aesthetic, aes_span) = self.aesthetic()?;
            self.expect_keyword(Keyword::As)?;
            let text = self.expect(TokenKind::StringLiteral)?;
            if titles.iter().any(|t| t.aesthetic == aesthetic) {
                return Err(Diagnostic::error(
                    Code::DuplicateTitle,
                    aes_span,
                    format!("aesthetic `{aesthetic}` already has a title"),
                ));
            }
            titles.push(TitleSpec {
                aesthetic,
                title: text.string_value(),
                span: aes_span.to(text.span()),
            });
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }
        Ok(titles)
    }
}

/// Canonical text of a statement: lowercase keywords, one clause per line,
/// two-space indentation for clause bodies.
pub fn unparse(stmt: &SglStatement) -> String {
    let mut out = String::new();
    for (i, layer) in stmt.layers.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\nlayer\n\n");
        }
        unparse_layer(layer, &mut out);
    }
    if !stmt.scale_specs.is_empty() {
        let items: Vec<String> = stmt
            .scale_specs
            .iter()
            .map(|s| format!("log({})", s.aesthetic))
            .collect();
        out.push_str("\nscale by\n  ");
        out.push_str(&items.join(", "));
    }
    if let Some(facet) = &stmt.facet_spec {
        out.push_str("\nfacet by\n");
        let items: Vec<String> = facet.exprs.iter().map(|e| format!("  {e}")).collect();
        out.push_str(&items.join(",\n"));
        match facet.orientation {
            Some(Orientation::Vertical) => out.push_str(" vertically"),
            Some(Orientation::Horizontal) => out.push_str(" horizontally"),
            None => {}
        }
    }
    if !stmt.title_specs.is_empty() {
        out.push_str("\ntitle\n");
        let items: Vec<String> = stmt
            .title_specs
            .iter()
            .map(|t| format!("  {} as '{}'", t.aesthetic, t.title.replace('\'', "''")))
            .collect();
        out.push_str(&items.join(",\n"));
    }
    out.push(';');
    out
}

fn unparse_layer(layer: &LayerSpec, out: &mut String) {
    let mappings: Vec<String> = layer
        .mappings
        .iter()
        .map(|m| format!("{} as {}", m.expr, m.aesthetic))
        .collect();
    if mappings.len() == 1 {
        out.push_str("visualize ");
        out.push_str(&mappings[0]);
    } else {
        out.push_str("visualize\n");
        let indented: Vec<String> = mappings.iter().map(|m| format!("  {m}")).collect();
        out.push_str(&indented.join(",\n"));
    }
    match &layer.source {
        DataSource::TableRef(name) => {
            out.push_str("\nfrom ");
            out.push_str(name);
        }
        DataSource::Subquery(sql) => {
            out.push_str("\nfrom (\n");
            out.push_str(sql);
            out.push_str("\n)");
        }
    }
    for (name, exprs) in [("group by", &layer.group_by), ("collect by", &layer.collect_by)] {
        if exprs.is_empty() {
            continue;
        }
        out.push('\n');
        out.push_str(name);
        out.push('\n');
        let items: Vec<String> = exprs.iter().map(|e| format!("  {e}")).collect();
        out.push_str(&items.join(",\n"));
    }
    out.push_str("\nusing ");
    match layer.geom_chain.as_slice() {
        [single] => out.push_str(&geom_text(single)),
        chain => {
            out.push_str("(\n");
            let items: Vec<String> = chain.iter().map(|g| format!("  {}", geom_text(g))).collect();
            out.push_str(&items.join("\n  layer\n"));
            out.push_str("\n)");
        }
    }
}

fn geom_text(g: &GeomExpr) -> String {
    let name = match g.geom {
        Geom::Point => "points",
        Geom::Bar => "bars",
        Geom::Line => "line",
    };
    match g.qualifier {
        Some(q) => format!("{q} {name}"),
        None => name.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCATTER: &str = "visualize\n  horsepower as x,\n  miles_per_gallon as y\nfrom cars\nusing points;";

    fn err(src: &str) -> Diagnostic {
        parse_str(src).unwrap_err()
    }

    #[test]
    fn parses_scatterplot() {
        let stmt = parse_str(SCATTER).unwrap();
        assert_eq!(stmt.layers.len(), 1);
        let layer = &stmt.layers[0];
        assert_eq!(layer.mappings.len(), 2);
        assert_eq!(layer.mappings[0].expr, Expr::column("horsepower"));
        assert_eq!(layer.mappings[0].aesthetic, Aesthetic::X);
        assert_eq!(layer.mappings[1].aesthetic, Aesthetic::Y);
        assert_eq!(layer.source, DataSource::TableRef("cars".into()));
        assert_eq!(layer.geom_chain.len(), 1);
        assert_eq!(layer.geom_chain[0].geom, Geom::Point);
        assert_eq!(layer.geom_chain[0].qualifier, None);
    }

    #[test]
    fn statement_level_layering() {
        let src = "visualize horsepower as x, miles_per_gallon as y from cars using points \
                   layer visualize horsepower as x, miles_per_gallon as y from cars using regression line;";
        let stmt = parse_str(src).unwrap();
        assert_eq!(stmt.layers.len(), 2);
        assert_eq!(
            stmt.layers[1].geom_chain[0].qualifier,
            Some(Qualifier::Regression)
        );
        assert_eq!(stmt.layers[1].geom_chain[0].geom, Geom::Line);
    }

    #[test]
    fn semicolon_is_optional() {
        assert!(parse_str("visualize x as x from t using points").is_ok());
    }

    #[test]
    fn geom_chains() {
        let chain = |s: &str| parse_geom_chain(&tokenize(s).unwrap()).unwrap();
        let layered = chain("(points layer regression line)");
        assert_eq!(layered.len(), 2);
        assert_eq!((layered[0].qualifier, layered[0].geom), (None, Geom::Point));
        assert_eq!(
            (layered[1].qualifier, layered[1].geom),
            (Some(Qualifier::Regression), Geom::Line)
        );
        assert_eq!(chain("bars")[0].geom, Geom::Bar);
        let jit = chain("jittered points");
        assert_eq!((jit[0].qualifier, jit[0].geom), (Some(Qualifier::Jittered), Geom::Point));
    }

    #[test]
    fn geom_chain_errors() {
        let chain = |s: &str| parse_geom_chain(&tokenize(s).unwrap()).unwrap_err().code;
        assert_eq!(chain("circles"), Code::UnknownGeom);
        assert_eq!(chain("smooth line"), Code::UnknownQualifier);
        assert_eq!(chain("jittered circles"), Code::UnknownGeom);
        assert_eq!(chain("(points layer line"), Code::UnbalancedParens);
    }

    #[test]
    fn clause_order_is_enforced() {
        let e = err("visualize a as x from t using points title x as 'A' scale by log(x)");
        assert_eq!(e.code, Code::MisplacedClause);
        assert_eq!(e.col, 53);

        let e = err("visualize a as x from t using points facet by b layer visualize a as x from t using points");
        assert_eq!(e.code, Code::MisplacedClause);

        let e = err("visualize a as x from t collect by c group by d using points");
        assert_eq!(e.code, Code::MisplacedClause);

        let e = err("from t visualize a as x using points");
        assert_eq!(e.code, Code::MisplacedClause);
        assert_eq!((e.line, e.col), (1, 1));
    }

    #[test]
    fn empty_clauses() {
        assert_eq!(err("visualize from t using points").code, Code::UnexpectedToken);
        assert_eq!(err("visualize a as x from t group by using points").code, Code::EmptyClause);
        assert_eq!(err("visualize a as x from using points").code, Code::EmptyClause);
        assert_eq!(err("visualize a as x from t using;").code, Code::EmptyClause);
    }

    #[test]
    fn malformed_input_reports_unexpected_token() {
        let e = err("visualize a as q from t using points");
        assert_eq!(e.code, Code::UnexpectedToken);
        assert_eq!(e.col, 16);
        assert!(e.message.contains("aesthetic"));

        let e = err("");
        assert_eq!(e.code, Code::UnexpectedToken);
    }

    #[test]
    fn function_arguments() {
        assert_eq!(err("visualize log(a) as x from t using points").code, Code::UnknownFunction);
        assert_eq!(err("visualize mean(*) as x from t using points").code, Code::InvalidArgument);
        assert_eq!(err("visualize mean(bin(a)) as x from t using points").code, Code::InvalidArgument);
        assert_eq!(err("visualize mean(a, b) as x from t using points").code, Code::InvalidArgument);
        assert!(parse_str("visualize count(a) as y from t using bars").is_ok());
    }

    #[test]
    fn duplicates() {
        assert_eq!(err("visualize a as x, b as x from t using points").code, Code::DuplicateAesthetic);
        assert_eq!(
            err("visualize a as x from t using points title x as 'A', x as 'B'").code,
            Code::DuplicateTitle
        );
    }

    #[test]
    fn scale_clause_rejects_color() {
        assert_eq!(
            err("visualize a as x, c as color from t using points scale by log(color)").code,
            Code::InvalidArgument
        );
    }

    #[test]
    fn facet_orientation() {
        let stmt = parse_str("visualize a as x from t using points facet by origin vertically;").unwrap();
        let facet = stmt.facet_spec.unwrap();
        assert_eq!(facet.orientation, Some(Orientation::Vertical));
        let stmt = parse_str("visualize a as x from t using points facet by era, origin").unwrap();
        let facet = stmt.facet_spec.unwrap();
        assert_eq!(facet.exprs.len(), 2);
        assert_eq!(facet.effective_orientation(), Orientation::Horizontal);
    }

    #[test]
    fn unparse_minimal() {
        let stmt = parse_str("visualize a as x from t using points").unwrap();
        assert_eq!(unparse(&stmt), "visualize a as x\nfrom t\nusing points;");
    }

    #[test]
    fn unparse_scatter_matches_clause_per_line_layout() {
        let stmt = parse_str(SCATTER).unwrap();
        assert_eq!(unparse(&stmt), SCATTER);
    }

    #[test]
    fn unparse_facet_grid() {
        let stmt = parse_str(
            "visualize horsepower as x, miles_per_gallon as y from (select * from cars) \
             using points facet by era, origin",
        )
        .unwrap();
        let text = unparse(&stmt);
        assert!(text.ends_with("facet by\n  era,\n  origin;"), "{text}");
        assert_eq!(parse_str(&text).unwrap(), stmt);
    }

    #[test]
    fn spans_point_at_source() {
        let stmt = parse_str(SCATTER).unwrap();
        let m = &stmt.layers[0].mappings[1];
        assert_eq!((m.expr.span.line, m.expr.span.col), (3, 3));
    }
}
