//! Recursive-descent parser for scripts.
//!
//! Statements end with `;` or `..` (the block closer used after `}`), or at
//! end of input. A `CREATE CLASS` body closed by `}` needs no terminator.

use std::fmt;

use thiserror::Error;

use crate::types::{BaseType, Field, Param, RelationType, ScalarType, ValuableType};
use crate::value::parse_datetime;

use super::ast::*;
use super::lexer::{tokenize, Keyword, LexError, Span, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    /// The offending token's text, or `end of input`.
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: expected {}, found {}", self.span, self.expected.join(" or "), self.found)
    }
}

pub const END_OF_INPUT: &str = "end of input";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Lex(e) => e.span,
            SyntaxError::Parse(e) => e.span,
        }
    }

    /// True when more input could complete the text (used by the REPL to keep reading).
    pub fn is_incomplete(&self) -> bool {
        match self {
            SyntaxError::Lex(e) => e.message.starts_with("unterminated"),
            SyntaxError::Parse(e) => e.found == END_OF_INPUT,
        }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parses a whole script into statements, in source order.
pub fn parse_script(source: &str) -> Result<Vec<Statement>, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(tokens, end_span(source));
    Ok(parser.script()?)
}

/// Parses exactly one statement (trailing terminators allowed).
pub fn parse_statement(source: &str) -> Result<Statement, SyntaxError> {
    let mut stmts = parse_script(source)?;
    match stmts.len() {
        1 => Ok(stmts.remove(0)),
        n => Err(SyntaxError::Parse(ParseError {
            span: Span::new(1, 1),
            expected: vec!["exactly one statement".into()],
            found: format!("{n} statements"),
        })),
    }
}

/// Parses a standalone query expression.
pub fn parse_query(source: &str) -> Result<QueryExpr, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(tokens, end_span(source));
    parser.expect_keyword(Keyword::Select)?;
    let q = parser.query_after_select()?;
    parser.skip_terminators();
    parser.expect_eof()?;
    Ok(q)
}

/// Parses a standalone expression.
pub fn parse_expr(source: &str) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(tokens, end_span(source));
    let e = parser.expr()?;
    parser.expect_eof()?;
    Ok(e)
}

/// Position just past the last character of the source.
fn end_span(source: &str) -> Span {
    let mut line = 1;
    let mut column = 1;
    for c in source.chars() {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    Span::new(line, column)
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: Span,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>, eof: Span) -> Self {
        Parser { tokens, pos: 0, eof }
    }

    pub(crate) fn from_source(source: &str) -> Result<Self, LexError> {
        Ok(Parser::new(tokenize(source)?, end_span(source)))
    }

    // ---- token helpers ----

    pub(crate) fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub(crate) fn span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.eof)
    }

    pub(crate) fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let found = match self.peek() {
            Some(t) => format!("'{}'", t.lexeme),
            None => END_OF_INPUT.to_string(),
        };
        Err(ParseError { span: self.span(), expected: expected.iter().map(|s| s.to_string()).collect(), found })
    }

    pub(crate) fn check_symbol(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(s))
    }

    fn check_keyword(&self, k: Keyword) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(k))
    }

    pub(crate) fn eat_symbol(&mut self, s: &str) -> bool {
        if self.check_symbol(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.check_keyword(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_symbol(&mut self, s: &str) -> PResult<()> {
        if self.eat_symbol(s) {
            Ok(())
        } else {
            self.error(&[&format!("'{s}'")])
        }
    }

    pub(crate) fn expect_keyword(&mut self, k: Keyword) -> PResult<()> {
        if self.eat_keyword(k) {
            Ok(())
        } else {
            self.error(&[k.as_str()])
        }
    }

    pub(crate) fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.advance().unwrap().lexeme),
            _ => self.error(&["identifier"]),
        }
    }

    /// An identifier or dotted path.
    fn expect_path(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Identifier | TokenKind::DottedPath) => {
                Ok(self.advance().unwrap().lexeme)
            }
            _ => self.error(&["name"]),
        }
    }

    pub(crate) fn expect_integer(&mut self) -> PResult<u64> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Integer => match t.lexeme.parse::<u64>() {
                Ok(n) => {
                    self.pos += 1;
                    Ok(n)
                }
                Err(_) => self.error(&["integer in range"]),
            },
            _ => self.error(&["integer"]),
        }
    }

    pub(crate) fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.error(&[END_OF_INPUT])
        }
    }

    fn at_terminator(&self) -> bool {
        self.check_symbol(";") || self.check_symbol("..")
    }

    pub(crate) fn skip_terminators(&mut self) {
        while self.at_terminator() {
            self.pos += 1;
        }
    }

    // ---- statements ----

    fn script(&mut self) -> PResult<Vec<Statement>> {
        let mut out = Vec::new();
        loop {
            self.skip_terminators();
            if self.at_eof() {
                return Ok(out);
            }
            let stmt = self.statement()?;
            let self_closing = matches!(stmt.kind, StatementKind::CreateClass(_));
            if !self_closing && !self.at_terminator() && !self.at_eof() {
                return self.error(&["';'", "'..'"]);
            }
            out.push(stmt);
        }
    }

    fn statement(&mut self) -> PResult<Statement> {
        let span = self.span();
        let Some(tok) = self.peek() else {
            return self.error(&["statement"]);
        };
        let kind = match tok.kind {
            TokenKind::Keyword(Keyword::Create) => self.create()?,
            TokenKind::Keyword(Keyword::Alter) => StatementKind::AlterRealize(self.alter()?),
            TokenKind::Keyword(Keyword::Select) => {
                self.advance();
                StatementKind::Select(self.query_after_select()?)
            }
            TokenKind::Keyword(Keyword::Delete) => {
                self.advance();
                let class = self.expect_ident()?;
                let predicate = self.opt_where()?;
                StatementKind::DeleteObjects { class, predicate }
            }
            TokenKind::Keyword(Keyword::Call) => self.call()?,
            TokenKind::Keyword(Keyword::Update) => self.update()?,
            _ => return self.error(&["CREATE", "ALTER", "SELECT", "DELETE", "CALL", "UPDATE"]),
        };
        Ok(Statement { kind, span })
    }

    fn create(&mut self) -> PResult<StatementKind> {
        self.expect_keyword(Keyword::Create)?;
        let Some(tok) = self.peek() else {
            return self.error(&["CLASS", "VIEW", "OBJECT", "name"]);
        };
        match tok.kind {
            TokenKind::Keyword(Keyword::Class) => {
                self.advance();
                Ok(StatementKind::CreateClass(self.create_class_body()?))
            }
            TokenKind::Keyword(Keyword::View) => {
                self.advance();
                self.view_rest()
            }
            TokenKind::Identifier => self.view_rest(),
            TokenKind::Integer => {
                let count = self.expect_integer()?;
                if !self.eat_keyword(Keyword::Objects) {
                    self.expect_keyword(Keyword::Object)?;
                }
                self.objects_rest(count)
            }
            TokenKind::Keyword(Keyword::Object) | TokenKind::Keyword(Keyword::Objects) => {
                self.advance();
                self.objects_rest(1)
            }
            _ => self.error(&["CLASS", "VIEW", "OBJECT", "name"]),
        }
    }

    fn view_rest(&mut self) -> PResult<StatementKind> {
        let name = self.expect_ident()?;
        self.expect_keyword(Keyword::As)?;
        self.expect_keyword(Keyword::Select)?;
        let query = self.query_after_select()?;
        Ok(StatementKind::CreateView { name, query })
    }

    fn objects_rest(&mut self, count: u64) -> PResult<StatementKind> {
        let class = self.expect_ident()?;
        self.expect_symbol("(")?;
        let mut assignments = Vec::new();
        if !self.eat_symbol(")") {
            loop {
                let name = self.expect_ident()?;
                self.expect_symbol(":=")?;
                assignments.push((name, self.literal()?));
                if self.eat_symbol(")") {
                    break;
                }
                self.expect_symbol(",")?;
            }
        }
        Ok(StatementKind::CreateObjects { class, assignments, count })
    }

    fn create_class_body(&mut self) -> PResult<CreateClass> {
        let name = self.expect_ident()?;
        let parent = if self.eat_keyword(Keyword::Extend) { Some(self.expect_ident()?) } else { None };
        self.expect_symbol("{")?;
        let mut components = Vec::new();
        loop {
            self.skip_terminators();
            if self.eat_symbol("}") {
                break;
            }
            if self.at_eof() {
                return self.error(&["component", "'}'"]);
            }
            components.push(self.component()?);
        }
        Ok(CreateClass { name, parent, components })
    }

    fn component(&mut self) -> PResult<ComponentSpec> {
        let name = self.expect_ident()?;
        if self.check_symbol("(") {
            let params = self.params()?;
            let ret = self.scalar_type()?;
            return Ok(ComponentSpec { name, ty: ValuableType::Scalar(ret), params: Some(params) });
        }
        let ty = self.valuable_type()?;
        Ok(ComponentSpec { name, ty, params: None })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_symbol("(")?;
        let mut params = Vec::new();
        if self.eat_symbol(")") {
            return Ok(params);
        }
        loop {
            let name = self.expect_ident()?;
            let ty = self.scalar_type()?;
            params.push(Param { name, ty });
            if self.eat_symbol(")") {
                return Ok(params);
            }
            self.expect_symbol(",")?;
        }
    }

    fn base_type(&self) -> Option<BaseType> {
        match self.peek()?.kind {
            TokenKind::Keyword(Keyword::Integer) => Some(BaseType::Integer),
            TokenKind::Keyword(Keyword::Float) => Some(BaseType::Float),
            TokenKind::Keyword(Keyword::String) => Some(BaseType::String),
            TokenKind::Keyword(Keyword::Bool) => Some(BaseType::Bool),
            TokenKind::Keyword(Keyword::DateTime) => Some(BaseType::DateTime),
            _ => None,
        }
    }

    fn scalar_type(&mut self) -> PResult<ScalarType> {
        if let Some(b) = self.base_type() {
            self.advance();
            return Ok(ScalarType::Base(b));
        }
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(ScalarType::Reference(self.advance().unwrap().lexeme)),
            _ => self.error(&["scalar type"]),
        }
    }

    fn valuable_type(&mut self) -> PResult<ValuableType> {
        if self.eat_keyword(Keyword::Set) {
            self.expect_keyword(Keyword::Of)?;
            let (heading, key) = self.fields(true)?;
            return Ok(ValuableType::Relation(RelationType { heading, key }));
        }
        if self.eat_keyword(Keyword::Tuple) {
            let (fields, _) = self.fields(false)?;
            return Ok(ValuableType::Tuple(fields));
        }
        if self.base_type().is_some() || self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            return Ok(ValuableType::Scalar(self.scalar_type()?));
        }
        self.error(&["type"])
    }

    fn fields(&mut self, allow_key: bool) -> PResult<(Vec<Field>, Option<Vec<String>>)> {
        self.expect_symbol("{")?;
        let mut fields = Vec::new();
        let mut key = None;
        loop {
            self.skip_terminators();
            if self.eat_symbol("}") {
                return Ok((fields, key));
            }
            if allow_key && key.is_none() && self.eat_keyword(Keyword::Key) {
                self.expect_symbol("(")?;
                let mut names = vec![self.expect_ident()?];
                while self.eat_symbol(",") {
                    names.push(self.expect_ident()?);
                }
                self.expect_symbol(")")?;
                key = Some(names);
                continue;
            }
            if self.at_eof() {
                return self.error(&["field", "'}'"]);
            }
            let name = self.expect_ident()?;
            let ty = self.valuable_type()?;
            fields.push(Field { name, ty });
        }
    }

    fn alter(&mut self) -> PResult<AlterRealize> {
        self.expect_keyword(Keyword::Alter)?;
        self.expect_keyword(Keyword::Class)?;
        let class = self.expect_ident()?;
        self.expect_keyword(Keyword::Realize)?;
        let component = self.expect_ident()?;
        let signature = if self.check_symbol("(") {
            let params = self.params()?;
            Some((params, self.scalar_type()?))
        } else {
            None
        };
        self.expect_keyword(Keyword::As)?;
        let realization = if self.eat_keyword(Keyword::Stored) {
            RealizationSpec::Stored
        } else if self.eat_keyword(Keyword::Select) {
            RealizationSpec::Query(self.query_after_select()?)
        } else if self.eat_keyword(Keyword::Begin) {
            RealizationSpec::Procedure(self.body()?)
        } else {
            return self.error(&["STORED", "SELECT", "BEGIN"]);
        };
        Ok(AlterRealize { class, component, signature, realization })
    }

    fn body(&mut self) -> PResult<Vec<BodyStmt>> {
        let mut stmts = Vec::new();
        loop {
            self.skip_terminators();
            if self.eat_keyword(Keyword::End) {
                return Ok(stmts);
            }
            let stmt = if self.eat_keyword(Keyword::Set) {
                let component = self.expect_ident()?;
                self.expect_symbol(":=")?;
                BodyStmt::Set { component, value: self.expr()? }
            } else if self.eat_keyword(Keyword::Insert) {
                self.expect_keyword(Keyword::Into)?;
                let component = self.expect_ident()?;
                self.expect_keyword(Keyword::Values)?;
                self.expect_symbol("(")?;
                let mut values = vec![self.expr()?];
                while self.eat_symbol(",") {
                    values.push(self.expr()?);
                }
                self.expect_symbol(")")?;
                BodyStmt::Insert { component, values }
            } else if self.eat_keyword(Keyword::Delete) {
                self.expect_keyword(Keyword::From)?;
                let component = self.expect_ident()?;
                let predicate = self.opt_where()?;
                BodyStmt::Delete { component, predicate }
            } else if self.eat_keyword(Keyword::Return) {
                BodyStmt::Return(self.expr()?)
            } else {
                return self.error(&["SET", "INSERT", "DELETE", "RETURN", "END"]);
            };
            if !self.at_terminator() {
                return self.error(&["';'"]);
            }
            stmts.push(stmt);
        }
    }

    fn call(&mut self) -> PResult<StatementKind> {
        self.expect_keyword(Keyword::Call)?;
        let target = match self.peek() {
            Some(t) if t.kind == TokenKind::DottedPath && t.lexeme.matches('.').count() == 1 => {
                self.advance().unwrap().lexeme
            }
            _ => return self.error(&["Class.Method"]),
        };
        let (class, method) = target.split_once('.').unwrap();
        self.expect_symbol("(")?;
        let mut args = Vec::new();
        if !self.eat_symbol(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_symbol(")") {
                    break;
                }
                self.expect_symbol(",")?;
            }
        }
        let predicate = self.opt_where()?;
        Ok(StatementKind::GroupCall { class: class.to_string(), method: method.to_string(), args, predicate })
    }

    fn update(&mut self) -> PResult<StatementKind> {
        self.expect_keyword(Keyword::Update)?;
        let relation = self.expect_path()?;
        self.expect_keyword(Keyword::Set)?;
        let mut assignments = Vec::new();
        loop {
            let attr = self.expect_path()?;
            self.expect_symbol("=")?;
            assignments.push((attr, self.expr()?));
            if !self.eat_symbol(",") {
                break;
            }
        }
        let predicate = self.opt_where()?;
        Ok(StatementKind::GroupUpdate { relation, assignments, predicate })
    }

    fn opt_where(&mut self) -> PResult<Option<Expr>> {
        if self.eat_keyword(Keyword::Where) {
            Ok(Some(self.expr()?))
        } else {
            Ok(None)
        }
    }

    // ---- queries ----

    fn query_after_select(&mut self) -> PResult<QueryExpr> {
        let mut projections = vec![self.projection()?];
        while self.eat_symbol(",") {
            projections.push(self.projection()?);
        }
        self.expect_keyword(Keyword::From)?;
        let mut sources = vec![self.source()?];
        while self.eat_symbol(",") {
            sources.push(self.source()?);
        }
        let predicate = self.opt_where()?;
        let mut group_by = Vec::new();
        if self.eat_keyword(Keyword::Group) {
            self.expect_keyword(Keyword::By)?;
            group_by.push(self.expect_path()?);
            while self.eat_symbol(",") {
                group_by.push(self.expect_path()?);
            }
        }
        Ok(QueryExpr { projections, sources, predicate, group_by })
    }

    fn aggregate(&self) -> Option<AggFn> {
        match self.peek()?.kind {
            TokenKind::Keyword(Keyword::Sum) => Some(AggFn::Sum),
            TokenKind::Keyword(Keyword::Count) => Some(AggFn::Count),
            TokenKind::Keyword(Keyword::Min) => Some(AggFn::Min),
            TokenKind::Keyword(Keyword::Max) => Some(AggFn::Max),
            TokenKind::Keyword(Keyword::Avg) => Some(AggFn::Avg),
            _ => None,
        }
    }

    fn projection(&mut self) -> PResult<Projection> {
        let item = if let Some(f) = self.aggregate() {
            self.advance();
            self.expect_symbol("(")?;
            let path = self.expect_path()?;
            self.expect_symbol(")")?;
            ProjItem::Aggregate(f, path)
        } else {
            match self.peek() {
                Some(t) if matches!(t.kind, TokenKind::Identifier | TokenKind::DottedPath) => {
                    ProjItem::Attr(self.advance().unwrap().lexeme)
                }
                _ => return self.error(&["attribute", "aggregate"]),
            }
        };
        let alias = if self.eat_keyword(Keyword::As) { Some(self.expect_ident()?) } else { None };
        Ok(Projection { item, alias })
    }

    fn source(&mut self) -> PResult<Source> {
        let relation = self.expect_path()?;
        let alias = if self.eat_keyword(Keyword::As) || self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            Some(self.expect_ident()?)
        } else {
            None
        };
        Ok(Source { relation, alias })
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.and_expr()?;
        while self.eat_keyword(Keyword::Or) {
            let right = self.and_expr()?;
            left = Expr::binary(BinaryOp::Or, left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut left = self.not_expr()?;
        while self.eat_keyword(Keyword::And) {
            let right = self.not_expr()?;
            left = Expr::binary(BinaryOp::And, left, right);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_keyword(Keyword::Not) {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.additive()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Symbol => match t.lexeme.as_str() {
                "=" => Some(BinaryOp::Eq),
                "<>" | "!=" => Some(BinaryOp::Ne),
                "<" => Some(BinaryOp::Lt),
                "<=" => Some(BinaryOp::Le),
                ">" => Some(BinaryOp::Gt),
                ">=" => Some(BinaryOp::Ge),
                _ => None,
            },
            _ => None,
        };
        match op {
            Some(op) => {
                self.advance();
                let right = self.additive()?;
                Ok(Expr::binary(op, left, right))
            }
            None => Ok(left),
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.check_symbol("+") {
                BinaryOp::Add
            } else if self.check_symbol("-") {
                BinaryOp::Sub
            } else {
                return Ok(left);
            };
            self.advance();
            let right = self.multiplicative()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = if self.check_symbol("*") {
                BinaryOp::Mul
            } else if self.check_symbol("/") {
                BinaryOp::Div
            } else {
                return Ok(left);
            };
            self.advance();
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.check_symbol("-") {
            let numeric_follows =
                self.peek_at(1).is_some_and(|t| matches!(t.kind, TokenKind::Integer | TokenKind::Float));
            if numeric_follows {
                return Ok(Expr::Literal(self.scalar_literal()?));
            }
            self.advance();
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Identifier | TokenKind::DottedPath) => {
                Ok(Expr::Path(self.advance().unwrap().lexeme))
            }
            Some(t) if t.is_symbol("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_symbol(")")?;
                Ok(e)
            }
            Some(_) if self.starts_scalar_literal() => Ok(Expr::Literal(self.scalar_literal()?)),
            _ => self.error(&["expression"]),
        }
    }

    // ---- literals ----

    fn starts_scalar_literal(&self) -> bool {
        match self.peek() {
            Some(t) => {
                matches!(
                    t.kind,
                    TokenKind::Integer | TokenKind::Float | TokenKind::String | TokenKind::Bool | TokenKind::DateTime
                ) || t.is_symbol("@")
                    || t.is_symbol("-")
            }
            None => false,
        }
    }

    fn scalar_literal(&mut self) -> PResult<Literal> {
        let negative = self.eat_symbol("-");
        let Some(tok) = self.peek().cloned() else {
            return self.error(&["literal"]);
        };
        let lit = match tok.kind {
            TokenKind::Integer => {
                let text = if negative { format!("-{}", tok.lexeme) } else { tok.lexeme.clone() };
                match text.parse::<i64>() {
                    Ok(i) => Literal::Int(i),
                    Err(_) => return self.error(&["integer in range"]),
                }
            }
            TokenKind::Float => match tok.lexeme.parse::<f64>() {
                Ok(x) if x.is_finite() => Literal::Float(if negative { -x } else { x }),
                _ => return self.error(&["finite number"]),
            },
            _ if negative => return self.error(&["number"]),
            TokenKind::String => Literal::Str(tok.string_value()),
            TokenKind::Bool => Literal::Bool(tok.lexeme.eq_ignore_ascii_case("TRUE")),
            TokenKind::DateTime => match parse_datetime(tok.datetime_text()) {
                Some(d) => Literal::DateTime(d),
                None => return self.error(&["ISO-8601 datetime"]),
            },
            TokenKind::Symbol if tok.lexeme == "@" => {
                self.advance();
                return Ok(Literal::Ref(self.expect_integer()?));
            }
            _ => return self.error(&["literal"]),
        };
        self.advance();
        Ok(lit)
    }

    /// Any literal, including tuple `( ... )` and relation `{ ( ... ), ... }` forms.
    pub(crate) fn literal(&mut self) -> PResult<Literal> {
        if self.eat_symbol("(") {
            let mut items = vec![self.literal()?];
            while self.eat_symbol(",") {
                items.push(self.literal()?);
            }
            self.expect_symbol(")")?;
            return Ok(Literal::Tuple(items));
        }
        if self.eat_symbol("{") {
            let mut rows = Vec::new();
            if self.eat_symbol("}") {
                return Ok(Literal::Relation(rows));
            }
            loop {
                if !self.check_symbol("(") {
                    return self.error(&["tuple literal"]);
                }
                match self.literal()? {
                    Literal::Tuple(items) => rows.push(items),
                    _ => unreachable!("'(' always starts a tuple literal"),
                }
                if self.eat_symbol("}") {
                    return Ok(Literal::Relation(rows));
                }
                self.expect_symbol(",")?;
            }
        }
        self.scalar_literal()
    }
}
