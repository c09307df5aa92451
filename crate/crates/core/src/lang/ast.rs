//! Abstract syntax of the command language.

use chrono::NaiveDateTime;

use crate::types::{Param, ScalarType, ValuableType};

use super::lexer::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    /// Position of the statement's first token.
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    CreateClass(CreateClass),
    AlterRealize(AlterRealize),
    CreateView { name: String, query: QueryExpr },
    CreateObjects { class: String, assignments: Vec<(String, Literal)>, count: u64 },
    DeleteObjects { class: String, predicate: Option<Expr> },
    Select(QueryExpr),
    GroupCall { class: String, method: String, args: Vec<Expr>, predicate: Option<Expr> },
    GroupUpdate { relation: String, assignments: Vec<(String, Expr)>, predicate: Option<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateClass {
    pub name: String,
    pub parent: Option<String>,
    pub components: Vec<ComponentSpec>,
}

/// One component declaration. `params` is `Some` exactly for methods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSpec {
    pub name: String,
    pub ty: ValuableType,
    pub params: Option<Vec<Param>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlterRealize {
    pub class: String,
    pub component: String,
    /// Restated method signature, when written (`REALIZE DoShip(d DATETIME) BOOL AS ...`).
    pub signature: Option<(Vec<Param>, ScalarType)>,
    pub realization: RealizationSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RealizationSpec {
    Stored,
    Query(QueryExpr),
    Procedure(Vec<BodyStmt>),
}

/// Statements allowed inside `BEGIN ... END`.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyStmt {
    Set { component: String, value: Expr },
    Insert { component: String, values: Vec<Expr> },
    Delete { component: String, predicate: Option<Expr> },
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryExpr {
    pub projections: Vec<Projection>,
    pub sources: Vec<Source>,
    pub predicate: Option<Expr>,
    pub group_by: Vec<String>,
}

impl QueryExpr {
    pub fn has_aggregates(&self) -> bool {
        self.projections.iter().any(|p| matches!(p.item, ProjItem::Aggregate(..)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub item: ProjItem,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjItem {
    Attr(String),
    Aggregate(AggFn, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFn {
    Sum,
    Count,
    Min,
    Max,
    Avg,
}

impl AggFn {
    pub fn as_str(self) -> &'static str {
        match self {
            AggFn::Sum => "SUM",
            AggFn::Count => "COUNT",
            AggFn::Min => "MIN",
            AggFn::Max => "MAX",
            AggFn::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Source {
    pub relation: String,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Literal),
    /// An attribute, parameter or component name; dotted names keep their dots.
    Path(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Every path mentioned in the expression, in source order.
    pub fn paths(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_paths(&mut out);
        out
    }

    fn collect_paths<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Literal(_) => {}
            Expr::Path(p) => out.push(p),
            Expr::Unary(_, e) => e.collect_paths(out),
            Expr::Binary(_, l, r) => {
                l.collect_paths(out);
                r.collect_paths(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    DateTime(NaiveDateTime),
    Ref(u64),
    Tuple(Vec<Literal>),
    Relation(Vec<Vec<Literal>>),
}
