//! Evaluation of derived relations, SELECT queries and views.

pub mod analyze;
pub mod eval;
pub mod expr;

use thiserror::Error;

use crate::value::Oid;

pub use analyze::{analyze, query_heading, Plan, ResolvedSource};
pub use eval::{eval_component, eval_derived_relation, eval_select, eval_view, Evaluator, Loc, Located};
pub use expr::CExpr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("unknown attribute {0}")]
    UnknownAttribute(String),
    #[error("ambiguous attribute {0}")]
    AmbiguousAttribute(String),
    #[error("duplicate output attribute {0}")]
    DuplicateAttribute(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("aggregate misuse: {0}")]
    AggregateMisuse(String),
    #[error("unknown view {0}")]
    UnknownView(String),
    #[error("in view {name}: {source}")]
    View { name: String, source: Box<QueryError> },
    #[error("{class}.{component} of {oid} has no realization")]
    UnrealizedComponent { oid: Oid, class: String, component: String },
    #[error("{component} of {class} is a method and cannot be read")]
    NotReadable { class: String, component: String },
    #[error("evaluating {component} of {oid}: {message}")]
    EvaluationError { oid: Oid, component: String, message: String },
    #[error("{component} of {oid} depends on its own value")]
    RecursiveRealization { oid: Oid, component: String },
    #[error("{0}")]
    Arithmetic(String),
    #[error("no live object {0}")]
    UnknownOid(Oid),
}

/// A reference name bound to objects of a class, giving rise to a local
/// namespace of relations rooted at that name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceBinding {
    pub name: String,
    pub class: String,
    pub targets: Vec<Oid>,
}

/// Name-resolution scope of a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Global {
        references: Vec<ReferenceBinding>,
    },
    /// Inside a realization of `class`: its own components resolve first.
    Object {
        class: String,
    },
}

impl Scope {
    pub fn global() -> Self {
        Scope::Global { references: Vec::new() }
    }
}

/// Where a query is evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalContext {
    Global {
        references: Vec<ReferenceBinding>,
    },
    /// Realization context: `class` is the class whose realization is running.
    ObjectLocal {
        oid: Oid,
        class: String,
    },
}

impl EvalContext {
    pub fn global() -> Self {
        EvalContext::Global { references: Vec::new() }
    }

    pub fn scope(&self) -> Scope {
        match self {
            EvalContext::Global { references } => Scope::Global { references: references.clone() },
            EvalContext::ObjectLocal { class, .. } => Scope::Object { class: class.clone() },
        }
    }

    pub fn receiver(&self) -> Option<Oid> {
        match self {
            EvalContext::Global { .. } => None,
            EvalContext::ObjectLocal { oid, .. } => Some(*oid),
        }
    }
}
