//! Statement execution for scripts and the interactive loop.

use std::fmt;

use thiserror::Error;

use crate::catalog::CatalogError;
use crate::exec::{self, ExecError, ExecutionReport};
use crate::lang::{format_statement, parse_script, Span, Statement, StatementKind, SyntaxError};
use crate::namespace::{local_namespace, NamespaceError, NamespaceIndex};
use crate::query::{EvalContext, Evaluator, QueryError, ReferenceBinding};
use crate::snapshot::{self, SnapshotError};
use crate::store::{Database, StoreError};
use crate::value::Oid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Namespace(#[from] NamespaceError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

/// An execution error tied to the statement that raised it.
#[derive(Debug, Clone, PartialEq)]
pub struct StatementError {
    pub span: Span,
    pub error: SessionError,
}

impl fmt::Display for StatementError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.error {
            SessionError::Syntax(e) => write!(f, "{e}"),
            other => write!(f, "{}: {other}", self.span),
        }
    }
}

impl std::error::Error for StatementError {}

#[derive(Debug, Clone, Default)]
pub struct Session {
    db: Database,
    references: Vec<ReferenceBinding>,
    pub echo: bool,
}

impl Session {
    pub fn new() -> Self {
        Session::default()
    }

    pub fn with_database(db: Database) -> Self {
        Session { db, ..Session::default() }
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn set_database(&mut self, db: Database) {
        self.db = db;
        self.references.clear();
    }

    pub fn references(&self) -> &[ReferenceBinding] {
        &self.references
    }

    /// Binds `name` to objects of `class`; with no objects given, to the
    /// class's current extent.
    pub fn bind_reference(&mut self, name: &str, class: &str, targets: Vec<Oid>) -> Result<(), SessionError> {
        local_namespace(self.db.catalog(), name, class)?;
        let targets = if targets.is_empty() { self.db.extent(class, true)? } else { targets };
        for oid in &targets {
            let ok = self.db.class_of(*oid).is_some_and(|c| self.db.catalog().is_subclass_of(c, class));
            if !ok {
                return Err(StoreError::UnknownOid(*oid).into());
            }
        }
        self.references.retain(|r| r.name != name);
        self.references.push(ReferenceBinding { name: name.into(), class: class.into(), targets });
        Ok(())
    }

    /// Global relation listing followed by the local namespaces of bound references.
    pub fn relations_listing(&self) -> String {
        let mut out = NamespaceIndex::global(self.db.catalog()).dump();
        for r in &self.references {
            if let Ok(index) = NamespaceIndex::local(self.db.catalog(), &r.name, &r.class) {
                out.push_str(&index.dump());
            }
        }
        out
    }

    /// Executes one statement and renders its result.
    pub fn execute(&mut self, stmt: &Statement) -> Result<String, SessionError> {
        let (db, text) = match &stmt.kind {
            StatementKind::CreateClass(c) => (self.db.define_class(c)?, format!("class {} defined", c.name)),
            StatementKind::AlterRealize(a) => {
                let db = self.db.alter_realize(a)?;
                let kind = db.catalog().effective_component(&a.class, &a.component)?.realization.kind();
                (db, format!("{}.{} realized as {kind}", a.class, a.component))
            }
            StatementKind::CreateView { name, query } => {
                (self.db.define_view(name, query)?, format!("view {name} defined"))
            }
            StatementKind::CreateObjects { class, assignments, count } => {
                let before = self.db.next_oid();
                let (db, _) = exec::exec_create_objects(&self.db, class, assignments, *count)?;
                let oids: Vec<String> = (before..db.next_oid()).map(|n| Oid(n).to_string()).collect();
                let text = match oids.len() {
                    1 => format!("created {}", oids[0]),
                    n => format!("created {n} objects: {}", oids.join(", ")),
                };
                (db, text)
            }
            StatementKind::DeleteObjects { class, predicate } => {
                let (db, report) = exec::exec_delete_objects(&self.db, class, predicate.as_ref())?;
                (db, format!("deleted {} object(s)", report.succeeded))
            }
            StatementKind::Select(q) => {
                let ctx = EvalContext::Global { references: self.references.clone() };
                let relation = Evaluator::new(&self.db).eval_select(q, &ctx)?;
                return Ok(relation.to_table().trim_end().to_string());
            }
            StatementKind::GroupCall { class, method, args, predicate } => {
                let (db, report) = exec::exec_group_call(&self.db, class, method, args, predicate.as_ref())?;
                (db, render_report("call", &report))
            }
            StatementKind::GroupUpdate { relation, assignments, predicate } => {
                let (db, report) = exec::exec_group_update(&self.db, relation, assignments, predicate.as_ref())?;
                (db, render_report("update", &report))
            }
        };
        self.db = db;
        Ok(text)
    }

    /// Executes statements in order, writing results to `out`. Stops at the
    /// first failing statement.
    pub fn run_statements(&mut self, stmts: &[Statement], out: &mut String) -> Result<(), StatementError> {
        for stmt in stmts {
            if self.echo {
                out.push_str(&format_statement(stmt));
                out.push('\n');
            }
            let text = self.execute(stmt).map_err(|error| StatementError { span: stmt.span, error })?;
            out.push_str(&text);
            out.push('\n');
        }
        Ok(())
    }

    /// Parses the whole source first, then executes it.
    pub fn run_source(&mut self, source: &str, out: &mut String) -> Result<(), StatementError> {
        let stmts = parse_script(source).map_err(|e| StatementError { span: e.span(), error: e.into() })?;
        self.run_statements(&stmts, out)
    }

    pub fn save_snapshot(&self) -> String {
        snapshot::save(&self.db)
    }

    pub fn load_snapshot(&mut self, text: &str) -> Result<(), SessionError> {
        self.set_database(snapshot::load(text)?);
        Ok(())
    }
}

fn render_report(what: &str, report: &ExecutionReport) -> String {
    format!("{what}: {report}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_cites_statement_line() {
        let mut s = Session::new();
        let mut out = String::new();
        let err = s.run_source("CREATE CLASS A { n INTEGER; }\n\nCREATE OBJECT B (n := 1);", &mut out).unwrap_err();
        assert_eq!(err.span.line, 3);
        assert!(err.to_string().starts_with("line 3, column 1: unknown class B"), "{err}");
        assert_eq!(out, "class A defined\n");
    }

    #[test]
    fn echo_prints_statements() {
        let mut s = Session::new();
        s.echo = true;
        let mut out = String::new();
        s.run_source("CREATE CLASS A {}", &mut out).unwrap();
        assert_eq!(out, "CREATE CLASS A { } ..\nclass A defined\n");
    }
}
