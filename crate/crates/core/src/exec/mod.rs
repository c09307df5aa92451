//! Set-oriented commands: group method calls, group updates, object
//! creation and deletion.
//!
//! Every command is all-or-nothing. It runs on a private copy of the
//! database and the copy replaces the original only when no object failed.
//! The result equals running the command object by object in ascending Oid
//! order.

pub mod procedure;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::catalog::Realization;
use crate::lang::{Expr, Literal};
use crate::namespace::{class_tree, leaves};
use crate::query::analyze::resolve_derived;
use crate::query::expr::{coerce_for_assignment, compile, CExpr};
use crate::query::{EvalContext, Evaluator, Loc, QueryError, Scope};
use crate::store::{Database, StoreError};
use crate::types::ScalarType;
use crate::value::{Attribute, Oid, TupleSet, Value};

use procedure::{compile_body, Activation, CompiledBody};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionReport {
    pub targeted: usize,
    pub succeeded: usize,
    pub failures: Vec<(Oid, String)>,
    /// Values returned by method bodies, for method calls.
    pub returned: Option<BTreeMap<Oid, Value>>,
}

impl fmt::Display for ExecutionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "targeted {}, succeeded {}", self.targeted, self.succeeded)?;
        if !self.failures.is_empty() {
            write!(f, ", failed {}", self.failures.len())?;
        }
        for (oid, message) in &self.failures {
            write!(f, "\n  {oid}: {message}")?;
        }
        if let Some(returned) = &self.returned {
            for (oid, v) in returned {
                write!(f, "\n  {oid} -> {v}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("class {class} has no method {method}")]
    UnknownMethod { class: String, method: String },
    #[error("{class}.{method} is not a method")]
    NotAProcedure { class: String, method: String },
    #[error("{class}.{method} takes {expected} argument(s), {actual} given")]
    ArityMismatch { class: String, method: String, expected: usize, actual: usize },
    #[error("{class}.{component} is not updatable for {}", list(objects))]
    NotUpdatable { class: String, component: String, objects: Vec<Oid> },
    #[error("command rolled back: {report}")]
    Aborted { report: Box<ExecutionReport> },
}

fn list(oids: &[Oid]) -> String {
    oids.iter().map(Oid::to_string).collect::<Vec<_>>().join(", ")
}

/// Objects selected by a class and an optional predicate over the class's
/// root relation. An object is selected when any of its rows satisfies the
/// predicate.
pub fn target_set(db: &Database, class: &str, predicate: Option<&Expr>) -> Result<Vec<Oid>, ExecError> {
    let extent = db.extent(class, true)?;
    let Some(predicate) = predicate else {
        return Ok(extent);
    };
    let heading = resolve_derived(db.catalog(), &Scope::global(), class)
        .map(|(h, _)| h)
        .unwrap_or_else(|| vec![Attribute::new(class, ScalarType::Reference(class.into()))]);
    let pred = compile_predicate(predicate, &heading)?;
    let eval = Evaluator::new(db);
    let has_rows = class_tree(db.catalog(), class).is_ok_and(|t| !leaves(&t).is_empty());
    let mut out = Vec::new();
    for oid in extent {
        let rows = if has_rows { eval.object_rows(oid, class, &[])? } else { vec![Default::default()] };
        for row in rows {
            let mut values = vec![Value::Ref(oid)];
            values.extend(row.values);
            if pred.test(&values)? {
                out.push(oid);
                break;
            }
        }
    }
    Ok(out)
}

fn compile_predicate(predicate: &Expr, heading: &[Attribute]) -> Result<CExpr, QueryError> {
    let (e, ty) = compile(predicate, &mut |p| column(heading, p))?;
    if ty != ScalarType::BOOL {
        return Err(QueryError::TypeMismatch(format!("WHERE clause has type {ty}, expected BOOL")));
    }
    Ok(e)
}

fn column(heading: &[Attribute], name: &str) -> Result<(usize, ScalarType), QueryError> {
    heading
        .iter()
        .position(|a| a.name == name)
        .map(|i| (i, heading[i].ty.clone()))
        .ok_or_else(|| QueryError::UnknownAttribute(name.into()))
}

fn constant_args(args: &[Expr], params: &[crate::types::Param]) -> Result<Vec<Value>, QueryError> {
    args.iter()
        .zip(params)
        .map(|(a, p)| {
            let (e, ty) = compile(a, &mut |name| Err(QueryError::UnknownAttribute(name.into())))?;
            let (e, _) = coerce_for_assignment(e, ty, &p.ty)?;
            e.eval(&[])
        })
        .collect()
}

fn finish<T>(report: ExecutionReport, ok: T) -> Result<(T, ExecutionReport), ExecError> {
    if report.failures.is_empty() {
        Ok((ok, report))
    } else {
        Err(ExecError::Aborted { report: Box::new(report) })
    }
}

/// `CALL class.method(args) WHERE predicate`.
pub fn exec_group_call(
    db: &Database,
    class: &str,
    method: &str,
    args: &[Expr],
    predicate: Option<&Expr>,
) -> Result<(Database, ExecutionReport), ExecError> {
    let comp = db.catalog().effective_component(class, method).map_err(|e| match e {
        crate::catalog::CatalogError::UnknownComponent { .. } => {
            ExecError::UnknownMethod { class: class.into(), method: method.into() }
        }
        other => ExecError::Store(other.into()),
    })?;
    let Some(params) = &comp.params else {
        return Err(ExecError::NotAProcedure { class: class.into(), method: method.into() });
    };
    if params.len() != args.len() {
        return Err(ExecError::ArityMismatch {
            class: class.into(),
            method: method.into(),
            expected: params.len(),
            actual: args.len(),
        });
    }
    let args = constant_args(args, params)?;
    let targets = target_set(db, class, predicate)?;

    let mut report = ExecutionReport { targeted: targets.len(), returned: Some(BTreeMap::new()), ..Default::default() };
    let mut failed: BTreeMap<Oid, String> = BTreeMap::new();

    // Receivers grouped by the class whose body they run.
    let mut groups: BTreeMap<String, Vec<Oid>> = BTreeMap::new();
    let mut bodies: HashMap<String, CompiledBody> = HashMap::new();
    for &oid in &targets {
        let obj_class = db.class_of(oid).expect("target is live");
        let eff = db.catalog().effective_component(obj_class, method).map_err(StoreError::from)?;
        match (&eff.realization, &eff.realized_in) {
            (Realization::Procedure(body), Some(realized_in)) => {
                if !bodies.contains_key(realized_in) {
                    let compiled = compile_body(db.catalog(), realized_in, &eff, body)?;
                    bodies.insert(realized_in.clone(), compiled);
                }
                groups.entry(realized_in.clone()).or_default().push(oid);
            }
            _ => {
                failed.insert(oid, format!("{obj_class}.{method} has no realization"));
            }
        }
    }

    let mut next = db.clone();
    for (realized_in, oids) in &groups {
        let body = &bodies[realized_in];
        let mut acts: Vec<(Oid, Activation)> =
            oids.iter().map(|&o| (o, Activation::new(db.object(o).expect("live").stored.clone()))).collect();
        for stmt in &body.stmts {
            for (oid, act) in acts.iter_mut() {
                if failed.contains_key(oid) {
                    continue;
                }
                if let Err(message) = stmt.run(&args, act) {
                    failed.insert(*oid, message);
                }
            }
        }
        for (oid, act) in acts {
            if failed.contains_key(&oid) {
                continue;
            }
            let changed: Vec<(String, Value)> = act
                .stored
                .into_iter()
                .filter(|(k, v)| db.object(oid).expect("live").stored.get(k) != Some(v))
                .collect();
            for (component, value) in changed {
                if let Err(e) = next.write_stored(oid, &component, value) {
                    failed.insert(oid, e.to_string());
                    break;
                }
            }
            if let (Some(v), Some(returned)) = (act.returned, report.returned.as_mut()) {
                returned.insert(oid, v);
            }
        }
    }
    report.failures = failed.into_iter().collect();
    report.succeeded = report.targeted - report.failures.len();
    finish(report, next)
}

/// A single write into a stored component value.
struct Write {
    loc: Loc,
    value: Value,
}

/// `UPDATE relation SET attr = expr, ... WHERE predicate`.
///
/// Rows are visited per root object in ascending Oid order; each row's new
/// values are computed from the row as it was before that object's writes.
/// Within one object, a later row overwrites an earlier row's write to the
/// same stored value.
pub fn exec_group_update(
    db: &Database,
    relation: &str,
    assignments: &[(String, Expr)],
    predicate: Option<&Expr>,
) -> Result<(Database, ExecutionReport), ExecError> {
    let ctx = EvalContext::global();
    let (heading, kind) = resolve_derived(db.catalog(), &ctx.scope(), relation)
        .ok_or_else(|| QueryError::UnknownRelation(relation.into()))?;
    let crate::query::analyze::SourceKind::Derived { class, prefix, .. } = kind else {
        return Err(QueryError::UnknownRelation(relation.into()).into());
    };
    let pred = predicate.map(|p| compile_predicate(p, &heading)).transpose()?;
    let mut compiled = Vec::with_capacity(assignments.len());
    for (attr, expr) in assignments {
        let (col, ty) = column(&heading, attr)?;
        if col == 0 {
            return Err(ExecError::NotUpdatable { class: class.clone(), component: attr.clone(), objects: Vec::new() });
        }
        let (e, ety) = compile(expr, &mut |p| column(&heading, p))?;
        let (e, _) = coerce_for_assignment(e, ety, &ty)?;
        compiled.push((col, e));
    }

    let targets = db.extent(&class, true)?;
    check_updatable(db, &class, &prefix, &targets, pred.as_ref(), &compiled)?;

    let mut next = db.clone();
    let mut report = ExecutionReport { targeted: 0, ..Default::default() };
    for oid in targets {
        let writes = {
            let eval = Evaluator::new(&next);
            let rows = eval.object_rows(oid, &class, &prefix)?;
            let mut writes = Vec::new();
            let mut matched = false;
            for row in rows {
                let mut values = vec![Value::Ref(oid)];
                values.extend(row.values.iter().cloned());
                if let Some(p) = &pred {
                    if !p.test(&values)? {
                        continue;
                    }
                }
                matched = true;
                for (col, e) in &compiled {
                    let Some(loc) = &row.locs[col - 1] else { continue };
                    let owner_class = next.class_of(loc.owner).unwrap_or_default().to_string();
                    if loc.via_reference || !loc.stored {
                        return Err(ExecError::NotUpdatable {
                            class: owner_class,
                            component: loc.component.clone(),
                            objects: vec![oid],
                        });
                    }
                    writes.push(Write { loc: loc.clone(), value: e.eval(&values)? });
                }
            }
            if matched {
                report.targeted += 1;
            }
            writes
        };
        if let Err(e) = apply_writes(&mut next, writes) {
            report.failures.push((oid, e.to_string()));
        }
    }
    report.succeeded = report.targeted - report.failures.len();
    finish(report, next)
}

/// Refuses the update up front when a matched row would write a computed
/// component or write through a reference.
fn check_updatable(
    db: &Database,
    class: &str,
    prefix: &[String],
    targets: &[Oid],
    pred: Option<&CExpr>,
    compiled: &[(usize, CExpr)],
) -> Result<(), ExecError> {
    let eval = Evaluator::new(db);
    let mut refused: BTreeMap<(String, String), Vec<Oid>> = BTreeMap::new();
    for &oid in targets {
        for row in eval.object_rows(oid, class, prefix)? {
            let mut values = vec![Value::Ref(oid)];
            values.extend(row.values.iter().cloned());
            if let Some(p) = pred {
                if !p.test(&values)? {
                    continue;
                }
            }
            for (col, _) in compiled {
                if let Some(loc) = &row.locs[col - 1] {
                    if loc.via_reference || !loc.stored {
                        let owner_class = db.class_of(loc.owner).unwrap_or_default().to_string();
                        let objects = refused.entry((owner_class, loc.component.clone())).or_default();
                        if !objects.contains(&oid) {
                            objects.push(oid);
                        }
                    }
                }
            }
        }
    }
    match refused.into_iter().next() {
        Some(((class, component), objects)) => Err(ExecError::NotUpdatable { class, component, objects }),
        None => Ok(()),
    }
}

fn apply_writes(db: &mut Database, writes: Vec<Write>) -> Result<(), StoreError> {
    let mut by_target: BTreeMap<(Oid, String), Vec<Write>> = BTreeMap::new();
    for w in writes {
        by_target.entry((w.loc.owner, w.loc.component.clone())).or_default().push(w);
    }
    for ((owner, component), writes) in by_target {
        let current = db.object(owner).ok_or(StoreError::UnknownOid(owner))?.stored[&component].clone();
        let mut value = Editable::from(current);
        for w in writes {
            value.set(&w.loc.steps, w.value);
        }
        db.write_stored(owner, &component, value.into_value())?;
    }
    Ok(())
}

/// A stored value opened for in-place edits. Relation rows keep their
/// positions until the value is closed again, so row indexes recorded during
/// flattening stay valid.
enum Editable {
    Leaf(Value),
    Tuple(Vec<Editable>),
    Relation(Vec<Vec<Editable>>),
}

impl From<Value> for Editable {
    fn from(v: Value) -> Self {
        match v {
            Value::Tuple(vals) => Editable::Tuple(vals.into_iter().map(Editable::from).collect()),
            Value::Relation(rows) => Editable::Relation(
                rows.into_rows().into_iter().map(|r| r.into_iter().map(Editable::from).collect()).collect(),
            ),
            other => Editable::Leaf(other),
        }
    }
}

impl Editable {
    fn set(&mut self, steps: &[usize], value: Value) {
        match (self, steps) {
            (slot, []) => *slot = Editable::from(value),
            (Editable::Tuple(fields), [i, rest @ ..]) => fields[*i].set(rest, value),
            (Editable::Relation(rows), [r, f, rest @ ..]) => rows[*r][*f].set(rest, value),
            _ => {}
        }
    }

    fn into_value(self) -> Value {
        match self {
            Editable::Leaf(v) => v,
            Editable::Tuple(fields) => Value::Tuple(fields.into_iter().map(Editable::into_value).collect()),
            Editable::Relation(rows) => Value::Relation(TupleSet::from_rows(
                rows.into_iter().map(|r| r.into_iter().map(Editable::into_value).collect()),
            )),
        }
    }
}

/// `CREATE [n] OBJECTS class (component := literal, ...)`.
pub fn exec_create_objects(
    db: &Database,
    class: &str,
    assignments: &[(String, Literal)],
    count: u64,
) -> Result<(Database, ExecutionReport), ExecError> {
    let values = db.values_from_literals(class, assignments)?;
    let mut next = db.clone();
    let mut report = ExecutionReport::default();
    for _ in 0..count {
        next.insert_object(class, values.clone())?;
        report.targeted += 1;
        report.succeeded += 1;
    }
    Ok((next, report))
}

/// `DELETE class WHERE predicate`. Deletion is restricted: an object still
/// referenced by an object that outlives it in ascending-Oid order blocks the
/// whole command.
pub fn exec_delete_objects(
    db: &Database,
    class: &str,
    predicate: Option<&Expr>,
) -> Result<(Database, ExecutionReport), ExecError> {
    let targets = target_set(db, class, predicate)?;
    let mut report = ExecutionReport { targeted: targets.len(), ..Default::default() };
    let mut next = db.clone();
    for &oid in &targets {
        let blockers: Vec<Oid> =
            db.referrers(oid).into_iter().filter(|r| *r > oid || targets.binary_search(r).is_err()).collect();
        if !blockers.is_empty() {
            let err = StoreError::ReferencedObject { oid, referrers: blockers };
            report.failures.push((oid, err.to_string()));
        }
    }
    if report.failures.is_empty() {
        for &oid in &targets {
            next.remove_object(oid)?;
        }
    }
    report.succeeded = report.targeted - report.failures.len();
    finish(report, next)
}
