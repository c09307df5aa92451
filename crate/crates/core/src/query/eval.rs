//! Evaluation over a database snapshot.
//!
//! Derived relations are populated object by object: each root object's
//! component values are flattened along the relation's schema subtree.
//! Independent branches of one object combine by cross product; an empty
//! relation value or a missing reference contributes one row of Nulls.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::catalog::{ComponentDef, Realization};
use crate::lang::{AggFn, QueryExpr};
use crate::namespace::{class_tree, leaves, subtree, NodeKind, SchemaNode};
use crate::store::Database;
use crate::types::ValuableType;
use crate::value::{Oid, Relation, TupleSet, Value};

use super::analyze::{analyze, resolve_derived, OutCol, Plan, Population, SourceKind};
use super::expr::finite;
use super::{EvalContext, QueryError, ReferenceBinding};

/// Where a flattened value came from, for writes through derived relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loc {
    pub owner: Oid,
    pub component: String,
    /// Positions inside the component value: a tuple index or row index
    /// followed by a field index, repeated per nesting level.
    pub steps: Vec<usize>,
    pub stored: bool,
    /// True when the owner was reached by dereferencing.
    pub via_reference: bool,
}

impl Loc {
    fn step(&self, i: usize) -> Loc {
        let mut next = self.clone();
        next.steps.push(i);
        next
    }
}

/// A flattened row with the origin of each leaf value (`None` for padding).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Located {
    pub values: Vec<Value>,
    pub locs: Vec<Option<Loc>>,
}

impl Located {
    fn unit() -> Self {
        Located { values: Vec::new(), locs: Vec::new() }
    }

    fn padding(width: usize) -> Self {
        Located { values: vec![Value::Null; width], locs: vec![None; width] }
    }

    fn append(&self, other: &Located) -> Located {
        let mut values = self.values.clone();
        values.extend(other.values.iter().cloned());
        let mut locs = self.locs.clone();
        locs.extend(other.locs.iter().cloned());
        Located { values, locs }
    }
}

fn cross(left: Vec<Located>, right: Vec<Located>) -> Vec<Located> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in &left {
        for r in &right {
            out.push(l.append(r));
        }
    }
    out
}

enum Frame {
    Object { oid: Oid, via_reference: bool },
    Record { values: Vec<Value>, base: Option<Loc> },
}

/// Read-only evaluator over one database state. Caches schema trees and
/// effective components per class.
pub struct Evaluator<'db> {
    db: &'db Database,
    trees: RefCell<HashMap<String, Rc<Vec<SchemaNode>>>>,
    components: RefCell<HashMap<String, Rc<Vec<ComponentDef>>>>,
    active: RefCell<Vec<(Oid, String)>>,
}

impl<'db> Evaluator<'db> {
    pub fn new(db: &'db Database) -> Self {
        Evaluator { db, trees: RefCell::default(), components: RefCell::default(), active: RefCell::default() }
    }

    pub fn database(&self) -> &'db Database {
        self.db
    }

    fn tree(&self, class: &str) -> Result<Rc<Vec<SchemaNode>>, QueryError> {
        if let Some(t) = self.trees.borrow().get(class) {
            return Ok(t.clone());
        }
        let tree =
            Rc::new(class_tree(self.db.catalog(), class).map_err(|_| QueryError::UnknownRelation(class.into()))?);
        self.trees.borrow_mut().insert(class.to_string(), tree.clone());
        Ok(tree)
    }

    fn components(&self, class: &str) -> Result<Rc<Vec<ComponentDef>>, QueryError> {
        if let Some(c) = self.components.borrow().get(class) {
            return Ok(c.clone());
        }
        let comps = Rc::new(
            self.db.catalog().effective_components(class).map_err(|_| QueryError::UnknownRelation(class.into()))?,
        );
        self.components.borrow_mut().insert(class.to_string(), comps.clone());
        Ok(comps)
    }

    fn component(&self, oid: Oid, name: &str) -> Result<(String, ComponentDef), QueryError> {
        let class = self.db.class_of(oid).ok_or(QueryError::UnknownOid(oid))?.to_string();
        let comp = self
            .components(&class)?
            .iter()
            .find(|c| c.name == name)
            .cloned()
            .ok_or_else(|| QueryError::UnknownAttribute(format!("{class}.{name}")))?;
        Ok((class, comp))
    }

    /// Value of a data component, using the realization in effect for the
    /// object's own class.
    pub fn eval_component(&self, oid: Oid, name: &str) -> Result<Value, QueryError> {
        let (class, comp) = self.component(oid, name)?;
        match &comp.realization {
            Realization::Stored => {
                let obj = self.db.object(oid).ok_or(QueryError::UnknownOid(oid))?;
                obj.stored.get(name).cloned().ok_or_else(|| QueryError::EvaluationError {
                    oid,
                    component: name.into(),
                    message: "stored value is missing".into(),
                })
            }
            Realization::Unrealized => Err(QueryError::UnrealizedComponent { oid, class, component: name.into() }),
            Realization::Procedure(_) => Err(QueryError::NotReadable { class, component: name.into() }),
            Realization::Query(q) => {
                let key = (oid, name.to_string());
                if self.active.borrow().contains(&key) {
                    return Err(QueryError::RecursiveRealization { oid, component: name.into() });
                }
                self.active.borrow_mut().push(key);
                let ctx = EvalContext::ObjectLocal { oid, class: comp.realized_in.clone().unwrap_or(class) };
                let result = self.eval_select(q, &ctx);
                self.active.borrow_mut().pop();
                let relation = result.map_err(|e| match e {
                    e @ (QueryError::RecursiveRealization { .. } | QueryError::EvaluationError { .. }) => e,
                    other => QueryError::EvaluationError { oid, component: name.into(), message: other.to_string() },
                })?;
                convert(relation, &comp.ty).map_err(|message| QueryError::EvaluationError {
                    oid,
                    component: name.into(),
                    message,
                })
            }
        }
    }

    fn child(&self, frame: &Frame, index: usize, node: &SchemaNode) -> Result<(Value, Option<Loc>), QueryError> {
        match frame {
            Frame::Object { oid, via_reference } => {
                let value = self.eval_component(*oid, &node.name)?;
                let (_, comp) = self.component(*oid, &node.name)?;
                let loc = Loc {
                    owner: *oid,
                    component: node.name.clone(),
                    steps: Vec::new(),
                    stored: comp.realization.is_stored(),
                    via_reference: *via_reference,
                };
                Ok((value, Some(loc)))
            }
            Frame::Record { values, base } => Ok((values[index].clone(), base.as_ref().map(|b| b.step(index)))),
        }
    }

    fn flatten_nodes(&self, frame: &Frame, nodes: &[SchemaNode]) -> Result<Vec<Located>, QueryError> {
        let mut acc = vec![Located::unit()];
        for (i, node) in nodes.iter().enumerate() {
            if leaves(std::slice::from_ref(node)).is_empty() {
                continue;
            }
            let (value, loc) = self.child(frame, i, node)?;
            let part = self.flatten_node(node, value, loc)?;
            acc = cross(acc, part);
        }
        Ok(acc)
    }

    fn flatten_node(&self, node: &SchemaNode, value: Value, loc: Option<Loc>) -> Result<Vec<Located>, QueryError> {
        match &node.kind {
            NodeKind::Scalar(_) => Ok(vec![Located { values: vec![value], locs: vec![loc] }]),
            NodeKind::Reference { expansion, .. } => {
                let head = Located { values: vec![value.clone()], locs: vec![loc] };
                let width = leaves(expansion).len();
                if width == 0 {
                    return Ok(vec![head]);
                }
                let tail = match value {
                    Value::Ref(target) if self.db.object(target).is_some() => {
                        self.flatten_nodes(&Frame::Object { oid: target, via_reference: true }, expansion)?
                    }
                    _ => vec![Located::padding(width)],
                };
                Ok(cross(vec![head], tail))
            }
            NodeKind::Tuple(fields) => match value {
                Value::Tuple(values) => self.flatten_nodes(&Frame::Record { values, base: loc }, fields),
                _ => Ok(vec![Located::padding(leaves(fields).len())]),
            },
            NodeKind::Relation(fields) => match value {
                Value::Relation(rows) if !rows.is_empty() => {
                    let mut out = Vec::new();
                    for (j, row) in rows.into_rows().into_iter().enumerate() {
                        let base = loc.as_ref().map(|l| l.step(j));
                        out.extend(self.flatten_nodes(&Frame::Record { values: row, base }, fields)?);
                    }
                    Ok(out)
                }
                _ => Ok(vec![Located::padding(leaves(fields).len())]),
            },
        }
    }

    /// Frames reached from `frame` by following `prefix`; relation steps fan
    /// out to one frame per element, empty relations and missing references to none.
    fn navigate(
        &self,
        frame: Frame,
        nodes: &[SchemaNode],
        prefix: &[String],
    ) -> Result<Vec<(Frame, Vec<SchemaNode>)>, QueryError> {
        let Some((first, rest)) = prefix.split_first() else {
            return Ok(vec![(frame, nodes.to_vec())]);
        };
        let Some(i) = nodes.iter().position(|n| &n.name == first) else {
            return Err(QueryError::UnknownRelation(first.clone()));
        };
        let node = &nodes[i];
        let (value, loc) = self.child(&frame, i, node)?;
        match (&node.kind, value) {
            (NodeKind::Reference { expansion, .. }, Value::Ref(target)) if self.db.object(target).is_some() => {
                self.navigate(Frame::Object { oid: target, via_reference: true }, expansion, rest)
            }
            (NodeKind::Tuple(fields), Value::Tuple(values)) => {
                self.navigate(Frame::Record { values, base: loc }, fields, rest)
            }
            (NodeKind::Relation(fields), Value::Relation(rows)) => {
                let mut out = Vec::new();
                for (j, row) in rows.into_rows().into_iter().enumerate() {
                    let base = loc.as_ref().map(|l| l.step(j));
                    out.extend(self.navigate(Frame::Record { values: row, base }, fields, rest)?);
                }
                Ok(out)
            }
            _ => Ok(Vec::new()),
        }
    }

    /// Flattened rows of one root object along `prefix`, without the
    /// reference attribute.
    pub fn object_rows(&self, oid: Oid, class: &str, prefix: &[String]) -> Result<Vec<Located>, QueryError> {
        let tree = self.tree(class)?;
        if subtree(&tree, prefix).is_none() {
            return Err(QueryError::UnknownRelation(prefix.join(".")));
        }
        let mut out = Vec::new();
        for (frame, nodes) in self.navigate(Frame::Object { oid, via_reference: false }, &tree, prefix)? {
            out.extend(self.flatten_nodes(&frame, &nodes)?);
        }
        Ok(out)
    }

    fn population(&self, population: &Population, receiver: Option<Oid>) -> Result<Vec<Oid>, QueryError> {
        match population {
            Population::Extent(class) => {
                self.db.extent(class, true).map_err(|_| QueryError::UnknownRelation(class.clone()))
            }
            Population::Bound(oids) => Ok(oids.iter().copied().filter(|o| self.db.object(*o).is_some()).collect()),
            Population::Receiver => Ok(receiver.into_iter().collect()),
        }
    }

    /// Rows of a derived relation with their root object, in ascending root order.
    pub fn located_rows(&self, name: &str, ctx: &EvalContext) -> Result<Vec<(Oid, Located)>, QueryError> {
        let (_, kind) = resolve_derived(self.db.catalog(), &ctx.scope(), name)
            .ok_or_else(|| QueryError::UnknownRelation(name.into()))?;
        let SourceKind::Derived { population, class, prefix } = kind else {
            return Err(QueryError::UnknownRelation(name.into()));
        };
        let mut out = Vec::new();
        for oid in self.population(&population, ctx.receiver())? {
            for row in self.object_rows(oid, &class, &prefix)? {
                out.push((oid, row));
            }
        }
        Ok(out)
    }

    pub fn eval_derived_relation(&self, name: &str, ctx: &EvalContext) -> Result<Relation, QueryError> {
        let (heading, _) = resolve_derived(self.db.catalog(), &ctx.scope(), name)
            .ok_or_else(|| QueryError::UnknownRelation(name.into()))?;
        let rows = self.located_rows(name, ctx)?.into_iter().map(|(oid, loc)| {
            let mut row = Vec::with_capacity(loc.values.len() + 1);
            row.push(Value::Ref(oid));
            row.extend(loc.values);
            row
        });
        Ok(Relation::new(heading, rows))
    }

    pub fn eval_view(&self, name: &str) -> Result<Relation, QueryError> {
        let view = self.db.catalog().view(name).ok_or_else(|| QueryError::UnknownView(name.into()))?;
        self.eval_select(&view.query, &EvalContext::global())
            .map_err(|e| QueryError::View { name: name.into(), source: Box::new(e) })
    }

    pub fn eval_select(&self, q: &QueryExpr, ctx: &EvalContext) -> Result<Relation, QueryError> {
        let plan = analyze(self.db.catalog(), q, &ctx.scope())?;
        self.run_plan(&plan, ctx)
    }

    fn source_rows(&self, plan: &Plan, index: usize, ctx: &EvalContext) -> Result<Vec<Vec<Value>>, QueryError> {
        let src = &plan.sources[index];
        let relation = match &src.kind {
            SourceKind::View(name) => self.eval_view(name)?,
            SourceKind::Derived { .. } => self.eval_derived_relation(&src.relation, ctx)?,
        };
        Ok(relation.tuples.into_rows())
    }

    fn run_plan(&self, plan: &Plan, ctx: &EvalContext) -> Result<Relation, QueryError> {
        let mut rows: Vec<Vec<Value>> = vec![Vec::new()];
        for i in 0..plan.sources.len() {
            let part = self.source_rows(plan, i, ctx)?;
            let mut next = Vec::with_capacity(rows.len() * part.len());
            for l in &rows {
                for r in &part {
                    let mut row = l.clone();
                    row.extend(r.iter().cloned());
                    next.push(row);
                }
            }
            rows = next;
        }
        if let Some(p) = &plan.predicate {
            let mut kept = Vec::with_capacity(rows.len());
            for row in rows {
                if p.test(&row)? {
                    kept.push(row);
                }
            }
            rows = kept;
        }
        let Some(group_cols) = &plan.group else {
            let out = rows.iter().map(|row| {
                plan.output
                    .iter()
                    .map(|c| match c {
                        OutCol::Column(i) => row[*i].clone(),
                        OutCol::Aggregate(..) => unreachable!("ungrouped plan"),
                    })
                    .collect()
            });
            return Ok(Relation::new(plan.heading.clone(), out));
        };
        let mut groups: BTreeMap<Vec<Value>, Vec<&Vec<Value>>> = BTreeMap::new();
        if group_cols.is_empty() {
            groups.insert(Vec::new(), rows.iter().collect());
        } else {
            for row in &rows {
                let key = group_cols.iter().map(|&c| row[c].clone()).collect();
                groups.entry(key).or_default().push(row);
            }
        }
        let mut out = Vec::with_capacity(groups.len());
        for (key, members) in &groups {
            let mut row = Vec::with_capacity(plan.output.len());
            for col in &plan.output {
                row.push(match col {
                    OutCol::Column(i) => {
                        let pos = group_cols.iter().position(|c| c == i).expect("checked by analysis");
                        key[pos].clone()
                    }
                    OutCol::Aggregate(f, i) => aggregate(*f, members.iter().map(|r| &r[*i]))?,
                });
            }
            out.push(row);
        }
        Ok(Relation::new(plan.heading.clone(), out))
    }
}

/// Aggregates over non-Null values. Duplicates count: the input is the
/// group's set of source rows, not the set of argument values.
pub fn aggregate<'a>(f: AggFn, values: impl Iterator<Item = &'a Value>) -> Result<Value, QueryError> {
    let vals: Vec<&Value> = values.filter(|v| !v.is_null()).collect();
    match f {
        AggFn::Count => Ok(Value::Int(vals.len() as i64)),
        AggFn::Min => Ok(vals.iter().min().map(|v| (*v).clone()).unwrap_or(Value::Null)),
        AggFn::Max => Ok(vals.iter().max().map(|v| (*v).clone()).unwrap_or(Value::Null)),
        AggFn::Sum => {
            if vals.is_empty() {
                return Ok(Value::Null);
            }
            if vals.iter().all(|v| matches!(v, Value::Int(_))) {
                let mut total: i64 = 0;
                for v in &vals {
                    if let Value::Int(i) = v {
                        total =
                            total.checked_add(*i).ok_or_else(|| QueryError::Arithmetic("integer overflow".into()))?;
                    }
                }
                Ok(Value::Int(total))
            } else {
                finite(vals.iter().map(|v| numeric(v)).sum())
            }
        }
        AggFn::Avg => {
            if vals.is_empty() {
                return Ok(Value::Null);
            }
            let total: f64 = vals.iter().map(|v| numeric(v)).sum();
            finite(total / vals.len() as f64)
        }
    }
}

fn numeric(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(x) => *x,
        _ => 0.0,
    }
}

/// Shapes a query result as a value of the component's declared type.
fn convert(relation: Relation, ty: &ValuableType) -> Result<Value, String> {
    match ty {
        ValuableType::Scalar(_) => match relation.tuples.len() {
            0 => Ok(Value::Null),
            1 => Ok(relation.tuples.into_rows().remove(0).remove(0)),
            n => Err(format!("scalar realization produced {n} rows")),
        },
        ValuableType::Relation(rel) => {
            let positions: Vec<usize> = rel
                .heading
                .iter()
                .map(|f| relation.position(&f.name).ok_or_else(|| format!("result lacks attribute {}", f.name)))
                .collect::<Result<_, _>>()?;
            let rows = relation.tuples.iter().map(|r| {
                positions
                    .iter()
                    .zip(&rel.heading)
                    .map(|(&p, f)| match (&r[p], &f.ty) {
                        (Value::Int(i), ValuableType::Scalar(s)) if *s == crate::types::ScalarType::FLOAT => {
                            Value::float(*i as f64)
                        }
                        (v, _) => v.clone(),
                    })
                    .collect()
            });
            Ok(Value::Relation(TupleSet::from_rows(rows)))
        }
        ValuableType::Tuple(_) => Err("tuple components cannot be realized by queries".into()),
    }
}

pub fn eval_component(db: &Database, oid: Oid, component: &str) -> Result<Value, QueryError> {
    Evaluator::new(db).eval_component(oid, component)
}

pub fn eval_derived_relation(db: &Database, name: &str) -> Result<Relation, QueryError> {
    Evaluator::new(db).eval_derived_relation(name, &EvalContext::global())
}

/// Evaluates a derived relation from the local namespace of `binding`.
pub fn eval_local_relation(db: &Database, binding: &ReferenceBinding, name: &str) -> Result<Relation, QueryError> {
    let ctx = EvalContext::Global { references: vec![binding.clone()] };
    Evaluator::new(db).eval_derived_relation(name, &ctx)
}

pub fn eval_select(db: &Database, q: &QueryExpr, ctx: &EvalContext) -> Result<Relation, QueryError> {
    Evaluator::new(db).eval_select(q, ctx)
}

pub fn eval_view(db: &Database, name: &str) -> Result<Relation, QueryError> {
    Evaluator::new(db).eval_view(name)
}
