//! Method bodies: compilation against the receiving class and execution on
//! one object's stored state.
//!
//! A body sees its parameters and the receiver's scalar components, and may
//! change the receiver's stored components only.

use std::collections::BTreeMap;

use crate::catalog::{Catalog, ComponentDef};
use crate::lang::BodyStmt;
use crate::query::expr::{coerce_for_assignment, compile, CExpr};
use crate::query::QueryError;
use crate::types::{Field, Param, ScalarType, ValuableType};
use crate::value::{TupleSet, Value};

#[derive(Debug, Clone, PartialEq)]
enum SlotSrc {
    Param(usize),
    Component(String),
    Field(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Set { component: String, value: CExpr },
    Insert { component: String, values: Vec<CExpr> },
    Delete { component: String, predicate: Option<CExpr> },
    Return(CExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledStmt {
    op: Op,
    slots: Vec<SlotSrc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledBody {
    pub method: String,
    pub stmts: Vec<CompiledStmt>,
}

struct Resolver<'a> {
    params: &'a [Param],
    comps: &'a [ComponentDef],
    fields: &'a [Field],
    slots: Vec<SlotSrc>,
}

impl Resolver<'_> {
    fn resolve(&mut self, name: &str) -> Result<(usize, ScalarType), QueryError> {
        let (src, ty) = if let Some(i) = self.fields.iter().position(|f| f.name == name) {
            (SlotSrc::Field(i), self.fields[i].ty.scalar().cloned())
        } else if let Some(i) = self.params.iter().position(|p| p.name == name) {
            (SlotSrc::Param(i), Some(self.params[i].ty.clone()))
        } else if let Some(c) = self.comps.iter().find(|c| c.name == name && !c.is_method()) {
            (SlotSrc::Component(c.name.clone()), c.ty.scalar().cloned())
        } else {
            return Err(QueryError::UnknownAttribute(name.into()));
        };
        let ty = ty.ok_or_else(|| QueryError::TypeMismatch(format!("{name} is not scalar")))?;
        let slot = match self.slots.iter().position(|s| *s == src) {
            Some(i) => i,
            None => {
                self.slots.push(src);
                self.slots.len() - 1
            }
        };
        Ok((slot, ty))
    }
}

/// Validates a body for `comp` as realized in `class`.
pub fn check_body(catalog: &Catalog, class: &str, comp: &ComponentDef, body: &[BodyStmt]) -> Result<(), QueryError> {
    compile_body(catalog, class, comp, body).map(|_| ())
}

pub fn compile_body(
    catalog: &Catalog,
    class: &str,
    comp: &ComponentDef,
    body: &[BodyStmt],
) -> Result<CompiledBody, QueryError> {
    let comps = catalog.effective_components(class).map_err(|_| QueryError::UnknownRelation(class.into()))?;
    let params = comp.params.as_deref().unwrap_or(&[]);
    let ret = comp
        .return_type()
        .cloned()
        .ok_or_else(|| QueryError::TypeMismatch(format!("{} is not a method", comp.name)))?;
    let own = |name: &str| -> Result<&ComponentDef, QueryError> {
        comps
            .iter()
            .find(|c| c.name == name && !c.is_method())
            .ok_or_else(|| QueryError::UnknownAttribute(format!("{class}.{name}")))
    };
    let relation_fields = |name: &str| -> Result<Vec<Field>, QueryError> {
        match &own(name)?.ty {
            ValuableType::Relation(rel) if rel.heading.iter().all(|f| f.ty.is_scalar()) => Ok(rel.heading.clone()),
            _ => Err(QueryError::TypeMismatch(format!("{name} is not a relation of scalar attributes"))),
        }
    };

    let mut stmts = Vec::with_capacity(body.len());
    for stmt in body {
        let (op, slots) = match stmt {
            BodyStmt::Set { component, value } => {
                let target = own(component)?.ty.scalar().cloned().ok_or_else(|| {
                    QueryError::TypeMismatch(format!("SET needs a scalar component, {component} is not"))
                })?;
                let mut r = Resolver { params, comps: &comps, fields: &[], slots: Vec::new() };
                let (e, ty) = compile(value, &mut |p| r.resolve(p))?;
                let (e, _) = coerce_for_assignment(e, ty, &target)?;
                (Op::Set { component: component.clone(), value: e }, r.slots)
            }
            BodyStmt::Insert { component, values } => {
                let fields = relation_fields(component)?;
                if fields.len() != values.len() {
                    return Err(QueryError::TypeMismatch(format!(
                        "{component} has {} attributes, INSERT gives {}",
                        fields.len(),
                        values.len()
                    )));
                }
                let mut r = Resolver { params, comps: &comps, fields: &[], slots: Vec::new() };
                let mut out = Vec::with_capacity(values.len());
                for (v, f) in values.iter().zip(&fields) {
                    let (e, ty) = compile(v, &mut |p| r.resolve(p))?;
                    let (e, _) = coerce_for_assignment(e, ty, f.ty.scalar().expect("scalar field"))?;
                    out.push(e);
                }
                (Op::Insert { component: component.clone(), values: out }, r.slots)
            }
            BodyStmt::Delete { component, predicate } => {
                let fields = relation_fields(component)?;
                let mut r = Resolver { params, comps: &comps, fields: &fields, slots: Vec::new() };
                let predicate = match predicate {
                    Some(p) => {
                        let (e, ty) = compile(p, &mut |x| r.resolve(x))?;
                        if ty != ScalarType::BOOL {
                            return Err(QueryError::TypeMismatch(format!("WHERE clause has type {ty}, expected BOOL")));
                        }
                        Some(e)
                    }
                    None => None,
                };
                (Op::Delete { component: component.clone(), predicate }, r.slots)
            }
            BodyStmt::Return(value) => {
                let mut r = Resolver { params, comps: &comps, fields: &[], slots: Vec::new() };
                let (e, ty) = compile(value, &mut |p| r.resolve(p))?;
                let (e, _) = coerce_for_assignment(e, ty, &ret)?;
                (Op::Return(e), r.slots)
            }
        };
        stmts.push(CompiledStmt { op, slots });
    }
    Ok(CompiledBody { method: comp.name.clone(), stmts })
}

/// One receiver's state while its body runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub stored: BTreeMap<String, Value>,
    pub returned: Option<Value>,
    pub finished: bool,
}

impl Activation {
    pub fn new(stored: BTreeMap<String, Value>) -> Self {
        Activation { stored, returned: None, finished: false }
    }
}

fn slot_values(slots: &[SlotSrc], args: &[Value], act: &Activation, row: &[Value]) -> Result<Vec<Value>, String> {
    slots
        .iter()
        .map(|s| match s {
            SlotSrc::Param(i) => Ok(args[*i].clone()),
            SlotSrc::Field(i) => Ok(row[*i].clone()),
            SlotSrc::Component(name) => {
                act.stored.get(name).cloned().ok_or_else(|| format!("{name} is not stored for this object"))
            }
        })
        .collect()
}

fn relation_mut<'a>(act: &'a mut Activation, component: &str) -> Result<&'a mut TupleSet, String> {
    match act.stored.get_mut(component) {
        Some(Value::Relation(rows)) => Ok(rows),
        _ => Err(format!("{component} is not stored for this object")),
    }
}

impl CompiledStmt {
    /// Runs this statement for one receiver. Does nothing once the body has returned.
    pub fn run(&self, args: &[Value], act: &mut Activation) -> Result<(), String> {
        if act.finished {
            return Ok(());
        }
        match &self.op {
            Op::Set { component, value } => {
                if !act.stored.contains_key(component) {
                    return Err(format!("{component} is not stored for this object"));
                }
                let slots = slot_values(&self.slots, args, act, &[])?;
                let v = value.eval(&slots).map_err(|e| e.to_string())?;
                if v.is_null() {
                    return Err(format!("cannot store NULL in {component}"));
                }
                act.stored.insert(component.clone(), v);
            }
            Op::Insert { component, values } => {
                let slots = slot_values(&self.slots, args, act, &[])?;
                let row =
                    values.iter().map(|e| e.eval(&slots).map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?;
                if row.iter().any(Value::is_null) {
                    return Err(format!("cannot store NULL in {component}"));
                }
                relation_mut(act, component)?.insert(row);
            }
            Op::Delete { component, predicate } => {
                let rows = match act.stored.get(component) {
                    Some(Value::Relation(rows)) => rows.clone(),
                    _ => return Err(format!("{component} is not stored for this object")),
                };
                let mut kept = Vec::with_capacity(rows.len());
                for row in rows.into_rows() {
                    let drop = match predicate {
                        Some(p) => {
                            let slots = slot_values(&self.slots, args, act, &row)?;
                            p.test(&slots).map_err(|e| e.to_string())?
                        }
                        None => true,
                    };
                    if !drop {
                        kept.push(row);
                    }
                }
                *relation_mut(act, component)? = TupleSet::from_rows(kept);
            }
            Op::Return(value) => {
                let slots = slot_values(&self.slots, args, act, &[])?;
                act.returned = Some(value.eval(&slots).map_err(|e| e.to_string())?);
                act.finished = true;
            }
        }
        Ok(())
    }
}
