//! Objects, extents and stored component values.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, Realization};
use crate::lang::{AlterRealize, CreateClass, Literal, QueryExpr};
use crate::types::{BaseType, RelationType, ScalarType, ValuableType};
use crate::value::{parse_datetime, Oid, TupleSet, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("class {class} is not instantiable; unrealized components: {}", unrealized.join(", "))]
    NotInstantiable { class: String, unrealized: Vec<String> },
    #[error("missing value for stored component {class}.{component}")]
    MissingComponent { class: String, component: String },
    #[error("{class}.{component} is not a stored component")]
    UnexpectedComponent { class: String, component: String },
    #[error("type mismatch for {class}.{component}: {message}")]
    TypeMismatch { class: String, component: String, message: String },
    #[error("{class}.{component} refers to {oid}, which is not a live {target}")]
    DanglingReference { class: String, component: String, oid: Oid, target: String },
    #[error("key violation in {class}.{component}: {detail}")]
    KeyViolation { class: String, component: String, detail: String },
    #[error("no live object {0}")]
    UnknownOid(Oid),
    #[error("object {oid} is referenced by {}", list_oids(referrers))]
    ReferencedObject { oid: Oid, referrers: Vec<Oid> },
    #[error("cannot store {class}.{component}: {count} existing object(s) have no stored value")]
    RealizationChange { class: String, component: String, count: usize },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

fn list_oids(oids: &[Oid]) -> String {
    oids.iter().map(Oid::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectState {
    pub oid: Oid,
    /// Most-derived class of the object.
    pub class: String,
    pub stored: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    catalog: Catalog,
    objects: BTreeMap<Oid, ObjectState>,
    next_oid: u64,
}

impl Default for Database {
    fn default() -> Self {
        Database::new()
    }
}

impl Database {
    pub fn new() -> Self {
        Database::with_catalog(Catalog::new())
    }

    pub fn with_catalog(catalog: Catalog) -> Self {
        Database { catalog, objects: BTreeMap::new(), next_oid: 1 }
    }

    /// Reassembles a database from its parts after checking referential and
    /// key integrity.
    pub fn from_parts(catalog: Catalog, objects: Vec<ObjectState>, next_oid: u64) -> Result<Self, StoreError> {
        let db = Database { catalog, objects: objects.into_iter().map(|o| (o.oid, o)).collect(), next_oid };
        for obj in db.objects.values() {
            if obj.oid.0 >= next_oid {
                return Err(StoreError::UnknownOid(obj.oid));
            }
            db.check_object(&obj.class, &obj.stored)?;
        }
        Ok(db)
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn next_oid(&self) -> u64 {
        self.next_oid
    }

    pub fn object(&self, oid: Oid) -> Option<&ObjectState> {
        self.objects.get(&oid)
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectState> {
        self.objects.values()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn class_of(&self, oid: Oid) -> Option<&str> {
        self.objects.get(&oid).map(|o| o.class.as_str())
    }

    /// Live objects of `class` (and its descendants when asked) in ascending Oid order.
    pub fn extent(&self, class: &str, include_subclasses: bool) -> Result<Vec<Oid>, StoreError> {
        if !self.catalog.has_class(class) {
            return Err(StoreError::UnknownClass(class.to_string()));
        }
        Ok(self
            .objects
            .values()
            .filter(
                |o| {
                    if include_subclasses {
                        self.catalog.is_subclass_of(&o.class, class)
                    } else {
                        o.class == class
                    }
                },
            )
            .map(|o| o.oid)
            .collect())
    }

    pub fn define_class(&self, stmt: &CreateClass) -> Result<Database, StoreError> {
        Ok(Database { catalog: self.catalog.define_class(stmt)?, ..self.clone() })
    }

    pub fn define_view(&self, name: &str, query: &QueryExpr) -> Result<Database, StoreError> {
        Ok(Database { catalog: self.catalog.define_view(name, query)?, ..self.clone() })
    }

    /// Applies a realization change. Objects that lose a stored component drop
    /// its value; a component cannot become stored while objects that would
    /// need a value for it exist.
    pub fn alter_realize(&self, stmt: &AlterRealize) -> Result<Database, StoreError> {
        let catalog = self.catalog.alter_realize(stmt)?;
        let mut next = Database { catalog, ..self.clone() };
        let mut missing = 0;
        for obj in next.objects.values_mut() {
            if !self.catalog.is_subclass_of(&obj.class, &stmt.class) {
                continue;
            }
            let before = self.catalog.effective_component(&obj.class, &stmt.component)?;
            let after = next.catalog.effective_component(&obj.class, &stmt.component)?;
            match (before.realization.is_stored(), after.realization.is_stored()) {
                (true, false) => {
                    obj.stored.remove(&stmt.component);
                }
                (false, true) => missing += 1,
                _ => {}
            }
        }
        if missing > 0 {
            return Err(StoreError::RealizationChange {
                class: stmt.class.clone(),
                component: stmt.component.clone(),
                count: missing,
            });
        }
        Ok(next)
    }

    pub fn create_object(&self, class: &str, initial: BTreeMap<String, Value>) -> Result<(Database, Oid), StoreError> {
        let mut next = self.clone();
        let oid = next.insert_object(class, initial)?;
        Ok((next, oid))
    }

    pub(crate) fn insert_object(&mut self, class: &str, initial: BTreeMap<String, Value>) -> Result<Oid, StoreError> {
        self.check_object(class, &initial)?;
        let oid = Oid(self.next_oid);
        self.next_oid += 1;
        self.objects.insert(oid, ObjectState { oid, class: class.to_string(), stored: initial });
        Ok(oid)
    }

    pub fn delete_object(&self, oid: Oid) -> Result<Database, StoreError> {
        let mut next = self.clone();
        next.remove_object(oid)?;
        Ok(next)
    }

    pub(crate) fn remove_object(&mut self, oid: Oid) -> Result<(), StoreError> {
        if !self.objects.contains_key(&oid) {
            return Err(StoreError::UnknownOid(oid));
        }
        let referrers = self.referrers(oid);
        if !referrers.is_empty() {
            return Err(StoreError::ReferencedObject { oid, referrers });
        }
        self.objects.remove(&oid);
        Ok(())
    }

    /// Other live objects whose stored values hold a reference to `oid`.
    pub fn referrers(&self, oid: Oid) -> Vec<Oid> {
        self.objects
            .values()
            .filter(|o| o.oid != oid && o.stored.values().any(|v| holds_ref(v, oid)))
            .map(|o| o.oid)
            .collect()
    }

    /// Replaces one stored value after checking it against the component type.
    pub(crate) fn write_stored(&mut self, oid: Oid, component: &str, value: Value) -> Result<(), StoreError> {
        let obj = self.objects.get(&oid).ok_or(StoreError::UnknownOid(oid))?;
        let class = obj.class.clone();
        let comp = self.catalog.effective_component(&class, component)?;
        if !comp.realization.is_stored() {
            return Err(StoreError::UnexpectedComponent { class, component: component.into() });
        }
        self.check_value(&class, component, &comp.ty, &value)?;
        self.objects.get_mut(&oid).expect("checked above").stored.insert(component.to_string(), value);
        Ok(())
    }

    fn check_object(&self, class: &str, values: &BTreeMap<String, Value>) -> Result<(), StoreError> {
        if !self.catalog.has_class(class) {
            return Err(StoreError::UnknownClass(class.to_string()));
        }
        let unrealized = self.catalog.unrealized_data_components(class)?;
        if !unrealized.is_empty() {
            return Err(StoreError::NotInstantiable { class: class.to_string(), unrealized });
        }
        let comps = self.catalog.effective_components(class)?;
        for name in values.keys() {
            if !comps.iter().any(|c| &c.name == name && c.realization == Realization::Stored) {
                return Err(StoreError::UnexpectedComponent { class: class.into(), component: name.clone() });
            }
        }
        for comp in comps.iter().filter(|c| c.realization == Realization::Stored) {
            let value = values
                .get(&comp.name)
                .ok_or_else(|| StoreError::MissingComponent { class: class.into(), component: comp.name.clone() })?;
            self.check_value(class, &comp.name, &comp.ty, value)?;
        }
        Ok(())
    }

    /// Checks conformance, keys and reference targets of a value for `class.component`.
    pub fn check_value(
        &self,
        class: &str,
        component: &str,
        ty: &ValuableType,
        value: &Value,
    ) -> Result<(), StoreError> {
        let mismatch =
            |message: String| StoreError::TypeMismatch { class: class.into(), component: component.into(), message };
        match (ty, value) {
            (ValuableType::Scalar(s), v) => self.check_scalar(class, component, s, v),
            (ValuableType::Tuple(fields), Value::Tuple(vals)) => {
                if fields.len() != vals.len() {
                    return Err(mismatch(format!("expected {} tuple fields, got {}", fields.len(), vals.len())));
                }
                for (f, v) in fields.iter().zip(vals) {
                    self.check_value(class, component, &f.ty, v)?;
                }
                Ok(())
            }
            (ValuableType::Relation(rel), Value::Relation(rows)) => {
                for row in rows {
                    if row.len() != rel.heading.len() {
                        return Err(mismatch(format!(
                            "expected {} attributes per tuple, got {}",
                            rel.heading.len(),
                            row.len()
                        )));
                    }
                    for (f, v) in rel.heading.iter().zip(row) {
                        self.check_value(class, component, &f.ty, v)?;
                    }
                }
                check_key(rel, rows).map_err(|detail| StoreError::KeyViolation {
                    class: class.into(),
                    component: component.into(),
                    detail,
                })
            }
            (ty, v) => Err(mismatch(format!("{v} is not a value of {ty}"))),
        }
    }

    fn check_scalar(&self, class: &str, component: &str, ty: &ScalarType, value: &Value) -> Result<(), StoreError> {
        if value.is_null() || !value.has_scalar_type(ty) {
            return Err(StoreError::TypeMismatch {
                class: class.into(),
                component: component.into(),
                message: format!("{value} is not a value of {ty}"),
            });
        }
        if let (Value::Ref(oid), ScalarType::Reference(target)) = (value, ty) {
            let ok = self.class_of(*oid).is_some_and(|c| self.catalog.is_subclass_of(c, target));
            if !ok {
                return Err(StoreError::DanglingReference {
                    class: class.into(),
                    component: component.into(),
                    oid: *oid,
                    target: target.clone(),
                });
            }
        }
        Ok(())
    }

    /// Builds the stored-value map for a new object from literal assignments.
    pub fn values_from_literals(
        &self,
        class: &str,
        assignments: &[(String, Literal)],
    ) -> Result<BTreeMap<String, Value>, StoreError> {
        if !self.catalog.has_class(class) {
            return Err(StoreError::UnknownClass(class.to_string()));
        }
        let mut out = BTreeMap::new();
        for (name, lit) in assignments {
            let comp = self.catalog.effective_component(class, name)?;
            if comp.is_method() {
                return Err(StoreError::UnexpectedComponent { class: class.into(), component: name.clone() });
            }
            let value = value_from_literal(lit, &comp.ty).map_err(|message| StoreError::TypeMismatch {
                class: class.into(),
                component: name.clone(),
                message,
            })?;
            if out.insert(name.clone(), value).is_some() {
                return Err(StoreError::TypeMismatch {
                    class: class.into(),
                    component: name.clone(),
                    message: "assigned twice".into(),
                });
            }
        }
        Ok(out)
    }
}

fn check_key(rel: &RelationType, rows: &TupleSet) -> Result<(), String> {
    if rel.key.is_none() {
        return Ok(());
    }
    let positions = rel.key_positions();
    let mut keys: Vec<Vec<&Value>> = rows.iter().map(|r| positions.iter().map(|&p| &r[p]).collect()).collect();
    keys.sort();
    for pair in keys.windows(2) {
        if pair[0] == pair[1] {
            let shown: Vec<String> = pair[0].iter().map(|v| v.to_string()).collect();
            return Err(format!("duplicate key ({})", shown.join(", ")));
        }
    }
    Ok(())
}

fn holds_ref(value: &Value, oid: Oid) -> bool {
    match value {
        Value::Ref(o) => *o == oid,
        Value::Tuple(vals) => vals.iter().any(|v| holds_ref(v, oid)),
        Value::Relation(rows) => rows.iter().any(|r| r.iter().any(|v| holds_ref(v, oid))),
        _ => false,
    }
}

/// Converts a literal to a value of the given type. Integers widen to floats,
/// strings are read as datetimes where one is expected.
pub fn value_from_literal(lit: &Literal, ty: &ValuableType) -> Result<Value, String> {
    match (ty, lit) {
        (ValuableType::Scalar(s), lit) => scalar_from_literal(lit, s),
        (ValuableType::Tuple(fields), Literal::Tuple(items)) => {
            if fields.len() != items.len() {
                return Err(format!("expected {} tuple fields, got {}", fields.len(), items.len()));
            }
            fields
                .iter()
                .zip(items)
                .map(|(f, l)| value_from_literal(l, &f.ty))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Tuple)
        }
        (ValuableType::Relation(rel), Literal::Relation(rows)) => {
            let mut out = Vec::with_capacity(rows.len());
            for row in rows {
                if row.len() != rel.heading.len() {
                    return Err(format!("expected {} attributes per tuple, got {}", rel.heading.len(), row.len()));
                }
                let values = rel
                    .heading
                    .iter()
                    .zip(row)
                    .map(|(f, l)| value_from_literal(l, &f.ty))
                    .collect::<Result<Vec<_>, _>>()?;
                out.push(values);
            }
            TupleSet::try_from_rows(out)
                .map(Value::Relation)
                .map_err(|dup| format!("duplicate tuple {}", Value::Tuple(dup.0)))
        }
        (ty, lit) => Err(format!("{} is not a value of {ty}", crate::lang::format_literal(lit))),
    }
}

fn scalar_from_literal(lit: &Literal, ty: &ScalarType) -> Result<Value, String> {
    use BaseType::*;
    let v = match (ty, lit) {
        (ScalarType::Base(Integer), Literal::Int(i)) => Value::Int(*i),
        (ScalarType::Base(Float), Literal::Int(i)) => Value::float(*i as f64),
        (ScalarType::Base(Float), Literal::Float(x)) => Value::float(*x),
        (ScalarType::Base(String), Literal::Str(s)) => Value::Str(s.clone()),
        (ScalarType::Base(Bool), Literal::Bool(b)) => Value::Bool(*b),
        (ScalarType::Base(DateTime), Literal::DateTime(d)) => Value::DateTime(*d),
        (ScalarType::Base(DateTime), Literal::Str(s)) => {
            Value::DateTime(parse_datetime(s).ok_or_else(|| format!("'{s}' is not a datetime"))?)
        }
        (ScalarType::Reference(_), Literal::Ref(n)) => Value::Ref(Oid(*n)),
        (ty, lit) => return Err(format!("{} is not a value of {ty}", crate::lang::format_literal(lit))),
    };
    Ok(v)
}
