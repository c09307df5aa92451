//! Class definitions, inheritance and per-component realizations.
//!
//! A [`Catalog`] is an immutable snapshot: every DDL operation returns a new
//! catalog and leaves its input untouched. A class specification declares
//! components; a separate `ALTER CLASS ... REALIZE` step binds each component
//! to a realization. Subclasses inherit components and may re-realize them.

use std::collections::HashSet;
use std::fmt::Write;

use indexmap::IndexMap;
use thiserror::Error;

use crate::exec::procedure;
use crate::lang::{
    format_query, AlterRealize, BodyStmt, ComponentSpec, CreateClass, QueryExpr, RealizationSpec, StatementKind,
};
use crate::query::{analyze, QueryError, Scope};
use crate::types::{Field, Param, ScalarType, ValuableType};
use crate::value::Attribute;

#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    Unrealized,
    Stored,
    /// Computed by a query evaluated in the context of the owning object.
    Query(QueryExpr),
    Procedure(Vec<BodyStmt>),
}

impl Realization {
    pub fn kind(&self) -> &'static str {
        match self {
            Realization::Unrealized => "UNREALIZED",
            Realization::Stored => "STORED",
            Realization::Query(_) => "QUERY",
            Realization::Procedure(_) => "PROCEDURE",
        }
    }

    pub fn is_stored(&self) -> bool {
        matches!(self, Realization::Stored)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDef {
    pub name: String,
    /// Declared type; for methods, the scalar return type.
    pub ty: ValuableType,
    /// `Some` for methods.
    pub params: Option<Vec<Param>>,
    pub realization: Realization,
    /// Class whose specification introduced the component.
    pub declared_in: String,
    /// Class whose realization is in effect; `None` while unrealized.
    pub realized_in: Option<String>,
}

impl ComponentDef {
    pub fn is_method(&self) -> bool {
        self.params.is_some()
    }

    pub fn return_type(&self) -> Option<&ScalarType> {
        if self.is_method() {
            self.ty.scalar()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub name: String,
    pub parent: Option<String>,
    /// Components introduced here plus override entries for inherited
    /// components re-realized here (those keep the ancestor's `declared_in`).
    pub components: Vec<ComponentDef>,
}

impl ClassDef {
    pub fn own_declared(&self) -> impl Iterator<Item = &ComponentDef> {
        self.components.iter().filter(move |c| c.declared_in == self.name)
    }

    fn entry_mut(&mut self, name: &str) -> Option<&mut ComponentDef> {
        self.components.iter_mut().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewDef {
    pub name: String,
    /// Kept as written; resolved afresh at every evaluation.
    pub query: QueryExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("class {0} already exists")]
    DuplicateClass(String),
    #[error("name {0} is already used by a view")]
    NameInUse(String),
    #[error("unknown parent class {0}")]
    UnknownParent(String),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("component {class}.{component} refers to unknown class {target}")]
    UnknownReferenceTarget { class: String, component: String, target: String },
    #[error("duplicate component {component} in class {class}")]
    DuplicateComponent { class: String, component: String },
    #[error("class {class} has no component {component}")]
    UnknownComponent { class: String, component: String },
    #[error("invalid type for {class}.{component}: {reason}")]
    InvalidType { class: String, component: String, reason: String },
    #[error("realization of {class}.{component} yields heading {actual}, expected {expected}")]
    HeadingMismatch { class: String, component: String, expected: String, actual: String },
    #[error("{class}.{component} takes {expected} parameter(s), realization declares {actual}")]
    ArityMismatch { class: String, component: String, expected: usize, actual: usize },
    #[error("realization signature of {class}.{component} differs from its specification")]
    SignatureMismatch { class: String, component: String },
    #[error("{class}.{component} cannot be realized this way: {reason}")]
    InvalidRealization { class: String, component: String, reason: String },
    #[error("in realization of {class}.{component}: {source}")]
    Query { class: String, component: String, source: Box<QueryError> },
    #[error("view {0} already exists")]
    DuplicateView(String),
    #[error("unknown view {0}")]
    UnknownView(String),
    #[error("in view {name}: {source}")]
    View { name: String, source: Box<QueryError> },
}

/// One problem found by [`Catalog::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub class: String,
    pub component: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    classes: IndexMap<String, ClassDef>,
    views: IndexMap<String, ViewDef>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.get(name)
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    /// Classes in definition order.
    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn view(&self, name: &str) -> Option<&ViewDef> {
        self.views.get(name)
    }

    pub fn views(&self) -> impl Iterator<Item = &ViewDef> {
        self.views.values()
    }

    /// Inserts a class without any checks. Intended for building deliberately
    /// broken catalogs to exercise [`Catalog::validate`].
    pub fn insert_unchecked(&mut self, class: ClassDef) {
        self.classes.insert(class.name.clone(), class);
    }

    /// Ancestors of `class` from the root down to `class` itself.
    pub fn lineage(&self, class: &str) -> Result<Vec<&ClassDef>, CatalogError> {
        let mut chain = Vec::new();
        let mut seen = HashSet::new();
        let mut cur = Some(class.to_string());
        while let Some(name) = cur {
            if !seen.insert(name.clone()) {
                break;
            }
            let def = self.classes.get(&name).ok_or_else(|| CatalogError::UnknownClass(name.clone()))?;
            cur = def.parent.clone();
            chain.push(def);
        }
        chain.reverse();
        Ok(chain)
    }

    /// True when `class` is `ancestor` or inherits from it.
    pub fn is_subclass_of(&self, class: &str, ancestor: &str) -> bool {
        self.lineage(class).is_ok_and(|chain| chain.iter().any(|c| c.name == ancestor))
    }

    /// `class` and every class inheriting from it, in definition order.
    pub fn descendants(&self, class: &str) -> Vec<&str> {
        self.classes.keys().filter(|c| self.is_subclass_of(c, class)).map(String::as_str).collect()
    }

    /// Inherited components first (in the parent's order), then own ones; each
    /// carries the realization of the most-derived class that realizes it.
    pub fn effective_components(&self, class: &str) -> Result<Vec<ComponentDef>, CatalogError> {
        let mut out: Vec<ComponentDef> = Vec::new();
        for def in self.lineage(class)? {
            for comp in &def.components {
                match out.iter_mut().find(|c| c.name == comp.name) {
                    Some(existing) if comp.declared_in != def.name => {
                        if comp.realization != Realization::Unrealized {
                            existing.realization = comp.realization.clone();
                            existing.realized_in = comp.realized_in.clone();
                        }
                    }
                    Some(_) => {}
                    None => out.push(comp.clone()),
                }
            }
        }
        Ok(out)
    }

    pub fn effective_component(&self, class: &str, component: &str) -> Result<ComponentDef, CatalogError> {
        self.effective_components(class)?
            .into_iter()
            .find(|c| c.name == component)
            .ok_or_else(|| CatalogError::UnknownComponent { class: class.into(), component: component.into() })
    }

    /// Data components (non-methods) with their effective realization.
    pub fn data_components(&self, class: &str) -> Result<Vec<ComponentDef>, CatalogError> {
        Ok(self.effective_components(class)?.into_iter().filter(|c| !c.is_method()).collect())
    }

    /// Data components that have no realization yet.
    pub fn unrealized_data_components(&self, class: &str) -> Result<Vec<String>, CatalogError> {
        Ok(self
            .data_components(class)?
            .into_iter()
            .filter(|c| c.realization == Realization::Unrealized)
            .map(|c| c.name)
            .collect())
    }

    pub fn define_class(&self, stmt: &CreateClass) -> Result<Catalog, CatalogError> {
        let name = &stmt.name;
        if self.classes.contains_key(name) {
            return Err(CatalogError::DuplicateClass(name.clone()));
        }
        if self.views.contains_key(name) {
            return Err(CatalogError::NameInUse(name.clone()));
        }
        let inherited = match &stmt.parent {
            Some(p) if !self.classes.contains_key(p) => return Err(CatalogError::UnknownParent(p.clone())),
            Some(p) => self.effective_components(p)?,
            None => Vec::new(),
        };
        let mut seen: HashSet<&str> = inherited.iter().map(|c| c.name.as_str()).collect();
        for comp in &stmt.components {
            if !seen.insert(&comp.name) {
                return Err(CatalogError::DuplicateComponent { class: name.clone(), component: comp.name.clone() });
            }
            self.check_component_spec(name, comp)?;
        }
        let def = ClassDef {
            name: name.clone(),
            parent: stmt.parent.clone(),
            components: stmt
                .components
                .iter()
                .map(|c| ComponentDef {
                    name: c.name.clone(),
                    ty: c.ty.clone(),
                    params: c.params.clone(),
                    realization: Realization::Unrealized,
                    declared_in: name.clone(),
                    realized_in: None,
                })
                .collect(),
        };
        let mut next = self.clone();
        next.classes.insert(name.clone(), def);
        Ok(next)
    }

    fn check_component_spec(&self, class: &str, comp: &ComponentSpec) -> Result<(), CatalogError> {
        let invalid = |reason: String| CatalogError::InvalidType {
            class: class.to_string(),
            component: comp.name.clone(),
            reason,
        };
        if let Some(params) = &comp.params {
            if !comp.ty.is_scalar() {
                return Err(invalid("method return type must be scalar".into()));
            }
            let mut names = HashSet::new();
            for p in params {
                if !names.insert(&p.name) {
                    return Err(invalid(format!("duplicate parameter {}", p.name)));
                }
                if let ScalarType::Reference(target) = &p.ty {
                    self.check_target(class, &comp.name, target)?;
                }
            }
        }
        check_type_shape(&comp.ty).map_err(invalid)?;
        for target in comp.ty.referenced_classes() {
            self.check_target(class, &comp.name, target)?;
        }
        Ok(())
    }

    fn check_target(&self, class: &str, component: &str, target: &str) -> Result<(), CatalogError> {
        if target == class || self.classes.contains_key(target) {
            Ok(())
        } else {
            Err(CatalogError::UnknownReferenceTarget {
                class: class.into(),
                component: component.into(),
                target: target.into(),
            })
        }
    }

    pub fn alter_realize(&self, stmt: &AlterRealize) -> Result<Catalog, CatalogError> {
        let class = &stmt.class;
        if !self.classes.contains_key(class) {
            return Err(CatalogError::UnknownClass(class.clone()));
        }
        let comp = self.effective_component(class, &stmt.component)?;
        let err_invalid = |reason: &str| CatalogError::InvalidRealization {
            class: class.clone(),
            component: comp.name.clone(),
            reason: reason.to_string(),
        };
        let realization = match (&comp.params, &stmt.realization) {
            (Some(params), RealizationSpec::Procedure(body)) => {
                if let Some((sig_params, ret)) = &stmt.signature {
                    if sig_params.len() != params.len() {
                        return Err(CatalogError::ArityMismatch {
                            class: class.clone(),
                            component: comp.name.clone(),
                            expected: params.len(),
                            actual: sig_params.len(),
                        });
                    }
                    if sig_params != params || Some(ret) != comp.return_type() {
                        return Err(CatalogError::SignatureMismatch {
                            class: class.clone(),
                            component: comp.name.clone(),
                        });
                    }
                }
                procedure::check_body(self, class, &comp, body).map_err(|e| CatalogError::Query {
                    class: class.clone(),
                    component: comp.name.clone(),
                    source: Box::new(e),
                })?;
                Realization::Procedure(body.clone())
            }
            (Some(_), _) => return Err(err_invalid("methods are realized by BEGIN ... END bodies")),
            (None, RealizationSpec::Procedure(_)) => {
                return Err(err_invalid("only methods can have procedural realizations"))
            }
            (None, _) if stmt.signature.is_some() => return Err(err_invalid("data components take no parameters")),
            (None, RealizationSpec::Stored) => Realization::Stored,
            (None, RealizationSpec::Query(q)) => {
                let heading =
                    analyze::query_heading(self, q, &Scope::Object { class: class.clone() }).map_err(|e| {
                        CatalogError::Query { class: class.clone(), component: comp.name.clone(), source: Box::new(e) }
                    })?;
                self.check_heading(class, &comp, &heading)?;
                Realization::Query(q.clone())
            }
        };

        let mut next = self.clone();
        let def = next.classes.get_mut(class).expect("class checked above");
        match def.entry_mut(&comp.name) {
            Some(entry) => {
                entry.realization = realization;
                entry.realized_in = Some(class.clone());
            }
            None => def.components.push(ComponentDef { realization, realized_in: Some(class.clone()), ..comp }),
        }
        Ok(next)
    }

    fn check_heading(&self, class: &str, comp: &ComponentDef, actual: &[Attribute]) -> Result<(), CatalogError> {
        let mismatch = |expected: String| CatalogError::HeadingMismatch {
            class: class.to_string(),
            component: comp.name.clone(),
            expected,
            actual: heading_text(actual),
        };
        match &comp.ty {
            ValuableType::Scalar(ty) => {
                if actual.len() == 1 && self.assignable(&actual[0].ty, ty) {
                    Ok(())
                } else {
                    Err(mismatch(format!("(<single attribute> {ty})")))
                }
            }
            ValuableType::Relation(rel) => {
                let expected = rel
                    .heading
                    .iter()
                    .map(|f| match &f.ty {
                        ValuableType::Scalar(s) => Some(Attribute::new(f.name.clone(), s.clone())),
                        _ => None,
                    })
                    .collect::<Option<Vec<_>>>();
                let text = field_heading_text(&rel.heading);
                let Some(expected) = expected else {
                    return Err(mismatch(text));
                };
                let matches = expected.len() == actual.len()
                    && expected
                        .iter()
                        .all(|e| actual.iter().any(|a| a.name == e.name && self.assignable(&a.ty, &e.ty)));
                if matches {
                    Ok(())
                } else {
                    Err(mismatch(text))
                }
            }
            ValuableType::Tuple(fields) => Err(mismatch(field_heading_text(fields))),
        }
    }

    /// Whether a value of type `from` may be stored where `to` is declared.
    pub fn assignable(&self, from: &ScalarType, to: &ScalarType) -> bool {
        match (from, to) {
            (ScalarType::Reference(a), ScalarType::Reference(b)) => self.is_subclass_of(a, b),
            (a, b) => a == b,
        }
    }

    pub fn define_view(&self, name: &str, query: &QueryExpr) -> Result<Catalog, CatalogError> {
        if self.views.contains_key(name) {
            return Err(CatalogError::DuplicateView(name.into()));
        }
        if self.classes.contains_key(name) {
            return Err(CatalogError::NameInUse(name.into()));
        }
        analyze::query_heading(self, query, &Scope::global())
            .map_err(|e| CatalogError::View { name: name.into(), source: Box::new(e) })?;
        let mut next = self.clone();
        next.views.insert(name.into(), ViewDef { name: name.into(), query: query.clone() });
        Ok(next)
    }

    /// Checks every catalog invariant and lists all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut report = |class: &str, component: Option<&str>, message: String| {
            out.push(Violation { class: class.into(), component: component.map(String::from), message })
        };
        for def in self.classes.values() {
            if let Some(parent) = &def.parent {
                if !self.classes.contains_key(parent) {
                    report(&def.name, None, format!("unknown parent class {parent}"));
                }
            }
            if self.has_cycle(&def.name) {
                report(&def.name, None, "inheritance cycle".into());
                continue;
            }
            if self.views.contains_key(&def.name) {
                report(&def.name, None, "name shared with a view".into());
            }
            let inherited: Vec<ComponentDef> = match &def.parent {
                Some(p) => self.effective_components(p).unwrap_or_default(),
                None => Vec::new(),
            };
            let mut seen = HashSet::new();
            for comp in &def.components {
                let name = Some(comp.name.as_str());
                if !seen.insert(comp.name.as_str()) {
                    report(&def.name, name, "duplicate component".into());
                }
                let is_inherited = inherited.iter().any(|c| c.name == comp.name);
                if comp.declared_in == def.name {
                    if is_inherited {
                        report(&def.name, name, "redeclares an inherited component".into());
                    }
                } else if !is_inherited {
                    report(&def.name, name, format!("overrides a component not inherited from {}", comp.declared_in));
                }
                if let Err(reason) = check_type_shape(&comp.ty) {
                    report(&def.name, name, reason);
                }
                let mut targets = comp.ty.referenced_classes();
                if let Some(params) = &comp.params {
                    targets.extend(params.iter().filter_map(|p| match &p.ty {
                        ScalarType::Reference(t) => Some(t.as_str()),
                        _ => None,
                    }));
                }
                for target in targets {
                    if !self.classes.contains_key(target) {
                        report(&def.name, name, format!("unknown reference target {target}"));
                    }
                }
                match (&comp.realization, comp.is_method()) {
                    (Realization::Procedure(_), false) => {
                        report(&def.name, name, "procedural realization of a data component".into())
                    }
                    (Realization::Stored | Realization::Query(_), true) => {
                        report(&def.name, name, "method realized as data".into())
                    }
                    _ => {}
                }
            }
        }
        for view in self.views.values() {
            if let Err(e) = analyze::query_heading(self, &view.query, &Scope::global()) {
                out.push(Violation { class: view.name.clone(), component: None, message: format!("view: {e}") });
            }
        }
        out
    }

    fn has_cycle(&self, class: &str) -> bool {
        let mut seen = HashSet::new();
        let mut cur = Some(class);
        while let Some(name) = cur {
            if !seen.insert(name) {
                return true;
            }
            cur = self.classes.get(name).and_then(|d| d.parent.as_deref());
        }
        false
    }

    /// DDL statements that rebuild this catalog: classes, then views, then realizations.
    pub fn to_statements(&self) -> Vec<StatementKind> {
        let mut out = Vec::new();
        for def in self.classes.values() {
            out.push(StatementKind::CreateClass(CreateClass {
                name: def.name.clone(),
                parent: def.parent.clone(),
                components: def
                    .own_declared()
                    .map(|c| ComponentSpec { name: c.name.clone(), ty: c.ty.clone(), params: c.params.clone() })
                    .collect(),
            }));
        }
        for view in self.views.values() {
            out.push(StatementKind::CreateView { name: view.name.clone(), query: view.query.clone() });
        }
        for def in self.classes.values() {
            for comp in &def.components {
                let realization = match &comp.realization {
                    Realization::Unrealized => continue,
                    Realization::Stored => RealizationSpec::Stored,
                    Realization::Query(q) => RealizationSpec::Query(q.clone()),
                    Realization::Procedure(b) => RealizationSpec::Procedure(b.clone()),
                };
                let signature = comp
                    .params
                    .as_ref()
                    .map(|p| (p.clone(), comp.return_type().cloned().expect("method has a scalar type")));
                out.push(StatementKind::AlterRealize(AlterRealize {
                    class: def.name.clone(),
                    component: comp.name.clone(),
                    signature,
                    realization,
                }));
            }
        }
        out
    }

    /// Human-readable listing: one block per class with effective components,
    /// types and realization kinds, then the views.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for def in self.classes.values() {
            match &def.parent {
                Some(p) => writeln!(out, "CLASS {} EXTEND {p}", def.name).unwrap(),
                None => writeln!(out, "CLASS {}", def.name).unwrap(),
            }
            for comp in self.effective_components(&def.name).unwrap_or_default() {
                let ty = match &comp.params {
                    Some(params) => crate::lang::format::format_signature(params, comp.ty.scalar().unwrap()),
                    None => format!(" {}", comp.ty),
                };
                write!(out, "  {}{ty} : {}", comp.name, comp.realization.kind()).unwrap();
                if comp.declared_in != def.name {
                    write!(out, " [inherited from {}]", comp.declared_in).unwrap();
                }
                if let Some(r) = &comp.realized_in {
                    if r != &def.name {
                        write!(out, " [realized in {r}]").unwrap();
                    }
                }
                out.push('\n');
                if let Realization::Query(q) = &comp.realization {
                    for line in format_query(q).lines() {
                        writeln!(out, "      {line}").unwrap();
                    }
                }
            }
        }
        for view in self.views.values() {
            writeln!(out, "VIEW {}", view.name).unwrap();
            for line in format_query(&view.query).lines() {
                writeln!(out, "      {line}").unwrap();
            }
        }
        out
    }
}

fn check_type_shape(ty: &ValuableType) -> Result<(), String> {
    fn unique(fields: &[Field]) -> Result<(), String> {
        let mut seen = HashSet::new();
        for f in fields {
            if !seen.insert(&f.name) {
                return Err(format!("duplicate field {}", f.name));
            }
        }
        Ok(())
    }
    match ty {
        ValuableType::Scalar(_) => Ok(()),
        ValuableType::Tuple(fields) => {
            unique(fields)?;
            if let Some(f) = fields.iter().find(|f| !f.ty.is_scalar()) {
                return Err(format!("tuple field {} must be scalar", f.name));
            }
            Ok(())
        }
        ValuableType::Relation(rel) => {
            unique(&rel.heading)?;
            if let Some(key) = &rel.key {
                for k in key {
                    if !rel.heading.iter().any(|f| &f.name == k) {
                        return Err(format!("key attribute {k} is not in the heading"));
                    }
                }
            }
            rel.heading.iter().try_for_each(|f| check_type_shape(&f.ty))
        }
    }
}

fn heading_text(attrs: &[Attribute]) -> String {
    let parts: Vec<String> = attrs.iter().map(|a| format!("{} {}", a.name, a.ty)).collect();
    format!("({})", parts.join(", "))
}

fn field_heading_text(fields: &[Field]) -> String {
    let parts: Vec<String> = fields.iter().map(|f| format!("{} {}", f.name, f.ty)).collect();
    format!("({})", parts.join(", "))
}
