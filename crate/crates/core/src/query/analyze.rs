//! Name resolution and typing of SELECT queries.

use std::collections::HashSet;

use crate::catalog::Catalog;
use crate::lang::{AggFn, ProjItem, QueryExpr};
use crate::namespace::{class_tree, leaves, subtree, PathExpression};
use crate::types::ScalarType;
use crate::value::{Attribute, Oid};

use super::expr::{compile, CExpr};
use super::{QueryError, Scope};

/// Which root objects populate a derived relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Population {
    /// Every object of the class and its descendants.
    Extent(String),
    /// The objects bound to a reference name.
    Bound(Vec<Oid>),
    /// The object whose realization is being evaluated.
    Receiver,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceKind {
    Derived { population: Population, class: String, prefix: Vec<String> },
    View(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedSource {
    /// Alias if given, otherwise the relation name.
    pub label: String,
    pub relation: String,
    pub heading: Vec<Attribute>,
    pub kind: SourceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutCol {
    Column(usize),
    Aggregate(AggFn, usize),
}

/// A resolved query: sources, a predicate over their concatenated columns,
/// optional grouping and the output columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub sources: Vec<ResolvedSource>,
    pub predicate: Option<CExpr>,
    /// `Some` when the query groups or aggregates; empty means one global group.
    pub group: Option<Vec<usize>>,
    pub output: Vec<OutCol>,
    pub heading: Vec<Attribute>,
}

pub fn query_heading(catalog: &Catalog, q: &QueryExpr, scope: &Scope) -> Result<Vec<Attribute>, QueryError> {
    Ok(analyze(catalog, q, scope)?.heading)
}

/// Heading and population of a derived relation name, or `None` if the name
/// is not a derived relation in this scope.
pub fn resolve_derived(catalog: &Catalog, scope: &Scope, name: &str) -> Option<(Vec<Attribute>, SourceKind)> {
    let path = PathExpression::parse(name);
    let (class, ref_class, population, prefix) = match scope {
        Scope::Object { class }
            if catalog.data_components(class).is_ok_and(|cs| cs.iter().any(|c| c.name == path.root)) =>
        {
            let mut prefix = vec![path.root.clone()];
            prefix.extend(path.segments.iter().cloned());
            (class.clone(), class.clone(), Population::Receiver, prefix)
        }
        Scope::Global { references } if references.iter().any(|r| r.name == path.root) => {
            let binding = references.iter().find(|r| r.name == path.root).expect("checked");
            (binding.class.clone(), binding.class.clone(), Population::Bound(binding.targets.clone()), path.segments)
        }
        _ if catalog.has_class(&path.root) => {
            (path.root.clone(), path.root.clone(), Population::Extent(path.root.clone()), path.segments)
        }
        _ => return None,
    };
    let tree = class_tree(catalog, &class).ok()?;
    let attrs = leaves(subtree(&tree, &prefix)?);
    if attrs.is_empty() {
        return None;
    }
    let mut heading = vec![Attribute::new(ref_class.clone(), ScalarType::Reference(ref_class))];
    heading.extend(attrs);
    Some((heading, SourceKind::Derived { population, class, prefix }))
}

fn resolve_source(catalog: &Catalog, scope: &Scope, name: &str) -> Result<(Vec<Attribute>, SourceKind), QueryError> {
    if let Some(found) = resolve_derived(catalog, scope, name) {
        return Ok(found);
    }
    if let Some(view) = catalog.view(name) {
        let heading = query_heading(catalog, &view.query, &Scope::global())
            .map_err(|e| QueryError::View { name: name.into(), source: Box::new(e) })?;
        return Ok((heading, SourceKind::View(name.into())));
    }
    Err(QueryError::UnknownRelation(name.into()))
}

pub fn analyze(catalog: &Catalog, q: &QueryExpr, scope: &Scope) -> Result<Plan, QueryError> {
    let mut sources = Vec::with_capacity(q.sources.len());
    let mut labels = HashSet::new();
    for src in &q.sources {
        let (heading, kind) = resolve_source(catalog, scope, &src.relation)?;
        let label = src.alias.clone().unwrap_or_else(|| src.relation.clone());
        if !labels.insert(label.clone()) {
            return Err(QueryError::AmbiguousAttribute(format!("source name {label} is used twice")));
        }
        sources.push(ResolvedSource { label, relation: src.relation.clone(), heading, kind });
    }
    let columns: Vec<(usize, &Attribute)> =
        sources.iter().enumerate().flat_map(|(si, s)| s.heading.iter().map(move |a| (si, a))).collect();
    let resolve = |path: &str| -> Result<(usize, ScalarType), QueryError> {
        let mut found: Vec<usize> = Vec::new();
        for (col, (si, attr)) in columns.iter().enumerate() {
            let label = &sources[*si].label;
            let qualified = path.strip_prefix(label.as_str()).and_then(|r| r.strip_prefix('.'));
            if attr.name == path || qualified == Some(attr.name.as_str()) {
                found.push(col);
            }
        }
        match found.as_slice() {
            [col] => Ok((*col, columns[*col].1.ty.clone())),
            [] => Err(QueryError::UnknownAttribute(path.into())),
            _ => Err(QueryError::AmbiguousAttribute(path.into())),
        }
    };

    let predicate = match &q.predicate {
        Some(p) => {
            let (e, ty) = compile(p, &mut |path| resolve(path))?;
            if ty != ScalarType::BOOL {
                return Err(QueryError::TypeMismatch(format!("WHERE clause has type {ty}, expected BOOL")));
            }
            Some(e)
        }
        None => None,
    };

    let grouped = q.has_aggregates() || !q.group_by.is_empty();
    let group = if grouped {
        let mut cols = Vec::new();
        for path in &q.group_by {
            let (col, _) = resolve(path)?;
            if !cols.contains(&col) {
                cols.push(col);
            }
        }
        Some(cols)
    } else {
        None
    };

    let mut output = Vec::with_capacity(q.projections.len());
    let mut heading: Vec<Attribute> = Vec::with_capacity(q.projections.len());
    for proj in &q.projections {
        let (out, attr) = match &proj.item {
            ProjItem::Attr(path) => {
                let (col, ty) = resolve(path)?;
                if let Some(cols) = &group {
                    if !cols.contains(&col) {
                        return Err(QueryError::AggregateMisuse(format!("{path} must appear in GROUP BY")));
                    }
                }
                (OutCol::Column(col), Attribute::new(columns[col].1.name.clone(), ty))
            }
            ProjItem::Aggregate(f, path) => {
                let (col, ty) = resolve(path)?;
                let out_ty = match f {
                    AggFn::Count => ScalarType::INTEGER,
                    AggFn::Sum | AggFn::Avg if !ty.is_numeric() => {
                        return Err(QueryError::AggregateMisuse(format!(
                            "{}({path}) needs a numeric argument",
                            f.as_str()
                        )))
                    }
                    AggFn::Avg => ScalarType::FLOAT,
                    _ => ty,
                };
                (OutCol::Aggregate(*f, col), Attribute::new(columns[col].1.name.clone(), out_ty))
            }
        };
        let name = proj.alias.clone().unwrap_or(attr.name);
        if heading.iter().any(|a| a.name == name) {
            return Err(QueryError::DuplicateAttribute(name));
        }
        heading.push(Attribute::new(name, attr.ty));
        output.push(out);
    }

    Ok(Plan { sources, predicate, group, output, heading })
}
