//! Relations derived from class specifications.
//!
//! Every correct path expression `C.p1.p2...s` ending at a scalar gives rise
//! to a family of relations: for each split into a prefix and a suffix there is
//! a relation named after the prefix with an attribute named after the suffix.
//! Each relation also carries a reference attribute named after the root class.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::catalog::Catalog;
use crate::types::{ScalarType, ValuableType};
use crate::value::Attribute;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NamespaceError {
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("incorrect path expression {0}")]
    IncorrectPath(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathExpression {
    pub root: String,
    pub segments: Vec<String>,
}

impl PathExpression {
    pub fn new(root: impl Into<String>, segments: impl IntoIterator<Item = impl Into<String>>) -> Self {
        PathExpression { root: root.into(), segments: segments.into_iter().map(Into::into).collect() }
    }

    pub fn parse(text: &str) -> Self {
        let mut parts = text.split('.');
        let root = parts.next().unwrap_or_default().to_string();
        PathExpression { root, segments: parts.map(String::from).collect() }
    }
}

impl fmt::Display for PathExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root)?;
        for s in &self.segments {
            write!(f, ".{s}")?;
        }
        Ok(())
    }
}

/// One component in the expanded schema tree of a class.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaNode {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Scalar(ScalarType),
    /// A reference leaf. `expansion` lists the target's data components; it is
    /// empty when the target already occurs on the dereference chain.
    Reference {
        target: String,
        expansion: Vec<SchemaNode>,
        cut: bool,
    },
    Tuple(Vec<SchemaNode>),
    Relation(Vec<SchemaNode>),
}

impl SchemaNode {
    pub fn children(&self) -> Option<&[SchemaNode]> {
        match &self.kind {
            NodeKind::Scalar(_) => None,
            NodeKind::Reference { expansion, .. } => Some(expansion),
            NodeKind::Tuple(c) | NodeKind::Relation(c) => Some(c),
        }
    }
}

/// Expands the data components of `class`, following references until the
/// target class is already on the dereference chain.
pub fn class_tree(catalog: &Catalog, class: &str) -> Result<Vec<SchemaNode>, NamespaceError> {
    if !catalog.has_class(class) {
        return Err(NamespaceError::UnknownClass(class.to_string()));
    }
    let mut chain = vec![class.to_string()];
    Ok(expand_class(catalog, class, &mut chain))
}

fn expand_class(catalog: &Catalog, class: &str, chain: &mut Vec<String>) -> Vec<SchemaNode> {
    let comps = catalog.data_components(class).unwrap_or_default();
    comps.iter().map(|c| SchemaNode { name: c.name.clone(), kind: expand_type(catalog, &c.ty, chain) }).collect()
}

fn expand_type(catalog: &Catalog, ty: &ValuableType, chain: &mut Vec<String>) -> NodeKind {
    match ty {
        ValuableType::Scalar(ScalarType::Reference(target)) => {
            if chain.contains(target) || !catalog.has_class(target) {
                NodeKind::Reference { target: target.clone(), expansion: Vec::new(), cut: true }
            } else {
                chain.push(target.clone());
                let expansion = expand_class(catalog, target, chain);
                chain.pop();
                NodeKind::Reference { target: target.clone(), expansion, cut: false }
            }
        }
        ValuableType::Scalar(s) => NodeKind::Scalar(s.clone()),
        ValuableType::Tuple(fields) => NodeKind::Tuple(
            fields
                .iter()
                .map(|f| SchemaNode { name: f.name.clone(), kind: expand_type(catalog, &f.ty, chain) })
                .collect(),
        ),
        ValuableType::Relation(rel) => NodeKind::Relation(
            rel.heading
                .iter()
                .map(|f| SchemaNode { name: f.name.clone(), kind: expand_type(catalog, &f.ty, chain) })
                .collect(),
        ),
    }
}

/// Scalar leaves below `nodes`, as dotted suffixes in depth-first order.
pub fn leaves(nodes: &[SchemaNode]) -> Vec<Attribute> {
    let mut out = Vec::new();
    collect_leaves(nodes, "", &mut out);
    out
}

fn collect_leaves(nodes: &[SchemaNode], prefix: &str, out: &mut Vec<Attribute>) {
    for node in nodes {
        let name = if prefix.is_empty() { node.name.clone() } else { format!("{prefix}.{}", node.name) };
        match &node.kind {
            NodeKind::Scalar(ty) => out.push(Attribute::new(name, ty.clone())),
            NodeKind::Reference { target, expansion, .. } => {
                out.push(Attribute::new(name.clone(), ScalarType::Reference(target.clone())));
                collect_leaves(expansion, &name, out);
            }
            NodeKind::Tuple(c) | NodeKind::Relation(c) => collect_leaves(c, &name, out),
        }
    }
}

/// The node list reached by following `prefix` from `nodes`, if every step
/// names a non-scalar node.
pub fn subtree<'a>(nodes: &'a [SchemaNode], prefix: &[String]) -> Option<&'a [SchemaNode]> {
    let mut cur = nodes;
    for seg in prefix {
        cur = cur.iter().find(|n| &n.name == seg)?.children()?;
    }
    Some(cur)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedRelationSchema {
    /// Dotted relation name: the root followed by the prefix segments.
    pub name: String,
    /// Root of the name; a class name, or a reference name in a local namespace.
    pub root: String,
    pub prefix: Vec<String>,
    /// Name of the reference attribute; always the root class name.
    pub ref_attribute: String,
    pub ref_class: String,
    pub attributes: Vec<Attribute>,
}

impl DerivedRelationSchema {
    /// Full heading: the reference attribute followed by the suffix attributes.
    pub fn heading(&self) -> Vec<Attribute> {
        let mut out = vec![Attribute::new(self.ref_attribute.clone(), ScalarType::Reference(self.ref_class.clone()))];
        out.extend(self.attributes.iter().cloned());
        out
    }
}

impl fmt::Display for DerivedRelationSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\" (\"{}\"", self.name, self.ref_attribute)?;
        for a in &self.attributes {
            write!(f, ", \"{}\"", a.name)?;
        }
        f.write_str(")")
    }
}

/// Relations derived from `class`, in pre-order over the schema tree.
pub fn derive_relations(catalog: &Catalog, class: &str) -> Result<Vec<DerivedRelationSchema>, NamespaceError> {
    local_namespace(catalog, class, class)
}

/// Like [`derive_relations`], with relation names rooted at `ref_name`. The
/// reference attribute keeps the class name.
pub fn local_namespace(
    catalog: &Catalog,
    ref_name: &str,
    class: &str,
) -> Result<Vec<DerivedRelationSchema>, NamespaceError> {
    let tree = class_tree(catalog, class)?;
    let mut out = Vec::new();
    walk(&tree, ref_name, class, &mut Vec::new(), &mut out);
    Ok(out)
}

fn walk(nodes: &[SchemaNode], root: &str, class: &str, prefix: &mut Vec<String>, out: &mut Vec<DerivedRelationSchema>) {
    let attributes = leaves(nodes);
    if attributes.is_empty() {
        return;
    }
    let mut name = root.to_string();
    for seg in prefix.iter() {
        name.push('.');
        name.push_str(seg);
    }
    out.push(DerivedRelationSchema {
        name,
        root: root.to_string(),
        prefix: prefix.clone(),
        ref_attribute: class.to_string(),
        ref_class: class.to_string(),
        attributes,
    });
    for node in nodes {
        if let Some(children) = node.children() {
            prefix.push(node.name.clone());
            walk(children, root, class, prefix, out);
            prefix.pop();
        }
    }
}

/// Every correct path expression rooted at `class`, depth-first in
/// specification order. References yield their own path before the paths
/// through them.
pub fn enumerate_paths(catalog: &Catalog, class: &str) -> Result<Vec<PathExpression>, NamespaceError> {
    let tree = class_tree(catalog, class)?;
    Ok(leaves(&tree).into_iter().map(|a| PathExpression::new(class, a.name.split('.'))).collect())
}

/// A set of derived relations addressable by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NamespaceIndex {
    relations: IndexMap<String, DerivedRelationSchema>,
}

impl NamespaceIndex {
    /// All relations derived from every class, classes in definition order.
    pub fn global(catalog: &Catalog) -> Self {
        let mut relations = IndexMap::new();
        for class in catalog.classes() {
            for schema in derive_relations(catalog, &class.name).unwrap_or_default() {
                relations.insert(schema.name.clone(), schema);
            }
        }
        NamespaceIndex { relations }
    }

    pub fn local(catalog: &Catalog, ref_name: &str, class: &str) -> Result<Self, NamespaceError> {
        let relations = local_namespace(catalog, ref_name, class)?.into_iter().map(|s| (s.name.clone(), s)).collect();
        Ok(NamespaceIndex { relations })
    }

    pub fn get(&self, name: &str) -> Option<&DerivedRelationSchema> {
        self.relations.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DerivedRelationSchema> {
        self.relations.values()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// One line per relation in `"name" ("ref", "a1", ...)` notation.
    pub fn dump(&self) -> String {
        self.relations.values().map(|s| format!("{s}\n")).collect()
    }

    /// Every split of `path` into a relation name and an attribute name.
    pub fn split_lookup(&self, path: &PathExpression) -> Result<Vec<(String, String)>, NamespaceError> {
        let incorrect = || NamespaceError::IncorrectPath(path.to_string());
        if path.segments.is_empty() {
            return Err(incorrect());
        }
        let mut out = Vec::with_capacity(path.segments.len());
        for cut in 0..path.segments.len() {
            let mut relation = path.root.clone();
            for seg in &path.segments[..cut] {
                relation.push('.');
                relation.push_str(seg);
            }
            let attribute = path.segments[cut..].join(".");
            let schema = self.get(&relation).ok_or_else(incorrect)?;
            if !schema.attributes.iter().any(|a| a.name == attribute) {
                return Err(incorrect());
            }
            out.push((relation, attribute));
        }
        Ok(out)
    }
}
