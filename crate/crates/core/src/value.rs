//! Runtime values and evaluated relations.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{NaiveDate, NaiveDateTime};

use crate::types::{BaseType, ScalarType};

/// Surrogate object identifier. Allocated from a monotonic counter and never
/// reused; the object's class is looked up in the database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Oid(pub u64);

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    DateTime(NaiveDateTime),
    Ref(Oid),
    /// Field values in declaration order.
    Tuple(Vec<Value>),
    Relation(TupleSet),
}

impl Value {
    /// Builds a float value, folding negative zero so equal numbers compare equal.
    pub fn float(x: f64) -> Value {
        Value::Float(if x == 0.0 { 0.0 } else { x })
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) => 2,
            Value::Float(_) => 3,
            Value::Str(_) => 4,
            Value::DateTime(_) => 5,
            Value::Ref(_) => 6,
            Value::Tuple(_) => 7,
            Value::Relation(_) => 8,
        }
    }

    /// Whether this value belongs to the given scalar type. Null belongs to every type.
    pub fn has_scalar_type(&self, ty: &ScalarType) -> bool {
        matches!(
            (self, ty),
            (Value::Null, _)
                | (Value::Bool(_), ScalarType::Base(BaseType::Bool))
                | (Value::Int(_), ScalarType::Base(BaseType::Integer))
                | (Value::Float(_), ScalarType::Base(BaseType::Float))
                | (Value::Str(_), ScalarType::Base(BaseType::String))
                | (Value::DateTime(_), ScalarType::Base(BaseType::DateTime))
                | (Value::Ref(_), ScalarType::Reference(_))
        )
    }

    /// Renders the value as a literal of the command language.
    pub fn literal(&self) -> String {
        self.to_string()
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::DateTime(a), Value::DateTime(b)) => a.cmp(b),
            (Value::Ref(a), Value::Ref(b)) => a.cmp(b),
            (Value::Tuple(a), Value::Tuple(b)) => a.cmp(b),
            (Value::Relation(a), Value::Relation(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(x) => x.to_bits().hash(state),
            Value::Str(s) => s.hash(state),
            Value::DateTime(d) => d.hash(state),
            Value::Ref(o) => o.hash(state),
            Value::Tuple(vs) => vs.hash(state),
            Value::Relation(t) => t.hash(state),
        }
    }
}

pub fn format_float(x: f64) -> String {
    // Debug formatting is the shortest representation that round-trips.
    format!("{x:?}")
}

pub fn format_datetime(d: &NaiveDateTime) -> String {
    d.format("%Y-%m-%dT%H:%M:%S%.f").to_string()
}

/// Parses an ISO-8601 date or date-time (`2007-05-01`, `2007-05-01T10:30:00`,
/// `2007-05-01 10:30:00`, optional fractional seconds).
pub fn parse_datetime(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(d) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(d);
        }
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0))
}

pub fn quote_string(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Str(s) => f.write_str(&quote_string(s)),
            Value::DateTime(d) => write!(f, "#{}#", format_datetime(d)),
            Value::Ref(o) => write!(f, "{o}"),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::Relation(t) => {
                f.write_str("{")?;
                for (i, row) in t.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", Value::Tuple(row.clone()))?;
                }
                f.write_str("}")
            }
        }
    }
}

/// A finite set of positional tuples, kept sorted and free of duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleSet(Vec<Vec<Value>>);

/// Raised when a tuple list meant to form a set contains the same tuple twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateTuple(pub Vec<Value>);

impl TupleSet {
    pub fn new() -> Self {
        TupleSet(Vec::new())
    }

    /// Collects rows with set semantics: duplicates collapse.
    pub fn from_rows(rows: impl IntoIterator<Item = Vec<Value>>) -> Self {
        let mut rows: Vec<_> = rows.into_iter().collect();
        rows.sort();
        rows.dedup();
        TupleSet(rows)
    }

    /// Collects rows, refusing duplicates.
    pub fn try_from_rows(rows: Vec<Vec<Value>>) -> Result<Self, DuplicateTuple> {
        let mut rows = rows;
        rows.sort();
        for pair in rows.windows(2) {
            if pair[0] == pair[1] {
                return Err(DuplicateTuple(pair[0].clone()));
            }
        }
        Ok(TupleSet(rows))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec<Value>> {
        self.0.iter()
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.0
    }

    pub fn into_rows(self) -> Vec<Vec<Value>> {
        self.0
    }

    pub fn contains(&self, row: &[Value]) -> bool {
        self.0.binary_search_by(|r| r.as_slice().cmp(row)).is_ok()
    }

    /// Inserts a row; returns false if it was already present.
    pub fn insert(&mut self, row: Vec<Value>) -> bool {
        match self.0.binary_search(&row) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, row);
                true
            }
        }
    }

    pub fn retain(&mut self, keep: impl FnMut(&Vec<Value>) -> bool) {
        self.0.retain(keep);
    }

    pub fn union(&self, other: &TupleSet) -> TupleSet {
        TupleSet::from_rows(self.0.iter().chain(other.0.iter()).cloned())
    }
}

impl<'a> IntoIterator for &'a TupleSet {
    type Item = &'a Vec<Value>;
    type IntoIter = std::slice::Iter<'a, Vec<Value>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A heading attribute of an evaluated relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Attribute {
    pub name: String,
    pub ty: ScalarType,
}

impl Attribute {
    pub fn new(name: impl Into<String>, ty: ScalarType) -> Self {
        Attribute { name: name.into(), ty }
    }
}

/// An evaluated relation: heading plus a set of tuples total over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub heading: Vec<Attribute>,
    pub tuples: TupleSet,
}

impl Relation {
    pub fn empty(heading: Vec<Attribute>) -> Self {
        Relation { heading, tuples: TupleSet::new() }
    }

    pub fn new(heading: Vec<Attribute>, rows: impl IntoIterator<Item = Vec<Value>>) -> Self {
        Relation { heading, tuples: TupleSet::from_rows(rows) }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.heading.iter().position(|a| a.name == name)
    }

    pub fn attribute_names(&self) -> Vec<&str> {
        self.heading.iter().map(|a| a.name.as_str()).collect()
    }

    /// Values of one attribute across all tuples, in canonical order.
    pub fn column(&self, name: &str) -> Option<Vec<Value>> {
        let pos = self.position(name)?;
        Some(self.tuples.iter().map(|r| r[pos].clone()).collect())
    }

    /// Tab-separated dump: a header of quoted names, then one line per tuple.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.heading.iter().map(|a| format!("\"{}\"", a.name)).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.tuples {
            let cells: Vec<String> = row.iter().map(Value::literal).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Aligned text table for interactive display.
    pub fn to_table(&self) -> String {
        let cells: Vec<Vec<String>> = self.tuples.iter().map(|r| r.iter().map(Value::literal).collect()).collect();
        let mut widths: Vec<usize> = self.heading.iter().map(|a| a.name.chars().count()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |items: Vec<&str>| -> String {
            let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}", w = *w)).collect();
            padded.join(" | ").trim_end().to_string()
        };
        let mut out = String::new();
        out.push_str(&line(self.heading.iter().map(|a| a.name.as_str()).collect()));
        out.push('\n');
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("-+-"));
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row.iter().map(String::as_str).collect()));
            out.push('\n');
        }
        let n = self.tuples.len();
        out.push_str(&format!("({n} {})\n", if n == 1 { "row" } else { "rows" }));
        out
    }
}
