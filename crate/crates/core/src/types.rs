//! Valuable types: the only types an object component may have.
//!
//! A component is either scalar (a base domain or a reference to a class),
//! tuple-structured, or a relation. Tuples and relations are defined over
//! named fields; relation headings may nest further valuable types.

use std::fmt;

/// Base domains available for scalar components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseType {
    Integer,
    Float,
    String,
    Bool,
    DateTime,
}

impl BaseType {
    pub fn keyword(self) -> &'static str {
        match self {
            BaseType::Integer => "INTEGER",
            BaseType::Float => "FLOAT",
            BaseType::String => "STRING",
            BaseType::Bool => "BOOL",
            BaseType::DateTime => "DATETIME",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, BaseType::Integer | BaseType::Float)
    }
}

/// A scalar type: a base domain or a reference to objects of a class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarType {
    Base(BaseType),
    Reference(String),
}

impl ScalarType {
    pub const INTEGER: ScalarType = ScalarType::Base(BaseType::Integer);
    pub const FLOAT: ScalarType = ScalarType::Base(BaseType::Float);
    pub const STRING: ScalarType = ScalarType::Base(BaseType::String);
    pub const BOOL: ScalarType = ScalarType::Base(BaseType::Bool);
    pub const DATETIME: ScalarType = ScalarType::Base(BaseType::DateTime);

    pub fn is_numeric(&self) -> bool {
        matches!(self, ScalarType::Base(b) if b.is_numeric())
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarType::Base(b) => f.write_str(b.keyword()),
            ScalarType::Reference(class) => f.write_str(class),
        }
    }
}

/// A named field of a tuple or relation type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub ty: ValuableType,
}

impl Field {
    pub fn new(name: impl Into<String>, ty: ValuableType) -> Self {
        Field { name: name.into(), ty }
    }
}

/// Relation type: a heading plus an optional key. Without a key the whole
/// heading acts as the key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationType {
    pub heading: Vec<Field>,
    pub key: Option<Vec<String>>,
}

impl RelationType {
    /// Positions of the key attributes within the heading.
    pub fn key_positions(&self) -> Vec<usize> {
        match &self.key {
            None => (0..self.heading.len()).collect(),
            Some(key) => key.iter().filter_map(|k| self.heading.iter().position(|f| &f.name == k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValuableType {
    Scalar(ScalarType),
    Tuple(Vec<Field>),
    Relation(RelationType),
}

impl ValuableType {
    pub fn scalar(&self) -> Option<&ScalarType> {
        match self {
            ValuableType::Scalar(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, ValuableType::Scalar(_))
    }

    /// Every class name referenced anywhere inside this type.
    pub fn referenced_classes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ValuableType::Scalar(ScalarType::Reference(c)) => out.push(c),
            ValuableType::Scalar(_) => {}
            ValuableType::Tuple(fields) => fields.iter().for_each(|f| f.ty.collect_refs(out)),
            ValuableType::Relation(rel) => rel.heading.iter().for_each(|f| f.ty.collect_refs(out)),
        }
    }
}

impl fmt::Display for ValuableType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn fields(f: &mut fmt::Formatter<'_>, fs: &[Field]) -> fmt::Result {
            f.write_str("{")?;
            for (i, field) in fs.iter().enumerate() {
                if i > 0 {
                    f.write_str(";")?;
                }
                write!(f, " {} {}", field.name, field.ty)?;
            }
            f.write_str(" }")
        }
        match self {
            ValuableType::Scalar(s) => write!(f, "{s}"),
            ValuableType::Tuple(fs) => {
                f.write_str("TUPLE ")?;
                fields(f, fs)
            }
            ValuableType::Relation(rel) => {
                f.write_str("SET OF ")?;
                fields(f, &rel.heading)?;
                if let Some(key) = &rel.key {
                    write!(f, " KEY ({})", key.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

/// A method parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: ScalarType,
}
