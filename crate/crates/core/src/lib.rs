//! An object-relational database engine.
//!
//! Classes are specified with scalar, reference, tuple and relation-valued
//! components. Each component is then realized: stored, computed by a query
//! over the owning object, or (for methods) implemented by a procedure body.
//! From the class specifications the engine derives a namespace of relations,
//! one per prefix of every path expression, and evaluates them over all
//! objects of a class and its subclasses. Queries, views and set-oriented
//! commands work on those relations.

pub mod catalog;
pub mod cli;
pub mod exec;
pub mod lang;
pub mod namespace;
pub mod query;
pub mod session;
pub mod snapshot;
pub mod store;
pub mod types;
pub mod value;

pub use catalog::{Catalog, CatalogError, ClassDef, ComponentDef, Realization};
pub use exec::{ExecError, ExecutionReport};
pub use namespace::{DerivedRelationSchema, NamespaceIndex, PathExpression};
pub use query::{EvalContext, QueryError};
pub use session::Session;
pub use store::{Database, ObjectState, StoreError};
pub use value::{Oid, Relation, Value};
