//! Text snapshots of a whole database.
//!
//! ```text
//! RXODB 1
//! next-oid 4
//! catalog 212
//! CREATE CLASS Warehouse
//! ...
//! objects 2
//! @1 Warehouse (Name := 'North')
//! @2 Shipment (Items := {('A1', 5)}, No := 1, WareFrom := @1)
//! end
//! ```
//!
//! The catalog section is a DDL script of exactly the announced byte length.
//! Objects appear in ascending Oid order with components sorted by name, so
//! equal databases produce identical bytes.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::catalog::Catalog;
use crate::lang::format::format_kind;
use crate::lang::parser::Parser;
use crate::lang::{parse_script, StatementKind};
use crate::store::{value_from_literal, Database, ObjectState};
use crate::value::Oid;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "RXODB";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("corrupt snapshot at line {line}: {reason}")]
    CorruptSnapshot { line: usize, reason: String },
    #[error("snapshot format version {found} is not supported (expected {FORMAT_VERSION})")]
    VersionMismatch { found: String },
}

pub fn catalog_script(catalog: &Catalog) -> String {
    let mut out = String::new();
    for stmt in catalog.to_statements() {
        out.push_str(&format_kind(&stmt));
        out.push('\n');
    }
    out
}

pub fn save(db: &Database) -> String {
    let script = catalog_script(db.catalog());
    let mut out = format!("{MAGIC} {FORMAT_VERSION}\nnext-oid {}\ncatalog {}\n{script}", db.next_oid(), script.len());
    out.push_str(&format!("objects {}\n", db.len()));
    for obj in db.objects() {
        out.push_str(&format!("{} {} (", obj.oid, obj.class));
        let parts: Vec<String> = obj.stored.iter().map(|(k, v)| format!("{k} := {}", v.literal())).collect();
        out.push_str(&parts.join(", "));
        out.push_str(")\n");
    }
    out.push_str("end\n");
    out
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, reason: impl Into<String>) -> SnapshotError {
        SnapshotError::CorruptSnapshot { line: self.line, reason: reason.into() }
    }

    fn next_line(&mut self) -> Result<&'a str, SnapshotError> {
        let rest = &self.text[self.pos..];
        let Some(end) = rest.find('\n') else {
            return Err(self.corrupt("unexpected end of snapshot"));
        };
        self.pos += end + 1;
        self.line += 1;
        Ok(&rest[..end])
    }

    fn header(&mut self, key: &str) -> Result<u64, SnapshotError> {
        let line = self.next_line()?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| self.corrupt(format!("expected '{key} <number>'")))
    }

    fn take(&mut self, len: usize) -> Result<&'a str, SnapshotError> {
        let rest = &self.text[self.pos..];
        if rest.len() < len || !rest.is_char_boundary(len) {
            return Err(self.corrupt("catalog section is truncated"));
        }
        let chunk = &rest[..len];
        self.pos += len;
        self.line += chunk.matches('\n').count();
        Ok(chunk)
    }
}

pub fn load(text: &str) -> Result<Database, SnapshotError> {
    let mut r = Reader { text, pos: 0, line: 0 };
    let first = r.next_line()?;
    let version =
        first.strip_prefix(MAGIC).and_then(|v| v.strip_prefix(' ')).ok_or_else(|| r.corrupt("not a snapshot"))?;
    if version != FORMAT_VERSION.to_string() {
        return Err(SnapshotError::VersionMismatch { found: version.to_string() });
    }
    let next_oid = r.header("next-oid")?;
    let len = r.header("catalog")? as usize;
    let catalog_line = r.line + 1;
    let script = r.take(len)?;
    let catalog =
        replay_catalog(script).map_err(|reason| SnapshotError::CorruptSnapshot { line: catalog_line, reason })?;
    let count = r.header("objects")?;
    let mut db = Database::with_catalog(catalog);
    let mut objects = Vec::new();
    for _ in 0..count {
        let line = r.next_line()?;
        let obj = parse_object(&db, line).map_err(|reason| r.corrupt(reason))?;
        if objects.last().is_some_and(|o: &ObjectState| o.oid >= obj.oid) {
            return Err(r.corrupt("objects out of order"));
        }
        objects.push(obj);
    }
    if r.next_line()? != "end" || r.pos != text.len() {
        return Err(r.corrupt("expected 'end' at the end of the snapshot"));
    }
    db = Database::from_parts(db.catalog().clone(), objects, next_oid).map_err(|e| r.corrupt(e.to_string()))?;
    Ok(db)
}

fn replay_catalog(script: &str) -> Result<Catalog, String> {
    let stmts = parse_script(script).map_err(|e| format!("catalog: {e}"))?;
    let mut catalog = Catalog::new();
    for stmt in stmts {
        catalog = match &stmt.kind {
            StatementKind::CreateClass(c) => catalog.define_class(c),
            StatementKind::CreateView { name, query } => catalog.define_view(name, query),
            StatementKind::AlterRealize(a) => catalog.alter_realize(a),
            _ => return Err("catalog section holds a non-DDL statement".into()),
        }
        .map_err(|e| format!("catalog: {e}"))?;
    }
    Ok(catalog)
}

fn parse_object(db: &Database, line: &str) -> Result<ObjectState, String> {
    let mut p = Parser::from_source(line).map_err(|e| e.to_string())?;
    let oid = (|| {
        p.expect_symbol("@")?;
        p.expect_integer()
    })()
    .map_err(|e| e.to_string())?;
    let class = p.expect_ident().map_err(|e| e.to_string())?;
    let mut assignments = Vec::new();
    (|| {
        p.expect_symbol("(")?;
        if !p.eat_symbol(")") {
            loop {
                let name = p.expect_ident()?;
                p.expect_symbol(":=")?;
                assignments.push((name, p.literal()?));
                if p.eat_symbol(")") {
                    break;
                }
                p.expect_symbol(",")?;
            }
        }
        p.expect_eof()
    })()
    .map_err(|e| e.to_string())?;
    let catalog = db.catalog();
    if !catalog.has_class(&class) {
        return Err(format!("unknown class {class}"));
    }
    let mut stored = BTreeMap::new();
    for (name, lit) in assignments {
        let comp = catalog.effective_component(&class, &name).map_err(|e| e.to_string())?;
        let value = value_from_literal(&lit, &comp.ty).map_err(|e| format!("{class}.{name}: {e}"))?;
        stored.insert(name, value);
    }
    Ok(ObjectState { oid: Oid(oid), class, stored })
}
