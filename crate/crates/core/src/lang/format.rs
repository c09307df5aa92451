//! Canonical text for statements. Output re-parses to an equal statement.

use std::fmt::Write;

use crate::types::{Field, Param, ScalarType, ValuableType};
use crate::value::{format_datetime, format_float, quote_string};

use super::ast::*;

pub fn format_statement(stmt: &Statement) -> String {
    format_kind(&stmt.kind)
}

pub fn format_kind(kind: &StatementKind) -> String {
    match kind {
        StatementKind::CreateClass(c) => format_create_class(c),
        StatementKind::AlterRealize(a) => format_alter(a),
        StatementKind::CreateView { name, query } => {
            format!("CREATE VIEW {name} AS\n{};", format_query(query))
        }
        StatementKind::CreateObjects { class, assignments, count } => {
            let head = if *count == 1 { "CREATE OBJECT".to_string() } else { format!("CREATE {count} OBJECTS") };
            let items: Vec<String> = assignments.iter().map(|(n, l)| format!("{n} := {}", format_literal(l))).collect();
            format!("{head} {class} ({});", items.join(", "))
        }
        StatementKind::DeleteObjects { class, predicate } => {
            format!("DELETE {class}{};", where_clause(predicate))
        }
        StatementKind::Select(q) => format!("{};", format_query(q)),
        StatementKind::GroupCall { class, method, args, predicate } => {
            let args: Vec<String> = args.iter().map(format_expr).collect();
            format!("CALL {class}.{method}({}){};", args.join(", "), where_clause(predicate))
        }
        StatementKind::GroupUpdate { relation, assignments, predicate } => {
            let items: Vec<String> = assignments.iter().map(|(a, e)| format!("{a} = {}", format_expr(e))).collect();
            format!("UPDATE {relation}\nSET {}{};", items.join(", "), where_clause(predicate))
        }
    }
}

fn where_clause(predicate: &Option<Expr>) -> String {
    match predicate {
        Some(p) => format!("\nWHERE {}", format_expr(p)),
        None => String::new(),
    }
}

fn format_create_class(c: &CreateClass) -> String {
    let mut out = format!("CREATE CLASS {}", c.name);
    if let Some(p) = &c.parent {
        write!(out, " EXTEND {p}").unwrap();
    }
    if c.components.is_empty() {
        out.push_str(" { } ..");
        return out;
    }
    out.push_str("\n{\n");
    for comp in &c.components {
        match &comp.params {
            Some(params) => {
                let ret = comp.ty.scalar().expect("method return type is scalar");
                writeln!(out, "  {}({}) {};", comp.name, format_params(params), ret).unwrap();
            }
            None => {
                out.push_str("  ");
                out.push_str(&comp.name);
                out.push(' ');
                format_type(&mut out, &comp.ty, 1);
                out.push_str(";\n");
            }
        }
    }
    out.push_str("} ..");
    out
}

fn format_params(params: &[Param]) -> String {
    params.iter().map(|p| format!("{} {}", p.name, p.ty)).collect::<Vec<_>>().join(", ")
}

fn format_type(out: &mut String, ty: &ValuableType, depth: usize) {
    match ty {
        ValuableType::Scalar(s) => out.push_str(&s.to_string()),
        ValuableType::Tuple(fields) => {
            out.push_str("TUPLE");
            format_fields(out, fields, None, depth);
        }
        ValuableType::Relation(rel) => {
            out.push_str("SET OF");
            format_fields(out, &rel.heading, rel.key.as_deref(), depth);
        }
    }
}

fn format_fields(out: &mut String, fields: &[Field], key: Option<&[String]>, depth: usize) {
    let indent = "  ".repeat(depth);
    out.push('\n');
    out.push_str(&indent);
    out.push_str("{\n");
    for f in fields {
        out.push_str(&indent);
        out.push_str("  ");
        out.push_str(&f.name);
        out.push(' ');
        format_type(out, &f.ty, depth + 1);
        out.push_str(";\n");
    }
    if let Some(key) = key {
        writeln!(out, "{indent}  KEY ({});", key.join(", ")).unwrap();
    }
    out.push_str(&indent);
    out.push('}');
}

fn format_alter(a: &AlterRealize) -> String {
    let mut out = format!("ALTER CLASS {}\nREALIZE {}", a.class, a.component);
    if let Some((params, ret)) = &a.signature {
        write!(out, "({}) {}", format_params(params), ret).unwrap();
    }
    out.push_str("\nAS");
    match &a.realization {
        RealizationSpec::Stored => out.push_str(" STORED"),
        RealizationSpec::Query(q) => {
            out.push('\n');
            out.push_str(&format_query(q));
        }
        RealizationSpec::Procedure(body) => {
            out.push_str("\nBEGIN\n");
            for stmt in body {
                out.push_str("  ");
                out.push_str(&format_body_stmt(stmt));
                out.push('\n');
            }
            out.push_str("END");
        }
    }
    out.push(';');
    out
}

pub fn format_body_stmt(stmt: &BodyStmt) -> String {
    match stmt {
        BodyStmt::Set { component, value } => format!("SET {component} := {};", format_expr(value)),
        BodyStmt::Insert { component, values } => {
            let vs: Vec<String> = values.iter().map(format_expr).collect();
            format!("INSERT INTO {component} VALUES ({});", vs.join(", "))
        }
        BodyStmt::Delete { component, predicate } => match predicate {
            Some(p) => format!("DELETE FROM {component} WHERE {};", format_expr(p)),
            None => format!("DELETE FROM {component};"),
        },
        BodyStmt::Return(e) => format!("RETURN {};", format_expr(e)),
    }
}

pub fn format_query(q: &QueryExpr) -> String {
    let projections: Vec<String> = q
        .projections
        .iter()
        .map(|p| {
            let item = match &p.item {
                ProjItem::Attr(a) => a.clone(),
                ProjItem::Aggregate(f, a) => format!("{}({a})", f.as_str()),
            };
            match &p.alias {
                Some(alias) => format!("{item} AS {alias}"),
                None => item,
            }
        })
        .collect();
    let sources: Vec<String> = q
        .sources
        .iter()
        .map(|s| match &s.alias {
            Some(a) => format!("{} {a}", s.relation),
            None => s.relation.clone(),
        })
        .collect();
    let mut out = format!("SELECT {}\nFROM {}", projections.join(", "), sources.join(", "));
    if let Some(p) = &q.predicate {
        write!(out, "\nWHERE {}", format_expr(p)).unwrap();
    }
    if !q.group_by.is_empty() {
        write!(out, "\nGROUP BY {}", q.group_by.join(", ")).unwrap();
    }
    out
}

pub fn format_expr(e: &Expr) -> String {
    match e {
        Expr::Literal(l) => format_literal(l),
        Expr::Path(p) => p.clone(),
        Expr::Unary(UnaryOp::Neg, inner) => match inner.as_ref() {
            Expr::Literal(Literal::Int(_) | Literal::Float(_)) => format!("-({})", format_expr(inner)),
            _ => format!("-{}", operand(inner)),
        },
        Expr::Unary(UnaryOp::Not, inner) => format!("NOT {}", operand(inner)),
        Expr::Binary(op, l, r) => format!("{} {} {}", operand(l), op.symbol(), operand(r)),
    }
}

/// Nested operators are always parenthesized, so precedence never matters on re-parse.
fn operand(e: &Expr) -> String {
    match e {
        Expr::Unary(..) | Expr::Binary(..) => format!("({})", format_expr(e)),
        Expr::Literal(Literal::Int(i)) if *i < 0 => format!("({i})"),
        Expr::Literal(Literal::Float(x)) if x.is_sign_negative() => format!("({})", format_float(*x)),
        _ => format_expr(e),
    }
}

pub fn format_literal(l: &Literal) -> String {
    match l {
        Literal::Int(i) => i.to_string(),
        Literal::Float(x) => format_float(*x),
        Literal::Str(s) => quote_string(s),
        Literal::Bool(true) => "TRUE".into(),
        Literal::Bool(false) => "FALSE".into(),
        Literal::DateTime(d) => format!("#{}#", format_datetime(d)),
        Literal::Ref(n) => format!("@{n}"),
        Literal::Tuple(items) => {
            let parts: Vec<String> = items.iter().map(format_literal).collect();
            format!("({})", parts.join(", "))
        }
        Literal::Relation(rows) => {
            let parts: Vec<String> = rows.iter().map(|r| format_literal(&Literal::Tuple(r.clone()))).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

/// Used by catalog listings for method signatures.
pub fn format_signature(params: &[Param], ret: &ScalarType) -> String {
    format!("({}) {}", format_params(params), ret)
}
