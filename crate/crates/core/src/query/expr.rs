//! Typed scalar expressions compiled against a row of slots.
//!
//! Null only appears through flattening. Arithmetic on Null yields Null; a
//! comparison involving Null is false, and logical operators read Null as false.

use std::cmp::Ordering;

use crate::lang::{BinaryOp, Expr, Literal, UnaryOp};
use crate::types::{BaseType, ScalarType};
use crate::value::{parse_datetime, Oid, Value};

use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
pub enum CExpr {
    Const(Value),
    Slot(usize),
    Neg(Box<CExpr>),
    Not(Box<CExpr>),
    ToFloat(Box<CExpr>),
    Binary(BinaryOp, Box<CExpr>, Box<CExpr>),
}

/// Type of a reference literal such as `@3`, whose class is unknown until run time.
pub fn any_reference() -> ScalarType {
    ScalarType::Reference(String::new())
}

pub fn is_any_reference(ty: &ScalarType) -> bool {
    matches!(ty, ScalarType::Reference(c) if c.is_empty())
}

/// Maps a path to its slot in the row and its type.
pub type Resolver<'a> = dyn FnMut(&str) -> Result<(usize, ScalarType), QueryError> + 'a;

/// Compiles `expr`, resolving every path through `resolve` to a slot and type.
pub fn compile(expr: &Expr, resolve: &mut Resolver) -> Result<(CExpr, ScalarType), QueryError> {
    match expr {
        Expr::Literal(lit) => literal(lit),
        Expr::Path(p) => {
            let (slot, ty) = resolve(p)?;
            Ok((CExpr::Slot(slot), ty))
        }
        Expr::Unary(UnaryOp::Neg, inner) => {
            let (e, ty) = compile(inner, resolve)?;
            if !ty.is_numeric() {
                return Err(QueryError::TypeMismatch(format!("cannot negate {ty}")));
            }
            Ok((CExpr::Neg(Box::new(e)), ty))
        }
        Expr::Unary(UnaryOp::Not, inner) => {
            let (e, ty) = compile(inner, resolve)?;
            if ty != ScalarType::BOOL {
                return Err(QueryError::TypeMismatch(format!("NOT needs BOOL, found {ty}")));
            }
            Ok((CExpr::Not(Box::new(e)), ScalarType::BOOL))
        }
        Expr::Binary(op, l, r) => {
            let (mut le, mut lt) = compile(l, resolve)?;
            let (mut re, mut rt) = compile(r, resolve)?;
            coerce_datetime_const(&mut le, &mut lt, &rt)?;
            coerce_datetime_const(&mut re, &mut rt, &lt)?;
            let ty = binary_type(*op, &lt, &rt)?;
            Ok((CExpr::Binary(*op, Box::new(le), Box::new(re)), ty))
        }
    }
}

fn literal(lit: &Literal) -> Result<(CExpr, ScalarType), QueryError> {
    let (v, ty) = match lit {
        Literal::Int(i) => (Value::Int(*i), ScalarType::INTEGER),
        Literal::Float(x) => (Value::float(*x), ScalarType::FLOAT),
        Literal::Str(s) => (Value::Str(s.clone()), ScalarType::STRING),
        Literal::Bool(b) => (Value::Bool(*b), ScalarType::BOOL),
        Literal::DateTime(d) => (Value::DateTime(*d), ScalarType::DATETIME),
        Literal::Ref(n) => (Value::Ref(Oid(*n)), any_reference()),
        Literal::Tuple(_) | Literal::Relation(_) => {
            return Err(QueryError::TypeMismatch("only scalar literals are allowed in expressions".into()))
        }
    };
    Ok((CExpr::Const(v), ty))
}

/// A string constant next to a DATETIME operand is read as a datetime.
fn coerce_datetime_const(e: &mut CExpr, ty: &mut ScalarType, other: &ScalarType) -> Result<(), QueryError> {
    if *other != ScalarType::DATETIME {
        return Ok(());
    }
    if let CExpr::Const(Value::Str(s)) = e {
        let d = parse_datetime(s).ok_or_else(|| QueryError::TypeMismatch(format!("'{s}' is not a datetime")))?;
        *e = CExpr::Const(Value::DateTime(d));
        *ty = ScalarType::DATETIME;
    }
    Ok(())
}

/// Adapts an expression for assignment to `target`, widening integers and
/// reading string constants as datetimes.
pub fn coerce_for_assignment(e: CExpr, ty: ScalarType, target: &ScalarType) -> Result<(CExpr, ScalarType), QueryError> {
    let (mut e, mut ty) = (e, ty);
    coerce_datetime_const(&mut e, &mut ty, target)?;
    match (&ty, target) {
        (a, b) if a == b => Ok((e, ty)),
        (ScalarType::Base(BaseType::Integer), ScalarType::Base(BaseType::Float)) => {
            Ok((CExpr::ToFloat(Box::new(e)), target.clone()))
        }
        (ScalarType::Reference(_), ScalarType::Reference(_)) => Ok((e, ty)),
        _ => Err(QueryError::TypeMismatch(format!("cannot assign {ty} to {target}"))),
    }
}

fn binary_type(op: BinaryOp, l: &ScalarType, r: &ScalarType) -> Result<ScalarType, QueryError> {
    let mismatch = || QueryError::TypeMismatch(format!("{l} {} {r}", op.symbol()));
    if op.is_logical() {
        return if *l == ScalarType::BOOL && *r == ScalarType::BOOL { Ok(ScalarType::BOOL) } else { Err(mismatch()) };
    }
    if op.is_comparison() {
        let comparable = (l.is_numeric() && r.is_numeric())
            || matches!((l, r), (ScalarType::Reference(_), ScalarType::Reference(_)))
            || l == r;
        let ordered = !matches!(l, ScalarType::Reference(_) | ScalarType::Base(BaseType::Bool));
        return if comparable && (ordered || matches!(op, BinaryOp::Eq | BinaryOp::Ne)) {
            Ok(ScalarType::BOOL)
        } else {
            Err(mismatch())
        };
    }
    match (l, r) {
        (ScalarType::Base(BaseType::Integer), ScalarType::Base(BaseType::Integer)) => Ok(ScalarType::INTEGER),
        (a, b) if a.is_numeric() && b.is_numeric() => Ok(ScalarType::FLOAT),
        (ScalarType::Base(BaseType::String), ScalarType::Base(BaseType::String)) if op == BinaryOp::Add => {
            Ok(ScalarType::STRING)
        }
        _ => Err(mismatch()),
    }
}

impl CExpr {
    pub fn eval(&self, row: &[Value]) -> Result<Value, QueryError> {
        match self {
            CExpr::Const(v) => Ok(v.clone()),
            CExpr::Slot(i) => Ok(row[*i].clone()),
            CExpr::Neg(e) => match e.eval(row)? {
                Value::Int(i) => i.checked_neg().map(Value::Int).ok_or_else(overflow),
                Value::Float(x) => Ok(Value::float(-x)),
                other => Ok(other),
            },
            CExpr::Not(e) => Ok(Value::Bool(!truthy(&e.eval(row)?))),
            CExpr::ToFloat(e) => match e.eval(row)? {
                Value::Int(i) => Ok(Value::float(i as f64)),
                other => Ok(other),
            },
            CExpr::Binary(BinaryOp::And, l, r) => Ok(Value::Bool(truthy(&l.eval(row)?) && truthy(&r.eval(row)?))),
            CExpr::Binary(BinaryOp::Or, l, r) => Ok(Value::Bool(truthy(&l.eval(row)?) || truthy(&r.eval(row)?))),
            CExpr::Binary(op, l, r) => {
                let (a, b) = (l.eval(row)?, r.eval(row)?);
                if op.is_comparison() {
                    Ok(Value::Bool(compare(*op, &a, &b)))
                } else {
                    arithmetic(*op, a, b)
                }
            }
        }
    }

    /// Evaluates a predicate; anything but TRUE counts as false.
    pub fn test(&self, row: &[Value]) -> Result<bool, QueryError> {
        Ok(truthy(&self.eval(row)?))
    }
}

pub fn truthy(v: &Value) -> bool {
    matches!(v, Value::Bool(true))
}

fn overflow() -> QueryError {
    QueryError::Arithmetic("integer overflow".into())
}

fn compare(op: BinaryOp, a: &Value, b: &Value) -> bool {
    let ord = match (a, b) {
        (Value::Null, _) | (_, Value::Null) => return false,
        (Value::Int(x), Value::Float(y)) => (*x as f64).partial_cmp(y),
        (Value::Float(x), Value::Int(y)) => x.partial_cmp(&(*y as f64)),
        (x, y) => Some(x.cmp(y)),
    };
    let Some(ord) = ord else { return false };
    match op {
        BinaryOp::Eq => ord == Ordering::Equal,
        BinaryOp::Ne => ord != Ordering::Equal,
        BinaryOp::Lt => ord == Ordering::Less,
        BinaryOp::Le => ord != Ordering::Greater,
        BinaryOp::Gt => ord == Ordering::Greater,
        BinaryOp::Ge => ord != Ordering::Less,
        _ => unreachable!("not a comparison"),
    }
}

fn arithmetic(op: BinaryOp, a: Value, b: Value) -> Result<Value, QueryError> {
    match (a, b) {
        (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                BinaryOp::Add => x.checked_add(y),
                BinaryOp::Sub => x.checked_sub(y),
                BinaryOp::Mul => x.checked_mul(y),
                BinaryOp::Div if y == 0 => return Err(QueryError::Arithmetic("division by zero".into())),
                BinaryOp::Div => x.checked_div(y),
                _ => unreachable!("not arithmetic"),
            };
            r.map(Value::Int).ok_or_else(overflow)
        }
        (Value::Str(x), Value::Str(y)) => Ok(Value::Str(x + &y)),
        (a, b) => {
            let (x, y) = (as_f64(&a)?, as_f64(&b)?);
            if op == BinaryOp::Div && y == 0.0 {
                return Err(QueryError::Arithmetic("division by zero".into()));
            }
            let r = match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => x / y,
                _ => unreachable!("not arithmetic"),
            };
            finite(r)
        }
    }
}

fn as_f64(v: &Value) -> Result<f64, QueryError> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Float(x) => Ok(*x),
        other => Err(QueryError::TypeMismatch(format!("{other} is not numeric"))),
    }
}

pub(crate) fn finite(x: f64) -> Result<Value, QueryError> {
    if x.is_finite() {
        Ok(Value::float(x))
    } else {
        Err(QueryError::Arithmetic("floating-point result is not finite".into()))
    }
}
