use std::fmt;

use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A concrete runtime value.
///
/// `Undefined` marks "no binding": a variable read where it was never
/// assigned, or the old value of a first write.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Undefined,
    Null,
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        !matches!(self, Value::Undefined)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Undefined => f.write_str("undefined"),
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// JSON form: integers, booleans, `null` and strings map to themselves;
/// `Undefined` is the object `{"undefined": true}`.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Undefined => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("undefined", &true)?;
                m.end()
            }
            Value::Null => s.serialize_unit(),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Str(text) => s.serialize_str(text),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Null => Ok(Value::Null),
            serde_json::Value::Bool(b) => Ok(Value::Bool(b)),
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| D::Error::custom("value must be a 64-bit integer")),
            serde_json::Value::String(s) => Ok(Value::Str(s)),
            serde_json::Value::Object(m)
                if m.len() == 1 && m.get("undefined") == Some(&serde_json::Value::Bool(true)) =>
            {
                Ok(Value::Undefined)
            }
            other => Err(D::Error::custom(format!("not a trace value: {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

/// Why a primitive operation failed. Ordered by the fault codes the
/// interpreters attach to exception events.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpFault {
    NotBoolean,
    BadOperands,
    DivisionByZero,
}

/// Applies a binary operator with 64-bit wrapping integer arithmetic.
pub fn apply_binary(op: BinOp, lhs: &Value, rhs: &Value) -> Result<Value, OpFault> {
    use Value::{Bool, Int};
    match op {
        BinOp::Eq => return Ok(Bool(lhs == rhs)),
        BinOp::Ne => return Ok(Bool(lhs != rhs)),
        _ => {}
    }
    let (Int(a), Int(b)) = (lhs, rhs) else {
        return Err(OpFault::BadOperands);
    };
    let (a, b) = (*a, *b);
    Ok(match op {
        BinOp::Add => Int(a.wrapping_add(b)),
        BinOp::Sub => Int(a.wrapping_sub(b)),
        BinOp::Mul => Int(a.wrapping_mul(b)),
        BinOp::Div => {
            if b == 0 {
                return Err(OpFault::DivisionByZero);
            }
            Int(a.wrapping_div(b))
        }
        BinOp::Lt => Bool(a < b),
        BinOp::Le => Bool(a <= b),
        BinOp::Gt => Bool(a > b),
        BinOp::Ge => Bool(a >= b),
        BinOp::Eq | BinOp::Ne => unreachable!(),
    })
}

pub fn apply_unary(op: UnOp, v: &Value) -> Result<Value, OpFault> {
    match (op, v) {
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Not, _) => Err(OpFault::NotBoolean),
        (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
        (UnOp::Neg, _) => Err(OpFault::BadOperands),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_wraps() {
        assert_eq!(
            apply_binary(BinOp::Add, &Value::Int(i64::MAX), &Value::Int(1)),
            Ok(Value::Int(i64::MIN))
        );
        assert_eq!(
            apply_binary(BinOp::Div, &Value::Int(i64::MIN), &Value::Int(-1)),
            Ok(Value::Int(i64::MIN))
        );
        assert_eq!(apply_unary(UnOp::Neg, &Value::Int(i64::MIN)), Ok(Value::Int(i64::MIN)));
    }

    #[test]
    fn json_form() {
        let vals = [Value::Undefined, Value::Null, Value::Bool(true), Value::Int(-3), Value::Str("a".into())];
        let text = serde_json::to_string(&vals).unwrap();
        assert_eq!(text, r#"[{"undefined":true},null,true,-3,"a"]"#);
        let back: Vec<Value> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vals);
    }

    #[test]
    fn faults() {
        assert_eq!(
            apply_binary(BinOp::Div, &Value::Int(1), &Value::Int(0)),
            Err(OpFault::DivisionByZero)
        );
        assert_eq!(
            apply_binary(BinOp::Lt, &Value::Null, &Value::Int(0)),
            Err(OpFault::BadOperands)
        );
        assert_eq!(
            apply_binary(BinOp::Eq, &Value::Null, &Value::Int(0)),
            Ok(Value::Bool(false))
        );
        assert_eq!(apply_unary(UnOp::Not, &Value::Int(0)), Err(OpFault::NotBoolean));
    }
}
