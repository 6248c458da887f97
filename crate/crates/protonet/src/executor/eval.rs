//! Strict evaluation of guard expressions against the data-flow store.
//!
//! Store values are strings. The ordering family compares as integers
//! when both sides parse as decimal integers and lexicographically
//! otherwise; `==`/`!=` compare raw strings.

use thiserror::Error;

use crate::model::{CmpOp, PredExpr};

use super::DataStore;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound reference `{0}`")]
    UnboundReference(String),
    #[error("type error: {0}")]
    Type(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Text(String),
    Bool(bool),
}

impl Value {
    fn as_text(&self, context: &str) -> Result<&str, EvalError> {
        match self {
            Value::Text(s) => Ok(s),
            Value::Bool(_) => Err(EvalError::Type(format!(
                "boolean operand where a value was expected in `{context}`"
            ))),
        }
    }

    fn as_bool(&self, context: &str) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            Value::Text(_) => Err(EvalError::Type(format!(
                "string operand where a boolean was expected in `{context}`"
            ))),
        }
    }
}

/// Evaluates `expr` under `store`. Every reference must be bound.
pub fn evaluate_pred(expr: &PredExpr, store: &DataStore) -> Result<bool, EvalError> {
    eval(expr, store)?.as_bool("guard")
}

fn eval(expr: &PredExpr, store: &DataStore) -> Result<Value, EvalError> {
    Ok(match expr {
        PredExpr::Str(s) => Value::Text(s.clone()),
        PredExpr::Int(n) => Value::Text(n.to_string()),
        PredExpr::Bool(b) => Value::Bool(*b),
        PredExpr::RecvRef(label) => Value::Text(
            store
                .recv_values
                .get(label)
                .ok_or_else(|| EvalError::UnboundReference(format!("recv {label}")))?
                .clone(),
        ),
        PredExpr::ResultRef(label) => Value::Text(
            store
                .results
                .get(label)
                .ok_or_else(|| EvalError::UnboundReference(format!("result {label}")))?
                .clone(),
        ),
        PredExpr::Cmp(op, a, b) => {
            let va = eval(a, store)?;
            let vb = eval(b, store)?;
            let outcome = match op {
                CmpOp::Eq | CmpOp::Ne => {
                    let equal = match (&va, &vb) {
                        (Value::Bool(x), Value::Bool(y)) => x == y,
                        _ => va.as_text(op.as_str())? == vb.as_text(op.as_str())?,
                    };
                    if *op == CmpOp::Eq {
                        equal
                    } else {
                        !equal
                    }
                }
                _ => {
                    let sa = va.as_text(op.as_str())?;
                    let sb = vb.as_text(op.as_str())?;
                    let ordering = match (sa.parse::<i64>(), sb.parse::<i64>()) {
                        (Ok(x), Ok(y)) => x.cmp(&y),
                        _ => sa.cmp(sb),
                    };
                    match op {
                        CmpOp::Lt => ordering.is_lt(),
                        CmpOp::Le => ordering.is_le(),
                        CmpOp::Gt => ordering.is_gt(),
                        CmpOp::Ge => ordering.is_ge(),
                        CmpOp::Eq | CmpOp::Ne => unreachable!(),
                    }
                }
            };
            Value::Bool(outcome)
        }
        PredExpr::And(a, b) => {
            // Strict: both sides evaluate even when the first decides.
            let va = eval(a, store)?.as_bool("and")?;
            let vb = eval(b, store)?.as_bool("and")?;
            Value::Bool(va && vb)
        }
        PredExpr::Or(a, b) => {
            let va = eval(a, store)?.as_bool("or")?;
            let vb = eval(b, store)?.as_bool("or")?;
            Value::Bool(va || vb)
        }
        PredExpr::Not(a) => Value::Bool(!eval(a, store)?.as_bool("not")?),
    })
}
