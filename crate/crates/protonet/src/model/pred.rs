//! Guard expressions on transitions.
//!
//! The wire form is a prefix s-expression string, e.g.
//! `(and (== (recv R1) "register") (> (result A2) 100))`. References
//! `(recv L)` and `(result L)` pull strings out of the run's data-flow
//! store; literals are strings, integers and booleans.

use std::fmt;

use thiserror::Error;

/// Comparison operators usable in guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn from_str(s: &str) -> Option<Self> {
        Some(match s {
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }

    /// True for the ordering family `< <= > >=`.
    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// A typed guard expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredExpr {
    Str(String),
    Int(i64),
    Bool(bool),
    /// Content of the message matched by the recv with this label.
    RecvRef(String),
    /// Result of the action with this label.
    ResultRef(String),
    Cmp(CmpOp, Box<PredExpr>, Box<PredExpr>),
    And(Box<PredExpr>, Box<PredExpr>),
    Or(Box<PredExpr>, Box<PredExpr>),
    Not(Box<PredExpr>),
}

/// Static type of a subexpression. References are dynamic: they hold
/// strings that may be compared as integers at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredType {
    Str,
    Int,
    Bool,
    Dynamic,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredParseError {
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("trailing input after expression")]
    TrailingInput,
    #[error("type error: {0}")]
    Type(String),
}

impl PredExpr {
    /// Parses the s-expression wire form and type-checks the result.
    pub fn parse(input: &str) -> Result<Self, PredParseError> {
        let tokens = tokenize(input)?;
        let mut pos = 0;
        let expr = parse_expr(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(PredParseError::TrailingInput);
        }
        expr.check_types()?;
        Ok(expr)
    }

    /// Recv labels referenced anywhere in the expression.
    pub fn recv_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let PredExpr::RecvRef(l) = e {
                out.push(l.as_str());
            }
        });
        out
    }

    /// Action labels referenced anywhere in the expression.
    pub fn result_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let PredExpr::ResultRef(l) = e {
                out.push(l.as_str());
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a PredExpr)) {
        f(self);
        match self {
            PredExpr::Cmp(_, a, b) | PredExpr::And(a, b) | PredExpr::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            PredExpr::Not(a) => a.walk(f),
            _ => {}
        }
    }

    /// Checks the typing rules: comparisons need compatible primitive
    /// operands (references unify with strings and integers, never with
    /// booleans), connectives need boolean operands, and the whole guard
    /// must be boolean.
    pub fn check_types(&self) -> Result<(), PredParseError> {
        match self.infer_type()? {
            PredType::Bool => Ok(()),
            other => Err(PredParseError::Type(format!(
                "guard must be boolean, found {other:?}"
            ))),
        }
    }

    fn infer_type(&self) -> Result<PredType, PredParseError> {
        Ok(match self {
            PredExpr::Str(_) => PredType::Str,
            PredExpr::Int(_) => PredType::Int,
            PredExpr::Bool(_) => PredType::Bool,
            PredExpr::RecvRef(_) | PredExpr::ResultRef(_) => PredType::Dynamic,
            PredExpr::Cmp(op, a, b) => {
                let ta = a.infer_type()?;
                let tb = b.infer_type()?;
                let compatible = match (ta, tb) {
                    (PredType::Dynamic, PredType::Bool) | (PredType::Bool, PredType::Dynamic) => false,
                    (PredType::Dynamic, _) | (_, PredType::Dynamic) => true,
                    (x, y) => x == y,
                };
                if !compatible {
                    return Err(PredParseError::Type(format!(
                        "`{}` applied to {ta:?} and {tb:?}",
                        op.as_str()
                    )));
                }
                if op.is_ordering() && (ta == PredType::Bool || tb == PredType::Bool) {
                    return Err(PredParseError::Type(format!(
                        "`{}` is not defined on booleans",
                        op.as_str()
                    )));
                }
                PredType::Bool
            }
            PredExpr::And(a, b) | PredExpr::Or(a, b) => {
                for side in [a, b] {
                    let t = side.infer_type()?;
                    if t != PredType::Bool {
                        return Err(PredParseError::Type(format!(
                            "connective operand must be boolean, found {t:?}"
                        )));
                    }
                }
                PredType::Bool
            }
            PredExpr::Not(a) => {
                let t = a.infer_type()?;
                if t != PredType::Bool {
                    return Err(PredParseError::Type(format!(
                        "`not` operand must be boolean, found {t:?}"
                    )));
                }
                PredType::Bool
            }
        })
    }
}

impl fmt::Display for PredExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredExpr::Str(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            PredExpr::Int(n) => write!(f, "{n}"),
            PredExpr::Bool(b) => write!(f, "{b}"),
            PredExpr::RecvRef(l) => write!(f, "(recv {l})"),
            PredExpr::ResultRef(l) => write!(f, "(result {l})"),
            PredExpr::Cmp(op, a, b) => write!(f, "({} {a} {b})", op.as_str()),
            PredExpr::And(a, b) => write!(f, "(and {a} {b})"),
            PredExpr::Or(a, b) => write!(f, "(or {a} {b})"),
            PredExpr::Not(a) => write!(f, "(not {a})"),
        }
    }
}

#[derive(Debug, PartialEq)]
enum Token {
    Open,
    Close,
    Str(String),
    Atom(String),
}

fn tokenize(input: &str) -> Result<Vec<Token>, PredParseError> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                tokens.push(Token::Open);
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            Some(other) => {
                                return Err(PredParseError::UnexpectedToken(format!("\\{other}")))
                            }
                            None => return Err(PredParseError::UnterminatedString),
                        },
                        Some(other) => s.push(other),
                        None => return Err(PredParseError::UnterminatedString),
                    }
                }
                tokens.push(Token::Str(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                }
                tokens.push(Token::Atom(atom));
            }
        }
    }
    Ok(tokens)
}

fn parse_expr(tokens: &[Token], pos: &mut usize) -> Result<PredExpr, PredParseError> {
    match tokens.get(*pos) {
        None => Err(PredParseError::UnexpectedEnd),
        Some(Token::Close) => Err(PredParseError::Unbalanced),
        Some(Token::Str(s)) => {
            *pos += 1;
            Ok(PredExpr::Str(s.clone()))
        }
        Some(Token::Atom(a)) => {
            *pos += 1;
            if a == "true" {
                Ok(PredExpr::Bool(true))
            } else if a == "false" {
                Ok(PredExpr::Bool(false))
            } else if let Ok(n) = a.parse::<i64>() {
                Ok(PredExpr::Int(n))
            } else {
                Err(PredParseError::UnexpectedToken(a.clone()))
            }
        }
        Some(Token::Open) => {
            *pos += 1;
            let head = match tokens.get(*pos) {
                Some(Token::Atom(a)) => a.clone(),
                Some(_) => return Err(PredParseError::UnexpectedToken("(".to_string())),
                None => return Err(PredParseError::UnexpectedEnd),
            };
            *pos += 1;
            let expr = match head.as_str() {
                "recv" | "result" => {
                    let label = match tokens.get(*pos) {
                        Some(Token::Atom(l)) => l.clone(),
                        _ => return Err(PredParseError::UnexpectedToken(head)),
                    };
                    *pos += 1;
                    if head == "recv" {
                        PredExpr::RecvRef(label)
                    } else {
                        PredExpr::ResultRef(label)
                    }
                }
                "and" | "or" => {
                    let a = parse_expr(tokens, pos)?;
                    let b = parse_expr(tokens, pos)?;
                    if head == "and" {
                        PredExpr::And(Box::new(a), Box::new(b))
                    } else {
                        PredExpr::Or(Box::new(a), Box::new(b))
                    }
                }
                "not" => PredExpr::Not(Box::new(parse_expr(tokens, pos)?)),
                op => match CmpOp::from_str(op) {
                    Some(op) => {
                        let a = parse_expr(tokens, pos)?;
                        let b = parse_expr(tokens, pos)?;
                        PredExpr::Cmp(op, Box::new(a), Box::new(b))
                    }
                    None => return Err(PredParseError::UnexpectedToken(head)),
                },
            };
            match tokens.get(*pos) {
                Some(Token::Close) => {
                    *pos += 1;
                    Ok(expr)
                }
                _ => Err(PredParseError::Unbalanced),
            }
        }
    }
}
