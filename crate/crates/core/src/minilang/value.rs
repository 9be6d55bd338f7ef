//! Runtime values of MiniImp.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Minimum 64-bit integer doubles as the negative-infinity sentinel.
pub const NEG_INF: i64 = i64::MIN;

/// Declared type of a variable or parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    Int,
    Bool,
    Str,
    IntArray,
}

impl Type {
    pub fn keyword(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Bool => "bool",
            Type::Str => "string",
            Type::IntArray => "int[]",
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A runtime value. `Bottom` marks a declared but never assigned variable.
///
/// Negative infinity is not a separate variant: it is `Int(NEG_INF)`, which
/// keeps arithmetic and comparison uniform and makes the canonical token
/// injective by construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    IntArray(Vec<i64>),
    Bottom,
}

fn render_int(v: i64) -> String {
    if v == NEG_INF {
        "-inf".to_string()
    } else {
        v.to_string()
    }
}

impl Value {
    pub fn neg_inf() -> Self {
        Value::Int(NEG_INF)
    }

    pub fn type_of(&self) -> Option<Type> {
        match self {
            Value::Int(_) => Some(Type::Int),
            Value::Bool(_) => Some(Type::Bool),
            Value::Str(_) => Some(Type::Str),
            Value::IntArray(_) => Some(Type::IntArray),
            Value::Bottom => None,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Value::Bottom)
    }

    /// Canonical trace token. Strings are quoted with JSON escapes so that
    /// `Str("5")` and `Int(5)` never collide. `None` for `Bottom`, which is
    /// encoded by a reserved vocabulary entry instead.
    pub fn token(&self) -> Option<String> {
        match self {
            Value::Int(v) => Some(render_int(*v)),
            Value::Bool(b) => Some(b.to_string()),
            Value::Str(s) => Some(serde_json::to_string(s).expect("string serialization")),
            Value::IntArray(xs) => Some(render_array(xs)),
            Value::Bottom => None,
        }
    }

    /// Rendering used by `print` and string concatenation.
    pub fn display(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Bottom => "⊥".to_string(),
            other => other.token().unwrap_or_default(),
        }
    }

    /// Parse a value literal as accepted on the command line: integers,
    /// `-inf`, `true`/`false`, `[1,2,3]` arrays, or quoted strings. Anything
    /// else is taken as a bare string.
    pub fn parse_literal(text: &str) -> Value {
        let t = text.trim();
        if t == "-inf" {
            return Value::neg_inf();
        }
        if let Ok(v) = t.parse::<i64>() {
            return Value::Int(v);
        }
        match t {
            "true" => return Value::Bool(true),
            "false" => return Value::Bool(false),
            _ => {}
        }
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let parts: Result<Vec<i64>, _> = inner
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| if p == "-inf" { Ok(NEG_INF) } else { p.parse::<i64>() })
                .collect();
            if let Ok(xs) = parts {
                return Value::IntArray(xs);
            }
        }
        if t.starts_with('"') {
            if let Ok(s) = serde_json::from_str::<String>(t) {
                return Value::Str(s);
            }
        }
        Value::Str(text.to_string())
    }
}

fn render_array(xs: &[i64]) -> String {
    let mut out = String::from("[");
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&render_int(*x));
    }
    out.push(']');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}
