//! A small expression language for user-defined systems, evaluated with
//! second-order forward-mode automatic differentiation.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = power , { ("*" | "/") , power } ;
//! power   = unary , [ "^" , power ] ;          (* exponent must not depend on the state *)
//! unary   = ("-" | "+") , unary | primary ;
//! primary = number | ident | func , "(" , expr , ")" | "(" , expr , ")" ;
//! func    = "exp" | "log" | "sqrt" ;
//! ident   = letter , { letter | digit | "_" } ;
//! number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ] ;
//! ```
//!
//! Unary sign binds tighter than `^`, so `-x^2` is `(-x)^2`. `^` is
//! right-associative; every other binary operator is left-associative.
//! `u1 … un` always name state components; other identifiers are
//! parameters unless declared as state aliases.

mod jet;
mod parser;
mod system;

use std::fmt;

use thiserror::Error;

pub use jet::{eval_jet, eval_jet_order, eval_scalar, Jet};
pub use parser::{parse, parse_with, Symbols};
pub use system::{build_system, ExprSystem, ExprSystemConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        message: String,
        line: usize,
        column: usize,
    },

    #[error("unknown identifier '{name}' at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("unbound parameter '{0}'")]
    UnboundParameter(String),

    #[error("state component u{index} out of range for n={n}")]
    VariableOutOfRange { index: usize, n: usize },

    #[error("{op} undefined at value {value} in '{subexpr}'")]
    Domain {
        op: &'static str,
        value: f64,
        subexpr: String,
    },

    #[error("invalid system definition: {0}")]
    Definition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. State components are zero-based (`u1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    /// Base raised to a state-independent exponent.
    Pow(Box<Expr>, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// True when the expression references no state component.
    pub fn is_state_free(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Param(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Func(_, a) => a.is_state_free(),
            Expr::Pow(a, b) | Expr::Binary(_, a, b) => a.is_state_free() && b.is_state_free(),
        }
    }

    /// Largest referenced state index plus one (0 if none).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Param(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Func(_, a) => a.arity(),
            Expr::Pow(a, b) | Expr::Binary(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Func(_, a) => a.params(out),
            Expr::Pow(a, b) | Expr::Binary(_, a, b) => {
                a.params(out);
                b.params(out);
            }
        }
    }
}

/// Fully parenthesized rendering; `parse(&e.to_string())` reproduces `e`
/// for every tree the parser can produce.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "u{}", i + 1),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Pow(a, b) => write!(f, "({a})^({b})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}
