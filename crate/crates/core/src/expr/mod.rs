//! Scalar expressions in `u` and `v`.
//!
//! Expressions are parsed by a small recursive-descent parser and evaluated
//! either to a plain `f64` or to a [`Dual4`] jet carrying every mixed partial
//! derivative up to order four.

mod dual;
mod parse;

pub use dual::{Dual4, JET_LEN, MAX_ORDER};
pub use parse::{parse, ParseError, ParseErrorKind};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Integer power; the exponent is always a literal.
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// Evaluation failed because a function was applied outside its domain.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("domain error in `{node}`: {reason}")]
pub struct EvalError {
    /// The offending subexpression, printed back as source.
    pub node: String,
    pub reason: String,
}

impl EvalError {
    fn at(node: &Expr, reason: impl Into<String>) -> Self {
        EvalError {
            node: node.to_string(),
            reason: reason.into(),
        }
    }
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    /// True if the variable occurs anywhere in the tree.
    pub fn mentions(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.mentions(var),
            Expr::Binary(_, a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    /// Plain value at `(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> Result<f64, EvalError> {
        let out = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::U) => u,
            Expr::Var(Var::V) => v,
            Expr::Neg(a) => -a.eval(u, v)?,
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval(u, v)?, b.eval(u, v)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::at(self, "division by zero"));
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, n) => {
                let x = a.eval(u, v)?;
                if *n < 0 && x == 0.0 {
                    return Err(EvalError::at(self, "negative power of zero"));
                }
                x.powi(*n)
            }
            Expr::Call(func, a) => {
                let x = a.eval(u, v)?;
                check_domain(self, *func, x, 0)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(EvalError::at(self, "non-finite result"))
        }
    }

    /// Value and all mixed partials up to `order` at `(u, v)`.
    pub fn eval_jet(&self, u: f64, v: f64, order: usize) -> Result<Dual4, EvalError> {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        self.jet_at(&Dual4::var_u(u, order), &Dual4::var_v(v, order))
    }

    /// Evaluates with the given jets substituted for `u` and `v`.
    pub fn jet_at(&self, u: &Dual4, v: &Dual4) -> Result<Dual4, EvalError> {
        let out = match self {
            Expr::Const(c) => Dual4::constant(*c),
            Expr::Var(Var::U) => *u,
            Expr::Var(Var::V) => *v,
            Expr::Neg(a) => -a.jet_at(u, v)?,
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.jet_at(u, v)?, b.jet_at(u, v)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.value() == 0.0 {
                            return Err(EvalError::at(self, "division by zero"));
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, n) => {
                let x = a.jet_at(u, v)?;
                if *n < 0 && x.value() == 0.0 {
                    return Err(EvalError::at(self, "negative power of zero"));
                }
                x.powi(*n)
            }
            Expr::Call(func, a) => {
                let x = a.jet_at(u, v)?;
                check_domain(self, *func, x.value(), x.order())?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(EvalError::at(self, "non-finite result"))
        }
    }
}

fn check_domain(node: &Expr, func: Func, x: f64, order: usize) -> Result<(), EvalError> {
    match func {
        Func::Log if x <= 0.0 => Err(EvalError::at(node, format!("log of non-positive value {x}"))),
        Func::Sqrt if x < 0.0 => Err(EvalError::at(node, format!("sqrt of negative value {x}"))),
        Func::Sqrt if x == 0.0 && order > 0 => {
            Err(EvalError::at(node, "sqrt is not differentiable at 0"))
        }
        _ => Ok(()),
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized source that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(Var::U) => f.write_str("u"),
            Expr::Var(Var::V) => f.write_str("v"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
