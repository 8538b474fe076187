use crate::model::Matrix;
use crate::systems::Params;

use super::{BinOp, Expr, ExprError, Func};

/// Value, gradient and Hessian of a scalar function of `n` variables.
///
/// The Hessian keeps only its upper triangle (row-major packed), so it is
/// symmetric by construction. Lower-order jets leave the unused parts empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    hessian: Vec<f64>,
    n: usize,
    order: u8,
}

fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

impl Jet {
    pub fn constant(n: usize, order: u8, value: f64) -> Self {
        Jet {
            value,
            gradient: if order >= 1 { vec![0.0; n] } else { Vec::new() },
            hessian: if order >= 2 { vec![0.0; packed_len(n)] } else { Vec::new() },
            n,
            order,
        }
    }

    pub fn variable(n: usize, order: u8, index: usize, value: f64) -> Self {
        let mut j = Jet::constant(n, order, value);
        if order >= 1 {
            j.gradient[index] = 1.0;
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `∂²/∂x_i∂x_j`.
    pub fn hessian_entry(&self, i: usize, j: usize) -> f64 {
        self.hessian[offset(self.n, i, j)]
    }

    pub fn hessian(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.hessian_entry(i, j))
    }

    fn unary(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let mut out = Jet::constant(self.n, self.order, f0);
        if self.order >= 1 {
            for (o, g) in out.gradient.iter_mut().zip(&self.gradient) {
                *o = f1 * g;
            }
        }
        if self.order >= 2 {
            for i in 0..self.n {
                for j in i..self.n {
                    let k = offset(self.n, i, j);
                    out.hessian[k] =
                        f1 * self.hessian[k] + f2 * self.gradient[i] * self.gradient[j];
                }
            }
        }
        out
    }

    fn linear(&self, other: &Jet, a: f64, b: f64) -> Jet {
        Jet {
            value: a * self.value + b * other.value,
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            hessian: self
                .hessian
                .iter()
                .zip(&other.hessian)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            n: self.n,
            order: self.order,
        }
    }

    fn mul(&self, other: &Jet) -> Jet {
        let (a, b) = (self.value, other.value);
        let mut out = Jet::constant(self.n, self.order, a * b);
        if self.order >= 1 {
            for i in 0..self.n {
                out.gradient[i] = a * other.gradient[i] + b * self.gradient[i];
            }
        }
        if self.order >= 2 {
            for i in 0..self.n {
                for j in i..self.n {
                    let k = offset(self.n, i, j);
                    out.hessian[k] = a * other.hessian[k]
                        + b * self.hessian[k]
                        + self.gradient[i] * other.gradient[j]
                        + other.gradient[i] * self.gradient[j];
                }
            }
        }
        out
    }
}

fn offset(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows 0..i hold n, n-1, …, n-i+1 entries
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

fn domain_error(op: &'static str, value: f64, e: &Expr) -> ExprError {
    ExprError::Domain {
        op,
        value,
        subexpr: e.to_string(),
    }
}

/// Evaluates a state-free expression.
pub fn eval_scalar(e: &Expr, params: &Params) -> Result<f64, ExprError> {
    Ok(eval_node(e, &[], params, 0)?.value)
}

/// Full second-order jet at `state`.
pub fn eval_jet(e: &Expr, state: &[f64], params: &Params) -> Result<Jet, ExprError> {
    eval_jet_order(e, state, params, 2)
}

/// Jet truncated at `order` (0: value, 1: gradient, 2: Hessian).
pub fn eval_jet_order(e: &Expr, state: &[f64], params: &Params, order: u8) -> Result<Jet, ExprError> {
    eval_node(e, state, params, order)
}

fn eval_node(e: &Expr, state: &[f64], params: &Params, order: u8) -> Result<Jet, ExprError> {
    let n = state.len();
    Ok(match e {
        Expr::Const(c) => Jet::constant(n, order, *c),
        Expr::Var(i) => {
            if *i >= n {
                return Err(ExprError::VariableOutOfRange { index: i + 1, n });
            }
            Jet::variable(n, order, *i, state[*i])
        }
        Expr::Param(p) => Jet::constant(
            n,
            order,
            *params
                .get(p)
                .ok_or_else(|| ExprError::UnboundParameter(p.clone()))?,
        ),
        Expr::Neg(a) => eval_node(a, state, params, order)?.unary_neg(),
        Expr::Func(func, a) => {
            let x = eval_node(a, state, params, order)?;
            let v = x.value;
            match func {
                Func::Exp => {
                    let ev = v.exp();
                    x.unary(ev, ev, ev)
                }
                Func::Log => {
                    if !(v > 0.0) {
                        return Err(domain_error("log", v, a));
                    }
                    x.unary(v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                Func::Sqrt => {
                    if !(v > 0.0) {
                        return Err(domain_error("sqrt", v, a));
                    }
                    let r = v.sqrt();
                    x.unary(r, 0.5 / r, -0.25 / (r * v))
                }
            }
        }
        Expr::Pow(a, b) => {
            let c = eval_scalar(b, params)?;
            let x = eval_node(a, state, params, order)?;
            pow_const(&x, c, a)?
        }
        Expr::Binary(op, a, b) => {
            let x = eval_node(a, state, params, order)?;
            let y = eval_node(b, state, params, order)?;
            match op {
                BinOp::Add => x.linear(&y, 1.0, 1.0),
                BinOp::Sub => x.linear(&y, 1.0, -1.0),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => {
                    let w = y.value;
                    if w == 0.0 {
                        return Err(ExprError::Domain {
                            op: "division",
                            value: w,
                            subexpr: b.to_string(),
                        });
                    }
                    x.mul(&y.unary(1.0 / w, -1.0 / (w * w), 2.0 / (w * w * w)))
                }
            }
        }
    })
}

impl Jet {
    fn unary_neg(&self) -> Jet {
        self.unary(-self.value, -1.0, 0.0)
    }
}

fn pow_const(x: &Jet, c: f64, base: &Expr) -> Result<Jet, ExprError> {
    let v = x.value;
    if c == 0.0 {
        return Ok(Jet::constant(x.n, x.order, 1.0));
    }
    let integer = c.fract() == 0.0 && c.abs() < i32::MAX as f64;
    if integer {
        if v == 0.0 && c < 0.0 {
            return Err(domain_error("negative power", v, base));
        }
        let k = c as i32;
        let f0 = v.powi(k);
        let f1 = if k == 1 { 1.0 } else { c * v.powi(k - 1) };
        let f2 = match k {
            1 => 0.0,
            2 => 2.0,
            _ => c * (c - 1.0) * v.powi(k - 2),
        };
        return Ok(x.unary(f0, f1, f2));
    }
    if !(v > 0.0) {
        return Err(domain_error("fractional power", v, base));
    }
    Ok(x.unary(v.powf(c), c * v.powf(c - 1.0), c * (c - 1.0) * v.powf(c - 2.0)))
}
