//! Forward propagation of truncated second-order Taylor coefficients.
//!
//! Every node carries `(value, gradient, hessian)`. Only the upper triangle
//! of each hessian is computed; the lower one is mirrored, so mixed partials
//! agree bit for bit.

use nalgebra::DMatrix;
use thiserror::Error;

use super::{BinOp, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("point has {found} coordinates, chart has {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Highest derivative order to propagate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value = 0,
    First = 1,
    Second = 2,
}

impl TryFrom<u8> for Order {
    type Error = u8;

    fn try_from(k: u8) -> Result<Self, u8> {
        match k {
            0 => Ok(Order::Value),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            other => Err(other),
        }
    }
}

/// A scalar with its exact gradient and hessian at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; n],
            hess: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }
}

/// Working jet. `grad` is empty below first order, `hess` (upper triangle,
/// row-major packed) is empty below second order.
#[derive(Clone, Debug)]
struct J {
    v: f64,
    g: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Ctx {
    n: usize,
    order: Order,
}

impl Ctx {
    fn packed(&self) -> usize {
        if self.order >= Order::Second {
            self.n * (self.n + 1) / 2
        } else {
            0
        }
    }

    fn grad_len(&self) -> usize {
        if self.order >= Order::First {
            self.n
        } else {
            0
        }
    }

    fn constant(&self, v: f64) -> J {
        J {
            v,
            g: vec![0.0; self.grad_len()],
            h: vec![0.0; self.packed()],
        }
    }

    fn variable(&self, i: usize, v: f64) -> J {
        let mut j = self.constant(v);
        if let Some(slot) = j.g.get_mut(i) {
            *slot = 1.0;
        }
        j
    }

    fn add(&self, a: &J, b: &J, sign: f64) -> J {
        J {
            v: a.v + sign * b.v,
            g: a.g.iter().zip(&b.g).map(|(x, y)| x + sign * y).collect(),
            h: a.h.iter().zip(&b.h).map(|(x, y)| x + sign * y).collect(),
        }
    }

    fn scale(&self, a: &J, s: f64) -> J {
        J {
            v: a.v * s,
            g: a.g.iter().map(|x| x * s).collect(),
            h: a.h.iter().map(|x| x * s).collect(),
        }
    }

    fn mul(&self, a: &J, b: &J) -> J {
        let g =
            a.g.iter()
                .zip(&b.g)
                .map(|(x, y)| x * b.v + a.v * y)
                .collect();
        let mut h = Vec::with_capacity(a.h.len());
        if !a.h.is_empty() {
            let mut k = 0;
            for i in 0..self.n {
                for j in i..self.n {
                    h.push(a.h[k] * b.v + a.v * b.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i]);
                    k += 1;
                }
            }
        }
        J { v: a.v * b.v, g, h }
    }

    /// φ(u) given φ(u₀), φ'(u₀), φ''(u₀).
    fn chain(&self, u: &J, f0: f64, f1: f64, f2: f64) -> J {
        let g = u.g.iter().map(|x| f1 * x).collect();
        let mut h = Vec::with_capacity(u.h.len());
        if !u.h.is_empty() {
            let mut k = 0;
            for i in 0..self.n {
                for j in i..self.n {
                    h.push(f1 * u.h[k] + f2 * u.g[i] * u.g[j]);
                    k += 1;
                }
            }
        }
        J { v: f0, g, h }
    }

    fn powi(&self, base: &J, k: i64) -> J {
        let mut acc = self.constant(1.0);
        let mut sq = base.clone();
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.mul(&sq, &sq);
            }
        }
        acc
    }

    fn recip(&self, u: &J) -> J {
        let r = 1.0 / u.v;
        self.chain(u, r, -r * r, 2.0 * r * r * r)
    }

    fn finite(&self, j: &J) -> bool {
        j.v.is_finite() && j.g.iter().chain(&j.h).all(|x| x.is_finite())
    }
}

struct Evaluator<'a> {
    ctx: Ctx,
    point: &'a [f64],
    names: &'a [String],
}

impl Evaluator<'_> {
    fn domain(&self, node: &Node, reason: impl Into<String>) -> EvalError {
        struct Show<'b>(&'b Node, &'b [String]);
        impl std::fmt::Display for Show<'_> {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                self.0.write(self.1, f)
            }
        }
        EvalError::Domain {
            subexpr: Show(node, self.names).to_string(),
            reason: reason.into(),
        }
    }

    fn eval(&self, node: &Node) -> Result<J, EvalError> {
        let c = &self.ctx;
        let out = match node {
            Node::Num(x) => c.constant(*x),
            Node::Const(k) => c.constant(k.value()),
            Node::Coord(i) => c.variable(*i, self.point[*i]),
            Node::Neg(inner) => c.scale(&self.eval(inner)?, -1.0),
            Node::Binary(op, l, r) => {
                let a = self.eval(l)?;
                match op {
                    BinOp::Add => c.add(&a, &self.eval(r)?, 1.0),
                    BinOp::Sub => c.add(&a, &self.eval(r)?, -1.0),
                    BinOp::Mul => c.mul(&a, &self.eval(r)?),
                    BinOp::Div => {
                        let b = self.eval(r)?;
                        if b.v == 0.0 {
                            return Err(self.domain(node, "division by zero"));
                        }
                        c.mul(&a, &c.recip(&b))
                    }
                    BinOp::Pow => self.pow(node, a, r)?,
                }
            }
            Node::Call(func, args) => {
                let u = self.eval(&args[0])?;
                self.call(node, *func, u, args)?
            }
        };
        if !c.finite(&out) {
            return Err(self.domain(node, "non-finite result"));
        }
        Ok(out)
    }

    fn pow(&self, node: &Node, base: J, exponent: &Node) -> Result<J, EvalError> {
        let c = &self.ctx;
        if let Some(k) = exponent.constant_value() {
            if k.fract() == 0.0 && k.abs() <= i64::MAX as f64 {
                let k = k as i64;
                if k < 0 && base.v == 0.0 {
                    return Err(self.domain(node, "zero raised to a negative power"));
                }
                let p = c.powi(&base, k);
                return Ok(if k < 0 { c.recip(&p) } else { p });
            }
        }
        if base.v <= 0.0 {
            return Err(self.domain(node, "non-integer power of a non-positive base"));
        }
        let b = self.eval(exponent)?;
        let ln_a = c.chain(&base, base.v.ln(), 1.0 / base.v, -1.0 / (base.v * base.v));
        let prod = c.mul(&b, &ln_a);
        let e = prod.v.exp();
        Ok(c.chain(&prod, e, e, e))
    }

    fn call(&self, node: &Node, func: Func, u: J, args: &[Node]) -> Result<J, EvalError> {
        let c = &self.ctx;
        let x = u.v;
        let needs_derivs = c.order > Order::Value;
        Ok(match func {
            Func::Sin => c.chain(&u, x.sin(), x.cos(), -x.sin()),
            Func::Cos => c.chain(&u, x.cos(), -x.sin(), -x.cos()),
            Func::Tan => {
                if x.cos() == 0.0 {
                    return Err(self.domain(node, "tan at a pole"));
                }
                let t = x.tan();
                let d = 1.0 + t * t;
                c.chain(&u, t, d, 2.0 * t * d)
            }
            Func::Exp => {
                let e = x.exp();
                c.chain(&u, e, e, e)
            }
            Func::Ln => {
                if x <= 0.0 {
                    return Err(self.domain(node, format!("logarithm of non-positive value {x}")));
                }
                c.chain(&u, x.ln(), 1.0 / x, -1.0 / (x * x))
            }
            Func::Sqrt => {
                if x < 0.0 || (x == 0.0 && needs_derivs) {
                    return Err(self.domain(node, format!("square root of {x}")));
                }
                let s = x.sqrt();
                if needs_derivs {
                    c.chain(&u, s, 0.5 / s, -0.25 / (s * s * s))
                } else {
                    c.constant(s)
                }
            }
            Func::Sinh => c.chain(&u, x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => c.chain(&u, x.cosh(), x.sinh(), x.cosh()),
            Func::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                c.chain(&u, t, d, -2.0 * t * d)
            }
            Func::Abs => {
                if x == 0.0 && needs_derivs {
                    return Err(self.domain(node, "abs is not differentiable at 0"));
                }
                c.chain(&u, x.abs(), x.signum(), 0.0)
            }
            Func::Pow => self.pow(node, u, &args[1])?,
        })
    }
}

pub(super) fn evaluate(
    root: &Node,
    names: &[String],
    point: &[f64],
    order: Order,
) -> Result<Jet2, EvalError> {
    let n = point.len();
    let ev = Evaluator {
        ctx: Ctx { n, order },
        point,
        names,
    };
    let j = ev.eval(root)?;
    let mut out = Jet2::constant(j.v, n);
    if order >= Order::First {
        out.grad.copy_from_slice(&j.g);
    }
    if order >= Order::Second {
        let mut k = 0;
        for a in 0..n {
            for b in a..n {
                out.hess[(a, b)] = j.h[k];
                out.hess[(b, a)] = j.h[k];
                k += 1;
            }
        }
    }
    Ok(out)
}

/// Evaluation of a coordinate-free subtree.
pub(super) fn eval_node(node: &Node, point: &[f64], order: Order) -> Result<Jet2, EvalError> {
    evaluate(node, &[], point, order)
}
