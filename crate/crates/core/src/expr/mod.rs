//! Coordinate expressions: parsing, printing and jet evaluation.
//!
//! Expressions are smooth functions of the chart coordinates built from
//! numeric literals, `+ - * / ^`, unary minus, the elementary functions
//! `sin cos tan exp ln sqrt sinh cosh tanh abs pow` and the constants
//! `pi` and `e`. They are immutable once parsed.

mod jet;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use jet::{EvalError, Jet2, Order};
pub use parse::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Pow,
}

impl Func {
    pub(crate) const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Abs,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Syntax tree node. Literals produced by the parser are never negative;
/// a leading minus is always a [`Node::Neg`].
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Coord(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn collect_coords(&self, out: &mut BTreeSet<usize>) {
        match self {
            Node::Num(_) | Node::Const(_) => {}
            Node::Coord(i) => {
                out.insert(*i);
            }
            Node::Neg(inner) => inner.collect_coords(out),
            Node::Binary(_, l, r) => {
                l.collect_coords(out);
                r.collect_coords(out);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.collect_coords(out)),
        }
    }

    /// Value of a coordinate-free subtree.
    pub(crate) fn constant_value(&self) -> Option<f64> {
        match self {
            Node::Num(x) => Some(*x),
            Node::Const(c) => Some(c.value()),
            Node::Coord(_) => None,
            _ => {
                let mut coords = BTreeSet::new();
                self.collect_coords(&mut coords);
                if !coords.is_empty() {
                    return None;
                }
                jet::eval_node(self, &[], Order::Value)
                    .ok()
                    .map(|j| j.value)
            }
        }
    }

    pub(crate) fn write(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(x) => write!(f, "{x:?}"),
            Node::Const(c) => f.write_str(c.name()),
            Node::Coord(i) => f.write_str(&names[*i]),
            Node::Neg(inner) => {
                f.write_str("-")?;
                inner.write_operand(names, f)
            }
            Node::Binary(op, l, r) => {
                l.write_operand(names, f)?;
                write!(f, " {} ", op.symbol())?;
                r.write_operand(names, f)
            }
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    a.write(names, f)?;
                }
                f.write_str(")")
            }
        }
    }

    fn write_operand(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Neg(_) | Node::Binary(..) => {
                f.write_str("(")?;
                self.write(names, f)?;
                f.write_str(")")
            }
            _ => self.write(names, f),
        }
    }
}

/// A parsed coordinate expression bound to a chart.
#[derive(Clone, Debug)]
pub struct Expression {
    root: Node,
    coords: Vec<String>,
    free_coords: BTreeSet<usize>,
}

impl Expression {
    pub fn parse<S: AsRef<str>>(source: &str, coords: &[S]) -> Result<Self, ParseError> {
        let names: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        let root = parse::parse(source, &names)?;
        Ok(Self::from_node(root, names))
    }

    pub fn from_node(root: Node, coords: Vec<String>) -> Self {
        let mut free_coords = BTreeSet::new();
        root.collect_coords(&mut free_coords);
        Self {
            root,
            coords,
            free_coords,
        }
    }

    pub fn zero(coords: &[String]) -> Self {
        Self::from_node(Node::Num(0.0), coords.to_vec())
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn free_coords(&self) -> &BTreeSet<usize> {
        &self.free_coords
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Num(x) if x == 0.0)
    }

    /// Structural equality of the syntax trees.
    pub fn same_tree(&self, other: &Expression) -> bool {
        self.root == other.root
    }

    pub fn evaluate_jet(&self, point: &[f64], order: Order) -> Result<Jet2, EvalError> {
        if point.len() != self.dim() {
            return Err(EvalError::Dimension {
                expected: self.dim(),
                found: point.len(),
            });
        }
        jet::evaluate(&self.root, &self.coords, point, order)
    }

    pub fn value_at(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.evaluate_jet(point, Order::Value).map(|j| j.value)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.coords, f)
    }
}
