//! Scalar expressions over named variables.
//!
//! Expressions are immutable trees shared through `Arc`, so cloning is cheap
//! and values can be handed across threads. Differentiation is exact and
//! closed: the derivative of an expression is another expression over the
//! same variable list. The only simplification performed is constant folding
//! plus elimination of additive zeros and multiplicative ones; derivative
//! trees are meant to be compared by evaluation, not by shape.

mod number;
mod parse;

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

pub use number::Number;
pub use parse::{ParseError, ParseErrorKind};

/// Built-in unary functions. Adding a function means adding a variant and
/// filling in the three `match` arms in this impl.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn lookup(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(math::sin(x)),
            Func::Cos => Some(math::cos(x)),
            Func::Exp => Some(math::exp(x)),
            Func::Log => (x > 0.0).then(|| math::ln(x)),
            Func::Sqrt => (x >= 0.0).then(|| math::sqrt(x)),
        }
    }

    /// Derivative of `self(arg)` with respect to its argument.
    fn outer_derivative(self, arg: &Arc<Node>) -> Arc<Node> {
        match self {
            Func::Sin => Node::call(Func::Cos, arg.clone()),
            Func::Cos => Node::neg(Node::call(Func::Sin, arg.clone())),
            Func::Exp => Node::call(Func::Exp, arg.clone()),
            Func::Log => Node::div(Node::num(Number::ONE), arg.clone()),
            Func::Sqrt => Node::div(
                Node::num(Number::ONE),
                Node::mul(Node::num(Number::int(2)), Node::call(Func::Sqrt, arg.clone())),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Num(Number),
    Var(usize),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, i32),
    Call(Func, Arc<Node>),
}

impl Node {
    fn num(n: Number) -> Arc<Node> {
        Arc::new(Node::Num(n))
    }

    fn as_num(&self) -> Option<Number> {
        match self {
            Node::Num(n) => Some(*n),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_num().is_some_and(Number::is_zero)
    }

    fn is_one(&self) -> bool {
        self.as_num().is_some_and(Number::is_one)
    }

    fn neg(a: Arc<Node>) -> Arc<Node> {
        match &*a {
            Node::Num(n) => Node::num(-*n),
            Node::Neg(inner) => inner.clone(),
            _ => Arc::new(Node::Neg(a)),
        }
    }

    fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            return Node::num(x + y);
        }
        Arc::new(Node::Add(a, b))
    }

    fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Node::neg(b);
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            return Node::num(x - y);
        }
        Arc::new(Node::Sub(a, b))
    }

    fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if a.is_zero() || b.is_zero() {
            return Node::num(Number::ZERO);
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            return Node::num(x * y);
        }
        Arc::new(Node::Mul(a, b))
    }

    fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        if b.is_one() {
            return a;
        }
        if a.is_zero() && !b.is_zero() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if let Some(q) = x.checked_div(y) {
                return Node::num(q);
            }
        }
        Arc::new(Node::Div(a, b))
    }

    fn pow(a: Arc<Node>, e: i32) -> Arc<Node> {
        if e == 0 {
            return Node::num(Number::ONE);
        }
        if e == 1 {
            return a;
        }
        if let Some(q) = a.as_num().and_then(|x| x.powi(e)) {
            return Node::num(q);
        }
        Arc::new(Node::Pow(a, e))
    }

    fn call(func: Func, a: Arc<Node>) -> Arc<Node> {
        if let Some(value) = a.as_num().and_then(|x| func.apply(x.to_f64())) {
            // Keep exact zeros and ones exact (sin 0, exp 0, log 1, ...).
            let folded = if value == 0.0 {
                Number::ZERO
            } else if value == 1.0 {
                Number::ONE
            } else {
                Number::Float(value)
            };
            return Node::num(folded);
        }
        Arc::new(Node::Call(func, a))
    }

    fn derivative(node: &Arc<Node>, var: usize) -> Arc<Node> {
        match &**node {
            Node::Num(_) => Node::num(Number::ZERO),
            Node::Var(i) => Node::num(if *i == var { Number::ONE } else { Number::ZERO }),
            Node::Neg(a) => Node::neg(Node::derivative(a, var)),
            Node::Add(a, b) => Node::add(Node::derivative(a, var), Node::derivative(b, var)),
            Node::Sub(a, b) => Node::sub(Node::derivative(a, var), Node::derivative(b, var)),
            Node::Mul(a, b) => Node::add(
                Node::mul(Node::derivative(a, var), b.clone()),
                Node::mul(a.clone(), Node::derivative(b, var)),
            ),
            Node::Div(a, b) => {
                let da = Node::derivative(a, var);
                let db = Node::derivative(b, var);
                if db.is_zero() {
                    return Node::div(da, b.clone());
                }
                Node::div(Node::sub(Node::mul(da, b.clone()), Node::mul(a.clone(), db)), Node::pow(b.clone(), 2))
            }
            Node::Pow(a, e) => Node::mul(
                Node::mul(Node::num(Number::int(i64::from(*e))), Node::pow(a.clone(), e - 1)),
                Node::derivative(a, var),
            ),
            Node::Call(func, a) => Node::mul(func.outer_derivative(a), Node::derivative(a, var)),
        }
    }

    fn eval(&self, values: &[f64]) -> Result<f64, EvalFault<'_>> {
        Ok(match self {
            Node::Num(n) => n.to_f64(),
            Node::Var(i) => values[*i],
            Node::Neg(a) => -a.eval(values)?,
            Node::Add(a, b) => a.eval(values)? + b.eval(values)?,
            Node::Sub(a, b) => a.eval(values)? - b.eval(values)?,
            Node::Mul(a, b) => a.eval(values)? * b.eval(values)?,
            Node::Div(a, b) => {
                let num = a.eval(values)?;
                let den = b.eval(values)?;
                if den == 0.0 {
                    return Err(EvalFault { node: self, kind: DomainErrorKind::DivisionByZero, arg: den });
                }
                num / den
            }
            Node::Pow(a, e) => {
                let base = a.eval(values)?;
                if base == 0.0 && *e < 0 {
                    return Err(EvalFault { node: self, kind: DomainErrorKind::DivisionByZero, arg: base });
                }
                math::powi(base, *e)
            }
            Node::Call(func, a) => {
                let arg = a.eval(values)?;
                match func.apply(arg) {
                    Some(v) => v,
                    None => {
                        let kind = match func {
                            Func::Log => DomainErrorKind::LogNonPositive,
                            _ => DomainErrorKind::SqrtNegative,
                        };
                        return Err(EvalFault { node: self, kind, arg });
                    }
                }
            }
        })
    }

    /// Binding strength for display: sums 1, products 2, powers 3, atoms 4.
    /// Negations and negative literals count as sums.
    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) | Node::Neg(_) => 1,
            Node::Num(Number::Rational { num, den: 1 }) if *num < 0 => 1,
            Node::Num(Number::Float(x)) if *x < 0.0 => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Pow(..) => 3,
            _ => 4,
        }
    }

    fn write(&self, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let paren = |n: &Node, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            match n {
                Node::Num(Number::Rational { den: 1, num }) if *num >= 0 => n.write(vars, f),
                Node::Num(Number::Float(x)) if *x >= 0.0 => n.write(vars, f),
                Node::Var(_) | Node::Call(..) => n.write(vars, f),
                _ => {
                    f.write_str("(")?;
                    n.write(vars, f)?;
                    f.write_str(")")
                }
            }
        };
        match self {
            Node::Num(n) => write!(f, "{n}"),
            Node::Var(i) => f.write_str(&vars[*i]),
            Node::Neg(a) => {
                f.write_str("-")?;
                paren(a, f)
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let op = match self {
                    Node::Add(..) => " + ",
                    Node::Sub(..) => " - ",
                    Node::Mul(..) => "*",
                    _ => "/",
                };
                let own = self.precedence();
                let loose_right = matches!(self, Node::Sub(..) | Node::Div(..));
                let child = |n: &Node, right: bool, f: &mut fmt::Formatter<'_>| -> fmt::Result {
                    let p = n.precedence();
                    if p < own || (right && p == own && loose_right) || (own > 1 && p == 1) {
                        f.write_str("(")?;
                        n.write(vars, f)?;
                        f.write_str(")")
                    } else {
                        n.write(vars, f)
                    }
                };
                child(a, false, f)?;
                f.write_str(op)?;
                child(b, true, f)
            }
            Node::Pow(a, e) => {
                paren(a, f)?;
                if *e < 0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(vars, f)?;
                f.write_str(")")
            }
        }
    }
}

struct EvalFault<'a> {
    node: &'a Node,
    kind: DomainErrorKind,
    arg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogNonPositive,
    SqrtNegative,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogNonPositive => "log of a non-positive value",
            DomainErrorKind::SqrtNegative => "sqrt of a negative value",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    /// `node` is the rendered sub-expression whose evaluation failed.
    #[error("{kind} in `{node}` (argument {arg})")]
    Domain { kind: DomainErrorKind, node: String, arg: f64 },
    #[error("no value assigned to variable `{0}`")]
    MissingVariable(String),
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("`{0}` is not a variable of this expression")]
pub struct UnknownVariable(pub String);

/// An immutable expression tree with its variable list.
#[derive(Clone)]
pub struct ScalarExpr {
    vars: Arc<[String]>,
    root: Arc<Node>,
}

impl ScalarExpr {
    /// Parses `source` over the given variable names.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Self, ParseError> {
        let vars: Arc<[String]> = variables.iter().map(|v| v.to_string()).collect();
        let root = parse::Parser::new(source, &vars).parse()?;
        Ok(ScalarExpr { vars, root })
    }

    pub fn constant(value: Number, variables: &[&str]) -> Self {
        ScalarExpr { vars: variables.iter().map(|v| v.to_string()).collect(), root: Node::num(value) }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// The literal value if the tree folded down to a constant.
    pub fn as_constant(&self) -> Option<f64> {
        self.root.as_num().map(Number::to_f64)
    }

    pub fn differentiate(&self, var: &str) -> Result<Self, UnknownVariable> {
        let idx = self.var_index(var).ok_or_else(|| UnknownVariable(var.to_string()))?;
        Ok(self.derivative_at(idx))
    }

    /// Derivative with respect to the variable at position `idx`.
    pub fn derivative_at(&self, idx: usize) -> Self {
        ScalarExpr { vars: self.vars.clone(), root: Node::derivative(&self.root, idx) }
    }

    /// Evaluates with values given in variable-list order.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        if values.len() != self.vars.len() {
            return Err(EvalError::Arity { expected: self.vars.len(), got: values.len() });
        }
        self.root.eval(values).map_err(|fault| EvalError::Domain {
            kind: fault.kind,
            node: DisplayNode { node: fault.node, vars: &self.vars }.to_string(),
            arg: fault.arg,
        })
    }

    /// Evaluates with values looked up by name.
    pub fn evaluate(&self, assignment: &[(&str, f64)]) -> Result<f64, EvalError> {
        let values = self
            .vars
            .iter()
            .map(|name| {
                assignment
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| EvalError::MissingVariable(name.clone()))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        self.eval(&values)
    }

    /// Central difference `(e(p + h) - e(p - h)) / 2h` along `var`.
    pub fn finite_difference(&self, var: &str, point: &[f64], step: f64) -> Result<f64, FiniteDifferenceError> {
        let idx = self.var_index(var).ok_or_else(|| UnknownVariable(var.to_string()))?;
        if !(step > 0.0) {
            return Err(FiniteDifferenceError::Step(step));
        }
        let mut p = point.to_vec();
        p[idx] = point[idx] + step;
        let hi = self.eval(&p)?;
        p[idx] = point[idx] - step;
        let lo = self.eval(&p)?;
        Ok((hi - lo) / (2.0 * step))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FiniteDifferenceError {
    #[error("finite-difference step must be positive, got {0}")]
    Step(f64),
    #[error(transparent)]
    Unknown(#[from] UnknownVariable),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

struct DisplayNode<'a> {
    node: &'a Node,
    vars: &'a [String],
}

impl fmt::Display for DisplayNode<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.write(self.vars, f)
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.vars, f)
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({self} over {:?})", &*self.vars)
    }
}
