//! The Walker metric `ε dx² + f(x, y) dy² + 2 dt dy`, its canonical
//! pseudo-orthonormal frame and the two tangent-vector representations.
//!
//! Coordinates are always ordered `(t, x, y)`. The frame is
//!
//! ```text
//! e1 = ∂x
//! e2 = (2 - f)/(2√2) ∂t + 1/√2 ∂y
//! e3 = (2 + f)/(2√2) ∂t - 1/√2 ∂y
//! ```
//!
//! with `⟨e1,e1⟩ = ε`, `⟨e2,e2⟩ = 1`, `⟨e3,e3⟩ = -1`.

use alloc::string::String;

use crate::expr::{EvalError, ParseError, ScalarExpr};
use crate::math::{FRAC_1_SQRT_2, SQRT_2};

pub type Mat3 = [[f64; 3]; 3];

/// A sign `±1`, used for ε, δ and η.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// A point of the ambient chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Point { t, x, y }
    }

    pub fn coords(self) -> [f64; 3] {
        [self.t, self.x, self.y]
    }

    pub fn from_coords(c: [f64; 3]) -> Self {
        Point { t: c[0], x: c[1], y: c[2] }
    }

    /// The point moved by `h` along coordinate axis `axis` (0 = t, 1 = x, 2 = y).
    pub fn shifted(self, axis: usize, h: f64) -> Self {
        let mut c = self.coords();
        c[axis] += h;
        Point::from_coords(c)
    }
}

/// Components `(a_t, a_x, a_y)` on the coordinate basis `(∂t, ∂x, ∂y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordVector {
    pub comps: [f64; 3],
    pub at: Point,
}

/// Components `(a1, a2, a3)` on the frame `(e1, e2, e3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVector {
    pub comps: [f64; 3],
    pub at: Point,
}

impl CoordVector {
    pub fn new(comps: [f64; 3], at: Point) -> Self {
        CoordVector { comps, at }
    }
}

impl FrameVector {
    pub fn new(comps: [f64; 3], at: Point) -> Self {
        FrameVector { comps, at }
    }
}

/// Either representation, for operations that accept both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TangentVector {
    Coord(CoordVector),
    Frame(FrameVector),
}

impl TangentVector {
    pub fn at(&self) -> Point {
        match self {
            TangentVector::Coord(v) => v.at,
            TangentVector::Frame(v) => v.at,
        }
    }
}

impl From<CoordVector> for TangentVector {
    fn from(v: CoordVector) -> Self {
        TangentVector::Coord(v)
    }
}

impl From<FrameVector> for TangentVector {
    fn from(v: FrameVector) -> Self {
        TangentVector::Frame(v)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric function must be an expression over (x, y), got variables {0:?}")]
    Variables(alloc::vec::Vec<String>),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VectorError {
    #[error("vectors live at different base points {0:?} and {1:?}")]
    BasePointMismatch(Point, Point),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Values of `f` and the partial derivatives used by the geometry at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jets {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fxxx: f64,
    pub fxxy: f64,
}

#[derive(Clone, Debug)]
struct Partials {
    fx: ScalarExpr,
    fy: ScalarExpr,
    fxx: ScalarExpr,
    fxy: ScalarExpr,
    fxxx: ScalarExpr,
    fxxy: ScalarExpr,
}

/// The metric `g_f^ε` with cached symbolic partials of `f`.
#[derive(Clone, Debug)]
pub struct WalkerMetric {
    epsilon: Sign,
    f: ScalarExpr,
    partials: Partials,
}

/// Frame signature `(ε, 1, -1)`.
pub fn frame_signs(epsilon: Sign) -> [f64; 3] {
    [epsilon.value(), 1.0, -1.0]
}

/// Coordinate components of `e1, e2, e3` (rows) given `f` at the base point.
pub fn frame_coords(f: f64) -> Mat3 {
    let k = 1.0 / (2.0 * SQRT_2);
    [[0.0, 1.0, 0.0], [(2.0 - f) * k, 0.0, FRAC_1_SQRT_2], [(2.0 + f) * k, 0.0, -FRAC_1_SQRT_2]]
}

/// Frame components to coordinate components, given `f` at the base point.
pub fn frame_to_coord_comps(a: [f64; 3], f: f64) -> [f64; 3] {
    let e = frame_coords(f);
    core::array::from_fn(|k| a[0] * e[0][k] + a[1] * e[1][k] + a[2] * e[2][k])
}

/// Coordinate components to frame components, given `f` at the base point.
///
/// Inverts the frame display: `∂t = (e2 + e3)/√2` and
/// `∂y = (e2 - e3)/√2 + f (e2 + e3)/(2√2)`.
pub fn coord_to_frame_comps(a: [f64; 3], f: f64) -> [f64; 3] {
    let [at, ax, ay] = a;
    [ax, (at + ay * (1.0 + 0.5 * f)) * FRAC_1_SQRT_2, (at + ay * (0.5 * f - 1.0)) * FRAC_1_SQRT_2]
}

/// Coordinate metric matrix in `(t, x, y)` order.
pub fn metric_matrix(epsilon: Sign, f: f64) -> Mat3 {
    [[0.0, 0.0, 1.0], [0.0, epsilon.value(), 0.0], [1.0, 0.0, f]]
}

/// Closed-form inverse of [`metric_matrix`].
pub fn inverse_metric_matrix(epsilon: Sign, f: f64) -> Mat3 {
    [[-f, 0.0, 1.0], [0.0, epsilon.value(), 0.0], [1.0, 0.0, 0.0]]
}

/// `aᵀ G b` for a coordinate metric matrix.
pub fn contract(g: &Mat3, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i] * g[i][j] * b[j];
        }
    }
    s
}

/// Frame inner product `ε a1 b1 + a2 b2 - a3 b3`.
pub fn frame_inner(epsilon: Sign, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    epsilon.value() * a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

impl WalkerMetric {
    /// `f` must be an expression over exactly `(x, y)`, in that order.
    pub fn new(epsilon: Sign, f: ScalarExpr) -> Result<Self, MetricError> {
        if f.variables() != ["x", "y"] {
            return Err(MetricError::Variables(f.variables().to_vec()));
        }
        let fx = f.derivative_at(0);
        let fy = f.derivative_at(1);
        let fxx = fx.derivative_at(0);
        let fxy = fx.derivative_at(1);
        let fxxx = fxx.derivative_at(0);
        let fxxy = fxx.derivative_at(1);
        Ok(WalkerMetric { epsilon, f, partials: Partials { fx, fy, fxx, fxy, fxxx, fxxy } })
    }

    pub fn parse(epsilon: Sign, source: &str) -> Result<Self, MetricError> {
        WalkerMetric::new(epsilon, ScalarExpr::parse(source, &["x", "y"])?)
    }

    pub fn epsilon(&self) -> Sign {
        self.epsilon
    }

    pub fn f(&self) -> &ScalarExpr {
        &self.f
    }

    pub fn f_at(&self, p: Point) -> Result<f64, EvalError> {
        self.f.eval(&[p.x, p.y])
    }

    pub fn jets(&self, p: Point) -> Result<Jets, EvalError> {
        let xy = [p.x, p.y];
        let d = &self.partials;
        Ok(Jets {
            f: self.f.eval(&xy)?,
            fx: d.fx.eval(&xy)?,
            fy: d.fy.eval(&xy)?,
            fxx: d.fxx.eval(&xy)?,
            fxy: d.fxy.eval(&xy)?,
            fxxx: d.fxxx.eval(&xy)?,
            fxxy: d.fxxy.eval(&xy)?,
        })
    }

    pub fn fxx_at(&self, p: Point) -> Result<f64, EvalError> {
        self.partials.fxx.eval(&[p.x, p.y])
    }

    pub fn fxxx_at(&self, p: Point) -> Result<f64, EvalError> {
        self.partials.fxxx.eval(&[p.x, p.y])
    }

    /// `(f_x, f_y)` at `p`.
    pub fn gradient_f(&self, p: Point) -> Result<(f64, f64), EvalError> {
        let xy = [p.x, p.y];
        Ok((self.partials.fx.eval(&xy)?, self.partials.fy.eval(&xy)?))
    }

    pub fn metric_components(&self, p: Point) -> Result<Mat3, EvalError> {
        Ok(metric_matrix(self.epsilon, self.f_at(p)?))
    }

    pub fn inverse_metric(&self, p: Point) -> Result<Mat3, EvalError> {
        Ok(inverse_metric_matrix(self.epsilon, self.f_at(p)?))
    }

    pub fn frame_at(&self, p: Point) -> Result<[CoordVector; 3], EvalError> {
        let e = frame_coords(self.f_at(p)?);
        Ok(core::array::from_fn(|i| CoordVector::new(e[i], p)))
    }

    pub fn frame_to_coord(&self, v: &FrameVector) -> Result<CoordVector, EvalError> {
        Ok(CoordVector::new(frame_to_coord_comps(v.comps, self.f_at(v.at)?), v.at))
    }

    pub fn coord_to_frame(&self, v: &CoordVector) -> Result<FrameVector, EvalError> {
        Ok(FrameVector::new(coord_to_frame_comps(v.comps, self.f_at(v.at)?), v.at))
    }

    /// Inner product of two tangent vectors at the same base point.
    ///
    /// Two frame vectors use the frame signature; anything else is contracted
    /// with the coordinate metric.
    pub fn inner(&self, a: impl Into<TangentVector>, b: impl Into<TangentVector>) -> Result<f64, VectorError> {
        let (a, b) = (a.into(), b.into());
        if a.at() != b.at() {
            return Err(VectorError::BasePointMismatch(a.at(), b.at()));
        }
        if let (TangentVector::Frame(a), TangentVector::Frame(b)) = (a, b) {
            return Ok(frame_inner(self.epsilon, &a.comps, &b.comps));
        }
        let f = self.f_at(a.at())?;
        let coords = |v: TangentVector| match v {
            TangentVector::Coord(c) => c.comps,
            TangentVector::Frame(fr) => frame_to_coord_comps(fr.comps, f),
        };
        Ok(contract(&metric_matrix(self.epsilon, f), &coords(a), &coords(b)))
    }
}
