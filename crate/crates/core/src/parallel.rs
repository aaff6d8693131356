//! Parallel surfaces `ι(u, v) = (u, x(v), v)` whose profile solves
//! `x'' - (ε/2) f_x(x, v) = C`.
//!
//! The profile is integrated with fixed-step RK4 and interpolated by cubic
//! Hermite segments; the surface code then sees an ordinary embedding.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::expr::{EvalError, ScalarExpr};
use crate::grid::{Param, ParamRect};
use crate::math::{ceil, exp, floor, FRAC_1_SQRT_2, SQRT_2};
use crate::surface::{
    normal, scan_point, summarize, Embedding, EmbeddingJets, ScanSummary, SurfaceError, SurfacePatch, UmbilicRecord,
};
use crate::walker::{Point, Sign, WalkerMetric};

/// Accepted integration error per unit length of the `v` interval.
pub const ERROR_PER_UNIT_LENGTH: f64 = 1e-8;
/// How far past the solution grid the interpolant may be evaluated.
pub const EXTRAPOLATION_SLACK: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParallelError {
    #[error("step must be positive and finite, got {0}")]
    Step(f64),
    #[error("empty v range [{0}, {1}]")]
    EmptyRange(f64, f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("trajectory left the domain of f near v = {0}")]
    NonFinite(f64),
    #[error("error estimate {estimate:e} exceeds {bound:e}; shrink the step")]
    ErrorBound { estimate: f64, bound: f64 },
    #[error("v = {0} is outside the solution range")]
    OutsideSolution(f64),
    #[error("perturbation must be an expression in v alone")]
    PerturbationVariables,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Sampled profile `x(v)` with its derivative on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
    pub step: f64,
    pub order: u32,
    /// Richardson estimate of the global error in `x`, max over nodes.
    pub error_estimate: f64,
    pub epsilon: Sign,
    pub eta: Sign,
    pub c: f64,
}

impl OdeSolution {
    pub fn range(&self) -> (f64, f64) {
        (self.v[0], self.v[self.v.len() - 1])
    }

    /// `v2 = -η ε x' / √2` at each node.
    pub fn v2(&self) -> Vec<f64> {
        self.dx.iter().map(|d| self.v2_of(*d)).collect()
    }

    fn v2_of(&self, dx: f64) -> f64 {
        -self.eta.value() * self.epsilon.value() * dx * FRAC_1_SQRT_2
    }

    /// Hermite interpolant `(x, x', x'')` at `v`.
    pub fn interpolate(&self, v: f64) -> Result<[f64; 3], ParallelError> {
        let (lo, hi) = self.range();
        if !(v >= lo - EXTRAPOLATION_SLACK && v <= hi + EXTRAPOLATION_SLACK) {
            return Err(ParallelError::OutsideSolution(v));
        }
        let h = self.step;
        let n = self.v.len() - 1;
        let i = (floor((v - lo) / h).max(0.0) as usize).min(n - 1);
        let s = (v - self.v[i]) / h;
        let (x0, x1, m0, m1) = (self.x[i], self.x[i + 1], self.dx[i] * h, self.dx[i + 1] * h);
        let (s2, s3) = (s * s, s * s * s);
        let x =
            (2.0 * s3 - 3.0 * s2 + 1.0) * x0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * x1 + (s3 - s2) * m1;
        let dx = ((6.0 * s2 - 6.0 * s) * x0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * x1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        let ddx =
            ((12.0 * s - 6.0) * x0 + (6.0 * s - 4.0) * m0 + (-12.0 * s + 6.0) * x1 + (6.0 * s - 2.0) * m1) / (h * h);
        Ok([x, dx, ddx])
    }

    /// Largest `|x'' - (ε/2) f_x - C|` of the interpolant at segment midpoints.
    pub fn ode_residual(&self, m: &WalkerMetric) -> Result<f64, ParallelError> {
        let mut worst: f64 = 0.0;
        for w in self.v.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let [x, _, ddx] = self.interpolate(mid)?;
            let (fx, _) = m.gradient_f(Point::new(0.0, x, mid))?;
            worst = worst.max((ddx - 0.5 * self.epsilon.value() * fx - self.c).abs());
        }
        Ok(worst)
    }
}

fn rk4_run(
    m: &WalkerMetric,
    c: f64,
    start: (f64, f64),
    lo: f64,
    h: f64,
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>), ParallelError> {
    let half_eps = 0.5 * m.epsilon().value();
    let accel = |v: f64, x: f64| -> Result<f64, ParallelError> {
        let (fx, _) = m.gradient_f(Point::new(0.0, x, v))?;
        let a = c + half_eps * fx;
        if a.is_finite() {
            Ok(a)
        } else {
            Err(ParallelError::NonFinite(v))
        }
    };
    let (mut x, mut dx) = start;
    let mut xs = Vec::with_capacity(steps + 1);
    let mut dxs = Vec::with_capacity(steps + 1);
    xs.push(x);
    dxs.push(dx);
    for i in 0..steps {
        let v = lo + h * i as f64;
        let k1 = (dx, accel(v, x)?);
        let k2 = (dx + 0.5 * h * k1.1, accel(v + 0.5 * h, x + 0.5 * h * k1.0)?);
        let k3 = (dx + 0.5 * h * k2.1, accel(v + 0.5 * h, x + 0.5 * h * k2.0)?);
        let k4 = (dx + h * k3.1, accel(v + h, x + h * k3.0)?);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        dx += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(x.is_finite() && dx.is_finite()) {
            return Err(ParallelError::NonFinite(v + h));
        }
        xs.push(x);
        dxs.push(dx);
    }
    Ok((xs, dxs))
}

/// Integrates `(x, x')' = (x', C + (ε/2) f_x(x, v))` from `v_range.0` with
/// `x = x0`, `x' = dx0`. The step is shrunk to divide the range evenly.
pub fn integrate(
    m: &WalkerMetric,
    eta: Sign,
    c: f64,
    x0: f64,
    dx0: f64,
    v_range: (f64, f64),
    step: f64,
) -> Result<OdeSolution, ParallelError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(ParallelError::Step(step));
    }
    let (lo, hi) = v_range;
    if !(lo < hi) {
        return Err(ParallelError::EmptyRange(lo, hi));
    }
    let steps = ceil((hi - lo) / step).max(1.0) as usize;
    let h = (hi - lo) / steps as f64;
    let (x, dx) = rk4_run(m, c, (x0, dx0), lo, h, steps)?;
    let (fine, _) = rk4_run(m, c, (x0, dx0), lo, h / 2.0, 2 * steps)?;
    let error_estimate = (0..=steps).map(|i| (x[i] - fine[2 * i]).abs() * 16.0 / 15.0).fold(0.0, f64::max);
    let bound = ERROR_PER_UNIT_LENGTH * (hi - lo);
    if error_estimate > bound {
        return Err(ParallelError::ErrorBound { estimate: error_estimate, bound });
    }
    let mut v: Vec<f64> = (0..=steps).map(|i| lo + h * i as f64).collect();
    v[steps] = hi;
    Ok(OdeSolution { v, x, dx, step: h, order: 4, error_estimate, epsilon: m.epsilon(), eta, c })
}

/// `(u, x(v) + p(v), v)` with `x` the Hermite interpolant of a solution and
/// `p` an optional perturbation.
#[derive(Debug, Clone)]
pub struct CurveEmbedding {
    sol: Arc<OdeSolution>,
    perturbation: Option<[ScalarExpr; 3]>,
}

impl CurveEmbedding {
    pub fn new(sol: Arc<OdeSolution>, perturbation: Option<ScalarExpr>) -> Result<Self, ParallelError> {
        let perturbation = match perturbation {
            None => None,
            Some(p) => {
                if p.variables() != ["v"] {
                    return Err(ParallelError::PerturbationVariables);
                }
                let d1 = p.derivative_at(0);
                let d2 = d1.derivative_at(0);
                Some([p, d1, d2])
            }
        };
        Ok(CurveEmbedding { sol, perturbation })
    }
}

impl Embedding for CurveEmbedding {
    fn jets(&self, q: Param) -> Result<EmbeddingJets, SurfaceError> {
        let [mut x, mut dx, mut ddx] = self.sol.interpolate(q.v).map_err(|_| SurfaceError::OutsideDomain(q))?;
        if let Some(p) = &self.perturbation {
            x += p[0].eval(&[q.v])?;
            dx += p[1].eval(&[q.v])?;
            ddx += p[2].eval(&[q.v])?;
        }
        let mut dd = [[[0.0; 3]; 2]; 2];
        dd[1][1][1] = ddx;
        Ok(EmbeddingJets { pos: [q.u, x, q.v], d: [[1.0, 0.0, 0.0], [0.0, dx, 1.0]], dd })
    }
}

/// Patch over `u_range × (solution v range)`.
pub fn build_surface(sol: &OdeSolution, u_range: (f64, f64)) -> Result<SurfacePatch, ParallelError> {
    build_perturbed_surface(sol, u_range, None)
}

pub fn build_perturbed_surface(
    sol: &OdeSolution,
    u_range: (f64, f64),
    perturbation: Option<ScalarExpr>,
) -> Result<SurfacePatch, ParallelError> {
    let (lo, hi) = sol.range();
    let domain = ParamRect::new(u_range, (lo, hi)).map_err(|_| ParallelError::EmptyRange(u_range.0, u_range.1))?;
    let map = CurveEmbedding::new(Arc::new(sol.clone()), perturbation)?;
    Ok(SurfacePatch::new(map, domain))
}

/// Pass/fail of one named check with its worst value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub worst: f64,
    pub passed: bool,
    pub witness: Option<Param>,
}

impl Check {
    fn from_values(values: impl Iterator<Item = (Param, f64)>, tol: f64) -> Check {
        let mut worst = 0.0;
        let mut witness = None;
        let mut any = false;
        for (q, val) in values {
            any = true;
            if !(val <= worst) {
                worst = val;
                witness = Some(q);
            }
        }
        let passed = any && worst <= tol;
        Check { worst, passed, witness: if passed { None } else { witness } }
    }
}

/// Whether a given `(η, δ)` admits a unit normal of the expected form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignRow {
    pub eta: Sign,
    pub delta: Sign,
    pub consistent: bool,
    /// Sign relating the normalized computed normal to `η∂x + √2 v2 ∂t`.
    pub orientation: Option<Sign>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelReport {
    /// (i) computed normal against `η∂x + √2 v2 ∂t`.
    pub normal: Check,
    /// (ii) umbilic residual.
    pub rho: Check,
    /// (iii) spread of `λ` over the patch.
    pub lambda_constant: Check,
    /// (iv) `|v2 - v3|`.
    pub v2_equals_v3: Check,
    /// Reported only; `h = 0` means totally geodesic.
    pub max_abs_h: f64,
    pub totally_geodesic: bool,
    pub ode_residual: f64,
    pub sign_table: Vec<SignRow>,
    pub summary: ScanSummary,
    pub records: Vec<UmbilicRecord>,
}

impl ParallelReport {
    pub fn passed(&self) -> bool {
        self.normal.passed && self.rho.passed && self.lambda_constant.passed && self.v2_equals_v3.passed
    }
}

/// Expected coordinate normal `η∂x + √2 v2 ∂t` at parameter `v`.
pub fn expected_normal(sol: &OdeSolution, v: f64) -> Result<[f64; 3], ParallelError> {
    let [_, dx, _] = sol.interpolate(v)?;
    Ok([SQRT_2 * sol.v2_of(dx), sol.eta.value(), 0.0])
}

pub fn verify_parallel_family(
    m: &WalkerMetric,
    sol: &OdeSolution,
    patch: &SurfacePatch,
    delta: Sign,
    grid: &[Param],
    tol: f64,
) -> Result<ParallelReport, ParallelError> {
    let records: Vec<UmbilicRecord> = grid.iter().map(|&q| scan_point(patch, m, delta, q)).collect();
    let summary = summarize(&records, tol);
    let regular = || records.iter().filter_map(|r| r.data().map(|d| (r.param, d)));

    let mut normal_dev = Vec::with_capacity(records.len());
    for (q, _) in regular() {
        let computed = normal(patch, q, m, delta)?.coord.comps;
        let expected = expected_normal(sol, q.v)?;
        let diff = |s: f64| (0..3).map(|k| (computed[k] - s * expected[k]).abs()).fold(0.0, f64::max);
        normal_dev.push((q, diff(1.0).min(diff(-1.0))));
    }
    let lambda_base = regular().next().map_or(0.0, |(_, d)| d.lambda);
    let report = ParallelReport {
        normal: Check::from_values(normal_dev.into_iter(), tol),
        rho: Check::from_values(regular().map(|(q, d)| (q, d.rho)), tol),
        lambda_constant: Check::from_values(regular().map(|(q, d)| (q, (d.lambda - lambda_base).abs())), tol),
        v2_equals_v3: Check::from_values(regular().map(|(q, d)| (q, (d.v[1] - d.v[2]).abs())), tol),
        max_abs_h: summary.max_abs_h,
        totally_geodesic: summary.regular > 0 && summary.max_abs_h <= tol,
        ode_residual: sol.ode_residual(m)?,
        sign_table: sign_table(m, sol, patch, grid)?,
        summary,
        records,
    };
    Ok(report)
}

/// Tries both `δ` at the first grid point and relates the result to both `η`.
fn sign_table(
    m: &WalkerMetric,
    sol: &OdeSolution,
    patch: &SurfacePatch,
    grid: &[Param],
) -> Result<Vec<SignRow>, ParallelError> {
    let mut rows = Vec::with_capacity(4);
    let Some(&q) = grid.first() else { return Ok(rows) };
    let base = expected_normal(sol, q.v)?;
    for eta in [Sign::Plus, Sign::Minus] {
        // Expected normal for the other η is the negation of the solution's.
        let flip = if eta == sol.eta { 1.0 } else { -1.0 };
        for delta in [Sign::Plus, Sign::Minus] {
            let (consistent, orientation) = match normal(patch, q, m, delta) {
                Ok(n) => {
                    let dot: f64 = (0..3).map(|k| n.coord.comps[k] * flip * base[k]).sum();
                    (true, Some(Sign::of(dot)))
                }
                Err(_) => (false, None),
            };
            rows.push(SignRow { eta, delta, consistent, orientation });
        }
    }
    Ok(rows)
}

/// Closed-form solution `α e^v + β e^{-v}` of `x'' = x` through `(x0, dx0)` at `v0`.
pub fn exponential_profile(x0: f64, dx0: f64, v0: f64, v: f64) -> f64 {
    let a = 0.5 * (x0 + dx0) * exp(-v0);
    let b = 0.5 * (x0 - dx0) * exp(v0);
    a * exp(v) + b * exp(-v)
}
