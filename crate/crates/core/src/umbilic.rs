//! Totally umbilical surfaces: the adapted tangent frame, closed forms for
//! `∇λ`, the two Lie-bracket evaluations of `[e₁ᵀ, e₂ᵀ](λ)`, the
//! integrability obstruction and the case classifier.
//!
//! The algebraic operations take the unit normal `v = (v1, v2, v3)` and `λ`
//! as free inputs; only [`numeric_bracket_audit`] and [`classify`] look at a
//! concrete surface.

use alloc::string::String;
use alloc::vec::Vec;

use crate::connection::{connection_frame, connection_frame_oracle, curvature_frame, ConnectionTable};
use crate::expr::{EvalError, ScalarExpr};
use crate::grid::Param;
use crate::math::sqrt;
use crate::surface::{
    induced_metric, normal_aligned, second_fundamental, summarize, umbilic_form, NormalData, ScanSummary, ScanVerdict,
    SurfaceError, SurfacePatch, UmbilicRecord,
};
use crate::walker::{
    frame_inner, frame_signs, frame_to_coord_comps, FrameVector, Jets, Mat3, Point, Sign, WalkerMetric,
};

/// Tolerance on `εv1² + v2² - v3² = δ`.
pub const UNIT_TOL: f64 = 1e-10;
/// `|v1|` below this routes a point to the `v1 = 0` branch.
pub const NEAR_ZERO: f64 = 1e-6;
/// Bracket audit stencil is rejected when `|e₁ᵀ ∧ e₂ᵀ|` falls below this.
pub const WEDGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UmbilicError {
    #[error("normal is not unit: εv1² + v2² - v3² - δ = {0:e}")]
    NotUnit(f64),
    #[error("tangent frame is singular (det {0:e})")]
    SingularFrame(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("surface is not umbilical here (rho {0:e})")]
    NotUmbilical(f64),
    #[error("stencil is degenerate (|e1T ^ e2T| = {0:e})")]
    DegenerateStencil(f64),
}

/// Frame components of a unit normal together with the signs `ε`, `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalState {
    pub epsilon: Sign,
    pub delta: Sign,
    pub v: [f64; 3],
}

impl NormalState {
    pub fn new(epsilon: Sign, delta: Sign, v: [f64; 3]) -> Result<Self, UmbilicError> {
        let s = NormalState { epsilon, delta, v };
        let r = s.unit_residual();
        if r.abs() <= UNIT_TOL {
            Ok(s)
        } else {
            Err(UmbilicError::NotUnit(r))
        }
    }

    /// Skips the unit check; for normals computed by the surface code.
    pub fn unchecked(epsilon: Sign, delta: Sign, v: [f64; 3]) -> Self {
        NormalState { epsilon, delta, v }
    }

    /// Completes `(v1, v2)` to a unit normal, `v3 = ±sqrt(εv1² + v2² - δ)`.
    pub fn complete(epsilon: Sign, delta: Sign, v1: f64, v2: f64, v3_sign: Sign) -> Option<Self> {
        let r = epsilon.value() * v1 * v1 + v2 * v2 - delta.value();
        (r >= 0.0).then(|| NormalState { epsilon, delta, v: [v1, v2, v3_sign.value() * sqrt(r)] })
    }

    /// Solves for `v2 ≥ 0` with `v3 = 0`, when possible.
    pub fn with_v3_zero(epsilon: Sign, delta: Sign, v1: f64, v2_sign: Sign) -> Option<Self> {
        let r = delta.value() - epsilon.value() * v1 * v1;
        (r >= 0.0).then(|| NormalState { epsilon, delta, v: [v1, v2_sign.value() * sqrt(r), 0.0] })
    }

    pub fn unit_residual(&self) -> f64 {
        let [v1, v2, v3] = self.v;
        self.epsilon.value() * v1 * v1 + v2 * v2 - v3 * v3 - self.delta.value()
    }

    pub fn negated(&self) -> Self {
        NormalState { v: self.v.map(|c| -c), ..*self }
    }

    fn eps(&self) -> f64 {
        self.epsilon.value()
    }

    fn del(&self) -> f64 {
        self.delta.value()
    }
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Adapted tangent frame `T1 = v1 e2 - ε v2 e1`, `T2 = v1 e3 + ε v3 e1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmbilicFrame {
    pub t1: [f64; 3],
    pub t2: [f64; 3],
    /// Columns are `T1`, `T2`, `V` in frame components.
    pub change_of_basis: Mat3,
    /// Equals `εδ v1`.
    pub det: f64,
}

impl UmbilicFrame {
    pub fn new(state: &NormalState) -> Self {
        let [v1, v2, v3] = state.v;
        let e = state.eps();
        let t1 = [-e * v2, v1, 0.0];
        let t2 = [e * v3, 0.0, v1];
        let change_of_basis = core::array::from_fn(|r| [t1[r], t2[r], state.v[r]]);
        UmbilicFrame { t1, t2, change_of_basis, det: det3(&change_of_basis) }
    }

    pub fn t1_at(&self, p: Point) -> FrameVector {
        FrameVector::new(self.t1, p)
    }

    pub fn t2_at(&self, p: Point) -> FrameVector {
        FrameVector::new(self.t2, p)
    }

    /// Coefficients of `w` in the basis `{T1, T2, V}` (Cramer's rule).
    pub fn decompose(&self, w: [f64; 3]) -> Result<[f64; 3], UmbilicError> {
        if self.det == 0.0 {
            return Err(UmbilicError::SingularFrame(self.det));
        }
        Ok(core::array::from_fn(|col| {
            let mut m = self.change_of_basis;
            for (r, row) in m.iter_mut().enumerate() {
                row[col] = w[r];
            }
            det3(&m) / self.det
        }))
    }
}

/// `(⟨∇λ,e1⟩, ⟨∇λ,e2⟩, ⟨∇λ,e3⟩)` from `f_xx` alone.
pub fn grad_lambda(state: &NormalState, fxx: f64) -> [f64; 3] {
    let [v1, v2, v3] = state.v;
    let (e, k) = (state.eps(), state.del() * fxx / 4.0);
    let d = v2 - v3;
    [k * v1 * d * d, -k * d * (v1 * v1 + e * v3 * d), k * d * (v1 * v1 + e * v2 * d)]
}

pub fn grad_lambda_frame(m: &WalkerMetric, p: Point, state: &NormalState) -> Result<[f64; 3], UmbilicError> {
    NormalState::new(state.epsilon, state.delta, state.v)?;
    Ok(grad_lambda(state, m.fxx_at(p)?))
}

/// Two-path check of `Rm(T1,T2)V = ⟨∇λ,T2⟩T1 - ⟨∇λ,T1⟩T2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    /// `Rm(T1,T2)V` in the basis `{T1, T2, V}`.
    pub curvature_coefficients: [f64; 3],
    /// `(⟨∇λ,T2⟩, -⟨∇λ,T1⟩, 0)`.
    pub gradient_coefficients: [f64; 3],
    pub det: f64,
    pub residual: f64,
}

pub fn verify_curvature_gradient_lemma(
    m: &WalkerMetric,
    p: Point,
    state: &NormalState,
) -> Result<LemmaCheck, UmbilicError> {
    let frame = UmbilicFrame::new(state);
    if frame.det.abs() < NEAR_ZERO {
        return Err(UmbilicError::SingularFrame(frame.det));
    }
    let table = curvature_frame(m, p)?;
    let mut rv = [0.0; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let w = frame.t1[a] * frame.t2[b] * state.v[c];
                for (l, r) in rv.iter_mut().enumerate() {
                    *r += w * table.entries[a][b][c][l];
                }
            }
        }
    }
    let curvature_coefficients = frame.decompose(rv)?;
    let g = grad_lambda_frame(m, p, state)?;
    let on = |t: &[f64; 3]| (0..3).map(|i| t[i] * g[i]).sum::<f64>();
    let gradient_coefficients = [on(&frame.t2), -on(&frame.t1), 0.0];
    let residual =
        (0..3).fold(0.0, |acc: f64, i| acc.max((curvature_coefficients[i] - gradient_coefficients[i]).abs()));
    Ok(LemmaCheck { curvature_coefficients, gradient_coefficients, det: frame.det, residual })
}

/// `η - δ⟨η,V⟩V`.
pub fn tangential_projection(epsilon: Sign, eta: &FrameVector, n: &NormalData) -> FrameVector {
    let v = n.v();
    let c = n.delta.value() * frame_inner(epsilon, &eta.comps, &v);
    FrameVector::new(core::array::from_fn(|i| eta.comps[i] - c * v[i]), eta.at)
}

/// Frame components of `e_iᵀ`, one row per `i`.
pub fn projected_frame(state: &NormalState) -> Mat3 {
    let s = frame_signs(state.epsilon);
    core::array::from_fn(|i| {
        let c = state.del() * s[i] * state.v[i];
        core::array::from_fn(|k| if i == k { 1.0 } else { 0.0 } - c * state.v[k])
    })
}

/// Closed form `⟨e_iᵀ, e_jᵀ⟩ = ε_i δ_ij - δ ε_i ε_j v_i v_j`.
pub fn projected_gram(state: &NormalState) -> Mat3 {
    let s = frame_signs(state.epsilon);
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let diag = if i == j { s[i] } else { 0.0 };
            diag - state.del() * s[i] * s[j] * state.v[i] * state.v[j]
        })
    })
}

/// `[e₁ᵀ,e₂ᵀ](λ)` with `∇λ` substituted from its closed form.
pub fn bracket_first(state: &NormalState, jets: &Jets, lambda: f64) -> f64 {
    let [v1, v2, v3] = state.v;
    let (e, dl) = (state.eps(), state.del());
    let d = v2 - v3;
    let pre = dl * d * jets.fxx / 4.0;
    pre * ((e * jets.fx * d * d / 4.0) * (dl * (e * v1 * v1 + v2 * v2 - v2 * v3) - 1.0) + lambda * v1)
}

/// `[e₁ᵀ,e₂ᵀ](λ)` evaluated as `e₁ᵀ(e₂ᵀ(λ)) - e₂ᵀ(e₁ᵀ(λ))`.
pub fn bracket_second(state: &NormalState, jets: &Jets, lambda: f64) -> f64 {
    let [_, v2, v3] = state.v;
    let d = v2 - v3;
    bracket_first(state, jets, lambda) - (state.del() * d / 4.0) * (state.eps() * v3 * d * jets.fxxx)
}

/// `v3 (v2 - v3)² f_xxx`.
pub fn obstruction(v: [f64; 3], fxxx: f64) -> f64 {
    let d = v[1] - v[2];
    v[2] * d * d * fxxx
}

/// `⟨∇_{e₁ᵀ}e₂ᵀ - ∇_{e₂ᵀ}e₁ᵀ, ∇λ⟩` for a tangent gradient with frame
/// pairings `grad[i] = ⟨∇λ, e_i⟩`, using
/// `∇_{e_iᵀ}e_jᵀ = Σ_k ε_k ⟨e_iᵀ,e_kᵀ⟩ (∇̄_{e_k}e_j)ᵀ + δ ε_j v_j λ e_iᵀ`.
pub fn bracket_via_connection(state: &NormalState, table: &ConnectionTable, lambda: f64, grad: [f64; 3]) -> f64 {
    let s = frame_signs(state.epsilon);
    let gram = projected_gram(state);
    let paired = |k: usize, j: usize| (0..3).map(|l| table.entries[k][j][l] * grad[l]).sum::<f64>();
    let cov = |i: usize, j: usize| {
        (0..3).map(|k| s[k] * gram[i][k] * paired(k, j)).sum::<f64>()
            + state.del() * s[j] * state.v[j] * lambda * grad[i]
    };
    cov(0, 1) - cov(1, 0)
}

/// Independent route to [`bracket_first`]: the connection of the surface
/// assembled from the coordinate oracle.
pub fn bracket_first_via_connection(
    m: &WalkerMetric,
    p: Point,
    state: &NormalState,
    lambda: f64,
) -> Result<f64, UmbilicError> {
    let table = connection_frame_oracle(m, p)?;
    let grad = grad_lambda(state, m.fxx_at(p)?);
    Ok(bracket_via_connection(state, &table, lambda, grad))
}

/// Independent route to [`bracket_second`]: differentiates the closed-form
/// gradient symbolically in `(v, f_xx)` and applies the chain rule along
/// `e_iᵀ`, with `e_jᵀ(v_k) = ε_k Σ_l ε_l ⟨e_jᵀ,e_lᵀ⟩⟨∇̄_{e_l}e_k, V⟩ - ε_k λ ⟨e_kᵀ,e_jᵀ⟩`.
#[derive(Debug, Clone)]
pub struct ChainRuleOracle {
    by_v: [[ScalarExpr; 3]; 3],
    by_fxx: [ScalarExpr; 3],
}

const GRADIENT_VARS: [&str; 6] = ["v1", "v2", "v3", "fxx", "eps", "delta"];

impl Default for ChainRuleOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl ChainRuleOracle {
    pub fn new() -> Self {
        let sources = [
            "delta*fxx*v1*(v2 - v3)^2/4",
            "delta*fxx*(v3 - v2)*(v1^2 + eps*v3*(v2 - v3))/4",
            "delta*fxx*(v2 - v3)*(v1^2 + eps*v2*(v2 - v3))/4",
        ];
        let g: [ScalarExpr; 3] =
            sources.map(|s| ScalarExpr::parse(s, &GRADIENT_VARS).expect("gradient source is well formed"));
        ChainRuleOracle {
            by_v: core::array::from_fn(|j| core::array::from_fn(|k| g[j].derivative_at(k))),
            by_fxx: core::array::from_fn(|j| g[j].derivative_at(3)),
        }
    }

    pub fn bracket_second(
        &self,
        m: &WalkerMetric,
        p: Point,
        state: &NormalState,
        lambda: f64,
    ) -> Result<f64, UmbilicError> {
        let jets = m.jets(p)?;
        let table = connection_frame_oracle(m, p)?;
        let s = frame_signs(state.epsilon);
        let gram = projected_gram(state);
        let frame_t = projected_frame(state);
        let at = [state.v[0], state.v[1], state.v[2], jets.fxx, state.eps(), state.del()];

        // dv[j][k] = e_jᵀ(v_k)
        let along_v = |l: usize, k: usize| (0..3).map(|mm| table.entries[l][k][mm] * s[mm] * state.v[mm]).sum::<f64>();
        let dv: Mat3 = core::array::from_fn(|j| {
            core::array::from_fn(|k| {
                s[k] * (0..3).map(|l| s[l] * gram[j][l] * along_v(l, k)).sum::<f64>() - s[k] * lambda * gram[k][j]
            })
        });
        let dfxx: [f64; 3] = core::array::from_fn(|j| {
            let c = frame_to_coord_comps(frame_t[j], jets.f);
            jets.fxxx * c[1] + jets.fxxy * c[2]
        });
        // e_iᵀ(G_j)
        let derive = |i: usize, j: usize| -> Result<f64, EvalError> {
            let mut acc = self.by_fxx[j].eval(&at)? * dfxx[i];
            for k in 0..3 {
                acc += self.by_v[j][k].eval(&at)? * dv[i][k];
            }
            Ok(acc)
        };
        Ok(derive(0, 1)? - derive(1, 0)?)
    }
}

/// `(⟨∇̄_{T1}V, e3⟩, -v1² f_x / 4)` for a normal with `v3 = 0`, the left side
/// taken from the oracle connection with `T1(v3) = 0`.
pub fn v3_zero_identity(m: &WalkerMetric, p: Point, state: &NormalState) -> Result<(f64, f64), UmbilicError> {
    let table = connection_frame_oracle(m, p)?;
    let t1 = UmbilicFrame::new(state).t1;
    let mut lhs = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            // ⟨·, e3⟩ picks minus the e3 component
            lhs -= state.v[i] * t1[k] * table.entries[k][i][2];
        }
    }
    let (fx, _) = m.gradient_f(p)?;
    Ok((lhs, -state.v[0] * state.v[0] * fx / 4.0))
}

/// Both bracket evaluations at one state and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstructionRecord {
    pub point: Point,
    pub state: NormalState,
    pub lambda: f64,
    pub first: f64,
    pub second: f64,
    pub difference: f64,
    pub obstruction: f64,
    /// `|B - A| > tol` with a vanishing obstruction: an internal error.
    pub inconsistent: bool,
    /// `|B - A| > tol` and `|obstruction| > tol`.
    pub obstructed: bool,
}

impl ObstructionRecord {
    /// `-(δ(v2 - v3)/4)(ε v3 (v2 - v3) f_xxx)`, the predicted `B - A`.
    pub fn predicted_difference(state: &NormalState, fxxx: f64) -> f64 {
        let [_, v2, v3] = state.v;
        let d = v2 - v3;
        -(state.del() * d / 4.0) * (state.eps() * v3 * d * fxxx)
    }
}

pub fn bracket_consistency(state: &NormalState, jets: &Jets, p: Point, lambda: f64, tol: f64) -> ObstructionRecord {
    let first = bracket_first(state, jets, lambda);
    let second = bracket_second(state, jets, lambda);
    let difference = second - first;
    let obstruction = obstruction(state.v, jets.fxxx);
    let gap = difference.abs() > tol;
    ObstructionRecord {
        point: p,
        state: *state,
        lambda,
        first,
        second,
        difference,
        obstruction,
        inconsistent: gap && obstruction.abs() <= tol,
        obstructed: gap && obstruction.abs() > tol,
    }
}

/// The four evaluations of `[e₁ᵀ,e₂ᵀ](λ)` at one surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketAudit {
    pub param: Param,
    pub lambda: f64,
    pub rho: f64,
    /// `e₁ᵀ(e₂ᵀ(λ)) - e₂ᵀ(e₁ᵀ(λ))` by nested differences.
    pub direct: f64,
    /// Connection expression with the differenced gradient of `λ`.
    pub connection: f64,
    pub closed_first: f64,
    pub closed_second: f64,
    pub wedge: f64,
}

impl BracketAudit {
    pub fn max_spread(&self) -> f64 {
        let vals = [self.direct, self.connection, self.closed_first, self.closed_second];
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

const AUDIT_INNER_STEP: f64 = 1e-4;
const AUDIT_OUTER_STEP: f64 = 1e-3;

/// Parameter coefficients of `e_iᵀ` (rows) at `q`: `α^a = g^{ab}⟨e_i, X_b⟩`.
fn projected_in_params(s: &SurfacePatch, q: Param, m: &WalkerMetric) -> Result<[[f64; 2]; 3], UmbilicError> {
    let j = s.jets(q)?;
    let p = Point::from_coords(j.pos);
    let f = m.f_at(p)?;
    let ginv = induced_metric(s, q, m)?.require_nondegenerate()?.inverse();
    let xb = [crate::walker::coord_to_frame_comps(j.d[0], f), crate::walker::coord_to_frame_comps(j.d[1], f)];
    let signs = frame_signs(m.epsilon());
    Ok(core::array::from_fn(|i| {
        // ⟨e_i, X_b⟩ = ε_i (X_b)_i
        let pair = [signs[i] * xb[0][i], signs[i] * xb[1][i]];
        core::array::from_fn(|a| ginv[a][0] * pair[0] + ginv[a][1] * pair[1])
    }))
}

pub fn numeric_bracket_audit(
    s: &SurfacePatch,
    m: &WalkerMetric,
    delta: Sign,
    q: Param,
    tol: f64,
) -> Result<BracketAudit, UmbilicError> {
    let centre = second_fundamental(s, q, m, delta)?;
    if !(centre.rho <= tol) {
        return Err(UmbilicError::NotUmbilical(centre.rho));
    }
    let reference = centre.normal;
    let lambda_at = |r: Param| -> Result<f64, UmbilicError> {
        let n = normal_aligned(s, r, m, &reference)?;
        Ok(umbilic_form(s, r, m, &n)?.lambda)
    };
    let dlambda = |r: Param| -> Result<[f64; 2], UmbilicError> {
        let h = AUDIT_INNER_STEP;
        let mut out = [0.0; 2];
        for (a, o) in out.iter_mut().enumerate() {
            *o = (lambda_at(r.shifted(a, h))? - lambda_at(r.shifted(a, -h))?) / (2.0 * h);
        }
        Ok(out)
    };
    // e_jᵀ(λ) as a function on the patch
    let along = |r: Param, i: usize| -> Result<f64, UmbilicError> {
        let coeff = projected_in_params(s, r, m)?[i];
        let d = dlambda(r)?;
        Ok(coeff[0] * d[0] + coeff[1] * d[1])
    };

    let coeff = projected_in_params(s, q, m)?;
    let state = NormalState::unchecked(m.epsilon(), delta, reference.v());
    let gram = projected_gram(&state);
    let wedge = sqrt((gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0]).abs());
    if wedge < WEDGE_TOL {
        return Err(UmbilicError::DegenerateStencil(wedge));
    }
    let outer = |i: usize, j: usize| -> Result<f64, UmbilicError> {
        let h = AUDIT_OUTER_STEP;
        let mut acc = 0.0;
        for a in 0..2 {
            let diff = (along(q.shifted(a, h), j)? - along(q.shifted(a, -h), j)?) / (2.0 * h);
            acc += coeff[i][a] * diff;
        }
        Ok(acc)
    };
    let direct = outer(0, 1)? - outer(1, 0)?;

    let d = dlambda(q)?;
    let grad: [f64; 3] = core::array::from_fn(|i| coeff[i][0] * d[0] + coeff[i][1] * d[1]);
    let p = s.point(q)?;
    let table = connection_frame(m, p)?;
    let connection = bracket_via_connection(&state, &table, centre.lambda, grad);
    let jets = m.jets(p)?;
    Ok(BracketAudit {
        param: q,
        lambda: centre.lambda,
        rho: centre.rho,
        direct,
        connection,
        closed_first: bracket_first(&state, &jets, centre.lambda),
        closed_second: bracket_second(&state, &jets, centre.lambda),
        wedge,
    })
}

/// The alternatives for a totally umbilical surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremCase {
    /// (a) `v1 ≈ 0`; then `λ ≈ 0`.
    NormalOrthogonalToX,
    /// (b) `v3 ≈ 0`; then `f_x ≈ 0`.
    NoE3Component,
    /// (c) `v2 ≈ v3`; then `λ` is constant.
    Parallel,
    /// (d) `f_xxx ≈ 0` along the surface.
    ConformallyFlatShadow,
}

impl TheoremCase {
    pub const ALL: [TheoremCase; 4] = [
        TheoremCase::NormalOrthogonalToX,
        TheoremCase::NoE3Component,
        TheoremCase::Parallel,
        TheoremCase::ConformallyFlatShadow,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TheoremCase::NormalOrthogonalToX => "a",
            TheoremCase::NoE3Component => "b",
            TheoremCase::Parallel => "c",
            TheoremCase::ConformallyFlatShadow => "d",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TheoremCase::NormalOrthogonalToX => "v1 = 0",
            TheoremCase::NoE3Component => "v3 = 0",
            TheoremCase::Parallel => "v2 = v3",
            TheoremCase::ConformallyFlatShadow => "f_xxx = 0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub case: TheoremCase,
    /// Number of regular points where the condition holds.
    pub points: usize,
    /// The condition holds at every regular point.
    pub fires: bool,
    /// Largest violation of the case's consequence over its points.
    pub consequence_max: f64,
    pub consequence_holds: bool,
    pub consequence_witness: Option<Param>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Inconsistency {
    /// Umbilical point where no alternative holds.
    Unexplained { param: Param, obstruction: f64 },
    /// A case holds but its consequence fails.
    Consequence { case: TheoremCase, param: Param, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassVerdict {
    NotUmbilical { witness: Param, rho: f64 },
    Degenerate,
    Classified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: ClassVerdict,
    pub summary: ScanSummary,
    pub cases: Vec<CaseReport>,
    pub inconsistencies: Vec<Inconsistency>,
}

impl Classification {
    pub fn firing(&self) -> impl Iterator<Item = TheoremCase> + '_ {
        self.cases.iter().filter(|c| c.fires).map(|c| c.case)
    }

    pub fn consistent(&self) -> bool {
        self.verdict == ClassVerdict::Classified && self.inconsistencies.is_empty()
    }
}

/// Case analysis over already computed scan records.
pub fn classify_records(records: &[UmbilicRecord], tol: f64) -> Classification {
    let summary = summarize(records, tol);
    let verdict = match summary.verdict {
        ScanVerdict::Umbilical => ClassVerdict::Classified,
        ScanVerdict::NonUmbilical { witness, rho } => ClassVerdict::NotUmbilical { witness, rho },
        ScanVerdict::Degenerate => ClassVerdict::Degenerate,
    };
    let regular: Vec<(&UmbilicRecord, Jets)> =
        records.iter().filter(|r| r.data().is_some()).filter_map(|r| r.jets.map(|j| (r, j))).collect();
    let holds = |case: TheoremCase, r: &UmbilicRecord, j: &Jets| {
        let v = r.data().map(|d| d.v).unwrap_or_default();
        match case {
            TheoremCase::NormalOrthogonalToX => v[0].abs() < NEAR_ZERO,
            TheoremCase::NoE3Component => v[2].abs() < NEAR_ZERO,
            TheoremCase::Parallel => (v[1] - v[2]).abs() <= tol,
            TheoremCase::ConformallyFlatShadow => j.fxxx.abs() <= tol,
        }
    };

    let mut cases = Vec::new();
    let mut inconsistencies = Vec::new();
    for case in TheoremCase::ALL {
        let members: Vec<&(&UmbilicRecord, Jets)> = regular.iter().filter(|(r, j)| holds(case, r, j)).collect();
        let lambda = |r: &UmbilicRecord| r.data().map_or(0.0, |d| d.lambda);
        let mut worst: (f64, Option<Param>) = (0.0, None);
        let mut note = |value: f64, param: Param| {
            if value > worst.0 || worst.1.is_none() {
                worst = (worst.0.max(value), Some(param));
            }
        };
        match case {
            TheoremCase::NormalOrthogonalToX => members.iter().for_each(|(r, _)| note(lambda(r).abs(), r.param)),
            TheoremCase::NoE3Component => members.iter().for_each(|(r, j)| note(j.fx.abs(), r.param)),
            TheoremCase::Parallel => {
                if let Some((first, _)) = members.first() {
                    let base = lambda(first);
                    members.iter().for_each(|(r, _)| note((lambda(r) - base).abs(), r.param));
                }
            }
            TheoremCase::ConformallyFlatShadow => {}
        }
        let consequence_holds = worst.0 <= tol;
        let fires = !regular.is_empty() && members.len() == regular.len();
        // A case constrains the surface only where it holds on an open set;
        // on a sample that means at every regular point.
        if verdict == ClassVerdict::Classified && fires && !consequence_holds {
            if let Some(param) = worst.1 {
                inconsistencies.push(Inconsistency::Consequence { case, param, value: worst.0 });
            }
        }
        cases.push(CaseReport {
            case,
            points: members.len(),
            fires,
            consequence_max: worst.0,
            consequence_holds,
            consequence_witness: if consequence_holds { None } else { worst.1 },
        });
    }
    if verdict == ClassVerdict::Classified {
        for (r, j) in &regular {
            if !TheoremCase::ALL.iter().any(|&c| holds(c, r, j)) {
                let obstruction = r.data().map_or(0.0, |d| d.obstruction);
                inconsistencies.push(Inconsistency::Unexplained { param: r.param, obstruction });
                let _ = j;
            }
        }
    }
    Classification { verdict, summary, cases, inconsistencies }
}

pub fn classify(s: &SurfacePatch, m: &WalkerMetric, delta: Sign, grid: &[Param], tol: f64) -> Classification {
    let records: Vec<UmbilicRecord> = grid.iter().map(|&q| crate::surface::scan_point(s, m, delta, q)).collect();
    classify_records(&records, tol)
}

/// Human-readable label list like `"c,d"`.
pub fn case_labels(cases: impl Iterator<Item = TheoremCase>) -> String {
    let mut out = String::new();
    for c in cases {
        if !out.is_empty() {
            out.push(',');
        }
        out.push_str(c.label());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_state() -> NormalState {
        NormalState::new(Sign::Plus, Sign::Plus, [2.0, 1.0, 2.0]).unwrap()
    }

    fn example_jets() -> Jets {
        Jets { f: 0.0, fx: 4.0, fy: 0.0, fxx: 4.0, fxy: 0.0, fxxx: 6.0, fxxy: 0.0 }
    }

    #[test]
    fn gradient_closed_form_example() {
        assert_eq!(grad_lambda(&example_state(), 4.0), [2.0, 2.0, -3.0]);
    }

    #[test]
    fn gradient_vanishes_on_parallel_normals_and_flat_points() {
        let s = NormalState::new(Sign::Minus, Sign::Plus, [0.0, 1.5, 1.5]).unwrap_err();
        assert!(matches!(s, UmbilicError::NotUnit(_)));
        let s = NormalState::unchecked(Sign::Plus, Sign::Plus, [1.0, 0.7, 0.7]);
        assert_eq!(grad_lambda(&s, 3.0), [0.0, 0.0, 0.0]);
        assert_eq!(grad_lambda(&example_state(), 0.0).map(f64::abs), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_requires_unit_normal() {
        let m = WalkerMetric::parse(Sign::Plus, "x^3").unwrap();
        let bad = NormalState::unchecked(Sign::Plus, Sign::Plus, [1.0, 1.0, 0.0]);
        assert!(matches!(grad_lambda_frame(&m, Point::new(0.0, 0.3, 0.0), &bad), Err(UmbilicError::NotUnit(_))));
    }

    #[test]
    fn frame_is_tangent_and_det_is_eps_delta_v1() {
        for (e, d, v) in [
            (Sign::Plus, Sign::Plus, [2.0, 1.0, 2.0]),
            (Sign::Minus, Sign::Minus, [2.0, 2.0, 1.0]),
            (Sign::Minus, Sign::Plus, [0.5, 1.5, 1.0]),
        ] {
            let s = NormalState::new(e, d, v).unwrap();
            let fr = UmbilicFrame::new(&s);
            assert_eq!(frame_inner(e, &fr.t1, &s.v), 0.0);
            assert_eq!(frame_inner(e, &fr.t2, &s.v), 0.0);
            assert!((fr.det - e.value() * d.value() * v[0]).abs() < 1e-12);
            let back = fr.decompose(s.v).unwrap();
            assert!((back[2] - 1.0).abs() < 1e-12 && back[0].abs() < 1e-12 && back[1].abs() < 1e-12);
        }
    }

    #[test]
    fn bracket_examples() {
        let (s, j) = (example_state(), example_jets());
        assert_eq!(bracket_first(&s, &j, 1.0), -4.0);
        assert_eq!(bracket_second(&s, &j, 1.0), -7.0);
        assert_eq!(obstruction(s.v, 6.0), 12.0);
        let rec = bracket_consistency(&s, &j, Point::new(0.0, 0.0, 0.0), 1.0, 1e-10);
        assert_eq!(rec.difference, -3.0);
        assert_eq!(rec.difference, ObstructionRecord::predicted_difference(&s, 6.0));
        assert!(rec.obstructed && !rec.inconsistent);
    }

    #[test]
    fn brackets_agree_without_third_derivative_or_v3() {
        let s = example_state();
        let j = Jets { fxxx: 0.0, ..example_jets() };
        assert_eq!(bracket_first(&s, &j, 0.3), bracket_second(&s, &j, 0.3));
        let s = NormalState::with_v3_zero(Sign::Plus, Sign::Plus, 0.6, Sign::Plus).unwrap();
        assert_eq!(bracket_first(&s, &example_jets(), 0.3), bracket_second(&s, &example_jets(), 0.3));
    }

    #[test]
    fn projection_examples() {
        let p = Point::new(0.0, 0.0, 0.0);
        let n = NormalData {
            delta: Sign::Plus,
            coord: crate::walker::CoordVector::new([0.0, 1.0, 0.0], p),
            frame: FrameVector::new([1.0, 0.0, 0.0], p),
        };
        let e2 = FrameVector::new([0.0, 1.0, 0.0], p);
        assert_eq!(tangential_projection(Sign::Plus, &e2, &n).comps, [0.0, 1.0, 0.0]);
        assert_eq!(tangential_projection(Sign::Plus, &n.frame, &n).comps, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn case_labels_join() {
        assert_eq!(case_labels([TheoremCase::Parallel, TheoremCase::ConformallyFlatShadow].into_iter()), "c,d");
    }
}
