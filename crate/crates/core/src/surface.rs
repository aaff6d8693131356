//! Parametrized surfaces `(u, v) ↦ (t, x, y)` in a Walker manifold.
//!
//! The second fundamental form is computed from exact second partials of the
//! embedding and the coordinate Christoffel symbols; the shape operator is
//! measured independently by differencing the unit normal along the
//! parameter curves. `⟨S(X), Y⟩ = δ h(X, Y)` is then a check, not an input.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::connection::christoffel_coord;
use crate::expr::{EvalError, ParseError, ScalarExpr};
use crate::grid::{Param, ParamRect};
use crate::math::sqrt;
use crate::umbilic;
use crate::walker::{
    contract, coord_to_frame_comps, metric_matrix, CoordVector, FrameVector, Jets, Point, Sign, WalkerMetric,
};

pub type Mat2 = [[f64; 2]; 2];

/// Relative threshold below which the induced metric counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Relative threshold below which the normal counts as lightlike.
pub const LIGHTLIKE_TOL: f64 = 1e-10;
/// Parameter step for differencing the normal field.
pub const NORMAL_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("induced metric is degenerate (det {det:e}, relative {relative:e})")]
    Degenerate { det: f64, relative: f64 },
    #[error("normal direction is lightlike (relative norm {0:e})")]
    Lightlike(f64),
    #[error("normal has causal character {found:?}, requested delta {requested:?}")]
    IncompatibleDelta { requested: Sign, found: Sign },
    #[error("parameter ({}, {}) is outside the patch", .0.u, .0.v)]
    OutsideDomain(Param),
    #[error("embedding components must be expressions over (u, v), got {0:?}")]
    Variables(Vec<String>),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Position and first/second partials of an embedding at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingJets {
    pub pos: [f64; 3],
    /// `d[a]` is `∂_a ι` for `a ∈ {u, v}`.
    pub d: [[f64; 3]; 2],
    /// `dd[a][b]` is `∂_a ∂_b ι`.
    pub dd: [[[f64; 3]; 2]; 2],
}

/// Anything that can supply embedding jets.
pub trait Embedding: Send + Sync {
    fn jets(&self, q: Param) -> Result<EmbeddingJets, SurfaceError>;
}

/// An embedding given by three expressions in `(u, v)`, differentiated symbolically.
#[derive(Debug, Clone)]
pub struct ExprEmbedding {
    comps: [ScalarExpr; 3],
    first: [[ScalarExpr; 3]; 2],
    second: [[[ScalarExpr; 3]; 2]; 2],
}

impl ExprEmbedding {
    pub fn new(comps: [ScalarExpr; 3]) -> Result<Self, SurfaceError> {
        for c in &comps {
            if c.variables() != ["u", "v"] {
                return Err(SurfaceError::Variables(c.variables().to_vec()));
            }
        }
        let first: [[ScalarExpr; 3]; 2] = core::array::from_fn(|a| core::array::from_fn(|k| comps[k].derivative_at(a)));
        let second =
            core::array::from_fn(|a| core::array::from_fn(|b| core::array::from_fn(|k| first[b][k].derivative_at(a))));
        Ok(ExprEmbedding { comps, first, second })
    }

    pub fn parse(t: &str, x: &str, y: &str) -> Result<Self, SurfaceError> {
        let p = |s: &str| ScalarExpr::parse(s, &["u", "v"]);
        ExprEmbedding::new([p(t)?, p(x)?, p(y)?])
    }

    pub fn components(&self) -> &[ScalarExpr; 3] {
        &self.comps
    }
}

impl Embedding for ExprEmbedding {
    fn jets(&self, q: Param) -> Result<EmbeddingJets, SurfaceError> {
        let at = [q.u, q.v];
        let mut j = EmbeddingJets { pos: [0.0; 3], d: [[0.0; 3]; 2], dd: [[[0.0; 3]; 2]; 2] };
        for k in 0..3 {
            j.pos[k] = self.comps[k].eval(&at)?;
            for a in 0..2 {
                j.d[a][k] = self.first[a][k].eval(&at)?;
                for b in 0..2 {
                    j.dd[a][b][k] = self.second[a][b][k].eval(&at)?;
                }
            }
        }
        Ok(j)
    }
}

/// A surface patch: an embedding restricted to a parameter rectangle.
#[derive(Clone)]
pub struct SurfacePatch {
    map: Arc<dyn Embedding>,
    domain: ParamRect,
}

impl core::fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SurfacePatch").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl SurfacePatch {
    pub fn new(map: impl Embedding + 'static, domain: ParamRect) -> Self {
        SurfacePatch { map: Arc::new(map), domain }
    }

    pub fn parse(t: &str, x: &str, y: &str, domain: ParamRect) -> Result<Self, SurfaceError> {
        Ok(SurfacePatch::new(ExprEmbedding::parse(t, x, y)?, domain))
    }

    pub fn domain(&self) -> ParamRect {
        self.domain
    }

    pub fn jets(&self, q: Param) -> Result<EmbeddingJets, SurfaceError> {
        self.map.jets(q)
    }

    pub fn point(&self, q: Param) -> Result<Point, SurfaceError> {
        Ok(Point::from_coords(self.jets(q)?.pos))
    }

    /// Coordinate tangents `(X_u, X_v)` at the image of `q`.
    pub fn tangents(&self, q: Param) -> Result<(CoordVector, CoordVector), SurfaceError> {
        let j = self.jets(q)?;
        let p = Point::from_coords(j.pos);
        Ok((CoordVector::new(j.d[0], p), CoordVector::new(j.d[1], p)))
    }
}

/// Gram matrix of the tangents with its non-degeneracy verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedMetric {
    pub g: Mat2,
    pub det: f64,
    /// `|det| / (|X_u|² |X_v|²)` with Euclidean coordinate norms; invariant
    /// under rescaling the parameters.
    pub relative_det: f64,
    pub nondegenerate: bool,
}

impl InducedMetric {
    pub fn inverse(&self) -> Mat2 {
        let [[a, b], [c, d]] = self.g;
        [[d / self.det, -b / self.det], [-c / self.det, a / self.det]]
    }

    pub fn require_nondegenerate(self) -> Result<Self, SurfaceError> {
        if self.nondegenerate {
            Ok(self)
        } else {
            Err(SurfaceError::Degenerate { det: self.det, relative: self.relative_det })
        }
    }
}

fn euclid_sq(a: &[f64; 3]) -> f64 {
    a.iter().map(|c| c * c).sum()
}

fn induced_from(g3: &[[f64; 3]; 3], d: &[[f64; 3]; 2]) -> InducedMetric {
    let g: Mat2 = core::array::from_fn(|a| core::array::from_fn(|b| contract(g3, &d[a], &d[b])));
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let scale = euclid_sq(&d[0]) * euclid_sq(&d[1]);
    let relative_det = if scale > 0.0 { det.abs() / scale } else { 0.0 };
    InducedMetric { g, det, relative_det, nondegenerate: relative_det > DEGENERACY_TOL }
}

pub fn induced_metric(s: &SurfacePatch, q: Param, m: &WalkerMetric) -> Result<InducedMetric, SurfaceError> {
    let j = s.jets(q)?;
    let p = Point::from_coords(j.pos);
    Ok(induced_from(&m.metric_components(p)?, &j.d))
}

/// Unit normal `V` with `⟨V, V⟩ = δ`, in both representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalData {
    pub delta: Sign,
    pub coord: CoordVector,
    pub frame: FrameVector,
}

impl NormalData {
    /// Frame components `(v1, v2, v3)`.
    pub fn v(&self) -> [f64; 3] {
        self.frame.comps
    }

    pub fn flipped(&self) -> Self {
        NormalData {
            delta: self.delta,
            coord: CoordVector::new(self.coord.comps.map(|c| -c), self.coord.at),
            frame: FrameVector::new(self.frame.comps.map(|c| -c), self.frame.at),
        }
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn lower(g: &[[f64; 3]; 3], a: &[f64; 3]) -> [f64; 3] {
    core::array::from_fn(|i| (0..3).map(|j| g[i][j] * a[j]).sum())
}

fn normal_from(
    g3: &[[f64; 3]; 3],
    f: f64,
    d: &[[f64; 3]; 2],
    p: Point,
    delta: Sign,
) -> Result<NormalData, SurfaceError> {
    induced_from(g3, d).require_nondegenerate()?;
    // V^k annihilated by both covectors g(X_u, ·) and g(X_v, ·).
    let raw = cross(&lower(g3, &d[0]), &lower(g3, &d[1]));
    let len = sqrt(euclid_sq(&raw));
    let dir = raw.map(|c| c / len);
    let n = contract(g3, &dir, &dir);
    if !(n.abs() > LIGHTLIKE_TOL) {
        return Err(SurfaceError::Lightlike(n));
    }
    let found = Sign::of(n);
    if found != delta {
        return Err(SurfaceError::IncompatibleDelta { requested: delta, found });
    }
    let scale = 1.0 / sqrt(n.abs());
    let mut coord = dir.map(|c| c * scale);
    let mut frame = coord_to_frame_comps(coord, f);
    // Orientation: the largest-magnitude frame component is non-negative,
    // ties resolved towards the first index.
    let mut lead = 0;
    for i in 1..3 {
        if frame[i].abs() > frame[lead].abs() {
            lead = i;
        }
    }
    if frame[lead] < 0.0 {
        coord = coord.map(|c| -c);
        frame = frame.map(|c| -c);
    }
    Ok(NormalData { delta, coord: CoordVector::new(coord, p), frame: FrameVector::new(frame, p) })
}

pub fn normal(s: &SurfacePatch, q: Param, m: &WalkerMetric, delta: Sign) -> Result<NormalData, SurfaceError> {
    let j = s.jets(q)?;
    let p = Point::from_coords(j.pos);
    let f = m.f_at(p)?;
    normal_from(&metric_matrix(m.epsilon(), f), f, &j.d, p, delta)
}

/// Induced metric, second fundamental form and shape operator at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondFundamentalData {
    pub normal: NormalData,
    pub induced: Mat2,
    /// `h_ab = δ ⟨∇̄_{X_a} X_b, V⟩`.
    pub h: Mat2,
    /// Shape operator in the tangent basis: `S(X_a) = Σ_c shape[a][c] X_c`.
    pub shape: Mat2,
    /// `λ = δ tr_g(h) / 2`.
    pub lambda: f64,
    /// `‖h - δλ g‖_F / max(1, ‖g‖_F)`.
    pub rho: f64,
    /// Largest `|⟨S(X_a), X_b⟩ - δ h_ab|`.
    pub shape_residual: f64,
    /// Largest normal component of `S(X_a)` relative to `|S|`; zero for a
    /// tangent-valued shape operator.
    pub shape_normal_part: f64,
}

impl SecondFundamentalData {
    pub fn max_abs_h(&self) -> f64 {
        self.h.iter().flatten().fold(0.0, |a: f64, b| a.max(b.abs()))
    }
}

fn frobenius(a: &Mat2) -> f64 {
    sqrt(a.iter().flatten().map(|c| c * c).sum())
}

/// [`second_fundamental`] with the orientation chosen by the normalization rule.
pub fn second_fundamental(
    s: &SurfacePatch,
    q: Param,
    m: &WalkerMetric,
    delta: Sign,
) -> Result<SecondFundamentalData, SurfaceError> {
    let n = normal(s, q, m, delta)?;
    second_fundamental_with(s, q, m, &n)
}

/// `h`, `λ` and `ρ` against a given normal, without the shape operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmbilicForm {
    pub induced: Mat2,
    pub h: Mat2,
    pub lambda: f64,
    pub rho: f64,
}

pub fn umbilic_form(s: &SurfacePatch, q: Param, m: &WalkerMetric, n: &NormalData) -> Result<UmbilicForm, SurfaceError> {
    let dv = n.delta.value();
    let j = s.jets(q)?;
    let p = Point::from_coords(j.pos);
    let g3 = m.metric_components(p)?;
    let gamma = christoffel_coord(m, p)?;
    let induced = induced_from(&g3, &j.d).require_nondegenerate()?;
    let v = n.coord.comps;
    let mut h = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let gab = gamma.apply(&j.d[a], &j.d[b]);
            let acc: [f64; 3] = core::array::from_fn(|k| j.dd[a][b][k] + gab[k]);
            h[a][b] = dv * contract(&g3, &acc, &v);
        }
    }
    let ginv = induced.inverse();
    let mut trace = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            trace += ginv[a][b] * h[a][b];
        }
    }
    let lambda = dv * trace / 2.0;
    let traceless: Mat2 = core::array::from_fn(|a| core::array::from_fn(|b| h[a][b] - dv * lambda * induced.g[a][b]));
    let rho = frobenius(&traceless) / frobenius(&induced.g).max(1.0);
    Ok(UmbilicForm { induced: induced.g, h, lambda, rho })
}

/// Second fundamental data against a given normal (either orientation).
pub fn second_fundamental_with(
    s: &SurfacePatch,
    q: Param,
    m: &WalkerMetric,
    n: &NormalData,
) -> Result<SecondFundamentalData, SurfaceError> {
    let form = umbilic_form(s, q, m, n)?;
    let dv = n.delta.value();
    let h = form.h;
    let j = s.jets(q)?;
    let p = Point::from_coords(j.pos);
    let g3 = m.metric_components(p)?;
    let gamma = christoffel_coord(m, p)?;
    let induced = induced_from(&g3, &j.d);
    let ginv = induced.inverse();
    let v = n.coord.comps;

    // Shape operator from differenced normals (five-point stencil):
    // S(X_a) = -(∂_a V + Γ(X_a, V)).
    let mut lowered = [[0.0; 2]; 2];
    let mut shape_normal_part: f64 = 0.0;
    for a in 0..2 {
        let step = NORMAL_FD_STEP;
        let at = |k: f64| normal_aligned(s, q.shifted(a, k * step), m, n).map(|n| n.coord.comps);
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        let gav = gamma.apply(&j.d[a], &v);
        let sa: [f64; 3] = core::array::from_fn(|k| {
            let dv = (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * step);
            -(dv + gav[k])
        });
        for b in 0..2 {
            lowered[a][b] = contract(&g3, &sa, &j.d[b]);
        }
        let norm = sqrt(euclid_sq(&sa)).max(1.0);
        shape_normal_part = shape_normal_part.max(contract(&g3, &sa, &v).abs() / norm);
    }
    let mut shape = [[0.0; 2]; 2];
    let mut shape_residual: f64 = 0.0;
    for a in 0..2 {
        for c in 0..2 {
            shape[a][c] = (0..2).map(|b| lowered[a][b] * ginv[b][c]).sum();
            shape_residual = shape_residual.max((lowered[a][c] - dv * h[a][c]).abs());
        }
    }
    Ok(SecondFundamentalData {
        normal: *n,
        induced: form.induced,
        h,
        shape,
        lambda: form.lambda,
        rho: form.rho,
        shape_residual,
        shape_normal_part,
    })
}

/// Normal at `q` oriented consistently with a nearby `reference` normal.
pub fn normal_aligned(
    s: &SurfacePatch,
    q: Param,
    m: &WalkerMetric,
    reference: &NormalData,
) -> Result<NormalData, SurfaceError> {
    let n = normal(s, q, m, reference.delta)?;
    // Base points differ slightly, so compare coordinate components directly.
    let dot: f64 = (0..3).map(|k| n.coord.comps[k] * reference.coord.comps[k]).sum();
    Ok(if dot < 0.0 { n.flipped() } else { n })
}

/// Per-point output of [`umbilic_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct UmbilicRecord {
    pub param: Param,
    pub point: Option<Point>,
    pub jets: Option<Jets>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Regular(PointData),
    /// The geometry could not be evaluated here; the reason is kept.
    Degenerate(SurfaceError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointData {
    pub lambda: f64,
    pub rho: f64,
    pub v: [f64; 3],
    pub delta: Sign,
    pub obstruction: f64,
    pub bracket_first: f64,
    pub bracket_second: f64,
    pub shape_residual: f64,
    pub max_abs_h: f64,
}

impl UmbilicRecord {
    pub fn data(&self) -> Option<&PointData> {
        match &self.status {
            PointStatus::Regular(d) => Some(d),
            PointStatus::Degenerate(_) => None,
        }
    }
}

/// Evaluates one scan point; failures become degenerate records.
pub fn scan_point(s: &SurfacePatch, m: &WalkerMetric, delta: Sign, q: Param) -> UmbilicRecord {
    let point = s.point(q).ok();
    let jets = point.and_then(|p| m.jets(p).ok());
    let status = match (point, jets) {
        (Some(_), Some(jets)) => match second_fundamental(s, q, m, delta) {
            Ok(sf) => {
                let state = umbilic::NormalState::unchecked(m.epsilon(), delta, sf.normal.v());
                PointStatus::Regular(PointData {
                    lambda: sf.lambda,
                    rho: sf.rho,
                    v: sf.normal.v(),
                    delta,
                    obstruction: umbilic::obstruction(sf.normal.v(), jets.fxxx),
                    bracket_first: umbilic::bracket_first(&state, &jets, sf.lambda),
                    bracket_second: umbilic::bracket_second(&state, &jets, sf.lambda),
                    shape_residual: sf.shape_residual,
                    max_abs_h: sf.max_abs_h(),
                })
            }
            Err(e) => PointStatus::Degenerate(e),
        },
        _ => PointStatus::Degenerate(match s.point(q).and_then(|p| Ok(m.jets(p)?)) {
            Err(e) => e,
            Ok(_) => SurfaceError::OutsideDomain(q),
        }),
    };
    UmbilicRecord { param: q, point, jets, status }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanVerdict {
    Umbilical,
    NonUmbilical {
        witness: Param,
        rho: f64,
    },
    /// No regular point at all.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSummary {
    pub verdict: ScanVerdict,
    pub max_rho: f64,
    pub max_abs_lambda: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_abs_h: f64,
    pub max_shape_residual: f64,
    pub regular: usize,
    pub degenerate: usize,
}

pub fn summarize(records: &[UmbilicRecord], tol: f64) -> ScanSummary {
    let mut s = ScanSummary {
        verdict: ScanVerdict::Degenerate,
        max_rho: 0.0,
        max_abs_lambda: 0.0,
        lambda_min: f64::INFINITY,
        lambda_max: f64::NEG_INFINITY,
        max_abs_h: 0.0,
        max_shape_residual: 0.0,
        regular: 0,
        degenerate: 0,
    };
    let mut witness = None;
    for r in records {
        match r.data() {
            None => s.degenerate += 1,
            Some(d) => {
                s.regular += 1;
                if d.rho > s.max_rho || witness.is_none() {
                    s.max_rho = s.max_rho.max(d.rho);
                    if d.rho >= s.max_rho {
                        witness = Some(r.param);
                    }
                }
                s.max_abs_lambda = s.max_abs_lambda.max(d.lambda.abs());
                s.lambda_min = s.lambda_min.min(d.lambda);
                s.lambda_max = s.lambda_max.max(d.lambda);
                s.max_abs_h = s.max_abs_h.max(d.max_abs_h);
                s.max_shape_residual = s.max_shape_residual.max(d.shape_residual);
            }
        }
    }
    if let Some(w) = witness {
        s.verdict = if s.max_rho > tol {
            ScanVerdict::NonUmbilical { witness: w, rho: s.max_rho }
        } else {
            ScanVerdict::Umbilical
        };
    }
    s
}

/// Scans a patch over parameter samples.
pub struct UmbilicScan {
    pub records: Vec<UmbilicRecord>,
    pub summary: ScanSummary,
}

pub fn umbilic_scan(s: &SurfacePatch, m: &WalkerMetric, delta: Sign, grid: &[Param], tol: f64) -> UmbilicScan {
    let records: Vec<UmbilicRecord> = grid.iter().map(|&q| scan_point(s, m, delta, q)).collect();
    let summary = summarize(&records, tol);
    UmbilicScan { records, summary }
}
