//! Levi-Civita connection and curvature of a Walker metric.
//!
//! Two independent routes are provided for every quantity:
//!
//! * closed-form frame tables ([`connection_frame`], [`curvature_frame`]),
//! * coordinate oracles built from the metric matrix alone
//!   ([`christoffel_coord`], [`riemann_coord_oracle`], [`cotton_oracle`]),
//!   with finite differences wherever a further derivative is needed.
//!
//! Curvature convention: `Rm(X,Y)Z = ∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z`.

use crate::expr::EvalError;
use crate::tolerance::{fd_step, FD_OUTER_STEP};
use crate::walker::{
    coord_to_frame_comps, frame_coords, frame_inner, inverse_metric_matrix, Mat3, Point, Sign, WalkerMetric,
};

pub type Tensor3 = [[[f64; 3]; 3]; 3];
pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

const ZERO3: Tensor3 = [[[0.0; 3]; 3]; 3];
const ZERO4: Tensor4 = [[[[0.0; 3]; 3]; 3]; 3];

/// Christoffel symbols, indexed `gamma[k][i][j] = Γ^k_{ij}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel(pub Tensor3);

impl Christoffel {
    /// `Γ(a, b)^k = Γ^k_{ij} a^i b^j`.
    pub fn apply(&self, a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
        core::array::from_fn(|k| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += self.0[k][i][j] * a[i] * b[j];
                }
            }
            s
        })
    }
}

/// Koszul formula `Γ^k_ij = ½ g^{kl} (∂_i g_lj + ∂_j g_li - ∂_l g_ij)`,
/// with `dg[l] = ∂_l g`.
pub fn koszul(ginv: &Mat3, dg: &[Mat3; 3]) -> Christoffel {
    let mut gamma = ZERO3;
    for (k, gk) in gamma.iter_mut().enumerate() {
        for (i, gki) in gk.iter_mut().enumerate() {
            for (j, gkij) in gki.iter_mut().enumerate() {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[k][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]);
                }
                *gkij = 0.5 * s;
            }
        }
    }
    Christoffel(gamma)
}

/// Christoffel symbols from the coordinate metric and the symbolic
/// partials `f_x`, `f_y` (the only non-constant entry is `g_yy = f`).
pub fn christoffel_coord(m: &WalkerMetric, p: Point) -> Result<Christoffel, EvalError> {
    let f = m.f_at(p)?;
    let (fx, fy) = m.gradient_f(p)?;
    let mut dg = [[[0.0; 3]; 3]; 3];
    dg[1][2][2] = fx;
    dg[2][2][2] = fy;
    Ok(koszul(&inverse_metric_matrix(m.epsilon(), f), &dg))
}

/// `∇̄_{e_i} e_j` in frame components, `entries[i][j]` (0-based frame indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionTable {
    pub at: Point,
    pub entries: Tensor3,
}

impl ConnectionTable {
    /// Largest `|⟨∇_{e_i}e_j, e_k⟩ + ⟨e_j, ∇_{e_i}e_k⟩|`.
    pub fn metric_compatibility_residual(&self, epsilon: Sign) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let ej = unit(j);
                    let ek = unit(k);
                    let r =
                        frame_inner(epsilon, &self.entries[i][j], &ek) + frame_inner(epsilon, &ej, &self.entries[i][k]);
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &ConnectionTable) -> f64 {
        max_diff3(&self.entries, &other.entries)
    }

    /// Largest component that the closed form declares zero: all of
    /// `∇̄_{e1} e_j`, the `e1` part of `∇̄_{e_i} e1` and the `e2, e3` parts of
    /// `∇̄_{e_i} e_j` for `i, j ∈ {2, 3}`.
    pub fn unlisted_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let listed = i != 0 && ((j == 0 && k != 0) || (j != 0 && k == 0));
                    if !listed {
                        worst = worst.max(self.entries[i][j][k].abs());
                    }
                }
            }
        }
        worst
    }
}

fn unit(i: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[i] = 1.0;
    e
}

fn max_diff3(a: &Tensor3, b: &Tensor3) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                worst = worst.max((a[i][j][k] - b[i][j][k]).abs());
            }
        }
    }
    worst
}

/// Closed-form frame connection:
/// `∇̄_{e2}e1 = -∇̄_{e3}e1 = (f_x/4)(e2 + e3)` and
/// `∇̄_{e2}e2 = -∇̄_{e3}e2 = -∇̄_{e2}e3 = ∇̄_{e3}e3 = -(ε f_x/4) e1`.
pub fn connection_frame(m: &WalkerMetric, p: Point) -> Result<ConnectionTable, EvalError> {
    let (fx, _) = m.gradient_f(p)?;
    Ok(connection_from_fx(m.epsilon(), fx, p))
}

pub(crate) fn connection_from_fx(epsilon: Sign, fx: f64, at: Point) -> ConnectionTable {
    let k = fx / 4.0;
    let ek = epsilon.value() * k;
    let mut t = ZERO3;
    t[1][0] = [0.0, k, k];
    t[2][0] = [0.0, -k, -k];
    t[1][1] = [-ek, 0.0, 0.0];
    t[2][1] = [ek, 0.0, 0.0];
    t[1][2] = [ek, 0.0, 0.0];
    t[2][2] = [-ek, 0.0, 0.0];
    ConnectionTable { at, entries: t }
}

/// Directional derivatives of the frame's coordinate coefficients:
/// `out[i][j] = e_i(e_j^k)` as a coordinate vector.
fn frame_coefficient_derivatives(f: f64, fx: f64, fy: f64) -> Tensor3 {
    let e = frame_coords(f);
    let k = 1.0 / (2.0 * core::f64::consts::SQRT_2);
    let mut out = ZERO3;
    for i in 0..3 {
        // e_i(f) = e_i^x f_x + e_i^y f_y; only the ∂t coefficient of e2, e3 varies.
        let df = e[i][1] * fx + e[i][2] * fy;
        out[i][1][0] = -df * k;
        out[i][2][0] = df * k;
    }
    out
}

/// Frame connection assembled from [`christoffel_coord`] and the chain rule
/// through the frame coefficients `(2 ∓ f)/(2√2)`.
pub fn connection_frame_oracle(m: &WalkerMetric, p: Point) -> Result<ConnectionTable, EvalError> {
    let f = m.f_at(p)?;
    let (fx, fy) = m.gradient_f(p)?;
    let gamma = christoffel_coord(m, p)?;
    let e = frame_coords(f);
    let de = frame_coefficient_derivatives(f, fx, fy);
    let mut t = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            let g = gamma.apply(&e[i], &e[j]);
            let coord: [f64; 3] = core::array::from_fn(|k| de[i][j][k] + g[k]);
            t[i][j] = coord_to_frame_comps(coord, f);
        }
    }
    Ok(ConnectionTable { at: p, entries: t })
}

/// Lie brackets `[e_i, e_j]` in frame components, from the coordinate
/// expressions of the frame fields.
pub fn frame_brackets(m: &WalkerMetric, p: Point) -> Result<Tensor3, EvalError> {
    let f = m.f_at(p)?;
    let (fx, fy) = m.gradient_f(p)?;
    let de = frame_coefficient_derivatives(f, fx, fy);
    let mut out = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            let coord: [f64; 3] = core::array::from_fn(|k| de[i][j][k] - de[j][i][k]);
            out[i][j] = coord_to_frame_comps(coord, f);
        }
    }
    Ok(out)
}

/// Largest `|∇_{e_i}e_j - ∇_{e_j}e_i - [e_i,e_j]|` for a connection table.
pub fn torsion_residual(table: &ConnectionTable, brackets: &Tensor3) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let r = table.entries[i][j][k] - table.entries[j][i][k] - brackets[i][j][k];
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

/// `Rm(e_i, e_j) e_k` in frame components, `entries[i][j][k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureTable {
    pub at: Point,
    pub entries: Tensor4,
}

/// Residuals of the algebraic symmetries of `R_abcd = ⟨Rm(e_a,e_b)e_c, e_d⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymmetryResiduals {
    pub antisym_first_pair: f64,
    pub antisym_second_pair: f64,
    pub pair_symmetry: f64,
    pub first_bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisym_first_pair.max(self.antisym_second_pair).max(self.pair_symmetry).max(self.first_bianchi)
    }
}

impl CurvatureTable {
    pub fn lowered(&self, epsilon: Sign) -> Tensor4 {
        let mut r = ZERO4;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        r[a][b][c][d] = frame_inner(epsilon, &self.entries[a][b][c], &unit(d));
                    }
                }
            }
        }
        r
    }

    pub fn symmetry_residuals(&self, epsilon: Sign) -> SymmetryResiduals {
        let r = self.lowered(epsilon);
        let mut s = SymmetryResiduals::default();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        s.antisym_first_pair = s.antisym_first_pair.max((r[a][b][c][d] + r[b][a][c][d]).abs());
                        s.antisym_second_pair = s.antisym_second_pair.max((r[a][b][c][d] + r[a][b][d][c]).abs());
                        s.pair_symmetry = s.pair_symmetry.max((r[a][b][c][d] - r[c][d][a][b]).abs());
                    }
                    for d in 0..3 {
                        let cyc = self.entries[a][b][c][d] + self.entries[b][c][a][d] + self.entries[c][a][b][d];
                        s.first_bianchi = s.first_bianchi.max(cyc.abs());
                    }
                }
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &CurvatureTable) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            worst = worst.max(max_diff3(&self.entries[i], &other.entries[i]));
        }
        worst
    }

    /// Largest component that the closed form declares zero. Populated slots
    /// are `Rm(e1, e_j) e_k` with `j ∈ {2, 3}` and their antisymmetric
    /// partners; within them `k = 1` has only `e2, e3` parts and `k ∈ {2, 3}`
    /// only an `e1` part.
    pub fn unlisted_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let slot = (i == 0) != (j == 0);
                for k in 0..3 {
                    for c in 0..3 {
                        let listed = slot && ((k == 0 && c != 0) || (k != 0 && c == 0));
                        if !listed {
                            worst = worst.max(self.entries[i][j][k][c].abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Closed-form frame curvature:
/// `Rm(e1,e2)e1 = -Rm(e1,e3)e1 = (f_xx/4)(e2 + e3)` and
/// `Rm(e1,e2)e2 = -Rm(e1,e2)e3 = -Rm(e1,e3)e2 = Rm(e1,e3)e3 = -(ε f_xx/4) e1`,
/// extended by antisymmetry in the first pair; `Rm(e2,e3) = 0`.
pub fn curvature_frame(m: &WalkerMetric, p: Point) -> Result<CurvatureTable, EvalError> {
    Ok(curvature_from_fxx(m.epsilon(), m.fxx_at(p)?, p))
}

pub(crate) fn curvature_from_fxx(epsilon: Sign, fxx: f64, at: Point) -> CurvatureTable {
    let q = fxx / 4.0;
    let eq = epsilon.value() * q;
    let mut r = ZERO4;
    r[0][1][0] = [0.0, q, q];
    r[0][2][0] = [0.0, -q, -q];
    r[0][1][1] = [-eq, 0.0, 0.0];
    r[0][1][2] = [eq, 0.0, 0.0];
    r[0][2][1] = [eq, 0.0, 0.0];
    r[0][2][2] = [-eq, 0.0, 0.0];
    for j in 1..3 {
        for k in 0..3 {
            r[j][0][k] = r[0][j][k].map(|c| -c);
        }
    }
    CurvatureTable { at, entries: r }
}

/// Coordinate Riemann tensor, `r[i][j][k][l] = dx^l(Rm(∂_i, ∂_j) ∂_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Riemann(pub Tensor4);

impl Riemann {
    /// `Ric_jk = Σ_i r[i][j][k][i]`.
    pub fn ricci(&self) -> Mat3 {
        core::array::from_fn(|j| core::array::from_fn(|k| (0..3).map(|i| self.0[i][j][k][i]).sum()))
    }

    /// `Rm(a, b) c` for coordinate vectors.
    pub fn apply(&self, a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let w = a[i] * b[j] * c[k];
                    if w != 0.0 {
                        for (l, o) in out.iter_mut().enumerate() {
                            *o += w * self.0[i][j][k][l];
                        }
                    }
                }
            }
        }
        out
    }
}

/// Central-difference derivatives of the Christoffel symbols:
/// `out[a] = ∂_a Γ`.
fn christoffel_derivatives(m: &WalkerMetric, p: Point) -> Result<[Tensor3; 3], EvalError> {
    let c = p.coords();
    let mut out = [ZERO3; 3];
    for (axis, d) in out.iter_mut().enumerate() {
        let h = fd_step(c[axis]);
        let plus = christoffel_coord(m, p.shifted(axis, h))?;
        let minus = christoffel_coord(m, p.shifted(axis, -h))?;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    d[k][i][j] = (plus.0[k][i][j] - minus.0[k][i][j]) / (2.0 * h);
                }
            }
        }
    }
    Ok(out)
}

/// Riemann tensor from Christoffel symbols and their finite-difference
/// derivatives:
/// `R^l_{k i j} = ∂_i Γ^l_{jk} - ∂_j Γ^l_{ik} + Γ^l_{im} Γ^m_{jk} - Γ^l_{jm} Γ^m_{ik}`.
pub fn riemann_coord_oracle(m: &WalkerMetric, p: Point) -> Result<Riemann, EvalError> {
    let g = christoffel_coord(m, p)?.0;
    let dg = christoffel_derivatives(m, p)?;
    let mut r = ZERO4;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut s = dg[i][l][j][k] - dg[j][l][i][k];
                    for mm in 0..3 {
                        s += g[l][i][mm] * g[mm][j][k] - g[l][j][mm] * g[mm][i][k];
                    }
                    r[i][j][k][l] = s;
                }
            }
        }
    }
    Ok(Riemann(r))
}

/// The oracle Riemann tensor re-expressed as a frame table.
pub fn curvature_frame_from_oracle(m: &WalkerMetric, p: Point) -> Result<CurvatureTable, EvalError> {
    let f = m.f_at(p)?;
    let riem = riemann_coord_oracle(m, p)?;
    let e = frame_coords(f);
    let mut t = ZERO4;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                t[a][b][c] = coord_to_frame_comps(riem.apply(&e[a], &e[b], &e[c]), f);
            }
        }
    }
    Ok(CurvatureTable { at: p, entries: t })
}

/// Schouten tensor `P = Ric - (R/4) g` (three dimensions).
fn schouten(m: &WalkerMetric, p: Point) -> Result<Mat3, EvalError> {
    let f = m.f_at(p)?;
    let ric = riemann_coord_oracle(m, p)?.ricci();
    let ginv = inverse_metric_matrix(m.epsilon(), f);
    let g = crate::walker::metric_matrix(m.epsilon(), f);
    let mut scalar = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            scalar += ginv[i][j] * ric[i][j];
        }
    }
    Ok(core::array::from_fn(|i| core::array::from_fn(|j| ric[i][j] - 0.25 * scalar * g[i][j])))
}

/// Cotton tensor `C_ijk = ∇_k P_ij - ∇_j P_ik`, entries `c[i][j][k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cotton(pub Tensor3);

impl Cotton {
    pub fn max_norm(&self) -> f64 {
        self.0.iter().flatten().flatten().fold(0.0, |a: f64, b| a.max(b.abs()))
    }
}

/// Cotton tensor from the oracle Ricci tensor; the covariant derivative of
/// the Schouten tensor uses central differences with step
/// [`FD_OUTER_STEP`]` · (1 + |coordinate|)`.
pub fn cotton_oracle(m: &WalkerMetric, p: Point) -> Result<Cotton, EvalError> {
    let gamma = christoffel_coord(m, p)?.0;
    let centre = schouten(m, p)?;
    let c = p.coords();
    let mut dp = [[[0.0; 3]; 3]; 3];
    for (axis, d) in dp.iter_mut().enumerate() {
        let h = FD_OUTER_STEP * (1.0 + c[axis].abs());
        let plus = schouten(m, p.shifted(axis, h))?;
        let minus = schouten(m, p.shifted(axis, -h))?;
        for i in 0..3 {
            for j in 0..3 {
                d[i][j] = (plus[i][j] - minus[i][j]) / (2.0 * h);
            }
        }
    }
    // nabla[k][i][j] = ∇_k P_ij
    let mut nabla = ZERO3;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = dp[k][i][j];
                for l in 0..3 {
                    s -= gamma[l][k][i] * centre[l][j] + gamma[l][k][j] * centre[i][l];
                }
                nabla[k][i][j] = s;
            }
        }
    }
    let mut out = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j][k] = nabla[k][i][j] - nabla[j][i][k];
            }
        }
    }
    Ok(Cotton(out))
}

/// Outcome of a pointwise scalar test over a sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridVerdict {
    pub holds: bool,
    /// Largest absolute value of the tested quantity.
    pub max_abs: f64,
    /// Where `max_abs` is attained; the witness when `holds` is false.
    pub argmax: Point,
    /// Number of samples within tolerance (the sampled zero set).
    pub within_tol: usize,
    pub total: usize,
}

impl GridVerdict {
    pub fn witness(&self) -> Option<Point> {
        (!self.holds).then_some(self.argmax)
    }
}

fn sweep(
    sample: &[Point],
    tol: f64,
    mut value: impl FnMut(Point) -> Result<f64, EvalError>,
) -> Result<GridVerdict, EvalError> {
    let mut v = GridVerdict {
        holds: true,
        max_abs: 0.0,
        argmax: sample.first().copied().unwrap_or(Point::new(0.0, 0.0, 0.0)),
        within_tol: 0,
        total: sample.len(),
    };
    for &p in sample {
        let a = value(p)?.abs();
        if a <= tol {
            v.within_tol += 1;
        } else {
            v.holds = false;
        }
        if a > v.max_abs {
            v.max_abs = a;
            v.argmax = p;
        }
    }
    Ok(v)
}

/// Flat iff `|f_xx| ≤ tol` on every sample.
pub fn is_flat(m: &WalkerMetric, sample: &[Point], tol: f64) -> Result<GridVerdict, EvalError> {
    sweep(sample, tol, |p| m.fxx_at(p))
}

/// Locally conformally flat iff `|f_xxx| ≤ tol` on every sample, i.e. `f` is
/// quadratic in `x` with coefficients depending on `y`.
pub fn is_locally_conformally_flat(m: &WalkerMetric, sample: &[Point], tol: f64) -> Result<GridVerdict, EvalError> {
    sweep(sample, tol, |p| m.fxxx_at(p))
}
