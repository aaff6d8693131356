//! Rectangular sample grids in the ambient chart and in parameter space.

use alloc::vec::Vec;

use crate::walker::Point;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("axis {axis} has empty range [{lo}, {hi}]")]
    EmptyRange { axis: &'static str, lo: f64, hi: f64 },
    #[error("axis {axis} needs at least 2 samples, got {count}")]
    TooFewSamples { axis: &'static str, count: usize },
}

fn check_axis(axis: &'static str, lo: f64, hi: f64, count: usize) -> Result<(), GridError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(GridError::EmptyRange { axis, lo, hi });
    }
    if count < 2 {
        return Err(GridError::TooFewSamples { axis, count });
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Box `[t0,t1] × [x0,x1] × [y0,y1]` sampled on a regular lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxGrid {
    lo: Point,
    hi: Point,
    counts: [usize; 3],
}

impl BoxGrid {
    /// Default resolution: 3 samples in t, 11 in x and y.
    pub const DEFAULT_COUNTS: [usize; 3] = [3, 11, 11];

    /// `counts` are in `(t, x, y)` order. Zero-volume boxes are rejected.
    pub fn new(lo: Point, hi: Point, counts: [usize; 3]) -> Result<Self, GridError> {
        check_axis("t", lo.t, hi.t, counts[0])?;
        check_axis("x", lo.x, hi.x, counts[1])?;
        check_axis("y", lo.y, hi.y, counts[2])?;
        Ok(BoxGrid { lo, hi, counts })
    }

    pub fn lo(&self) -> Point {
        self.lo
    }

    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    /// Lattice points, t slowest and y fastest.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.counts.iter().product());
        for t in linspace(self.lo.t, self.hi.t, self.counts[0]) {
            for x in linspace(self.lo.x, self.hi.x, self.counts[1]) {
                for y in linspace(self.lo.y, self.hi.y, self.counts[2]) {
                    out.push(Point::new(t, x, y));
                }
            }
        }
        out
    }

    /// Maps unit-cube coordinates `s ∈ [0,1]³` into the box.
    pub fn at_unit(&self, s: [f64; 3]) -> Point {
        let (lo, hi) = (self.lo.coords(), self.hi.coords());
        Point::from_coords(core::array::from_fn(|i| lo[i] + (hi[i] - lo[i]) * s[i]))
    }
}

/// Parameter point `(u, v)` of a surface patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Param {
    pub u: f64,
    pub v: f64,
}

impl Param {
    pub const fn new(u: f64, v: f64) -> Self {
        Param { u, v }
    }

    pub fn shifted(self, axis: usize, h: f64) -> Self {
        match axis {
            0 => Param::new(self.u + h, self.v),
            _ => Param::new(self.u, self.v + h),
        }
    }
}

/// Parameter rectangle `[u0,u1] × [v0,v1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRect {
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl ParamRect {
    pub fn new(u: (f64, f64), v: (f64, f64)) -> Result<Self, GridError> {
        check_axis("u", u.0, u.1, 2)?;
        check_axis("v", v.0, v.1, 2)?;
        Ok(ParamRect { u, v })
    }

    pub fn contains(&self, q: Param, slack: f64) -> bool {
        q.u >= self.u.0 - slack && q.u <= self.u.1 + slack && q.v >= self.v.0 - slack && q.v <= self.v.1 + slack
    }

    /// Lattice of `counts = [nu, nv]` points, u slowest.
    pub fn grid(&self, counts: [usize; 2]) -> Result<Vec<Param>, GridError> {
        check_axis("u", self.u.0, self.u.1, counts[0])?;
        check_axis("v", self.v.0, self.v.1, counts[1])?;
        let mut out = Vec::with_capacity(counts[0] * counts[1]);
        for u in linspace(self.u.0, self.u.1, counts[0]) {
            for v in linspace(self.v.0, self.v.1, counts[1]) {
                out.push(Param::new(u, v));
            }
        }
        Ok(out)
    }
}
