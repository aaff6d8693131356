//! Seeded random draws. Each trial gets its own ChaCha stream so results do
//! not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use walker_core::umbilic::NormalState;
use walker_core::{Point, Sign};

/// Generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sign(rng: &mut impl Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Uniform point in the box `[lo, hi]`.
pub fn point_in(rng: &mut impl Rng, lo: Point, hi: Point) -> Point {
    Point::new(rng.gen_range(lo.t..hi.t), rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y))
}

/// `(v1, v2)` uniform in `[-2, 2]²`, `v3` solved with a random sign;
/// resamples until the radicand is non-negative.
pub fn admissible(rng: &mut impl Rng, eps: Sign, delta: Sign) -> NormalState {
    loop {
        let v1 = rng.gen_range(-2.0..2.0);
        let v2 = rng.gen_range(-2.0..2.0);
        let s3 = sign(rng);
        if let Some(s) = NormalState::complete(eps, delta, v1, v2, s3) {
            return s;
        }
    }
}

/// Admissible state with `|v1| ≥ min_v1`.
pub fn admissible_away_from_v1_zero(rng: &mut impl Rng, eps: Sign, delta: Sign, min_v1: f64) -> NormalState {
    loop {
        let s = admissible(rng, eps, delta);
        if s.v[0].abs() >= min_v1 {
            return s;
        }
    }
}

/// Admissible state with `v3 = 0`; `None` when `ε = 1, δ = -1`, where no
/// such unit normal exists.
pub fn admissible_v3_zero(rng: &mut impl Rng, eps: Sign, delta: Sign) -> Option<NormalState> {
    if eps == Sign::Plus && delta == Sign::Minus {
        return None;
    }
    loop {
        let v1 = rng.gen_range(-2.0..2.0);
        let s2 = sign(rng);
        if let Some(s) = NormalState::with_v3_zero(eps, delta, v1, s2) {
            return Some(s);
        }
    }
}
