#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use walker_core::umbilic::NormalState;
use walker_core::{Point, Sign, WalkerMetric};

/// Metrics used across the oracle checks.
pub const CORPUS: [&str; 5] = ["x^2*y", "exp(x)*sin(y) + x^3*y", "x^3", "3*x + y^2", "2"];

/// Corpus members with vanishing third x-derivative.
pub const LCF_CORPUS: [&str; 3] = ["x^2*y", "3*x + y^2", "2"];

pub fn metric(eps: Sign, f: &str) -> WalkerMetric {
    WalkerMetric::parse(eps, f).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point(rng: &mut impl Rng) -> Point {
    Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn sign(rng: &mut impl Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// `(v1, v2)` uniform in `[-2, 2]²`, `v3` solved with a random sign;
/// resamples until the radicand is non-negative.
pub fn admissible(rng: &mut impl Rng, eps: Sign, delta: Sign) -> NormalState {
    loop {
        let v1 = rng.gen_range(-2.0..2.0);
        let v2 = rng.gen_range(-2.0..2.0);
        if let Some(s) = NormalState::complete(eps, delta, v1, v2, sign(rng)) {
            return s;
        }
    }
}

/// Admissible state with `|v1| ≥ 0.1`.
pub fn admissible_away_from_v1_zero(rng: &mut impl Rng, eps: Sign, delta: Sign) -> NormalState {
    loop {
        let s = admissible(rng, eps, delta);
        if s.v[0].abs() >= 0.1 {
            return s;
        }
    }
}

/// Admissible state with `v3 = 0`, if the signs allow one.
pub fn admissible_v3_zero(rng: &mut impl Rng, eps: Sign, delta: Sign) -> Option<NormalState> {
    if eps == Sign::Plus && delta == Sign::Minus {
        return None;
    }
    loop {
        let v1 = rng.gen_range(-2.0..2.0);
        if let Some(s) = NormalState::with_v3_zero(eps, delta, v1, sign(rng)) {
            return Some(s);
        }
    }
}

pub const SIGNS: [Sign; 2] = [Sign::Plus, Sign::Minus];
