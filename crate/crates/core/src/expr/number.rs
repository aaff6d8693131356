use core::fmt;

/// Numeric literal carried by an expression tree.
///
/// Literals stay exact rationals while the arithmetic fits in `i64`; anything
/// that overflows, or any irrational constant produced by folding, falls back
/// to a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Rational { num: i64, den: i64 },
    Float(f64),
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Number {
    pub const ZERO: Number = Number::Rational { num: 0, den: 1 };
    pub const ONE: Number = Number::Rational { num: 1, den: 1 };

    pub fn int(n: i64) -> Self {
        Number::Rational { num: n, den: 1 }
    }

    /// Builds a normalized rational; `None` if `den == 0` or normalization overflows.
    pub fn rational(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den).max(1);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = n.checked_neg()?;
            d = d.checked_neg()?;
        }
        Some(Number::Rational { num: n, den: d })
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Number::Rational { num, den } => num as f64 / den as f64,
            Number::Float(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        self.to_f64() == 0.0
    }

    pub fn is_one(self) -> bool {
        match self {
            Number::Rational { num, den } => num == 1 && den == 1,
            Number::Float(x) => x == 1.0,
        }
    }

    fn exact(self) -> Option<(i64, i64)> {
        match self {
            Number::Rational { num, den } => Some((num, den)),
            Number::Float(_) => None,
        }
    }

    /// Division; `None` when `rhs` is zero.
    pub fn checked_div(self, rhs: Number) -> Option<Number> {
        if rhs.is_zero() {
            return None;
        }
        if let (Some((a, b)), Some((c, d))) = (self.exact(), rhs.exact()) {
            if let Some(r) = a.checked_mul(d).zip(b.checked_mul(c)).and_then(|(n, d)| Number::rational(n, d)) {
                return Some(r);
            }
        }
        Some(Number::Float(self.to_f64() / rhs.to_f64()))
    }

    /// Integer power; `None` for a negative power of zero.
    pub fn powi(self, exp: i32) -> Option<Number> {
        if exp < 0 {
            return Number::ONE.checked_div(self.powi(exp.checked_neg()?)?);
        }
        let mut acc = Number::ONE;
        let mut base = self;
        let mut e = exp as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        Some(acc)
    }

    /// Parses an unsigned decimal literal (`12`, `0.25`, `3e-4`, `1.5E+2`).
    ///
    /// Short literals become exact rationals, the rest floats.
    pub fn parse_literal(text: &str) -> Option<Number> {
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let exact = (|| {
            let digits = int_part.len() + frac_part.len();
            if digits > 18 {
                return None;
            }
            let mut n: i64 = 0;
            for b in int_part.bytes().chain(frac_part.bytes()) {
                n = n * 10 + i64::from(b - b'0');
            }
            let scale = exponent - frac_part.len() as i32;
            let ten = Number::int(10);
            if scale >= 0 {
                let p = ten.powi(scale)?;
                match p {
                    Number::Rational { .. } => Some(Number::int(n) * p),
                    Number::Float(_) => None,
                }
            } else {
                let p = ten.powi(-scale)?;
                match p {
                    Number::Rational { num, .. } => Number::rational(n, num),
                    Number::Float(_) => None,
                }
            }
        })();
        match exact {
            Some(r @ Number::Rational { .. }) => Some(r),
            _ => text.parse::<f64>().ok().map(Number::Float),
        }
    }
}

impl core::ops::Add for Number {
    type Output = Number;

    fn add(self, rhs: Number) -> Number {
        if let (Some((a, b)), Some((c, d))) = (self.exact(), rhs.exact()) {
            let n = a.checked_mul(d).zip(c.checked_mul(b));
            let n = n.and_then(|(x, y)| x.checked_add(y));
            if let Some(r) = n.zip(b.checked_mul(d)).and_then(|(n, d)| Number::rational(n, d)) {
                return r;
            }
        }
        Number::Float(self.to_f64() + rhs.to_f64())
    }
}

impl core::ops::Sub for Number {
    type Output = Number;

    fn sub(self, rhs: Number) -> Number {
        self + -rhs
    }
}

impl core::ops::Mul for Number {
    type Output = Number;

    fn mul(self, rhs: Number) -> Number {
        if let (Some((a, b)), Some((c, d))) = (self.exact(), rhs.exact()) {
            if let Some(r) = a.checked_mul(c).zip(b.checked_mul(d)).and_then(|(n, d)| Number::rational(n, d)) {
                return r;
            }
        }
        Number::Float(self.to_f64() * rhs.to_f64())
    }
}

impl core::ops::Neg for Number {
    type Output = Number;

    fn neg(self) -> Number {
        match self {
            Number::Rational { num, den } => match num.checked_neg() {
                Some(n) => Number::Rational { num: n, den },
                None => Number::Float(-(num as f64) / den as f64),
            },
            Number::Float(x) => Number::Float(-x),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Number::Rational { num, den: 1 } => write!(f, "{num}"),
            Number::Rational { num, den } => write!(f, "({num}/{den})"),
            Number::Float(x) => write!(f, "{x:?}"),
        }
    }
}
