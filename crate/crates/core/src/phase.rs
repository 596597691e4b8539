//! The character e(x) = exp(2πi x) and accurate reduction of `site · γ` mod 1.
//!
//! Sites reach 10¹⁰ and beyond, so a plain `site as f64 * γ` loses most of
//! the fractional part. Products are formed exactly with an FMA error term
//! and reduced afterwards. Rational frequencies m/G are reduced in integer
//! arithmetic instead.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point on the circle ℝ/ℤ, kept in `[0, 1)`.
///
/// When built from a ratio the exact numerator and denominator are retained,
/// and phases against integer sites are reduced without rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    value: f64,
    exact: Option<(i64, u64)>,
}

impl Frequency {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("frequency {gamma}")));
        }
        let mut value = gamma - gamma.floor();
        if value >= 1.0 {
            value = 0.0;
        }
        Ok(Self { value, exact: None })
    }

    /// The frequency `num/den` mod 1, held exactly.
    pub fn ratio(num: i64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let m = (num as i128).rem_euclid(den as i128) as i64;
        Self {
            value: m as f64 / den as f64,
            exact: Some((m, den)),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<(i64, u64)> {
        self.exact
    }

    /// Fractional part of `site · γ`.
    #[inline]
    pub fn phase_of(&self, site: i64) -> f64 {
        match self.exact {
            Some((m, g)) => {
                let r = ((site as i128) * (m as i128)).rem_euclid(g as i128);
                r as f64 / g as f64
            }
            None => frac_mul(site, self.value),
        }
    }

    /// Sum of two frequencies mod 1, exact when both are exact.
    pub fn shifted(&self, other: &Frequency) -> Frequency {
        match (self.exact, other.exact) {
            (Some((a, g)), Some((b, h))) => {
                let den = (g as i128) * (h as i128);
                let num = (a as i128) * (h as i128) + (b as i128) * (g as i128);
                let d = num_integer::gcd(num, den);
                let (num, den) = (num / d, den / d);
                if den <= i64::MAX as i128 {
                    return Frequency::ratio(num as i64, den as u64);
                }
                Frequency::new(self.value + other.value).expect("finite")
            }
            _ => Frequency::new(self.value + other.value).expect("finite"),
        }
    }
}

/// `x mod 1` in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Fractional part of `n · x` computed from the exact product.
#[inline]
pub fn frac_mul(n: i64, x: f64) -> f64 {
    const SPLIT: i64 = 1 << 52;
    if n.unsigned_abs() < SPLIT as u64 {
        let a = n as f64;
        let p = a * x;
        let err = a.mul_add(x, -p);
        frac(frac(p) + err)
    } else {
        // n = hi·2³² + lo with both parts exactly representable
        let hi = n >> 32;
        let lo = n - (hi << 32);
        let scaled = frac_mul(hi, x * 4294967296.0);
        frac(scaled + frac_mul(lo, x))
    }
}

/// e(x) = exp(2πi x), with x reduced to [-1/2, 1/2] first.
#[inline]
pub fn e<T: Real>(x: f64) -> Complex<T> {
    let r = x - x.round();
    let angle = T::of(r) * T::TAU();
    Complex::new(angle.cos(), angle.sin())
}

/// e(num/den) with exact integer reduction of the argument.
#[inline]
pub fn e_ratio<T: Real>(num: i64, den: u64) -> Complex<T> {
    let m = (num as i128).rem_euclid(den as i128);
    let g = den as i128;
    // reduce to the symmetric range before dividing
    let centered = if 2 * m > g { m - g } else { m };
    e(centered as f64 / den as f64)
}

/// e(site · γ).
#[inline]
pub fn e_site<T: Real>(site: i64, gamma: &Frequency) -> Complex<T> {
    match gamma.exact() {
        Some((m, g)) => {
            let r = ((site as i128) * (m as i128)).rem_euclid(g as i128);
            e_ratio(r as i64, g)
        }
        None => e(frac_mul(site, gamma.value())),
    }
}

/// Distance from `x` to the nearest integer, the circle norm ‖x‖.
pub fn circle_dist(x: f64) -> f64 {
    (x - x.round()).abs()
}
