//! Dirichlet approximation through continued fractions, in exact arithmetic.
//!
//! An `f64` β in [0, 1) is exactly a/2^E. Values below 2^-75 are treated as 0
//! (every denominator up to 2^64 then approximates them by 0/1 within the
//! guarantee); otherwise E ≤ 127 and the whole expansion runs in `u128`.
//! Certificates are re-checked with big rationals before they are returned.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this β is replaced by 0.
const TINY: f64 = 1.0 / (1u128 << 75) as f64;

/// Reduced fraction p/q with q ≥ 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub p: i64,
    pub q: u64,
}

impl Rational {
    pub fn new(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        let g = num_integer::gcd(p.unsigned_abs(), q).max(1);
        Ok(Self {
            p: p / g as i64,
            q: q / g,
        })
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn is_reduced(&self) -> bool {
        num_integer::gcd(self.p.unsigned_abs(), self.q) == 1
    }
}

/// p/q with q ≤ Q_max and |β − p/q| ≤ 1/(q Q_max), checked exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxCertificate {
    pub beta: f64,
    pub q_max: f64,
    /// Reduced, with 0 ≤ p < q (p/q = 1 is stored as 0/1).
    pub rational: Rational,
    /// |β − p/q| measured on the circle.
    pub error: f64,
}

/// β as an exact fraction a/2^e (a < 2^e), or 0.
fn dyadic(beta: f64) -> (u128, u32) {
    if beta < TINY {
        return (0, 0);
    }
    let bits = beta.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    // β = mant · 2^(exp − 1075)
    let mut e = (1075 - exp) as u32;
    let mut a = mant as u128;
    while e > 0 && a % 2 == 0 {
        a /= 2;
        e -= 1;
    }
    (a, e)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("β = {beta} outside [0, 1)")));
    }
    Ok(())
}

fn check_q(q_max: f64) -> Result<u128> {
    if !(q_max >= 1.0 && q_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("Q_max = {q_max} below 1")));
    }
    Ok(q_max.floor().min(2f64.powi(127)) as u128)
}

/// Convergents p_k/q_k of a/2^e (all of them).
fn convergents(a: u128, e: u32) -> Vec<(u128, u128)> {
    let (mut num, mut den) = (a, 1u128 << e);
    let (mut p0, mut q0, mut p1, mut q1) = (1u128, 0u128, 0u128, 1u128);
    let mut out = Vec::new();
    // a₀ = 0 since β < 1
    out.push((p1, q1));
    // invariant: the remaining tail is den/num
    while num != 0 {
        let t = den / num;
        let r = den % num;
        let (p2, q2) = (
            t.saturating_mul(p1).saturating_add(p0),
            t.saturating_mul(q1).saturating_add(q0),
        );
        out.push((p2, q2));
        if q2 == u128::MAX {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        den = num;
        num = r;
    }
    out
}

fn big(x: u128) -> BigInt {
    BigInt::from(x)
}

/// |β − p/q| as an exact rational.
fn exact_error(beta: f64, p: u128, q: u128) -> BigRational {
    let b = BigRational::from_float(beta).expect("finite");
    (b - BigRational::new(big(p), big(q))).abs()
}

/// |β − p/q| ≤ 1/(q Q_max), exactly.
pub fn certificate_holds(beta: f64, q_max: f64, p: i64, q: u64) -> bool {
    if q == 0 || (q as f64) > q_max {
        return false;
    }
    let b = BigRational::from_float(beta).expect("finite");
    let qm = BigRational::from_float(q_max).expect("finite");
    let err = (b - BigRational::new(BigInt::from(p), BigInt::from(q))).abs();
    err * BigRational::from_integer(BigInt::from(q)) * qm <= BigRational::from_integer(BigInt::from(1))
}

fn finish(beta: f64, q_max: f64, p: u128, q: u128) -> Result<ApproxCertificate> {
    let (pi, qi) = (p as i64, q as u64);
    if !certificate_holds(beta, q_max, pi, qi) {
        return Err(Error::Verification {
            k: 0,
            detail: format!("Dirichlet certificate {p}/{q} for β={beta}, Q={q_max}"),
        });
    }
    let error = exact_error(beta, p, q).to_f64().unwrap_or(f64::NAN);
    let rational = Rational::new(pi % qi as i64, qi)?;
    Ok(ApproxCertificate {
        beta,
        q_max,
        rational,
        error,
    })
}

/// The last continued-fraction convergent with q ≤ Q_max.
pub fn dirichlet_approx(beta: f64, q_max: f64) -> Result<ApproxCertificate> {
    check_beta(beta)?;
    let qcap = check_q(q_max)?;
    let (a, e) = dyadic(beta);
    let (p, q) = convergents(a, e)
        .into_iter()
        .take_while(|&(_, q)| q <= qcap)
        .last()
        .expect("0/1 always qualifies");
    finish(beta, q_max, p, q)
}

/// The smallest q (then the p of smallest error) with |β − p/q| ≤ 1/(q Q_max).
///
/// The minimal q is a best approximation of the second kind; candidates are
/// the convergents, and for safety the neighbouring mediants as well.
pub fn smallest_denominator(beta: f64, q_max: f64) -> Result<ApproxCertificate> {
    check_beta(beta)?;
    let qcap = check_q(q_max)?;
    let (a, e) = dyadic(beta);
    let conv = convergents(a, e);
    let mut cands: Vec<u128> = conv.iter().map(|c| c.1).collect();
    for w in conv.windows(2) {
        cands.push(w[1].1 + w[0].1);
        if w[1].1 > w[0].1 {
            cands.push(w[1].1 - w[0].1);
        }
    }
    cands.retain(|&q| q >= 1 && q <= qcap);
    cands.sort_unstable();
    cands.dedup();
    let den = BigRational::from_float(beta).expect("finite");
    for q in cands {
        // nearest numerators to qβ
        let qb = den.clone() * BigRational::from_integer(big(q));
        let fl = qb.floor().to_integer().to_u128().unwrap_or(0);
        let mut best: Option<(BigRational, u128)> = None;
        for p in [fl, fl + 1] {
            if certificate_holds(beta, q_max, p as i64, q as u64) {
                let err = exact_error(beta, p, q);
                if best.as_ref().map_or(true, |(b, _)| err < *b) {
                    best = Some((err, p));
                }
            }
        }
        if let Some((_, p)) = best {
            return finish(beta, q_max, p, q);
        }
    }
    // unreachable by Dirichlet's theorem; keep the convergent route as the fallback
    dirichlet_approx(beta, q_max)
}

/// Brute-force smallest q, for validation at small Q.
pub fn smallest_denominator_brute(beta: f64, q_max: f64) -> Option<(i64, u64)> {
    let qcap = q_max.floor() as u64;
    (1..=qcap).find_map(|q| {
        let fl = (beta * q as f64).floor() as i64;
        [fl - 1, fl, fl + 1, fl + 2]
            .into_iter()
            .filter(|&p| p >= 0 && certificate_holds(beta, q_max, p, q))
            .min_by(|&x, &y| {
                exact_error(beta, x as u128, q as u128).cmp(&exact_error(beta, y as u128, q as u128))
            })
            .map(|p| (p, q))
    })
}
