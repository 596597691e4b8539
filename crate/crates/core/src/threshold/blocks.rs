//! Block coordinates for μ_N = (1/N) Σ_{k≤N} δ_{k²+⌊ρ(k)⌋}.
//!
//! I_j = {x > 0 : ⌊ρ(x)⌋ = j} = [ρ⁻¹(j), ρ⁻¹(j+1)), L_j = |I_j|,
//! φ(j) = (ρ⁻¹(j))². On I_j the perturbation is the constant j, so
//! μ̂_N(β) = (1/N) Σ_j e(jβ) Σ_{k∈I_j, k≤N} e(k²β).

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_integer::Roots;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::RhoSpec;
use crate::phase::{e_site, Frequency};
use crate::sum::ComplexSum;

/// Terms per rayon task.
const CHUNK: u64 = 1 << 15;

/// I_j with its integer points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    pub rho: RhoSpec,
    pub j: i64,
    pub lo: f64,
    /// `f64::INFINITY` for the single block of a constant ρ.
    pub hi: f64,
    pub length: f64,
    /// First integer k ≥ 1 in I_j.
    pub k_start: u64,
    /// One past the last integer; `None` when unbounded.
    pub k_end: Option<u64>,
}

impl BlockStructure {
    pub fn integer_count(&self) -> Option<u64> {
        self.k_end.map(|e| e - self.k_start)
    }

    /// Integers of I_j in [1, n], as a half-open range.
    pub fn integers_upto(&self, n: u64) -> std::ops::Range<u64> {
        let end = self.k_end.map_or(n + 1, |e| e.min(n + 1));
        self.k_start.min(end)..end
    }
}

/// Smallest k ≥ 1 with ⌊ρ(k)⌋ ≥ j, using the exact floor.
pub fn first_k_at_least(rho: &RhoSpec, j: i64) -> Option<u64> {
    if let RhoSpec::Constant(c0) = rho {
        return (c0.floor() as i64 >= j).then_some(1);
    }
    if rho.floor_at(1) >= j {
        return Some(1);
    }
    let guess = rho.inverse(j as f64)?;
    if !(guess < 1.8e19) {
        return None;
    }
    let mut k = (guess.ceil() as u64).max(1);
    while k > 1 && rho.floor_at(k - 1) >= j {
        k -= 1;
    }
    while rho.floor_at(k) < j {
        k += 1;
    }
    Some(k)
}

/// The block I_j.
pub fn block_structure(rho: &RhoSpec, j: i64) -> Result<BlockStructure> {
    let j1 = rho.floor_at(1);
    if j < j1 {
        return Err(Error::Range {
            index: j,
            detail: format!("below ⌊ρ(1)⌋ = {j1}"),
        });
    }
    if let RhoSpec::Constant(c0) = *rho {
        if j != c0.floor() as i64 {
            return Err(Error::Range {
                index: j,
                detail: format!("a constant ρ has the single block j = {}", c0.floor()),
            });
        }
        return Ok(BlockStructure {
            rho: *rho,
            j,
            lo: 0.0,
            hi: f64::INFINITY,
            length: f64::INFINITY,
            k_start: 1,
            k_end: None,
        });
    }
    let lo = rho.inverse(j as f64).unwrap_or(0.0).max(0.0);
    let hi = rho.inverse((j + 1) as f64).filter(|h| h.is_finite()).ok_or(Error::Range {
        index: j,
        detail: "ρ⁻¹(j + 1) is not finite".into(),
    })?;
    let out_of_range = || Error::Range {
        index: j,
        detail: "block beyond 64-bit integers".into(),
    };
    let k_start = first_k_at_least(rho, j).ok_or_else(out_of_range)?;
    let k_end = first_k_at_least(rho, j + 1).ok_or_else(out_of_range)?;
    Ok(BlockStructure {
        rho: *rho,
        j,
        lo,
        hi,
        length: hi - lo,
        k_start,
        k_end: Some(k_end),
    })
}

/// φ(j) = (ρ⁻¹(j))².
pub fn phi_of(rho: &RhoSpec, j: i64) -> Result<f64> {
    block_structure(rho, j)?;
    match rho.inverse(j as f64) {
        Some(x) => Ok(x * x),
        None => Err(Error::Range {
            index: j,
            detail: "ρ⁻¹(j) undefined".into(),
        }),
    }
}

/// Integer m with ρ = x^{1/m}, for exact root arithmetic.
fn root_index(rho: &RhoSpec) -> Option<u32> {
    match *rho {
        RhoSpec::Power(a) => {
            let m = (1.0 / a).round();
            (m >= 1.0 && m <= 30.0 && (1.0 / m - a).abs() <= 1e-15).then_some(m as u32)
        }
        _ => None,
    }
}

/// Integers l ≥ 1 with √l ∈ I_j, i.e. [⌈φ(j)⌉, ⌈φ(j+1)⌉).
pub fn l_range(rho: &RhoSpec, j: i64) -> Result<std::ops::Range<u64>> {
    let b = block_structure(rho, j)?;
    if let Some(m) = root_index(rho) {
        // φ(j) = j^{2m} exactly
        let pw = |x: i64| -> Result<u64> {
            (x.max(0) as u64).checked_pow(2 * m).ok_or(Error::Range {
                index: j,
                detail: "φ(j) exceeds 64 bits".into(),
            })
        };
        return Ok(pw(j)?.max(1)..pw(j + 1)?.max(1));
    }
    let lo = (b.lo * b.lo).ceil().max(1.0);
    let hi = (b.hi * b.hi).ceil().max(1.0);
    if !(hi < 1.8e19) {
        return Err(Error::Range {
            index: j,
            detail: "φ(j + 1) exceeds 64 bits".into(),
        });
    }
    Ok(lo as u64..hi as u64)
}

/// [`l_range`] cut to l ≤ N², which also covers the unbounded constant block.
pub fn l_range_upto(rho: &RhoSpec, j: i64, n: u64) -> Result<std::ops::Range<u64>> {
    let cap = n.checked_mul(n).and_then(|x| x.checked_add(1)).ok_or(Error::Range {
        index: j,
        detail: "N² exceeds 64 bits".into(),
    })?;
    let b = block_structure(rho, j)?;
    if b.k_end.is_none() {
        return Ok(1..cap);
    }
    let r = l_range(rho, j)?;
    Ok(r.start.min(cap)..r.end.min(cap))
}

/// ⌊ρ(√l)⌋, exact for x^{1/m}.
pub fn j_of_l(rho: &RhoSpec, l: u64) -> i64 {
    match root_index(rho) {
        Some(m) => l.nth_root(2 * m) as i64,
        None => rho.eval((l as f64).sqrt()).floor() as i64,
    }
}

/// Σ_{k in range} e(k² β), chunked so the result does not depend on threads.
fn square_phase_sum(range: std::ops::Range<u64>, beta: &Frequency) -> Complex64 {
    chunked_sum(range, |k| e_site((k * k) as i64, beta))
}

pub(crate) fn chunked_sum(
    range: std::ops::Range<u64>,
    term: impl Fn(u64) -> Complex64 + Sync,
) -> Complex64 {
    if range.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let (a, b) = (range.start, range.end);
    let chunks = (b - a).div_ceil(CHUNK);
    let parts: Vec<ComplexSum<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ComplexSum::new();
            for x in a + c * CHUNK..(a + (c + 1) * CHUNK).min(b) {
                acc.add(term(x));
            }
            acc
        })
        .collect();
    let mut total = ComplexSum::new();
    for p in &parts {
        total.merge(p);
    }
    total.sum()
}

/// Σ_{k∈I_j} e(k²β) over the whole block.
pub fn block_sum(rho: &RhoSpec, j: i64, beta: &Frequency) -> Result<Complex64> {
    let b = block_structure(rho, j)?;
    let end = b.k_end.ok_or(Error::Range {
        index: j,
        detail: "unbounded block; use block_sum_upto".into(),
    })?;
    Ok(square_phase_sum(b.k_start..end, beta))
}

/// Σ_{k∈I_j, k≤n} e(k²β).
pub fn block_sum_upto(rho: &RhoSpec, j: i64, beta: &Frequency, n: u64) -> Result<Complex64> {
    let b = block_structure(rho, j)?;
    Ok(square_phase_sum(b.integers_upto(n), beta))
}

/// V_j(α) = Σ_{l : √l ∈ I_j} e(lα)/(2√l).
pub fn vj_sum(rho: &RhoSpec, j: i64, alpha: &Frequency) -> Result<Complex64> {
    let r = l_range(rho, j)?;
    Ok(chunked_sum(r, |l| {
        e_site::<f64>(l as i64, alpha) / (2.0 * (l as f64).sqrt())
    }))
}

/// (1/N) Σ_{j≤⌊ρ(N)⌋} e(jβ) Σ_{k∈I_j, k≤N} e(k²β), block by block.
pub fn blockwise_transform(rho: &RhoSpec, n: u64, beta: &Frequency) -> Result<Complex64> {
    let mut acc = ComplexSum::new();
    for j in rho.floor_at(1)..=rho.floor_at(n) {
        let s = block_sum_upto(rho, j, beta, n)?;
        acc.add(e_site::<f64>(j, beta) * s);
    }
    Ok(acc.sum() / n as f64)
}

/// Σ_j #(I_j ∩ [1, N]); equals N.
pub fn partition_count(rho: &RhoSpec, n: u64) -> Result<u64> {
    let mut total = 0;
    for j in rho.floor_at(1)..=rho.floor_at(n) {
        total += block_structure(rho, j)?.integers_upto(n).count() as u64;
    }
    Ok(total)
}

/// Both sides of Abel summation
/// Σ_{j=0}^{m} (a_{j+1} − a_j) b_j = a_{m+1} b_m − a_0 b_0 + Σ_{j=1}^{m} a_j (b_{j−1} − b_j),
/// for a of length m + 2 and b of length m + 1.
pub fn abel_summation<T>(a: &[T], b: &[T]) -> (T, T)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + num_traits::Zero,
{
    assert!(!b.is_empty() && a.len() == b.len() + 1, "need |a| = |b| + 1");
    let m = b.len() - 1;
    let lhs = (0..=m).fold(T::zero(), |s, j| s + (a[j + 1] - a[j]) * b[j]);
    let rhs = (1..=m).fold(a[m + 1] * b[m] - a[0] * b[0], |s, j| s + a[j] * (b[j - 1] - b[j]));
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn quarter() -> RhoSpec {
        RhoSpec::power(0.25).unwrap()
    }

    #[test]
    fn log_block_one() {
        let rho = RhoSpec::log_scaled(1.0).unwrap();
        let b = block_structure(&rho, 1).unwrap();
        let e = std::f64::consts::E;
        assert!((b.lo - (e - 1.0)).abs() < 1e-12);
        assert!((b.hi - (e * e - 1.0)).abs() < 1e-12);
        assert!((b.length - (e * e - e)).abs() < 1e-12);
        // integers 2..=6
        assert_eq!((b.k_start, b.k_end), (2, Some(7)));
    }

    #[test]
    fn quarter_power_block_two() {
        let b = block_structure(&quarter(), 2).unwrap();
        assert_eq!((b.lo, b.hi, b.length), (16.0, 81.0, 65.0));
        assert_eq!(b.integer_count(), Some(65));
        assert!(block_structure(&quarter(), 0).is_err());
    }

    #[test]
    fn constant_single_block() {
        let rho = RhoSpec::constant(2.5).unwrap();
        let b = block_structure(&rho, 2).unwrap();
        assert_eq!(b.k_start, 1);
        assert_eq!(b.k_end, None);
        assert_eq!(b.integers_upto(10), 1..11);
        assert!(block_structure(&rho, 3).is_err());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_of(&quarter(), 2).unwrap(), 256.0);
        assert_eq!(phi_of(&RhoSpec::power(0.5).unwrap(), 3).unwrap(), 81.0);
        for rho in [quarter(), RhoSpec::log_scaled(1.0).unwrap(), RhoSpec::power(0.3).unwrap()] {
            for j in rho.floor_at(1)..rho.floor_at(1) + 4 {
                let diff = phi_of(&rho, j + 1).unwrap() - phi_of(&rho, j).unwrap();
                let count = l_range(&rho, j).unwrap().count() as f64;
                assert!((diff - count).abs() <= 2.0, "{rho} j={j}");
            }
        }
    }

    #[test]
    fn block_sum_examples() {
        let b = block_structure(&quarter(), 2).unwrap();
        assert_eq!(block_sum(&quarter(), 2, &Frequency::ratio(0, 1)).unwrap().re, 65.0);
        let s = block_sum(&quarter(), 2, &Frequency::ratio(1, 2)).unwrap();
        assert!(s.norm() <= 1.0 + 1e-12);
        let f = Frequency::ratio(1, 4);
        let mut brute = Complex64::new(0.0, 0.0);
        for k in b.k_start..b.k_end.unwrap() {
            brute += Complex64::from_polar(1.0, std::f64::consts::TAU * ((k * k % 4) as f64 / 4.0));
        }
        assert!((block_sum(&quarter(), 2, &f).unwrap() - brute).norm() < 1e-12);
    }

    #[test]
    fn vj_examples() {
        let rho = quarter();
        let v = vj_sum(&rho, 2, &Frequency::ratio(0, 1)).unwrap();
        let l = block_structure(&rho, 2).unwrap().length;
        assert!((v.re - l).abs() <= 0.1 * l);
        let a = Frequency::new(0.3).unwrap();
        let mut brute = Complex64::new(0.0, 0.0);
        for l in 256u64..6561 {
            brute += Complex64::from_polar(1.0, std::f64::consts::TAU * (l as f64 * 0.3).fract())
                / (2.0 * (l as f64).sqrt());
        }
        assert!((vj_sum(&rho, 2, &a).unwrap() - brute).norm() < 1e-9);
    }

    #[test]
    fn partition_is_exact() {
        for rho in [quarter(), RhoSpec::log_scaled(1.0).unwrap(), RhoSpec::constant(0.0).unwrap(), RhoSpec::log_power(2.0).unwrap()] {
            for n in [1u64, 2, 17, 1000, 4097] {
                assert_eq!(partition_count(&rho, n).unwrap(), n, "{rho} N={n}");
            }
        }
    }

    #[test]
    fn abel_identity_exact() {
        let a: Vec<Complex<i64>> = (0..7).map(|i| Complex::new(i * i - 3, 2 - i)).collect();
        let b: Vec<Complex<i64>> = (0..6).map(|i| Complex::new(5 - 2 * i, i * 3)).collect();
        let (l, r) = abel_summation(&a, &b);
        assert_eq!(l, r);
    }

    #[test]
    fn l_and_j_agree() {
        let rho = quarter();
        for j in 1..4 {
            for l in l_range(&rho, j).unwrap().step_by(97) {
                assert_eq!(j_of_l(&rho, l), j);
            }
        }
    }
}
