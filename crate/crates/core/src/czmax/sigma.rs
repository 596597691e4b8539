//! The comparison averages σ = uniform probability on {1, …, 2^{S+n}} and the
//! deficit γ ↦ μ̂(γ)(1 − σ̂(γ)).
//!
//! Since |1 − σ̂_M(γ)| ≤ (1/M) Σ_{j≤M} |1 − e(jγ)| ≤ M |1 − e(γ)|, the
//! deficit is at most 2^{S+n} times the triviality functional.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::WeightedMeasure;
use crate::phase::{e_ratio, e_site, Frequency};
use crate::scalar::Real;
use crate::supnorm::{sup_bracket, SupBracket, SupLimits, TrigPoly, TrivialityPoly};

/// Largest exponent S + n for which σ is materialized.
pub const SIGMA_MAX_EXP: u32 = 24;

/// Largest exponent S + n for which σ̂ is used in a bracket.
pub const DEFICIT_MAX_EXP: u32 = 40;

fn checked_len(s_prev: u32, n: u32, cap: u32) -> Result<u64> {
    let e = s_prev as u64 + n as u64;
    if e > cap as u64 {
        return Err(Error::Resource {
            what: "sigma support exponent",
            requested: e,
            cap: cap as u64,
        });
    }
    Ok(1u64 << e)
}

/// Uniform probability measure on {1, …, 2^{s_prev + n}}.
pub fn sigma_n(s_prev: u32, n: u32) -> Result<WeightedMeasure<f64>> {
    let m = checked_len(s_prev, n, SIGMA_MAX_EXP)?;
    Ok(WeightedMeasure::uniform_on(1..=m as i64))
}

/// σ̂_M(γ) = (1/M) Σ_{j=1}^{M} e(jγ) in closed form,
/// e((M+1)γ/2) sin(πMγ) / (M sin(πγ)).
pub fn sigma_hat<T: Real>(m: u64, gamma: &Frequency) -> Complex<T> {
    let half = match gamma.exact() {
        Some((a, g)) if g <= (i64::MAX as u64) / 2 => Frequency::ratio(a, 2 * g),
        _ => Frequency::new(gamma.value() / 2.0).expect("finite"),
    };
    if gamma.value() == 0.0 {
        return Complex::new(T::one(), T::zero());
    }
    let rot: Complex<T> = e_site(m as i64 + 1, &half);
    let num = e_site::<T>(m as i64, &half).im;
    let den = e_site::<T>(1, &half).im;
    rot * (num / (T::of(m as f64) * den))
}

/// γ ↦ μ̂(γ)(1 − σ̂_M(γ)), a trigonometric polynomial on [lo, hi + M].
pub struct DeficitPoly<'a, T> {
    mu: &'a WeightedMeasure<T>,
    m: u64,
}

impl<'a, T: Real> DeficitPoly<'a, T> {
    pub fn new(mu: &'a WeightedMeasure<T>, m: u64) -> Self {
        Self { mu, m }
    }
}

impl<T: Real> TrigPoly<T> for DeficitPoly<'_, T> {
    fn band(&self) -> Option<(i64, i64)> {
        let (lo, hi) = self.mu.support_span()?;
        Some((lo, hi + self.m as i64))
    }

    fn eval(&self, gamma: f64) -> Complex<T> {
        let g = Frequency::new(gamma).expect("finite");
        let one = Complex::new(T::one(), T::zero());
        self.mu.fourier_at(&g) * (one - sigma_hat::<T>(self.m, &g))
    }

    fn eval_grid(&self, g: usize) -> Vec<Complex<T>> {
        let one = Complex::new(T::one(), T::zero());
        let mu = self.mu.fourier_grid(g);
        let m = self.m as i128;
        let gg = g as i128;
        mu.into_iter()
            .enumerate()
            .map(|(k, z)| {
                if k == 0 {
                    return Complex::new(T::zero(), T::zero());
                }
                let k = k as i128;
                // exact reductions of (M+1)k/(2G), Mk/(2G), k/(2G)
                let rot: Complex<T> = e_ratio(((m + 1) * k).rem_euclid(2 * gg) as i64, 2 * g as u64);
                let num = e_ratio::<T>((m * k).rem_euclid(2 * gg) as i64, 2 * g as u64).im;
                let den = e_ratio::<T>(k as i64, 2 * g as u64).im;
                let s = rot * (num / (T::of(self.m as f64) * den));
                z * (one - s)
            })
            .collect()
    }

    fn coeff_l1(&self) -> f64 {
        2.0 * self.mu.total_variation().to64()
    }

    fn moment_l1(&self, center: f64) -> f64 {
        match self.band() {
            Some((lo, hi)) => {
                let reach = (lo as f64 - center).abs().max((hi as f64 - center).abs());
                2.0 * self.mu.total_variation().to64() * reach
            }
            None => 0.0,
        }
    }

    fn eval_cost(&self) -> u64 {
        self.mu.len() as u64 + 4
    }
}

/// The deficit bracket next to the bound it should satisfy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub s_prev: u32,
    pub n: u32,
    /// sup_γ |μ̂(1 − σ̂)|.
    pub deficit: SupBracket<f64>,
    /// sup_γ |(1 − e(γ))μ̂|.
    pub triviality: SupBracket<f64>,
    /// 2^{S+n} · triviality.upper.
    pub chain_bound: f64,
    /// 2^{−S−n}.
    pub target: f64,
    pub tol: f64,
    /// deficit.upper ≤ chain_bound + tol.
    pub first_link: bool,
    /// chain_bound ≤ target.
    pub second_link: bool,
}

/// Rigorous bracket of sup |μ̂(1 − σ̂)| with σ uniform on {1..2^{s_prev+n}}.
pub fn sigma_deficit_sup(
    mu: &WeightedMeasure<f64>,
    s_prev: u32,
    n: u32,
    tol: f64,
) -> Result<DeficitReport> {
    sigma_deficit_sup_with(mu, s_prev, n, tol, &SupLimits::default())
}

pub fn sigma_deficit_sup_with(
    mu: &WeightedMeasure<f64>,
    s_prev: u32,
    n: u32,
    tol: f64,
    limits: &SupLimits,
) -> Result<DeficitReport> {
    let m = checked_len(s_prev, n, DEFICIT_MAX_EXP)?;
    let deficit = sup_bracket(&DeficitPoly::new(mu, m), tol, limits)?;
    let triviality = sup_bracket(&TrivialityPoly::new(mu), tol, limits)?;
    let scale = (s_prev as f64 + n as f64).exp2();
    let chain_bound = scale * triviality.upper;
    let target = 1.0 / scale;
    Ok(DeficitReport {
        s_prev,
        n,
        deficit,
        triviality,
        chain_bound,
        target,
        tol,
        first_link: deficit.upper <= chain_bound + tol,
        second_link: chain_bound <= target,
    })
}
