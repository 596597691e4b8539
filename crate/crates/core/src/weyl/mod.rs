//! Quadratic Weyl sums, Gauss sums, rational approximation and the audits of
//! the bound |W_N(β)| ≤ C(1/√q + √(log N)/N^{1/3}).

pub mod dirichlet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dirichlet::{dirichlet_approx, smallest_denominator, ApproxCertificate, Rational};

use crate::error::{Error, Result};
use crate::phase::{e_ratio, e_site, Frequency};
use crate::sum::ComplexSum;

/// Terms per rayon task in long sums; fixed so results do not depend on threads.
const CHUNK: u64 = 1 << 14;

/// W_N(β) = (1/N) Σ_{j=1}^{N} e(j²β).
pub fn weyl_sum(n: u64, beta: &Frequency) -> Complex64 {
    assert!(n >= 1, "N ≥ 1");
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<ComplexSum<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ComplexSum::new();
            for j in c * CHUNK + 1..=((c + 1) * CHUNK).min(n) {
                acc.add(e_site(j as i64 * j as i64, beta));
            }
            acc
        })
        .collect();
    let mut total = ComplexSum::new();
    for p in &parts {
        total.merge(p);
    }
    total.sum() / n as f64
}

/// Λ̂(p/q) = (1/q) Σ_{n=0}^{q−1} e(n² p/q), exactly reduced.
pub fn gauss_sum(r: &Rational) -> Complex64 {
    let q = r.q as i128;
    let mut acc = ComplexSum::new();
    for n in 0..q {
        let k = (n * n % q * (r.p as i128)).rem_euclid(q);
        acc.add(e_ratio(k as i64, r.q));
    }
    acc.sum() / r.q as f64
}

/// 1/√q + √(log N)/N^{1/3}.
pub fn bound_shape(n: u64, q: u64) -> f64 {
    let nf = n as f64;
    1.0 / (q as f64).sqrt() + nf.ln().sqrt() / nf.cbrt()
}

/// One (N, β) of the Weyl bound audit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylAuditRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub beta: f64,
    pub p: i64,
    pub q: u64,
    pub err: f64,
    pub value: f64,
    pub bound_shape: f64,
    pub ratio: f64,
}

/// |W_N(β)| against the bound shape at the Dirichlet denominator for Q = N^{4/3}.
pub fn weyl_bound_audit(n: u64, beta: &Frequency) -> Result<WeylAuditRow> {
    if n < 2 {
        return Err(Error::InvalidParameter("audit needs N ≥ 2".into()));
    }
    let q_max = (n as f64).powf(4.0 / 3.0);
    let cert = dirichlet_approx(beta.value(), q_max)?;
    let value = weyl_sum(n, beta).norm();
    let shape = bound_shape(n, cert.rational.q);
    Ok(WeylAuditRow {
        n,
        beta: beta.value(),
        p: cert.rational.p,
        q: cert.rational.q,
        err: cert.error,
        value,
        bound_shape: shape,
        ratio: value / shape,
    })
}

/// Audit over β = m/G for m = 0..G and each N.
pub fn weyl_audit_sweep(n_list: &[u64], grid: u64) -> Result<Vec<WeylAuditRow>> {
    let cells: Vec<(u64, u64)> = n_list
        .iter()
        .flat_map(|&n| (0..grid).map(move |m| (n, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(n, m)| weyl_bound_audit(n, &Frequency::ratio(m as i64, grid)))
        .collect()
}

/// Max and quantiles of a ratio column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub count: usize,
    pub max: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

pub fn summarize(ratios: impl IntoIterator<Item = f64>) -> RatioSummary {
    let mut v: Vec<f64> = ratios.into_iter().filter(|r| r.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        if v.is_empty() {
            f64::NAN
        } else {
            v[((v.len() - 1) as f64 * p).round() as usize]
        }
    };
    RatioSummary {
        count: v.len(),
        max: v.last().copied().unwrap_or(f64::NAN),
        q50: q(0.5),
        q90: q(0.9),
        q99: q(0.99),
    }
}

/// One step of the escape trace of q_N.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub beta: f64,
    pub p: i64,
    pub q: u64,
    pub min_q_so_far: u64,
}

/// For each N, the smallest denominator approximating β = frac(γ + N^{-1/2})
/// at quality N^{4/3}.
pub fn qn_escape_trace(gamma: f64, n_list: &[u64]) -> Result<Vec<EscapeRow>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("γ = {gamma} outside [0, 1)")));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    let mut min_q = u64::MAX;
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidParameter("N ≥ 1".into()));
        }
        let beta = crate::phase::frac(gamma + 1.0 / (n as f64).sqrt());
        let cert = smallest_denominator(beta, (n as f64).powf(4.0 / 3.0))?;
        min_q = min_q.min(cert.rational.q);
        rows.push(EscapeRow {
            n,
            beta,
            p: cert.rational.p,
            q: cert.rational.q,
            min_q_so_far: min_q,
        });
    }
    Ok(rows)
}
