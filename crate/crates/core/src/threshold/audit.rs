//! Major/minor arc audits, the Cesàro mean and the final transform bound.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::{block_structure, block_sum, chunked_sum, j_of_l, l_range_upto, vj_sum};
use crate::error::{Error, Result};
use crate::families::{MeasureFamily, RhoSpec};
use crate::phase::{circle_dist, e_site, Frequency};
use crate::sum::ComplexSum;
use crate::weyl::{dirichlet_approx, gauss_sum, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// q ≤ N^{2/3}: compare with Λ̂(p/q)·V_j(β − p/q).
    Major,
    /// q > N^{2/3}: the block sum itself is small.
    Minor,
}

/// One row of an audit CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub rho: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub beta: f64,
    pub q: u64,
    pub branch: String,
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
    pub j: Option<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MajorArcReport {
    pub rho: RhoSpec,
    #[serde(rename = "N")]
    pub n: u64,
    pub beta: f64,
    pub epsilon: f64,
    pub p: i64,
    pub q: u64,
    pub branch: Branch,
    pub rows: Vec<AuditRow>,
    /// Empirical constant: the largest ratio.
    pub max_ratio: f64,
}

fn check_n(n: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N = {n} < 2")));
    }
    Ok(())
}

/// Audits the block sums for j > ρ(N^{1−ε}) against N^{−ε/6}L_j (major arc)
/// or N^{−ε/7}L_j (minor arc), with p/q from `dirichlet_approx(β, N^{4/3})`.
pub fn major_arc_audit(rho: &RhoSpec, n: u64, beta: &Frequency, eps: f64) -> Result<MajorArcReport> {
    check_n(n)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} outside (0, 1)")));
    }
    let nf = n as f64;
    let cert = dirichlet_approx(beta.value(), nf.powf(4.0 / 3.0))?;
    let (p, q) = (cert.rational.p, cert.rational.q);
    let branch = if (q as f64) <= nf.powf(2.0 / 3.0) { Branch::Major } else { Branch::Minor };
    let lambda_hat = gauss_sum(&Rational::new(p, q)?);
    let alpha = Frequency::new(beta.value() - p as f64 / q as f64)?;
    let j_lo = rho.eval(nf.powf(1.0 - eps)).floor() as i64 + 1;
    let j_hi = rho.floor_at(n);
    let js: Vec<i64> = (j_lo.max(rho.floor_at(1))..=j_hi).collect();
    let rows = js
        .iter()
        .map(|&j| {
            let l = block_structure(rho, j)?.length;
            let s = block_sum(rho, j, beta)?;
            let (value, bound) = match branch {
                Branch::Major => ((s - lambda_hat * vj_sum(rho, j, &alpha)?).norm(), nf.powf(-eps / 6.0) * l),
                Branch::Minor => (s.norm(), nf.powf(-eps / 7.0) * l),
            };
            Ok(AuditRow {
                rho: rho.descriptor(),
                n,
                beta: beta.value(),
                q,
                branch: format!("{branch:?}").to_lowercase(),
                value,
                bound,
                ratio: value / bound,
                j: Some(j),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(MajorArcReport {
        rho: *rho,
        n,
        beta: beta.value(),
        epsilon: eps,
        p,
        q,
        branch,
        rows,
        max_ratio,
    })
}

/// The Cesàro mean with its bound shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CesaroValue {
    pub value: Complex64,
    /// L_{⌊ρ(N)⌋}/(N‖β‖); `None` at β = 0.
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
}

/// (1/N²) Σ_{j ≤ ⌊ρ(N)⌋} e(jβ) Σ_{l : √l ∈ I_j, l ≤ N²} e(lα), block by block.
pub fn cesaro_expos(rho: &RhoSpec, n: u64, beta: &Frequency, alpha: &Frequency) -> Result<CesaroValue> {
    check_n(n)?;
    let mut acc = ComplexSum::new();
    for j in rho.floor_at(1)..=rho.floor_at(n) {
        let inner = chunked_sum(l_range_upto(rho, j, n)?, |l| e_site(l as i64, alpha));
        acc.add(e_site::<f64>(j, beta) * inner);
    }
    let value = acc.sum() / (n as f64 * n as f64);
    let d = circle_dist(beta.value());
    let bound = (d > 0.0).then(|| last_block_length(rho, n) / (n as f64 * d));
    Ok(CesaroValue {
        value,
        bound,
        ratio: bound.map(|b| value.norm() / b),
    })
}

/// The same mean summed over l = 1..N² in order.
pub fn cesaro_expos_direct(rho: &RhoSpec, n: u64, beta: &Frequency, alpha: &Frequency) -> Result<Complex64> {
    check_n(n)?;
    let n2 = n.checked_mul(n).ok_or(Error::InvalidParameter("N² exceeds 64 bits".into()))?;
    let s = chunked_sum(1..n2 + 1, |l| {
        e_site::<f64>(j_of_l(rho, l), beta) * e_site::<f64>(l as i64, alpha)
    });
    Ok(s / (n as f64 * n as f64))
}

/// L_{⌊ρ(N)⌋}; infinite for a constant ρ.
pub fn last_block_length(rho: &RhoSpec, n: u64) -> f64 {
    block_structure(rho, rho.floor_at(n)).map_or(f64::INFINITY, |b| b.length)
}

/// β = m/size for δ ≤ m/size ≤ 1 − δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid {
    pub size: usize,
    pub delta: f64,
}

impl BetaGrid {
    pub fn new(size: usize, delta: f64) -> Result<Self> {
        if size < 2 || !(0.0..0.5).contains(&delta) {
            return Err(Error::InvalidParameter(format!("β grid size {size}, δ {delta}")));
        }
        Ok(Self { size, delta })
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        let g = self.size as f64;
        (1..self.size).filter(move |&m| {
            let b = m as f64 / g;
            b >= self.delta - 1e-15 && b <= 1.0 - self.delta + 1e-15
        })
    }
}

/// sup over the β grid of |(1 − e(β)) μ̂_N(β)|.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub grid_max: f64,
    pub argmax: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransformAudit {
    pub rho: RhoSpec,
    pub epsilon: f64,
    pub grid: BetaGrid,
    pub rows: Vec<AuditRow>,
    pub max_ratio: f64,
    pub trend: Vec<TrendPoint>,
    pub strictly_decreasing: bool,
}

/// Tabulates |μ̂_N(β)| against N^{−ε/7} + L_{⌊ρ(N)⌋}/(N‖β‖) and the
/// triviality trend in N. β = 0 never appears on the grid.
pub fn transform_bound_audit(rho: &RhoSpec, n_list: &[u64], grid: BetaGrid, eps: f64) -> Result<TransformAudit> {
    for &n in n_list {
        check_n(n)?;
    }
    let family = MeasureFamily::Perturbed { rho: *rho };
    let per_n: Vec<(Vec<AuditRow>, TrendPoint)> = n_list
        .par_iter()
        .map(|&n| {
            let mu = family.measure(n)?;
            let values = mu.fourier_grid(grid.size);
            let nf = n as f64;
            let tail = last_block_length(rho, n);
            let mut rows = Vec::new();
            let mut trend = TrendPoint { n, grid_max: 0.0, argmax: 0.0 };
            for m in grid.indices() {
                let b = m as f64 / grid.size as f64;
                let v = values[m].norm();
                let w = (Complex64::new(1.0, 0.0) - e_site::<f64>(m as i64, &Frequency::ratio(1, grid.size as u64))).norm() * v;
                if w > trend.grid_max {
                    trend = TrendPoint { n, grid_max: w, argmax: b };
                }
                let q = dirichlet_approx(b, nf.powf(4.0 / 3.0))?.rational.q;
                if q == 1 {
                    continue;
                }
                let bound = nf.powf(-eps / 7.0) + tail / (nf * circle_dist(b));
                rows.push(AuditRow {
                    rho: rho.descriptor(),
                    n,
                    beta: b,
                    q,
                    branch: "transform".into(),
                    value: v,
                    bound,
                    ratio: v / bound,
                    j: None,
                });
            }
            Ok((rows, trend))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut trend = Vec::new();
    for (r, t) in per_n {
        rows.extend(r);
        trend.push(t);
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let strictly_decreasing = trend.windows(2).all(|w| w[1].grid_max < w[0].grid_max);
    Ok(TransformAudit {
        rho: *rho,
        epsilon: eps,
        grid,
        rows,
        max_ratio,
        trend,
        strictly_decreasing,
    })
}

/// μ̂_N(β) for μ_N along k² + ⌊ρ(k)⌋.
pub fn transform_at(rho: &RhoSpec, n: u64, beta: &Frequency) -> Result<Complex64> {
    Ok(MeasureFamily::Perturbed { rho: *rho }.measure(n)?.fourier_at(beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter() -> RhoSpec {
        RhoSpec::power(0.25).unwrap()
    }

    #[test]
    fn exact_rational_major_arc() {
        let r = major_arc_audit(&quarter(), 4096, &Frequency::ratio(1, 3), 1.0 / 12.0).unwrap();
        assert_eq!((r.p, r.q, r.branch), (1, 3, Branch::Major));
        assert!(!r.rows.is_empty());
        assert!(r.max_ratio.is_finite());
    }

    #[test]
    fn irrational_audit_completes() {
        let beta = Frequency::new(2f64.sqrt() - 1.0).unwrap();
        let r = major_arc_audit(&quarter(), 4096, &beta, 1.0 / 12.0).unwrap();
        assert!(r.max_ratio.is_finite() && r.max_ratio > 0.0);
    }

    #[test]
    fn cesaro_two_orders_agree() {
        let (b, a) = (Frequency::new(0.3).unwrap(), Frequency::new(0.001).unwrap());
        let block = cesaro_expos(&quarter(), 1024, &b, &a).unwrap();
        let direct = cesaro_expos_direct(&quarter(), 1024, &b, &a).unwrap();
        assert!((block.value - direct).norm() < 1e-9);
        assert!(block.ratio.unwrap().is_finite());
    }

    #[test]
    fn cesaro_at_zero_has_no_bound() {
        let c = cesaro_expos(&quarter(), 64, &Frequency::ratio(0, 1), &Frequency::ratio(0, 1)).unwrap();
        assert!(c.bound.is_none());
        assert!((c.value.re - 1.0).abs() < 1e-12);
        let half = cesaro_expos(&quarter(), 64, &Frequency::ratio(1, 2), &Frequency::ratio(0, 1)).unwrap();
        assert!(half.ratio.unwrap().is_finite());
    }

    #[test]
    fn constant_rho_reduces_to_squares() {
        let v = transform_at(&RhoSpec::constant(0.0).unwrap(), 4096, &Frequency::ratio(1, 4)).unwrap();
        assert!((v.norm() - 0.5f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn small_trend_runs() {
        let a = transform_bound_audit(&quarter(), &[256, 512], BetaGrid::new(64, 0.05).unwrap(), 1.0 / 12.0).unwrap();
        assert_eq!(a.trend.len(), 2);
        assert!(a.rows.iter().all(|r| r.q > 1));
    }
}
