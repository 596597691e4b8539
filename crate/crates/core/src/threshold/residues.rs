//! Residue densities of k² + ⌊ρ(k)⌋ modulo odd squarefree Q.
//!
//! The limit residue r_Q is replaced by the largest class of ⌊ρ(N/2)⌋ mod Q
//! over the supplied N; this is a finite surrogate, not the limit.

use std::collections::BTreeSet;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::RhoSpec;

const CHUNK: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueRow {
    /// Quadratic residue a (including 0).
    pub a: u64,
    /// a + r_Q mod Q.
    pub residue: u64,
    pub count: u64,
    pub density: f64,
    /// #{x mod Q : x² ≡ a}/Q.
    pub square_density: f64,
    pub unit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueProfile {
    pub rho: RhoSpec,
    #[serde(rename = "Q")]
    pub q: u64,
    #[serde(rename = "r_Q")]
    pub r_q: u64,
    /// (N, ⌊ρ(N/2)⌋ mod Q) for every supplied N.
    pub limits: Vec<(u64, u64)>,
    /// Whether the residue is constant over the trailing window of the N list.
    pub tail_constant: bool,
    pub class: Vec<u64>,
    /// The largest N of the class; densities are counted up to it.
    pub n_used: u64,
    #[serde(rename = "Lambda_Q")]
    pub lambda_q: Vec<u64>,
    /// Π (p + 1)/2 over p | Q.
    pub lambda_q_expected: u64,
    /// Density of every residue class mod Q.
    pub densities: Vec<f64>,
    pub rows: Vec<ResidueRow>,
    pub fitted_c: f64,
    /// 1/(3C|Λ_Q|); `None` when C = 0.
    pub bound: Option<f64>,
    /// Over quadratic residues a coprime to Q.
    pub min_unit_density: f64,
    pub min_hit_density: f64,
}

impl ResidueProfile {
    pub fn bound_holds(&self) -> Option<bool> {
        self.bound.map(|b| self.min_unit_density >= b)
    }
}

/// Prime factors of an odd squarefree Q ≥ 3.
pub fn odd_squarefree_primes(q: u64) -> Result<Vec<u64>> {
    let reject = |why: &str| Err(Error::InvalidParameter(format!("Q = {q}: {why}")));
    if q < 3 {
        return reject("need Q ≥ 3");
    }
    if q % 2 == 0 {
        return reject("even modulus");
    }
    let mut primes = Vec::new();
    let mut rest = q;
    let mut p = 3;
    while p * p <= rest {
        if rest % p == 0 {
            rest /= p;
            if rest % p == 0 {
                return reject("not squarefree");
            }
            primes.push(p);
        }
        p += 2;
    }
    if rest > 1 {
        primes.push(rest);
    }
    Ok(primes)
}

/// Counts of j² + ⌊ρ(j)⌋ mod Q over 1 ≤ j ≤ n.
pub fn residue_counts(rho: &RhoSpec, q: u64, n: u64) -> Vec<u64> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; q as usize];
            for j in c * CHUNK + 1..=((c + 1) * CHUNK).min(n) {
                let s = ((j % q) * (j % q) % q) as i64 + rho.floor_at(j);
                counts[s.rem_euclid(q as i64) as usize] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; q as usize],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

fn floor_rho_half(rho: &RhoSpec, n: u64) -> i64 {
    if n % 2 == 0 {
        rho.floor_at(n / 2)
    } else {
        rho.eval(n as f64 / 2.0).floor() as i64
    }
}

pub fn residue_density(rho: &RhoSpec, q: u64, n_list: &[u64], window: f64) -> Result<ResidueProfile> {
    let primes = odd_squarefree_primes(q)?;
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::InvalidParameter("N list must be nonempty and positive".into()));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter(format!("window {window} outside (0, 1]")));
    }
    let limits: Vec<(u64, u64)> = n_list
        .iter()
        .map(|&n| (n, floor_rho_half(rho, n).rem_euclid(q as i64) as u64))
        .collect();
    let tail_len = ((window * limits.len() as f64).ceil() as usize).clamp(1, limits.len());
    let tail = &limits[limits.len() - tail_len..];
    let tail_constant = tail.iter().all(|&(_, r)| r == tail[0].1);

    let mut class_sizes = vec![0usize; q as usize];
    for &(_, r) in &limits {
        class_sizes[r as usize] += 1;
    }
    let r_q = (0..q).max_by_key(|&r| (class_sizes[r as usize], std::cmp::Reverse(r))).unwrap();
    let class: Vec<u64> = limits.iter().filter(|l| l.1 == r_q).map(|l| l.0).collect();
    let n_used = *class.iter().max().unwrap();

    let mut roots = vec![0u64; q as usize];
    for x in 0..q {
        roots[(x * x % q) as usize] += 1;
    }
    let squares: Vec<u64> = (0..q).filter(|&a| roots[a as usize] > 0).collect();
    let lambda_q: Vec<u64> = squares.iter().map(|&a| (a + r_q) % q).collect::<BTreeSet<_>>().into_iter().collect();
    let lambda_q_expected = primes.iter().map(|p| (p + 1) / 2).product();

    let counts = residue_counts(rho, q, n_used);
    let densities: Vec<f64> = counts.iter().map(|&c| c as f64 / n_used as f64).collect();
    let rows: Vec<ResidueRow> = squares
        .iter()
        .map(|&a| {
            let residue = (a + r_q) % q;
            ResidueRow {
                a,
                residue,
                count: counts[residue as usize],
                density: densities[residue as usize],
                square_density: roots[a as usize] as f64 / q as f64,
                unit: a.gcd(&q) == 1,
            }
        })
        .collect();
    let fitted_c = rho.fitted_c(n_used as f64);
    let bound = (fitted_c > 0.0).then(|| 1.0 / (3.0 * fitted_c * lambda_q.len() as f64));
    let min_of = |f: &dyn Fn(&ResidueRow) -> bool| rows.iter().filter(|r| f(r)).map(|r| r.density).fold(f64::INFINITY, f64::min);
    let min_unit_density = min_of(&|r| r.unit);
    let min_hit_density = min_of(&|r| r.count > 0);
    Ok(ResidueProfile {
        rho: *rho,
        q,
        r_q,
        limits,
        tail_constant,
        class,
        n_used,
        lambda_q,
        lambda_q_expected,
        densities,
        rows,
        fitted_c,
        bound,
        min_unit_density,
        min_hit_density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::e_ratio;
    use crate::weyl::{gauss_sum, Rational};
    use num_complex::Complex64;

    #[test]
    fn rejects_bad_moduli() {
        let rho = RhoSpec::constant(0.0).unwrap();
        for q in [1, 2, 12, 45, 9] {
            assert!(residue_density(&rho, q, &[100], 0.5).is_err(), "Q={q}");
        }
    }

    #[test]
    fn constant_zero_matches_full_period() {
        let rho = RhoSpec::constant(0.0).unwrap();
        let p = residue_density(&rho, 15, &[15 * 1000], 0.5).unwrap();
        assert_eq!(p.r_q, 0);
        assert_eq!(p.lambda_q.len() as u64, p.lambda_q_expected);
        assert!((p.densities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for r in &p.rows {
            let brute = (0..15u64).filter(|x| x * x % 15 == r.a).count() as f64 / 15.0;
            assert!((r.density - brute).abs() < 1e-12);
        }
        assert!(p.bound.is_none());
    }

    #[test]
    fn lambda_size_formula() {
        for q in [3u64, 5, 15, 21, 105, 1155] {
            let primes = odd_squarefree_primes(q).unwrap();
            let squares: BTreeSet<u64> = (0..q).map(|x| x * x % q).collect();
            assert_eq!(squares.len() as u64, primes.iter().map(|p| (p + 1) / 2).product::<u64>());
        }
    }

    #[test]
    fn root_counts_from_gauss_sums() {
        // #{x : x² ≡ a} = Σ_t e(−ta/Q) Λ̂(t/Q)
        let q = 105u64;
        let lambda: Vec<Complex64> = (0..q).map(|t| gauss_sum(&Rational::new(t as i64, q).unwrap())).collect();
        for a in 0..q {
            let mut s = Complex64::new(0.0, 0.0);
            for t in 0..q {
                s += e_ratio::<f64>(-((t * a % q) as i64), q) * lambda[t as usize];
            }
            let brute = (0..q).filter(|x| x * x % q == a).count() as f64;
            assert!((s.re - brute).abs() < 1e-9 && s.im.abs() < 1e-9, "a={a}");
        }
    }

    #[test]
    fn quarter_power_does_not_settle() {
        let rho = RhoSpec::power(0.25).unwrap();
        let ns: Vec<u64> = (0..40).map(|i| 20_000 + i * 50_000).collect();
        let p = residue_density(&rho, 15, &ns, 0.5).unwrap();
        assert!(!p.tail_constant);
    }
}
