//! Discrete Calderón–Zygmund decomposition on ℤ over dyadic intervals
//! Q_{s,k} = [k·2^s, (k+1)·2^s).
//!
//! Given φ and λ > 0, ℬ is the set of maximal dyadic intervals on which the
//! average of |φ| exceeds λ. Then φ = g + Σ_{Q∈ℬ} b_Q with b_Q = (φ − φ_Q)·1_Q,
//! φ_Q the mean of φ over Q, and g = φ off ⋃ℬ, g = φ_Q on each Q.
//!
//! Since single points cannot be split, the guaranteed constants are
//! ‖g‖_∞ ≤ 2λ and Σ|b_Q| ≤ 4λ|Q|; whether the sharper ‖g‖_∞ ≤ λ and
//! Σ|b_Q| ≤ λ|Q| hold is reported separately.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::WeightedMeasure;
use crate::scalar::Exact;

/// Largest dyadic scale handled; intervals of length 2^62 still fit in i64.
pub const MAX_SCALE: u32 = 62;

/// Q_{s,k} = [k·2^s, (k+1)·2^s) ∩ ℤ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub s: u32,
    pub k: i64,
}

impl DyadicInterval {
    /// The interval of scale `s` containing `x`.
    pub fn containing(x: i64, s: u32) -> Self {
        assert!(s <= MAX_SCALE);
        // arithmetic shift is floor division by 2^s
        Self { s, k: x >> s }
    }

    pub fn start(&self) -> i64 {
        self.k << self.s
    }

    /// One past the last point, as i128 so the top interval cannot overflow.
    pub fn end(&self) -> i128 {
        ((self.k as i128) + 1) << self.s
    }

    pub fn len(&self) -> u64 {
        1u64 << self.s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: i64) -> bool {
        x >> self.s == self.k
    }

    pub fn parent(&self) -> Self {
        Self {
            s: self.s + 1,
            k: self.k >> 1,
        }
    }

    /// Q ⊆ other.
    pub fn is_within(&self, other: &Self) -> bool {
        self.s <= other.s && (self.k >> (other.s - self.s)) == other.k
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.is_within(other) || other.is_within(self)
    }
}

/// Finitely supported real function with sorted, distinct, nonzero entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal<S> {
    entries: Vec<(i64, S)>,
}

impl<S: Exact> SparseSignal<S> {
    /// Duplicate positions are summed; zeros dropped.
    pub fn new<I: IntoIterator<Item = (i64, S)>>(entries: I) -> Self {
        let mut v: Vec<(i64, S)> = entries.into_iter().collect();
        v.sort_by_key(|e| e.0);
        let mut out: Vec<(i64, S)> = Vec::with_capacity(v.len());
        for (x, val) in v {
            match out.last_mut() {
                Some((y, acc)) if *y == x => *acc = acc.clone() + val,
                _ => out.push((x, val)),
            }
        }
        out.retain(|e| !e.1.is_zero());
        Self { entries: out }
    }

    pub fn entries(&self) -> &[(i64, S)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: i64) -> S {
        match self.entries.binary_search_by_key(&x, |e| e.0) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => S::zero(),
        }
    }

    pub fn l1_norm(&self) -> S {
        self.entries.iter().fold(S::zero(), |a, e| a + e.1.abs())
    }

    pub fn sup_norm(&self) -> S {
        self.entries
            .iter()
            .map(|e| e.1.abs())
            .fold(S::zero(), |a, b| if b > a { b } else { a })
    }

    /// Entries with position in `[lo, hi)`.
    pub fn range(&self, lo: i64, hi: i128) -> &[(i64, S)] {
        let a = self.entries.partition_point(|e| e.0 < lo);
        let b = self.entries.partition_point(|e| (e.0 as i128) < hi);
        &self.entries[a..b]
    }

    pub fn to_measure(&self) -> WeightedMeasure<f64> {
        WeightedMeasure::from_real(
            self.entries
                .iter()
                .map(|(x, v)| (*x, v.to_f64().unwrap_or(f64::NAN))),
        )
        .expect("finite values")
    }
}

/// b_Q = (φ − φ_Q)·1_Q, stored implicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadPiece<S> {
    pub interval: DyadicInterval,
    /// φ_Q, the mean of φ over Q.
    pub mean: S,
    /// The nonzero values of φ on Q.
    pub atoms: Vec<(i64, S)>,
}

impl<S: Exact> BadPiece<S> {
    pub fn value_at(&self, x: i64) -> S {
        if !self.interval.contains(x) {
            return S::zero();
        }
        let phi = match self.atoms.binary_search_by_key(&x, |e| e.0) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => S::zero(),
        };
        phi - self.mean.clone()
    }

    fn len_scalar(&self) -> S {
        S::from_u64(self.interval.len()).expect("interval length fits the scalar")
    }

    /// Σ_x b(x); exactly zero in exact arithmetic.
    pub fn sum(&self) -> S {
        let total = self.atoms.iter().fold(S::zero(), |a, e| a + e.1.clone());
        total - self.mean.clone() * self.len_scalar()
    }

    /// Σ_x |b(x)|.
    pub fn l1_norm(&self) -> S {
        let on_atoms = self
            .atoms
            .iter()
            .fold(S::zero(), |a, e| a + (e.1.clone() - self.mean.clone()).abs());
        let empty = S::from_u64(self.interval.len() - self.atoms.len() as u64).expect("fits");
        on_atoms + empty * self.mean.abs()
    }

    /// Σ_x |b(x)|².
    pub fn l2_norm_sq(&self) -> S {
        let on_atoms = self.atoms.iter().fold(S::zero(), |a, e| {
            let d = e.1.clone() - self.mean.clone();
            a + d.clone() * d
        });
        let empty = S::from_u64(self.interval.len() - self.atoms.len() as u64).expect("fits");
        on_atoms + empty * self.mean.clone() * self.mean.clone()
    }

    /// Σ_{x∈Q} |φ(x)|.
    pub fn phi_mass(&self) -> S {
        self.atoms.iter().fold(S::zero(), |a, e| a + e.1.abs())
    }

    /// Dense f64 materialization of b on Q.
    pub fn to_measure(&self, max_len: u64) -> Result<WeightedMeasure<f64>> {
        if self.interval.len() > max_len {
            return Err(Error::Resource {
                what: "bad piece materialization",
                requested: self.interval.len(),
                cap: max_len,
            });
        }
        let start = self.interval.start();
        Ok(WeightedMeasure::from_real(
            (0..self.interval.len() as i64).map(|i| {
                let x = start + i;
                (x, self.value_at(x).to_f64().unwrap_or(f64::NAN))
            }),
        )
        .expect("finite values"))
    }
}

/// φ = g + Σ b_Q at level λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CZDecomposition<S> {
    pub lambda: S,
    /// Sorted by interval position; pairwise disjoint.
    pub bad: Vec<BadPiece<S>>,
    phi: SparseSignal<S>,
}

/// Outcome of checking every structural property of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CZInvariants {
    pub lambda: f64,
    pub n_bad_intervals: usize,
    pub carleson_sum: u64,
    pub carleson_bound: f64,
    pub g_inf_norm: f64,
    pub reconstruction_error: f64,
    /// max_Q |Σ_x b_Q(x)|.
    pub max_bad_sum: f64,
    pub reconstruction_ok: bool,
    pub mean_zero_ok: bool,
    pub carleson_ok: bool,
    pub disjoint_ok: bool,
    pub maximal_ok: bool,
    /// ‖g‖_∞ ≤ 2λ.
    pub good_bound_ok: bool,
    /// Σ|b_Q| ≤ 4λ|Q| for every Q.
    pub bad_mass_ok: bool,
    /// The sharper ‖g‖_∞ ≤ λ; not guaranteed.
    pub good_within_lambda: bool,
    /// The sharper Σ|b_Q| ≤ λ|Q|; not guaranteed.
    pub bad_within_lambda: bool,
}

impl CZInvariants {
    /// All guaranteed properties hold.
    pub fn all_ok(&self) -> bool {
        self.reconstruction_ok
            && self.mean_zero_ok
            && self.carleson_ok
            && self.disjoint_ok
            && self.maximal_ok
            && self.good_bound_ok
            && self.bad_mass_ok
    }
}

/// JSON summary of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CZReport {
    pub lambda: f64,
    pub n_bad_intervals: usize,
    pub carleson_sum: u64,
    pub g_inf_norm: f64,
    pub reconstruction_error: f64,
}

fn pow2<S: Exact>(s: u32) -> S {
    S::from_u64(1u64 << s).expect("2^s fits the scalar")
}

fn f(x: &impl ToPrimitive) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Stopping-time construction of the maximal intervals with mean |φ| > λ.
pub fn cz_decompose<S: Exact>(phi: &SparseSignal<S>, lambda: S) -> Result<CZDecomposition<S>> {
    if lambda <= S::zero() {
        return Err(Error::InvalidParameter("λ must be positive".into()));
    }
    let total = phi.l1_norm();
    // smallest s with λ 2^s ≥ ‖φ‖₁: no interval of scale ≥ s can exceed λ on average
    let mut s_top = 0u32;
    while lambda.clone() * pow2::<S>(s_top) < total {
        s_top += 1;
        if s_top > MAX_SCALE {
            return Err(Error::Resource {
                what: "CZ top scale",
                requested: s_top as u64,
                cap: MAX_SCALE as u64,
            });
        }
    }
    let entries = phi.entries();
    let mut active = vec![true; entries.len()];
    let mut chosen: Vec<(DyadicInterval, usize, usize)> = Vec::new();
    for s in (0..s_top).rev() {
        let threshold = lambda.clone() * pow2::<S>(s);
        let mut i = 0;
        while i < entries.len() {
            if !active[i] {
                i += 1;
                continue;
            }
            let q = DyadicInterval::containing(entries[i].0, s);
            let mut j = i;
            let mut mass = S::zero();
            while j < entries.len() && q.contains(entries[j].0) {
                mass = mass + entries[j].1.abs();
                j += 1;
            }
            if mass > threshold {
                active[i..j].iter_mut().for_each(|a| *a = false);
                chosen.push((q, i, j));
            }
            i = j;
        }
    }
    chosen.sort_by_key(|c| c.0.start());
    let bad = chosen
        .into_iter()
        .map(|(q, i, j)| {
            let atoms = entries[i..j].to_vec();
            let sum = atoms.iter().fold(S::zero(), |a, e| a + e.1.clone());
            BadPiece {
                interval: q,
                mean: sum / pow2::<S>(q.s),
                atoms,
            }
        })
        .collect();
    Ok(CZDecomposition {
        lambda,
        bad,
        phi: phi.clone(),
    })
}

impl<S: Exact> CZDecomposition<S> {
    pub fn phi(&self) -> &SparseSignal<S> {
        &self.phi
    }

    pub fn selected(&self) -> Vec<DyadicInterval> {
        self.bad.iter().map(|b| b.interval).collect()
    }

    fn piece_containing(&self, x: i64) -> Option<&BadPiece<S>> {
        let i = self.bad.partition_point(|b| b.interval.start() <= x);
        let b = self.bad.get(i.checked_sub(1)?)?;
        b.interval.contains(x).then_some(b)
    }

    /// g(x).
    pub fn good_at(&self, x: i64) -> S {
        match self.piece_containing(x) {
            Some(b) => b.mean.clone(),
            None => self.phi.get(x),
        }
    }

    /// Σ_Q b_Q(x).
    pub fn bad_at(&self, x: i64) -> S {
        self.piece_containing(x)
            .map(|b| b.value_at(x))
            .unwrap_or_else(S::zero)
    }

    /// ‖g‖_∞, exact.
    pub fn good_sup_norm(&self) -> S {
        let mut m = S::zero();
        for (x, v) in self.phi.entries() {
            if self.piece_containing(*x).is_none() && v.abs() > m {
                m = v.abs();
            }
        }
        for b in &self.bad {
            if b.mean.abs() > m {
                m = b.mean.abs();
            }
        }
        m
    }

    /// Σ_{Q∈ℬ} |Q|.
    pub fn carleson_sum(&self) -> u64 {
        self.bad.iter().map(|b| b.interval.len()).sum()
    }

    /// Pieces at scale s, the summands of b_s.
    pub fn pieces_at_scale(&self, s: u32) -> impl Iterator<Item = &BadPiece<S>> {
        self.bad.iter().filter(move |b| b.interval.s == s)
    }

    /// max |g(x) + Σb(x) − φ(x)| over every point where any term is nonzero.
    pub fn reconstruction_error(&self) -> S {
        let mut worst = S::zero();
        let mut check = |x: i64| {
            let r = (self.good_at(x) + self.bad_at(x) - self.phi.get(x)).abs();
            if r > worst {
                worst = r;
            }
        };
        for (x, _) in self.phi.entries() {
            check(*x);
        }
        // points of Q without atoms: g = φ_Q, b = −φ_Q; one representative each
        for b in &self.bad {
            let start = b.interval.start();
            let free = (0..b.interval.len() as i64)
                .map(|i| start + i)
                .find(|x| b.atoms.binary_search_by_key(x, |e| e.0).is_err());
            if let Some(x) = free {
                check(x);
            }
        }
        worst
    }

    pub fn report(&self) -> CZReport {
        CZReport {
            lambda: f(&self.lambda),
            n_bad_intervals: self.bad.len(),
            carleson_sum: self.carleson_sum(),
            g_inf_norm: f(&self.good_sup_norm()),
            reconstruction_error: f(&self.reconstruction_error()),
        }
    }

    /// Checks every structural property; `recon_tol` is the allowed
    /// reconstruction error (0 for exact scalars).
    pub fn check_invariants(&self, recon_tol: f64) -> CZInvariants {
        let lambda = self.lambda.clone();
        let two = S::one() + S::one();
        let four = two.clone() + two.clone();
        let l1 = self.phi.l1_norm();

        let recon = f(&self.reconstruction_error());
        let max_bad_sum = self
            .bad
            .iter()
            .map(|b| f(&b.sum().abs()))
            .fold(0.0, f64::max);
        let mean_zero_ok = self.bad.iter().all(|b| {
            let s = b.sum().abs();
            s.is_zero() || f(&s) <= recon_tol.max(0.0)
        });
        let carleson = self.carleson_sum();
        let carleson_ok = S::from_u64(carleson).expect("fits") * lambda.clone() <= l1;
        let disjoint_ok = self
            .bad
            .windows(2)
            .all(|w| (w[0].interval.end()) <= w[1].interval.start() as i128);
        let maximal_ok = self.bad.iter().all(|b| {
            let q = b.interval;
            let above = b.phi_mass() > lambda.clone() * pow2::<S>(q.s);
            // the parent must not exceed λ on average
            let p = q.parent();
            let parent_ok = p.s > MAX_SCALE
                || self
                    .phi
                    .range(p.start(), p.end())
                    .iter()
                    .fold(S::zero(), |a, e| a + e.1.abs())
                    <= lambda.clone() * pow2::<S>(p.s);
            above && parent_ok
        });
        let g_norm = self.good_sup_norm();
        let good_bound_ok = g_norm <= two * lambda.clone();
        let good_within_lambda = g_norm <= lambda.clone();
        let bad_mass_ok = self
            .bad
            .iter()
            .all(|b| b.l1_norm() <= four.clone() * lambda.clone() * pow2::<S>(b.interval.s));
        let bad_within_lambda = self
            .bad
            .iter()
            .all(|b| b.l1_norm() <= lambda.clone() * pow2::<S>(b.interval.s));
        CZInvariants {
            lambda: f(&lambda),
            n_bad_intervals: self.bad.len(),
            carleson_sum: carleson,
            carleson_bound: f(&l1) / f(&lambda),
            g_inf_norm: f(&g_norm),
            reconstruction_error: recon,
            max_bad_sum,
            reconstruction_ok: recon <= recon_tol,
            mean_zero_ok,
            carleson_ok,
            disjoint_ok,
            maximal_ok,
            good_bound_ok,
            bad_mass_ok,
            good_within_lambda,
            bad_within_lambda,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use num_traits::{One, Zero};

    type Q = Ratio<i128>;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn dyadic_geometry() {
        let a = DyadicInterval::containing(-1, 2);
        assert_eq!((a.k, a.start(), a.end()), (-1, -4, 0));
        assert!(a.contains(-4) && a.contains(-1) && !a.contains(0));
        assert!(a.is_within(&a.parent()));
        let b = DyadicInterval::containing(5, 1);
        assert!(!a.intersects(&b));
    }

    #[test]
    fn below_threshold_everywhere() {
        let phi = SparseSignal::new([(0, Q::one())]);
        let cz = cz_decompose(&phi, q(2, 1)).unwrap();
        assert!(cz.bad.is_empty());
        assert_eq!(cz.good_at(0), Q::one());
    }

    #[test]
    fn single_point_interval() {
        let phi = SparseSignal::new([(0, Q::one())]);
        let cz = cz_decompose(&phi, q(1, 2)).unwrap();
        assert_eq!(cz.selected(), vec![DyadicInterval { s: 0, k: 0 }]);
        assert_eq!(cz.bad_at(0), Q::zero());
        let inv = cz.check_invariants(0.0);
        assert!(inv.all_ok(), "{inv:?}");
        assert_eq!(inv.g_inf_norm, 1.0);
        assert!(!inv.good_within_lambda);
    }

    #[test]
    fn indicator_climbs_to_maximal_interval() {
        let phi = SparseSignal::new((0..4).map(|x| (x, Q::one())));
        let cz = cz_decompose(&phi, q(3, 10)).unwrap();
        // averages: [0,8) → 1/2 > 3/10, [0,16) → 1/4 ≤ 3/10
        assert_eq!(cz.selected(), vec![DyadicInterval { s: 3, k: 0 }]);
        assert_eq!(cz.reconstruction_error(), Q::zero());
        assert!(cz.check_invariants(0.0).all_ok());
        assert_eq!(cz.bad[0].mean, q(1, 2));
    }

    #[test]
    fn negative_positions() {
        let phi = SparseSignal::new([(-5, q(3, 1)), (-4, q(-2, 1)), (9, q(1, 7))]);
        let cz = cz_decompose(&phi, q(1, 3)).unwrap();
        let inv = cz.check_invariants(0.0);
        assert!(inv.all_ok(), "{inv:?}");
        for b in &cz.bad {
            assert_eq!(b.sum(), Q::zero());
        }
    }

    #[test]
    fn float_scalars_work() {
        let phi = SparseSignal::new([(0, 1.0), (1, -0.5), (17, 2.0)]);
        let cz = cz_decompose(&phi, 0.2).unwrap();
        assert!(cz.check_invariants(1e-12).all_ok());
    }

    #[test]
    fn rejects_bad_lambda() {
        let phi = SparseSignal::new([(0, Q::one())]);
        assert!(cz_decompose(&phi, Q::zero()).is_err());
    }
}
