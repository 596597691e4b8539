//! Finitely supported complex-weighted measures on ℤ and their Fourier
//! transforms.
//!
//! Convention: μ̂(γ) = Σⱼ μ(j) e(jγ) with e(x) = exp(2πi x). The same type
//! doubles as a finitely supported function ℤ → ℂ (see [`FiniteFn`]).

use std::io::Write;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::phase::{e_ratio, e_site, Frequency};
use crate::scalar::Real;
use crate::sum::{ComplexSum, NeumaierSum};

/// Relative tolerance for the probability check and the cached total variation.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Grid points per rayon task in direct grid evaluation.
const GRID_CHUNK: usize = 256;

/// Finitely supported measure on ℤ with complex weights.
///
/// Atoms are sorted by site, sites are distinct and no stored weight is
/// zero. The total variation Σ|w| is cached at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure<T> {
    atoms: Vec<(i64, Complex<T>)>,
    total_variation: T,
}

/// A finitely supported function ℤ → ℂ; same representation as a measure.
pub type FiniteFn<T> = WeightedMeasure<T>;

impl<T: Real> WeightedMeasure<T> {
    pub fn zero() -> Self {
        Self {
            atoms: Vec::new(),
            total_variation: T::zero(),
        }
    }

    /// Point mass δ_site.
    pub fn dirac(site: i64) -> Self {
        Self {
            atoms: vec![(site, Complex::new(T::one(), T::zero()))],
            total_variation: T::one(),
        }
    }

    /// Builds a measure from `(site, weight)` pairs; duplicate sites are summed
    /// and zero weights dropped.
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex<T>)>,
    {
        let mut v: Vec<(i64, Complex<T>)> = atoms.into_iter().collect();
        if let Some(&(site, _)) = v.iter().find(|(_, w)| !(w.re.is_finite() && w.im.is_finite())) {
            return Err(Error::NonFinite { site });
        }
        v.sort_by_key(|&(s, _)| s);
        Ok(Self::from_sorted(merge_sorted(v)))
    }

    pub fn from_real<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, T)>,
    {
        Self::new(atoms.into_iter().map(|(s, w)| (s, Complex::new(w, T::zero()))))
    }

    /// Uniform probability measure on the given sites (with multiplicity).
    pub fn uniform_on<I: IntoIterator<Item = i64>>(sites: I) -> Self {
        let mut v: Vec<i64> = sites.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Self::zero();
        }
        v.sort_unstable();
        let inv = T::one() / T::of(n as f64);
        let mut atoms = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && v[j] == v[i] {
                j += 1;
            }
            let w = T::of((j - i) as f64) * inv;
            atoms.push((v[i], Complex::new(w, T::zero())));
            i = j;
        }
        Self::from_sorted(atoms)
    }

    /// Sorted, distinct sites assumed; zero weights are dropped.
    pub(crate) fn from_sorted(atoms: Vec<(i64, Complex<T>)>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
        let atoms: Vec<_> = atoms.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let total_variation = tv_of(&atoms);
        Self {
            atoms,
            total_variation,
        }
    }

    pub fn atoms(&self) -> &[(i64, Complex<T>)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_variation(&self) -> T {
        self.total_variation
    }

    /// Σ|w| recomputed from the atoms (for checking the cache).
    pub fn recomputed_total_variation(&self) -> T {
        tv_of(&self.atoms)
    }

    /// Σ w.
    pub fn mass(&self) -> Complex<T> {
        let mut acc = ComplexSum::new();
        for &(_, w) in &self.atoms {
            acc.add(w);
        }
        acc.sum()
    }

    /// Every weight real and nonnegative, total mass 1.
    pub fn is_probability(&self) -> bool {
        if self.atoms.iter().any(|(_, w)| w.im != T::zero() || w.re < T::zero()) {
            return false;
        }
        let tol = PROBABILITY_TOL.max(T::epsilon().to64() * (self.atoms.len() as f64 + 1.0));
        (self.mass().re.to64() - 1.0).abs() <= tol
    }

    pub fn weight_at(&self, site: i64) -> Complex<T> {
        match self.atoms.binary_search_by_key(&site, |&(s, _)| s) {
            Ok(i) => self.atoms[i].1,
            Err(_) => Complex::zero(),
        }
    }

    /// max |site| over the support (0 for the zero measure).
    pub fn support_radius(&self) -> u64 {
        match (self.atoms.first(), self.atoms.last()) {
            (Some(a), Some(b)) => a.0.unsigned_abs().max(b.0.unsigned_abs()),
            _ => 0,
        }
    }

    /// Smallest and largest site.
    pub fn support_span(&self) -> Option<(i64, i64)> {
        Some((self.atoms.first()?.0, self.atoms.last()?.0))
    }

    pub fn l1_norm(&self) -> T {
        self.total_variation
    }

    pub fn l2_norm_sq(&self) -> T {
        let mut acc = NeumaierSum::new();
        for &(_, w) in &self.atoms {
            acc.add(w.norm_sqr());
        }
        acc.sum()
    }

    pub fn sup_norm(&self) -> T {
        self.atoms.iter().map(|(_, w)| w.norm()).fold(T::zero(), T::max)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::from_sorted(self.atoms.iter().map(|&(s, w)| (s, w * c)).collect())
    }

    pub fn translate(&self, t: i64) -> Self {
        Self::from_sorted(self.atoms.iter().map(|&(s, w)| (s + t, w)).collect())
    }

    /// Reflection j ↦ −j.
    pub fn reflect(&self) -> Self {
        Self::from_sorted(self.atoms.iter().rev().map(|&(s, w)| (-s, w)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, Complex::new(T::one(), T::zero()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, Complex::new(-T::one(), T::zero()))
    }

    fn combine(&self, other: &Self, c: Complex<T>) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let a = self.atoms.get(i);
            let b = other.atoms.get(j);
            match (a, b) {
                (Some(&(sa, wa)), Some(&(sb, wb))) if sa == sb => {
                    out.push((sa, wa + wb * c));
                    i += 1;
                    j += 1;
                }
                (Some(&(sa, wa)), Some(&(sb, _))) if sa < sb => {
                    out.push((sa, wa));
                    i += 1;
                }
                (Some(&(sa, wa)), None) => {
                    out.push((sa, wa));
                    i += 1;
                }
                (_, Some(&(sb, wb))) => {
                    out.push((sb, wb * c));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Self::from_sorted(out)
    }

    /// The difference j ↦ μ(j) − μ(j−1), whose transform is (1 − e(γ))μ̂(γ).
    pub fn difference(&self) -> Self {
        self.sub(&self.translate(1))
    }

    /// μ̂(γ) = Σ μ(j) e(jγ), compensated.
    pub fn fourier_at(&self, gamma: &Frequency) -> Complex<T> {
        let mut acc = ComplexSum::new();
        for &(s, w) in &self.atoms {
            acc.add(w * e_site::<T>(s, gamma));
        }
        acc.sum()
    }

    /// μ̂(m/G) for m = 0..G, picking the cheaper of the two evaluation paths.
    pub fn fourier_grid(&self, g: usize) -> Vec<Complex<T>> {
        assert!(g >= 1, "grid size must be positive");
        let log_g = (usize::BITS - g.leading_zeros()) as usize;
        if self.atoms.len() > 4 * log_g {
            self.fourier_grid_fast(g)
        } else {
            self.fourier_grid_direct(g)
        }
    }

    /// Direct summation with exact integer phase reduction.
    pub fn fourier_grid_direct(&self, g: usize) -> Vec<Complex<T>> {
        let gg = g as i128;
        let table: Vec<Complex<T>> = (0..g).map(|k| e_ratio::<T>(k as i64, g as u64)).collect();
        let residues: Vec<(usize, Complex<T>)> = self
            .atoms
            .iter()
            .map(|&(s, w)| ((s as i128).rem_euclid(gg) as usize, w))
            .collect();
        let mut out = vec![Complex::zero(); g];
        out.par_chunks_mut(GRID_CHUNK).enumerate().for_each(|(ci, chunk)| {
            for (off, slot) in chunk.iter_mut().enumerate() {
                let m = ci * GRID_CHUNK + off;
                let mut acc = ComplexSum::new();
                for &(r, w) in &residues {
                    let k = ((r as u128 * m as u128) % g as u128) as usize;
                    acc.add(w * table[k]);
                }
                *slot = acc.sum();
            }
        });
        out
    }

    /// Folds the atoms mod G and applies one inverse FFT (which carries the
    /// e(+·) sign). Valid for any G.
    pub fn fourier_grid_fast(&self, g: usize) -> Vec<Complex<T>> {
        let mut buf = fold_mod(&self.atoms, g);
        let mut planner = FftPlanner::<T>::new();
        planner.plan_fft_inverse(g).process(&mut buf);
        buf
    }

    /// (μ ∗ φ)(x) = Σⱼ μ(j) φ(x − j).
    pub fn convolve(&self, other: &Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::zero();
        }
        let direct_cost = (self.len() as f64) * (other.len() as f64);
        let (a0, a1) = self.support_span().unwrap();
        let (b0, b1) = other.support_span().unwrap();
        let width = ((a1 - a0) + (b1 - b0) + 1) as f64;
        let fft_cost = 6.0 * width * width.log2().max(1.0);
        if direct_cost <= fft_cost || width > (1u64 << 26) as f64 {
            self.convolve_direct(other)
        } else {
            self.convolve_fft(other)
        }
    }

    /// Pairwise products merged per site; exact up to the final compensated sums.
    pub fn convolve_direct(&self, other: &Self) -> Self {
        let mut pairs: Vec<(i64, Complex<T>)> = Vec::with_capacity(self.len() * other.len());
        for &(s, w) in &self.atoms {
            for &(t, v) in &other.atoms {
                pairs.push((s + t, w * v));
            }
        }
        pairs.sort_by_key(|&(s, _)| s);
        Self::from_sorted(merge_sorted(pairs))
    }

    /// Dense FFT convolution. Entries below the transform's rounding floor
    /// (relative to ‖μ‖₂‖φ‖₂) are dropped.
    pub fn convolve_fft(&self, other: &Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::zero();
        }
        let (a0, a1) = self.support_span().unwrap();
        let (b0, b1) = other.support_span().unwrap();
        let width = ((a1 - a0) + (b1 - b0) + 1) as usize;
        let len = width.next_power_of_two();
        let mut fa = vec![Complex::zero(); len];
        let mut fb = vec![Complex::zero(); len];
        for &(s, w) in &self.atoms {
            fa[(s - a0) as usize] = w;
        }
        for &(s, w) in &other.atoms {
            fb[(s - b0) as usize] = w;
        }
        let mut planner = FftPlanner::<T>::new();
        let fwd = planner.plan_fft_forward(len);
        fwd.process(&mut fa);
        fwd.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = *x * *y;
        }
        planner.plan_fft_inverse(len).process(&mut fa);
        let inv = T::one() / T::of(len as f64);
        let floor = T::epsilon()
            * T::of(8.0 * (len as f64).log2().max(1.0))
            * (self.l2_norm_sq() * other.l2_norm_sq()).sqrt();
        let atoms = fa
            .into_iter()
            .take(width)
            .enumerate()
            .map(|(i, z)| (a0 + b0 + i as i64, z * inv))
            .filter(|(_, z)| z.norm() > floor)
            .collect();
        Self::from_sorted(atoms)
    }

    /// Multiplies the weight at j by e(jθ); shifts the transform by θ.
    pub fn modulate(&self, theta: &Frequency) -> Self {
        Self::from_sorted(
            self.atoms
                .iter()
                .map(|&(s, w)| (s, w * e_site::<T>(s, theta)))
                .collect(),
        )
    }

    /// Restriction to [lo, hi].
    pub fn restrict(&self, lo: i64, hi: i64) -> Self {
        Self::from_sorted(
            self.atoms
                .iter()
                .copied()
                .filter(|&(s, _)| lo <= s && s <= hi)
                .collect(),
        )
    }

    pub fn cast<U: Real>(&self) -> WeightedMeasure<U> {
        WeightedMeasure::from_sorted(
            self.atoms
                .iter()
                .map(|&(s, w)| (s, Complex::new(U::of(w.re.to64()), U::of(w.im.to64()))))
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn tv_of<T: Real>(atoms: &[(i64, Complex<T>)]) -> T {
    let mut acc = NeumaierSum::new();
    for &(_, w) in atoms {
        acc.add(w.norm());
    }
    acc.sum()
}

/// Merges runs of equal sites (input sorted by site) with compensated sums.
fn merge_sorted<T: Real>(v: Vec<(i64, Complex<T>)>) -> Vec<(i64, Complex<T>)> {
    let mut out: Vec<(i64, Complex<T>)> = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        let site = v[i].0;
        let mut acc = ComplexSum::new();
        while i < v.len() && v[i].0 == site {
            acc.add(v[i].1);
            i += 1;
        }
        out.push((site, acc.sum()));
    }
    out
}

/// Buckets Σ_{j ≡ r mod G} w_j, compensated.
fn fold_mod<T: Real>(atoms: &[(i64, Complex<T>)], g: usize) -> Vec<Complex<T>> {
    let gg = g as i128;
    let mut acc: Vec<ComplexSum<T>> = vec![ComplexSum::new(); g];
    for &(s, w) in atoms {
        acc[(s as i128).rem_euclid(gg) as usize].add(w);
    }
    acc.into_iter().map(|a| a.sum()).collect()
}

impl<T: Real> Serialize for WeightedMeasure<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.atoms.len()))?;
        for &(s, w) in &self.atoms {
            seq.serialize_element(&(s, w.re.to64(), w.im.to64()))?;
        }
        seq.end()
    }
}

impl<'de, T: Real> Deserialize<'de> for WeightedMeasure<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let triples: Vec<(i64, f64, f64)> = Vec::deserialize(deserializer)?;
        WeightedMeasure::new(
            triples
                .into_iter()
                .map(|(s, re, im)| (s, Complex::new(T::of(re), T::of(im)))),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Builds a measure from `(site, weight)` pairs.
pub fn make_measure<T: Real>(atoms: &[(i64, Complex<T>)]) -> Result<WeightedMeasure<T>> {
    WeightedMeasure::new(atoms.iter().copied())
}

pub fn fourier_at<T: Real>(mu: &WeightedMeasure<T>, gamma: &Frequency) -> Complex<T> {
    mu.fourier_at(gamma)
}

pub fn fourier_grid<T: Real>(mu: &WeightedMeasure<T>, g: usize) -> Result<Vec<Complex<T>>> {
    if g < 2 {
        return Err(Error::InvalidParameter(format!("grid size {g} < 2")));
    }
    Ok(mu.fourier_grid(g))
}

pub fn convolve<T: Real>(mu: &WeightedMeasure<T>, phi: &FiniteFn<T>) -> FiniteFn<T> {
    mu.convolve(phi)
}

pub fn modulate<T: Real>(mu: &WeightedMeasure<T>, theta: f64) -> Result<WeightedMeasure<T>> {
    Ok(mu.modulate(&Frequency::new(theta)?))
}

/// CSV with columns `gamma,re,im,abs`, one row per grid point m/G.
pub fn write_fourier_grid_csv<T: Real, W: Write>(out: W, values: &[Complex<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma", "re", "im", "abs"])?;
    let g = values.len() as f64;
    for (m, z) in values.iter().enumerate() {
        w.write_record([
            format!("{}", m as f64 / g),
            format!("{}", z.re.to64()),
            format!("{}", z.im.to64()),
            format!("{}", z.norm().to64()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn squares(n: i64) -> WeightedMeasure<f64> {
        WeightedMeasure::uniform_on((1..=n).map(|k| k * k))
    }

    #[test]
    fn point_mass() {
        let m = make_measure(&[(0, c(1.0, 0.0))]).unwrap();
        assert_eq!(m.total_variation(), 1.0);
        assert!(m.is_probability());
    }

    #[test]
    fn duplicates_merge() {
        let m = make_measure(&[(1, c(0.5, 0.0)), (1, c(0.5, 0.0))]).unwrap();
        assert_eq!(m.atoms(), &[(1, c(1.0, 0.0))]);
    }

    #[test]
    fn complex_weight_is_not_probability() {
        let m = make_measure(&[(4, c(0.5, 0.0)), (9, c(0.0, 0.5))]).unwrap();
        assert!((m.total_variation() - 1.0).abs() < 1e-15);
        assert!(!m.is_probability());
    }

    #[test]
    fn rejects_non_finite() {
        let err = make_measure(&[(3, c(f64::INFINITY, 0.0))]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { site: 3 }));
    }

    #[test]
    fn cancelling_duplicates_leave_no_atom() {
        let m = make_measure(&[(2, c(0.5, 0.0)), (2, c(-0.5, 0.0))]).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn fourier_examples() {
        let quarter = Frequency::ratio(1, 4);
        let d0 = WeightedMeasure::<f64>::dirac(0);
        assert!((d0.fourier_at(&Frequency::new(0.37).unwrap()) - c(1.0, 0.0)).norm() < 1e-15);
        let d1 = WeightedMeasure::<f64>::dirac(1);
        assert!((d1.fourier_at(&quarter) - c(0.0, 1.0)).norm() < 1e-15);
        // j² mod 4 ∈ {0, 1}
        assert!((squares(4).fourier_at(&quarter) - c(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn grid_examples() {
        let g = WeightedMeasure::<f64>::dirac(0).fourier_grid(4);
        assert!(g.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        let g = WeightedMeasure::<f64>::dirac(1).fourier_grid(4);
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (z, w) in g.iter().zip(want) {
            assert!((z - w).norm() < 1e-15);
        }
        assert!(fourier_grid(&WeightedMeasure::<f64>::dirac(0), 1).is_err());
    }

    #[test]
    fn fast_and_direct_grids_agree() {
        let nu = squares(100);
        let fast = nu.fourier_grid_fast(1024);
        let direct = nu.fourier_grid_direct(1024);
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-10);
        }
        // the grid entries are the pointwise transform
        for m in [0, 1, 255, 256, 700] {
            let z = nu.fourier_at(&Frequency::ratio(m, 1024));
            assert!((z - direct[m as usize]).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_examples() {
        let phi = make_measure(&[(0, c(1.0, 0.0)), (1, c(-1.0, 0.0)), (5, c(0.0, 2.0))]).unwrap();
        assert_eq!(WeightedMeasure::dirac(0).convolve(&phi), phi);
        let d5 = WeightedMeasure::<f64>::dirac(2).convolve(&WeightedMeasure::dirac(3));
        assert_eq!(d5, WeightedMeasure::dirac(5));
        // ν₂ ∗ (δ₀ − δ₁) = ½(δ₁ − δ₂ + δ₄ − δ₅)
        let nu2 = squares(2);
        let diff = make_measure(&[(0, c(1.0, 0.0)), (1, c(-1.0, 0.0))]).unwrap();
        let got = nu2.convolve(&diff);
        let want =
            make_measure(&[(1, c(0.5, 0.0)), (2, c(-0.5, 0.0)), (4, c(0.5, 0.0)), (5, c(-0.5, 0.0))])
                .unwrap();
        assert_eq!(got, want);
        assert!(got.l1_norm() <= nu2.l1_norm() * diff.l1_norm());
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let a = squares(40);
        let b = make_measure(&(-30..30).map(|j| (j * 3, c((j as f64).sin(), 0.25))).collect::<Vec<_>>())
            .unwrap();
        let d = a.convolve_direct(&b);
        let f = a.convolve_fft(&b);
        assert_eq!(d.len(), f.len());
        for ((s, w), (t, v)) in d.atoms().iter().zip(f.atoms()) {
            assert_eq!(s, t);
            assert!((w - v).norm() < 1e-12);
        }
    }

    #[test]
    fn modulation_examples() {
        let th = Frequency::new(0.3).unwrap();
        assert_eq!(WeightedMeasure::<f64>::dirac(0).modulate(&th), WeightedMeasure::dirac(0));
        let m = WeightedMeasure::<f64>::dirac(1).modulate(&Frequency::ratio(1, 2));
        assert!((m.weight_at(1) - c(-1.0, 0.0)).norm() < 1e-15);
        let nu4 = squares(4);
        let shifted = nu4.modulate(&Frequency::ratio(1, 4));
        let z = shifted.fourier_at(&Frequency::ratio(0, 1));
        assert!((z - c(0.5, 0.5)).norm() < 1e-10);
        assert!((shifted.total_variation() - nu4.total_variation()).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_format() {
        let m = make_measure(&[(-2, c(0.25, 0.0)), (7, c(0.5, -0.25))]).unwrap();
        let s = m.to_json().unwrap();
        assert_eq!(s, "[[-2,0.25,0.0],[7,0.5,-0.25]]");
        assert_eq!(WeightedMeasure::<f64>::from_json(&s).unwrap(), m);
    }

    #[test]
    fn grid_csv_layout() {
        let mut buf = Vec::new();
        write_fourier_grid_csv(&mut buf, &WeightedMeasure::<f64>::dirac(0).fourier_grid(2)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "gamma,re,im,abs\n0,1,0,1\n0.5,1,0,1\n");
    }

    #[test]
    fn f32_weights_work() {
        let m = WeightedMeasure::<f32>::uniform_on([1, 4, 9, 16]);
        let z = m.fourier_at(&Frequency::ratio(1, 4));
        assert!((z.re - 0.5).abs() < 1e-6 && (z.im - 0.5).abs() < 1e-6);
        assert!(m.is_probability());
    }
}
