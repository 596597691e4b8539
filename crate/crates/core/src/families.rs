//! Measure families indexed by n and the perturbation functions ρ.
//!
//! Descriptor strings:
//!
//! | descriptor                 | μₙ                                            |
//! |----------------------------|-----------------------------------------------|
//! | `squares`                  | (1/n) Σ_{k≤n} δ_{k²}                           |
//! | `rotated:quadratic`        | (1/n) Σ_{j≤n} e(n^{-1/2} j²) δ_{j²} (default)  |
//! | `rotated:linear`           | (1/n) Σ_{j≤n} e(n^{-1/2} j) δ_{j²}             |
//! | `perturbed:<rho>`          | (1/n) Σ_{k≤n} δ_{k²+⌊ρ(k)⌋}                    |
//! | `uniform`                  | (1/n) Σ_{k≤n} δ_k                              |
//!
//! and `<rho>` is one of `power:a`, `log:C` (= `log_scaled:C`),
//! `log_power:c`, `constant:c0`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_complex::Complex;
use num_integer::Roots;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::WeightedMeasure;
use crate::phase::{e_site, Frequency};
use crate::scalar::Real;

/// ε used for ρ kinds that carry no exponent of their own.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// A perturbation ρ: ℝ⁺ → ℝ from a closed set of kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum RhoSpec {
    /// x^a, 0 < a < 1.
    Power(f64),
    /// (ln(1 + x))^c, c > 0.
    LogPower(f64),
    /// C ln(1 + x), C > 0.
    LogScaled(f64),
    /// The constant c₀.
    Constant(f64),
}

/// Sampled check of the monotonicity hypotheses on ρ, ρ′, ρ″.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoHypotheses {
    pub nondecreasing: bool,
    pub derivative_nonincreasing: bool,
    pub second_derivative_nondecreasing: bool,
    pub unbounded: bool,
    /// ρ′(x) ≲ x^{-(ε+2/3)} for some ε > 0 (power kind with a < 1/3).
    pub fast_decay: bool,
}

impl RhoHypotheses {
    pub fn all(&self) -> bool {
        self.nondecreasing
            && self.derivative_nonincreasing
            && self.second_derivative_nondecreasing
            && self.unbounded
            && self.fast_decay
    }
}

impl RhoSpec {
    pub fn power(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("power exponent {a} outside (0, 1)")));
        }
        Ok(Self::Power(a))
    }

    pub fn log_scaled(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("log scale {c}")));
        }
        Ok(Self::LogScaled(c))
    }

    pub fn log_power(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("log power {c}")));
        }
        Ok(Self::LogPower(c))
    }

    pub fn constant(c0: f64) -> Result<Self> {
        if !c0.is_finite() {
            return Err(Error::InvalidParameter(format!("constant {c0}")));
        }
        Ok(Self::Constant(c0))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Power(a) => x.powf(a),
            Self::LogPower(c) => x.ln_1p().powf(c),
            Self::LogScaled(c) => c * x.ln_1p(),
            Self::Constant(c0) => c0,
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Self::Power(a) => a * x.powf(a - 1.0),
            Self::LogPower(c) => c * x.ln_1p().powf(c - 1.0) / (1.0 + x),
            Self::LogScaled(c) => c / (1.0 + x),
            Self::Constant(_) => 0.0,
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match *self {
            Self::Power(a) => a * (a - 1.0) * x.powf(a - 2.0),
            Self::LogPower(c) => {
                let l = x.ln_1p();
                c * ((c - 1.0) * l.powf(c - 2.0) - l.powf(c - 1.0)) / ((1.0 + x) * (1.0 + x))
            }
            Self::LogScaled(c) => -c / ((1.0 + x) * (1.0 + x)),
            Self::Constant(_) => 0.0,
        }
    }

    /// Smallest x ≥ 0 with ρ(x) = y; `None` when y is not attained.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        match *self {
            Self::Power(a) if y >= 0.0 => Some(y.powf(1.0 / a)),
            Self::LogPower(c) if y >= 0.0 => Some(y.powf(1.0 / c).exp_m1()),
            Self::LogScaled(c) if y >= 0.0 => Some((y / c).exp_m1()),
            Self::Constant(c0) if y == c0 => Some(0.0),
            _ => None,
        }
    }

    /// Integer m with a = 1/m, when there is one.
    fn root_index(&self) -> Option<u32> {
        match *self {
            Self::Power(a) => {
                let m = (1.0 / a).round();
                (m >= 1.0 && m <= 64.0 && (1.0 / m - a).abs() <= 1e-15).then_some(m as u32)
            }
            _ => None,
        }
    }

    /// Small rational p/q equal to a power exponent, for exact comparisons.
    fn power_ratio(&self) -> Option<(u32, u32)> {
        let Self::Power(a) = *self else { return None };
        (1..=64u32).find_map(|q| {
            let p = (a * q as f64).round();
            ((p / q as f64 - a).abs() <= 1e-15 && p >= 1.0).then_some((p as u32, q))
        })
    }

    /// ⌊ρ(k)⌋ for an integer k ≥ 0.
    ///
    /// Power kinds with rational exponent are settled exactly near integer
    /// values; logarithmic kinds rely on f64 (their values at integers are
    /// transcendental, far from integers at any reachable k).
    pub fn floor_at(&self, k: u64) -> i64 {
        match *self {
            Self::Power(_) => {
                if let Some(m) = self.root_index() {
                    return k.nth_root(m) as i64;
                }
                let v = self.eval(k as f64);
                let r = v.round();
                if (v - r).abs() > 1e-9 * v.max(1.0) {
                    return v.floor() as i64;
                }
                match self.power_ratio() {
                    // k^(p/q) ≥ r ⇔ k^p ≥ r^q
                    Some((p, q)) => {
                        let lhs = BigUint::from(k).pow(p);
                        let rhs = BigUint::from(r as u64).pow(q);
                        if lhs >= rhs {
                            r as i64
                        } else {
                            r as i64 - 1
                        }
                    }
                    None => v.floor() as i64,
                }
            }
            _ => self.eval(k as f64).floor() as i64,
        }
    }

    /// The decay margin ε: 1/3 − a for powers, a reporting constant otherwise.
    pub fn epsilon(&self) -> f64 {
        match *self {
            Self::Power(a) => 1.0 / 3.0 - a,
            _ => DEFAULT_EPSILON,
        }
    }

    /// sup x·ρ′(x) over [1, x_max], sampled geometrically; the C in ρ′ ≤ C/x.
    pub fn fitted_c(&self, x_max: f64) -> f64 {
        let samples = 512;
        let ratio = x_max.max(1.0).ln() / samples as f64;
        (0..=samples)
            .map(|i| {
                let x = (ratio * i as f64).exp();
                x * self.deriv(x)
            })
            .fold(0.0, f64::max)
    }

    /// Samples [x0, x1] geometrically and checks the monotonicity hypotheses.
    pub fn check_hypotheses(&self, x0: f64, x1: f64, samples: usize) -> RhoHypotheses {
        let samples = samples.max(2);
        let step = (x1 / x0).ln() / (samples - 1) as f64;
        let xs: Vec<f64> = (0..samples).map(|i| x0 * (step * i as f64).exp()).collect();
        let mono = |f: &dyn Fn(f64) -> f64, up: bool| {
            xs.windows(2).all(|w| {
                let (a, b) = (f(w[0]), f(w[1]));
                let tol = 1e-12 * a.abs().max(b.abs());
                if up {
                    b >= a - tol
                } else {
                    b <= a + tol
                }
            })
        };
        RhoHypotheses {
            nondecreasing: mono(&|x| self.eval(x), true),
            derivative_nonincreasing: mono(&|x| self.deriv(x), false),
            second_derivative_nondecreasing: mono(&|x| self.deriv2(x), true),
            unbounded: !matches!(self, Self::Constant(_)),
            fast_decay: matches!(*self, Self::Power(a) if a < 1.0 / 3.0),
        }
    }

    pub fn descriptor(&self) -> String {
        match *self {
            Self::Power(a) => format!("power:{a}"),
            Self::LogPower(c) => format!("log_power:{c}"),
            Self::LogScaled(c) => format!("log:{c}"),
            Self::Constant(c0) => format!("constant:{c0}"),
        }
    }
}

impl FromStr for RhoSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Descriptor(s.to_string());
        let (kind, param) = match s.split_once(':') {
            Some((k, p)) => (k, Some(p)),
            None => (s, None),
        };
        let num = |default: Option<f64>| -> Result<f64> {
            match param {
                Some(p) => p.trim().parse::<f64>().map_err(|_| bad()),
                None => default.ok_or_else(bad),
            }
        };
        match kind {
            "power" => Self::power(num(None)?),
            "log" | "log_scaled" => Self::log_scaled(num(Some(1.0))?),
            "log_power" => Self::log_power(num(None)?),
            "constant" | "const" => Self::constant(num(Some(0.0))?),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RhoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// Phase convention for the rotated squares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationVariant {
    /// Weight e(n^{-1/2} j).
    LinearPhase,
    /// Weight e(n^{-1/2} j²); the transform is ν̂ₙ(γ + n^{-1/2}).
    #[default]
    QuadraticPhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeasureFamily {
    Squares,
    Rotated { variant: RotationVariant },
    Perturbed { rho: RhoSpec },
    /// Cesàro averages on {1, …, n}; their transforms decay uniformly.
    Uniform,
}

impl MeasureFamily {
    pub fn parse(s: &str) -> Result<Self> {
        s.parse()
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::Squares => "squares".into(),
            Self::Rotated { variant: RotationVariant::QuadraticPhase } => "rotated:quadratic".into(),
            Self::Rotated { variant: RotationVariant::LinearPhase } => "rotated:linear".into(),
            Self::Perturbed { rho } => format!("perturbed:{}", rho.descriptor()),
            Self::Uniform => "uniform".into(),
        }
    }

    /// Site of the k-th atom for families of the form (1/n) Σ_{k≤n} δ_{site(k)}.
    pub fn prefix_site(&self, k: u64) -> Option<i64> {
        let sq = (k as i64).checked_mul(k as i64)?;
        match self {
            Self::Squares => Some(sq),
            Self::Perturbed { rho } => Some(sq + rho.floor_at(k)),
            Self::Uniform => Some(k as i64),
            Self::Rotated { .. } => None,
        }
    }

    pub fn is_prefix_average(&self) -> bool {
        !matches!(self, Self::Rotated { .. })
    }

    /// Exact max |site| over the support of μₙ.
    pub fn support_radius(&self, n: u64) -> u64 {
        assert!(n >= 1, "families are indexed from 1");
        match self {
            Self::Squares | Self::Rotated { .. } => n * n,
            Self::Uniform => n,
            // sites k² + ⌊ρ(k)⌋ increase with k, so the extremes are k = 1, n
            Self::Perturbed { .. } => {
                let first = self.prefix_site(1).expect("prefix family");
                let last = self.prefix_site(n).expect("prefix family");
                first.unsigned_abs().max(last.unsigned_abs())
            }
        }
    }

    /// μₙ with weights in `T`.
    pub fn measure_in<T: Real>(&self, n: u64) -> Result<WeightedMeasure<T>> {
        if n == 0 {
            return Err(Error::InvalidParameter("family index must be ≥ 1".into()));
        }
        if (n as u128) * (n as u128) > i64::MAX as u128 {
            return Err(Error::Resource {
                what: "family index (sites overflow i64)",
                requested: n,
                cap: 3_037_000_499,
            });
        }
        match self {
            Self::Rotated { variant } => Ok(rotated_in(n, *variant)),
            _ => Ok(WeightedMeasure::uniform_on(
                (1..=n).map(|k| self.prefix_site(k).expect("prefix family")),
            )),
        }
    }

    pub fn measure(&self, n: u64) -> Result<WeightedMeasure<f64>> {
        self.measure_in(n)
    }

    /// (site, multiplicity) of μₙ = (1/n) Σ δ_{site(k)}, with multiplicities summing to n.
    pub fn multiplicities(&self, n: u64) -> Option<Vec<(i64, u64)>> {
        let mut sites: Vec<i64> = (1..=n).map(|k| self.prefix_site(k)).collect::<Option<_>>()?;
        sites.sort_unstable();
        let mut out: Vec<(i64, u64)> = Vec::new();
        for s in sites {
            match out.last_mut() {
                Some((t, c)) if *t == s => *c += 1,
                _ => out.push((s, 1)),
            }
        }
        Some(out)
    }
}

impl FromStr for MeasureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "squares" => return Ok(Self::Squares),
            "uniform" => return Ok(Self::Uniform),
            "rotated" | "rotated:quadratic" => {
                return Ok(Self::Rotated {
                    variant: RotationVariant::QuadraticPhase,
                })
            }
            "rotated:linear" => {
                return Ok(Self::Rotated {
                    variant: RotationVariant::LinearPhase,
                })
            }
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("perturbed:") {
            let rho = rest.parse().map_err(|_| Error::Descriptor(s.to_string()))?;
            return Ok(Self::Perturbed { rho });
        }
        Err(Error::Descriptor(s.to_string()))
    }
}

impl fmt::Display for MeasureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// n^{-1/2} mod 1, exact when n is a perfect square.
pub fn rotation_frequency(n: u64) -> Frequency {
    let r = n.sqrt();
    if r * r == n {
        Frequency::ratio(1, r)
    } else {
        Frequency::new(1.0 / (n as f64).sqrt()).expect("finite")
    }
}

fn rotated_in<T: Real>(n: u64, variant: RotationVariant) -> WeightedMeasure<T> {
    let theta = rotation_frequency(n);
    let inv = T::one() / T::of(n as f64);
    let atoms = (1..=n as i64)
        .map(|j| {
            let tag = match variant {
                RotationVariant::LinearPhase => j,
                RotationVariant::QuadraticPhase => j * j,
            };
            let w: Complex<T> = e_site(tag, &theta);
            (j * j, w * inv)
        })
        .collect();
    WeightedMeasure::from_sorted(atoms)
}

/// νₙ = (1/n) Σ_{k≤n} δ_{k²}.
pub fn squares_family(n: u64) -> WeightedMeasure<f64> {
    MeasureFamily::Squares.measure(n).expect("valid index")
}

pub fn rotated_squares(n: u64, variant: RotationVariant) -> WeightedMeasure<f64> {
    MeasureFamily::Rotated { variant }.measure(n).expect("valid index")
}

/// (1/N) Σ_{k≤N} δ_{k²+⌊ρ(k)⌋}; colliding atoms are merged.
pub fn perturbed_squares(rho: RhoSpec, n: u64) -> WeightedMeasure<f64> {
    MeasureFamily::Perturbed { rho }.measure(n).expect("valid index")
}

pub fn support_radius(family: &MeasureFamily, n: u64) -> u64 {
    family.support_radius(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn squares_examples() {
        assert_eq!(squares_family(1), WeightedMeasure::dirac(1));
        let nu3 = squares_family(3);
        let sites: Vec<i64> = nu3.atoms().iter().map(|a| a.0).collect();
        assert_eq!(sites, vec![1, 4, 9]);
        assert!(nu3.is_probability());
        let z = squares_family(100).fourier_at(&Frequency::ratio(1, 4));
        assert!((z - Complex64::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn rotated_examples() {
        for v in [RotationVariant::LinearPhase, RotationVariant::QuadraticPhase] {
            assert_eq!(rotated_squares(1, v), WeightedMeasure::dirac(1));
        }
        let m = rotated_squares(4, RotationVariant::QuadraticPhase);
        for &(s, w) in m.atoms() {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            assert!((w - Complex64::new(0.25 * sign, 0.0)).norm() < 1e-15, "{s}");
        }
        let mu = rotated_squares(25, RotationVariant::QuadraticPhase);
        let nu = squares_family(25);
        let g = Frequency::new(0.3).unwrap();
        let shifted = g.shifted(&rotation_frequency(25));
        assert!((mu.fourier_at(&g) - nu.fourier_at(&shifted)).norm() < 1e-10);
        assert!((mu.total_variation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_examples() {
        let c0 = RhoSpec::constant(0.0).unwrap();
        assert_eq!(perturbed_squares(c0, 3), squares_family(3));
        let log = RhoSpec::log_scaled(1.0).unwrap();
        let sites: Vec<i64> = perturbed_squares(log, 4).atoms().iter().map(|a| a.0).collect();
        assert_eq!(sites, vec![1, 5, 10, 17]);
        let quarter = RhoSpec::power(0.25).unwrap();
        let mu = perturbed_squares(quarter, 16);
        assert_eq!(mu.atoms().last().unwrap().0, 258);
        let fam = MeasureFamily::Perturbed { rho: quarter };
        assert_eq!(fam.support_radius(16), 258);
    }

    #[test]
    fn radii() {
        assert_eq!(MeasureFamily::Squares.support_radius(10), 100);
        let rot = MeasureFamily::parse("rotated:quadratic").unwrap();
        assert_eq!(rot.support_radius(7), 49);
        assert_eq!(rot.measure(7).unwrap().support_radius(), 49);
    }

    #[test]
    fn exact_power_floor() {
        let r = RhoSpec::power(0.25).unwrap();
        assert_eq!(r.floor_at(15), 1);
        assert_eq!(r.floor_at(16), 2);
        assert_eq!(r.floor_at(80), 2);
        assert_eq!(r.floor_at(81), 3);
        let r = RhoSpec::power(0.75).unwrap();
        // 16^{3/4} = 8 exactly; 15^{3/4} < 8
        assert_eq!(r.floor_at(16), 8);
        assert_eq!(r.floor_at(15), 7);
        let r = RhoSpec::power(0.3).unwrap();
        // 2^10 = 1024: 1024^{0.3} = 8
        assert_eq!(r.floor_at(1024), 8);
        assert_eq!(r.floor_at(1023), 7);
    }

    #[test]
    fn inverse_round_trip() {
        for rho in [
            RhoSpec::power(0.25).unwrap(),
            RhoSpec::log_scaled(2.0).unwrap(),
            RhoSpec::log_power(1.5).unwrap(),
        ] {
            for y in [0.5, 1.0, 3.0, 7.25] {
                let x = rho.inverse(y).unwrap();
                assert!((rho.eval(x) - y).abs() <= 1e-9 * y, "{rho} at {y}");
            }
        }
        assert_eq!(RhoSpec::constant(2.0).unwrap().inverse(3.0), None);
    }

    #[test]
    fn hypotheses() {
        let good = RhoSpec::power(0.25).unwrap().check_hypotheses(1.0, 1e8, 200);
        assert!(good.all(), "{good:?}");
        let log = RhoSpec::log_scaled(1.0).unwrap().check_hypotheses(1.0, 1e8, 200);
        assert!(log.nondecreasing && log.derivative_nonincreasing && log.second_derivative_nondecreasing);
        assert!(!log.fast_decay);
        assert!(!RhoSpec::power(0.5).unwrap().check_hypotheses(1.0, 1e6, 50).all());
    }

    #[test]
    fn descriptors_round_trip() {
        for d in ["squares", "uniform", "rotated:quadratic", "rotated:linear", "perturbed:power:0.25", "perturbed:log:1", "perturbed:log_power:2", "perturbed:constant:3"] {
            let f = MeasureFamily::parse(d).unwrap();
            assert_eq!(MeasureFamily::parse(&f.descriptor()).unwrap(), f);
        }
        assert_eq!(MeasureFamily::parse("rotated").unwrap().descriptor(), "rotated:quadratic");
        assert_eq!(
            MeasureFamily::parse("perturbed:log").unwrap(),
            MeasureFamily::Perturbed { rho: RhoSpec::LogScaled(1.0) }
        );
        for bad in ["", "cubes", "perturbed:power", "perturbed:power:x", "perturbed:power:1.5"] {
            assert!(MeasureFamily::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn fitted_c_of_log_is_scale() {
        let c = RhoSpec::log_scaled(3.0).unwrap().fitted_c(1e6);
        assert!((c - 3.0).abs() < 1e-3);
    }
}
