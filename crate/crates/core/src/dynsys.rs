//! Rotations and cyclic shifts, and the averages μf(x) = Σ_j f(τʲx) μ(j).
//!
//! An irrational rotation is represented by α = A/2⁶², a rational surrogate
//! with exact integer phase arithmetic.

use num_complex::Complex64;
use num_integer::Roots;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::MeasureFamily;
use crate::measure::WeightedMeasure;
use crate::phase::{e, frac, Frequency};
use crate::sum::ComplexSum;

pub const ROTATION_BITS: u32 = 62;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum System {
    /// x ↦ x + A/2⁶² mod 1.
    TorusRotation { numerator: u64 },
    /// x ↦ x + 1 mod M.
    CyclicShift { modulus: u64 },
}

impl System {
    pub fn rotation(numerator: u64) -> Result<Self> {
        if numerator == 0 || numerator >= 1 << ROTATION_BITS {
            return Err(Error::InvalidParameter(format!("rotation numerator {numerator} outside (0, 2^62)")));
        }
        Ok(Self::TorusRotation { numerator })
    }

    /// α = frac of the golden ratio, (√5 − 1)/2 rounded down to A/2⁶².
    pub fn golden_rotation() -> Self {
        let root = (5u128 << 124).sqrt();
        Self::TorusRotation {
            numerator: ((root - (1u128 << 62)) / 2) as u64,
        }
    }

    pub fn cyclic(modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidParameter("cyclic modulus 0".into()));
        }
        Ok(Self::CyclicShift { modulus })
    }

    /// α as an exact frequency; `None` for a shift.
    pub fn alpha(&self) -> Option<Frequency> {
        match *self {
            Self::TorusRotation { numerator } => Some(Frequency::ratio(numerator as i64, 1 << ROTATION_BITS)),
            Self::CyclicShift { .. } => None,
        }
    }
}

/// A point of the torus (in [0, 1)) or of ℤ_M.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Torus(f64),
    Cyclic(u64),
}

impl Point {
    pub fn coordinate(&self) -> f64 {
        match *self {
            Self::Torus(x) => x,
            Self::Cyclic(x) => x as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// χ_[lo, hi) on the torus, or on ℤ_M with integer ends.
    Indicator { lo: f64, hi: f64 },
    /// e(m·) on the torus, e(m·/M) on ℤ_M.
    Trig { m: i64 },
    /// Values on ℤ_M.
    Table { values: Vec<f64> },
}

impl Observable {
    /// Mean over the space.
    pub fn mean(&self, sys: &System) -> Result<f64> {
        match (self, sys) {
            (Self::Indicator { lo, hi }, System::TorusRotation { .. }) => Ok((hi - lo).clamp(0.0, 1.0)),
            (Self::Indicator { lo, hi }, System::CyclicShift { modulus }) => {
                let hits = (0..*modulus).filter(|&y| (y as f64) >= *lo && (y as f64) < *hi).count();
                Ok(hits as f64 / *modulus as f64)
            }
            (Self::Trig { m }, System::TorusRotation { .. }) => Ok(if *m == 0 { 1.0 } else { 0.0 }),
            (Self::Trig { m }, System::CyclicShift { modulus }) => {
                Ok(if m.rem_euclid(*modulus as i64) == 0 { 1.0 } else { 0.0 })
            }
            (Self::Table { values }, System::CyclicShift { modulus }) => {
                self.check(sys)?;
                Ok(values.iter().sum::<f64>() / *modulus as f64)
            }
            (Self::Table { .. }, System::TorusRotation { .. }) => Err(Self::mismatch()),
        }
    }

    fn mismatch() -> Error {
        Error::InvalidParameter("table observables live on a cyclic shift".into())
    }

    fn check(&self, sys: &System) -> Result<()> {
        match (self, sys) {
            (Self::Table { values }, System::CyclicShift { modulus }) if values.len() as u64 != *modulus => {
                Err(Error::InvalidParameter(format!("table of length {} on ℤ_{modulus}", values.len())))
            }
            (Self::Table { .. }, System::TorusRotation { .. }) => Err(Self::mismatch()),
            _ => Ok(()),
        }
    }

    /// f(τʲx).
    fn at_orbit(&self, sys: &System, x: Point, j: i64) -> Complex64 {
        match (sys, x) {
            (System::TorusRotation { .. }, Point::Torus(x0)) => {
                let alpha = sys.alpha().unwrap();
                match self {
                    Self::Trig { m } => e(frac(crate::phase::frac_mul(*m, x0) + alpha.phase_of(j.wrapping_mul(*m)))),
                    Self::Indicator { lo, hi } => {
                        let y = frac(x0 + alpha.phase_of(j));
                        Complex64::new(f64::from((y >= *lo && y < *hi) as u8), 0.0)
                    }
                    Self::Table { .. } => unreachable!("checked"),
                }
            }
            (System::CyclicShift { modulus }, Point::Cyclic(x0)) => {
                let m = *modulus as i128;
                let y = ((x0 as i128) + j as i128).rem_euclid(m) as u64;
                match self {
                    Self::Trig { m: freq } => crate::phase::e_ratio(((*freq as i128 * y as i128) % m) as i64, *modulus),
                    Self::Indicator { lo, hi } => Complex64::new(f64::from(((y as f64) >= *lo && (y as f64) < *hi) as u8), 0.0),
                    Self::Table { values } => Complex64::new(values[y as usize], 0.0),
                }
            }
            _ => unreachable!("checked"),
        }
    }
}

fn check_point(sys: &System, x: Point) -> Result<()> {
    match (sys, x) {
        (System::TorusRotation { .. }, Point::Torus(v)) if (0.0..1.0).contains(&v) => Ok(()),
        (System::CyclicShift { modulus }, Point::Cyclic(v)) if v < *modulus => Ok(()),
        _ => Err(Error::InvalidParameter(format!("point {x:?} does not belong to {sys:?}"))),
    }
}

/// Σ_j f(τʲx) μ(j) over the atoms of μ.
pub fn weighted_average(sys: &System, f: &Observable, mu: &WeightedMeasure<f64>, x: Point) -> Result<Complex64> {
    f.check(sys)?;
    check_point(sys, x)?;
    let mut acc = ComplexSum::new();
    for &(j, w) in mu.atoms() {
        acc.add(w * f.at_orbit(sys, x, j));
    }
    Ok(acc.sum())
}

/// Evenly spaced sample points.
pub fn sample_points(sys: &System, count: usize) -> Vec<Point> {
    match *sys {
        System::TorusRotation { .. } => (0..count).map(|i| Point::Torus(i as f64 / count as f64)).collect(),
        System::CyclicShift { modulus } => (0..count as u64).map(|i| Point::Cyclic(i * modulus / count as u64)).collect(),
    }
}

/// max − min of a complex sequence, as the diameter of its values.
pub fn oscillation(values: &[Complex64]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Oscillation over the tail half a_{⌊K/2⌋}, …, a_{K−1}.
pub fn tail_oscillation(values: &[Complex64]) -> f64 {
    oscillation(&values[values.len() / 2..])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub n_k: u64,
    pub x: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    /// Tail-half oscillation of the first k + 1 averages at this x.
    pub osc_tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub system: System,
    pub observable: Observable,
    pub family: String,
    pub ns: Vec<u64>,
    pub rows: Vec<TraceRow>,
    /// Over samples, per prefix length K = k + 1.
    pub max_osc_by_k: Vec<f64>,
    pub median_osc: f64,
    pub max_osc: f64,
    pub mean: f64,
    /// max over samples of |last average − mean f|.
    pub final_deviation: f64,
}

/// Averages along the given indices at `x_samples` evenly spaced points.
/// Oscillation statistics are reported, never a convergence claim.
pub fn convergence_trace(
    sys: &System,
    f: &Observable,
    family: &MeasureFamily,
    ns: &[u64],
    x_samples: usize,
) -> Result<ConvergenceReport> {
    let measures = ns.par_iter().map(|&n| family.measure(n)).collect::<Result<Vec<_>>>()?;
    trace_measures(sys, f, &family.descriptor(), ns, &measures, x_samples)
}

/// As [`convergence_trace`] for an explicit list of measures labelled by `ns`.
pub fn trace_measures(
    sys: &System,
    f: &Observable,
    label: &str,
    ns: &[u64],
    measures: &[WeightedMeasure<f64>],
    x_samples: usize,
) -> Result<ConvergenceReport> {
    if ns.len() != measures.len() || ns.is_empty() || x_samples == 0 {
        return Err(Error::InvalidParameter("need matching nonempty index and measure lists and at least one sample".into()));
    }
    f.check(sys)?;
    let mean = f.mean(sys)?;
    let points = sample_points(sys, x_samples);
    let per_point: Vec<(Vec<TraceRow>, Vec<f64>, f64)> = points
        .par_iter()
        .map(|&x| {
            let values = measures.iter().map(|mu| weighted_average(sys, f, mu, x)).collect::<Result<Vec<_>>>()?;
            let oscs: Vec<f64> = (1..=values.len()).map(|k| tail_oscillation(&values[..k])).collect();
            let rows = values
                .iter()
                .enumerate()
                .map(|(k, v)| TraceRow {
                    k,
                    n_k: ns[k],
                    x: x.coordinate(),
                    re: v.re,
                    im: v.im,
                    abs: v.norm(),
                    osc_tail: oscs[k],
                })
                .collect();
            let dev = (values.last().unwrap() - Complex64::new(mean, 0.0)).norm();
            Ok((rows, oscs, dev))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_osc_by_k = vec![0.0f64; ns.len()];
    let mut finals = Vec::with_capacity(per_point.len());
    let mut rows = Vec::new();
    let mut final_deviation = 0.0f64;
    for (r, oscs, dev) in per_point {
        for (m, o) in max_osc_by_k.iter_mut().zip(&oscs) {
            *m = m.max(*o);
        }
        finals.push(*oscs.last().unwrap());
        final_deviation = final_deviation.max(dev);
        rows.extend(r);
    }
    finals.sort_by(f64::total_cmp);
    let median_osc = finals[finals.len() / 2];
    let max_osc = *finals.last().unwrap();
    Ok(ConvergenceReport {
        system: *sys,
        observable: f.clone(),
        family: label.to_string(),
        ns: ns.to_vec(),
        rows,
        max_osc_by_k,
        median_osc,
        max_osc,
        mean,
        final_deviation,
    })
}

/// Writes `k,n_k,x,re,im,abs,osc_tail`.
pub fn write_trace_csv<W: std::io::Write>(report: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::squares_family;
    use crate::weyl::weyl_sum;

    #[test]
    fn dirac_returns_f() {
        let sys = System::golden_rotation();
        let f = Observable::Indicator { lo: 0.2, hi: 0.6 };
        let v = weighted_average(&sys, &f, &WeightedMeasure::dirac(0), Point::Torus(0.3)).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn full_period_is_the_mean() {
        let sys = System::cyclic(7).unwrap();
        let f = Observable::Table { values: vec![1.0, 4.0, -2.0, 0.5, 3.0, 0.0, 7.0] };
        let mu = WeightedMeasure::uniform_on(1..=7);
        let v = weighted_average(&sys, &f, &mu, Point::Cyclic(3)).unwrap();
        assert!((v.re - f.mean(&sys).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn rotation_matches_weyl_sum() {
        let sys = System::golden_rotation();
        let alpha = sys.alpha().unwrap();
        let (m, x, n) = (3i64, 0.125, 500u64);
        let v = weighted_average(&sys, &Observable::Trig { m }, &squares_family(n), Point::Torus(x)).unwrap();
        let (num, den) = alpha.exact().unwrap();
        let w = weyl_sum(n, &Frequency::ratio(num.wrapping_mul(m), den));
        assert!((v - e::<f64>(m as f64 * x) * w).norm() < 1e-10);
    }

    #[test]
    fn golden_numerator() {
        let System::TorusRotation { numerator } = System::golden_rotation() else { unreachable!() };
        let alpha = numerator as f64 / (1u64 << 62) as f64;
        assert!((alpha - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn equal_measures_do_not_oscillate() {
        let sys = System::golden_rotation();
        let mu = squares_family(50);
        let r = trace_measures(&sys, &Observable::Trig { m: 1 }, "squares", &[50; 6], &vec![mu; 6], 8).unwrap();
        assert_eq!(r.max_osc, 0.0);
    }

    #[test]
    fn rejects_mismatched_table() {
        let sys = System::cyclic(5).unwrap();
        let f = Observable::Table { values: vec![1.0; 4] };
        assert!(weighted_average(&sys, &f, &WeightedMeasure::dirac(0), Point::Cyclic(0)).is_err());
        assert!(weighted_average(&System::golden_rotation(), &f, &WeightedMeasure::dirac(0), Point::Torus(0.0)).is_err());
    }
}
