//! Rigorous brackets for sup_γ |P(γ)| of a trigonometric polynomial P.
//!
//! A coarse FFT grid gives a lower bound; the upper bound comes from the
//! fact that a trigonometric polynomial whose frequencies lie in a window of
//! half-width w cannot drop faster than a cosine: if |P| peaks at γ* with
//! value S then |P(γ* + t)| ≥ S cos(2π w t) for |t| ≤ 1/(4w). Every grid
//! cell of radius h/2 therefore satisfies max ≤ value(center)/cos(π w h).
//! The plain Lipschitz bound 2π Σ|c_j||j − c| is also applied, and the
//! smaller of the two wins. Cells that cannot contain the sup are pruned and
//! the rest are refined five-fold until the bracket is tight enough.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::WeightedMeasure;
use crate::phase::{e_site, Frequency};
use crate::scalar::Real;

/// Refinement factor per level.
const SPLIT: usize = 5;

/// Smallest initial grid.
const MIN_GRID: usize = 64;

/// `lower ≤ sup ≤ upper`, with the effective grid resolution used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupBracket<T> {
    pub lower: T,
    pub upper: T,
    /// Effective number of grid points per unit, 5^levels · initial grid.
    pub grid_size: u64,
    /// A frequency where `lower` is attained.
    pub argmax: f64,
}

impl<T: Real> SupBracket<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn contains(&self, x: T) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Size caps for the bracket engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupLimits {
    /// Largest FFT grid for the coarse pass.
    pub max_initial_grid: usize,
    /// Cap on coefficient-evaluations (points × cost per point).
    pub max_work: u64,
    /// Initial grid points per unit of frequency half-width.
    pub oversample: u32,
}

impl Default for SupLimits {
    fn default() -> Self {
        Self {
            max_initial_grid: 1 << 24,
            max_work: 2_000_000_000,
            oversample: 8,
        }
    }
}

/// A trigonometric polynomial Σ c_j e(jγ) with frequencies in a finite window.
pub trait TrigPoly<T: Real>: Sync {
    /// Inclusive frequency window; `None` if P ≡ 0.
    fn band(&self) -> Option<(i64, i64)>;
    fn eval(&self, gamma: f64) -> Complex<T>;
    /// Values at m/G for m = 0..G.
    fn eval_grid(&self, g: usize) -> Vec<Complex<T>>;
    /// An upper bound for Σ|c_j| (scales the rounding allowance).
    fn coeff_l1(&self) -> f64;
    /// An upper bound for Σ|c_j||j − center|.
    fn moment_l1(&self, center: f64) -> f64;
    /// Relative cost of one `eval`.
    fn eval_cost(&self) -> u64;
}

impl<T: Real> TrigPoly<T> for WeightedMeasure<T> {
    fn band(&self) -> Option<(i64, i64)> {
        self.support_span()
    }

    fn eval(&self, gamma: f64) -> Complex<T> {
        self.fourier_at(&Frequency::new(gamma).expect("finite frequency"))
    }

    fn eval_grid(&self, g: usize) -> Vec<Complex<T>> {
        self.fourier_grid(g)
    }

    fn coeff_l1(&self) -> f64 {
        self.total_variation().to64()
    }

    fn moment_l1(&self, center: f64) -> f64 {
        self.atoms()
            .iter()
            .map(|(s, w)| w.norm().to64() * (*s as f64 - center).abs())
            .sum()
    }

    fn eval_cost(&self) -> u64 {
        self.len().max(1) as u64
    }
}

/// γ ↦ (1 − e(γ)) μ̂(γ), represented by the difference measure.
pub struct TrivialityPoly<T> {
    diff: WeightedMeasure<T>,
}

impl<T: Real> TrivialityPoly<T> {
    pub fn new(mu: &WeightedMeasure<T>) -> Self {
        Self {
            diff: mu.difference(),
        }
    }

    pub fn difference(&self) -> &WeightedMeasure<T> {
        &self.diff
    }
}

impl<T: Real> TrigPoly<T> for TrivialityPoly<T> {
    fn band(&self) -> Option<(i64, i64)> {
        self.diff.band()
    }
    fn eval(&self, gamma: f64) -> Complex<T> {
        self.diff.eval(gamma)
    }
    fn eval_grid(&self, g: usize) -> Vec<Complex<T>> {
        self.diff.eval_grid(g)
    }
    fn coeff_l1(&self) -> f64 {
        self.diff.coeff_l1()
    }
    fn moment_l1(&self, center: f64) -> f64 {
        self.diff.moment_l1(center)
    }
    fn eval_cost(&self) -> u64 {
        self.diff.eval_cost()
    }
}

/// Outcome of comparing a sup with a threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decision<T> {
    /// upper ≤ threshold.
    Below(SupBracket<T>),
    /// lower > threshold.
    Above(SupBracket<T>),
    /// The bracket reached its resolution floor while straddling the threshold.
    Undecided(SupBracket<T>),
}

/// Bracket sup_γ |P(γ)| to absolute width `tol`.
pub fn sup_bracket<T: Real, P: TrigPoly<T>>(
    p: &P,
    tol: f64,
    limits: &SupLimits,
) -> Result<SupBracket<T>> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let out = refine(p, limits, |lo, hi| hi - lo <= tol)?;
    if out.1 {
        Ok(out.0)
    } else {
        Err(Error::Resource {
            what: "sup bracket precision (tolerance below rounding floor)",
            requested: (1.0 / tol).min(u64::MAX as f64) as u64,
            cap: (1.0 / out.0.width().to64()).min(u64::MAX as f64) as u64,
        })
    }
}

/// Refine only as far as needed to place the sup relative to `threshold`.
pub fn sup_decide<T: Real, P: TrigPoly<T>>(
    p: &P,
    threshold: f64,
    limits: &SupLimits,
) -> Result<Decision<T>> {
    let (b, _) = refine(p, limits, |lo, hi| hi <= threshold || lo > threshold)?;
    Ok(if b.upper.to64() <= threshold {
        Decision::Below(b)
    } else if b.lower.to64() > threshold {
        Decision::Above(b)
    } else {
        Decision::Undecided(b)
    })
}

/// Rigorous bracket for sup_γ |(1 − e(γ)) μ̂(γ)|.
pub fn triviality_sup<T: Real>(mu: &WeightedMeasure<T>, tol: f64) -> Result<SupBracket<T>> {
    triviality_sup_with(mu, tol, &SupLimits::default())
}

pub fn triviality_sup_with<T: Real>(
    mu: &WeightedMeasure<T>,
    tol: f64,
    limits: &SupLimits,
) -> Result<SupBracket<T>> {
    sup_bracket(&TrivialityPoly::new(mu), tol, limits)
}

/// The cruder Lipschitz constant 2π(1 + 2R)‖μ‖₁ for γ ↦ (1 − e(γ))μ̂(γ).
pub fn triviality_lipschitz<T: Real>(mu: &WeightedMeasure<T>) -> f64 {
    let r = mu.support_radius() as f64;
    2.0 * std::f64::consts::PI * (1.0 + 2.0 * r) * mu.total_variation().to64()
}

/// Worst-case rounding in a computed value of P on a grid of size `g`.
fn rounding_slack(l1: f64, g: usize, eps: f64) -> f64 {
    let lg = (g as f64).log2().max(1.0);
    (8.0 + 4.0 * lg) * (g as f64).sqrt() * eps * l1
}

/// Core loop. Returns the final bracket and whether `stop` was met.
fn refine<T: Real, P: TrigPoly<T>>(
    p: &P,
    limits: &SupLimits,
    stop: impl Fn(f64, f64) -> bool,
) -> Result<(SupBracket<T>, bool)> {
    let Some((lo_band, hi_band)) = p.band() else {
        let b = SupBracket {
            lower: T::zero(),
            upper: T::zero(),
            grid_size: 1,
            argmax: 0.0,
        };
        return Ok((b, stop(0.0, 0.0)));
    };
    let eps = T::epsilon().to64();
    let l1 = p.coeff_l1();
    let half = (hi_band - lo_band) as f64 / 2.0;
    let center = lo_band as f64 + half;
    let lip = 2.0 * std::f64::consts::PI * p.moment_l1(center);

    let g0 = ((limits.oversample.max(2) as f64 * half).ceil() as u64).max(MIN_GRID as u64).next_power_of_two();
    if g0 > limits.max_initial_grid as u64 {
        return Err(Error::Resource {
            what: "sup bracket initial grid",
            requested: g0,
            cap: limits.max_initial_grid as u64,
        });
    }
    let g0 = g0 as usize;
    let slack = rounding_slack(l1, g0, eps);
    let mut work = (g0 as f64 * (g0 as f64).log2()) as u64 + p.eval_cost();

    // upper bound on |P| over a cell of radius h/2 around a center with value v
    let cell_max = |v: f64, h: f64| -> f64 {
        let h = h * (1.0 + 1e-12);
        let arg = std::f64::consts::PI * half * h;
        let by_cos = if arg < std::f64::consts::FRAC_PI_2 {
            (v + slack) / arg.cos()
        } else {
            f64::INFINITY
        };
        by_cos.min(v + slack + lip * h / 2.0)
    };
    // a cell is discarded when even its most optimistic max is below `lower`
    let keep = |v: f64, h: f64, lower: f64| cell_max(v, h) >= lower - slack;

    let grid = p.eval_grid(g0);
    let mut vals: Vec<f64> = grid.iter().map(|z| z.norm().to64()).collect();
    let (mut argmax, mut lower) = (0.0, 0.0f64);
    for (m, &v) in vals.iter().enumerate() {
        if v > lower {
            lower = v;
            argmax = m as f64 / g0 as f64;
        }
    }
    let mut h = 1.0 / g0 as f64;
    let mut level_max = lower;
    let mut cells: Vec<(f64, f64)> = vals
        .drain(..)
        .enumerate()
        .filter(|&(_, v)| keep(v, h, lower))
        .map(|(m, v)| (m as f64 / g0 as f64, v))
        .collect();
    drop(grid);
    let mut grid_size = g0 as u64;

    loop {
        let upper = cells
            .iter()
            .map(|&(_, v)| cell_max(v, h))
            .fold(level_max.max(0.0), f64::max)
            .max(lower);
        let lower_out = (lower - slack).max(0.0);
        let done = stop(lower_out, upper);
        // resolution floor: frequencies cannot be placed more finely than this
        let floor = h < 64.0 * f64::EPSILON || upper - lower_out <= 4.0 * slack;
        if done || floor {
            let b = SupBracket {
                lower: T::of(lower_out),
                upper: T::of(upper) * (T::one() + T::epsilon()),
                grid_size,
                argmax,
            };
            return Ok((b, done));
        }

        let h_new = h / SPLIT as f64;
        let mut points: Vec<f64> = Vec::with_capacity(cells.len() * (SPLIT - 1));
        for &(c, _) in &cells {
            for i in [-2.0, -1.0, 1.0, 2.0] {
                points.push(c + i * h_new);
            }
        }
        work = work.saturating_add(points.len() as u64 * p.eval_cost());
        if work > limits.max_work {
            return Err(Error::Resource {
                what: "sup bracket refinement work",
                requested: work,
                cap: limits.max_work,
            });
        }
        let new_vals: Vec<f64> = points
            .par_iter()
            .with_min_len(64)
            .map(|&g| p.eval(g).norm().to64())
            .collect();

        let mut next: Vec<(f64, f64)> = Vec::with_capacity(points.len() + cells.len());
        level_max = 0.0;
        for (ci, &(c, v)) in cells.iter().enumerate() {
            let kids = &new_vals[ci * 4..ci * 4 + 4];
            let pts = &points[ci * 4..ci * 4 + 4];
            for (&x, &w) in [c].iter().chain(pts).zip([v].iter().chain(kids)) {
                level_max = level_max.max(w);
                if w > lower {
                    lower = w;
                    argmax = x - x.floor();
                }
                next.push((x, w));
            }
        }
        h = h_new;
        grid_size = grid_size.saturating_mul(SPLIT as u64);
        next.retain(|&(_, w)| keep(w, h, lower));
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        cells = next;
    }
}

/// sup over a uniform grid of size `g`, for cross-checks.
pub fn grid_max<T: Real, P: TrigPoly<T>>(p: &P, g: usize) -> f64 {
    p.eval_grid(g).iter().map(|z| z.norm().to64()).fold(0.0, f64::max)
}

/// Value of (1 − e(γ))μ̂(γ) at an exact frequency.
pub fn triviality_at<T: Real>(mu: &WeightedMeasure<T>, gamma: &Frequency) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    (one - e_site::<T>(1, gamma)) * mu.fourier_at(gamma)
}

impl<T: Real> Default for SupBracket<T> {
    fn default() -> Self {
        Self {
            lower: T::zero(),
            upper: T::zero(),
            grid_size: 0,
            argmax: 0.0,
        }
    }
}
