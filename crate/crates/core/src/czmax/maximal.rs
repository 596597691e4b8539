//! The maximal function Mφ(x) = max_k |(μ_k ∗ φ)(x)| over a finite list of
//! measures, its level sets, and the empirical weak-(1,1) ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measure::{FiniteFn, WeightedMeasure};

/// Mφ on its (finite) support, sorted by position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalFunction {
    values: Vec<(i64, f64)>,
    /// The same values sorted ascending, for level-set counts.
    #[serde(skip)]
    sorted: Vec<f64>,
}

impl MaximalFunction {
    fn from_values(values: Vec<(i64, f64)>) -> Self {
        let mut sorted: Vec<f64> = values.iter().map(|v| v.1).collect();
        sorted.sort_by(f64::total_cmp);
        Self { values, sorted }
    }

    pub fn values(&self) -> &[(i64, f64)] {
        &self.values
    }

    pub fn at(&self, x: i64) -> f64 {
        match self.values.binary_search_by_key(&x, |v| v.0) {
            Ok(i) => self.values[i].1,
            Err(_) => 0.0,
        }
    }

    /// #{x : Mφ(x) > λ}.
    pub fn level_count(&self, lambda: f64) -> u64 {
        (self.sorted.len() - self.sorted.partition_point(|&v| v <= lambda)) as u64
    }
}

/// Pointwise max over the list of |μ ∗ φ|.
pub fn maximal_function(phi: &FiniteFn<f64>, measures: &[WeightedMeasure<f64>]) -> MaximalFunction {
    let convs: Vec<Vec<(i64, f64)>> = measures
        .par_iter()
        .map(|mu| {
            mu.convolve(phi)
                .atoms()
                .iter()
                .map(|&(x, z)| (x, z.norm()))
                .collect()
        })
        .collect();
    let mut all: Vec<(i64, f64)> = convs.into_iter().flatten().collect();
    all.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut values: Vec<(i64, f64)> = Vec::with_capacity(all.len());
    for (x, v) in all {
        match values.last_mut() {
            Some((y, m)) if *y == x => *m = m.max(v),
            _ => values.push((x, v)),
        }
    }
    MaximalFunction::from_values(values)
}

/// One λ of a weak-type sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakRow {
    pub lambda: f64,
    pub levelset_count: u64,
    /// λ · #{Mφ > λ} / ‖φ‖₁.
    pub ratio: f64,
}

/// Dyadic λ from ‖φ‖_∞ down to ‖φ‖₁/2^20.
pub fn default_lambda_grid(phi: &FiniteFn<f64>) -> Vec<f64> {
    let top = phi.sup_norm();
    let floor = phi.l1_norm() / (1u64 << 20) as f64;
    let mut out = Vec::new();
    let mut l = top;
    while l >= floor && l > 0.0 && out.len() < 128 {
        out.push(l);
        l /= 2.0;
    }
    out
}

pub fn weak11_rows(phi: &FiniteFn<f64>, mf: &MaximalFunction, lambda_grid: &[f64]) -> Vec<WeakRow> {
    let norm = phi.l1_norm();
    lambda_grid
        .iter()
        .map(|&lambda| {
            let c = mf.level_count(lambda);
            WeakRow {
                lambda,
                levelset_count: c,
                ratio: lambda * c as f64 / norm,
            }
        })
        .collect()
}

/// max over the grid of λ·#{x : Mφ(x) > λ}/‖φ‖₁, an empirical lower
/// estimate of the weak-(1,1) constant.
pub fn weak11_ratio(phi: &FiniteFn<f64>, measures: &[WeightedMeasure<f64>], lambda_grid: &[f64]) -> f64 {
    let mf = maximal_function(phi, measures);
    weak11_rows(phi, &mf, lambda_grid)
        .iter()
        .map(|r| r.ratio)
        .fold(0.0, f64::max)
}
