//! The two pathways that control the small-scale bad parts at a selected
//! index n_k with S = S(n_{k−1}) and σ = σ on {1..2^{S+k}}:
//!
//! * E₁: ‖μ ∗ σ ∗ b_s‖₁ ≤ 2^{−S−k+s+1} ‖b_s‖₁ for each scale s < S,
//!   since σ ∗ b_Q vanishes except on two strips of length |Q|;
//! * E₂: ‖(μ − μ ∗ σ) ∗ B‖₂² ≤ sup|μ̂(1 − σ̂)|² ‖B‖₂², with B = Σ_{s<S} b_s and
//!   ‖B‖₂² = Σ_s ‖b_s‖₂² because the pieces have disjoint supports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decompose::{cz_decompose, SparseSignal};
use super::sigma::{sigma_deficit_sup, sigma_n};
use crate::error::{Error, Result};
use crate::families::MeasureFamily;
use crate::measure::WeightedMeasure;
use crate::selection::SelectionState;

/// Largest dyadic interval materialized densely.
const MAX_PIECE_LEN: u64 = 1 << 22;

/// Relative allowance for rounding in the computed norms.
const REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleTerm {
    pub s: u32,
    pub pieces: usize,
    pub b_l1: f64,
    pub b_l2_sq: f64,
    /// ‖μ ∗ σ ∗ b_s‖₁.
    pub e1_term: f64,
    /// 2^{−S−k+s+1} ‖b_s‖₁.
    pub e1_term_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathwayRow {
    pub k: usize,
    pub n: u64,
    pub s_prev: u32,
    pub scales: Vec<ScaleTerm>,
    /// ‖μ ∗ σ ∗ B‖₁.
    pub e1_value: f64,
    pub e1_bound: f64,
    /// ‖(μ − μ ∗ σ) ∗ B‖₂².
    pub e2_value: f64,
    /// 2^{−2S−2k} Σ_s ‖b_s‖₂²; holds when the deficit is below 2^{−S−k}.
    pub e2_bound: f64,
    /// (sup|μ̂(1 − σ̂)| upper)² Σ_s ‖b_s‖₂², which always holds; `None` when
    /// there are no scales or the bracket is out of reach.
    pub e2_deficit_bound: Option<f64>,
    pub e1_ok: bool,
    pub e2_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E1E2Report {
    pub lambda: f64,
    pub rows: Vec<PathwayRow>,
}

impl E1E2Report {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.e1_ok && r.e2_ok)
    }
}

fn sum_measures(parts: &[WeightedMeasure<f64>]) -> WeightedMeasure<f64> {
    WeightedMeasure::new(parts.iter().flat_map(|m| m.atoms().iter().copied())).expect("finite")
}

/// E₁/E₂ values and bounds at every selected index.
pub fn e1_e2_diagnostics(
    phi: &SparseSignal<f64>,
    state: &SelectionState,
    family: &MeasureFamily,
    lambda: f64,
) -> Result<E1E2Report> {
    let cz = cz_decompose(phi, lambda)?;
    let rows = state
        .chosen
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let k = i + 1;
            let s_prev = if i == 0 { 0 } else { state.s_values[i - 1] };
            pathway_row(&cz, family, k, n, s_prev)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(E1E2Report { lambda, rows })
}

fn pathway_row(
    cz: &super::decompose::CZDecomposition<f64>,
    family: &MeasureFamily,
    k: usize,
    n: u64,
    s_prev: u32,
) -> Result<PathwayRow> {
    let mu = family.measure(n)?;
    let sigma = sigma_n(s_prev, k as u32)?;
    let mu_sigma = mu.convolve(&sigma);
    let shift = -(s_prev as f64) - k as f64;
    let mut scales = Vec::new();
    let mut b_parts = Vec::new();
    for s in 0..s_prev {
        let pieces: Vec<_> = cz.pieces_at_scale(s).collect();
        if pieces.is_empty() {
            continue;
        }
        let dense = pieces
            .iter()
            .map(|p| p.to_measure(MAX_PIECE_LEN))
            .collect::<Result<Vec<_>>>()?;
        let b_s = sum_measures(&dense);
        let b_l1: f64 = pieces.iter().map(|p| p.l1_norm()).sum();
        let b_l2_sq: f64 = pieces.iter().map(|p| p.l2_norm_sq()).sum();
        let e1_term = mu_sigma.convolve(&b_s).l1_norm();
        scales.push(ScaleTerm {
            s,
            pieces: pieces.len(),
            b_l1,
            b_l2_sq,
            e1_term,
            e1_term_bound: (shift + s as f64 + 1.0).exp2() * b_l1,
        });
        b_parts.push(b_s);
    }
    let big_b = sum_measures(&b_parts);
    let e1_value = mu_sigma.convolve(&big_b).l1_norm();
    let e1_bound: f64 = scales.iter().map(|t| t.e1_term_bound).sum();
    let e2_value = mu.sub(&mu_sigma).convolve(&big_b).l2_norm_sq();
    let e2_bound = (2.0 * shift).exp2() * scales.iter().map(|t| t.b_l2_sq).sum::<f64>();
    let e2_deficit_bound = if scales.is_empty() {
        None
    } else {
        let l2: f64 = scales.iter().map(|t| t.b_l2_sq).sum();
        match sigma_deficit_sup(&mu, s_prev, k as u32, 1e-9) {
            Ok(r) => Some(r.deficit.upper * r.deficit.upper * l2),
            Err(Error::Resource { .. }) => None,
            Err(e) => return Err(e),
        }
    };
    let slack = |b: f64| b * REL_TOL + 1e-15;
    let e1_ok = e1_value <= e1_bound + slack(e1_bound)
        && scales.iter().all(|t| t.e1_term <= t.e1_term_bound + slack(t.e1_term_bound));
    Ok(PathwayRow {
        k,
        n,
        s_prev,
        scales,
        e1_value,
        e1_bound,
        e2_value,
        e2_bound,
        e2_deficit_bound,
        e1_ok,
        e2_ok: e2_value <= e2_bound + slack(e2_bound),
    })
}
