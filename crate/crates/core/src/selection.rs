//! Greedy extraction of a subsequence n₁ < n₂ < … along which the
//! triviality functional decays fast enough for the maximal inequality:
//!
//! ```text
//! sup_γ |(1 − e(γ)) μ̂_{n_k}(γ)| ≤ 2^{−2S(n_{k−1}) − 2k}   (k ≥ 2)
//! ```
//!
//! with S(n) the cumulative dyadic support exponent and S(n_k) strictly
//! increasing. The first index is unconstrained.
//!
//! Candidates are screened with cheap rigorous lower bounds (probe
//! frequencies and ‖d‖₂ ≤ sup|d̂|, d the difference measure) before the
//! bracket engine is asked to certify an upper bound.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::MeasureFamily;
use crate::measure::WeightedMeasure;
use crate::phase::{e_site, Frequency};
use crate::sum::ComplexSum;
use crate::supnorm::{sup_bracket, sup_decide, Decision, SupLimits, TrivialityPoly};

/// Largest denominator among the rational probe frequencies.
const PROBE_MAX_DEN: u64 = 12;

/// Number of golden-ratio probe frequencies.
const PROBE_GOLDEN: usize = 16;

/// Allowance subtracted from floating-point probe values.
const PROBE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Number of indices to select.
    pub k: usize,
    /// Bracket width for reported sups that are not threshold decisions.
    pub sup_tol: f64,
    /// Largest index examined.
    pub search_cap: u64,
    pub limits: SupLimits,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: 3,
            sup_tol: 1e-6,
            search_cap: 100_000,
            limits: SupLimits::default(),
        }
    }
}

/// A selected subsequence together with its certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    pub family: String,
    pub chosen: Vec<u64>,
    #[serde(rename = "S_values")]
    pub s_values: Vec<u32>,
    /// Upper ends of the sup brackets at each chosen index.
    pub achieved_sups: Vec<f64>,
    /// 2^{−2S(n_{k−1})−2k}; `None` for the unconstrained first index.
    pub bounds: Vec<Option<f64>>,
}

/// Why a greedy step found nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StallReport {
    pub family: String,
    /// The step that stalled (1-based).
    pub k: usize,
    pub chosen_so_far: Vec<u64>,
    pub bound: f64,
    pub searched_up_to: u64,
    /// Smallest certified lower bound for the functional over the candidates.
    pub best_lower_bound: f64,
    pub best_index: u64,
    /// Candidates the bracket engine could not place relative to the bound.
    pub undecided: u64,
}

/// ⌈log₂ r⌉ for r ≥ 1, and 0 for r ≤ 1.
pub fn dyadic_exponent(r: u64) -> u32 {
    if r <= 1 {
        0
    } else {
        64 - (r - 1).leading_zeros()
    }
}

/// S(n) = min{s ≥ 0 : supp μ_m ⊂ [−2^s, 2^s] for all m ≤ n}.
///
/// Support radii of every built-in family are nondecreasing in n, so the
/// cumulative maximum is the radius at n.
pub fn s_of(family: &MeasureFamily, n: u64) -> u32 {
    dyadic_exponent(family.support_radius(n))
}

/// N(s) = min{n : S(n) > s}, searched up to `cap`.
pub fn n_of_s(family: &MeasureFamily, s: u32, cap: u64) -> Result<u64> {
    if s_of(family, cap) <= s {
        return Err(Error::Resource {
            what: "N(s) search",
            requested: cap.saturating_add(1),
            cap,
        });
    }
    let (mut lo, mut hi) = (1u64, cap);
    if s_of(family, 1) > s {
        return Ok(1);
    }
    // invariant: S(lo) ≤ s < S(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if s_of(family, mid) > s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Splits μ into the part on [−radius, radius] and the rest.
pub fn tail_split(
    mu: &WeightedMeasure<f64>,
    radius: u64,
) -> (WeightedMeasure<f64>, WeightedMeasure<f64>) {
    let r = radius.min(i64::MAX as u64) as i64;
    let compact = mu.restrict(-r, r);
    let tail = mu.sub(&compact);
    (compact, tail)
}

/// 2^{−2S(n_{k−1})−2k}.
pub fn step_bound(s_prev: u32, k: usize) -> f64 {
    (-(2.0 * s_prev as f64) - 2.0 * k as f64).exp2()
}

/// The fixed probe set: p/q with q ≤ 12, and frac(jφ) for the golden ratio φ.
pub fn probe_frequencies() -> Vec<Frequency> {
    let mut out = Vec::new();
    for q in 2..=PROBE_MAX_DEN {
        for p in 1..q {
            if num_integer::gcd(p, q) == 1 {
                out.push(Frequency::ratio(p as i64, q));
            }
        }
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for j in 1..=PROBE_GOLDEN {
        out.push(Frequency::new(j as f64 * phi).expect("finite"));
    }
    out
}

/// Running lower bounds for prefix-average families, O(#probes) per step.
struct PrefixScanner {
    family: MeasureFamily,
    probes: Vec<Frequency>,
    factors: Vec<f64>,
    sums: Vec<ComplexSum<f64>>,
    counts: HashMap<i64, u64>,
    /// Σ c_j² and Σ c_j c_{j−1} over multiplicities c.
    sq: u128,
    cross: u128,
    n: u64,
}

impl PrefixScanner {
    fn new(family: MeasureFamily) -> Self {
        let probes = probe_frequencies();
        let factors = probes
            .iter()
            .map(|g| (Complex64::new(1.0, 0.0) - e_site::<f64>(1, g)).norm())
            .collect();
        let sums = vec![ComplexSum::new(); probes.len()];
        Self {
            family,
            probes,
            factors,
            sums,
            counts: HashMap::new(),
            sq: 0,
            cross: 0,
            n: 0,
        }
    }

    fn advance_to(&mut self, n: u64) {
        while self.n < n {
            self.n += 1;
            let site = self.family.prefix_site(self.n).expect("prefix family");
            for (acc, g) in self.sums.iter_mut().zip(&self.probes) {
                acc.add(e_site(site, g));
            }
            let c = *self.counts.get(&site).unwrap_or(&0) as u128;
            let left = *self.counts.get(&(site - 1)).unwrap_or(&0) as u128;
            let right = *self.counts.get(&(site + 1)).unwrap_or(&0) as u128;
            self.sq += 2 * c + 1;
            self.cross += left + right;
            *self.counts.entry(site).or_insert(0) += 1;
        }
    }

    /// Best rigorous lower bound for the functional at the current n.
    fn lower_bound(&self) -> f64 {
        let n = self.n as f64;
        let l2 = ((2 * self.sq - 2 * self.cross) as f64).sqrt() / n;
        let probe = self
            .sums
            .iter()
            .zip(&self.factors)
            .map(|(s, f)| f * s.sum().norm() / n)
            .fold(0.0, f64::max);
        (probe.max(l2) - PROBE_SLACK).max(0.0)
    }
}

/// Lower bound for sup |d̂| from probes and Parseval, for an explicit measure.
pub fn screen_lower_bound(mu: &WeightedMeasure<f64>) -> f64 {
    let d = mu.difference();
    let l2 = d.l2_norm_sq().sqrt();
    let probe = probe_frequencies()
        .iter()
        .map(|g| d.fourier_at(g).norm())
        .fold(0.0, f64::max);
    (probe.max(l2) - PROBE_SLACK).max(0.0)
}

/// Greedy smallest-admissible selection.
pub fn select_subsequence(family: &MeasureFamily, cfg: &SelectionConfig) -> Result<SelectionState> {
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("K must be ≥ 1".into()));
    }
    if cfg.search_cap == 0 {
        return Err(Error::InvalidParameter("search cap must be ≥ 1".into()));
    }
    let mut state = SelectionState {
        family: family.descriptor(),
        chosen: Vec::new(),
        s_values: Vec::new(),
        achieved_sups: Vec::new(),
        bounds: Vec::new(),
    };
    let mu1 = family.measure(1)?;
    let first = sup_bracket(&TrivialityPoly::new(&mu1), cfg.sup_tol, &cfg.limits)?;
    state.chosen.push(1);
    state.s_values.push(s_of(family, 1));
    state.achieved_sups.push(first.upper);
    state.bounds.push(None);

    let mut scanner = family
        .is_prefix_average()
        .then(|| PrefixScanner::new(*family));

    for k in 2..=cfg.k {
        let s_prev = *state.s_values.last().unwrap();
        let n_prev = *state.chosen.last().unwrap();
        let bound = step_bound(s_prev, k);
        let stall = |searched: u64, best: (f64, u64), undecided: u64, chosen: &[u64]| {
            Error::SelectionStalled(Box::new(StallReport {
                family: family.descriptor(),
                k,
                chosen_so_far: chosen.to_vec(),
                bound,
                searched_up_to: searched,
                best_lower_bound: best.0,
                best_index: best.1,
                undecided,
            }))
        };
        let start = match n_of_s(family, s_prev, cfg.search_cap) {
            Ok(n) => n.max(n_prev + 1),
            Err(_) => return Err(stall(cfg.search_cap, (f64::NAN, 0), 0, &state.chosen)),
        };
        let mut best = (f64::INFINITY, 0u64);
        let mut undecided = 0u64;
        let mut accepted = None;
        for n in start..=cfg.search_cap {
            let screened = match scanner.as_mut() {
                Some(sc) => {
                    sc.advance_to(n);
                    sc.lower_bound()
                }
                None => screen_lower_bound(&family.measure(n)?),
            };
            if screened > bound {
                if screened < best.0 {
                    best = (screened, n);
                }
                continue;
            }
            let mu = family.measure(n)?;
            match sup_decide(&TrivialityPoly::new(&mu), bound, &cfg.limits) {
                Ok(Decision::Below(b)) => {
                    accepted = Some((n, b.upper));
                    break;
                }
                Ok(Decision::Above(b)) => {
                    if b.lower < best.0 {
                        best = (b.lower, n);
                    }
                }
                Ok(Decision::Undecided(b)) => {
                    undecided += 1;
                    if b.lower < best.0 {
                        best = (b.lower, n);
                    }
                }
                Err(Error::Resource { .. }) => {
                    undecided += 1;
                    if screened < best.0 {
                        best = (screened, n);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        match accepted {
            Some((n, upper)) => {
                state.chosen.push(n);
                state.s_values.push(s_of(family, n));
                state.achieved_sups.push(upper);
                state.bounds.push(Some(bound));
            }
            None => return Err(stall(cfg.search_cap, best, undecided, &state.chosen)),
        }
    }
    Ok(state)
}

/// One checked inequality of a selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCheck {
    pub k: usize,
    pub n: u64,
    pub s_value: u32,
    pub support_radius: u64,
    pub bound: Option<f64>,
    pub stated_sup: f64,
    pub recomputed_upper: f64,
    /// bound − max(stated, recomputed); `None` for the first index.
    pub margin: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub family: String,
    pub checks: Vec<SelectionCheck>,
}

impl SelectionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&SelectionCheck> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Recomputes supports and sup brackets, listing every inequality.
///
/// Brackets are recomputed on a twice-oversampled initial grid so that the
/// grid points differ from the selection pass.
pub fn audit_selection(
    family: &MeasureFamily,
    state: &SelectionState,
    cfg: &SelectionConfig,
) -> Result<SelectionReport> {
    let len = state.chosen.len();
    if state.s_values.len() != len || state.achieved_sups.len() != len || state.bounds.len() != len {
        return Err(Error::Verification {
            k: 0,
            detail: "state vectors have different lengths".into(),
        });
    }
    let limits = SupLimits {
        oversample: cfg.limits.oversample * 2,
        ..cfg.limits
    };
    let mut checks = Vec::with_capacity(len);
    for i in 0..len {
        let k = i + 1;
        let n = state.chosen[i];
        let mu = family.measure(n)?;
        let radius = mu.support_radius();
        let s_value = dyadic_exponent(radius);
        let mut detail = Vec::new();
        if radius != family.support_radius(n) {
            detail.push(format!("support radius {radius} differs from oracle"));
        }
        if s_value != state.s_values[i] {
            detail.push(format!("S({n}) = {s_value}, state says {}", state.s_values[i]));
        }
        if i > 0 && (n <= state.chosen[i - 1] || s_value <= s_of(family, state.chosen[i - 1])) {
            detail.push("indices or S values not strictly increasing".into());
        }
        let expected_bound = (i > 0).then(|| step_bound(s_of(family, state.chosen[i - 1]), k));
        if expected_bound != state.bounds[i] {
            detail.push(format!("bound {:?} differs from {:?}", state.bounds[i], expected_bound));
        }
        let poly = TrivialityPoly::new(&mu);
        let recomputed_upper = match expected_bound {
            Some(b) => match sup_decide(&poly, b, &limits)? {
                Decision::Below(x) | Decision::Above(x) | Decision::Undecided(x) => x.upper,
            },
            None => sup_bracket(&poly, cfg.sup_tol, &limits)?.upper,
        };
        let margin = expected_bound.map(|b| b - recomputed_upper.max(state.achieved_sups[i]));
        if let Some(m) = margin {
            if m < 0.0 {
                detail.push(format!("bound exceeded by {:.3e}", -m));
            }
        }
        checks.push(SelectionCheck {
            k,
            n,
            s_value,
            support_radius: radius,
            bound: expected_bound,
            stated_sup: state.achieved_sups[i],
            recomputed_upper,
            margin,
            pass: detail.is_empty(),
            detail: detail.join("; "),
        });
    }
    Ok(SelectionReport {
        family: state.family.clone(),
        checks,
    })
}

/// Like [`audit_selection`], but any violated inequality is an error naming its k.
pub fn verify_selection(
    family: &MeasureFamily,
    state: &SelectionState,
    cfg: &SelectionConfig,
) -> Result<SelectionReport> {
    let report = audit_selection(family, state, cfg)?;
    if let Some(c) = report.first_failure() {
        return Err(Error::Verification {
            k: c.k,
            detail: c.detail.clone(),
        });
    }
    Ok(report)
}
