//! Acceptance criteria, one PASS/FAIL line each. Oracles here are written
//! independently of the library routines they check.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ergavg::czmax::{cz_decompose, sigma_deficit_sup, SparseSignal};
use ergavg::families::rotation_frequency;
use ergavg::selection::select_subsequence;
use ergavg::supnorm::triviality_sup_with;
use ergavg::threshold::{residue_density, transform_bound_audit, BetaGrid};
use ergavg::weyl::{dirichlet_approx, gauss_sum, weyl_audit_sweep, Rational};
use ergavg::{Complex, Error, Measure, MeasureFamily, RhoSpec, RotationVariant, SelectionConfig, SupLimits};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = Ratio<i128>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn e(x: f64) -> Complex {
    let r = x - x.round();
    Complex::from_polar(1.0, TAU * r)
}

/// ⌈log₂ r⌉, from the atoms.
fn s_value(mu: &Measure) -> u32 {
    let r = mu.atoms().iter().map(|a| a.0.unsigned_abs()).max().unwrap_or(0);
    if r <= 1 { 0 } else { 64 - (r - 1).leading_zeros() }
}

fn c1_cz_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lambdas = [Q::new(1, 8), Q::new(1, 4), Q::new(1, 3), Q::new(1, 2), Q::new(2, 3), Q::from_integer(1), Q::new(3, 2), Q::from_integer(2), Q::from_integer(3), Q::from_integer(5)];
    let (mut checked, mut signals) = (0, 0);
    while signals < 1000 {
        let len = rng.gen_range(1..48);
        let mut phi: BTreeMap<i64, Q> = BTreeMap::new();
        for _ in 0..len {
            *phi.entry(rng.gen_range(-400..400)).or_insert_with(Q::zero) += Q::from_integer(rng.gen_range(-9..=9));
        }
        phi.retain(|_, v| !v.is_zero());
        if phi.is_empty() {
            continue;
        }
        signals += 1;
        let l1: Q = phi.values().map(|v| v.abs()).sum();
        let signal = SparseSignal::new(phi.iter().map(|(&x, v)| (x, *v)));
        for lam in lambdas {
            let cz = match cz_decompose(&signal, lam) {
                Ok(c) => c,
                Err(err) => return verdict(false, format!("decomposition failed: {err}")),
            };
            // g + Σ b = φ on every point touched by φ or a bad interval
            let mut points: Vec<i64> = phi.keys().copied().collect();
            for b in &cz.bad {
                points.extend([b.interval.start(), (b.interval.end() - 1) as i64]);
                if b.sum() != Q::zero() {
                    return verdict(false, format!("bad piece {:?} has nonzero mean", b.interval));
                }
            }
            for x in points {
                let want = phi.get(&x).copied().unwrap_or_else(Q::zero);
                if cz.good_at(x) + cz.bad_at(x) != want {
                    return verdict(false, format!("reconstruction fails at {x} for λ={lam}"));
                }
            }
            let total: u64 = cz.bad.iter().map(|b| b.interval.len()).sum();
            if Q::from_integer(total as i128) * lam > l1 {
                return verdict(false, format!("Carleson sum {total} exceeds ‖φ‖₁/λ at λ={lam}"));
            }
            for (i, a) in cz.bad.iter().enumerate() {
                for b in &cz.bad[i + 1..] {
                    let overlap = a.interval.start() as i128 <= b.interval.end() - 1 && b.interval.start() as i128 <= a.interval.end() - 1;
                    if overlap {
                        return verdict(false, format!("{:?} and {:?} overlap", a.interval, b.interval));
                    }
                }
            }
            checked += 1;
        }
    }
    verdict(true, format!("{signals} signals × 10 λ = {checked} exact decompositions, zero violations"))
}

/// The greedy selection on perturbed:power:0.25, if it finishes.
fn select_perturbed() -> Result<(MeasureFamily, ergavg::SelectionState), Error> {
    let family = MeasureFamily::parse("perturbed:power:0.25")?;
    let cfg = SelectionConfig { k: 3, search_cap: 100_000, ..SelectionConfig::default() };
    select_subsequence(&family, &cfg).map(|s| (family, s))
}

fn c2_selection_positive(sel: &Result<(MeasureFamily, ergavg::SelectionState), Error>) -> Verdict {
    let (family, state) = match sel {
        Ok(s) => s,
        Err(err) => return verdict(false, format!("{err}")),
    };
    let limits = SupLimits { oversample: 16, ..SupLimits::default() };
    let mut margins = Vec::new();
    for (i, &n) in state.chosen.iter().enumerate() {
        if i == 0 {
            continue;
        }
        let prev = family.measure(state.chosen[i - 1]).unwrap();
        let bound = (-2.0 * s_value(&prev) as f64 - 2.0 * (i + 1) as f64).exp2();
        let br = match triviality_sup_with(&family.measure(n).unwrap(), bound * 1e-3, &limits) {
            Ok(b) => b,
            Err(err) => return verdict(false, format!("recompute at n={n}: {err}")),
        };
        margins.push(bound - br.upper);
    }
    let pass = state.chosen.len() == 3 && margins.iter().all(|&m| m >= 0.0);
    verdict(pass, format!("indices {:?}, margins {margins:?}", state.chosen))
}

fn c3_squares_stall() -> Verdict {
    let cfg = SelectionConfig { k: 3, search_cap: 10_000, ..SelectionConfig::default() };
    match select_subsequence(&MeasureFamily::Squares, &cfg) {
        Err(Error::SelectionStalled(r)) => {
            let n = r.best_index;
            let direct: Complex = (1..=n).map(|k| e((k * k) as f64 / 4.0)).sum::<Complex>() / n as f64;
            let witness = ((Complex::new(1.0, 0.0) - e(0.25)) * direct).norm();
            let pass = r.best_lower_bound >= 0.9 && witness >= r.best_lower_bound - 1e-9;
            verdict(pass, format!("stalled at k={} with best lower bound {:.6} (n={n}); |(1−e(1/4))ν̂(1/4)| = {witness:.6}", r.k, r.best_lower_bound))
        }
        Err(err) => verdict(false, format!("unexpected error {err}")),
        Ok(s) => verdict(false, format!("selection succeeded: {:?}", s.chosen)),
    }
}

fn c4_weyl_audit() -> Verdict {
    let ns = [64u64, 256, 1024, 4096];
    let rows = match weyl_audit_sweep(&ns, 1024) {
        Ok(r) => r,
        Err(err) => return verdict(false, format!("{err}")),
    };
    let mut max = 0.0f64;
    for r in &rows {
        // naive |W_N(β)| with β = m/1024 reduced exactly
        let m = (r.beta * 1024.0).round() as u64;
        let w: Complex = (1..=r.n).map(|j| e(((j * j % 1024) * m % 1024) as f64 / 1024.0)).sum::<Complex>() / r.n as f64;
        if (w.norm() - r.value).abs() > 1e-9 {
            return verdict(false, format!("N={} β={} value {} vs naive {}", r.n, r.beta, r.value, w.norm()));
        }
        let shape = 1.0 / (r.q as f64).sqrt() + (r.n as f64).ln().sqrt() / (r.n as f64).cbrt();
        max = max.max(w.norm() / shape);
    }
    verdict(max.is_finite() && max <= 10.0, format!("{} cells, max ratio {max:.4}", rows.len()))
}

fn c5_dirichlet() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let one = BigRational::from_integer(BigInt::from(1));
    let mut failures = 0;
    for _ in 0..100_000 {
        let beta: f64 = rng.gen_range(0.0..1.0);
        let q_max = 10f64.powf(rng.gen_range(0.0..12.0));
        let Ok(c) = dirichlet_approx(beta, q_max) else {
            failures += 1;
            continue;
        };
        let (p, q) = (c.rational.p, c.rational.q);
        let b = BigRational::from_float(beta).unwrap();
        let qm = BigRational::from_float(q_max).unwrap();
        let ok = (q as f64) <= q_max
            && [p, p + q as i64].iter().any(|&pp| {
                let err = (b.clone() - BigRational::new(BigInt::from(pp), BigInt::from(q))).abs();
                err * BigRational::from_integer(BigInt::from(q)) * qm.clone() <= one
            });
        failures += usize::from(!ok);
    }
    verdict(failures == 0, format!("100000 pairs, {failures} failures"))
}

fn c6_gauss_sums() -> Verdict {
    let squarefree = |q: u64| (2..q).take_while(|d| d * d <= q).all(|d| q % (d * d) != 0);
    let mut worst = 0.0f64;
    let mut count = 0;
    for q in (1..=200u64).step_by(2).filter(|&q| squarefree(q)) {
        for p in (0..q as i64).filter(|&p| num_integer::gcd(p, q as i64) == 1) {
            let naive: Complex = (0..q).map(|n| e(((n * n % q) as i64 * p % q as i64) as f64 / q as f64)).sum::<Complex>() / q as f64;
            let lib = gauss_sum(&Rational::new(p, q).unwrap());
            let target = 1.0 / (q as f64).sqrt();
            worst = worst.max((naive.norm() - target).abs()).max((lib - naive).norm());
            count += 1;
        }
    }
    verdict(worst <= 1e-10, format!("{count} pairs, worst deviation {worst:.2e}"))
}

fn c7_threshold() -> Verdict {
    let ns: Vec<u64> = (10..=15).map(|i| 1u64 << i).collect();
    let quarter = RhoSpec::power(0.25).unwrap();
    let audit = match transform_bound_audit(&quarter, &ns, BetaGrid::new(1024, 0.05).unwrap(), quarter.epsilon()) {
        Ok(a) => a,
        Err(err) => return verdict(false, format!("{err}")),
    };
    // naive grid maximum as the oracle for the trend
    let mut maxima = Vec::new();
    for &n in &ns {
        let sites: Vec<u64> = (1..=n).map(|k| (k * k + quarter.floor_at(k) as u64) % 1024).collect();
        let mut best = 0.0f64;
        for m in (1..1024u64).filter(|&m| (52..=972).contains(&m)) {
            let hat: Complex = sites.iter().map(|&s| e((s * m % 1024) as f64 / 1024.0)).sum::<Complex>() / n as f64;
            best = best.max(((Complex::new(1.0, 0.0) - e(m as f64 / 1024.0)) * hat).norm());
        }
        maxima.push(best);
    }
    let agree = audit.trend.iter().zip(&maxima).all(|(t, m)| (t.grid_max - m).abs() < 1e-9);
    let decreasing = maxima.windows(2).all(|w| w[1] < w[0]);
    let log = RhoSpec::log_scaled(1.0).unwrap();
    let witness: Vec<f64> = ns
        .iter()
        .map(|&n| {
            (1..=n)
                .map(|k| e(((k * k + log.floor_at(k) as u64) % 4) as f64 / 4.0))
                .sum::<Complex>()
                .norm()
                / n as f64
        })
        .collect();
    let log_ok = witness.iter().all(|&w| w >= 0.2);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    verdict(
        agree && decreasing && log_ok,
        format!(
            "x^(1/4) grid maxima [{}] strictly decreasing: {decreasing}; log |μ̂_N(1/4)| [{}] all ≥ 0.2: {log_ok}; library trend matches oracle: {agree}",
            fmt(&maxima),
            fmt(&witness)
        ),
    )
}

fn c8_transference() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rotated = MeasureFamily::Rotated { variant: RotationVariant::QuadraticPhase };
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n: u64 = 4 + (i * 7 % 61);
        let theta = rotation_frequency(n).value();
        let phi: Vec<(i64, Complex)> = (0..rng.gen_range(1..25))
            .map(|_| (rng.gen_range(-300..300), Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let mu = rotated.measure(n).unwrap();
        let lhs = ergavg::measure::convolve(&mu, &Measure::new(phi.iter().copied()).unwrap());
        // e(θk) Σ_j ν(j) e(−θ(k−j)) φ(k−j), summed naively
        let mut rhs: BTreeMap<i64, Complex> = BTreeMap::new();
        for j in 1..=n as i64 {
            for &(y, v) in &phi {
                let k = j * j + y;
                *rhs.entry(k).or_default() += e(theta * k as f64) * e(-theta * y as f64) * v / n as f64;
            }
        }
        for (k, v) in rhs {
            worst = worst.max((lhs.weight_at(k) - v).norm());
        }
    }
    verdict(worst <= 1e-9, format!("100 random φ, worst pointwise deviation {worst:.2e}"))
}

fn c9_sigma_chain(sel: &Result<(MeasureFamily, ergavg::SelectionState), Error>) -> Verdict {
    let (family, state) = match sel {
        Ok(s) => s,
        Err(err) => return verdict(false, format!("no selected indices from criterion 2 ({err})")),
    };
    let mut lines = Vec::new();
    let mut pass = state.chosen.len() >= 2;
    for i in 1..state.chosen.len() {
        let n = state.chosen[i];
        let s_prev = s_value(&family.measure(state.chosen[i - 1]).unwrap());
        match sigma_deficit_sup(&family.measure(n).unwrap(), s_prev, (i + 1) as u32, 1e-9) {
            Ok(r) => {
                pass &= r.deficit.upper <= r.chain_bound && r.chain_bound <= r.target;
                lines.push(format!("n={n}: {:.3e} ≤ {:.3e} ≤ {:.3e}", r.deficit.upper, r.chain_bound, r.target));
            }
            Err(err) => {
                pass = false;
                lines.push(format!("n={n}: {err}"));
            }
        }
    }
    verdict(pass, lines.join("; "))
}

fn c10_residues() -> Verdict {
    let zero = RhoSpec::constant(0.0).unwrap();
    let mut worst = 0.0f64;
    for q in [15u64, 105] {
        let p = match residue_density(&zero, q, &[1_000_000], 0.5) {
            Ok(p) => p,
            Err(err) => return verdict(false, format!("{err}")),
        };
        for r in 0..q {
            let exact = (0..q).filter(|x| x * x % q == r).count() as f64 / q as f64;
            worst = worst.max((p.densities[r as usize] - exact).abs());
        }
    }
    let log = RhoSpec::log_scaled(1.0).unwrap();
    let ns: Vec<u64> = (0..20).map(|i| 1_000_000 - 5_000 * i).collect();
    let p = match residue_density(&log, 105, &ns, 0.5) {
        Ok(p) => p,
        Err(err) => return verdict(false, format!("{err}")),
    };
    // recount the classes of quadratic residues a coprime to Q directly
    let mut counts = vec![0u64; 105];
    for j in 1..=p.n_used {
        counts[((j % 105) * (j % 105) % 105 + log.floor_at(j) as u64) as usize % 105] += 1;
    }
    let min = p.rows.iter().filter(|r| num_integer::gcd(r.a, 105) == 1).map(|r| counts[r.residue as usize] as f64 / p.n_used as f64).fold(f64::INFINITY, f64::min);
    let bound = p.bound.unwrap_or(f64::INFINITY);
    verdict(
        worst <= 1e-3 && min >= bound && (min - p.min_unit_density).abs() < 1e-12,
        format!("ρ≡0 worst density error {worst:.2e}; log: r_Q={}, N={}, min density {min:.5} vs 1/(3C|Λ_Q|) = {bound:.5} (C={:.4}, |Λ_Q|={})", p.r_q, p.n_used, p.fitted_c, p.lambda_q.len()),
    )
}

fn run_cli(out: &Path, threads: usize, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_ergavg"))
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn c11_determinism() -> Verdict {
    let commands: Vec<Vec<&str>> = vec![
        vec!["fourier", "--family", "perturbed:power:0.25", "--n", "1024", "--grid", "256"],
        vec!["triviality", "--family", "perturbed:power:0.25", "--n", "1024", "--tol", "1e-3"],
        vec!["select", "--family", "uniform", "--k", "2", "--cap", "5000"],
        vec!["select", "--family", "squares", "--k", "3", "--cap", "2000"],
        vec!["cz-check", "--seed", "3", "--count", "50"],
        vec!["maximal", "--family", "squares", "--ns", "1,4,16,64", "--seed", "2"],
        vec!["weyl-audit", "--ns", "64,256", "--grid", "128"],
        vec!["threshold-audit", "--rho", "power:0.25", "--ns", "1024,2048", "--grid", "128", "--beta", "0.41421356"],
        vec!["residues", "--rho", "log", "--q", "15", "--ns", "10000,20000,30000"],
        vec!["dynsys-trace", "--family", "squares", "--ns", "16,64,256", "--samples", "4"],
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let runs: Vec<(i32, BTreeMap<String, Vec<u8>>)> = [(1usize, "a"), (1, "b"), (4, "c")]
            .iter()
            .map(|&(threads, tag)| {
                let dir = tmp.path().join(format!("{i}{tag}"));
                let code = run_cli(&dir, threads, args);
                (code, data_files(&dir))
            })
            .collect();
        let same = runs.windows(2).all(|w| w[0] == w[1]);
        let expected = if args[0] == "select" && args[2] == "squares" { 3 } else { 0 };
        if !same || runs[0].0 != expected || runs[0].1.is_empty() {
            bad.push(format!("{} (exit {}, identical {same})", args[0], runs[0].0));
        }
    }
    verdict(bad.is_empty(), if bad.is_empty() { format!("{} runs × 3 byte-identical", commands.len()) } else { bad.join(", ") })
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, limit: Duration, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = v.pass && in_time;
        failures += usize::from(!pass);
        let time_note = if in_time { String::new() } else { format!(" (over the {}s limit)", limit.as_secs()) };
        println!(
            "criterion {id:>2} {name:<24} {} [{:.1}s{time_note}] {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            v.detail
        );
    };
    let min = |m: u64| Duration::from_secs(60 * m);
    report(1, "cz-invariants", min(1), &mut c1_cz_invariants);
    let mut sel = None;
    report(2, "selection-positive", min(10), &mut || {
        let s = select_perturbed();
        let v = c2_selection_positive(&s);
        sel = Some(s);
        v
    });
    report(3, "selection-negative", min(5), &mut c3_squares_stall);
    report(4, "weyl-bound-audit", min(10), &mut c4_weyl_audit);
    report(5, "dirichlet-certificates", min(1), &mut c5_dirichlet);
    report(6, "gauss-sum-magnitudes", min(1), &mut c6_gauss_sums);
    report(7, "threshold-dichotomy", min(30), &mut c7_threshold);
    report(8, "transference-identity", min(1), &mut c8_transference);
    let sel = sel.unwrap();
    report(9, "sigma-deficit-chain", min(5), &mut || c9_sigma_chain(&sel));
    report(10, "residue-density", min(5), &mut c10_residues);
    report(11, "cli-determinism", min(10), &mut c11_determinism);
    println!("acceptance: {} of 11 criteria failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
