//! Command-line front end. Every run writes its data files and a
//! `manifest.json` (config echo and library version) into `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ergavg::czmax::{cz_decompose, default_lambda_grid, maximal_function, weak11_rows, SparseSignal};
use ergavg::dynsys::{convergence_trace, write_trace_csv, Observable, System};
use ergavg::measure::{fourier_grid, write_fourier_grid_csv};
use ergavg::selection::{audit_selection, select_subsequence};
use ergavg::supnorm::triviality_sup_with;
use ergavg::threshold::{major_arc_audit, residue_density, transform_bound_audit, BetaGrid};
use ergavg::weyl::{summarize, weyl_audit_sweep};
use ergavg::{Error, Frequency, Measure, MeasureFamily, RhoSpec, SelectionConfig, SupLimits};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STALLED: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

#[derive(Debug, Parser, Serialize, Deserialize, PartialEq)]
#[command(name = "ergavg", version, about = "Fourier decay, selection and threshold audits for weighted averages on ℤ")]
pub struct Cli {
    /// Directory for data files and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// μ̂ₙ on the grid m/G, as gamma,re,im,abs.
    Fourier(FourierArgs),
    /// Rigorous bracket of sup |(1 − e(γ)) μ̂ₙ(γ)|.
    Triviality(TrivialityArgs),
    /// Greedy selection of indices with small triviality functional.
    Select(SelectArgs),
    /// Calderón–Zygmund invariants on a seeded corpus of exact signals.
    CzCheck(CzArgs),
    /// Maximal function over a family and its weak (1,1) ratios.
    Maximal(MaximalArgs),
    /// |W_N(β)| against 1/√q + √(log N)/N^{1/3}.
    WeylAudit(WeylArgs),
    /// Block and transform audits for k² + ⌊ρ(k)⌋.
    ThresholdAudit(ThresholdArgs),
    /// Residue densities of k² + ⌊ρ(k)⌋ mod Q.
    Residues(ResidueArgs),
    /// Weighted averages on a rotation or cyclic shift along a list of indices.
    DynsysTrace(DynsysArgs),
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct FourierArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct TrivialityArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Largest coarse FFT grid.
    #[arg(long, default_value_t = 1 << 24)]
    pub max_grid: usize,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct SelectArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 100_000)]
    pub cap: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct CzArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random signals.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Thresholds λ, as fractions a/b or integers.
    #[arg(long, value_delimiter = ',', default_value = "1/8,1/4,1/3,1/2,2/3,1,3/2,2,3,5")]
    pub lambdas: Vec<String>,
    /// Largest number of nonzero entries per signal.
    #[arg(long, default_value_t = 64)]
    pub max_len: usize,
    /// Positions are drawn from [−range, range].
    #[arg(long, default_value_t = 1000)]
    pub range: i64,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct MaximalArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long, value_delimiter = ',')]
    pub ns: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Nonzero entries of the random test function.
    #[arg(long, default_value_t = 64)]
    pub len: usize,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct WeylArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
    pub ns: Vec<u64>,
    /// β runs over m/grid.
    #[arg(long, default_value_t = 1024)]
    pub grid: u64,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct ThresholdArgs {
    /// ρ descriptor, e.g. power:0.25 or log.
    #[arg(long)]
    pub rho: String,
    #[arg(long, value_delimiter = ',', default_value = "1024,2048,4096,8192,16384,32768")]
    pub ns: Vec<u64>,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Defaults to the ε of ρ.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Also run the per-block arc audit at this β for each N.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct ResidueArgs {
    #[arg(long)]
    pub rho: String,
    #[arg(long)]
    pub q: u64,
    #[arg(long, value_delimiter = ',')]
    pub ns: Vec<u64>,
    /// Trailing fraction of the N list used to test constancy.
    #[arg(long, default_value_t = 0.5)]
    pub window: f64,
}

#[derive(Debug, Args, Serialize, Deserialize, PartialEq)]
pub struct DynsysArgs {
    /// golden, rotation:A (α = A/2^62) or cyclic:M.
    #[arg(long, default_value = "golden")]
    pub system: String,
    /// trig:m, indicator:lo:hi or table:v0;v1;...
    #[arg(long, default_value = "trig:1")]
    pub observable: String,
    #[arg(long)]
    pub family: String,
    #[arg(long, value_delimiter = ',')]
    pub ns: Vec<u64>,
    /// Read the indices from a selection.json instead.
    #[arg(long)]
    pub selection: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
}

/// Outcome of a run: exit code and a one-line message for stderr.
pub struct Outcome {
    pub code: i32,
    pub message: Option<String>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::Descriptor(_) | Error::Range { .. } | Error::Json(_) => EXIT_CONFIG,
        Error::SelectionStalled(_) => EXIT_STALLED,
        Error::Resource { .. } => EXIT_RESOURCE,
        Error::Verification { .. } => EXIT_VERIFICATION,
        Error::NonFinite { .. } | Error::Io(_) | Error::Csv(_) => EXIT_FAILURE,
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a Cli,
    files: Vec<String>,
    status: &'a str,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> ergavg::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> ergavg::Result<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn family(s: &str) -> ergavg::Result<MeasureFamily> {
    MeasureFamily::parse(s)
}

fn rho(s: &str) -> ergavg::Result<RhoSpec> {
    s.parse()
}

/// Parses `a/b` or an integer as an exact threshold.
pub fn parse_ratio(s: &str) -> ergavg::Result<Ratio<i128>> {
    let bad = || Error::InvalidParameter(format!("threshold `{s}` is not a positive fraction"));
    let r = match s.trim().split_once('/') {
        Some((a, b)) => {
            let (a, b): (i128, i128) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Ratio::new(a, b)
        }
        None => Ratio::from_integer(s.trim().parse().map_err(|_| bad())?),
    };
    if r <= Ratio::from_integer(0) {
        return Err(bad());
    }
    Ok(r)
}

pub fn parse_system(s: &str) -> ergavg::Result<System> {
    let bad = || Error::InvalidParameter(format!("system `{s}`"));
    match s.split_once(':') {
        None if s == "golden" => Ok(System::golden_rotation()),
        Some(("rotation", a)) => System::rotation(a.parse().map_err(|_| bad())?),
        Some(("cyclic", m)) => System::cyclic(m.parse().map_err(|_| bad())?),
        _ => Err(bad()),
    }
}

pub fn parse_observable(s: &str) -> ergavg::Result<Observable> {
    let bad = || Error::InvalidParameter(format!("observable `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["trig", m] => Ok(Observable::Trig { m: m.parse().map_err(|_| bad())? }),
        ["indicator", lo, hi] => Ok(Observable::Indicator {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
        }),
        ["table", values] => Ok(Observable::Table {
            values: values.split(';').map(|v| v.parse().map_err(|_| bad())).collect::<ergavg::Result<_>>()?,
        }),
        _ => Err(bad()),
    }
}

/// Seeded signal with integer values in [−9, 9] \ {0} at distinct positions.
pub fn random_signal(rng: &mut ChaCha8Rng, max_len: usize, range: i64) -> Vec<(i64, i64)> {
    let len = rng.gen_range(1..=max_len.max(1));
    (0..len)
        .map(|_| {
            let v = rng.gen_range(1..=9) * if rng.gen_bool(0.5) { 1 } else { -1 };
            (rng.gen_range(-range..=range), v)
        })
        .collect()
}

#[derive(Serialize)]
struct CzRow {
    signal: usize,
    lambda: String,
    entries: usize,
    bad_intervals: usize,
    carleson_sum: u64,
    carleson_bound: f64,
    good_sup: f64,
    reconstruction_ok: bool,
    mean_zero_ok: bool,
    carleson_ok: bool,
    disjoint_ok: bool,
    good_bound_ok: bool,
    all_ok: bool,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    what: &'a str,
    value: f64,
}

fn execute(cli: &Cli, art: &mut Artifacts) -> ergavg::Result<()> {
    match &cli.command {
        Command::Fourier(a) => {
            let mu = family(&a.family)?.measure(a.n)?;
            let values = fourier_grid(&mu, a.grid)?;
            let file = fs::File::create(art.path("fourier.csv"))?;
            write_fourier_grid_csv(file, &values)?;
        }
        Command::Triviality(a) => {
            let mu = family(&a.family)?.measure(a.n)?;
            let limits = SupLimits {
                max_initial_grid: a.max_grid,
                ..SupLimits::default()
            };
            let br = triviality_sup_with(&mu, a.tol, &limits)?;
            println!("{}", serde_json::to_string(&br)?);
            art.json("triviality.json", &br)?;
        }
        Command::Select(a) => {
            let fam = family(&a.family)?;
            let cfg = SelectionConfig {
                k: a.k,
                sup_tol: a.tol,
                search_cap: a.cap,
                limits: SupLimits::default(),
            };
            match select_subsequence(&fam, &cfg) {
                Ok(state) => {
                    art.json("selection.json", &state)?;
                    let report = audit_selection(&fam, &state, &cfg)?;
                    art.csv("selection_audit.csv", report.checks.iter())?;
                    if let Some(c) = report.first_failure() {
                        return Err(Error::Verification { k: c.k, detail: c.detail.clone() });
                    }
                }
                Err(Error::SelectionStalled(stall)) => {
                    art.json("stall.json", &stall)?;
                    return Err(Error::SelectionStalled(stall));
                }
                Err(e) => return Err(e),
            }
        }
        Command::CzCheck(a) => {
            let lambdas = a.lambdas.iter().map(|s| parse_ratio(s)).collect::<ergavg::Result<Vec<_>>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let signals: Vec<Vec<(i64, i64)>> = (0..a.count).map(|_| random_signal(&mut rng, a.max_len, a.range)).collect();
            let mut rows = Vec::new();
            for (i, v) in signals.iter().enumerate() {
                let phi = SparseSignal::new(v.iter().map(|&(x, c)| (x, Ratio::from_integer(c as i128))));
                for (lam, text) in lambdas.iter().zip(&a.lambdas) {
                    let cz = cz_decompose(&phi, *lam)?;
                    let inv = cz.check_invariants(0.0);
                    rows.push(CzRow {
                        signal: i,
                        lambda: text.trim().to_string(),
                        entries: phi.len(),
                        bad_intervals: inv.n_bad_intervals,
                        carleson_sum: inv.carleson_sum,
                        carleson_bound: inv.carleson_bound,
                        good_sup: inv.g_inf_norm,
                        reconstruction_ok: inv.reconstruction_ok,
                        mean_zero_ok: inv.mean_zero_ok,
                        carleson_ok: inv.carleson_ok,
                        disjoint_ok: inv.disjoint_ok,
                        good_bound_ok: inv.good_bound_ok,
                        all_ok: inv.all_ok(),
                    });
                }
            }
            let failures = rows.iter().filter(|r| !r.all_ok).count();
            art.csv("cz_invariants.csv", rows.iter())?;
            if failures > 0 {
                return Err(Error::Verification {
                    k: 0,
                    detail: format!("{failures} decompositions violate an invariant"),
                });
            }
        }
        Command::Maximal(a) => {
            let fam = family(&a.family)?;
            if a.ns.is_empty() {
                return Err(Error::InvalidParameter("--ns is empty".into()));
            }
            let measures = a.ns.iter().map(|&n| fam.measure(n)).collect::<ergavg::Result<Vec<_>>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let phi = Measure::from_real(random_signal(&mut rng, a.len, 4 * a.len as i64).into_iter().map(|(x, v)| (x, v as f64)))?;
            let mf = maximal_function(&phi, &measures);
            let rows = weak11_rows(&phi, &mf, &default_lambda_grid(&phi));
            art.csv("weak11.csv", rows.iter())?;
        }
        Command::WeylAudit(a) => {
            let rows = weyl_audit_sweep(&a.ns, a.grid)?;
            art.csv("weyl_audit.csv", rows.iter())?;
            art.json("weyl_summary.json", &summarize(rows.iter().map(|r| r.ratio)))?;
        }
        Command::ThresholdAudit(a) => {
            let r = rho(&a.rho)?;
            let eps = a.eps.unwrap_or(r.epsilon());
            let audit = transform_bound_audit(&r, &a.ns, BetaGrid::new(a.grid, a.delta)?, eps)?;
            let mut rows = audit.rows.clone();
            if let Some(b) = a.beta {
                for &n in &a.ns {
                    rows.extend(major_arc_audit(&r, n, &Frequency::new(b)?, eps)?.rows);
                }
            }
            art.csv("threshold_audit.csv", rows.iter())?;
            art.csv("trend.csv", audit.trend.iter())?;
            art.csv(
                "threshold_summary.csv",
                [
                    SummaryRow { what: "max_ratio", value: audit.max_ratio },
                    SummaryRow { what: "strictly_decreasing", value: f64::from(audit.strictly_decreasing as u8) },
                ],
            )?;
        }
        Command::Residues(a) => {
            let p = residue_density(&rho(&a.rho)?, a.q, &a.ns, a.window)?;
            #[derive(Serialize)]
            struct Row {
                #[serde(rename = "Q")]
                q: u64,
                a: u64,
                count: u64,
                density: f64,
                bound: Option<f64>,
            }
            art.csv(
                "residues.csv",
                p.rows.iter().map(|r| Row { q: p.q, a: r.a, count: r.count, density: r.density, bound: p.bound }),
            )?;
            art.json("residue_profile.json", &p)?;
        }
        Command::DynsysTrace(a) => {
            let sys = parse_system(&a.system)?;
            let f = parse_observable(&a.observable)?;
            let fam = family(&a.family)?;
            let ns = match &a.selection {
                Some(path) => {
                    let state: ergavg::SelectionState = serde_json::from_str(&fs::read_to_string(path)?)?;
                    state.chosen
                }
                None => a.ns.clone(),
            };
            let report = convergence_trace(&sys, &f, &fam, &ns, a.samples)?;
            write_trace_csv(&report, fs::File::create(art.path("trace.csv"))?)?;
            art.csv(
                "trace_summary.csv",
                [
                    SummaryRow { what: "median_osc", value: report.median_osc },
                    SummaryRow { what: "max_osc", value: report.max_osc },
                    SummaryRow { what: "mean", value: report.mean },
                    SummaryRow { what: "final_deviation", value: report.final_deviation },
                ],
            )?;
        }
    }
    Ok(())
}

fn write_manifest(cli: &Cli, dir: &Path, files: Vec<String>, status: &str) -> std::io::Result<()> {
    let m = Manifest {
        tool: "ergavg",
        version: ergavg::VERSION,
        config: cli,
        files,
        status,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m).expect("serializable") + "\n")
}

/// Runs one command, writing artifacts and the manifest under `cli.out`.
pub fn run(cli: &Cli) -> Outcome {
    if let Some(t) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    if let Err(e) = fs::create_dir_all(&cli.out) {
        return Outcome {
            code: EXIT_FAILURE,
            message: Some(format!("cannot create {}: {e}", cli.out.display())),
        };
    }
    let mut art = Artifacts {
        dir: cli.out.clone(),
        files: Vec::new(),
    };
    let result = execute(cli, &mut art);
    let (code, message, status) = match &result {
        Ok(()) => (EXIT_OK, None, "ok".to_string()),
        Err(e) => (exit_code(e), Some(e.to_string()), format!("error: {e}")),
    };
    if let Err(e) = write_manifest(cli, &cli.out, art.files, &status) {
        return Outcome {
            code: EXIT_FAILURE,
            message: Some(format!("cannot write manifest: {e}")),
        };
    }
    Outcome { code, message }
}
