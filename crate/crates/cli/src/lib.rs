//! `svar-ident`: identifiability checks for singular SVARs from the shell.
//!
//! Exit codes: 0 when every requested check is identified/compatible,
//! 2 when a check comes back negative, 1 on input or numerical errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use singular_svar::formats::{parse_json, to_json_pretty, CovarianceFile, ModelFile};
use singular_svar::identify::{check_local_identifiability, check_system_restrictions, genericity_trial, map_system_restrictions, SystemCheckOptions};
use singular_svar::moments::{
    autocovariances, build_toeplitz, detect_structure, read_csv_matrix, sample_autocovariances, simulate,
    AutocovOptions, CovarianceSequence, LyapunovMethod,
};
use singular_svar::refixtures::{golden_suite, NkParams};
use singular_svar::restrictions::{compile_system, CompileOptions, RestrictionSpec};
use singular_svar::yulewalker::{min_norm_solution, pivot_solution, same_projection, sigma_u_from, unvec_a_plus_t};
use singular_svar::{Mat, TolPolicy};

pub mod report;

pub use report::{AnalyzeReport, GenericityOutput, SolveReport, YwSolution};

/// Relative rank factor used by `detect --csv` unless a tolerance is given.
pub const SAMPLE_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "svar-ident", version, about = "Identifiability analysis for singular structural VARs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Relative rank tolerance factor (threshold = tol * sigma_max * max(m, n)).
    #[arg(long, global = true, conflicts_with = "abs_tol")]
    pub tol: Option<f64>,
    /// Absolute singular-value threshold for rank decisions.
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the JSON report (CSV for `simulate`) to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Pivot,
    Minnorm,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lyapunov {
    Dense,
    Doubling,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Noise- and system-side identifiability report for a model or covariance file.
    Analyze {
        input: PathBuf,
        /// Restriction file ({"noise": [...], "system": [...]}) replacing the inline ones.
        #[arg(long)]
        restrictions: Option<PathBuf>,
        /// Lag order for a covariance input without a `p` field.
        #[arg(long)]
        p: Option<usize>,
        /// Accept repeated identical fixes instead of rejecting them.
        #[arg(long)]
        dedupe: bool,
        /// Threshold on the over-identification residual.
        #[arg(long)]
        overid_tol: Option<f64>,
    },
    /// Recover (p, q, L) from the rank profile of the block Toeplitz matrices.
    Detect {
        /// Covariance JSON, or a CSV sample with --csv.
        input: PathBuf,
        #[arg(long)]
        rmax: Option<usize>,
        #[arg(long, default_value_t = 2)]
        k_stab: usize,
        /// Treat the input as a CSV sample and use sample autocovariances.
        #[arg(long)]
        csv: bool,
        /// Autocovariance horizon for --csv.
        #[arg(long, default_value_t = 8)]
        horizon: usize,
    },
    /// Solve the Yule-Walker equations.
    SolveYw {
        input: PathBuf,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Simulate a sample path as CSV.
    Simulate {
        model: PathBuf,
        #[arg(short = 'T', long = "periods")]
        periods: usize,
        #[arg(long, default_value_t = 1e-8)]
        margin: f64,
    },
    /// Population autocovariances of a model as covariance JSON.
    Autocov {
        model: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = Lyapunov::Dense)]
        method: Lyapunov,
    },
    /// Fraction of random system restrictions yielding a unique solution.
    Genericity {
        input: PathBuf,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Run the New-Keynesian golden computations.
    ReproducePaper {
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Negative,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Negative => 2,
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Ok
        } else {
            Status::Negative
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub status: Status,
}

impl GlobalOpts {
    pub fn policy(&self) -> TolPolicy<f64> {
        match (self.abs_tol, self.tol) {
            (Some(t), _) => TolPolicy::Absolute(t),
            (None, Some(f)) => TolPolicy::Relative(f),
            (None, None) => TolPolicy::default(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::parse(&read(path)?).with_context(|| format!("invalid model file {}", path.display()))
}

fn load_cov(path: &Path) -> Result<CovarianceFile> {
    CovarianceFile::parse(&read(path)?).with_context(|| format!("invalid covariance file {}", path.display()))
}

fn is_covariance_file(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| v.get("gammas").map(|_| ()))
        .is_some()
}

/// Writes the JSON report to `--out` if given and renders stdout.
fn emit<R: Serialize>(g: &GlobalOpts, report: &R, text: String, status: Status) -> Result<Outcome> {
    let json = to_json_pretty(report);
    if let Some(path) = &g.out {
        fs::write(path, format!("{json}\n")).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let stdout = match g.format {
        Format::Json => format!("{json}\n"),
        Format::Text => text,
    };
    Ok(Outcome { stdout, status })
}

fn lag_order(explicit: Option<usize>, from_file: Option<usize>) -> Result<usize> {
    match explicit.or(from_file) {
        Some(0) => bail!("lag order p must be at least 1"),
        Some(p) => Ok(p),
        None => bail!("lag order unknown: pass --p or add a \"p\" field to the covariance file"),
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    let tol = g.policy();
    match &cli.command {
        Command::Analyze {
            input,
            restrictions,
            p,
            dedupe,
            overid_tol,
        } => {
            let opts = CompileOptions {
                dedupe_identical_fixes: *dedupe,
            };
            let mut sys_opts = SystemCheckOptions { tol, ..SystemCheckOptions::default() };
            if let Some(t) = overid_tol {
                sys_opts.overid_tol = *t;
            }
            let override_spec = match restrictions {
                Some(path) => Some(
                    parse_json::<RestrictionSpec>(&read(path)?)
                        .with_context(|| format!("invalid restriction file {}", path.display()))?,
                ),
                None => None,
            };
            let text = read(input)?;
            let report = if is_covariance_file(&text) {
                let mut f = load_cov(input)?;
                if let Some(s) = override_spec {
                    f.restrictions = s;
                }
                analyze_covariance(&f, *p, tol, sys_opts, opts)?
            } else {
                let mut f = load_model(input)?;
                if let Some(s) = override_spec {
                    f.restrictions = s;
                }
                analyze_model(&f, tol, sys_opts, opts)?
            };
            let summary = report.summary();
            emit(g, &report, summary, Status::from_bool(report.identified))
        }
        Command::Detect {
            input,
            rmax,
            k_stab,
            csv,
            horizon,
        } => {
            let cov = if *csv {
                let file = fs::File::open(input).with_context(|| format!("cannot read {}", input.display()))?;
                let y = read_csv_matrix(file)?;
                sample_autocovariances(&y, *horizon)?
            } else {
                load_cov(input)?.to_sequence()?
            };
            let r_max = rmax.unwrap_or(cov.horizon());
            let tol = if *csv && g.tol.is_none() && g.abs_tol.is_none() {
                TolPolicy::Relative(SAMPLE_TOL)
            } else {
                tol
            };
            let est = detect_structure(&cov, r_max, tol, *k_stab)?;
            let text = report::detect_summary(&est);
            emit(g, &est, text, Status::Ok)
        }
        Command::SolveYw { input, p, method } => {
            let f = load_cov(input)?;
            let p = lag_order(*p, f.p)?;
            let report = solve_yw(&f.to_sequence()?, p, *method, tol)?;
            let text = report.summary();
            emit(g, &report, text, Status::Ok)
        }
        Command::Simulate { model, periods, margin } => {
            let m = load_model(model)?.to_model()?;
            let path = simulate(&m, *periods, g.seed, *margin)?;
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            let csv = String::from_utf8(buf).expect("csv output is utf-8");
            match &g.out {
                Some(out) => {
                    let mut file = fs::File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
                    file.write_all(csv.as_bytes())?;
                    Ok(Outcome {
                        stdout: format!("wrote {} periods of {} series to {}\n", periods, m.n(), out.display()),
                        status: Status::Ok,
                    })
                }
                None => Ok(Outcome {
                    stdout: csv,
                    status: Status::Ok,
                }),
            }
        }
        Command::Autocov { model, horizon, method } => {
            let m = load_model(model)?.to_model()?;
            let opts = AutocovOptions {
                method: match method {
                    Lyapunov::Dense => LyapunovMethod::Dense,
                    Lyapunov::Doubling => LyapunovMethod::Doubling,
                },
                ..AutocovOptions::default()
            };
            let cov = autocovariances(&m, *horizon, opts)?;
            let mut f = CovarianceFile::from_sequence(&cov);
            f.p = Some(m.p());
            let json = to_json_pretty(&f);
            emit(g, &f, format!("{json}\n"), Status::Ok)
        }
        Command::Genericity { input, p, trials } => {
            let f = load_cov(input)?;
            let p = lag_order(*p, f.p)?;
            let ts = build_toeplitz(&f.to_sequence()?, p, tol)?;
            let rep = genericity_trial(&ts, *trials, g.seed, tol)?;
            let out = GenericityOutput::from(rep);
            let text = out.summary();
            emit(g, &out, text, Status::from_bool(out.report.successes == out.report.trials))
        }
        Command::ReproducePaper { beta, phi, tau, kappa } => {
            let d = NkParams::default();
            let params = NkParams {
                beta: beta.unwrap_or(d.beta),
                phi: phi.unwrap_or(d.phi),
                tau: tau.unwrap_or(d.tau),
                kappa: kappa.unwrap_or(d.kappa),
            };
            let rep = golden_suite(params);
            let text = report::golden_summary(&rep);
            emit(g, &rep, text, Status::from_bool(rep.all_pass))
        }
    }
}

pub fn analyze_model(
    f: &ModelFile,
    tol: TolPolicy<f64>,
    sys_opts: SystemCheckOptions<f64>,
    opts: CompileOptions,
) -> Result<AnalyzeReport> {
    let m = f.to_model()?;
    let noise_set = f.noise_restrictions(&m, opts)?;
    let noise = check_local_identifiability(&m, &noise_set, tol)?;
    let system = if f.restrictions.system.is_empty() {
        None
    } else {
        let set = f.system_restrictions(opts)?;
        let reduced_set = if m.a0_is_identity() { set } else { map_system_restrictions(&m, &set)? };
        let cov = autocovariances(&m, m.p(), AutocovOptions::default())?;
        let ts = build_toeplitz(&cov, m.p(), tol)?;
        Some(check_system_restrictions(&ts, &reduced_set, sys_opts)?)
    };
    Ok(AnalyzeReport::new("model", Some(noise), system))
}

pub fn analyze_covariance(
    f: &CovarianceFile,
    p: Option<usize>,
    tol: TolPolicy<f64>,
    sys_opts: SystemCheckOptions<f64>,
    opts: CompileOptions,
) -> Result<AnalyzeReport> {
    if !f.restrictions.noise.is_empty() {
        bail!("noise restrictions need a model file; a covariance file carries no (A0, B)");
    }
    let p = lag_order(p, f.p)?;
    let ts = build_toeplitz(&f.to_sequence()?, p, tol)?;
    let set = compile_system(&f.restrictions.system, f.n, p, opts)?;
    let system = check_system_restrictions(&ts, &set, sys_opts)?;
    Ok(AnalyzeReport::new("covariance", None, Some(system)))
}

fn blocks(a_bar: &Mat<f64>, n: usize, p: usize) -> Vec<Mat<f64>> {
    (0..p).map(|k| a_bar.block(0, k * n, n, n)).collect()
}

pub fn solve_yw(cov: &CovarianceSequence<f64>, p: usize, method: Method, tol: TolPolicy<f64>) -> Result<SolveReport> {
    let ts = build_toeplitz(cov, p, tol)?;
    let n = ts.n;
    let np = ts.np();
    let pack = |v: &[f64]| YwSolution {
        lags: blocks(&unvec_a_plus_t(v, n, np), n, p),
        sigma_u: sigma_u_from(&ts, v),
        relative_residual: singular_svar::yulewalker::relative_residual(&ts, v),
    };
    let min_norm = match method {
        Method::Minnorm | Method::Both => Some(min_norm_solution(&ts)?),
        Method::Pivot => None,
    };
    let pivot = match method {
        Method::Pivot | Method::Both => Some(pivot_solution(&ts)?),
        Method::Minnorm => None,
    };
    let same = match (&min_norm, &pivot) {
        (Some(a), Some((b, _))) => Some(same_projection(&ts, a, b)),
        _ => None,
    };
    Ok(SolveReport {
        n,
        p,
        rank_gamma_p: ts.rank_gamma_p,
        rank_deficiency: ts.rank_deficiency,
        pivot_rows: pivot.as_ref().map(|(_, sel)| sel.selected.clone()),
        min_norm: min_norm.as_deref().map(pack),
        pivot: pivot.as_ref().map(|(v, _)| pack(v)),
        same_projection: same,
        left_kernel: ts.left_kernel.clone(),
    })
}
