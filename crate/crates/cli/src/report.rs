//! Report types written by the CLI and their text renderings. Every text
//! summary is a pure function of the JSON-serializable report.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use singular_svar::identify::{GenericityReport, NoiseIdentReport, SystemIdentReport};
use singular_svar::moments::StructureEstimate;
use singular_svar::refixtures::GoldenReport;
use singular_svar::{Mat, NoiseParametrization, TolPolicy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    /// `"model"` or `"covariance"`.
    pub source: String,
    pub noise: Option<NoiseIdentReport<f64>>,
    pub system: Option<SystemIdentReport<f64>>,
    pub identified: bool,
}

fn tol_text(t: &TolPolicy<f64>) -> String {
    match t {
        TolPolicy::Relative(f) => format!("relative {f:e}"),
        TolPolicy::Absolute(a) => format!("absolute {a:e}"),
    }
}

fn rows_text(rows: &[usize]) -> String {
    if rows.is_empty() {
        "none".into()
    } else {
        rows.iter().map(|r| (r + 1).to_string()).collect::<Vec<_>>().join(", ")
    }
}

fn noise_ok(r: &NoiseIdentReport<f64>) -> bool {
    r.compatible && r.locally_identified
}

fn system_ok(r: &SystemIdentReport<f64>) -> bool {
    r.unique_solution && r.not_overidentifying != Some(false)
}

impl AnalyzeReport {
    pub fn new(source: &str, noise: Option<NoiseIdentReport<f64>>, system: Option<SystemIdentReport<f64>>) -> Self {
        let identified = noise.as_ref().is_none_or(noise_ok) && system.as_ref().is_none_or(system_ok);
        AnalyzeReport {
            source: source.into(),
            noise,
            system,
            identified,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(r) = &self.noise {
            let param = match r.parametrization {
                NoiseParametrization::B => "B",
                NoiseParametrization::Ab => "(A0, B)",
            };
            let _ = writeln!(s, "noise side: parameters {param}, n = {}, q = {}", r.n, r.q);
            let _ = writeln!(
                s,
                "  compatible: {} (rank M = {}, rank [M | c] = {}, singular value cut {:.3e})",
                r.compatible, r.rank_m, r.rank_m_augmented, r.rank_threshold
            );
            let _ = writeln!(s, "  jacobian rank: {}/{}", r.jacobian_rank, r.required_rank);
            let _ = writeln!(s, "  locally identified: {}", r.locally_identified);
            let _ = writeln!(s, "  restrictions implied by singularity: {}", rows_text(&r.redundant_rows));
            let oc = &r.order_condition;
            let _ = writeln!(
                s,
                "  order condition: {} ({} rows for {} parameters; necessary only)",
                if oc.met { "met" } else { "not met" },
                oc.rows,
                oc.required
            );
            let _ = writeln!(s, "  tolerance: {}", tol_text(&r.tol));
            for w in &r.warnings {
                let _ = writeln!(s, "  warning: {w}");
            }
        }
        if let Some(r) = &self.system {
            let _ = writeln!(
                s,
                "system side: n = {}, p = {}, rank deficiency s = {}, {} restrictions for a {}-dimensional solution set",
                r.n, r.p, r.rank_deficiency, r.restriction_rows, r.solution_set_dim
            );
            let over = match r.not_overidentifying {
                Some(v) => (!v).to_string(),
                None => "n/a".into(),
            };
            let _ = writeln!(s, "  unique: {}, over-identifying: {}", r.unique_solution, over);
            if let Some(res) = r.overid_residual {
                let _ = writeln!(s, "  over-identification residual: {res:.3e} (threshold {:.3e})", r.overid_tol);
            }
            let _ = writeln!(s, "  restricted solution residual: {:.3e}", r.restricted_residual);
            let _ = writeln!(s, "  tolerance: {}", tol_text(&r.tol));
            for note in &r.notes {
                let _ = writeln!(s, "  note: {note}");
            }
        }
        let _ = writeln!(s, "verdict: {}", if self.identified { "identified" } else { "not identified" });
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YwSolution {
    /// `Ā_1, ..., Ā_p`.
    pub lags: Vec<Mat<f64>>,
    pub sigma_u: Mat<f64>,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub p: usize,
    pub rank_gamma_p: usize,
    pub rank_deficiency: usize,
    /// 0-based rows of `Γ_p` kept by the pivot construction.
    pub pivot_rows: Option<Vec<usize>>,
    pub min_norm: Option<YwSolution>,
    pub pivot: Option<YwSolution>,
    pub same_projection: Option<bool>,
    pub left_kernel: Mat<f64>,
}

impl SolveReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Yule-Walker system: n = {}, p = {}, rank Gamma_p = {} (deficiency {})",
            self.n, self.p, self.rank_gamma_p, self.rank_deficiency
        );
        for (name, sol) in [("minimum-norm", &self.min_norm), ("pivot", &self.pivot)] {
            if let Some(sol) = sol {
                let _ = writeln!(s, "{name} solution (relative residual {:.3e}):", sol.relative_residual);
                for (k, a) in sol.lags.iter().enumerate() {
                    let _ = write!(s, "  A{}:\n{}", k + 1, indent(&a.to_string()));
                }
                let _ = write!(s, "  Sigma_u:\n{}", indent(&sol.sigma_u.to_string()));
            }
        }
        if let Some(rows) = &self.pivot_rows {
            let _ = writeln!(s, "pivot rows: {}", rows_text(rows));
        }
        if let Some(same) = self.same_projection {
            let _ = writeln!(s, "same projection: {same}");
        }
        let _ = writeln!(s, "left kernel rows of Sigma_u: {}", self.left_kernel.rows());
        s
    }
}

fn indent(block: &str) -> String {
    block.lines().map(|l| format!("    {l}\n")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityOutput {
    #[serde(flatten)]
    pub report: GenericityReport,
}

impl From<GenericityReport> for GenericityOutput {
    fn from(report: GenericityReport) -> Self {
        GenericityOutput { report }
    }
}

impl GenericityOutput {
    pub fn summary(&self) -> String {
        let r = &self.report;
        format!(
            "genericity: {}/{} random restriction matrices ({} rows each) give a unique solution; fraction {} (seed {})\n",
            r.successes, r.trials, r.restriction_rows, r.fraction, r.seed
        )
    }
}

pub fn detect_summary(e: &StructureEstimate<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "p_hat = {}, q_hat = {}", e.p_hat, e.q_hat);
    let profile: Vec<String> = e.rank_profile.iter().map(|(r, k)| format!("{r}:{k}")).collect();
    let _ = writeln!(s, "rank profile (r:rank): {}", profile.join(" "));
    let inc: Vec<String> = e.increments.iter().map(|k| k.to_string()).collect();
    let _ = writeln!(s, "increments: {}", inc.join(" "));
    let _ = write!(s, "L_hat ({} rows):\n{}", e.l_hat.rows(), indent(&e.l_hat.to_string()));
    let _ = writeln!(s, "ambiguous: {}", e.ambiguous);
    for n in &e.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

pub fn golden_summary(r: &GoldenReport) -> String {
    let mut s = String::new();
    let p = &r.params;
    let _ = writeln!(
        s,
        "parameters: beta = {}, phi = {}, tau = {}, kappa = {}",
        p.beta, p.phi, p.tau, p.kappa
    );
    for item in &r.items {
        let _ = writeln!(s, "{} {}: {}", if item.pass { "PASS" } else { "FAIL" }, item.name, item.detail);
    }
    let passed = r.items.iter().filter(|i| i.pass).count();
    let _ = writeln!(s, "{passed}/{} passed", r.items.len());
    s
}
