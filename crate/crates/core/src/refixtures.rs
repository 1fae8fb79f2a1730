//! Three-equation New-Keynesian model with expectations, solved from its
//! canonical form `Γ0 s_t = Γ1 s_{t-1} + Π η_t + Ψ ε_t`, and the golden
//! identification computations for the static singular SVAR it induces.
//!
//! State `s_t = (ξ^π_t, ξ^x_t, R_t)` with `ξ^π_t = E_t π_{t+1}`,
//! `ξ^x_t = E_t x_{t+1}`; forecast errors `η = (η^π, η^x)`; shocks
//! `ε = (ε^π, ε^R)`. Observables are `π_t = ξ^π_{t-1} + η^π_t`,
//! `x_t = ξ^x_{t-1} + η^x_t` and `R_t`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{check_local_identifiability, sigma_jacobian};
use crate::matrixcore::eigen::{eigenvalues, real_eigenspace};
use crate::matrixcore::{lu, rank, svd_with_tol, Mat, TolPolicy};
use crate::model::SvarModel;
use crate::restrictions::{NoiseParametrization, NoiseRestrictionSet};
use crate::scalar::Real;

pub const UNIT_CIRCLE_MARGIN: f64 = 1e-6;
pub const MAX_EIGVEC_CONDITION: f64 = 1e12;
pub const GOLDEN_ENTRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NkParams {
    pub beta: f64,
    pub phi: f64,
    pub tau: f64,
    pub kappa: f64,
}

impl Default for NkParams {
    fn default() -> Self {
        NkParams {
            beta: 0.8,
            phi: 39.0 / 38.0,
            tau: 0.75,
            kappa: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct CanonicalReModel<T: Real> {
    pub gamma0: Mat<T>,
    pub gamma1: Mat<T>,
    /// Loading of the forecast errors `η`.
    pub pi_mat: Mat<T>,
    /// Loading of the shocks `ε`.
    pub psi_mat: Mat<T>,
    pub params: Option<NkParams>,
}

impl<T: Real> CanonicalReModel<T> {
    pub fn new(gamma0: Mat<T>, gamma1: Mat<T>, pi_mat: Mat<T>, psi_mat: Mat<T>) -> Result<Self> {
        let k = gamma0.rows();
        if !gamma0.is_square()
            || gamma1.shape() != (k, k)
            || pi_mat.rows() != k
            || psi_mat.rows() != k
        {
            return Err(Error::ShapeMismatch(format!(
                "canonical form needs square Γ0/Γ1 of size {k} and Π/Ψ with {k} rows"
            )));
        }
        for (m, name) in [(&gamma0, "Γ0"), (&gamma1, "Γ1"), (&pi_mat, "Π"), (&psi_mat, "Ψ")] {
            m.ensure_finite(name)?;
        }
        if lu::Lu::new(&gamma0).is_err() {
            return Err(Error::Singular("Γ0".into()));
        }
        Ok(CanonicalReModel {
            gamma0,
            gamma1,
            pi_mat,
            psi_mat,
            params: None,
        })
    }

    /// The `(ξ^π, ξ^x, R)` sub-system. The `ε^π` loading carries a minus
    /// sign so that the first row reads `π_t = β E_t π_{t+1} + κ x_t + ε^π_t`.
    pub fn new_keynesian(p: NkParams) -> Result<Self> {
        let l = |x: f64| T::lit(x);
        let z = T::zero();
        let o = T::one();
        let gamma0 = Mat::from_rows(&[
            vec![l(p.beta), z, z],
            vec![l(p.tau), o, l(-p.tau)],
            vec![l(-p.phi), z, o],
        ])?;
        let gamma1 = Mat::from_rows(&[vec![o, l(-p.kappa), z], vec![z, o, z], vec![z, z, z]])?;
        let pi_mat = Mat::from_rows(&[vec![o, l(-p.kappa)], vec![z, o], vec![z, z]])?;
        let psi_mat = Mat::from_rows(&[vec![-o, z], vec![z, z], vec![z, o]])?;
        let mut m = Self::new(gamma0, gamma1, pi_mat, psi_mat)?;
        m.params = Some(p);
        Ok(m)
    }

    pub fn transition(&self) -> Mat<T> {
        lu::solve(&self.gamma0, &self.gamma1).expect("Γ0 checked invertible")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ReSolution<T: Real> {
    /// All eigenvalues of `Γ0⁻¹Γ1`, by descending modulus.
    pub eigenvalues: Vec<(T, T)>,
    pub unstable_eigenvalues: Vec<T>,
    pub stable_moduli: Vec<T>,
    /// `min |λ_u| - 1` and `1 - max |λ_s|`.
    pub unstable_margin: T,
    pub stable_margin: T,
    pub eigvec_condition: T,
    /// Unstable rows of `V⁻¹Γ0⁻¹Π` and `V⁻¹Γ0⁻¹Ψ`.
    pub pi_u: Mat<T>,
    pub psi_u: Mat<T>,
    /// `η_t = eta_map ε_t`, the forecast errors cancelling the shocks in the
    /// unstable directions: `eta_map = -Π_u⁻¹Ψ_u`.
    pub eta_map: Mat<T>,
    /// `s_t = state_impact ε_t`.
    pub state_impact: Mat<T>,
    /// `max |Γ0⁻¹Γ1 state_impact|`: zero when the solution has no dynamics.
    pub propagation: T,
    /// Map from `(ε^R, ε^π)` to `(R, π, x)`.
    pub b_static: Mat<T>,
    pub existence_unique: bool,
}

/// Unstable-eigenvalue count against the number of forecast errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceVerdict {
    pub unstable: usize,
    pub forecast_errors: usize,
    pub pi_u_invertible: bool,
    pub existence_unique: bool,
    pub moduli: Vec<f64>,
    pub detail: Option<String>,
}

struct Decomposition<T: Real> {
    eig: Vec<Complex<T>>,
    v_inv: Mat<T>,
    n_unstable: usize,
    cond: T,
}

fn decompose<T: Real>(a: &Mat<T>, margin: T) -> Result<Decomposition<T>> {
    let eig = eigenvalues(a)?;
    let k = a.rows();
    if let Some(z) = eig.iter().find(|z| (z.norm() - T::one()).abs() < margin) {
        return Err(Error::RootOnUnitCircle(z.norm().to_f64_lossy()));
    }
    let scale = T::one().max(a.max_abs());
    let same = |x: &Complex<T>, y: &Complex<T>| (*x - *y).norm() <= T::lit(1e-8) * scale;
    // One real basis per distinct eigenvalue, or per conjugate pair.
    let mut blocks: Vec<Mat<T>> = Vec::new();
    let mut i = 0;
    while i < eig.len() {
        let lambda = eig[i];
        let mut mult = 1;
        while i + mult < eig.len() && same(&eig[i + mult], &lambda) {
            mult += 1;
        }
        let is_pair = lambda.im != T::zero();
        let want = if is_pair { 2 * mult } else { mult };
        let basis = real_eigenspace(a, lambda, TolPolicy::Relative(T::lit(1e-8)))?;
        if basis.cols() != want {
            return Err(Error::NotDiagonalizable(f64::INFINITY));
        }
        blocks.push(basis);
        i += mult;
        if is_pair {
            // skip the conjugate partners
            let mut skipped = 0;
            while skipped < mult && i < eig.len() && same(&eig[i], &lambda.conj()) {
                i += 1;
                skipped += 1;
            }
        }
    }
    let refs: Vec<&Mat<T>> = blocks.iter().collect();
    let v = Mat::hstack(&refs)?;
    if v.cols() != k {
        return Err(Error::NotDiagonalizable(f64::INFINITY));
    }
    let s = svd_with_tol(&v, TolPolicy::Absolute(T::zero()))?;
    let smin = *s.singular_values.last().unwrap_or(&T::zero());
    let cond = if smin > T::zero() { s.sigma_max() / smin } else { T::infinity() };
    if !(cond.to_f64_lossy() <= MAX_EIGVEC_CONDITION) {
        return Err(Error::NotDiagonalizable(cond.to_f64_lossy()));
    }
    let v_inv = lu::inverse(&v)?;
    let n_unstable = eig.iter().filter(|z| z.norm() > T::one()).count();
    Ok(Decomposition {
        eig,
        v_inv,
        n_unstable,
        cond,
    })
}

/// Reports the eigenvalue count condition without failing on it.
pub fn existence_uniqueness<T: Real>(m: &CanonicalReModel<T>, margin: T) -> Result<ExistenceVerdict> {
    let d = decompose(&m.transition(), margin)?;
    let k_eta = m.pi_mat.cols();
    let moduli = d.eig.iter().map(|z| z.norm().to_f64_lossy()).collect();
    let mut detail = None;
    let mut invertible = false;
    if d.n_unstable == k_eta {
        let pi_u = unstable_rows(&d, &lu::solve(&m.gamma0, &m.pi_mat)?);
        invertible = lu::Lu::new(&pi_u).is_ok() && rank(&pi_u, TolPolicy::default())? == k_eta;
        if !invertible {
            detail = Some("Π_u is singular".into());
        }
    } else {
        detail = Some(format!(
            "{} unstable eigenvalues for {} forecast errors",
            d.n_unstable, k_eta
        ));
    }
    Ok(ExistenceVerdict {
        unstable: d.n_unstable,
        forecast_errors: k_eta,
        pi_u_invertible: invertible,
        existence_unique: d.n_unstable == k_eta && invertible,
        moduli,
        detail,
    })
}

fn unstable_rows<T: Real>(d: &Decomposition<T>, x: &Mat<T>) -> Mat<T> {
    let rows: Vec<usize> = (0..d.n_unstable).collect();
    (&d.v_inv * x).select_rows(&rows)
}

/// Solves the canonical form by choosing `η_t` so that the unstable
/// coordinates `V⁻¹ s_t` stay at zero.
pub fn solve_canonical<T: Real>(m: &CanonicalReModel<T>, margin: T) -> Result<ReSolution<T>> {
    let a = m.transition();
    let d = decompose(&a, margin)?;
    let k_eta = m.pi_mat.cols();
    if d.n_unstable != k_eta {
        return Err(Error::ExistenceUniquenessFailed(format!(
            "{} unstable eigenvalues for {} forecast errors",
            d.n_unstable, k_eta
        )));
    }
    let g_pi = lu::solve(&m.gamma0, &m.pi_mat)?;
    let g_psi = lu::solve(&m.gamma0, &m.psi_mat)?;
    let pi_u = unstable_rows(&d, &g_pi);
    let psi_u = unstable_rows(&d, &g_psi);
    if rank(&pi_u, TolPolicy::default())? < k_eta {
        return Err(Error::ExistenceUniquenessFailed("Π_u is singular".into()));
    }
    let eta_map = -&lu::solve(&pi_u, &psi_u)?;
    let state_impact = &(&g_pi * &eta_map) + &g_psi;
    let propagation = (&a * &state_impact).max_abs();

    let moduli: Vec<T> = d.eig.iter().map(|z| z.norm()).collect();
    let unstable: Vec<T> = moduli[..d.n_unstable].to_vec();
    let stable: Vec<T> = moduli[d.n_unstable..].to_vec();
    let unstable_margin = unstable.iter().fold(T::infinity(), |acc, x| acc.min(*x)) - T::one();
    let stable_margin = T::one() - stable.iter().fold(T::zero(), |acc, x| acc.max(*x));

    let b_static = if m.gamma0.rows() == 3 && k_eta == 2 && m.psi_mat.cols() == 2 {
        // (R, π, x) by (ε^R, ε^π): R from the state, π and x equal η when ξ vanishes
        Mat::from_rows(&[
            vec![state_impact[(2, 1)], state_impact[(2, 0)]],
            vec![eta_map[(0, 1)], eta_map[(0, 0)]],
            vec![eta_map[(1, 1)], eta_map[(1, 0)]],
        ])?
    } else {
        state_impact.clone()
    };
    Ok(ReSolution {
        eigenvalues: d.eig.iter().map(|z| (z.re, z.im)).collect(),
        unstable_eigenvalues: unstable,
        stable_moduli: stable,
        unstable_margin,
        stable_margin,
        eigvec_condition: d.cond,
        pi_u,
        psi_u,
        eta_map,
        state_impact,
        propagation,
        b_static,
        existence_unique: true,
    })
}

/// `B = [[1, 0], [-κτ, 1], [-τ, 0]]`.
pub fn closed_form_b(p: &NkParams) -> Mat<f64> {
    Mat::from_rows(&[vec![1.0, 0.0], vec![-p.kappa * p.tau, 1.0], vec![-p.tau, 0.0]]).unwrap()
}

/// Fixes `B[1,1] = 1`, `B[1,2] = 0`, `B[2,2] = 1`, `B[3,2] = 0` (1-based).
pub fn golden_restrictions() -> NoiseRestrictionSet<f64> {
    let mut c = Mat::zeros(4, 6);
    for (r, idx) in [0usize, 3, 4, 5].iter().enumerate() {
        c[(r, *idx)] = 1.0;
    }
    NoiseRestrictionSet::from_matrices(
        3,
        2,
        NoiseParametrization::B,
        Mat::zeros(0, 9),
        vec![],
        c,
        vec![1.0, 0.0, 1.0, 0.0],
    )
    .expect("full row rank selector")
}

/// Closed-form `M` for `L = (τ, 0, 1)`.
pub fn closed_form_m(tau: f64) -> Mat<f64> {
    let d = 1.0 + tau * tau;
    Mat::from_rows(&[
        vec![1.0 / d, 0.0, -tau / d, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0 / d, 0.0, -tau / d],
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, -tau / d, 0.0, tau * tau / d],
    ])
    .unwrap()
}

/// Closed-form `2 D₃⁺ (B ⊗ I₃)`.
pub fn closed_form_jacobian(p: &NkParams) -> Mat<f64> {
    let (t, kt) = (p.tau, p.kappa * p.tau);
    Mat::from_rows(&[
        vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![-kt, 1.0, 0.0, 1.0, 0.0, 0.0],
        vec![-t, 0.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.0, -2.0 * kt, 0.0, 0.0, 2.0, 0.0],
        vec![0.0, -t, -kt, 0.0, 0.0, 1.0],
        vec![0.0, 0.0, -2.0 * t, 0.0, 0.0, 0.0],
    ])
    .unwrap()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenReport {
    pub params: NkParams,
    pub items: Vec<GoldenItem>,
    pub all_pass: bool,
}

fn item(items: &mut Vec<GoldenItem>, name: &str, pass: bool, detail: String) {
    items.push(GoldenItem {
        name: name.into(),
        pass,
        detail,
    });
}

/// Runs every golden computation at `p` and reports each comparison.
/// Entries are compared within [`GOLDEN_ENTRY_TOL`], ranks exactly.
/// Failures are recorded, never raised.
pub fn golden_suite(p: NkParams) -> GoldenReport {
    let mut items = Vec::new();
    let tol = GOLDEN_ENTRY_TOL;
    let b_formula = closed_form_b(&p);

    let b = match CanonicalReModel::<f64>::new_keynesian(p)
        .and_then(|m| solve_canonical(&m, UNIT_CIRCLE_MARGIN))
    {
        Ok(sol) => {
            let n_u = sol.unstable_eigenvalues.len();
            let ordered = n_u == 2 && sol.unstable_eigenvalues[0] > sol.unstable_eigenvalues[1];
            item(
                &mut items,
                "two unstable eigenvalues",
                ordered && sol.unstable_margin > 0.0,
                format!("unstable moduli {:?}", sol.unstable_eigenvalues),
            );
            let eta_want = Mat::from_rows(&[vec![1.0, -p.kappa * p.tau], vec![0.0, -p.tau]]).unwrap();
            let d = sol.eta_map.max_abs_diff(&eta_want);
            item(&mut items, "forecast-error map", d <= tol, format!("max deviation {d:.3e}"));
            let d = sol.b_static.max_abs_diff(&b_formula);
            item(&mut items, "induced B", d <= tol, format!("max deviation {d:.3e}"));
            let xi = sol.state_impact.select_rows(&[0, 1]).max_abs();
            item(
                &mut items,
                "expectation states vanish",
                xi <= tol && sol.propagation <= tol,
                format!("max |ξ impact| {xi:.3e}, propagation {:.3e}", sol.propagation),
            );
            sol.b_static
        }
        Err(e) => {
            item(&mut items, "rational-expectations solution", false, e.to_string());
            b_formula.clone()
        }
    };

    match SvarModel::reduced(vec![Mat::zeros(3, 3)], b) {
        Err(e) => item(&mut items, "static model", false, e.to_string()),
        Ok(model) => golden_identification(&mut items, &model, &p),
    }
    let all_pass = items.iter().all(|i| i.pass);
    GoldenReport { params: p, items, all_pass }
}

fn golden_identification(items: &mut Vec<GoldenItem>, model: &SvarModel<f64>, p: &NkParams) {
    let tol = GOLDEN_ENTRY_TOL;
    let policy = TolPolicy::default();
    match model.innovation_left_kernel(policy) {
        Ok(l) if l.rows() == 1 => {
            let w = [p.tau, 0.0, 1.0];
            let nw = (p.tau * p.tau + 1.0).sqrt();
            let sign = if l.row(0).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let d = (0..3).map(|j| (sign * l[(0, j)] - w[j] / nw).abs()).fold(0.0, f64::max);
            item(items, "L proportional to (τ, 0, 1)", d <= tol, format!("max deviation {d:.3e}"));
        }
        Ok(l) => item(items, "L proportional to (τ, 0, 1)", false, format!("left kernel has {} rows", l.rows())),
        Err(e) => item(items, "L proportional to (τ, 0, 1)", false, e.to_string()),
    }
    let r = golden_restrictions();
    let rep = match check_local_identifiability(model, &r, policy) {
        Ok(rep) => rep,
        Err(e) => {
            item(items, "identification report", false, e.to_string());
            return;
        }
    };
    let d = rep.m_matrix.max_abs_diff(&closed_form_m(p.tau));
    item(items, "M entries", d <= tol, format!("max deviation {d:.3e}"));
    item(items, "rank(M) = 3", rep.rank_m == 3, format!("rank {}", rep.rank_m));
    item(
        items,
        "rank([M | c_B]) = 3",
        rep.rank_m_augmented == 3,
        format!("rank {}", rep.rank_m_augmented),
    );
    let jac = sigma_jacobian(model, NoiseParametrization::B);
    let d = jac.max_abs_diff(&closed_form_jacobian(p));
    item(items, "2 D3+ (B ⊗ I3) entries", d <= tol, format!("max deviation {d:.3e}"));
    item(
        items,
        "rank of stacked 10x6 matrix = 6",
        rep.jacobian.shape() == (10, 6) && rep.jacobian_rank == 6,
        format!("{:?} with rank {}", rep.jacobian.shape(), rep.jacobian_rank),
    );
    item(
        items,
        "no restriction implied by singularity",
        rep.redundant_rows.is_empty(),
        format!("redundant C_B rows {:?}", rep.redundant_rows),
    );
    item(
        items,
        "locally identified",
        rep.locally_identified,
        format!("compatible {}, Jacobian rank {}/{}", rep.compatible, rep.jacobian_rank, rep.required_rank),
    );
}
