//! Solutions of the Yule-Walker system `(I_n ⊗ Γ_p) vec(Ā₊ᵀ) = vec(γ_pᵀ)`
//! when `Γ_p` may be singular.
//!
//! Solutions are passed around as `vec(Ā₊ᵀ)` (length `n²p`): block `i` of
//! length `np` is row `i` of `Ā₊`. Because `Γ_p` is symmetric each block
//! solves `Γ_p a_i = (row i of γ_p)ᵀ` on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::svd::refined_solve;
use crate::matrixcore::{kernel_right, max_abs_vec, pinv, rank, svd_with_tol, Mat, TolPolicy};
use crate::model::SvarModel;
use crate::moments::{autocovariances, build_toeplitz, AutocovOptions, ToeplitzSystem};
use crate::scalar::Real;

/// Relative residual above which the system is declared inconsistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// `n x np` matrix whose row `i` is block `i` of `v`.
pub fn unvec_a_plus_t<T: Real>(v: &[T], n: usize, np: usize) -> Mat<T> {
    assert_eq!(v.len(), n * np, "vec(A+ᵀ) has wrong length");
    Mat::from_fn(n, np, |i, j| v[i * np + j])
}

pub fn vec_a_plus_t<T: Real>(a: &Mat<T>) -> Vec<T> {
    a.transpose().into_vec()
}

/// `(I_n ⊗ Γ_p) v`, computed block by block.
pub fn apply_kron_gamma<T: Real>(ts: &ToeplitzSystem<T>, v: &[T]) -> Vec<T> {
    let np = ts.np();
    v.chunks(np)
        .flat_map(|blk| ts.gamma_p_block.mul_vec(blk).expect("block length np"))
        .collect()
}

/// `vec(γ_pᵀ)`.
pub fn yw_rhs<T: Real>(ts: &ToeplitzSystem<T>) -> Vec<T> {
    vec_a_plus_t(&ts.gamma_p_row)
}

/// Max-norm residual of the system relative to `max(‖γ_p‖, ‖Γ_p‖‖v‖)`.
pub fn relative_residual<T: Real>(ts: &ToeplitzSystem<T>, v: &[T]) -> T {
    let lhs = apply_kron_gamma(ts, v);
    let rhs = yw_rhs(ts);
    let r = lhs
        .iter()
        .zip(&rhs)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    let scale = max_abs_vec(&rhs)
        .max(ts.gamma_p_block.max_abs() * max_abs_vec(v))
        .max(T::min_positive_value());
    r / scale
}

fn ensure_consistent<T: Real>(ts: &ToeplitzSystem<T>, v: &[T]) -> Result<()> {
    let r = relative_residual(ts, v);
    if r > T::lit(CONSISTENCY_TOL) {
        return Err(Error::InconsistentSystem {
            residual: r.to_f64_lossy(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct YwSolutionSet<T: Real> {
    /// Minimum-norm particular solution `vec(Ā₊ᵀ)`.
    pub particular: Vec<T>,
    /// `I_n ⊗ V₂`, columns spanning the kernel of `I_n ⊗ Γ_p` (`n²p x ns`).
    pub kernel_basis: Mat<T>,
    /// `V₂`, orthonormal basis of the kernel of `Γ_p`.
    pub gamma_kernel: Mat<T>,
    pub sigma_u: Mat<T>,
    pub relative_residual: T,
}

impl<T: Real> YwSolutionSet<T> {
    /// `particular + kernel_basis * w`.
    pub fn member(&self, w: &[T]) -> Result<Vec<T>> {
        let shift = self.kernel_basis.mul_vec(w)?;
        Ok(self.particular.iter().zip(shift).map(|(a, b)| *a + b).collect())
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.cols()
    }
}

/// Affine parametrization of all solutions.
pub fn solution_set<T: Real>(ts: &ToeplitzSystem<T>) -> Result<YwSolutionSet<T>> {
    let particular = min_norm_solution(ts)?;
    let v2 = kernel_right(&ts.gamma_p_block, ts.tol)?;
    let kernel_basis = Mat::<T>::identity(ts.n).kron(&v2);
    Ok(YwSolutionSet {
        relative_residual: relative_residual(ts, &particular),
        sigma_u: sigma_u_from(ts, &particular),
        particular,
        kernel_basis,
        gamma_kernel: v2,
    })
}

/// Coordinate selectors of the pivot construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct PivotSelection<T: Real> {
    /// `np x (np - s)`, columns `e_k` for the selected rows of `Γ_p`.
    pub s1: Mat<T>,
    /// `np x s`, columns `e_k` for the remaining coordinates.
    pub s2: Mat<T>,
    /// 0-based indices of the selected rows, increasing.
    pub selected: Vec<usize>,
    pub complement: Vec<usize>,
}

fn selector<T: Real>(dim: usize, idx: &[usize]) -> Mat<T> {
    let mut s = Mat::zeros(dim, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        s[(k, c)] = T::one();
    }
    s
}

/// Greedy top-to-bottom choice of the first linearly independent rows of
/// `Γ_p`, using the rank cut of the full matrix.
pub fn pivot_selection<T: Real>(ts: &ToeplitzSystem<T>) -> Result<PivotSelection<T>> {
    let g = &ts.gamma_p_block;
    let np = g.rows();
    let full = svd_with_tol(g, ts.tol)?;
    let cut = TolPolicy::Absolute(full.tol);
    let mut selected: Vec<usize> = Vec::with_capacity(full.rank);
    for k in 0..np {
        if selected.len() == full.rank {
            break;
        }
        let mut trial = selected.clone();
        trial.push(k);
        if rank(&g.select_rows(&trial), cut)? == trial.len() {
            selected = trial;
        }
    }
    if selected.len() != full.rank {
        return Err(Error::Singular(format!(
            "greedy row selection found {} independent rows, expected {}",
            selected.len(),
            full.rank
        )));
    }
    let complement: Vec<usize> = (0..np).filter(|k| !selected.contains(k)).collect();
    Ok(PivotSelection {
        s1: selector(np, &selected),
        s2: selector(np, &complement),
        selected,
        complement,
    })
}

/// The solution whose `S₂`-coordinates vanish in every block: the unique
/// solution of `[(I_n ⊗ Γ_p); (I_n ⊗ S₂ᵀ)] x = (vec(γ_pᵀ); 0)`.
pub fn pivot_solution<T: Real>(ts: &ToeplitzSystem<T>) -> Result<(Vec<T>, PivotSelection<T>)> {
    let sel = pivot_selection(ts)?;
    let g = &ts.gamma_p_block;
    let np = g.rows();
    // The stacked per-block matrix must have full column rank np.
    let stacked = Mat::vstack(&[g, &sel.s2.transpose()])?;
    let r = rank(&stacked, ts.tol)?;
    if r != np {
        return Err(Error::Singular(format!(
            "stacked pivot system has rank {r} < {np}"
        )));
    }
    let cols = g.select_cols(&sel.selected);
    let cols_pinv = pinv(&cols, TolPolicy::Absolute(T::zero()))?;
    let rhs = yw_rhs(ts);
    let mut sol = vec![T::zero(); ts.n * np];
    for (i, blk) in rhs.chunks(np).enumerate() {
        let a1 = refined_solve(&cols, &cols_pinv, blk);
        for (c, &k) in sel.selected.iter().enumerate() {
            sol[i * np + k] = a1[c];
        }
    }
    ensure_consistent(ts, &sol)?;
    Ok((sol, sel))
}

/// `vec((γ_p Γ_p⁺)ᵀ)`: the solution with no component along the kernel of `Γ_p`.
pub fn min_norm_solution<T: Real>(ts: &ToeplitzSystem<T>) -> Result<Vec<T>> {
    let gp = pinv(&ts.gamma_p_block, ts.tol)?;
    let sol: Vec<T> = yw_rhs(ts)
        .chunks(ts.np())
        .flat_map(|blk| refined_solve(&ts.gamma_p_block, &gp, blk))
        .collect();
    ensure_consistent(ts, &sol)?;
    Ok(sol)
}

/// `(I_n ⊗ Γ_p)(a - b) = 0` within `rel_tol` relative to
/// `‖Γ_p‖ max(1, ‖a‖, ‖b‖)`.
pub fn same_projection_with_tol<T: Real>(ts: &ToeplitzSystem<T>, a: &[T], b: &[T], rel_tol: T) -> bool {
    if a.len() != b.len() || a.len() != ts.n * ts.np() {
        return false;
    }
    let d: Vec<T> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
    let img = apply_kron_gamma(ts, &d);
    let scale = ts.gamma_p_block.max_abs() * T::one().max(max_abs_vec(a)).max(max_abs_vec(b));
    max_abs_vec(&img) <= rel_tol * scale
}

/// [`same_projection_with_tol`] at relative tolerance 1e-9.
pub fn same_projection<T: Real>(ts: &ToeplitzSystem<T>, a: &[T], b: &[T]) -> bool {
    same_projection_with_tol(ts, a, b, T::lit(1e-9))
}

/// `Σ_u = γ(0) - Ā₊ γ_pᵀ` for a solution `vec(Ā₊ᵀ)`.
pub fn sigma_u_from<T: Real>(ts: &ToeplitzSystem<T>, sol: &[T]) -> Mat<T> {
    let a = unvec_a_plus_t(sol, ts.n, ts.np());
    (&ts.gamma0 - &(&a * &ts.gamma_p_row.transpose())).symmetrized()
}

/// A stable singular VAR with two distinct lag polynomials generating the
/// same process: `a₂(z) = (I + c cᵀ z) a₁(z)` with `cᵀĀ_p = 0`, `cᵀB = 0`.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = ""))]
pub struct DegenerateExample<T: Real> {
    /// Model with lag polynomial `a₁`.
    pub model: SvarModel<T>,
    /// Same `B`, lag polynomial `a₂`.
    pub alternative: SvarModel<T>,
    pub c: Vec<T>,
    pub rank_gamma_p: usize,
    pub attempts: usize,
}

const DEGENERATE_ATTEMPTS: usize = 100;

/// Builds a [`DegenerateExample`] with `n` variables, `p` lags and a
/// seeded number of shocks `q ∈ [1, n-1]`; `A0 = I`.
pub fn degenerate_example<T: Real>(n: usize, p: usize, seed: u64) -> Result<DegenerateExample<T>> {
    if n < 2 || p < 1 {
        return Err(Error::InvalidInput(format!("need n >= 2 and p >= 1, got n={n}, p={p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = rng.random_range(1..n);
    let mut last = String::new();
    for attempt in 1..=DEGENERATE_ATTEMPTS {
        match degenerate_attempt::<T>(n, p, q, &mut rng) {
            Ok(mut ex) => {
                ex.attempts = attempt;
                return Ok(ex);
            }
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::ConstructionFailed {
        attempts: DEGENERATE_ATTEMPTS,
        reason: last,
    })
}

fn degenerate_attempt<T: Real>(n: usize, p: usize, q: usize, rng: &mut ChaCha8Rng) -> Result<DegenerateExample<T>> {
    let mut normal = |r: usize, c: usize, s: f64| -> Mat<T> {
        Mat::from_fn(r, c, |_, _| {
            let x: f64 = rng.sample(StandardNormal);
            T::lit(s * x)
        })
    };
    // ‖c‖² = 1/2 puts the root of det(I + ccᵀz) = 1 + ‖c‖²z at z = -2.
    let c0 = normal(n, 1, 1.0);
    let cn = c0.frobenius();
    if cn.is_zero() {
        return Err(Error::Singular("zero direction drawn".into()));
    }
    let c = c0.scale(&(T::lit(0.5f64.sqrt()) / cn));
    let cc = &c * &c.transpose();
    let proj = &Mat::identity(n) - &cc.scale(&(T::one() / T::lit(0.5)));
    let mut lags: Vec<Mat<T>> = (0..p).map(|_| normal(n, n, 1.0 / (n as f64).sqrt())).collect();
    lags[p - 1] = &proj * &lags[p - 1];
    let b = &proj * &normal(n, q, 1.0);

    let raw = SvarModel::reduced(lags, b)?;
    let rho = raw.is_stable(0.0)?.spectral_radius;
    if rho < 1e-3 {
        return Err(Error::Singular("companion matrix nearly nilpotent".into()));
    }
    let target: f64 = rng.random_range(0.5..0.9);
    let s = T::lit(target / rho);
    let mut sk = T::one();
    let lags: Vec<Mat<T>> = raw
        .a_plus()
        .iter()
        .map(|a| {
            sk *= s;
            a.scale(&sk)
        })
        .collect();
    let model = raw.with_lags(lags.clone())?;
    model.ensure_stable(1e-8)?;

    let mut alt = Vec::with_capacity(p);
    alt.push(&lags[0] - &cc);
    for i in 1..p {
        alt.push(&lags[i] + &(&cc * &lags[i - 1]));
    }
    let alternative = model.with_lags(alt)?;
    alternative.ensure_stable(1e-8)?;

    let cov = autocovariances(&model, p, AutocovOptions::default())?;
    let ts = build_toeplitz(&cov, p, TolPolicy::default())?;
    if ts.rank_gamma_p >= n * p {
        return Err(Error::Singular(format!(
            "Gamma_p numerically nonsingular (rank {})",
            ts.rank_gamma_p
        )));
    }
    Ok(DegenerateExample {
        model,
        alternative,
        c: c.into_vec(),
        rank_gamma_p: ts.rank_gamma_p,
        attempts: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::CovarianceSequence;

    fn diag110() -> ToeplitzSystem<f64> {
        let g = Mat::diag(&[1.0, 1.0, 0.0]);
        ToeplitzSystem::from_raw(g.clone(), g, Mat::zeros(3, 3), TolPolicy::default()).unwrap()
    }

    #[test]
    fn nonsingular_gamma_has_unique_solution() {
        let cov = CovarianceSequence::new(vec![
            Mat::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
            Mat::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap(),
        ])
        .unwrap();
        let ts = build_toeplitz(&cov, 1, TolPolicy::default()).unwrap();
        let set = solution_set(&ts).unwrap();
        assert_eq!(set.kernel_dim(), 0);
        let (hat, sel) = pivot_solution(&ts).unwrap();
        assert!(sel.complement.is_empty());
        let tilde: Vec<f64> = min_norm_solution(&ts).unwrap();
        for (a, b) in hat.iter().zip(&tilde) {
            assert!((a - b).abs() < 1e-13);
        }
        // Direct oracle: Ā = γ(1) γ(0)⁻¹.
        let direct = &cov.gammas()[1] * &crate::matrixcore::lu::inverse(&cov.gammas()[0]).unwrap();
        assert!(unvec_a_plus_t(&hat, 2, 2).max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn diag_110_kernel_and_solutions() {
        let ts = diag110();
        let set = solution_set(&ts).unwrap();
        assert_eq!(set.kernel_dim(), 3);
        let (hat, sel) = pivot_solution(&ts).unwrap();
        assert_eq!(sel.selected, vec![0, 1]);
        assert_eq!(sel.complement, vec![2]);
        for i in 0..3 {
            assert_eq!(hat[i * 3 + 2], 0.0);
        }
        let tilde = min_norm_solution(&ts).unwrap();
        assert!(tilde.iter().all(|x| *x == 0.0));
        assert!(same_projection(&ts, &hat, &tilde));
        let moved = set.member(&[1.0, -2.0, 0.5]).unwrap();
        assert!(same_projection(&ts, &moved, &tilde));
        let mut off = tilde.clone();
        off[0] = 1.0;
        assert!(!same_projection(&ts, &off, &tilde));
    }

    #[test]
    fn inconsistent_system_rejected() {
        let g = Mat::diag(&[1.0, 1.0, 0.0]);
        let mut row = Mat::zeros(3, 3);
        row[(0, 2)] = 1.0;
        let ts = ToeplitzSystem::from_raw(Mat::identity(3), g, row, TolPolicy::default()).unwrap();
        assert!(matches!(min_norm_solution(&ts), Err(Error::InconsistentSystem { .. })));
        assert!(matches!(pivot_solution(&ts), Err(Error::InconsistentSystem { .. })));
    }

    #[test]
    fn degenerate_example_is_degenerate() {
        let ex: DegenerateExample<f64> = degenerate_example(3, 2, 11).unwrap();
        assert!(ex.rank_gamma_p < 6);
        let c = Mat::row_vector(&ex.c);
        assert!((&c * ex.model.a(2)).max_abs() < 1e-12);
        assert!((&c * ex.model.b()).max_abs() < 1e-12);
        let cov = autocovariances(&ex.model, 2, AutocovOptions::default()).unwrap();
        let ts = build_toeplitz(&cov, 2, TolPolicy::default()).unwrap();
        let v1 = ex.model.vec_a_plus_t();
        let v2 = ex.alternative.vec_a_plus_t();
        assert!(relative_residual(&ts, &v1) < 1e-9);
        assert!(relative_residual(&ts, &v2) < 1e-9);
        assert!(same_projection(&ts, &v1, &v2));
        assert!(sigma_u_from(&ts, &v1).max_abs_diff(&sigma_u_from(&ts, &v2)) < 1e-9);
    }
}
