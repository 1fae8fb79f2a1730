//! One-sided Jacobi SVD with an explicit rank cut, plus the kernel, rank,
//! pseudo-inverse and projection helpers built on it.

use serde::{Deserialize, Serialize};

use super::mat::{dot, Mat};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// How the rank cut-off is chosen.
///
/// `Relative(f)` gives `tol = f * sigma_max * max(rows, cols)`; the default is
/// `Relative(machine epsilon)`. `Absolute(t)` uses `t` as-is.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TolPolicy<T> {
    Relative(T),
    Absolute(T),
}

impl<T: Real> Default for TolPolicy<T> {
    fn default() -> Self {
        TolPolicy::Relative(T::epsilon())
    }
}

impl<T: Real> TolPolicy<T> {
    pub fn threshold(&self, sigma_max: T, rows: usize, cols: usize) -> T {
        match *self {
            TolPolicy::Relative(f) => f * sigma_max * T::lit(rows.max(cols) as f64),
            TolPolicy::Absolute(t) => t,
        }
    }
}

/// Thin-plus-null SVD: `a = u_range * diag(sigma[..rank]) * v_rangeᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct SvdFactors<T: Real> {
    pub u_range: Mat<T>,
    pub u_null: Mat<T>,
    /// All `min(rows, cols)` singular values, descending.
    pub singular_values: Vec<T>,
    pub v_range: Mat<T>,
    pub v_null: Mat<T>,
    pub tol: T,
    pub rank: usize,
}

impl<T: Real> SvdFactors<T> {
    pub fn sigma_max(&self) -> T {
        self.singular_values.first().copied().unwrap_or_else(T::zero)
    }

    /// `u_range * diag(sigma) * v_rangeᵀ`.
    pub fn reconstruct(&self) -> Mat<T> {
        let r = self.rank;
        let scaled = Mat::from_fn(self.u_range.rows(), r, |i, j| {
            self.u_range[(i, j)] * self.singular_values[j]
        });
        &scaled * &self.v_range.transpose()
    }
}

/// Orthogonalizes the columns of a tall matrix in place; returns the
/// accumulated right rotations `V` so that `x_in * V = x_out`.
fn jacobi_orthogonalize<T: Real>(x: &mut Mat<T>) -> Result<Mat<T>> {
    let n = x.cols();
    let m = x.rows();
    let mut v = Mat::identity(n);
    let eps = T::epsilon() * T::lit((m as f64).sqrt().max(1.0));
    let total: T = x.as_vec().iter().fold(T::zero(), |acc, e| acc + *e * *e);
    // Columns below this squared norm are rounding noise of the input.
    let floor = total * T::epsilon() * T::epsilon() * T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(x.col(p), x.col(p));
                let beta = dot(x.col(q), x.col(q));
                let gamma = dot(x.col(p), x.col(q));
                if gamma == T::zero()
                    || gamma.abs() <= eps * (alpha * beta).sqrt()
                    || alpha.min(beta) <= floor
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let xp = x[(i, p)];
                    let xq = x[(i, q)];
                    x[(i, p)] = c * xp - s * xq;
                    x[(i, q)] = s * xp + c * xq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence("Jacobi SVD sweeps exhausted".into()))
}

/// Extends orthonormal columns `basis` (`m x r`) to an orthonormal basis of
/// the orthogonal complement (`m x (m - r)`), greedily picking the unit
/// vector with the largest residual each step.
pub fn orthonormal_complement<T: Real>(basis: &Mat<T>, m: usize) -> Mat<T> {
    let r = basis.cols();
    let mut cols: Vec<Vec<T>> = (0..r).map(|j| basis.col(j).to_vec()).collect();
    let mut out: Vec<Vec<T>> = Vec::with_capacity(m.saturating_sub(r));
    for _ in r..m {
        let mut best: Option<(T, Vec<T>)> = None;
        for i in 0..m {
            let mut e = vec![T::zero(); m];
            e[i] = T::one();
            for _ in 0..2 {
                for c in cols.iter() {
                    let d = dot(c, &e);
                    for (ek, ck) in e.iter_mut().zip(c) {
                        *ek -= d * *ck;
                    }
                }
            }
            let nrm = dot(&e, &e).sqrt();
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, e));
            }
        }
        let (nrm, mut e) = best.expect("m > 0");
        for x in e.iter_mut() {
            *x /= nrm;
        }
        cols.push(e.clone());
        out.push(e);
    }
    let data: Vec<T> = out.into_iter().flatten().collect();
    Mat::from_col_major(m, m.saturating_sub(r), data).expect("complement shape")
}

/// SVD with the rank decided by `policy`.
pub fn svd_with_tol<T: Real>(a: &Mat<T>, policy: TolPolicy<T>) -> Result<SvdFactors<T>> {
    a.ensure_finite("svd input")?;
    let (m, n) = a.shape();
    let tall = m >= n;
    // Work on the tall orientation; the short side gets a full basis from
    // the Jacobi rotations, the long side is completed afterwards.
    let mut w = if tall { a.clone() } else { a.transpose() };
    let (long, short) = w.shape();
    let rot = jacobi_orthogonalize(&mut w)?;

    let mut sig: Vec<(T, usize)> = (0..short)
        .map(|j| (dot(w.col(j), w.col(j)).sqrt(), j))
        .collect();
    sig.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite singular values"));
    let singular_values: Vec<T> = sig.iter().map(|s| s.0).collect();
    let sigma_max = singular_values.first().copied().unwrap_or_else(T::zero);
    let tol = policy.threshold(sigma_max, m, n);
    let rank = singular_values.iter().filter(|&&s| s > tol).count();

    let order: Vec<usize> = sig.iter().map(|s| s.1).collect();
    let short_range = rot.select_cols(&order[..rank]);
    let short_null = rot.select_cols(&order[rank..]);
    let long_range = Mat::from_fn(long, rank, |i, j| w[(i, order[j])] / singular_values[j]);
    // Re-orthonormalize the normalized columns to clean up rounding before
    // completing the basis.
    let long_range = gram_schmidt(&long_range);
    let long_null = orthonormal_complement(&long_range, long);

    let (u_range, u_null, v_range, v_null) = if tall {
        (long_range, long_null, short_range, short_null)
    } else {
        (short_range, short_null, long_range, long_null)
    };
    Ok(SvdFactors {
        u_range,
        u_null,
        singular_values,
        v_range,
        v_null,
        tol,
        rank,
    })
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns are
/// assumed linearly independent.
fn gram_schmidt<T: Real>(a: &Mat<T>) -> Mat<T> {
    let mut q: Vec<Vec<T>> = Vec::with_capacity(a.cols());
    for j in 0..a.cols() {
        let mut v = a.col(j).to_vec();
        for _ in 0..2 {
            for c in &q {
                let d = dot(c, &v);
                for (vk, ck) in v.iter_mut().zip(c) {
                    *vk -= d * *ck;
                }
            }
        }
        let nrm = dot(&v, &v).sqrt();
        for x in v.iter_mut() {
            *x /= nrm;
        }
        q.push(v);
    }
    Mat::from_col_major(a.rows(), a.cols(), q.into_iter().flatten().collect())
        .expect("gram-schmidt shape")
}

/// Flips each column so its first non-negligible entry is positive.
pub fn canonicalize_columns<T: Real>(m: &Mat<T>) -> Mat<T> {
    let mut out = m.clone();
    for j in 0..m.cols() {
        let col = m.col(j);
        let scale = col.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        let cut = scale * T::lit(1e3) * T::epsilon();
        if let Some(first) = col.iter().find(|x| x.abs() > cut) {
            if *first < T::zero() {
                for i in 0..m.rows() {
                    out[(i, j)] = -out[(i, j)];
                }
            }
        }
    }
    out
}

pub fn rank<T: Real>(a: &Mat<T>, policy: TolPolicy<T>) -> Result<usize> {
    Ok(svd_with_tol(a, policy)?.rank)
}

/// Orthonormal basis of the right kernel, as columns.
pub fn kernel_right<T: Real>(a: &Mat<T>, policy: TolPolicy<T>) -> Result<Mat<T>> {
    Ok(canonicalize_columns(&svd_with_tol(a, policy)?.v_null))
}

/// Orthonormal basis of the left kernel, as rows (`x a = 0` for each row `x`).
pub fn kernel_left<T: Real>(a: &Mat<T>, policy: TolPolicy<T>) -> Result<Mat<T>> {
    Ok(canonicalize_columns(&svd_with_tol(a, policy)?.u_null).transpose())
}

/// Moore-Penrose pseudo-inverse with singular values at or below the
/// tolerance treated as zero.
pub fn pinv<T: Real>(a: &Mat<T>, policy: TolPolicy<T>) -> Result<Mat<T>> {
    let f = svd_with_tol(a, policy)?;
    let scaled = Mat::from_fn(f.v_range.rows(), f.rank, |i, j| {
        f.v_range[(i, j)] / f.singular_values[j]
    });
    Ok(&scaled * &f.u_range.transpose())
}

const REFINEMENT_STEPS: usize = 3;

/// `x = A⁺b` refined by `x ← x + A⁺(b - Ax)`; the corrections stay in the
/// range of `A⁺`, so the result is the same least-squares solution with a
/// residual at rounding level.
pub fn refined_solve<T: Real>(a: &Mat<T>, a_pinv: &Mat<T>, b: &[T]) -> Vec<T> {
    let mut x = a_pinv.mul_vec(b).expect("pinv shape");
    for _ in 0..REFINEMENT_STEPS {
        let ax = a.mul_vec(&x).expect("matching shape");
        let r: Vec<T> = b.iter().zip(ax).map(|(bi, yi)| *bi - yi).collect();
        let dx = a_pinv.mul_vec(&r).expect("pinv shape");
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    x
}

/// `Proj_R(A | B) = A Bᵀ(BBᵀ)⁺B`, the projection of the rows of `a` onto the
/// row span of `b`.
pub fn proj_row<T: Real>(a: &Mat<T>, b: &Mat<T>, policy: TolPolicy<T>) -> Result<Mat<T>> {
    if a.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!(
            "proj_row: A has {} columns, B has {}",
            a.cols(),
            b.cols()
        )));
    }
    let vr = svd_with_tol(b, policy)?.v_range;
    Ok(&(a * &vr) * &vr.transpose())
}

/// `Proj_C(A | D)`, the projection of the columns of `a` onto the column
/// span of `d`.
pub fn proj_col<T: Real>(a: &Mat<T>, d: &Mat<T>, policy: TolPolicy<T>) -> Result<Mat<T>> {
    if a.rows() != d.rows() {
        return Err(Error::ShapeMismatch(format!(
            "proj_col: A has {} rows, D has {}",
            a.rows(),
            d.rows()
        )));
    }
    let ur = svd_with_tol(d, policy)?.u_range;
    Ok(&ur * &(&ur.transpose() * a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormal_cols(m: &Mat<f64>) -> f64 {
        (&m.transpose() * m).max_abs_diff(&Mat::identity(m.cols()))
    }

    #[test]
    fn zero_matrix_has_empty_range() {
        let f = svd_with_tol(&Mat::<f64>::zeros(3, 3), TolPolicy::default()).unwrap();
        assert_eq!(f.rank, 0);
        assert_eq!(f.u_range.cols(), 0);
        assert_eq!(f.v_null.cols(), 3);
        assert!(orthonormal_cols(&f.v_null) < 1e-15);
    }

    #[test]
    fn diagonal_rank_two() {
        let a = Mat::diag(&[1.0, 1.0, 0.0]);
        let f = svd_with_tol(&a, TolPolicy::default()).unwrap();
        assert_eq!(f.rank, 2);
        let k = kernel_right(&a, TolPolicy::default()).unwrap();
        assert_eq!(k.as_vec(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn wide_and_tall_reconstruct() {
        let a = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0, -1.0],
            vec![0.5, -1.0, 2.0, 4.0],
            vec![1.5, 1.0, 5.0, 3.0],
        ])
        .unwrap();
        for m in [a.clone(), a.transpose()] {
            let f = svd_with_tol(&m, TolPolicy::default()).unwrap();
            assert_eq!(f.rank, 2);
            assert!(f.reconstruct().max_abs_diff(&m) < 1e-13);
            assert!(orthonormal_cols(&f.u_range) < 1e-14);
            assert!(orthonormal_cols(&f.u_null) < 1e-14);
            assert!(orthonormal_cols(&f.v_null) < 1e-14);
            assert_eq!(f.u_range.cols() + f.u_null.cols(), m.rows());
            assert_eq!(f.v_range.cols() + f.v_null.cols(), m.cols());
            assert!((&m * &f.v_null).max_abs() < 1e-13);
            assert!((&f.u_null.transpose() * &m).max_abs() < 1e-13);
        }
    }

    #[test]
    fn identity_rank() {
        assert_eq!(rank(&Mat::<f64>::identity(5), TolPolicy::default()).unwrap(), 5);
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = Mat::<f64>::identity(2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(
            svd_with_tol(&a, TolPolicy::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn projection_edge_cases() {
        let a = Mat::from_rows(&[vec![1.0, -2.0, 0.5], vec![3.0, 0.0, 1.0]]).unwrap();
        let p = proj_row(&a, &Mat::identity(3), TolPolicy::default()).unwrap();
        assert!(p.max_abs_diff(&a) < 1e-14);
        let z = proj_row(&a, &Mat::zeros(2, 3), TolPolicy::default()).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(matches!(
            proj_row(&a, &Mat::identity(2), TolPolicy::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn f32_works() {
        let a: Mat<f32> = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let f = svd_with_tol(&a, TolPolicy::default()).unwrap();
        assert_eq!(f.rank, 1);
        assert!((f.singular_values[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let p = pinv(&a, TolPolicy::default()).unwrap();
        // A A⁺ A = A
        assert!((&(&a * &p) * &a).max_abs_diff(&a) < 1e-13);
        assert!((&(&p * &a) * &p).max_abs_diff(&p) < 1e-13);
    }
}
