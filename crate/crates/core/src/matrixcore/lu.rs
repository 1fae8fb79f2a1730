//! LU with partial pivoting, generic over real and complex scalars.

use num_traits::{Float, Zero};

use super::Mat;
use crate::error::{Error, Result};
use crate::scalar::{Modulus, Real};

pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    sign_flips: usize,
}

impl<T: Modulus> Lu<T> {
    /// Factorizes a square matrix. Fails when a pivot is exactly zero or
    /// smaller than `n * eps` times the largest entry.
    pub fn new(a: &Mat<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.as_vec().iter().all(Modulus::is_finite_value) {
            return Err(Error::NonFinite("LU input".into()));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_flips = 0;
        let scale = a
            .as_vec()
            .iter()
            .fold(T::Real::zero(), |m, x| m.max(x.modulus()));
        let tiny = scale * T::Real::epsilon() * T::Real::lit(n.max(1) as f64);
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].modulus()))
                .fold((k, T::Real::zero()), |b, c| if c.1 > b.1 { c } else { b });
            if pmax <= tiny || pmax == T::Real::zero() {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if piv != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = t;
                }
                perm.swap(k, piv);
                sign_flips += 1;
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Ok(Lu {
            lu,
            perm,
            sign_flips,
        })
    }

    pub fn det(&self) -> T {
        let mut d = T::one();
        for i in 0..self.lu.rows() {
            d = d * self.lu[(i, i)];
        }
        if self.sign_flips % 2 == 1 {
            -d
        } else {
            d
        }
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] = x[i] - self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] = x[i] - self.lu[(i, k)] * x[k];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &Mat<T>) -> Result<Mat<T>> {
        if b.rows() != self.lu.rows() {
            return Err(Error::ShapeMismatch("LU solve: row count differs".into()));
        }
        let cols: Vec<T> = (0..b.cols()).flat_map(|j| self.solve_vec(b.col(j))).collect();
        Mat::from_col_major(b.rows(), b.cols(), cols)
    }

    pub fn inverse(&self) -> Mat<T> {
        self.solve(&Mat::identity(self.lu.rows()))
            .expect("identity has matching rows")
    }
}

pub fn solve<T: Modulus>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    Lu::new(a)?.solve(b)
}

pub fn inverse<T: Modulus>(a: &Mat<T>) -> Result<Mat<T>> {
    Ok(Lu::new(a)?.inverse())
}

/// Determinant; zero when LU reports a vanishing pivot.
pub fn det<T: Real + Modulus>(a: &Mat<T>) -> Result<T> {
    match Lu::new(a) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::Singular(_)) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_real_system() {
        let a = Mat::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]])
            .unwrap();
        let x = Mat::column_vector(&[1.0, -2.0, 0.5]);
        let b = &a * &x;
        let got = solve(&a, &b).unwrap();
        assert!(got.max_abs_diff(&x) < 1e-14);
        assert!((det(&a).unwrap() - (-5.0)).abs() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::new(&a), Err(Error::Singular(_))));
        assert_eq!(det(&a).unwrap(), 0.0);
    }

    #[test]
    fn complex_inverse() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = Mat::from_rows(&[vec![one, i], vec![-i, one * 2.0]]).unwrap();
        let inv = inverse(&a).unwrap();
        let prod = &a * &inv;
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { one } else { Complex64::new(0.0, 0.0) };
                assert!((prod[(r, c)] - want).norm() < 1e-14);
            }
        }
    }
}
