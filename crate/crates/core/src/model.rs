//! Structural VAR `A0 y_t = A1 y_{t-1} + ... + Ap y_{t-p} + B e_t` with
//! `q <= n` shocks.
//!
//! Vectorization conventions (0-based):
//!
//! * `vec((A0, B))` has length `n² + nq`; `A0[i, j]` sits at `j*n + i` and
//!   `B[i, j]` at `n² + j*n + i`.
//! * `vec(A₊ᵀ)` with `A₊ = (A1, ..., Ap)` (`n x np`) has length `n²p`;
//!   `Ak[i, j]` sits at `i*np + (k-1)*n + j`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::eigen::eigenvalues;
use crate::matrixcore::lu::{self, Lu};
use crate::matrixcore::{kernel_left, rank, Mat, TolPolicy};
use crate::scalar::Real;

/// Validated structural VAR. Deserialization goes through the model file
/// format so that every instance passes [`SvarModel::new`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct SvarModel<T: Real> {
    n: usize,
    p: usize,
    q: usize,
    a0: Mat<T>,
    a_plus: Vec<Mat<T>>,
    b: Mat<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub spectral_radius: f64,
    pub margin: f64,
    /// Companion eigenvalue moduli, descending.
    pub moduli: Vec<f64>,
}

impl<T: Real> SvarModel<T> {
    /// Validates shapes, finiteness, invertibility of `A0` and full column
    /// rank of `B`. Stability is checked separately by [`Self::is_stable`].
    pub fn new(a0: Mat<T>, a_plus: Vec<Mat<T>>, b: Mat<T>) -> Result<Self> {
        let n = a0.rows();
        if n == 0 || !a0.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "A0 must be square and non-empty, got {}x{}",
                a0.rows(),
                a0.cols()
            )));
        }
        if a_plus.is_empty() {
            return Err(Error::InvalidInput("at least one lag matrix is required (p >= 1)".into()));
        }
        for (k, a) in a_plus.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "A{} is {}x{}, expected {n}x{n}",
                    k + 1,
                    a.rows(),
                    a.cols()
                )));
            }
            a.ensure_finite(&format!("A{}", k + 1))?;
        }
        if b.rows() != n || b.cols() == 0 || b.cols() > n {
            return Err(Error::ShapeMismatch(format!(
                "B is {}x{}, expected {n}xq with 1 <= q <= {n}",
                b.rows(),
                b.cols()
            )));
        }
        a0.ensure_finite("A0")?;
        b.ensure_finite("B")?;
        let q = b.cols();
        match Lu::new(&a0) {
            Ok(_) => {}
            Err(Error::Singular(_)) => return Err(Error::SingularA0),
            Err(e) => return Err(e),
        }
        let rb = rank(&b, TolPolicy::default())?;
        if rb < q {
            return Err(Error::RankDeficientB { rank: rb, q });
        }
        Ok(SvarModel {
            n,
            p: a_plus.len(),
            q,
            a0,
            a_plus,
            b,
        })
    }

    /// Reduced-form model with `A0 = I`.
    pub fn reduced(a_plus: Vec<Mat<T>>, b: Mat<T>) -> Result<Self> {
        Self::new(Mat::identity(b.rows()), a_plus, b)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn a0(&self) -> &Mat<T> {
        &self.a0
    }

    pub fn a_plus(&self) -> &[Mat<T>] {
        &self.a_plus
    }

    /// Lag matrix `Ak`, 1-based.
    pub fn a(&self, k: usize) -> &Mat<T> {
        &self.a_plus[k - 1]
    }

    pub fn b(&self) -> &Mat<T> {
        &self.b
    }

    pub fn is_singular(&self) -> bool {
        self.q < self.n
    }

    pub fn a0_is_identity(&self) -> bool {
        self.a0 == Mat::identity(self.n)
    }

    pub fn a0_inv(&self) -> Mat<T> {
        lu::inverse(&self.a0).expect("A0 validated as invertible")
    }

    /// `A0⁻¹ B`, the impact matrix of the reduced form.
    pub fn impact(&self) -> Mat<T> {
        &self.a0_inv() * &self.b
    }

    /// `Ā_k = A0⁻¹ A_k` for `k = 1..p`.
    pub fn reduced_lags(&self) -> Vec<Mat<T>> {
        let inv = self.a0_inv();
        self.a_plus.iter().map(|a| &inv * a).collect()
    }

    /// `Ā₊ = (Ā1, ..., Āp)` as an `n x np` matrix.
    pub fn reduced_a_plus(&self) -> Mat<T> {
        let lags = self.reduced_lags();
        Mat::hstack(&lags.iter().collect::<Vec<_>>()).expect("equal row counts")
    }

    /// `A₊ = (A1, ..., Ap)` as an `n x np` matrix.
    pub fn a_plus_block(&self) -> Mat<T> {
        Mat::hstack(&self.a_plus.iter().collect::<Vec<_>>()).expect("equal row counts")
    }

    /// `vec(A₊ᵀ)`.
    pub fn vec_a_plus_t(&self) -> Vec<T> {
        self.a_plus_block().transpose().into_vec()
    }

    /// `vec((A0, B))`.
    pub fn vec_a0_b(&self) -> Vec<T> {
        let mut v = self.a0.as_vec().to_vec();
        v.extend_from_slice(self.b.as_vec());
        v
    }

    /// Companion matrix of the reduced form (`np x np`).
    pub fn companion(&self) -> Mat<T> {
        companion_of(&self.reduced_a_plus())
    }

    pub fn is_stable(&self, margin: f64) -> Result<StabilityReport> {
        let ev = eigenvalues(&self.companion())?;
        let moduli: Vec<f64> = ev.iter().map(|z| z.norm().to_f64_lossy()).collect();
        let rho = moduli.first().copied().unwrap_or(0.0);
        Ok(StabilityReport {
            stable: rho < 1.0 - margin,
            spectral_radius: rho,
            margin,
            moduli,
        })
    }

    /// Fails with `Unstable` unless the model is stable at `margin`.
    pub fn ensure_stable(&self, margin: f64) -> Result<StabilityReport> {
        let rep = self.is_stable(margin)?;
        if rep.stable {
            Ok(rep)
        } else {
            Err(Error::Unstable {
                spectral_radius: rep.spectral_radius,
            })
        }
    }

    /// Innovation covariance `A0⁻¹ B Bᵀ A0⁻ᵀ`.
    pub fn sigma_u(&self) -> Mat<T> {
        let k = self.impact();
        (&k * &k.transpose()).symmetrized()
    }

    /// Orthonormal rows spanning the left kernel of `Σ_u`, computed from
    /// `A0⁻¹B` (same left kernel, better conditioned).
    pub fn innovation_left_kernel(&self, policy: TolPolicy<T>) -> Result<Mat<T>> {
        kernel_left(&self.impact(), policy)
    }

    /// `a(z) = A0 - A1 z - ... - Ap z^p`.
    pub fn lag_polynomial_at(&self, z: Complex<T>) -> Mat<Complex<T>> {
        let c = |x: &T| Complex::new(*x, T::zero());
        let mut acc = self.a0.map(c);
        let mut zk = Complex::new(T::one(), T::zero());
        for a in &self.a_plus {
            zk = zk * z;
            let term = a.map(c).scale(&zk);
            acc = &acc - &term;
        }
        acc
    }

    /// `k(z) = a(z)⁻¹ B`.
    pub fn transfer_function_at(&self, z: Complex<T>) -> Result<Mat<Complex<T>>> {
        let az = self.lag_polynomial_at(z);
        let b = self.b.map(|x| Complex::new(*x, T::zero()));
        match lu::solve(&az, &b) {
            Ok(k) => Ok(k),
            Err(Error::Singular(_)) => Err(Error::PoleAtZ(format!("{z}"))),
            Err(e) => Err(e),
        }
    }

    /// Premultiplies `A0`, every `Ak` and `B` by `t`.
    pub fn premultiplied(&self, t: &Mat<T>) -> Result<Self> {
        Self::new(
            t.matmul(&self.a0)?,
            self.a_plus
                .iter()
                .map(|a| t.matmul(a))
                .collect::<Result<Vec<_>>>()?,
            t.matmul(&self.b)?,
        )
    }

    /// Same `A0` and `B`, different lag matrices.
    pub fn with_lags(&self, a_plus: Vec<Mat<T>>) -> Result<Self> {
        Self::new(self.a0.clone(), a_plus, self.b.clone())
    }

    pub fn to_f64(&self) -> SvarModel<f64> {
        SvarModel {
            n: self.n,
            p: self.p,
            q: self.q,
            a0: self.a0.to_f64(),
            a_plus: self.a_plus.iter().map(Mat::to_f64).collect(),
            b: self.b.to_f64(),
        }
    }
}

/// Companion matrix of `(Ā1, ..., Āp)` given as one `n x np` block row.
pub fn companion_of<T: Real>(a_bar: &Mat<T>) -> Mat<T> {
    let n = a_bar.rows();
    let np = a_bar.cols();
    let mut f = Mat::zeros(np, np);
    f.set_block(0, 0, a_bar);
    for i in n..np {
        f[(i, i - n)] = T::one();
    }
    f
}

/// Options for [`random_stable_svar`].
#[derive(Clone, Debug)]
pub struct RandomModelSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Spectral radius the companion matrix is rescaled to.
    pub radius: f64,
    /// Draw `A0 = I + 0.3 N` instead of `A0 = I`.
    pub random_a0: bool,
}

/// Gaussian draw rescaled so the companion spectral radius equals
/// `spec.radius`; `Ak` is multiplied by `s^k`, which scales every root by `s`.
pub fn random_stable_svar<T: Real, R: Rng + ?Sized>(spec: &RandomModelSpec, rng: &mut R) -> Result<SvarModel<T>> {
    let (n, p, q) = (spec.n, spec.p, spec.q);
    if n == 0 || p == 0 || q == 0 || q > n {
        return Err(Error::InvalidInput(format!("need n >= 1, p >= 1, 1 <= q <= n; got n={n}, p={p}, q={q}")));
    }
    if !(spec.radius > 0.0 && spec.radius < 1.0) {
        return Err(Error::InvalidInput("radius must lie in (0, 1)".into()));
    }
    let mut draw = |r: usize, c: usize, s: f64| -> Mat<T> {
        Mat::from_fn(r, c, |_, _| {
            let x: f64 = rng.sample(StandardNormal);
            T::lit(s * x)
        })
    };
    for _ in 0..100 {
        let a0 = if spec.random_a0 {
            let pert = draw(n, n, 0.3);
            &Mat::identity(n) + &pert
        } else {
            Mat::identity(n)
        };
        let lags: Vec<Mat<T>> = (0..p).map(|_| draw(n, n, 1.0 / (n as f64).sqrt())).collect();
        let b = draw(n, q, 1.0);
        let Ok(m) = SvarModel::new(a0, lags, b) else {
            continue;
        };
        let rho = m.is_stable(0.0)?.spectral_radius;
        if rho < 1e-6 {
            continue;
        }
        let s = T::lit(spec.radius / rho);
        let mut sk = T::one();
        let scaled: Vec<Mat<T>> = m
            .a_plus()
            .iter()
            .map(|a| {
                sk *= s;
                a.scale(&sk)
            })
            .collect();
        let out = m.with_lags(scaled)?;
        if out.is_stable(1e-8)?.stable {
            return Ok(out);
        }
    }
    Err(Error::ConstructionFailed {
        attempts: 100,
        reason: "could not draw a well-conditioned stable model".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m1(a: f64) -> SvarModel<f64> {
        SvarModel::reduced(vec![Mat::from_rows(&[vec![a]]).unwrap()], Mat::identity(1)).unwrap()
    }

    #[test]
    fn scalar_stability() {
        let rep = m1(0.5).is_stable(1e-8).unwrap();
        assert!(rep.stable);
        assert!((rep.moduli[0] - 0.5).abs() < 1e-15);
        assert!(!m1(1.0).is_stable(1e-8).unwrap().stable);
        assert!(matches!(m1(1.0).ensure_stable(1e-8), Err(Error::Unstable { .. })));
    }

    #[test]
    fn validation_errors() {
        let z = Mat::<f64>::zeros(2, 2);
        assert_eq!(
            SvarModel::new(z.clone(), vec![z.clone()], Mat::identity(2)).unwrap_err(),
            Error::SingularA0
        );
        let b = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            SvarModel::new(Mat::identity(2), vec![z.clone()], b),
            Err(Error::RankDeficientB { rank: 1, q: 2 })
        ));
        assert!(matches!(
            SvarModel::<f64>::new(Mat::identity(2), vec![Mat::zeros(2, 3)], Mat::identity(2)),
            Err(Error::ShapeMismatch(_))
        ));
        let mut nan = Mat::identity(2);
        nan[(0, 1)] = f64::NAN;
        assert!(matches!(
            SvarModel::new(Mat::identity(2), vec![nan], Mat::identity(2)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn vec_a_plus_index_map() {
        let n = 2;
        let lags: Vec<Mat<f64>> = (1..=3)
            .map(|k| Mat::from_fn(n, n, |i, j| (100 * k + 10 * i + j) as f64))
            .collect();
        let m = SvarModel::reduced(lags.iter().map(|a| a.scale(&1e-3)).collect(), Mat::identity(2)).unwrap();
        let v = m.vec_a_plus_t();
        let np = n * 3;
        for k in 1..=3 {
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(v[i * np + (k - 1) * n + j], m.a(k)[(i, j)]);
                }
            }
        }
        let ab = m.vec_a0_b();
        assert_eq!(ab.len(), n * n + n * 2);
        assert_eq!(ab[n * n + n + 1], m.b()[(1, 1)]);
    }

    #[test]
    fn sigma_u_and_left_kernel() {
        let (kappa, tau) = (0.5, 0.75);
        let b = Mat::from_rows(&[vec![1.0, 0.0], vec![-kappa * tau, 1.0], vec![-tau, 0.0]]).unwrap();
        let m = SvarModel::reduced(vec![Mat::zeros(3, 3)], b.clone()).unwrap();
        let s = m.sigma_u();
        assert_eq!(rank(&s, TolPolicy::default()).unwrap(), 2);
        let l = m.innovation_left_kernel(TolPolicy::default()).unwrap();
        assert_eq!(l.shape(), (1, 3));
        let norm = (1.0f64 + tau * tau).sqrt();
        assert!((l[(0, 0)] - tau / norm).abs() < 1e-12);
        assert!(l[(0, 1)].abs() < 1e-12);
        assert!((l[(0, 2)] - 1.0 / norm).abs() < 1e-12);
        assert!((&l * &s).max_abs() < 1e-12);
    }

    #[test]
    fn transfer_function_at_zero_and_pole() {
        let m = m1(0.5);
        let k0 = m.transfer_function_at(Complex::new(0.0, 0.0)).unwrap();
        assert!((k0[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(matches!(
            m.transfer_function_at(Complex::new(2.0, 0.0)),
            Err(Error::PoleAtZ(_))
        ));
    }

    #[test]
    fn random_model_has_requested_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = RandomModelSpec {
            n: 2,
            p: 2,
            q: 1,
            radius: 0.9,
            random_a0: true,
        };
        let m: SvarModel<f64> = random_stable_svar(&spec, &mut rng).unwrap();
        let rep = m.is_stable(1e-8).unwrap();
        assert!(rep.stable);
        assert!((rep.spectral_radius - 0.9).abs() < 1e-9);
    }
}
