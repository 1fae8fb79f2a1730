//! Second moments of a stationary VAR: population autocovariances, the
//! block-Toeplitz Yule-Walker system, rank profiles, structure detection,
//! and simulated sample paths.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::lu::Lu;
use crate::matrixcore::svd::refined_solve;
use crate::matrixcore::{kernel_left, pinv, rank, Mat, TolPolicy};
use crate::model::{companion_of, SvarModel};
use crate::scalar::Real;

/// `γ(0), ..., γ(h)` with `γ(s) = E y_t y_{t-s}ᵀ`; negative lags are
/// implied by `γ(-s) = γ(s)ᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct CovarianceSequence<T: Real> {
    n: usize,
    gammas: Vec<Mat<T>>,
}

impl<T: Real> CovarianceSequence<T> {
    /// Checks shapes, finiteness and symmetry of `γ(0)` (relative 1e-8);
    /// `γ(0)` is stored symmetrized.
    pub fn new(mut gammas: Vec<Mat<T>>) -> Result<Self> {
        let Some(g0) = gammas.first() else {
            return Err(Error::InvalidInput("covariance sequence needs at least gamma(0)".into()));
        };
        let n = g0.rows();
        if n == 0 {
            return Err(Error::InvalidInput("gamma(0) is empty".into()));
        }
        for (s, g) in gammas.iter().enumerate() {
            if g.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "gamma({s}) is {}x{}, expected {n}x{n}",
                    g.rows(),
                    g.cols()
                )));
            }
            g.ensure_finite(&format!("gamma({s})"))?;
        }
        let asym = g0.max_abs_diff(&g0.transpose());
        if asym > T::lit(1e-8) * g0.max_abs().max(T::one()) {
            return Err(Error::InvalidInput(format!(
                "gamma(0) is not symmetric (max asymmetry {asym:e})"
            )));
        }
        gammas[0] = gammas[0].symmetrized();
        Ok(CovarianceSequence { n, gammas })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn gammas(&self) -> &[Mat<T>] {
        &self.gammas
    }

    /// `γ(s)` for any `|s| <= h`.
    pub fn gamma(&self, s: isize) -> Mat<T> {
        let k = s.unsigned_abs();
        if s >= 0 {
            self.gammas[k].clone()
        } else {
            self.gammas[k].transpose()
        }
    }

    pub fn truncated(&self, h: usize) -> Result<Self> {
        if h > self.horizon() {
            return Err(Error::HorizonTooShort {
                have: self.horizon(),
                need: h,
            });
        }
        Ok(CovarianceSequence {
            n: self.n,
            gammas: self.gammas[..=h].to_vec(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LyapunovMethod {
    /// Dense solve of `(I - F⊗F) vec(X) = vec(Q)`.
    Dense,
    /// Squaring iteration `X ← X + A X Aᵀ, A ← A²`.
    Doubling,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutocovOptions {
    pub method: LyapunovMethod,
    /// Largest companion dimension `np` accepted by the dense solver.
    pub dense_cap: usize,
    pub stability_margin: f64,
}

impl Default for AutocovOptions {
    fn default() -> Self {
        AutocovOptions {
            method: LyapunovMethod::Dense,
            dense_cap: 60,
            stability_margin: 1e-8,
        }
    }
}

/// Population autocovariances `γ(0..h)` of the stationary solution.
pub fn autocovariances<T: Real>(m: &SvarModel<T>, h: usize, opts: AutocovOptions) -> Result<CovarianceSequence<T>> {
    m.ensure_stable(opts.stability_margin)?;
    autocovariances_reduced(&m.reduced_a_plus(), &m.sigma_u(), h, opts)
}

/// Autocovariances of `y_t = Ā₊ (y_{t-1}, ..., y_{t-p}) + u_t` with
/// `E u_t u_tᵀ = sigma_u`. `a_bar` is the `n x np` block row.
pub fn autocovariances_reduced<T: Real>(
    a_bar: &Mat<T>,
    sigma_u: &Mat<T>,
    h: usize,
    opts: AutocovOptions,
) -> Result<CovarianceSequence<T>> {
    let n = a_bar.rows();
    if n == 0 || a_bar.cols() % n != 0 || a_bar.cols() == 0 || sigma_u.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "coefficients {}x{} and sigma_u {}x{} are inconsistent",
            a_bar.rows(),
            a_bar.cols(),
            sigma_u.rows(),
            sigma_u.cols()
        )));
    }
    let p = a_bar.cols() / n;
    let np = n * p;
    let f = companion_of(a_bar);
    let rho = crate::matrixcore::eigen::spectral_radius(&f)?.to_f64_lossy();
    if rho >= 1.0 - opts.stability_margin {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    let mut q = Mat::zeros(np, np);
    q.set_block(0, 0, sigma_u);
    let x = match opts.method {
        LyapunovMethod::Dense => {
            if np > opts.dense_cap {
                return Err(Error::DimensionTooLarge {
                    dim: np,
                    cap: opts.dense_cap,
                });
            }
            lyapunov_dense(&f, &q)?
        }
        LyapunovMethod::Doubling => lyapunov_doubling(&f, &q)?,
    };
    let resid = lyapunov_residual(&f, &q, &x);
    let scale = x.max_abs().max(q.max_abs());
    if resid > T::lit(1e-10) * scale {
        return Err(Error::NoConvergence(format!(
            "Lyapunov residual {resid:e} exceeds 1e-10 relative"
        )));
    }
    // State x_t = (y_t, ..., y_{t-p+1}), so block (0, s) of E x_t x_tᵀ is γ(s).
    let mut gammas: Vec<Mat<T>> = (0..p.min(h + 1)).map(|s| x.block(0, s * n, n, n)).collect();
    gammas[0] = gammas[0].symmetrized();
    for s in p..=h {
        let mut g = Mat::zeros(n, n);
        for k in 1..=p {
            let lag = s as isize - k as isize;
            let gl = if lag >= 0 {
                gammas[lag as usize].clone()
            } else {
                gammas[(-lag) as usize].transpose()
            };
            g = &g + &(&a_bar.block(0, (k - 1) * n, n, n) * &gl);
        }
        gammas.push(g);
    }
    CovarianceSequence::new(gammas)
}

fn lyapunov_residual<T: Real>(f: &Mat<T>, q: &Mat<T>, x: &Mat<T>) -> T {
    let fxf = &(f * x) * &f.transpose();
    (&(x - &fxf) - q).max_abs()
}

fn lyapunov_dense<T: Real>(f: &Mat<T>, q: &Mat<T>) -> Result<Mat<T>> {
    let m = f.rows();
    let ff = f.kron(f);
    let sys = &Mat::identity(m * m) - &ff;
    let lu = Lu::new(&sys)?;
    let mut x = lu.solve_vec(q.as_vec());
    // Two rounds of iterative refinement.
    for _ in 0..2 {
        let xm = Mat::from_col_major(m, m, x.clone())?;
        let fxf = &(f * &xm) * &f.transpose();
        let r = &(q - &xm) + &fxf;
        let dx = lu.solve_vec(r.as_vec());
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    Ok(Mat::from_col_major(m, m, x)?.symmetrized())
}

fn lyapunov_doubling<T: Real>(f: &Mat<T>, q: &Mat<T>) -> Result<Mat<T>> {
    let mut x = q.clone();
    let mut a = f.clone();
    for _ in 0..200 {
        let ax = &(&a * &x) * &a.transpose();
        x = &x + &ax;
        a = &a * &a;
        if a.max_abs() <= T::epsilon() * T::epsilon() {
            return Ok(x.symmetrized());
        }
        if !a.all_finite() {
            break;
        }
    }
    Err(Error::NoConvergence("Lyapunov doubling".into()))
}

/// `Γ_r`: the `nr x nr` block-Toeplitz matrix with block `(i, j) = γ(j - i)`.
pub fn toeplitz_block<T: Real>(cov: &CovarianceSequence<T>, r: usize) -> Result<Mat<T>> {
    if r > 0 && r - 1 > cov.horizon() {
        return Err(Error::HorizonTooShort {
            have: cov.horizon(),
            need: r - 1,
        });
    }
    let n = cov.n();
    let mut g = Mat::zeros(n * r, n * r);
    for i in 0..r {
        for j in 0..r {
            g.set_block(i * n, j * n, &cov.gamma(j as isize - i as isize));
        }
    }
    Ok(g.symmetrized())
}

/// Yule-Walker system `Ā₊ Γ_p = γ_p` at lag order `p`, with the implied
/// innovation covariance and its left kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ToeplitzSystem<T: Real> {
    pub n: usize,
    pub p: usize,
    pub gamma0: Mat<T>,
    /// `Γ_p` (`np x np`).
    pub gamma_p_block: Mat<T>,
    /// `γ_p = (γ(1), ..., γ(p))` (`n x np`).
    pub gamma_p_row: Mat<T>,
    pub sigma_u: Mat<T>,
    /// Orthonormal rows spanning the left kernel of `Σ_u`.
    pub left_kernel: Mat<T>,
    pub rank_gamma_p: usize,
    /// `np - rank(Γ_p)`.
    pub rank_deficiency: usize,
    pub tol: TolPolicy<T>,
}

impl<T: Real> ToeplitzSystem<T> {
    /// Builds the system from raw blocks, e.g. a hand-written `Γ_p`.
    /// `Σ_u = γ(0) - Ā₊ γ_pᵀ` uses the minimum-norm solution `Ā₊ = γ_p Γ_p⁺`.
    pub fn from_raw(gamma0: Mat<T>, gamma_p_block: Mat<T>, gamma_p_row: Mat<T>, tol: TolPolicy<T>) -> Result<Self> {
        let n = gamma0.rows();
        if n == 0 || !gamma0.is_square() || !gamma_p_block.is_square() || gamma_p_block.rows() % n != 0 {
            return Err(Error::ShapeMismatch(format!(
                "gamma(0) {}x{} and Gamma_p {}x{} are inconsistent",
                gamma0.rows(),
                gamma0.cols(),
                gamma_p_block.rows(),
                gamma_p_block.cols()
            )));
        }
        let np = gamma_p_block.rows();
        if np == 0 {
            return Err(Error::InvalidInput("lag order p must be at least 1".into()));
        }
        if gamma_p_row.shape() != (n, np) {
            return Err(Error::ShapeMismatch(format!(
                "gamma_p is {}x{}, expected {n}x{np}",
                gamma_p_row.rows(),
                gamma_p_row.cols()
            )));
        }
        gamma0.ensure_finite("gamma(0)")?;
        gamma_p_block.ensure_finite("Gamma_p")?;
        gamma_p_row.ensure_finite("gamma_p")?;
        let gamma_p_block = gamma_p_block.symmetrized();
        let gp_pinv = pinv(&gamma_p_block, tol)?;
        let a_bar_t: Vec<T> = (0..n)
            .flat_map(|i| refined_solve(&gamma_p_block, &gp_pinv, &gamma_p_row.row(i)))
            .collect();
        let a_bar = Mat::from_fn(n, np, |i, j| a_bar_t[i * np + j]);
        let sigma_u = (&gamma0 - &(&a_bar * &gamma_p_row.transpose())).symmetrized();
        let left_kernel = kernel_left(&sigma_u, tol)?;
        let rank_gamma_p = rank(&gamma_p_block, tol)?;
        Ok(ToeplitzSystem {
            n,
            p: np / n,
            gamma0: gamma0.symmetrized(),
            gamma_p_block,
            gamma_p_row,
            sigma_u,
            left_kernel,
            rank_gamma_p,
            rank_deficiency: np - rank_gamma_p,
            tol,
        })
    }

    pub fn np(&self) -> usize {
        self.n * self.p
    }

    pub fn is_singular(&self) -> bool {
        self.rank_deficiency > 0
    }
}

/// Assembles the Yule-Walker system of order `p >= 1` from `γ(0..p)`.
pub fn build_toeplitz<T: Real>(cov: &CovarianceSequence<T>, p: usize, tol: TolPolicy<T>) -> Result<ToeplitzSystem<T>> {
    if p == 0 {
        return Err(Error::InvalidInput("lag order p must be at least 1".into()));
    }
    if cov.horizon() < p {
        return Err(Error::HorizonTooShort {
            have: cov.horizon(),
            need: p,
        });
    }
    let gp = toeplitz_block(cov, p)?;
    let row = Mat::hstack(&cov.gammas()[1..=p].iter().collect::<Vec<_>>())?;
    ToeplitzSystem::from_raw(cov.gamma(0), gp, row, tol)
}

/// `(r, rank(Γ_r))` for `r = 0..=r_max`.
pub fn rank_profile<T: Real>(cov: &CovarianceSequence<T>, r_max: usize, tol: TolPolicy<T>) -> Result<Vec<(usize, usize)>> {
    (0..=r_max)
        .map(|r| {
            if r == 0 {
                Ok((0, 0))
            } else {
                Ok((r, rank(&toeplitz_block(cov, r)?, tol)?))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct StructureEstimate<T: Real> {
    pub p_hat: usize,
    pub q_hat: usize,
    /// Orthonormal rows spanning the estimated left kernel of `Σ_u`.
    pub l_hat: Mat<T>,
    pub sigma_u: Mat<T>,
    pub rank_profile: Vec<(usize, usize)>,
    /// `rank(Γ_{r+1}) - rank(Γ_r)` for `r = 0..r_max`.
    pub increments: Vec<usize>,
    pub tol: TolPolicy<T>,
    /// Set when the lag order is not pinned down by the rank profile: either
    /// `q_hat = n`, or `Γ_{p_hat}` is itself singular so several VAR
    /// representations fit.
    pub ambiguous: bool,
    pub notes: Vec<String>,
}

/// Recovers `(p, q, L)` from the ranks of `Γ_1, ..., Γ_{r_max}`.
///
/// `q_hat` is the last rank increment, required to be constant over the
/// last `k_stab` steps; `p_hat` is the smallest `r` from which every
/// increment equals `q_hat`.
pub fn detect_structure<T: Real>(
    cov: &CovarianceSequence<T>,
    r_max: usize,
    tol: TolPolicy<T>,
    k_stab: usize,
) -> Result<StructureEstimate<T>> {
    let k_stab = k_stab.max(1);
    if r_max < k_stab {
        return Err(Error::InvalidInput(format!("r_max = {r_max} must be at least k_stab = {k_stab}")));
    }
    if cov.horizon() < r_max {
        return Err(Error::HorizonTooShort {
            have: cov.horizon(),
            need: r_max,
        });
    }
    let profile = rank_profile(cov, r_max, tol)?;
    let increments: Vec<usize> = profile.windows(2).map(|w| w[1].1.saturating_sub(w[0].1)).collect();
    let q_hat = *increments.last().expect("r_max >= 1");
    if increments[increments.len() - k_stab..].iter().any(|d| *d != q_hat) {
        return Err(Error::NotStabilized { r_max });
    }
    let p_hat = (0..increments.len())
        .find(|&r| increments[r..].iter().all(|d| *d == q_hat))
        .expect("last increment qualifies");
    let n = cov.n();
    let mut notes = Vec::new();
    let mut ambiguous = false;
    if q_hat == n {
        ambiguous = true;
        notes.push("q_hat = n: the rank profile carries no information about the lag order".into());
    }
    if p_hat > 0 && profile[p_hat].1 < n * p_hat {
        ambiguous = true;
        notes.push(format!(
            "Gamma_{p_hat} has rank {} < {}; the Yule-Walker solution at this order is not unique",
            profile[p_hat].1,
            n * p_hat
        ));
    }
    if q_hat == 0 {
        notes.push("zero rank increment: the process is deterministic given its past".into());
    }
    let sigma_u = if p_hat == 0 {
        cov.gamma(0)
    } else {
        build_toeplitz(cov, p_hat, tol)?.sigma_u
    };
    let l_hat = kernel_left(&sigma_u, tol)?;
    if l_hat.rows() != n - q_hat.min(n) {
        notes.push(format!(
            "left kernel of Sigma_u has dimension {} but n - q_hat = {}",
            l_hat.rows(),
            n - q_hat.min(n)
        ));
    }
    Ok(StructureEstimate {
        p_hat,
        q_hat,
        l_hat,
        sigma_u,
        rank_profile: profile,
        increments,
        tol,
        ambiguous,
        notes,
    })
}

/// Simulated observations and the shocks that drove them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct SamplePath<T: Real> {
    /// `T x n`, one row per period.
    pub y: Mat<T>,
    /// `T x q` standard normal shocks.
    pub eps: Mat<T>,
    pub seed: u64,
}

impl<T: Real> SamplePath<T> {
    /// CSV with header `y1,...,yn`, one row per period.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv output: {e}"));
        let header: Vec<String> = (1..=self.y.cols()).map(|i| format!("y{i}")).collect();
        wr.write_record(&header).map_err(io)?;
        for t in 0..self.y.rows() {
            wr.write_record(self.y.row(t).iter().map(|x| format!("{x:e}"))).map_err(io)?;
        }
        wr.flush()
            .map_err(|e| Error::InvalidInput(format!("csv output: {e}")))?;
        Ok(())
    }
}

/// Reads a CSV written by [`SamplePath::write_csv`] (any header, numeric rows).
pub fn read_csv_matrix<R: std::io::Read>(r: R) -> Result<Mat<f64>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", k + 1)))?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", k + 1)))?);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("csv has no data rows".into()));
    }
    Mat::from_rows(&rows)
}

/// Simulates `T` periods after a burn-in of `10 np` periods from a zero
/// initial state, with `ε_t ~ N(0, I_q)`.
pub fn simulate<T: Real>(m: &SvarModel<T>, periods: usize, seed: u64, stability_margin: f64) -> Result<SamplePath<T>> {
    m.ensure_stable(stability_margin)?;
    simulate_reduced(&m.reduced_a_plus(), &m.impact(), periods, seed)
}

/// Simulates `y_t = Ā₊ (y_{t-1}, ..., y_{t-p}) + K ε_t`.
pub fn simulate_reduced<T: Real>(a_bar: &Mat<T>, impact: &Mat<T>, periods: usize, seed: u64) -> Result<SamplePath<T>> {
    let n = a_bar.rows();
    if n == 0 || a_bar.cols() == 0 || a_bar.cols() % n != 0 || impact.rows() != n {
        return Err(Error::ShapeMismatch("simulation inputs are inconsistent".into()));
    }
    if periods == 0 {
        return Err(Error::InvalidInput("number of periods must be at least 1".into()));
    }
    let p = a_bar.cols() / n;
    let q = impact.cols();
    let burn = 10 * n * p;
    let total = burn + periods;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist: Vec<Vec<T>> = vec![vec![T::zero(); n]; p];
    let mut y = Mat::zeros(periods, n);
    let mut eps = Mat::zeros(periods, q);
    for t in 0..total {
        let e: Vec<T> = (0..q)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                T::lit(x)
            })
            .collect();
        let mut yt = vec![T::zero(); n];
        for (i, yi) in yt.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (k, past) in hist.iter().enumerate() {
                for (j, v) in past.iter().enumerate() {
                    acc += a_bar[(i, k * n + j)] * *v;
                }
            }
            for (j, ej) in e.iter().enumerate() {
                acc += impact[(i, j)] * *ej;
            }
            *yi = acc;
        }
        if t >= burn {
            let r = t - burn;
            for i in 0..n {
                y[(r, i)] = yt[i];
            }
            for j in 0..q {
                eps[(r, j)] = e[j];
            }
        }
        hist.pop();
        hist.insert(0, yt);
    }
    Ok(SamplePath { y, eps, seed })
}

/// Biased sample autocovariances `γ̂(s) = T⁻¹ Σ_{t>=s} y_t y_{t-s}ᵀ`
/// (no demeaning; the model has zero mean). `y` is `T x n`.
pub fn sample_autocovariances<T: Real>(y: &Mat<T>, h: usize) -> Result<CovarianceSequence<T>> {
    let (len, n) = y.shape();
    if len <= h {
        return Err(Error::HorizonTooShort { have: len.saturating_sub(1), need: h });
    }
    let tt = T::lit(len as f64);
    let gammas = (0..=h)
        .map(|s| {
            let mut g: Mat<T> = Mat::zeros(n, n);
            for t in s..len {
                for i in 0..n {
                    let yi = y[(t, i)];
                    for j in 0..n {
                        g[(i, j)] += yi * y[(t - s, j)];
                    }
                }
            }
            g.map(|x| *x / tt)
        })
        .collect();
    CovarianceSequence::new(gammas)
}
