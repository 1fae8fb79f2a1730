//! Eigenvalues of general real matrices: balancing, Householder reduction
//! to Hessenberg form, then Francis double-shift QR.

use num_complex::Complex;

use super::svd::{kernel_right, TolPolicy};
use super::Mat;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_QR_ITERS: usize = 60;

fn balance<T: Real>(a: &mut Mat<T>) {
    let n = a.rows();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let ginv = T::one() / f;
                    for j in 0..n {
                        a[(i, j)] *= ginv;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg<T: Real>(a: &mut Mat<T>) {
    let n = a.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<T> = ((k + 1)..n).map(|i| a[(i, k)]).collect();
        let norm = v.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if v[0] > T::zero() { -norm } else { norm };
        v[0] -= alpha;
        let vn = v.iter().fold(T::zero(), |s, x| s + *x * *x).sqrt();
        if vn == T::zero() {
            continue;
        }
        for x in v.iter_mut() {
            *x /= vn;
        }
        // A <- H A
        for j in 0..n {
            let d = v
                .iter()
                .enumerate()
                .fold(T::zero(), |s, (t, vi)| s + *vi * a[(k + 1 + t, j)]);
            for (t, vi) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= T::lit(2.0) * d * *vi;
            }
        }
        // A <- A H
        for i in 0..n {
            let d = v
                .iter()
                .enumerate()
                .fold(T::zero(), |s, (t, vi)| s + *vi * a[(i, k + 1 + t)]);
            for (t, vi) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= T::lit(2.0) * d * *vi;
            }
        }
        for i in (k + 2)..n {
            a[(i, k)] = T::zero();
        }
    }
}

#[inline]
fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed in the process).
fn hqr<T: Real>(a: &mut Mat<T>) -> Result<Vec<Complex<T>>> {
    let n = a.rows();
    let eps = T::epsilon();
    let mut wr = vec![T::zero(); n];
    let mut wi = vec![T::zero(); n];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = T::zero();
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = T::zero();
                nn -= 1;
            } else {
                let mut y = a[(nu - 1, nu - 1)];
                let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
                if l == nu - 1 {
                    let p = T::lit(0.5) * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= T::zero() {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != T::zero() {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = T::zero();
                        wi[nu] = T::zero();
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_ITERS {
                        return Err(Error::NoConvergence("Hessenberg QR".into()));
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for i in 0..=nu {
                            a[(i, i)] -= x;
                        }
                        let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nu - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a[(m, m)];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                        q = a[(m + 1, m + 1)] - z - rr - ss;
                        r = a[(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..(nu - 1) {
                        a[(i + 2, i)] = T::zero();
                        if i != m {
                            a[(i + 2, i - 1)] = T::zero();
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = a[(k, k - 1)];
                            q = a[(k + 1, k - 1)];
                            r = T::zero();
                            if k + 1 != nu {
                                r = a[(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != T::zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != T::zero() {
                            if k == m {
                                if l != m {
                                    a[(k, k - 1)] = -a[(k, k - 1)];
                                }
                            } else {
                                a[(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = a[(k, j)] + q * a[(k + 1, j)];
                                if k + 1 != nu {
                                    p += r * a[(k + 2, j)];
                                    a[(k + 2, j)] -= p * z;
                                }
                                a[(k + 1, j)] -= p * y;
                                a[(k, j)] -= p * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[(i, k)] + y * a[(i, k + 1)];
                                if k + 1 != nu {
                                    p += z * a[(i, k + 2)];
                                    a[(i, k + 2)] -= p * r;
                                }
                                a[(i, k + 1)] -= p * q;
                                a[(i, k)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 0 || l as isize >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex::new(re, im))
        .collect())
}

/// Eigenvalues of a square real matrix, sorted by decreasing modulus.
pub fn eigenvalues<T: Real>(a: &Mat<T>) -> Result<Vec<Complex<T>>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    a.ensure_finite("eigenvalue input")?;
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut ev = hqr(&mut h)?;
    ev.sort_by(|x, y| {
        y.norm()
            .partial_cmp(&x.norm())
            .expect("finite eigenvalues")
            .then(y.re.partial_cmp(&x.re).expect("finite"))
            .then(y.im.partial_cmp(&x.im).expect("finite"))
    });
    Ok(ev)
}

pub fn spectral_radius<T: Real>(a: &Mat<T>) -> Result<T> {
    Ok(eigenvalues(a)?
        .first()
        .map_or_else(T::zero, |z| z.norm()))
}

/// Real basis of the right eigenspace of `lambda`; for a complex `lambda`
/// the real invariant subspace of the conjugate pair.
pub fn real_eigenspace<T: Real>(a: &Mat<T>, lambda: Complex<T>, policy: TolPolicy<T>) -> Result<Mat<T>> {
    let n = a.rows();
    let shifted = if lambda.im == T::zero() {
        a - &Mat::identity(n).scale(&lambda.re)
    } else {
        // (A - λI)(A - λ̄I) = A² - 2Re(λ)A + |λ|²I
        let a2 = a * a;
        let lin = a.scale(&(T::lit(2.0) * lambda.re));
        &(&a2 - &lin) + &Mat::identity(n).scale(&lambda.norm_sqr())
    };
    kernel_right(&shifted, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(z: Complex<f64>, re: f64, im: f64) -> bool {
        (z.re - re).abs() < 1e-10 && (z.im - im).abs() < 1e-10
    }

    #[test]
    fn triangular_and_rotation() {
        let a = Mat::from_rows(&[vec![2.0, 1.0, 3.0], vec![0.0, -1.0, 4.0], vec![0.0, 0.0, 0.5]])
            .unwrap();
        let ev = eigenvalues(&a).unwrap();
        assert!(close(ev[0], 2.0, 0.0));
        assert!(close(ev[1], -1.0, 0.0));
        assert!(close(ev[2], 0.5, 0.0));

        let r = Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let ev = eigenvalues(&r).unwrap();
        assert!(close(ev[0], 0.0, 1.0) || close(ev[0], 0.0, -1.0));
        assert!((ev[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn companion_of_known_polynomial() {
        // z^3 - 6z^2 + 11z - 6 = (z-1)(z-2)(z-3)
        let c = Mat::from_rows(&[vec![6.0, -11.0, 6.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]])
            .unwrap();
        let ev = eigenvalues(&c).unwrap();
        for (z, want) in ev.iter().zip([3.0, 2.0, 1.0]) {
            assert!(close(*z, want, 0.0), "{z} vs {want}");
        }
    }

    #[test]
    fn trace_and_determinant_match() {
        let a = Mat::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * (i as f64));
        let ev = eigenvalues(&a).unwrap();
        let tr: f64 = (0..6).map(|i| a[(i, i)]).sum();
        let sum: Complex<f64> = ev.iter().sum();
        assert!((sum.re - tr).abs() < 1e-9 && sum.im.abs() < 1e-9);
        let prod: Complex<f64> = ev.iter().product();
        let det = crate::matrixcore::lu::det(&a).unwrap();
        assert!((prod.re - det).abs() < 1e-8 * det.abs().max(1.0));
    }

    #[test]
    fn eigenspace_of_complex_pair() {
        let a: Mat<f64> = Mat::from_rows(&[vec![0.0, -2.0, 0.0], vec![2.0, 0.0, 0.0], vec![0.0, 0.0, 3.0]])
            .unwrap();
        let basis = real_eigenspace(&a, Complex::new(0.0, 2.0), TolPolicy::Relative(1e-10)).unwrap();
        assert_eq!(basis.cols(), 2);
        assert!(basis.row(2).iter().all(|x: &f64| x.abs() < 1e-12));
    }
}
