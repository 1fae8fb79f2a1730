//! Exact-shape 0/1 constructions from matrix calculus.
//!
//! Index conventions (0-based): `vec` is column-major, so entry `(i, j)` of
//! an `n x m` matrix sits at `j * n + i`. `vech` stacks the lower triangle
//! column by column, so `(i, j)` with `i >= j` sits at
//! `j * n - j * (j - 1) / 2 + (i - j)`.

use super::Mat;
use crate::scalar::Field;

/// Position of `(i, j)`, `i >= j`, inside `vech` of an `n x n` matrix.
pub fn vech_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < n);
    // Columns before `j` hold n + (n-1) + ... + (n-j+1) entries.
    j * n - j * j.saturating_sub(1) / 2 + (i - j)
}

/// Lower-triangular stacking of a square matrix.
pub fn vech<T: Field>(a: &Mat<T>) -> Vec<T> {
    assert!(a.is_square(), "vech needs a square matrix");
    let n = a.rows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            out.push(a[(i, j)].clone());
        }
    }
    out
}

/// Duplication matrix `D_n` (`n² x n(n+1)/2`) with `D_n vech(A) = vec(A)`
/// for symmetric `A`.
pub fn duplication<T: Field>(n: usize) -> Mat<T> {
    let mut d = Mat::zeros(n * n, n * (n + 1) / 2);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            d[(j * n + i, k)] = T::one();
            d[(i * n + j, k)] = T::one();
            k += 1;
        }
    }
    d
}

/// Moore-Penrose inverse `D_n⁺ = (D_nᵀD_n)⁻¹D_nᵀ`, with `D_n⁺ vec(A) = vech(A)`
/// for symmetric `A`. Off-diagonal rows average the two mirrored entries.
pub fn duplication_pinv<T: Field>(n: usize) -> Mat<T> {
    let half = T::one() / (T::one() + T::one());
    let mut d = Mat::zeros(n * (n + 1) / 2, n * n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                d[(k, j * n + i)] = T::one();
            } else {
                d[(k, j * n + i)] = half.clone();
                d[(k, i * n + j)] = half.clone();
            }
            k += 1;
        }
    }
    d
}

/// Commutation matrix `K_nm` (`nm x nm`): `K_nm vec(B) = vec(Bᵀ)` for `B`
/// of shape `n x m`.
pub fn commutation<T: Field>(n: usize, m: usize) -> Mat<T> {
    let mut k = Mat::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..m {
            // B[i, j] is vec(B)[j*n + i] and vec(Bᵀ)[i*m + j].
            k[(i * m + j, j * n + i)] = T::one();
        }
    }
    k
}
