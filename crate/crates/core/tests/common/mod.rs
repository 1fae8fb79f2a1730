//! Exact rational linear algebra used as an independent oracle, plus
//! shared model generators.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singular_svar::model::{random_stable_svar, RandomModelSpec};
use singular_svar::SvarModel;

pub type Q = BigRational;

pub fn q(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

/// Row echelon form in place; returns the pivot columns.
pub fn echelon(rows: &mut [Vec<Q>]) -> Vec<usize> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let Some(k) = (r..m).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, k);
        let inv = Q::one() / rows[r][c].clone();
        for j in c..n {
            rows[r][j] = rows[r][j].clone() * inv.clone();
        }
        for i in 0..m {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in c..n {
                    let v = rows[r][j].clone() * f.clone();
                    rows[i][j] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_exact(rows: &[Vec<Q>]) -> usize {
    let mut a = rows.to_vec();
    echelon(&mut a).len()
}

/// Basis of `{x : A x = 0}` as vectors.
pub fn kernel_exact(rows: &[Vec<Q>], n: usize) -> Vec<Vec<Q>> {
    let mut a = rows.to_vec();
    let piv = echelon(&mut a);
    let free: Vec<usize> = (0..n).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); n];
            x[f] = Q::one();
            for (r, &pc) in piv.iter().enumerate() {
                x[pc] = -a[r][f].clone();
            }
            x
        })
        .collect()
}

pub fn transpose(rows: &[Vec<Q>]) -> Vec<Vec<Q>> {
    if rows.is_empty() {
        return vec![];
    }
    (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn matmul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let k = b.len();
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| (0..k).fold(Q::zero(), |acc, t| acc + row[t].clone() * b[t][j].clone()))
                .collect()
        })
        .collect()
}

pub fn kron(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    (0..ar * br)
        .map(|i| (0..ac * bc).map(|j| a[i / br][j / bc].clone() * b[i % br][j % bc].clone()).collect())
        .collect()
}

pub fn identity(n: usize) -> Vec<Vec<Q>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect()
}

pub fn to_f64(x: &Q) -> f64 {
    let n: f64 = x.numer().to_string().parse().unwrap();
    let d: f64 = x.denom().to_string().parse().unwrap();
    n / d
}

pub fn max_abs(x: &[Q]) -> Q {
    x.iter().map(|v| v.abs()).fold(Q::zero(), |a, b| if b > a { b } else { a })
}

/// Dimensions `n ∈ [2, 4]`, `q ∈ [1, n-1]`, `p ∈ [1, 3]`.
pub fn random_dims(rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    let n = rng.random_range(2..=4);
    let q = rng.random_range(1..n);
    let p = rng.random_range(1..=3);
    (n, q, p)
}

pub fn random_singular_model(seed: u64) -> SvarModel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, q, p) = random_dims(&mut rng);
    let radius = rng.random_range(0.3..0.9);
    let spec = RandomModelSpec {
        n,
        p,
        q,
        radius,
        random_a0: false,
    };
    random_stable_svar(&spec, &mut rng).expect("random model")
}
