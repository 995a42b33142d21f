//! Exact integer linear algebra on small dense matrices.
//!
//! Everything here is fraction-free (Bareiss style): intermediate divisions
//! are exact, so no rational normalisation is needed until the very end.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub(crate) type IntMatrix = Vec<Vec<BigInt>>;

pub(crate) fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

/// `a * b` for integer matrices.
pub(crate) fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> IntMatrix {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .filter(|(x, _)| !x.is_zero())
                        .map(|(x, brow)| x * &brow[j])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// `t * g * t^T`.
pub(crate) fn congruence(t: &[Vec<BigInt>], g: &[Vec<BigInt>]) -> IntMatrix {
    let tg = mat_mul(t, g);
    tg.iter()
        .map(|row| t.iter().map(|trow| dot(row, trow)).collect())
        .collect()
}

pub(crate) fn transpose(a: &[Vec<BigInt>]) -> IntMatrix {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Determinant by Bareiss elimination with row pivoting.
pub(crate) fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: IntMatrix = m.to_vec();
    let mut prev = BigInt::one();
    let mut negate = false;
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

/// Adjugate and determinant of a matrix whose leading principal minors are
/// all non-zero (true for every Gram matrix of independent vectors).
///
/// Returns `None` when a leading minor vanishes.
pub(crate) fn adjugate(m: &[Vec<BigInt>]) -> Option<(IntMatrix, BigInt)> {
    let n = m.len();
    let mut a: IntMatrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
            r
        })
        .collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            return None;
        }
        let pivot_row = a[k].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let aik = row[k].clone();
            for (x, pk) in row.iter_mut().zip(&pivot_row) {
                let v = &pivot_row[k] * &*x - &aik * pk;
                *x = v / &prev;
            }
        }
        prev = pivot_row[k].clone();
    }
    let det = if n == 0 { BigInt::one() } else { prev };
    let adj = a.into_iter().map(|row| row[n..].to_vec()).collect();
    Some((adj, det))
}

/// Schur complement of the leading `k x k` block, scaled by its determinant.
///
/// For a Gram matrix this is `d_k` times the Gram matrix of the rows
/// `k..n` projected orthogonally to the span of rows `0..k`, which is
/// always integral. Returns `(d_k, block)`.
pub(crate) fn scaled_schur(g: &[Vec<BigInt>], k: usize) -> Option<(BigInt, IntMatrix)> {
    let n = g.len();
    let mut a: IntMatrix = g.to_vec();
    let mut prev = BigInt::one();
    for p in 0..k {
        if a[p][p].is_zero() {
            return None;
        }
        for i in p + 1..n {
            for j in p + 1..n {
                let v = &a[p][p] * &a[i][j] - &a[i][p] * &a[p][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[p][p].clone();
    }
    let block = a[k..].iter().map(|row| row[k..].to_vec()).collect();
    Some((prev, block))
}

/// Inverse of a unimodular integer matrix (rational Gauss-Jordan with
/// pivoting). Returns `None` if the matrix is singular or not unimodular.
pub(crate) fn inverse_unimodular(m: &[Vec<BigInt>]) -> Option<IntMatrix> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .cloned()
                .chain((0..n).map(|j| BigInt::from((i == j) as u8)))
                .map(BigRational::from_integer)
                .collect()
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(p, k);
        let pivot = a[k][k].clone();
        for x in a[k].iter_mut() {
            *x = &*x / &pivot;
        }
        let pivot_row = a[k].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == k || row[k].is_zero() {
                continue;
            }
            let f = row[k].clone();
            for (x, pk) in row.iter_mut().zip(&pivot_row) {
                *x -= &f * pk;
            }
        }
    }
    a.into_iter()
        .map(|row| {
            row[n..]
                .iter()
                .map(|x| x.is_integer().then(|| x.to_integer()))
                .collect::<Option<Vec<_>>>()
        })
        .collect()
}

/// Convert a big integer to `f64` after dividing by `2^shift`.
pub(crate) fn to_f64_shifted(x: &BigInt, shift: u64) -> f64 {
    if shift == 0 {
        return x.to_f64().unwrap_or(f64::NAN);
    }
    let bits = x.bits();
    if bits <= shift.saturating_sub(1100) {
        return 0.0;
    }
    // keep 64 significant bits before the final conversion
    let keep = bits.saturating_sub(64);
    let head = x.abs() >> keep;
    let mant = head.to_f64().unwrap_or(f64::NAN);
    let value = mant * pow2(keep as i64 - shift as i64);
    if x.is_negative() {
        -value
    } else {
        value
    }
}

fn pow2(e: i64) -> f64 {
    libm::ldexp(1.0, e.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
}

/// Number of bits to shift a matrix by so its entries fit comfortably in `f64`.
pub(crate) fn float_shift(m: &[Vec<BigInt>]) -> u64 {
    let max_bits = m.iter().flatten().map(BigInt::bits).max().unwrap_or(0);
    max_bits.saturating_sub(900)
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    let num_bits = r.numer().bits() as i64;
    let den_bits = r.denom().bits() as i64;
    let shift_n = (num_bits - 900).max(0) as u64;
    let shift_d = (den_bits - 900).max(0) as u64;
    let n = to_f64_shifted(r.numer(), shift_n);
    let d = to_f64_shifted(r.denom(), shift_d);
    n / d * pow2(shift_n as i64 - shift_d as i64)
}

/// Exact rational value of a finite `f64`.
pub(crate) fn f64_to_ratio(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// `x * g * x^T` for an integer vector and matrix.
pub(crate) fn quadratic_form(g: &[Vec<BigInt>], x: &[BigInt]) -> BigInt {
    let mut total = BigInt::zero();
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        let row: BigInt = g[i]
            .iter()
            .zip(x)
            .filter(|(_, xj)| !xj.is_zero())
            .map(|(gij, xj)| gij * xj)
            .sum();
        total += xi * row;
    }
    total
}

/// `x * g * x^T` with machine integers, used on hot enumeration paths.
pub(crate) fn quadratic_form_i64(g: &[Vec<BigInt>], x: &[i64]) -> BigInt {
    let mut total = BigInt::zero();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0 {
            continue;
        }
        let mut row = BigInt::zero();
        for (gij, &xj) in g[i].iter().zip(x) {
            if xj != 0 {
                row += gij * xj;
            }
        }
        total += row * xi;
    }
    total
}

pub(crate) fn zeros(rows: usize, cols: usize) -> IntMatrix {
    vec![vec![BigInt::zero(); cols]; rows]
}
