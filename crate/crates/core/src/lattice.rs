//! Lattice bases and their exact and floating-point geometry.
//!
//! Basis entries, Gram matrices, determinants and dual bases are exact
//! (big integers and rationals). Gram-Schmidt data and norms are `f64`.

use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::{E, PI};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng as _;

use crate::error::{param, Error, Result};
use crate::exact::{self, IntMatrix};
use crate::reduction;
use crate::rng::rng_from_seed;

/// An `n x d` integer matrix whose rows are linearly independent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    rows: IntMatrix,
}

impl Basis {
    /// Build a basis, checking shape and linear independence.
    pub fn new(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(param("basis needs at least one row"));
        }
        let d = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: bad.len(),
            });
        }
        if d < n {
            return Err(Error::RankDeficient);
        }
        let basis = Basis { rows };
        if !basis.gram().determinant().is_positive() {
            return Err(Error::RankDeficient);
        }
        Ok(basis)
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    /// Skips the independence check; callers guarantee it (e.g. unimodular images).
    pub(crate) fn from_rows_unchecked(rows: IntMatrix) -> Self {
        Basis { rows }
    }

    /// Number of basis vectors `n`.
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<Vec<BigInt>> {
        self.rows
    }

    /// First `n` rows as a new basis.
    pub fn truncate(&self, n: usize) -> Result<Basis> {
        if n == 0 || n > self.rank() {
            return Err(param(format!("cannot take {n} rows of a rank-{} basis", self.rank())));
        }
        Ok(Basis::from_rows_unchecked(self.rows[..n].to_vec()))
    }

    /// Lattice vector `x * B`.
    pub fn combine(&self, x: &[BigInt]) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.dim()];
        for (xi, row) in x.iter().zip(&self.rows) {
            if xi.is_zero() {
                continue;
            }
            for (vj, bj) in v.iter_mut().zip(row) {
                *vj += xi * bj;
            }
        }
        v
    }

    /// Apply an `n x n` integer transform: rows of `u * B`.
    pub(crate) fn transform(&self, u: &[Vec<BigInt>]) -> Basis {
        Basis::from_rows_unchecked(exact::mat_mul(u, &self.rows))
    }

    pub fn gram(&self) -> GramMatrix {
        gram(self)
    }
}

/// Symmetric positive-definite integer matrix `B * B^T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GramMatrix {
    entries: IntMatrix,
}

impl GramMatrix {
    /// Validates symmetry and positive definiteness (all leading minors > 0).
    pub fn new(entries: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(param("empty Gram matrix"));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            for j in 0..i {
                if row[j] != entries[j][i] {
                    return Err(param("Gram matrix is not symmetric"));
                }
            }
        }
        let g = GramMatrix { entries };
        match g.leading_minors() {
            Some(m) if m.iter().all(|x| x.is_positive()) => Ok(g),
            _ => Err(Error::RankDeficient),
        }
    }

    pub(crate) fn from_entries_unchecked(entries: IntMatrix) -> Self {
        GramMatrix { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<BigInt>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i][j]
    }

    pub fn determinant(&self) -> BigInt {
        exact::determinant(&self.entries)
    }

    /// `d_1, ..., d_n`, the leading principal minors; `None` if one vanishes.
    pub fn leading_minors(&self) -> Option<Vec<BigInt>> {
        let n = self.dim();
        let mut a = self.entries.clone();
        let mut prev = BigInt::one();
        let mut minors = Vec::with_capacity(n);
        for k in 0..n {
            if a[k][k].is_zero() {
                return None;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
            minors.push(prev.clone());
        }
        Some(minors)
    }

    /// Exact squared norm `x * G * x^T` of the lattice vector with coefficients `x`.
    pub fn norm_sq(&self, x: &[BigInt]) -> BigInt {
        exact::quadratic_form(&self.entries, x)
    }

    /// `log2(vol(L)) = log2(det G) / 2`.
    pub fn log2_volume(&self) -> f64 {
        log2_big(&self.determinant()) / 2.0
    }

    pub fn volume(&self) -> f64 {
        libm::exp2(self.log2_volume())
    }

    /// `C * sqrt(n / (2 pi e)) * vol^(1/n)`.
    pub fn gaussian_heuristic(&self, c: f64) -> f64 {
        let n = self.dim() as f64;
        c * libm::sqrt(n / (2.0 * PI * E)) * libm::exp2(self.log2_volume() / n)
    }

    /// `log2` of the orthogonality defect `prod ||b_i|| / vol(L)`.
    pub fn log2_orthogonality_defect(&self) -> f64 {
        let log_prod: f64 = (0..self.dim())
            .map(|i| log2_big(&self.entries[i][i]) / 2.0)
            .sum();
        (log_prod - self.log2_volume()).max(0.0)
    }

    pub fn orthogonality_defect(&self) -> f64 {
        libm::exp2(self.log2_orthogonality_defect())
    }

    /// Exact inverse `G^{-1}`, the Gram matrix of the dual basis.
    pub fn inverse(&self) -> Result<Vec<Vec<BigRational>>> {
        let (adj, det) = exact::adjugate(&self.entries).ok_or(Error::RankDeficient)?;
        if det.is_zero() {
            return Err(Error::RankDeficient);
        }
        Ok(adj
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| BigRational::new(x, det.clone()))
                    .collect()
            })
            .collect())
    }

    /// Gram matrix of the dual lattice scaled to be integral and primitive.
    ///
    /// Returns `(H, s)` with `G^{-1} = H / s`.
    pub fn dual_scaled(&self) -> Result<(GramMatrix, BigInt)> {
        let (adj, det) = exact::adjugate(&self.entries).ok_or(Error::RankDeficient)?;
        let (mut adj, mut det) = (adj, det);
        if det.is_negative() {
            det = -det;
            for x in adj.iter_mut().flatten() {
                *x = -&*x;
            }
        }
        let g = adj
            .iter()
            .flatten()
            .fold(det.clone(), |acc, x| num_integer::Integer::gcd(&acc, x));
        if g > BigInt::one() {
            for x in adj.iter_mut().flatten() {
                *x = &*x / &g;
            }
            det = det / &g;
        }
        Ok((GramMatrix::from_entries_unchecked(adj), det))
    }

    /// Gram matrix of rows `k..n` projected orthogonally to rows `0..k`,
    /// scaled to an integral primitive matrix. Returns `(P, s)` with the true
    /// projected Gram equal to `P / s`.
    pub fn projected(&self, k: usize) -> Result<(GramMatrix, BigRational)> {
        if k >= self.dim() {
            return Err(param("projection removes every row"));
        }
        let (scale, mut block) =
            exact::scaled_schur(&self.entries, k).ok_or(Error::RankDeficient)?;
        let g = block
            .iter()
            .flatten()
            .fold(BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
        for x in block.iter_mut().flatten() {
            *x = &*x / &g;
        }
        Ok((
            GramMatrix::from_entries_unchecked(block),
            BigRational::new(scale, g),
        ))
    }

    /// Leading `k x k` block (Gram matrix of the first `k` rows).
    pub fn leading(&self, k: usize) -> GramMatrix {
        GramMatrix::from_entries_unchecked(
            self.entries[..k].iter().map(|r| r[..k].to_vec()).collect(),
        )
    }

    /// `U * G * U^T`.
    pub fn transform(&self, u: &[Vec<BigInt>]) -> GramMatrix {
        GramMatrix::from_entries_unchecked(exact::congruence(u, &self.entries))
    }

    /// Floating-point entries divided by `2^shift`, with the shift chosen so
    /// the largest entry stays representable.
    pub(crate) fn to_f64_scaled(&self) -> (Vec<Vec<f64>>, u64) {
        let shift = exact::float_shift(&self.entries);
        let m = self
            .entries
            .iter()
            .map(|r| r.iter().map(|x| exact::to_f64_shifted(x, shift)).collect())
            .collect();
        (m, shift)
    }
}

/// Exact dual basis `(B B^T)^{-1} B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualBasis {
    rows: Vec<Vec<BigRational>>,
}

impl DualBasis {
    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    /// Exact squared norm of row `i`.
    pub fn row_norm_sq(&self, i: usize) -> BigRational {
        self.rows[i].iter().map(|x| x * x).sum()
    }

    /// Exact inner product `<primal_j, dual_i>`.
    pub fn pair(&self, i: usize, primal: &[BigInt]) -> BigRational {
        self.rows[i]
            .iter()
            .zip(primal)
            .map(|(a, b)| a * BigRational::from_integer(b.clone()))
            .sum()
    }
}

/// Floating-point Gram-Schmidt orthogonalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct GsoData {
    /// Orthogonal vectors `b*_i`.
    pub b_star: Vec<Vec<f64>>,
    /// `mu[i][j] = <b_i, b*_j> / ||b*_j||^2` for `j < i`; zero elsewhere.
    pub mu: Vec<Vec<f64>>,
    /// `||b*_i||^2`.
    pub sq_norms: Vec<f64>,
}

/// Sample the `d x d` q-ary basis `[[I_{d-k}, A], [0, q I_k]]` with `A`
/// uniform over `Z_q^{(d-k) x k}`.
pub fn sample_qary(d: usize, k: usize, q: u64, seed: u64) -> Result<Basis> {
    if k == 0 || k >= d {
        return Err(param(format!("need 1 <= k < d, got k={k}, d={d}")));
    }
    if q < 2 {
        return Err(param(format!("modulus must be >= 2, got {q}")));
    }
    let mut rng = rng_from_seed(seed);
    let top = d - k;
    let mut rows = exact::zeros(d, d);
    for (i, row) in rows.iter_mut().enumerate().take(top) {
        row[i] = BigInt::one();
        for entry in row.iter_mut().skip(top) {
            *entry = BigInt::from(rng.gen_range(0..q));
        }
    }
    for (i, row) in rows.iter_mut().enumerate().skip(top) {
        row[i] = BigInt::from(q);
    }
    Ok(Basis::from_rows_unchecked(rows))
}

/// q-ary instance reduced with LLL (`delta = 0.99`), truncated to its first `n` rows.
pub fn prepare_instance(d: usize, k: usize, q: u64, n: usize, seed: u64) -> Result<Basis> {
    if n == 0 || n > d {
        return Err(param(format!("need 1 <= n <= d, got n={n}, d={d}")));
    }
    let full = sample_qary(d, k, q, seed)?;
    let reduced = reduction::lll(&full, reduction::DEFAULT_DELTA)?;
    reduced.basis.truncate(n)
}

pub fn gram(b: &Basis) -> GramMatrix {
    let rows = b.rows();
    let n = rows.len();
    let mut g = exact::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = exact::dot(&rows[i], &rows[j]);
            g[j][i] = v.clone();
            g[i][j] = v;
        }
    }
    GramMatrix::from_entries_unchecked(g)
}

pub fn dual_basis(b: &Basis) -> Result<DualBasis> {
    let g = gram(b);
    let (adj, det) = exact::adjugate(g.entries()).ok_or(Error::RankDeficient)?;
    if det.is_zero() {
        return Err(Error::RankDeficient);
    }
    let num = exact::mat_mul(&adj, b.rows());
    Ok(DualBasis {
        rows: num
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| BigRational::new(x, det.clone()))
                    .collect()
            })
            .collect(),
    })
}

pub fn gso(b: &Basis) -> Result<GsoData> {
    let n = b.rank();
    let rows: Vec<Vec<f64>> = b
        .rows()
        .iter()
        .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    let mut b_star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut sq_norms = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = rows[i].clone();
        for j in 0..i {
            let m = dot_f(&rows[i], &b_star[j]) / sq_norms[j];
            mu[i][j] = m;
            for (vk, bk) in v.iter_mut().zip(&b_star[j]) {
                *vk -= m * bk;
            }
        }
        let s = dot_f(&v, &v);
        if !(s >= 1e-12 * dot_f(&rows[i], &rows[i])) {
            return Err(Error::Unstable { row: i });
        }
        sq_norms.push(s);
        b_star.push(v);
    }
    Ok(GsoData {
        b_star,
        mu,
        sq_norms,
    })
}

/// `sqrt(det(B B^T))`.
pub fn volume(b: &Basis) -> f64 {
    gram(b).volume()
}

/// `C * sqrt(n / (2 pi e)) * vol(L)^(1/n)`.
pub fn gaussian_heuristic(b: &Basis, c: f64) -> f64 {
    gram(b).gaussian_heuristic(c)
}

/// `prod ||b_i|| / vol(L)`.
pub fn orthogonality_defect(b: &Basis) -> f64 {
    gram(b).orthogonality_defect()
}

pub(crate) fn dot_f(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn log2_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return libm::log2(x.to_f64().unwrap_or(f64::NAN).abs());
    }
    let shift = bits - 64;
    let head = (x.abs() >> shift).to_f64().unwrap_or(f64::NAN);
    libm::log2(head) + shift as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn b(rows: &[&[i64]]) -> Basis {
        Basis::from_i64(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ident(n: usize) -> Basis {
        Basis::from_rows_unchecked(exact::identity(n))
    }

    #[test]
    fn rejects_dependent_rows() {
        assert_eq!(
            Basis::from_i64(&[vec![1, 2], vec![2, 4]]),
            Err(Error::RankDeficient)
        );
        assert!(Basis::from_i64(&[]).is_err());
        assert!(Basis::from_i64(&[vec![1], vec![2]]).is_err());
    }

    #[test]
    fn qary_block_structure() {
        let a = sample_qary(4, 2, 5, 1).unwrap();
        let rows = a.rows();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(rows[i][j], BigInt::from((i == j) as i64));
                assert_eq!(rows[2 + i][j], BigInt::zero());
                assert_eq!(rows[2 + i][2 + j], BigInt::from(if i == j { 5 } else { 0 }));
            }
        }
        assert_eq!(a, sample_qary(4, 2, 5, 1).unwrap());
        assert_eq!(gram(&a).determinant(), BigInt::from(625));
    }

    #[test]
    fn qary_determinant_is_q_to_k() {
        for (d, k, q) in [(6, 3, 7), (5, 1, 11), (8, 5, 65537)] {
            let a = sample_qary(d, k, q, 9).unwrap();
            let det = exact::determinant(a.rows());
            assert_eq!(det.abs(), BigInt::from(q).pow(k as u32));
        }
    }

    #[test]
    fn qary_rejects_bad_parameters() {
        assert!(sample_qary(4, 0, 5, 1).is_err());
        assert!(sample_qary(4, 4, 5, 1).is_err());
        assert!(sample_qary(4, 2, 1, 1).is_err());
    }

    #[test]
    fn gram_examples() {
        let g = gram(&b(&[&[2, 0], &[1, 1]]));
        assert_eq!(g, GramMatrix::new(vec![
            vec![BigInt::from(4), BigInt::from(2)],
            vec![BigInt::from(2), BigInt::from(2)],
        ]).unwrap());
        assert_eq!(gram(&ident(3)).entries(), exact::identity(3).as_slice());
    }

    #[test]
    fn dual_examples() {
        let d = dual_basis(&b(&[&[2, 0], &[1, 1]])).unwrap();
        assert_eq!(d.rows(), &[vec![r(1, 2), r(-1, 2)], vec![r(0, 1), r(1, 1)]]);
        let d = dual_basis(&b(&[&[2]])).unwrap();
        assert_eq!(d.rows(), &[vec![r(1, 2)]]);
        let d = dual_basis(&ident(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.rows()[i][j], r((i == j) as i64, 1));
            }
        }
    }

    #[test]
    fn gso_examples() {
        let g = gso(&b(&[&[1, 1], &[0, 2]])).unwrap();
        assert_eq!(g.b_star[1], vec![-1.0, 1.0]);
        assert_eq!(g.mu[1][0], 1.0);
        let g = gso(&b(&[&[3, 0], &[0, 2]])).unwrap();
        assert_eq!(g.b_star[1], vec![0.0, 2.0]);
        assert_eq!(g.mu[1][0], 0.0);
    }

    #[test]
    fn volume_and_heuristic() {
        assert!((volume(&ident(4)) - 1.0).abs() < 1e-12);
        assert!((volume(&b(&[&[2, 0], &[1, 1]])) - 2.0).abs() < 1e-12);
        let gh = gaussian_heuristic(&ident(2), 1.0);
        assert!((gh - (1.0 / (PI * E)).sqrt()).abs() < 1e-12);
        assert!((gh - 0.342).abs() < 1e-3);
        assert!((gaussian_heuristic(&ident(2), 2.0) - 2.0 * gh).abs() < 1e-12);
        let a = sample_qary(6, 3, 17, 3).unwrap();
        assert!((volume(&a) / 17f64.powi(3) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn defect_examples() {
        assert!((orthogonality_defect(&ident(3)) - 1.0).abs() < 1e-12);
        let d = orthogonality_defect(&b(&[&[1, 1], &[0, 2]]));
        assert!((d - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn projected_gram_matches_gso() {
        let basis = b(&[&[1, 1, 0], &[0, 2, 1], &[3, 0, 1]]);
        let gs = gso(&basis).unwrap();
        let (p, s) = gram(&basis).projected(1).unwrap();
        let s = exact::ratio_to_f64(&s);
        assert!((p.get(0, 0).to_f64().unwrap() / s - gs.sq_norms[1]).abs() < 1e-9);
    }

    #[test]
    fn prepare_instance_shape() {
        let inst = prepare_instance(12, 6, 65537, 5, 7).unwrap();
        assert_eq!((inst.rank(), inst.dim()), (5, 12));
        assert!(gram(&inst).determinant().is_positive());
        assert!(prepare_instance(6, 3, 65537, 7, 7).is_err());
        let full = prepare_instance(6, 3, 65537, 6, 7).unwrap();
        assert_eq!(full.rank(), 6);
    }
}
