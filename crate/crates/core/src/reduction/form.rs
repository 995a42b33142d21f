//! Reduction state: an exact integer Gram matrix together with the
//! unimodular transform that produced it.
//!
//! Every reduction in the crate works on Gram matrices rather than on basis
//! rows, which lets the same code reduce integral bases, dual bases and
//! projected (rational, rescaled) lattices.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, IntMatrix};
use crate::lattice::GramMatrix;

/// Hard cap on LLL loop iterations; hitting it indicates a numerical fault.
const MAX_LLL_STEPS: u64 = 50_000_000;
/// Cap on size-reduction passes over one row.
const MAX_SIZE_REDUCE_ROUNDS: usize = 1000;

pub(crate) struct Form {
    pub g: IntMatrix,
    pub u: IntMatrix,
    pub u_inv: Option<IntMatrix>,
    shift: u64,
    mu: Vec<Vec<f64>>,
    r: Vec<f64>,
    pub swaps: u64,
}

impl Form {
    pub fn new(g: &GramMatrix, track_inverse: bool) -> Self {
        let n = g.dim();
        let mut form = Form {
            g: g.entries().to_vec(),
            u: exact::identity(n),
            u_inv: track_inverse.then(|| exact::identity(n)),
            shift: 0,
            mu: vec![vec![0.0; n]; n],
            r: vec![0.0; n],
            swaps: 0,
        };
        form.refresh_shift();
        form
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn gram(&self) -> GramMatrix {
        GramMatrix::from_entries_unchecked(self.g.clone())
    }

    fn refresh_shift(&mut self) {
        self.shift = exact::float_shift(&self.g);
    }

    fn gf(&self, i: usize, j: usize) -> f64 {
        exact::to_f64_shifted(&self.g[i][j], self.shift)
    }

    /// Recompute floating GSO coefficients of row `k` from the exact Gram
    /// matrix; returns whether the squared GSO norm came out usable. An
    /// unreduced row can fail through cancellation and recover once reduced.
    fn gso_row(&mut self, k: usize) -> bool {
        for j in 0..k {
            let mut s = self.gf(k, j);
            for l in 0..j {
                s -= self.mu[j][l] * self.mu[k][l] * self.r[l];
            }
            self.mu[k][j] = s / self.r[j];
        }
        let mut s = self.gf(k, k);
        for l in 0..k {
            s -= self.mu[k][l] * self.mu[k][l] * self.r[l];
        }
        self.r[k] = s;
        s > 0.0 && s.is_finite()
    }

    fn recompute_row(&mut self, k: usize) -> Result<()> {
        if self.gso_row(k) {
            Ok(())
        } else {
            Err(Error::Unstable { row: k })
        }
    }

    /// Recompute rows `0..upto`; only rows below `strict` must come out usable.
    pub fn recompute_all(&mut self, strict: usize, upto: usize) -> Result<()> {
        self.refresh_shift();
        for k in 0..upto {
            if !self.gso_row(k) && k < strict {
                return Err(Error::Unstable { row: k });
            }
        }
        Ok(())
    }

    /// `row_k -= x * row_j`.
    fn row_sub(&mut self, k: usize, j: usize, x: &BigInt) {
        let n = self.dim();
        let gkj = self.g[k][j].clone();
        let gjj = self.g[j][j].clone();
        let gkk = &self.g[k][k] - (&gkj * x) * 2u32 + x * x * &gjj;
        for i in 0..n {
            if i == k {
                continue;
            }
            let v = &self.g[k][i] - x * &self.g[j][i];
            self.g[i][k] = v.clone();
            self.g[k][i] = v;
        }
        self.g[k][k] = gkk;
        let (uk, uj) = two_rows(&mut self.u, k, j);
        for (a, b) in uk.iter_mut().zip(uj.iter()) {
            if !b.is_zero() {
                *a -= x * b;
            }
        }
        if let Some(inv) = self.u_inv.as_mut() {
            // U_inv <- U_inv * E^{-1}: column j += x * column k
            for row in inv.iter_mut() {
                if !row[k].is_zero() {
                    let add = x * &row[k];
                    row[j] += add;
                }
            }
        }
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.g.swap(a, b);
        for row in self.g.iter_mut() {
            row.swap(a, b);
        }
        self.u.swap(a, b);
        if let Some(inv) = self.u_inv.as_mut() {
            for row in inv.iter_mut() {
                row.swap(a, b);
            }
        }
        self.swaps += 1;
    }

    /// Replace rows `(p, q)` by `(a p + b q, c p + d q)`; requires `ad - bc = ±1`.
    fn row_pair_op(&mut self, p: usize, q: usize, m: [&BigInt; 4]) {
        let [a, b, c, d] = m;
        let n = self.dim();
        let combine = |x: &BigInt, y: &BigInt, s: &BigInt, t: &BigInt| s * x + t * y;
        // rows of G
        for i in 0..n {
            let (gp, gq) = (self.g[p][i].clone(), self.g[q][i].clone());
            self.g[p][i] = combine(&gp, &gq, a, b);
            self.g[q][i] = combine(&gp, &gq, c, d);
        }
        // columns of G
        for i in 0..n {
            let (gp, gq) = (self.g[i][p].clone(), self.g[i][q].clone());
            self.g[i][p] = combine(&gp, &gq, a, b);
            self.g[i][q] = combine(&gp, &gq, c, d);
        }
        for i in 0..self.u[p].len() {
            let (up, uq) = (self.u[p][i].clone(), self.u[q][i].clone());
            self.u[p][i] = combine(&up, &uq, a, b);
            self.u[q][i] = combine(&up, &uq, c, d);
        }
        if let Some(inv) = self.u_inv.as_mut() {
            // inverse of [[a, b], [c, d]] is det * [[d, -b], [-c, a]], det = ±1
            let det = a * d - b * c;
            let (ia, ib, ic, id) = (&det * d, -(&det * b), -(&det * c), &det * a);
            for row in inv.iter_mut() {
                let (xp, xq) = (row[p].clone(), row[q].clone());
                row[p] = &xp * &ia + &xq * &ic;
                row[q] = &xp * &ib + &xq * &id;
            }
        }
    }

    /// Left-multiply by a unimodular transform acting on rows `lo..lo + w.len()`.
    pub fn apply_block(&mut self, lo: usize, w: &[Vec<BigInt>]) {
        let n = self.dim();
        let full: IntMatrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if (lo..lo + w.len()).contains(&i) && (lo..lo + w.len()).contains(&j) {
                            w[i - lo][j - lo].clone()
                        } else if i == j {
                            BigInt::one()
                        } else {
                            BigInt::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        self.g = exact::congruence(&full, &self.g);
        self.u = exact::mat_mul(&full, &self.u);
        if let Some(inv) = self.u_inv.as_mut() {
            let w_inv = exact::inverse_unimodular(&full).expect("block transform is unimodular");
            *inv = exact::mat_mul(inv, &w_inv);
        }
    }

    /// `row_k -= x * row_j`; floating GSO data must be recomputed afterwards.
    pub fn reduce_against(&mut self, k: usize, j: usize, x: &BigInt) {
        if !x.is_zero() {
            self.row_sub(k, j, x);
        }
    }

    /// Size-reduce row `k` against rows `0..k`. Assumes GSO rows `0..k` are current.
    fn size_reduce_row(&mut self, k: usize) -> Result<()> {
        let mut usable = self.gso_row(k);
        for _ in 0..MAX_SIZE_REDUCE_ROUNDS {
            let mut largest = 0.0f64;
            let mut changed = false;
            for j in (0..k).rev() {
                let m = self.mu[k][j];
                if m.abs() <= 0.5 {
                    continue;
                }
                let x = libm::round(m);
                largest = largest.max(x.abs());
                let xb = big_from_f64(x);
                self.row_sub(k, j, &xb);
                for l in 0..j {
                    self.mu[k][l] -= x * self.mu[j][l];
                }
                self.mu[k][j] -= x;
                changed = true;
            }
            if !changed {
                return if usable { Ok(()) } else { Err(Error::Unstable { row: k }) };
            }
            usable = self.gso_row(k);
            if usable && largest < 1e6 && self.mu[k][..k].iter().all(|m| m.abs() <= 0.5 + 1e-9) {
                return Ok(());
            }
        }
        Err(Error::Unstable { row: k })
    }

    /// Size-reduce every row in `lo..hi`.
    pub fn size_reduce(&mut self, lo: usize, hi: usize) -> Result<()> {
        self.recompute_all(lo, hi)?;
        for k in lo..hi {
            self.size_reduce_row(k)?;
        }
        Ok(())
    }

    /// LLL on rows `lo..hi`: size reduction against every earlier row, swaps
    /// only inside the range. Rows before `lo` are left untouched.
    pub fn lll(&mut self, delta: f64, lo: usize, hi: usize) -> Result<()> {
        if hi <= lo {
            return Ok(());
        }
        self.recompute_all(lo, hi)?;
        let n = self.dim();
        let refresh_every = (n * n).max(16) as u64;
        let mut since_refresh = 0u64;
        let mut steps = 0u64;
        let mut k = lo;
        while k < hi {
            steps += 1;
            if steps > MAX_LLL_STEPS {
                return Err(Error::Unstable { row: k });
            }
            self.size_reduce_row(k)?;
            if k > lo {
                let m = self.mu[k][k - 1];
                if delta * self.r[k - 1] > self.r[k] + m * m * self.r[k - 1] {
                    self.swap(k - 1, k);
                    since_refresh += 1;
                    if since_refresh >= refresh_every {
                        since_refresh = 0;
                        self.recompute_all(k + 1, hi)?;
                    } else {
                        self.recompute_row(k - 1)?;
                        self.recompute_row(k)?;
                    }
                    k -= 1;
                    continue;
                }
            }
            k += 1;
        }
        Ok(())
    }

    /// Make the coefficient vector `x` (over rows `lo..lo+x.len()`) the row at
    /// `lo`, keeping the set of rows a basis of the same lattice. `x` must be
    /// primitive.
    pub fn insert_combination(&mut self, lo: usize, x: &[BigInt]) -> Result<()> {
        let mut x: Vec<BigInt> = x.to_vec();
        for i in (1..x.len()).rev() {
            if x[i].is_zero() {
                continue;
            }
            let (a, b) = (x[i - 1].clone(), x[i].clone());
            let e = a.extended_gcd(&b);
            let (g, s, t) = (e.gcd, e.x, e.y);
            let (ag, bg) = (&a / &g, &b / &g);
            // W <- M^{-1} W with M^{-1} = [[a/g, b/g], [-t, s]]
            let neg_t = -t;
            self.row_pair_op(lo + i - 1, lo + i, [&ag, &bg, &neg_t, &s]);
            x[i - 1] = g;
            x[i] = BigInt::zero();
        }
        if x[0].is_negative() {
            self.negate_row(lo);
            x[0] = -&x[0];
        }
        if !x[0].is_one() {
            return Err(crate::error::param("inserted vector is not primitive"));
        }
        Ok(())
    }

    fn negate_row(&mut self, k: usize) {
        let n = self.dim();
        for i in 0..n {
            if i != k {
                self.g[k][i] = -&self.g[k][i];
                self.g[i][k] = -&self.g[i][k];
            }
        }
        for x in self.u[k].iter_mut() {
            *x = -&*x;
        }
        if let Some(inv) = self.u_inv.as_mut() {
            for row in inv.iter_mut() {
                row[k] = -&row[k];
            }
        }
    }
}

fn two_rows(m: &mut [Vec<BigInt>], a: usize, b: usize) -> (&mut Vec<BigInt>, &Vec<BigInt>) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = m.split_at_mut(b);
        (&mut lo[a], &hi[0])
    } else {
        let (lo, hi) = m.split_at_mut(a);
        (&mut hi[0], &lo[b])
    }
}

fn big_from_f64(x: f64) -> BigInt {
    BigInt::from_f64(x).unwrap_or_default()
}
