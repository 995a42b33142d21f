//! Exact lattice-point enumeration.
//!
//! Depth-first Schnorr–Euchner search over floating GSO coordinates. The
//! floating bounds carry a small outward slack, and every leaf is checked
//! with the exact integer quadratic form, so rounding can never drop a
//! point that belongs in the ball.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{param, Error, Result};
use crate::exact;
use crate::lattice::{Basis, GramMatrix};
use crate::reduction::SvpOracle;

/// Default cap on visited search-tree nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;
/// Largest rank accepted by the ball enumerators.
pub const MAX_RANK: usize = 32;
/// Largest box volume `prod(2 m_i + 1)` accepted by [`box_search`].
pub const MAX_BOX_POINTS: u128 = 1 << 26;

const SLACK: f64 = 1e-9;

/// A non-zero lattice vector in coefficient form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnumResult {
    pub coeffs: Vec<BigInt>,
    /// Exact `x G x^T`.
    pub norm_sq: BigInt,
}

impl EnumResult {
    pub fn coeffs_i64(&self) -> Vec<i64> {
        self.coeffs
            .iter()
            .map(|c| num_traits::ToPrimitive::to_i64(c).unwrap_or(i64::MAX))
            .collect()
    }
}

/// Sign-normalise so the first non-zero entry is positive.
pub fn canonical_sign(x: &[BigInt]) -> Vec<BigInt> {
    match x.iter().find(|v| !v.is_zero()) {
        Some(v) if v.is_negative() => x.iter().map(|v| -v).collect(),
        _ => x.to_vec(),
    }
}

/// Deterministic choice among equal-norm vectors: sign-normalise, then take
/// the lexicographically smallest coefficient vector.
fn pick_canonical(found: Vec<Vec<i64>>, g: &[Vec<BigInt>]) -> Option<EnumResult> {
    found
        .into_iter()
        .map(|x| {
            let sign = x.iter().find(|&&v| v != 0).map_or(1, |v| v.signum());
            x.into_iter().map(|v| v * sign).collect::<Vec<_>>()
        })
        .min()
        .map(|x| {
            let norm_sq = exact::quadratic_form_i64(g, &x);
            EnumResult {
                coeffs: x.into_iter().map(BigInt::from).collect(),
                norm_sq,
            }
        })
}

enum Mode {
    /// Collect every point with exact norm at most `limit`.
    Collect { limit: BigRational, out: Vec<Vec<i64>> },
    /// Track the minimum exact norm and every vector attaining it.
    Shortest { best: Option<BigInt>, out: Vec<Vec<i64>> },
}

struct Search<'a> {
    g: &'a [Vec<BigInt>],
    shift: u64,
    mu: Vec<Vec<f64>>,
    r: Vec<f64>,
    bound: f64,
    boxed: Option<&'a [i64]>,
    x: Vec<i64>,
    nodes: u64,
    budget: u64,
    mode: Mode,
}

impl<'a> Search<'a> {
    fn new(g: &'a GramMatrix, budget: u64, mode: Mode) -> Result<Self> {
        let n = g.dim();
        let (gf, shift) = g.to_f64_scaled();
        let mut mu = vec![vec![0.0; n]; n];
        let mut r = vec![0.0; n];
        for i in 0..n {
            for j in 0..i {
                let mut s = gf[i][j];
                for k in 0..j {
                    s -= mu[j][k] * mu[i][k] * r[k];
                }
                mu[i][j] = s / r[j];
            }
            let mut s = gf[i][i];
            for k in 0..i {
                s -= mu[i][k] * mu[i][k] * r[k];
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Unstable { row: i });
            }
            r[i] = s;
        }
        Ok(Search {
            g: g.entries(),
            shift,
            mu,
            r,
            bound: 0.0,
            boxed: None,
            x: vec![0; n],
            nodes: 0,
            budget,
            mode,
        })
    }

    /// Set the floating bound from a true squared radius.
    fn set_bound(&mut self, radius_sq: f64) {
        let scaled = radius_sq * libm::exp2(-(self.shift as f64));
        self.bound = scaled * (1.0 + SLACK) + f64::MIN_POSITIVE;
    }

    fn run(&mut self) -> Result<()> {
        let n = self.x.len();
        self.recurse(n - 1, 0.0, true)
    }

    fn recurse(&mut self, k: usize, partial: f64, top_zero: bool) -> Result<()> {
        let n = self.x.len();
        let mut c = 0.0;
        for j in k + 1..n {
            c -= self.x[j] as f64 * self.mu[j][k];
        }
        let rk = self.r[k];
        let limit = self.boxed.map(|m| m[k]);
        // The search space is symmetric under x -> -x; only explore vectors
        // whose last non-zero coordinate is positive.
        let (mut up, mut down, mut down_open) = if top_zero {
            (if k == 0 { 1 } else { 0 }, 0, false)
        } else {
            let x0 = libm::round(c) as i64;
            (x0, x0 - 1, true)
        };
        let mut up_open = true;
        if let Some(m) = limit {
            // clamp the zig-zag start into [-m, m]
            if up < -m {
                up = -m;
                down_open = false;
            } else if down > m {
                down = m;
                up_open = false;
            }
            up_open &= up <= m;
            down_open &= down >= -m;
        }
        while up_open || down_open {
            let take_up = match (up_open, down_open) {
                (true, true) => (up as f64 - c).abs() <= (c - down as f64).abs(),
                (u, _) => u,
            };
            let v = if take_up { up } else { down };
            let diff = v as f64 - c;
            let dist = partial + diff * diff * rk;
            if dist > self.bound {
                if take_up {
                    up_open = false;
                } else {
                    down_open = false;
                }
                continue;
            }
            if take_up {
                up += 1;
                if limit.map_or(false, |m| up > m) {
                    up_open = false;
                }
            } else {
                down -= 1;
                if limit.map_or(false, |m| down < -m) {
                    down_open = false;
                }
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::Budget(alloc::format!(
                    "enumeration visited more than {} nodes",
                    self.budget
                )));
            }
            self.x[k] = v;
            if k == 0 {
                self.leaf();
            } else {
                self.recurse(k - 1, dist, top_zero && v == 0)?;
            }
        }
        self.x[k] = 0;
        Ok(())
    }

    fn leaf(&mut self) {
        let norm = exact::quadratic_form_i64(self.g, &self.x);
        match &mut self.mode {
            Mode::Collect { limit, out } => {
                if BigRational::from_integer(norm) <= *limit {
                    out.push(self.x.clone());
                }
            }
            Mode::Shortest { best, out } => {
                let ord = best.as_ref().map_or(Ordering::Less, |b| norm.cmp(b));
                match ord {
                    Ordering::Less => {
                        let f = exact::to_f64_shifted(&norm, 0);
                        *best = Some(norm);
                        out.clear();
                        out.push(self.x.clone());
                        self.set_bound(f);
                    }
                    Ordering::Equal => out.push(self.x.clone()),
                    Ordering::Greater => {}
                }
            }
        }
    }
}

fn check_rank(n: usize) -> Result<()> {
    if n > MAX_RANK {
        return Err(param(alloc::format!("enumeration supports rank <= {MAX_RANK}, got {n}")));
    }
    Ok(())
}

fn radius_sq_exact(radius: f64) -> Result<BigRational> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(param("radius must be positive and finite"));
    }
    let r = exact::f64_to_ratio(radius).ok_or_else(|| param("radius must be finite"))?;
    Ok(&r * &r)
}

/// All non-zero `x` with `x G x^T <= radius^2`, both signs of each pair.
pub fn enumerate_ball_gram(g: &GramMatrix, radius: f64, budget: u64) -> Result<Vec<EnumResult>> {
    check_rank(g.dim())?;
    let limit = radius_sq_exact(radius)?;
    let mut s = Search::new(
        g,
        budget,
        Mode::Collect {
            limit,
            out: Vec::new(),
        },
    )?;
    s.set_bound(radius * radius);
    s.run()?;
    let Mode::Collect { out, .. } = s.mode else {
        unreachable!()
    };
    let mut res = Vec::with_capacity(out.len() * 2);
    for x in out {
        let norm_sq = exact::quadratic_form_i64(g.entries(), &x);
        let neg: Vec<BigInt> = x.iter().map(|&v| BigInt::from(-v)).collect();
        res.push(EnumResult {
            coeffs: x.into_iter().map(BigInt::from).collect(),
            norm_sq: norm_sq.clone(),
        });
        res.push(EnumResult { coeffs: neg, norm_sq });
    }
    Ok(res)
}

/// All lattice points of `B` within Euclidean distance `radius` of the origin.
pub fn enumerate_ball(b: &Basis, radius: f64) -> Result<Vec<EnumResult>> {
    enumerate_ball_gram(&b.gram(), radius, DEFAULT_NODE_BUDGET)
}

/// Every minimum-norm non-zero vector inside the ball (one per `±` pair).
fn minima_in_ball(
    g: &GramMatrix,
    radius: f64,
    boxed: Option<&[i64]>,
    budget: u64,
) -> Result<(Option<BigInt>, Vec<Vec<i64>>)> {
    let mut s = Search::new(
        g,
        budget,
        Mode::Shortest {
            best: None,
            out: Vec::new(),
        },
    )?;
    s.boxed = boxed;
    s.set_bound(radius * radius);
    s.run()?;
    let Mode::Shortest { best, out } = s.mode else {
        unreachable!()
    };
    // points admitted only by the floating slack are dropped here
    let limit = radius_sq_exact(radius)?;
    match best {
        Some(b) if BigRational::from_integer(b.clone()) <= limit => Ok((Some(b), out)),
        _ => Ok((None, Vec::new())),
    }
}

/// Shortest non-zero vector with norm at most `radius`, if any, with the
/// deterministic tie-break of [`canonical_sign`] plus lexicographic order.
pub fn shortest_in_ball_gram(g: &GramMatrix, radius: f64, budget: u64) -> Result<Option<EnumResult>> {
    check_rank(g.dim())?;
    let (_, found) = minima_in_ball(g, radius, None, budget)?;
    Ok(pick_canonical(found, g.entries()))
}

/// Radius multipliers tried by [`shortest_vector`]: `gh`, `1.05 gh`, then doubling.
fn radius_schedule(gh: f64) -> impl Iterator<Item = f64> {
    [1.0, 1.05]
        .into_iter()
        .chain((1..).map(|i| 1.05 * libm::exp2(i as f64)))
        .map(move |c| c * gh)
}

/// Every shortest non-zero vector of the lattice, both signs.
pub fn all_shortest_gram(g: &GramMatrix, budget: u64) -> Result<Vec<EnumResult>> {
    check_rank(g.dim())?;
    let gh = g.gaussian_heuristic(1.0);
    for radius in radius_schedule(gh).take(64) {
        let (best, found) = minima_in_ball(g, radius, None, budget)?;
        if let Some(norm_sq) = best {
            let mut res = Vec::with_capacity(2 * found.len());
            for x in found {
                res.push(EnumResult {
                    coeffs: x.iter().map(|&v| BigInt::from(v)).collect(),
                    norm_sq: norm_sq.clone(),
                });
                res.push(EnumResult {
                    coeffs: x.iter().map(|&v| BigInt::from(-v)).collect(),
                    norm_sq: norm_sq.clone(),
                });
            }
            res.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
            return Ok(res);
        }
    }
    Err(Error::InfeasibleRadius { radius: gh })
}

pub fn shortest_vector_gram(g: &GramMatrix, budget: u64) -> Result<EnumResult> {
    check_rank(g.dim())?;
    let gh = g.gaussian_heuristic(1.0);
    for radius in radius_schedule(gh).take(64) {
        if let Some(v) = shortest_in_ball_gram(g, radius, budget)? {
            return Ok(v);
        }
    }
    Err(Error::InfeasibleRadius { radius: gh })
}

/// A shortest non-zero vector of the lattice.
pub fn shortest_vector(b: &Basis) -> Result<EnumResult> {
    shortest_vector_gram(&b.gram(), DEFAULT_NODE_BUDGET)
}

/// Minimum-norm non-zero `x` with `|x_i| <= m_i`, or `None` when the box
/// holds only the origin.
pub fn box_search_gram(g: &GramMatrix, bounds: &[u64], budget: u64) -> Result<Option<EnumResult>> {
    if bounds.len() != g.dim() {
        return Err(Error::Dimension {
            expected: g.dim(),
            got: bounds.len(),
        });
    }
    let points = bounds
        .iter()
        .try_fold(1u128, |acc, &m| acc.checked_mul(2 * m as u128 + 1))
        .unwrap_or(u128::MAX);
    if points > MAX_BOX_POINTS {
        return Err(Error::Budget(alloc::format!(
            "box holds {points} points, limit is {MAX_BOX_POINTS}"
        )));
    }
    // a unit vector inside the box gives a starting radius
    let start = (0..g.dim())
        .filter(|&i| bounds[i] > 0)
        .map(|i| g.get(i, i))
        .min();
    let Some(start) = start else {
        return Ok(None);
    };
    let m: Vec<i64> = bounds.iter().map(|&b| b as i64).collect();
    let radius = libm::sqrt(exact::to_f64_shifted(start, 0)) * (1.0 + 1e-6);
    let (_, found) = minima_in_ball(g, radius, Some(&m), budget)?;
    Ok(pick_canonical(found, g.entries()))
}

pub fn box_search(b: &Basis, bounds: &[u64]) -> Result<Option<EnumResult>> {
    box_search_gram(&b.gram(), bounds, DEFAULT_NODE_BUDGET)
}

/// The classical enumeration used as an [`SvpOracle`].
#[derive(Debug, Clone, Copy)]
pub struct EnumerationOracle {
    pub budget: u64,
}

impl Default for EnumerationOracle {
    fn default() -> Self {
        EnumerationOracle {
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl SvpOracle for EnumerationOracle {
    fn find_shortest(&mut self, gram: &GramMatrix, radius: f64) -> Result<Option<Vec<BigInt>>> {
        Ok(shortest_in_ball_gram(gram, radius, self.budget)?.map(|r| r.coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sample_qary;
    use crate::reduction::{lll, DEFAULT_DELTA};

    fn basis(rows: &[&[i64]]) -> Basis {
        Basis::from_i64(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn brute_force(g: &GramMatrix, m: i64, radius_sq: i64) -> Vec<Vec<i64>> {
        let n = g.dim();
        let mut out = Vec::new();
        let mut x = vec![-m; n];
        loop {
            if x.iter().any(|&v| v != 0) && exact::quadratic_form_i64(g.entries(), &x) <= BigInt::from(radius_sq) {
                out.push(x.clone());
            }
            let mut i = 0;
            while i < n && x[i] == m {
                x[i] = -m;
                i += 1;
            }
            if i == n {
                break;
            }
            x[i] += 1;
        }
        out.sort();
        out
    }

    #[test]
    fn unit_ball_of_z2() {
        let b = basis(&[&[1, 0], &[0, 1]]);
        assert_eq!(enumerate_ball(&b, 1.0).unwrap().len(), 4);
        assert_eq!(enumerate_ball(&b, 1.5).unwrap().len(), 8);
        assert!(enumerate_ball(&b, 0.99).unwrap().is_empty());
    }

    #[test]
    fn shortest_small_examples() {
        let sv = shortest_vector(&basis(&[&[2, 0], &[1, 1]])).unwrap();
        assert_eq!(sv.norm_sq, BigInt::from(2));
        assert_eq!(sv.coeffs, vec![BigInt::from(0), BigInt::from(1)]);
        let id = basis(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let sv = shortest_vector(&id).unwrap();
        assert_eq!(sv.norm_sq, BigInt::from(1));
        // tie-break: lexicographically smallest with positive leading entry
        assert_eq!(sv.coeffs, vec![BigInt::from(0), BigInt::from(0), BigInt::from(1)]);
    }

    #[test]
    fn ball_matches_brute_force() {
        for seed in 0..6 {
            let b = lll(&sample_qary(5, 2, 11, seed).unwrap(), DEFAULT_DELTA).unwrap().basis;
            let g = b.gram();
            let r2 = num_traits::ToPrimitive::to_i64(g.get(4, 4)).unwrap() + 3;
            // integer norms: radius^2 = r2 + 1/2 admits exactly the norms <= r2
            let radius = (r2 as f64 + 0.5).sqrt();
            let mut got: Vec<Vec<i64>> = enumerate_ball_gram(&g, radius, DEFAULT_NODE_BUDGET)
                .unwrap()
                .into_iter()
                .map(|r| r.coeffs_i64())
                .collect();
            got.sort();
            let bounds = crate::encoding::dual_bounds_gram(&g, radius).unwrap();
            let m = *bounds.m.iter().max().unwrap() as i64;
            assert_eq!(got, brute_force(&g, m, r2));
        }
    }

    #[test]
    fn box_search_examples() {
        let id = basis(&[&[1, 0], &[0, 1]]);
        assert_eq!(box_search(&id, &[0, 0]).unwrap(), None);
        assert_eq!(box_search(&id, &[1, 1]).unwrap().unwrap().norm_sq, BigInt::from(1));
        let b = basis(&[&[5, 0], &[4, 1]]);
        // the shortest vector (-1, 1)*B = (-1, 1) is outside the box m = (0, 3)
        let r = box_search(&b, &[0, 3]).unwrap().unwrap();
        assert_eq!(r.norm_sq, BigInt::from(17));
        assert!(box_search(&id, &[5000, 5000]).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let b = basis(&[&[1, 0], &[0, 1]]);
        assert!(matches!(
            enumerate_ball_gram(&b.gram(), 10.0, 10),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn all_shortest_of_z2() {
        let g = basis(&[&[1, 0], &[0, 1]]).gram();
        assert_eq!(all_shortest_gram(&g, DEFAULT_NODE_BUDGET).unwrap().len(), 4);
    }
}
