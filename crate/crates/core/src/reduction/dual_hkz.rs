//! HKZ reduction driven from the dual side.
//!
//! The dual basis is LLL-reduced and its first `n - 1` vectors HKZ-reduced,
//! which keeps the dual row norms (and so the coefficient bounds of the
//! primal enumeration) small. A shortest primal vector is then enumerated,
//! inserted, and the projected lattice is handled recursively.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use super::form::Form;
use super::hkz::make_primitive;
use super::{SvpOracle, DEFAULT_DELTA};
use crate::encoding::{dual_bounds_gram, qubit_count};
use crate::error::{param, Error, Result};
use crate::exact::{self, IntMatrix};
use crate::lattice::{Basis, GramMatrix};

/// Multiples of the Gaussian heuristic tried, in order, as enumeration radius.
pub const RADIUS_SCHEDULE: [f64; 5] = [1.0, 1.05, 2.1, 4.2, 8.4];

/// Bookkeeping from one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualHkzStats {
    /// Qubits needed by the coefficient bounds at the top-level enumeration.
    pub top_qubits: u64,
    /// Largest such count over every recursive enumeration.
    pub max_qubits: u64,
    /// Number of enumeration calls.
    pub enumerations: u32,
    /// Number of times the radius had to grow past the Gaussian heuristic.
    pub escalations: u32,
}

fn find_shortest<O: SvpOracle + ?Sized>(
    g: &GramMatrix,
    oracle: &mut O,
    stats: &mut DualHkzStats,
    top: bool,
) -> Result<Vec<BigInt>> {
    let gh = g.gaussian_heuristic(1.0);
    let qubits = qubit_count(&dual_bounds_gram(g, gh)?);
    if top {
        stats.top_qubits = qubits;
    }
    stats.max_qubits = stats.max_qubits.max(qubits);
    stats.enumerations += 1;
    for (i, c) in RADIUS_SCHEDULE.iter().enumerate() {
        if i > 0 {
            stats.escalations += 1;
        }
        if let Some(mut x) = oracle.find_shortest(g, c * gh)? {
            if x.len() != g.dim() {
                return Err(Error::Dimension {
                    expected: g.dim(),
                    got: x.len(),
                });
            }
            if x.iter().all(Zero::is_zero) {
                return Err(param("oracle returned the zero vector"));
            }
            make_primitive(&mut x);
            return Ok(x);
        }
    }
    Err(Error::InfeasibleRadius {
        radius: RADIUS_SCHEDULE[RADIUS_SCHEDULE.len() - 1] * gh,
    })
}

fn reduce<O: SvpOracle + ?Sized>(
    g: &GramMatrix,
    oracle: &mut O,
    stats: &mut DualHkzStats,
    top: bool,
) -> Result<IntMatrix> {
    let n = g.dim();
    if n == 1 {
        return Ok(exact::identity(1));
    }
    // dualise, LLL, HKZ on the first n - 1 dual vectors
    let (h, _) = g.dual_scaled()?;
    let mut dual = Form::new(&h, false);
    dual.lll(DEFAULT_DELTA, 0, n)?;
    let sub = reduce(&dual.gram().leading(n - 1), oracle, stats, false)?;
    dual.apply_block(0, &sub);
    // back to the primal: a dual transform U corresponds to U^{-T}
    let t = exact::transpose(&exact::inverse_unimodular(&dual.u).ok_or(Error::RankDeficient)?);
    let g1 = g.transform(&t);

    let v = find_shortest(&g1, oracle, stats, top)?;
    let mut form = Form::new(&g1, false);
    form.insert_combination(0, &v)?;
    form.lll(DEFAULT_DELTA, 1, n)?;

    // project away b_1, reduce recursively, lift back
    let (p, _) = form.gram().projected(1)?;
    let w = reduce(&p, oracle, stats, false)?;
    form.apply_block(1, &w);
    let two_g00 = &form.g[0][0] * 2;
    for i in 1..n {
        // alpha_i = mu_i1 - k lies in (-1/2, 1/2] for k = ceil(mu_i1 - 1/2)
        let num: BigInt = &form.g[i][0] * 2 - &form.g[0][0];
        let k = Integer::div_ceil(&num, &two_g00);
        form.reduce_against(i, 0, &k);
    }
    Ok(exact::mat_mul(&form.u, &t))
}

/// Dual-side HKZ reduction on a Gram matrix; returns the transform and stats.
pub fn dual_hkz_gram<O: SvpOracle + ?Sized>(g: &GramMatrix, oracle: &mut O) -> Result<(IntMatrix, DualHkzStats)> {
    if g.dim() < 2 {
        return Err(param("dual HKZ reduction needs rank >= 2"));
    }
    let mut stats = DualHkzStats::default();
    let u = reduce(g, oracle, &mut stats, true)?;
    Ok((u, stats))
}

/// HKZ-reduce `b` through its dual, calling `oracle` once per recursion
/// level with coefficient bounds taken from the dual row norms.
pub fn dual_hkz<O: SvpOracle + ?Sized>(b: &Basis, oracle: &mut O) -> Result<(Basis, DualHkzStats)> {
    let (u, stats) = dual_hkz_gram(&b.gram(), oracle)?;
    Ok((b.transform(&u), stats))
}
