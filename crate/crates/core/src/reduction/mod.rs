//! Lattice basis reduction: size reduction, LLL, BKZ, HKZ, pseudo-HKZ and
//! the dual-side recursive HKZ reduction driven by a pluggable SVP oracle.

mod bkz;
mod dual_hkz;
pub(crate) mod form;
mod hkz;

use core::time::Duration;

use num_bigint::BigInt;

use crate::error::{param, Result};
use crate::lattice::{Basis, GramMatrix};

pub use bkz::{bkz, bkz_gram, BkzConfig};
pub use dual_hkz::{dual_hkz, dual_hkz_gram, DualHkzStats, RADIUS_SCHEDULE};
pub use hkz::{hkz, hkz_gram, pseudo_hkz, pseudo_hkz_gram};

use form::Form;

/// LLL parameter used whenever a caller does not choose one.
pub const DEFAULT_DELTA: f64 = 0.99;

/// Exact shortest-vector search on a lattice given by its Gram matrix.
///
/// Implementations return a coefficient vector `x != 0` with
/// `x G x^T <= radius^2` of minimal norm, or `None` when the ball holds no
/// non-zero lattice point. Heuristic oracles may return a short vector that
/// is not minimal; the reductions then produce weaker bases.
pub trait SvpOracle {
    fn find_shortest(&mut self, gram: &GramMatrix, radius: f64) -> Result<Option<alloc::vec::Vec<BigInt>>>;
}

impl<T: SvpOracle + ?Sized> SvpOracle for &mut T {
    fn find_shortest(&mut self, gram: &GramMatrix, radius: f64) -> Result<Option<alloc::vec::Vec<BigInt>>> {
        (**self).find_shortest(gram, radius)
    }
}

/// Output of a reduction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub basis: Basis,
    pub swaps: u64,
    /// BKZ tours (zero for LLL).
    pub tours: u32,
    /// Orthogonality defect of the output basis.
    pub defect: f64,
    /// Wall-clock time; only measured with the `std` feature.
    pub wall_time: Option<Duration>,
}

impl ReductionReport {
    pub(crate) fn new(basis: Basis, swaps: u64, tours: u32, wall_time: Option<Duration>) -> Self {
        let defect = basis.gram().orthogonality_defect();
        ReductionReport {
            basis,
            swaps,
            tours,
            defect,
            wall_time,
        }
    }
}

#[cfg(feature = "std")]
pub(crate) struct Stopwatch(std::time::Instant);

#[cfg(feature = "std")]
impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }
    pub fn elapsed(&self) -> Option<Duration> {
        Some(self.0.elapsed())
    }
}

#[cfg(not(feature = "std"))]
pub(crate) struct Stopwatch;

#[cfg(not(feature = "std"))]
impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch
    }
    pub fn elapsed(&self) -> Option<Duration> {
        None
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.25 && delta < 1.0) {
        return Err(param(alloc::format!("LLL delta must lie in (1/4, 1), got {delta}")));
    }
    Ok(())
}

/// Size-reduce: afterwards every `|mu_ij| <= 1/2`.
pub fn size_reduce(b: &Basis) -> Result<Basis> {
    let mut form = Form::new(&b.gram(), false);
    form.size_reduce(1, b.rank())?;
    Ok(b.transform(&form.u))
}

/// LLL reduction with Lovász parameter `delta`.
pub fn lll(b: &Basis, delta: f64) -> Result<ReductionReport> {
    check_delta(delta)?;
    let clock = Stopwatch::start();
    let mut form = Form::new(&b.gram(), false);
    form.lll(delta, 0, b.rank())?;
    Ok(ReductionReport::new(b.transform(&form.u), form.swaps, 0, clock.elapsed()))
}

/// LLL on a Gram matrix. Returns the unimodular transform `U` with
/// `U G U^T` reduced.
pub fn lll_gram(g: &GramMatrix, delta: f64) -> Result<alloc::vec::Vec<alloc::vec::Vec<BigInt>>> {
    check_delta(delta)?;
    let mut form = Form::new(g, false);
    form.lll(delta, 0, g.dim())?;
    Ok(form.u)
}

/// Reduction applied to a dual lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualReduction {
    Lll,
    Bkz(usize),
    PseudoHkz,
}

/// A reduced dual basis, kept as a scaled Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDual {
    /// `D` with the true dual Gram matrix equal to `D / scale`.
    pub gram: GramMatrix,
    pub scale: BigInt,
    /// Unimodular `U` with `D = U H U^T` for the unreduced scaled dual `H`.
    pub transform: alloc::vec::Vec<alloc::vec::Vec<BigInt>>,
}

impl ReducedDual {
    /// The primal transform `U^{-T}`: its rows applied to the primal basis
    /// give the basis whose dual is the reduced one.
    pub fn primal_transform(&self) -> Result<alloc::vec::Vec<alloc::vec::Vec<BigInt>>> {
        let inv = crate::exact::inverse_unimodular(&self.transform).ok_or(crate::error::Error::RankDeficient)?;
        Ok(crate::exact::transpose(&inv))
    }
}

/// Reduce the dual lattice of `g`.
pub fn reduce_dual<O: SvpOracle + ?Sized>(g: &GramMatrix, method: DualReduction, oracle: &mut O) -> Result<ReducedDual> {
    let (h, scale) = g.dual_scaled()?;
    let transform = match method {
        DualReduction::Lll => lll_gram(&h, DEFAULT_DELTA)?,
        DualReduction::Bkz(beta) => bkz_gram(&h, &BkzConfig::new(beta), oracle)?.0,
        DualReduction::PseudoHkz => pseudo_hkz_gram(&h, oracle)?,
    };
    Ok(ReducedDual {
        gram: h.transform(&transform),
        scale,
        transform,
    })
}

/// Upper bound on the orthogonality defect of an HKZ basis,
/// `gamma_n^{n/2} * prod_{i=1..n} sqrt(i + 3) / 2` with `gamma_n <= n/8 + 6/5`.
pub fn hkz_defect_bound(n: usize) -> f64 {
    libm::exp2(log2_hkz_defect_bound(n))
}

pub fn log2_hkz_defect_bound(n: usize) -> f64 {
    let nf = n as f64;
    let gamma = nf / 8.0 + 6.0 / 5.0;
    let mut log2 = nf / 2.0 * libm::log2(gamma);
    for i in 1..=n {
        log2 += 0.5 * libm::log2(i as f64 + 3.0) - 1.0;
    }
    log2
}
