//! HKZ and pseudo-HKZ reduction by repeated shortest-vector insertion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::form::Form;
use super::{SvpOracle, DEFAULT_DELTA};
use crate::error::{param, Error, Result};
use crate::exact::IntMatrix;
use crate::lattice::{Basis, GramMatrix};

/// Divide out the content of a coefficient vector.
pub(super) fn make_primitive(x: &mut [BigInt]) {
    let g = x.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g > BigInt::from(1) {
        for v in x.iter_mut() {
            *v = &*v / &g;
        }
    }
}

/// Replace row `lo` by a shortest vector of the rows `lo..hi` projected
/// orthogonally to rows `0..lo`, if that is strictly shorter. Returns whether
/// the basis changed.
pub(super) fn improve_first<O: SvpOracle + ?Sized>(
    form: &mut Form,
    lo: usize,
    hi: usize,
    oracle: &mut O,
    delta: f64,
) -> Result<bool> {
    if hi - lo < 2 {
        return Ok(false);
    }
    let leading = form.gram().leading(hi);
    let p = if lo == 0 { leading } else { leading.projected(lo)?.0 };
    let current = p.get(0, 0).clone();
    // inflate slightly so the current row always lies inside the ball
    let radius = libm::sqrt(current.to_f64().unwrap_or(f64::INFINITY)) * (1.0 + 1e-9);
    let Some(mut x) = oracle.find_shortest(&p, radius)? else {
        return Ok(false);
    };
    if x.len() != hi - lo {
        return Err(Error::Dimension {
            expected: hi - lo,
            got: x.len(),
        });
    }
    if x.iter().all(Zero::is_zero) {
        return Err(param("oracle returned the zero vector"));
    }
    make_primitive(&mut x);
    if p.norm_sq(&x) >= current {
        return Ok(false);
    }
    form.insert_combination(lo, &x)?;
    form.size_reduce(lo, lo + 1)?;
    form.lll(delta, lo + 1, hi)?;
    Ok(true)
}

/// HKZ-reduce the leading `hi` rows of the form.
pub(super) fn hkz_rows<O: SvpOracle + ?Sized>(form: &mut Form, hi: usize, oracle: &mut O) -> Result<()> {
    form.lll(DEFAULT_DELTA, 0, hi)?;
    for i in 0..hi.saturating_sub(1) {
        improve_first(form, i, hi, oracle, DEFAULT_DELTA)?;
    }
    let n = form.dim();
    form.size_reduce(1, n)
}

/// HKZ reduction on a Gram matrix; returns the unimodular transform.
pub fn hkz_gram<O: SvpOracle + ?Sized>(g: &GramMatrix, oracle: &mut O) -> Result<IntMatrix> {
    let mut form = Form::new(g, false);
    hkz_rows(&mut form, g.dim(), oracle)?;
    Ok(form.u)
}

/// HKZ reduction: the first row is a shortest vector and the projection
/// of the remaining rows orthogonal to it is again HKZ-reduced.
pub fn hkz<O: SvpOracle + ?Sized>(b: &Basis, oracle: &mut O) -> Result<Basis> {
    let u = hkz_gram(&b.gram(), oracle)?;
    Ok(b.transform(&u))
}

/// LLL reduction followed by HKZ reduction of the first `n - 1` rows. The
/// last Gram-Schmidt vector is left unchanged by the second stage.
pub fn pseudo_hkz_gram<O: SvpOracle + ?Sized>(g: &GramMatrix, oracle: &mut O) -> Result<IntMatrix> {
    let n = g.dim();
    if n < 2 {
        return Err(param("pseudo-HKZ needs rank >= 2"));
    }
    let mut form = Form::new(g, false);
    form.lll(DEFAULT_DELTA, 0, n)?;
    hkz_rows(&mut form, n - 1, oracle)?;
    Ok(form.u)
}

pub fn pseudo_hkz<O: SvpOracle + ?Sized>(b: &Basis, oracle: &mut O) -> Result<Basis> {
    let u = pseudo_hkz_gram(&b.gram(), oracle)?;
    Ok(b.transform(&u))
}
