//! Block Korkine–Zolotarev reduction.

use super::form::Form;
use super::hkz::improve_first;
use super::{ReductionReport, Stopwatch, SvpOracle, DEFAULT_DELTA};
use crate::error::{param, Result};
use crate::exact::IntMatrix;
use crate::lattice::{Basis, GramMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkzConfig {
    pub beta: usize,
    /// Stop after this many tours even if the last one changed the basis.
    pub max_tours: u32,
    pub delta: f64,
}

impl BkzConfig {
    pub fn new(beta: usize) -> Self {
        BkzConfig {
            beta,
            max_tours: 16,
            delta: DEFAULT_DELTA,
        }
    }
}

fn run<O: SvpOracle + ?Sized>(form: &mut Form, cfg: &BkzConfig, oracle: &mut O) -> Result<u32> {
    let n = form.dim();
    if cfg.beta < 2 || cfg.beta > n {
        return Err(param(alloc::format!("block size {} outside [2, {n}]", cfg.beta)));
    }
    super::check_delta(cfg.delta)?;
    form.lll(cfg.delta, 0, n)?;
    let mut tours = 0;
    loop {
        tours += 1;
        let mut changed = false;
        for k in 0..n - 1 {
            let hi = (k + cfg.beta).min(n);
            changed |= improve_first(form, k, hi, oracle, cfg.delta)?;
        }
        if !changed || tours >= cfg.max_tours {
            break;
        }
    }
    form.size_reduce(1, n)?;
    Ok(tours)
}

/// BKZ on a Gram matrix; returns the transform and the number of tours.
pub fn bkz_gram<O: SvpOracle + ?Sized>(g: &GramMatrix, cfg: &BkzConfig, oracle: &mut O) -> Result<(IntMatrix, u32)> {
    let mut form = Form::new(g, false);
    let tours = run(&mut form, cfg, oracle)?;
    Ok((form.u, tours))
}

/// BKZ-`beta` with the given oracle solving SVP in each projected block.
pub fn bkz<O: SvpOracle + ?Sized>(b: &Basis, beta: usize, oracle: &mut O) -> Result<ReductionReport> {
    let clock = Stopwatch::start();
    let mut form = Form::new(&b.gram(), false);
    let tours = run(&mut form, &BkzConfig::new(beta), oracle)?;
    Ok(ReductionReport::new(b.transform(&form.u), form.swaps, tours, clock.elapsed()))
}
