//! Noiseless state-vector emulation of VQE on diagonal Ising Hamiltonians.
//!
//! The ansatz is the hardware-efficient `R_y` + `CZ` layout: an initial layer
//! of `R_y` rotations followed by `L` repetitions of (controlled-Z along a
//! chain or ring, then `R_y` on every qubit). Since `R_y` and `CZ` are real,
//! the emulator evolves real amplitudes internally and only materialises
//! complex amplitudes for the public [`StateVector`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::Rng as _;

use crate::encoding::{build_qubo, qubo_to_ising, target_indices, IntegerEncoding, IsingHamiltonian};
use crate::enumeration::EnumResult;
use crate::error::{param, Error, Result};
use crate::exact;
use crate::lattice::GramMatrix;
use crate::rng::{rng_from_seed, Rng};

/// Largest qubit count emulated without an explicit override.
pub const DEFAULT_MAX_QUBITS: usize = 26;
/// Cost reported when every outcome decodes to the zero vector.
pub const ZERO_STATE_COST: f64 = 1e18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entangler {
    Linear,
    Ring,
}

/// Shape of the hardware-efficient ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnsatzSpec {
    pub qubits: usize,
    pub layers: usize,
    pub entangler: Entangler,
}

impl AnsatzSpec {
    pub fn new(qubits: usize, layers: usize, entangler: Entangler) -> Result<Self> {
        if qubits == 0 {
            return Err(param("ansatz needs at least one qubit"));
        }
        Ok(AnsatzSpec {
            qubits,
            layers,
            entangler,
        })
    }

    /// `N (L + 1)`.
    pub fn num_params(&self) -> usize {
        self.qubits * (self.layers + 1)
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.qubits;
        let ring = (self.entangler == Entangler::Ring && n > 2).then_some((n - 1, 0));
        (0..n.saturating_sub(1)).map(|i| (i, i + 1)).chain(ring)
    }
}

/// `2^N` complex amplitudes; basis index bit `t` is qubit `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn num_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn check_qubits(n: usize, limit: usize) -> Result<()> {
    if n > limit || n >= 63 {
        return Err(Error::TooManyQubits { qubits: n, limit });
    }
    Ok(())
}

fn ry_layer(psi: &mut [f64], angles: &[f64]) {
    for (q, &theta) in angles.iter().enumerate() {
        let (s, c) = libm::sincos(0.5 * theta);
        let stride = 1usize << q;
        for block in psi.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = c * x - s * y;
                *a1 = s * x + c * y;
            }
        }
    }
}

/// Sign a CZ layer applies to each basis state: `(-1)^{pairs with both bits set}`.
fn cz_signs(n: usize, pairs: &[(usize, usize)]) -> Vec<f64> {
    let masks: Vec<usize> = pairs.iter().map(|&(a, b)| (1 << a) | (1 << b)).collect();
    (0..1usize << n)
        .map(|i| {
            let flips = masks.iter().filter(|&&m| i & m == m).count();
            if flips & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Real amplitudes of the ansatz state, written into `psi`.
fn ansatz_real(spec: &AnsatzSpec, theta: &[f64], signs: &[f64], psi: &mut Vec<f64>) {
    let n = spec.qubits;
    psi.clear();
    psi.resize(1 << n, 0.0);
    psi[0] = 1.0;
    // the first rotation layer acts on |0...0> and yields a product state
    for (q, &t) in theta[..n].iter().enumerate() {
        let (s, c) = libm::sincos(0.5 * t);
        let half = 1usize << q;
        for i in 0..half {
            psi[i + half] = psi[i] * s;
            psi[i] *= c;
        }
    }
    for l in 0..spec.layers {
        for (a, s) in psi.iter_mut().zip(signs) {
            *a *= s;
        }
        ry_layer(psi, &theta[n * (l + 1)..n * (l + 2)]);
    }
}

/// Prepare `|psi(theta)>` from `|0...0>`.
pub fn apply_ansatz(spec: &AnsatzSpec, theta: &[f64]) -> Result<StateVector> {
    apply_ansatz_with_limit(spec, theta, DEFAULT_MAX_QUBITS)
}

pub fn apply_ansatz_with_limit(spec: &AnsatzSpec, theta: &[f64], max_qubits: usize) -> Result<StateVector> {
    check_qubits(spec.qubits, max_qubits)?;
    if theta.len() != spec.num_params() {
        return Err(Error::Dimension {
            expected: spec.num_params(),
            got: theta.len(),
        });
    }
    let pairs: Vec<_> = spec.pairs().collect();
    let mut psi = Vec::new();
    ansatz_real(spec, theta, &cz_signs(spec.qubits, &pairs), &mut psi);
    Ok(StateVector {
        amps: psi.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
    })
}

/// Eigenvalue of a diagonal Hamiltonian on a computational basis state.
pub fn eigenvalue(h: &IsingHamiltonian, bits: &[bool]) -> Result<f64> {
    if bits.len() != h.num_qubits {
        return Err(Error::Dimension {
            expected: h.num_qubits,
            got: bits.len(),
        });
    }
    Ok(exact::ratio_to_f64(&h.energy(bits)))
}

/// Aggregation applied to the measured energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind {
    Mean,
    Cvar(f64),
    /// Mean over outcomes that do not decode to the zero vector.
    ZeroExcludedMean,
    /// CVaR over outcomes that do not decode to the zero vector.
    ZeroExcludedCvar(f64),
}

impl CostKind {
    fn alpha(&self) -> f64 {
        match *self {
            CostKind::Mean | CostKind::ZeroExcludedMean => 1.0,
            CostKind::Cvar(a) | CostKind::ZeroExcludedCvar(a) => a,
        }
    }

    fn excludes_zero(&self) -> bool {
        matches!(self, CostKind::ZeroExcludedMean | CostKind::ZeroExcludedCvar(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Draw `shots` samples per evaluation from a stream seeded by `seed`.
    Sampled { shots: usize, seed: u64 },
    /// Use the full output distribution.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMode {
    pub kind: CostKind,
    pub evaluation: Evaluation,
}

impl CostMode {
    pub fn new(kind: CostKind, evaluation: Evaluation) -> Result<Self> {
        let a = kind.alpha();
        if !(a > 0.0 && a <= 1.0) {
            return Err(param("CVaR alpha must lie in (0, 1]"));
        }
        if let Evaluation::Sampled { shots: 0, .. } = evaluation {
            return Err(param("need at least one shot"));
        }
        Ok(CostMode { kind, evaluation })
    }
}

/// Mean of the `ceil(alpha * len)` lowest values of an ascending slice.
fn cvar_sorted(sorted: &[f64], alpha: f64) -> f64 {
    let k = (libm::ceil(alpha * sorted.len() as f64) as usize).clamp(1, sorted.len());
    sorted[..k].iter().sum::<f64>() / k as f64
}

/// Cost of a finite set of per-shot energies.
pub fn shot_cost(energies: &[f64], zero: &[bool], kind: CostKind) -> f64 {
    let mut kept: Vec<f64> = energies
        .iter()
        .zip(zero)
        .filter(|(_, &z)| !(kind.excludes_zero() && z))
        .map(|(&e, _)| e)
        .collect();
    if kept.is_empty() {
        return ZERO_STATE_COST;
    }
    kept.sort_by(f64::total_cmp);
    cvar_sorted(&kept, kind.alpha())
}

/// Precomputed per-basis-state data for fast cost evaluation.
#[derive(Debug, Clone)]
pub struct CostTable {
    pub energies: Vec<f64>,
    /// Whether each basis state decodes to the zero coefficient vector.
    pub zero: Vec<bool>,
    order: Vec<u32>,
}

impl CostTable {
    pub fn new(energies: Vec<f64>, zero: Vec<bool>) -> Self {
        let mut order: Vec<u32> = (0..energies.len() as u32).collect();
        order.sort_by(|&a, &b| energies[a as usize].total_cmp(&energies[b as usize]).then(a.cmp(&b)));
        CostTable { energies, zero, order }
    }

    /// Table for a Hamiltonian and the zero set of an encoding.
    pub fn for_encoding(h: &IsingHamiltonian, enc: &IntegerEncoding) -> Self {
        let zero = (0u64..1 << h.num_qubits)
            .map(|i| enc.decode_index(i).iter().all(|&v| v == 0))
            .collect();
        CostTable::new(h.energies_f64(), zero)
    }

    /// Cost of the exact output distribution.
    pub fn exact_cost(&self, probs: &[f64], kind: CostKind) -> f64 {
        let skip = kind.excludes_zero();
        let mass: f64 = if skip {
            probs.iter().zip(&self.zero).filter(|(_, &z)| !z).map(|(p, _)| p).sum()
        } else {
            probs.iter().sum()
        };
        if !(mass > 1e-300) {
            return ZERO_STATE_COST;
        }
        // conditional expectation over the lowest alpha-quantile
        let target = kind.alpha() * mass;
        let (mut acc, mut total) = (0.0, 0.0);
        for &i in &self.order {
            let i = i as usize;
            if skip && self.zero[i] {
                continue;
            }
            let p = probs[i];
            if p <= 0.0 {
                continue;
            }
            let take = p.min(target - acc);
            total += take * self.energies[i];
            acc += take;
            if acc >= target {
                break;
            }
        }
        total / acc
    }

    /// Cost estimated from `shots` samples of the distribution.
    pub fn sampled_cost(&self, probs: &[f64], kind: CostKind, shots: usize, rng: &mut Rng) -> f64 {
        let samples = sample_indices(probs, shots, rng);
        let e: Vec<f64> = samples.iter().map(|&i| self.energies[i]).collect();
        let z: Vec<bool> = samples.iter().map(|&i| self.zero[i]).collect();
        shot_cost(&e, &z, kind)
    }
}

fn sample_indices(probs: &[f64], shots: usize, rng: &mut Rng) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    (0..shots)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(probs.len() - 1)
        })
        .collect()
}

/// Evaluate the cost of `state`. `zero_set` flags basis states decoding to
/// the zero vector. Sampled evaluation draws from the mode's own seed.
pub fn eval_cost(state: &StateVector, h: &IsingHamiltonian, mode: &CostMode, zero_set: &[bool]) -> Result<f64> {
    if state.amps.len() != 1 << h.num_qubits || zero_set.len() != state.amps.len() {
        return Err(Error::Dimension {
            expected: 1 << h.num_qubits,
            got: state.amps.len(),
        });
    }
    let table = CostTable::new(h.energies_f64(), zero_set.to_vec());
    let probs = state.probabilities();
    Ok(match mode.evaluation {
        Evaluation::Exact => table.exact_cost(&probs, mode.kind),
        Evaluation::Sampled { shots, seed } => table.sampled_cost(&probs, mode.kind, shots, &mut rng_from_seed(seed)),
    })
}

/// Settings of the derivative-free optimiser (adaptive Nelder–Mead).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Cap on simplex iterations per start.
    pub max_iterations: usize,
    /// Convergence: relative improvement of the simplex's mean cost below
    /// `tolerance` for `patience` consecutive iterations.
    pub tolerance: f64,
    pub patience: usize,
    /// Additional starts from fresh random parameters.
    pub restarts: usize,
    /// Initial simplex step.
    pub step: f64,
    pub max_qubits: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 2000,
            tolerance: 1e-4,
            patience: 20,
            restarts: 2,
            step: PI / 2.0,
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }
}

/// Outcome of a Nelder–Mead minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

/// Adaptive Nelder–Mead (dimension-dependent coefficients).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], cfg: &OptimizerConfig) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evaluations);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += cfg.step;
        let v = eval(&x, &mut evaluations);
        simplex.push((x, v));
    }
    let mut trace = Vec::new();
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mean = |s: &[(Vec<f64>, f64)]| s.iter().map(|v| v.1).sum::<f64>() / s.len() as f64;
    let mut level = mean(&simplex);
    while iterations < cfg.max_iterations {
        iterations += 1;
        let worst = simplex[n].1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let vr = eval(&xr, &mut evaluations);
        if vr < simplex[0].1 {
            let xe = along(alpha * beta);
            let ve = eval(&xe, &mut evaluations);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
        } else if n == 0 || vr < simplex[n - 1].1 {
            simplex[n] = (xr, vr);
        } else {
            let (xc, vc) = if vr < worst {
                let x = along(alpha * gamma);
                let v = eval(&x, &mut evaluations);
                (x, v)
            } else {
                let x = along(-gamma);
                let v = eval(&x, &mut evaluations);
                (x, v)
            };
            if vc < worst.min(vr) {
                simplex[n] = (xc, vc);
            } else {
                // shrink towards the best vertex
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + delta * (*xi - bi);
                    }
                    *v = eval(x, &mut evaluations);
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        // the best vertex can sit still for many iterations while the rest
        // of the simplex is still moving, so progress is measured on the mean
        let new_level = mean(&simplex);
        let rel = (level - new_level) / level.abs().max(1e-12);
        if rel < cfg.tolerance {
            stall += 1;
        } else {
            stall = 0;
        }
        level = new_level;
        trace.push(simplex[0].1);
        if stall >= cfg.patience {
            converged = true;
            break;
        }
    }
    Minimum {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
        evaluations,
        converged,
        trace,
    }
}

/// Everything a VQE run needs about one lattice instance.
#[derive(Debug, Clone)]
pub struct VqeProblem {
    pub gram: GramMatrix,
    pub encoding: IntegerEncoding,
    pub hamiltonian: IsingHamiltonian,
    pub table: CostTable,
    /// Bitstrings decoding to a shortest non-zero vector.
    pub targets: Vec<u64>,
    /// A shortest vector inside the encoding's box, if any.
    pub shortest: Option<EnumResult>,
}

impl VqeProblem {
    /// Build the Hamiltonian, cost table and target set (plain/binary encodings).
    pub fn new(gram: &GramMatrix, encoding: IntegerEncoding, max_qubits: usize, budget: u64) -> Result<Self> {
        check_qubits(encoding.num_bits, max_qubits)?;
        let hamiltonian = qubo_to_ising(&build_qubo(gram, &encoding)?);
        let table = CostTable::for_encoding(&hamiltonian, &encoding);
        let (targets, shortest) = target_indices(gram, &encoding, budget)?;
        Ok(VqeProblem {
            gram: gram.clone(),
            encoding,
            hamiltonian,
            table,
            targets,
            shortest,
        })
    }
}

/// Observables of one VQE run.
#[derive(Debug, Clone, PartialEq)]
pub struct VqeRunResult {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub final_cost: f64,
    pub trace: Vec<f64>,
    /// Probability mass of the final state on the target set.
    pub overlap: f64,
    /// Best non-zero vector among `final_shots` samples of the final state.
    pub best: Option<EnumResult>,
    /// Whether `best` has the norm of a shortest vector.
    pub success: bool,
    pub seed: u64,
}

/// Run VQE: random initial parameters in `[0, 2 pi)`, adaptive Nelder–Mead
/// with random restarts, then overlap and sampling of the best final state.
pub fn optimize(
    problem: &VqeProblem,
    spec: &AnsatzSpec,
    mode: &CostMode,
    config: &OptimizerConfig,
    final_shots: usize,
    seed: u64,
) -> Result<VqeRunResult> {
    check_qubits(spec.qubits, config.max_qubits)?;
    if spec.qubits != problem.hamiltonian.num_qubits {
        return Err(Error::Dimension {
            expected: problem.hamiltonian.num_qubits,
            got: spec.qubits,
        });
    }
    let mut rng = rng_from_seed(seed);
    let pairs: Vec<_> = spec.pairs().collect();
    let signs = cz_signs(spec.qubits, &pairs);
    let mut psi = Vec::new();
    let mut probs = vec![0.0; 1 << spec.qubits];
    let mut shot_rng = match mode.evaluation {
        Evaluation::Sampled { seed: s, .. } => rng_from_seed(crate::rng::derive_seed(s, seed)),
        Evaluation::Exact => rng_from_seed(0),
    };
    let mut best: Option<Minimum> = None;
    let (mut iterations, mut evaluations) = (0, 0);
    let mut trace = Vec::new();
    for _ in 0..=config.restarts {
        let x0: Vec<f64> = (0..spec.num_params()).map(|_| rng.gen::<f64>() * 2.0 * PI).collect();
        let cost = |theta: &[f64]| {
            ansatz_real(spec, theta, &signs, &mut psi);
            for (p, a) in probs.iter_mut().zip(&psi) {
                *p = a * a;
            }
            match mode.evaluation {
                Evaluation::Exact => problem.table.exact_cost(&probs, mode.kind),
                Evaluation::Sampled { shots, .. } => problem.table.sampled_cost(&probs, mode.kind, shots, &mut shot_rng),
            }
        };
        let m = nelder_mead(cost, &x0, config);
        iterations += m.iterations;
        evaluations += m.evaluations;
        trace.extend_from_slice(&m.trace);
        if best.as_ref().map_or(true, |b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let state = apply_ansatz_with_limit(spec, &best.x, config.max_qubits)?;
    let overlap = overlap(&state, &problem.targets);
    let sample = sample_solution(&state, final_shots.max(1), &problem.encoding, &problem.gram, rng.gen())?;
    let success = match (&sample, &problem.shortest) {
        (Some(s), Some(t)) => s.norm_sq == t.norm_sq,
        _ => false,
    };
    Ok(VqeRunResult {
        theta: best.x,
        iterations,
        evaluations,
        converged: best.converged,
        final_cost: best.value,
        trace,
        overlap,
        best: sample,
        success,
        seed,
    })
}

/// Target bitstrings: encodings of any shortest non-zero vector in the box.
pub fn target_set(g: &GramMatrix, enc: &IntegerEncoding, budget: u64) -> Result<Vec<u64>> {
    Ok(target_indices(g, enc, budget)?.0)
}

/// Probability of measuring a target bitstring.
pub fn overlap(state: &StateVector, targets: &[u64]) -> f64 {
    targets
        .iter()
        .filter_map(|&t| state.amps.get(t as usize))
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .min(1.0)
}

/// Probability of seeing a target at least once in `samples` measurements.
pub fn success_probability(overlap: f64, samples: u64) -> f64 {
    1.0 - libm::pow(1.0 - overlap.clamp(0.0, 1.0), samples as f64)
}

/// Sample the state, decode, drop zero vectors and return the shortest
/// (ties: lexicographically smallest after making the first entry positive).
pub fn sample_solution(
    state: &StateVector,
    shots: usize,
    enc: &IntegerEncoding,
    g: &GramMatrix,
    seed: u64,
) -> Result<Option<EnumResult>> {
    if shots == 0 {
        return Err(param("need at least one shot"));
    }
    if state.amps.len() != 1 << enc.num_bits {
        return Err(Error::Dimension {
            expected: 1 << enc.num_bits,
            got: state.amps.len(),
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut seen = sample_indices(&state.probabilities(), shots, &mut rng);
    seen.sort_unstable();
    seen.dedup();
    let mut best: Option<(BigInt, Vec<i64>)> = None;
    for idx in seen {
        let x = enc.decode_index(idx as u64);
        if x.iter().all(|&v| v == 0) {
            continue;
        }
        let sign = x.iter().find(|&&v| v != 0).map_or(1, |v| v.signum());
        let x: Vec<i64> = x.into_iter().map(|v| v * sign).collect();
        let norm = exact::quadratic_form_i64(g.entries(), &x);
        let better = match &best {
            None => true,
            Some((bn, bx)) => norm < *bn || (norm == *bn && x < *bx),
        };
        if better {
            best = Some((norm, x));
        }
    }
    Ok(best.map(|(norm_sq, x)| EnumResult {
        coeffs: x.into_iter().map(BigInt::from).collect(),
        norm_sq,
    }))
}
