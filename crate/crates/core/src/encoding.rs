//! From a lattice to a Hamiltonian: coefficient bounds, qubit budgets,
//! integer-to-binary encodings, QUBO construction and the Ising mapping.
//!
//! Bit/spin convention, used everywhere: a bit `s = 1` is the spin
//! eigenvalue `z = -1`, i.e. `s = (1 - z) / 2`. Bit `t` of a bitstring index
//! is `(index >> t) & 1`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::index;

use crate::enumeration::{all_shortest_gram, EnumResult};
use crate::error::{param, Error, Result};
use crate::exact;
use crate::lattice::{Basis, GramMatrix};
use crate::rng::rng_from_seed;

/// Where a bounds vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// `m_i = floor(A * ||b^_i||)` from the dual row norms.
    DualNorm,
    Uniform,
    UniformRandom,
    DualScaled,
    Custom,
}

/// Per-coordinate bounds `|x_i| <= m_i`. A zero bound pins `x_i = 0`.
///
/// A one-sided coordinate is restricted to `0 <= x_i <= m_i` instead; the
/// naive single-qubit allocation uses this (`x_i` in `{0, 1}`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundsVector {
    pub m: Vec<u64>,
    pub one_sided: Vec<bool>,
    pub provenance: Provenance,
}

impl BoundsVector {
    pub fn new(m: Vec<u64>, provenance: Provenance) -> Self {
        let one_sided = vec![false; m.len()];
        BoundsVector { m, one_sided, provenance }
    }

    pub fn with_one_sided(mut self, one_sided: Vec<bool>) -> Self {
        assert_eq!(one_sided.len(), self.m.len(), "one-sided flags must match the rank");
        self.one_sided = one_sided;
        self
    }

    /// Qubits used by coordinate `i` in the plain encoding.
    pub fn bits(&self, i: usize) -> u32 {
        if self.one_sided[i] {
            64 - self.m[i].leading_zeros()
        } else {
            plain_bits(self.m[i])
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Whether `x` lies in the box.
    pub fn contains(&self, x: &[BigInt]) -> bool {
        x.len() == self.m.len()
            && x.iter().zip(&self.m).zip(&self.one_sided).all(|((v, &m), &half)| {
                let m = BigInt::from(m);
                if half {
                    !v.is_negative() && *v <= m
                } else {
                    v.abs() <= m
                }
            })
    }
}

/// Coefficient bounds for every lattice vector of norm at most `a`:
/// `|x_i| <= A ||b^_i||` where `b^_i` are the dual basis vectors.
pub fn dual_bounds(b: &Basis, a: f64) -> Result<BoundsVector> {
    dual_bounds_gram(&b.gram(), a)
}

pub fn dual_bounds_gram(g: &GramMatrix, a: f64) -> Result<BoundsVector> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(param("bound radius must be positive and finite"));
    }
    let (adj, det) = exact::adjugate(g.entries()).ok_or(Error::RankDeficient)?;
    if !det.is_positive() {
        return Err(Error::RankDeficient);
    }
    let m = (0..g.dim())
        // ||b^_i||^2 is the i-th diagonal entry of G^{-1}
        .map(|i| floor_bound(a, &BigRational::new(adj[i][i].clone(), det.clone())))
        .collect();
    Ok(BoundsVector::new(m, Provenance::DualNorm))
}

/// Dual-norm bounds read off a dual Gram matrix `D / scale` directly:
/// `m_i = floor(A sqrt(D_ii / scale))`.
pub fn dual_bounds_from_dual(dual: &GramMatrix, scale: &BigInt, a: f64) -> Result<BoundsVector> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(param("bound radius must be positive and finite"));
    }
    if !scale.is_positive() {
        return Err(param("dual scale must be positive"));
    }
    let m = (0..dual.dim())
        .map(|i| floor_bound(a, &BigRational::new(dual.get(i, i).clone(), scale.clone())))
        .collect();
    Ok(BoundsVector::new(m, Provenance::DualNorm))
}

/// `floor(a * sqrt(norm_sq))` with a small upward slack.
fn floor_bound(a: f64, norm_sq: &BigRational) -> u64 {
    let v = a * libm::sqrt(exact::ratio_to_f64(norm_sq));
    libm::floor(v + 1e-12 * v.max(1.0)) as u64
}

/// Bits used by a coordinate with bound `m` in the plain encoding:
/// `floor(log2(2m)) + 1`, or zero for a pinned coordinate.
pub fn plain_bits(m: u64) -> u32 {
    if m == 0 {
        0
    } else {
        128 - (2 * m as u128).leading_zeros()
    }
}

/// Total qubits of the plain encoding of `bounds`.
pub fn qubit_count(bounds: &BoundsVector) -> u64 {
    (0..bounds.len()).map(|i| bounds.bits(i) as u64).sum()
}

/// Upper estimate on the qubits needed to enumerate a radius `C gh(L)`
/// ball: `2n + log2((C^2 n / 2 pi e)^{n/2} * defect)`, with `defect` the
/// orthogonality defect of the dual basis.
pub fn qubit_budget_bound(n: usize, dual_defect: f64, c: f64) -> Result<f64> {
    if !(dual_defect >= 1.0) {
        return Err(param("orthogonality defect must be at least 1"));
    }
    let nf = n as f64;
    Ok(2.0 * nf + nf / 2.0 * libm::log2(c * c * nf / (2.0 * PI * E)) + libm::log2(dual_defect))
}

/// Largest symmetric bound whose coordinate fits in `bits` qubits, and
/// whether the coordinate is one-sided. A single qubit cannot encode
/// `[-1, 1]`, so it encodes `x_i` in `{0, 1}`.
pub fn bound_for_bits(bits: u32) -> (u64, bool) {
    match bits {
        0 => (0, false),
        1 => (1, true),
        b => ((1u64 << (b - 1).min(62)) - 1, false),
    }
}

/// Strategies for spreading a fixed number of qubits over the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingStrategy {
    /// `floor(m/n)` bits to every coefficient.
    Uniform,
    /// `floor(m/n)` bits everywhere plus one extra bit on `m mod n`
    /// coefficients drawn uniformly without replacement.
    UniformRandom,
    /// Dual-norm bounds at radius `gh`, shrunk until they fit the budget.
    DualScaled,
}

/// Naive bounds for `n` coefficients and a budget of `m_qubits`.
pub fn naive_mapping(
    n: usize,
    m_qubits: u64,
    strategy: MappingStrategy,
    b: &Basis,
    seed: u64,
) -> Result<BoundsVector> {
    if b.rank() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.rank(),
        });
    }
    match strategy {
        MappingStrategy::Uniform | MappingStrategy::UniformRandom => {
            if m_qubits < n as u64 {
                return Err(param(alloc::format!("{m_qubits} qubits cannot cover {n} coefficients")));
            }
            let base = (m_qubits / n as u64).min(64) as u32;
            let mut bits = vec![base; n];
            if strategy == MappingStrategy::UniformRandom {
                let extra = (m_qubits % n as u64) as usize;
                let mut rng = rng_from_seed(seed);
                for i in index::sample(&mut rng, n, extra) {
                    bits[i] += 1;
                }
            }
            let provenance = if strategy == MappingStrategy::Uniform {
                Provenance::Uniform
            } else {
                Provenance::UniformRandom
            };
            let (m, half): (Vec<u64>, Vec<bool>) = bits.into_iter().map(bound_for_bits).unzip();
            Ok(BoundsVector::new(m, provenance).with_one_sided(half))
        }
        MappingStrategy::DualScaled => {
            let g = b.gram();
            let full = dual_bounds_gram(&g, g.gaussian_heuristic(1.0))?;
            let mut out = if qubit_count(&full) <= m_qubits {
                full.m
            } else {
                // largest uniform scale factor that fits the budget
                let scaled = |s: f64| -> Vec<u64> { full.m.iter().map(|&m| libm::floor(m as f64 * s) as u64).collect() };
                let fits = |s: f64| qubit_count(&BoundsVector::new(scaled(s), Provenance::DualScaled)) <= m_qubits;
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if fits(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                scaled(lo)
            };
            out.truncate(n);
            Ok(BoundsVector::new(out, Provenance::DualScaled))
        }
    }
}

/// Whether some shortest vector (either sign) lies inside `bounds`.
pub fn shortest_in_bounds(g: &GramMatrix, bounds: &BoundsVector, budget: u64) -> Result<bool> {
    Ok(all_shortest_gram(g, budget)?.iter().any(|v| bounds.contains(&v.coeffs)))
}

/// Outcome of an inclusion-probability experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InclusionStats {
    pub included: usize,
    /// Instances where the check completed.
    pub evaluated: usize,
    /// Instances skipped because enumeration or generation failed.
    pub errors: usize,
}

impl InclusionStats {
    pub fn probability(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.included as f64 / self.evaluated as f64
        }
    }
}

/// Fraction of instances whose shortest vector lies in the box chosen by
/// `bounds_for`. `instance(i)` produces the `i`-th basis.
pub fn inclusion_probability<I, M>(count: usize, mut instance: I, mut bounds_for: M, budget: u64) -> InclusionStats
where
    I: FnMut(usize) -> Result<Basis>,
    M: FnMut(usize, &Basis) -> Result<BoundsVector>,
{
    let mut stats = InclusionStats::default();
    for i in 0..count {
        let outcome = instance(i).and_then(|b| {
            let bounds = bounds_for(i, &b)?;
            shortest_in_bounds(&b.gram(), &bounds, budget)
        });
        match outcome {
            Ok(hit) => {
                stats.evaluated += 1;
                stats.included += hit as usize;
            }
            Err(_) => stats.errors += 1,
        }
    }
    stats
}

/// Integer-to-binary encoding schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `x = -a + sum_{j<K} 2^j s_j + (2a + 1 - 2^K) s_K`, `K = floor(log2 2a)`;
    /// one-sided coordinates use `x = sum_{j<K} 2^j s_j + (a + 1 - 2^K) s_K`,
    /// `K = floor(log2 a)`.
    Plain,
    /// `x = -a + zeta a + omega (a + 1) + sum_{j<L} 2^j s_j + (a - 2^L) s_L`,
    /// `L = floor(log2 a)`, plus shared auxiliaries for the zero penalty.
    Penalty,
}

/// Affine layout of one coefficient: `x = offset + sum weight * bit`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoordinateLayout {
    pub bound: u64,
    pub one_sided: bool,
    pub offset: i64,
    /// `(global bit index, weight)`; the last entry carries the residual weight.
    pub bits: Vec<(usize, i64)>,
    /// Penalty scheme only: indices of the `zeta` and `omega` bits.
    pub zeta: Option<usize>,
    pub omega: Option<usize>,
}

/// Bit layout mapping bitstrings to coefficient vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegerEncoding {
    pub scheme: Scheme,
    pub coords: Vec<CoordinateLayout>,
    /// Penalty scheme only: the free auxiliaries `z_1 .. z_{n-2}`.
    pub aux: Vec<usize>,
    pub num_bits: usize,
}

/// Lay out the bits for `bounds` under `scheme`.
pub fn encode_integers(bounds: &BoundsVector, scheme: Scheme) -> Result<IntegerEncoding> {
    let mut next = 0usize;
    let mut take = || {
        next += 1;
        next - 1
    };
    let mut coords = Vec::with_capacity(bounds.len());
    for (i, &a) in bounds.m.iter().enumerate() {
        let ai = i64::try_from(a).ok().filter(|&v| v < 1 << 61).ok_or_else(|| param("bound too large"))?;
        let layout = match scheme {
            Scheme::Plain => {
                let half = bounds.one_sided[i];
                // values 0..=span are covered, then shifted by the offset
                let span = if half { ai } else { 2 * ai };
                let mut bits = Vec::new();
                if a > 0 {
                    let k = bounds.bits(i) - 1;
                    for j in 0..k {
                        bits.push((take(), 1i64 << j));
                    }
                    bits.push((take(), span + 1 - (1i64 << k)));
                }
                CoordinateLayout {
                    bound: a,
                    one_sided: half,
                    offset: if half { 0 } else { -ai },
                    bits,
                    zeta: None,
                    omega: None,
                }
            }
            Scheme::Penalty => {
                if a < 2 || bounds.one_sided[i] {
                    return Err(Error::UnsupportedBound { coord: i, bound: a });
                }
                let zeta = take();
                let omega = take();
                let l = 63 - a.leading_zeros();
                let mut bits = vec![(zeta, ai), (omega, ai + 1)];
                for j in 0..l {
                    bits.push((take(), 1i64 << j));
                }
                bits.push((take(), ai - (1i64 << l)));
                CoordinateLayout {
                    bound: a,
                    one_sided: false,
                    offset: -ai,
                    bits,
                    zeta: Some(zeta),
                    omega: Some(omega),
                }
            }
        };
        coords.push(layout);
    }
    let mut aux = Vec::new();
    if scheme == Scheme::Penalty {
        if bounds.len() < 2 {
            return Err(param("penalty encoding needs rank >= 2"));
        }
        aux = (0..bounds.len() - 2).map(|_| take()).collect();
    }
    Ok(IntegerEncoding {
        scheme,
        coords,
        aux,
        num_bits: next,
    })
}

impl IntegerEncoding {
    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn bounds(&self) -> BoundsVector {
        BoundsVector::new(self.coords.iter().map(|c| c.bound).collect(), Provenance::Custom)
            .with_one_sided(self.coords.iter().map(|c| c.one_sided).collect())
    }

    /// Decode a bitstring given as an index (bit `t` = `(idx >> t) & 1`).
    pub fn decode_index(&self, idx: u64) -> Vec<i64> {
        self.coords
            .iter()
            .map(|c| {
                c.offset
                    + c.bits
                        .iter()
                        .filter(|(t, _)| (idx >> t) & 1 == 1)
                        .map(|(_, w)| w)
                        .sum::<i64>()
            })
            .collect()
    }

    /// Index of the bitstring `bits`.
    pub fn index_of(bits: &[bool]) -> u64 {
        bits.iter().enumerate().fold(0, |acc, (t, &b)| acc | ((b as u64) << t))
    }

    /// Every bit pattern of one coordinate producing value `v`, as partial indices.
    fn coordinate_preimages(c: &CoordinateLayout, v: i64) -> Vec<u64> {
        let k = c.bits.len();
        (0u64..1 << k)
            .filter(|&mask| {
                c.offset
                    + c.bits
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| (mask >> j) & 1 == 1)
                        .map(|(_, (_, w))| w)
                        .sum::<i64>()
                    == v
            })
            .map(|mask| {
                c.bits
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (mask >> j) & 1 == 1)
                    .fold(0u64, |acc, (_, (t, _))| acc | 1 << t)
            })
            .collect()
    }

    /// All bitstring indices decoding to `x` (auxiliary bits free).
    pub fn preimages(&self, x: &[i64]) -> Vec<u64> {
        let mut out = vec![0u64];
        for (c, &v) in self.coords.iter().zip(x) {
            let local = Self::coordinate_preimages(c, v);
            if local.is_empty() {
                return Vec::new();
            }
            out = out.iter().flat_map(|&base| local.iter().map(move |&p| base | p)).collect();
        }
        for &t in &self.aux {
            out = out.iter().flat_map(|&base| [base, base | 1 << t]).collect();
        }
        out.sort_unstable();
        out
    }
}

/// Decode a bitstring into a coefficient vector.
pub fn decode_bitstring(bits: &[bool], enc: &IntegerEncoding) -> Result<Vec<BigInt>> {
    if bits.len() != enc.num_bits {
        return Err(Error::Dimension {
            expected: enc.num_bits,
            got: bits.len(),
        });
    }
    Ok(enc
        .coords
        .iter()
        .map(|c| {
            let mut v = BigInt::from(c.offset);
            for &(t, w) in &c.bits {
                if bits[t] {
                    v += w;
                }
            }
            v
        })
        .collect())
}

/// Quadratic pseudo-Boolean function `c + sum l_i s_i + sum_{i<j} q_ij s_i s_j`
/// with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuboProblem {
    pub num_vars: usize,
    pub constant: BigRational,
    pub linear: Vec<BigRational>,
    /// Keyed by `(i, j)` with `i < j`.
    pub quadratic: BTreeMap<(usize, usize), BigRational>,
}

/// `c + sum coef * var` over binary variables.
#[derive(Debug, Clone, Default)]
struct Affine {
    constant: BigRational,
    terms: Vec<(usize, BigRational)>,
}

impl Affine {
    fn constant(c: BigRational) -> Self {
        Affine {
            constant: c,
            terms: Vec::new(),
        }
    }

    fn var(t: usize) -> Self {
        Affine {
            constant: BigRational::zero(),
            terms: vec![(t, BigRational::one())],
        }
    }

    fn one_minus_var(t: usize) -> Self {
        Affine {
            constant: BigRational::one(),
            terms: vec![(t, -BigRational::one())],
        }
    }

    fn add(mut self, other: &Affine, sign: i32) -> Self {
        let s = BigRational::from_integer(BigInt::from(sign));
        self.constant += &other.constant * &s;
        self.terms.extend(other.terms.iter().map(|(t, c)| (*t, c * &s)));
        self
    }

    fn of_coordinate(c: &CoordinateLayout) -> Self {
        Affine {
            constant: BigRational::from_integer(c.offset.into()),
            terms: c
                .bits
                .iter()
                .map(|&(t, w)| (t, BigRational::from_integer(w.into())))
                .collect(),
        }
    }
}

impl QuboProblem {
    pub fn new(num_vars: usize) -> Self {
        QuboProblem {
            num_vars,
            constant: BigRational::zero(),
            linear: vec![BigRational::zero(); num_vars],
            quadratic: BTreeMap::new(),
        }
    }

    fn add_term(&mut self, i: usize, j: usize, c: BigRational) {
        if c.is_zero() {
            return;
        }
        if i == j {
            // s^2 = s for binary variables
            self.linear[i] += c;
        } else {
            let key = (i.min(j), i.max(j));
            let entry = self.quadratic.entry(key).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                self.quadratic.remove(&key);
            }
        }
    }

    /// Add `coef * a * b`.
    fn add_product(&mut self, a: &Affine, b: &Affine, coef: &BigRational) {
        self.constant += coef * &a.constant * &b.constant;
        for (t, c) in &a.terms {
            self.linear[*t] += coef * c * &b.constant;
        }
        for (t, c) in &b.terms {
            self.linear[*t] += coef * c * &a.constant;
        }
        for (s, cs) in &a.terms {
            for (t, ct) in &b.terms {
                self.add_term(*s, *t, coef * cs * ct);
            }
        }
    }

    pub fn evaluate(&self, bits: &[bool]) -> BigRational {
        let mut v = self.constant.clone();
        for (i, c) in self.linear.iter().enumerate() {
            if bits[i] {
                v += c;
            }
        }
        for ((i, j), c) in &self.quadratic {
            if bits[*i] && bits[*j] {
                v += c;
            }
        }
        v
    }

    pub fn evaluate_index(&self, idx: u64) -> BigRational {
        let bits: Vec<bool> = (0..self.num_vars).map(|t| (idx >> t) & 1 == 1).collect();
        self.evaluate(&bits)
    }
}

/// QUBO whose value at every bitstring is `x G x^T` for the decoded `x`.
pub fn build_qubo(g: &GramMatrix, enc: &IntegerEncoding) -> Result<QuboProblem> {
    let n = g.dim();
    if enc.rank() != n {
        return Err(Error::Dimension {
            expected: n,
            got: enc.rank(),
        });
    }
    let mut q = QuboProblem::new(enc.num_bits);
    let forms: Vec<Affine> = enc.coords.iter().map(Affine::of_coordinate).collect();
    for i in 0..n {
        for j in 0..n {
            let gij = BigRational::from_integer(g.get(i, j).clone());
            if !gij.is_zero() {
                q.add_product(&forms[i], &forms[j], &gij);
            }
        }
    }
    Ok(q)
}

/// The `z_i` of the zero-vector penalty, with `z_n = 1` and `z_{n-1} = zeta_n`.
fn penalty_z(enc: &IntegerEncoding, i: usize) -> Affine {
    let n = enc.rank();
    if i == n - 1 {
        Affine::constant(BigRational::one())
    } else if i == n - 2 {
        Affine::var(enc.coords[n - 1].zeta.unwrap())
    } else {
        Affine::var(enc.aux[i])
    }
}

/// `tau_i = -(1 - zeta_i) + sum_{k > i} (1 - zeta_k)`.
fn penalty_tau(enc: &IntegerEncoding, i: usize) -> Affine {
    let zeta = |k: usize| enc.coords[k].zeta.unwrap();
    let mut tau = Affine::default().add(&Affine::one_minus_var(zeta(i)), -1);
    for k in i + 1..enc.rank() {
        tau = tau.add(&Affine::one_minus_var(zeta(k)), 1);
    }
    tau
}

/// The penalty `P (1 + sum_i z_i tau_i)` as a QUBO over the encoding's bits.
pub fn penalty_qubo(enc: &IntegerEncoding, p: &BigRational) -> Result<QuboProblem> {
    if enc.scheme != Scheme::Penalty {
        return Err(param("penalty QUBO needs the penalty encoding"));
    }
    if !p.is_positive() {
        return Err(param("penalty weight must be positive"));
    }
    let mut q = QuboProblem::new(enc.num_bits);
    q.constant += p;
    for i in 0..enc.rank() {
        q.add_product(&penalty_z(enc, i), &penalty_tau(enc, i), p);
    }
    Ok(q)
}

/// Norm QUBO plus the zero-vector penalty: for `x != 0` the penalty can be
/// driven to zero by the auxiliaries, for `x = 0` it is at least `P`.
pub fn build_penalty_qubo(g: &GramMatrix, enc: &IntegerEncoding, p: &BigRational) -> Result<QuboProblem> {
    let mut q = build_qubo(g, enc)?;
    let pen = penalty_qubo(enc, p)?;
    q.constant += pen.constant;
    for (l, c) in q.linear.iter_mut().zip(pen.linear) {
        *l += c;
    }
    for ((i, j), c) in pen.quadratic {
        q.add_term(i, j, c);
    }
    Ok(q)
}

/// Minimum of the penalty term over the free auxiliaries for a fixed
/// `zeta` pattern (exhaustive; for tests and small ranks).
pub fn min_penalty_over_aux(zeta: &[bool], p: &BigRational) -> Result<BigRational> {
    let n = zeta.len();
    let bounds = BoundsVector::new(vec![2; n], Provenance::Custom);
    let enc = encode_integers(&bounds, Scheme::Penalty)?;
    let pen = penalty_qubo(&enc, p)?;
    let mut bits = vec![false; enc.num_bits];
    for (c, &z) in enc.coords.iter().zip(zeta) {
        bits[c.zeta.unwrap()] = z;
    }
    let mut best: Option<BigRational> = None;
    for mask in 0u64..1 << enc.aux.len() {
        for (k, &t) in enc.aux.iter().enumerate() {
            bits[t] = (mask >> k) & 1 == 1;
        }
        let v = pen.evaluate(&bits);
        if best.as_ref().map_or(true, |b| v < *b) {
            best = Some(v);
        }
    }
    Ok(best.unwrap())
}

/// Default penalty weight: twice the squared norm of the first LLL vector,
/// an upper bound on `2 lambda_1^2`.
pub fn default_penalty(g: &GramMatrix) -> Result<BigRational> {
    let u = crate::reduction::lll_gram(g, crate::reduction::DEFAULT_DELTA)?;
    let first = exact::quadratic_form(g.entries(), &u[0]);
    Ok(BigRational::from_integer(first * 2))
}

/// Diagonal Hamiltonian `c + sum h_i Z_i + sum_{i<j} J_ij Z_i Z_j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IsingHamiltonian {
    pub num_qubits: usize,
    pub constant: BigRational,
    pub h: Vec<BigRational>,
    pub j: BTreeMap<(usize, usize), BigRational>,
}

/// Substitute `s_i = (1 - Z_i) / 2`.
pub fn qubo_to_ising(q: &QuboProblem) -> IsingHamiltonian {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let mut constant = q.constant.clone();
    let mut h = vec![BigRational::zero(); q.num_vars];
    let mut j = BTreeMap::new();
    for (i, l) in q.linear.iter().enumerate() {
        constant += l * &half;
        h[i] -= l * &half;
    }
    for (&(a, b), c) in &q.quadratic {
        let c4 = c * &quarter;
        constant += &c4;
        h[a] -= &c4;
        h[b] -= &c4;
        j.insert((a, b), c4);
    }
    IsingHamiltonian {
        num_qubits: q.num_vars,
        constant,
        h,
        j,
    }
}

impl IsingHamiltonian {
    /// Exact eigenvalue on the computational basis state `idx`.
    pub fn energy_index(&self, idx: u64) -> BigRational {
        let z = |t: usize| if (idx >> t) & 1 == 1 { -1i32 } else { 1 };
        let mut v = self.constant.clone();
        for (t, c) in self.h.iter().enumerate() {
            if z(t) == 1 {
                v += c;
            } else {
                v -= c;
            }
        }
        for (&(a, b), c) in &self.j {
            if z(a) * z(b) == 1 {
                v += c;
            } else {
                v -= c;
            }
        }
        v
    }

    pub fn energy(&self, bits: &[bool]) -> BigRational {
        self.energy_index(IntegerEncoding::index_of(bits))
    }

    /// Every eigenvalue in index order, in double precision.
    pub fn energies_f64(&self) -> Vec<f64> {
        let n = self.num_qubits;
        let c = exact::ratio_to_f64(&self.constant);
        let h: Vec<f64> = self.h.iter().map(exact::ratio_to_f64).collect();
        let j: Vec<(usize, usize, f64)> = self
            .j
            .iter()
            .map(|(&(a, b), v)| (a, b, exact::ratio_to_f64(v)))
            .collect();
        (0u64..1 << n)
            .map(|idx| {
                let z = |t: usize| if (idx >> t) & 1 == 1 { -1.0 } else { 1.0 };
                let mut v = c;
                for (t, ht) in h.iter().enumerate() {
                    v += ht * z(t);
                }
                for &(a, b, jab) in &j {
                    v += jab * z(a) * z(b);
                }
                v
            })
            .collect()
    }
}

/// Bitstring indices decoding to any shortest non-zero vector of the
/// lattice that fits the encoding's box.
pub fn target_indices(g: &GramMatrix, enc: &IntegerEncoding, budget: u64) -> Result<(Vec<u64>, Option<EnumResult>)> {
    let shortest = all_shortest_gram(g, budget)?;
    let mut out = Vec::new();
    let mut hit = None;
    for v in &shortest {
        let x: Vec<i64> = v.coeffs.iter().map(|c| c.to_i64().unwrap_or(i64::MAX)).collect();
        let pre = enc.preimages(&x);
        if !pre.is_empty() && hit.is_none() {
            hit = Some(v.clone());
        }
        out.extend(pre);
    }
    out.sort_unstable();
    out.dedup();
    Ok((out, hit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sample_qary;
    use alloc::collections::BTreeSet;

    fn basis(rows: &[&[i64]]) -> Basis {
        Basis::from_i64(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn dual_bound_examples() {
        let id = basis(&[&[1, 0], &[0, 1]]);
        assert_eq!(dual_bounds(&id, 1.0).unwrap().m, vec![1, 1]);
        let b = basis(&[&[2, 0], &[1, 1]]);
        assert_eq!(dual_bounds(&b, 2.0).unwrap().m, vec![1, 2]);
    }

    #[test]
    fn bounds_from_reduced_dual_match_primal() {
        use crate::enumeration::EnumerationOracle;
        use crate::reduction::{reduce_dual, DualReduction};
        let g = sample_qary(10, 5, 257, 4).unwrap().gram();
        let red = reduce_dual(&g, DualReduction::Lll, &mut EnumerationOracle::default()).unwrap();
        let primal = g.transform(&red.primal_transform().unwrap());
        let gh = g.gaussian_heuristic(1.0);
        assert_eq!(
            dual_bounds_from_dual(&red.gram, &red.scale, gh).unwrap().m,
            dual_bounds_gram(&primal, gh).unwrap().m
        );
    }

    #[test]
    fn qubit_count_examples() {
        let bv = |m: &[u64]| BoundsVector::new(m.to_vec(), Provenance::Custom);
        assert_eq!(qubit_count(&bv(&[1, 1])), 4);
        assert_eq!(qubit_count(&bv(&[3])), 3);
        assert_eq!(qubit_count(&bv(&[0, 5])), 4);
    }

    #[test]
    fn budget_bound_example() {
        let v = qubit_budget_bound(2, 1.0, 1.0).unwrap();
        assert!((v - (4.0 + libm::log2(1.0 / (PI * E)))).abs() < 1e-12);
        assert!((v - 0.906).abs() < 1e-3);
        assert!(qubit_budget_bound(2, 2.0, 1.0).unwrap() > v);
    }

    #[test]
    fn naive_mapping_examples() {
        let b = sample_qary(8, 4, 17, 1).unwrap().truncate(4).unwrap();
        let u = naive_mapping(4, 8, MappingStrategy::Uniform, &b, 0).unwrap();
        assert_eq!(u.m, vec![1, 1, 1, 1]);
        let r = naive_mapping(4, 10, MappingStrategy::UniformRandom, &b, 5).unwrap();
        let mut sorted = r.m.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 1, 3, 3]);
        assert!(naive_mapping(4, 3, MappingStrategy::Uniform, &b, 0).is_err());
        let g = b.gram();
        let full = naive_mapping(4, u64::MAX, MappingStrategy::DualScaled, &b, 0).unwrap();
        assert_eq!(full.m, dual_bounds_gram(&g, g.gaussian_heuristic(1.0)).unwrap().m);
        let small = naive_mapping(4, 6, MappingStrategy::DualScaled, &b, 0).unwrap();
        assert!(qubit_count(&small) <= 6);
        // one qubit per coefficient: x_i in {0, 1}
        let one = naive_mapping(4, 4, MappingStrategy::Uniform, &b, 0).unwrap();
        assert_eq!(qubit_count(&one), 4);
        let big = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert!(one.contains(&big(&[1, 0, 1, 1])));
        assert!(!one.contains(&big(&[1, 0, -1, 1])));
        let enc = encode_integers(&one, Scheme::Plain).unwrap();
        assert_eq!(enc.num_bits, 4);
        assert_eq!(enc.decode_index(0b1011), vec![1, 1, 0, 1]);
    }

    #[test]
    fn one_sided_ranges() {
        for m in 1..20u64 {
            let bv = BoundsVector::new(vec![m], Provenance::Custom).with_one_sided(vec![true]);
            let enc = encode_integers(&bv, Scheme::Plain).unwrap();
            assert_eq!(enc.num_bits as u64, qubit_count(&bv));
            let mut seen: Vec<i64> = (0..1u64 << enc.num_bits).map(|i| enc.decode_index(i)[0]).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen, (0..=m as i64).collect::<Vec<_>>());
        }
    }

    #[test]
    fn plain_decode_tables() {
        let enc = encode_integers(&BoundsVector::new(vec![1], Provenance::Custom), Scheme::Plain).unwrap();
        assert_eq!(enc.num_bits, 2);
        let table: Vec<i64> = (0..4).map(|i| enc.decode_index(i)[0]).collect();
        // index bit 0 is s_0: 00 -> -1, s_0 = 1 -> 0, s_1 = 1 -> 0, both -> 1
        assert_eq!(table, vec![-1, 0, 0, 1]);
        let enc = encode_integers(&BoundsVector::new(vec![2], Provenance::Custom), Scheme::Plain).unwrap();
        assert_eq!(enc.num_bits, 3);
        let mut values: Vec<i64> = (0..8).map(|i| enc.decode_index(i)[0]).collect();
        values.sort();
        assert_eq!(values, vec![-2, -1, -1, 0, 0, 1, 1, 2]);
    }

    #[test]
    fn penalty_decode_ranges() {
        // zeta = omega = 1 decodes above the bound; every other pattern stays inside
        for a in 2..=9u64 {
            let enc = encode_integers(&BoundsVector::new(vec![a, 2], Provenance::Custom), Scheme::Penalty).unwrap();
            let c = &enc.coords[0];
            let (z, w) = (c.zeta.unwrap(), c.omega.unwrap());
            let (mut inside, mut over) = (BTreeSet::new(), BTreeSet::new());
            for idx in 0..1u64 << enc.num_bits {
                let x = enc.decode_index(idx)[0];
                if idx >> z & 1 == 1 && idx >> w & 1 == 1 {
                    over.insert(x);
                } else {
                    inside.insert(x);
                }
            }
            let ai = a as i64;
            assert_eq!(inside, (-ai..=ai).collect::<BTreeSet<_>>(), "a = {a}");
            assert_eq!(over, (ai + 1..=2 * ai).collect::<BTreeSet<_>>(), "a = {a}");
        }
    }

    #[test]
    fn penalty_variable_count() {
        let enc = encode_integers(&BoundsVector::new(vec![2; 4], Provenance::Custom), Scheme::Penalty).unwrap();
        assert_eq!(enc.num_bits, 18);
        assert!(matches!(
            encode_integers(&BoundsVector::new(vec![2, 1], Provenance::Custom), Scheme::Penalty),
            Err(Error::UnsupportedBound { coord: 1, bound: 1 })
        ));
        let all_zero = vec![false; enc.num_bits];
        let x = decode_bitstring(&all_zero, &enc).unwrap();
        assert!(x.iter().all(|v| *v == BigInt::from(-2)));
    }

    #[test]
    fn qubo_single_coordinate() {
        let g = basis(&[&[2]]).gram();
        let enc = encode_integers(&BoundsVector::new(vec![1], Provenance::Custom), Scheme::Plain).unwrap();
        let q = build_qubo(&g, &enc).unwrap();
        assert_eq!(q.constant, rat(4));
        assert_eq!(q.linear, vec![rat(-4), rat(-4)]);
        assert_eq!(q.quadratic.get(&(0, 1)), Some(&rat(8)));
        let h = qubo_to_ising(&q);
        assert_eq!(h.constant, rat(2));
        assert!(h.h.iter().all(Zero::is_zero));
        assert_eq!(h.j.get(&(0, 1)), Some(&rat(2)));
        assert_eq!(h.energy_index(0b00), rat(4));
        assert_eq!(h.energy_index(0b10), rat(0));
    }

    #[test]
    fn identity_sweep() {
        let g = basis(&[&[1, 0], &[0, 1]]).gram();
        let enc = encode_integers(&BoundsVector::new(vec![1, 1], Provenance::Custom), Scheme::Plain).unwrap();
        let q = build_qubo(&g, &enc).unwrap();
        let h = qubo_to_ising(&q);
        for idx in 0..16 {
            let x = enc.decode_index(idx);
            let norm: i64 = x.iter().map(|v| v * v).sum();
            assert_eq!(q.evaluate_index(idx), rat(norm));
            assert_eq!(h.energy_index(idx), rat(norm));
        }
    }

    #[test]
    fn penalty_min_over_aux() {
        let p = rat(7);
        assert_eq!(min_penalty_over_aux(&[true, true], &p).unwrap(), p);
        assert_eq!(min_penalty_over_aux(&[true, false, true], &p).unwrap(), rat(0));
    }

    #[test]
    fn targets_of_z2() {
        let g = basis(&[&[1, 0], &[0, 1]]).gram();
        let enc = encode_integers(&BoundsVector::new(vec![1, 1], Provenance::Custom), Scheme::Plain).unwrap();
        let (t, hit) = target_indices(&g, &enc, 1000).unwrap();
        assert_eq!(t.len(), 8);
        assert!(hit.is_some());
        let h = qubo_to_ising(&build_qubo(&g, &enc).unwrap());
        assert!(t.iter().all(|&i| h.energy_index(i) == rat(1)));
        let empty = encode_integers(&BoundsVector::new(vec![0, 0], Provenance::Custom), Scheme::Plain).unwrap();
        assert!(target_indices(&g, &empty, 1000).unwrap().0.is_empty());
    }
}
