//! Batch experiments: inclusion tables, qubit scaling, CVaR sweeps and VQE
//! campaigns. Work is split by instance, each instance gets a seed derived
//! from the master seed and its index, and results are folded in index
//! order, so outputs do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use svp_vqe_core::encoding::{
    dual_bounds_from_dual, encode_integers, naive_mapping, qubit_count, BoundsVector, MappingStrategy, Scheme,
};
use svp_vqe_core::enumeration::{all_shortest_gram, EnumerationOracle};
use svp_vqe_core::lattice::{prepare_instance, sample_qary};
use svp_vqe_core::reduction::reduce_dual;
use svp_vqe_core::rng::derive_seed;
use svp_vqe_core::vqe::{optimize, success_probability, AnsatzSpec, CostKind, CostMode, Evaluation, VqeProblem, VqeRunResult};
use svp_vqe_core::Basis;

use crate::config::{ExperimentConfig, ReductionKind, Strategy};
use crate::error::{Error, Result};
use crate::formats::{fmt_f64, Table};

pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| Error::Parameter(e.to_string()))
}

/// Map `f` over `0..count` in parallel, keeping index order.
fn par_map<T: Send>(pool: &rayon::ThreadPool, count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

/// Seed of instance `i` in a batch keyed by `key` (e.g. the rank).
pub fn instance_seed(master: u64, key: u64, i: usize) -> u64 {
    derive_seed(derive_seed(master, key), i as u64)
}

/// The rank-`n` sublattice instance used by the inclusion and VQE experiments.
pub fn instance(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<Basis> {
    let (d, k) = cfg.instance.dims(n);
    Ok(prepare_instance(d, k, cfg.instance.q, n, seed)?)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Sample standard deviation (zero below two values).
fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    if s.len() % 2 == 1 {
        s[k]
    } else {
        0.5 * (s[k - 1] + s[k])
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionRow {
    pub rank: usize,
    pub qubits: u64,
    pub strategy: Strategy,
    pub probability: f64,
    /// Instances evaluated (errors excluded).
    pub count: usize,
    pub errors: usize,
    pub seed0: u64,
}

/// Probability that a shortest vector lies in the naive search box, per
/// (rank, qubit budget, strategy).
pub fn run_inclusion_table(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<(Vec<InclusionRow>, Table)> {
    let ic = &cfg.inclusion;
    let mut rows = Vec::new();
    for &n in &ic.ranks {
        let seeds: Vec<u64> = (0..ic.count).map(|i| instance_seed(cfg.seed, n as u64, i)).collect();
        // (basis, shortest vectors) per instance, computed once per rank
        let data = par_map(pool, ic.count, |i| -> Result<_> {
            let b = instance(cfg, n, seeds[i])?;
            let short = all_shortest_gram(&b.gram(), cfg.vqe.enum_budget)?;
            Ok((b, short))
        });
        for &per in &ic.qubits_per_coefficient {
            let qubits = per * n as u64;
            for &strategy in &ic.strategies {
                let hits = par_map(pool, ic.count, |i| -> Result<bool> {
                    let Ok((b, short)) = &data[i] else {
                        return Err(Error::Parameter("instance preparation failed".into()));
                    };
                    let bounds = naive_mapping(n, qubits, strategy.into(), b, derive_seed(seeds[i], 1))?;
                    Ok(short.iter().any(|v| bounds.contains(&v.coeffs)))
                });
                let evaluated: Vec<bool> = hits.iter().filter_map(|h| h.as_ref().ok().copied()).collect();
                rows.push(InclusionRow {
                    rank: n,
                    qubits,
                    strategy,
                    probability: evaluated.iter().filter(|&&h| h).count() as f64 / evaluated.len().max(1) as f64,
                    count: evaluated.len(),
                    errors: hits.len() - evaluated.len(),
                    seed0: seeds.first().copied().unwrap_or(0),
                });
            }
        }
    }
    let mut t = Table::new(&["rank", "qubits", "strategy", "probability", "count", "seed0", "errors"]);
    for r in &rows {
        t.push(vec![
            r.rank.to_string(),
            r.qubits.to_string(),
            r.strategy.name().into(),
            fmt_f64(r.probability),
            r.count.to_string(),
            r.seed0.to_string(),
            r.errors.to_string(),
        ]);
    }
    Ok((rows, t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub reduction: ReductionKind,
    pub mean_qubits: f64,
    pub std: f64,
    /// Seeds whose reduction failed (budget or numerical trouble).
    pub failures: usize,
    pub skipped: bool,
}

impl ReductionKind {
    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::Lll => "lll",
            ReductionKind::Bkz => "bkz",
            ReductionKind::PseudoHkz => "pseudo-hkz",
        }
    }
}

/// Qubits for enumerating a radius-`gh` ball of a full q-ary lattice
/// (`k = n / 2`) after reducing its dual.
pub fn qubits_after_dual_reduction(n: usize, q: u64, seed: u64, method: svp_vqe_core::reduction::DualReduction) -> Result<u64> {
    let g = sample_qary(n, n / 2, q, seed)?.gram();
    let red = reduce_dual(&g, method, &mut EnumerationOracle::default())?;
    let bounds = dual_bounds_from_dual(&red.gram, &red.scale, g.gaussian_heuristic(1.0))?;
    Ok(qubit_count(&bounds))
}

pub fn run_qubit_scaling(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<(Vec<ScalingRow>, Table)> {
    let sc = &cfg.scaling;
    let mut rows = Vec::new();
    for &n in &sc.dims {
        for &kind in &sc.reductions {
            let counts = par_map(pool, sc.seeds, |j| {
                qubits_after_dual_reduction(n, sc.q, instance_seed(cfg.seed, n as u64, j), sc.method(kind))
            });
            let ok: Vec<f64> = counts.iter().filter_map(|c| c.as_ref().ok().map(|&c| c as f64)).collect();
            rows.push(ScalingRow {
                n,
                reduction: kind,
                mean_qubits: mean(&ok),
                std: std_dev(&ok),
                failures: counts.len() - ok.len(),
                skipped: ok.is_empty(),
            });
        }
    }
    let mut t = Table::new(&["n", "reduction", "mean_qubits", "std", "failures", "skipped"]);
    for r in &rows {
        t.push(vec![
            r.n.to_string(),
            r.reduction.name().into(),
            fmt_f64(r.mean_qubits),
            fmt_f64(r.std),
            r.failures.to_string(),
            r.skipped.to_string(),
        ]);
    }
    Ok((rows, t))
}

/// Observables of one VQE run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub instance_seed: u64,
    pub overlap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// A shortest vector was among the final-state samples.
    pub success: bool,
    /// Number of target bitstrings (zero when the box misses every shortest vector).
    pub targets: usize,
}

/// Bounds for the naive one-qubit-per-coefficient mapping.
pub fn one_bit_bounds(b: &Basis) -> Result<BoundsVector> {
    Ok(naive_mapping(b.rank(), b.rank() as u64, MappingStrategy::Uniform, b, 0)?)
}

/// Build the one-bit VQE problem for a basis.
pub fn vqe_problem(cfg: &ExperimentConfig, b: &Basis) -> Result<VqeProblem> {
    let enc = encode_integers(&one_bit_bounds(b)?, Scheme::Plain)?;
    Ok(VqeProblem::new(&b.gram(), enc, cfg.vqe.max_qubits, cfg.vqe.enum_budget)?)
}

pub fn cost_mode(cfg: &ExperimentConfig, alpha: f64, seed: u64) -> Result<CostMode> {
    let evaluation = if cfg.vqe.exact {
        Evaluation::Exact
    } else {
        Evaluation::Sampled {
            shots: cfg.vqe.shots,
            seed,
        }
    };
    Ok(CostMode::new(CostKind::ZeroExcludedCvar(alpha), evaluation)?)
}

/// Run VQE on a prepared problem.
pub fn run_vqe(cfg: &ExperimentConfig, problem: &VqeProblem, alpha: f64, seed: u64) -> Result<VqeRunResult> {
    let spec = AnsatzSpec::new(problem.encoding.num_bits, cfg.vqe.layers, cfg.vqe.entangler.into())?;
    let mode = cost_mode(cfg, alpha, derive_seed(seed, 2))?;
    Ok(optimize(problem, &spec, &mode, &cfg.vqe.optimizer(), cfg.vqe.final_samples, seed)?)
}

/// One instance of rank `n`: prepare, encode with one bit per coefficient,
/// optimise the zero-excluded CVaR cost.
pub fn vqe_trial(cfg: &ExperimentConfig, n: usize, alpha: f64, seed: u64) -> Result<TrialOutcome> {
    let b = instance(cfg, n, seed)?;
    let problem = vqe_problem(cfg, &b)?;
    let r = run_vqe(cfg, &problem, alpha, derive_seed(seed, 3))?;
    Ok(TrialOutcome {
        instance_seed: seed,
        overlap: r.overlap,
        iterations: r.iterations,
        converged: r.converged,
        success: r.success,
        targets: problem.targets.len(),
    })
}

/// Aggregates of a batch of VQE runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub rank: usize,
    pub alpha: f64,
    /// Instances that completed.
    pub count: usize,
    pub errors: usize,
    pub non_converged: usize,
    pub mean_overlap: f64,
    pub median_overlap: f64,
    pub std_overlap: f64,
    pub mean_iterations: f64,
    pub std_iterations: f64,
    /// `S` of the success probability.
    pub samples: u64,
    /// Mean over instances of `1 - (1 - overlap)^S`.
    pub success_probability: f64,
    /// Fraction of instances where sampling the final state found a target.
    pub solved_fraction: f64,
    pub outcomes: Vec<TrialOutcome>,
}

pub fn summarize(rank: usize, alpha: f64, samples: u64, outcomes: Vec<Result<TrialOutcome>>) -> CampaignSummary {
    let errors = outcomes.iter().filter(|o| o.is_err()).count();
    let ok: Vec<TrialOutcome> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let ov: Vec<f64> = ok.iter().map(|o| o.overlap).collect();
    let it: Vec<f64> = ok.iter().map(|o| o.iterations as f64).collect();
    let ps: Vec<f64> = ov.iter().map(|&o| success_probability(o, samples)).collect();
    CampaignSummary {
        rank,
        alpha,
        count: ok.len(),
        errors,
        non_converged: ok.iter().filter(|o| !o.converged).count(),
        mean_overlap: mean(&ov),
        median_overlap: median(&ov),
        std_overlap: std_dev(&ov),
        mean_iterations: mean(&it),
        std_iterations: std_dev(&it),
        samples,
        success_probability: mean(&ps),
        solved_fraction: ok.iter().filter(|o| o.success).count() as f64 / ok.len().max(1) as f64,
        outcomes: ok,
    }
}

/// VQE at a list of CVaR levels on the same instances.
pub fn run_cvar_sweep(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<(Vec<CampaignSummary>, Table)> {
    let cc = &cfg.cvar;
    let mut out = Vec::new();
    for &alpha in &cc.alphas {
        let outcomes = par_map(pool, cc.count, |i| vqe_trial(cfg, cc.rank, alpha, instance_seed(cfg.seed, cc.rank as u64, i)));
        out.push(summarize(cc.rank, alpha, cc.samples, outcomes));
    }
    let mut t = Table::new(&["alpha", "mean_overlap", "median_overlap", "p5000", "count", "errors", "non_converged"]);
    for s in &out {
        t.push(vec![
            fmt_f64(s.alpha),
            fmt_f64(s.mean_overlap),
            fmt_f64(s.median_overlap),
            fmt_f64(s.success_probability),
            s.count.to_string(),
            s.errors.to_string(),
            s.non_converged.to_string(),
        ]);
    }
    Ok((out, t))
}

/// VQE at the configured CVaR level across ranks.
pub fn run_vqe_campaign(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<(Vec<CampaignSummary>, Table)> {
    let cc = &cfg.campaign;
    let mut out = Vec::new();
    for &n in &cc.ranks {
        let outcomes = par_map(pool, cc.count, |i| vqe_trial(cfg, n, cfg.vqe.alpha, instance_seed(cfg.seed, n as u64, i)));
        out.push(summarize(n, cfg.vqe.alpha, cc.samples, outcomes));
    }
    let mut t = Table::new(&[
        "rank",
        "mean_overlap",
        "std_overlap",
        "mean_iters",
        "std_iters",
        "count",
        "success_probability",
        "errors",
    ]);
    for s in &out {
        t.push(vec![
            s.rank.to_string(),
            fmt_f64(s.mean_overlap),
            fmt_f64(s.std_overlap),
            fmt_f64(s.mean_iterations),
            fmt_f64(s.std_iterations),
            s.count.to_string(),
            fmt_f64(s.success_probability),
            s.errors.to_string(),
        ]);
    }
    Ok((out, t))
}
