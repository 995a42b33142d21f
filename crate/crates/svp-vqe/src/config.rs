//! Experiment configuration, readable from and writable to JSON.

use serde::{Deserialize, Serialize};
use svp_vqe_core::encoding::MappingStrategy;
use svp_vqe_core::reduction::DualReduction;
use svp_vqe_core::vqe::{Entangler, OptimizerConfig, DEFAULT_MAX_QUBITS};

use crate::error::{Error, Result};

/// How rank-`n` instances are produced: `d = n + d_extra`, `k = d / 2`,
/// modulus `q`, then LLL and the first `n` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    pub q: u64,
    pub d_extra: usize,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig { q: 65537, d_extra: 10 }
    }
}

impl InstanceConfig {
    pub fn dims(&self, n: usize) -> (usize, usize) {
        let d = n + self.d_extra;
        (d, d / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Uniform,
    UniformRandom,
    DualScaled,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::UniformRandom => "uniform-random",
            Strategy::DualScaled => "dual-scaled",
        }
    }
}

impl From<Strategy> for MappingStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Uniform => MappingStrategy::Uniform,
            Strategy::UniformRandom => MappingStrategy::UniformRandom,
            Strategy::DualScaled => MappingStrategy::DualScaled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InclusionConfig {
    pub ranks: Vec<usize>,
    /// Qubit budgets as multiples of the rank (1 = one qubit per coefficient).
    pub qubits_per_coefficient: Vec<u64>,
    pub strategies: Vec<Strategy>,
    pub count: usize,
}

impl Default for InclusionConfig {
    fn default() -> Self {
        InclusionConfig {
            ranks: vec![15, 20, 25],
            qubits_per_coefficient: vec![1],
            strategies: vec![Strategy::Uniform, Strategy::UniformRandom, Strategy::DualScaled],
            count: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionKind {
    Lll,
    Bkz,
    PseudoHkz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub dims: Vec<usize>,
    pub seeds: usize,
    pub reductions: Vec<ReductionKind>,
    pub bkz_beta: usize,
    pub q: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            dims: vec![40, 60, 80],
            seeds: 5,
            reductions: vec![ReductionKind::Lll],
            bkz_beta: 10,
            q: 65537,
        }
    }
}

impl ScalingConfig {
    pub fn method(&self, kind: ReductionKind) -> DualReduction {
        match kind {
            ReductionKind::Lll => DualReduction::Lll,
            ReductionKind::Bkz => DualReduction::Bkz(self.bkz_beta),
            ReductionKind::PseudoHkz => DualReduction::PseudoHkz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntanglerKind {
    Linear,
    Ring,
}

impl From<EntanglerKind> for Entangler {
    fn from(e: EntanglerKind) -> Self {
        match e {
            EntanglerKind::Linear => Entangler::Linear,
            EntanglerKind::Ring => Entangler::Ring,
        }
    }
}

/// Settings shared by every VQE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqeConfig {
    pub layers: usize,
    pub entangler: EntanglerKind,
    pub alpha: f64,
    /// Use the exact output distribution instead of sampling.
    pub exact: bool,
    /// Shots per sampled cost evaluation.
    pub shots: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub patience: usize,
    pub restarts: usize,
    /// Samples drawn from the final state when extracting a solution.
    pub final_samples: usize,
    pub max_qubits: usize,
    /// Node budget for the enumerations that build target sets.
    pub enum_budget: u64,
}

impl Default for VqeConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        VqeConfig {
            layers: 2,
            entangler: EntanglerKind::Linear,
            alpha: 0.175,
            exact: false,
            shots: 512,
            max_iterations: opt.max_iterations,
            tolerance: opt.tolerance,
            patience: opt.patience,
            restarts: opt.restarts,
            final_samples: 5000,
            max_qubits: DEFAULT_MAX_QUBITS,
            enum_budget: svp_vqe_core::enumeration::DEFAULT_NODE_BUDGET,
        }
    }
}

impl VqeConfig {
    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            patience: self.patience,
            restarts: self.restarts,
            max_qubits: self.max_qubits,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvarConfig {
    pub rank: usize,
    pub count: usize,
    pub alphas: Vec<f64>,
    /// `S` in the success probability `1 - (1 - overlap)^S`.
    pub samples: u64,
}

impl Default for CvarConfig {
    fn default() -> Self {
        CvarConfig {
            rank: 16,
            count: 64,
            alphas: vec![0.05, 0.1, 0.175, 0.25, 0.5, 0.75, 1.0],
            samples: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub ranks: Vec<usize>,
    pub count: usize,
    pub samples: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            ranks: vec![6, 8, 10, 12, 14, 16],
            count: 32,
            samples: 5000,
        }
    }
}

/// Every parameter of every experiment; all randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; `None` uses every logical core.
    pub jobs: Option<usize>,
    pub out_dir: String,
    pub instance: InstanceConfig,
    pub inclusion: InclusionConfig,
    pub scaling: ScalingConfig,
    pub vqe: VqeConfig,
    pub cvar: CvarConfig,
    pub campaign: CampaignConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            jobs: None,
            out_dir: "out".into(),
            instance: InstanceConfig::default(),
            inclusion: InclusionConfig::default(),
            scaling: ScalingConfig::default(),
            vqe: VqeConfig::default(),
            cvar: CvarConfig::default(),
            campaign: CampaignConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1");
        }
        if self.instance.q < 2 {
            return bad("q must be at least 2");
        }
        let alphas = self.cvar.alphas.iter().chain([&self.vqe.alpha]);
        if alphas.clone().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return bad("every alpha must lie in (0, 1]");
        }
        if self.vqe.shots == 0 || self.vqe.final_samples == 0 {
            return bad("shot counts must be positive");
        }
        if self.inclusion.ranks.iter().any(|&n| n == 0 || n > svp_vqe_core::enumeration::MAX_RANK) {
            return bad("inclusion ranks must lie in 1..=32");
        }
        if self.scaling.dims.iter().any(|&n| n < 2) {
            return bad("scaling dimensions must be at least 2");
        }
        Ok(())
    }
}
