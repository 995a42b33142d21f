//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use svp_vqe_core::encoding::{
    build_penalty_qubo, build_qubo, default_penalty, dual_bounds, encode_integers, naive_mapping, qubit_count,
    qubo_to_ising, target_indices, BoundsVector, IntegerEncoding, Scheme,
};
use svp_vqe_core::enumeration::EnumerationOracle;
use svp_vqe_core::lattice::{prepare_instance, sample_qary};
use svp_vqe_core::reduction::{bkz, dual_hkz, hkz, lll, pseudo_hkz, DEFAULT_DELTA};
use svp_vqe_core::vqe::{CostTable, VqeProblem};
use svp_vqe_core::Basis;

use crate::config::{ExperimentConfig, ReductionKind, Strategy};
use crate::error::{Error, Result};
use crate::formats::{self, parse_ratio, read_basis, write_table, HamiltonianFile, Table, VqeRecord};
use crate::harness;

/// Environment variable overriding the state-vector qubit guard.
pub const MAX_QUBITS_ENV: &str = "SVP_VQE_MAX_QUBITS";

#[derive(Debug, Parser)]
#[command(name = "svp-vqe", version, about = "Shortest vectors via emulated variational quantum algorithms")]
pub struct Cli {
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for tables and run records.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: all logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a q-ary basis, optionally LLL-reduced and cut to n rows.
    Gen(GenArgs),
    /// Reduce a basis.
    Reduce(ReduceArgs),
    /// Coefficient bounds and qubit count for a basis.
    Bounds(BoundsArgs),
    /// Build the QUBO (or Ising) Hamiltonian of a basis.
    Qubo(QuboArgs),
    /// Run VQE on one basis.
    Vqe(VqeArgs),
    /// Inclusion-probability table of the naive mappings.
    Inclusion(InclusionArgs),
    /// Qubit counts after dual reduction of q-ary lattices.
    Scaling(ScalingArgs),
    /// VQE over a list of CVaR levels.
    CvarSweep(CvarArgs),
    /// VQE across ranks.
    Campaign(CampaignArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 65537)]
    pub q: u64,
    /// Keep the first n rows of the LLL-reduced basis.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Lll,
    Bkz,
    Hkz,
    PseudoHkz,
    DualHkz,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Lll)]
    pub method: Method,
    #[arg(long, default_value_t = 10)]
    pub beta: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoxArgs {
    /// Ball radius for the dual-norm bounds: `gh` or a number.
    #[arg(long = "A", default_value = "gh")]
    pub a: String,
    /// Multiplier applied to the radius.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Use a naive mapping with this many qubits instead of dual bounds.
    #[arg(long)]
    pub qubits: Option<u64>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    pub strategy: StrategyArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Uniform,
    UniformRandom,
    DualScaled,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Uniform => Strategy::Uniform,
            StrategyArg::UniformRandom => Strategy::UniformRandom,
            StrategyArg::DualScaled => Strategy::DualScaled,
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub bounds: BoxArgs,
}

#[derive(Debug, Args)]
pub struct QuboArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub bounds: BoxArgs,
    /// Use the zero-vector penalty encoding.
    #[arg(long)]
    pub penalty: bool,
    /// Penalty weight: `auto` or a rational `p/q`.
    #[arg(long = "P", default_value = "auto")]
    pub p: String,
    /// Emit the Ising form instead of the QUBO.
    #[arg(long)]
    pub ising: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VqeArgs {
    /// Basis file; defines the target set.
    pub input: PathBuf,
    /// Hamiltonian interchange file with its encoding; defaults to the
    /// one-qubit-per-coefficient encoding of the basis.
    #[arg(long)]
    pub hamiltonian: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Evaluate costs on the exact output distribution.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct InclusionArgs {
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub reductions: Option<Vec<ReductionArg>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReductionArg {
    Lll,
    Bkz,
    PseudoHkz,
}

#[derive(Debug, Args)]
pub struct CvarArgs {
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub exact: bool,
}

/// Resolve the configuration: file, then global flags, then the environment.
fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_json(
            &std::fs::read_to_string(p).map_err(|source| Error::Io { path: p.clone(), source })?,
        )?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.to_string_lossy().into_owned();
    }
    if let Ok(v) = std::env::var(MAX_QUBITS_ENV) {
        cfg.vqe.max_qubits = v
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("{MAX_QUBITS_ENV} must be a non-negative integer")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn std::io::Write) -> Result<()> {
    match out {
        Some(p) => formats::write_text(p, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

fn choose_bounds(b: &Basis, args: &BoxArgs, seed: u64) -> Result<BoundsVector> {
    match args.qubits {
        Some(m) => {
            let strategy: Strategy = args.strategy.into();
            Ok(naive_mapping(b.rank(), m, strategy.into(), b, seed)?)
        }
        None => {
            let base = if args.a == "gh" {
                b.gram().gaussian_heuristic(1.0)
            } else {
                args.a
                    .parse::<f64>()
                    .map_err(|_| Error::Parameter(format!("--A must be `gh` or a number, got {:?}", args.a)))?
            };
            Ok(dual_bounds(b, args.c * base)?)
        }
    }
}

fn write_run_outputs(cfg: &ExperimentConfig, name: &str, table: &Table, out: &mut dyn std::io::Write) -> Result<()> {
    let path = Path::new(&cfg.out_dir).join(format!("{name}.csv"));
    write_table(&path, table, cfg)?;
    emit(None, &table.to_csv()?, out)
}

/// Run the CLI with parsed arguments, writing the main output to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let seed = cfg.seed;
    match cli.command {
        Command::Gen(a) => {
            let k = a.k.unwrap_or(a.d / 2);
            let b = match a.n {
                Some(n) => prepare_instance(a.d, k, a.q, n, seed)?,
                None => sample_qary(a.d, k, a.q, seed)?,
            };
            emit(a.out.as_deref(), &formats::format_basis(&b), out)
        }
        Command::Reduce(a) => {
            let b = read_basis(&a.input)?;
            let mut oracle = EnumerationOracle::default();
            let (reduced, note) = match a.method {
                Method::Lll => {
                    let r = lll(&b, a.delta)?;
                    (r.basis, format!("swaps={} defect={:.6e}", r.swaps, r.defect))
                }
                Method::Bkz => {
                    let r = bkz(&b, a.beta, &mut oracle)?;
                    (r.basis, format!("tours={} defect={:.6e}", r.tours, r.defect))
                }
                Method::Hkz => (hkz(&b, &mut oracle)?, String::new()),
                Method::PseudoHkz => (pseudo_hkz(&b, &mut oracle)?, String::new()),
                Method::DualHkz => {
                    let (r, s) = dual_hkz(&b, &mut oracle)?;
                    (r, format!("top_qubits={} max_qubits={} enumerations={}", s.top_qubits, s.max_qubits, s.enumerations))
                }
            };
            let defect = reduced.gram().orthogonality_defect();
            eprintln!("defect={defect:.6e} {note}");
            emit(a.out.as_deref(), &formats::format_basis(&reduced), out)
        }
        Command::Bounds(a) => {
            let b = read_basis(&a.input)?;
            let bounds = choose_bounds(&b, &a.bounds, seed)?;
            let m: Vec<String> = bounds.m.iter().map(|v| v.to_string()).collect();
            emit(None, &format!("m = [{}]\nN = {}\n", m.join(" "), qubit_count(&bounds)), out)
        }
        Command::Qubo(a) => {
            let b = read_basis(&a.input)?;
            let g = b.gram();
            let bounds = choose_bounds(&b, &a.bounds, seed)?;
            let (q, enc) = if a.penalty {
                let enc = encode_integers(&bounds, Scheme::Penalty)?;
                let p: BigRational = if a.p == "auto" { default_penalty(&g)? } else { parse_ratio(&a.p)? };
                (build_penalty_qubo(&g, &enc, &p)?, enc)
            } else {
                let enc = encode_integers(&bounds, Scheme::Plain)?;
                (build_qubo(&g, &enc)?, enc)
            };
            let file = if a.ising {
                HamiltonianFile::from_ising(&qubo_to_ising(&q), Some(&enc))
            } else {
                HamiltonianFile::from_qubo(&q, Some(&enc))
            };
            emit(a.out.as_deref(), &(serde_json::to_string_pretty(&file)? + "\n"), out)
        }
        Command::Vqe(a) => {
            let mut cfg = cfg;
            if let Some(al) = a.alpha {
                cfg.vqe.alpha = al;
            }
            if let Some(l) = a.layers {
                cfg.vqe.layers = l;
            }
            cfg.vqe.exact |= a.exact;
            cfg.validate()?;
            let b = read_basis(&a.input)?;
            let problem = match &a.hamiltonian {
                None => harness::vqe_problem(&cfg, &b)?,
                Some(p) => problem_from_file(&cfg, &b, &formats::read_json(p)?)?,
            };
            let r = harness::run_vqe(&cfg, &problem, cfg.vqe.alpha, seed)?;
            let record = VqeRecord::from(&r);
            let dir = Path::new(&cfg.out_dir);
            formats::write_json(&dir.join("vqe_run.json"), &record)?;
            append_vqe_row(&dir.join("vqe_runs.csv"), &record)?;
            emit(None, &(serde_json::to_string_pretty(&record)? + "\n"), out)
        }
        Command::Inclusion(a) => {
            let mut cfg = cfg;
            if let Some(r) = a.ranks {
                cfg.inclusion.ranks = r;
            }
            if let Some(c) = a.count {
                cfg.inclusion.count = c;
            }
            cfg.validate()?;
            let pool = harness::thread_pool(cfg.jobs)?;
            let (_, t) = harness::run_inclusion_table(&cfg, &pool)?;
            write_run_outputs(&cfg, "inclusion", &t, out)
        }
        Command::Scaling(a) => {
            let mut cfg = cfg;
            if let Some(d) = a.dims {
                cfg.scaling.dims = d;
            }
            if let Some(s) = a.seeds {
                cfg.scaling.seeds = s;
            }
            if let Some(r) = a.reductions {
                cfg.scaling.reductions = r
                    .into_iter()
                    .map(|r| match r {
                        ReductionArg::Lll => ReductionKind::Lll,
                        ReductionArg::Bkz => ReductionKind::Bkz,
                        ReductionArg::PseudoHkz => ReductionKind::PseudoHkz,
                    })
                    .collect();
            }
            cfg.validate()?;
            let pool = harness::thread_pool(cfg.jobs)?;
            let (_, t) = harness::run_qubit_scaling(&cfg, &pool)?;
            write_run_outputs(&cfg, "scaling", &t, out)
        }
        Command::CvarSweep(a) => {
            let mut cfg = cfg;
            if let Some(r) = a.rank {
                cfg.cvar.rank = r;
            }
            if let Some(c) = a.count {
                cfg.cvar.count = c;
            }
            if let Some(al) = a.alphas {
                cfg.cvar.alphas = al;
            }
            cfg.vqe.exact |= a.exact;
            cfg.validate()?;
            let pool = harness::thread_pool(cfg.jobs)?;
            let (_, t) = harness::run_cvar_sweep(&cfg, &pool)?;
            write_run_outputs(&cfg, "cvar_sweep", &t, out)
        }
        Command::Campaign(a) => {
            let mut cfg = cfg;
            if let Some(r) = a.ranks {
                cfg.campaign.ranks = r;
            }
            if let Some(c) = a.count {
                cfg.campaign.count = c;
            }
            cfg.vqe.exact |= a.exact;
            cfg.validate()?;
            let pool = harness::thread_pool(cfg.jobs)?;
            let (_, t) = harness::run_vqe_campaign(&cfg, &pool)?;
            write_run_outputs(&cfg, "campaign", &t, out)
        }
    }
}

/// VQE problem from an interchange file; the basis supplies the target set.
fn problem_from_file(cfg: &ExperimentConfig, b: &Basis, file: &HamiltonianFile) -> Result<VqeProblem> {
    let enc: IntegerEncoding = file
        .encoding()?
        .ok_or_else(|| Error::Parameter("the Hamiltonian file has no encoding".into()))?;
    if enc.rank() != b.rank() || enc.num_bits != file.n_vars {
        return Err(Error::Parameter("Hamiltonian encoding does not match the basis".into()));
    }
    if enc.num_bits > cfg.vqe.max_qubits {
        return Err(svp_vqe_core::Error::TooManyQubits {
            qubits: enc.num_bits,
            limit: cfg.vqe.max_qubits,
        }
        .into());
    }
    let gram = b.gram();
    let hamiltonian = file.to_ising()?;
    let table = CostTable::for_encoding(&hamiltonian, &enc);
    let (targets, shortest) = target_indices(&gram, &enc, cfg.vqe.enum_budget)?;
    Ok(VqeProblem {
        gram,
        encoding: enc,
        hamiltonian,
        table,
        targets,
        shortest,
    })
}

fn append_vqe_row(path: &Path, r: &VqeRecord) -> Result<()> {
    let columns = ["seed", "iterations", "evaluations", "converged", "final_cost", "overlap", "success", "best_norm_sq"];
    let fresh = !path.exists();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
    }
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|source| Error::Io { path: path.into(), source })?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(columns)?;
    }
    w.write_record([
        r.seed.to_string(),
        r.iterations.to_string(),
        r.evaluations.to_string(),
        r.converged.to_string(),
        formats::fmt_f64(r.final_cost),
        formats::fmt_f64(r.overlap),
        r.success.to_string(),
        r.best_norm_sq.clone().unwrap_or_default(),
    ])?;
    w.flush().map_err(|source| Error::Io { path: path.into(), source })?;
    Ok(())
}

/// Parse `args`, run, and map the outcome to a process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli, out) {
        Ok(()) => {
            let _ = out.flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_global_flags_anywhere() {
        let cli = Cli::try_parse_from(["svp-vqe", "gen", "--d", "4", "--seed", "3", "--jobs", "2"]).unwrap();
        assert_eq!(cli.seed, Some(3));
        assert_eq!(cli.jobs, Some(2));
        assert!(matches!(cli.command, Command::Gen(GenArgs { d: 4, .. })));
    }

    #[test]
    fn unknown_method_is_usage_error() {
        let mut sink = Vec::new();
        assert_eq!(main_with(["svp-vqe", "reduce", "x.txt", "--method", "magic"], &mut sink), 2);
    }
}
