//! Cross-module invariants checked on random inputs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use svp_vqe_core::encoding::*;
use svp_vqe_core::enumeration::*;
use svp_vqe_core::lattice::*;
use svp_vqe_core::reduction::*;
use svp_vqe_core::vqe::*;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

/// Full-rank integer bases with small entries.
fn small_basis(max_n: usize) -> impl Strategy<Value = Basis> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(-9i64..=9, n), n)
            .prop_filter_map("singular", |rows| Basis::from_i64(&rows).ok())
    })
}

fn lattice_equal(a: &Basis, b: &Basis) -> bool {
    // equal determinants and every row of `b` an integer combination of `a`
    let (ga, gb) = (a.gram(), b.gram());
    if ga.determinant() != gb.determinant() {
        return false;
    }
    let inv = ga.inverse().unwrap();
    b.rows().iter().all(|row| {
        // coefficients x with x B_a = row: x = (row B_a^T) G_a^{-1}
        let proj: Vec<BigRational> = a
            .rows()
            .iter()
            .map(|r| BigRational::from_integer(r.iter().zip(row).map(|(u, v)| u * v).sum::<BigInt>()))
            .collect();
        (0..a.rank()).all(|j| (0..a.rank()).map(|i| &proj[i] * &inv[i][j]).sum::<BigRational>().is_integer())
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn lll_preserves_lattice_and_is_reduced(b in small_basis(6)) {
        let r = lll(&b, DEFAULT_DELTA).unwrap();
        prop_assert!(lattice_equal(&b, &r.basis));
        let gso = gso(&r.basis).unwrap();
        let n = b.rank();
        for i in 1..n {
            for j in 0..i {
                prop_assert!(gso.mu[i][j].abs() <= 0.5 + 1e-9);
            }
            let lhs = gso.sq_norms[i];
            let rhs = (DEFAULT_DELTA - gso.mu[i][i - 1].powi(2)) * gso.sq_norms[i - 1];
            prop_assert!(lhs >= rhs - 1e-6 * rhs.abs());
        }
    }

    #[test]
    fn hkz_first_vector_is_shortest(b in small_basis(5)) {
        let mut oracle = EnumerationOracle::default();
        let h = hkz(&b, &mut oracle).unwrap();
        prop_assert!(lattice_equal(&b, &h));
        let sv = shortest_vector(&b).unwrap();
        let hg = h.gram();
        prop_assert_eq!(hg.get(0, 0), &sv.norm_sq);
    }

    #[test]
    fn dual_bounds_contain_every_short_vector(b in small_basis(5)) {
        let g = b.gram();
        let r = g.gaussian_heuristic(1.0);
        let bounds = dual_bounds_gram(&g, r).unwrap();
        for v in enumerate_ball_gram(&g, r, DEFAULT_NODE_BUDGET).unwrap() {
            prop_assert!(bounds.contains(&v.coeffs));
        }
    }

    #[test]
    fn plain_encoding_is_complete(m in prop::collection::vec(0u64..=9, 1..4), half in prop::collection::vec(any::<bool>(), 3)) {
        let one_sided: Vec<bool> = m.iter().zip(&half).map(|(&v, &h)| h && v > 0).collect();
        let bounds = BoundsVector::new(m.clone(), Provenance::Custom).with_one_sided(one_sided.clone());
        let enc = encode_integers(&bounds, Scheme::Plain).unwrap();
        prop_assert_eq!(enc.num_bits as u64, qubit_count(&bounds));
        // every bitstring decodes into the box
        let mut seen = std::collections::BTreeSet::new();
        for idx in 0..1u64 << enc.num_bits {
            let x = enc.decode_index(idx);
            let big: Vec<BigInt> = x.iter().map(|&v| v.into()).collect();
            prop_assert!(bounds.contains(&big));
            seen.insert(x);
        }
        // and every box point has a preimage
        let size: usize = m.iter().zip(&one_sided).map(|(&v, &h)| if h { v + 1 } else { 2 * v + 1 } as usize).product();
        prop_assert_eq!(seen.len(), size);
    }

    #[test]
    fn qubo_and_ising_agree_with_norm(b in small_basis(3), bits in 1u32..=3) {
        let n = b.rank();
        let bounds = naive_mapping(n, n as u64 * bits as u64, MappingStrategy::Uniform, &b, 0).unwrap();
        let enc = encode_integers(&bounds, Scheme::Plain).unwrap();
        let g = b.gram();
        let q = build_qubo(&g, &enc).unwrap();
        let h = qubo_to_ising(&q);
        for idx in 0..1u64 << enc.num_bits {
            let x: Vec<BigInt> = enc.decode_index(idx).into_iter().map(BigInt::from).collect();
            let norm = BigRational::from_integer(g.norm_sq(&x));
            prop_assert_eq!(&q.evaluate_index(idx), &norm);
            prop_assert_eq!(&h.energy_index(idx), &norm);
        }
    }

    #[test]
    fn ansatz_states_are_normalised(n in 1usize..=6, layers in 0usize..=3, seed in any::<u64>()) {
        let spec = AnsatzSpec::new(n, layers, Entangler::Ring).unwrap();
        let mut rng = svp_vqe_core::rng::rng_from_seed(seed);
        let theta: Vec<f64> = (0..spec.num_params()).map(|_| rand::Rng::gen::<f64>(&mut rng) * 7.0).collect();
        let s = apply_ansatz(&spec, &theta).unwrap();
        prop_assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cvar_one_is_mean(e in prop::collection::vec(-50.0f64..50.0, 1..40)) {
        let zero = vec![false; e.len()];
        prop_assert_eq!(shot_cost(&e, &zero, CostKind::Cvar(1.0)), shot_cost(&e, &zero, CostKind::Mean));
        prop_assert_eq!(shot_cost(&e, &zero, CostKind::ZeroExcludedMean), shot_cost(&e, &zero, CostKind::Mean));
    }

    #[test]
    fn exact_cvar_is_monotone_in_alpha(seed in any::<u64>()) {
        let spec = AnsatzSpec::new(4, 1, Entangler::Linear).unwrap();
        let mut rng = svp_vqe_core::rng::rng_from_seed(seed);
        let theta: Vec<f64> = (0..spec.num_params()).map(|_| rand::Rng::gen::<f64>(&mut rng) * 6.3).collect();
        let probs = apply_ansatz(&spec, &theta).unwrap().probabilities();
        let table = CostTable::new((0..16).map(|i| ((i * 7) % 11) as f64).collect(), vec![false; 16]);
        let mut last = f64::NEG_INFINITY;
        for a in [0.05, 0.1, 0.3, 0.6, 1.0] {
            let c = table.exact_cost(&probs, CostKind::Cvar(a));
            prop_assert!(c >= last - 1e-12);
            last = c;
        }
    }
}

#[test]
fn generation_is_deterministic() {
    assert_eq!(sample_qary(12, 6, 65537, 5).unwrap(), sample_qary(12, 6, 65537, 5).unwrap());
    assert_ne!(sample_qary(12, 6, 65537, 5).unwrap(), sample_qary(12, 6, 65537, 6).unwrap());
    assert_eq!(prepare_instance(16, 8, 65537, 8, 3).unwrap(), prepare_instance(16, 8, 65537, 8, 3).unwrap());
}

#[test]
fn vqe_runs_are_deterministic() {
    let b = prepare_instance(14, 7, 65537, 5, 1).unwrap();
    let bounds = naive_mapping(5, 5, MappingStrategy::Uniform, &b, 0).unwrap();
    let enc = encode_integers(&bounds, Scheme::Plain).unwrap();
    let p = VqeProblem::new(&b.gram(), enc, DEFAULT_MAX_QUBITS, DEFAULT_NODE_BUDGET).unwrap();
    let spec = AnsatzSpec::new(5, 2, Entangler::Linear).unwrap();
    let mode = CostMode::new(CostKind::ZeroExcludedCvar(0.2), Evaluation::Sampled { shots: 64, seed: 9 }).unwrap();
    let cfg = OptimizerConfig::default();
    let a = optimize(&p, &spec, &mode, &cfg, 100, 42).unwrap();
    let b2 = optimize(&p, &spec, &mode, &cfg, 100, 42).unwrap();
    assert_eq!(a, b2);
}

#[test]
fn penalty_term_vanishes_only_without_zero_flags() {
    let p = BigRational::from_integer(7.into());
    for n in 2..=5usize {
        for pattern in 0u32..1 << n {
            let zeta: Vec<bool> = (0..n).map(|i| pattern >> i & 1 == 1).collect();
            let expect = if zeta.iter().all(|&z| z) { p.clone() } else { BigRational::zero() };
            assert_eq!(min_penalty_over_aux(&zeta, &p).unwrap(), expect);
        }
    }
}
