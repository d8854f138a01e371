use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::estimation::{
    consensus, design_omega, design_params, gamma_perp, initial_states, step_estimator, AgentEstimatorState,
};
use crate::linalg::{matrix_power_c, norm_c, to_complex, CMatrix};
use crate::model::{blockwise_apply, eigenmode_basis, BasisKind, LtiModel};
use crate::security::{
    check_max_resilience, enumerate_budget_feasible, maxmin_phi, AnalysisOptions, SecurityAnalysis, SecurityIndex,
    SecurityMeasure,
};
use crate::sim::random::{
    random_common_costs, random_connected_graph, random_dynamics, random_system, ObservationPattern, RandomSystemSpec,
};
use crate::sim::{
    gen_noise, AttackKind, AttackSpec, DesiredState, EstimatorSpec, MeasureSource, NoiseStream, ScenarioConfig,
    TailWindow,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn spec(pattern: ObservationPattern) -> RandomSystemSpec {
    RandomSystemSpec {
        pattern,
        max_agents: 5,
        ..RandomSystemSpec::default()
    }
}

fn pattern_of(k: u8) -> ObservationPattern {
    match k % 3 {
        0 => ObservationPattern::Contiguous,
        1 => ObservationPattern::Subset,
        _ => ObservationPattern::Dense,
    }
}

fn random_secure<R: Rng>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random_bool(0.4)).collect()
}

fn secure_list(b: &[bool]) -> Vec<usize> {
    (0..b.len()).filter(|&i| b[i]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kronecker_lift_matches_blockwise(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let agents = r.random_range(1..=5);
        let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-2.0..2.0));
        let model = LtiModel::new(a, DMatrix::zeros(n, 1)).unwrap();
        let x = DVector::from_fn(n * agents, |_, _| r.random_range(-5.0..5.0));
        let lifted = DMatrix::<f64>::identity(agents, agents).kronecker(model.a()) * &x;
        let blockwise = blockwise_apply(&model, &x);
        prop_assert!((lifted - &blockwise).norm() <= 1e-12 * blockwise.norm().max(1.0));
    }

    #[test]
    fn laplacian_spectrum_of_connected_graphs(seed in any::<u64>(), n in 2usize..9) {
        let g = random_connected_graph(&mut rng(seed), n).unwrap();
        let scale = g.laplacian().norm();
        prop_assert!(g.eigenvalues()[0].abs() <= 1e-9 * scale);
        prop_assert!(g.lambda2() > 1e-9 * scale);
        for i in 0..n {
            prop_assert!(g.laplacian().row(i).sum().abs() == 0.0);
        }
    }

    #[test]
    fn basis_vectors_lie_in_generalized_eigenspaces(seed in any::<u64>(), jordan in any::<bool>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let a = random_dynamics(&mut r, n, 1.5, if jordan { 1.0 } else { 0.0 });
        let model = LtiModel::new(a.clone(), DMatrix::zeros(n, 1)).unwrap();
        let basis = eigenmode_basis(&model, 2, BasisKind::Jordan).unwrap();
        prop_assert_eq!(basis.len(), 2 * n);
        let ac = to_complex(&a);
        for m in basis.modes() {
            prop_assert!((norm_c(&m.vector) - 1.0).abs() < 1e-9);
            let shifted: CMatrix = &ac - CMatrix::identity(n, n) * m.eigenvalue;
            let residual = matrix_power_c(&shifted, n) * &m.vector;
            prop_assert!(norm_c(&residual) <= 1e-8, "residual {}", norm_c(&residual));
        }
        let eigen = eigenmode_basis(&model, 1, BasisKind::Eigen).unwrap();
        for m in eigen.modes() {
            let shifted: CMatrix = &ac - CMatrix::identity(n, n) * m.eigenvalue;
            prop_assert!(norm_c(&(shifted * &m.vector)) <= 1e-6);
        }
    }

    #[test]
    fn incidence_covering_matches_detectability(seed in any::<u64>(), pat in any::<u8>(), unstable in any::<bool>()) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, &spec(pattern_of(pat))).unwrap();
        let mut opts = AnalysisOptions::default();
        if unstable {
            opts.filter = crate::security::ModeFilter::Unstable;
        }
        let an = SecurityAnalysis::new(&sys, opts).unwrap();
        let h = an.incidence_matrix();
        for _ in 0..8 {
            let b = random_secure(&mut r, sys.agent_count());
            prop_assert_eq!(check_max_resilience(&h, &b).unwrap(), an.is_detectable(&secure_list(&b)));
        }
    }

    #[test]
    fn enlarging_secure_set_never_lowers_index(seed in any::<u64>(), pat in any::<u8>()) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, &spec(pattern_of(pat))).unwrap();
        let an = SecurityAnalysis::new(&sys, AnalysisOptions::default()).unwrap();
        let n = sys.agent_count();
        let mut b = vec![false; n];
        let mut prev = an.security_index(&SecurityMeasure::from_indicator(&b)).unwrap().index;
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
        for i in order {
            b[i] = true;
            let next = an.security_index(&SecurityMeasure::from_indicator(&b)).unwrap().index;
            prop_assert!(next >= prev, "{:?} -> {:?}", prev, next);
            prev = next;
        }
        prop_assert_eq!(prev, SecurityIndex::Infinite);
    }

    #[test]
    fn maxmin_score_equals_mode_index(seed in any::<u64>(), pat in any::<u8>()) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, &spec(pattern_of(pat))).unwrap();
        let an = SecurityAnalysis::new(&sys, AnalysisOptions::default()).unwrap();
        let costs = random_common_costs(&mut r, sys.agent_count()).unwrap();
        let feasible: Vec<_> = enumerate_budget_feasible(&costs).unwrap().collect();
        prop_assume!(!feasible.is_empty());
        let choice = maxmin_phi(&an.incidence_matrix(), &feasible, &costs).unwrap();
        let index = an.security_index(&SecurityMeasure::from_indicator(&choice.indicator)).unwrap().index;
        prop_assert_eq!(choice.alpha, index);
        for b in &feasible {
            let other = an.security_index(&SecurityMeasure::from_indicator(b)).unwrap().index;
            prop_assert!(other <= choice.alpha);
        }
    }

    #[test]
    fn consensus_round_contracts_disagreement(seed in any::<u64>(), n in 2usize..8) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n).unwrap();
        let omega = design_omega(&g).unwrap();
        let gamma = gamma_perp(&g).unwrap();
        let dim = 3;
        let mut v: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0))).collect();
        let mean = v.iter().fold(DVector::zeros(dim), |acc, x| acc + x) / n as f64;
        for x in &mut v {
            *x -= &mean;
        }
        let before: f64 = v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
        consensus(&g, &mut v, omega, 1);
        let after: f64 = v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
        prop_assert!(after <= (gamma + 1e-9) * before + 1e-12);
    }

    #[test]
    fn exact_initialization_is_a_fixed_point(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, &spec(ObservationPattern::Dense)).unwrap();
        let n_agents = sys.agent_count();
        let mut b = random_secure(&mut r, n_agents);
        b[0] = true;
        let measure = SecurityMeasure::from_indicator(&b);
        let kp = DMatrix::zeros(1, sys.state_dim());
        let params = design_params(&sys, &measure, kp, None, Some(3)).unwrap();
        let mut x = DVector::from_fn(sys.lifted_dim(), |_, _| r.random_range(-1.0..1.0));
        let mut states: Vec<AgentEstimatorState> =
            (0..n_agents).map(|i| AgentEstimatorState::new(&sys, i, x.clone()).unwrap()).collect();
        for _ in 0..20 {
            let u = DVector::from_fn(n_agents, |_, _| r.random_range(-1.0..1.0));
            x = sys.a_bar() * &x + sys.b_bar() * &u;
            let y = sys.c_bar() * &x;
            step_estimator(&mut states, &sys, &measure, &params, &u, &y).unwrap();
            for s in &states {
                prop_assert!((&s.xi_hat - &x).norm() <= 1e-9 * x.norm().max(1.0));
            }
        }
    }

    #[test]
    fn noise_respects_bound(seed in any::<u64>(), delta in 0.0f64..5.0, dim in 1usize..6, k in 0usize..10_000) {
        let w = gen_noise(seed, NoiseStream::Process, 3, k, dim, delta);
        prop_assert!(w.norm() <= delta);
        prop_assert_eq!(w, gen_noise(seed, NoiseStream::Process, 3, k, dim, delta));
    }
}

/// Small autonomous scenario on a random system with one fully observing secure agent.
fn small_scenario(seed: u64, pattern: ObservationPattern) -> ScenarioConfig {
    let mut r = rng(seed);
    let sys = random_system(&mut r, &spec(pattern)).unwrap();
    let n = sys.lifted_dim();
    let mut b = random_secure(&mut r, sys.agent_count());
    b[0] = true;
    let x0 = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
    ScenarioConfig {
        measure: MeasureSource::Fixed(SecurityMeasure::from_indicator(&b)),
        costs: None,
        estimator: EstimatorSpec {
            omega: None,
            rounds: Some(2),
            kp: DMatrix::zeros(1, sys.state_dim()),
        },
        horizon: 60,
        seed,
        attacks: Vec::new(),
        desired: DesiredState::Autonomous { initial: x0.clone() },
        delta_w: 0.05,
        delta_v: 0.05,
        x0,
        xi0: None,
        tail: TailWindow::default(),
        system: sys,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let cfg = small_scenario(seed, ObservationPattern::Dense);
        let a = crate::sim::run_scenario(&cfg).unwrap();
        let b = crate::sim::run_scenario(&cfg).unwrap();
        prop_assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn attacks_on_secure_agents_change_nothing_but_the_log(seed in any::<u64>(), k0 in 0usize..30) {
        let cfg = small_scenario(seed, ObservationPattern::Dense);
        let mut attacked = cfg.clone();
        attacked.attacks.push(AttackSpec { target: 0, kind: AttackKind::Zeroing, start: k0, end: 59 });
        let p = cfg.system.agent_output_dim(0);
        attacked.attacks.push(AttackSpec { target: 0, kind: AttackKind::Bias(DVector::from_element(p, 3.0)), start: 0, end: k0 });
        let a = crate::sim::run_scenario(&cfg).unwrap();
        let b = crate::sim::run_scenario(&attacked).unwrap();
        prop_assert_eq!(&a.trace.records, &b.trace.records);
        prop_assert!(!b.trace.blocked.is_empty());
    }
}

#[test]
fn secure_update_with_orthonormal_sensor_contracts() {
    // Single agent, C orthonormal and full rank: I - CᵀC = 0, so one step
    // recovers the state exactly (contraction factor θ₀‖A‖ = 0).
    let a = DMatrix::from_row_slice(2, 2, &[1.1, 0.3, 0.0, 0.9]);
    let model = LtiModel::new(a, DMatrix::zeros(2, 1)).unwrap();
    let theta = 0.7_f64;
    let c = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
    let sys = crate::model::lift_system(model, crate::model::CommGraph::from_edges(1, &[]).unwrap(), vec![c]).unwrap();
    let measure = SecurityMeasure::all_secure(1);
    let params = design_params(&sys, &measure, DMatrix::zeros(1, 2), None, None).unwrap();
    assert!(params.theta0 < 1e-12);
    let mut states = initial_states(&sys);
    let x = DVector::from_vec(vec![3.0, -1.0]);
    let x1 = sys.a_bar() * &x;
    step_estimator(
        &mut states,
        &sys,
        &measure,
        &params,
        &DVector::zeros(1),
        &(sys.c_bar() * &x1),
    )
    .unwrap();
    assert!((&states[0].xi_hat - &x1).norm() < 1e-12);
}

#[test]
fn synthesized_attack_replays_as_unattacked_twin() {
    use alloc::collections::BTreeMap;
    let mut r = rng(41);
    let mut done = 0;
    for _ in 0..2000 {
        if done == 15 {
            break;
        }
        let mut cfg = small_scenario(r.random(), ObservationPattern::Subset);
        let n_agents = cfg.system.agent_count();
        let secure = random_secure(&mut r, n_agents);
        if !secure.iter().any(|&s| s) || secure.iter().all(|&s| s) {
            continue;
        }
        let measure = SecurityMeasure::from_indicator(&secure);
        let an = SecurityAnalysis::new(&cfg.system, AnalysisOptions::default()).unwrap();
        if an.is_detectable(&measure.secure_set()) {
            continue;
        }
        done += 1;
        let attack = an.synthesize_undetectable_attack(&measure, cfg.horizon, None).unwrap();
        cfg.measure = MeasureSource::Fixed(measure.clone());
        cfg.delta_w = 0.0;
        cfg.delta_v = 0.0;
        cfg.desired = DesiredState::Autonomous {
            initial: DVector::zeros(cfg.system.lifted_dim()),
        };
        let mut twin = cfg.clone();
        twin.x0 = attack.x2.clone();
        cfg.x0 = attack.x1.clone();
        for i in measure.normal_set() {
            let block = cfg.system.output_block(i);
            let seq: BTreeMap<usize, DVector<f64>> = attack
                .signal
                .iter()
                .enumerate()
                .map(|(k, a)| (k, a.rows_range(block.clone()).into_owned()))
                .collect();
            cfg.attacks.push(AttackSpec {
                target: i,
                kind: AttackKind::Sequence(seq),
                start: 0,
                end: cfg.horizon - 1,
            });
        }
        let hit = crate::sim::run_scenario(&cfg).unwrap();
        let clean = crate::sim::run_scenario(&twin).unwrap();
        for (k, (ya, yb)) in hit.trace.outputs.iter().zip(&clean.trace.outputs).enumerate() {
            assert!((ya - yb).amax() <= 1e-9, "step {k}: gap {}", (ya - yb).amax());
        }
        for (a, b) in hit.trace.records.iter().zip(&clean.trace.records) {
            assert!((&a.x_hat - &b.x_hat).amax() <= 1e-9);
        }
    }
    assert_eq!(done, 15);
}
