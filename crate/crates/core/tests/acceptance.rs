//! Acceptance checks. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secest_core::estimation::{
    build_extended_error_system, design_omega, design_params, initial_states, step_estimator,
};
use secest_core::model::{lift_system, CommGraph, LtiModel, MultiAgentSystem};
use secest_core::security::{
    brute_force_plan, efficient_plan, is_totally_unimodular, solve_relaxed_security_lp, AnalysisOptions, CostModel,
    SecurityAnalysis, SecurityIndex, SecurityMeasure, SecurityPlan,
};
use secest_core::sim::random::{
    random_common_costs, random_connected_graph, random_system, ObservationPattern, RandomSystemSpec,
};
use secest_core::sim::{
    build_platoon, gen_noise, run_scenario, AttackKind, AttackSpec, DesiredState, EstimatorSpec, MeasureSource,
    NoiseStream, ScenarioConfig, TailWindow,
};

const PLATOON_RUNTIME_LIMIT: Duration = Duration::from_secs(1);
const OMEGA_TARGET: f64 = 0.3017;
const OMEGA_TOL: f64 = 5e-5;
const RANDOM_PLAN_INSTANCES: usize = 200;
const RANDOM_PLAN_RUNTIME_LIMIT: Duration = Duration::from_secs(60);
const INTEGRALITY_TOL: f64 = 1e-6;
const WITNESS_INSTANCES: usize = 50;
const WITNESS_STEPS: usize = 100;
const WITNESS_TOL: f64 = 1e-9;
const NOISELESS_STEPS: usize = 5000;
const NOISELESS_TAIL_TOL: f64 = 1e-6;
const BOUND_RUNS: usize = 50;
const BOUND_SLACK: f64 = 1e-6;
const EXTENDED_INSTANCES: usize = 20;
const EXTENDED_TOL: f64 = 1e-9;
const SPEEDUP_AT_TWELVE: f64 = 10.0;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn platoon_costs(n: usize, budget: f64) -> CostModel {
    CostModel::uniform(n, 1.0, 30.0, budget).unwrap()
}

fn platoon_plan(n: usize, budget: f64) -> Result<(SecurityPlan, SecurityPlan, Duration, Duration), String> {
    let cfg = build_platoon(n, 0.01, 0.0, 0.0, None).map_err(e2s)?;
    let an = SecurityAnalysis::new(&cfg.system, AnalysisOptions::default()).map_err(e2s)?;
    let costs = platoon_costs(n, budget);
    let t = Instant::now();
    let brute = brute_force_plan(&an, &costs).map_err(e2s)?;
    let t_brute = t.elapsed();
    let t = Instant::now();
    let eff = efficient_plan(&an, &costs).map_err(e2s)?;
    let t_eff = t.elapsed();
    Ok((brute, eff, t_brute, t_eff))
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let (brute, eff, _, _) = platoon_plan(5, 150.0)?;
    let elapsed = start.elapsed();
    for plan in [&brute, &eff] {
        ensure(
            plan.measure.to_string() == "SNSNS" && plan.index == SecurityIndex::Infinite,
            || {
                format!(
                    "{} returned {} with index {}",
                    plan.algorithm.name(),
                    plan.measure,
                    plan.index
                )
            },
        )?;
    }
    ensure(elapsed < PLATOON_RUNTIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("both planners return SNSNS, index inf, {elapsed:?}"))
}

fn criterion_2() -> Check {
    // Neighbour sets {2,3}, {1,3,4}, {1,2,4,5}, {2,3,5}, {3,4} (0-based below).
    let edges = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)];
    let graph = CommGraph::from_edges(5, &edges).map_err(e2s)?;
    let omega = design_omega(&graph).map_err(e2s)?;
    ensure((omega - OMEGA_TARGET).abs() <= OMEGA_TOL, || {
        format!("omega = {omega:.6}, expected {OMEGA_TARGET} +/- {OMEGA_TOL}")
    })?;
    Ok(format!("omega = {omega:.6}"))
}

fn criterion_3() -> Check {
    for n in 3..=8 {
        let cfg = build_platoon(n, 0.01, 0.0, 0.0, None).map_err(e2s)?;
        let an = SecurityAnalysis::new(&cfg.system, AnalysisOptions::default()).map_err(e2s)?;
        let none = an.security_index(&SecurityMeasure::all_normal(n)).map_err(e2s)?.index;
        ensure(none == SecurityIndex::Finite(1), || {
            format!("N={n}: empty secure set has index {none}")
        })?;
        let last = SecurityMeasure::from_secure_set(n, &[n - 1]).map_err(e2s)?;
        let last_idx = an.security_index(&last).map_err(e2s)?.index;
        ensure(last_idx == SecurityIndex::Finite(2), || {
            format!("N={n}: securing vehicle N gives {last_idx}")
        })?;

        let one_secure = 30.0 + (n - 1) as f64;
        let alternating = n.div_ceil(2) as f64 * 30.0 + (n / 2) as f64;
        for (budget, want) in [
            (one_secure, SecurityIndex::Finite(2)),
            (alternating, SecurityIndex::Infinite),
        ] {
            let costs = platoon_costs(n, budget);
            for plan in [
                brute_force_plan(&an, &costs).map_err(e2s)?,
                efficient_plan(&an, &costs).map_err(e2s)?,
            ] {
                ensure(plan.index == want, || {
                    format!(
                        "N={n}, budget {budget}: {} gives {} ({})",
                        plan.algorithm.name(),
                        plan.index,
                        plan.measure
                    )
                })?;
            }
        }
    }
    Ok("indices 1, 2, inf for N = 3..8".into())
}

fn criterion_4() -> Check {
    let cfg = build_platoon(5, 0.01, 0.0, 0.0, None).map_err(e2s)?;
    let an = SecurityAnalysis::new(&cfg.system, AnalysisOptions::default()).map_err(e2s)?;
    let h = an.incidence_matrix();
    #[rustfmt::skip]
    let expected = DMatrix::from_row_slice(10, 5, &[
        1, 1, 0, 0, 0,
        1, 1, 0, 0, 0,
        0, 1, 1, 0, 0,
        0, 1, 1, 0, 0,
        0, 0, 1, 1, 0,
        0, 0, 1, 1, 0,
        0, 0, 0, 1, 1,
        0, 0, 0, 1, 1,
        0, 0, 0, 0, 1,
        0, 0, 0, 0, 1i64,
    ]);
    ensure(h.matrix() == &expected, || format!("H = {}", h.matrix()))?;
    let tu = is_totally_unimodular(h.matrix()).map_err(e2s)?;
    ensure(tu, || "H reported not totally unimodular".into())?;
    Ok("H matches and is TU".into())
}

struct PlanCorpusReport {
    mismatches: Vec<String>,
    fractional: Vec<String>,
    elapsed: Duration,
}

/// Shared corpus for criteria 5 and 6: random systems with TU incidence and
/// common costs.
fn plan_corpus() -> Result<PlanCorpusReport, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC0_0005);
    let mut report = PlanCorpusReport {
        mismatches: Vec::new(),
        fractional: Vec::new(),
        elapsed: Duration::ZERO,
    };
    let start = Instant::now();
    let mut done = 0;
    let mut attempt = 0;
    while done < RANDOM_PLAN_INSTANCES {
        attempt += 1;
        ensure(attempt < 20 * RANDOM_PLAN_INSTANCES, || {
            "too few TU instances generated".into()
        })?;
        let pattern = if attempt % 2 == 0 {
            ObservationPattern::Contiguous
        } else {
            ObservationPattern::Subset
        };
        let spec = RandomSystemSpec {
            pattern,
            ..RandomSystemSpec::default()
        };
        let sys = random_system(&mut rng, &spec).map_err(e2s)?;
        let an = SecurityAnalysis::new(&sys, AnalysisOptions::default()).map_err(e2s)?;
        let h = an.incidence_matrix();
        if is_totally_unimodular(h.matrix()) != Ok(true) {
            continue;
        }
        done += 1;
        let costs = random_common_costs(&mut rng, sys.agent_count()).map_err(e2s)?;
        let brute = brute_force_plan(&an, &costs).map_err(e2s)?;
        match efficient_plan(&an, &costs) {
            Ok(eff) if eff.index == brute.index && (eff.cost - brute.cost).abs() <= 1e-9 * brute.cost.max(1.0) => {}
            Ok(eff) => report.mismatches.push(format!(
                "instance {done}: brute {} / {} vs efficient {} / {}",
                brute.index, brute.cost, eff.index, eff.cost
            )),
            Err(e) => report
                .mismatches
                .push(format!("instance {done}: efficient failed: {e}")),
        }
        let lp = solve_relaxed_security_lp(&h, &costs).map_err(e2s)?;
        if let Some(v) = lp
            .vertex
            .iter()
            .find(|v| v.abs().min((1.0 - **v).abs()) > INTEGRALITY_TOL)
        {
            report.fractional.push(format!("instance {done}: vertex entry {v}"));
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

fn criterion_5(corpus: &Result<PlanCorpusReport, String>) -> Check {
    let r = corpus.as_ref().map_err(Clone::clone)?;
    ensure(r.mismatches.is_empty(), || r.mismatches.join("; "))?;
    ensure(r.elapsed < RANDOM_PLAN_RUNTIME_LIMIT, || {
        format!("took {:?}", r.elapsed)
    })?;
    Ok(format!("{RANDOM_PLAN_INSTANCES} instances agree, {:?}", r.elapsed))
}

fn criterion_6(corpus: &Result<PlanCorpusReport, String>) -> Check {
    let r = corpus.as_ref().map_err(Clone::clone)?;
    ensure(r.fractional.is_empty(), || r.fractional.join("; "))?;
    Ok(format!("{RANDOM_PLAN_INSTANCES} LP vertices integral"))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC0_0007);
    let mut done = 0;
    let mut attempt = 0;
    let mut worst: f64 = 0.0;
    while done < WITNESS_INSTANCES {
        attempt += 1;
        ensure(attempt < 100 * WITNESS_INSTANCES, || {
            "too few undetectable instances".into()
        })?;
        let pattern = [
            ObservationPattern::Contiguous,
            ObservationPattern::Subset,
            ObservationPattern::Dense,
        ][attempt % 3];
        let sys = random_system(
            &mut rng,
            &RandomSystemSpec {
                pattern,
                ..RandomSystemSpec::default()
            },
        )
        .map_err(e2s)?;
        let n_agents = sys.agent_count();
        let secure: Vec<usize> = (0..n_agents).filter(|_| rng.random_bool(0.3)).collect();
        let an = SecurityAnalysis::new(&sys, AnalysisOptions::default()).map_err(e2s)?;
        if an.is_detectable(&secure) {
            continue;
        }
        done += 1;
        let measure = SecurityMeasure::from_secure_set(n_agents, &secure).map_err(e2s)?;
        let attack = an
            .synthesize_undetectable_attack(&measure, WITNESS_STEPS, None)
            .map_err(e2s)?;
        for &i in &secure {
            for a in &attack.signal {
                ensure(a.rows_range(sys.output_block(i)).iter().all(|v| *v == 0.0), || {
                    format!("instance {done}: attack touches secure agent {i}")
                })?;
            }
        }
        // Attacked plant from x1 and unattacked twin from x2, same inputs.
        let mut x_att = attack.x1.clone();
        let mut x_twin = attack.x2.clone();
        for (k, a) in attack.signal.iter().enumerate() {
            let y_att = sys.c_bar() * &x_att + a;
            let y_twin = sys.c_bar() * &x_twin;
            let gap = (y_att - y_twin).amax();
            worst = worst.max(gap);
            ensure(gap <= WITNESS_TOL, || {
                format!("instance {done}, step {k}: output gap {gap:e}")
            })?;
            let u = DVector::from_fn(sys.b_bar().ncols(), |_, _| rng.random_range(-1.0..1.0));
            x_att = sys.a_bar() * &x_att + sys.b_bar() * &u;
            x_twin = sys.a_bar() * &x_twin + sys.b_bar() * &u;
        }
    }
    Ok(format!("{WITNESS_INSTANCES} witnesses, worst output gap {worst:.2e}"))
}

fn criterion_8() -> Check {
    let mut cfg = build_platoon(5, 0.01, 0.0, 0.0, Some(platoon_costs(5, 150.0))).map_err(e2s)?;
    cfg.horizon = NOISELESS_STEPS;
    let out = run_scenario(&cfg).map_err(e2s)?;
    let tail = out.summary.eq7_tail;
    ensure(tail < NOISELESS_TAIL_TOL, || format!("tail metric {tail:e}"))?;
    Ok(format!("tail metric {tail:.2e} with {}", out.measure))
}

/// Random 3-agent instance whose first agent is secure and senses the whole
/// lifted state through `s·Q`, `Q` orthogonal, so `θ₀ = |1 - s²|`.
fn bounded_instance(rng: &mut ChaCha8Rng) -> Result<ScenarioConfig, String> {
    let n = rng.random_range(1..=3);
    let agents = 3;
    let nn = n * agents;
    let raw: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let scale = rng.random_range(0.5..0.95) / raw.clone().singular_values().max().max(1e-6);
    let a = raw * scale;
    let kp = &a - DMatrix::identity(n, n) * 0.5;
    let model = LtiModel::new(a, DMatrix::identity(n, n)).map_err(e2s)?;
    let graph = random_connected_graph(rng, agents).map_err(e2s)?;
    let q = DMatrix::from_fn(nn, nn, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let s = rng.random_range(0.85..1.15);
    let mut c = vec![q * s];
    for _ in 1..agents {
        let p = rng.random_range(1..=n);
        c.push(DMatrix::from_fn(p, nn, |_, _| rng.random_range(-1.0..1.0)));
    }
    let system: MultiAgentSystem = lift_system(model, graph, c).map_err(e2s)?;
    let x0 = DVector::from_fn(nn, |_, _| rng.random_range(-2.0..2.0));
    let initial = DVector::from_fn(nn, |_, _| rng.random_range(-2.0..2.0));
    let mut secure = vec![true, false, false];
    secure[2] = rng.random_bool(0.5);
    Ok(ScenarioConfig {
        system,
        costs: None,
        measure: MeasureSource::Fixed(SecurityMeasure::from_indicator(&secure)),
        estimator: EstimatorSpec {
            omega: None,
            rounds: None,
            kp,
        },
        horizon: 1000,
        seed: rng.random(),
        attacks: Vec::new(),
        desired: DesiredState::Autonomous { initial },
        delta_w: rng.random_range(0.01..0.2),
        delta_v: rng.random_range(0.01..0.2),
        x0,
        xi0: None,
        tail: TailWindow::default(),
    })
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC0_0009);
    let mut kept = 0;
    let mut attempt = 0;
    let mut worst_est: f64 = 0.0;
    let mut worst_ctrl: f64 = 0.0;
    let mut violating = Vec::new();
    while kept < BOUND_RUNS {
        attempt += 1;
        ensure(attempt < 20 * BOUND_RUNS, || {
            format!("only {kept} instances satisfy the hypotheses")
        })?;
        let mut cfg = bounded_instance(&mut rng)?;
        // A secure third agent without full sensing would raise θ₀ to 1.
        cfg.measure = MeasureSource::Fixed(SecurityMeasure::from_indicator(&[true, false, false]));
        let out = match run_scenario(&cfg) {
            Ok(out) => out,
            Err(_) => continue,
        };
        if !(out.extended_stable && out.bounds.stable) {
            continue;
        }
        kept += 1;
        let start = cfg.tail.start(cfg.horizon);
        let mut est: f64 = 0.0;
        let mut ctrl: f64 = 0.0;
        for r in out.trace.records.iter().filter(|r| r.k >= start) {
            est = est.max(r.err_est - out.bounds.est_bound);
            ctrl = ctrl.max(r.err_ctrl - out.bounds.ctrl_bound);
            worst_est = worst_est.max(r.err_est / out.bounds.est_bound);
            worst_ctrl = worst_ctrl.max(r.err_ctrl / out.bounds.ctrl_bound);
        }
        if est > BOUND_SLACK || ctrl > BOUND_SLACK {
            violating.push(kept);
        }
    }
    let ratios = format!("largest tail error/bound: estimation {worst_est:.3}, control {worst_ctrl:.3}");
    ensure(violating.is_empty(), || {
        format!(
            "{} of {BOUND_RUNS} runs exceed a bound (runs {violating:?}); {ratios}",
            violating.len()
        )
    })?;
    Ok(format!("{BOUND_RUNS} runs within bounds; {ratios}"))
}

fn criterion_10() -> Check {
    let mut cfg = build_platoon(5, 0.01, 0.1, 0.1, None).map_err(e2s)?;
    cfg.measure = MeasureSource::Fixed("SNSNS".parse().map_err(e2s)?);
    cfg.horizon = 1000;
    cfg.seed = 7;
    let clean = run_scenario(&cfg).map_err(e2s)?;
    let mut attacked = cfg.clone();
    attacked.attacks = vec![
        AttackSpec {
            target: 0,
            kind: AttackKind::Zeroing,
            start: 100,
            end: 400,
        },
        AttackSpec {
            target: 2,
            kind: AttackKind::Bias(DVector::from_element(4, 25.0)),
            start: 0,
            end: 999,
        },
        AttackSpec {
            target: 4,
            kind: AttackKind::Bias(DVector::from_element(4, -3.0)),
            start: 500,
            end: 700,
        },
    ];
    let hit = run_scenario(&attacked).map_err(e2s)?;
    ensure(clean.trace.records == hit.trace.records, || "traces differ".into())?;
    ensure(!hit.trace.blocked.is_empty(), || "no blocked attack was logged".into())?;
    Ok(format!(
        "traces identical, {} blocked attack steps logged",
        hit.trace.blocked.len()
    ))
}

fn criterion_11() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC0_0011);
    let mut worst: f64 = 0.0;
    for inst in 0..EXTENDED_INSTANCES {
        let spec = RandomSystemSpec {
            min_agents: 3,
            max_agents: 3,
            pattern: ObservationPattern::Subset,
            ..RandomSystemSpec::default()
        };
        let sys = random_system(&mut rng, &spec).map_err(e2s)?;
        let mut secure: Vec<bool> = (0..3).map(|_| rng.random_bool(0.5)).collect();
        secure[rng.random_range(0..3)] = true;
        let measure = SecurityMeasure::from_indicator(&secure);
        let kp = DMatrix::zeros(sys.input_dim(), sys.state_dim());
        let rounds = rng.random_range(1..=4);
        let params = design_params(&sys, &measure, kp, None, Some(rounds)).map_err(e2s)?;
        let ext = build_extended_error_system(&sys, &measure, &params).map_err(e2s)?;
        let nn = sys.lifted_dim();
        let mut states = initial_states(&sys);
        let mut x = DVector::from_fn(nn, |_, _| rng.random_range(-1.0..1.0));
        let stacked = |states: &[secest_core::estimation::AgentEstimatorState], x: &DVector<f64>| {
            let mut e = DVector::zeros(nn * 3);
            for (i, s) in states.iter().enumerate() {
                e.rows_mut(i * nn, nn).copy_from(&(&s.xi_hat - x));
            }
            e
        };
        let mut e = stacked(&states, &x);
        for k in 1..=30 {
            let w = gen_noise(inst as u64, NoiseStream::Process, 0, k - 1, nn, 0.1);
            let v = gen_noise(inst as u64, NoiseStream::Measurement, 0, k, sys.output_dim(), 0.1);
            let u = DVector::from_fn(sys.b_bar().ncols(), |_, _| rng.random_range(-1.0..1.0));
            x = sys.a_bar() * &x + sys.b_bar() * &u + &w;
            let y = sys.c_bar() * &x + &v;
            step_estimator(&mut states, &sys, &measure, &params, &u, &y).map_err(e2s)?;
            let direct = stacked(&states, &x);
            e = ext.step(&e, &w, &v);
            let gap = (&direct - &e).amax() / direct.amax().max(1.0);
            worst = worst.max(gap);
            ensure(gap <= EXTENDED_TOL, || {
                format!("instance {inst}, step {k}: gap {gap:e}")
            })?;
        }
    }
    Ok(format!(
        "{EXTENDED_INSTANCES} instances, worst relative gap {worst:.2e}"
    ))
}

fn criterion_12() -> Check {
    let mut lines = Vec::new();
    let mut ratio = 0.0;
    for n in 5..=12 {
        let (brute, eff, t_brute, t_eff) = platoon_plan(n, 30.0 * n as f64)?;
        ensure(brute.index == eff.index && brute.cost == eff.cost, || {
            format!("N={n}: planners disagree")
        })?;
        ratio = t_brute.as_secs_f64() / t_eff.as_secs_f64().max(1e-9);
        lines.push(format!(
            "N={n} brute {:.1}ms efficient {:.2}ms",
            t_brute.as_secs_f64() * 1e3,
            t_eff.as_secs_f64() * 1e3
        ));
    }
    let detail = lines.join(", ");
    ensure(ratio >= SPEEDUP_AT_TWELVE, || {
        format!("speedup {ratio:.1}x at N=12 ({detail})")
    })?;
    Ok(format!("speedup {ratio:.0}x at N=12 ({detail})"))
}

fn main() -> ExitCode {
    let corpus = plan_corpus();
    let results: Vec<(usize, Check)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5(&corpus)),
        (6, criterion_6(&corpus)),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10()),
        (11, criterion_11()),
        (12, criterion_12()),
    ];
    let mut failed = 0;
    for (id, r) in &results {
        match r {
            Ok(msg) => println!("criterion {id:>2}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2}: FAIL  {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
