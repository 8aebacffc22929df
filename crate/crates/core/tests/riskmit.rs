use std::sync::OnceLock;

use hrrt_core::bench::generate_tasks;
use hrrt_core::bench::rng::{task_rng, uniform_index, unit_f64};
use hrrt_core::fixtures;
use hrrt_core::model::{Domain, FailureCase, GroundTaskSpec, ModelHypothesis, Severity};
use hrrt_core::planner::{ground, solve, Limits, Plan, Strategy, DEFAULT_MAX_GROUND_ACTIONS};
use hrrt_core::riskmit::*;

fn lunar_head() -> ModelHypothesis {
    static HEAD: OnceLock<ModelHypothesis> = OnceLock::new();
    HEAD.get_or_init(|| fixtures::template("lunar").unwrap().scripted_workspace(10).1).clone()
}

fn random_vec(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| unit_f64(r) * 4.0 - 2.0).collect()
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = task_rng(3, "gradient", 0);
    for _ in 0..100 {
        let dim = 2 + uniform_index(&mut r, 5);
        let n = 3 + uniform_index(&mut r, 8);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut r, dim)).collect();
        let problem = Binary {
            xs: xs.iter().map(Vec::as_slice).collect(),
            ys: (0..n).map(|_| f64::from(u8::from(unit_f64(&mut r) < 0.5))).collect(),
            ss: (0..n).map(|_| 0.5 + unit_f64(&mut r)).collect(),
            l2: 1e-2,
        };
        let w = random_vec(&mut r, dim);
        let g = problem.gradient(&w);
        let h = 1e-5;
        for j in 0..dim {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[j] += h;
            minus[j] -= h;
            let numeric = (problem.loss(&plus) - problem.loss(&minus)) / (2.0 * h);
            let rel = (g[j] - numeric).abs() / g[j].abs().max(numeric.abs()).max(1e-8);
            assert!(rel <= 1e-5, "component {j}: analytic {} numeric {numeric} rel {rel}", g[j]);
        }
    }
}

#[test]
fn argmax_matches_brute_force_and_is_scale_invariant() {
    let mut r = task_rng(4, "argmax", 0);
    let actions = action_vocabulary();
    let mut m = ActionUtilityModel::zero(&actions, 6);
    for w in &mut m.weights {
        *w = random_vec(&mut r, 6);
    }
    let mut scaled = m.clone();
    for w in scaled.weights.iter_mut().flatten() {
        *w *= 3.5;
    }
    for _ in 0..1000 {
        let x = random_vec(&mut r, 6);
        let u = m.predict_utilities(&x).unwrap();
        assert!(u.iter().all(|v| *v > 0.0 && *v < 1.0));
        let mut best = 0;
        for i in 1..u.len() {
            if u[i] > u[best] {
                best = i;
            }
        }
        assert_eq!(m.select_action(&x).unwrap(), actions[best]);
        assert_eq!(scaled.select_action(&x).unwrap(), actions[best]);
    }
}

#[test]
fn lunar_policy_picks_a_linked_mitigation_for_every_single_hazard() {
    let d = lunar_head().domain;
    let model = train_for_domain(&d).unwrap();
    let space = FeatureSpace::from_domain(&d);
    for case in &d.failure_cases {
        let linked: Vec<&str> = case.mitigations.iter().map(|m| mitigation_action(m)).collect();
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let chosen = model.select_action(&space.featurize(&[case.name.as_str()], p)).unwrap();
            assert!(linked.contains(&chosen), "{} at {p}: {chosen} not in {linked:?}", case.name);
        }
    }
    assert_eq!(model.select_action(&space.featurize::<&str>(&[], 0.5)).unwrap(), "proceed");
}

#[test]
fn training_is_reproducible() {
    let d = lunar_head().domain;
    let space = FeatureSpace::from_domain(&d);
    let a = train_for_domain(&d).unwrap().to_weights_json(&space);
    let b = train_for_domain(&d).unwrap().to_weights_json(&space);
    assert_eq!(a, b);
}

fn plan_for(d: &Domain, t: &GroundTaskSpec) -> Plan {
    let g = ground(d, t, DEFAULT_MAX_GROUND_ACTIONS).unwrap();
    solve(&g, Strategy::GbfsHadd, Limits::default()).plan().cloned().unwrap()
}

fn scheduled(events: &[(&str, usize)], miss_rate: f64) -> SimConfig {
    SimConfig {
        hazards: HazardSource::Scheduled { events: events.iter().map(|(c, o)| (c.to_string(), *o)).collect() },
        miss_rate,
        seed: 1,
    }
}

#[test]
fn no_hazards_completes_safely() {
    let d = lunar_head().domain;
    let model = train_for_domain(&d).unwrap();
    let task = &generate_tasks(&lunar_head(), 1, 5).unwrap().tasks[0];
    let plan = plan_for(&d, task);
    let rep = simulate_execution(&d, task, &plan, &scheduled(&[], 0.0), &model).unwrap();
    assert!(rep.summary.completed && rep.summary.safe);
    assert!(rep.summary.mitigations.is_empty());
    assert_eq!(rep.steps.len(), plan.len());
    assert!(rep.to_text().contains("completed safely"));
}

#[test]
fn detected_request_help_hazard_is_mitigated_once() {
    let d = lunar_head().domain;
    let model = train_for_domain(&d).unwrap();
    let task = GroundTaskSpec::new("t", d.initial_templates[0].clone(), d.goal_templates[0].clone());
    let plan = plan_for(&d, &task);
    let rep = simulate_execution(&d, &task, &plan, &scheduled(&[("keycard-lost", 0)], 0.0), &model).unwrap();
    assert_eq!(rep.summary.mitigations, ["request-help"]);
    assert!(rep.summary.completed && rep.summary.safe);
    assert!(rep.is_consistent());
}

fn door_with_case(name: &str, trigger: &str, mitigation: &str) -> Domain {
    let mut d = fixtures::door_domain();
    d.failure_cases.push(FailureCase::new(name, Severity::Critical, &[trigger], &[mitigation]));
    d
}

#[test]
fn missed_blocking_hazard_is_unsafe() {
    let d = door_with_case("hands-full", "(not (hands-free robbie))", "request-help");
    let model = train_for_domain(&d).unwrap();
    let task = fixtures::door_task();
    let plan = plan_for(&d, &task);
    let rep = simulate_execution(&d, &task, &plan, &scheduled(&[("hands-full", 0)], 1.0), &model).unwrap();
    assert!(!rep.summary.safe && !rep.summary.completed);
    assert_eq!(rep.summary.undetected, ["hands-full"]);
    assert_eq!(rep.steps.last().unwrap().outcome, StepOutcome::Blocked);
    assert!(rep.to_text().contains("unsafe"));

    let caught = simulate_execution(&d, &task, &plan, &scheduled(&[("hands-full", 0)], 0.0), &model).unwrap();
    assert!(caught.summary.safe && caught.summary.completed);
    assert_eq!(caught.summary.mitigations, ["request-help"]);
}

#[test]
fn abort_stops_safely() {
    let mut d = door_with_case("person-near", "(person-near)", "abort");
    d.predicates.push(hrrt_core::model::PredicateDecl::new("person-near", &[]));
    let model = train_for_domain(&d).unwrap();
    let task = fixtures::door_task();
    let plan = plan_for(&d, &task);
    let rep = simulate_execution(&d, &task, &plan, &scheduled(&[("person-near", 1)], 0.0), &model).unwrap();
    assert!(rep.summary.safe && !rep.summary.completed);
    assert_eq!(rep.steps.len(), 2);
    assert_eq!(rep.steps[1].outcome, StepOutcome::Aborted);
    assert!(rep.to_text().contains("stopped safely"));
}

#[test]
fn bad_inputs_rejected() {
    let d = lunar_head().domain;
    let model = train_for_domain(&d).unwrap();
    let task = GroundTaskSpec::new("t", d.initial_templates[0].clone(), d.goal_templates[0].clone());
    let plan = plan_for(&d, &task);
    let run = |cfg: SimConfig| simulate_execution(&d, &task, &plan, &cfg, &model);
    assert!(matches!(run(scheduled(&[], 1.5)), Err(SimError::BadMissRate(_))));
    assert!(matches!(run(scheduled(&[("nope", 0)], 0.0)), Err(SimError::UnknownCase(_))));
    assert!(matches!(run(scheduled(&[("keycard-lost", 99)], 0.0)), Err(SimError::OnsetOutOfRange { .. })));
    let short = Plan::new(plan.steps[..1].to_vec());
    assert!(matches!(simulate_execution(&d, &task, &short, &scheduled(&[], 0.0), &model), Err(SimError::InvalidPlan(_))));
}

#[test]
fn stochastic_runs_are_deterministic() {
    let head = lunar_head();
    let d = &head.domain;
    let model = train_for_domain(d).unwrap();
    let task = &generate_tasks(&head, 3, 11).unwrap().tasks[2];
    let plan = plan_for(d, task);
    let cfg = SimConfig { hazards: HazardSource::Stochastic { p: 0.5 }, miss_rate: 0.3, seed: 9 };
    let a = simulate_execution(d, task, &plan, &cfg, &model).unwrap();
    let b = simulate_execution(d, task, &plan, &cfg, &model).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.is_consistent());
}


/// One scheduled hazard per trial: a random task, a case whose mitigation
/// does not stop the run, and a random onset.
fn coupling_trials(miss_rate: f64) -> Vec<SafetyReport> {
    let head = lunar_head();
    let d = &head.domain;
    let model = train_for_domain(d).unwrap();
    let batch = generate_tasks(&head, 20, 3).unwrap();
    let plans: Vec<Plan> = batch.tasks.iter().map(|t| plan_for(d, t)).collect();
    let cases: Vec<&str> = d
        .failure_cases
        .iter()
        .filter(|c| c.mitigations.iter().all(|m| mitigation_action(m) != "abort"))
        .map(|c| c.name.as_str())
        .collect();
    (0..1000u64)
        .map(|i| {
            let mut r = task_rng(1, "coupling", i);
            let t = uniform_index(&mut r, batch.tasks.len());
            let case = cases[uniform_index(&mut r, cases.len())];
            let onset = uniform_index(&mut r, plans[t].len());
            let cfg = SimConfig {
                hazards: HazardSource::Scheduled { events: vec![(case.to_string(), onset)] },
                miss_rate,
                seed: i,
            };
            simulate_execution(d, &batch.tasks[t], &plans[t], &cfg, &model).unwrap()
        })
        .collect()
}

#[test]
fn perfect_detection_always_completes_safely() {
    let reports = coupling_trials(0.0);
    let ok = reports.iter().filter(|r| r.summary.safe && r.summary.completed).count();
    assert_eq!(ok, reports.len());
    assert!(reports.iter().any(|r| !r.summary.mitigations.is_empty()));
}

#[test]
fn unsafe_runs_have_missed_hazards() {
    let reports = coupling_trials(0.4);
    let bad: Vec<_> = reports.iter().filter(|r| !r.summary.safe).collect();
    assert!(!bad.is_empty());
    for r in bad {
        assert!(!r.summary.undetected.is_empty(), "{}", r.to_text());
    }
}
