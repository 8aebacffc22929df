use std::collections::{BTreeSet, VecDeque};

use hrrt_core::fixtures::{self, random};
use hrrt_core::model::ground::ground_actions;
use hrrt_core::model::{Domain, GroundTaskSpec, State};
use hrrt_core::pddl::{compile_task, emit_domain, emit_problem, parse_domain, parse_problem, COMPLEMENT_PREFIX};

fn fixture_domains() -> Vec<Domain> {
    let mut out: Vec<Domain> = fixtures::all_seed_domains().into_iter().map(|(_, d)| d).collect();
    for t in &fixtures::TEMPLATES {
        out.push(t.scripted_workspace(10).1.domain);
    }
    out
}

#[test]
fn random_models_round_trip() {
    let mut rng = random::rng(99);
    for i in 0..200 {
        let d = random::random_domain(&mut rng, &random::Shape::default());
        let text = emit_domain(&d).unwrap();
        let back = parse_domain(&text).unwrap();
        assert_eq!(back, d.planning_projection(), "model {i}:\n{text}");
        assert_eq!(emit_domain(&back).unwrap(), text);

        let task = random::random_task(&mut rng, &d, "t");
        let problem = emit_problem(&d, &task).unwrap();
        let parsed = parse_problem(&problem, &back).unwrap();
        assert_eq!((parsed.init, parsed.goal), (task.init, task.goal), "{problem}");
    }
}

#[test]
fn fixtures_round_trip() {
    for d in fixture_domains() {
        let text = emit_domain(&d).unwrap();
        assert_eq!(parse_domain(&text).unwrap(), d.planning_projection(), "{}", d.name);
    }
}

/// Reachable states of the compiled task, breadth first, up to `cap`.
fn reachable(d: &Domain, task: &GroundTaskSpec, cap: usize) -> Vec<State> {
    let (compiled, t) = compile_task(d, task);
    let actions = ground_actions(&compiled, &t.object_table(&compiled));
    let mut seen = BTreeSet::from([t.init.clone()]);
    let mut queue = VecDeque::from([t.init.clone()]);
    while let Some(s) = queue.pop_front() {
        for a in actions.iter().filter(|a| a.applicable(&s)) {
            let n = a.apply(&s);
            if seen.len() < cap && seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen.into_iter().collect()
}

#[test]
fn complements_never_co_true() {
    let mut checked = 0;
    for d in fixture_domains() {
        let mut tasks: Vec<GroundTaskSpec> = d
            .initial_templates
            .iter()
            .flat_map(|init| d.goal_templates.iter().map(|g| GroundTaskSpec::new("t", init.clone(), g.clone())))
            .collect();
        if d.name == "door" {
            tasks.push(fixtures::door_task());
        }
        for task in tasks {
            for s in reachable(&d, &task, 1 << 12) {
                for atom in s.iter() {
                    if let Some(base) = atom.predicate.strip_prefix(COMPLEMENT_PREFIX) {
                        let twin = hrrt_core::model::GroundAtom { predicate: base.into(), args: atom.args.clone() };
                        assert!(!s.contains(&twin), "{} and {twin} in {}", atom, d.name);
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 0);
}
