use std::time::Instant;

use hrrt_core::fixtures::oracle::shortest_plan_length;
use hrrt_core::fixtures::{self, random};
use hrrt_core::planner::{ground, solve, validate, validate_on_model, Limits, SolveOutcome, Strategy};

#[test]
fn optimal_strategies_agree_with_oracle() {
    let started = Instant::now();
    let mut rng = random::rng(500);
    let shape = random::Shape { max_actions: 6, max_predicates: 5, max_ground_atoms: 16, ..random::Shape::default() };
    // a quarter random tasks, a quarter random-walk goals, half delivery tasks
    let (mut solvable, mut nontrivial) = (0, 0);
    for i in 0..500 {
        let id = format!("t{i}");
        let (d, task) = match i % 4 {
            0 => {
                let d = random::random_domain(&mut rng, &shape);
                let t = random::random_task(&mut rng, &d, &id);
                (d, t)
            }
            1 => {
                let d = random::random_domain(&mut rng, &shape);
                let t = random::random_walk_task(&mut rng, &d, &id, 8);
                (d, t)
            }
            _ => (fixtures::delivery_domain(), random::random_delivery_task(&mut rng, &id)),
        };
        let expected = shortest_plan_length(&d, &task, 100_000).expect("state space within bound");
        let g = ground(&d, &task, 100_000).unwrap();
        for s in [Strategy::Bfs, Strategy::AstarHmax] {
            let got = match solve(&g, s, Limits::default()) {
                SolveOutcome::Solved(p) => {
                    assert!(validate(&g, &p).is_ok());
                    assert!(validate_on_model(&d, &task, &p).is_ok());
                    Some(p.len())
                }
                SolveOutcome::Unsolvable => None,
                other => panic!("{other:?}"),
            };
            assert_eq!(got, expected, "task {i} strategy {s}\n{d:?}\n{task:?}");
        }
        match solve(&g, Strategy::GbfsHadd, Limits::default()) {
            SolveOutcome::Solved(p) => assert!(validate_on_model(&d, &task, &p).is_ok()),
            SolveOutcome::Unsolvable => assert_eq!(expected, None),
            other => panic!("{other:?}"),
        }
        solvable += usize::from(expected.is_some());
        nontrivial += usize::from(expected.is_some_and(|n| n >= 2));
    }
    assert!(solvable > 300 && nontrivial > 100, "{solvable} solvable, {nontrivial} with length >= 2");
    assert!(started.elapsed().as_secs() < 300);
}
