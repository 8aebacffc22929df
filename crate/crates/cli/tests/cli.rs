mod common;

use std::fs;

use common::{hrrt, init};
use serde_json::Value;

#[test]
fn init_then_analyze_writes_possibilities() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    init(&ws, "lunar");
    let w = ws.to_str().unwrap();
    let r = hrrt(&["-C", w, "--json", "analyze", "h2", "head"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["count"].as_u64().unwrap() > 0);
    let written: Value = serde_json::from_str(&fs::read_to_string(v["path"].as_str().unwrap()).unwrap()).unwrap();
    assert_eq!(written["possibilities"]["items"].as_array().unwrap().len() as u64, v["count"].as_u64().unwrap());

    let r = hrrt(&["-C", w, "analyze", "h3", "seed"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("assumptions written to"));
}

#[test]
fn init_refuses_existing_workspace_and_unknown_template() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    init(&ws, "mars");
    assert_eq!(hrrt(&["init", ws.to_str().unwrap(), "--template", "mars"]).code, 2);
    assert_eq!(hrrt(&["init", dir.path().join("x").to_str().unwrap(), "--template", "venus"]).code, 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(hrrt(&["frobnicate"]).code, 1);
    assert_eq!(hrrt(&["plan"]).code, 1);
    assert_eq!(hrrt(&["--help"]).code, 0);
}

#[test]
fn missing_workspace_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = hrrt(&["-C", dir.path().to_str().unwrap(), "--json", "analyze", "h2"]);
    assert_eq!(r.code, 2);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["error"]["code"], "validation");
}

const DOMAIN: &str = "(define (domain lamp)
  (:requirements :strips :negative-preconditions)
  (:predicates (on) (plugged))
  (:action plug :parameters () :precondition (not (plugged)) :effect (plugged))
  (:action switch-on :parameters () :precondition (and (plugged) (not (on))) :effect (on)))";

fn problem(init: &str, goal: &str) -> String {
    format!("(define (problem p) (:domain lamp) (:init {init}) (:goal (and {goal})))")
}

#[test]
fn plan_prints_length_header() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.pddl");
    fs::write(&d, DOMAIN).unwrap();
    let p = dir.path().join("p.pddl");

    fs::write(&p, problem("(on) (plugged)", "(on)")).unwrap();
    for s in ["bfs", "astar-hmax", "gbfs-hadd"] {
        let r = hrrt(&["plan", d.to_str().unwrap(), p.to_str().unwrap(), "--strategy", s]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(r.stdout.lines().next(), Some("; length=0"));
    }

    fs::write(&p, problem("", "(on)")).unwrap();
    let r = hrrt(&["plan", d.to_str().unwrap(), p.to_str().unwrap()]);
    assert_eq!(r.stdout, "; length=2\n(plug)\n(switch-on)\n");

    fs::write(&p, problem("(on)", "(not (plugged)) (not (on))")).unwrap();
    assert_eq!(hrrt(&["plan", d.to_str().unwrap(), p.to_str().unwrap()]).code, 2);

    let r = hrrt(&["plan", d.to_str().unwrap(), p.to_str().unwrap(), "--strategy", "dfs"]);
    assert_eq!(r.code, 1);
}

#[test]
fn plan_resource_limit_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.pddl");
    fs::write(&d, DOMAIN).unwrap();
    let p = dir.path().join("p.pddl");
    fs::write(&p, problem("", "(on)")).unwrap();
    let r = hrrt(&["plan", d.to_str().unwrap(), p.to_str().unwrap(), "--strategy", "bfs", "--max-expansions", "1"]);
    assert_eq!(r.code, 3, "{}", r.stdout);
}

#[test]
fn bench_with_no_tasks_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    init(&ws, "lunar");
    let r = hrrt(&["-C", ws.to_str().unwrap(), "bench", "head", "-n", "0", "--seed", "1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout, format!("{}\n", hrrt_core::bench::CSV_HEADER));
}

#[test]
fn iterate_bench_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    init(&ws, "lunar");
    let w = ws.to_str().unwrap();
    let r = hrrt(&["-C", w, "--json", "iterate", "seed", "-n", "5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let head: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(head["iteration"], 5);

    let r = hrrt(&["-C", w, "--json", "bench", "head", "-n", "50", "--seed", "42"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let rates = common::post_h4_rates(&v);
    assert_eq!(rates.len(), 6);
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
    let batch = v["batch_id"].as_str().unwrap();
    assert!(ws.join("reports").join(batch).join("report.csv").exists());

    let r = hrrt(&["-C", w, "--json", "simulate", "head", "--miss-rate", "0", "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report: Value = serde_json::from_str(&r.stdout).unwrap();
    let run = report["run_id"].as_str().unwrap();
    assert!(ws.join("reports/exec").join(format!("{run}.safety.json")).exists());
    assert!(ws.join("reports/exec").join(format!("{run}.safety.txt")).exists());

    let r = hrrt(&["-C", w, "export-pddl", "head"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let files: Vec<&str> = r.stdout.lines().collect();
    assert!(files[0].ends_with(".domain.pddl"));
    let solved = hrrt(&["plan", files[0], files[1], "--strategy", "gbfs-hadd"]);
    assert_eq!(solved.code, 0, "{}", solved.stderr);
}

#[test]
fn interactive_reflect_reads_answers_from_stdin() {
    use std::io::Write;
    use std::process::{Command, Stdio};

    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    init(&ws, "household");
    let mut child = Command::new(common::BIN)
        .args(["-C", ws.to_str().unwrap(), "--json", "reflect", "--interactive"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // every question gets "no"; end of input answers the rest with empty text
    child.stdin.take().unwrap().write_all("no\n".repeat(20).as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["iteration"], 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("> "));
}
