//! Command-line front end. Exit codes: 0 ok, 1 usage, 2 validation,
//! 3 resource limit.

use std::fs;
use std::io::{self, BufRead, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hrrt_core::bench::{PlannerConfig, SuccessReport, CSV_HEADER};
use hrrt_core::hrrt::{extract_assumptions, run_h4, HumanReply, InteractiveAgent, LevelOutcome};
use hrrt_core::model::GroundTaskSpec;
use hrrt_core::planner::{Limits, Strategy};
use hrrt_core::riskmit::HazardSource;

use crate::error::{Error, Result};
use crate::ops::{self, AgentKind, BenchRequest, PlanResult, PlannerOptions, SimulateRequest};
use crate::server;
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(name = "hrrt", version, about = "Red-team a robot's task model and measure what it buys")]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Workspace directory.
    #[arg(short = 'C', long, global = true, default_value = ".")]
    pub workspace: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Level {
    H2,
    H3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a workspace from a bundled template.
    Init {
        workspace: PathBuf,
        #[arg(long, default_value = "lunar")]
        template: String,
    },
    /// Run the possibility (h2) or assumption (h3) analysis and write it under analyses/.
    Analyze {
        level: Level,
        #[arg(default_value = "head")]
        model: String,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        exhaustive: bool,
    },
    /// Reflection dialogue over a model; commits the resulting hypothesis.
    Reflect {
        #[arg(default_value = "head")]
        model: String,
        #[arg(long, default_value = "scripted")]
        agent: String,
        #[arg(long)]
        script: Option<String>,
        /// Answer the questions on the terminal.
        #[arg(long)]
        interactive: bool,
    },
    /// Full red-teaming iterations with the scripted or remote agent.
    Iterate {
        #[arg(default_value = "head")]
        model: String,
        #[arg(short = 'n', default_value_t = 1)]
        n: usize,
        #[arg(long, default_value = "scripted")]
        agent: String,
        #[arg(long)]
        script: Option<String>,
    },
    /// Write the model as a PDDL domain plus one problem per template pair.
    ExportPddl {
        #[arg(default_value = "head")]
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan for a PDDL domain and problem.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, default_value = "astar-hmax")]
        strategy: String,
        #[arg(long)]
        max_expansions: Option<u64>,
        #[arg(long)]
        max_time_ms: Option<u64>,
    },
    /// Evaluate every hypothesis of a lineage on one task batch.
    Bench {
        #[arg(default_value = "head")]
        lineage: String,
        #[arg(short = 'n', default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Force one strategy for every task.
        #[arg(long)]
        planner: Option<String>,
        #[arg(long)]
        max_expansions: Option<u64>,
    },
    /// Execute a plan with hazard detection and mitigation.
    Simulate {
        #[arg(default_value = "head")]
        model: String,
        #[arg(long, default_value_t = 0.0)]
        miss_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability that each failure case occurs.
        #[arg(long, default_value_t = 0.5)]
        hazard_p: f64,
        /// Task as a JSON file; defaults to the first template pair.
        #[arg(long)]
        task: Option<PathBuf>,
    },
    /// Serve the HTTP API over the workspace.
    Serve {
        #[arg(long, default_value_t = server::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
    },
}

/// Command output: text for people, JSON with `--json`.
struct Output {
    text: String,
    json: Value,
}

fn out(text: impl Into<String>, json: Value) -> Output {
    Output { text: text.into(), json }
}

fn strategy(s: &str) -> Result<Strategy> {
    s.parse().map_err(Error::Usage)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let json = cli.json;
    match execute(cli) {
        Ok(o) => {
            if json {
                println!("{}", o.json);
            } else if !o.text.is_empty() {
                print!("{}", o.text);
                if !o.text.ends_with('\n') {
                    println!();
                }
            }
            0
        }
        Err(e) => {
            if json {
                println!("{}", json!({ "error": { "code": e.code(), "message": e.to_string() } }));
            } else {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<Output> {
    let root = cli.workspace;
    match cli.command {
        Command::Init { workspace, template } => {
            let store = Store::init(&workspace, &template)?;
            let seed = store.resolve("seed")?;
            Ok(out(
                format!("initialized {} from {template}; seed {}\n", workspace.display(), seed.id),
                json!({ "workspace": workspace, "template": template, "seed": seed.id }),
            ))
        }
        Command::Analyze { level, model, depth, cap, exhaustive } => {
            let store = Store::open(&root)?;
            match level {
                Level::H2 => {
                    let mut cfg = store.iteration_config()?.enumeration;
                    cfg.depth = depth.unwrap_or(cfg.depth);
                    cfg.cap = cap.unwrap_or(cfg.cap);
                    cfg.exhaustive |= exhaustive;
                    let (m, set) = ops::analyze_h2(&store, &model, &cfg)?;
                    let path = ops::analysis_path(&store.root, &m.id, "possibilities");
                    let mut text = String::new();
                    for p in &set.items {
                        text.push_str(&format!("{}\n", serde_json::to_string(p).expect("serializes")));
                    }
                    text.push_str(&format!(
                        "{} possibilities{} written to {}\n",
                        set.items.len(),
                        if set.truncated { " (truncated)" } else { "" },
                        path.display()
                    ));
                    Ok(out(
                        text,
                        json!({ "hypothesis_id": m.id, "count": set.items.len(), "truncated": set.truncated, "path": path }),
                    ))
                }
                Level::H3 => {
                    let (m, list) = ops::analyze_h3(&store, &model)?;
                    let path = ops::analysis_path(&store.root, &m.id, "assumptions");
                    let mut text: String =
                        list.iter().map(|a| format!("{}\n", a.text)).collect();
                    text.push_str(&format!("{} assumptions written to {}\n", list.len(), path.display()));
                    Ok(out(text, json!({ "hypothesis_id": m.id, "count": list.len(), "path": path })))
                }
            }
        }
        Command::Reflect { model, agent, script, interactive } => {
            let mut store = Store::open(&root)?;
            let kind: AgentKind = if interactive { AgentKind::Interactive } else { agent.parse()? };
            let level = match kind {
                AgentKind::Interactive => reflect_on_terminal(&mut store, &model)?,
                kind => {
                    let mut a = ops::make_agent(&store, kind, script.as_deref())?;
                    ops::reflect(&mut store, &model, a.as_mut())?
                }
            };
            let h = &level.hypothesis;
            Ok(out(
                format!(
                    "{} proposals, {} accepted; new hypothesis {} (iteration {})\n",
                    level.patch.entries.len(),
                    level.patch.accepted_count(),
                    h.id,
                    h.iteration
                ),
                json!({
                    "hypothesis_id": h.id,
                    "iteration": h.iteration,
                    "proposals": level.patch.entries.len(),
                    "accepted": level.patch.accepted_count(),
                }),
            ))
        }
        Command::Iterate { model, n, agent, script } => {
            let mut store = Store::open(&root)?;
            let kind: AgentKind = agent.parse()?;
            if kind == AgentKind::Interactive {
                return Err(Error::Usage("iterate runs unattended; use reflect --interactive or the service".into()));
            }
            let mut a = ops::make_agent(&store, kind, script.as_deref())?;
            let head = ops::iterate(&mut store, &model, n, a.as_mut())?;
            Ok(out(
                format!("head {} (iteration {})\n", head.id, head.iteration),
                json!({ "hypothesis_id": head.id, "iteration": head.iteration }),
            ))
        }
        Command::ExportPddl { model, out: dir } => {
            let store = Store::open(&root)?;
            let files = ops::export_pddl(&store, &model, dir.as_deref())?;
            let text: String = files.iter().map(|f| format!("{}\n", f.display())).collect();
            Ok(out(text, json!({ "files": files })))
        }
        Command::Plan { domain, problem, strategy: s, max_expansions, max_time_ms } => {
            let limits = Limits {
                max_expansions: max_expansions.or(PlannerConfig::default().limits.max_expansions),
                max_time: max_time_ms.map(Duration::from_millis),
            };
            let result = ops::plan_pddl(&read(&domain)?, &read(&problem)?, strategy(&s)?, limits)?;
            match &result {
                PlanResult::Solved { plan } => Ok(out(plan.to_text(), json!(result))),
                PlanResult::Unsolvable => Err(Error::Validation("unsolvable: no plan reaches the goal".into())),
                PlanResult::ResourceLimit { expansions, elapsed_ms } => Err(Error::ResourceLimit(format!(
                    "search limit reached after {expansions} expansions ({elapsed_ms} ms)"
                ))),
            }
        }
        Command::Bench { lineage, n, seed, planner, max_expansions } => {
            let mut store = Store::open(&root)?;
            let strategy = planner.as_deref().map(strategy).transpose()?;
            let req = BenchRequest {
                model_ids: vec![lineage],
                n,
                seed,
                planner: PlannerOptions { strategy, max_expansions, max_time_ms: None },
                inclusion_probability: None,
            };
            let report = ops::bench(&mut store, &req)?;
            Ok(bench_output(&report))
        }
        Command::Simulate { model, miss_rate, seed, hazard_p, task } => {
            let store = Store::open(&root)?;
            let task: Option<GroundTaskSpec> = match task {
                Some(path) => Some(
                    serde_json::from_str(&read(&path)?)
                        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?,
                ),
                None => None,
            };
            let req = SimulateRequest { model_id: model, task, miss_rate, seed, hazards: HazardSource::Stochastic { p: hazard_p } };
            let report = ops::simulate(&store, &req)?;
            Ok(out(report.to_text(), json!(report)))
        }
        Command::Serve { port, bind } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(server::serve(root, SocketAddr::new(bind, port)))?;
            Ok(out("", Value::Null))
        }
    }
}

fn bench_output(report: &SuccessReport) -> Output {
    let csv = report.to_csv();
    debug_assert!(csv.starts_with(CSV_HEADER));
    out(
        csv.clone(),
        json!({ "batch_id": report.batch_id, "report": report, "series": report.series().ok(), "csv": csv }),
    )
}

/// Reflection with the questions asked on the terminal.
fn reflect_on_terminal(store: &mut Store, reference: &str) -> Result<LevelOutcome> {
    let m = store.resolve(reference)?;
    let cfg = store.iteration_config()?;
    let set = ops::possibilities(&m, &cfg.enumeration)?;
    let assumptions = extract_assumptions(&m.domain);
    let (mut agent, bridge) = InteractiveAgent::pair();
    let worker = {
        let m = m.clone();
        std::thread::spawn(move || run_h4(&m, &set, &assumptions, &cfg, &mut agent))
    };
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    while let Ok(q) = bridge.questions.recv() {
        eprint!("[{}] {}\n> ", q.node, q.text);
        let _ = io::stderr().flush();
        let text = match lines.next() {
            Some(line) => line?,
            None => String::new(),
        };
        if bridge.replies.send(HumanReply { text, edits: vec![] }).is_err() {
            break;
        }
    }
    drop(bridge);
    let level = worker.join().map_err(|_| Error::Internal("reflection worker panicked".into()))??;
    ops::record_level(store, &level)?;
    store.save()?;
    Ok(level)
}
