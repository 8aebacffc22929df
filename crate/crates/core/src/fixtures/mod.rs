//! Bundled seed domains, blue-agent scripts and dialogue trees.
//!
//! The failure-case catalogs are illustrative: each lists a handful of
//! plausible hazards for its domain, not a survey of the literature.

pub mod oracle;
pub mod random;

use crate::hrrt::{iterate_workspace, DialogueTree, IterationConfig, Script, ScriptedAgent};
use crate::model::{
    goal_from, ActionSchema, Constant, Domain, GroundTaskSpec, ModelHypothesis, PredicateDecl, State, TypeDecl, Workspace,
};

/// Template bundled with `init`: seed model, script and dialogue tree texts.
#[derive(Clone, Copy, Debug)]
pub struct Template {
    pub name: &'static str,
    pub model: &'static str,
    pub script: &'static str,
    pub tree: &'static str,
}

pub const GENERAL_SAFETY_TREE: &str = include_str!("../../data/dialogue/general-safety.sigma.json");
pub const LUNAR_TREE: &str = include_str!("../../data/dialogue/lunar-habitat.sigma.json");

pub const TEMPLATES: [Template; 3] = [
    Template {
        name: "lunar",
        model: include_str!("../../data/models/lunar-habitat.json"),
        script: include_str!("../../data/scripts/lunar-habitat.blue.json"),
        tree: LUNAR_TREE,
    },
    Template {
        name: "mars",
        model: include_str!("../../data/models/mars-rover.json"),
        script: include_str!("../../data/scripts/mars-rover.blue.json"),
        tree: GENERAL_SAFETY_TREE,
    },
    Template {
        name: "household",
        model: include_str!("../../data/models/household.json"),
        script: include_str!("../../data/scripts/household.blue.json"),
        tree: GENERAL_SAFETY_TREE,
    },
];

pub fn template(name: &str) -> Option<&'static Template> {
    TEMPLATES.iter().find(|t| t.name == name)
}

impl Template {
    pub fn domain(&self) -> Domain {
        let d: Domain = serde_json::from_str(self.model).expect("bundled model parses");
        d.canonical()
    }

    pub fn blue_script(&self) -> Script {
        Script::from_json(self.script).expect("bundled script parses")
    }

    pub fn dialogue_tree(&self) -> DialogueTree {
        DialogueTree::from_json(self.tree).expect("bundled tree parses")
    }

    /// Workspace holding the seed and `k` scripted iterations; returns it with
    /// the final post-H4 hypothesis.
    pub fn scripted_workspace(&self, k: usize) -> (Workspace, ModelHypothesis) {
        let mut ws = Workspace::default();
        let seed = ModelHypothesis::seed(self.domain());
        ws.lineage.insert_seed(seed.clone()).expect("fresh lineage");
        let cfg = IterationConfig::new(self.dialogue_tree());
        let mut agent = ScriptedAgent::new(self.blue_script());
        let head = iterate_workspace(&mut ws, &seed.id, k, &cfg, &mut agent).expect("bundled script iterates");
        (ws, head)
    }
}

pub fn lunar_seed() -> Domain {
    TEMPLATES[0].domain()
}

pub fn mars_seed() -> Domain {
    TEMPLATES[1].domain()
}

pub fn household_seed() -> Domain {
    TEMPLATES[2].domain()
}

pub fn lunar_script() -> Script {
    TEMPLATES[0].blue_script()
}

pub fn lunar_tree() -> DialogueTree {
    TEMPLATES[0].dialogue_tree()
}

pub fn general_safety_tree() -> DialogueTree {
    DialogueTree::from_json(GENERAL_SAFETY_TREE).expect("bundled tree parses")
}

/// Every bundled seed plus the small planning fixtures, by name.
pub fn all_seed_domains() -> Vec<(&'static str, Domain)> {
    let mut out: Vec<(&'static str, Domain)> = TEMPLATES.iter().map(|t| (t.name, t.domain())).collect();
    out.push(("door", door_domain()));
    out.push(("delivery", delivery_domain()));
    out
}

/// Door with a negative precondition: a locked door must be forced before it opens.
pub fn door_domain() -> Domain {
    let mut d = Domain::new("door");
    d.types = vec![TypeDecl::root("door"), TypeDecl::root("robot")];
    d.predicates = vec![
        PredicateDecl::new("door-open", &[("?d", "door")]),
        PredicateDecl::new("door-locked", &[("?d", "door")]),
        PredicateDecl::new("hands-free", &[("?r", "robot")]),
        PredicateDecl::new("at-door", &[("?r", "robot"), ("?d", "door")]),
    ];
    d.actions = vec![
        ActionSchema::new("open-door", &[("?r", "robot"), ("?d", "door")])
            .pre("(at-door ?r ?d)")
            .pre("(not (door-open ?d))")
            .pre("(not (door-locked ?d))")
            .adds("(door-open ?d)"),
        ActionSchema::new("close-door", &[("?r", "robot"), ("?d", "door")])
            .pre("(at-door ?r ?d)")
            .pre("(door-open ?d)")
            .deletes("(door-open ?d)"),
        ActionSchema::new("pound-door", &[("?r", "robot"), ("?d", "door")])
            .pre("(at-door ?r ?d)")
            .pre("(door-locked ?d)")
            .pre("(hands-free ?r)")
            .deletes("(door-locked ?d)"),
    ];
    d.canonical()
}

pub fn door_task() -> GroundTaskSpec {
    let mut t = GroundTaskSpec::new(
        "door-1",
        State::from_atoms(["(door-locked front)", "(hands-free robbie)", "(at-door robbie front)"]),
        goal_from(&["(door-open front)"]),
    );
    t.objects = vec![Constant::new("front", "door"), Constant::new("robbie", "robot")];
    t
}

/// One truck, one package, three locations in a line.
pub fn delivery_domain() -> Domain {
    let mut d = Domain::new("delivery");
    d.types = vec![TypeDecl::root("location"), TypeDecl::root("package")];
    d.predicates = vec![
        PredicateDecl::new("truck-at", &[("?l", "location")]),
        PredicateDecl::new("pkg-at", &[("?p", "package"), ("?l", "location")]),
        PredicateDecl::new("in-truck", &[("?p", "package")]),
        PredicateDecl::new("adjacent", &[("?a", "location"), ("?b", "location")]),
    ];
    d.actions = vec![
        ActionSchema::new("drive", &[("?from", "location"), ("?to", "location")])
            .pre("(truck-at ?from)")
            .pre("(adjacent ?from ?to)")
            .adds("(truck-at ?to)")
            .deletes("(truck-at ?from)"),
        ActionSchema::new("load", &[("?p", "package"), ("?l", "location")])
            .pre("(truck-at ?l)")
            .pre("(pkg-at ?p ?l)")
            .adds("(in-truck ?p)")
            .deletes("(pkg-at ?p ?l)"),
        ActionSchema::new("unload", &[("?p", "package"), ("?l", "location")])
            .pre("(truck-at ?l)")
            .pre("(in-truck ?p)")
            .adds("(pkg-at ?p ?l)")
            .deletes("(in-truck ?p)"),
    ];
    d.canonical()
}

pub fn delivery_task() -> GroundTaskSpec {
    let mut t = GroundTaskSpec::new(
        "delivery-1",
        State::from_atoms([
            "(truck-at l1)",
            "(pkg-at pkg l2)",
            "(adjacent l1 l2)",
            "(adjacent l2 l1)",
            "(adjacent l2 l3)",
            "(adjacent l3 l2)",
        ]),
        goal_from(&["(pkg-at pkg l3)"]),
    );
    t.objects = ["l1", "l2", "l3"].iter().map(|l| Constant::new(l, "location")).collect();
    t.objects.push(Constant::new("pkg", "package"));
    t
}
