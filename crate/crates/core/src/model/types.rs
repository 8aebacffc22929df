use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sexpr_text::{self, TextError};

/// Name of the implicit root type every declared type descends from.
pub const ROOT_TYPE: &str = "object";

/// Returns true for lower-case identifiers of the form `[a-z][a-z0-9-]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

/// Argument of a schema-level atom: a parameter variable or a constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.trim_start_matches('?').to_string())
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n) => write!(f, "?{n}"),
            Term::Const(n) => f.write_str(n),
        }
    }
}

impl From<&str> for Term {
    fn from(s: &str) -> Self {
        if s.starts_with('?') {
            Term::var(s)
        } else {
            Term::constant(s)
        }
    }
}

/// Predicate applied to terms, e.g. `(at ?r ?l)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new<T: Into<Term>>(predicate: &str, args: impl IntoIterator<Item = T>) -> Self {
        Atom {
            predicate: predicate.to_string(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

/// A possibly negated atom in a precondition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }
}

/// Predicate applied to objects. Element of a [`State`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: AsRef<str>>(predicate: &str, args: impl IntoIterator<Item = S>) -> Self {
        GroundAtom {
            predicate: predicate.to_string(),
            args: args.into_iter().map(|a| a.as_ref().to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundLiteral {
    pub atom: GroundAtom,
    pub positive: bool,
}

impl GroundLiteral {
    pub fn pos(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: true }
    }

    pub fn neg(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: false }
    }

    pub fn holds_in(&self, state: &State) -> bool {
        state.contains(&self.atom) == self.positive
    }
}

fn write_atom<A: fmt::Display>(f: &mut fmt::Formatter<'_>, pred: &str, args: &[A]) -> fmt::Result {
    write!(f, "({pred}")?;
    for a in args {
        write!(f, " {a}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, &self.predicate, &self.args)
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, &self.predicate, &self.args)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

impl FromStr for Atom {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        let (pred, args) = sexpr_text::parse_atom(s)?;
        Ok(Atom {
            predicate: pred,
            args: args.iter().map(|a| Term::from(a.as_str())).collect(),
        })
    }
}

impl FromStr for GroundAtom {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        let (pred, args) = sexpr_text::parse_atom(s)?;
        if let Some(v) = args.iter().find(|a| a.starts_with('?')) {
            return Err(TextError(format!("variable {v} in ground atom")));
        }
        Ok(GroundAtom { predicate: pred, args })
    }
}

impl FromStr for Literal {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        let (positive, inner) = sexpr_text::strip_not(s)?;
        Ok(Literal { atom: inner.parse()?, positive })
    }
}

impl FromStr for GroundLiteral {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        let (positive, inner) = sexpr_text::strip_not(s)?;
        Ok(GroundLiteral { atom: inner.parse()?, positive })
    }
}

string_serde!(Atom);
string_serde!(GroundAtom);
string_serde!(Literal);
string_serde!(GroundLiteral);

/// Typed name, rendered `name - type`. Used for parameters (with a leading
/// `?` on display), constants and type declarations.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Typed {
    pub name: String,
    pub ty: String,
}

impl Typed {
    pub fn new(name: &str, ty: &str) -> Self {
        Typed {
            name: name.trim_start_matches('?').to_string(),
            ty: ty.to_string(),
        }
    }
}

fn parse_typed(s: &str) -> Result<(String, String), TextError> {
    let mut parts = s.split(" - ");
    let name = parts.next().unwrap_or("").trim();
    let ty = parts.next().unwrap_or(ROOT_TYPE).trim();
    if name.is_empty() || ty.is_empty() || parts.next().is_some() {
        return Err(TextError(format!("expected `name - type`, got {s:?}")));
    }
    Ok((name.to_string(), ty.to_string()))
}

/// Action or predicate parameter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Param(pub Typed);

impl Param {
    pub fn new(name: &str, ty: &str) -> Self {
        Param(Typed::new(name, ty))
    }
    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn ty(&self) -> &str {
        &self.0.ty
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{} - {}", self.0.name, self.0.ty)
    }
}

impl FromStr for Param {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        let (name, ty) = parse_typed(s)?;
        if !name.starts_with('?') {
            return Err(TextError(format!("parameter {name:?} must start with '?'")));
        }
        Ok(Param::new(&name, &ty))
    }
}

/// Typed object usable in every task of the domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constant(pub Typed);

impl Constant {
    pub fn new(name: &str, ty: &str) -> Self {
        Constant(Typed::new(name, ty))
    }
    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn ty(&self) -> &str {
        &self.0.ty
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - {}", self.0.name, self.0.ty)
    }
}

impl FromStr for Constant {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        let (name, ty) = parse_typed(s)?;
        Ok(Constant::new(&name, &ty))
    }
}

/// Declared object type; `parent` defaults to the root type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeDecl(pub Typed);

impl TypeDecl {
    pub fn new(name: &str, parent: &str) -> Self {
        TypeDecl(Typed::new(name, parent))
    }
    pub fn root(name: &str) -> Self {
        TypeDecl::new(name, ROOT_TYPE)
    }
    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn parent(&self) -> &str {
        &self.0.ty
    }
}

impl fmt::Display for TypeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} - {}", self.0.name, self.0.ty)
    }
}

impl FromStr for TypeDecl {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        let (name, ty) = parse_typed(s)?;
        Ok(TypeDecl::new(&name, &ty))
    }
}

string_serde!(Param);
string_serde!(Constant);
string_serde!(TypeDecl);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    #[serde(default)]
    pub params: Vec<Param>,
}

impl PredicateDecl {
    pub fn new(name: &str, params: &[(&str, &str)]) -> Self {
        PredicateDecl {
            name: name.to_string(),
            params: params.iter().map(|(n, t)| Param::new(n, t)).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    #[serde(default)]
    pub params: Vec<Param>,
    #[serde(default)]
    pub precondition: BTreeSet<Literal>,
    #[serde(default)]
    pub add: BTreeSet<Atom>,
    #[serde(default)]
    pub delete: BTreeSet<Atom>,
}

impl ActionSchema {
    pub fn new(name: &str, params: &[(&str, &str)]) -> Self {
        ActionSchema {
            name: name.to_string(),
            params: params.iter().map(|(n, t)| Param::new(n, t)).collect(),
            precondition: BTreeSet::new(),
            add: BTreeSet::new(),
            delete: BTreeSet::new(),
        }
    }

    /// Builder helper; panics on malformed literal text.
    pub fn pre(mut self, literal: &str) -> Self {
        self.precondition.insert(literal.parse().expect("literal"));
        self
    }

    pub fn adds(mut self, atom: &str) -> Self {
        self.add.insert(atom.parse().expect("atom"));
        self
    }

    pub fn deletes(mut self, atom: &str) -> Self {
        self.delete.insert(atom.parse().expect("atom"));
        self
    }

    pub fn effect_count(&self) -> usize {
        self.add.len() + self.delete.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    /// Ordinal rank, 0 for low through 3 for critical.
    pub fn rank(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FailureCase {
    pub name: String,
    pub trigger: BTreeSet<GroundLiteral>,
    pub severity: Severity,
    #[serde(default)]
    pub mitigations: Vec<String>,
}

impl FailureCase {
    pub fn new(name: &str, severity: Severity, trigger: &[&str], mitigations: &[&str]) -> Self {
        FailureCase {
            name: name.to_string(),
            trigger: trigger.iter().map(|l| l.parse().expect("literal")).collect(),
            severity,
            mitigations: mitigations.iter().map(|m| m.to_string()).collect(),
        }
    }

    /// Asserts the trigger into `state`: positive literals are added,
    /// negated ones removed.
    pub fn inject(&self, state: &mut State) {
        for lit in &self.trigger {
            if lit.positive {
                state.insert(lit.atom.clone());
            } else {
                state.remove(&lit.atom);
            }
        }
    }

    pub fn is_active(&self, state: &State) -> bool {
        self.trigger.iter().all(|l| l.holds_in(state))
    }
}

/// Closed-world symbolic state: atoms not present are false.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub BTreeSet<GroundAtom>);

impl State {
    pub fn new() -> Self {
        State::default()
    }

    pub fn from_atoms<'a>(atoms: impl IntoIterator<Item = &'a str>) -> Self {
        State(atoms.into_iter().map(|a| a.parse().expect("ground atom")).collect())
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.0.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn satisfies(&self, goal: &BTreeSet<GroundLiteral>) -> bool {
        goal.iter().all(|l| l.holds_in(self))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// Conjunctive goal over ground literals.
pub type Goal = BTreeSet<GroundLiteral>;

pub fn goal_from(literals: &[&str]) -> Goal {
    literals.iter().map(|l| l.parse().expect("ground literal")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LevelTag {
    #[serde(rename = "seed")]
    Seed,
    #[serde(rename = "post-h2")]
    PostH2,
    #[serde(rename = "post-h3")]
    PostH3,
    #[serde(rename = "post-h4")]
    PostH4,
}

impl LevelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelTag::Seed => "seed",
            LevelTag::PostH2 => "post-h2",
            LevelTag::PostH3 => "post-h3",
            LevelTag::PostH4 => "post-h4",
        }
    }
}

impl fmt::Display for LevelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LevelTag {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, TextError> {
        Ok(match s {
            "seed" => LevelTag::Seed,
            "post-h2" | "h2" => LevelTag::PostH2,
            "post-h3" | "h3" => LevelTag::PostH3,
            "post-h4" | "h4" => LevelTag::PostH4,
            _ => return Err(TextError(format!("unknown level tag {s:?}"))),
        })
    }
}

/// Content of a domain model, without lineage bookkeeping.
///
/// Named collections are kept sorted by name and the template lists sorted
/// and deduplicated; [`Domain::canonicalize`] restores that order after
/// direct mutation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    #[serde(default)]
    pub types: Vec<TypeDecl>,
    #[serde(default)]
    pub constants: Vec<Constant>,
    #[serde(default)]
    pub predicates: Vec<PredicateDecl>,
    #[serde(default)]
    pub actions: Vec<ActionSchema>,
    #[serde(default)]
    pub failure_cases: Vec<FailureCase>,
    #[serde(default)]
    pub initial_templates: Vec<State>,
    #[serde(default)]
    pub goal_templates: Vec<Goal>,
}

impl Domain {
    pub fn new(name: &str) -> Self {
        Domain { name: name.to_string(), ..Domain::default() }
    }

    pub fn canonicalize(&mut self) {
        self.types.sort_by(|a, b| a.name().cmp(b.name()));
        self.constants.sort_by(|a, b| a.name().cmp(b.name()));
        self.predicates.sort_by(|a, b| a.name.cmp(&b.name));
        self.actions.sort_by(|a, b| a.name.cmp(&b.name));
        self.failure_cases.sort_by(|a, b| a.name.cmp(&b.name));
        self.initial_templates.sort();
        self.initial_templates.dedup();
        self.goal_templates.sort();
        self.goal_templates.dedup();
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn failure_case(&self, name: &str) -> Option<&FailureCase> {
        self.failure_cases.iter().find(|c| c.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.iter().find(|c| c.name() == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.types.iter().any(|t| t.name() == name)
    }

    /// True if `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == ROOT_TYPE {
            return true;
        }
        let mut current = ty;
        // bounded walk; cycles are reported by validation
        for _ in 0..=self.types.len() {
            if current == ancestor {
                return true;
            }
            match self.types.iter().find(|t| t.name() == current) {
                Some(t) => current = t.parent(),
                None => return false,
            }
        }
        false
    }

    /// Every symbol name the model declares, tagged by kind.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        out.extend(self.types.iter().map(|t| format!("type:{}", t.name())));
        out.extend(self.constants.iter().map(|c| format!("constant:{}", c.name())));
        out.extend(self.predicates.iter().map(|p| format!("predicate:{}", p.name)));
        out.extend(self.actions.iter().map(|a| format!("action:{}", a.name)));
        out.extend(self.failure_cases.iter().map(|c| format!("failure-case:{}", c.name)));
        out
    }

    /// The part of the model expressible in a PDDL domain file.
    pub fn planning_projection(&self) -> Domain {
        Domain {
            name: self.name.clone(),
            types: self.types.clone(),
            constants: self.constants.clone(),
            predicates: self.predicates.clone(),
            actions: self.actions.clone(),
            ..Domain::default()
        }
    }
}

/// One versioned model in a lineage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelHypothesis {
    pub id: String,
    pub iteration: u32,
    pub level: LevelTag,
    pub parent: Option<String>,
    pub domain: Domain,
}

impl ModelHypothesis {
    /// Seed hypothesis (iteration 0, no parent) with a content-derived id.
    pub fn seed(domain: Domain) -> Self {
        ModelHypothesis::build(domain.canonical(), 0, LevelTag::Seed, None)
    }

    pub fn build(domain: Domain, iteration: u32, level: LevelTag, parent: Option<String>) -> Self {
        let mut h = ModelHypothesis { id: String::new(), iteration, level, parent, domain };
        h.domain.canonicalize();
        h.id = super::canonical::content_id(&h);
        h
    }

    /// Equality of the model content, ignoring id, counters and parent.
    pub fn structurally_eq(&self, other: &ModelHypothesis) -> bool {
        self.domain == other.domain
    }
}
