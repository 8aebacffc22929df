use serde::{Deserialize, Serialize};

use super::ground::ObjectTable;
use super::types::{Constant, Domain, Goal, State};

/// One planning task over a domain: extra objects, initial state, goal, and
/// the failure cases whose triggers were asserted into the initial state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTaskSpec {
    pub id: String,
    #[serde(default)]
    pub objects: Vec<Constant>,
    pub init: State,
    pub goal: Goal,
    #[serde(default)]
    pub injected: Vec<String>,
}

impl GroundTaskSpec {
    pub fn new(id: &str, init: State, goal: Goal) -> Self {
        GroundTaskSpec { id: id.to_string(), objects: Vec::new(), init, goal, injected: Vec::new() }
    }

    pub fn object_table(&self, domain: &Domain) -> ObjectTable {
        ObjectTable::with_extra(domain, &self.objects)
    }

    /// Checks every init and goal atom against the domain declarations.
    pub fn check(&self, domain: &Domain) -> Result<(), String> {
        let objects = self.object_table(domain);
        for o in &self.objects {
            if !domain.has_type(o.ty()) {
                return Err(format!("object `{}` has undeclared type `{}`", o.name(), o.ty()));
            }
        }
        for atom in self.init.iter().chain(self.goal.iter().map(|l| &l.atom)) {
            objects.check_atom(domain, atom)?;
        }
        Ok(())
    }
}
