use serde::{Deserialize, Serialize};

use crate::model::{Domain, Literal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssumptionKind {
    Pre,
    Post,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssumptionStatus {
    Unexamined,
    Validated,
    Challenged,
    Patched,
}

/// Causal claim attached to one precondition or effect literal of an action.
///
/// Post-assumptions over delete effects carry the deleted atom as a negative
/// literal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub kind: AssumptionKind,
    pub action: String,
    pub condition: Literal,
    pub text: String,
    pub status: AssumptionStatus,
}

pub fn render_assumption(kind: AssumptionKind, action: &str, condition: &Literal) -> String {
    match kind {
        AssumptionKind::Pre => {
            format!("Action `{action}` assumes that {condition} can be established before it is performed.")
        }
        AssumptionKind::Post if condition.positive => {
            format!("Action `{action}` assumes that performing it makes {} true.", condition.atom)
        }
        AssumptionKind::Post => {
            format!("Action `{action}` assumes that performing it makes {} false.", condition.atom)
        }
    }
}

/// One assumption per precondition literal and one per effect literal, in
/// action order; within an action: preconditions, then add, then delete effects.
pub fn extract_assumptions(domain: &Domain) -> Vec<Assumption> {
    let mut out = Vec::new();
    for action in &domain.actions {
        let pre = action.precondition.iter().map(|l| (AssumptionKind::Pre, l.clone()));
        let add = action.add.iter().map(|a| (AssumptionKind::Post, Literal::pos(a.clone())));
        let del = action.delete.iter().map(|a| (AssumptionKind::Post, Literal::neg(a.clone())));
        for (kind, condition) in pre.chain(add).chain(del) {
            out.push(Assumption {
                text: render_assumption(kind, &action.name, &condition),
                kind,
                action: action.name.clone(),
                condition,
                status: AssumptionStatus::Unexamined,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::ActionSchema;

    #[test]
    fn empty_precondition_single_add() {
        let mut d = Domain::new("d");
        d.predicates.push(crate::model::PredicateDecl::new("p", &[]));
        d.actions.push(ActionSchema::new("a", &[]).adds("(p)"));
        let out = extract_assumptions(&d);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, AssumptionKind::Post);
    }

    #[test]
    fn count_identity_on_fixtures() {
        for (_, d) in fixtures::all_seed_domains() {
            let expected: usize = d.actions.iter().map(|a| a.precondition.len() + a.effect_count()).sum();
            assert_eq!(extract_assumptions(&d).len(), expected);
        }
    }

    #[test]
    fn unlock_door_golden_text() {
        let d = fixtures::lunar_seed();
        let pre: Vec<String> = extract_assumptions(&d)
            .into_iter()
            .filter(|a| a.action == "unlock-external-door" && a.kind == AssumptionKind::Pre)
            .map(|a| a.text)
            .collect();
        assert_eq!(
            pre,
            vec![
                "Action `unlock-external-door` assumes that (at-external-door ?r) can be established before it is performed.",
                "Action `unlock-external-door` assumes that (has-keycard ?r) can be established before it is performed.",
            ]
        );
    }
}
