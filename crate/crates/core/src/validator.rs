//! Stepped parallel plan validation against a domain/problem, and the
//! validity-based prior weight.
//!
//! A plan is simulated step by step from the initial state. Within a step all
//! actions must be individually applicable in the pre-step state and pairwise
//! non-mutex; the step is then applied jointly (deletes before adds). After
//! the last step the goal must hold.

use crate::pddl::{
    applicable, apply, ground_action, Domain, GroundedAction, GroundedPredicate, Problem,
};
use serde::{Deserialize, Serialize};

/// Ordered sequence of non-empty sets of grounded actions; sets execute in
/// parallel at consecutive unit-time steps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SteppedPlan {
    pub steps: Vec<Vec<GroundedPredicate>>,
}

impl SteppedPlan {
    pub fn new(steps: Vec<Vec<GroundedPredicate>>) -> Self {
        SteppedPlan { steps }
    }

    pub fn predicates(&self) -> impl Iterator<Item = &GroundedPredicate> {
        self.steps.iter().flatten()
    }

    /// 1-based step index of a predicate, if present.
    pub fn step_of(&self, pred: &GroundedPredicate) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| s.contains(pred))
            .map(|i| i + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnknownActionPolicy {
    /// An action with no matching schema makes the plan invalid.
    Strict,
    /// Unknown actions are skipped during simulation.
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    UnknownAction,
    PreconditionUnsatisfied,
    MutexConflict,
    GoalUnsatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// 1-based step index; the goal check reports the step count + 1 clamped
    /// to at least 1.
    pub step: usize,
    pub reason: FailureReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub valid: bool,
    pub failure: Option<Failure>,
}

impl ValidationResult {
    fn ok() -> Self {
        ValidationResult {
            valid: true,
            failure: None,
        }
    }

    fn fail(step: usize, reason: FailureReason, detail: String) -> Self {
        ValidationResult {
            valid: false,
            failure: Some(Failure {
                step,
                reason,
                detail,
            }),
        }
    }
}

/// Graphplan-style interference: one action deletes what the other adds or
/// requires. Any self-pairing of a deleting action conflicts.
pub fn mutex(a: &GroundedAction, b: &GroundedAction) -> bool {
    if a == b {
        return !a.deletes.is_empty();
    }
    let interferes = |x: &GroundedAction, y: &GroundedAction| {
        x.deletes
            .iter()
            .any(|d| y.adds.contains(d) || y.pre_pos.contains(d))
    };
    interferes(a, b) || interferes(b, a)
}

pub fn validate(
    domain: &Domain,
    problem: &Problem,
    plan: &SteppedPlan,
    policy: UnknownActionPolicy,
) -> ValidationResult {
    let mut state = problem.initial_state();
    for (idx, step) in plan.steps.iter().enumerate() {
        let step_no = idx + 1;
        let mut actions: Vec<GroundedAction> = Vec::with_capacity(step.len());
        for pred in step {
            match ground_action(domain, pred, problem) {
                Some(action) => actions.push(action),
                None => match policy {
                    UnknownActionPolicy::Strict => {
                        return ValidationResult::fail(
                            step_no,
                            FailureReason::UnknownAction,
                            pred.to_string(),
                        );
                    }
                    UnknownActionPolicy::Ignore => {}
                },
            }
        }
        for action in &actions {
            if !applicable(&state, action) {
                let missing = action
                    .pre_pos
                    .iter()
                    .find(|a| !state.holds(a))
                    .map(|a| a.to_string())
                    .or_else(|| {
                        action
                            .pre_neg
                            .iter()
                            .find(|a| state.holds(a))
                            .map(|a| format!("(not {a})"))
                    })
                    .unwrap_or_default();
                return ValidationResult::fail(
                    step_no,
                    FailureReason::PreconditionUnsatisfied,
                    format!("{}: requires {missing}", action.source),
                );
            }
        }
        for i in 0..actions.len() {
            for j in (i + 1)..actions.len() {
                if mutex(&actions[i], &actions[j]) {
                    return ValidationResult::fail(
                        step_no,
                        FailureReason::MutexConflict,
                        format!("{} / {}", actions[i].source, actions[j].source),
                    );
                }
            }
        }
        state = apply(&state, actions.iter());
    }
    if state.satisfies(&problem.goal) {
        ValidationResult::ok()
    } else {
        let unmet = problem
            .goal
            .iter()
            .find(|lit| state.holds(&lit.atom) != lit.positive)
            .map(|lit| {
                if lit.positive {
                    lit.atom.to_string()
                } else {
                    format!("(not {})", lit.atom)
                }
            })
            .unwrap_or_default();
        ValidationResult::fail(
            plan.steps.len().max(1),
            FailureReason::GoalUnsatisfied,
            unmet,
        )
    }
}

/// Log of the unnormalized plan-prior weight: `alpha` for a valid plan, 0
/// otherwise. `alpha = 0` is the uninformative (no-PDDL) prior.
pub fn prior_log_weight(result: &ValidationResult, alpha: f64) -> f64 {
    debug_assert!(alpha >= 0.0);
    if result.valid {
        alpha
    } else {
        0.0
    }
}
