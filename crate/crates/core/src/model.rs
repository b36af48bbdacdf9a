//! Generative-model state and likelihood terms.
//!
//! The latent plan lives in a fixed-capacity representation: `S = |universe|`
//! slots, each a possibly-empty set of predicate ids. Empty slots carry zero
//! probability mass, so keeping them around does not change the model; it
//! keeps slot indices stable while the sampler shifts predicates around.
//! Compaction (dropping empty slots, preserving order) happens at validation
//! and output boundaries.
//!
//! All probability arithmetic is in log space, and every term is
//! unnormalized exactly as its consumer expects: constant normalizers cancel
//! in the ratios the sampler computes and are exposed separately for the
//! exact oracle and the simulator.

use crate::pddl::GroundedPredicate;
use crate::validator::{prior_log_weight, SteppedPlan, ValidationResult};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("plan has no placed predicates")]
    EmptyPlan,
    #[error("length mismatch: observed {observed} entries, assignment {assigned}")]
    LengthMismatch { observed: usize, assigned: usize },
    #[error("session has no utterances")]
    EmptySession,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub alpha: f64,
    pub beta: f64,
    pub w_p: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 10.0,
            beta: 5.0,
            w_p: 0.8,
        }
    }
}

/// All distinct predicates mentioned in a session, in first-mention order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateUniverse {
    predicates: Vec<GroundedPredicate>,
    index: HashMap<GroundedPredicate, usize>,
}

impl PredicateUniverse {
    pub fn from_session(session: &Session) -> Self {
        let mut universe = PredicateUniverse {
            predicates: Vec::new(),
            index: HashMap::new(),
        };
        for utterance in &session.utterances {
            for group in &utterance.groups {
                for pred in group {
                    universe.insert(pred);
                }
            }
        }
        universe
    }

    /// Builds a universe from an explicit predicate list (e.g. a true plan
    /// plus distractors for simulation); order is kept, duplicates dropped.
    pub fn from_predicates<'a, I: IntoIterator<Item = &'a GroundedPredicate>>(preds: I) -> Self {
        let mut universe = PredicateUniverse {
            predicates: Vec::new(),
            index: HashMap::new(),
        };
        for pred in preds {
            universe.insert(pred);
        }
        universe
    }

    fn insert(&mut self, pred: &GroundedPredicate) {
        if !self.index.contains_key(pred) {
            self.index.insert(pred.clone(), self.predicates.len());
            self.predicates.push(pred.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn id_of(&self, pred: &GroundedPredicate) -> Option<usize> {
        self.index.get(pred).copied()
    }

    pub fn predicate(&self, id: usize) -> &GroundedPredicate {
        &self.predicates[id]
    }

    pub fn predicates(&self) -> &[GroundedPredicate] {
        &self.predicates
    }
}

/// One participant turn: an ordered tuple of sets of grounded predicates.
/// Group position carries relative order only.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub groups: Vec<Vec<GroundedPredicate>>,
}

impl Utterance {
    pub fn new(groups: Vec<Vec<GroundedPredicate>>) -> Self {
        Utterance { groups }
    }

    /// (predicate, 1-based group rank) pairs in group order.
    pub fn flattened(&self) -> impl Iterator<Item = (&GroundedPredicate, usize)> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(i, g)| g.iter().map(move |p| (p, i + 1)))
    }

    pub fn observed_ranks(&self) -> Vec<usize> {
        self.flattened().map(|(_, r)| r).collect()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub utterances: Vec<Utterance>,
}

impl Session {
    pub fn new(utterances: Vec<Utterance>) -> Result<Self, ModelError> {
        if utterances.is_empty() {
            return Err(ModelError::EmptySession);
        }
        Ok(Session { utterances })
    }
}

/// Fixed-capacity latent plan: `capacity` slots of disjoint predicate-id
/// sets; every id is placed at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPlan {
    slots: Vec<BTreeSet<usize>>,
    location: Vec<Option<usize>>,
    placed: usize,
}

impl StepPlan {
    pub fn empty(capacity: usize) -> Self {
        StepPlan {
            slots: vec![BTreeSet::new(); capacity],
            location: vec![None; capacity],
            placed: 0,
        }
    }

    /// Singleton layout: predicate `k` alone in slot `k`.
    pub fn singletons(capacity: usize) -> Self {
        let mut plan = StepPlan::empty(capacity);
        for id in 0..capacity {
            plan.place(id, id);
        }
        plan
    }

    /// Builds a fixed-capacity plan from compacted steps of predicate ids.
    /// Steps are laid out left-aligned; remaining slots stay empty.
    pub fn from_steps(capacity: usize, steps: &[Vec<usize>]) -> Self {
        assert!(steps.len() <= capacity);
        let mut plan = StepPlan::empty(capacity);
        for (slot, step) in steps.iter().enumerate() {
            for &id in step {
                plan.place(id, slot);
            }
        }
        plan
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn placed_count(&self) -> usize {
        self.placed
    }

    pub fn slot_size(&self, slot: usize) -> usize {
        self.slots[slot].len()
    }

    /// Number of non-empty slots, i.e. the step count of the compacted plan.
    pub fn step_count(&self) -> usize {
        self.slots.iter().filter(|s| !s.is_empty()).count()
    }

    pub fn slot(&self, slot: usize) -> &BTreeSet<usize> {
        &self.slots[slot]
    }

    pub fn location(&self, id: usize) -> Option<usize> {
        self.location[id]
    }

    pub fn is_placed(&self, id: usize) -> bool {
        self.location[id].is_some()
    }

    pub fn place(&mut self, id: usize, slot: usize) {
        debug_assert!(self.location[id].is_none());
        self.slots[slot].insert(id);
        self.location[id] = Some(slot);
        self.placed += 1;
    }

    pub fn unplace(&mut self, id: usize) -> usize {
        let slot = self.location[id].expect("predicate not placed");
        self.slots[slot].remove(&id);
        self.location[id] = None;
        self.placed -= 1;
        slot
    }

    pub fn move_to(&mut self, id: usize, slot: usize) {
        self.unplace(id);
        self.place(id, slot);
    }

    pub fn swap_slots(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.slots.swap(i, j);
        for &id in &self.slots[i] {
            self.location[id] = Some(i);
        }
        for &id in &self.slots[j] {
            self.location[id] = Some(j);
        }
    }

    /// Non-empty slots in order, as id lists.
    pub fn compact_ids(&self) -> Vec<Vec<usize>> {
        self.slots
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().copied().collect())
            .collect()
    }

    pub fn compact(&self, universe: &PredicateUniverse) -> SteppedPlan {
        SteppedPlan::new(
            self.compact_ids()
                .into_iter()
                .map(|step| step.into_iter().map(|id| universe.predicate(id).clone()).collect())
                .collect(),
        )
    }

    /// Dense rank of the slot holding `id` among non-empty slots, 1-based.
    pub fn compact_rank(&self, id: usize) -> Option<usize> {
        let slot = self.location[id]?;
        Some(
            self.slots[..slot]
                .iter()
                .filter(|s| !s.is_empty())
                .count()
                + 1,
        )
    }

    pub fn check_invariants(&self) -> bool {
        let mut count = 0;
        for (slot_idx, slot) in self.slots.iter().enumerate() {
            for &id in slot {
                if id >= self.location.len() || self.location[id] != Some(slot_idx) {
                    return false;
                }
                count += 1;
            }
        }
        count == self.placed
            && self
                .location
                .iter()
                .flatten()
                .all(|&s| s < self.slots.len())
    }
}

/// Dense ranking: smallest distinct value maps to 1, next to 2, and so on;
/// ties share a rank. Output order parallels input order.
pub fn relative_order(s: &[usize]) -> Vec<usize> {
    let mut distinct: Vec<usize> = s.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    s.iter()
        .map(|v| distinct.binary_search(v).unwrap() + 1)
        .collect()
}

/// Log-probability of discussing slot `i`: size of the slot over total
/// placed predicates. Empty slots get negative infinity.
pub fn step_pick_logprob(plan: &StepPlan, slot: usize) -> Result<f64, ModelError> {
    if plan.placed_count() == 0 {
        return Err(ModelError::EmptyPlan);
    }
    let size = plan.slot_size(slot);
    if size == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((size as f64 / plan.placed_count() as f64).ln())
}

/// Unnormalized log weight of the observed relative order given absolute
/// step indices: `beta` on a match, 0 otherwise.
pub fn order_log_weight(observed: &[usize], s: &[usize], beta: f64) -> Result<f64, ModelError> {
    if observed.len() != s.len() {
        return Err(ModelError::LengthMismatch {
            observed: observed.len(),
            assigned: s.len(),
        });
    }
    if observed == relative_order(s).as_slice() {
        Ok(beta)
    } else {
        Ok(0.0)
    }
}

/// Number of weak orderings (ordered set partitions) of `n` items:
/// 1, 1, 3, 13, 75, ...
pub fn fubini(n: usize) -> u64 {
    let mut w = vec![1u64; n + 1];
    let mut binom = vec![vec![0u64; n + 1]; n + 1];
    for i in 0..=n {
        binom[i][0] = 1;
        for j in 1..=i {
            binom[i][j] = binom[i - 1][j - 1] + if j <= i - 1 { binom[i - 1][j] } else { 0 };
        }
    }
    for m in 1..=n {
        let mut total = 0u64;
        for k in 1..=m {
            total += binom[m][k] * w[m - k];
        }
        w[m] = total;
    }
    w[n]
}

/// Log normalizer of the relative-order distribution for `n` observations:
/// `ln(e^beta - 1 + W(n))`. Depends only on `n`, so it cancels in every
/// ratio the sampler takes.
pub fn order_log_normalizer(n: usize, beta: f64) -> f64 {
    (beta.exp() - 1.0 + fubini(n) as f64).ln()
}

/// Log-probability of emitting predicate `id` for an observation assigned to
/// slot `slot`: mixture of uniform-in-slot (weight `w_p`) and uniform over
/// the mention universe.
pub fn emission_logprob(
    plan: &StepPlan,
    universe_size: usize,
    slot: usize,
    id: usize,
    w_p: f64,
) -> f64 {
    let size = plan.slot_size(slot);
    let in_slot = size > 0 && plan.location(id) == Some(slot);
    let slot_term = if in_slot { w_p / size as f64 } else { 0.0 };
    (slot_term + (1.0 - w_p) / universe_size as f64).ln()
}

/// Per-utterance slot assignments, 0-based slot indices parallel to the
/// utterance's flattened observations.
pub type Assignments = Vec<Vec<usize>>;

/// Unnormalized joint log posterior of (plan, assignments) given the
/// session: validity prior plus step-pick, emission and relative-order
/// terms. Negative infinity whenever an assignment references an empty slot.
pub fn joint_log_posterior(
    plan: &StepPlan,
    assignments: &Assignments,
    session: &Session,
    universe: &PredicateUniverse,
    hyper: &Hyperparams,
    validation: &ValidationResult,
) -> f64 {
    let mut total = prior_log_weight(validation, hyper.alpha);
    for (utterance, s_t) in session.utterances.iter().zip(assignments) {
        let mut observed = Vec::with_capacity(s_t.len());
        for ((pred, rank), &slot) in utterance.flattened().zip(s_t) {
            observed.push(rank);
            let pick = match step_pick_logprob(plan, slot) {
                Ok(v) => v,
                Err(_) => return f64::NEG_INFINITY,
            };
            if pick == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let id = universe.id_of(pred).expect("predicate outside universe");
            total += pick + emission_logprob(plan, universe.len(), slot, id, hyper.w_p);
        }
        let observed_ranks = relative_order(&observed);
        total += order_log_weight(&observed_ranks, s_t, hyper.beta)
            .expect("assignment length matches utterance");
    }
    total
}
