//! Metropolis-Hastings-within-Gibbs posterior sampler.
//!
//! Each Gibbs sweep runs a batch of MH moves on the latent plan (with the
//! step assignments held fixed) and then resamples every utterance's step
//! assignments from their exact conditionals. The relative-order likelihood
//! term is constant under plan moves, so MH acceptance ratios only
//! re-evaluate the validity prior, step-pick and emission terms.
//!
//! The proposal kernel is not symmetric between Remove and Insert; the
//! explicit Hastings correction (`log_q_ratio`) restores detailed balance.

use crate::model::{
    relative_order, Assignments, Hyperparams, ModelError, PredicateUniverse, Session, StepPlan,
};
use crate::pddl::{Domain, GroundedPredicate, Problem};
use crate::validator::{validate, SteppedPlan, UnknownActionPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub gibbs_steps: usize,
    pub mh_steps_per_gibbs: usize,
    pub thin: usize,
    pub burn_in_fraction: f64,
    pub seed: u64,
    pub enumeration_limit: usize,
    pub unknown_action_policy: UnknownActionPolicy,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            gibbs_steps: 3000,
            mh_steps_per_gibbs: 400,
            thin: 20,
            burn_in_fraction: 0.5,
            seed: 0,
            enumeration_limit: 100_000,
            unknown_action_policy: UnknownActionPolicy::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    ShiftLeft,
    ShiftRight,
    Remove,
    Insert(usize),
    SwapSlots(usize, usize),
    NoOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub subject: Option<usize>,
}

/// Undo record for an applied move.
#[derive(Debug, Clone, Copy)]
enum Applied {
    Moved { id: usize, from: usize },
    Removed { id: usize, from: usize },
    Inserted { id: usize },
    Swapped(usize, usize),
    None,
}

pub fn apply_move(plan: &mut StepPlan, mv: &Move) -> Result<(), ModelError> {
    applied(plan, mv).map(|_| ())
}

fn applied(plan: &mut StepPlan, mv: &Move) -> Result<Applied, ModelError> {
    match (mv.kind, mv.subject) {
        (MoveKind::NoOp, _) => Ok(Applied::None),
        (MoveKind::ShiftLeft, Some(id)) => {
            let from = plan.location(id).expect("shift of unplaced predicate");
            plan.move_to(id, from - 1);
            Ok(Applied::Moved { id, from })
        }
        (MoveKind::ShiftRight, Some(id)) => {
            let from = plan.location(id).expect("shift of unplaced predicate");
            plan.move_to(id, from + 1);
            Ok(Applied::Moved { id, from })
        }
        (MoveKind::Remove, Some(id)) => {
            let from = plan.unplace(id);
            Ok(Applied::Removed { id, from })
        }
        (MoveKind::Insert(slot), Some(id)) => {
            plan.place(id, slot);
            Ok(Applied::Inserted { id })
        }
        (MoveKind::SwapSlots(i, j), _) => {
            plan.swap_slots(i, j);
            Ok(Applied::Swapped(i, j))
        }
        _ => panic!("predicate move without a subject"),
    }
}

fn revert(plan: &mut StepPlan, applied: Applied) {
    match applied {
        Applied::None => {}
        Applied::Moved { id, from } => plan.move_to(id, from),
        Applied::Removed { id, from } => plan.place(id, from),
        Applied::Inserted { id } => {
            plan.unplace(id);
        }
        Applied::Swapped(i, j) => plan.swap_slots(i, j),
    }
}

/// Draws one proposal. With probability 1/2 a predicate move (shift left or
/// right, remove, or insert for unplaced predicates), otherwise a swap of a
/// uniformly drawn unordered pair of slots. `log_q_ratio` is
/// `log Q(plan|plan') - log Q(plan'|plan)`: nonzero only for Remove
/// (`ln 3 - ln S`) and Insert (`ln S - ln 3`).
pub fn draw_move<R: Rng>(plan: &StepPlan, universe: &PredicateUniverse, rng: &mut R) -> (Move, f64) {
    let capacity = plan.capacity();
    if rng.gen::<bool>() {
        let id = rng.gen_range(0..universe.len());
        match plan.location(id) {
            Some(slot) => match rng.gen_range(0..3u8) {
                0 => {
                    if slot == 0 {
                        (Move { kind: MoveKind::NoOp, subject: Some(id) }, 0.0)
                    } else {
                        (Move { kind: MoveKind::ShiftLeft, subject: Some(id) }, 0.0)
                    }
                }
                1 => {
                    if slot + 1 == capacity {
                        (Move { kind: MoveKind::NoOp, subject: Some(id) }, 0.0)
                    } else {
                        (Move { kind: MoveKind::ShiftRight, subject: Some(id) }, 0.0)
                    }
                }
                _ => (
                    Move { kind: MoveKind::Remove, subject: Some(id) },
                    (3.0f64).ln() - (capacity as f64).ln(),
                ),
            },
            None => {
                let slot = rng.gen_range(0..capacity);
                (
                    Move { kind: MoveKind::Insert(slot), subject: Some(id) },
                    (capacity as f64).ln() - (3.0f64).ln(),
                )
            }
        }
    } else {
        if capacity < 2 {
            return (Move { kind: MoveKind::NoOp, subject: None }, 0.0);
        }
        let i = rng.gen_range(0..capacity);
        let mut j = rng.gen_range(0..capacity - 1);
        if j >= i {
            j += 1;
        }
        (Move { kind: MoveKind::SwapSlots(i, j), subject: None }, 0.0)
    }
}

/// Clone-based proposal: returns the move, the proposed plan and the
/// Hastings correction.
pub fn propose<R: Rng>(
    plan: &StepPlan,
    universe: &PredicateUniverse,
    rng: &mut R,
) -> (Move, StepPlan, f64) {
    let (mv, log_q_ratio) = draw_move(plan, universe, rng);
    let mut next = plan.clone();
    applied(&mut next, &mv).expect("drawn move is applicable");
    (mv, next, log_q_ratio)
}

/// Precomputed log tables; values are produced by the same expressions as
/// the model's likelihood functions, so totals agree bit-for-bit.
struct LogTables {
    /// ln(size / total), indexed [size][total]; 0 entries unused.
    ln_frac: Vec<Vec<f64>>,
    /// ln(w_p / size + (1 - w_p) / |U|), indexed by slot size >= 1.
    ln_mix: Vec<f64>,
    /// ln((1 - w_p) / |U|): emission of a predicate outside its slot.
    ln_noise: f64,
    /// ln C(S, m) for m occupied slots out of S. The chain walks raw slot
    /// configurations, and a plan with m steps has C(S, m) of them, so
    /// acceptance divides this multiplicity out to keep the stationary
    /// distribution over compacted plans.
    ln_binom: Vec<f64>,
}

impl LogTables {
    fn new(universe_size: usize, w_p: f64) -> Self {
        let n = universe_size;
        let mut ln_frac = vec![vec![0.0; n + 1]; n + 1];
        for size in 1..=n {
            for total in size..=n {
                ln_frac[size][total] = (size as f64 / total as f64).ln();
            }
        }
        let noise = (1.0 - w_p) / n as f64;
        let ln_mix = (0..=n)
            .map(|size| {
                if size == 0 {
                    f64::NEG_INFINITY
                } else {
                    (w_p / size as f64 + noise).ln()
                }
            })
            .collect();
        let mut ln_binom = vec![0.0; n + 1];
        for m in 1..=n {
            ln_binom[m] =
                ln_binom[m - 1] + ((n - m + 1) as f64).ln() - (m as f64).ln();
        }
        LogTables {
            ln_frac,
            ln_mix,
            ln_noise: noise.ln(),
            ln_binom,
        }
    }
}

/// Memoized validity lookups shared between chains. `pddl = None` is the
/// uninformative-prior condition: every plan gets prior log weight 0.
pub struct ValidationCache<'a> {
    pddl: Option<(&'a Domain, &'a Problem)>,
    policy: UnknownActionPolicy,
    memo: Mutex<HashMap<Vec<Vec<usize>>, bool>>,
}

impl<'a> ValidationCache<'a> {
    pub fn new(pddl: Option<(&'a Domain, &'a Problem)>, policy: UnknownActionPolicy) -> Self {
        ValidationCache {
            pddl,
            policy,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn has_pddl(&self) -> bool {
        self.pddl.is_some()
    }

    pub fn is_valid(&self, plan: &StepPlan, universe: &PredicateUniverse) -> bool {
        let (domain, problem) = match self.pddl {
            Some(p) => p,
            None => return false,
        };
        let key = plan.compact_ids();
        if let Some(&v) = self.memo.lock().unwrap().get(&key) {
            return v;
        }
        let result = validate(domain, problem, &plan.compact(universe), self.policy);
        self.memo
            .lock()
            .unwrap()
            .insert(key, result.valid);
        result.valid
    }

    /// Log prior weight of the plan: alpha when valid, 0 otherwise (and
    /// always 0 without PDDL inputs or with alpha = 0).
    pub fn prior_log_weight(&self, plan: &StepPlan, universe: &PredicateUniverse, alpha: f64) -> f64 {
        if alpha == 0.0 || self.pddl.is_none() {
            return 0.0;
        }
        if self.is_valid(plan, universe) {
            alpha
        } else {
            0.0
        }
    }
}

/// One retained posterior sample: compacted plan as id steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainedSample {
    pub steps: Vec<Vec<u16>>,
    pub log_posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateMarginal {
    pub predicate: GroundedPredicate,
    /// Fraction of retained samples in which the predicate is unplaced.
    pub absent: f64,
    /// Fraction per 1-based compacted step rank.
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub acceptance_rate: f64,
    pub retained: usize,
    pub proposals: u64,
    pub accepted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub universe: Vec<GroundedPredicate>,
    pub samples: Vec<RetainedSample>,
    pub map_plan: SteppedPlan,
    pub map_log_posterior: f64,
    pub marginals: Vec<PredicateMarginal>,
    pub diagnostics: Diagnostics,
}

impl PosteriorSummary {
    pub fn sample_plan(&self, sample: &RetainedSample) -> SteppedPlan {
        SteppedPlan::new(
            sample
                .steps
                .iter()
                .map(|step| {
                    step.iter()
                        .map(|&id| self.universe[id as usize].clone())
                        .collect()
                })
                .collect(),
        )
    }

    /// Empirical distribution over compacted plans.
    pub fn empirical(&self) -> HashMap<Vec<Vec<u16>>, f64> {
        let mut counts: HashMap<Vec<Vec<u16>>, f64> = HashMap::new();
        for s in &self.samples {
            *counts.entry(s.steps.clone()).or_insert(0.0) += 1.0;
        }
        let n = self.samples.len() as f64;
        for v in counts.values_mut() {
            *v /= n;
        }
        counts
    }
}

/// Flattened observations of one utterance: (predicate id, observed rank).
struct UtteranceObs {
    ids: Vec<usize>,
    ranks: Vec<usize>,
}

pub struct Chain<'a> {
    universe: &'a PredicateUniverse,
    obs: Vec<UtteranceObs>,
    hyper: Hyperparams,
    tables: LogTables,
    cache: &'a ValidationCache<'a>,
    enumeration_limit: usize,
    pub plan: StepPlan,
    pub assignments: Assignments,
    rng: ChaCha8Rng,
    prior_term: f64,
    obs_term: f64,
    order_term: f64,
    proposals: u64,
    accepted: u64,
}

/// First-mention universe, all-singleton plan and one exact-conditional
/// assignment draw.
pub fn initialize(
    session: &Session,
    universe: &PredicateUniverse,
) -> Result<(StepPlan, Assignments), ModelError> {
    if session.utterances.is_empty() || universe.is_empty() {
        return Err(ModelError::EmptySession);
    }
    let plan = StepPlan::singletons(universe.len());
    // start from each observation's own slot; Chain::new redraws from the
    // exact conditionals
    let assignments = session
        .utterances
        .iter()
        .map(|u| {
            u.flattened()
                .map(|(p, _)| universe.id_of(p).expect("mentioned predicate in universe"))
                .collect()
        })
        .collect();
    Ok((plan, assignments))
}

impl<'a> Chain<'a> {
    pub fn new(
        session: &Session,
        universe: &'a PredicateUniverse,
        hyper: &Hyperparams,
        config: &SamplerConfig,
        cache: &'a ValidationCache<'a>,
    ) -> Result<Self, ModelError> {
        let (plan, assignments) = initialize(session, universe)?;
        let obs = session
            .utterances
            .iter()
            .map(|u| UtteranceObs {
                ids: u
                    .flattened()
                    .map(|(p, _)| universe.id_of(p).expect("mentioned predicate in universe"))
                    .collect(),
                ranks: u.observed_ranks(),
            })
            .collect();
        let tables = LogTables::new(universe.len(), hyper.w_p);
        let mut chain = Chain {
            universe,
            obs,
            hyper: *hyper,
            tables,
            cache,
            enumeration_limit: config.enumeration_limit,
            plan,
            assignments,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            prior_term: 0.0,
            obs_term: 0.0,
            order_term: 0.0,
            proposals: 0,
            accepted: 0,
        };
        chain.resample_assignments()?;
        chain.prior_term = chain
            .cache
            .prior_log_weight(&chain.plan, chain.universe, chain.hyper.alpha);
        chain.refresh_likelihood_terms();
        Ok(chain)
    }

    pub fn log_posterior(&self) -> f64 {
        self.prior_term + self.obs_term + self.order_term
    }

    fn refresh_likelihood_terms(&mut self) {
        self.obs_term = self.observation_term(&self.plan);
        self.order_term = self
            .obs
            .iter()
            .zip(&self.assignments)
            .map(|(o, s)| {
                if o.ranks == relative_order(s) {
                    self.hyper.beta
                } else {
                    0.0
                }
            })
            .sum();
    }

    /// Step-pick plus emission terms over every observation, under `plan`
    /// with the current assignments.
    fn observation_term(&self, plan: &StepPlan) -> f64 {
        let total = plan.placed_count();
        if total == 0 {
            return f64::NEG_INFINITY;
        }
        let mut sum = 0.0;
        for (o, s_t) in self.obs.iter().zip(&self.assignments) {
            for (&id, &slot) in o.ids.iter().zip(s_t) {
                let size = plan.slot_size(slot);
                if size == 0 {
                    return f64::NEG_INFINITY;
                }
                sum += self.tables.ln_frac[size][total];
                sum += if plan.location(id) == Some(slot) {
                    self.tables.ln_mix[size]
                } else {
                    self.tables.ln_noise
                };
            }
        }
        sum
    }

    /// One MH update of the plan. Returns whether the proposal was accepted.
    pub fn mh_step(&mut self) -> bool {
        let steps_before = self.plan.step_count();
        let (mv, log_q_ratio) = draw_move(&self.plan, self.universe, &mut self.rng);
        let undo = applied(&mut self.plan, &mv).expect("drawn move is applicable");
        self.proposals += 1;
        let new_obs = self.observation_term(&self.plan);
        let delta = if new_obs == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            let occupancy_correction = self.tables.ln_binom[steps_before]
                - self.tables.ln_binom[self.plan.step_count()];
            let new_prior =
                self.cache
                    .prior_log_weight(&self.plan, self.universe, self.hyper.alpha);
            let d = (new_prior + new_obs) - (self.prior_term + self.obs_term)
                + log_q_ratio
                + occupancy_correction;
            if d >= 0.0 {
                self.accepted += 1;
                self.prior_term = new_prior;
                self.obs_term = new_obs;
                debug_assert!(self.plan.check_invariants());
                return true;
            }
            d
        };
        if delta > f64::NEG_INFINITY && self.rng.gen::<f64>().ln() < delta {
            let new_prior =
                self.cache
                    .prior_log_weight(&self.plan, self.universe, self.hyper.alpha);
            self.accepted += 1;
            self.prior_term = new_prior;
            self.obs_term = new_obs;
            true
        } else {
            revert(&mut self.plan, undo);
            false
        }
    }

    /// Exact per-utterance conditional over assignment vectors, by full
    /// enumeration over non-empty slots. Weights are unnormalized.
    fn assignment_conditional(&self, t: usize) -> (Vec<Vec<usize>>, Vec<f64>) {
        let o = &self.obs[t];
        let n = o.ids.len();
        let total = self.plan.placed_count();
        let nonempty: Vec<usize> = (0..self.plan.capacity())
            .filter(|&s| self.plan.slot_size(s) > 0)
            .collect();
        let mut tuples = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let s_t: Vec<usize> = idx.iter().map(|&i| nonempty[i]).collect();
            let mut w = 0.0f64;
            for (&id, &slot) in o.ids.iter().zip(&s_t) {
                let size = self.plan.slot_size(slot);
                w += self.tables.ln_frac[size][total];
                w += if self.plan.location(id) == Some(slot) {
                    self.tables.ln_mix[size]
                } else {
                    self.tables.ln_noise
                };
            }
            if o.ranks == relative_order(&s_t) {
                w += self.hyper.beta;
            }
            tuples.push(s_t);
            weights.push(w.exp());
            // odometer over nonempty^n
            let mut pos = 0;
            loop {
                if pos == n {
                    return (tuples, weights);
                }
                idx[pos] += 1;
                if idx[pos] < nonempty.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Gibbs update of all step assignments: exact enumeration when the
    /// support is small, otherwise one systematic-scan coordinate pass.
    pub fn resample_assignments(&mut self) -> Result<(), ModelError> {
        let total = self.plan.placed_count();
        if total == 0 {
            return Err(ModelError::EmptyPlan);
        }
        let nonempty: Vec<usize> = (0..self.plan.capacity())
            .filter(|&s| self.plan.slot_size(s) > 0)
            .collect();
        let k = nonempty.len();
        for t in 0..self.obs.len() {
            let n = self.obs[t].ids.len();
            let support = (k as f64).powi(n as i32);
            if support <= self.enumeration_limit as f64 {
                let (tuples, weights) = self.assignment_conditional(t);
                let pick = sample_categorical(&weights, &mut self.rng);
                self.assignments[t] = tuples[pick].clone();
            } else {
                // coordinate pass: each s_t^n given the others
                for i in 0..n {
                    let id = self.obs[t].ids[i];
                    let mut weights = Vec::with_capacity(k);
                    for &slot in &nonempty {
                        let size = self.plan.slot_size(slot);
                        let mut w = self.tables.ln_frac[size][total];
                        w += if self.plan.location(id) == Some(slot) {
                            self.tables.ln_mix[size]
                        } else {
                            self.tables.ln_noise
                        };
                        let prev = self.assignments[t][i];
                        self.assignments[t][i] = slot;
                        if self.obs[t].ranks == relative_order(&self.assignments[t]) {
                            w += self.hyper.beta;
                        }
                        self.assignments[t][i] = prev;
                        weights.push(w.exp());
                    }
                    let pick = sample_categorical(&weights, &mut self.rng);
                    self.assignments[t][i] = nonempty[pick];
                }
            }
        }
        self.refresh_likelihood_terms();
        Ok(())
    }

    fn diagnostics(&self, retained: usize) -> Diagnostics {
        Diagnostics {
            acceptance_rate: if self.proposals == 0 {
                0.0
            } else {
                self.accepted as f64 / self.proposals as f64
            },
            retained,
            proposals: self.proposals,
            accepted: self.accepted,
        }
    }
}

fn sample_categorical<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "degenerate categorical");
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Full inference run: Gibbs sweeps of MH plan batches plus assignment
/// resampling, retaining every `thin`-th post-burn-in MH state.
/// Deterministic given the seed.
pub fn infer(
    session: &Session,
    pddl: Option<(&Domain, &Problem)>,
    hyper: &Hyperparams,
    config: &SamplerConfig,
) -> Result<PosteriorSummary, ModelError> {
    let cache = ValidationCache::new(pddl, config.unknown_action_policy);
    infer_with_cache(session, hyper, config, &cache)
}

pub fn infer_with_cache(
    session: &Session,
    hyper: &Hyperparams,
    config: &SamplerConfig,
    cache: &ValidationCache<'_>,
) -> Result<PosteriorSummary, ModelError> {
    let universe = PredicateUniverse::from_session(session);
    let mut chain = Chain::new(session, &universe, hyper, config, cache)?;
    let burn_in_sweeps =
        (config.gibbs_steps as f64 * config.burn_in_fraction).floor() as usize;
    let mut samples = Vec::new();
    for sweep in 0..config.gibbs_steps {
        let keep = sweep >= burn_in_sweeps;
        for step in 1..=config.mh_steps_per_gibbs {
            chain.mh_step();
            if keep && step % config.thin == 0 {
                samples.push(RetainedSample {
                    steps: chain
                        .plan
                        .compact_ids()
                        .into_iter()
                        .map(|s| s.into_iter().map(|id| id as u16).collect())
                        .collect(),
                    log_posterior: chain.log_posterior(),
                });
            }
        }
        chain.resample_assignments()?;
    }
    Ok(summarize(&universe, samples, chain.diagnostics(0)))
}

fn summarize(
    universe: &PredicateUniverse,
    samples: Vec<RetainedSample>,
    mut diagnostics: Diagnostics,
) -> PosteriorSummary {
    diagnostics.retained = samples.len();
    let universe_preds: Vec<GroundedPredicate> = universe.predicates().to_vec();
    let (map_idx, _) = samples
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, s)| {
            if s.log_posterior > bv {
                (i, s.log_posterior)
            } else {
                (bi, bv)
            }
        });
    let (map_steps, map_log_posterior) = samples
        .get(map_idx)
        .map(|s| (s.steps.clone(), s.log_posterior))
        .unwrap_or((Vec::new(), f64::NEG_INFINITY));
    let map_plan = SteppedPlan::new(
        map_steps
            .iter()
            .map(|step| {
                step.iter()
                    .map(|&id| universe_preds[id as usize].clone())
                    .collect()
            })
            .collect(),
    );

    let max_rank = samples.iter().map(|s| s.steps.len()).max().unwrap_or(0);
    let n = samples.len().max(1) as f64;
    let mut marginals: Vec<PredicateMarginal> = universe_preds
        .iter()
        .map(|p| PredicateMarginal {
            predicate: p.clone(),
            absent: 0.0,
            ranks: vec![0.0; max_rank],
        })
        .collect();
    for s in &samples {
        let mut seen = vec![false; universe_preds.len()];
        for (rank, step) in s.steps.iter().enumerate() {
            for &id in step {
                marginals[id as usize].ranks[rank] += 1.0 / n;
                seen[id as usize] = true;
            }
        }
        for (id, was_seen) in seen.iter().enumerate() {
            if !was_seen {
                marginals[id].absent += 1.0 / n;
            }
        }
    }

    PosteriorSummary {
        universe: universe_preds,
        samples,
        map_plan,
        map_log_posterior,
        marginals,
        diagnostics,
    }
}

/// Merges retained samples from several seeds (seed, seed+1, ...) into one
/// summary. Chains share the validation memo.
pub fn infer_multi_chain(
    session: &Session,
    pddl: Option<(&Domain, &Problem)>,
    hyper: &Hyperparams,
    config: &SamplerConfig,
    chains: usize,
) -> Result<PosteriorSummary, ModelError> {
    assert!(chains >= 1);
    let cache = ValidationCache::new(pddl, config.unknown_action_policy);
    let universe = PredicateUniverse::from_session(session);
    let mut all_samples = Vec::new();
    let mut proposals = 0u64;
    let mut accepted = 0u64;
    for c in 0..chains {
        let chain_config = SamplerConfig {
            seed: config.seed.wrapping_add(c as u64),
            ..config.clone()
        };
        let summary = infer_with_cache(session, hyper, &chain_config, &cache)?;
        proposals += summary.diagnostics.proposals;
        accepted += summary.diagnostics.accepted;
        all_samples.extend(summary.samples);
    }
    let diagnostics = Diagnostics {
        acceptance_rate: if proposals == 0 {
            0.0
        } else {
            accepted as f64 / proposals as f64
        },
        retained: all_samples.len(),
        proposals,
        accepted,
    };
    Ok(summarize(&universe, all_samples, diagnostics))
}
