//! Evaluation metrics and a brute-force exact posterior for tiny instances.

use crate::model::{
    emission_logprob, order_log_normalizer, relative_order, step_pick_logprob,
    Hyperparams, PredicateUniverse, Session, StepPlan,
};
use crate::pddl::{Domain, GroundedPredicate, Problem};
use crate::simulator::enumerate_weak_orderings;
use crate::validator::{validate, SteppedPlan, UnknownActionPolicy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("exact enumeration too large: universe {universe}, longest utterance {max_mentions}")]
    TooLarge { universe: usize, max_mentions: usize },
}

/// All scores are percentages in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Of the predicates the inferred plan contains, the percentage that are
    /// in the true plan (precision).
    pub pct_inferred: f64,
    /// Percentage of noise predicates kept out of the inferred plan.
    pub pct_noise_rej: f64,
    /// Percentage of common-predicate pairs whose step-order relation
    /// (before / same step / after) matches the true plan.
    pub pct_seq: f64,
    /// Arithmetic mean of the three scores.
    pub overall: f64,
}

/// Precision and noise rejection; the third value is recall over the true
/// plan's predicates, reported as a diagnostic only. Degenerate cases score
/// 100: an empty inferred plan includes nothing wrong, and with no noise
/// predicates there is nothing to reject.
pub fn task_allocation(
    inferred: &SteppedPlan,
    truth: &SteppedPlan,
    noise: &[GroundedPredicate],
) -> (f64, f64, f64) {
    let inferred_preds: Vec<&GroundedPredicate> = inferred.predicates().collect();
    let pct_inferred = if inferred_preds.is_empty() {
        100.0
    } else {
        let hits = inferred_preds
            .iter()
            .filter(|p| truth.step_of(p).is_some())
            .count();
        100.0 * hits as f64 / inferred_preds.len() as f64
    };
    let pct_noise_rej = if noise.is_empty() {
        100.0
    } else {
        let rejected = noise
            .iter()
            .filter(|p| inferred.step_of(p).is_none())
            .count();
        100.0 * rejected as f64 / noise.len() as f64
    };
    let truth_preds: Vec<&GroundedPredicate> = truth.predicates().collect();
    let recall = if truth_preds.is_empty() {
        100.0
    } else {
        let found = truth_preds
            .iter()
            .filter(|p| inferred.step_of(p).is_some())
            .count();
        100.0 * found as f64 / truth_preds.len() as f64
    };
    (pct_inferred, pct_noise_rej, recall)
}

/// Pairwise step-order agreement over predicates present in both plans.
/// Each unordered pair relates as earlier / same step / later; the score is
/// the percentage of pairs where both plans agree. Fewer than two common
/// predicates scores 100.
pub fn sequence_accuracy(inferred: &SteppedPlan, truth: &SteppedPlan) -> f64 {
    let common: Vec<&GroundedPredicate> = truth
        .predicates()
        .filter(|p| inferred.step_of(p).is_some())
        .collect();
    if common.len() < 2 {
        return 100.0;
    }
    let mut pairs = 0usize;
    let mut agree = 0usize;
    for i in 0..common.len() {
        for j in (i + 1)..common.len() {
            let t = truth
                .step_of(common[i])
                .unwrap()
                .cmp(&truth.step_of(common[j]).unwrap());
            let f = inferred
                .step_of(common[i])
                .unwrap()
                .cmp(&inferred.step_of(common[j]).unwrap());
            pairs += 1;
            if t == f {
                agree += 1;
            }
        }
    }
    100.0 * agree as f64 / pairs as f64
}

pub fn evaluate(
    inferred: &SteppedPlan,
    truth: &SteppedPlan,
    noise: &[GroundedPredicate],
) -> Metrics {
    let (pct_inferred, pct_noise_rej, _recall) = task_allocation(inferred, truth, noise);
    let pct_seq = sequence_accuracy(inferred, truth);
    Metrics {
        pct_inferred,
        pct_noise_rej,
        pct_seq,
        overall: (pct_inferred + pct_noise_rej + pct_seq) / 3.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactEntry {
    /// Compacted plan as universe-id steps.
    pub steps: Vec<Vec<u16>>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub universe: Vec<GroundedPredicate>,
    pub entries: Vec<ExactEntry>,
}

impl ExactPosterior {
    pub fn plan(&self, entry: &ExactEntry) -> SteppedPlan {
        SteppedPlan::new(
            entry
                .steps
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|&id| self.universe[id as usize].clone())
                        .collect()
                })
                .collect(),
        )
    }

    pub fn prob_of(&self, steps: &[Vec<u16>]) -> f64 {
        self.entries
            .iter()
            .find(|e| e.steps == steps)
            .map(|e| e.prob)
            .unwrap_or(0.0)
    }
}

const MAX_UNIVERSE: usize = 4;
const MAX_MENTIONS: usize = 3;

/// Exact marginal posterior over plans by full enumeration: every ordered
/// set partition of every subset of the mention universe (including the
/// empty plan, which carries zero likelihood for any non-empty session),
/// with the per-utterance latent assignments summed out. Guards on
/// instance size.
pub fn exact_posterior(
    session: &Session,
    pddl: Option<(&Domain, &Problem)>,
    hyper: &Hyperparams,
    policy: UnknownActionPolicy,
) -> Result<ExactPosterior, EvalError> {
    let universe = PredicateUniverse::from_session(session);
    let u = universe.len();
    let max_mentions = session
        .utterances
        .iter()
        .map(|utt| utt.len())
        .max()
        .unwrap_or(0);
    if u > MAX_UNIVERSE || max_mentions > MAX_MENTIONS {
        return Err(EvalError::TooLarge {
            universe: u,
            max_mentions,
        });
    }

    let obs: Vec<(Vec<usize>, Vec<usize>)> = session
        .utterances
        .iter()
        .map(|utt| {
            (
                utt.flattened()
                    .map(|(p, _)| universe.id_of(p).expect("mention in universe"))
                    .collect(),
                utt.observed_ranks(),
            )
        })
        .collect();

    let mut entries: Vec<ExactEntry> = Vec::new();
    let mut total = 0.0f64;
    // the empty plan cannot explain any mention, so its weight is zero
    // whenever the session has utterances
    entries.push(ExactEntry {
        steps: Vec::new(),
        prob: if obs.is_empty() { 1.0 } else { 0.0 },
    });
    total += entries[0].prob;
    for subset in 1u32..(1 << u) {
        let members: Vec<usize> = (0..u).filter(|i| subset & (1 << i) != 0).collect();
        for ranking in enumerate_weak_orderings(members.len()) {
            let n_steps = ranking.iter().copied().max().unwrap_or(0);
            let mut steps: Vec<Vec<usize>> = vec![Vec::new(); n_steps];
            for (&id, &rank) in members.iter().zip(&ranking) {
                steps[rank - 1].push(id);
            }
            let plan = StepPlan::from_steps(u, &steps);
            let prior = match pddl {
                Some((domain, problem)) => {
                    if validate(domain, problem, &plan.compact(&universe), policy).valid {
                        hyper.alpha
                    } else {
                        0.0
                    }
                }
                None => 0.0,
            };
            let mut log_weight = prior;
            for (ids, ranks) in &obs {
                log_weight += marginal_utterance_loglik(&plan, u, ids, ranks, hyper);
            }
            let weight = log_weight.exp();
            total += weight;
            entries.push(ExactEntry {
                steps: steps
                    .iter()
                    .map(|s| s.iter().map(|&id| id as u16).collect())
                    .collect(),
                prob: weight,
            });
        }
    }
    debug_assert!(total > 0.0);
    for e in &mut entries {
        e.prob /= total;
    }
    Ok(ExactPosterior {
        universe: universe.predicates().to_vec(),
        entries,
    })
}

/// log p(one utterance | plan): assignments summed out, order normalizer
/// included.
fn marginal_utterance_loglik(
    plan: &StepPlan,
    universe_size: usize,
    ids: &[usize],
    ranks: &[usize],
    hyper: &Hyperparams,
) -> f64 {
    let n = ids.len();
    let nonempty: Vec<usize> = (0..plan.capacity())
        .filter(|&s| plan.slot_size(s) > 0)
        .collect();
    let mut sum = 0.0f64;
    let mut idx = vec![0usize; n];
    'outer: loop {
        let s_t: Vec<usize> = idx.iter().map(|&i| nonempty[i]).collect();
        let mut lw = 0.0;
        for (&id, &slot) in ids.iter().zip(&s_t) {
            lw += step_pick_logprob(plan, slot).expect("plan non-empty");
            lw += emission_logprob(plan, universe_size, slot, id, hyper.w_p);
        }
        if ranks == relative_order(&s_t).as_slice() {
            lw += hyper.beta;
        }
        sum += lw.exp();
        let mut pos = 0;
        loop {
            if pos == n {
                break 'outer;
            }
            idx[pos] += 1;
            if idx[pos] < nonempty.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
    sum.ln() - order_log_normalizer(n, hyper.beta)
}
