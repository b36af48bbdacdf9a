//! Forward simulation of planning-dialog sessions from a known plan.
//!
//! Each utterance is sampled from the generative model: a truncated-geometric
//! mention count, slot picks proportional to slot size, noisy emissions
//! (in-slot with probability `w_p`, otherwise uniform over the mention
//! universe), and a relative order that matches the dense ranking of the
//! picked slots with probability `e^beta / (e^beta - 1 + W(n))`, else is
//! uniform over the remaining weak orderings.

use crate::model::{fubini, relative_order, Hyperparams, PredicateUniverse, Session, StepPlan, Utterance};
use crate::pddl::GroundedPredicate;
use crate::validator::SteppedPlan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("plan has no predicates")]
    EmptyPlan,
    #[error("distractor `{0}` duplicates a plan predicate")]
    UniverseMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of utterances to generate.
    pub utterances: usize,
    /// Mean of the untruncated geometric mention-count distribution.
    pub mean_len: f64,
    /// Mention count is truncated to `1..=n_max`.
    pub n_max: usize,
    pub hyper: Hyperparams,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            utterances: 30,
            mean_len: 3.0,
            n_max: 4,
            hyper: Hyperparams::default(),
            seed: 0,
        }
    }
}

/// What the simulator knows and inference must recover.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub plan: SteppedPlan,
    pub distractors: Vec<GroundedPredicate>,
}

/// All dense rank vectors of length `n` (weak orderings); `W(n)` of them.
pub fn enumerate_weak_orderings(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![1usize; n];
    loop {
        if relative_order(&current) == current {
            out.push(current.clone());
        }
        let mut pos = 0;
        loop {
            if pos == n {
                debug_assert_eq!(out.len() as u64, fubini(n));
                return out;
            }
            current[pos] += 1;
            if current[pos] <= n {
                break;
            }
            current[pos] = 1;
            pos += 1;
        }
    }
    // n = 0 never loops: the empty ranking is pushed once above
}

fn truncated_geometric<R: Rng>(mean: f64, n_max: usize, rng: &mut R) -> usize {
    let p = (1.0 / mean).clamp(1e-9, 1.0);
    let weights: Vec<f64> = (1..=n_max)
        .map(|k| (1.0 - p).powi(k as i32 - 1) * p)
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return k + 1;
        }
    }
    n_max
}

/// Generates a session from `plan` plus noise `distractors`. The mention
/// universe is the plan's predicates followed by the distractors, so every
/// distractor mention is model noise. Deterministic given the seed.
pub fn generate_session(
    plan: &SteppedPlan,
    distractors: &[GroundedPredicate],
    config: &SimConfig,
) -> Result<(Session, GroundTruth), SimError> {
    let plan_preds: Vec<GroundedPredicate> = plan.predicates().cloned().collect();
    if plan_preds.is_empty() {
        return Err(SimError::EmptyPlan);
    }
    for d in distractors {
        if plan_preds.contains(d) {
            return Err(SimError::UniverseMismatch(d.to_string()));
        }
    }
    let universe = PredicateUniverse::from_predicates(plan_preds.iter().chain(distractors));
    if universe.len() < plan_preds.len() + distractors.len() {
        // duplicate within the distractor list itself
        let dup = distractors
            .iter()
            .enumerate()
            .find(|(i, d)| distractors[..*i].contains(d))
            .map(|(_, d)| d.to_string())
            .unwrap_or_default();
        return Err(SimError::UniverseMismatch(dup));
    }
    let latent = StepPlan::from_steps(
        universe.len(),
        &plan
            .steps
            .iter()
            .map(|step| {
                step.iter()
                    .map(|p| universe.id_of(p).expect("plan predicate in universe"))
                    .collect()
            })
            .collect::<Vec<_>>(),
    );
    let total = latent.placed_count();
    let nonempty: Vec<usize> = (0..latent.capacity())
        .filter(|&s| latent.slot_size(s) > 0)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let beta = config.hyper.beta;
    let w_p = config.hyper.w_p;
    let mut utterances = Vec::with_capacity(config.utterances);
    for _ in 0..config.utterances {
        let n = truncated_geometric(config.mean_len, config.n_max, &mut rng);
        // slot picks, proportional to slot size
        let mut slots = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u = rng.gen::<f64>() * total as f64;
            let mut chosen = nonempty[nonempty.len() - 1];
            for &s in &nonempty {
                u -= latent.slot_size(s) as f64;
                if u <= 0.0 {
                    chosen = s;
                    break;
                }
            }
            slots.push(chosen);
        }
        // emissions
        let mentions: Vec<usize> = slots
            .iter()
            .map(|&s| {
                if rng.gen::<f64>() < w_p {
                    let members: Vec<usize> = latent.slot(s).iter().copied().collect();
                    members[rng.gen_range(0..members.len())]
                } else {
                    rng.gen_range(0..universe.len())
                }
            })
            .collect();
        // relative order
        let matched = relative_order(&slots);
        let z = beta.exp() - 1.0 + fubini(n) as f64;
        let order = if rng.gen::<f64>() < beta.exp() / z {
            matched
        } else {
            let others: Vec<Vec<usize>> = enumerate_weak_orderings(n)
                .into_iter()
                .filter(|o| *o != matched)
                .collect();
            if others.is_empty() {
                matched
            } else {
                others[rng.gen_range(0..others.len())].clone()
            }
        };
        let n_groups = order.iter().copied().max().unwrap_or(0);
        let mut groups: Vec<Vec<GroundedPredicate>> = vec![Vec::new(); n_groups];
        for (&id, &rank) in mentions.iter().zip(&order) {
            groups[rank - 1].push(universe.predicate(id).clone());
        }
        utterances.push(Utterance::new(groups));
    }
    let session = Session::new(utterances).expect("at least one utterance");
    Ok((
        session,
        GroundTruth {
            plan: plan.clone(),
            distractors: distractors.to_vec(),
        },
    ))
}
