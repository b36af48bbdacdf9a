//! JSON serialization of sessions, plans, ground truth and posterior
//! summaries, plus atomic file writes.
//!
//! A grounded predicate is a flat string array `[name, arg1, ...]`. A
//! session is `{"utterances": [...]}` where each utterance is a list of
//! groups and each group a list of predicates. A plan is
//! `{"steps": [[predicate, ...], ...]}`.

use crate::model::{Session, Utterance};
use crate::pddl::GroundedPredicate;
use crate::sampler::PosteriorSummary;
use crate::simulator::GroundTruth;
use crate::validator::SteppedPlan;
use serde_json::{json, Map, Value};
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Schema(String),
}

fn schema(msg: impl Into<String>) -> IoError {
    IoError::Schema(msg.into())
}

pub fn pred_to_json(p: &GroundedPredicate) -> Value {
    let mut parts = vec![Value::String(p.name.to_string())];
    parts.extend(p.args.iter().map(|a| Value::String(a.to_string())));
    Value::Array(parts)
}

pub fn pred_from_json(v: &Value) -> Result<GroundedPredicate, IoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(format!("predicate must be a string array, got {v}")))?;
    let strs: Vec<&str> = arr
        .iter()
        .map(|e| {
            e.as_str()
                .ok_or_else(|| schema(format!("predicate entries must be strings, got {e}")))
        })
        .collect::<Result<_, _>>()?;
    let (name, args) = strs
        .split_first()
        .ok_or_else(|| schema("predicate array is empty"))?;
    GroundedPredicate::parse(name, args).map_err(|e| schema(e.to_string()))
}

pub fn session_to_json(session: &Session) -> Value {
    json!({
        "utterances": session
            .utterances
            .iter()
            .map(|u| {
                u.groups
                    .iter()
                    .map(|g| g.iter().map(pred_to_json).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    })
}

pub fn session_from_json(v: &Value) -> Result<Session, IoError> {
    let utterances = v
        .get("utterances")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("session must have an `utterances` array"))?;
    let mut parsed = Vec::with_capacity(utterances.len());
    for u in utterances {
        let groups = u
            .as_array()
            .ok_or_else(|| schema("utterance must be an array of groups"))?;
        let mut gs = Vec::with_capacity(groups.len());
        for g in groups {
            let preds = g
                .as_array()
                .ok_or_else(|| schema("group must be an array of predicates"))?;
            gs.push(preds.iter().map(pred_from_json).collect::<Result<Vec<_>, _>>()?);
        }
        parsed.push(Utterance::new(gs));
    }
    Session::new(parsed).map_err(|e| schema(e.to_string()))
}

pub fn plan_to_json(plan: &SteppedPlan) -> Value {
    json!({
        "steps": plan
            .steps
            .iter()
            .map(|s| s.iter().map(pred_to_json).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    })
}

pub fn plan_from_json(v: &Value) -> Result<SteppedPlan, IoError> {
    let steps = v
        .get("steps")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("plan must have a `steps` array"))?;
    let mut parsed = Vec::with_capacity(steps.len());
    for s in steps {
        let preds = s
            .as_array()
            .ok_or_else(|| schema("plan step must be an array of predicates"))?;
        parsed.push(preds.iter().map(pred_from_json).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(SteppedPlan::new(parsed))
}

pub fn truth_to_json(truth: &GroundTruth) -> Value {
    json!({
        "plan": plan_to_json(&truth.plan),
        "distractors": truth.distractors.iter().map(pred_to_json).collect::<Vec<_>>(),
    })
}

pub fn truth_from_json(v: &Value) -> Result<GroundTruth, IoError> {
    let plan = plan_from_json(
        v.get("plan")
            .ok_or_else(|| schema("ground truth must have a `plan`"))?,
    )?;
    let distractors = v
        .get("distractors")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("ground truth must have a `distractors` array"))?
        .iter()
        .map(pred_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroundTruth { plan, distractors })
}

pub fn summary_to_json(summary: &PosteriorSummary) -> Value {
    json!({
        "universe": summary.universe.iter().map(pred_to_json).collect::<Vec<_>>(),
        "map_plan": plan_to_json(&summary.map_plan),
        "map_log_posterior": summary.map_log_posterior,
        "marginals": summary
            .marginals
            .iter()
            .map(|m| {
                json!({
                    "predicate": pred_to_json(&m.predicate),
                    "absent": m.absent,
                    "ranks": m.ranks,
                })
            })
            .collect::<Vec<_>>(),
        "diagnostics": {
            "acceptance_rate": summary.diagnostics.acceptance_rate,
            "retained": summary.diagnostics.retained,
            "proposals": summary.diagnostics.proposals,
            "accepted": summary.diagnostics.accepted,
        },
        "samples": summary
            .samples
            .iter()
            .map(|s| json!({"steps": s.steps, "log_posterior": s.log_posterior}))
            .collect::<Vec<_>>(),
    })
}

/// Retained-sample plans of a serialized summary, resolved against its
/// universe.
pub fn summary_sample_plans(v: &Value) -> Result<Vec<SteppedPlan>, IoError> {
    let universe: Vec<GroundedPredicate> = v
        .get("universe")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("summary must have a `universe` array"))?
        .iter()
        .map(pred_from_json)
        .collect::<Result<_, _>>()?;
    let samples = v
        .get("samples")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("summary must have a `samples` array"))?;
    let mut plans = Vec::with_capacity(samples.len());
    for s in samples {
        let steps = s
            .get("steps")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("sample must have a `steps` array"))?;
        let mut plan_steps = Vec::with_capacity(steps.len());
        for step in steps {
            let ids = step
                .as_array()
                .ok_or_else(|| schema("sample step must be an id array"))?;
            let mut preds = Vec::with_capacity(ids.len());
            for id in ids {
                let id = id
                    .as_u64()
                    .and_then(|i| usize::try_from(i).ok())
                    .filter(|&i| i < universe.len())
                    .ok_or_else(|| schema(format!("sample id {id} outside universe")))?;
                preds.push(universe[id].clone());
            }
            plan_steps.push(preds);
        }
        plans.push(SteppedPlan::new(plan_steps));
    }
    Ok(plans)
}

/// Mention canonicalization table: maps the display form of a predicate
/// (e.g. `"inspect(rr, a)"`) to a replacement predicate array.
pub fn predicate_map_from_json(v: &Value) -> Result<Vec<(String, GroundedPredicate)>, IoError> {
    let obj: &Map<String, Value> = v
        .as_object()
        .ok_or_else(|| schema("predicate map must be a JSON object"))?;
    obj.iter()
        .map(|(k, val)| Ok((k.clone(), pred_from_json(val)?)))
        .collect()
}

pub fn apply_predicate_map(session: &mut Session, map: &[(String, GroundedPredicate)]) {
    for utterance in &mut session.utterances {
        for group in &mut utterance.groups {
            for pred in group.iter_mut() {
                if let Some((_, replacement)) =
                    map.iter().find(|(k, _)| *k == pred.to_string())
                {
                    *pred = replacement.clone();
                }
            }
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json(path: &Path) -> Result<Value, IoError> {
    serde_json::from_str(&read_text(path)?).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Writes pretty-printed JSON via a temporary file in the target directory,
/// then renames it into place, so readers never observe a partial file.
pub fn write_json_atomic(path: &Path, value: &Value) -> Result<(), IoError> {
    let wrap = |source: std::io::Error| IoError::File {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(wrap)?;
    let text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    tmp.write_all(text.as_bytes()).map_err(wrap)?;
    tmp.write_all(b"\n").map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}
