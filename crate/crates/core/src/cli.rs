//! Command-line interface.
//!
//! Exit codes: 0 on success (for `validate`, a valid plan), 1 when
//! `validate` finds the plan invalid, 2 on any error (bad input, parse
//! failure, I/O).

use crate::eval::{evaluate, exact_posterior, Metrics};
use crate::io::{
    apply_predicate_map, plan_from_json, plan_to_json, pred_to_json, predicate_map_from_json,
    read_json, read_text, session_from_json, session_to_json, summary_sample_plans,
    summary_to_json, truth_from_json, truth_to_json, write_json_atomic,
};
use crate::model::{Hyperparams, Session};
use crate::pddl::{parse_domain, parse_problem, Domain, GroundedPredicate, Problem};
use crate::sampler::{infer_multi_chain, SamplerConfig};
use crate::simulator::{generate_session, SimConfig};
use crate::validator::{validate, SteppedPlan, UnknownActionPolicy};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
/// Input problems: unreadable files, parse failures, schema violations, bad flags.
pub const EXIT_ERROR: i32 = 1;
/// Semantic negative: the checked plan is invalid.
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "planinfer", version, about = "Infer a team's plan from planning-dialog transcripts")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Strict,
    Ignore,
}

impl From<PolicyArg> for UnknownActionPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Strict => UnknownActionPolicy::Strict,
            PolicyArg::Ignore => UnknownActionPolicy::Ignore,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScoreMode {
    Map,
    MeanOverSamples,
}

#[derive(Debug, Args)]
struct HyperArgs {
    /// Log-weight bonus of validator-approved plans.
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Log-weight bonus of utterances matching the plan's step order.
    #[arg(long, default_value_t = 5.0)]
    beta: f64,
    /// In-slot emission mixture weight.
    #[arg(long = "wp", default_value_t = 0.8)]
    wp: f64,
}

impl HyperArgs {
    fn build(&self) -> Result<Hyperparams> {
        if !(0.0..=1.0).contains(&self.wp) {
            bail!("--wp must lie in [0, 1]");
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            bail!("--alpha and --beta must be non-negative");
        }
        Ok(Hyperparams {
            alpha: self.alpha,
            beta: self.beta,
            w_p: self.wp,
        })
    }
}

#[derive(Debug, Args)]
struct PddlArgs {
    /// PDDL domain file.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// PDDL problem file.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Drop the validity prior even when a domain/problem is given.
    #[arg(long = "no-pddl", default_value_t = false)]
    no_pddl: bool,
}

impl PddlArgs {
    fn load(&self) -> Result<Option<(Domain, Problem)>> {
        if self.no_pddl {
            return Ok(None);
        }
        match (&self.domain, &self.problem) {
            (Some(d), Some(p)) => Ok(Some(load_pddl(d, p)?)),
            (None, None) => Ok(None),
            _ => bail!("--domain and --problem must be given together"),
        }
    }
}

fn load_pddl(domain_path: &Path, problem_path: &Path) -> Result<(Domain, Problem)> {
    let domain = parse_domain(&read_text(domain_path)?)
        .with_context(|| format!("{}", domain_path.display()))?;
    let problem = parse_problem(&read_text(problem_path)?, &domain)
        .with_context(|| format!("{}", problem_path.display()))?;
    Ok((domain, problem))
}

#[derive(Debug, Args)]
struct SamplerArgs {
    /// Gibbs sweeps.
    #[arg(long, default_value_t = 3000)]
    gibbs: usize,
    /// MH plan moves per sweep.
    #[arg(long, default_value_t = 400)]
    mh: usize,
    /// Retain every thin-th MH state after burn-in.
    #[arg(long, default_value_t = 20)]
    thin: usize,
    /// Fraction of sweeps discarded as burn-in.
    #[arg(long = "burn-in", default_value_t = 0.5)]
    burn_in: f64,
    /// RNG seed; falls back to PLANINFER_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Exact assignment resampling is used while the conditional support
    /// has at most this many states.
    #[arg(long = "enum-limit", default_value_t = 100_000)]
    enum_limit: usize,
    /// How the validator treats plan predicates with no action schema.
    #[arg(long = "unknown-actions", value_enum, default_value_t = PolicyArg::Strict)]
    unknown_actions: PolicyArg,
    /// Independent chains (seed, seed+1, ...) whose samples are merged.
    #[arg(long, default_value_t = 1)]
    chains: usize,
}

impl SamplerArgs {
    fn build(&self) -> Result<SamplerConfig> {
        if !(0.0..=1.0).contains(&self.burn_in) {
            bail!("--burn-in must lie in [0, 1]");
        }
        if self.gibbs == 0 || self.mh == 0 || self.thin == 0 || self.chains == 0 {
            bail!("--gibbs, --mh, --thin and --chains must be positive");
        }
        Ok(SamplerConfig {
            gibbs_steps: self.gibbs,
            mh_steps_per_gibbs: self.mh,
            thin: self.thin,
            burn_in_fraction: self.burn_in,
            seed: resolve_seed(self.seed)?,
            enumeration_limit: self.enum_limit,
            unknown_action_policy: self.unknown_actions.into(),
        })
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("PLANINFER_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| anyhow!("PLANINFER_SEED must be an unsigned integer, got `{text}`")),
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a stepped plan against a domain and problem.
    Validate {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// Plan JSON file.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long = "unknown-actions", value_enum, default_value_t = PolicyArg::Strict)]
        unknown_actions: PolicyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the plan posterior for a session transcript.
    Infer {
        /// Session JSON file.
        #[arg(long)]
        session: PathBuf,
        #[command(flatten)]
        pddl: PddlArgs,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// JSON object mapping mention display forms to replacement
        /// predicates, applied before inference.
        #[arg(long = "predicate-map")]
        predicate_map: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic session from a known plan.
    Simulate {
        /// Ground-truth plan JSON file.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 30)]
        utterances: usize,
        /// Mean of the (truncated) geometric mention count.
        #[arg(long = "mean-len", default_value_t = 3.0)]
        mean_len: f64,
        /// Mention count cap.
        #[arg(long = "max-len", default_value_t = 4)]
        max_len: usize,
        /// Number of auto-generated noise predicates added to the mention
        /// universe.
        #[arg(long, default_value_t = 0)]
        distractors: usize,
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "out-session")]
        out_session: Option<PathBuf>,
        #[arg(long = "out-truth")]
        out_truth: Option<PathBuf>,
    },
    /// Score an inferred plan (or posterior summary) against ground truth.
    Evaluate {
        /// Plan JSON or posterior-summary JSON.
        #[arg(long)]
        inferred: PathBuf,
        /// Ground-truth JSON with `plan` and `distractors`.
        #[arg(long)]
        truth: PathBuf,
        /// With a posterior summary: score the MAP plan, or average the
        /// metrics over all retained samples.
        #[arg(long, value_enum, default_value_t = ScoreMode::Map)]
        score: ScoreMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact posterior by enumeration (tiny instances only).
    Exact {
        #[arg(long)]
        session: PathBuf,
        #[command(flatten)]
        pddl: PddlArgs,
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long = "unknown-actions", value_enum, default_value_t = PolicyArg::Strict)]
        unknown_actions: PolicyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(value: &Value, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_json_atomic(path, value)?,
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn load_session(path: &Path, predicate_map: &Option<PathBuf>) -> Result<Session> {
    let mut session = session_from_json(&read_json(path)?)?;
    if let Some(map_path) = predicate_map {
        let map = predicate_map_from_json(&read_json(map_path)?)?;
        apply_predicate_map(&mut session, &map);
    }
    Ok(session)
}

fn run_command(command: Command) -> Result<i32> {
    match command {
        Command::Validate {
            domain,
            problem,
            plan,
            unknown_actions,
            out,
        } => {
            let (domain, problem) = load_pddl(&domain, &problem)?;
            let plan: SteppedPlan = plan_from_json(&read_json(&plan)?)?;
            let result = validate(&domain, &problem, &plan, unknown_actions.into());
            emit(&serde_json::to_value(&result)?, &out)?;
            Ok(if result.valid { EXIT_OK } else { EXIT_INVALID })
        }
        Command::Infer {
            session,
            pddl,
            hyper,
            sampler,
            predicate_map,
            out,
        } => {
            let session = load_session(&session, &predicate_map)?;
            let loaded = pddl.load()?;
            let hyper = hyper.build()?;
            let chains = sampler.chains;
            let config = sampler.build()?;
            let summary = infer_multi_chain(
                &session,
                loaded.as_ref().map(|(d, p)| (d, p)),
                &hyper,
                &config,
                chains,
            )?;
            emit(&summary_to_json(&summary), &out)?;
            Ok(EXIT_OK)
        }
        Command::Simulate {
            plan,
            utterances,
            mean_len,
            max_len,
            distractors,
            hyper,
            seed,
            out_session,
            out_truth,
        } => {
            if utterances == 0 || max_len == 0 || mean_len <= 0.0 {
                bail!("--utterances, --max-len and --mean-len must be positive");
            }
            let plan = plan_from_json(&read_json(&plan)?)?;
            let noise: Vec<GroundedPredicate> = (1..=distractors)
                .map(|i| {
                    GroundedPredicate::parse(&format!("distractor-{i}"), &[])
                        .expect("generated name is valid")
                })
                .collect();
            let config = SimConfig {
                utterances,
                mean_len,
                n_max: max_len,
                hyper: hyper.build()?,
                seed: resolve_seed(seed)?,
            };
            let (session, truth) = generate_session(&plan, &noise, &config)?;
            let session_json = session_to_json(&session);
            let truth_json = truth_to_json(&truth);
            match (&out_session, &out_truth) {
                (None, None) => emit(
                    &json!({"session": session_json, "truth": truth_json}),
                    &None,
                )?,
                _ => {
                    if let Some(path) = &out_session {
                        write_json_atomic(path, &session_json)?;
                    }
                    if let Some(path) = &out_truth {
                        write_json_atomic(path, &truth_json)?;
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Evaluate {
            inferred,
            truth,
            score,
            out,
        } => {
            let truth = truth_from_json(&read_json(&truth)?)?;
            let value = read_json(&inferred)?;
            let metrics = if value.get("samples").is_some() {
                match score {
                    ScoreMode::Map => {
                        let plan = plan_from_json(
                            value
                                .get("map_plan")
                                .ok_or_else(|| anyhow!("summary has no `map_plan`"))?,
                        )?;
                        evaluate(&plan, &truth.plan, &truth.distractors)
                    }
                    ScoreMode::MeanOverSamples => {
                        let plans = summary_sample_plans(&value)?;
                        if plans.is_empty() {
                            bail!("summary has no retained samples to score");
                        }
                        let n = plans.len() as f64;
                        let mut acc = Metrics {
                            pct_inferred: 0.0,
                            pct_noise_rej: 0.0,
                            pct_seq: 0.0,
                            overall: 0.0,
                        };
                        for plan in &plans {
                            let m = evaluate(plan, &truth.plan, &truth.distractors);
                            acc.pct_inferred += m.pct_inferred / n;
                            acc.pct_noise_rej += m.pct_noise_rej / n;
                            acc.pct_seq += m.pct_seq / n;
                            acc.overall += m.overall / n;
                        }
                        acc
                    }
                }
            } else {
                let plan = plan_from_json(&value)?;
                evaluate(&plan, &truth.plan, &truth.distractors)
            };
            emit(&serde_json::to_value(metrics)?, &out)?;
            Ok(EXIT_OK)
        }
        Command::Exact {
            session,
            pddl,
            hyper,
            unknown_actions,
            out,
        } => {
            let session = load_session(&session, &None)?;
            let loaded = pddl.load()?;
            let hyper = hyper.build()?;
            let exact = exact_posterior(
                &session,
                loaded.as_ref().map(|(d, p)| (d, p)),
                &hyper,
                unknown_actions.into(),
            )?;
            let entries: Vec<Value> = exact
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "plan": plan_to_json(&exact.plan(e)),
                        "prob": e.prob,
                    })
                })
                .collect();
            emit(
                &json!({
                    "universe": exact.universe.iter().map(pred_to_json).collect::<Vec<_>>(),
                    "plans": entries,
                }),
                &out,
            )?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs the selected command, returning the process exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version via "errors" that exit 0
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
