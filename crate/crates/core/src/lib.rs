//! Inference of a team's final agreed-upon plan from structured planning
//! dialog: a generative model of utterances combined with a PDDL
//! plan-validity prior, sampled with Metropolis-Hastings within Gibbs.

pub mod cli;
pub mod eval;
pub mod io;
pub mod model;
pub mod pddl;
pub mod sampler;
pub mod simulator;
pub mod validator;
