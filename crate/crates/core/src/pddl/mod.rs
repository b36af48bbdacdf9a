//! Typed STRIPS subset of PDDL 2.1: parsing, grounding, and state progression.
//!
//! Supported grammar: `:requirements` (recorded and otherwise ignored),
//! `:types`, `:predicates`, and `:action` blocks with `:parameters`,
//! `:precondition` (conjunction of literals, negation allowed) and `:effect`
//! (conjunction of add/delete atoms). Durative actions, numeric fluents,
//! quantifiers and conditional effects are rejected as unsupported.

pub mod parser;
pub mod printer;
pub mod sexpr;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub use parser::{parse_domain, parse_problem};
pub use printer::{print_domain, print_problem};

#[derive(Debug, Error)]
pub enum PddlError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported feature at {line}:{col}: {construct}")]
    UnsupportedFeature {
        line: usize,
        col: usize,
        construct: String,
    },
    #[error("unknown predicate `{name}`")]
    UnknownPredicate { name: String },
    #[error("type mismatch for `{atom}`: {message}")]
    TypeMismatch { atom: String, message: String },
}

/// Lowercase PDDL symbol: letters, digits, hyphen, underscore; starts with a
/// letter. Mixed-case input is folded at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Identifier(String);

impl Identifier {
    pub fn new(text: &str) -> Result<Self, PddlError> {
        let lower = text.to_lowercase();
        let mut chars = lower.chars();
        let ok = match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => chars
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
            _ => false,
        };
        if !ok {
            return Err(PddlError::Parse {
                line: 0,
                col: 0,
                message: format!("invalid identifier `{text}`"),
            });
        }
        Ok(Identifier(lower))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Identifier {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        Identifier::new(&s).map_err(|e| e.to_string())
    }
}

impl From<Identifier> for String {
    fn from(id: Identifier) -> String {
        id.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: Identifier,
    pub parent: Option<Identifier>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSchema {
    pub name: Identifier,
    pub params: Vec<(Identifier, Identifier)>,
}

/// A precondition/effect atom over parameters and constants. `Term::Var`
/// entries must name action parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(Identifier),
    Const(Identifier),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaAtom {
    pub predicate: Identifier,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaLiteral {
    pub positive: bool,
    pub atom: SchemaAtom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: Identifier,
    pub params: Vec<(Identifier, Identifier)>,
    pub precondition: Vec<SchemaLiteral>,
    pub add_effects: Vec<SchemaAtom>,
    pub delete_effects: Vec<SchemaAtom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: Identifier,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

/// A grounded action instance applied to concrete objects, e.g.
/// `inspect(rr, a)`. Also used for ground state atoms, which share the shape.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundedPredicate {
    pub name: Identifier,
    pub args: Vec<Identifier>,
}

impl GroundedPredicate {
    pub fn new(name: Identifier, args: Vec<Identifier>) -> Self {
        GroundedPredicate { name, args }
    }

    pub fn parse(name: &str, args: &[&str]) -> Result<Self, PddlError> {
        Ok(GroundedPredicate {
            name: Identifier::new(name)?,
            args: args.iter().map(|a| Identifier::new(a)).collect::<Result<_, _>>()?,
        })
    }
}

impl fmt::Display for GroundedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: Identifier,
    pub domain_name: Identifier,
    pub objects: Vec<(Identifier, Identifier)>,
    pub init: BTreeSet<GroundedPredicate>,
    pub goal: Vec<GroundLiteral>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundLiteral {
    pub positive: bool,
    pub atom: GroundedPredicate,
}

/// Fully instantiated action: preconditions and effects are ground atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundedAction {
    pub source: GroundedPredicate,
    pub pre_pos: BTreeSet<GroundedPredicate>,
    pub pre_neg: BTreeSet<GroundedPredicate>,
    pub adds: BTreeSet<GroundedPredicate>,
    pub deletes: BTreeSet<GroundedPredicate>,
}

/// Closed-world state: atoms not present are false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub atoms: BTreeSet<GroundedPredicate>,
}

impl State {
    pub fn holds(&self, atom: &GroundedPredicate) -> bool {
        self.atoms.contains(atom)
    }

    pub fn satisfies(&self, goal: &[GroundLiteral]) -> bool {
        goal.iter()
            .all(|lit| self.holds(&lit.atom) == lit.positive)
    }
}

impl Domain {
    pub fn action(&self, name: &Identifier) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| &a.name == name)
    }

    pub fn predicate(&self, name: &Identifier) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| &p.name == name)
    }

    /// True iff `ty` equals `ancestor` or is a descendant of it in the type
    /// forest. Every declared type is implicitly a subtype of `object`.
    pub fn is_subtype(&self, ty: &Identifier, ancestor: &Identifier) -> bool {
        if ancestor.as_str() == "object" || ty == ancestor {
            return true;
        }
        let mut current = ty.clone();
        let mut hops = 0;
        while let Some(decl) = self.types.iter().find(|t| t.name == current) {
            match &decl.parent {
                Some(p) => {
                    if p == ancestor {
                        return true;
                    }
                    current = p.clone();
                }
                None => return false,
            }
            hops += 1;
            if hops > self.types.len() {
                return false;
            }
        }
        false
    }
}

impl Problem {
    pub fn object_type(&self, name: &Identifier) -> Option<&Identifier> {
        self.objects
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn initial_state(&self) -> State {
        State {
            atoms: self.init.clone(),
        }
    }
}

/// Binds a dialog predicate to an action schema. Returns `None`
/// (the unknown-action marker) when no schema matches by name, arity, or
/// argument types; dialog-derived actions outside the domain are expected,
/// so this is a value rather than an error.
pub fn ground_action(
    domain: &Domain,
    pred: &GroundedPredicate,
    problem: &Problem,
) -> Option<GroundedAction> {
    let schema = domain.action(&pred.name)?;
    if schema.params.len() != pred.args.len() {
        return None;
    }
    let mut binding: BTreeMap<&Identifier, &Identifier> = BTreeMap::new();
    for ((param, ptype), arg) in schema.params.iter().zip(&pred.args) {
        let otype = problem.object_type(arg)?;
        if !domain.is_subtype(otype, ptype) {
            return None;
        }
        binding.insert(param, arg);
    }
    let subst_atom = |atom: &SchemaAtom| -> Option<GroundedPredicate> {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding.get(v).map(|&o| o.clone()),
                Term::Const(c) => Some(c.clone()),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(GroundedPredicate::new(atom.predicate.clone(), args))
    };
    let mut pre_pos = BTreeSet::new();
    let mut pre_neg = BTreeSet::new();
    for lit in &schema.precondition {
        let atom = subst_atom(&lit.atom)?;
        if lit.positive {
            pre_pos.insert(atom);
        } else {
            pre_neg.insert(atom);
        }
    }
    let adds = schema
        .add_effects
        .iter()
        .map(&subst_atom)
        .collect::<Option<BTreeSet<_>>>()?;
    let deletes = schema
        .delete_effects
        .iter()
        .map(&subst_atom)
        .collect::<Option<BTreeSet<_>>>()?;
    Some(GroundedAction {
        source: pred.clone(),
        pre_pos,
        pre_neg,
        adds,
        deletes,
    })
}

/// Standard STRIPS applicability: positive preconditions present, negative
/// ones absent.
pub fn applicable(state: &State, action: &GroundedAction) -> bool {
    action.pre_pos.iter().all(|a| state.holds(a))
        && action.pre_neg.iter().all(|a| !state.holds(a))
}

/// Joint application of a step: all deletes first, then all adds. Callers
/// guarantee applicability and pairwise non-mutex.
pub fn apply<'a, I>(state: &State, actions: I) -> State
where
    I: IntoIterator<Item = &'a GroundedAction> + Clone,
{
    let mut atoms = state.atoms.clone();
    for action in actions.clone() {
        for d in &action.deletes {
            atoms.remove(d);
        }
    }
    for action in actions {
        for a in &action.adds {
            atoms.insert(a.clone());
        }
    }
    State { atoms }
}
