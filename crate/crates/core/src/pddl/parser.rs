//! Readers turning s-expressions into `Domain` and `Problem` values.

use super::sexpr::{parse, Pos, Sexpr};
use super::{
    ActionSchema, Domain, GroundLiteral, GroundedPredicate, Identifier, PddlError,
    PredicateSchema, Problem, SchemaAtom, SchemaLiteral, Term, TypeDecl,
};
use std::collections::BTreeSet;

fn err(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Parse {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn unsupported(pos: Pos, construct: impl Into<String>) -> PddlError {
    PddlError::UnsupportedFeature {
        line: pos.line,
        col: pos.col,
        construct: construct.into(),
    }
}

fn sym(expr: &Sexpr, what: &str) -> Result<Identifier, PddlError> {
    let s = expr
        .as_sym()
        .ok_or_else(|| err(expr.pos(), format!("expected {what}, found a list")))?;
    Identifier::new(s).map_err(|_| err(expr.pos(), format!("invalid {what} `{s}`")))
}

/// Parses `x y - t z - u w` style typed lists; trailing untyped names get
/// type `object`. A leading `?` on a name (parameter position) is stripped.
fn typed_list(items: &[Sexpr], pos: Pos) -> Result<Vec<(Identifier, Identifier)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<Identifier> = Vec::new();
    let mut iter = items.iter().peekable();
    while let Some(item) = iter.next() {
        let s = item
            .as_sym()
            .ok_or_else(|| err(item.pos(), "expected a name in typed list"))?;
        if s == "-" {
            let ty_expr = iter
                .next()
                .ok_or_else(|| err(item.pos(), "expected a type after `-`"))?;
            let ty = sym(ty_expr, "type name")?;
            if pending.is_empty() {
                return Err(err(item.pos(), "`-` with no preceding names"));
            }
            for name in pending.drain(..) {
                out.push((name, ty.clone()));
            }
        } else {
            let bare = s.strip_prefix('?').unwrap_or(s);
            pending.push(
                Identifier::new(bare).map_err(|_| err(item.pos(), format!("invalid name `{s}`")))?,
            );
        }
    }
    let object = Identifier::new("object").unwrap();
    for name in pending {
        out.push((name, object.clone()));
    }
    let _ = pos;
    Ok(out)
}

/// A parameter name with its leading `?` stripped, or a constant.
fn term(expr: &Sexpr) -> Result<Term, PddlError> {
    let s = expr
        .as_sym()
        .ok_or_else(|| err(expr.pos(), "expected a term, found a list"))?;
    if let Some(rest) = s.strip_prefix('?') {
        Ok(Term::Var(
            Identifier::new(rest).map_err(|_| err(expr.pos(), format!("invalid variable `{s}`")))?,
        ))
    } else {
        Ok(Term::Const(sym(expr, "constant")?))
    }
}

const UNSUPPORTED_CONNECTIVES: &[&str] = &[
    "forall", "exists", "when", "or", "imply", "=", "increase", "decrease", "assign",
    "scale-up", "scale-down",
];

fn schema_atom(expr: &Sexpr) -> Result<SchemaAtom, PddlError> {
    let items = expr
        .as_list()
        .ok_or_else(|| err(expr.pos(), "expected an atom"))?;
    let head = items
        .first()
        .ok_or_else(|| err(expr.pos(), "empty atom"))?;
    let head_sym = head.as_sym().unwrap_or("");
    if UNSUPPORTED_CONNECTIVES.contains(&head_sym) {
        return Err(unsupported(expr.pos(), format!("({head_sym} ...)")));
    }
    Ok(SchemaAtom {
        predicate: sym(head, "predicate name")?,
        args: items[1..].iter().map(term).collect::<Result<_, _>>()?,
    })
}

fn schema_literals(expr: &Sexpr, allow_negation: bool) -> Result<Vec<SchemaLiteral>, PddlError> {
    let items = expr
        .as_list()
        .ok_or_else(|| err(expr.pos(), "expected a condition"))?;
    match items.first().and_then(Sexpr::as_sym) {
        Some("and") => {
            let mut out = Vec::new();
            for part in &items[1..] {
                out.extend(schema_literals(part, allow_negation)?);
            }
            Ok(out)
        }
        Some("not") => {
            if !allow_negation {
                return Err(unsupported(expr.pos(), "(not ...) in this position"));
            }
            if items.len() != 2 {
                return Err(err(expr.pos(), "`not` takes exactly one atom"));
            }
            Ok(vec![SchemaLiteral {
                positive: false,
                atom: schema_atom(&items[1])?,
            }])
        }
        _ => Ok(vec![SchemaLiteral {
            positive: true,
            atom: schema_atom(expr)?,
        }]),
    }
}

fn check_schema_vars(
    atoms: &[&SchemaAtom],
    params: &[(Identifier, Identifier)],
    pos: Pos,
) -> Result<(), PddlError> {
    for atom in atoms {
        for t in &atom.args {
            if let Term::Var(v) = t {
                if !params.iter().any(|(p, _)| p == v) {
                    return Err(err(
                        pos,
                        format!("variable `?{v}` not declared in :parameters"),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn parse_action(items: &[Sexpr], pos: Pos) -> Result<ActionSchema, PddlError> {
    let name = sym(
        items.get(1).ok_or_else(|| err(pos, "missing action name"))?,
        "action name",
    )?;
    let mut params = Vec::new();
    let mut precondition = Vec::new();
    let mut add_effects = Vec::new();
    let mut delete_effects = Vec::new();
    let mut idx = 2;
    while idx < items.len() {
        let key = items[idx]
            .as_sym()
            .ok_or_else(|| err(items[idx].pos(), "expected a keyword like :parameters"))?;
        let value = items
            .get(idx + 1)
            .ok_or_else(|| err(items[idx].pos(), format!("missing value after {key}")))?;
        match key {
            ":parameters" => {
                let list = value
                    .as_list()
                    .ok_or_else(|| err(value.pos(), ":parameters expects a list"))?;
                params = typed_list(list, value.pos())?;
            }
            ":precondition" => precondition = schema_literals(value, true)?,
            ":effect" => {
                for lit in schema_literals(value, true)? {
                    if lit.positive {
                        add_effects.push(lit.atom);
                    } else {
                        delete_effects.push(lit.atom);
                    }
                }
            }
            other => return Err(unsupported(items[idx].pos(), other.to_owned())),
        }
        idx += 2;
    }
    let mut seen = BTreeSet::new();
    for (p, _) in &params {
        if !seen.insert(p.clone()) {
            return Err(err(pos, format!("duplicate parameter `?{p}` in action `{name}`")));
        }
    }
    let atoms: Vec<&SchemaAtom> = precondition
        .iter()
        .map(|l| &l.atom)
        .chain(add_effects.iter())
        .chain(delete_effects.iter())
        .collect();
    check_schema_vars(&atoms, &params, pos)?;
    Ok(ActionSchema {
        name,
        params,
        precondition,
        add_effects,
        delete_effects,
    })
}

/// Note that an atom may appear in both the add and delete lists of one
/// action; deletes apply before adds, so the pattern deletes then restores
/// the atom within a single step (used for per-step agent exclusivity).
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let expr = parse(text)?;
    let items = expr
        .as_list()
        .ok_or_else(|| err(expr.pos(), "expected (define (domain ...) ...)"))?;
    if items.first().and_then(Sexpr::as_sym) != Some("define") {
        return Err(err(expr.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .and_then(Sexpr::as_list)
        .ok_or_else(|| err(expr.pos(), "expected (domain <name>)"))?;
    if header.first().and_then(Sexpr::as_sym) != Some("domain") {
        return Err(err(expr.pos(), "expected (domain <name>)"));
    }
    let name = sym(
        header.get(1).ok_or_else(|| err(expr.pos(), "missing domain name"))?,
        "domain name",
    )?;

    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };

    for section in &items[2..] {
        let parts = section
            .as_list()
            .ok_or_else(|| err(section.pos(), "expected a (:section ...)"))?;
        match parts.first().and_then(Sexpr::as_sym) {
            Some(":requirements") => {
                for r in &parts[1..] {
                    let s = r
                        .as_sym()
                        .ok_or_else(|| err(r.pos(), "expected a requirement flag"))?;
                    domain.requirements.push(s.to_owned());
                }
            }
            Some(":types") => {
                let typed = typed_list(&parts[1..], section.pos())?;
                for (name, parent) in typed {
                    let parent = if parent.as_str() == "object" {
                        None
                    } else {
                        Some(parent)
                    };
                    domain.types.push(TypeDecl { name, parent });
                }
            }
            Some(":predicates") => {
                for p in &parts[1..] {
                    let atom_items = p
                        .as_list()
                        .ok_or_else(|| err(p.pos(), "expected a predicate declaration"))?;
                    let pname = sym(
                        atom_items
                            .first()
                            .ok_or_else(|| err(p.pos(), "empty predicate declaration"))?,
                        "predicate name",
                    )?;
                    let params = typed_list(&atom_items[1..], p.pos())?;
                    let mut seen = BTreeSet::new();
                    for (n, _) in &params {
                        if !seen.insert(n.clone()) {
                            return Err(err(
                                p.pos(),
                                format!("duplicate parameter `?{n}` in predicate `{pname}`"),
                            ));
                        }
                    }
                    domain.predicates.push(PredicateSchema { name: pname, params });
                }
            }
            Some(":action") => domain.actions.push(parse_action(parts, section.pos())?),
            Some(other) => return Err(unsupported(section.pos(), other.to_owned())),
            None => return Err(err(section.pos(), "empty section")),
        }
    }

    check_domain(&domain, expr.pos())?;
    Ok(domain)
}

fn check_domain(domain: &Domain, pos: Pos) -> Result<(), PddlError> {
    let mut type_names = BTreeSet::new();
    for t in &domain.types {
        type_names.insert(t.name.clone());
    }
    for t in &domain.types {
        if let Some(p) = &t.parent {
            if !type_names.contains(p) && p.as_str() != "object" {
                return Err(err(pos, format!("type `{}` has undeclared parent `{p}`", t.name)));
            }
        }
        // cycle check: walk the parent chain with a hop budget
        let mut current = t;
        let mut hops = 0;
        while let Some(p) = &current.parent {
            match domain.types.iter().find(|d| &d.name == p) {
                Some(next) => current = next,
                None => break,
            }
            hops += 1;
            if hops > domain.types.len() {
                return Err(err(pos, format!("type hierarchy cycle involving `{}`", t.name)));
            }
        }
    }
    let mut pred_names = BTreeSet::new();
    for p in &domain.predicates {
        if !pred_names.insert(p.name.clone()) {
            return Err(err(pos, format!("duplicate predicate `{}`", p.name)));
        }
    }
    let mut action_names = BTreeSet::new();
    for a in &domain.actions {
        if !action_names.insert(a.name.clone()) {
            return Err(err(pos, format!("duplicate action `{}`", a.name)));
        }
        if pred_names.contains(&a.name) {
            return Err(err(
                pos,
                format!("action `{}` shares a name with a predicate", a.name),
            ));
        }
        for lit in &a.precondition {
            check_atom_against_schema(domain, &lit.atom, a, pos)?;
        }
        for atom in a.add_effects.iter().chain(&a.delete_effects) {
            check_atom_against_schema(domain, atom, a, pos)?;
        }
    }
    Ok(())
}

fn check_atom_against_schema(
    domain: &Domain,
    atom: &SchemaAtom,
    action: &ActionSchema,
    pos: Pos,
) -> Result<(), PddlError> {
    let schema = domain.predicate(&atom.predicate).ok_or_else(|| {
        PddlError::UnknownPredicate {
            name: atom.predicate.to_string(),
        }
    })?;
    if schema.params.len() != atom.args.len() {
        return Err(err(
            pos,
            format!(
                "predicate `{}` used with arity {} in action `{}`, declared {}",
                atom.predicate,
                atom.args.len(),
                action.name,
                schema.params.len()
            ),
        ));
    }
    Ok(())
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let expr = parse(text)?;
    let items = expr
        .as_list()
        .ok_or_else(|| err(expr.pos(), "expected (define (problem ...) ...)"))?;
    if items.first().and_then(Sexpr::as_sym) != Some("define") {
        return Err(err(expr.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .and_then(Sexpr::as_list)
        .ok_or_else(|| err(expr.pos(), "expected (problem <name>)"))?;
    if header.first().and_then(Sexpr::as_sym) != Some("problem") {
        return Err(err(expr.pos(), "expected (problem <name>)"));
    }
    let name = sym(
        header.get(1).ok_or_else(|| err(expr.pos(), "missing problem name"))?,
        "problem name",
    )?;

    let mut problem = Problem {
        name,
        domain_name: domain.name.clone(),
        objects: Vec::new(),
        init: BTreeSet::new(),
        goal: Vec::new(),
    };

    for section in &items[2..] {
        let parts = section
            .as_list()
            .ok_or_else(|| err(section.pos(), "expected a (:section ...)"))?;
        match parts.first().and_then(Sexpr::as_sym) {
            Some(":domain") => {
                let dname = sym(
                    parts.get(1).ok_or_else(|| err(section.pos(), "missing domain name"))?,
                    "domain name",
                )?;
                if dname != domain.name {
                    return Err(err(
                        section.pos(),
                        format!("problem requires domain `{dname}`, got `{}`", domain.name),
                    ));
                }
                problem.domain_name = dname;
            }
            Some(":objects") => {
                problem.objects = typed_list(&parts[1..], section.pos())?;
            }
            Some(":init") => {
                for atom_expr in &parts[1..] {
                    let atom = ground_atom(atom_expr)?;
                    check_ground_atom(domain, &problem, &atom)?;
                    problem.init.insert(atom);
                }
            }
            Some(":goal") => {
                let goal_expr = parts
                    .get(1)
                    .ok_or_else(|| err(section.pos(), "missing goal condition"))?;
                problem.goal = ground_literals(goal_expr)?;
                for lit in &problem.goal {
                    check_ground_atom(domain, &problem, &lit.atom)?;
                }
            }
            Some(other) => return Err(unsupported(section.pos(), other.to_owned())),
            None => return Err(err(section.pos(), "empty section")),
        }
    }
    Ok(problem)
}

fn ground_atom(expr: &Sexpr) -> Result<GroundedPredicate, PddlError> {
    let atom = schema_atom(expr)?;
    let args = atom
        .args
        .into_iter()
        .map(|t| match t {
            Term::Const(c) => Ok(c),
            Term::Var(v) => Err(err(expr.pos(), format!("unexpected variable `?{v}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroundedPredicate::new(atom.predicate, args))
}

fn ground_literals(expr: &Sexpr) -> Result<Vec<GroundLiteral>, PddlError> {
    let items = expr
        .as_list()
        .ok_or_else(|| err(expr.pos(), "expected a goal condition"))?;
    match items.first().and_then(Sexpr::as_sym) {
        Some("and") => {
            let mut out = Vec::new();
            for part in &items[1..] {
                out.extend(ground_literals(part)?);
            }
            Ok(out)
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(err(expr.pos(), "`not` takes exactly one atom"));
            }
            Ok(vec![GroundLiteral {
                positive: false,
                atom: ground_atom(&items[1])?,
            }])
        }
        _ => Ok(vec![GroundLiteral {
            positive: true,
            atom: ground_atom(expr)?,
        }]),
    }
}

fn check_ground_atom(
    domain: &Domain,
    problem: &Problem,
    atom: &GroundedPredicate,
) -> Result<(), PddlError> {
    let schema = domain
        .predicate(&atom.name)
        .ok_or_else(|| PddlError::UnknownPredicate {
            name: atom.name.to_string(),
        })?;
    if schema.params.len() != atom.args.len() {
        return Err(PddlError::TypeMismatch {
            atom: atom.to_string(),
            message: format!(
                "arity {} does not match declared {}",
                atom.args.len(),
                schema.params.len()
            ),
        });
    }
    for (arg, (pname, ptype)) in atom.args.iter().zip(&schema.params) {
        let otype = problem
            .object_type(arg)
            .ok_or_else(|| PddlError::TypeMismatch {
                atom: atom.to_string(),
                message: format!("object `{arg}` not declared"),
            })?;
        if !domain.is_subtype(otype, ptype) {
            return Err(PddlError::TypeMismatch {
                atom: atom.to_string(),
                message: format!(
                    "argument `{arg}` of type `{otype}` does not satisfy `?{pname} - {ptype}`"
                ),
            });
        }
    }
    Ok(())
}
