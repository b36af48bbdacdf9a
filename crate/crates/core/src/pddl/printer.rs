//! Emits canonical PDDL text; `parse_domain(print_domain(d))` is structurally
//! equal to `d` (likewise for problems).

use super::{
    ActionSchema, Domain, GroundLiteral, GroundedPredicate, Problem, SchemaAtom, SchemaLiteral,
    Term,
};
use std::fmt::Write;

fn write_typed_list(out: &mut String, items: &[(super::Identifier, super::Identifier)], var: bool) {
    for (i, (name, ty)) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let prefix = if var { "?" } else { "" };
        write!(out, "{prefix}{name} - {ty}").unwrap();
    }
}

fn write_schema_atom(out: &mut String, atom: &SchemaAtom) {
    write!(out, "({}", atom.predicate).unwrap();
    for arg in &atom.args {
        match arg {
            Term::Var(v) => write!(out, " ?{v}").unwrap(),
            Term::Const(c) => write!(out, " {c}").unwrap(),
        }
    }
    out.push(')');
}

fn write_schema_literal(out: &mut String, lit: &SchemaLiteral) {
    if lit.positive {
        write_schema_atom(out, &lit.atom);
    } else {
        out.push_str("(not ");
        write_schema_atom(out, &lit.atom);
        out.push(')');
    }
}

fn write_ground_atom(out: &mut String, atom: &GroundedPredicate) {
    write!(out, "({}", atom.name).unwrap();
    for arg in &atom.args {
        write!(out, " {arg}").unwrap();
    }
    out.push(')');
}

fn write_action(out: &mut String, action: &ActionSchema) {
    write!(out, "  (:action {}\n    :parameters (", action.name).unwrap();
    write_typed_list(out, &action.params, true);
    out.push_str(")\n    :precondition (and");
    for lit in &action.precondition {
        out.push(' ');
        write_schema_literal(out, lit);
    }
    out.push_str(")\n    :effect (and");
    for atom in &action.add_effects {
        out.push(' ');
        write_schema_atom(out, atom);
    }
    for atom in &action.delete_effects {
        out.push_str(" (not ");
        write_schema_atom(out, atom);
        out.push(')');
    }
    out.push_str("))\n");
}

pub fn print_domain(domain: &Domain) -> String {
    let mut out = String::new();
    writeln!(out, "(define (domain {})", domain.name).unwrap();
    if !domain.requirements.is_empty() {
        out.push_str("  (:requirements");
        for r in &domain.requirements {
            write!(out, " {r}").unwrap();
        }
        out.push_str(")\n");
    }
    if !domain.types.is_empty() {
        out.push_str("  (:types");
        for t in &domain.types {
            match &t.parent {
                Some(p) => write!(out, " {} - {p}", t.name).unwrap(),
                None => write!(out, " {} - object", t.name).unwrap(),
            }
        }
        out.push_str(")\n");
    }
    if !domain.predicates.is_empty() {
        out.push_str("  (:predicates\n");
        for p in &domain.predicates {
            write!(out, "    ({}", p.name).unwrap();
            if !p.params.is_empty() {
                out.push(' ');
                write_typed_list(&mut out, &p.params, true);
            }
            out.push_str(")\n");
        }
        out.push_str("  )\n");
    }
    for action in &domain.actions {
        write_action(&mut out, action);
    }
    out.push(')');
    out
}

pub fn print_problem(problem: &Problem) -> String {
    let mut out = String::new();
    writeln!(out, "(define (problem {})", problem.name).unwrap();
    writeln!(out, "  (:domain {})", problem.domain_name).unwrap();
    if !problem.objects.is_empty() {
        out.push_str("  (:objects ");
        write_typed_list(&mut out, &problem.objects, false);
        out.push_str(")\n");
    }
    out.push_str("  (:init");
    for atom in &problem.init {
        out.push(' ');
        write_ground_atom(&mut out, atom);
    }
    out.push_str(")\n  (:goal (and");
    for GroundLiteral { positive, atom } in &problem.goal {
        out.push(' ');
        if *positive {
            write_ground_atom(&mut out, atom);
        } else {
            out.push_str("(not ");
            write_ground_atom(&mut out, atom);
            out.push(')');
        }
    }
    out.push_str(")))");
    out
}
