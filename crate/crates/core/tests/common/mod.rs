#![allow(dead_code)]

use openworld::pddl::{parse_domain, parse_problem, ParseError, SourceSpan};
use openworld::presets::craft_domain;

/// Which reader a malformed input is fed to.
#[derive(Debug, Clone, Copy)]
pub enum Reader {
    Domain,
    Problem,
}

pub const MALFORMED: &[(Reader, &str)] = &[
    (Reader::Domain, ""),
    (Reader::Domain, "(define (domain d)"),
    (Reader::Domain, "(define (domain d)))"),
    (Reader::Domain, "define (domain d)"),
    (Reader::Domain, "(define (problem p))"),
    (Reader::Domain, "(define (domain))"),
    (Reader::Domain, "(define (domain d) (:frobnicate x))"),
    (Reader::Domain, "(define (domain d) (:predicates (p ?x - missing_type)))"),
    (Reader::Domain, "(define (domain d) (:predicates (p)) (:action a :precondition (q)))"),
    (Reader::Domain, "(define (domain d) (:functions (f)) (:action a :effect (increase (g) 1)))"),
    (Reader::Domain, "(define (domain d) (:functions (f)) (:action a :effect (increase (f) (* #t 1))))"),
    (Reader::Domain, "(define (domain d) (:functions (f)) (:process p :effect (increase (f) (+ 1 #t))))"),
    (Reader::Domain, "(define (domain d) (:functions (f)) (:action a :precondition (~ (f) 1)))"),
    (Reader::Domain, "(define (domain d) (:functions (f)) (:action a :precondition (< (f) 1e)))"),
    (Reader::Domain, "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?y) :precondition (p ?z)))"),
    (Reader::Domain, "(define (domain d) (:predicates (p)) (:action a :effect (p 1 2 3)))"),
    (Reader::Domain, "(define (domain d) (:predicates (p)) (:action :effect (p)))"),
    (Reader::Domain, "(define (domain d) (:predicates (p)) (:action a :bogus (p)))"),
    (Reader::Domain, "(define (domain d) (:functions (f)) (:event e :precondition (and (> (f) 0) :effect)))"),
    (Reader::Domain, "(define (domain d) (:functions (f)) (:action a :effect (assign (f) (sqrt 2))))"),
    (Reader::Problem, "(define (problem p) (:domain pogocraft) (:objects t0 - spaceship) (:init) (:goal (>= (pogosticks) 1)))"),
    (Reader::Problem, "(define (problem p) (:domain pogocraft) (:objects) (:init (= (nonexistent) 3)) (:goal (>= (pogosticks) 1)))"),
    (Reader::Problem, "(define (problem p) (:domain pogocraft) (:objects) (:init (= (logs) abc)) (:goal (>= (pogosticks) 1)))"),
    (Reader::Problem, "(define (problem p) (:domain pogocraft) (:objects) (:init) (:goal (present t9)))"),
    (Reader::Problem, "(define (problem p) (:domain pogocraft) (:objects) (:init)"),
];

pub fn parse_malformed(reader: Reader, text: &str) -> Result<(), ParseError> {
    match reader {
        Reader::Domain => parse_domain(text).map(|_| ()),
        Reader::Problem => parse_problem(text, &craft_domain()).map(|_| ()),
    }
}

/// A span is valid when it points at a line of `text` and at a column no
/// further than one past that line's end.
pub fn span_is_valid(span: &SourceSpan, text: &str) -> bool {
    let lines: Vec<&str> = text.split('\n').collect();
    span.line >= 1
        && span.column >= 1
        && span.line <= lines.len()
        && span.column <= lines[span.line - 1].chars().count() + 1
}
