mod common;

use common::{parse_malformed, span_is_valid, MALFORMED};
use openworld::pddl::{parse_domain, parse_problem, print_domain, print_problem};
use openworld::presets::{CARTPOLE_DOMAIN, CARTPOLE_PROBLEM, CRAFT_DOMAIN, CRAFT_PROBLEM, MOVEMENT_PROCESS};
use proptest::prelude::*;

#[test]
fn domains_round_trip() {
    for text in [CARTPOLE_DOMAIN, CRAFT_DOMAIN, MOVEMENT_PROCESS] {
        let d = parse_domain(text).unwrap();
        let printed = print_domain(&d);
        assert_eq!(parse_domain(&printed).unwrap(), d);
        assert_eq!(print_domain(&parse_domain(&printed).unwrap()), printed);
    }
}

#[test]
fn problems_round_trip() {
    for (dom, prob) in [(CARTPOLE_DOMAIN, CARTPOLE_PROBLEM), (CRAFT_DOMAIN, CRAFT_PROBLEM)] {
        let d = parse_domain(dom).unwrap();
        let p = parse_problem(prob, &d).unwrap();
        assert_eq!(parse_problem(&print_problem(&p), &d).unwrap(), p);
    }
}

#[test]
fn malformed_inputs_report_spans() {
    assert!(MALFORMED.len() >= 20);
    for (reader, text) in MALFORMED {
        let err = parse_malformed(*reader, text).expect_err(text);
        assert!(span_is_valid(&err.span, text), "{text:?}: {err}");
        assert!(!err.message.is_empty());
    }
}

#[test]
fn keywords_are_case_insensitive() {
    let upper = "(DEFINE (DOMAIN d) (:PREDICATES (p)) (:ACTION a :PARAMETERS () :EFFECT (AND (p))))";
    let lower = "(define (domain d) (:predicates (p)) (:action a :parameters () :effect (and (p))))";
    assert_eq!(parse_domain(upper).unwrap(), parse_domain(lower).unwrap());
}

#[test]
fn comments_and_whitespace_are_ignored() {
    let a = parse_domain(CRAFT_DOMAIN).unwrap();
    let noisy = CRAFT_DOMAIN.replace('\n', " ; trailing\n\t");
    assert_eq!(parse_domain(&noisy).unwrap(), a);
}

#[test]
fn unclosed_list_points_at_its_open_paren() {
    let err = parse_domain("\n  (define (domain d)").unwrap_err();
    assert_eq!((err.span.line, err.span.column), (2, 3));
}

#[test]
fn stray_close_paren_is_located() {
    let err = parse_domain("(define (domain d)))").unwrap_err();
    assert_eq!((err.span.line, err.span.column), (1, 20));
}

#[test]
fn spans_survive_comments() {
    let err = parse_domain("(define (domain d) ; note\n (:predicates (p)) (:bogus))").unwrap_err();
    assert_eq!(err.span.line, 2);
}

proptest! {
    #[test]
    fn truncated_input_never_panics(cut in 0usize..2000) {
        let text = &CRAFT_DOMAIN[..cut.min(CRAFT_DOMAIN.len())];
        if let Err(e) = parse_domain(text) {
            prop_assert!(span_is_valid(&e.span, text), "{}", e);
        }
    }

    #[test]
    fn numeric_literals_survive_printing(v in -1e6f64..1e6) {
        let text = format!(
            "(define (problem p) (:domain pogocraft) (:objects) (:init (= (logs) {v:?})) (:goal (>= (pogosticks) 1)))"
        );
        let d = parse_domain(CRAFT_DOMAIN).unwrap();
        let p = parse_problem(&text, &d).unwrap();
        prop_assert_eq!(parse_problem(&print_problem(&p), &d).unwrap(), p);
    }
}
