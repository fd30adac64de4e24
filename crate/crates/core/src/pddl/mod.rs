//! Reader and canonical printer for the supported PDDL+ subset.
//!
//! Grammar summary:
//!
//! ```text
//! domain   := (define (domain NAME) section*)
//! section  := (:requirements :flag*) | (:types NAME* [- object])
//!           | (:predicates (NAME typed*)*) | (:functions (NAME typed*) [- number])*)
//!           | (:action|:event|:process NAME [:parameters (typed*)]
//!                                           [:precondition COND] [:effect EFF])
//! COND     := (and LIT*) | LIT | ()
//! LIT      := (P term*) | (not (P term*)) | (CMP EXPR EXPR)       CMP in < <= = >= >
//! EFF      := (and EFF*) | (P term*) | (not (P term*))
//!           | (assign|increase|decrease (F term*) EXPR)
//!           | (increase|decrease (F term*) (* #t EXPR))            processes only
//! EXPR     := NUMBER | (F term*) | (- EXPR) | (+|-|*|/ EXPR EXPR+) | (sin|cos EXPR)
//! problem  := (define (problem NAME) (:domain NAME) (:objects typed*)
//!                                     (:init FACT*) (:goal COND))
//! FACT     := (P obj*) | (not (P obj*)) | (= (F obj*) NUMBER)
//! ```
//!
//! Keywords are case-insensitive; identifiers keep their case. `;` starts a
//! line comment.

mod parse;
mod print;
mod sexpr;

pub use parse::{parse_condition, parse_domain, parse_domain_named, parse_problem, parse_problem_named};
pub use print::{format_number, print_domain, print_problem};

use std::fmt;

use thiserror::Error;

/// 1-based location of a token in the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}{}", expected.as_ref().map(|e| format!(" (expected {e})")).unwrap_or_default())]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Option<String>,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, message: impl Into<String>, expected: Option<&str>) -> Self {
        let message = message.into();
        debug_assert!(!message.is_empty());
        ParseError {
            span,
            message,
            expected: expected.map(str::to_string),
        }
    }

    /// Whether the span lies within `text`.
    pub fn span_within(&self, text: &str) -> bool {
        let lines: Vec<&str> = text.split('\n').collect();
        if text.is_empty() {
            return self.span.line == 1 && self.span.column == 1;
        }
        match lines.get(self.span.line.wrapping_sub(1)) {
            Some(line) => {
                let n = line.chars().count();
                self.span.column >= 1 && self.span.column <= n.max(1) && self.span.column - 1 + self.span.length <= n.max(1)
            }
            None => false,
        }
    }
}
