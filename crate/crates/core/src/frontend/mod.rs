//! Java-subset frontend: lexer, parser, printer and lookups over parsed units.
//!
//! The accepted language is deliberately small: top-level classes with fields,
//! methods and constructors; block, local declaration, assignment, if/else,
//! while, return and call statements; literal, name, field access, call,
//! binary, ternary and parenthesized expressions. Generics, inheritance,
//! interfaces, imports and visibility modifiers are rejected with a
//! positioned error instead of being skipped.

pub mod ast;
mod lexer;
mod parser;
mod printer;

use thiserror::Error;

pub use ast::*;
pub use parser::parse_unit;
pub use printer::{print_class, print_expr, print_method, print_statement, print_unit};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{file}:{line}:{col}: syntax error: {message}")]
    Syntax {
        file: String,
        line: u32,
        col: u32,
        message: String,
    },
    #[error("{file}:{line}:{col}: duplicate method signature {class}.{name}/{arity}")]
    DuplicateSignature {
        file: String,
        class: String,
        name: String,
        arity: usize,
        line: u32,
        col: u32,
    },
    #[error("{file}:{line}:{col}: duplicate class {class}")]
    DuplicateClass {
        file: String,
        class: String,
        line: u32,
        col: u32,
    },
    #[error("method not found: {0}")]
    NotFound(MethodId),
}

/// Resolves a method id to its owning class and declaration.
pub fn find_enclosing<'a>(
    units: &'a [SourceUnit],
    method_id: &MethodId,
) -> Result<(&'a ClassDecl, &'a MethodDecl), FrontendError> {
    let class_id = method_id.class_id();
    units
        .iter()
        .filter(|u| u.file_path == class_id.file())
        .flat_map(|u| u.classes.iter())
        .filter(|c| c.id == class_id)
        .find_map(|c| c.method(method_id).map(|m| (c, m)))
        .ok_or_else(|| FrontendError::NotFound(method_id.clone()))
}
