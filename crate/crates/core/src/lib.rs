//! Refactoring engine for a module-structured Prolog dialect.
//!
//! The crate follows a smell-driven refactoring loop: parse a workspace
//! into a program model, detect candidate smells, check the preconditions
//! of a chosen transformation, apply it as a layout-preserving edit
//! script, and (optionally) confirm behaviour preservation with a bounded
//! interpreter.
//!
//! Modules:
//! - [`syntax`]: lossless lexer, operator-precedence parser, canonical
//!   printer, alpha-normal forms.
//! - [`model`]: multi-file program model, name resolution, call graph.
//! - [`analysis`]: dead code, duplicate predicates, repeated goal
//!   sequences, redundant-argument erasure, smell reports.
//! - [`transform`]: precondition-checked refactoring operations that
//!   produce edit scripts.
//! - [`edit`]: text edits, unified diffs, atomic workspace application.
//! - [`oracle`]: depth-bounded interpreter and answer-set equivalence.
//! - [`corpus`]: deterministic random program generators for testing.

pub mod analysis;
pub mod edit;
pub mod oracle;
pub mod model;
pub mod span;
pub mod syntax;
pub mod transform;
pub mod corpus;

pub use span::{FileId, LineCol, SourceSpan};
