//! Reading and writing Prolog source: lossless lexing, operator-table
//! parsing, canonical printing, and alpha-normal forms.

pub mod ast;
pub mod canon;
pub mod lexer;
pub mod ops;
pub mod parser;
pub mod printer;

pub use ast::{ClauseSrc, Directive, DirectiveKind, Goal, Item, Term, VarId};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use ops::{OpDef, OpTable, OpType};
pub use parser::{parse_file, parse_file_with_ops, term_to_goal, ParsedFile, SyntaxError};
pub use printer::{
    goal_to_term, print_clause, print_directive, print_goal_inline, print_goals_inline,
    print_item, print_items, print_term,
};
