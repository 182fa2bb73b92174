//! Program analyses: dead code, duplicate predicates, repeated goal
//! sequences, redundant-argument positions, and the smell detector that
//! reports all of them.

pub mod dead;
pub mod duplicates;
pub mod far;
pub mod sequences;
pub mod smells;

pub use dead::{default_roots, find_dead, find_dead_in_module, module_roots, DeadCode, RootsError};
pub use duplicates::{duplicate_pairs, find_duplicates, DuplicateGroup};
pub use far::{compute_far, FarResult};
pub use sequences::{
    clause_contexts, find_repeated_sequences, RepeatedSequence, SeqOccurrence,
};
pub use smells::{
    detect_smells, human_report, machine_report, unused_exports, Smell, SmellKind,
};
