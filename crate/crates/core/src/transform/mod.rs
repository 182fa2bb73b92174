//! The refactoring catalogue: precondition-checked rewrites from a
//! `Program` snapshot to an `EditScript`.
//!
//! Every operation is pure — nothing is written here. `plan` first
//! evaluates all preconditions; a blocked report comes with an empty
//! script. Scripts of independent transforms compose only when
//! span-disjoint (the edit module enforces that); sequential
//! application with re-parsing in between is the supported mode.

pub mod clauses;
pub mod modules;
pub mod preds;
pub mod util;

use std::fmt;

use crate::analysis::sequences::RepeatedSequence;
use crate::edit::EditScript;
use crate::model::{PredId, Program};
use crate::span::SourceSpan;

/// Which duplicate definition survives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DupStrategy {
    KeepFirst,
    KeepSecond,
    ExtractToNewModule(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeadScope {
    /// Roots from configuration entry points (or all exports).
    System,
    /// Roots are one module's exports.
    Module(String),
}

/// What to extract: a detected repeated sequence (all occurrences) or a
/// user-selected goal range inside one clause.
#[derive(Debug, Clone)]
pub enum ExtractTarget {
    Sequence(RepeatedSequence),
    Span {
        pred: PredId,
        clause: usize,
        /// Conjunction context index as used by the sequence analysis
        /// (0 = top level of the body).
        context: usize,
        start: usize,
        len: usize,
    },
}

#[derive(Debug, Clone)]
pub enum RefactoringRequest {
    ReplaceCutWithIte {
        pred: PredId,
    },
    OutputAfterCommit {
        pred: PredId,
        clause: usize,
    },
    UnificationToTest {
        pred: PredId,
        clause: usize,
        /// Use `=:=` instead of `==` (numeric comparison).
        numeric: bool,
    },
    InvertIte {
        pred: PredId,
        clause: usize,
    },
    ExtractPredicate {
        target: ExtractTarget,
        name: String,
        module: String,
    },
    EliminateQualification,
    HidePredicates,
    RemoveDead {
        scope: DeadScope,
        force: bool,
    },
    RemoveDuplicates {
        pair: (PredId, PredId),
        strategy: DupStrategy,
    },
    RenamePredicate {
        pred: PredId,
        new_name: String,
    },
    RenameModule {
        module: String,
        new_name: String,
    },
    RenameFunctor {
        name: String,
        arity: usize,
        new_name: String,
        /// Indices into the deterministic occurrence list; `None`
        /// rewrites every occurrence.
        occurrences: Option<Vec<usize>>,
    },
    MergeModules {
        modules: Vec<String>,
        new_name: String,
    },
    SplitModule {
        module: String,
        /// Part name → predicates assigned to it.
        parts: Vec<(String, Vec<(String, usize)>)>,
    },
    MovePredicate {
        pred: PredId,
        dest: String,
    },
    AddArgument {
        caller: PredId,
        /// Variable name appearing in the caller's clause bodies.
        var: String,
        callee: PredId,
        /// 1-based insertion position; `None` appends last.
        position: Option<usize>,
    },
    ReorderArguments {
        pred: PredId,
        /// 1-based: new position k+1 receives old argument `perm[k]`.
        permutation: Vec<usize>,
    },
    SpecializePredicate {
        pred: PredId,
        /// 1-based argument position.
        position: usize,
        /// Atomic value, source syntax (atom or number).
        value: String,
        new_name: String,
    },
    RemoveRedundantArgs {
        /// (predicate, 0-based position); must be within compute_far.
        erasures: Vec<(PredId, usize)>,
    },
}

impl RefactoringRequest {
    /// Stable kebab-case identifier, as used by the command line.
    pub fn id(&self) -> &'static str {
        use RefactoringRequest::*;
        match self {
            ReplaceCutWithIte { .. } => "replace-cut-with-ite",
            OutputAfterCommit { .. } => "output-after-commit",
            UnificationToTest { .. } => "unification-to-test",
            InvertIte { .. } => "invert-ite",
            ExtractPredicate { .. } => "extract-predicate",
            EliminateQualification => "eliminate-qualification",
            HidePredicates => "hide-predicates",
            RemoveDead { .. } => "remove-dead",
            RemoveDuplicates { .. } => "remove-duplicates",
            RenamePredicate { .. } => "rename-predicate",
            RenameModule { .. } => "rename-module",
            RenameFunctor { .. } => "rename-functor",
            MergeModules { .. } => "merge-modules",
            SplitModule { .. } => "split-module",
            MovePredicate { .. } => "move-predicate",
            AddArgument { .. } => "add-argument",
            ReorderArguments { .. } => "reorder-args",
            SpecializePredicate { .. } => "specialize",
            RemoveRedundantArgs { .. } => "remove-redundant-args",
        }
    }
}

/// All identifiers `RefactoringRequest::id` can produce.
pub const REFACTORING_IDS: &[&str] = &[
    "replace-cut-with-ite",
    "output-after-commit",
    "unification-to-test",
    "invert-ite",
    "extract-predicate",
    "eliminate-qualification",
    "hide-predicates",
    "remove-dead",
    "remove-duplicates",
    "rename-predicate",
    "rename-module",
    "rename-functor",
    "merge-modules",
    "split-module",
    "move-predicate",
    "add-argument",
    "reorder-args",
    "specialize",
    "remove-redundant-args",
];

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("unknown refactoring: {0}")]
pub struct UnknownRefactoring(pub String);

/// Validates a refactoring identifier string.
pub fn check_refactoring_id(id: &str) -> Result<&str, UnknownRefactoring> {
    REFACTORING_IDS
        .iter()
        .find(|&&known| known == id)
        .copied()
        .ok_or_else(|| UnknownRefactoring(id.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IssueCode {
    MetaCallBlocker,
    NameClash,
    NotSupportedPattern,
    NoModeInfo,
    NotOutputBinding,
    NotInCondition,
    NotInvertible,
    NotContiguous,
    NotInErasureSet,
    BuiltinTarget,
    Unreachable,
    TargetMissing,
    BadParameter,
    // Non-blocking findings.
    CyclicSplit,
    NoClauseMatches,
    ConflictingImport,
    Noop,
}

impl IssueCode {
    pub fn is_blocker(self) -> bool {
        !matches!(
            self,
            IssueCode::CyclicSplit
                | IssueCode::NoClauseMatches
                | IssueCode::ConflictingImport
                | IssueCode::Noop
        )
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IssueCode::MetaCallBlocker => "MetaCallBlocker",
            IssueCode::NameClash => "NameClash",
            IssueCode::NotSupportedPattern => "NotSupportedPattern",
            IssueCode::NoModeInfo => "NoModeInfo",
            IssueCode::NotOutputBinding => "NotOutputBinding",
            IssueCode::NotInCondition => "NotInCondition",
            IssueCode::NotInvertible => "NotInvertible",
            IssueCode::NotContiguous => "NotContiguous",
            IssueCode::NotInErasureSet => "NotInErasureSet",
            IssueCode::BuiltinTarget => "BuiltinTarget",
            IssueCode::Unreachable => "Unreachable",
            IssueCode::TargetMissing => "TargetMissing",
            IssueCode::BadParameter => "BadParameter",
            IssueCode::CyclicSplit => "CyclicSplit",
            IssueCode::NoClauseMatches => "NoClauseMatches",
            IssueCode::ConflictingImport => "ConflictingImport",
            IssueCode::Noop => "Noop",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Reason {
    pub code: IssueCode,
    pub span: Option<SourceSpan>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Blocked,
}

#[derive(Debug, Clone)]
pub struct PreconditionReport {
    pub status: Status,
    pub reasons: Vec<Reason>,
}

impl PreconditionReport {
    pub fn ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Precondition report plus the edit script realizing the refactoring
/// (empty when blocked) and free-form informational notes.
#[derive(Debug, Clone)]
pub struct Plan {
    pub report: PreconditionReport,
    pub script: EditScript,
    pub notes: Vec<String>,
}

/// Accumulates reasons and edits while an operation runs; `finish`
/// derives the status and drops the script if anything blocked.
pub(crate) struct Ctx<'p> {
    pub program: &'p Program,
    pub reasons: Vec<Reason>,
    pub edits: Vec<crate::edit::TextEdit>,
    pub creates: std::collections::BTreeMap<String, String>,
    pub deletes: std::collections::BTreeSet<String>,
    pub renames: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl<'p> Ctx<'p> {
    pub fn new(program: &'p Program) -> Ctx<'p> {
        Ctx {
            program,
            reasons: Vec::new(),
            edits: Vec::new(),
            creates: std::collections::BTreeMap::new(),
            deletes: std::collections::BTreeSet::new(),
            renames: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn block(&mut self, code: IssueCode, span: Option<SourceSpan>, message: impl Into<String>) {
        self.reasons.push(Reason {
            code,
            span,
            message: message.into(),
        });
    }

    pub fn note(&mut self, message: impl Into<String>) {
        self.notes.push(message.into());
    }

    pub fn blocked(&self) -> bool {
        self.reasons.iter().any(|r| r.code.is_blocker())
    }

    pub fn text(&self, file: crate::span::FileId) -> &'p str {
        &self.program.file(file).text
    }

    pub fn finish(self, provenance: &str) -> Plan {
        let blocked = self.blocked();
        let status = if blocked { Status::Blocked } else { Status::Ok };
        let script = if blocked {
            EditScript {
                provenance: provenance.to_string(),
                ..Default::default()
            }
        } else {
            match crate::edit::plan(self.program, provenance, self.edits) {
                Ok(mut s) => {
                    s.creates = self.creates;
                    s.deletes = self.deletes;
                    s.renames = self.renames;
                    s
                }
                Err(e) => {
                    // Overlapping edits mean the request combination is
                    // not expressible as one script.
                    let script = EditScript {
                        provenance: provenance.to_string(),
                        ..Default::default()
                    };
                    return Plan {
                        report: PreconditionReport {
                            status: Status::Blocked,
                            reasons: vec![Reason {
                                code: IssueCode::NotSupportedPattern,
                                span: None,
                                message: format!("edits overlap: {e}"),
                            }],
                        },
                        script,
                        notes: self.notes,
                    };
                }
            }
        };
        Plan {
            report: PreconditionReport {
                status,
                reasons: self.reasons,
            },
            script,
            notes: self.notes,
        }
    }
}

/// Computes the edit script for a request. Pure: the program is never
/// mutated, and a blocked plan carries an empty script.
pub fn plan(program: &Program, request: &RefactoringRequest) -> Plan {
    use RefactoringRequest::*;
    let mut ctx = Ctx::new(program);
    match request {
        ReplaceCutWithIte { pred } => clauses::replace_cut_with_ite(&mut ctx, pred),
        OutputAfterCommit { pred, clause } => {
            clauses::output_after_commit(&mut ctx, pred, *clause)
        }
        UnificationToTest {
            pred,
            clause,
            numeric,
        } => clauses::unification_to_test(&mut ctx, pred, *clause, *numeric),
        InvertIte { pred, clause } => clauses::invert_ite(&mut ctx, pred, *clause),
        ExtractPredicate {
            target,
            name,
            module,
        } => clauses::extract_predicate(&mut ctx, target, name, module),
        EliminateQualification => modules::eliminate_qualification(&mut ctx),
        HidePredicates => modules::hide_predicates(&mut ctx),
        RemoveDead { scope, force } => modules::remove_dead(&mut ctx, scope, *force),
        RemoveDuplicates { pair, strategy } => {
            modules::remove_duplicates(&mut ctx, pair, strategy)
        }
        RenamePredicate { pred, new_name } => modules::rename_predicate(&mut ctx, pred, new_name),
        RenameModule { module, new_name } => modules::rename_module(&mut ctx, module, new_name),
        RenameFunctor {
            name,
            arity,
            new_name,
            occurrences,
        } => modules::rename_functor(&mut ctx, name, *arity, new_name, occurrences.as_deref()),
        MergeModules { modules: ms, new_name } => modules::merge_modules(&mut ctx, ms, new_name),
        SplitModule { module, parts } => modules::split_module(&mut ctx, module, parts),
        MovePredicate { pred, dest } => modules::move_predicate(&mut ctx, pred, dest),
        AddArgument {
            caller,
            var,
            callee,
            position,
        } => preds::add_argument(&mut ctx, caller, var, callee, *position),
        ReorderArguments { pred, permutation } => {
            preds::reorder_arguments(&mut ctx, pred, permutation)
        }
        SpecializePredicate {
            pred,
            position,
            value,
            new_name,
        } => preds::specialize_predicate(&mut ctx, pred, *position, value, new_name),
        RemoveRedundantArgs { erasures } => preds::remove_redundant_args(&mut ctx, erasures),
    }
    ctx.finish(request.id())
}

/// Evaluates the request's preconditions without computing edits'
/// effects. Same engine as `plan`, so the answer can never diverge
/// from what applying would do.
pub fn check_preconditions(program: &Program, request: &RefactoringRequest) -> PreconditionReport {
    plan(program, request).report
}
