//! Multi-file program model: modules, predicates, name resolution.

pub mod callgraph;
pub mod config;
pub mod loader;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use crate::span::{FileId, SourceSpan};
use crate::syntax::ast::{ClauseSrc, Item};
use crate::syntax::ops::OpTable;

pub use callgraph::{CallGraph, CallSite, Callee, EdgeKind, MetaSite};
pub use config::{parse_config, Config, ConfigError};
pub use loader::load_program;

/// Module name reserved for built-in predicates.
pub const BUILTIN_MODULE: &str = "$builtin";

/// Module assumed for files without a `:- module/2` directive.
pub const USER_MODULE: &str = "user";

/// Predicate identity: defining module, functor name, arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredId {
    pub module: String,
    pub name: String,
    pub arity: usize,
}

impl PredId {
    pub fn new(module: impl Into<String>, name: impl Into<String>, arity: usize) -> PredId {
        PredId {
            module: module.into(),
            name: name.into(),
            arity,
        }
    }

    pub fn user(name: impl Into<String>, arity: usize) -> PredId {
        PredId::new(USER_MODULE, name, arity)
    }
}

impl fmt::Display for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}/{}", self.module, self.name, self.arity)
    }
}

/// Argument mode annotation: `+` input, `-` output, `?` either.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    In,
    Out,
    Any,
}

impl Mode {
    pub fn from_atom(s: &str) -> Option<Mode> {
        Some(match s {
            "+" => Mode::In,
            "-" => Mode::Out,
            "?" => Mode::Any,
            _ => return None,
        })
    }

    pub fn atom(self) -> &'static str {
        match self {
            Mode::In => "+",
            Mode::Out => "-",
            Mode::Any => "?",
        }
    }
}

/// One predicate definition: its clauses in source order plus metadata.
#[derive(Debug, Clone)]
pub struct Pred {
    pub id: PredId,
    pub clauses: Vec<ClauseSrc>,
    pub modes: Option<Vec<Mode>>,
    pub is_dynamic: bool,
    /// Span of the `:- mode(...)` directive declaring this predicate's
    /// modes, when it came from a directive (not the sidecar file).
    pub mode_directive: Option<SourceSpan>,
}

/// A `use_module` import edge as written.
#[derive(Debug, Clone)]
pub struct Import {
    pub from: String,
    /// `None` is a blanket import of every export.
    pub names: Option<Vec<(String, usize)>>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct ModuleInfo {
    pub name: String,
    /// Files contributing clauses, in load order.
    pub files: Vec<FileId>,
    pub exports: Vec<(String, usize)>,
    /// Span of the `:- module/2` directive, when present.
    pub decl_span: Option<SourceSpan>,
    pub imports: Vec<Import>,
    pub preds: BTreeMap<(String, usize), Pred>,
}

impl ModuleInfo {
    pub fn exports_set(&self) -> BTreeSet<(String, usize)> {
        self.exports.iter().cloned().collect()
    }
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub file: FileId,
    pub text: String,
    pub items: Vec<Item>,
    /// Module the file's clauses belong to.
    pub module: String,
    /// Operator table in effect at the end of the file.
    pub ops: OpTable,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    Syntax {
        path: String,
        message: String,
        span: SourceSpan,
    },
    UnresolvedCall {
        caller: PredId,
        name: String,
        arity: usize,
        qualifier: Option<String>,
        span: SourceSpan,
    },
    UnresolvedImport {
        module: String,
        from: String,
        span: SourceSpan,
    },
    NonStrictQualification {
        module: String,
        span: SourceSpan,
    },
    AmbiguousImport {
        module: String,
        name: String,
        arity: usize,
        chosen: String,
        other: String,
    },
    ModuleCycle {
        cycle: Vec<String>,
    },
    ExportUndefined {
        module: String,
        name: String,
        arity: usize,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Syntax { path, message, .. } => write!(f, "{path}: syntax: {message}"),
            Warning::UnresolvedCall {
                caller,
                name,
                arity,
                qualifier,
                ..
            } => match qualifier {
                Some(q) => write!(f, "{caller}: call to unresolved {q}:{name}/{arity}"),
                None => write!(f, "{caller}: call to unresolved {name}/{arity}"),
            },
            Warning::UnresolvedImport { module, from, .. } => {
                write!(f, "module {module}: use_module of unknown module {from}")
            }
            Warning::NonStrictQualification { module, .. } => {
                write!(f, "explicit qualification {module}:... (non-strict dialect)")
            }
            Warning::AmbiguousImport {
                module,
                name,
                arity,
                chosen,
                other,
            } => write!(
                f,
                "module {module}: {name}/{arity} imported from both {chosen} and {other}; using {chosen}"
            ),
            Warning::ModuleCycle { cycle } => {
                write!(f, "module dependency cycle: {}", cycle.join(" -> "))
            }
            Warning::ExportUndefined {
                module,
                name,
                arity,
            } => write!(f, "module {module}: exported {name}/{arity} is not defined"),
        }
    }
}

/// Result of resolving a call site.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Resolution {
    Pred(PredId),
    Builtin(String, usize),
    Undefined(String, usize),
}

#[derive(Debug, Clone)]
pub struct Program {
    pub files: Vec<SourceFile>,
    pub modules: BTreeMap<String, ModuleInfo>,
    pub warnings: Vec<Warning>,
    pub config: Config,
}

impl Program {
    pub fn file(&self, id: FileId) -> &SourceFile {
        &self.files[id.0 as usize]
    }

    pub fn path(&self, id: FileId) -> &str {
        &self.file(id).path
    }

    pub fn file_by_path(&self, path: &str) -> Option<&SourceFile> {
        self.files.iter().find(|f| f.path == path)
    }

    pub fn pred(&self, id: &PredId) -> Option<&Pred> {
        self.modules
            .get(&id.module)?
            .preds
            .get(&(id.name.clone(), id.arity))
    }

    pub fn all_preds(&self) -> impl Iterator<Item = &Pred> {
        self.modules.values().flat_map(|m| m.preds.values())
    }

    /// Slice of the original source text under a span.
    pub fn slice(&self, span: SourceSpan) -> &str {
        span.slice(&self.file(span.file).text)
    }

    pub fn is_builtin(&self, name: &str, arity: usize) -> bool {
        iso_builtin(name, arity)
            || self
                .config
                .builtins_extra
                .iter()
                .any(|(n, a)| n == name && *a == arity)
    }

    /// Resolves an unqualified call made from `module`: local definition
    /// first, then imports in directive order, then built-ins.
    pub fn resolve(&self, module: &str, name: &str, arity: usize) -> Resolution {
        if let Some(m) = self.modules.get(module) {
            if m.preds.contains_key(&(name.to_string(), arity)) {
                return Resolution::Pred(PredId::new(module, name, arity));
            }
            for imp in &m.imports {
                let listed = match &imp.names {
                    Some(names) => names.iter().any(|(n, a)| n == name && *a == arity),
                    None => self
                        .modules
                        .get(&imp.from)
                        .map(|from| from.exports.iter().any(|(n, a)| n == name && *a == arity))
                        .unwrap_or(false),
                };
                if listed {
                    if let Some(from) = self.modules.get(&imp.from) {
                        if from.preds.contains_key(&(name.to_string(), arity)) {
                            return Resolution::Pred(PredId::new(&imp.from, name, arity));
                        }
                    }
                }
            }
        }
        if self.is_builtin(name, arity) {
            return Resolution::Builtin(name.to_string(), arity);
        }
        Resolution::Undefined(name.to_string(), arity)
    }

    /// Resolves a possibly qualified call. A qualifier redirects the
    /// lookup into the named module's context.
    pub fn resolve_qualified(
        &self,
        module: &str,
        qualifier: Option<&str>,
        name: &str,
        arity: usize,
    ) -> Resolution {
        match qualifier {
            Some(q) => self.resolve(q, name, arity),
            None => self.resolve(module, name, arity),
        }
    }
}

/// ISO core built-ins plus the stream layer used by the examples.
static BUILTINS: OnceLock<BTreeSet<(&'static str, usize)>> = OnceLock::new();

pub fn iso_builtin(name: &str, arity: usize) -> bool {
    let set = BUILTINS.get_or_init(|| {
        let list: &[(&str, usize)] = &[
            // control
            ("true", 0),
            ("fail", 0),
            ("false", 0),
            ("halt", 0),
            ("halt", 1),
            ("call", 1),
            ("call", 2),
            ("call", 3),
            ("call", 4),
            ("call", 5),
            ("call", 6),
            ("call", 7),
            ("call", 8),
            ("once", 1),
            ("ignore", 1),
            ("forall", 2),
            ("catch", 3),
            ("throw", 1),
            // unification and comparison
            ("=", 2),
            ("\\=", 2),
            ("==", 2),
            ("\\==", 2),
            ("@<", 2),
            ("@>", 2),
            ("@=<", 2),
            ("@>=", 2),
            ("compare", 3),
            ("unify_with_occurs_check", 2),
            // type tests
            ("var", 1),
            ("nonvar", 1),
            ("atom", 1),
            ("number", 1),
            ("integer", 1),
            ("float", 1),
            ("atomic", 1),
            ("compound", 1),
            ("callable", 1),
            ("is_list", 1),
            ("ground", 1),
            // term construction
            ("functor", 3),
            ("arg", 3),
            ("=..", 2),
            ("copy_term", 2),
            // atoms and numbers
            ("atom_codes", 2),
            ("atom_chars", 2),
            ("atom_length", 2),
            ("atom_concat", 3),
            ("char_code", 2),
            ("number_codes", 2),
            ("number_chars", 2),
            ("sub_atom", 5),
            // arithmetic
            ("is", 2),
            ("=:=", 2),
            ("=\\=", 2),
            ("<", 2),
            (">", 2),
            ("=<", 2),
            (">=", 2),
            ("succ", 2),
            ("plus", 3),
            ("between", 3),
            // all-solutions
            ("findall", 3),
            ("bagof", 3),
            ("setof", 3),
            // database
            ("assert", 1),
            ("asserta", 1),
            ("assertz", 1),
            ("retract", 1),
            ("abolish", 1),
            ("abolish", 2),
            // input/output and streams
            ("read", 1),
            ("read", 2),
            ("write", 1),
            ("write", 2),
            ("writeq", 1),
            ("writeq", 2),
            ("write_canonical", 1),
            ("print", 1),
            ("nl", 0),
            ("nl", 1),
            ("open", 3),
            ("open", 4),
            ("close", 1),
            ("close", 2),
            ("get_char", 1),
            ("get_char", 2),
            ("put_char", 1),
            ("put_char", 2),
            ("peek_char", 1),
            ("peek_char", 2),
            ("get_code", 1),
            ("get_code", 2),
            ("stream_position", 2),
            ("stream_position", 3),
            ("current_input", 1),
            ("current_output", 1),
            ("set_input", 1),
            ("set_output", 1),
            ("length", 2),
        ];
        list.iter().copied().collect()
    });
    set.contains(&(name, arity))
}

/// Goal-argument positions of meta-predicates: `(arity, goal positions,
/// extra args added to the called goal)`.
pub fn meta_goal_positions(name: &str, arity: usize) -> Option<(Vec<usize>, usize)> {
    match (name, arity) {
        ("call", n) if (1..=8).contains(&n) => Some((vec![0], n - 1)),
        ("once", 1) | ("ignore", 1) => Some((vec![0], 0)),
        ("findall", 3) | ("bagof", 3) | ("setof", 3) => Some((vec![1], 0)),
        ("forall", 2) => Some((vec![0, 1], 0)),
        ("catch", 3) => Some((vec![0, 2], 0)),
        _ => None,
    }
}

/// Clause-argument built-ins that add to or remove from the database.
pub fn is_database_builtin(name: &str, arity: usize) -> bool {
    matches!(
        (name, arity),
        ("assert", 1) | ("asserta", 1) | ("assertz", 1) | ("retract", 1)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table() {
        assert!(iso_builtin("=", 2));
        assert!(iso_builtin("is", 2));
        assert!(iso_builtin("stream_position", 2));
        assert!(iso_builtin("findall", 3));
        assert!(!iso_builtin("append", 3));
        assert!(!iso_builtin("=", 3));
    }

    #[test]
    fn meta_positions() {
        assert_eq!(meta_goal_positions("call", 3), Some((vec![0], 2)));
        assert_eq!(meta_goal_positions("findall", 3), Some((vec![1], 0)));
        assert_eq!(meta_goal_positions("forall", 2), Some((vec![0, 1], 0)));
        assert_eq!(meta_goal_positions("write", 1), None);
    }

    #[test]
    fn pred_id_display() {
        assert_eq!(PredId::new("m", "p", 2).to_string(), "m:p/2");
    }

    #[test]
    fn mode_atoms() {
        assert_eq!(Mode::from_atom("+"), Some(Mode::In));
        assert_eq!(Mode::from_atom("-"), Some(Mode::Out));
        assert_eq!(Mode::from_atom("?"), Some(Mode::Any));
        assert_eq!(Mode::from_atom("++"), None);
    }
}
