//! Abstract syntax for Prolog terms, clause bodies, and read items.
//!
//! Terms are a plain tagged union; lists are represented desugared as
//! `'.'/2` chains ending in `[]`. Variables carry a clause-scoped id: two
//! `Var` nodes with equal ids inside one clause denote the same variable,
//! and ids are never shared across clauses.

use crate::span::SourceSpan;
use crate::syntax::ops::OpType;
use std::fmt;

/// Clause-scoped variable identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var {
        name: String,
        id: VarId,
        span: Option<SourceSpan>,
    },
    Atom {
        text: String,
        span: Option<SourceSpan>,
    },
    Int {
        value: i64,
        span: Option<SourceSpan>,
    },
    Float {
        value: f64,
        span: Option<SourceSpan>,
    },
    Str {
        text: String,
        span: Option<SourceSpan>,
    },
    Compound {
        functor: String,
        args: Vec<Term>,
        span: Option<SourceSpan>,
        /// Span of the functor name token (or operator token for op-notation
        /// terms); used for in-place renames.
        functor_span: Option<SourceSpan>,
    },
}

impl Term {
    pub fn atom(text: impl Into<String>) -> Term {
        Term::Atom {
            text: text.into(),
            span: None,
        }
    }

    pub fn var(name: impl Into<String>, id: u32) -> Term {
        Term::Var {
            name: name.into(),
            id: VarId(id),
            span: None,
        }
    }

    pub fn int(value: i64) -> Term {
        Term::Int { value, span: None }
    }

    pub fn compound(functor: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Compound {
            functor: functor.into(),
            args,
            span: None,
            functor_span: None,
        }
    }

    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            Term::Var { span, .. }
            | Term::Atom { span, .. }
            | Term::Int { span, .. }
            | Term::Float { span, .. }
            | Term::Str { span, .. }
            | Term::Compound { span, .. } => *span,
        }
    }

    pub fn set_span(&mut self, s: Option<SourceSpan>) {
        match self {
            Term::Var { span, .. }
            | Term::Atom { span, .. }
            | Term::Int { span, .. }
            | Term::Float { span, .. }
            | Term::Str { span, .. }
            | Term::Compound { span, .. } => *span = s,
        }
    }

    /// Name/arity of an atom or compound; `None` for other terms.
    pub fn indicator(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom { text, .. } => Some((text, 0)),
            Term::Compound { functor, args, .. } => Some((functor, args.len())),
            _ => None,
        }
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom { .. } | Term::Compound { .. })
    }

    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            Term::Atom { .. } | Term::Int { .. } | Term::Float { .. } | Term::Str { .. }
        )
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound { args, .. } => args,
            _ => &[],
        }
    }

    /// Visits every subterm, outermost first.
    pub fn walk<'t>(&'t self, f: &mut dyn FnMut(&'t Term)) {
        f(self);
        if let Term::Compound { args, .. } = self {
            for a in args {
                a.walk(f);
            }
        }
    }

    /// Collects `(name, id)` of each variable occurrence, in textual order.
    pub fn var_occurrences(&self) -> Vec<(&str, VarId)> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Term::Var { name, id, .. } = t {
                out.push((name.as_str(), *id));
            }
        });
        out
    }

    /// Structural equality ignoring spans; variables compare by id.
    pub fn same_shape(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Var { id: a, .. }, Term::Var { id: b, .. }) => a == b,
            (Term::Atom { text: a, .. }, Term::Atom { text: b, .. }) => a == b,
            (Term::Int { value: a, .. }, Term::Int { value: b, .. }) => a == b,
            (Term::Float { value: a, .. }, Term::Float { value: b, .. }) => a == b,
            (Term::Str { text: a, .. }, Term::Str { text: b, .. }) => a == b,
            (
                Term::Compound {
                    functor: fa,
                    args: aa,
                    ..
                },
                Term::Compound {
                    functor: fb,
                    args: ab,
                    ..
                },
            ) => {
                fa == fb
                    && aa.len() == ab.len()
                    && aa.iter().zip(ab).all(|(x, y)| x.same_shape(y))
            }
            _ => false,
        }
    }
}

/// Clause body element. Conjunctions are kept flattened: a `Conj` never
/// directly contains another `Conj`, and always holds at least two goals.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    /// A call. `qualifier` is present iff the source used `m:Goal` syntax.
    Call {
        term: Term,
        qualifier: Option<String>,
        /// Covers the qualifier too, when present.
        span: Option<SourceSpan>,
    },
    Conj {
        goals: Vec<Goal>,
        span: Option<SourceSpan>,
    },
    Disj {
        left: Box<Goal>,
        right: Box<Goal>,
        span: Option<SourceSpan>,
    },
    IfThenElse {
        cond: Box<Goal>,
        then: Box<Goal>,
        els: Box<Goal>,
        span: Option<SourceSpan>,
    },
    Neg {
        goal: Box<Goal>,
        span: Option<SourceSpan>,
    },
    Cut { span: Option<SourceSpan> },
    True { span: Option<SourceSpan> },
    Fail { span: Option<SourceSpan> },
}

impl Goal {
    pub fn truth() -> Goal {
        Goal::True { span: None }
    }

    pub fn call(term: Term) -> Goal {
        let span = term.span();
        Goal::Call {
            term,
            qualifier: None,
            span,
        }
    }

    /// Builds a flattened conjunction from a goal list.
    pub fn conj(mut goals: Vec<Goal>) -> Goal {
        let mut flat = Vec::new();
        for g in goals.drain(..) {
            match g {
                Goal::Conj { goals: inner, .. } => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Goal::truth(),
            1 => flat.into_iter().next().unwrap(),
            _ => {
                let span = match (flat.first().and_then(Goal::span), flat.last().and_then(Goal::span)) {
                    (Some(a), Some(b)) if a.file == b.file => Some(a.cover(b)),
                    _ => None,
                };
                Goal::Conj { goals: flat, span }
            }
        }
    }

    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            Goal::Call { span, .. }
            | Goal::Conj { span, .. }
            | Goal::Disj { span, .. }
            | Goal::IfThenElse { span, .. }
            | Goal::Neg { span, .. }
            | Goal::Cut { span }
            | Goal::True { span }
            | Goal::Fail { span } => *span,
        }
    }

    /// The flattened goal list: the conjuncts for a `Conj`, else the goal
    /// itself as a singleton (with `True` as the empty sequence).
    pub fn conjuncts(&self) -> Vec<&Goal> {
        match self {
            Goal::Conj { goals, .. } => goals.iter().collect(),
            Goal::True { .. } => Vec::new(),
            g => vec![g],
        }
    }

    /// Visits every goal node, outermost first.
    pub fn walk<'g>(&'g self, f: &mut dyn FnMut(&'g Goal)) {
        f(self);
        match self {
            Goal::Conj { goals, .. } => {
                for g in goals {
                    g.walk(f);
                }
            }
            Goal::Disj { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            Goal::IfThenElse { cond, then, els, .. } => {
                cond.walk(f);
                then.walk(f);
                els.walk(f);
            }
            Goal::Neg { goal, .. } => goal.walk(f),
            _ => {}
        }
    }

    /// Variable occurrences over every term in the goal, textual order.
    pub fn var_occurrences(&self) -> Vec<(&str, VarId)> {
        let mut out = Vec::new();
        self.walk(&mut |g| {
            if let Goal::Call { term, .. } = g {
                out.extend(term.var_occurrences());
            }
        });
        out
    }

    pub fn contains_cut(&self) -> bool {
        let mut found = false;
        self.walk(&mut |g| {
            if matches!(g, Goal::Cut { .. }) {
                found = true;
            }
        });
        found
    }
}

/// One clause as read from source. `raw` is the exact source slice,
/// including the terminating `.`; parsing it again yields a structurally
/// identical clause.
#[derive(Debug, Clone)]
pub struct ClauseSrc {
    pub head: Term,
    pub body: Goal,
    pub span: SourceSpan,
    pub raw: String,
    /// Set when the clause was written with `-->`; such clauses are kept in
    /// the model but are not analysis or refactoring targets.
    pub is_dcg: bool,
}

impl ClauseSrc {
    pub fn is_fact(&self) -> bool {
        matches!(self.body, Goal::True { .. })
    }

    pub fn indicator(&self) -> (String, usize) {
        let (n, a) = self.head.indicator().expect("clause head is callable");
        (n.to_string(), a)
    }
}

/// Directives recognized by the loader. Anything else is `Other`.
#[derive(Debug, Clone)]
pub enum DirectiveKind {
    /// `:- module(Name, [p/1, ...]).`
    Module {
        name: String,
        exports: Vec<(String, usize)>,
    },
    /// `:- use_module(File).` or `:- use_module(File, [p/1, ...]).`
    UseModule {
        module: String,
        imports: Option<Vec<(String, usize)>>,
    },
    /// `:- op(P, Type, Name).`
    Op {
        priority: u16,
        op_type: OpType,
        names: Vec<String>,
    },
    /// `:- mode(p(+,-,?)).`
    Mode { term: Term },
    Other { term: Term },
}

#[derive(Debug, Clone)]
pub struct Directive {
    pub kind: DirectiveKind,
    pub span: SourceSpan,
    /// The directive body term (the argument of `:-`), spans intact, for
    /// fine-grained edits such as export-list rewrites.
    pub term: Term,
}

/// A top-level item of a parsed file, in source order.
#[derive(Debug, Clone)]
pub enum Item {
    Clause(ClauseSrc),
    Directive(Directive),
}

impl fmt::Display for Term {
    /// Debug-ish canonical rendering; the layout-aware printer lives in
    /// [`crate::syntax::printer`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var { name, .. } => write!(f, "{name}"),
            Term::Atom { text, .. } => write!(f, "{text}"),
            Term::Int { value, .. } => write!(f, "{value}"),
            Term::Float { value, .. } => write!(f, "{value}"),
            Term::Str { text, .. } => write!(f, "\"{text}\""),
            Term::Compound { functor, args, .. } => {
                write!(f, "{functor}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
