//! Alpha-normal canonical forms.
//!
//! Variables are renumbered by first occurrence in a left-to-right walk,
//! so two structures have equal canonical forms exactly when one is a
//! consistent variable renaming of the other. Spans and variable names
//! are dropped.

use std::collections::BTreeMap;

use crate::syntax::ast::{ClauseSrc, Goal, Term, VarId};

/// Total-ordered, hashable float wrapper (bit pattern identity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CFloat(pub u64);

impl From<f64> for CFloat {
    fn from(v: f64) -> CFloat {
        CFloat(v.to_bits())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CTerm {
    Var(u32),
    Atom(String),
    Int(i64),
    Float(CFloat),
    Str(String),
    Compound(String, Vec<CTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CGoal {
    /// Qualifier (if written in source) and the called term.
    Call(Option<String>, CTerm),
    Conj(Vec<CGoal>),
    Disj(Box<CGoal>, Box<CGoal>),
    Ite(Box<CGoal>, Box<CGoal>, Box<CGoal>),
    Neg(Box<CGoal>),
    Cut,
    True,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CClause {
    pub head: CTerm,
    pub body: CGoal,
}

/// First-occurrence variable numbering, shared across one canonical
/// conversion.
#[derive(Debug, Default)]
pub struct Numbering {
    map: BTreeMap<VarId, u32>,
}

impl Numbering {
    pub fn get(&mut self, id: VarId) -> u32 {
        let next = self.map.len() as u32;
        *self.map.entry(id).or_insert(next)
    }
}

pub fn canon_term(t: &Term, n: &mut Numbering) -> CTerm {
    match t {
        Term::Var { id, .. } => CTerm::Var(n.get(*id)),
        Term::Atom { text, .. } => CTerm::Atom(text.clone()),
        Term::Int { value, .. } => CTerm::Int(*value),
        Term::Float { value, .. } => CTerm::Float((*value).into()),
        Term::Str { text, .. } => CTerm::Str(text.clone()),
        Term::Compound { functor, args, .. } => CTerm::Compound(
            functor.clone(),
            args.iter().map(|a| canon_term(a, n)).collect(),
        ),
    }
}

pub fn canon_goal(g: &Goal, n: &mut Numbering) -> CGoal {
    canon_goal_keyed(g, n, None)
}

/// Canonicalizes a goal; calls matching `self_key` (name, arity, no
/// qualifier) are rewritten to the reserved functor `$self` so that
/// directly recursive definitions compare equal under predicate renaming.
pub fn canon_goal_keyed(g: &Goal, n: &mut Numbering, self_key: Option<(&str, usize)>) -> CGoal {
    match g {
        Goal::Call {
            term, qualifier, ..
        } => {
            if qualifier.is_none() && self_key.is_some() && term.indicator() == self_key {
                let args = term.args().iter().map(|a| canon_term(a, n)).collect();
                return CGoal::Call(None, CTerm::Compound("$self".to_string(), args));
            }
            CGoal::Call(qualifier.clone(), canon_term(term, n))
        }
        Goal::Conj { goals, .. } => CGoal::Conj(
            goals
                .iter()
                .map(|g| canon_goal_keyed(g, n, self_key))
                .collect(),
        ),
        Goal::Disj { left, right, .. } => CGoal::Disj(
            Box::new(canon_goal_keyed(left, n, self_key)),
            Box::new(canon_goal_keyed(right, n, self_key)),
        ),
        Goal::IfThenElse {
            cond, then, els, ..
        } => CGoal::Ite(
            Box::new(canon_goal_keyed(cond, n, self_key)),
            Box::new(canon_goal_keyed(then, n, self_key)),
            Box::new(canon_goal_keyed(els, n, self_key)),
        ),
        Goal::Neg { goal, .. } => CGoal::Neg(Box::new(canon_goal_keyed(goal, n, self_key))),
        Goal::Cut { .. } => CGoal::Cut,
        Goal::True { .. } => CGoal::True,
        Goal::Fail { .. } => CGoal::Fail,
    }
}

/// Canonical form of a clause with names intact.
pub fn canon_clause(c: &ClauseSrc) -> CClause {
    let mut n = Numbering::default();
    CClause {
        head: canon_term(&c.head, &mut n),
        body: canon_goal(&c.body, &mut n),
    }
}

/// Name-independent clause key for duplicate detection: the head functor
/// becomes `$head` and direct self-calls become `$self`.
pub fn dup_key(c: &ClauseSrc) -> CClause {
    let (name, arity) = c.indicator();
    let mut n = Numbering::default();
    let head_args = c
        .head
        .args()
        .iter()
        .map(|a| canon_term(a, &mut n))
        .collect();
    CClause {
        head: CTerm::Compound("$head".to_string(), head_args),
        body: canon_goal_keyed(&c.body, &mut n, Some((&name, arity))),
    }
}

/// Canonical form of a goal window with numbering shared across the
/// window: equal results mean the windows are variable renamings of each
/// other.
pub fn canon_window(goals: &[&Goal]) -> Vec<CGoal> {
    let mut n = Numbering::default();
    goals.iter().map(|g| canon_goal(g, &mut n)).collect()
}

/// Structure of a single goal with every variable collapsed; two goals
/// with equal skeletons differ at most in variable identities. Used as
/// the interning key for repeated-sequence mining.
pub fn goal_skeleton(g: &Goal) -> CGoal {
    fn ct(t: &Term) -> CTerm {
        match t {
            Term::Var { .. } => CTerm::Var(0),
            Term::Atom { text, .. } => CTerm::Atom(text.clone()),
            Term::Int { value, .. } => CTerm::Int(*value),
            Term::Float { value, .. } => CTerm::Float((*value).into()),
            Term::Str { text, .. } => CTerm::Str(text.clone()),
            Term::Compound { functor, args, .. } => {
                CTerm::Compound(functor.clone(), args.iter().map(ct).collect())
            }
        }
    }
    fn cg(g: &Goal) -> CGoal {
        match g {
            Goal::Call {
                term, qualifier, ..
            } => CGoal::Call(qualifier.clone(), ct(term)),
            Goal::Conj { goals, .. } => CGoal::Conj(goals.iter().map(cg).collect()),
            Goal::Disj { left, right, .. } => CGoal::Disj(Box::new(cg(left)), Box::new(cg(right))),
            Goal::IfThenElse {
                cond, then, els, ..
            } => CGoal::Ite(Box::new(cg(cond)), Box::new(cg(then)), Box::new(cg(els))),
            Goal::Neg { goal, .. } => CGoal::Neg(Box::new(cg(goal))),
            Goal::Cut { .. } => CGoal::Cut,
            Goal::True { .. } => CGoal::True,
            Goal::Fail { .. } => CGoal::Fail,
        }
    }
    cg(g)
}

/// Alpha-equivalence of goal windows.
pub fn alpha_eq_windows(a: &[&Goal], b: &[&Goal]) -> bool {
    canon_window(a) == canon_window(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::FileId;
    use crate::syntax::ast::Item;
    use crate::syntax::parser::parse_file;

    fn clause(src: &str) -> ClauseSrc {
        let pf = parse_file(src, FileId(0));
        assert!(pf.errors.is_empty(), "{:?}", pf.errors);
        match pf.items.into_iter().next().unwrap() {
            Item::Clause(c) => c,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn renaming_gives_equal_canon() {
        let a = clause("p(X, Y) :- q(X), r(Y, X).\n");
        let b = clause("p(A, B) :- q(A), r(B, A).\n");
        assert_eq!(canon_clause(&a), canon_clause(&b));
    }

    #[test]
    fn variable_sharing_is_distinguished() {
        let a = clause("p(X, X) :- q(X).\n");
        let b = clause("p(X, Y) :- q(X).\n");
        assert_ne!(canon_clause(&a), canon_clause(&b));
    }

    #[test]
    fn dup_key_ignores_predicate_name() {
        let a = clause("p(X) :- q(X).\n");
        let b = clause("r(X) :- q(X).\n");
        assert_eq!(dup_key(&a), dup_key(&b));
    }

    #[test]
    fn dup_key_matches_self_recursion() {
        let a = clause("p([H|T]) :- w(H), p(T).\n");
        let b = clause("copy([H|T]) :- w(H), copy(T).\n");
        let c = clause("other([H|T]) :- w(H), p(T).\n");
        assert_eq!(dup_key(&a), dup_key(&b));
        assert_ne!(dup_key(&a), dup_key(&c));
    }

    #[test]
    fn window_canon_shares_numbering() {
        let a = clause("x :- q(X), r(X).\n");
        let b = clause("y :- q(A), r(A).\n");
        let c = clause("z :- q(A), r(B).\n");
        let wa = canon_window(&a.body.conjuncts());
        let wb = canon_window(&b.body.conjuncts());
        let wc = canon_window(&c.body.conjuncts());
        assert_eq!(wa, wb);
        assert_ne!(wa, wc);
    }

    #[test]
    fn skeleton_collapses_variables() {
        let a = clause("x :- q(X, Y).\n");
        let b = clause("x :- q(A, A).\n");
        let c = clause("x :- q(A, b).\n");
        assert_eq!(
            goal_skeleton(a.body.conjuncts()[0]),
            goal_skeleton(b.body.conjuncts()[0])
        );
        assert_ne!(
            goal_skeleton(a.body.conjuncts()[0]),
            goal_skeleton(c.body.conjuncts()[0])
        );
    }

    #[test]
    fn control_structure_is_canonicalized() {
        let a = clause("p(X) :- ( X > 0 -> q(X) ; r(X) ), \\+ s(X).\n");
        let b = clause("p(N) :- ( N > 0 -> q(N) ; r(N) ), \\+ s(N).\n");
        assert_eq!(canon_clause(&a), canon_clause(&b));
    }
}
