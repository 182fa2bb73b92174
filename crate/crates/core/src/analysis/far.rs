//! Redundant-argument detection by greatest fixpoint.
//!
//! A position (p, k) is erasable when deleting the k-th argument from
//! p's head and from every call to p cannot change any answer. Start
//! from the optimistic set of all user positions and repeatedly discard
//! positions violated by some clause; a clause keeps (p, k) only if the
//! k-th head argument is a variable occurring exactly once in the head
//! and each of its body occurrences sits inside an argument that is
//! itself currently erasable. Occurrences in builtin or unresolved
//! calls, or as a bare meta-call goal, always violate.
//!
//! Predicates named literally at meta-call positions (`findall` goals,
//! `call/N`, assert arguments …) may be invoked through paths the
//! erasure rewrite cannot see, so none of their positions enter the
//! initial set.
//!
//! Argument indices are zero-based here; reports add one.

use std::collections::BTreeSet;

use crate::model::{CallGraph, EdgeKind, PredId, Program, Resolution};
use crate::syntax::ast::{ClauseSrc, Goal, Term, VarId};

#[derive(Debug, Clone)]
pub struct FarResult {
    pub erasable: BTreeSet<(PredId, usize)>,
    /// Sweeps performed until the set stabilised.
    pub iterations: usize,
}

pub fn compute_far(program: &Program) -> FarResult {
    let graph = CallGraph::build(program);
    let mut meta_called: BTreeSet<PredId> = BTreeSet::new();
    for site in &graph.sites {
        if site.kind == EdgeKind::Meta {
            if let crate::model::Callee::Pred(id) = &site.callee {
                meta_called.insert(id.clone());
            }
        }
    }

    let mut erasable: BTreeSet<(PredId, usize)> = BTreeSet::new();
    for pred in program.all_preds() {
        if pred.is_dynamic || pred.clauses.iter().any(|c| c.is_dcg) {
            continue;
        }
        if meta_called.contains(&pred.id) {
            continue;
        }
        for k in 0..pred.id.arity {
            erasable.insert((pred.id.clone(), k));
        }
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        let before = erasable.len();
        let current: Vec<(PredId, usize)> = erasable.iter().cloned().collect();
        for (id, k) in current {
            let pred = program.pred(&id).expect("candidate positions come from defined preds");
            let keep = pred
                .clauses
                .iter()
                .all(|c| clause_keeps(program, &id.module, c, k, &erasable));
            if !keep {
                erasable.remove(&(id, k));
            }
        }
        if erasable.len() == before {
            break;
        }
    }
    FarResult {
        erasable,
        iterations,
    }
}

fn clause_keeps(
    program: &Program,
    module: &str,
    clause: &ClauseSrc,
    k: usize,
    erasable: &BTreeSet<(PredId, usize)>,
) -> bool {
    let Term::Compound { args, .. } = &clause.head else {
        return false;
    };
    let Term::Var { id: v, .. } = &args[k] else {
        return false;
    };
    let v: VarId = *v;
    let head_count = clause
        .head
        .var_occurrences()
        .iter()
        .filter(|(_, i)| *i == v)
        .count();
    if head_count != 1 {
        return false;
    }

    let mut ok = true;
    clause.body.walk(&mut |g| {
        let Goal::Call {
            term, qualifier, ..
        } = g
        else {
            return;
        };
        match term {
            Term::Var { id, .. } => {
                if *id == v {
                    ok = false;
                }
            }
            Term::Compound { functor, args, .. } => {
                let callee = match program.resolve_qualified(
                    module,
                    qualifier.as_deref(),
                    functor,
                    args.len(),
                ) {
                    Resolution::Pred(id) => Some(id),
                    _ => None,
                };
                for (j, a) in args.iter().enumerate() {
                    if !occurs_in(a, v) {
                        continue;
                    }
                    match &callee {
                        Some(q) if erasable.contains(&(q.clone(), j)) => {}
                        _ => ok = false,
                    }
                }
            }
            _ => {}
        }
    });
    ok
}

fn occurs_in(t: &Term, v: VarId) -> bool {
    let mut found = false;
    t.walk(&mut |t| {
        if matches!(t, Term::Var { id, .. } if *id == v) {
            found = true;
        }
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};

    fn far(src: &str) -> BTreeSet<(String, usize)> {
        let files = vec![("m.pl".to_string(), src.to_string())];
        let p = load_program(&files, None, &Config::default());
        compute_far(&p)
            .erasable
            .iter()
            .map(|(id, k)| (format!("{}/{}", id.name, id.arity), *k))
            .collect()
    }

    #[test]
    fn cascade_needs_two_sweeps() {
        // (q,0) falls first because of the nonvar head arg; (p,0) falls
        // in the next sweep because its occurrence now feeds a
        // non-erasable position. Second args of both survive.
        let src = "p(X, Y) :- q(X, Y).\nq(a, _Z).\n";
        let files = vec![("m.pl".to_string(), src.to_string())];
        let p = load_program(&files, None, &Config::default());
        let r = compute_far(&p);
        let got: BTreeSet<(String, usize)> = r
            .erasable
            .iter()
            .map(|(id, k)| (id.name.clone(), *k))
            .collect();
        let want: BTreeSet<(String, usize)> =
            [("p".to_string(), 1), ("q".to_string(), 1)].into();
        assert_eq!(got, want);
        assert!(r.iterations >= 3);
    }

    #[test]
    fn recursive_unused_arg_survives() {
        let src = "loop(X) :- loop(X).\n";
        assert_eq!(far(src), [("loop/1".to_string(), 0)].into());
    }

    #[test]
    fn builtin_use_blocks() {
        let src = "show(X) :- write(X).\n";
        assert!(far(src).is_empty());
    }

    #[test]
    fn duplicated_head_var_blocks() {
        let src = "eq(X, X).\n";
        assert!(far(src).is_empty());
    }

    #[test]
    fn flows_through_erasable_callee() {
        let src = "f(X, a) :- g(X).\nf(Y, b) :- g(Y).\ng(_).\n";
        assert_eq!(
            far(src),
            [("f/2".to_string(), 0), ("g/1".to_string(), 0)].into()
        );
    }

    #[test]
    fn meta_call_blocks() {
        let src = "m(G) :- call(G).\n";
        assert!(far(src).is_empty());
    }

    #[test]
    fn meta_named_pred_excluded_entirely() {
        // h/1 never uses its argument, but it is named inside findall,
        // so no position of h may be erased; k/1 is untouched by that.
        let src = "p :- findall(X, h(X), _).\nh(_).\nk(_) :- p.\n";
        assert_eq!(far(src), [("k/1".to_string(), 0)].into());
    }

    #[test]
    fn nested_occurrence_follows_argument_position() {
        let src = "p(X) :- q(f(X)).\nq(_).\n";
        assert_eq!(
            far(src),
            [("p/1".to_string(), 0), ("q/1".to_string(), 0)].into()
        );
    }
}
