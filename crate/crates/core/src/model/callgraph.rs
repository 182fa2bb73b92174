//! Predicate call graph and module dependency analysis.
//!
//! Call sites are collected from clause bodies, including goals passed
//! literally to meta-predicates (`call/N`, `findall/3`, the database
//! built-ins, ...). A goal position holding a variable cannot be resolved
//! statically and is recorded as a [`MetaSite`]; analyses treat such
//! sites as a caveat on their results.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    is_database_builtin, meta_goal_positions, Pred, PredId, Program, Resolution,
};
use crate::span::SourceSpan;
use crate::syntax::ast::{Goal, Term};
use crate::syntax::parser::term_to_goal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Plain goal in a clause body.
    Direct,
    /// Goal argument of a meta-predicate or database built-in.
    Meta,
}

/// An unresolvable goal position (variable or non-literal goal).
#[derive(Debug, Clone, PartialEq)]
pub struct MetaSite {
    pub caller: PredId,
    pub span: SourceSpan,
    pub reason: String,
}

/// A syntactic call before resolution.
#[derive(Debug, Clone)]
pub struct RawCall {
    pub caller: PredId,
    pub qualifier: Option<String>,
    pub name: String,
    pub arity: usize,
    pub span: SourceSpan,
    pub kind: EdgeKind,
}

#[derive(Debug, Default)]
pub struct Sites {
    pub calls: Vec<RawCall>,
    pub meta: Vec<MetaSite>,
}

/// A resolved call edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CallSite {
    pub caller: PredId,
    pub callee: Callee,
    pub span: SourceSpan,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Callee {
    Pred(PredId),
    Builtin(String, usize),
    Undefined(String, usize),
}

#[derive(Debug)]
pub struct CallGraph {
    pub sites: Vec<CallSite>,
    /// Out-edges between user predicates; every program predicate has an
    /// entry.
    pub out: BTreeMap<PredId, BTreeSet<PredId>>,
    /// Reverse edges.
    pub into: BTreeMap<PredId, BTreeSet<PredId>>,
    pub meta: Vec<MetaSite>,
}

impl CallGraph {
    pub fn build(program: &Program) -> CallGraph {
        let sites = collect_sites(program);
        let mut out: BTreeMap<PredId, BTreeSet<PredId>> = BTreeMap::new();
        let mut into: BTreeMap<PredId, BTreeSet<PredId>> = BTreeMap::new();
        for pred in program.all_preds() {
            out.entry(pred.id.clone()).or_default();
            into.entry(pred.id.clone()).or_default();
        }
        let mut resolved = Vec::new();
        for raw in &sites.calls {
            let callee = match program.resolve_qualified(
                &raw.caller.module,
                raw.qualifier.as_deref(),
                &raw.name,
                raw.arity,
            ) {
                Resolution::Pred(id) => {
                    out.entry(raw.caller.clone()).or_default().insert(id.clone());
                    into.entry(id.clone()).or_default().insert(raw.caller.clone());
                    Callee::Pred(id)
                }
                Resolution::Builtin(n, a) => Callee::Builtin(n, a),
                Resolution::Undefined(n, a) => Callee::Undefined(n, a),
            };
            resolved.push(CallSite {
                caller: raw.caller.clone(),
                callee,
                span: raw.span,
                kind: raw.kind,
            });
        }
        CallGraph {
            sites: resolved,
            out,
            into,
            meta: sites.meta,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &PredId> {
        self.out.keys()
    }

    /// Meta-site caveats attached to a particular caller.
    pub fn meta_sites_of(&self, caller: &PredId) -> Vec<&MetaSite> {
        self.meta.iter().filter(|m| &m.caller == caller).collect()
    }
}

/// Collects every syntactic call site in the program.
pub fn collect_sites(program: &Program) -> Sites {
    let mut sites = Sites::default();
    for module in program.modules.values() {
        for pred in module.preds.values() {
            collect_pred(pred, &mut sites);
        }
    }
    sites
}

fn collect_pred(pred: &Pred, sites: &mut Sites) {
    for clause in &pred.clauses {
        if clause.is_dcg {
            continue;
        }
        visit_goal(&clause.body, &pred.id, EdgeKind::Direct, sites);
    }
}

fn visit_goal(goal: &Goal, caller: &PredId, kind: EdgeKind, sites: &mut Sites) {
    match goal {
        Goal::Call {
            term, qualifier, ..
        } => visit_call(term, qualifier.as_deref(), caller, kind, sites),
        Goal::Conj { goals, .. } => {
            for g in goals {
                visit_goal(g, caller, kind, sites);
            }
        }
        Goal::Disj { left, right, .. } => {
            visit_goal(left, caller, kind, sites);
            visit_goal(right, caller, kind, sites);
        }
        Goal::IfThenElse {
            cond, then, els, ..
        } => {
            visit_goal(cond, caller, kind, sites);
            visit_goal(then, caller, kind, sites);
            visit_goal(els, caller, kind, sites);
        }
        Goal::Neg { goal, .. } => visit_goal(goal, caller, kind, sites),
        Goal::Cut { .. } | Goal::True { .. } | Goal::Fail { .. } => {}
    }
}

fn visit_call(
    term: &Term,
    qualifier: Option<&str>,
    caller: &PredId,
    kind: EdgeKind,
    sites: &mut Sites,
) {
    let span = term.span().unwrap_or(SourceSpan::new(
        crate::span::FileId(u32::MAX),
        0,
        0,
    ));
    let Some((name, arity)) = term.indicator() else {
        sites.meta.push(MetaSite {
            caller: caller.clone(),
            span,
            reason: if matches!(term, Term::Var { .. }) {
                "goal is a variable".to_string()
            } else {
                "goal is not callable".to_string()
            },
        });
        return;
    };
    let (name, arity) = (name.to_string(), arity);
    sites.calls.push(RawCall {
        caller: caller.clone(),
        qualifier: qualifier.map(str::to_string),
        name: name.clone(),
        arity,
        span,
        kind,
    });

    if let Some((positions, extra)) = meta_goal_positions(&name, arity) {
        for pos in positions {
            let arg = &term.args()[pos];
            visit_meta_arg(arg, extra, caller, sites);
        }
    } else if is_database_builtin(&name, arity) {
        visit_clause_arg(&term.args()[0], caller, sites);
    }
}

/// A goal passed as an argument. With `extra > 0` (`call/N`) the goal's
/// arity is extended by the additional arguments.
fn visit_meta_arg(arg: &Term, extra: usize, caller: &PredId, sites: &mut Sites) {
    let span = arg.span().unwrap_or(SourceSpan::new(
        crate::span::FileId(u32::MAX),
        0,
        0,
    ));
    // Strip ^/2 existential quantifiers (bagof/setof).
    let mut goal_term = arg;
    while let Term::Compound { functor, args, .. } = goal_term {
        if functor == "^" && args.len() == 2 {
            goal_term = &args[1];
        } else {
            break;
        }
    }
    if !goal_term.is_callable() {
        sites.meta.push(MetaSite {
            caller: caller.clone(),
            span,
            reason: if matches!(goal_term, Term::Var { .. }) {
                "goal argument is a variable".to_string()
            } else {
                "goal argument is not callable".to_string()
            },
        });
        return;
    }
    if extra == 0 {
        visit_goal(&term_to_goal(goal_term), caller, EdgeKind::Meta, sites);
        return;
    }
    // call/N: only a literal atom or compound can take extra arguments.
    match goal_term.indicator() {
        Some((name, arity)) if !matches!(name, "," | ";" | "->" | "\\+") => {
            sites.calls.push(RawCall {
                caller: caller.clone(),
                qualifier: None,
                name: name.to_string(),
                arity: arity + extra,
                span,
                kind: EdgeKind::Meta,
            });
        }
        _ => sites.meta.push(MetaSite {
            caller: caller.clone(),
            span,
            reason: "control structure passed to call/N".to_string(),
        }),
    }
}

/// Argument of assert/asserta/assertz/retract: a clause term whose head
/// becomes callable and whose body goals are potential calls.
fn visit_clause_arg(arg: &Term, caller: &PredId, sites: &mut Sites) {
    let span = arg.span().unwrap_or(SourceSpan::new(
        crate::span::FileId(u32::MAX),
        0,
        0,
    ));
    match arg {
        Term::Compound { functor, args, .. } if functor == ":-" && args.len() == 2 => {
            visit_meta_arg(&args[0], 0, caller, sites);
            visit_meta_arg(&args[1], 0, caller, sites);
        }
        t if t.is_callable() => visit_meta_arg(t, 0, caller, sites),
        _ => sites.meta.push(MetaSite {
            caller: caller.clone(),
            span,
            reason: "database argument is not a clause".to_string(),
        }),
    }
}

/// Module dependency cycles (from `use_module` edges between modules that
/// both exist in the program), one entry per strongly connected component
/// of size > 1 or with a self-loop.
pub fn module_cycles(program: &Program) -> Vec<Vec<String>> {
    let nodes: Vec<String> = program.modules.keys().cloned().collect();
    let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for m in program.modules.values() {
        let outs = edges.entry(m.name.clone()).or_default();
        for imp in &m.imports {
            if program.modules.contains_key(&imp.from) {
                outs.insert(imp.from.clone());
            }
        }
    }
    let sccs = tarjan_sccs(&nodes, &edges);
    let mut cycles = Vec::new();
    for scc in sccs {
        let is_cycle = scc.len() > 1
            || edges
                .get(&scc[0])
                .map(|e| e.contains(&scc[0]))
                .unwrap_or(false);
        if is_cycle {
            let mut c = scc;
            c.sort();
            cycles.push(c);
        }
    }
    cycles.sort();
    cycles
}

/// Tarjan's strongly-connected-components algorithm.
pub fn tarjan_sccs(
    nodes: &[String],
    edges: &BTreeMap<String, BTreeSet<String>>,
) -> Vec<Vec<String>> {
    struct State<'a> {
        edges: &'a BTreeMap<String, BTreeSet<String>>,
        index: BTreeMap<String, usize>,
        lowlink: BTreeMap<String, usize>,
        on_stack: BTreeSet<String>,
        stack: Vec<String>,
        next: usize,
        out: Vec<Vec<String>>,
    }
    fn strongconnect(v: &str, st: &mut State<'_>) {
        st.index.insert(v.to_string(), st.next);
        st.lowlink.insert(v.to_string(), st.next);
        st.next += 1;
        st.stack.push(v.to_string());
        st.on_stack.insert(v.to_string());
        let succs: Vec<String> = st
            .edges
            .get(v)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default();
        for w in succs {
            if !st.index.contains_key(&w) {
                strongconnect(&w, st);
                let wl = st.lowlink[&w];
                let vl = st.lowlink[v];
                st.lowlink.insert(v.to_string(), vl.min(wl));
            } else if st.on_stack.contains(&w) {
                let wi = st.index[&w];
                let vl = st.lowlink[v];
                st.lowlink.insert(v.to_string(), vl.min(wi));
            }
        }
        if st.lowlink[v] == st.index[v] {
            let mut scc = Vec::new();
            while let Some(w) = st.stack.pop() {
                st.on_stack.remove(&w);
                let done = w == v;
                scc.push(w);
                if done {
                    break;
                }
            }
            st.out.push(scc);
        }
    }
    let mut st = State {
        edges,
        index: BTreeMap::new(),
        lowlink: BTreeMap::new(),
        on_stack: BTreeSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for n in nodes {
        if !st.index.contains_key(n) {
            strongconnect(n, &mut st);
        }
    }
    st.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};

    fn graph(files: &[(&str, &str)]) -> (Program, CallGraph) {
        let files: Vec<(String, String)> = files
            .iter()
            .map(|(p, t)| (p.to_string(), t.to_string()))
            .collect();
        let p = load_program(&files, None, &Config::default());
        let g = CallGraph::build(&p);
        (p, g)
    }

    #[test]
    fn direct_edges() {
        let (_, g) = graph(&[("m.pl", "a :- b, c.\nb :- c.\nc.\n")]);
        let a = PredId::user("a", 0);
        let b = PredId::user("b", 0);
        let c = PredId::user("c", 0);
        assert_eq!(g.out[&a], [b.clone(), c.clone()].into_iter().collect());
        assert_eq!(g.out[&b], [c.clone()].into_iter().collect());
        assert!(g.out[&c].is_empty());
        assert_eq!(g.into[&c], [a, b].into_iter().collect());
    }

    #[test]
    fn meta_edges_findall_and_call_n() {
        let (_, g) = graph(&[(
            "m.pl",
            "a(L) :- findall(X, target(X), L).\nb(G) :- call(G, 1).\nc :- call(helper, 1, 2).\ntarget(1).\nhelper(_, _).\n",
        )]);
        let a = PredId::user("a", 1);
        let c = PredId::user("c", 0);
        let target = PredId::user("target", 1);
        let helper = PredId::user("helper", 2);
        assert!(g.out[&a].contains(&target));
        // call(helper, 1, 2) extends the helper atom to helper/2.
        assert!(g.out[&c].contains(&helper));
        // b's call(G, 1) is a variable goal: a meta site, no edge.
        let b = PredId::user("b", 1);
        assert!(g.out[&b].is_empty());
        assert!(!g.meta_sites_of(&b).is_empty());
        let kinds: Vec<_> = g
            .sites
            .iter()
            .filter(|s| s.caller == a && matches!(&s.callee, Callee::Pred(p) if *p == target))
            .map(|s| s.kind)
            .collect();
        assert_eq!(kinds, vec![EdgeKind::Meta]);
    }

    #[test]
    fn assert_argument_edges() {
        let (_, g) = graph(&[(
            "m.pl",
            "setup :- assertz(cache(1)), assertz((lazy(X) :- compute(X))).\ncache(0).\ncompute(_).\nlazy(_).\n",
        )]);
        let setup = PredId::user("setup", 0);
        assert!(g.out[&setup].contains(&PredId::user("cache", 1)));
        assert!(g.out[&setup].contains(&PredId::user("compute", 1)));
        assert!(g.out[&setup].contains(&PredId::user("lazy", 1)));
    }

    #[test]
    fn undefined_callee_is_recorded() {
        let (_, g) = graph(&[("m.pl", "a :- nothing_here(1).\n")]);
        assert!(g
            .sites
            .iter()
            .any(|s| matches!(&s.callee, Callee::Undefined(n, 1) if n == "nothing_here")));
    }

    #[test]
    fn qualified_call_makes_cross_module_edge() {
        let (_, g) = graph(&[
            ("a.pl", ":- module(a, [p/0]).\np :- b:q.\n"),
            ("b.pl", ":- module(b, [q/0]).\nq.\n"),
        ]);
        let p = PredId::new("a", "p", 0);
        let q = PredId::new("b", "q", 0);
        assert!(g.out[&p].contains(&q));
    }

    #[test]
    fn tarjan_finds_components() {
        let nodes: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut add = |x: &str, y: &str| {
            edges
                .entry(x.to_string())
                .or_default()
                .insert(y.to_string());
        };
        add("a", "b");
        add("b", "a");
        add("b", "c");
        add("c", "d");
        let mut sccs = tarjan_sccs(&nodes, &edges);
        for s in &mut sccs {
            s.sort();
        }
        sccs.sort();
        assert!(sccs.contains(&vec!["a".to_string(), "b".to_string()]));
        assert!(sccs.contains(&vec!["c".to_string()]));
        assert!(sccs.contains(&vec!["d".to_string()]));
    }

    #[test]
    fn module_cycle_detection() {
        let (p, _) = graph(&[
            ("a.pl", ":- module(a, []).\n:- use_module(b).\n"),
            ("b.pl", ":- module(b, []).\n:- use_module(a).\n"),
            ("c.pl", ":- module(c, []).\n:- use_module(a).\n"),
        ]);
        let cycles = module_cycles(&p);
        assert_eq!(cycles, vec![vec!["a".to_string(), "b".to_string()]]);
    }

    #[test]
    fn negation_and_ite_bodies_are_visited() {
        let (_, g) = graph(&[(
            "m.pl",
            "a(X) :- \\+ hidden(X), ( cond(X) -> yes(X) ; no(X) ).\nhidden(_).\ncond(_).\nyes(_).\nno(_).\n",
        )]);
        let a = PredId::user("a", 1);
        for callee in ["hidden", "cond", "yes", "no"] {
            assert!(g.out[&a].contains(&PredId::user(callee, 1)), "{callee}");
        }
    }
}
