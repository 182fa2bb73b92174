//! Smell detection over a loaded program.
//!
//! Each smell carries a span, a compact payload (single line, no tabs)
//! and, when the matching rewrite is syntactically applicable at that
//! spot, the kebab-case identifier of the suggested refactoring.
//! Results are fully sorted so repeated runs on an unchanged workspace
//! render byte-identical reports.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{
    callgraph, CallGraph, Callee, Mode, Pred, PredId, Program,
};
use crate::span::SourceSpan;
use crate::syntax::ast::{Goal, Term, VarId};

use super::{dead, duplicates, far, sequences};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SmellKind {
    RedCut,
    OutputBeforeCommit,
    UnificationAsTest,
    ArgOrderViolation,
    OversizedModule,
    UnusedExport,
    DeadPredicate,
    DuplicatePair,
    CommonSequence,
    RedundantArgs,
    ExplicitQualification,
    MetaCallBlocker,
}

impl fmt::Display for SmellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SmellKind::RedCut => "RedCut",
            SmellKind::OutputBeforeCommit => "OutputBeforeCommit",
            SmellKind::UnificationAsTest => "UnificationAsTest",
            SmellKind::ArgOrderViolation => "ArgOrderViolation",
            SmellKind::OversizedModule => "OversizedModule",
            SmellKind::UnusedExport => "UnusedExport",
            SmellKind::DeadPredicate => "DeadPredicate",
            SmellKind::DuplicatePair => "DuplicatePair",
            SmellKind::CommonSequence => "CommonSequence",
            SmellKind::RedundantArgs => "RedundantArgs",
            SmellKind::ExplicitQualification => "ExplicitQualification",
            SmellKind::MetaCallBlocker => "MetaCallBlocker",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Smell {
    pub kind: SmellKind,
    pub span: SourceSpan,
    pub payload: String,
    pub suggested: Option<&'static str>,
}

/// Exported predicates never named in another module's import list,
/// never called cross-module, and not entry points.
pub fn unused_exports(program: &Program, graph: &CallGraph) -> Vec<(String, String, usize)> {
    let mut used: BTreeSet<(String, String, usize)> = BTreeSet::new();
    for module in program.modules.values() {
        for import in &module.imports {
            if let Some(names) = &import.names {
                for (n, a) in names {
                    used.insert((import.from.clone(), n.clone(), *a));
                }
            }
        }
    }
    for site in &graph.sites {
        if let Callee::Pred(id) = &site.callee {
            if site.caller.module != id.module {
                used.insert((id.module.clone(), id.name.clone(), id.arity));
            }
        }
    }
    for (m, n, a) in &program.config.entry_points {
        used.insert((m.clone(), n.clone(), *a));
    }

    let mut unused = Vec::new();
    for module in program.modules.values() {
        for (n, a) in &module.exports {
            let key = (module.name.clone(), n.clone(), *a);
            if !used.contains(&key) {
                unused.push(key);
            }
        }
    }
    unused.sort();
    unused
}

pub fn detect_smells(program: &Program) -> Vec<Smell> {
    let graph = CallGraph::build(program);
    let mut smells = Vec::new();

    for pred in program.all_preds() {
        clause_smells(program, pred, &mut smells);
        mode_order_smell(pred, &mut smells);
    }
    oversized_modules(program, &mut smells);
    unused_export_smells(program, &graph, &mut smells);
    dead_smells(program, &graph, &mut smells);
    duplicate_smells(program, &mut smells);
    sequence_smells(program, &mut smells);
    redundant_arg_smells(program, &mut smells);
    qualification_smells(program, &mut smells);
    for site in &graph.meta {
        smells.push(Smell {
            kind: SmellKind::MetaCallBlocker,
            span: site.span,
            payload: format!("{} {}", site.caller, site.reason),
            suggested: None,
        });
    }

    smells.sort_by(|a, b| {
        let ka = (program.path(a.span.file), a.span.start, a.span.end, a.kind, &a.payload);
        let kb = (program.path(b.span.file), b.span.start, b.span.end, b.kind, &b.payload);
        ka.cmp(&kb)
    });
    smells
}

/// One line per smell: `KIND\tfile\tstart\tend\tpayload`.
pub fn machine_report(program: &Program, smells: &[Smell]) -> String {
    let mut out = String::new();
    for s in smells {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            s.kind,
            program.path(s.span.file),
            s.span.start,
            s.span.end,
            s.payload
        ));
    }
    out
}

pub fn human_report(program: &Program, smells: &[Smell]) -> String {
    let mut out = String::new();
    for s in smells {
        let file = program.file(s.span.file);
        let lc = crate::span::line_col(&file.text, s.span.start);
        out.push_str(&format!(
            "{}:{}:{}: {}: {}",
            file.path, lc.line, lc.col, s.kind, s.payload
        ));
        if let Some(fix) = s.suggested {
            out.push_str(&format!(" (try: {fix})"));
        }
        out.push('\n');
    }
    out
}

// --- per-clause smells -------------------------------------------------

/// Test goals that keep a cut "green": they bind nothing.
fn is_pure_test(g: &Goal) -> bool {
    match g {
        Goal::True { .. } => true,
        Goal::Call {
            term: Term::Compound { functor, args, .. },
            qualifier: None,
            ..
        } => {
            matches!(
                (functor.as_str(), args.len()),
                ("==" | "\\==" | "@<" | "@>" | "@=<" | "@>=", 2)
                    | ("=:=" | "=\\=" | "<" | ">" | "=<" | ">=", 2)
                    | (
                        "var" | "nonvar" | "atom" | "number" | "integer" | "float" | "atomic"
                            | "compound" | "callable" | "is_list" | "ground",
                        1
                    )
            )
        }
        _ => false,
    }
}

fn head_args(head: &Term) -> &[Term] {
    match head {
        Term::Compound { args, .. } => args,
        _ => &[],
    }
}

/// A cut committing only a sequence of pure tests over a head of
/// distinct variables cannot cut away answers the clause would produce.
fn is_green_cut_clause(clause: &crate::syntax::ast::ClauseSrc) -> bool {
    let goals = clause.body.conjuncts();
    let cuts: Vec<usize> = goals
        .iter()
        .enumerate()
        .filter(|(_, g)| matches!(g, Goal::Cut { .. }))
        .map(|(i, _)| i)
        .collect();
    if cuts.len() != 1 {
        return false;
    }
    // The single cut must be the only one anywhere in the body.
    let total_cuts = {
        let mut n = 0;
        clause.body.walk(&mut |g| {
            if matches!(g, Goal::Cut { .. }) {
                n += 1;
            }
        });
        n
    };
    if total_cuts != 1 {
        return false;
    }
    let args = head_args(&clause.head);
    let mut seen = BTreeSet::new();
    for a in args {
        match a {
            Term::Var { id, .. } if seen.insert(*id) => {}
            _ => return false,
        }
    }
    goals[..cuts[0]].iter().all(|g| is_pure_test(g))
}

fn mode_positions(pred: &Pred, wanted: Mode) -> Vec<usize> {
    match &pred.modes {
        Some(modes) => modes
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == wanted)
            .map(|(i, _)| i)
            .collect(),
        None => Vec::new(),
    }
}

fn head_vars_at(head: &Term, positions: &[usize]) -> BTreeSet<VarId> {
    let args = head_args(head);
    positions
        .iter()
        .filter_map(|&i| args.get(i))
        .filter_map(|a| match a {
            Term::Var { id, .. } => Some(*id),
            _ => None,
        })
        .collect()
}

fn unification_parts<'g>(g: &'g Goal) -> Option<(&'g Term, &'g Term, SourceSpan)> {
    if let Goal::Call {
        term: Term::Compound { functor, args, span, .. },
        qualifier: None,
        ..
    } = g
    {
        if functor == "=" && args.len() == 2 {
            let sp = span.unwrap_or(SourceSpan {
                file: crate::span::FileId(0),
                start: 0,
                end: 0,
            });
            return Some((&args[0], &args[1], sp));
        }
    }
    None
}

fn is_atomic(t: &Term) -> bool {
    matches!(
        t,
        Term::Atom { .. } | Term::Int { .. } | Term::Float { .. } | Term::Str { .. }
    )
}

fn clause_smells(program: &Program, pred: &Pred, smells: &mut Vec<Smell>) {
    let out_positions = mode_positions(pred, Mode::Out);
    let in_positions = mode_positions(pred, Mode::In);
    let two_clause_guard = pred.clauses.len() == 2;

    for (idx, clause) in pred.clauses.iter().enumerate() {
        if clause.is_dcg {
            continue;
        }
        let goals = clause.body.conjuncts();
        let cut_at = goals
            .iter()
            .position(|g| matches!(g, Goal::Cut { .. }));

        // RedCut: any cut outside the green shape.
        if clause.body.contains_cut() && !is_green_cut_clause(clause) {
            let span = first_cut_span(&clause.body).unwrap_or(clause.span);
            let suggested = (two_clause_guard && idx == 0 && cut_at.is_some())
                .then_some("replace-cut-with-ite");
            smells.push(Smell {
                kind: SmellKind::RedCut,
                span,
                payload: format!("{} clause {}", pred.id, idx + 1),
                suggested,
            });
        }

        if !out_positions.is_empty() {
            let out_vars = head_vars_at(&clause.head, &out_positions);
            let args = head_args(&clause.head);

            // Output bound by the head itself, committed by a cut.
            if clause.body.contains_cut() {
                for &p in &out_positions {
                    if let Some(a) = args.get(p) {
                        if !matches!(a, Term::Var { .. }) {
                            smells.push(Smell {
                                kind: SmellKind::OutputBeforeCommit,
                                span: a.span().unwrap_or(clause.span),
                                payload: format!("{} clause {} arg {}", pred.id, idx + 1, p + 1),
                                suggested: Some("output-after-commit"),
                            });
                        }
                    }
                }
            }

            // Output unified before a top-level cut.
            if let Some(cut) = cut_at {
                for g in &goals[..cut] {
                    if let Some(sm) =
                        output_binding(program, &pred.id, idx, g, &out_vars)
                    {
                        smells.push(sm);
                    }
                }
            }

            // Output unified inside an if-then-else condition.
            clause.body.walk(&mut |g| {
                if let Goal::IfThenElse { cond, .. } = g {
                    for c in cond.conjuncts() {
                        if let Some(sm) =
                            output_binding(program, &pred.id, idx, c, &out_vars)
                        {
                            smells.push(sm);
                        }
                    }
                }
            });
        }

        if !in_positions.is_empty() {
            let in_vars = head_vars_at(&clause.head, &in_positions);
            let mut conditions: Vec<&Goal> = Vec::new();
            if let Some(cut) = cut_at {
                conditions.extend(&goals[..cut]);
            }
            clause.body.walk(&mut |g| {
                if let Goal::IfThenElse { cond, .. } = g {
                    conditions.extend(cond.conjuncts());
                }
            });
            for g in conditions {
                if let Some((l, r, span)) = unification_parts(g) {
                    let hit = |v: &Term, t: &Term| {
                        matches!(v, Term::Var { id, .. } if in_vars.contains(id)) && is_atomic(t)
                    };
                    if hit(l, r) || hit(r, l) {
                        smells.push(Smell {
                            kind: SmellKind::UnificationAsTest,
                            span,
                            payload: format!("{} clause {}", pred.id, idx + 1),
                            suggested: Some("unification-to-test"),
                        });
                    }
                }
            }
        }
    }
}

fn output_binding(
    _program: &Program,
    pred: &PredId,
    idx: usize,
    g: &Goal,
    out_vars: &BTreeSet<VarId>,
) -> Option<Smell> {
    let (l, r, span) = unification_parts(g)?;
    let binds = |v: &Term, t: &Term| {
        matches!(v, Term::Var { id, .. } if out_vars.contains(id))
            && !matches!(t, Term::Var { .. })
    };
    if binds(l, r) || binds(r, l) {
        Some(Smell {
            kind: SmellKind::OutputBeforeCommit,
            span,
            payload: format!("{} clause {}", pred, idx + 1),
            suggested: Some("output-after-commit"),
        })
    } else {
        None
    }
}

fn first_cut_span(body: &Goal) -> Option<SourceSpan> {
    let mut found = None;
    body.walk(&mut |g| {
        if found.is_none() {
            if let Goal::Cut { span } = g {
                found = Some(span.unwrap_or(SourceSpan {
                    file: crate::span::FileId(0),
                    start: 0,
                    end: 0,
                }));
            }
        }
    });
    found
}

// --- predicate/module smells -------------------------------------------

/// Input-first, output-last: flag a declared mode listing an output
/// before an input, suggesting the stable input/any/output permutation.
fn mode_order_smell(pred: &Pred, smells: &mut Vec<Smell>) {
    let Some(modes) = &pred.modes else { return };
    let violated = modes.iter().enumerate().any(|(i, m)| {
        *m == Mode::Out && modes[i + 1..].iter().any(|n| *n == Mode::In)
    });
    if !violated {
        return;
    }
    let mut perm: Vec<usize> = Vec::new();
    for want in [Mode::In, Mode::Any, Mode::Out] {
        perm.extend(
            modes
                .iter()
                .enumerate()
                .filter(|(_, m)| **m == want)
                .map(|(i, _)| i + 1),
        );
    }
    let span = pred
        .mode_directive
        .or_else(|| pred.clauses.first().map(|c| c.span));
    let Some(span) = span else { return };
    let modes_text: Vec<&str> = modes.iter().map(|m| m.atom()).collect();
    let perm_text: Vec<String> = perm.iter().map(|p| p.to_string()).collect();
    smells.push(Smell {
        kind: SmellKind::ArgOrderViolation,
        span,
        payload: format!(
            "{} modes ({}) suggest permutation [{}]",
            pred.id,
            modes_text.join(","),
            perm_text.join(",")
        ),
        suggested: Some("reorder-args"),
    });
}

fn oversized_modules(program: &Program, smells: &mut Vec<Smell>) {
    let threshold = program.config.oversized_threshold;
    for module in program.modules.values() {
        let count = module.preds.len();
        if count > threshold {
            let span = module.decl_span.unwrap_or_else(|| SourceSpan {
                file: module.files[0],
                start: 0,
                end: 0,
            });
            smells.push(Smell {
                kind: SmellKind::OversizedModule,
                span,
                payload: format!("module {} has {count} predicates (threshold {threshold})", module.name),
                suggested: Some("split-module"),
            });
        }
    }
}

fn unused_export_smells(program: &Program, graph: &CallGraph, smells: &mut Vec<Smell>) {
    for (m, n, a) in unused_exports(program, graph) {
        let module = &program.modules[&m];
        let span = module.decl_span.unwrap_or_else(|| SourceSpan {
            file: module.files[0],
            start: 0,
            end: 0,
        });
        smells.push(Smell {
            kind: SmellKind::UnusedExport,
            span,
            payload: format!("{m}:{n}/{a}"),
            suggested: Some("hide-predicates"),
        });
    }
}

fn pred_span(pred: &Pred) -> Option<SourceSpan> {
    pred.clauses
        .first()
        .map(|c| c.span)
        .or(pred.mode_directive)
}

fn dead_smells(program: &Program, graph: &CallGraph, smells: &mut Vec<Smell>) {
    let Ok(roots) = dead::default_roots(program) else {
        return;
    };
    let dc = dead::find_dead(program, graph, &roots);
    for id in &dc.dead {
        let pred = program.pred(id).expect("dead ids come from defined preds");
        let Some(span) = pred_span(pred) else { continue };
        smells.push(Smell {
            kind: SmellKind::DeadPredicate,
            span,
            payload: id.to_string(),
            suggested: Some("remove-dead"),
        });
    }
}

fn duplicate_smells(program: &Program, smells: &mut Vec<Smell>) {
    for (a, b) in duplicates::duplicate_pairs(program) {
        let pred = program.pred(&a).expect("pair members are defined");
        let Some(span) = pred_span(pred) else { continue };
        smells.push(Smell {
            kind: SmellKind::DuplicatePair,
            span,
            payload: format!("{a} = {b}"),
            suggested: Some("remove-duplicates"),
        });
    }
}

fn sequence_smells(program: &Program, smells: &mut Vec<Smell>) {
    for seq in sequences::find_repeated_sequences(program, 2, 2) {
        let first = &seq.occurrences[0];
        let where_: Vec<String> = seq
            .occurrences
            .iter()
            .map(|o| format!("{} clause {}", o.pred, o.clause_idx + 1))
            .collect();
        smells.push(Smell {
            kind: SmellKind::CommonSequence,
            span: first.span,
            payload: format!(
                "{} goals x {} occurrences: {}",
                seq.len,
                seq.occurrences.len(),
                where_.join(", ")
            ),
            suggested: Some("extract-predicate"),
        });
    }
}

fn redundant_arg_smells(program: &Program, smells: &mut Vec<Smell>) {
    let result = far::compute_far(program);
    let mut by_pred: std::collections::BTreeMap<PredId, Vec<usize>> = Default::default();
    for (id, k) in &result.erasable {
        by_pred.entry(id.clone()).or_default().push(k + 1);
    }
    for (id, positions) in by_pred {
        let pred = program.pred(&id).expect("erasable ids are defined");
        let Some(span) = pred_span(pred) else { continue };
        let pos_text: Vec<String> = positions.iter().map(|p| p.to_string()).collect();
        smells.push(Smell {
            kind: SmellKind::RedundantArgs,
            span,
            payload: format!("{} positions [{}]", id, pos_text.join(",")),
            suggested: Some("remove-redundant-args"),
        });
    }
}

fn qualification_smells(program: &Program, smells: &mut Vec<Smell>) {
    let sites = callgraph::collect_sites(program);
    for call in sites.calls {
        if let Some(q) = &call.qualifier {
            smells.push(Smell {
                kind: SmellKind::ExplicitQualification,
                span: call.span,
                payload: format!("{}:{}/{}", q, call.name, call.arity),
                suggested: Some("eliminate-qualification"),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};

    fn smells_of(src: &str, modes: Option<&str>) -> Vec<Smell> {
        let files = vec![("m.pl".to_string(), src.to_string())];
        let p = load_program(&files, modes, &Config::default());
        detect_smells(&p)
    }

    fn kinds(smells: &[Smell]) -> Vec<SmellKind> {
        let mut k: Vec<SmellKind> = smells.iter().map(|s| s.kind).collect();
        k.sort();
        k.dedup();
        k
    }

    #[test]
    fn red_cut_on_head_binding_clause() {
        let src = "p(a, done) :- !.\np(X, other) :- q(X).\nq(_).\n";
        let found = smells_of(src, None);
        let red: Vec<&Smell> = found
            .iter()
            .filter(|s| s.kind == SmellKind::RedCut)
            .collect();
        assert_eq!(red.len(), 1);
        assert_eq!(red[0].payload, "user:p/2 clause 1");
        assert_eq!(red[0].suggested, Some("replace-cut-with-ite"));
    }

    #[test]
    fn green_cut_not_reported() {
        // Distinct-variable head, pure comparison guard.
        let src = "max(X, Y, Z) :- X >= Y, !, Z = X.\nmax(_, Y, Y).\n";
        let found = smells_of(src, None);
        assert!(found.iter().all(|s| s.kind != SmellKind::RedCut));
    }

    #[test]
    fn output_before_commit_needs_modes() {
        let src = "p(X, done) :- q(X), !.\np(X, keep) :- q(X).\nq(_).\n";
        let without = smells_of(src, None);
        assert!(without.iter().all(|s| s.kind != SmellKind::OutputBeforeCommit));
        let with = smells_of(src, Some(":- mode p(+, -).\n"));
        let hits: Vec<&Smell> = with
            .iter()
            .filter(|s| s.kind == SmellKind::OutputBeforeCommit)
            .collect();
        // Only clause 1 commits: the nonvar head arg `done` before `!`.
        assert_eq!(hits.len(), 1);
        assert!(hits[0].payload.contains("clause 1"));
    }

    #[test]
    fn output_unified_before_cut_in_body() {
        let src = "p(X, Out) :- q(X), Out = done, !.\np(_, keep).\nq(_).\n";
        let found = smells_of(src, Some(":- mode p(+, -).\n"));
        assert!(found
            .iter()
            .any(|s| s.kind == SmellKind::OutputBeforeCommit));
    }

    #[test]
    fn unification_as_test_in_condition() {
        let src = "p(T, R) :- ( T = stop -> R = 1 ; R = 0 ).\n";
        let found = smells_of(src, Some(":- mode p(+, -).\n"));
        let hits: Vec<&Smell> = found
            .iter()
            .filter(|s| s.kind == SmellKind::UnificationAsTest)
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].suggested, Some("unification-to-test"));
        // R = 1 binds an output inside the condition? No: it's in the
        // then-branch, so no OutputBeforeCommit either.
        assert!(found.iter().all(|s| s.kind != SmellKind::OutputBeforeCommit));
    }

    #[test]
    fn arg_order_violation_permutation() {
        let src = "f(Out, In) :- g(In, Out).\ng(_, _).\n";
        let found = smells_of(src, Some(":- mode f(-, +).\n"));
        let hit = found
            .iter()
            .find(|s| s.kind == SmellKind::ArgOrderViolation)
            .expect("violation");
        assert!(hit.payload.contains("[2,1]"), "{}", hit.payload);
    }

    #[test]
    fn oversized_module_fires_strictly_above_threshold() {
        let mut at = String::from(":- module(big, []).\n:- dynamic seed/0.\n");
        for i in 0..39 {
            at.push_str(&format!("p{i}.\n"));
        }
        // 39 clauses + seed/0 = 40 predicates: not oversized.
        let found = smells_of(&at, None);
        assert!(found.iter().all(|s| s.kind != SmellKind::OversizedModule));
        at.push_str("p_extra.\n");
        let found = smells_of(&at, None);
        assert!(found.iter().any(|s| s.kind == SmellKind::OversizedModule));
    }

    #[test]
    fn unused_export_and_qualified_use() {
        let files = vec![
            (
                "b.pl".to_string(),
                ":- module(b, [p/0, q/0, r/0]).\np.\nq.\nr.\n".to_string(),
            ),
            (
                "a.pl".to_string(),
                ":- module(a, [go/0]).\n:- use_module(b, [p/0]).\ngo :- p, b:r.\n".to_string(),
            ),
        ];
        let mut cfg = Config::default();
        cfg.entry_points = vec![("a".to_string(), "go".to_string(), 0)];
        let p = load_program(&files, None, &cfg);
        let g = CallGraph::build(&p);
        assert_eq!(
            unused_exports(&p, &g),
            vec![("b".to_string(), "q".to_string(), 0)]
        );
        let smells = detect_smells(&p);
        let unused: Vec<&Smell> = smells
            .iter()
            .filter(|s| s.kind == SmellKind::UnusedExport)
            .collect();
        assert_eq!(unused.len(), 1);
        assert_eq!(unused[0].payload, "b:q/0");
        assert!(smells
            .iter()
            .any(|s| s.kind == SmellKind::ExplicitQualification && s.payload == "b:r/0"));
    }

    #[test]
    fn analysis_backed_smells_appear() {
        let src = "\
:- module(m, [main/0]).
main :- shared(1).
shared(X) :- step(X), log(X).
other(X) :- step(X), log(X).
orphan.
copy1(A, A).
copy2(B, B).
step(_).
log(_).
";
        let found = smells_of(src, None);
        let ks = kinds(&found);
        assert!(ks.contains(&SmellKind::DeadPredicate));
        assert!(ks.contains(&SmellKind::DuplicatePair));
        assert!(ks.contains(&SmellKind::CommonSequence));
        assert!(ks.contains(&SmellKind::RedundantArgs));
    }

    #[test]
    fn machine_report_is_deterministic_and_tab_clean() {
        let src = "p(a, done) :- !.\np(_, keep).\nm(G) :- call(G).\n";
        let files = vec![("m.pl".to_string(), src.to_string())];
        let p = load_program(&files, None, &Config::default());
        let a = machine_report(&p, &detect_smells(&p));
        let b = machine_report(&p, &detect_smells(&p));
        assert_eq!(a, b);
        for line in a.lines() {
            assert_eq!(line.split('\t').count(), 5, "line: {line}");
        }
        assert!(a.contains("MetaCallBlocker"));
    }
}
