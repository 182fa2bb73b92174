//! Clause-level rewrites: cut elimination, commit-point hygiene,
//! if-then-else inversion, and extraction of repeated goal sequences.

use std::collections::{BTreeMap, BTreeSet};

use super::util::{
    clause_var_names, conj_text, directive_insertion_point, eof_insertion, fresh_name,
    goal_text_for_conj, item_delete_span, list_append_edit,
    module_directive, module_file, remove_conjuncts_edits, use_module_directives, visible,
};
use super::{Ctx, ExtractTarget, IssueCode};
use crate::analysis::sequences::{clause_contexts, window_occurrence, SeqOccurrence};
use crate::edit::TextEdit;
use crate::model::{Mode, PredId, Resolution};
use crate::span::SourceSpan;
use crate::syntax::ast::{Goal, Term, VarId};
use crate::syntax::canon::canon_window;
use crate::syntax::printer::quote_atom;

/// The name of a non-anonymous variable term.
fn named_var(t: &Term) -> Option<&str> {
    match t {
        Term::Var { name, .. } if name != "_" => Some(name),
        _ => None,
    }
}

fn is_anon(t: &Term) -> bool {
    matches!(t, Term::Var { name, .. } if name == "_")
}

fn slice<'a>(text: &'a str, span: SourceSpan) -> &'a str {
    &text[span.start..span.end]
}

/// Rewrites a two-clause guarded predicate
/// `H1 :- G, !, B1.` / `H2 :- B2.` into a single clause
/// `H :- ( U1, G -> B1 ; U2, B2 ).` where H generalizes both heads and
/// U1/U2 are the residual head unifications.
pub(super) fn replace_cut_with_ite(ctx: &mut Ctx, pred: &PredId) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    if p.clauses.len() != 2 {
        ctx.block(
            IssueCode::NotSupportedPattern,
            p.clauses.first().map(|c| c.span),
            format!(
                "{pred} has {} clause(s); the supported shape is one guarded clause plus one alternative",
                p.clauses.len()
            ),
        );
        return;
    }
    let c1 = &p.clauses[0];
    let c2 = &p.clauses[1];
    if c1.is_dcg || c2.is_dcg {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(c1.span),
            "grammar rules cannot be rewritten",
        );
        return;
    }

    let conjs1 = c1.body.conjuncts();
    let cut_positions: Vec<usize> = conjs1
        .iter()
        .enumerate()
        .filter(|(_, g)| matches!(g, Goal::Cut { .. }))
        .map(|(i, _)| i)
        .collect();
    if cut_positions.len() != 1 {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(c1.span),
            "first clause must contain exactly one top-level cut",
        );
        return;
    }
    let cut_idx = cut_positions[0];
    let guard = &conjs1[..cut_idx];
    let after = &conjs1[cut_idx + 1..];

    for g in guard {
        let allowed = match g {
            Goal::True { .. } => true,
            Goal::Call {
                term,
                qualifier: None,
                ..
            } => term.indicator().is_some_and(|(n, a)| {
                ctx.program
                    .config
                    .pure_guard
                    .iter()
                    .any(|(gn, ga)| gn == n && *ga == a)
            }),
            _ => false,
        };
        if !allowed {
            ctx.block(
                IssueCode::NotSupportedPattern,
                g.span(),
                "guard before the cut may only contain whitelisted unifications and tests",
            );
        }
    }
    if ctx.blocked() {
        return;
    }

    let text1 = ctx.text(c1.span.file);
    let text2 = ctx.text(c2.span.file);
    let ops1 = &ctx.program.file(c1.span.file).ops;
    let ops2 = &ctx.program.file(c2.span.file).ops;
    let used1 = clause_var_names(c1);
    let used2 = clause_var_names(c2);
    let mut all_used: BTreeSet<String> = used1.union(&used2).cloned().collect();

    let args1 = c1.head.args();
    let args2 = c2.head.args();
    let mut head_vars: Vec<String> = Vec::new();
    let mut u1: Vec<String> = Vec::new();
    let mut u2: Vec<String> = Vec::new();
    for i in 0..pred.arity {
        let a1 = &args1[i];
        let a2 = &args2[i];
        let n1 = named_var(a1);
        let n2 = named_var(a2);
        let taken = |n: &str| head_vars.iter().any(|h| h == n);
        let chosen = if let (Some(x), Some(y)) = (n1, n2) {
            if x == y && !taken(x) {
                // Same position, same name: head unification is shared.
                x.to_string()
            } else if !taken(y) && !used1.contains(y) {
                if !is_anon(a1) {
                    u1.push(format!("{y} = {}", slice(text1, a1.span().expect("parsed arg"))));
                }
                y.to_string()
            } else if !taken(x) && !used2.contains(x) {
                if !is_anon(a2) {
                    u2.push(format!("{x} = {}", slice(text2, a2.span().expect("parsed arg"))));
                }
                x.to_string()
            } else {
                let v = fresh_name(&format!("A{}", i + 1), &all_used);
                u1.push(format!("{v} = {x}"));
                u2.push(format!("{v} = {y}"));
                v
            }
        } else if let Some(y) = n2.filter(|y| !taken(y) && !used1.contains(*y)) {
            if !is_anon(a1) {
                u1.push(format!("{y} = {}", slice(text1, a1.span().expect("parsed arg"))));
            }
            y.to_string()
        } else if let Some(x) = n1.filter(|x| !taken(x) && !used2.contains(*x)) {
            if !is_anon(a2) {
                u2.push(format!("{x} = {}", slice(text2, a2.span().expect("parsed arg"))));
            }
            x.to_string()
        } else {
            let v = fresh_name(&format!("A{}", i + 1), &all_used);
            if !is_anon(a1) {
                u1.push(format!("{v} = {}", slice(text1, a1.span().expect("parsed arg"))));
            }
            if !is_anon(a2) {
                u2.push(format!("{v} = {}", slice(text2, a2.span().expect("parsed arg"))));
            }
            v
        };
        all_used.insert(chosen.clone());
        head_vars.push(chosen);
    }

    let mut cond_parts = u1;
    for g in guard {
        if !matches!(g, Goal::True { .. }) {
            cond_parts.push(goal_text_for_conj(text1, ops1, g));
        }
    }
    let mut then_parts: Vec<String> = Vec::new();
    for g in after {
        if !matches!(g, Goal::True { .. }) {
            then_parts.push(goal_text_for_conj(text1, ops1, g));
        }
    }
    let mut else_parts = u2;
    if !c2.is_fact() {
        for g in c2.body.conjuncts() {
            if !matches!(g, Goal::True { .. }) {
                else_parts.push(goal_text_for_conj(text2, ops2, g));
            }
        }
    }

    let head_text = if pred.arity == 0 {
        quote_atom(&pred.name)
    } else {
        format!("{}({})", quote_atom(&pred.name), head_vars.join(", "))
    };
    let new_clause = format!(
        "{head_text} :-\n    (   {}\n    ->  {}\n    ;   {}\n    ).",
        conj_text(&cond_parts),
        conj_text(&then_parts),
        conj_text(&else_parts),
    );

    ctx.edits.push(TextEdit::new(c1.span, new_clause));
    ctx.edits
        .push(TextEdit::new(item_delete_span(text2, c2.span), String::new()));
}

/// True for `V = T` or `T = V` where V is one of `vars`; returns the
/// variable's name.
fn unification_of<'g>(g: &'g Goal, vars: &BTreeSet<&str>) -> Option<(&'g str, &'g Goal)> {
    if let Goal::Call {
        term: Term::Compound { functor, args, .. },
        qualifier: None,
        ..
    } = g
    {
        if functor == "=" && args.len() == 2 {
            for side in [&args[0], &args[1]] {
                if let Some(n) = named_var(side) {
                    if vars.contains(n) {
                        return Some((n, g));
                    }
                }
            }
        }
    }
    None
}

fn goal_var_names(g: &Goal) -> BTreeSet<String> {
    g.var_occurrences()
        .iter()
        .filter(|(n, _)| *n != "_")
        .map(|(n, _)| n.to_string())
        .collect()
}

/// Moves output-argument unifications past the clause's commit point:
/// after the cut, or from an if-then-else condition to the start of its
/// then-branch. Output arguments come from the mode declaration.
pub(super) fn output_after_commit(ctx: &mut Ctx, pred: &PredId, clause: usize) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    let modes = match &p.modes {
        Some(m) => m.clone(),
        None => {
            ctx.block(
                IssueCode::NoModeInfo,
                None,
                format!("{pred} has no mode declaration; output arguments are unknown"),
            );
            return;
        }
    };
    let c = match p.clauses.get(clause) {
        Some(c) if !c.is_dcg => c,
        Some(c) => {
            ctx.block(IssueCode::NotSupportedPattern, Some(c.span), "grammar rule");
            return;
        }
        None => {
            ctx.block(
                IssueCode::TargetMissing,
                None,
                format!("{pred} has no clause {clause}"),
            );
            return;
        }
    };

    let head_args = c.head.args();
    let out_positions: Vec<usize> = modes
        .iter()
        .enumerate()
        .filter(|(_, m)| **m == Mode::Out)
        .map(|(i, _)| i)
        .collect();
    if out_positions.is_empty() {
        ctx.block(
            IssueCode::NotOutputBinding,
            None,
            format!("mode of {pred} declares no output argument"),
        );
        return;
    }
    let out_vars: BTreeSet<&str> = out_positions
        .iter()
        .filter_map(|&i| head_args.get(i).and_then(named_var))
        .collect();

    let text = ctx.text(c.span.file);
    let conjs = c.body.conjuncts();
    let cut_idx = conjs.iter().position(|g| matches!(g, Goal::Cut { .. }));

    if let Some(ci) = cut_idx {
        let mut moved: Vec<String> = Vec::new();
        let mut used = clause_var_names(c);

        // Non-variable terms in output head positions become fresh
        // variables bound after the cut.
        for &i in &out_positions {
            let a = match head_args.get(i) {
                Some(a) => a,
                None => continue,
            };
            if named_var(a).is_none() && !is_anon(a) {
                let span = a.span().expect("parsed head arg");
                let v = fresh_name("Out", &used);
                used.insert(v.clone());
                moved.push(format!("{v} = {}", slice(text, span)));
                ctx.edits.push(TextEdit::new(span, v));
            }
        }

        // Pre-cut unifications of output variables move after the cut,
        // unless the variable is consumed by another pre-cut goal.
        let mut remove: BTreeSet<usize> = BTreeSet::new();
        let mut candidates: Vec<(usize, String, String)> = Vec::new();
        for (k, g) in conjs[..ci].iter().enumerate() {
            if let Some((v, goal)) = unification_of(g, &out_vars) {
                let gspan = goal.span().expect("parsed goal");
                candidates.push((k, v.to_string(), slice(text, gspan).to_string()));
            }
        }
        for (k, v, t) in candidates {
            let elsewhere = conjs[..ci]
                .iter()
                .enumerate()
                .any(|(j, g)| j != k && !remove.contains(&j) && goal_var_names(g).contains(&v));
            if elsewhere {
                ctx.note(format!(
                    "`{t}` stays before the cut: {v} is used by another pre-cut goal"
                ));
                continue;
            }
            remove.insert(k);
            moved.push(t);
        }

        if moved.is_empty() {
            ctx.block(
                IssueCode::NotOutputBinding,
                Some(c.span),
                "no output binding occurs before the cut",
            );
            return;
        }
        if !remove.is_empty() {
            match remove_conjuncts_edits(&conjs, &remove) {
                Some(edits) => ctx.edits.extend(edits),
                None => {
                    ctx.block(IssueCode::NotSupportedPattern, Some(c.span), "unreadable spans");
                    return;
                }
            }
        }
        let cut_span = conjs[ci].span().expect("parsed cut");
        ctx.edits.push(TextEdit::new(
            SourceSpan::new(cut_span.file, cut_span.end, cut_span.end),
            format!(", {}", moved.join(", ")),
        ));
        return;
    }

    // If-then-else shape: move condition unifications into the then-branch.
    let ite = conjs
        .iter()
        .find(|g| matches!(g, Goal::IfThenElse { .. }));
    let (cond, then) = match ite {
        Some(Goal::IfThenElse { cond, then, .. }) => (cond.as_ref(), then.as_ref()),
        _ => {
            ctx.block(
                IssueCode::NotOutputBinding,
                Some(c.span),
                "clause has neither a cut nor an if-then-else",
            );
            return;
        }
    };
    let cond_conjs = cond.conjuncts();
    let mut remove: BTreeSet<usize> = BTreeSet::new();
    let mut moved: Vec<String> = Vec::new();
    for (k, g) in cond_conjs.iter().enumerate() {
        if let Some((v, goal)) = unification_of(g, &out_vars) {
            let elsewhere = cond_conjs
                .iter()
                .enumerate()
                .any(|(j, other)| j != k && goal_var_names(other).contains(v));
            if elsewhere {
                ctx.note(format!(
                    "condition binding of {v} stays: the variable is used elsewhere in the condition"
                ));
                continue;
            }
            remove.insert(k);
            moved.push(slice(text, goal.span().expect("parsed goal")).to_string());
        }
    }
    if moved.is_empty() {
        ctx.block(
            IssueCode::NotOutputBinding,
            cond.span(),
            "no output-variable unification in the condition",
        );
        return;
    }
    if remove.len() == cond_conjs.len() {
        ctx.edits.push(TextEdit::new(
            cond.span().expect("parsed cond"),
            "true".to_string(),
        ));
    } else {
        match remove_conjuncts_edits(&cond_conjs, &remove) {
            Some(edits) => ctx.edits.extend(edits),
            None => {
                ctx.block(IssueCode::NotSupportedPattern, cond.span(), "unreadable spans");
                return;
            }
        }
    }
    let then_span = then.span().expect("parsed then");
    if matches!(then, Goal::True { .. }) {
        ctx.edits.push(TextEdit::new(then_span, moved.join(", ")));
    } else {
        ctx.edits.push(TextEdit::new(
            SourceSpan::new(then_span.file, then_span.start, then_span.start),
            format!("{}, ", moved.join(", ")),
        ));
    }
}

/// Replaces `V = T` guards (if-then-else conditions or pre-cut goals)
/// by `V == T`, or by `V =:= T` when `numeric` is set, for variables the
/// mode declaration marks as inputs. Intent-restoring: callers accept
/// the semantics change for non-intended modes.
pub(super) fn unification_to_test(ctx: &mut Ctx, pred: &PredId, clause: usize, numeric: bool) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    let modes = match &p.modes {
        Some(m) => m.clone(),
        None => {
            ctx.block(
                IssueCode::NoModeInfo,
                None,
                format!("{pred} has no mode declaration; input arguments are unknown"),
            );
            return;
        }
    };
    let c = match p.clauses.get(clause) {
        Some(c) if !c.is_dcg => c,
        _ => {
            ctx.block(
                IssueCode::TargetMissing,
                None,
                format!("{pred} has no plain clause {clause}"),
            );
            return;
        }
    };

    let head_args = c.head.args();
    let in_vars: BTreeSet<&str> = modes
        .iter()
        .enumerate()
        .filter(|(_, m)| **m == Mode::In)
        .filter_map(|(i, _)| head_args.get(i).and_then(named_var))
        .collect();
    let out_vars: BTreeSet<&str> = modes
        .iter()
        .enumerate()
        .filter(|(_, m)| **m == Mode::Out)
        .filter_map(|(i, _)| head_args.get(i).and_then(named_var))
        .collect();

    let text = ctx.text(c.span.file);
    let conjs = c.body.conjuncts();

    // Guard positions: every top-level if-then-else condition, plus the
    // goals before a top-level cut.
    let mut guard_goals: Vec<&Goal> = Vec::new();
    for g in &conjs {
        if let Goal::IfThenElse { cond, .. } = g {
            guard_goals.extend(cond.conjuncts());
        }
    }
    if let Some(ci) = conjs.iter().position(|g| matches!(g, Goal::Cut { .. })) {
        guard_goals.extend(conjs[..ci].iter().copied());
    }

    let mut rewrote = false;
    let mut saw_output_site = false;
    for g in guard_goals {
        if let Goal::Call {
            term: Term::Compound { functor, args, .. },
            qualifier: None,
            ..
        } = g
        {
            if functor != "=" || args.len() != 2 {
                continue;
            }
            let (var_side, term_side) = if named_var(&args[0]).is_some() {
                (&args[0], &args[1])
            } else if named_var(&args[1]).is_some() {
                (&args[1], &args[0])
            } else {
                continue;
            };
            let vname = named_var(var_side).expect("checked");
            if out_vars.contains(vname) {
                saw_output_site = true;
                continue;
            }
            if !in_vars.contains(vname) {
                continue;
            }
            let eligible = if numeric {
                matches!(term_side, Term::Int { .. } | Term::Float { .. })
            } else {
                term_side.is_atomic()
            };
            if !eligible {
                continue;
            }
            // Replace the `=` operator token between the two argument
            // spans.
            let l = args[0].span().expect("parsed arg");
            let r = args[1].span().expect("parsed arg");
            let between = &text[l.end..r.start];
            let rel = match between.find('=') {
                Some(p) => p,
                None => continue,
            };
            let op_span = SourceSpan::new(l.file, l.end + rel, l.end + rel + 1);
            let new_op = if numeric { "=:=" } else { "==" };
            ctx.edits.push(TextEdit::new(op_span, new_op.to_string()));
            rewrote = true;
        }
    }

    if !rewrote {
        let message = if saw_output_site {
            "the only guard unifications bind output variables"
        } else if numeric {
            "no input-variable unification against a number in a guard position"
        } else {
            "no input-variable unification against an atomic term in a guard position"
        };
        ctx.block(IssueCode::NotInCondition, Some(c.span), message);
    }
}

const FLIP: &[(&str, &str)] = &[
    ("==", "\\=="),
    ("\\==", "=="),
    ("=:=", "=\\="),
    ("=\\=", "=:="),
    ("<", ">="),
    (">=", "<"),
    (">", "=<"),
    ("=<", ">"),
];

/// Swaps the branches of a clause's first if-then-else, negating the
/// condition: comparison tests flip, `\+ C` collapses, anything else is
/// wrapped in `\+` when that cannot lose bindings a branch consumes.
pub(super) fn invert_ite(ctx: &mut Ctx, pred: &PredId, clause: usize) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    let c = match p.clauses.get(clause) {
        Some(c) if !c.is_dcg => c,
        _ => {
            ctx.block(
                IssueCode::TargetMissing,
                None,
                format!("{pred} has no plain clause {clause}"),
            );
            return;
        }
    };
    let conjs = c.body.conjuncts();
    let ite = conjs
        .iter()
        .find(|g| matches!(g, Goal::IfThenElse { .. }));
    let (cond, then, els) = match ite {
        Some(Goal::IfThenElse { cond, then, els, .. }) => {
            (cond.as_ref(), then.as_ref(), els.as_ref())
        }
        _ => {
            ctx.block(
                IssueCode::TargetMissing,
                Some(c.span),
                format!("clause {clause} of {pred} has no if-then-else"),
            );
            return;
        }
    };

    let text = ctx.text(c.span.file);
    let ops = &ctx.program.file(c.span.file).ops;

    // Variables the mode declaration guarantees bound at entry.
    let head_args = c.head.args();
    let in_vars: BTreeSet<String> = p
        .modes
        .iter()
        .flatten()
        .enumerate()
        .filter(|(_, m)| **m == Mode::In)
        .filter_map(|(i, _)| head_args.get(i).and_then(named_var))
        .map(str::to_string)
        .collect();

    enum Negation {
        FlipOp(SourceSpan, String),
        ReplaceCond(String),
    }

    let cond_conjs = cond.conjuncts();
    let negation = if cond_conjs.len() == 1 {
        match cond_conjs[0] {
            Goal::Call {
                term: Term::Compound { functor, args, .. },
                qualifier: None,
                ..
            } if args.len() == 2 && FLIP.iter().any(|(a, _)| a == functor) => {
                let flipped = FLIP
                    .iter()
                    .find(|(a, _)| a == functor)
                    .map(|(_, b)| *b)
                    .expect("checked");
                let l = args[0].span().expect("parsed arg");
                let r = args[1].span().expect("parsed arg");
                let between = &text[l.end..r.start];
                match between.find(functor.as_str()) {
                    Some(rel) => Some(Negation::FlipOp(
                        SourceSpan::new(l.file, l.end + rel, l.end + rel + functor.len()),
                        flipped.to_string(),
                    )),
                    None => None,
                }
            }
            Goal::Neg { goal, .. } => {
                // `\+ C` inverts to C; the old else-branch (which becomes
                // the then-branch) must not consume bindings C makes.
                let bound: BTreeSet<String> = goal_var_names(goal)
                    .difference(&in_vars)
                    .cloned()
                    .collect();
                let consumed: Vec<&String> =
                    bound.iter().filter(|v| goal_var_names(els).contains(*v)).collect();
                if consumed.is_empty() {
                    Some(Negation::ReplaceCond(goal_text_for_conj(text, ops, goal)))
                } else {
                    ctx.block(
                        IssueCode::NotInvertible,
                        cond.span(),
                        format!(
                            "inverting would expose bindings of {} to the new then-branch",
                            consumed
                                .iter()
                                .map(|s| s.as_str())
                                .collect::<Vec<_>>()
                                .join(", ")
                        ),
                    );
                    return;
                }
            }
            _ => None,
        }
    } else {
        None
    };

    let negation = match negation {
        Some(n) => n,
        None => {
            // General case: wrap in `\+`; the old then-branch (new else)
            // loses the condition's bindings, so it must not use them.
            let bound: BTreeSet<String> = goal_var_names(cond)
                .difference(&in_vars)
                .cloned()
                .collect();
            let consumed: Vec<&String> = bound
                .iter()
                .filter(|v| goal_var_names(then).contains(*v))
                .collect();
            if !consumed.is_empty() {
                ctx.block(
                    IssueCode::NotInvertible,
                    cond.span(),
                    format!(
                        "condition binds {} which the then-branch consumes",
                        consumed
                            .iter()
                            .map(|s| s.as_str())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                );
                return;
            }
            let cspan = cond.span().expect("parsed cond");
            let inner = slice(text, cspan);
            let simple_call = matches!(
                cond,
                Goal::Call { term, qualifier: None, .. }
                    if term.indicator().is_some_and(|(n, a)| a == 0 || ops.term_priority(n, a) < 900)
            );
            let negated = if simple_call {
                format!("\\+ {inner}")
            } else {
                format!("\\+ ({inner})")
            };
            Negation::ReplaceCond(negated)
        }
    };

    match negation {
        Negation::FlipOp(span, new_op) => ctx.edits.push(TextEdit::new(span, new_op)),
        Negation::ReplaceCond(new_cond) => ctx
            .edits
            .push(TextEdit::new(cond.span().expect("parsed cond"), new_cond)),
    }
    let then_span = then.span().expect("parsed then");
    let els_span = els.span().expect("parsed else");
    ctx.edits
        .push(TextEdit::new(then_span, goal_text_for_conj(text, ops, els)));
    ctx.edits
        .push(TextEdit::new(els_span, goal_text_for_conj(text, ops, then)));
}

/// A validated extraction occurrence.
struct Occ {
    pred: PredId,
    span: SourceSpan,
    params: Vec<String>,
    /// Canonical variable number of each parameter within the window;
    /// equal across occurrences iff the parameter positions correspond.
    param_keys: Vec<u32>,
}

fn window_param_keys(window: &[&Goal], params: &[String]) -> Vec<u32> {
    let mut numbering: BTreeMap<VarId, u32> = BTreeMap::new();
    let mut by_name: BTreeMap<String, u32> = BTreeMap::new();
    for g in window {
        for (name, id) in g.var_occurrences() {
            let next = numbering.len() as u32;
            let n = *numbering.entry(id).or_insert(next);
            by_name.entry(name.to_string()).or_insert(n);
        }
    }
    params
        .iter()
        .map(|p| by_name.get(p).copied().unwrap_or(u32::MAX))
        .collect()
}

fn occ_from_seq(ctx: &Ctx, occ: &SeqOccurrence, len: usize) -> Result<Occ, String> {
    let p = ctx
        .program
        .pred(&occ.pred)
        .ok_or_else(|| format!("{} is not defined", occ.pred))?;
    let c = p
        .clauses
        .get(occ.clause_idx)
        .ok_or_else(|| format!("{} has no clause {}", occ.pred, occ.clause_idx))?;
    let contexts = clause_contexts(&c.body);
    let goals = contexts
        .get(occ.context)
        .ok_or_else(|| "stale occurrence: context vanished".to_string())?;
    if occ.start + len > goals.len() {
        return Err("stale occurrence: window out of range".to_string());
    }
    let window = &goals[occ.start..occ.start + len];
    let span = window
        .iter()
        .filter_map(|g| g.span())
        .reduce(|a, b| a.cover(b))
        .ok_or_else(|| "window has no source span".to_string())?;
    if span != occ.span {
        return Err("stale occurrence: source moved".to_string());
    }
    Ok(Occ {
        pred: occ.pred.clone(),
        span,
        params: occ.shared_vars.clone(),
        param_keys: window_param_keys(window, &occ.shared_vars),
    })
}

/// Extracts a goal window (every occurrence of a repeated sequence, or
/// one user-chosen span) into a new predicate, replacing each window
/// with a call that passes the shared variables.
pub(super) fn extract_predicate(
    ctx: &mut Ctx,
    target: &ExtractTarget,
    name: &str,
    module: &str,
) {
    let mut occs: Vec<Occ> = Vec::new();
    let mut window_texts: Vec<String> = Vec::new();
    let window_len;

    match target {
        ExtractTarget::Sequence(seq) => {
            window_len = seq.len;
            if seq.occurrences.is_empty() {
                ctx.block(IssueCode::TargetMissing, None, "sequence has no occurrences");
                return;
            }
            for occ in &seq.occurrences {
                // Re-derive the occurrence so a stale request cannot
                // edit moved text.
                let p = match ctx.program.pred(&occ.pred) {
                    Some(p) => p,
                    None => {
                        ctx.block(
                            IssueCode::TargetMissing,
                            None,
                            format!("{} is not defined", occ.pred),
                        );
                        return;
                    }
                };
                let fresh = p.clauses.get(occ.clause_idx).and_then(|c| {
                    window_occurrence(&occ.pred, occ.clause_idx, c, occ.context, occ.start, seq.len)
                });
                match fresh {
                    Some(f) if f.span == occ.span && f.shared_vars == occ.shared_vars => {
                        let c = &p.clauses[occ.clause_idx];
                        let contexts = clause_contexts(&c.body);
                        let window = &contexts[occ.context][occ.start..occ.start + seq.len];
                        if canon_window(window) != seq.canonical {
                            ctx.block(
                                IssueCode::TargetMissing,
                                Some(occ.span),
                                "stale occurrence: window no longer matches the sequence",
                            );
                            return;
                        }
                        match occ_from_seq(ctx, occ, seq.len) {
                            Ok(o) => occs.push(o),
                            Err(m) => {
                                ctx.block(IssueCode::TargetMissing, Some(occ.span), m);
                                return;
                            }
                        }
                    }
                    _ => {
                        ctx.block(
                            IssueCode::TargetMissing,
                            Some(occ.span),
                            "stale occurrence: program changed since detection",
                        );
                        return;
                    }
                }
            }
        }
        ExtractTarget::Span {
            pred,
            clause,
            context,
            start,
            len,
        } => {
            window_len = *len;
            if *len == 0 {
                ctx.block(IssueCode::NotContiguous, None, "empty selection");
                return;
            }
            let p = match ctx.program.pred(pred) {
                Some(p) => p,
                None => {
                    ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
                    return;
                }
            };
            let c = match p.clauses.get(*clause) {
                Some(c) if !c.is_dcg => c,
                _ => {
                    ctx.block(
                        IssueCode::TargetMissing,
                        None,
                        format!("{pred} has no plain clause {clause}"),
                    );
                    return;
                }
            };
            match window_occurrence(pred, *clause, c, *context, *start, *len) {
                Some(occ) => match occ_from_seq(ctx, &occ, *len) {
                    Ok(o) => occs.push(o),
                    Err(m) => {
                        ctx.block(IssueCode::TargetMissing, Some(occ.span), m);
                        return;
                    }
                },
                None => {
                    ctx.block(
                        IssueCode::NotContiguous,
                        None,
                        "selection is not a goal window of that clause",
                    );
                    return;
                }
            }
        }
    }

    // Parameter positions must correspond across occurrences.
    let arity = occs[0].params.len();
    for o in &occs[1..] {
        if o.params.len() != arity || o.param_keys != occs[0].param_keys {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(o.span),
                "occurrences disagree on shared-variable positions; extract them separately",
            );
            return;
        }
    }

    // Mode refinement: order parameters inputs-first when every
    // occurrence agrees on the ranking.
    let rank_of = |o: &Occ| -> Vec<u8> {
        let p = ctx.program.pred(&o.pred).expect("validated");
        let modes = p.modes.as_deref();
        let head_args = p
            .clauses
            .first()
            .map(|c| c.head.args())
            .unwrap_or_default();
        o.params
            .iter()
            .map(|name| {
                if let Some(modes) = modes {
                    for (i, m) in modes.iter().enumerate() {
                        if head_args.get(i).and_then(named_var) == Some(name.as_str()) {
                            return match m {
                                Mode::In => 0,
                                Mode::Any => 1,
                                Mode::Out => 2,
                            };
                        }
                    }
                }
                1
            })
            .collect()
    };
    let ranks = rank_of(&occs[0]);
    if occs.iter().all(|o| rank_of(o) == ranks) && ranks.iter().any(|&r| r != ranks[0]) {
        let mut order: Vec<usize> = (0..arity).collect();
        order.sort_by_key(|&i| (ranks[i], i));
        for o in &mut occs {
            o.params = order.iter().map(|&i| o.params[i].clone()).collect();
        }
        ctx.note("parameters ordered inputs before outputs per mode declarations".to_string());
    }

    if visible(ctx.program, module, name, arity) {
        ctx.block(
            IssueCode::NameClash,
            None,
            format!("{name}/{arity} is already visible in module {module}"),
        );
        return;
    }
    if ctx.blocked() {
        return;
    }

    // Window body text from the first occurrence.
    {
        let o = &occs[0];
        let p = ctx.program.pred(&o.pred).expect("validated");
        let file = o.span.file;
        let text = ctx.text(file);
        let ops = &ctx.program.file(file).ops;
        // Re-derive the window goals for rendering.
        let (clause_idx, context, start) = locate_window(p, o.span, window_len)
            .expect("validated occurrence still present");
        let c = &p.clauses[clause_idx];
        let contexts = clause_contexts(&c.body);
        let window = &contexts[context][start..start + window_len];
        for g in window {
            window_texts.push(goal_text_for_conj(text, ops, g));
        }
    }

    let call_text = |params: &[String]| -> String {
        if params.is_empty() {
            quote_atom(name)
        } else {
            format!("{}({})", quote_atom(name), params.join(", "))
        }
    };

    // Replace every occurrence with the call.
    for o in &occs {
        ctx.edits.push(TextEdit::new(o.span, call_text(&o.params)));
    }

    // Define the new predicate.
    let head = call_text(&occs[0].params);
    let body = window_texts.join(",\n    ");
    let clause_text = format!("{head} :-\n    {body}.\n");
    let pi = format!("{}/{arity}", quote_atom(name));

    let target_file = module_file(ctx.program, module);
    match target_file {
        Some(f) => {
            let (at, lead) = eof_insertion(&f.text);
            ctx.edits.push(TextEdit::new(
                SourceSpan::new(f.file, at, at),
                format!("{lead}\n{clause_text}"),
            ));
        }
        None => {
            // Fresh module: create its file next to the first occurrence.
            let occ_path = ctx.program.path(occs[0].span.file);
            let dir = match occ_path.rfind('/') {
                Some(i) => &occ_path[..=i],
                None => "",
            };
            let path = format!("{dir}{module}.pl");
            let content = format!(":- module({}, [{pi}]).\n\n{clause_text}", quote_atom(module));
            ctx.creates.insert(path, content);
        }
    }

    // Cross-module visibility: export from the target, import where used.
    let occ_modules: BTreeSet<String> = occs
        .iter()
        .map(|o| o.pred.module.clone())
        .filter(|m| m != module)
        .collect();
    if !occ_modules.is_empty() && target_file.is_some() {
        if let Some((_, _, list)) = module_directive(ctx.program, module) {
            if let Some(edit) = list_append_edit(list, &[pi.clone()]) {
                ctx.edits.push(edit);
            }
        }
    }
    for m in &occ_modules {
        let f = match module_file(ctx.program, m) {
            Some(f) => f,
            None => continue,
        };
        let existing = use_module_directives(f, module);
        if existing.is_empty() {
            let at = directive_insertion_point(f);
            ctx.edits.push(TextEdit::new(
                SourceSpan::new(f.file, at, at),
                format!(":- use_module({}, [{pi}]).\n", quote_atom(module)),
            ));
        } else if let Some((_, Some(list))) = existing.first() {
            if let Some(edit) = list_append_edit(list, &[pi.clone()]) {
                ctx.edits.push(edit);
            }
        }
        // A blanket `use_module(module)` already imports everything.
    }

    // Callees of the extracted body must stay resolvable from the new
    // location.
    if !occ_modules.is_empty() || target_file.is_none() {
        let src_module = &occs[0].pred.module;
        if src_module != module {
            let mut needed: BTreeSet<(String, String, usize)> = BTreeSet::new();
            let o = &occs[0];
            let p = ctx.program.pred(&o.pred).expect("validated");
            let (clause_idx, context, start) =
                locate_window(p, o.span, window_len).expect("validated");
            let c = &p.clauses[clause_idx];
            let contexts = clause_contexts(&c.body);
            for g in &contexts[context][start..start + window_len] {
                g.walk(&mut |sub| {
                    if let Goal::Call { term, qualifier, .. } = sub {
                        if let Some((n, a)) = term.indicator() {
                            if let Resolution::Pred(pid) = ctx.program.resolve_qualified(
                                src_module,
                                qualifier.as_deref(),
                                n,
                                a,
                            ) {
                                if &pid.module != module && qualifier.is_none() {
                                    needed.insert((pid.module.clone(), n.to_string(), a));
                                }
                            }
                        }
                    }
                });
            }
            for (from, n, a) in needed {
                if visible(ctx.program, module, &n, a) {
                    continue;
                }
                let body_pi = format!("{}/{a}", quote_atom(&n));
                match target_file {
                    Some(f) => {
                        let at = directive_insertion_point(f);
                        ctx.edits.push(TextEdit::new(
                            SourceSpan::new(f.file, at, at),
                            format!(":- use_module({}, [{body_pi}]).\n", quote_atom(&from)),
                        ));
                    }
                    None => {
                        ctx.note(format!(
                            "new module {module} must import {body_pi} from {from}"
                        ));
                    }
                }
                // Ensure the callee is exported by its home module.
                if let Some(mi) = ctx.program.modules.get(&from) {
                    if !mi.exports.iter().any(|(en, ea)| en == &n && *ea == a) {
                        if let Some((_, _, list)) = module_directive(ctx.program, &from) {
                            if let Some(edit) = list_append_edit(list, &[body_pi.clone()]) {
                                ctx.edits.push(edit);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Finds the (clause, context, start) of a window by its covering span.
fn locate_window(
    p: &crate::model::Pred,
    span: SourceSpan,
    len: usize,
) -> Option<(usize, usize, usize)> {
    for (ci, c) in p.clauses.iter().enumerate() {
        if c.span.file != span.file || c.span.start > span.start || c.span.end < span.end {
            continue;
        }
        let contexts = clause_contexts(&c.body);
        for (xi, goals) in contexts.iter().enumerate() {
            if goals.len() < len {
                continue;
            }
            for start in 0..=goals.len() - len {
                let window = &goals[start..start + len];
                let wspan = window
                    .iter()
                    .filter_map(|g| g.span())
                    .reduce(|a, b| a.cover(b));
                if wspan == Some(span) {
                    return Some((ci, xi, start));
                }
            }
        }
    }
    None
}
