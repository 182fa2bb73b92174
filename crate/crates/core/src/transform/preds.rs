//! Signature-level rewrites: argument threading, reordering,
//! specialization, and erasure of provably unused argument positions.

use std::collections::{BTreeMap, BTreeSet};

use super::util::{
    call_sites_of, clause_var_names, dcg_mentions_name, fresh_name, functor_span, insert_arg_edit,
    insertion_point_after, meta_mentions, mode_directive_term, permute_args_edits, pi_arity_edits,
    rebuild_args, remove_arg_edit, term_text, visible,
};
use super::{Ctx, IssueCode};
use crate::edit::{apply_to_text, TextEdit};
use crate::model::{CallGraph, PredId};
use crate::span::SourceSpan;
use crate::syntax::ast::{Goal, Term};
use crate::syntax::printer::quote_atom;

/// Applies a 1-based permutation to every head, call site, and mode
/// declaration of a predicate. The argument at new position k+1 is the
/// old argument `permutation[k]`.
pub(super) fn reorder_arguments(ctx: &mut Ctx, pred: &PredId, permutation: &[usize]) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    let mut sorted = permutation.to_vec();
    sorted.sort_unstable();
    if sorted != (1..=pred.arity).collect::<Vec<_>>() {
        ctx.block(
            IssueCode::BadParameter,
            None,
            format!(
                "permutation {permutation:?} is not a bijection on 1..{}",
                pred.arity
            ),
        );
        return;
    }
    if let Some(c) = p.clauses.iter().find(|c| c.is_dcg) {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(c.span),
            "grammar rules hide two argument positions; reorder is unsupported",
        );
        return;
    }
    if let Some(span) = dcg_mentions_name(ctx.program, &pred.name) {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(span),
            "a grammar rule mentions this name; call sites there are invisible",
        );
        return;
    }
    for span in meta_mentions(ctx.program, pred) {
        ctx.block(
            IssueCode::MetaCallBlocker,
            Some(span),
            format!("{pred} is passed as a goal; its argument shape cannot change safely"),
        );
    }
    if ctx.blocked() {
        return;
    }
    if permutation.iter().enumerate().all(|(k, &v)| v == k + 1) {
        ctx.note("identity permutation; nothing to change".to_string());
        return;
    }

    for c in &p.clauses {
        let text = ctx.text(c.span.file);
        let edits = functor_span(text, &c.head)
            .and_then(|_| permute_args_edits(text, &c.head, permutation));
        match edits {
            Some(edits) => ctx.edits.extend(edits),
            None => {
                ctx.block(
                    IssueCode::NotSupportedPattern,
                    Some(c.span),
                    "clause head is not written in functional notation",
                );
                return;
            }
        }
    }
    for occ in call_sites_of(ctx.program, pred) {
        let text = ctx.text(occ.file);
        let edits = functor_span(text, occ.term)
            .and_then(|_| permute_args_edits(text, occ.term, permutation));
        match edits {
            Some(edits) => ctx.edits.extend(edits),
            None => {
                ctx.block(
                    IssueCode::NotSupportedPattern,
                    Some(occ.goal_span),
                    "call site is not written in functional notation",
                );
                return;
            }
        }
    }
    permute_modes(ctx, pred, permutation);
}

fn permute_modes(ctx: &mut Ctx, pred: &PredId, permutation: &[usize]) {
    let p = ctx.program.pred(pred).expect("checked");
    match p.mode_directive {
        Some(span) => {
            if let Some(term) = mode_directive_term(ctx.program, span) {
                let text = ctx.text(span.file);
                if let Some(edits) = permute_args_edits(text, term, permutation) {
                    ctx.edits.extend(edits);
                }
            }
        }
        None if p.modes.is_some() => {
            ctx.note(format!(
                "modes of {pred} come from the sidecar declarations file; permute them there"
            ));
        }
        None => {}
    }
}

/// Threads a variable from `caller`'s bodies to `callee`, widening every
/// predicate on a caller-to-callee path by one argument. Call sites
/// outside those paths pass a fresh anonymous variable.
pub(super) fn add_argument(
    ctx: &mut Ctx,
    caller: &PredId,
    var: &str,
    callee: &PredId,
    position: Option<usize>,
) {
    for (pid, role) in [(caller, "caller"), (callee, "callee")] {
        if ctx.program.pred(pid).is_none() {
            ctx.block(
                IssueCode::TargetMissing,
                None,
                format!("{role} {pid} is not defined"),
            );
        }
    }
    if ctx.blocked() {
        return;
    }
    let caller_pred = ctx.program.pred(caller).expect("checked");
    if !caller_pred
        .clauses
        .iter()
        .any(|c| clause_var_names(c).contains(var))
    {
        ctx.block(
            IssueCode::BadParameter,
            None,
            format!("variable {var} does not occur in any clause of {caller}"),
        );
        return;
    }

    let graph = CallGraph::build(ctx.program);
    let reach = |edges: &BTreeMap<PredId, BTreeSet<PredId>>, from: &PredId| -> BTreeSet<PredId> {
        let mut seen: BTreeSet<PredId> = BTreeSet::new();
        let mut queue: Vec<PredId> = vec![from.clone()];
        while let Some(p) = queue.pop() {
            if let Some(next) = edges.get(&p) {
                for n in next {
                    if seen.insert(n.clone()) {
                        queue.push(n.clone());
                    }
                }
            }
        }
        seen
    };
    let fwd = reach(&graph.out, caller);
    let mut bwd = reach(&graph.into, callee);
    bwd.insert(callee.clone());
    let widened: BTreeSet<PredId> = fwd
        .intersection(&bwd)
        .filter(|p| *p != caller)
        .cloned()
        .collect();
    if !widened.contains(callee) {
        ctx.block(
            IssueCode::Unreachable,
            None,
            format!("{callee} is not reachable from {caller} in the call graph"),
        );
        return;
    }

    // A path pred handed around as a goal would be called at its old
    // arity somewhere we cannot see.
    for p in widened.iter() {
        for span in meta_mentions(ctx.program, p) {
            ctx.block(
                IssueCode::MetaCallBlocker,
                Some(span),
                format!("{p} is on the threading path but is passed as a goal"),
            );
        }
        if let Some(span) = dcg_mentions_name(ctx.program, &p.name) {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(span),
                format!("a grammar rule mentions {}; call sites there are invisible", p.name),
            );
        }
    }
    for site in &graph.meta {
        if site.caller == *caller || widened.contains(&site.caller) {
            ctx.block(
                IssueCode::MetaCallBlocker,
                Some(site.span),
                format!("meta-call in {}: {}", site.caller, site.reason),
            );
        }
    }
    if ctx.blocked() {
        return;
    }

    let pos_for = |arity: usize| -> usize {
        match position {
            Some(k) => k,
            None => arity + 1,
        }
    };
    if let Some(k) = position {
        for p in widened.iter() {
            if k == 0 || k > p.arity + 1 {
                ctx.block(
                    IssueCode::BadParameter,
                    None,
                    format!("position {k} is out of range for {p}"),
                );
            }
        }
        if ctx.blocked() {
            return;
        }
    }

    // Heads of widened predicates gain a per-clause thread variable;
    // their body calls into the widened set pass it along.
    for pid in widened.iter() {
        let p = ctx.program.pred(pid).expect("in graph");
        if p.clauses.iter().any(|c| c.is_dcg) {
            ctx.block(
                IssueCode::NotSupportedPattern,
                None,
                format!("{pid} has grammar rules"),
            );
            return;
        }
        for c in &p.clauses {
            let text = ctx.text(c.span.file);
            let used = clause_var_names(c);
            let thread = fresh_name(var, &used);
            match insert_arg_edit(text, &c.head, pos_for(pid.arity), &thread) {
                Some(e) => ctx.edits.push(e),
                None => {
                    ctx.block(
                        IssueCode::NotSupportedPattern,
                        Some(c.span),
                        "clause head is not written in functional notation",
                    );
                    return;
                }
            }
            let mut ok = true;
            thread_body_calls(ctx, &c.body, pid, &widened, &thread, &pos_for, &mut ok);
            if !ok {
                return;
            }
        }
    }

    // The caller's clauses pass the chosen variable itself.
    for c in &caller_pred.clauses {
        if c.is_dcg {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(c.span),
                format!("{caller} has grammar rules"),
            );
            return;
        }
        if !clause_var_names(c).contains(var) {
            let mut calls_widened = false;
            c.body.walk(&mut |g| {
                if let Goal::Call { term, qualifier, .. } = g {
                    if let Some((n, a)) = term.indicator() {
                        if let crate::model::Resolution::Pred(pid) = ctx.program.resolve_qualified(
                            &caller.module,
                            qualifier.as_deref(),
                            n,
                            a,
                        ) {
                            calls_widened |= widened.contains(&pid);
                        }
                    }
                }
            });
            if calls_widened {
                ctx.note(format!(
                    "a clause of {caller} does not mention {var}; it passes a new singleton"
                ));
            }
        }
        let mut ok = true;
        thread_body_calls(ctx, &c.body, caller, &widened, var, &pos_for, &mut ok);
        if !ok {
            return;
        }
    }

    // Call sites in predicates outside the path set keep their meaning
    // by passing an anonymous variable.
    let outside: BTreeSet<PredId> = widened
        .iter()
        .flat_map(|p| call_sites_of(ctx.program, p))
        .map(|occ| occ.caller)
        .filter(|c| c != caller && !widened.contains(c))
        .collect();
    for pid in &outside {
        let p = ctx.program.pred(pid).expect("site caller");
        for c in &p.clauses {
            let mut ok = true;
            thread_body_calls(ctx, &c.body, pid, &widened, "_", &pos_for, &mut ok);
            if !ok {
                return;
            }
        }
        ctx.note(format!(
            "{pid} calls into the widened set from outside the path; its calls pass `_`"
        ));
    }

    // Visibility lists and mode declarations follow the arity change.
    for pid in widened.iter() {
        arity_bump_edits(ctx, pid, pid.arity, pid.arity + 1);
        let p = ctx.program.pred(pid).expect("checked");
        if let Some(span) = p.mode_directive {
            if let Some(term) = mode_directive_term(ctx.program, span) {
                let text = ctx.text(span.file);
                if let Some(e) = insert_arg_edit(text, term, pos_for(pid.arity), "?") {
                    ctx.edits.push(e);
                }
            }
        } else if p.modes.is_some() {
            ctx.note(format!(
                "modes of {pid} come from the sidecar declarations file; widen them there"
            ));
        }
    }
}

/// Inserts `thread` into every body call that resolves into `widened`.
fn thread_body_calls(
    ctx: &mut Ctx,
    body: &Goal,
    home: &PredId,
    widened: &BTreeSet<PredId>,
    thread: &str,
    pos_for: &dyn Fn(usize) -> usize,
    ok: &mut bool,
) {
    let mut pending: Vec<(Option<SourceSpan>, TextEdit)> = Vec::new();
    let mut failed: Option<Option<SourceSpan>> = None;
    body.walk(&mut |g| {
        if failed.is_some() {
            return;
        }
        if let Goal::Call {
            term,
            qualifier,
            span,
        } = g
        {
            if let Some((n, a)) = term.indicator() {
                if let crate::model::Resolution::Pred(pid) =
                    ctx.program
                        .resolve_qualified(&home.module, qualifier.as_deref(), n, a)
                {
                    if widened.contains(&pid) {
                        let text = ctx.text(span.or_else(|| term.span()).expect("parsed").file);
                        match insert_arg_edit(text, term, pos_for(pid.arity), thread) {
                            Some(e) => pending.push((*span, e)),
                            None => failed = Some(*span),
                        }
                    }
                }
            }
        }
    });
    if let Some(span) = failed {
        ctx.block(
            IssueCode::NotSupportedPattern,
            span,
            "call site is not written in functional notation",
        );
        *ok = false;
        return;
    }
    ctx.edits.extend(pending.into_iter().map(|(_, e)| e));
}

/// Rewrites export/import indicator arities for a predicate.
fn arity_bump_edits(ctx: &mut Ctx, pid: &PredId, old: usize, new: usize) {
    if let Some(mi) = ctx.program.modules.get(&pid.module) {
        if mi.exports.iter().any(|(n, a)| n == &pid.name && *a == old) {
            if let Some((_, _, list)) = super::util::module_directive(ctx.program, &pid.module) {
                ctx.edits.extend(pi_arity_edits(list, &pid.name, old, new));
            }
        }
    }
    for f in &ctx.program.files {
        for (d, list) in super::util::use_module_directives(f, &pid.module) {
            let _ = d;
            if let Some(list) = list {
                ctx.edits.extend(pi_arity_edits(list, &pid.name, old, new));
            }
        }
    }
}

/// A parsed atomic specialization value.
enum SpecValue {
    Int(i64),
    Float(f64),
    Atom(String),
}

impl SpecValue {
    fn parse(s: &str) -> Option<SpecValue> {
        let t = s.trim();
        if t.is_empty() {
            return None;
        }
        if let Ok(i) = t.parse::<i64>() {
            return Some(SpecValue::Int(i));
        }
        if let Ok(f) = t.parse::<f64>() {
            if t.contains('.') || t.contains('e') || t.contains('E') {
                return Some(SpecValue::Float(f));
            }
        }
        // A quoted atom parses to its unescaped name.
        if t.len() >= 2 && t.starts_with('\'') && t.ends_with('\'') {
            return Some(SpecValue::Atom(t[1..t.len() - 1].replace("''", "'")));
        }
        // Anything else is treated as an atom name; rendering re-quotes.
        if t.starts_with(|c: char| c.is_ascii_uppercase() || c == '_') {
            return None;
        }
        Some(SpecValue::Atom(t.to_string()))
    }

    fn matches(&self, term: &Term) -> bool {
        match (self, term) {
            (SpecValue::Int(v), Term::Int { value, .. }) => v == value,
            (SpecValue::Float(v), Term::Float { value, .. }) => v == value,
            (SpecValue::Atom(v), Term::Atom { text, .. }) => v == text,
            _ => false,
        }
    }

    fn render(&self) -> String {
        match self {
            SpecValue::Int(v) => v.to_string(),
            SpecValue::Float(v) => {
                let s = v.to_string();
                if s.contains('.') || s.contains('e') {
                    s
                } else {
                    format!("{s}.0")
                }
            }
            SpecValue::Atom(a) => quote_atom(a),
        }
    }
}

/// Creates a copy of a predicate with one argument fixed to an atomic
/// value: clauses whose head cannot unify with the value are dropped,
/// the argument is deleted, and call sites passing the literal value
/// switch to the new predicate. The original stays.
pub(super) fn specialize_predicate(
    ctx: &mut Ctx,
    pred: &PredId,
    position: usize,
    value: &str,
    new_name: &str,
) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    if position == 0 || position > pred.arity {
        ctx.block(
            IssueCode::BadParameter,
            None,
            format!("position {position} is out of range for {pred}"),
        );
        return;
    }
    let value = match SpecValue::parse(value) {
        Some(v) => v,
        None => {
            ctx.block(
                IssueCode::BadParameter,
                None,
                format!("`{value}` is not an atomic (atom or number) value"),
            );
            return;
        }
    };
    if let Some(c) = p.clauses.iter().find(|c| c.is_dcg) {
        ctx.block(IssueCode::NotSupportedPattern, Some(c.span), "grammar rules");
        return;
    }
    let new_arity = pred.arity - 1;
    if visible(ctx.program, &pred.module, new_name, new_arity) {
        ctx.block(
            IssueCode::NameClash,
            None,
            format!(
                "{new_name}/{new_arity} is already visible in module {}",
                pred.module
            ),
        );
        return;
    }

    // Build each specialized clause from the original's source text.
    let mut new_clauses: Vec<String> = Vec::new();
    for c in &p.clauses {
        let text = ctx.text(c.span.file);
        let arg = &c.head.args()[position - 1];
        let keep = match arg {
            Term::Var { .. } => true,
            _ => value.matches(arg),
        };
        if !keep {
            continue;
        }
        let base = c.span.start;
        let mut local: Vec<TextEdit> = Vec::new();
        let rebase = |s: SourceSpan| SourceSpan::new(s.file, s.start - base, s.end - base);
        if functor_span(text, &c.head).is_none() {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(c.span),
                "clause head is not written in functional notation",
            );
            return;
        }
        if new_arity == 0 {
            // Single edit: the whole head collapses to the bare atom.
            local.push(TextEdit::new(
                rebase(c.head.span().expect("parsed")),
                quote_atom(new_name),
            ));
        } else {
            let fs = functor_span(text, &c.head).expect("checked");
            local.push(TextEdit::new(rebase(fs), quote_atom(new_name)));
            match remove_arg_edit(&c.head, position, &quote_atom(new_name)) {
                Some(e) => local.push(TextEdit::new(rebase(e.span), e.replacement.clone())),
                None => {
                    ctx.block(
                        IssueCode::NotSupportedPattern,
                        Some(c.span),
                        "head argument region cannot be rewritten",
                    );
                    return;
                }
            }
        }
        if let Term::Var { name, id, .. } = arg {
            if name != "_" {
                // The head variable disappears with its argument; its other
                // occurrences become the literal value.
                let arg_span = arg.span().expect("parsed");
                for (vname, vid, vspan) in clause_var_sites(c) {
                    let covered = vspan.start >= arg_span.start && vspan.end <= arg_span.end;
                    let in_head_collapse = new_arity == 0;
                    if vname == *name && vid == *id && !covered && !in_head_collapse {
                        local.push(TextEdit::new(rebase(vspan), value.render()));
                    } else if vname == *name && vid == *id && !covered && in_head_collapse {
                        // Head collapsed to an atom; only body occurrences
                        // remain to substitute.
                        let head_span = c.head.span().expect("parsed");
                        if vspan.start >= head_span.end {
                            local.push(TextEdit::new(rebase(vspan), value.render()));
                        }
                    }
                }
            }
        }
        local.sort_by_key(|e| (e.span.start, e.span.end));
        if local.windows(2).any(|w| w[0].span.end > w[1].span.start) {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(c.span),
                "clause rewrite produced overlapping edits",
            );
            return;
        }
        new_clauses.push(apply_to_text(&c.raw, &local));
    }

    if new_clauses.is_empty() {
        // Warning, not a blocker: the plan is a deliberate no-op. Writing
        // an empty predicate is impossible and making call sites call an
        // undefined predicate would turn failure into an error.
        ctx.block(
            IssueCode::NoClauseMatches,
            None,
            format!(
                "no clause of {pred} matches {} at position {position}; nothing specialized",
                value.render()
            ),
        );
        return;
    }

    let last = p.clauses.last().expect("nonempty");
    let text = ctx.text(last.span.file);
    let at = insertion_point_after(text, last.span);
    ctx.edits.push(TextEdit::new(
        SourceSpan::new(last.span.file, at, at),
        format!("\n{}\n", new_clauses.join("\n")),
    ));

    // Call sites passing the literal value switch over.
    for occ in call_sites_of(ctx.program, pred) {
        let site_text = ctx.text(occ.file);
        let args = occ.term.args();
        let arg = match args.get(position - 1) {
            Some(a) => a,
            None => continue,
        };
        if !value.matches(arg) {
            continue;
        }
        let fs = match functor_span(site_text, occ.term) {
            Some(fs) => fs,
            None => continue,
        };
        if new_arity == 0 {
            ctx.edits.push(TextEdit::new(
                occ.term.span().expect("parsed"),
                quote_atom(new_name),
            ));
        } else {
            ctx.edits.push(TextEdit::new(fs, quote_atom(new_name)));
            if let Some(e) = remove_arg_edit(occ.term, position, &quote_atom(new_name)) {
                ctx.edits.push(e);
            }
        }
    }

    if ctx
        .program
        .modules
        .get(&pred.module)
        .is_some_and(|m| m.exports.iter().any(|(n, a)| n == &pred.name && *a == pred.arity))
    {
        ctx.note(format!(
            "{pred} is exported; the specialized {new_name}/{new_arity} stays module-local"
        ));
    }
}

/// Variable occurrence sites of a clause: name, id, span.
fn clause_var_sites(c: &crate::syntax::ast::ClauseSrc) -> Vec<(String, crate::syntax::ast::VarId, SourceSpan)> {
    let mut out = Vec::new();
    let mut push = |t: &Term| {
        if let Term::Var { name, id, span } = t {
            if let Some(s) = span {
                out.push((name.clone(), *id, *s));
            }
        }
    };
    c.head.walk(&mut push);
    c.body.walk(&mut |g| {
        if let Goal::Call { term, .. } = g {
            term.walk(&mut push);
        }
    });
    out
}

/// Deletes argument positions proven erasable by the fixpoint analysis
/// from heads, call sites, visibility lists, and mode declarations.
/// Positions are 0-based, matching the analysis output.
pub(super) fn remove_redundant_args(ctx: &mut Ctx, erasures: &[(PredId, usize)]) {
    if erasures.is_empty() {
        ctx.note("empty erasure set; nothing to change".to_string());
        return;
    }
    let far = crate::analysis::far::compute_far(ctx.program);
    for (pid, pos) in erasures {
        if !far.erasable.contains(&(pid.clone(), *pos)) {
            ctx.block(
                IssueCode::NotInErasureSet,
                None,
                format!(
                    "argument {} of {pid} is not provably unused",
                    pos + 1
                ),
            );
        }
    }
    if ctx.blocked() {
        return;
    }

    let mut by_pred: BTreeMap<PredId, BTreeSet<usize>> = BTreeMap::new();
    for (pid, pos) in erasures {
        by_pred.entry(pid.clone()).or_default().insert(*pos);
    }

    for (pid, positions) in &by_pred {
        let p = match ctx.program.pred(pid) {
            Some(p) => p,
            None => {
                ctx.block(IssueCode::TargetMissing, None, format!("{pid} is not defined"));
                return;
            }
        };
        for span in meta_mentions(ctx.program, pid) {
            ctx.block(
                IssueCode::MetaCallBlocker,
                Some(span),
                format!("{pid} is passed as a goal; its arity cannot change safely"),
            );
        }
        if let Some(span) = dcg_mentions_name(ctx.program, &pid.name) {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(span),
                format!("a grammar rule mentions {}; call sites there are invisible", pid.name),
            );
        }
        if ctx.blocked() {
            return;
        }
        let drop_args = |ctx: &mut Ctx, term: &Term, site: Option<SourceSpan>| -> bool {
            let text = ctx.text(term.span().expect("parsed").file);
            if functor_span(text, term).is_none() {
                ctx.block(
                    IssueCode::NotSupportedPattern,
                    site,
                    "term is not written in functional notation",
                );
                return false;
            }
            let kept: Vec<String> = term
                .args()
                .iter()
                .enumerate()
                .filter(|(i, _)| !positions.contains(i))
                .map(|(_, a)| term_text(text, a).unwrap_or_default().to_string())
                .collect();
            match rebuild_args(term, &kept) {
                Some(e) => {
                    ctx.edits.push(e);
                    true
                }
                None => {
                    ctx.block(IssueCode::NotSupportedPattern, site, "argument region missing");
                    false
                }
            }
        };
        for c in &p.clauses {
            if c.is_dcg {
                ctx.block(IssueCode::NotSupportedPattern, Some(c.span), "grammar rules");
                return;
            }
            let head = c.head.clone();
            if !drop_args(ctx, &head, Some(c.span)) {
                return;
            }
        }
        let sites: Vec<(Term, SourceSpan)> = call_sites_of(ctx.program, pid)
            .into_iter()
            .map(|occ| (occ.term.clone(), occ.goal_span))
            .collect();
        for (term, span) in sites {
            if !drop_args(ctx, &term, Some(span)) {
                return;
            }
        }

        let new_arity = pid.arity - positions.len();
        arity_bump_edits(ctx, pid, pid.arity, new_arity);
        if let Some(span) = p.mode_directive {
            if let Some(term) = mode_directive_term(ctx.program, span) {
                let text = ctx.text(span.file);
                let kept: Vec<String> = term
                    .args()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !positions.contains(i))
                    .map(|(_, a)| term_text(text, a).unwrap_or_default().to_string())
                    .collect();
                if let Some(e) = rebuild_args(term, &kept) {
                    ctx.edits.push(e);
                }
            }
        } else if p.modes.is_some() {
            ctx.note(format!(
                "modes of {pid} come from the sidecar declarations file; adjust them there"
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{plan, RefactoringRequest, Status};
    use crate::analysis::far::compute_far;
    use crate::edit::{predicted, Workspace};
    use crate::model::{load_program, Config, PredId, Program};

    fn program(files: &[(&str, &str)]) -> Program {
        let files: Vec<(String, String)> = files
            .iter()
            .map(|(p, t)| (p.to_string(), t.to_string()))
            .collect();
        load_program(&files, None, &Config::default())
    }

    fn apply_plan(p: &Program, req: &RefactoringRequest) -> Vec<(String, String)> {
        let plan = plan(p, req);
        assert_eq!(
            plan.report.status,
            Status::Ok,
            "unexpected block: {:?}",
            plan.report.reasons
        );
        let ws = Workspace::from_program(p);
        predicted(&plan.script, &ws)
            .expect("fresh snapshot")
            .into_iter()
            .filter_map(|(path, text)| text.map(|t| (path, t)))
            .collect()
    }

    #[test]
    fn reorder_swaps_heads_sites_and_modes() {
        let src = "\
:- mode(p(+, -)).
p(X, Y) :- q(X, Y).
q(a, b).
top :- p(in, Out), use(Out).
use(_).
";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::ReorderArguments {
                pred: PredId::user("p", 2),
                permutation: vec![2, 1],
            },
        );
        let text = &out[0].1;
        assert!(text.contains(":- mode(p(-, +))."), "{text}");
        assert!(text.contains("p(Y, X) :- q(X, Y)."), "{text}");
        assert!(text.contains("top :- p(Out, in), use(Out)."), "{text}");
    }

    #[test]
    fn reorder_identity_is_empty() {
        let p = program(&[("m.pl", "p(a, b).\n")]);
        let plan = plan(
            &p,
            &RefactoringRequest::ReorderArguments {
                pred: PredId::user("p", 2),
                permutation: vec![1, 2],
            },
        );
        assert_eq!(plan.report.status, Status::Ok);
        assert!(plan.script.is_empty());
    }

    #[test]
    fn reorder_rejects_non_bijection() {
        let p = program(&[("m.pl", "p(a, b).\n")]);
        let plan = plan(
            &p,
            &RefactoringRequest::ReorderArguments {
                pred: PredId::user("p", 2),
                permutation: vec![1, 1],
            },
        );
        assert_eq!(plan.report.status, Status::Blocked);
    }

    #[test]
    fn reorder_blocked_by_meta_call() {
        let src = "p(a, b).\ntop :- findall(X, p(X, _), _L).\n";
        let p = program(&[("m.pl", src)]);
        let plan = plan(
            &p,
            &RefactoringRequest::ReorderArguments {
                pred: PredId::user("p", 2),
                permutation: vec![2, 1],
            },
        );
        assert_eq!(plan.report.status, Status::Blocked);
        assert!(plan
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::MetaCallBlocker));
    }

    #[test]
    fn add_argument_direct_call() {
        let src = "p(X) :- prep(X, S), q(X).\nq(V) :- emit(V).\nprep(_, s).\nemit(_).\n";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::AddArgument {
                caller: PredId::user("p", 1),
                var: "S".to_string(),
                callee: PredId::user("q", 1),
                position: None,
            },
        );
        let text = &out[0].1;
        assert!(text.contains("p(X) :- prep(X, S), q(X, S)."), "{text}");
        assert!(text.contains("q(V, S) :- emit(V)."), "{text}");
    }

    #[test]
    fn add_argument_threads_through_chain() {
        let src = "\
p(X) :- mid(X, Acc), r(X, Acc).
r(X, _) :- s(X).
s(X) :- t(X).
t(_).
mid(_, a).
";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::AddArgument {
                caller: PredId::user("p", 1),
                var: "Acc".to_string(),
                callee: PredId::user("t", 1),
                position: None,
            },
        );
        let text = &out[0].1;
        // r, s, t all widen; each clause threads its own variable, and
        // the caller's name is free to reuse where the clause has no
        // variable of that name.
        assert!(text.contains("r(X, _, Acc) :- s(X, Acc)."), "{text}");
        assert!(text.contains("s(X, Acc) :- t(X, Acc)."), "{text}");
        assert!(text.contains("t(_, Acc)."), "{text}");
        assert!(text.contains("p(X) :- mid(X, Acc), r(X, Acc, Acc)."), "{text}");
    }

    #[test]
    fn add_argument_recursive_callee() {
        let src = "\
walk(L) :- init(S0), steps(L, S0).
steps([], _).
steps([X|Xs], S) :- use(X, S), steps(Xs, S).
init(s).
use(_, _).
";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::AddArgument {
                caller: PredId::user("walk", 1),
                var: "S0".to_string(),
                callee: PredId::user("steps", 2),
                position: None,
            },
        );
        let text = &out[0].1;
        // The caller hands its own variable to the new position.
        assert!(text.contains("walk(L) :- init(S0), steps(L, S0, S0)."), "{text}");
        assert!(text.contains("steps([], _, S0)."), "{text}");
        assert!(
            text.contains("steps([X|Xs], S, S0) :- use(X, S), steps(Xs, S, S0)."),
            "{text}"
        );
    }

    #[test]
    fn add_argument_unreachable_blocked() {
        let src = "p :- a.\na.\nq :- b.\nb.\nvar_holder(X) :- p, x(X).\nx(_).\n";
        let p = program(&[("m.pl", src)]);
        let plan = plan(
            &p,
            &RefactoringRequest::AddArgument {
                caller: PredId::user("var_holder", 1),
                var: "X".to_string(),
                callee: PredId::user("q", 0),
                position: None,
            },
        );
        assert_eq!(plan.report.status, Status::Blocked);
        assert!(plan
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::Unreachable));
    }

    #[test]
    fn specialize_drops_non_matching_clauses() {
        let src = "p(a, Y) :- u(Y).\np(b, Y) :- v(Y).\nu(_).\nv(_).\ntop(Z) :- p(a, Z).\n";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::SpecializePredicate {
                pred: PredId::user("p", 2),
                position: 1,
                value: "a".to_string(),
                new_name: "p_a".to_string(),
            },
        );
        let text = &out[0].1;
        assert!(text.contains("p_a(Y) :- u(Y)."), "{text}");
        assert!(!text.contains("p_a(Y) :- v(Y)."), "{text}");
        assert!(text.contains("top(Z) :- p_a(Z)."), "{text}");
        // Original untouched.
        assert!(text.contains("p(a, Y) :- u(Y)."), "{text}");
        assert!(text.contains("p(b, Y) :- v(Y)."), "{text}");
    }

    #[test]
    fn specialize_variable_head_substitutes() {
        let src = "p(X, [X]) :- w(X).\nw(_).\n";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::SpecializePredicate {
                pred: PredId::user("p", 2),
                position: 1,
                value: "k".to_string(),
                new_name: "p_k".to_string(),
            },
        );
        let text = &out[0].1;
        assert!(text.contains("p_k([k]) :- w(k)."), "{text}");
    }

    #[test]
    fn specialize_no_match_warns_without_edits() {
        let src = "p(a).\np(b).\n";
        let p = program(&[("m.pl", src)]);
        let plan = plan(
            &p,
            &RefactoringRequest::SpecializePredicate {
                pred: PredId::user("p", 1),
                position: 1,
                value: "zzz".to_string(),
                new_name: "p_z".to_string(),
            },
        );
        assert_eq!(plan.report.status, Status::Ok, "{:?}", plan.report.reasons);
        assert!(plan.script.is_empty());
        assert!(plan
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::NoClauseMatches));
    }

    #[test]
    fn erase_far_positions_everywhere() {
        let src = ":- mode(p(+, -)).\np(X, Y) :- q(X, Y).\nq(a, _Z).\ntop :- p(a, _).\n";
        let p = program(&[("m.pl", src)]);
        let far = compute_far(&p);
        let erasures: Vec<(PredId, usize)> = far.erasable.iter().cloned().collect();
        assert_eq!(
            erasures,
            vec![(PredId::user("p", 2), 1), (PredId::user("q", 2), 1)]
        );
        let out = apply_plan(&p, &RefactoringRequest::RemoveRedundantArgs { erasures });
        let text = &out[0].1;
        assert!(text.contains(":- mode(p(+))."), "{text}");
        assert!(text.contains("p(X) :- q(X)."), "{text}");
        assert!(text.contains("q(a)."), "{text}");
        assert!(text.contains("top :- p(a)."), "{text}");
    }

    #[test]
    fn erase_rejects_used_position() {
        let src = "p(X) :- q(X).\nq(a).\ntop :- p(a).\n";
        let p = program(&[("m.pl", src)]);
        let plan = plan(
            &p,
            &RefactoringRequest::RemoveRedundantArgs {
                erasures: vec![(PredId::user("p", 1), 0)],
            },
        );
        assert_eq!(plan.report.status, Status::Blocked);
        assert!(plan
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::NotInErasureSet));
    }

    #[test]
    fn erase_empty_set_is_empty_plan() {
        let p = program(&[("m.pl", "p(a).\n")]);
        let plan = plan(
            &p,
            &RefactoringRequest::RemoveRedundantArgs { erasures: vec![] },
        );
        assert_eq!(plan.report.status, Status::Ok);
        assert!(plan.script.is_empty());
    }
}
