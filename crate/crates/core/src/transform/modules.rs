//! Module-boundary rewrites: visibility hygiene, dead and duplicate
//! removal, renames, and merge/split/move surgery.

use std::collections::{BTreeMap, BTreeSet};

use super::util::{
    call_sites_of, dcg_mentions_module, dcg_mentions_name, directive_insertion_point,
    eof_insertion, functor_span, item_delete_span, list_append_edit, list_elements,
    list_remove_edit, meta_mentions, mode_directive_term, module_directive, module_file,
    pi_pairs_in, qualifier_span, use_module_directives,
};
use super::{Ctx, DeadScope, DupStrategy, IssueCode};
use crate::analysis::dead::{default_roots, find_dead, find_dead_in_module};
use crate::analysis::duplicates::duplicate_pairs;
use crate::analysis::smells::unused_exports;
use crate::edit::{apply_to_text, TextEdit};
use crate::model::{CallGraph, PredId, Resolution, SourceFile};
use crate::span::SourceSpan;
use crate::syntax::ast::{DirectiveKind, Goal, Item, Term};
use crate::syntax::printer::{print_goal_inline, quote_atom};

fn pi_text(name: &str, arity: usize) -> String {
    format!("{}/{arity}", quote_atom(name))
}

/// Indices of `name/arity` elements of a bracket list matching any of
/// `targets`.
fn pi_indices(list: &Term, targets: &BTreeSet<(String, usize)>) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for (i, e) in list_elements(list).iter().enumerate() {
        if let Term::Compound { functor, args, .. } = e {
            if functor == "/" && args.len() == 2 {
                if let (Term::Atom { text, .. }, Term::Int { value, .. }) = (&args[0], &args[1]) {
                    if *value >= 0 && targets.contains(&(text.clone(), *value as usize)) {
                        out.insert(i);
                    }
                }
            }
        }
    }
    out
}

fn has_blanket_import(ctx: &Ctx, module: &str, from: &str) -> bool {
    ctx.program
        .modules
        .get(module)
        .is_some_and(|m| m.imports.iter().any(|i| i.from == from && i.names.is_none()))
}

fn is_exported(ctx: &Ctx, module: &str, name: &str, arity: usize) -> bool {
    ctx.program
        .modules
        .get(module)
        .is_some_and(|m| m.exports.iter().any(|(n, a)| n == name && *a == arity))
}

/// Deferred `use_module` additions, keyed by (importing module, source
/// module), emitted as one edit per pair.
type ImportAdds = BTreeMap<(String, String), BTreeSet<(String, usize)>>;

fn emit_import_adds(ctx: &mut Ctx, adds: ImportAdds) {
    for ((module, from), pis) in adds {
        if has_blanket_import(ctx, &module, &from) {
            continue;
        }
        let file = match module_file(ctx.program, &module) {
            Some(f) => f,
            None => {
                ctx.note(format!("module {module} has no file; cannot add an import"));
                continue;
            }
        };
        // Extend an existing explicit import list when there is one.
        let existing = use_module_directives(file, &from);
        let list = existing.iter().find_map(|(_, l)| *l);
        let missing: Vec<String> = pis
            .iter()
            .filter(|(n, a)| {
                list.map_or(true, |l| {
                    pi_indices(l, &BTreeSet::from([(n.clone(), *a)])).is_empty()
                })
            })
            .map(|(n, a)| pi_text(n, *a))
            .collect();
        if missing.is_empty() {
            continue;
        }
        match list {
            Some(l) => {
                if let Some(e) = list_append_edit(l, &missing) {
                    ctx.edits.push(e);
                }
            }
            None => {
                let at = directive_insertion_point(file);
                ctx.edits.push(TextEdit::new(
                    SourceSpan::new(file.file, at, at),
                    format!(
                        ":- use_module({}, [{}]).\n",
                        quote_atom(&from),
                        missing.join(", ")
                    ),
                ));
            }
        }
    }
}

/// Rewrites a module's export list in one edit: drops `remove`, appends
/// `add`. Used when removals and additions would otherwise produce
/// overlapping edits on the same list.
fn rewrite_exports(
    ctx: &mut Ctx,
    module: &str,
    remove: &BTreeSet<(String, usize)>,
    add: &[(String, usize)],
) {
    let (file, _, list) = match module_directive(ctx.program, module) {
        Some(t) => t,
        None => {
            ctx.note(format!("module {module} has no declaration; export list unchanged"));
            return;
        }
    };
    let text = ctx.text(file);
    let removed = pi_indices(list, remove);
    let mut kept: Vec<String> = list_elements(list)
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .filter_map(|(_, e)| e.span().map(|s| text[s.start..s.end].to_string()))
        .collect();
    for (n, a) in add {
        let rendered = pi_text(n, *a);
        if !kept.contains(&rendered) {
            kept.push(rendered);
        }
    }
    if let Some(span) = list.span() {
        ctx.edits
            .push(TextEdit::new(span, format!("[{}]", kept.join(", "))));
    }
}

/// Appends missing indicators to a module's export list.
fn add_exports(ctx: &mut Ctx, module: &str, pis: &[(String, usize)]) {
    let missing: Vec<String> = pis
        .iter()
        .filter(|(n, a)| !is_exported(ctx, module, n, *a))
        .map(|(n, a)| pi_text(n, *a))
        .collect();
    if missing.is_empty() {
        return;
    }
    match module_directive(ctx.program, module) {
        Some((_, _, list)) => {
            if let Some(e) = list_append_edit(list, &missing) {
                ctx.edits.push(e);
            }
        }
        None => {
            ctx.note(format!(
                "module {module} has no declaration; cannot export {}",
                missing.join(", ")
            ));
        }
    }
}

/// The exact source extent of a qualified goal `m:G`, accounting for
/// parentheses the parser leaves outside the inner term's span. Returns
/// (end offset, number of wrapping parens).
fn qualified_extent(text: &str, goal: SourceSpan, term: SourceSpan) -> Option<(usize, usize)> {
    let gap = &text[goal.start..term.start.min(text.len())];
    let colon = gap.rfind(':')?;
    let opens = gap[colon + 1..].bytes().filter(|b| *b == b'(').count();
    if opens == 0 {
        return Some((goal.end.max(term.end), 0));
    }
    let bytes = text.as_bytes();
    let mut i = term.end;
    let mut depth = opens;
    while i < bytes.len() && depth > 0 {
        match bytes[i] {
            b')' => depth -= 1,
            b' ' | b'\t' | b'\r' | b'\n' => {}
            _ => return None,
        }
        i += 1;
    }
    if depth > 0 {
        return None;
    }
    Some((i, opens))
}

/// Strips `m:` qualifiers wherever the named predicate can be made
/// visible instead, adding the export and import declarations that keep
/// every call resolving to the same definition. Unresolvable or
/// conflicting sites stay qualified and are reported.
pub(super) fn eliminate_qualification(ctx: &mut Ctx) {
    struct QSite<'p> {
        caller: PredId,
        goal_span: SourceSpan,
        term: &'p Term,
        qualifier: &'p str,
    }
    let mut sites: Vec<QSite> = Vec::new();
    let mut saw_dcg = false;
    for pred in ctx.program.all_preds() {
        for c in &pred.clauses {
            if c.is_dcg {
                saw_dcg = true;
                continue;
            }
            c.body.walk(&mut |g| {
                if let Goal::Call {
                    term,
                    qualifier: Some(q),
                    span,
                } = g
                {
                    if let Some(goal_span) = span.or_else(|| term.span()) {
                        sites.push(QSite {
                            caller: pred.id.clone(),
                            goal_span,
                            term,
                            qualifier: q,
                        });
                    }
                }
            });
        }
    }
    if saw_dcg {
        ctx.note("grammar rules are not scanned for qualified calls".to_string());
    }
    sites.sort_by_key(|s| (s.goal_span.file.0, s.goal_span.start));
    if sites.is_empty() {
        ctx.note("no qualified calls".to_string());
        return;
    }

    let mut import_adds: ImportAdds = ImportAdds::new();
    let mut export_adds: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
    for site in &sites {
        let (name, arity) = match site.term.indicator() {
            Some((n, a)) => (n.to_string(), a),
            None => {
                ctx.block(
                    IssueCode::ConflictingImport,
                    Some(site.goal_span),
                    "qualified variable goal; left as is",
                );
                continue;
            }
        };
        let needs_visibility = match ctx.program.resolve(site.qualifier, &name, arity) {
            Resolution::Undefined(..) => {
                ctx.block(
                    IssueCode::ConflictingImport,
                    Some(site.goal_span),
                    format!(
                        "{}:{name}/{arity} is not defined there; site left qualified",
                        site.qualifier
                    ),
                );
                continue;
            }
            Resolution::Builtin(..) => None,
            Resolution::Pred(pid) => {
                if pid.module == site.caller.module {
                    None
                } else {
                    match ctx.program.resolve(&site.caller.module, &name, arity) {
                        Resolution::Undefined(..) => Some(pid),
                        Resolution::Pred(p2) if p2 == pid => None,
                        _ => {
                            ctx.block(
                                IssueCode::ConflictingImport,
                                Some(site.goal_span),
                                format!(
                                    "{name}/{arity} is already bound to a different definition in {}; site left qualified",
                                    site.caller.module
                                ),
                            );
                            continue;
                        }
                    }
                }
            }
        };

        let term_span = site.term.span().expect("parsed");
        let text = ctx.text(term_span.file);
        match qualified_extent(text, site.goal_span, term_span) {
            Some((_, 0)) => {
                ctx.edits.push(TextEdit::new(
                    SourceSpan::new(term_span.file, site.goal_span.start, term_span.start),
                    String::new(),
                ));
            }
            Some((end, _)) => {
                let ops = &ctx.program.file(term_span.file).ops;
                let bare = Goal::Call {
                    term: site.term.clone(),
                    qualifier: None,
                    span: None,
                };
                ctx.edits.push(TextEdit::new(
                    SourceSpan::new(term_span.file, site.goal_span.start, end),
                    print_goal_inline(&bare, ops, 999),
                ));
            }
            None => {
                ctx.block(
                    IssueCode::ConflictingImport,
                    Some(site.goal_span),
                    "cannot read the qualified goal's extent; site left qualified",
                );
                continue;
            }
        }
        if let Some(pid) = needs_visibility {
            import_adds
                .entry((site.caller.module.clone(), pid.module.clone()))
                .or_default()
                .insert((name.clone(), arity));
            if !is_exported(ctx, &pid.module, &name, arity) {
                let v = export_adds.entry(pid.module.clone()).or_default();
                if !v.contains(&(name.clone(), arity)) {
                    v.push((name.clone(), arity));
                }
            }
        }
    }
    for (module, pis) in export_adds {
        add_exports(ctx, &module, &pis);
    }
    emit_import_adds(ctx, import_adds);
}

/// Shrinks export lists by the analysis's unused-exports set.
pub(super) fn hide_predicates(ctx: &mut Ctx) {
    let graph = CallGraph::build(ctx.program);
    let unused = unused_exports(ctx.program, &graph);
    if unused.is_empty() {
        ctx.note("no unused exports".to_string());
        return;
    }
    let mut by_module: BTreeMap<String, BTreeSet<(String, usize)>> = BTreeMap::new();
    for (m, n, a) in unused {
        by_module.entry(m).or_default().insert((n, a));
    }
    for (m, targets) in by_module {
        if let Some((file, _, list)) = module_directive(ctx.program, &m) {
            let indices = pi_indices(list, &targets);
            if indices.is_empty() {
                continue;
            }
            let text = ctx.text(file);
            if let Some(e) = list_remove_edit(text, list, &indices) {
                ctx.edits.push(e);
                ctx.note(format!("{m}: hid {} export(s)", indices.len()));
            }
        }
    }
}

/// Deletes unreachable predicates: their clauses, mode declarations,
/// export entries, and import-list references.
pub(super) fn remove_dead(ctx: &mut Ctx, scope: &DeadScope, force: bool) {
    let graph = CallGraph::build(ctx.program);
    let dc = match scope {
        DeadScope::System => match default_roots(ctx.program) {
            Ok(roots) => find_dead(ctx.program, &graph, &roots),
            Err(e) => {
                ctx.block(IssueCode::BadParameter, None, e.to_string());
                return;
            }
        },
        DeadScope::Module(m) => {
            if !ctx.program.modules.contains_key(m.as_str()) {
                ctx.block(IssueCode::TargetMissing, None, format!("no module named {m}"));
                return;
            }
            find_dead_in_module(ctx.program, &graph, m)
        }
    };
    if !dc.caveats.is_empty() {
        if force {
            for c in &dc.caveats {
                ctx.note(format!(
                    "forced past unresolved goal in {}: {}",
                    c.caller, c.reason
                ));
            }
        } else {
            for c in &dc.caveats {
                ctx.block(
                    IssueCode::MetaCallBlocker,
                    Some(c.span),
                    format!(
                        "unresolved goal in {} may reach otherwise-dead code: {}",
                        c.caller, c.reason
                    ),
                );
            }
            return;
        }
    }
    if dc.dead.is_empty() {
        ctx.note("no dead predicates".to_string());
        return;
    }

    let dead: BTreeSet<PredId> = dc.dead.iter().cloned().collect();
    for pid in &dc.dead {
        let p = ctx.program.pred(pid).expect("dead list is over defined preds");
        for c in &p.clauses {
            let text = ctx.text(c.span.file);
            ctx.edits
                .push(TextEdit::new(item_delete_span(text, c.span), String::new()));
        }
        if let Some(ms) = p.mode_directive {
            let text = ctx.text(ms.file);
            ctx.edits
                .push(TextEdit::new(item_delete_span(text, ms), String::new()));
        }
    }
    for f in &ctx.program.files {
        for item in &f.items {
            let d = match item {
                Item::Directive(d) => d,
                Item::Clause(_) => continue,
            };
            match &d.kind {
                DirectiveKind::Module { name, .. } => {
                    let targets: BTreeSet<(String, usize)> = dead
                        .iter()
                        .filter(|p| &p.module == name)
                        .map(|p| (p.name.clone(), p.arity))
                        .collect();
                    if let Some(list) = d.term.args().get(1) {
                        let indices = pi_indices(list, &targets);
                        if !indices.is_empty() {
                            if let Some(e) = list_remove_edit(&f.text, list, &indices) {
                                ctx.edits.push(e);
                            }
                        }
                    }
                }
                DirectiveKind::UseModule { module: from, imports } if imports.is_some() => {
                    let targets: BTreeSet<(String, usize)> = dead
                        .iter()
                        .filter(|p| &p.module == from)
                        .map(|p| (p.name.clone(), p.arity))
                        .collect();
                    if let Some(list) = d.term.args().get(1) {
                        let indices = pi_indices(list, &targets);
                        if !indices.is_empty() {
                            if let Some(e) = list_remove_edit(&f.text, list, &indices) {
                                ctx.edits.push(e);
                            }
                        }
                    }
                }
                DirectiveKind::Other { term } => {
                    let pis = pi_pairs_in(term);
                    if pis.is_empty() {
                        continue;
                    }
                    let dead_count = pis
                        .iter()
                        .filter(|(_, n, a)| dead.contains(&PredId::new(&f.module, n, *a)))
                        .count();
                    if dead_count == pis.len() {
                        ctx.edits.push(TextEdit::new(
                            item_delete_span(&f.text, d.span),
                            String::new(),
                        ));
                    } else if dead_count > 0 {
                        ctx.note(format!(
                            "directive at {}:{} mixes dead and live indicators; left as is",
                            ctx.program.path(f.file),
                            d.span.start
                        ));
                    }
                }
                _ => {}
            }
        }
    }
    ctx.note(format!("removing {} dead predicate(s)", dc.dead.len()));
}

/// Redirects every reference of `loser` to `winner` and deletes the
/// losing definition.
fn redirect_duplicate(ctx: &mut Ctx, winner: &PredId, loser: &PredId) {
    if let Some(span) = dcg_mentions_name(ctx.program, &loser.name) {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(span),
            "a grammar rule mentions the losing predicate's name",
        );
        return;
    }
    for span in meta_mentions(ctx.program, loser) {
        ctx.block(
            IssueCode::MetaCallBlocker,
            Some(span),
            format!("{loser} is passed as a goal; cannot redirect it safely"),
        );
    }
    if ctx.blocked() {
        return;
    }

    let sites = call_sites_of(ctx.program, loser);
    let caller_modules: BTreeSet<String> = sites.iter().map(|s| s.caller.module.clone()).collect();
    for m in &caller_modules {
        match ctx.program.resolve(m, &winner.name, winner.arity) {
            Resolution::Undefined(..) => {}
            Resolution::Pred(pid) if &pid == winner || &pid == loser => {}
            _ => {
                ctx.block(
                    IssueCode::NameClash,
                    None,
                    format!(
                        "{}/{} is bound to a different definition in module {m}",
                        winner.name, winner.arity
                    ),
                );
            }
        }
    }
    if ctx.blocked() {
        return;
    }

    let lp = ctx.program.pred(loser).expect("validated pair");
    for c in &lp.clauses {
        let text = ctx.text(c.span.file);
        ctx.edits
            .push(TextEdit::new(item_delete_span(text, c.span), String::new()));
    }
    if let Some(ms) = lp.mode_directive {
        let text = ctx.text(ms.file);
        ctx.edits
            .push(TextEdit::new(item_delete_span(text, ms), String::new()));
    }
    if let Some((file, _, list)) = module_directive(ctx.program, &loser.module) {
        let targets = BTreeSet::from([(loser.name.clone(), loser.arity)]);
        let indices = pi_indices(list, &targets);
        if !indices.is_empty() {
            let text = ctx.text(file);
            if let Some(e) = list_remove_edit(text, list, &indices) {
                ctx.edits.push(e);
            }
        }
    }

    for occ in &sites {
        let text = ctx.text(occ.file);
        if loser.name != winner.name {
            match functor_span(text, occ.term) {
                Some(fs) => ctx.edits.push(TextEdit::new(fs, quote_atom(&winner.name))),
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
        if occ.qualifier.is_some() {
            let term_start = occ.term.span().expect("parsed").start;
            if let Some(qs) = qualifier_span(text, occ.goal_span, term_start) {
                ctx.edits.push(TextEdit::new(qs, quote_atom(&winner.module)));
            }
        }
    }

    // Prune loser entries from import lists everywhere.
    let loser_target = BTreeSet::from([(loser.name.clone(), loser.arity)]);
    for f in &ctx.program.files {
        for (_, list) in use_module_directives(f, &loser.module) {
            if let Some(list) = list {
                let indices = pi_indices(list, &loser_target);
                if !indices.is_empty() {
                    if let Some(e) = list_remove_edit(&f.text, list, &indices) {
                        ctx.edits.push(e);
                    }
                }
            }
        }
    }

    let mut adds = ImportAdds::new();
    for m in &caller_modules {
        if m == &winner.module {
            continue;
        }
        let already = matches!(
            ctx.program.resolve(m, &winner.name, winner.arity),
            Resolution::Pred(ref pid) if pid == winner
        );
        if !already {
            adds.entry((m.clone(), winner.module.clone()))
                .or_default()
                .insert((winner.name.clone(), winner.arity));
        }
    }
    emit_import_adds(ctx, adds);
    if caller_modules.iter().any(|m| m != &winner.module) {
        add_exports(ctx, &winner.module, &[(winner.name.clone(), winner.arity)]);
    }
}

/// Moves one shared definition into a fresh module and redirects both
/// originals' references there.
fn extract_duplicate(ctx: &mut Ctx, pair: &(PredId, PredId), new_module: &str) {
    if ctx.program.modules.contains_key(new_module) {
        ctx.block(
            IssueCode::NameClash,
            None,
            format!("module {new_module} already exists"),
        );
        return;
    }
    let (a, b) = pair;
    for pid in [a, b] {
        if let Some(span) = dcg_mentions_name(ctx.program, &pid.name) {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(span),
                "a grammar rule mentions the predicate's name",
            );
        }
        for span in meta_mentions(ctx.program, pid) {
            ctx.block(
                IssueCode::MetaCallBlocker,
                Some(span),
                format!("{pid} is passed as a goal; cannot redirect it safely"),
            );
        }
    }
    if ctx.blocked() {
        return;
    }
    let keep_name = a.name.clone();
    let arity = a.arity;
    let a_sites = call_sites_of(ctx.program, a);
    let b_sites = call_sites_of(ctx.program, b);
    let caller_modules: BTreeSet<String> = a_sites
        .iter()
        .chain(&b_sites)
        .map(|s| s.caller.module.clone())
        .collect();
    for m in &caller_modules {
        match ctx.program.resolve(m, &keep_name, arity) {
            Resolution::Undefined(..) => {}
            Resolution::Pred(pid) if &pid == a || &pid == b => {}
            _ => ctx.block(
                IssueCode::NameClash,
                None,
                format!("{keep_name}/{arity} is bound to a different definition in module {m}"),
            ),
        }
    }
    if ctx.blocked() {
        return;
    }

    // New module file next to the first definition.
    let ap = ctx.program.pred(a).expect("validated pair");
    let first_file = ap.clauses.first().expect("duplicates have clauses").span.file;
    let src_path = ctx.program.path(first_file);
    let dir = match src_path.rfind('/') {
        Some(i) => &src_path[..=i],
        None => "",
    };
    let mut content = format!(
        ":- module({}, [{}]).\n\n",
        quote_atom(new_module),
        pi_text(&keep_name, arity)
    );
    if let Some(ms) = ap.mode_directive {
        let text = ctx.text(ms.file);
        content.push_str(&text[ms.start..ms.end]);
        content.push('\n');
    }
    for c in &ap.clauses {
        content.push_str(&c.raw);
        content.push('\n');
    }
    ctx.creates
        .insert(format!("{dir}{new_module}.pl"), content);

    for pid in [a, b] {
        let p = ctx.program.pred(pid).expect("validated");
        for c in &p.clauses {
            let text = ctx.text(c.span.file);
            ctx.edits
                .push(TextEdit::new(item_delete_span(text, c.span), String::new()));
        }
        if let Some(ms) = p.mode_directive {
            let text = ctx.text(ms.file);
            ctx.edits
                .push(TextEdit::new(item_delete_span(text, ms), String::new()));
        }
        if let Some((file, _, list)) = module_directive(ctx.program, &pid.module) {
            let targets = BTreeSet::from([(pid.name.clone(), pid.arity)]);
            let indices = pi_indices(list, &targets);
            if !indices.is_empty() {
                let text = ctx.text(file);
                if let Some(e) = list_remove_edit(text, list, &indices) {
                    ctx.edits.push(e);
                }
            }
        }
        let target = BTreeSet::from([(pid.name.clone(), pid.arity)]);
        for f in &ctx.program.files {
            for (_, list) in use_module_directives(f, &pid.module) {
                if let Some(list) = list {
                    let indices = pi_indices(list, &target);
                    if !indices.is_empty() {
                        if let Some(e) = list_remove_edit(&f.text, list, &indices) {
                            ctx.edits.push(e);
                        }
                    }
                }
            }
        }
    }

    for (sites, pid) in [(&a_sites, a), (&b_sites, b)] {
        for occ in sites.iter() {
            let text = ctx.text(occ.file);
            if pid.name != keep_name {
                match functor_span(text, occ.term) {
                    Some(fs) => ctx.edits.push(TextEdit::new(fs, quote_atom(&keep_name))),
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
            if occ.qualifier.is_some() {
                let term_start = occ.term.span().expect("parsed").start;
                if let Some(qs) = qualifier_span(text, occ.goal_span, term_start) {
                    ctx.edits.push(TextEdit::new(qs, quote_atom(new_module)));
                }
            }
        }
    }

    let mut adds = ImportAdds::new();
    for m in &caller_modules {
        adds.entry((m.clone(), new_module.to_string()))
            .or_default()
            .insert((keep_name.clone(), arity));
    }
    emit_import_adds(ctx, adds);
}

/// Collapses a duplicate pair per the chosen strategy.
pub(super) fn remove_duplicates(ctx: &mut Ctx, pair: &(PredId, PredId), strategy: &DupStrategy) {
    let pairs = duplicate_pairs(ctx.program);
    let normalized = if pair.0 <= pair.1 {
        (pair.0.clone(), pair.1.clone())
    } else {
        (pair.1.clone(), pair.0.clone())
    };
    if !pairs.contains(&normalized) {
        ctx.block(
            IssueCode::BadParameter,
            None,
            format!(
                "{} and {} are not reported as duplicates",
                pair.0, pair.1
            ),
        );
        return;
    }
    match strategy {
        DupStrategy::KeepFirst => redirect_duplicate(ctx, &pair.0, &pair.1),
        DupStrategy::KeepSecond => redirect_duplicate(ctx, &pair.1, &pair.0),
        DupStrategy::ExtractToNewModule(name) => extract_duplicate(ctx, pair, name),
    }
}

/// Renames a predicate across heads, call sites, visibility lists, and
/// mode declarations.
pub(super) fn rename_predicate(ctx: &mut Ctx, pred: &PredId, new_name: &str) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    if new_name == pred.name {
        ctx.note("new name equals the old name; nothing to change".to_string());
        return;
    }
    if let Some(c) = p.clauses.iter().find(|c| c.is_dcg) {
        ctx.block(IssueCode::NotSupportedPattern, Some(c.span), "grammar rules");
        return;
    }
    if let Some(span) = dcg_mentions_name(ctx.program, &pred.name) {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(span),
            "a grammar rule mentions this name; rename cannot see through grammar arity",
        );
        return;
    }
    for span in meta_mentions(ctx.program, pred) {
        ctx.block(
            IssueCode::MetaCallBlocker,
            Some(span),
            format!("{pred} is passed as a goal; the mention cannot be renamed safely"),
        );
    }
    // The new name must be free in the defining module and in every
    // module that sees the predicate through an import.
    let mut check_modules: BTreeSet<String> = BTreeSet::from([pred.module.clone()]);
    for m in ctx.program.modules.values() {
        for import in &m.imports {
            if import.from != pred.module {
                continue;
            }
            let imports_it = match &import.names {
                Some(names) => names.iter().any(|(n, a)| n == &pred.name && *a == pred.arity),
                None => is_exported(ctx, &pred.module, &pred.name, pred.arity),
            };
            if imports_it {
                check_modules.insert(m.name.clone());
            }
        }
    }
    for m in &check_modules {
        if !matches!(
            ctx.program.resolve(m, new_name, pred.arity),
            Resolution::Undefined(..)
        ) {
            ctx.block(
                IssueCode::NameClash,
                None,
                format!("{new_name}/{} is already visible in module {m}", pred.arity),
            );
        }
    }
    if ctx.blocked() {
        return;
    }

    for c in &p.clauses {
        let text = ctx.text(c.span.file);
        match functor_span(text, &c.head) {
            Some(fs) => ctx.edits.push(TextEdit::new(fs, quote_atom(new_name))),
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
        match functor_span(text, occ.term) {
            Some(fs) => ctx.edits.push(TextEdit::new(fs, quote_atom(new_name))),
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
    // Export list, import lists, and other indicator-bearing directives.
    let rename_pi_atoms = |ctx: &mut Ctx, list: &Term| {
        let mut edits = Vec::new();
        for (atom, n, a) in pi_pairs_in(list) {
            if n == pred.name && a == pred.arity {
                if let Some(s) = atom.span() {
                    edits.push(TextEdit::new(s, quote_atom(new_name)));
                }
            }
        }
        ctx.edits.extend(edits);
    };
    if let Some((_, _, list)) = module_directive(ctx.program, &pred.module) {
        rename_pi_atoms(ctx, list);
    }
    for f in &ctx.program.files {
        for (_, list) in use_module_directives(f, &pred.module) {
            if let Some(list) = list {
                rename_pi_atoms(ctx, list);
            }
        }
    }
    if let Some(mi) = ctx.program.modules.get(&pred.module) {
        for fid in &mi.files {
            let f = ctx.program.file(*fid);
            for item in &f.items {
                if let Item::Directive(d) = item {
                    if matches!(d.kind, DirectiveKind::Other { .. }) {
                        rename_pi_atoms(ctx, &d.term);
                    }
                }
            }
        }
    }
    match p.mode_directive {
        Some(span) => {
            if let Some(term) = mode_directive_term(ctx.program, span) {
                let text = ctx.text(span.file);
                if let Some(fs) = functor_span(text, term) {
                    ctx.edits.push(TextEdit::new(fs, quote_atom(new_name)));
                }
            }
        }
        None if p.modes.is_some() => {
            ctx.note(format!(
                "modes of {pred} come from the sidecar declarations file; rename them there"
            ));
        }
        None => {}
    }
    if ctx
        .program
        .config
        .entry_points
        .iter()
        .any(|(m, n, a)| m == &pred.module && n == &pred.name && *a == pred.arity)
    {
        ctx.note("the renamed predicate is a configured entry point; update the configuration".to_string());
    }
}

/// Renames a module: its declaration, imports of it, qualified calls,
/// and (when the stem matches) its file.
pub(super) fn rename_module(ctx: &mut Ctx, module: &str, new_name: &str) {
    if !ctx.program.modules.contains_key(module) {
        ctx.block(IssueCode::TargetMissing, None, format!("no module named {module}"));
        return;
    }
    if module == new_name {
        ctx.note("new name equals the old name; nothing to change".to_string());
        return;
    }
    if ctx.program.modules.contains_key(new_name) {
        ctx.block(
            IssueCode::NameClash,
            None,
            format!("module {new_name} already exists"),
        );
        return;
    }
    let (decl_file, decl, _) = match module_directive(ctx.program, module) {
        Some(t) => t,
        None => {
            ctx.block(
                IssueCode::NotSupportedPattern,
                None,
                format!("module {module} has no declaration to rename"),
            );
            return;
        }
    };
    if let Some(span) = dcg_mentions_module(ctx.program, module) {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(span),
            "a grammar rule names this module in a qualified call",
        );
        return;
    }

    if let Some(name_atom) = decl.term.args().first() {
        if let Some(s) = name_atom.span() {
            ctx.edits.push(TextEdit::new(s, quote_atom(new_name)));
        }
    }
    for f in &ctx.program.files {
        for (d, _) in use_module_directives(f, module) {
            if let Some(arg0) = d.term.args().first() {
                let mut done = false;
                arg0.walk(&mut |t| {
                    if done {
                        return;
                    }
                    if let Term::Atom { text, span } = t {
                        if text == module {
                            if let Some(s) = span {
                                ctx.edits.push(TextEdit::new(*s, quote_atom(new_name)));
                                done = true;
                            }
                        }
                    }
                });
            }
        }
    }
    for pred in ctx.program.all_preds() {
        for c in &pred.clauses {
            if c.is_dcg {
                continue;
            }
            let mut sites: Vec<(SourceSpan, usize)> = Vec::new();
            c.body.walk(&mut |g| {
                if let Goal::Call {
                    term,
                    qualifier: Some(q),
                    span: Some(gs),
                } = g
                {
                    if q == module {
                        if let Some(ts) = term.span() {
                            sites.push((*gs, ts.start));
                        }
                    }
                }
            });
            for (gs, ts) in sites {
                let text = ctx.text(gs.file);
                if let Some(qs) = qualifier_span(text, gs, ts) {
                    ctx.edits.push(TextEdit::new(qs, quote_atom(new_name)));
                }
            }
        }
    }
    let path = ctx.program.path(decl_file).to_string();
    let stem = path
        .rsplit('/')
        .next()
        .and_then(|f| f.strip_suffix(".pl"))
        .unwrap_or("");
    if stem == module {
        let dir = &path[..path.len() - stem.len() - 3];
        ctx.renames.push((path.clone(), format!("{dir}{new_name}.pl")));
        ctx.note(format!("file {path} follows the module name"));
    } else {
        ctx.note(format!(
            "file {path} does not match the module name; not renamed"
        ));
    }
    if ctx
        .program
        .config
        .entry_points
        .iter()
        .any(|(m, _, _)| m == module)
    {
        ctx.note("configured entry points reference this module; update the configuration".to_string());
    }
}

/// Renames a data functor at the selected occurrences. Occurrences are
/// subterms of head arguments and call arguments — never the predicate
/// position itself.
pub(super) fn rename_functor(
    ctx: &mut Ctx,
    name: &str,
    arity: usize,
    new_name: &str,
    occurrences: Option<&[usize]>,
) {
    if name == new_name {
        ctx.note("new name equals the old name; nothing to change".to_string());
        return;
    }
    if ctx.program.is_builtin(name, arity) {
        ctx.block(
            IssueCode::BuiltinTarget,
            None,
            format!("{name}/{arity} is a built-in; extract a wrapper and rename that instead"),
        );
        return;
    }

    let mut candidates: Vec<SourceSpan> = Vec::new();
    let mut collect = |t: &Term| {
        let matches = match t {
            Term::Compound { functor, args, .. } => functor == name && args.len() == arity,
            Term::Atom { text, .. } => arity == 0 && text == name,
            _ => false,
        };
        if matches {
            if let Some(s) = t.span() {
                candidates.push(s);
            }
        }
    };
    for pred in ctx.program.all_preds() {
        for c in &pred.clauses {
            if c.is_dcg {
                continue;
            }
            for arg in c.head.args() {
                arg.walk(&mut collect);
            }
            c.body.walk(&mut |g| {
                if let Goal::Call { term, .. } = g {
                    for arg in term.args() {
                        arg.walk(&mut collect);
                    }
                }
            });
        }
    }
    candidates.sort_by_key(|s| (s.file.0, s.start));
    candidates.dedup();
    if candidates.is_empty() {
        ctx.note(format!("no data occurrence of {name}/{arity}"));
        return;
    }

    let selected: Vec<usize> = match occurrences {
        Some(filter) => {
            let mut bad = false;
            for &i in filter {
                if i >= candidates.len() {
                    ctx.block(
                        IssueCode::BadParameter,
                        None,
                        format!(
                            "occurrence {i} out of range; {} occurrence(s) exist",
                            candidates.len()
                        ),
                    );
                    bad = true;
                }
            }
            if bad {
                return;
            }
            let mut v: Vec<usize> = filter.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        None => (0..candidates.len()).collect(),
    };
    for &i in &selected {
        let span = candidates[i];
        let text = ctx.text(span.file);
        // Re-find the subterm to get its functor token; operator-notation
        // occurrences have no such token.
        let slice_start = &text[span.start..span.end];
        if arity == 0 {
            ctx.edits.push(TextEdit::new(span, quote_atom(new_name)));
            continue;
        }
        let open = match slice_start.find('(') {
            Some(p) if slice_start[..p].trim_end().ends_with(|c: char| {
                c.is_alphanumeric() || c == '_' || c == '\''
            }) =>
            {
                p
            }
            _ => {
                ctx.block(
                    IssueCode::NotSupportedPattern,
                    Some(span),
                    "occurrence is written in operator notation",
                );
                return;
            }
        };
        let name_end = span.start + slice_start[..open].trim_end().len();
        ctx.edits.push(TextEdit::new(
            SourceSpan::new(span.file, span.start, name_end),
            quote_atom(new_name),
        ));
    }
    ctx.note(format!(
        "renamed {} of {} occurrence(s)",
        selected.len(),
        candidates.len()
    ));
}

/// Merges the input modules into one, keeping a single copy of
/// duplicate-identical predicates and redirecting all references.
pub(super) fn merge_modules(ctx: &mut Ctx, inputs: &[String], new_name: &str) {
    if inputs.len() < 2 {
        ctx.block(IssueCode::BadParameter, None, "need at least two modules to merge");
        return;
    }
    {
        let mut seen = BTreeSet::new();
        for m in inputs {
            if !seen.insert(m.clone()) {
                ctx.block(IssueCode::BadParameter, None, format!("module {m} listed twice"));
                return;
            }
        }
    }
    for m in inputs {
        if module_directive(ctx.program, m).is_none() {
            ctx.block(
                IssueCode::TargetMissing,
                None,
                format!("module {m} does not exist or has no declaration"),
            );
        }
        if let Some(span) = dcg_mentions_module(ctx.program, m) {
            ctx.block(
                IssueCode::NotSupportedPattern,
                Some(span),
                format!("a grammar rule names module {m} in a qualified call"),
            );
        }
    }
    if ctx.blocked() {
        return;
    }
    if !inputs.iter().any(|m| m == new_name) && ctx.program.modules.contains_key(new_name) {
        ctx.block(
            IssueCode::NameClash,
            None,
            format!("module {new_name} already exists outside the merge set"),
        );
        return;
    }
    let target_module: &str = if inputs.iter().any(|m| m == new_name) {
        new_name
    } else {
        &inputs[0]
    };

    // Same name/arity in several inputs is allowed only for definitions
    // the duplicate analysis says are interchangeable; one copy is kept.
    let dup_set: BTreeSet<(PredId, PredId)> = duplicate_pairs(ctx.program).into_iter().collect();
    let mut definers: BTreeMap<(String, usize), Vec<String>> = BTreeMap::new();
    for m in inputs {
        if let Some(mi) = ctx.program.modules.get(m) {
            for (key, _) in mi.preds.iter().filter(|(_, p)| !p.clauses.is_empty()) {
                definers.entry(key.clone()).or_default().push(m.clone());
            }
        }
    }
    let mut dropped: BTreeSet<PredId> = BTreeSet::new();
    for ((n, a), mods) in definers.iter().filter(|(_, v)| v.len() >= 2) {
        let keeper = if mods.iter().any(|m| m == target_module) {
            target_module.to_string()
        } else {
            mods[0].clone()
        };
        for m in mods.iter().filter(|m| **m != keeper) {
            let x = PredId::new(&keeper, n, *a);
            let y = PredId::new(m, n, *a);
            let norm = if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
            if dup_set.contains(&norm) {
                dropped.insert(y);
            } else {
                ctx.block(
                    IssueCode::NameClash,
                    None,
                    format!("{n}/{a} is defined differently in {keeper} and {m}"),
                );
                ctx.note(format!(
                    "rename {m}:{n}/{a} (rename-predicate) before merging"
                ));
            }
        }
    }
    if ctx.blocked() {
        return;
    }

    let input_set: BTreeSet<&str> = inputs.iter().map(|s| s.as_str()).collect();
    let target_info = ctx.program.modules.get(target_module).expect("checked");
    let target_fid = *target_info.files.first().expect("declared module has a file");
    let target_file = ctx.program.file(target_fid);
    let carried_fids: Vec<crate::span::FileId> = inputs
        .iter()
        .filter(|m| *m != target_module)
        .flat_map(|m| ctx.program.modules.get(m).map(|mi| mi.files.clone()).unwrap_or_default())
        .collect();
    let carried_set: BTreeSet<crate::span::FileId> = carried_fids.iter().copied().collect();

    // Target module directive: new name and union of exports.
    let (_, decl, list) = module_directive(ctx.program, target_module).expect("checked");
    if target_module != new_name {
        if let Some(atom) = decl.term.args().first() {
            if let Some(s) = atom.span() {
                ctx.edits.push(TextEdit::new(s, quote_atom(new_name)));
            }
        }
    }
    {
        let existing: BTreeSet<(String, usize)> = target_info.exports_set().into_iter().collect();
        let mut extra: Vec<String> = Vec::new();
        for m in inputs.iter().filter(|m| *m != target_module) {
            if let Some(mi) = ctx.program.modules.get(m) {
                for (n, a) in &mi.exports {
                    if !existing.contains(&(n.clone(), *a))
                        && !extra.contains(&pi_text(n, *a))
                    {
                        extra.push(pi_text(n, *a));
                    }
                }
            }
        }
        if !extra.is_empty() {
            if let Some(e) = list_append_edit(list, &extra) {
                ctx.edits.push(e);
            }
        }
    }
    // Intra-group imports in the target file disappear.
    for m in inputs {
        for (d, _) in use_module_directives(target_file, m) {
            ctx.edits.push(TextEdit::new(
                item_delete_span(&target_file.text, d.span),
                String::new(),
            ));
        }
    }

    // Other inputs' files are deleted; their items ride along into the
    // target, minus module directives, intra-group imports, and dropped
    // duplicate definitions.
    let qualifier_fixups = |text: &str, c: &crate::syntax::ast::ClauseSrc| -> Vec<TextEdit> {
        let mut edits = Vec::new();
        c.body.walk(&mut |g| {
            if let Goal::Call {
                term,
                qualifier: Some(q),
                span: Some(gs),
            } = g
            {
                if input_set.contains(q.as_str()) && q != new_name {
                    if let Some(ts) = term.span() {
                        if let Some(qs) = qualifier_span(text, *gs, ts.start) {
                            edits.push(TextEdit::new(qs, quote_atom(new_name)));
                        }
                    }
                }
            }
        });
        edits
    };
    let mut blob = String::new();
    for fid in &carried_fids {
        let f = ctx.program.file(*fid);
        for item in &f.items {
            match item {
                Item::Directive(d) => {
                    match &d.kind {
                        DirectiveKind::Module { .. } => continue,
                        DirectiveKind::UseModule { module, .. }
                            if input_set.contains(module.as_str()) =>
                        {
                            continue
                        }
                        DirectiveKind::Mode { term } => {
                            if let Some((n, a)) = term.indicator() {
                                if dropped.contains(&PredId::new(&f.module, n, a)) {
                                    continue;
                                }
                            }
                        }
                        _ => {}
                    }
                    blob.push('\n');
                    blob.push_str(&f.text[d.span.start..d.span.end]);
                    blob.push('\n');
                }
                Item::Clause(c) => {
                    if let Some((n, a)) = c.head.indicator() {
                        if dropped.contains(&PredId::new(&f.module, n, a)) {
                            continue;
                        }
                    }
                    let mut local: Vec<TextEdit> = qualifier_fixups(&f.text, c)
                        .into_iter()
                        .map(|e| {
                            TextEdit::new(
                                SourceSpan::new(e.span.file, e.span.start - c.span.start, e.span.end - c.span.start),
                                e.replacement,
                            )
                        })
                        .collect();
                    local.sort_by_key(|e| e.span.start);
                    blob.push('\n');
                    blob.push_str(&apply_to_text(&c.raw, &local));
                    blob.push('\n');
                }
            }
        }
        ctx.deletes.insert(ctx.program.path(*fid).to_string());
    }
    if !blob.is_empty() {
        let (at, lead) = eof_insertion(&target_file.text);
        ctx.edits.push(TextEdit::new(
            SourceSpan::new(target_fid, at, at),
            format!("{lead}{blob}"),
        ));
    }

    // Dropped duplicates defined in the target file itself cannot occur:
    // the keeper rule prefers the target module. Qualified calls in
    // surviving files move to the new module name.
    for pred in ctx.program.all_preds() {
        for c in &pred.clauses {
            if c.is_dcg || carried_set.contains(&c.span.file) {
                continue;
            }
            let mut sites: Vec<(SourceSpan, usize)> = Vec::new();
            c.body.walk(&mut |g| {
                if let Goal::Call {
                    term,
                    qualifier: Some(q),
                    span: Some(gs),
                } = g
                {
                    if input_set.contains(q.as_str()) && q != new_name {
                        if let Some(ts) = term.span() {
                            sites.push((*gs, ts.start));
                        }
                    }
                }
            });
            for (gs, ts) in sites {
                let text = ctx.text(gs.file);
                if let Some(qs) = qualifier_span(text, gs, ts) {
                    ctx.edits.push(TextEdit::new(qs, quote_atom(new_name)));
                }
            }
        }
    }
    // External importers point at the merged module.
    for f in &ctx.program.files {
        if carried_set.contains(&f.file) || f.file == target_fid {
            continue;
        }
        for m in inputs.iter().filter(|m| *m != new_name) {
            for (d, _) in use_module_directives(f, m) {
                if let Some(arg0) = d.term.args().first() {
                    let mut done = false;
                    arg0.walk(&mut |t| {
                        if done {
                            return;
                        }
                        if let Term::Atom { text, span } = t {
                            if text == m {
                                if let Some(s) = span {
                                    ctx.edits.push(TextEdit::new(*s, quote_atom(new_name)));
                                    done = true;
                                }
                            }
                        }
                    });
                }
            }
        }
    }
    if !dropped.is_empty() {
        ctx.note(format!(
            "kept one copy of {} duplicate definition(s)",
            dropped.len()
        ));
    }
}

/// Splits a module into parts along a user partition of its predicates,
/// generating the cross-part exports and imports the split induces.
pub(super) fn split_module(
    ctx: &mut Ctx,
    module: &str,
    parts: &[(String, Vec<(String, usize)>)],
) {
    let mi = match ctx.program.modules.get(module) {
        Some(mi) => mi,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("no module named {module}"));
            return;
        }
    };
    if module_directive(ctx.program, module).is_none() {
        ctx.block(
            IssueCode::NotSupportedPattern,
            None,
            format!("module {module} has no declaration"),
        );
        return;
    }
    if parts.is_empty() {
        ctx.block(IssueCode::BadParameter, None, "no parts given");
        return;
    }
    {
        let mut seen = BTreeSet::new();
        for (name, _) in parts {
            if !seen.insert(name.clone()) {
                ctx.block(IssueCode::BadParameter, None, format!("part {name} listed twice"));
            }
            if ctx.program.modules.contains_key(name) {
                ctx.block(
                    IssueCode::NameClash,
                    None,
                    format!("part name {name} collides with an existing module"),
                );
            }
        }
    }
    if let Some(span) = dcg_mentions_module(ctx.program, module) {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(span),
            "a grammar rule names this module in a qualified call",
        );
    }
    if ctx.blocked() {
        return;
    }

    // The partition must assign every predicate exactly once.
    let mut part_of: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for (idx, (name, pis)) in parts.iter().enumerate() {
        for key in pis {
            if !mi.preds.contains_key(key) || mi.preds[key].clauses.is_empty() && mi.preds[key].mode_directive.is_none() && !mi.preds[key].is_dynamic {
                ctx.block(
                    IssueCode::BadParameter,
                    None,
                    format!("{}/{} is not defined in {module}", key.0, key.1),
                );
            }
            if part_of.insert(key.clone(), idx).is_some() {
                ctx.block(
                    IssueCode::BadParameter,
                    None,
                    format!("{}/{} assigned to more than one part ({name})", key.0, key.1),
                );
            }
        }
    }
    for (key, p) in &mi.preds {
        if (!p.clauses.is_empty() || p.is_dynamic) && !part_of.contains_key(key) {
            ctx.block(
                IssueCode::BadParameter,
                None,
                format!("{}/{} is not assigned to any part", key.0, key.1),
            );
        }
    }
    if ctx.blocked() {
        return;
    }

    // Cross-part edges drive generated exports/imports and the cycle
    // check.
    let graph = CallGraph::build(ctx.program);
    let mut cross_exports: BTreeMap<usize, BTreeSet<(String, usize)>> = BTreeMap::new();
    let mut cross_imports: BTreeMap<(usize, usize), BTreeSet<(String, usize)>> = BTreeMap::new();
    let mut part_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (caller, callees) in &graph.out {
        if caller.module != module {
            continue;
        }
        let pc = match part_of.get(&(caller.name.clone(), caller.arity)) {
            Some(p) => *p,
            None => continue,
        };
        for callee in callees {
            if callee.module != module {
                continue;
            }
            let key = (callee.name.clone(), callee.arity);
            let pk = match part_of.get(&key) {
                Some(p) => *p,
                None => continue,
            };
            if pc != pk {
                cross_exports.entry(pk).or_default().insert(key.clone());
                cross_imports.entry((pc, pk)).or_default().insert(key);
                part_edges.insert((pc, pk));
            }
        }
    }
    // Cycle detection over the part digraph.
    let cyclic = {
        let n = parts.len();
        let mut color = vec![0u8; n];
        fn dfs(v: usize, color: &mut [u8], edges: &BTreeSet<(usize, usize)>, n: usize) -> bool {
            color[v] = 1;
            for w in 0..n {
                if edges.contains(&(v, w)) {
                    if color[w] == 1 {
                        return true;
                    }
                    if color[w] == 0 && dfs(w, color, edges, n) {
                        return true;
                    }
                }
            }
            color[v] = 2;
            false
        }
        (0..n).any(|v| color[v] == 0 && dfs(v, &mut color, &part_edges, n))
    };
    if cyclic {
        ctx.block(
            IssueCode::CyclicSplit,
            None,
            "the chosen parts depend on each other cyclically",
        );
    } else {
        ctx.note("part dependency graph is acyclic".to_string());
    }

    let src_files: Vec<&SourceFile> = mi.files.iter().map(|f| ctx.program.file(*f)).collect();
    let src_path = ctx.program.path(*mi.files.first().expect("declared"));
    let dir = match src_path.rfind('/') {
        Some(i) => &src_path[..=i],
        None => "",
    };
    let export_set: BTreeSet<(String, usize)> = mi.exports_set().into_iter().collect();

    let part_of_name = |n: &str, a: usize| -> Option<usize> {
        part_of.get(&(n.to_string(), a)).copied()
    };
    let qualifier_fixups = |text: &str, c: &crate::syntax::ast::ClauseSrc| -> Vec<TextEdit> {
        let mut edits = Vec::new();
        c.body.walk(&mut |g| {
            if let Goal::Call {
                term,
                qualifier: Some(q),
                span: Some(gs),
            } = g
            {
                if q == module {
                    if let Some((n, a)) = term.indicator() {
                        if let Some(pk) = part_of_name(n, a) {
                            if let Some(ts) = term.span() {
                                if let Some(qs) = qualifier_span(text, *gs, ts.start) {
                                    edits.push(TextEdit::new(qs, quote_atom(&parts[pk].0)));
                                }
                            }
                        }
                    }
                }
            }
        });
        edits
    };

    let mut other_directive_notes = 0usize;
    for (idx, (pname, _)) in parts.iter().enumerate() {
        // Export list: original exports in declaration order, then
        // cross-part callees.
        let mut exports: Vec<String> = Vec::new();
        for (n, a) in &mi.exports {
            if part_of_name(n, *a) == Some(idx) {
                exports.push(pi_text(n, *a));
            }
        }
        if let Some(extra) = cross_exports.get(&idx) {
            for (n, a) in extra {
                if !export_set.contains(&(n.clone(), *a)) {
                    exports.push(pi_text(n, *a));
                }
            }
        }
        let mut content = format!(
            ":- module({}, [{}]).\n",
            quote_atom(pname),
            exports.join(", ")
        );
        // Original imports ride along to every part; cross-part imports
        // are generated.
        for f in &src_files {
            for item in &f.items {
                if let Item::Directive(d) = item {
                    match &d.kind {
                        DirectiveKind::UseModule { .. } | DirectiveKind::Op { .. } => {
                            content.push_str(&f.text[d.span.start..d.span.end]);
                            content.push('\n');
                        }
                        _ => {}
                    }
                }
            }
        }
        for ((pc, pk), pis) in &cross_imports {
            if *pc == idx {
                let rendered: Vec<String> = pis.iter().map(|(n, a)| pi_text(n, *a)).collect();
                content.push_str(&format!(
                    ":- use_module({}, [{}]).\n",
                    quote_atom(&parts[*pk].0),
                    rendered.join(", ")
                ));
            }
        }
        // Pi-bearing directives split per part; mode directives follow
        // their predicate; clauses keep source order.
        for f in &src_files {
            for item in &f.items {
                match item {
                    Item::Directive(d) => match &d.kind {
                        DirectiveKind::Other { term } => {
                            let pis = pi_pairs_in(term);
                            if pis.is_empty() {
                                if idx == 0 {
                                    content.push('\n');
                                    content.push_str(&f.text[d.span.start..d.span.end]);
                                    content.push('\n');
                                    other_directive_notes += 1;
                                }
                                continue;
                            }
                            let mine: Vec<String> = pis
                                .iter()
                                .filter(|(_, n, a)| part_of_name(n, *a) == Some(idx))
                                .map(|(_, n, a)| pi_text(n, *a))
                                .collect();
                            if !mine.is_empty() {
                                let dname = term.indicator().map(|(n, _)| n.to_string());
                                if let Some(dname) = dname {
                                    content.push_str(&format!(
                                        ":- {}(({})).\n",
                                        quote_atom(&dname),
                                        mine.join(", ")
                                    ));
                                }
                            }
                        }
                        DirectiveKind::Mode { term } => {
                            if let Some((n, a)) = term.indicator() {
                                if part_of_name(n, a) == Some(idx) {
                                    content.push_str(&f.text[d.span.start..d.span.end]);
                                    content.push('\n');
                                }
                            }
                        }
                        _ => {}
                    },
                    Item::Clause(c) => {
                        let key = match c.head.indicator() {
                            Some((n, a)) => (n.to_string(), a),
                            None => continue,
                        };
                        if part_of.get(&key) != Some(&idx) {
                            continue;
                        }
                        let mut local: Vec<TextEdit> = qualifier_fixups(&f.text, c)
                            .into_iter()
                            .map(|e| {
                                TextEdit::new(
                                    SourceSpan::new(
                                        e.span.file,
                                        e.span.start - c.span.start,
                                        e.span.end - c.span.start,
                                    ),
                                    e.replacement,
                                )
                            })
                            .collect();
                        local.sort_by_key(|e| e.span.start);
                        content.push('\n');
                        content.push_str(&apply_to_text(&c.raw, &local));
                        content.push('\n');
                    }
                }
            }
        }
        ctx.creates.insert(format!("{dir}{pname}.pl"), content);
    }
    if other_directive_notes > 0 {
        ctx.note(format!(
            "{other_directive_notes} directive(s) without indicators went to part {}",
            parts[0].0
        ));
    }
    for f in &src_files {
        ctx.deletes.insert(ctx.program.path(f.file).to_string());
    }
    ctx.note("all original imports were carried to every part; prune unused ones separately".to_string());

    // External references: import directives split per part, qualified
    // calls repointed.
    let src_set: BTreeSet<crate::span::FileId> = mi.files.iter().copied().collect();
    for f in &ctx.program.files {
        if src_set.contains(&f.file) {
            continue;
        }
        for (d, list) in use_module_directives(f, module) {
            let replacement = match list {
                Some(list) => {
                    let mut per_part: BTreeMap<usize, Vec<String>> = BTreeMap::new();
                    for e in list_elements(list) {
                        if let Term::Compound { functor, args, .. } = e {
                            if functor == "/" && args.len() == 2 {
                                if let (Term::Atom { text, .. }, Term::Int { value, .. }) =
                                    (&args[0], &args[1])
                                {
                                    if *value >= 0 {
                                        if let Some(pk) = part_of_name(text, *value as usize) {
                                            per_part
                                                .entry(pk)
                                                .or_default()
                                                .push(pi_text(text, *value as usize));
                                        }
                                    }
                                }
                            }
                        }
                    }
                    per_part
                        .iter()
                        .map(|(pk, pis)| {
                            format!(
                                ":- use_module({}, [{}]).",
                                quote_atom(&parts[*pk].0),
                                pis.join(", ")
                            )
                        })
                        .collect::<Vec<_>>()
                        .join("\n")
                }
                None => parts
                    .iter()
                    .map(|(pname, _)| format!(":- use_module({}).", quote_atom(pname)))
                    .collect::<Vec<_>>()
                    .join("\n"),
            };
            if !replacement.is_empty() {
                ctx.edits.push(TextEdit::new(d.span, replacement));
            } else {
                ctx.edits
                    .push(TextEdit::new(item_delete_span(&f.text, d.span), String::new()));
            }
        }
    }
    for pred in ctx.program.all_preds() {
        for c in &pred.clauses {
            if c.is_dcg || src_set.contains(&c.span.file) {
                continue;
            }
            for e in qualifier_fixups(&ctx.program.file(c.span.file).text, c) {
                ctx.edits.push(e);
            }
        }
    }
}

/// Moves a predicate's definition to another module, repairing imports,
/// exports, and qualified references on both sides.
pub(super) fn move_predicate(ctx: &mut Ctx, pred: &PredId, dest: &str) {
    let p = match ctx.program.pred(pred) {
        Some(p) => p,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("{pred} is not defined"));
            return;
        }
    };
    if !ctx.program.modules.contains_key(dest) {
        ctx.block(
            IssueCode::TargetMissing,
            None,
            format!("destination module {dest} does not exist"),
        );
        return;
    }
    if dest == pred.module {
        ctx.block(
            IssueCode::Noop,
            None,
            format!("{pred} already lives in {dest}"),
        );
        return;
    }
    if p.clauses.iter().any(|c| c.is_dcg) {
        ctx.block(IssueCode::NotSupportedPattern, None, "grammar rules");
        return;
    }
    if let Some(span) = dcg_mentions_name(ctx.program, &pred.name) {
        ctx.block(
            IssueCode::NotSupportedPattern,
            Some(span),
            "a grammar rule mentions this name",
        );
        return;
    }
    let dest_file = match module_file(ctx.program, dest) {
        Some(f) => f,
        None => {
            ctx.block(IssueCode::TargetMissing, None, format!("module {dest} has no file"));
            return;
        }
    };

    // Destination namespace must be free (an import of this very
    // predicate is fine: it gets pruned).
    let mut prune_dest_import = false;
    if ctx
        .program
        .modules
        .get(dest)
        .is_some_and(|m| m.preds.get(&(pred.name.clone(), pred.arity)).is_some_and(|p| !p.clauses.is_empty()))
    {
        ctx.block(
            IssueCode::NameClash,
            None,
            format!("{dest} already defines {}/{}", pred.name, pred.arity),
        );
        return;
    }
    match ctx.program.resolve(dest, &pred.name, pred.arity) {
        Resolution::Pred(pid) if &pid == pred => prune_dest_import = true,
        Resolution::Undefined(..) => {}
        Resolution::Pred(_) | Resolution::Builtin(..) => {
            ctx.block(
                IssueCode::NameClash,
                None,
                format!("{}/{} is already visible in {dest}", pred.name, pred.arity),
            );
            return;
        }
    }

    // Body callees must keep resolving from the destination.
    let mut adds = ImportAdds::new();
    let mut exposed: Vec<(String, (String, usize))> = Vec::new();
    for c in &p.clauses {
        let mut conflict: Option<String> = None;
        c.body.walk(&mut |g| {
            if conflict.is_some() {
                return;
            }
            if let Goal::Call {
                term,
                qualifier: None,
                ..
            } = g
            {
                if let Some((n, a)) = term.indicator() {
                    if let Resolution::Pred(c_pid) =
                        ctx.program.resolve(&pred.module, n, a)
                    {
                        if &c_pid == pred || c_pid.module == dest {
                            return;
                        }
                        match ctx.program.resolve(dest, n, a) {
                            Resolution::Pred(d_pid) if d_pid == c_pid => {}
                            Resolution::Undefined(..) => {
                                adds.entry((dest.to_string(), c_pid.module.clone()))
                                    .or_default()
                                    .insert((n.to_string(), a));
                                if !is_exported(ctx, &c_pid.module, n, a) {
                                    exposed.push((c_pid.module.clone(), (n.to_string(), a)));
                                }
                            }
                            _ => {
                                conflict = Some(format!(
                                    "body callee {n}/{a} resolves to a different definition in {dest}"
                                ));
                            }
                        }
                    }
                }
            }
        });
        if let Some(msg) = conflict {
            ctx.block(IssueCode::NameClash, Some(c.span), msg);
            return;
        }
    }
    let mut home_export_adds: Vec<(String, usize)> = Vec::new();
    for (m, (n, a)) in &exposed {
        if m == &pred.module {
            home_export_adds.push((n.clone(), *a));
        } else {
            add_exports(ctx, m, &[(n.clone(), *a)]);
        }
        ctx.note(format!(
            "exported previously private {m}:{n}/{a} so the moved predicate keeps calling it"
        ));
    }

    // Move the text: delete at home, append at destination.
    let mut moved = String::new();
    if let Some(ms) = p.mode_directive {
        let text = ctx.text(ms.file);
        moved.push('\n');
        moved.push_str(&text[ms.start..ms.end]);
        moved.push('\n');
        ctx.edits
            .push(TextEdit::new(item_delete_span(text, ms), String::new()));
    }
    for c in &p.clauses {
        let text = ctx.text(c.span.file);
        // Qualified self-recursion would point at the old module.
        let mut local: Vec<TextEdit> = Vec::new();
        c.body.walk(&mut |g| {
            if let Goal::Call {
                term,
                qualifier: Some(q),
                span: Some(gs),
            } = g
            {
                if q == &pred.module && term.indicator() == Some((&pred.name, pred.arity)) {
                    if let Some(ts) = term.span() {
                        if let Some(qs) = qualifier_span(text, *gs, ts.start) {
                            local.push(TextEdit::new(
                                SourceSpan::new(qs.file, qs.start - c.span.start, qs.end - c.span.start),
                                quote_atom(dest),
                            ));
                        }
                    }
                }
            }
        });
        local.sort_by_key(|e| e.span.start);
        moved.push('\n');
        moved.push_str(&apply_to_text(&c.raw, &local));
        moved.push('\n');
        ctx.edits
            .push(TextEdit::new(item_delete_span(text, c.span), String::new()));
    }
    let (at, lead) = eof_insertion(&dest_file.text);
    ctx.edits.push(TextEdit::new(
        SourceSpan::new(dest_file.file, at, at),
        format!("{lead}{moved}"),
    ));

    let was_exported = is_exported(ctx, &pred.module, &pred.name, pred.arity);
    let home_removal = if was_exported {
        BTreeSet::from([(pred.name.clone(), pred.arity)])
    } else {
        BTreeSet::new()
    };
    if !home_removal.is_empty() && !home_export_adds.is_empty() {
        rewrite_exports(ctx, &pred.module, &home_removal, &home_export_adds);
    } else if !home_removal.is_empty() {
        if let Some((file, _, list)) = module_directive(ctx.program, &pred.module) {
            let indices = pi_indices(list, &home_removal);
            if !indices.is_empty() {
                let text = ctx.text(file);
                if let Some(e) = list_remove_edit(text, list, &indices) {
                    ctx.edits.push(e);
                }
            }
        }
    } else if !home_export_adds.is_empty() {
        add_exports(ctx, &pred.module, &home_export_adds);
    }

    // Callers: everyone who called it needs the new visibility.
    let sites = call_sites_of(ctx.program, pred);
    let mut caller_modules: BTreeSet<String> = BTreeSet::new();
    for occ in &sites {
        caller_modules.insert(occ.caller.module.clone());
        if occ.qualifier == Some(pred.module.as_str()) {
            let text = ctx.text(occ.file);
            let term_start = occ.term.span().expect("parsed").start;
            if let Some(qs) = qualifier_span(text, occ.goal_span, term_start) {
                ctx.edits.push(TextEdit::new(qs, quote_atom(dest)));
            }
        }
    }
    let target = BTreeSet::from([(pred.name.clone(), pred.arity)]);
    for f in &ctx.program.files {
        for (_, list) in use_module_directives(f, &pred.module) {
            if let Some(list) = list {
                let indices = pi_indices(list, &target);
                if !indices.is_empty() {
                    if !prune_dest_import && f.module == dest {
                        // Shouldn't happen: prune_dest_import covers it.
                    }
                    if let Some(e) = list_remove_edit(&f.text, list, &indices) {
                        ctx.edits.push(e);
                    }
                    if f.module != dest {
                        adds.entry((f.module.clone(), dest.to_string()))
                            .or_default()
                            .insert((pred.name.clone(), pred.arity));
                    }
                }
            }
        }
        if f.module != dest && f.module != pred.module && has_blanket_import(ctx, &f.module, &pred.module) {
            // A blanket import no longer covers the moved predicate.
            if caller_modules.contains(&f.module) {
                adds.entry((f.module.clone(), dest.to_string()))
                    .or_default()
                    .insert((pred.name.clone(), pred.arity));
                ctx.note(format!(
                    "{} imported {} wholesale; it now imports {}/{} from {dest} explicitly",
                    f.module, pred.module, pred.name, pred.arity
                ));
            }
        }
    }
    if caller_modules.contains(&pred.module) {
        adds.entry((pred.module.clone(), dest.to_string()))
            .or_default()
            .insert((pred.name.clone(), pred.arity));
    }
    emit_import_adds(ctx, adds);
    let external_caller = caller_modules.iter().any(|m| m != dest);
    if was_exported || external_caller {
        add_exports(ctx, dest, &[(pred.name.clone(), pred.arity)]);
    }
}

#[cfg(test)]
mod tests {
    use super::super::{plan, DeadScope, DupStrategy, RefactoringRequest, Status};
    use crate::edit::{predicted, Workspace};
    use crate::model::{load_program, Config, PredId, Program};

    fn program(files: &[(&str, &str)]) -> Program {
        let files: Vec<(String, String)> = files
            .iter()
            .map(|(p, t)| (p.to_string(), t.to_string()))
            .collect();
        load_program(&files, None, &Config::default())
    }

    /// Plans, applies, and returns the full resulting workspace
    /// (untouched files included, deleted files absent).
    fn apply_plan(p: &Program, req: &RefactoringRequest) -> Vec<(String, String)> {
        let plan = plan(p, req);
        assert_eq!(
            plan.report.status,
            Status::Ok,
            "unexpected block: {:?}",
            plan.report.reasons
        );
        let ws = Workspace::from_program(p);
        let delta = predicted(&plan.script, &ws).expect("fresh snapshot");
        let mut files: std::collections::BTreeMap<String, String> = ws
            .files
            .iter()
            .map(|(path, snap)| (path.clone(), snap.text.clone()))
            .collect();
        for (path, text) in delta {
            match text {
                Some(t) => {
                    files.insert(path, t);
                }
                None => {
                    files.remove(&path);
                }
            }
        }
        files.into_iter().collect()
    }

    fn text_of<'a>(out: &'a [(String, String)], path: &str) -> &'a str {
        &out.iter().find(|(p, _)| p == path).unwrap_or_else(|| panic!("{path} missing: {:?}", out.iter().map(|(p, _)| p).collect::<Vec<_>>())).1
    }

    fn reload(files: Vec<(String, String)>) -> Program {
        load_program(&files, None, &Config::default())
    }

    #[test]
    fn qualification_becomes_import() {
        let a = ":- module(a, [go/0]).\ngo :- b:p(1).\n";
        let b = ":- module(b, []).\np(_).\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let out = apply_plan(&p, &RefactoringRequest::EliminateQualification);
        let at = text_of(&out, "a.pl");
        let bt = text_of(&out, "b.pl");
        assert!(at.contains("go :- p(1)."), "{at}");
        assert!(at.contains(":- use_module(b, [p/1])."), "{at}");
        assert!(bt.contains(":- module(b, [p/1])."), "{bt}");
        let re = reload(out);
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
    }

    #[test]
    fn conflicting_import_site_stays() {
        let a = ":- module(a, [go/0]).\n:- use_module(c, [p/1]).\ngo :- b:p(1), p(2).\n";
        let b = ":- module(b, [p/1]).\np(_).\n";
        let c = ":- module(c, [p/1]).\np(_).\n";
        let p = program(&[("a.pl", a), ("b.pl", b), ("c.pl", c)]);
        let planned = plan(&p, &RefactoringRequest::EliminateQualification);
        // The conflict is reported but does not block the empty remainder.
        assert_eq!(planned.report.status, Status::Ok);
        assert!(planned
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::ConflictingImport));
        assert!(planned.script.edits.is_empty(), "{:?}", planned.script.edits);
    }

    #[test]
    fn qualified_operator_goal_unwraps() {
        let a = ":- module(a, [go/2]).\ngo(X, Y) :- b:(X = Y).\n";
        let b = ":- module(b, []).\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let out = apply_plan(&p, &RefactoringRequest::EliminateQualification);
        let at = text_of(&out, "a.pl");
        assert!(at.contains("go(X, Y) :- X = Y."), "{at}");
        let re = reload(out);
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
    }

    #[test]
    fn hide_unused_export() {
        let a = ":- module(a, [used/0, unused/0]).\nused.\nunused.\n";
        let b = ":- module(b, [go/0]).\n:- use_module(a, [used/0]).\ngo :- used.\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let out = apply_plan(&p, &RefactoringRequest::HidePredicates);
        let at = text_of(&out, "a.pl");
        assert!(at.contains(":- module(a, [used/0])."), "{at}");
    }

    #[test]
    fn remove_dead_deletes_clauses_and_imports() {
        let a = ":- module(a, [go/0]).\n:- use_module(b, [alive/0, corpse/0]).\ngo :- alive.\n";
        let b = ":- module(b, [alive/0, corpse/0]).\nalive.\ncorpse :- helper.\nhelper.\n";
        let mut config = Config::default();
        config.entry_points = vec![("a".to_string(), "go".to_string(), 0)];
        let files = vec![("a.pl".to_string(), a.to_string()), ("b.pl".to_string(), b.to_string())];
        let p = load_program(&files, None, &config);
        let out = apply_plan(
            &p,
            &RefactoringRequest::RemoveDead {
                scope: DeadScope::System,
                force: false,
            },
        );
        let at = text_of(&out, "a.pl");
        let bt = text_of(&out, "b.pl");
        assert!(!bt.contains("corpse"), "{bt}");
        assert!(!bt.contains("helper"), "{bt}");
        assert!(at.contains(":- use_module(b, [alive/0])."), "{at}");
        assert!(bt.contains("alive."), "{bt}");
        let re = reload(out);
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
    }

    #[test]
    fn keep_first_duplicate_redirects_importer() {
        let a = ":- module(a, [mem/2]).\nmem(X, [X|_]).\nmem(X, [_|T]) :- mem(X, T).\n";
        let b = ":- module(b, [mem/2]).\nmem(X, [X|_]).\nmem(X, [_|T]) :- mem(X, T).\n";
        let c = ":- module(c, [go/1]).\n:- use_module(b, [mem/2]).\ngo(X) :- mem(X, [1,2]).\n";
        let p = program(&[("a.pl", a), ("b.pl", b), ("c.pl", c)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::RemoveDuplicates {
                pair: (PredId::new("a", "mem", 2), PredId::new("b", "mem", 2)),
                strategy: DupStrategy::KeepFirst,
            },
        );
        let bt = text_of(&out, "b.pl");
        let ct = text_of(&out, "c.pl");
        assert!(!bt.contains("mem(X, [X|_])"), "{bt}");
        assert!(bt.contains(":- module(b, [])."), "{bt}");
        assert!(ct.contains(":- use_module(b, []).") || !ct.contains("use_module(b"), "{ct}");
        assert!(ct.contains(":- use_module(a, [mem/2])."), "{ct}");
        let re = reload(out);
        assert!(re.pred(&PredId::new("a", "mem", 2)).is_some());
        assert!(re.pred(&PredId::new("b", "mem", 2)).is_none());
    }

    #[test]
    fn extract_duplicates_to_new_module() {
        let a = ":- module(a, [go/1, mem/2]).\nmem(X, [X|_]).\nmem(X, [_|T]) :- mem(X, T).\ngo(X) :- mem(X, [1]).\n";
        let b = ":- module(b, [run/1, mem/2]).\nmem(X, [X|_]).\nmem(X, [_|T]) :- mem(X, T).\nrun(X) :- mem(X, [2]).\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::RemoveDuplicates {
                pair: (PredId::new("a", "mem", 2), PredId::new("b", "mem", 2)),
                strategy: DupStrategy::ExtractToNewModule("lists_util".to_string()),
            },
        );
        let lu = text_of(&out, "lists_util.pl");
        assert!(lu.contains(":- module(lists_util, [mem/2])."), "{lu}");
        assert!(lu.contains("mem(X, [X|_])."), "{lu}");
        let at = text_of(&out, "a.pl");
        let bt = text_of(&out, "b.pl");
        assert!(at.contains(":- use_module(lists_util, [mem/2])."), "{at}");
        assert!(bt.contains(":- use_module(lists_util, [mem/2])."), "{bt}");
        assert!(!at.contains("mem(X, [X|_])"), "{at}");
        let re = reload(out);
        assert!(re.pred(&PredId::new("lists_util", "mem", 2)).is_some());
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
    }

    #[test]
    fn non_duplicate_pair_blocked() {
        let src = "p(a).\nq(b).\n";
        let p = program(&[("m.pl", src)]);
        let planned = plan(
            &p,
            &RefactoringRequest::RemoveDuplicates {
                pair: (PredId::user("p", 1), PredId::user("q", 1)),
                strategy: DupStrategy::KeepFirst,
            },
        );
        assert_eq!(planned.report.status, Status::Blocked);
    }

    #[test]
    fn rename_predicate_everywhere() {
        let a = ":- module(a, [make_reader/3]).\n:- mode(make_reader(+, -, -)).\nmake_reader(F, S, R) :- open(F, read, S), init(S, R).\ninit(_, r).\n";
        let b = ":- module(b, [go/1]).\n:- use_module(a, [make_reader/3]).\ngo(R) :- make_reader(f, _, R).\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::RenamePredicate {
                pred: PredId::new("a", "make_reader", 3),
                new_name: "reader_init".to_string(),
            },
        );
        let at = text_of(&out, "a.pl");
        let bt = text_of(&out, "b.pl");
        assert!(at.contains(":- module(a, [reader_init/3])."), "{at}");
        assert!(at.contains(":- mode(reader_init(+, -, -))."), "{at}");
        assert!(at.contains("reader_init(F, S, R) :-"), "{at}");
        assert!(bt.contains(":- use_module(a, [reader_init/3])."), "{bt}");
        assert!(bt.contains("go(R) :- reader_init(f, _, R)."), "{bt}");
        assert!(!at.contains("make_reader"), "{at}");
    }

    #[test]
    fn rename_round_trip_is_byte_identical() {
        let a = ":- module(a, [p/1]).\np(X) :- q(X).\nq(_).\n";
        let b = ":- module(b, [go/0]).\n:- use_module(a, [p/1]).\ngo :- p(1).\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let out1 = apply_plan(
            &p,
            &RefactoringRequest::RenamePredicate {
                pred: PredId::new("a", "p", 1),
                new_name: "renamed".to_string(),
            },
        );
        let p2 = reload(out1);
        let out2 = apply_plan(
            &p2,
            &RefactoringRequest::RenamePredicate {
                pred: PredId::new("a", "renamed", 1),
                new_name: "p".to_string(),
            },
        );
        assert_eq!(text_of(&out2, "a.pl"), a);
        assert_eq!(text_of(&out2, "b.pl"), b);
    }

    #[test]
    fn rename_clash_blocked() {
        let src = "p(a).\nq(a).\n";
        let p = program(&[("m.pl", src)]);
        let planned = plan(
            &p,
            &RefactoringRequest::RenamePredicate {
                pred: PredId::user("p", 1),
                new_name: "q".to_string(),
            },
        );
        assert_eq!(planned.report.status, Status::Blocked);
        assert!(planned
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::NameClash));
    }

    #[test]
    fn rename_module_updates_references_and_file() {
        let a = ":- module(store, [put/1]).\nput(_).\n";
        let b = ":- module(b, [go/0]).\n:- use_module(store, [put/1]).\ngo :- put(1), store:put(2).\n";
        let p = program(&[("store.pl", a), ("b.pl", b)]);
        let planned = plan(
            &p,
            &RefactoringRequest::RenameModule {
                module: "store".to_string(),
                new_name: "vault".to_string(),
            },
        );
        assert_eq!(planned.report.status, Status::Ok, "{:?}", planned.report.reasons);
        assert_eq!(planned.script.renames, vec![("store.pl".to_string(), "vault.pl".to_string())]);
        let ws = Workspace::from_program(&p);
        let out: Vec<(String, String)> = predicted(&planned.script, &ws)
            .expect("fresh")
            .into_iter()
            .filter_map(|(path, text)| text.map(|t| (path, t)))
            .collect();
        let vt = text_of(&out, "vault.pl");
        let bt = text_of(&out, "b.pl");
        assert!(vt.contains(":- module(vault, [put/1])."), "{vt}");
        assert!(bt.contains(":- use_module(vault, [put/1])."), "{bt}");
        assert!(bt.contains("vault:put(2)"), "{bt}");
    }

    #[test]
    fn rename_functor_data_positions_only() {
        let src = "\
state(read(T, S, P)).
handle(X) :- tag(read(X, x, y)), read(X).
tag(_).
read(_).
";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::RenameFunctor {
                name: "read".to_string(),
                arity: 3,
                new_name: "reader".to_string(),
                occurrences: None,
            },
        );
        let text = &out[0].1;
        assert!(text.contains("state(reader(T, S, P))."), "{text}");
        assert!(text.contains("tag(reader(X, x, y))"), "{text}");
        // The read/1 call and definition are untouched.
        assert!(text.contains("read(X)."), "{text}");
        assert!(text.contains("read(_)."), "{text}");
    }

    #[test]
    fn rename_functor_occurrence_filter() {
        let src = "a(k(1)).\nb(k(2)).\nk(_).\n";
        let p = program(&[("m.pl", src)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::RenameFunctor {
                name: "k".to_string(),
                arity: 1,
                new_name: "key".to_string(),
                occurrences: Some(vec![1]),
            },
        );
        let text = &out[0].1;
        assert!(text.contains("a(k(1))."), "{text}");
        assert!(text.contains("b(key(2))."), "{text}");
    }

    #[test]
    fn rename_builtin_functor_blocked() {
        let p = program(&[("m.pl", "p(X) :- atom_length(X, _).\n")]);
        let planned = plan(
            &p,
            &RefactoringRequest::RenameFunctor {
                name: "atom_length".to_string(),
                arity: 2,
                new_name: "len".to_string(),
                occurrences: None,
            },
        );
        assert_eq!(planned.report.status, Status::Blocked);
        assert!(planned
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::BuiltinTarget));
    }

    #[test]
    fn merge_two_disjoint_modules() {
        let a = ":- module(a, [pa/0]).\npa :- b:helper.\n";
        let b = ":- module(b, [pb/0, helper/0]).\npb.\nhelper.\n";
        let c = ":- module(c, [go/0]).\n:- use_module(a, [pa/0]).\n:- use_module(b, [pb/0]).\ngo :- pa, pb.\n";
        let p = program(&[("a.pl", a), ("b.pl", b), ("c.pl", c)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::MergeModules {
                modules: vec!["a".to_string(), "b".to_string()],
                new_name: "ab".to_string(),
            },
        );
        assert!(out.iter().all(|(p, _)| p != "b.pl"), "b.pl must be deleted");
        let at = text_of(&out, "a.pl");
        let ct = text_of(&out, "c.pl");
        assert!(at.contains(":- module(ab, [pa/0, pb/0, helper/0])."), "{at}");
        assert!(at.contains("pb.\n"), "{at}");
        assert!(at.contains("helper.\n"), "{at}");
        assert!(at.contains("pa :- ab:helper."), "{at}");
        assert!(ct.contains(":- use_module(ab, [pa/0])."), "{ct}");
        assert!(ct.contains(":- use_module(ab, [pb/0])."), "{ct}");
        let re = reload(out);
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
        assert!(re.modules.contains_key("ab"));
        assert!(!re.modules.contains_key("a"));
    }

    #[test]
    fn merge_keeps_one_duplicate_copy() {
        let a = ":- module(a, [pa/0, mem/2]).\nmem(X, [X|_]).\nmem(X, [_|T]) :- mem(X, T).\npa :- mem(1, [1]).\n";
        let b = ":- module(b, [pb/0, mem/2]).\nmem(X, [X|_]).\nmem(X, [_|T]) :- mem(X, T).\npb :- mem(2, [2]).\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::MergeModules {
                modules: vec!["a".to_string(), "b".to_string()],
                new_name: "ab".to_string(),
            },
        );
        let at = text_of(&out, "a.pl");
        assert_eq!(at.matches("mem(X, [X|_]).").count(), 1, "{at}");
        let re = reload(out);
        assert_eq!(
            re.pred(&PredId::new("ab", "mem", 2)).map(|p| p.clauses.len()),
            Some(2)
        );
    }

    #[test]
    fn merge_conflicting_definitions_blocked() {
        let a = ":- module(a, [p/1]).\np(a).\n";
        let b = ":- module(b, [p/1]).\np(b).\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let planned = plan(
            &p,
            &RefactoringRequest::MergeModules {
                modules: vec!["a".to_string(), "b".to_string()],
                new_name: "ab".to_string(),
            },
        );
        assert_eq!(planned.report.status, Status::Blocked);
        assert!(planned
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::NameClash));
        assert!(planned.notes.iter().any(|n| n.contains("rename")));
    }

    #[test]
    fn split_module_two_parts() {
        let m = ":- module(m, [p/0, q/0]).\np :- helper.\nhelper.\nq.\n";
        let c = ":- module(c, [go/0]).\n:- use_module(m, [p/0, q/0]).\ngo :- p, q.\n";
        let p = program(&[("m.pl", m), ("c.pl", c)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::SplitModule {
                module: "m".to_string(),
                parts: vec![
                    (
                        "m1".to_string(),
                        vec![("p".to_string(), 0), ("helper".to_string(), 0)],
                    ),
                    ("m2".to_string(), vec![("q".to_string(), 0)]),
                ],
            },
        );
        assert!(out.iter().all(|(p, _)| p != "m.pl"), "m.pl must be deleted");
        let m1 = text_of(&out, "m1.pl");
        let m2 = text_of(&out, "m2.pl");
        let ct = text_of(&out, "c.pl");
        assert!(m1.contains(":- module(m1, [p/0])."), "{m1}");
        assert!(m1.contains("p :- helper."), "{m1}");
        assert!(m2.contains(":- module(m2, [q/0])."), "{m2}");
        assert!(ct.contains(":- use_module(m1, [p/0])."), "{ct}");
        assert!(ct.contains(":- use_module(m2, [q/0])."), "{ct}");
        let re = reload(out);
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
        assert!(re.modules.contains_key("m1") && re.modules.contains_key("m2"));
    }

    #[test]
    fn split_cross_part_call_generates_import() {
        let m = ":- module(m, [p/0]).\np :- util.\nutil.\n";
        let p = program(&[("m.pl", m)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::SplitModule {
                module: "m".to_string(),
                parts: vec![
                    ("core".to_string(), vec![("p".to_string(), 0)]),
                    ("base".to_string(), vec![("util".to_string(), 0)]),
                ],
            },
        );
        let core = text_of(&out, "core.pl");
        let base = text_of(&out, "base.pl");
        assert!(core.contains(":- use_module(base, [util/0])."), "{core}");
        assert!(base.contains(":- module(base, [util/0])."), "{base}");
        let re = reload(out);
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
    }

    #[test]
    fn split_mutual_recursion_warns_cyclic() {
        let m = ":- module(m, [even/1]).\neven(0).\neven(N) :- N > 0, M is N - 1, odd(M).\nodd(N) :- N > 0, M is N - 1, even(M).\n";
        let p = program(&[("m.pl", m)]);
        let planned = plan(
            &p,
            &RefactoringRequest::SplitModule {
                module: "m".to_string(),
                parts: vec![
                    ("evens".to_string(), vec![("even".to_string(), 1)]),
                    ("odds".to_string(), vec![("odd".to_string(), 1)]),
                ],
            },
        );
        // Cyclic split is a warning, not a blocker.
        assert_eq!(planned.report.status, Status::Ok, "{:?}", planned.report.reasons);
        assert!(planned
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::CyclicSplit));
        assert!(!planned.script.creates.is_empty());
    }

    #[test]
    fn split_partition_must_be_total() {
        let m = ":- module(m, [p/0]).\np.\nq.\n";
        let p = program(&[("m.pl", m)]);
        let planned = plan(
            &p,
            &RefactoringRequest::SplitModule {
                module: "m".to_string(),
                parts: vec![("m1".to_string(), vec![("p".to_string(), 0)])],
            },
        );
        assert_eq!(planned.report.status, Status::Blocked);
    }

    #[test]
    fn move_predicate_with_visibility_repair() {
        let a = ":- module(a, [helper/1]).\nhelper(X) :- local(X).\nlocal(_).\nother :- helper(1).\n";
        let u = ":- module(util, [misc/0]).\nmisc.\n";
        let b = ":- module(b, [go/0]).\n:- use_module(a, [helper/1]).\ngo :- helper(2).\n";
        let p = program(&[("a.pl", a), ("util.pl", u), ("b.pl", b)]);
        let out = apply_plan(
            &p,
            &RefactoringRequest::MovePredicate {
                pred: PredId::new("a", "helper", 1),
                dest: "util".to_string(),
            },
        );
        let at = text_of(&out, "a.pl");
        let ut = text_of(&out, "util.pl");
        let bt = text_of(&out, "b.pl");
        assert!(!at.contains("helper(X) :- local(X)."), "{at}");
        assert!(ut.contains("helper(X) :- local(X)."), "{ut}");
        // Destination imports the private callee, which gets exported.
        assert!(at.contains("local/1"), "{at}");
        assert!(ut.contains(":- use_module(a, [local/1])."), "{ut}");
        // Old module callers and importers repoint.
        assert!(at.contains(":- use_module(util, [helper/1])."), "{at}");
        assert!(bt.contains(":- use_module(util, [helper/1])."), "{bt}");
        assert!(ut.contains("helper/1"), "{ut}");
        let re = reload(out);
        assert!(re.warnings.iter().all(|w| !format!("{w}").contains("syntax")));
        assert!(re.pred(&PredId::new("util", "helper", 1)).is_some());
        assert!(re.pred(&PredId::new("a", "helper", 1)).is_none());
    }

    #[test]
    fn move_to_own_module_is_noop() {
        let a = ":- module(a, [p/0]).\np.\n";
        let p = program(&[("a.pl", a)]);
        let planned = plan(
            &p,
            &RefactoringRequest::MovePredicate {
                pred: PredId::new("a", "p", 0),
                dest: "a".to_string(),
            },
        );
        assert_eq!(planned.report.status, Status::Ok);
        assert!(planned.script.is_empty());
        assert!(planned
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::Noop));
    }

    #[test]
    fn move_clash_blocked() {
        let a = ":- module(a, [p/0]).\np.\n";
        let b = ":- module(b, [p/0]).\np.\n";
        let p = program(&[("a.pl", a), ("b.pl", b)]);
        let planned = plan(
            &p,
            &RefactoringRequest::MovePredicate {
                pred: PredId::new("a", "p", 0),
                dest: "b".to_string(),
            },
        );
        assert_eq!(planned.report.status, Status::Blocked);
        assert!(planned
            .report
            .reasons
            .iter()
            .any(|r| r.code == super::super::IssueCode::NameClash));
    }
}
