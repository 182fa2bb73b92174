//! Span surgery shared by the refactorings: argument-list rewrites,
//! export/import list edits, call-site enumeration, fresh-name checks.

use std::collections::BTreeSet;

use crate::edit::TextEdit;
use crate::model::{PredId, Program, Resolution, SourceFile};
use crate::span::{FileId, SourceSpan};
use crate::syntax::ast::{ClauseSrc, Directive, DirectiveKind, Goal, Item, Term};
use crate::syntax::ops::OpTable;
use crate::syntax::printer::{print_goal_inline, quote_atom};

/// Byte span of a compound's functor atom (or an atom term's own span).
/// Scans from the term start to the opening parenthesis, so it works
/// for quoted functors too. `None` for operator-notation terms, which
/// have no contiguous functor token to rewrite.
pub fn functor_span(text: &str, term: &Term) -> Option<SourceSpan> {
    match term {
        Term::Atom { span, .. } => *span,
        Term::Compound { args, span, .. } => {
            let span = (*span)?;
            let first_arg = args.first()?.span()?;
            if first_arg.start <= span.start {
                return None; // operator notation: an argument precedes the functor
            }
            let region = &text[span.start..first_arg.start];
            let paren = region.rfind('(')?;
            let mut end = span.start + paren;
            while end > span.start && text.as_bytes()[end - 1].is_ascii_whitespace() {
                end -= 1;
            }
            if end == span.start {
                return None;
            }
            Some(SourceSpan::new(span.file, span.start, end))
        }
        _ => None,
    }
}

/// `[first argument start, last argument end)` of a compound written in
/// functional notation.
pub fn arg_region(term: &Term) -> Option<SourceSpan> {
    if let Term::Compound { args, span, .. } = term {
        let first = args.first()?.span()?;
        let last = args.last()?.span()?;
        let outer = (*span)?;
        if first.start <= outer.start {
            return None;
        }
        return Some(SourceSpan::new(first.file, first.start, last.end));
    }
    None
}

/// Replaces a compound's whole argument region with the given texts
/// joined by `", "`. An empty list removes the parentheses, leaving the
/// bare (possibly re-quoted) functor atom.
pub fn rebuild_args(term: &Term, new_texts: &[String]) -> Option<TextEdit> {
    if new_texts.is_empty() {
        let (functor, span) = match term {
            Term::Compound { functor, span, .. } => (functor, (*span)?),
            _ => return None,
        };
        return Some(TextEdit::new(span, quote_atom(functor)));
    }
    let region = arg_region(term)?;
    Some(TextEdit::new(region, new_texts.join(", ")))
}

/// Per-argument replacement edits applying `perm` (1-based: the new
/// argument at position k+1 is the old argument `perm[k]`). Fixed
/// points produce no edit, so the identity permutation yields nothing.
pub fn permute_args_edits(text: &str, term: &Term, perm: &[usize]) -> Option<Vec<TextEdit>> {
    let args = term.args();
    if args.len() != perm.len() {
        return None;
    }
    let mut edits = Vec::new();
    for (k, &old_pos) in perm.iter().enumerate() {
        if old_pos == k + 1 {
            continue;
        }
        let dst = args[k].span()?;
        let src = args[old_pos - 1].span()?;
        edits.push(TextEdit::new(dst, text[src.start..src.end].to_string()));
    }
    Some(edits)
}

/// Source slice of a term.
pub fn term_text<'a>(text: &'a str, term: &Term) -> Option<&'a str> {
    let span = term.span()?;
    Some(&text[span.start..span.end])
}

/// Extends a clause's span over trailing blanks and one newline so that
/// deleting it does not leave an empty line behind.
pub fn item_delete_span(text: &str, span: SourceSpan) -> SourceSpan {
    let bytes = text.as_bytes();
    let mut end = span.end;
    while end < bytes.len() && (bytes[end] == b' ' || bytes[end] == b'\t') {
        end += 1;
    }
    if end < bytes.len() && bytes[end] == b'\r' {
        end += 1;
    }
    if end < bytes.len() && bytes[end] == b'\n' {
        end += 1;
    }
    SourceSpan::new(span.file, span.start, end)
}

/// Offset just past the newline that terminates the item at `span`.
pub fn insertion_point_after(text: &str, span: SourceSpan) -> usize {
    let bytes = text.as_bytes();
    let mut end = span.end;
    while end < bytes.len() && bytes[end] != b'\n' {
        end += 1;
    }
    if end < bytes.len() {
        end += 1;
    }
    end
}

/// Elements of a `[a, b, c]` list term, in order. Empty for `[]`.
pub fn list_elements(term: &Term) -> Vec<&Term> {
    let mut out = Vec::new();
    let mut cur = term;
    while let Term::Compound { functor, args, .. } = cur {
        if functor != "." || args.len() != 2 {
            break;
        }
        out.push(&args[0]);
        cur = &args[1];
    }
    out
}

/// Rewrites a bracket list, keeping elements whose index is not in
/// `remove` (source slices preserved). Removing everything leaves `[]`.
pub fn list_remove_edit(
    text: &str,
    list_term: &Term,
    remove: &BTreeSet<usize>,
) -> Option<TextEdit> {
    let elems = list_elements(list_term);
    if elems.is_empty() || remove.is_empty() {
        return None;
    }
    let kept: Vec<String> = elems
        .iter()
        .enumerate()
        .filter(|(i, _)| !remove.contains(i))
        .map(|(_, e)| term_text(text, e).unwrap_or_default().to_string())
        .collect();
    if kept.len() == elems.len() {
        return None;
    }
    if kept.is_empty() {
        return Some(TextEdit::new(list_term.span()?, "[]".to_string()));
    }
    let region = SourceSpan::new(
        elems.first()?.span()?.file,
        elems.first()?.span()?.start,
        elems.last()?.span()?.end,
    );
    Some(TextEdit::new(region, kept.join(", ")))
}

/// Appends rendered elements to a bracket list term.
pub fn list_append_edit(list_term: &Term, new_texts: &[String]) -> Option<TextEdit> {
    if new_texts.is_empty() {
        return None;
    }
    let span = list_term.span()?;
    match list_term {
        Term::Atom { text, .. } if text == "[]" => Some(TextEdit::new(
            span,
            format!("[{}]", new_texts.join(", ")),
        )),
        Term::Compound { .. } => {
            let insert = SourceSpan::new(span.file, span.end - 1, span.end - 1);
            Some(TextEdit::new(insert, format!(", {}", new_texts.join(", "))))
        }
        _ => None,
    }
}

/// All `Name/Arity` pairs appearing in a term, with the name atom.
pub fn pi_pairs_in(term: &Term) -> Vec<(&Term, String, usize)> {
    let mut out = Vec::new();
    term.walk(&mut |t| {
        if let Term::Compound { functor, args, .. } = t {
            if functor == "/" && args.len() == 2 {
                if let (Term::Atom { text, .. }, Term::Int { value, .. }) = (&args[0], &args[1]) {
                    if *value >= 0 {
                        out.push((&args[0], text.clone(), *value as usize));
                    }
                }
            }
        }
    });
    out
}

/// True when `name/arity` resolves to anything (predicate or built-in)
/// from inside `module`.
pub fn visible(program: &Program, module: &str, name: &str, arity: usize) -> bool {
    !matches!(
        program.resolve(module, name, arity),
        Resolution::Undefined(..)
    )
}

/// The `:- module(Name, Exports)` directive of a module, with the
/// export list term.
pub fn module_directive<'p>(
    program: &'p Program,
    module: &str,
) -> Option<(FileId, &'p Directive, &'p Term)> {
    for file in &program.files {
        if file.module != module {
            continue;
        }
        for item in &file.items {
            if let Item::Directive(d) = item {
                if let DirectiveKind::Module { name, .. } = &d.kind {
                    if name == module {
                        if let Some(list) = d.term.args().get(1) {
                            return Some((file.file, d, list));
                        }
                    }
                }
            }
        }
    }
    None
}

/// `use_module` directives in `file` importing from `from`, with the
/// import list term when one is present.
pub fn use_module_directives<'p>(
    file: &'p SourceFile,
    from: &str,
) -> Vec<(&'p Directive, Option<&'p Term>)> {
    let mut out = Vec::new();
    for item in &file.items {
        if let Item::Directive(d) = item {
            if let DirectiveKind::UseModule { module, imports } = &d.kind {
                if module == from {
                    let list = if imports.is_some() {
                        d.term.args().get(1)
                    } else {
                        None
                    };
                    out.push((d, list));
                }
            }
        }
    }
    out
}

/// Primary source file of a module (first file contributing to it).
pub fn module_file<'p>(program: &'p Program, module: &str) -> Option<&'p SourceFile> {
    program.files.iter().find(|f| f.module == module)
}

/// Where a new directive line can be inserted in a file: after the
/// module directive and any existing `use_module`s, else file start.
pub fn directive_insertion_point(file: &SourceFile) -> usize {
    let mut point = 0;
    for item in &file.items {
        match item {
            Item::Directive(d)
                if matches!(
                    d.kind,
                    DirectiveKind::Module { .. } | DirectiveKind::UseModule { .. }
                ) =>
            {
                point = insertion_point_after(&file.text, d.span);
            }
            _ => {}
        }
    }
    point
}

/// A direct call site of a predicate, with the callable term for
/// argument-level edits.
pub struct CallOccurrence<'p> {
    pub caller: PredId,
    pub file: FileId,
    pub qualifier: Option<&'p str>,
    pub term: &'p Term,
    /// Whole goal including any qualifier.
    pub goal_span: SourceSpan,
}

fn collect_goal_calls<'p>(
    goal: &'p Goal,
    caller: &PredId,
    file: FileId,
    out: &mut Vec<CallOccurrence<'p>>,
) {
    goal.walk(&mut |g| {
        if let Goal::Call {
            term,
            qualifier,
            span,
        } = g
        {
            if let Some(goal_span) = span.or_else(|| term.span()) {
                out.push(CallOccurrence {
                    caller: caller.clone(),
                    file,
                    qualifier: qualifier.as_deref(),
                    term,
                    goal_span,
                });
            }
        }
    });
}

/// Every direct body call site that resolves to `target`, in file/span
/// order.
pub fn call_sites_of<'p>(program: &'p Program, target: &PredId) -> Vec<CallOccurrence<'p>> {
    let mut all = Vec::new();
    for pred in program.all_preds() {
        for clause in &pred.clauses {
            if clause.is_dcg {
                continue;
            }
            collect_goal_calls(&clause.body, &pred.id, clause.span.file, &mut all);
        }
    }
    let mut out: Vec<CallOccurrence<'p>> = all
        .into_iter()
        .filter(|occ| {
            let (name, arity) = match occ.term.indicator() {
                Some(ia) => ia,
                None => return false,
            };
            match program.resolve_qualified(&occ.caller.module, occ.qualifier, &name, arity) {
                Resolution::Pred(pid) => &pid == target,
                _ => false,
            }
        })
        .collect();
    out.sort_by_key(|o| (o.goal_span.file.0, o.goal_span.start));
    out
}

/// Meta-argument positions that name `target` (exactly or at reduced
/// arity, i.e. partial application). These make argument-shape changes
/// unsafe.
pub fn meta_mentions(program: &Program, target: &PredId) -> Vec<SourceSpan> {
    let sites = crate::model::callgraph::collect_sites(program);
    let mut out = Vec::new();
    for call in &sites.calls {
        if call.kind != crate::model::callgraph::EdgeKind::Meta {
            continue;
        }
        if call.name == target.name && call.arity <= target.arity {
            if let Resolution::Pred(pid) = program.resolve_qualified(
                &call.caller.module,
                call.qualifier.as_deref(),
                &call.name,
                target.arity,
            ) {
                if &pid == target {
                    out.push(call.span);
                }
            }
        }
    }
    out.sort_by_key(|s| (s.file.0, s.start));
    out
}

/// Clauses of a predicate with their indices, skipping none.
pub fn clauses_of<'p>(program: &'p Program, pred: &PredId) -> Vec<(usize, &'p ClauseSrc)> {
    program
        .pred(pred)
        .map(|p| p.clauses.iter().enumerate().collect())
        .unwrap_or_default()
}

/// End-of-file insertion offset, guaranteeing a preceding newline.
pub fn eof_insertion(text: &str) -> (usize, &'static str) {
    if text.is_empty() || text.ends_with('\n') {
        (text.len(), "")
    } else {
        (text.len(), "\n")
    }
}

/// Source text of a goal, parenthesized when its top-level connective
/// binds looser than a comma, so the result can be spliced into a
/// conjunction or an if-then-else slot. Falls back to the printer when
/// the source slice cannot be reused (no span, or a qualified operator
/// goal whose parentheses the span does not cover).
pub fn goal_text_for_conj(text: &str, ops: &OpTable, goal: &Goal) -> String {
    let span = match goal.span() {
        Some(s) => s,
        None => return print_goal_inline(goal, ops, 999),
    };
    let slice = &text[span.start..span.end];
    let wrap = match goal {
        Goal::Disj { .. } | Goal::IfThenElse { .. } => true,
        Goal::Call {
            term, qualifier, ..
        } => match term.indicator() {
            Some((name, arity)) if arity > 0 => {
                let pr = ops.term_priority(name, arity);
                if qualifier.is_some() && pr > 200 {
                    // `m:(a = b)` — the slice stops before the closing
                    // parenthesis; reprint instead of splicing.
                    return print_goal_inline(goal, ops, 999);
                }
                pr >= 1000
            }
            _ => false,
        },
        _ => false,
    };
    if wrap {
        format!("({slice})")
    } else {
        slice.to_string()
    }
}

/// Joins goal texts into a conjunction, or `true` when empty.
pub fn conj_text(parts: &[String]) -> String {
    if parts.is_empty() {
        "true".to_string()
    } else {
        parts.join(", ")
    }
}

/// Edits deleting the given conjunct indices together with their
/// separating commas. `None` when every conjunct would be removed (the
/// caller replaces the whole region, typically with `true`) or when a
/// needed span is missing.
pub fn remove_conjuncts_edits(
    goals: &[&Goal],
    remove: &BTreeSet<usize>,
) -> Option<Vec<TextEdit>> {
    if remove.len() >= goals.len() {
        return None;
    }
    let mut edits = Vec::new();
    let mut i = 0;
    while i < goals.len() {
        if !remove.contains(&i) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < goals.len() && remove.contains(&(j + 1)) {
            j += 1;
        }
        let edit = if j + 1 < goals.len() {
            let a = goals[i].span()?;
            let b = goals[j + 1].span()?;
            TextEdit::new(SourceSpan::new(a.file, a.start, b.start), String::new())
        } else {
            // Run reaches the end; eat the comma before it instead.
            let prev = goals[i - 1].span()?;
            let last = goals[j].span()?;
            TextEdit::new(SourceSpan::new(prev.file, prev.end, last.end), String::new())
        };
        edits.push(edit);
        i = j + 1;
    }
    Some(edits)
}

/// Inserts `new_text` as the argument at 1-based `pos` of a callable
/// term written in functional notation. An atom grows an argument list.
pub fn insert_arg_edit(text: &str, term: &Term, pos: usize, new_text: &str) -> Option<TextEdit> {
    match term {
        Term::Atom { span, .. } => {
            if pos != 1 {
                return None;
            }
            let span = (*span)?;
            Some(TextEdit::new(
                SourceSpan::new(span.file, span.end, span.end),
                format!("({new_text})"),
            ))
        }
        Term::Compound { args, .. } => {
            functor_span(text, term)?; // rejects operator notation
            if pos == args.len() + 1 {
                let last = args.last()?.span()?;
                Some(TextEdit::new(
                    SourceSpan::new(last.file, last.end, last.end),
                    format!(", {new_text}"),
                ))
            } else {
                let at = args.get(pos.checked_sub(1)?)?.span()?;
                Some(TextEdit::new(
                    SourceSpan::new(at.file, at.start, at.start),
                    format!("{new_text}, "),
                ))
            }
        }
        _ => None,
    }
}

/// Deletes the argument at 1-based `pos` of a compound, collapsing an
/// arity-1 term to `bare`.
pub fn remove_arg_edit(term: &Term, pos: usize, bare: &str) -> Option<TextEdit> {
    let args = match term {
        Term::Compound { args, .. } => args,
        _ => return None,
    };
    let n = args.len();
    if pos == 0 || pos > n {
        return None;
    }
    if n == 1 {
        return Some(TextEdit::new(term.span()?, bare.to_string()));
    }
    if pos < n {
        let a = args[pos - 1].span()?;
        let b = args[pos].span()?;
        Some(TextEdit::new(
            SourceSpan::new(a.file, a.start, b.start),
            String::new(),
        ))
    } else {
        let prev = args[n - 2].span()?;
        let last = args[n - 1].span()?;
        Some(TextEdit::new(
            SourceSpan::new(prev.file, prev.end, last.end),
            String::new(),
        ))
    }
}

/// First of `base`, `base2`, `base3`, … not present in `used`.
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    let mut i = 2usize;
    loop {
        let cand = format!("{base}{i}");
        if !used.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Named variables of a clause, head and body together.
pub fn clause_var_names(c: &ClauseSrc) -> BTreeSet<String> {
    let mut names: BTreeSet<String> = c
        .head
        .var_occurrences()
        .iter()
        .map(|(n, _)| n.to_string())
        .collect();
    for (n, _) in c.body.var_occurrences() {
        names.insert(n.to_string());
    }
    names.remove("_");
    names
}

/// First grammar-rule clause mentioning `name` as a functor anywhere in
/// its head or body. Grammar rules call predicates at a shifted arity,
/// so rewrites keyed on name/arity cannot see through them; operations
/// that rewrite call sites block on such a mention instead of guessing.
pub fn dcg_mentions_name(program: &Program, name: &str) -> Option<SourceSpan> {
    fn term_mentions(t: &Term, name: &str) -> bool {
        let mut hit = false;
        t.walk(&mut |t| match t {
            Term::Atom { text, .. } if text == name => hit = true,
            Term::Compound { functor, .. } if functor == name => hit = true,
            _ => {}
        });
        hit
    }
    for pred in program.all_preds() {
        for c in pred.clauses.iter().filter(|c| c.is_dcg) {
            let mut hit = term_mentions(&c.head, name);
            c.body.walk(&mut |g| {
                if let Goal::Call { term, .. } = g {
                    if term_mentions(term, name) {
                        hit = true;
                    }
                }
            });
            if hit {
                return Some(c.span);
            }
        }
    }
    None
}

/// First grammar-rule clause containing a `module:_` qualified term.
pub fn dcg_mentions_module(program: &Program, module: &str) -> Option<SourceSpan> {
    fn term_mentions(t: &Term, module: &str) -> bool {
        let mut hit = false;
        t.walk(&mut |t| {
            if let Term::Compound { functor, args, .. } = t {
                if functor == ":" && args.len() == 2 && args[0].as_atom() == Some(module) {
                    hit = true;
                }
            }
        });
        hit
    }
    for pred in program.all_preds() {
        for c in pred.clauses.iter().filter(|c| c.is_dcg) {
            let mut hit = term_mentions(&c.head, module);
            c.body.walk(&mut |g| {
                if let Goal::Call { term, qualifier, .. } = g {
                    if qualifier.as_deref() == Some(module) || term_mentions(term, module) {
                        hit = true;
                    }
                }
            });
            if hit {
                return Some(c.span);
            }
        }
    }
    None
}

/// The argument term of a predicate's `:- mode(...)` directive, found
/// by the directive span recorded at load time. `None` when the modes
/// came from the sidecar declarations file.
pub fn mode_directive_term(program: &Program, span: SourceSpan) -> Option<&Term> {
    let file = program.file(span.file);
    for item in &file.items {
        if let Item::Directive(d) = item {
            if d.span == span {
                if let DirectiveKind::Mode { term } = &d.kind {
                    return Some(term);
                }
            }
        }
    }
    None
}

/// Edits rewriting the arity of every `name/old` indicator inside a
/// directive term to `new`.
pub fn pi_arity_edits(term: &Term, name: &str, old: usize, new: usize) -> Vec<TextEdit> {
    let mut out = Vec::new();
    term.walk(&mut |t| {
        if let Term::Compound { functor, args, .. } = t {
            if functor == "/" && args.len() == 2 {
                if let (Term::Atom { text, .. }, Term::Int { value, span }) = (&args[0], &args[1]) {
                    if text == name && *value == old as i64 {
                        if let Some(s) = span {
                            out.push(TextEdit::new(*s, new.to_string()));
                        }
                    }
                }
            }
        }
    });
    out
}

/// Span of the qualifier atom (with trailing layout trimmed) in an
/// `m:Goal` call, recovered from the source text.
pub fn qualifier_span(text: &str, goal_span: SourceSpan, term_start: usize) -> Option<SourceSpan> {
    if term_start <= goal_span.start || term_start > text.len() {
        return None;
    }
    let slice = &text[goal_span.start..term_start];
    let colon = slice.rfind(':')?;
    let mut end = colon;
    while end > 0 && slice.as_bytes()[end - 1].is_ascii_whitespace() {
        end -= 1;
    }
    if end == 0 {
        return None;
    }
    Some(SourceSpan::new(
        goal_span.file,
        goal_span.start,
        goal_span.start + end,
    ))
}
