//! Repeated goal-sequence mining.
//!
//! Every flat conjunction in every clause body (including those nested
//! in if-then-else branches, disjunctions and negations) contributes a
//! sequence of goals. Goals are interned by their variable-collapsed
//! skeleton, the interned strings are concatenated with unique sentinels
//! between contexts, and a suffix array plus LCP array bounds the repeat
//! length at each position. Skeleton equality over-approximates
//! alpha-equivalence, so each candidate window is then re-keyed by its
//! alpha-canonical form; a group survives if it still has enough
//! occurrences and cannot be uniformly extended left or right without
//! splitting.

use std::collections::BTreeMap;

use crate::model::{PredId, Program};
use crate::span::SourceSpan;
use crate::syntax::ast::{ClauseSrc, Goal, Term};
use crate::syntax::canon::{canon_window, goal_skeleton, CGoal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqOccurrence {
    pub pred: PredId,
    pub clause_idx: usize,
    /// Index into `clause_contexts` of the clause body.
    pub context: usize,
    /// Offset of the window within the context's goal list.
    pub start: usize,
    pub span: SourceSpan,
    /// Variables occurring both inside and outside the window, in order
    /// of first occurrence inside; these are the natural parameters of an
    /// extraction.
    pub shared_vars: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RepeatedSequence {
    pub len: usize,
    /// Alpha-canonical form of the window, shared by all occurrences.
    pub canonical: Vec<CGoal>,
    pub occurrences: Vec<SeqOccurrence>,
}

/// The goal lists of a body in a fixed order: the top-level conjunction
/// first, then every nested conjunction in preorder. Context indices are
/// stable across re-walks of the same clause.
pub fn clause_contexts(body: &Goal) -> Vec<Vec<&Goal>> {
    let mut contexts = vec![body.conjuncts()];
    let root = body as *const Goal;
    body.walk(&mut |g| {
        if matches!(g, Goal::Conj { .. }) && !std::ptr::eq(g as *const Goal, root) {
            contexts.push(g.conjuncts());
        }
    });
    contexts
}

struct Ctx<'p> {
    pred: PredId,
    clause_idx: usize,
    ctx_idx: usize,
    goals: Vec<&'p Goal>,
    head: &'p Term,
    body: &'p Goal,
    clause_span: SourceSpan,
}

pub fn find_repeated_sequences(
    program: &Program,
    min_len: usize,
    min_occ: usize,
) -> Vec<RepeatedSequence> {
    let min_len = min_len.max(2);
    let min_occ = min_occ.max(2);

    let mut contexts: Vec<Ctx> = Vec::new();
    for pred in program.all_preds() {
        for (clause_idx, clause) in pred.clauses.iter().enumerate() {
            if clause.is_dcg {
                continue;
            }
            for (ctx_idx, goals) in clause_contexts(&clause.body).into_iter().enumerate() {
                contexts.push(Ctx {
                    pred: pred.id.clone(),
                    clause_idx,
                    ctx_idx,
                    goals,
                    head: &clause.head,
                    body: &clause.body,
                    clause_span: clause.span,
                });
            }
        }
    }

    // Interned skeleton string with a distinct sentinel after each
    // context, so no repeat can span a boundary.
    let mut interner: BTreeMap<CGoal, u32> = BTreeMap::new();
    let mut text: Vec<u32> = Vec::new();
    let mut meta: Vec<Option<(usize, usize)>> = Vec::new();
    let mut sentinel = u32::MAX;
    for (ci, ctx) in contexts.iter().enumerate() {
        for (off, g) in ctx.goals.iter().enumerate() {
            let key = goal_skeleton(g);
            let next = interner.len() as u32;
            let sym = *interner.entry(key).or_insert(next);
            text.push(sym);
            meta.push(Some((ci, off)));
        }
        text.push(sentinel);
        meta.push(None);
        sentinel -= 1;
    }
    assert!((interner.len() as u32) < sentinel);

    let sa = suffix_array(&text);
    let lcp = lcp_array(&text, &sa);
    let mut rank = vec![0usize; text.len()];
    for (r, &p) in sa.iter().enumerate() {
        rank[p] = r;
    }

    // Candidate windows: every window whose skeleton occurs elsewhere.
    let mut groups: BTreeMap<Vec<CGoal>, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, m) in meta.iter().enumerate() {
        let Some((ci, off)) = *m else { continue };
        let r = rank[i];
        let mut maxrep = lcp[r];
        if r + 1 < text.len() {
            maxrep = maxrep.max(lcp[r + 1]);
        }
        let limit = maxrep.min(contexts[ci].goals.len() - off);
        for l in min_len..=limit {
            let key = canon_window(&contexts[ci].goals[off..off + l]);
            groups.entry(key).or_default().push((ci, off));
        }
    }

    let mut result = Vec::new();
    for (key, occs) in groups {
        if occs.len() < min_occ {
            continue;
        }
        let l = key.len();
        if uniformly_extensible(&contexts, &occs, l) {
            continue;
        }
        let occurrences: Vec<SeqOccurrence> = occs
            .iter()
            .map(|&(ci, off)| occurrence(&contexts[ci], off, l))
            .collect();
        result.push(RepeatedSequence {
            len: l,
            canonical: key,
            occurrences,
        });
    }
    result.sort_by(|a, b| {
        b.len.cmp(&a.len).then_with(|| {
            let ka = occ_key(&a.occurrences[0]);
            let kb = occ_key(&b.occurrences[0]);
            ka.cmp(&kb)
        })
    });
    result
}

fn occ_key(o: &SeqOccurrence) -> (PredId, usize, usize, usize) {
    (o.pred.clone(), o.clause_idx, o.context, o.start)
}

/// True when every occurrence can grow by one goal on the same side and
/// the grown windows are still all alpha-equivalent; such a group is
/// subsumed by the longer one.
fn uniformly_extensible(contexts: &[Ctx], occs: &[(usize, usize)], l: usize) -> bool {
    for (dl, dr) in [(1usize, 0usize), (0, 1)] {
        let mut keys = Vec::new();
        let mut all = true;
        for &(ci, off) in occs {
            let goals = &contexts[ci].goals;
            if off < dl || off + l + dr > goals.len() {
                all = false;
                break;
            }
            keys.push(canon_window(&goals[off - dl..off + l + dr]));
        }
        if all && keys.windows(2).all(|w| w[0] == w[1]) {
            return true;
        }
    }
    false
}

/// Builds the occurrence record for an arbitrary clause window, using
/// the same shared-variable rule as the repeat finder. `None` when the
/// indices do not describe a window of the clause.
pub fn window_occurrence(
    pred: &PredId,
    clause_idx: usize,
    clause: &ClauseSrc,
    context: usize,
    start: usize,
    len: usize,
) -> Option<SeqOccurrence> {
    if len == 0 {
        return None;
    }
    let contexts = clause_contexts(&clause.body);
    let goals = contexts.get(context)?;
    if start + len > goals.len() {
        return None;
    }
    let ctx = Ctx {
        pred: pred.clone(),
        clause_idx,
        ctx_idx: context,
        goals: goals.clone(),
        head: &clause.head,
        body: &clause.body,
        clause_span: clause.span,
    };
    Some(occurrence(&ctx, start, len))
}

fn occurrence(ctx: &Ctx, start: usize, len: usize) -> SeqOccurrence {
    let window = &ctx.goals[start..start + len];
    let span = window
        .iter()
        .filter_map(|g| g.span())
        .reduce(|a, b| a.cover(b))
        .unwrap_or(ctx.clause_span);

    let mut inside: BTreeMap<crate::syntax::ast::VarId, usize> = BTreeMap::new();
    let mut order: Vec<(String, crate::syntax::ast::VarId)> = Vec::new();
    for g in window {
        for (name, id) in g.var_occurrences() {
            if !inside.contains_key(&id) {
                order.push((name.to_string(), id));
            }
            *inside.entry(id).or_insert(0) += 1;
        }
    }
    let mut total: BTreeMap<crate::syntax::ast::VarId, usize> = BTreeMap::new();
    for (_, id) in ctx.head.var_occurrences() {
        *total.entry(id).or_insert(0) += 1;
    }
    for (_, id) in ctx.body.var_occurrences() {
        *total.entry(id).or_insert(0) += 1;
    }
    let shared_vars = order
        .into_iter()
        .filter(|(_, id)| total.get(id).copied().unwrap_or(0) > inside[id])
        .map(|(name, _)| name)
        .collect();

    SeqOccurrence {
        pred: ctx.pred.clone(),
        clause_idx: ctx.clause_idx,
        context: ctx.ctx_idx,
        start,
        span,
        shared_vars,
    }
}

/// Suffix array by prefix doubling; O(n log^2 n), fine at our sizes.
fn suffix_array(s: &[u32]) -> Vec<usize> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sa: Vec<usize> = (0..n).collect();
    let mut rank: Vec<usize> = {
        let mut syms: Vec<u32> = s.to_vec();
        syms.sort_unstable();
        syms.dedup();
        s.iter().map(|c| syms.binary_search(c).unwrap()).collect()
    };
    let mut tmp = vec![0usize; n];
    let mut k = 1;
    loop {
        let key = |i: usize, rank: &[usize]| -> (usize, isize) {
            (rank[i], if i + k < n { rank[i + k] as isize } else { -1 })
        };
        sa.sort_by(|&a, &b| key(a, &rank).cmp(&key(b, &rank)));
        tmp[sa[0]] = 0;
        for j in 1..n {
            tmp[sa[j]] = tmp[sa[j - 1]] + usize::from(key(sa[j], &rank) != key(sa[j - 1], &rank));
        }
        rank.copy_from_slice(&tmp);
        if rank[sa[n - 1]] == n - 1 {
            break;
        }
        k *= 2;
    }
    sa
}

/// Kasai's algorithm: `lcp[r]` is the common-prefix length of the
/// suffixes at ranks `r-1` and `r`.
fn lcp_array(s: &[u32], sa: &[usize]) -> Vec<usize> {
    let n = s.len();
    let mut rank = vec![0usize; n];
    for (r, &p) in sa.iter().enumerate() {
        rank[p] = r;
    }
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] == 0 {
            h = 0;
            continue;
        }
        let j = sa[rank[i] - 1];
        while i + h < n && j + h < n && s[i + h] == s[j + h] {
            h += 1;
        }
        lcp[rank[i]] = h;
        h = h.saturating_sub(1);
    }
    lcp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};

    fn mine(src: &str) -> Vec<RepeatedSequence> {
        let files = vec![("m.pl".to_string(), src.to_string())];
        let p = load_program(&files, None, &Config::default());
        find_repeated_sequences(&p, 2, 2)
    }

    #[test]
    fn suffix_array_sorts_suffixes() {
        let s: Vec<u32> = vec![1, 0, 2, 0, 2, 0];
        let sa = suffix_array(&s);
        for w in sa.windows(2) {
            assert!(s[w[0]..] < s[w[1]..]);
        }
        assert_eq!(sa.len(), s.len());
    }

    #[test]
    fn lcp_matches_naive() {
        let s: Vec<u32> = vec![3, 1, 2, 1, 2, 1, 9, 1, 2];
        let sa = suffix_array(&s);
        let lcp = lcp_array(&s, &sa);
        for r in 1..s.len() {
            let a = &s[sa[r - 1]..];
            let b = &s[sa[r]..];
            let naive = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
            assert_eq!(lcp[r], naive, "rank {r}");
        }
    }

    #[test]
    fn maximal_repeat_absorbs_subwindows() {
        let src = "p :- a, b, c, x.\nq :- a, b, c, y.\na.\nb.\nc.\nx.\ny.\n";
        let seqs = mine(src);
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].len, 3);
        assert_eq!(seqs[0].occurrences.len(), 2);
        assert_eq!(seqs[0].occurrences[0].start, 0);
    }

    #[test]
    fn variable_sharing_splits_skeleton_matches() {
        // q(X),r(X) and q(A),r(B) share a skeleton but not an alpha
        // class; only r(_),s repeats.
        let src = "p(X) :- q(X), r(X), s.\nt(A) :- q(A), r(B), s.\nq(_).\nr(_).\ns.\n";
        let seqs = mine(src);
        assert_eq!(seqs.len(), 1);
        let seq = &seqs[0];
        assert_eq!(seq.len, 2);
        assert_eq!(seq.occurrences.len(), 2);
        assert_eq!(seq.occurrences[0].shared_vars, vec!["X".to_string()]);
        assert!(seq.occurrences[1].shared_vars.is_empty());
    }

    #[test]
    fn nested_branch_matches_top_level() {
        let src = "p :- ( c -> u, v ; w ).\nq :- u, v.\nc.\nu.\nv.\nw.\n";
        let seqs = mine(src);
        assert_eq!(seqs.len(), 1);
        let seq = &seqs[0];
        assert_eq!(seq.len, 2);
        let locs: Vec<(String, usize)> = seq
            .occurrences
            .iter()
            .map(|o| (o.pred.to_string(), o.context))
            .collect();
        assert_eq!(
            locs,
            vec![("user:p/0".to_string(), 1), ("user:q/0".to_string(), 0)]
        );
    }

    #[test]
    fn overlapping_occurrences_in_one_clause() {
        let src = "p :- a, a, a.\nq :- a, a.\na.\n";
        let seqs = mine(src);
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].len, 2);
        assert_eq!(seqs[0].occurrences.len(), 3);
    }

    #[test]
    fn no_repeats_no_result() {
        let src = "p :- a, b.\nq :- c, d.\na.\nb.\nc.\nd.\n";
        assert!(mine(src).is_empty());
    }

    #[test]
    fn shared_vars_follow_window_order() {
        let src = "p(A, B) :- u(B, A), v(A), w(B).\nq(X, Y) :- u(Y, X), v(X), z.\nu(_, _).\nv(_).\nw(_).\nz.\n";
        let seqs = mine(src);
        assert_eq!(seqs.len(), 1);
        let seq = &seqs[0];
        assert_eq!(seq.len, 2);
        // Window u(B,A),v(A): first occurrence inside order is B then A.
        assert_eq!(
            seq.occurrences[0].shared_vars,
            vec!["B".to_string(), "A".to_string()]
        );
        assert_eq!(
            seq.occurrences[1].shared_vars,
            vec!["Y".to_string(), "X".to_string()]
        );
    }
}
