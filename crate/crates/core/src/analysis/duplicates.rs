//! Duplicate-predicate detection.
//!
//! Two predicates are duplicates when their clause lists are equal under
//! variable renaming, ignoring their own names: the head functor is
//! replaced by a placeholder and direct recursion is folded to a marker,
//! so `p` and `q` match even when each calls itself. Grouping is done on
//! that canonical key, which also is the exactness check.

use std::collections::BTreeMap;

use crate::model::{Pred, PredId, Program};
use crate::syntax::canon::{dup_key, CClause};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateGroup {
    /// At least two members, sorted.
    pub preds: Vec<PredId>,
    pub clause_count: usize,
}

fn pred_key(pred: &Pred) -> Option<Vec<CClause>> {
    // Dynamic predicates mutate at run time and grammar rules carry
    // their bodies out of band; neither is safely comparable.
    if pred.is_dynamic || pred.clauses.is_empty() {
        return None;
    }
    if pred.clauses.iter().any(|c| c.is_dcg) {
        return None;
    }
    Some(pred.clauses.iter().map(dup_key).collect())
}

/// The same result as unordered pairs, one per duplicated couple.
pub fn duplicate_pairs(program: &Program) -> Vec<(PredId, PredId)> {
    let mut pairs = Vec::new();
    for g in find_duplicates(program) {
        for i in 0..g.preds.len() {
            for j in i + 1..g.preds.len() {
                pairs.push((g.preds[i].clone(), g.preds[j].clone()));
            }
        }
    }
    pairs.sort();
    pairs
}

pub fn find_duplicates(program: &Program) -> Vec<DuplicateGroup> {
    let mut buckets: BTreeMap<Vec<CClause>, Vec<PredId>> = BTreeMap::new();
    for pred in program.all_preds() {
        if let Some(key) = pred_key(pred) {
            buckets.entry(key).or_default().push(pred.id.clone());
        }
    }
    let mut groups = Vec::new();
    for (key, mut preds) in buckets {
        if preds.len() >= 2 {
            preds.sort();
            groups.push(DuplicateGroup {
                preds,
                clause_count: key.len(),
            });
        }
    }
    groups.sort_by(|a, b| a.preds.cmp(&b.preds));
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};

    fn dup_groups(src: &str) -> Vec<Vec<String>> {
        let files = vec![("m.pl".to_string(), src.to_string())];
        let p = load_program(&files, None, &Config::default());
        find_duplicates(&p)
            .into_iter()
            .map(|g| g.preds.iter().map(|p| p.to_string()).collect())
            .collect()
    }

    #[test]
    fn renamed_copies_group_together() {
        let src = "\
first([], 0).
first([_|T], N) :- first(T, M), N is M + 1.
second([], 0).
second([_|Rest], Count) :- second(Rest, C0), Count is C0 + 1.
other([], 1).
";
        assert_eq!(
            dup_groups(src),
            vec![vec!["user:first/2".to_string(), "user:second/2".to_string()]]
        );
    }

    #[test]
    fn clause_order_matters() {
        let src = "\
a(1).
a(2).
b(2).
b(1).
";
        assert!(dup_groups(src).is_empty());
    }

    #[test]
    fn shared_helpers_do_not_merge_callers() {
        // p and q call different helpers; even if the helpers are
        // duplicates of each other the callers are not.
        let src = "\
p(X) :- h1(X).
q(X) :- h2(X).
h1(X) :- X > 0.
h2(X) :- X > 0.
";
        assert_eq!(dup_groups(src), vec![vec![
            "user:h1/1".to_string(),
            "user:h2/1".to_string()
        ]]);
    }

    #[test]
    fn dynamic_preds_are_skipped() {
        let src = "\
:- dynamic c1/1.
c1(0).
c2(0).
";
        assert!(dup_groups(src).is_empty());
    }

    #[test]
    fn three_way_group() {
        let src = "id1(X, X).\nid2(A, A).\nid3(Q, Q).\n";
        assert_eq!(
            dup_groups(src),
            vec![vec![
                "user:id1/2".to_string(),
                "user:id2/2".to_string(),
                "user:id3/2".to_string()
            ]]
        );
    }
}
