//! Dead-code detection: predicates unreachable from the live roots.
//!
//! Roots default to the configured entry points, or failing that every
//! export of every module. Dynamic predicates count as roots: they can
//! be reached from the database at run time. Meta-call sites make the
//! reachability an under-approximation, so the result carries them as
//! caveats rather than silently widening the live set.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{CallGraph, MetaSite, PredId, Program};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RootsError {
    #[error("no live roots: configure entry_points or export predicates")]
    NoRoots,
}

#[derive(Debug)]
pub struct DeadCode {
    pub roots: Vec<PredId>,
    pub live: BTreeSet<PredId>,
    /// Predicates defined but unreachable, sorted.
    pub dead: Vec<PredId>,
    /// Unresolvable goal positions in live predicates; if any are present
    /// the dead list may contain predicates actually reached via them.
    pub caveats: Vec<MetaSite>,
}

/// Workspace-wide roots: entry points if configured, else all exports,
/// plus dynamic predicates.
pub fn default_roots(program: &Program) -> Result<Vec<PredId>, RootsError> {
    let mut roots = BTreeSet::new();
    if !program.config.entry_points.is_empty() {
        for (m, n, a) in &program.config.entry_points {
            let id = PredId::new(m, n, *a);
            if program.pred(&id).is_some() {
                roots.insert(id);
            }
        }
    } else {
        for module in program.modules.values() {
            for (n, a) in &module.exports {
                let id = PredId::new(&module.name, n, *a);
                if program.pred(&id).is_some() {
                    roots.insert(id);
                }
            }
        }
    }
    for pred in program.all_preds() {
        if pred.is_dynamic {
            roots.insert(pred.id.clone());
        }
    }
    if roots.is_empty() {
        return Err(RootsError::NoRoots);
    }
    Ok(roots.into_iter().collect())
}

/// Roots for a single-module view: the module's exports and dynamic
/// predicates, plus anything in it called from other modules.
pub fn module_roots(program: &Program, graph: &CallGraph, module: &str) -> Vec<PredId> {
    let mut roots = BTreeSet::new();
    if let Some(m) = program.modules.get(module) {
        for (n, a) in &m.exports {
            let id = PredId::new(module, n, *a);
            if program.pred(&id).is_some() {
                roots.insert(id);
            }
        }
        for pred in m.preds.values() {
            if pred.is_dynamic {
                roots.insert(pred.id.clone());
            }
        }
    }
    for (callee, callers) in &graph.into {
        if callee.module == module && callers.iter().any(|c| c.module != module) {
            roots.insert(callee.clone());
        }
    }
    roots.into_iter().collect()
}

/// Depth-first reachability from `roots`; dead is the complement over the
/// program's predicates.
pub fn find_dead(program: &Program, graph: &CallGraph, roots: &[PredId]) -> DeadCode {
    let mut live: BTreeSet<PredId> = BTreeSet::new();
    let mut stack: Vec<PredId> = roots.to_vec();
    while let Some(id) = stack.pop() {
        if !live.insert(id.clone()) {
            continue;
        }
        if let Some(succs) = graph.out.get(&id) {
            for s in succs {
                if !live.contains(s) {
                    stack.push(s.clone());
                }
            }
        }
    }
    let dead: Vec<PredId> = program
        .all_preds()
        .map(|p| p.id.clone())
        .filter(|id| !live.contains(id))
        .collect();
    let caveats = graph
        .meta
        .iter()
        .filter(|m| live.contains(&m.caller))
        .cloned()
        .collect();
    DeadCode {
        roots: roots.to_vec(),
        live,
        dead,
        caveats,
    }
}

/// Dead predicates of one module, assuming the rest of the workspace is
/// live.
pub fn find_dead_in_module(program: &Program, graph: &CallGraph, module: &str) -> DeadCode {
    let roots = module_roots(program, graph, module);
    let mut result = find_dead(program, graph, &roots);
    result.dead.retain(|id| id.module == module);
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};

    fn setup(src: &str, config: Config) -> (Program, CallGraph) {
        let files = vec![("m.pl".to_string(), src.to_string())];
        let p = load_program(&files, None, &config);
        let g = CallGraph::build(&p);
        (p, g)
    }

    #[test]
    fn unreachable_pred_is_dead() {
        let src = ":- module(m, [main/0]).\nmain :- used.\nused.\nunused :- also_unused.\nalso_unused.\n";
        let (p, g) = setup(src, Config::default());
        let roots = default_roots(&p).unwrap();
        let dc = find_dead(&p, &g, &roots);
        let dead: Vec<String> = dc.dead.iter().map(|d| d.to_string()).collect();
        assert_eq!(dead, vec!["m:also_unused/0", "m:unused/0"]);
        assert!(dc.caveats.is_empty());
    }

    #[test]
    fn entry_points_override_exports() {
        let src = ":- module(m, [a/0]).\na.\nb.\n";
        let mut cfg = Config::default();
        cfg.entry_points = vec![("m".to_string(), "b".to_string(), 0)];
        let (p, g) = setup(src, cfg);
        let roots = default_roots(&p).unwrap();
        let dc = find_dead(&p, &g, &roots);
        assert_eq!(dc.dead, vec![PredId::new("m", "a", 0)]);
    }

    #[test]
    fn no_roots_is_an_error() {
        let src = ":- module(m, []).\np.\n";
        let (p, _) = setup(src, Config::default());
        assert_eq!(default_roots(&p), Err(RootsError::NoRoots));
    }

    #[test]
    fn dynamic_preds_are_roots() {
        let src = ":- module(m, [main/0]).\nmain.\n:- dynamic cache/1.\ncache(0).\n";
        let (p, g) = setup(src, Config::default());
        let roots = default_roots(&p).unwrap();
        let dc = find_dead(&p, &g, &roots);
        assert!(dc.dead.is_empty());
    }

    #[test]
    fn meta_sites_reported_as_caveats() {
        let src = ":- module(m, [run/1]).\nrun(G) :- call(G).\nhidden.\n";
        let (p, g) = setup(src, Config::default());
        let roots = default_roots(&p).unwrap();
        let dc = find_dead(&p, &g, &roots);
        // hidden/0 is listed dead, but with a caveat: run/1 calls an
        // unknown goal.
        assert_eq!(dc.dead, vec![PredId::new("m", "hidden", 0)]);
        assert_eq!(dc.caveats.len(), 1);
    }

    #[test]
    fn module_view_counts_external_callers() {
        let files = vec![
            (
                "a.pl".to_string(),
                ":- module(a, []).\nhelper.\nlocal_dead.\n".to_string(),
            ),
            (
                "b.pl".to_string(),
                ":- module(b, [go/0]).\ngo :- a:helper.\n".to_string(),
            ),
        ];
        let p = load_program(&files, None, &Config::default());
        let g = CallGraph::build(&p);
        let dc = find_dead_in_module(&p, &g, "a");
        assert_eq!(dc.dead, vec![PredId::new("a", "local_dead", 0)]);
    }
}
