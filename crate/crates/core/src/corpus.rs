//! Deterministic random program generators for tests and benchmarks.
//!
//! Every generator is a pure function of its seed (ChaCha8 keyed by
//! `seed_from_u64`), so failures reproduce across machines. Ground truth
//! is built alongside the generated source — the call graphs carry the
//! edge list they were rendered from, the synthetic workspace carries
//! planted dead and duplicate sets — and tests compare the analyses
//! against that independent record, not against the analyses themselves.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::find_repeated_sequences;
use crate::model::{load_program, Config, PredId};
use crate::oracle::Projection;
use crate::transform::{DeadScope, ExtractTarget, RefactoringRequest};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Random call graphs.

/// A random call graph rendered as facts and rules, with the edge list
/// it was rendered from. Predicate `i` is named [`graph_pred`]`(i)`.
pub struct GraphCase {
    pub src: String,
    pub n: usize,
    /// Caller/callee index pairs; self-loops allowed.
    pub edges: Vec<(usize, usize)>,
    /// Root indices for reachability.
    pub roots: Vec<usize>,
}

pub fn graph_pred(i: usize) -> String {
    format!("n{i}")
}

pub fn graph_case(seed: u64) -> GraphCase {
    let mut rng = rng_for(seed);
    let n = rng.gen_range(1..=200);
    let mut edges = Vec::new();
    for i in 0..n {
        for _ in 0..rng.gen_range(0..=3usize) {
            edges.push((i, rng.gen_range(0..n)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let mut roots: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.15)).collect();
    if roots.is_empty() {
        roots.push(rng.gen_range(0..n));
    }
    let mut src = String::new();
    for i in 0..n {
        let callees: Vec<String> = edges
            .iter()
            .filter(|e| e.0 == i)
            .map(|e| graph_pred(e.1))
            .collect();
        if callees.is_empty() {
            src.push_str(&format!("{}.\n", graph_pred(i)));
        } else {
            src.push_str(&format!("{} :- {}.\n", graph_pred(i), callees.join(", ")));
        }
    }
    GraphCase { src, n, edges, roots }
}

// A small clause representation that can be re-rendered with fresh
// variable names, so planted clones are alpha-variants by construction.

#[derive(Clone, Debug, PartialEq)]
enum GTerm {
    Var(usize),
    Atom(String),
    Int(i64),
}

#[derive(Clone, Debug, PartialEq)]
struct GGoal {
    name: String,
    args: Vec<GTerm>,
}

#[derive(Clone, Debug, PartialEq)]
struct GClause {
    head: GGoal,
    body: Vec<GGoal>,
}

const INFIX2: &[&str] = &["=", "==", "\\==", "<", ">", "=<", ">=", "is", "=:=", "=\\="];

fn var_name(style: usize, i: usize) -> String {
    const P0: [&str; 8] = ["X", "Y", "Z", "W", "V", "U", "T", "S"];
    const P1: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
    let pool = if style == 0 { &P0 } else { &P1 };
    if i < 8 {
        pool[i].to_string()
    } else {
        format!("{}{}", pool[i % 8], i / 8)
    }
}

fn render_term(t: &GTerm, style: usize) -> String {
    match t {
        GTerm::Var(i) => var_name(style, *i),
        GTerm::Atom(a) => a.clone(),
        GTerm::Int(n) => n.to_string(),
    }
}

fn render_goal(g: &GGoal, style: usize) -> String {
    if g.args.is_empty() {
        return g.name.clone();
    }
    let args: Vec<String> = g.args.iter().map(|t| render_term(t, style)).collect();
    if g.args.len() == 2 && INFIX2.contains(&g.name.as_str()) {
        format!("{} {} {}", args[0], g.name, args[1])
    } else {
        format!("{}({})", g.name, args.join(", "))
    }
}

fn render_clause(c: &GClause, style: usize) -> String {
    let head = render_goal(&c.head, style);
    if c.body.is_empty() {
        return format!("{head}.\n");
    }
    let goals: Vec<String> = c.body.iter().map(|g| render_goal(g, style)).collect();
    if goals.len() <= 3 {
        format!("{head} :- {}.\n", goals.join(", "))
    } else {
        format!("{head} :-\n    {}.\n", goals.join(",\n    "))
    }
}

fn random_builtin(rng: &mut ChaCha8Rng, n_vars: usize, atoms: &[String]) -> GGoal {
    match rng.gen_range(0..3) {
        0 => GGoal {
            name: "=".into(),
            args: vec![
                GTerm::Var(rng.gen_range(0..n_vars)),
                GTerm::Atom(atoms[rng.gen_range(0..atoms.len())].clone()),
            ],
        },
        1 => GGoal {
            name: "=".into(),
            args: vec![
                GTerm::Var(rng.gen_range(0..n_vars)),
                GTerm::Int(rng.gen_range(0..10)),
            ],
        },
        _ => GGoal {
            name: "<".into(),
            args: vec![
                GTerm::Int(rng.gen_range(0..5)),
                GTerm::Int(rng.gen_range(5..10)),
            ],
        },
    }
}

fn random_call(
    rng: &mut ChaCha8Rng,
    name: &str,
    arity: usize,
    n_vars: usize,
    atoms: &[String],
) -> GGoal {
    let args = (0..arity)
        .map(|_| match rng.gen_range(0..3) {
            0 => GTerm::Atom(atoms[rng.gen_range(0..atoms.len())].clone()),
            _ => GTerm::Var(rng.gen_range(0..n_vars)),
        })
        .collect();
    GGoal { name: name.to_string(), args }
}

/// Clauses whose bodies use only builtins and direct self-recursion, so a
/// re-rendered copy under another head name stays alpha-equivalent.
fn ir_pred(
    rng: &mut ChaCha8Rng,
    name: &str,
    arity: usize,
    atoms: &[String],
    n_clauses: usize,
) -> Vec<GClause> {
    let mut clauses = Vec::new();
    for _ in 0..n_clauses {
        let n_vars = (arity + rng.gen_range(0..=2)).max(1);
        let head = GGoal {
            name: name.to_string(),
            args: (0..arity)
                .map(|_| match rng.gen_range(0..4) {
                    0 => GTerm::Atom(atoms[rng.gen_range(0..atoms.len())].clone()),
                    1 => GTerm::Int(rng.gen_range(0..10)),
                    _ => GTerm::Var(rng.gen_range(0..n_vars)),
                })
                .collect(),
        };
        let mut body = Vec::new();
        for _ in 0..rng.gen_range(0..=2usize) {
            body.push(random_builtin(rng, n_vars, atoms));
        }
        if rng.gen_bool(0.25) {
            body.push(random_call(rng, name, arity, n_vars, atoms));
        }
        clauses.push(GClause { head, body });
    }
    clauses
}

fn rename_pred_in_clauses(clauses: &mut [GClause], from: &str, arity: usize, to: &str) {
    for c in clauses {
        if c.head.name == from {
            c.head.name = to.to_string();
        }
        for g in &mut c.body {
            if g.name == from && g.args.len() == arity {
                g.name = to.to_string();
            }
        }
    }
}

// Alpha-variant clone planting.

/// A single-file program with planted alpha-variant clones (renamed
/// heads, renamed self-calls, fresh variable names) and occasional
/// near-clones spoiled on purpose.
pub fn clone_case(seed: u64) -> Vec<(String, String)> {
    let mut rng = rng_for(seed);
    let atoms: Vec<String> = ["red", "green", "blue", "small", "big"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let n_base = rng.gen_range(3..=12usize);
    let mut preds: Vec<(String, usize, Vec<GClause>)> = Vec::new();
    for i in 0..n_base {
        let name = format!("b{i}");
        let arity = rng.gen_range(0..=3);
        let n_clauses = rng.gen_range(1..=3);
        let mut clauses = ir_pred(&mut rng, &name, arity, &atoms, n_clauses);
        // Some bases also call earlier bases, which clones cannot copy
        // safely; only self-contained bases get cloned below.
        if i > 0 && rng.gen_bool(0.4) {
            let j = rng.gen_range(0..i);
            let (cn, ca, _) = &preds[j];
            let callee = (cn.clone(), *ca);
            let n_vars = clauses[0].head.args.len().max(1) + 1;
            clauses[0]
                .body
                .push(random_call(&mut rng, &callee.0, callee.1, n_vars, &atoms));
            preds.push((name, arity, clauses));
            continue;
        }
        preds.push((name, arity, clauses));
    }
    let self_contained: Vec<usize> = (0..n_base)
        .filter(|&i| {
            preds[i].2.iter().all(|c| {
                c.body
                    .iter()
                    .all(|g| INFIX2.contains(&g.name.as_str()) || g.name == preds[i].0)
            })
        })
        .collect();
    let mut sources = self_contained.clone();
    sources.shuffle(&mut rng);
    let n_clones = rng.gen_range(1..=sources.len().min(4).max(1));
    let mut out = String::new();
    for (name, _, clauses) in &preds {
        let _ = name;
        for c in clauses {
            out.push_str(&render_clause(c, 0));
        }
        out.push('\n');
    }
    for (k, &src) in sources.iter().take(n_clones).enumerate() {
        let (src_name, arity, clauses) = &preds[src];
        let new_name = format!("c{k}");
        let mut cloned = clauses.clone();
        rename_pred_in_clauses(&mut cloned, src_name, *arity, &new_name);
        if rng.gen_bool(0.3) {
            spoil(&mut rng, &mut cloned);
        }
        for c in &cloned {
            out.push_str(&render_clause(c, 1));
        }
        out.push('\n');
    }
    vec![("clones.pl".to_string(), out)]
}

/// Breaks alpha-equivalence in one of several ways, turning a clone into
/// a near-miss that brute force must also reject.
fn spoil(rng: &mut ChaCha8Rng, clauses: &mut Vec<GClause>) {
    match rng.gen_range(0..3) {
        0 => {
            for c in clauses.iter_mut() {
                for t in c.head.args.iter_mut().chain(c.body.iter_mut().flat_map(|g| g.args.iter_mut())) {
                    if let GTerm::Atom(a) = t {
                        *a = "odd".to_string();
                        return;
                    }
                }
            }
            clauses[0].body.push(GGoal {
                name: "=".into(),
                args: vec![GTerm::Var(0), GTerm::Atom("odd".into())],
            });
        }
        1 if clauses.len() >= 2 => clauses.swap(0, 1),
        _ => {
            if clauses.iter().any(|c| !c.body.is_empty()) {
                for c in clauses.iter_mut() {
                    if c.body.pop().is_some() {
                        return;
                    }
                }
            }
            clauses[0].body.push(GGoal {
                name: "=".into(),
                args: vec![GTerm::Var(0), GTerm::Atom("odd".into())],
            });
        }
    }
}

// Repeated-sequence planting.

/// A single-file program whose clause bodies splice shared goal phrases
/// (alpha-renamed per occurrence), some inside nested branches.
pub fn sequence_case(seed: u64) -> Vec<(String, String)> {
    let mut rng = rng_for(seed);
    let vocab: Vec<(String, usize)> = (0..6)
        .map(|i| (format!("f{i}"), 1 + (i % 2)))
        .collect();
    let atoms: Vec<String> = ["u", "v", "w"].iter().map(|s| s.to_string()).collect();
    let n_phrases = rng.gen_range(1..=3usize);
    let phrases: Vec<Vec<GGoal>> = (0..n_phrases)
        .map(|_| {
            let len = rng.gen_range(2..=4);
            (0..len)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        random_builtin(&mut rng, 4, &atoms)
                    } else {
                        let (n, a) = vocab[rng.gen_range(0..vocab.len())].clone();
                        random_call(&mut rng, &n, a, 4, &atoms)
                    }
                })
                .collect()
        })
        .collect();
    let mut out = String::new();
    for (n, a) in &vocab {
        for r in 0..2 {
            let args: Vec<String> = (0..*a).map(|c| format!("{}{}", atoms[r % 3], c)).collect();
            out.push_str(&format!("{}({}).\n", n, args.join(", ")));
        }
    }
    out.push('\n');
    let n_preds = rng.gen_range(3..=8usize);
    for i in 0..n_preds {
        let arity = rng.gen_range(0..=2);
        let target = rng.gen_range(4..=30usize);
        let mut next_var = arity.max(1);
        let mut count = 0usize;
        let mut segs: Vec<String> = Vec::new();
        while count < target {
            let roll = rng.gen_range(0..10);
            if roll < 5 {
                // splice a phrase, variables shifted so each occurrence
                // is an alpha-variant of the others
                let ph = &phrases[rng.gen_range(0..phrases.len())];
                let base = next_var;
                next_var += 4;
                let shifted: Vec<String> = ph
                    .iter()
                    .map(|g| {
                        let g2 = GGoal {
                            name: g.name.clone(),
                            args: g
                                .args
                                .iter()
                                .map(|t| match t {
                                    GTerm::Var(v) => GTerm::Var(v + base),
                                    other => other.clone(),
                                })
                                .collect(),
                        };
                        render_goal(&g2, 0)
                    })
                    .collect();
                if roll == 0 && count + ph.len() + 1 < target {
                    // occurrence inside an if-then-else branch
                    segs.push(format!(
                        "( {} -> {} ; {} )",
                        render_goal(&random_builtin(&mut rng, next_var, &atoms), 0),
                        shifted.join(", "),
                        "true"
                    ));
                    count += ph.len() + 1;
                } else {
                    segs.extend(shifted);
                    count += ph.len();
                }
            } else if roll < 8 {
                let (n, a) = vocab[rng.gen_range(0..vocab.len())].clone();
                segs.push(render_goal(&random_call(&mut rng, &n, a, next_var, &atoms), 0));
                count += 1;
            } else {
                segs.push(render_goal(&random_builtin(&mut rng, next_var, &atoms), 0));
                count += 1;
            }
        }
        let head = if arity == 0 {
            format!("s{i}")
        } else {
            let vars: Vec<String> = (0..arity).map(|v| var_name(0, v)).collect();
            format!("s{i}({})", vars.join(", "))
        };
        out.push_str(&format!("{head} :-\n    {}.\n\n", segs.join(",\n    ")));
    }
    vec![("seqs.pl".to_string(), out)]
}

// Pure terminating programs for argument-erasure checks.

/// A pure program whose every query exhausts well inside a resolution
/// budget of 20: two rule tiers over small fact tables, no recursion.
pub struct PureCase {
    pub files: Vec<(String, String)>,
    /// Query texts, for module `user`.
    pub queries: Vec<String>,
}

pub fn pure_case(seed: u64) -> PureCase {
    let mut rng = rng_for(seed);
    let n = rng.gen_range(3..=8usize);
    let n_facts = rng.gen_range(1..=2).min(n - 1);
    let n_rules = n - n_facts;
    // tier 0 rules may call tier 1 rules; tier 1 rules call only facts
    let tier1_start = n_rules - (n_rules / 2).min(n_rules - 1).max(if n_rules > 1 { 1 } else { 0 });
    let arities: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
    let dead_pos: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if i < n_rules && arities[i] >= 2 && rng.gen_bool(0.6) {
                Some(rng.gen_range(0..arities[i]))
            } else {
                None
            }
        })
        .collect();
    let atom_pool = ["a", "b", "c"];
    let mut out = String::new();
    for i in 0..n {
        let name = format!("p{i}");
        let arity = arities[i];
        if i >= n_rules {
            for _ in 0..rng.gen_range(1..=2usize) {
                let args: Vec<String> = (0..arity)
                    .map(|_| {
                        if rng.gen_bool(0.6) {
                            atom_pool[rng.gen_range(0..3)].to_string()
                        } else {
                            rng.gen_range(0..5i64).to_string()
                        }
                    })
                    .collect();
                out.push_str(&format!("{name}({}).\n", args.join(", ")));
            }
            out.push('\n');
            continue;
        }
        let live_vars: Vec<usize> = (0..arity).filter(|p| dead_pos[i] != Some(*p)).collect();
        for _ in 0..rng.gen_range(1..=2usize) {
            let head_args: Vec<String> = (0..arity).map(|v| var_name(0, v)).collect();
            let mut goals: Vec<String> = Vec::new();
            if rng.gen_bool(0.3) && !live_vars.is_empty() {
                let v = live_vars[rng.gen_range(0..live_vars.len())];
                goals.push(format!(
                    "{} = {}",
                    var_name(0, v),
                    atom_pool[rng.gen_range(0..3)]
                ));
            }
            // pick a callee one tier down
            let callee = if i < tier1_start && n_rules > tier1_start && rng.gen_bool(0.6) {
                rng.gen_range(tier1_start..n_rules)
            } else {
                rng.gen_range(n_rules..n)
            };
            goals.push(pure_call(&mut rng, callee, &arities, &dead_pos, i, &live_vars, atom_pool));
            if callee >= n_rules && rng.gen_bool(0.4) {
                let extra = rng.gen_range(n_rules..n);
                goals.push(pure_call(&mut rng, extra, &arities, &dead_pos, i, &live_vars, atom_pool));
            }
            out.push_str(&format!(
                "{name}({}) :- {}.\n",
                head_args.join(", "),
                goals.join(", ")
            ));
        }
        out.push('\n');
    }
    let mut queries = Vec::new();
    for i in 0..n_rules.min(3) {
        let vars: Vec<String> = (0..arities[i]).map(|v| format!("Q{v}")).collect();
        queries.push(format!("p{i}({})", vars.join(", ")));
    }
    if rng.gen_bool(0.5) {
        let vars: Vec<String> = (1..arities[0]).map(|v| format!("Q{v}")).collect();
        if vars.is_empty() {
            queries.push("p0(a)".to_string());
        } else {
            queries.push(format!("p0(a, {})", vars.join(", ")));
        }
    }
    PureCase {
        files: vec![("pure.pl".to_string(), out)],
        queries,
    }
}

/// One call goal; the caller's planted-dead variable flows only into the
/// callee's planted-dead position, chaining erasures across predicates.
fn pure_call(
    rng: &mut ChaCha8Rng,
    callee: usize,
    arities: &[usize],
    dead_pos: &[Option<usize>],
    caller: usize,
    live_vars: &[usize],
    atom_pool: [&str; 3],
) -> String {
    let mut next_fresh = 8usize;
    let args: Vec<String> = (0..arities[callee])
        .map(|q| {
            if dead_pos[callee] == Some(q) {
                if let Some(d) = dead_pos[caller] {
                    if rng.gen_bool(0.5) {
                        return var_name(0, d);
                    }
                }
                next_fresh += 1;
                return format!("F{next_fresh}");
            }
            if !live_vars.is_empty() && rng.gen_bool(0.7) {
                var_name(0, live_vars[rng.gen_range(0..live_vars.len())])
            } else {
                atom_pool[rng.gen_range(0..3)].to_string()
            }
        })
        .collect();
    format!("p{callee}({})", args.join(", "))
}

// Synthetic multi-module workspace with planted ground truth.

pub struct SyntheticWorkspace {
    pub files: Vec<(String, String)>,
    /// Exactly the predicates unreachable from the default roots.
    pub dead: BTreeSet<PredId>,
    /// Exactly the alpha-equivalent definition pairs.
    pub duplicate_pairs: BTreeSet<(PredId, PredId)>,
    pub total_lines: usize,
}

/// Emits modules until the workspace reaches `target_lines`. Every
/// predicate's first clause embeds a workspace-unique atom, so the only
/// alpha-equivalent pairs are the planted clones (which share their
/// source's atom). Liveness is by construction: exported predicates are
/// roots, every unexported live predicate has a live caller, and island
/// predicates are never called from live code.
pub fn synthetic_workspace(seed: u64, target_lines: usize) -> SyntheticWorkspace {
    let mut rng = rng_for(seed);
    let mut files = Vec::new();
    let mut dead = BTreeSet::new();
    let mut dup_pairs = BTreeSet::new();
    let mut clone_pool: Vec<(PredId, usize, Vec<GClause>)> = Vec::new();
    let mut importable: Vec<(String, String, usize)> = Vec::new();
    let mut total = 0usize;
    let mut k = 0usize;
    while total < target_lines {
        let module = format!("w{k:03}");
        let n_live = rng.gen_range(20..=30usize);
        let n_exp = ((n_live * rng.gen_range(30..=50)) / 100).max(1);
        let arities: Vec<usize> = (0..n_live).map(|_| rng.gen_range(0..=3)).collect();
        let leaf: Vec<bool> = (0..n_live)
            .map(|i| i != 0 && rng.gen_bool(0.35))
            .collect();
        let uniq: Vec<String> = (0..n_live).map(|i| format!("{module}_u{i}")).collect();
        let names: Vec<String> = (0..n_live).map(|i| format!("{module}_p{i}")).collect();
        // calls planted on wired predicates: caller index -> callee indices
        let mut planted: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let wired: Vec<usize> = (0..n_live).filter(|&i| !leaf[i]).collect();
        for i in n_exp..n_live {
            let below: Vec<usize> = wired.iter().copied().filter(|&j| j < i).collect();
            let caller = below[rng.gen_range(0..below.len())];
            planted.entry(caller).or_default().push(i);
        }
        for &i in &wired {
            if rng.gen_bool(0.4) {
                let extra = rng.gen_range(0..n_live);
                planted.entry(i).or_default().push(extra);
            }
        }
        let mut imports: BTreeMap<String, BTreeSet<(String, usize)>> = BTreeMap::new();
        let mut body = String::new();
        let leaf_atoms: Vec<String> = vec!["lo".into(), "hi".into(), "mid".into()];
        let mut leaf_clauses: Vec<Option<Vec<GClause>>> = vec![None; n_live];
        for i in 0..n_live {
            if leaf[i] {
                let n_clauses = rng.gen_range(1..=3);
                let mut clauses =
                    ir_pred(&mut rng, &names[i], arities[i], &leaf_atoms, n_clauses);
                clauses[0].body.insert(
                    0,
                    GGoal {
                        name: "atom".into(),
                        args: vec![GTerm::Atom(uniq[i].clone())],
                    },
                );
                for c in &clauses {
                    body.push_str(&render_clause(c, 0));
                }
                leaf_clauses[i] = Some(clauses);
            } else {
                let mut goals = vec![format!("atom({})", uniq[i])];
                for &callee in planted.get(&i).map(|v| v.as_slice()).unwrap_or(&[]) {
                    goals.push(ws_call(&names[callee], arities[callee], arities[i]));
                }
                if !importable.is_empty() && rng.gen_bool(0.25) {
                    let (em, en, ea) = importable[rng.gen_range(0..importable.len())].clone();
                    goals.push(ws_call(&en, ea, arities[i]));
                    imports.entry(em).or_default().insert((en, ea));
                }
                let head = if arities[i] == 0 {
                    names[i].clone()
                } else {
                    let vars: Vec<String> =
                        (0..arities[i]).map(|v| var_name(1, v)).collect();
                    format!("{}({})", names[i], vars.join(", "))
                };
                body.push_str(&format!("{head} :- {}.\n", goals.join(", ")));
            }
            body.push('\n');
        }
        // dead island: a chain plus noise, never called from live code
        let n_dead = rng.gen_range(3..=6usize);
        for d in 0..n_dead {
            let name = format!("{module}_d{d}");
            let mut goals = vec![format!("atom({module}_du{d})")];
            if d + 1 < n_dead {
                goals.push(format!("{module}_d{}(X)", d + 1));
            }
            if rng.gen_bool(0.3) {
                let other = rng.gen_range(0..n_dead);
                goals.push(format!("{module}_d{other}(X)"));
            }
            if rng.gen_bool(0.2) {
                let e = rng.gen_range(0..n_exp);
                goals.push(ws_call(&names[e], arities[e], 1));
            }
            body.push_str(&format!("{name}(X) :- {}.\n", goals.join(", ")));
            dead.insert(PredId::new(&module, &name, 1));
        }
        body.push('\n');
        for i in 0..n_live {
            if let Some(cl) = leaf_clauses[i].take() {
                clone_pool.push((PredId::new(&module, &names[i], arities[i]), arities[i], cl));
            }
        }
        // planted clone of a self-contained predicate seen so far
        let mut exports: Vec<(String, usize)> = (0..n_exp)
            .map(|i| (names[i].clone(), arities[i]))
            .collect();
        if !clone_pool.is_empty() && rng.gen_bool(0.6) {
            let pick = rng.gen_range(0..clone_pool.len());
            let (src_pid, arity, clauses) = clone_pool.remove(pick);
            let clone_name = format!("{module}_c0");
            let mut cloned = clauses;
            rename_pred_in_clauses(&mut cloned, &src_pid.name, arity, &clone_name);
            for c in &cloned {
                body.push_str(&render_clause(c, 1));
            }
            body.push('\n');
            let clone_pid = PredId::new(&module, &clone_name, arity);
            let pair = if src_pid <= clone_pid {
                (src_pid, clone_pid.clone())
            } else {
                (clone_pid.clone(), src_pid)
            };
            dup_pairs.insert(pair);
            exports.push((clone_name, arity));
        }
        let mut text = format!(
            ":- module({module}, [{}]).\n",
            exports
                .iter()
                .map(|(n, a)| format!("{n}/{a}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        for (m, list) in &imports {
            let l: Vec<String> = list.iter().map(|(n, a)| format!("{n}/{a}")).collect();
            text.push_str(&format!(":- use_module({m}, [{}]).\n", l.join(", ")));
        }
        text.push('\n');
        text.push_str(&body);
        total += text.lines().count();
        files.push((format!("{module}.pl"), text));
        for (n, a) in &exports {
            importable.push((module.clone(), n.clone(), *a));
        }
        k += 1;
    }
    SyntheticWorkspace {
        files,
        dead,
        duplicate_pairs: dup_pairs,
        total_lines: total,
    }
}

fn ws_call(callee: &str, callee_arity: usize, caller_arity: usize) -> String {
    if callee_arity == 0 {
        return callee.to_string();
    }
    let args: Vec<String> = (0..callee_arity)
        .map(|q| {
            if caller_arity > 0 {
                var_name(1, q % caller_arity)
            } else {
                "0".to_string()
            }
        })
        .collect();
    format!("{callee}({})", args.join(", "))
}

// Printer round-trip corpus.

/// Files mixing plain clauses, operator directives with uses, quoting and
/// escapes, number shapes, lists, and comments. Roughly a quarter of the
/// files declare custom operators.
pub fn roundtrip_corpus(seed: u64, count: usize) -> Vec<(String, String)> {
    let mut rng = rng_for(seed);
    (0..count)
        .map(|idx| {
            let tag = format!("r{idx}");
            let mut text = String::new();
            let n_chunks = rng.gen_range(2..=4usize);
            for c in 0..n_chunks {
                let kind = if c == 0 && idx % 4 == 0 {
                    1
                } else {
                    rng.gen_range(0..6)
                };
                match kind {
                    0 => chunk_plain(&mut rng, &tag, c, &mut text),
                    1 => chunk_ops(&mut rng, &tag, c, &mut text),
                    2 => chunk_quoted(&tag, c, &mut text),
                    3 => chunk_numbers(&tag, c, &mut text),
                    4 => chunk_lists(&tag, c, &mut text),
                    _ => chunk_comments(&tag, c, &mut text),
                }
            }
            (format!("{tag}.pl"), text)
        })
        .collect()
}

fn chunk_plain(rng: &mut ChaCha8Rng, tag: &str, c: usize, out: &mut String) {
    let atoms: Vec<String> = ["alpha", "beta", "gamma"].iter().map(|s| s.to_string()).collect();
    for i in 0..rng.gen_range(2..=3usize) {
        let name = format!("{tag}c{c}p{i}");
        let arity = rng.gen_range(0..=3);
        let n_clauses = rng.gen_range(1..=2);
        for cl in ir_pred(rng, &name, arity, &atoms, n_clauses) {
            out.push_str(&render_clause(&cl, 0));
        }
    }
    out.push('\n');
}

fn chunk_ops(rng: &mut ChaCha8Rng, tag: &str, c: usize, out: &mut String) {
    let infix = ["~~>", "==>", "<=>", "<+>", ":=:"][rng.gen_range(0..5)];
    let prio = rng.gen_range(400..=700);
    out.push_str(&format!(":- op({prio}, xfx, {infix}).\n"));
    out.push_str(&format!("{tag}c{c}rel(A, B) :- A {infix} B.\n"));
    out.push_str(&format!("{tag}c{c}pair(x {infix} y).\n"));
    if rng.gen_bool(0.6) {
        let pre = ["~~", "##", "@<>"][rng.gen_range(0..3)];
        let pprio = rng.gen_range(200..=390);
        out.push_str(&format!(":- op({pprio}, fy, {pre}).\n"));
        out.push_str(&format!("{tag}c{c}one({pre} a).\n"));
        out.push_str(&format!("{tag}c{c}two({pre} {pre} b).\n"));
    }
    if rng.gen_bool(0.5) {
        let chain = ["<*>", "&&&", "$$"][rng.gen_range(0..3)];
        let cprio = rng.gen_range(450..=650);
        out.push_str(&format!(":- op({cprio}, yfx, {chain}).\n"));
        out.push_str(&format!(
            "{tag}c{c}sum(S) :- S = a {chain} b {chain} c.\n"
        ));
    }
    out.push('\n');
}

fn chunk_quoted(tag: &str, c: usize, out: &mut String) {
    out.push_str(&format!("{tag}c{c}q('hello world').\n"));
    out.push_str(&format!("{tag}c{c}q('it''s').\n"));
    out.push_str(&format!("{tag}c{c}q('line\\nbreak').\n"));
    out.push_str(&format!("{tag}c{c}q('Upper Case').\n"));
    out.push_str(&format!(
        "{tag}c{c}s(\"a string\", \"with \\\"escape\\\"\").\n"
    ));
    out.push('\n');
}

fn chunk_numbers(tag: &str, c: usize, out: &mut String) {
    out.push_str(&format!("{tag}c{c}n(0, 42, 999999).\n"));
    out.push_str(&format!("{tag}c{c}f(3.14, 0.5, 123.456).\n"));
    out.push_str(&format!("{tag}c{c}e(2.0e10, 1.5e-3).\n"));
    out.push_str(&format!(
        "{tag}c{c}m(X) :- X is 3 + 4 * 2 - 6 / 3.\n"
    ));
    out.push_str(&format!(
        "{tag}c{c}cmp(A, B) :- A < B, A =< 10, B >= -2.\n"
    ));
    out.push('\n');
}

fn chunk_lists(tag: &str, c: usize, out: &mut String) {
    out.push_str(&format!("{tag}c{c}l([]).\n"));
    out.push_str(&format!("{tag}c{c}l([1, 2, 3]).\n"));
    out.push_str(&format!("{tag}c{c}l([a | T]) :- {tag}c{c}l(T).\n"));
    out.push_str(&format!(
        "{tag}c{c}zip([], [], []).\n{tag}c{c}zip([H1 | T1], [H2 | T2], [H1 - H2 | T]) :- {tag}c{c}zip(T1, T2, T).\n"
    ));
    out.push('\n');
}

fn chunk_comments(tag: &str, c: usize, out: &mut String) {
    out.push_str(&format!("% standalone comment for {tag}\n"));
    out.push_str(&format!("{tag}c{c}k(a). % trailing note\n"));
    out.push_str("/* block\n   comment */\n");
    out.push_str(&format!("{tag}c{c}k(b).\n"));
    out.push('\n');
}

// Refactoring instances with oracle-checkable query plans.

/// One behavioural check: both query texts run in [`TransformInstance::module`],
/// the left on the original program and the right on the transformed one,
/// and the answer sets must agree under the projection.
pub struct QueryGroup {
    pub queries: Vec<(String, String)>,
    pub projection: Projection,
}

pub struct TransformInstance {
    pub files: Vec<(String, String)>,
    pub request: RefactoringRequest,
    /// Module both query sides run in.
    pub module: String,
    pub groups: Vec<QueryGroup>,
    /// `(functor, arity, new_name)` applied to original-side answer terms
    /// before comparison; used by rename-functor, where answers themselves
    /// carry the renamed symbol.
    pub answer_map: Option<(String, usize, String)>,
}

pub const TRANSFORM_FAMILIES: &[&str] = &[
    "replace-cut-with-ite",
    "extract-predicate",
    "rename-predicate",
    "rename-module",
    "rename-functor",
    "reorder-args",
    "merge-modules",
    "split-module",
    "move-predicate",
    "hide-predicates",
    "eliminate-qualification",
    "remove-dead",
    "specialize",
];

pub fn transform_instances(family: &str, seed: u64, count: usize) -> Vec<TransformInstance> {
    (0..count)
        .map(|i| {
            let mut rng =
                rng_for(seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let tag = format!("i{i}");
            match family {
                "replace-cut-with-ite" => inst_cut_ite(&mut rng, &tag),
                "extract-predicate" => inst_extract(&mut rng, &tag),
                "rename-predicate" => inst_rename_pred(&mut rng, &tag),
                "rename-module" => inst_rename_mod(&mut rng, &tag),
                "rename-functor" => inst_rename_functor(&mut rng, &tag),
                "reorder-args" => inst_reorder(&mut rng, &tag),
                "merge-modules" => inst_merge(&mut rng, &tag),
                "split-module" => inst_split(&mut rng, &tag),
                "move-predicate" => inst_move(&mut rng, &tag),
                "hide-predicates" => inst_hide(&mut rng, &tag),
                "eliminate-qualification" => inst_elim(&mut rng, &tag),
                "remove-dead" => inst_remove_dead(&mut rng, &tag),
                "specialize" => inst_specialize(&mut rng, &tag),
                other => panic!("unknown refactoring family {other}"),
            }
        })
        .collect()
}

/// Predicates arranged in tiers (facts, middle wrappers, entry points) so
/// every query exhausts far below a 20-step resolution budget.
struct DagModule {
    name: String,
    body: String,
    exports: Vec<(String, usize)>,
    preds: Vec<(String, usize)>,
    tops: Vec<(String, usize)>,
    mids: Vec<(String, usize)>,
    leaves: Vec<(String, usize)>,
}

fn dag_module(rng: &mut ChaCha8Rng, module: &str, tag: &str) -> DagModule {
    let mut body = String::new();
    let mut leaves = Vec::new();
    let n_leaf = rng.gen_range(1..=2usize);
    for i in 0..n_leaf {
        let name = format!("{tag}leaf{i}");
        let arity = if i == 0 { 2 } else { rng.gen_range(1..=2) };
        for r in 0..rng.gen_range(1..=2usize) {
            let args: Vec<String> = (0..arity)
                .map(|col| {
                    if rng.gen_bool(0.3) {
                        format!("{}", r * 10 + col)
                    } else {
                        format!("{tag}a{r}{col}")
                    }
                })
                .collect();
            body.push_str(&format!("{name}({}).\n", args.join(", ")));
        }
        leaves.push((name, arity));
    }
    body.push('\n');
    let mut mids = Vec::new();
    for i in 0..rng.gen_range(1..=2usize) {
        let (ln, la) = leaves[rng.gen_range(0..leaves.len())].clone();
        let name = format!("{tag}mid{i}");
        let vars: Vec<String> = (0..la).map(|v| var_name(1, v)).collect();
        body.push_str(&format!(
            "{name}({args}) :- {ln}({args}).\n",
            args = vars.join(", ")
        ));
        if rng.gen_bool(0.4) {
            let ground: Vec<String> = (0..la).map(|q| format!("{tag}g{q}")).collect();
            body.push_str(&format!("{name}({}).\n", ground.join(", ")));
        }
        mids.push((name, la));
    }
    body.push('\n');
    let mut tops = Vec::new();
    for i in 0..rng.gen_range(1..=2usize) {
        let (cn, ca) = if rng.gen_bool(0.7) {
            mids[rng.gen_range(0..mids.len())].clone()
        } else {
            leaves[rng.gen_range(0..leaves.len())].clone()
        };
        let name = format!("{tag}top{i}");
        let vars: Vec<String> = (0..ca).map(|v| var_name(1, v)).collect();
        let mut clause = format!("{name}({args}) :- {cn}({args})", args = vars.join(", "));
        if rng.gen_bool(0.5) {
            let (ln, la) = leaves[0].clone();
            let extra: Vec<String> = (0..la)
                .map(|q| if q == 0 && ca > 0 { "A".to_string() } else { format!("Z{q}") })
                .collect();
            clause.push_str(&format!(", {ln}({})", extra.join(", ")));
        }
        clause.push_str(".\n");
        body.push_str(&clause);
        tops.push((name, ca));
    }
    let mut exports = tops.clone();
    for m in &mids {
        if rng.gen_bool(0.5) {
            exports.push(m.clone());
        }
    }
    let mut preds = leaves.clone();
    preds.extend(mids.iter().cloned());
    preds.extend(tops.iter().cloned());
    DagModule {
        name: module.to_string(),
        body,
        exports,
        preds,
        tops,
        mids,
        leaves,
    }
}

fn render_module(
    name: &str,
    exports: &[(String, usize)],
    uses: &[(String, Vec<(String, usize)>)],
    body: &str,
) -> String {
    let ex: Vec<String> = exports.iter().map(|(n, a)| format!("{n}/{a}")).collect();
    let mut t = format!(":- module({name}, [{}]).\n", ex.join(", "));
    for (m, list) in uses {
        if list.is_empty() {
            t.push_str(&format!(":- use_module({m}).\n"));
        } else {
            let l: Vec<String> = list.iter().map(|(n, a)| format!("{n}/{a}")).collect();
            t.push_str(&format!(":- use_module({m}, [{}]).\n", l.join(", ")));
        }
    }
    t.push('\n');
    t.push_str(body);
    t
}

fn free_call(name: &str, arity: usize) -> String {
    if arity == 0 {
        name.to_string()
    } else {
        let vars: Vec<String> = (0..arity).map(|i| format!("Q{i}")).collect();
        format!("{name}({})", vars.join(", "))
    }
}

fn same(q: String) -> (String, String) {
    (q.clone(), q)
}

fn identity_group(queries: Vec<(String, String)>) -> QueryGroup {
    QueryGroup {
        queries,
        projection: Projection::Identity,
    }
}

fn inst_cut_ite(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let ka = format!("k{tag}a");
    let (body, pred, exports, queries) = if rng.gen_bool(0.6) {
        // only oracle-supported pure guards: identity and unification
        let guard = if rng.gen_bool(0.5) {
            format!("K == {ka}")
        } else {
            format!("K = {ka}")
        };
        let body = format!(
            "pick(K, V) :- {guard}, !, V = r{tag}one.\npick(_, r{tag}def).\n\n\
             probe(V) :- pick({ka}, V).\nprobe2(V) :- pick(zz{tag}, V).\n"
        );
        let queries = vec![
            "pick(Q0, Q1)".to_string(),
            format!("pick({ka}, Q1)"),
            format!("pick(zz{tag}, Q1)"),
            "probe(Q0)".to_string(),
            "probe2(Q0)".to_string(),
        ];
        (
            body,
            "pick",
            vec![("pick".to_string(), 2), ("probe".to_string(), 1), ("probe2".to_string(), 1)],
            queries,
        )
    } else {
        let l = format!("l{tag}");
        let r = format!("r{tag}");
        let body = format!("route({ka}, {l}) :- !.\nroute(_, {r}).\n");
        let queries = vec![
            "route(Q0, Q1)".to_string(),
            format!("route({ka}, Q1)"),
            format!("route(zz{tag}, Q1)"),
            format!("route(Q0, {l})"),
            format!("route(Q0, {r})"),
        ];
        (body, "route", vec![("route".to_string(), 2)], queries)
    };
    TransformInstance {
        files: vec![(format!("{m}.pl"), render_module(&m, &exports, &[], &body))],
        request: RefactoringRequest::ReplaceCutWithIte {
            pred: PredId::new(&m, pred, 2),
        },
        module: m,
        groups: vec![identity_group(queries.into_iter().map(same).collect())],
        answer_map: None,
    }
}

fn inst_extract(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let f = format!("f{tag}");
    let g = format!("g{tag}");
    let third = rng.gen_bool(0.4);
    let occ3 = rng.gen_bool(0.3);
    let mut body = String::new();
    body.push_str(&format!("{f}(d{tag}1, e{tag}1).\n{f}(d{tag}2, e{tag}2).\n"));
    body.push_str(&format!("{g}(e{tag}1, o{tag}1).\n{g}(e{tag}2, o{tag}2).\n"));
    body.push_str(&format!("h{tag}1(d{tag}1).\nh{tag}1(d{tag}2).\n"));
    body.push_str(&format!("h{tag}2(o{tag}1).\nh{tag}2(o{tag}2).\n"));
    if occ3 {
        body.push_str(&format!("h{tag}3(o{tag}1).\n"));
    }
    if third {
        body.push_str(&format!("k{tag}(o{tag}1).\nk{tag}(o{tag}2).\n"));
    }
    body.push('\n');
    let phrase = |a: &str, mid: &str, b: &str| {
        if third {
            format!("{f}({a}, {mid}), {g}({mid}, {b}), k{tag}({b})")
        } else {
            format!("{f}({a}, {mid}), {g}({mid}, {b})")
        }
    };
    body.push_str(&format!("s1(X, Y) :- {}, h{tag}1(X).\n", phrase("X", "M", "Y")));
    body.push_str(&format!("s2(A, B) :- {}, h{tag}2(B).\n", phrase("A", "N", "B")));
    let mut exports = vec![("s1".to_string(), 2), ("s2".to_string(), 2)];
    if occ3 {
        body.push_str(&format!("s3(C, D) :- {}, h{tag}3(D).\n", phrase("C", "P", "D")));
        exports.push(("s3".to_string(), 2));
    }
    let files = vec![(format!("{m}.pl"), render_module(&m, &exports, &[], &body))];
    let program = load_program(&files, None, &Config::default());
    let seqs = find_repeated_sequences(&program, 2, 2);
    let seq = seqs
        .iter()
        .find(|s| s.occurrences.len() >= 2)
        .expect("planted repeated sequence is found")
        .clone();
    let dest = if rng.gen_bool(0.25) {
        format!("px{tag}")
    } else {
        m.clone()
    };
    let mut queries = vec![same("s1(Q0, Q1)".to_string()), same("s2(Q0, Q1)".to_string())];
    if occ3 {
        queries.push(same("s3(Q0, Q1)".to_string()));
    }
    TransformInstance {
        files,
        request: RefactoringRequest::ExtractPredicate {
            target: ExtractTarget::Sequence(seq),
            name: format!("piece{tag}"),
            module: dest,
        },
        module: m,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_rename_pred(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let d = dag_module(rng, &m, &format!("a{tag}"));
    let (victim, va) = d.preds[rng.gen_range(0..d.preds.len())].clone();
    let new_name = format!("ren{tag}");
    let queries = d
        .exports
        .iter()
        .map(|(n, a)| {
            if *n == victim && *a == va {
                (free_call(n, *a), free_call(&new_name, *a))
            } else {
                same(free_call(n, *a))
            }
        })
        .collect();
    TransformInstance {
        files: vec![(format!("{m}.pl"), render_module(&m, &d.exports, &[], &d.body))],
        request: RefactoringRequest::RenamePredicate {
            pred: PredId::new(&m, &victim, va),
            new_name,
        },
        module: m,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_rename_mod(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let src = format!("sr{tag}");
    let cons = format!("c{tag}");
    let d = dag_module(rng, &src, &format!("s{tag}"));
    let mut body = String::new();
    let mut wrappers: Vec<(String, usize)> = Vec::new();
    let mut used: Vec<(String, usize)> = Vec::new();
    for (i, (en, ea)) in d.exports.iter().take(2).enumerate() {
        let w = format!("w{i}");
        let vars: Vec<String> = (0..*ea).map(|v| var_name(1, v)).collect();
        if *ea == 0 {
            body.push_str(&format!("{w} :- {en}.\n"));
        } else {
            body.push_str(&format!(
                "{w}({args}) :- {en}({args}).\n",
                args = vars.join(", ")
            ));
        }
        wrappers.push((w, *ea));
        used.push((en.clone(), *ea));
    }
    if rng.gen_bool(0.5) {
        let (en, ea) = d.exports[0].clone();
        let vars: Vec<String> = (0..ea).map(|v| var_name(1, v)).collect();
        if ea == 0 {
            body.push_str(&format!("wq :- {src}:{en}.\n"));
        } else {
            body.push_str(&format!(
                "wq({args}) :- {src}:{en}({args}).\n",
                args = vars.join(", ")
            ));
        }
        wrappers.push(("wq".to_string(), ea));
    }
    let uses = if rng.gen_bool(0.3) {
        vec![(src.clone(), Vec::new())]
    } else {
        vec![(src.clone(), used)]
    };
    let queries = wrappers.iter().map(|(n, a)| same(free_call(n, *a))).collect();
    TransformInstance {
        files: vec![
            (format!("{src}.pl"), render_module(&src, &d.exports, &[], &d.body)),
            (format!("{cons}.pl"), render_module(&cons, &wrappers, &uses, &body)),
        ],
        request: RefactoringRequest::RenameModule {
            module: src,
            new_name: format!("dst{tag}"),
        },
        module: cons,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_rename_functor(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let bx = format!("bx{tag}");
    let bxn = format!("{bx}n");
    if rng.gen_bool(0.3) {
        // arity 0: rename a data atom
        let body = format!(
            "tagof({bx}).\ntagof(other{tag}).\nkeep(X) :- tagof(X).\n"
        );
        let exports = vec![("tagof".to_string(), 1), ("keep".to_string(), 1)];
        let queries = vec![
            same("keep(Q0)".to_string()),
            (format!("tagof({bx})"), format!("tagof({bxn})")),
            same(format!("tagof(other{tag})")),
        ];
        return TransformInstance {
            files: vec![(format!("{m}.pl"), render_module(&m, &exports, &[], &body))],
            request: RefactoringRequest::RenameFunctor {
                name: bx.clone(),
                arity: 0,
                new_name: bxn.clone(),
                occurrences: None,
            },
            module: m,
            groups: vec![identity_group(queries)],
            answer_map: Some((bx, 0, bxn)),
        };
    }
    let body = format!(
        "wrap(X, {bx}(X)).\nunwrap({bx}(X), X).\n\
         store({bx}(a{tag}1)).\nstore({bx}(a{tag}2)).\nfetch(V) :- store(V).\n"
    );
    let exports = vec![
        ("wrap".to_string(), 2),
        ("unwrap".to_string(), 2),
        ("store".to_string(), 1),
        ("fetch".to_string(), 1),
    ];
    let queries = vec![
        same(format!("wrap(a{tag}1, Q0)")),
        (
            format!("unwrap({bx}(a{tag}1), Q0)"),
            format!("unwrap({bxn}(a{tag}1), Q0)"),
        ),
        same("fetch(Q0)".to_string()),
        same("wrap(Q0, Q1)".to_string()),
    ];
    TransformInstance {
        files: vec![(format!("{m}.pl"), render_module(&m, &exports, &[], &body))],
        request: RefactoringRequest::RenameFunctor {
            name: bx.clone(),
            arity: 1,
            new_name: bxn.clone(),
            occurrences: None,
        },
        module: m,
        groups: vec![identity_group(queries)],
        answer_map: Some((bx, 1, bxn)),
    }
}

fn inst_reorder(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let mut d = dag_module(rng, &m, &format!("a{tag}"));
    let (l0, _) = d.leaves[0].clone();
    let arity = rng.gen_range(2..=3usize);
    if arity == 2 {
        d.body.push_str(&format!("ro(A, B) :- {l0}(A, B).\n"));
    } else {
        d.body
            .push_str(&format!("ro(A, B, C) :- {l0}(A, B), C = t{tag}.\n"));
    }
    d.body.push_str("rw(X) :- ro(X, _");
    if arity == 3 {
        d.body.push_str(", _");
    }
    d.body.push_str(").\n");
    if rng.gen_bool(0.4) {
        let modes: Vec<&str> = (0..arity).map(|i| if i == 0 { "+" } else { "-" }).collect();
        d.body.push_str(&format!(":- mode(ro({})).\n", modes.join(", ")));
    }
    d.exports.push(("ro".to_string(), arity));
    d.exports.push(("rw".to_string(), 1));
    let mut perm: Vec<usize> = (1..=arity).collect();
    while perm.iter().enumerate().all(|(i, &p)| p == i + 1) {
        perm.shuffle(rng);
    }
    let mut other: Vec<(String, String)> = d
        .tops
        .iter()
        .map(|(n, a)| same(free_call(n, *a)))
        .collect();
    other.push(same("rw(Q0)".to_string()));
    TransformInstance {
        files: vec![(format!("{m}.pl"), render_module(&m, &d.exports, &[], &d.body))],
        request: RefactoringRequest::ReorderArguments {
            pred: PredId::new(&m, "ro", arity),
            permutation: perm.clone(),
        },
        module: m,
        groups: vec![
            QueryGroup {
                queries: vec![same(free_call("ro", arity))],
                projection: Projection::Permutation(perm),
            },
            identity_group(other),
        ],
        answer_map: None,
    }
}

fn inst_merge(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let ma = format!("a{tag}");
    let mb = format!("b{tag}");
    let mc = format!("c{tag}");
    let da = dag_module(rng, &ma, &format!("x{tag}"));
    let db = dag_module(rng, &mb, &format!("y{tag}"));
    let mut ea = da.exports.clone();
    let mut eb = db.exports.clone();
    let mut abody = da.body.clone();
    let mut bbody = db.body.clone();
    let dup = rng.gen_bool(0.4);
    let sh = format!("sh{tag}");
    if dup {
        let shared = format!("{sh}(s{tag}1).\n{sh}(s{tag}2).\n");
        abody.push_str(&shared);
        bbody.push_str(&shared);
        ea.push((sh.clone(), 1));
        eb.push((sh.clone(), 1));
    }
    let mut cbody = String::new();
    let mut wrappers = Vec::new();
    let mut used_a = Vec::new();
    let mut used_b = Vec::new();
    let (an, aa) = da.exports[0].clone();
    let (bn, ba) = db.exports[0].clone();
    for (i, (n, a, used)) in [
        ("w0", &(an.clone(), aa), &mut used_a),
        ("w1", &(bn.clone(), ba), &mut used_b),
    ]
    .into_iter()
    .map(|(w, p, u)| (w, p, u))
    .enumerate()
    {
        let _ = i;
        let vars: Vec<String> = (0..a.1).map(|v| var_name(1, v)).collect();
        if a.1 == 0 {
            cbody.push_str(&format!("{n} :- {}.\n", a.0));
        } else {
            cbody.push_str(&format!(
                "{n}({args}) :- {callee}({args}).\n",
                args = vars.join(", "),
                callee = a.0
            ));
        }
        wrappers.push((n.to_string(), a.1));
        used.push(a.clone());
    }
    if dup {
        cbody.push_str(&format!("wsh(X) :- {sh}(X).\n"));
        wrappers.push(("wsh".to_string(), 1));
        used_a.push((sh.clone(), 1));
    }
    if rng.gen_bool(0.3) {
        let vars: Vec<String> = (0..aa).map(|v| var_name(1, v)).collect();
        if aa == 0 {
            cbody.push_str(&format!("wq :- {ma}:{an}.\n"));
        } else {
            cbody.push_str(&format!(
                "wq({args}) :- {ma}:{an}({args}).\n",
                args = vars.join(", ")
            ));
        }
        wrappers.push(("wq".to_string(), aa));
    }
    let new_name = if rng.gen_bool(0.3) {
        ma.clone()
    } else {
        format!("g{tag}")
    };
    let queries = wrappers.iter().map(|(n, a)| same(free_call(n, *a))).collect();
    TransformInstance {
        files: vec![
            (format!("{ma}.pl"), render_module(&ma, &ea, &[], &abody)),
            (format!("{mb}.pl"), render_module(&mb, &eb, &[], &bbody)),
            (
                format!("{mc}.pl"),
                render_module(
                    &mc,
                    &wrappers,
                    &[(ma.clone(), used_a), (mb.clone(), used_b)],
                    &cbody,
                ),
            ),
        ],
        request: RefactoringRequest::MergeModules {
            modules: vec![ma, mb],
            new_name,
        },
        module: mc,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_split(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let cons = format!("c{tag}");
    let d = dag_module(rng, &m, &format!("p{tag}"));
    let mut order = d.preds.clone();
    order.shuffle(rng);
    let cut = rng.gen_range(1..order.len());
    let parts = vec![
        (format!("pa{tag}"), order[..cut].to_vec()),
        (format!("pb{tag}"), order[cut..].to_vec()),
    ];
    let mut cbody = String::new();
    let mut wrappers = Vec::new();
    let mut used = Vec::new();
    for (i, (en, ea)) in d.exports.iter().take(2).enumerate() {
        let w = format!("w{i}");
        let vars: Vec<String> = (0..*ea).map(|v| var_name(1, v)).collect();
        if *ea == 0 {
            cbody.push_str(&format!("{w} :- {en}.\n"));
        } else {
            cbody.push_str(&format!(
                "{w}({args}) :- {en}({args}).\n",
                args = vars.join(", ")
            ));
        }
        wrappers.push((w, *ea));
        used.push((en.clone(), *ea));
    }
    let queries = wrappers.iter().map(|(n, a)| same(free_call(n, *a))).collect();
    TransformInstance {
        files: vec![
            (format!("{m}.pl"), render_module(&m, &d.exports, &[], &d.body)),
            (
                format!("{cons}.pl"),
                render_module(&cons, &wrappers, &[(m.clone(), used)], &cbody),
            ),
        ],
        request: RefactoringRequest::SplitModule { module: m, parts },
        module: cons,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_move(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let ma = format!("a{tag}");
    let util = format!("u{tag}");
    let cons = format!("c{tag}");
    let da = dag_module(rng, &ma, &format!("v{tag}"));
    let ubody = format!("{util}fact(a{tag}u).\n");
    let uexports = vec![(format!("{util}fact"), 1)];
    let (victim, va) = da.preds[rng.gen_range(0..da.preds.len())].clone();
    let mut cbody = String::new();
    let mut wrappers = Vec::new();
    let mut used = Vec::new();
    for (i, (en, ea)) in da.exports.iter().take(2).enumerate() {
        let w = format!("w{i}");
        let vars: Vec<String> = (0..*ea).map(|v| var_name(1, v)).collect();
        if *ea == 0 {
            cbody.push_str(&format!("{w} :- {en}.\n"));
        } else {
            cbody.push_str(&format!(
                "{w}({args}) :- {en}({args}).\n",
                args = vars.join(", ")
            ));
        }
        wrappers.push((w, *ea));
        used.push((en.clone(), *ea));
    }
    let queries = wrappers.iter().map(|(n, a)| same(free_call(n, *a))).collect();
    TransformInstance {
        files: vec![
            (format!("{ma}.pl"), render_module(&ma, &da.exports, &[], &da.body)),
            (format!("{util}.pl"), render_module(&util, &uexports, &[], &ubody)),
            (
                format!("{cons}.pl"),
                render_module(&cons, &wrappers, &[(ma.clone(), used)], &cbody),
            ),
        ],
        request: RefactoringRequest::MovePredicate {
            pred: PredId::new(&ma, &victim, va),
            dest: util,
        },
        module: cons,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_hide(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let cons = format!("c{tag}");
    let d = dag_module(rng, &m, &format!("a{tag}"));
    // export everything; only what the consumer imports stays exported
    let exports_all = d.preds.clone();
    let mut cbody = String::new();
    let mut wrappers = Vec::new();
    let mut used = Vec::new();
    for (i, (en, ea)) in d.tops.iter().enumerate() {
        let w = format!("w{i}");
        let vars: Vec<String> = (0..*ea).map(|v| var_name(1, v)).collect();
        if *ea == 0 {
            cbody.push_str(&format!("{w} :- {en}.\n"));
        } else {
            cbody.push_str(&format!(
                "{w}({args}) :- {en}({args}).\n",
                args = vars.join(", ")
            ));
        }
        wrappers.push((w, *ea));
        used.push((en.clone(), *ea));
    }
    let queries = wrappers.iter().map(|(n, a)| same(free_call(n, *a))).collect();
    let _ = &d.mids;
    TransformInstance {
        files: vec![
            (format!("{m}.pl"), render_module(&m, &exports_all, &[], &d.body)),
            (
                format!("{cons}.pl"),
                render_module(&cons, &wrappers, &[(m.clone(), used)], &cbody),
            ),
        ],
        request: RefactoringRequest::HidePredicates,
        module: cons,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_elim(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let ma = format!("a{tag}");
    let mb = format!("b{tag}");
    let db = dag_module(rng, &mb, &format!("b{tag}"));
    let mut abody = String::new();
    let mut aexports = Vec::new();
    let (tn, ta) = db.tops[0].clone();
    let vars: Vec<String> = (0..ta).map(|v| var_name(1, v)).collect();
    if ta == 0 {
        abody.push_str(&format!("e0 :- {mb}:{tn}.\n"));
    } else {
        abody.push_str(&format!(
            "e0({args}) :- {mb}:{tn}({args}).\n",
            args = vars.join(", ")
        ));
    }
    aexports.push(("e0".to_string(), ta));
    // a private callee: elimination must export and import it
    let (ln, la) = db.leaves[0].clone();
    let lvars: Vec<String> = (0..la).map(|v| var_name(1, v)).collect();
    abody.push_str(&format!(
        "e1({args}) :- {mb}:{ln}({args}).\n",
        args = lvars.join(", ")
    ));
    aexports.push(("e1".to_string(), la));
    if rng.gen_bool(0.5) {
        abody.push_str(&format!(
            "e2(X) :- X = pick{tag}, {mb}:{ln}({args}).\n",
            args = (0..la)
                .map(|q| if q == 0 { "Y".to_string() } else { format!("Z{q}") })
                .collect::<Vec<_>>()
                .join(", ")
        ));
        aexports.push(("e2".to_string(), 1));
    }
    let queries = aexports.iter().map(|(n, a)| same(free_call(n, *a))).collect();
    TransformInstance {
        files: vec![
            (format!("{ma}.pl"), render_module(&ma, &aexports, &[], &abody)),
            (format!("{mb}.pl"), render_module(&mb, &db.exports, &[], &db.body)),
        ],
        request: RefactoringRequest::EliminateQualification,
        module: ma,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_remove_dead(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let mut d = dag_module(rng, &m, &format!("a{tag}"));
    let n_dead = rng.gen_range(2..=3usize);
    for i in 0..n_dead {
        if i + 1 < n_dead {
            d.body
                .push_str(&format!("dd{tag}{i}(X) :- dd{tag}{}(X).\n", i + 1));
        } else {
            d.body.push_str(&format!("dd{tag}{i}(da{tag}).\n"));
        }
    }
    let scope = if rng.gen_bool(0.3) {
        DeadScope::Module(m.clone())
    } else {
        DeadScope::System
    };
    let queries = d.exports.iter().map(|(n, a)| same(free_call(n, *a))).collect();
    TransformInstance {
        files: vec![(format!("{m}.pl"), render_module(&m, &d.exports, &[], &d.body))],
        request: RefactoringRequest::RemoveDead { scope, force: false },
        module: m,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

fn inst_specialize(rng: &mut ChaCha8Rng, tag: &str) -> TransformInstance {
    let m = format!("m{tag}");
    let numeric = rng.gen_bool(0.3);
    let k1 = if numeric {
        "3".to_string()
    } else {
        format!("k{tag}one")
    };
    let k2 = if numeric {
        "7".to_string()
    } else {
        format!("k{tag}two")
    };
    let mut body = String::new();
    body.push_str(&format!("disp({k1}, r{tag}a).\n"));
    if rng.gen_bool(0.5) {
        body.push_str(&format!("disp({k1}, V) :- V = r{tag}b.\n"));
    }
    body.push_str(&format!("disp({k2}, r{tag}c).\n"));
    if rng.gen_bool(0.5) {
        body.push_str(&format!("disp(_, fb{tag}).\n"));
    }
    body.push_str(&format!("go1(X) :- disp({k1}, X).\n"));
    body.push_str(&format!("go2(X) :- disp({k2}, X).\n"));
    let exports = vec![
        ("disp".to_string(), 2),
        ("go1".to_string(), 1),
        ("go2".to_string(), 1),
    ];
    let queries = vec![
        same("go1(Q0)".to_string()),
        same("go2(Q0)".to_string()),
        same("disp(Q0, Q1)".to_string()),
        same(format!("disp({k1}, Q1)")),
    ];
    TransformInstance {
        files: vec![(format!("{m}.pl"), render_module(&m, &exports, &[], &body))],
        request: RefactoringRequest::SpecializePredicate {
            pred: PredId::new(&m, "disp", 2),
            position: 1,
            value: k1,
            new_name: format!("d{tag}k"),
        },
        module: m,
        groups: vec![identity_group(queries)],
        answer_map: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit::{predicted, Workspace};
    use crate::oracle::{equivalent, solve_text, Completeness};
    use crate::transform::plan;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(graph_case(7).src, graph_case(7).src);
        assert_eq!(clone_case(3), clone_case(3));
        assert_eq!(sequence_case(9), sequence_case(9));
        assert_eq!(pure_case(11).files, pure_case(11).files);
        assert_eq!(roundtrip_corpus(2, 5), roundtrip_corpus(2, 5));
        let a = transform_instances("rename-predicate", 5, 3);
        let b = transform_instances("rename-predicate", 5, 3);
        assert_eq!(
            a.iter().map(|i| &i.files).collect::<Vec<_>>(),
            b.iter().map(|i| &i.files).collect::<Vec<_>>()
        );
    }

    #[test]
    fn graph_case_renders_every_edge() {
        for seed in 0..20 {
            let case = graph_case(seed);
            let files = vec![("g.pl".to_string(), case.src.clone())];
            let p = load_program(&files, None, &Config::default());
            for i in 0..case.n {
                assert!(
                    p.pred(&PredId::user(&graph_pred(i), 0)).is_some(),
                    "seed {seed}: predicate {i} missing"
                );
            }
        }
    }

    #[test]
    fn clone_case_parses_and_sometimes_plants_pairs() {
        let mut found = 0;
        for seed in 0..20 {
            let p = load_program(&clone_case(seed), None, &Config::default());
            found += crate::analysis::duplicate_pairs(&p).len();
        }
        assert!(found > 0, "no planted clone survived across 20 seeds");
    }

    #[test]
    fn sequence_case_parses_and_repeats() {
        let mut found = 0;
        for seed in 0..20 {
            let p = load_program(&sequence_case(seed), None, &Config::default());
            found += find_repeated_sequences(&p, 2, 2).len();
        }
        assert!(found > 0, "no repeated sequence across 20 seeds");
    }

    #[test]
    fn pure_case_queries_always_exhaust() {
        for seed in 0..40 {
            let case = pure_case(seed);
            let p = load_program(&case.files, None, &Config::default());
            for q in &case.queries {
                let s = solve_text(&p, "user", q, 20).unwrap_or_else(|e| {
                    panic!("seed {seed}: query {q}: {e}")
                });
                assert_eq!(
                    s.completeness,
                    Completeness::Exhausted,
                    "seed {seed}: query {q} hit the budget"
                );
            }
        }
    }

    #[test]
    fn synthetic_workspace_matches_planted_truth() {
        let ws = synthetic_workspace(1, 600);
        assert!(ws.total_lines >= 600);
        let p = load_program(&ws.files, None, &Config::default());
        let roots = crate::analysis::default_roots(&p).unwrap();
        let graph = crate::model::CallGraph::build(&p);
        let report = crate::analysis::find_dead(&p, &graph, &roots);
        let found: BTreeSet<PredId> = report.dead.iter().cloned().collect();
        assert_eq!(found, ws.dead);
        let pairs: BTreeSet<(PredId, PredId)> =
            crate::analysis::duplicate_pairs(&p).into_iter().collect();
        assert_eq!(pairs, ws.duplicate_pairs);
    }

    #[test]
    fn roundtrip_corpus_files_parse_alone() {
        for (path, text) in roundtrip_corpus(4, 30) {
            let files = vec![(path.clone(), text)];
            let p = load_program(&files, None, &Config::default());
            assert_eq!(p.files.len(), 1, "{path} failed to load");
        }
    }

    fn apply_instance(inst: &TransformInstance) -> Vec<(String, String)> {
        let p = load_program(&inst.files, None, &Config::default());
        let out = plan(&p, &inst.request);
        assert!(
            out.report.ok(),
            "{}: blocked: {:?}",
            inst.request.id(),
            out.report.reasons
        );
        let ws = Workspace::from_program(&p);
        let delta = predicted(&out.script, &ws).expect("edit script applies");
        let mut after: BTreeMap<String, String> =
            ws.files.iter().map(|(k, v)| (k.clone(), v.text.clone())).collect();
        for (path, new_text) in delta {
            match new_text {
                Some(t) => {
                    after.insert(path, t);
                }
                None => {
                    after.remove(&path);
                }
            }
        }
        after.into_iter().collect()
    }

    #[test]
    fn every_family_plans_cleanly() {
        for family in TRANSFORM_FAMILIES {
            for inst in transform_instances(family, 11, 3) {
                let after = apply_instance(&inst);
                assert!(!after.is_empty());
            }
        }
    }

    #[test]
    fn sampled_instances_preserve_behaviour() {
        for family in ["replace-cut-with-ite", "reorder-args", "specialize"] {
            for inst in transform_instances(family, 21, 2) {
                let before = load_program(&inst.files, None, &Config::default());
                let after_files = apply_instance(&inst);
                let after = load_program(&after_files, None, &Config::default());
                for group in &inst.groups {
                    let ok = equivalent(
                        &before,
                        &inst.module,
                        &after,
                        &inst.module,
                        &group.queries,
                        20,
                        &group.projection,
                    )
                    .unwrap_or_else(|e| panic!("{family}: {e}"));
                    assert!(ok, "{family}: answers diverged");
                }
            }
        }
    }
}
