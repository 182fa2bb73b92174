//! Builds a [`Program`] from parsed source files.
//!
//! Files without a `:- module/2` directive land in the `user` module.
//! Loading never fails on bad input: syntax errors, unresolved imports,
//! and unresolved calls are reported as warnings and the rest of the
//! workspace is modelled.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::callgraph;
use crate::model::{
    Config, Import, Mode, ModuleInfo, Pred, PredId, Program, Resolution, SourceFile, Warning,
    USER_MODULE,
};
use crate::span::FileId;
use crate::syntax::ast::{DirectiveKind, Item, Term};
use crate::syntax::parser::parse_file;

/// Loads `files` (path, text) in the given order. `modes_text` is an
/// optional sidecar of mode declarations applied by name/arity to every
/// matching predicate.
pub fn load_program(
    files: &[(String, String)],
    modes_text: Option<&str>,
    config: &Config,
) -> Program {
    let mut warnings = Vec::new();
    let mut sources = Vec::new();
    for (i, (path, text)) in files.iter().enumerate() {
        let fid = FileId(i as u32);
        let parsed = parse_file(text, fid);
        for e in &parsed.errors {
            warnings.push(Warning::Syntax {
                path: path.clone(),
                message: e.message.clone(),
                span: e.span,
            });
        }
        let module = parsed
            .items
            .iter()
            .find_map(|item| match item {
                Item::Directive(d) => match &d.kind {
                    DirectiveKind::Module { name, .. } => Some(name.clone()),
                    _ => None,
                },
                _ => None,
            })
            .unwrap_or_else(|| USER_MODULE.to_string());
        sources.push(SourceFile {
            path: path.clone(),
            file: fid,
            text: text.clone(),
            items: parsed.items,
            module,
            ops: parsed.ops,
        });
    }

    let mut modules: BTreeMap<String, ModuleInfo> = BTreeMap::new();
    for src in &sources {
        let entry = modules
            .entry(src.module.clone())
            .or_insert_with(|| ModuleInfo {
                name: src.module.clone(),
                files: Vec::new(),
                exports: Vec::new(),
                decl_span: None,
                imports: Vec::new(),
                preds: BTreeMap::new(),
            });
        entry.files.push(src.file);

        let mut dynamics: BTreeSet<(String, usize)> = BTreeSet::new();
        for item in &src.items {
            match item {
                Item::Directive(d) => match &d.kind {
                    DirectiveKind::Module { exports, .. } => {
                        if entry.decl_span.is_none() {
                            entry.exports = exports.clone();
                            entry.decl_span = Some(d.span);
                        }
                    }
                    DirectiveKind::UseModule { module, imports } => {
                        entry.imports.push(Import {
                            from: module.clone(),
                            names: imports.clone(),
                            span: d.span,
                        });
                    }
                    DirectiveKind::Mode { term } => {
                        if let Some((name, arity, modes)) = mode_signature(term) {
                            let pred = entry
                                .preds
                                .entry((name.clone(), arity))
                                .or_insert_with(|| Pred {
                                    id: PredId::new(&src.module, &name, arity),
                                    clauses: Vec::new(),
                                    modes: None,
                                    is_dynamic: false,
                                    mode_directive: None,
                                });
                            pred.modes = Some(modes);
                            pred.mode_directive = Some(d.span);
                        }
                    }
                    DirectiveKind::Other { term } => {
                        collect_dynamic(term, &mut dynamics);
                    }
                    DirectiveKind::Op { .. } => {}
                },
                Item::Clause(c) => {
                    let (name, arity) = c.indicator();
                    let pred = entry
                        .preds
                        .entry((name.clone(), arity))
                        .or_insert_with(|| Pred {
                            id: PredId::new(&src.module, &name, arity),
                            clauses: Vec::new(),
                            modes: None,
                            is_dynamic: false,
                            mode_directive: None,
                        });
                    pred.clauses.push(c.clone());
                }
            }
        }
        for (name, arity) in dynamics {
            let pred = entry
                .preds
                .entry((name.clone(), arity))
                .or_insert_with(|| Pred {
                    id: PredId::new(&src.module, &name, arity),
                    clauses: Vec::new(),
                    modes: None,
                    is_dynamic: false,
                    mode_directive: None,
                });
            pred.is_dynamic = true;
        }
    }

    if let Some(text) = modes_text {
        apply_sidecar_modes(text, &mut modules);
    }

    let mut program = Program {
        files: sources,
        modules,
        warnings,
        config: config.clone(),
    };
    post_load_warnings(&mut program);
    program
}

/// Extracts `(name, arity, modes)` from a mode term like `p(+, -, ?)`.
fn mode_signature(term: &Term) -> Option<(String, usize, Vec<Mode>)> {
    let (name, arity) = term.indicator()?;
    let modes = term
        .args()
        .iter()
        .map(|a| a.as_atom().and_then(Mode::from_atom))
        .collect::<Option<Vec<_>>>()?;
    Some((name.to_string(), arity, modes))
}

/// Accepts `dynamic foo/1` and `dynamic (a/1, b/2)` directive bodies.
fn collect_dynamic(term: &Term, out: &mut BTreeSet<(String, usize)>) {
    if let Term::Compound { functor, args, .. } = term {
        match (functor.as_str(), args.len()) {
            ("dynamic", 1) => collect_indicators(&args[0], out),
            _ => {}
        }
    }
}

fn collect_indicators(term: &Term, out: &mut BTreeSet<(String, usize)>) {
    match term {
        Term::Compound { functor, args, .. } if functor == "," && args.len() == 2 => {
            collect_indicators(&args[0], out);
            collect_indicators(&args[1], out);
        }
        Term::Compound { functor, args, .. } if functor == "/" && args.len() == 2 => {
            if let (Some(name), Term::Int { value, .. }) = (args[0].as_atom(), &args[1]) {
                if *value >= 0 {
                    out.insert((name.to_string(), *value as usize));
                }
            }
        }
        _ => {}
    }
}

/// Sidecar mode declarations: a Prolog file of `:- mode(p(+,-)).`
/// directives or bare `p(+,-).` facts, applied to every module defining
/// the predicate.
fn apply_sidecar_modes(text: &str, modules: &mut BTreeMap<String, ModuleInfo>) {
    let parsed = parse_file(text, FileId(u32::MAX));
    let mut sigs = Vec::new();
    for item in &parsed.items {
        match item {
            Item::Directive(d) => {
                if let DirectiveKind::Mode { term } = &d.kind {
                    if let Some(sig) = mode_signature(term) {
                        sigs.push(sig);
                    }
                }
            }
            Item::Clause(c) if c.is_fact() => {
                if let Some(sig) = mode_signature(&c.head) {
                    sigs.push(sig);
                }
            }
            _ => {}
        }
    }
    for (name, arity, modes) in sigs {
        for m in modules.values_mut() {
            if let Some(pred) = m.preds.get_mut(&(name.clone(), arity)) {
                if pred.modes.is_none() {
                    pred.modes = Some(modes.clone());
                }
            }
        }
    }
}

fn post_load_warnings(program: &mut Program) {
    let mut warnings = Vec::new();

    for m in program.modules.values() {
        for imp in &m.imports {
            if !program.modules.contains_key(&imp.from) {
                warnings.push(Warning::UnresolvedImport {
                    module: m.name.clone(),
                    from: imp.from.clone(),
                    span: imp.span,
                });
            }
        }
        // First import wins on overlap.
        let mut provided: BTreeMap<(String, usize), String> = BTreeMap::new();
        for imp in &m.imports {
            let names: Vec<(String, usize)> = match &imp.names {
                Some(ns) => ns.clone(),
                None => program
                    .modules
                    .get(&imp.from)
                    .map(|f| f.exports.clone())
                    .unwrap_or_default(),
            };
            for key in names {
                if let Some(first) = provided.get(&key) {
                    if first != &imp.from {
                        warnings.push(Warning::AmbiguousImport {
                            module: m.name.clone(),
                            name: key.0.clone(),
                            arity: key.1,
                            chosen: first.clone(),
                            other: imp.from.clone(),
                        });
                    }
                } else {
                    provided.insert(key, imp.from.clone());
                }
            }
        }
        for (name, arity) in &m.exports {
            if !m.preds.contains_key(&(name.clone(), *arity)) {
                warnings.push(Warning::ExportUndefined {
                    module: m.name.clone(),
                    name: name.clone(),
                    arity: *arity,
                });
            }
        }
    }

    let sites = callgraph::collect_sites(program);
    for site in &sites.calls {
        if let Some(q) = &site.qualifier {
            warnings.push(Warning::NonStrictQualification {
                module: q.clone(),
                span: site.span,
            });
        }
        let res = program.resolve_qualified(
            &site.caller.module,
            site.qualifier.as_deref(),
            &site.name,
            site.arity,
        );
        if matches!(res, Resolution::Undefined(..)) {
            warnings.push(Warning::UnresolvedCall {
                caller: site.caller.clone(),
                name: site.name.clone(),
                arity: site.arity,
                qualifier: site.qualifier.clone(),
                span: site.span,
            });
        }
    }

    for cycle in callgraph::module_cycles(program) {
        warnings.push(Warning::ModuleCycle { cycle });
    }

    program.warnings.extend(warnings);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(files: &[(&str, &str)]) -> Program {
        let files: Vec<(String, String)> = files
            .iter()
            .map(|(p, t)| (p.to_string(), t.to_string()))
            .collect();
        load_program(&files, None, &Config::default())
    }

    #[test]
    fn modules_and_default_user() {
        let p = prog(&[
            ("a.pl", ":- module(a, [p/1]).\np(1).\n"),
            ("b.pl", "q(2).\n"),
        ]);
        assert!(p.modules.contains_key("a"));
        assert!(p.modules.contains_key(USER_MODULE));
        assert_eq!(p.modules["a"].exports, vec![("p".to_string(), 1)]);
        assert!(!p.modules[USER_MODULE].preds.contains_key(&("q".to_string(), 0)));
        assert!(p.modules[USER_MODULE].preds.contains_key(&("q".to_string(), 1)));
    }

    #[test]
    fn import_resolution_explicit_and_blanket() {
        let p = prog(&[
            ("lib.pl", ":- module(lib, [f/1, g/1]).\nf(1).\ng(2).\n"),
            (
                "use1.pl",
                ":- module(use1, []).\n:- use_module(lib, [f/1]).\nh(X) :- f(X).\n",
            ),
            (
                "use2.pl",
                ":- module(use2, []).\n:- use_module(lib).\nk(X) :- g(X).\n",
            ),
        ]);
        assert_eq!(
            p.resolve("use1", "f", 1),
            Resolution::Pred(PredId::new("lib", "f", 1))
        );
        // use1 imported only f/1.
        assert_eq!(p.resolve("use1", "g", 1), Resolution::Undefined("g".into(), 1));
        assert_eq!(
            p.resolve("use2", "g", 1),
            Resolution::Pred(PredId::new("lib", "g", 1))
        );
    }

    #[test]
    fn local_beats_import() {
        let p = prog(&[
            ("lib.pl", ":- module(lib, [f/1]).\nf(1).\n"),
            (
                "m.pl",
                ":- module(m, []).\n:- use_module(lib).\nf(local).\ng(X) :- f(X).\n",
            ),
        ]);
        assert_eq!(
            p.resolve("m", "f", 1),
            Resolution::Pred(PredId::new("m", "f", 1))
        );
    }

    #[test]
    fn import_beats_builtin_and_builtin_fallback() {
        let p = prog(&[("m.pl", ":- module(m, []).\np(X, L) :- length(X, L).\n")]);
        assert_eq!(
            p.resolve("m", "length", 2),
            Resolution::Builtin("length".into(), 2)
        );
        let p2 = prog(&[
            ("lst.pl", ":- module(lst, [length/2]).\nlength(_, 0).\n"),
            (
                "m.pl",
                ":- module(m, []).\n:- use_module(lst).\np(X, L) :- length(X, L).\n",
            ),
        ]);
        assert_eq!(
            p2.resolve("m", "length", 2),
            Resolution::Pred(PredId::new("lst", "length", 2))
        );
    }

    #[test]
    fn dynamic_predicate_modelled_without_clauses() {
        let p = prog(&[("m.pl", ":- module(m, []).\n:- dynamic counter/1.\n")]);
        let pred = &p.modules["m"].preds[&("counter".to_string(), 1)];
        assert!(pred.is_dynamic);
        assert!(pred.clauses.is_empty());
    }

    #[test]
    fn modes_from_directive_and_sidecar() {
        let p = prog(&[(
            "m.pl",
            ":- module(m, []).\n:- mode(p(+, -)).\np(X, X).\nq(Y) :- p(Y, _).\n",
        )]);
        let pred = &p.modules["m"].preds[&("p".to_string(), 2)];
        assert_eq!(pred.modes, Some(vec![Mode::In, Mode::Out]));
        assert!(pred.mode_directive.is_some());

        let files = vec![("m.pl".to_string(), "q(A, B) :- A = B.\n".to_string())];
        let p2 = load_program(&files, Some("q(+, ?).\n"), &Config::default());
        let pred2 = &p2.modules[USER_MODULE].preds[&("q".to_string(), 2)];
        assert_eq!(pred2.modes, Some(vec![Mode::In, Mode::Any]));
    }

    #[test]
    fn warning_set() {
        let p = prog(&[
            (
                "a.pl",
                ":- module(a, [p/1, ghost/0]).\n:- use_module(b).\n:- use_module(nowhere).\np(X) :- q(X), missing(X), b:q(X).\n",
            ),
            ("b.pl", ":- module(b, [q/1]).\n:- use_module(a).\nq(1).\n"),
            ("c.pl", ":- module(c, []).\n:- use_module(a, [p/1]).\n:- use_module(b, [p/1]).\n"),
        ]);
        let has = |f: &dyn Fn(&Warning) -> bool| p.warnings.iter().any(|w| f(w));
        assert!(has(&|w| matches!(w, Warning::UnresolvedImport { from, .. } if from == "nowhere")));
        assert!(has(&|w| matches!(w, Warning::UnresolvedCall { name, .. } if name == "missing")));
        assert!(has(&|w| matches!(w, Warning::NonStrictQualification { module, .. } if module == "b")));
        assert!(has(&|w| matches!(w, Warning::ModuleCycle { .. })));
        assert!(has(&|w| matches!(w, Warning::ExportUndefined { name, .. } if name == "ghost")));
        assert!(has(&|w| matches!(
            w,
            Warning::AmbiguousImport { name, chosen, .. } if name == "p" && chosen == "a"
        )));
    }

    #[test]
    fn clauses_grouped_in_order() {
        let p = prog(&[(
            "m.pl",
            "f(1).\ng(x).\nf(2).\nf(3).\n",
        )]);
        let pred = &p.modules[USER_MODULE].preds[&("f".to_string(), 1)];
        assert_eq!(pred.clauses.len(), 3);
        let texts: Vec<_> = pred.clauses.iter().map(|c| c.raw.as_str()).collect();
        assert_eq!(texts, vec!["f(1).", "f(2).", "f(3)."]);
    }
}
