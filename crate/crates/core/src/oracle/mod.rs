//! Depth-bounded reference interpreter for a pure-plus-control Prolog
//! fragment, used to machine-check that a refactoring preserved
//! computed answers.
//!
//! `solve` enumerates answers by left-to-right depth-first SLD
//! resolution with standard cut (prunes to the clause choice point of
//! the predicate it occurs in) and locally-committing if-then-else.
//! The depth bound is a global budget of user-predicate resolution
//! steps; exhausting it halts the whole search. The hard stop is what
//! makes the answer list at bound d a prefix of the list at any larger
//! bound — a per-branch bound would let low-depth runs reach answers
//! that a deeper run only discovers later.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use crate::model::{PredId, Program, Resolution};
use crate::span::FileId;
use crate::syntax::ast::{Goal, Item, Term, VarId};
use crate::syntax::parser::parse_file;

/// The one failure mode: a goal outside the supported fragment, an
/// undefined predicate, a cyclic binding attempt, or an arithmetic
/// fault. Refusing loudly beats producing answers the fragment's
/// semantics don't cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsupportedGoal {
    pub what: String,
    /// Offending query text, filled in by `equivalent`.
    pub query: Option<String>,
}

impl fmt::Display for UnsupportedGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unsupported goal: {}", self.what)?;
        if let Some(q) = &self.query {
            write!(f, " (in query {q})")?;
        }
        Ok(())
    }
}

impl std::error::Error for UnsupportedGoal {}

fn unsup(what: impl Into<String>) -> UnsupportedGoal {
    UnsupportedGoal {
        what: what.into(),
        query: None,
    }
}

/// Runtime term; variables are indices into the machine's binding store.
#[derive(Debug, Clone, PartialEq)]
pub enum RTerm {
    Var(usize),
    Atom(String),
    Int(i64),
    Float(f64),
    Str(String),
    Compound(String, Vec<RTerm>),
}

impl fmt::Display for RTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RTerm::Var(i) => write!(f, "_{i}"),
            RTerm::Atom(a) => write!(f, "{a}"),
            RTerm::Int(i) => write!(f, "{i}"),
            RTerm::Float(x) => write!(f, "{x:?}"),
            RTerm::Str(s) => write!(f, "\"{s}\""),
            RTerm::Compound(functor, args) if functor == "." && args.len() == 2 => {
                write!(f, "[{}", args[0])?;
                let mut tail = &args[1];
                loop {
                    match tail {
                        RTerm::Atom(a) if a == "[]" => return write!(f, "]"),
                        RTerm::Compound(functor, args) if functor == "." && args.len() == 2 => {
                            write!(f, ",{}", args[0])?;
                            tail = &args[1];
                        }
                        other => return write!(f, "|{other}]"),
                    }
                }
            }
            RTerm::Compound(functor, args) => {
                write!(f, "{functor}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    Exhausted,
    DepthCutoff,
}

/// One computed answer: the query variables' values in first-occurrence
/// order, unbound variables renumbered from 0 in order of appearance.
/// The form is identical under any renaming of the query's variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub values: Vec<RTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnswerSet {
    /// Display names of the query variables, first-occurrence order.
    pub names: Vec<String>,
    /// Discovery order; duplicates are kept (ordered multiset).
    pub answers: Vec<Answer>,
    pub completeness: Completeness,
}

impl AnswerSet {
    /// One `"X = a, Y = b"` line per answer; `"true"` for a
    /// variable-free query.
    pub fn rendered(&self) -> Vec<String> {
        self.answers
            .iter()
            .map(|ans| {
                if ans.values.is_empty() {
                    "true".to_string()
                } else {
                    self.names
                        .iter()
                        .zip(&ans.values)
                        .map(|(n, v)| format!("{n} = {v}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                }
            })
            .collect()
    }
}

/// Aligns the two answer streams before comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Identity,
    /// `perm[k]` = 1-based position in the original argument order that
    /// now sits at position k+1. Applied to the transformed program's
    /// answers to put them back in the original order.
    Permutation(Vec<usize>),
    /// 1-based original argument positions still present after the
    /// transform. Applied to the original program's answers.
    KeptArgs(Vec<usize>),
}

enum RGoal {
    Call {
        /// Module whose import context resolves the call.
        module: String,
        qualifier: Option<String>,
        term: RTerm,
    },
    Conj(Vec<Rc<RGoal>>),
    Disj(Rc<RGoal>, Rc<RGoal>),
    Ite(Rc<RGoal>, Rc<RGoal>, Rc<RGoal>),
    Neg(Rc<RGoal>),
    Cut,
    True,
    Fail,
}

enum Cont {
    Done,
    Goal(Rc<RGoal>, usize, Rc<Cont>),
    /// Runs after an if-then-else condition's first solution: records
    /// the commitment and converts exhaustion into a cut to the
    /// construct's barrier.
    Commit {
        barrier: usize,
        flag: usize,
        next: Rc<Cont>,
    },
}

/// `More`: alternatives exhausted, caller may try its next one.
/// `CutTo(b)`: unwind choice points out to barrier `b`.
/// `Halt`: depth budget exhausted, stop the entire search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    More,
    CutTo(usize),
    Halt,
}

#[derive(Clone, Copy)]
enum Num {
    I(i64),
    F(f64),
}

struct Machine<'p> {
    program: &'p Program,
    bindings: Vec<Option<RTerm>>,
    trail: Vec<usize>,
    budget: usize,
    cutoff: bool,
    next_barrier: usize,
    flags: Vec<bool>,
    answers: Vec<Answer>,
    query_vars: Vec<usize>,
}

impl<'p> Machine<'p> {
    fn new(program: &'p Program, depth: usize) -> Machine<'p> {
        Machine {
            program,
            bindings: Vec::new(),
            trail: Vec::new(),
            budget: depth,
            cutoff: false,
            next_barrier: 0,
            flags: Vec::new(),
            answers: Vec::new(),
            query_vars: Vec::new(),
        }
    }

    fn new_var(&mut self) -> usize {
        self.bindings.push(None);
        self.bindings.len() - 1
    }

    fn new_barrier(&mut self) -> usize {
        self.next_barrier += 1;
        self.next_barrier
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.bindings[v] = None;
        }
    }

    fn inst_term(&mut self, t: &Term, map: &mut BTreeMap<VarId, usize>) -> RTerm {
        match t {
            Term::Var { id, .. } => {
                let v = match map.get(id) {
                    Some(&v) => v,
                    None => {
                        let v = self.new_var();
                        map.insert(*id, v);
                        v
                    }
                };
                RTerm::Var(v)
            }
            Term::Atom { text, .. } => RTerm::Atom(text.clone()),
            Term::Int { value, .. } => RTerm::Int(*value),
            Term::Float { value, .. } => RTerm::Float(*value),
            Term::Str { text, .. } => RTerm::Str(text.clone()),
            Term::Compound { functor, args, .. } => RTerm::Compound(
                functor.clone(),
                args.iter().map(|a| self.inst_term(a, map)).collect(),
            ),
        }
    }

    fn inst_goal(
        &mut self,
        g: &Goal,
        module: &str,
        map: &mut BTreeMap<VarId, usize>,
    ) -> Rc<RGoal> {
        Rc::new(match g {
            Goal::Call {
                term, qualifier, ..
            } => RGoal::Call {
                module: module.to_string(),
                qualifier: qualifier.clone(),
                term: self.inst_term(term, map),
            },
            Goal::Conj { goals, .. } => {
                RGoal::Conj(goals.iter().map(|g| self.inst_goal(g, module, map)).collect())
            }
            Goal::Disj { left, right, .. } => RGoal::Disj(
                self.inst_goal(left, module, map),
                self.inst_goal(right, module, map),
            ),
            Goal::IfThenElse {
                cond, then, els, ..
            } => RGoal::Ite(
                self.inst_goal(cond, module, map),
                self.inst_goal(then, module, map),
                self.inst_goal(els, module, map),
            ),
            Goal::Neg { goal, .. } => RGoal::Neg(self.inst_goal(goal, module, map)),
            Goal::Cut { .. } => RGoal::Cut,
            Goal::True { .. } => RGoal::True,
            Goal::Fail { .. } => RGoal::Fail,
        })
    }

    /// Shallow dereference: follows variable bindings at the root only.
    fn walk(&self, t: &RTerm) -> RTerm {
        let mut cur = t.clone();
        while let RTerm::Var(v) = cur {
            match &self.bindings[v] {
                Some(b) => cur = b.clone(),
                None => return RTerm::Var(v),
            }
        }
        cur
    }

    fn occurs(&self, v: usize, t: &RTerm) -> bool {
        match self.walk(t) {
            RTerm::Var(x) => x == v,
            RTerm::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    fn unify(&mut self, a: &RTerm, b: &RTerm) -> Result<bool, UnsupportedGoal> {
        let a = self.walk(a);
        let b = self.walk(b);
        match (a, b) {
            (RTerm::Var(x), RTerm::Var(y)) if x == y => Ok(true),
            (RTerm::Var(x), t) | (t, RTerm::Var(x)) => {
                if self.occurs(x, &t) {
                    return Err(unsup("cyclic binding"));
                }
                self.bindings[x] = Some(t);
                self.trail.push(x);
                Ok(true)
            }
            (RTerm::Atom(x), RTerm::Atom(y)) => Ok(x == y),
            (RTerm::Int(x), RTerm::Int(y)) => Ok(x == y),
            (RTerm::Float(x), RTerm::Float(y)) => Ok(x == y),
            (RTerm::Str(x), RTerm::Str(y)) => Ok(x == y),
            (RTerm::Compound(f, xs), RTerm::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return Ok(false);
                }
                for (x, y) in xs.iter().zip(&ys) {
                    if !self.unify(x, y)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn struct_eq(&self, a: &RTerm, b: &RTerm) -> bool {
        let a = self.walk(a);
        let b = self.walk(b);
        match (&a, &b) {
            (RTerm::Var(x), RTerm::Var(y)) => x == y,
            (RTerm::Compound(f, xs), RTerm::Compound(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.struct_eq(x, y))
            }
            _ => a == b,
        }
    }

    fn eval(&self, t: &RTerm) -> Result<Num, UnsupportedGoal> {
        match self.walk(t) {
            RTerm::Int(i) => Ok(Num::I(i)),
            RTerm::Float(x) => Ok(Num::F(x)),
            RTerm::Var(_) => Err(unsup("unbound variable in arithmetic")),
            RTerm::Atom(a) => Err(unsup(format!("arithmetic function {a}/0"))),
            RTerm::Str(_) => Err(unsup("string in arithmetic")),
            RTerm::Compound(f, args) => {
                let n: Vec<Num> = args
                    .iter()
                    .map(|a| self.eval(a))
                    .collect::<Result<_, _>>()?;
                match (f.as_str(), n.as_slice()) {
                    ("+", [a, b]) => num2(*a, *b, i64::checked_add, |x, y| x + y),
                    ("-", [a, b]) => num2(*a, *b, i64::checked_sub, |x, y| x - y),
                    ("*", [a, b]) => num2(*a, *b, i64::checked_mul, |x, y| x * y),
                    ("-", [a]) => num2(Num::I(0), *a, i64::checked_sub, |x, y| x - y),
                    ("+", [a]) => Ok(*a),
                    ("abs", [Num::I(a)]) => Ok(Num::I(a.abs())),
                    ("abs", [Num::F(a)]) => Ok(Num::F(a.abs())),
                    ("min", [a, b]) => Ok(if num_cmp(*a, *b)? != std::cmp::Ordering::Greater {
                        *a
                    } else {
                        *b
                    }),
                    ("max", [a, b]) => Ok(if num_cmp(*a, *b)? != std::cmp::Ordering::Less {
                        *a
                    } else {
                        *b
                    }),
                    ("//", [Num::I(a), Num::I(b)]) => a
                        .checked_div(*b)
                        .map(Num::I)
                        .ok_or_else(|| unsup("zero divisor or overflow")),
                    // `mod` is floored: the result takes the divisor's sign.
                    ("mod", [Num::I(a), Num::I(b)]) => a
                        .checked_rem_euclid(*b)
                        .map(|r| if r != 0 && *b < 0 { r + b } else { r })
                        .map(Num::I)
                        .ok_or_else(|| unsup("zero divisor or overflow")),
                    ("rem", [Num::I(a), Num::I(b)]) => a
                        .checked_rem(*b)
                        .map(Num::I)
                        .ok_or_else(|| unsup("zero divisor or overflow")),
                    ("/", [Num::I(a), Num::I(b)]) => {
                        if *b == 0 {
                            Err(unsup("zero divisor"))
                        } else if a % b == 0 {
                            Ok(Num::I(a / b))
                        } else {
                            Ok(Num::F(*a as f64 / *b as f64))
                        }
                    }
                    ("/", [a, b]) => {
                        let (x, y) = (as_f64(*a), as_f64(*b));
                        if y == 0.0 {
                            Err(unsup("zero divisor"))
                        } else {
                            Ok(Num::F(x / y))
                        }
                    }
                    _ => Err(unsup(format!("arithmetic function {f}/{}", n.len()))),
                }
            }
        }
    }

    fn emit(&mut self) {
        let mut canon: BTreeMap<usize, usize> = BTreeMap::new();
        let vars = self.query_vars.clone();
        let values = vars
            .iter()
            .map(|&v| self.reify(&RTerm::Var(v), &mut canon))
            .collect();
        self.answers.push(Answer { values });
    }

    /// Full resolution with canonical renumbering of unbound variables.
    /// Bind-time cycle checks guarantee termination.
    fn reify(&self, t: &RTerm, canon: &mut BTreeMap<usize, usize>) -> RTerm {
        match self.walk(t) {
            RTerm::Var(v) => {
                let n = canon.len();
                RTerm::Var(*canon.entry(v).or_insert(n))
            }
            RTerm::Compound(f, args) => {
                RTerm::Compound(f, args.iter().map(|a| self.reify(a, canon)).collect())
            }
            other => other,
        }
    }

    fn run(&mut self, cont: &Cont) -> Result<Flow, UnsupportedGoal> {
        match cont {
            Cont::Done => {
                self.emit();
                Ok(Flow::More)
            }
            Cont::Commit {
                barrier,
                flag,
                next,
            } => {
                self.flags[*flag] = true;
                match self.run(next)? {
                    Flow::More => Ok(Flow::CutTo(*barrier)),
                    f => Ok(f),
                }
            }
            Cont::Goal(g, barrier, next) => {
                let g = g.clone();
                let next = next.clone();
                self.goal(&g, *barrier, &next)
            }
        }
    }

    fn goal(
        &mut self,
        g: &RGoal,
        barrier: usize,
        next: &Rc<Cont>,
    ) -> Result<Flow, UnsupportedGoal> {
        match g {
            RGoal::True => self.run(next),
            RGoal::Fail => Ok(Flow::More),
            RGoal::Cut => match self.run(next)? {
                Flow::More => Ok(Flow::CutTo(barrier)),
                f => Ok(f),
            },
            RGoal::Conj(goals) => {
                let mut cont = next.clone();
                for g in goals.iter().rev() {
                    cont = Rc::new(Cont::Goal(g.clone(), barrier, cont));
                }
                self.run(&cont)
            }
            RGoal::Disj(a, b) => {
                let mark = self.trail.len();
                let f = self.run(&Cont::Goal(a.clone(), barrier, next.clone()))?;
                self.undo(mark);
                match f {
                    Flow::More => {
                        let f2 = self.run(&Cont::Goal(b.clone(), barrier, next.clone()))?;
                        self.undo(mark);
                        Ok(f2)
                    }
                    other => Ok(other),
                }
            }
            RGoal::Ite(c, t, e) => self.ite(c, t, e, barrier, next),
            RGoal::Neg(g) => {
                // \+ G behaves exactly like ( G -> fail ; true ).
                self.ite(g, &Rc::new(RGoal::Fail), &Rc::new(RGoal::True), barrier, next)
            }
            RGoal::Call {
                module,
                qualifier,
                term,
            } => self.call(module, qualifier.as_deref(), term, next),
        }
    }

    fn ite(
        &mut self,
        c: &Rc<RGoal>,
        t: &Rc<RGoal>,
        e: &Rc<RGoal>,
        barrier: usize,
        next: &Rc<Cont>,
    ) -> Result<Flow, UnsupportedGoal> {
        let b_ite = self.new_barrier();
        // The condition gets its own barrier: a cut inside it stays
        // local, as in call/1.
        let b_cond = self.new_barrier();
        let flag = self.flags.len();
        self.flags.push(false);
        let mark = self.trail.len();
        let then_cont = Rc::new(Cont::Goal(t.clone(), barrier, next.clone()));
        let commit = Rc::new(Cont::Commit {
            barrier: b_ite,
            flag,
            next: then_cont,
        });
        let f = self.run(&Cont::Goal(c.clone(), b_cond, commit))?;
        self.undo(mark);
        let committed = self.flags[flag];
        let run_else = |m: &mut Machine<'p>| -> Result<Flow, UnsupportedGoal> {
            let f2 = m.run(&Cont::Goal(e.clone(), barrier, next.clone()))?;
            m.undo(mark);
            Ok(f2)
        };
        match f {
            Flow::Halt => Ok(Flow::Halt),
            Flow::CutTo(b) if b == b_ite => Ok(Flow::More),
            Flow::CutTo(b) if b == b_cond => {
                if committed {
                    Ok(Flow::More)
                } else {
                    run_else(self)
                }
            }
            Flow::CutTo(b) => Ok(Flow::CutTo(b)),
            Flow::More => {
                if committed {
                    Ok(Flow::More)
                } else {
                    run_else(self)
                }
            }
        }
    }

    fn call(
        &mut self,
        module: &str,
        qualifier: Option<&str>,
        term: &RTerm,
        next: &Rc<Cont>,
    ) -> Result<Flow, UnsupportedGoal> {
        let t = self.walk(term);
        let (name, args) = match t {
            RTerm::Atom(a) => (a, Vec::new()),
            RTerm::Compound(f, args) => (f, args),
            RTerm::Var(_) => return Err(unsup("call through unbound variable")),
            other => return Err(unsup(format!("non-callable goal {other}"))),
        };
        match self.program.resolve_qualified(module, qualifier, &name, args.len()) {
            Resolution::Pred(pid) => self.user_call(&pid, &name, &args, next),
            Resolution::Builtin(..) => self.builtin(&name, &args, next),
            Resolution::Undefined(n, a) => Err(unsup(format!("undefined predicate {n}/{a}"))),
        }
    }

    fn user_call(
        &mut self,
        pid: &PredId,
        name: &str,
        args: &[RTerm],
        next: &Rc<Cont>,
    ) -> Result<Flow, UnsupportedGoal> {
        if self.budget == 0 {
            self.cutoff = true;
            return Ok(Flow::Halt);
        }
        self.budget -= 1;
        let program = self.program;
        let pred = program.pred(pid).expect("resolved predicate exists");
        let goal_term = if args.is_empty() {
            RTerm::Atom(name.to_string())
        } else {
            RTerm::Compound(name.to_string(), args.to_vec())
        };
        let b = self.new_barrier();
        for clause in &pred.clauses {
            if clause.is_dcg {
                return Err(unsup(format!("DCG clause in {}/{}", name, args.len())));
            }
            let mut map = BTreeMap::new();
            let head = self.inst_term(&clause.head, &mut map);
            let mark = self.trail.len();
            if self.unify(&goal_term, &head)? {
                let body = self.inst_goal(&clause.body, &pid.module, &mut map);
                let f = self.run(&Cont::Goal(body, b, next.clone()))?;
                self.undo(mark);
                match f {
                    Flow::More => continue,
                    Flow::CutTo(bb) if bb == b => return Ok(Flow::More),
                    other => return Ok(other),
                }
            } else {
                self.undo(mark);
            }
        }
        Ok(Flow::More)
    }

    fn builtin(
        &mut self,
        name: &str,
        args: &[RTerm],
        next: &Rc<Cont>,
    ) -> Result<Flow, UnsupportedGoal> {
        match (name, args.len()) {
            ("true", 0) => self.run(next),
            ("fail", 0) | ("false", 0) => Ok(Flow::More),
            ("=", 2) => {
                let mark = self.trail.len();
                if self.unify(&args[0], &args[1])? {
                    let f = self.run(next)?;
                    self.undo(mark);
                    Ok(f)
                } else {
                    self.undo(mark);
                    Ok(Flow::More)
                }
            }
            ("==", 2) => {
                if self.struct_eq(&args[0], &args[1]) {
                    self.run(next)
                } else {
                    Ok(Flow::More)
                }
            }
            ("\\==", 2) => {
                if !self.struct_eq(&args[0], &args[1]) {
                    self.run(next)
                } else {
                    Ok(Flow::More)
                }
            }
            ("is", 2) => {
                let v = self.eval(&args[1])?;
                let result = match v {
                    Num::I(i) => RTerm::Int(i),
                    Num::F(x) => RTerm::Float(x),
                };
                let mark = self.trail.len();
                if self.unify(&args[0], &result)? {
                    let f = self.run(next)?;
                    self.undo(mark);
                    Ok(f)
                } else {
                    self.undo(mark);
                    Ok(Flow::More)
                }
            }
            ("=:=", 2) | ("=\\=", 2) | ("<", 2) | (">", 2) | ("=<", 2) | (">=", 2) => {
                let a = self.eval(&args[0])?;
                let b = self.eval(&args[1])?;
                let ord = num_cmp(a, b)?;
                use std::cmp::Ordering::*;
                let ok = match name {
                    "=:=" => ord == Equal,
                    "=\\=" => ord != Equal,
                    "<" => ord == Less,
                    ">" => ord == Greater,
                    "=<" => ord != Greater,
                    _ => ord != Less,
                };
                if ok {
                    self.run(next)
                } else {
                    Ok(Flow::More)
                }
            }
            _ => Err(unsup(format!("builtin {name}/{}", args.len()))),
        }
    }
}

fn as_f64(n: Num) -> f64 {
    match n {
        Num::I(i) => i as f64,
        Num::F(x) => x,
    }
}

fn num2(
    a: Num,
    b: Num,
    int_op: fn(i64, i64) -> Option<i64>,
    float_op: fn(f64, f64) -> f64,
) -> Result<Num, UnsupportedGoal> {
    match (a, b) {
        (Num::I(x), Num::I(y)) => int_op(x, y)
            .map(Num::I)
            .ok_or_else(|| unsup("integer overflow")),
        _ => Ok(Num::F(float_op(as_f64(a), as_f64(b)))),
    }
}

fn num_cmp(a: Num, b: Num) -> Result<std::cmp::Ordering, UnsupportedGoal> {
    match (a, b) {
        (Num::I(x), Num::I(y)) => Ok(x.cmp(&y)),
        _ => as_f64(a)
            .partial_cmp(&as_f64(b))
            .ok_or_else(|| unsup("incomparable numbers")),
    }
}

/// Enumerates all answers of `query` in `module` under a global budget
/// of `depth` user-predicate resolution steps.
pub fn solve(
    program: &Program,
    module: &str,
    query: &Goal,
    depth: usize,
) -> Result<AnswerSet, UnsupportedGoal> {
    let mut m = Machine::new(program, depth);
    let mut map = BTreeMap::new();
    let g = m.inst_goal(query, module, &mut map);
    let mut names = Vec::new();
    let mut seen = Vec::new();
    for (name, id) in query.var_occurrences() {
        if name.starts_with('_') || seen.contains(&id) {
            continue;
        }
        seen.push(id);
        names.push(name.to_string());
        m.query_vars.push(map[&id]);
    }
    let root = m.new_barrier();
    m.run(&Cont::Goal(g, root, Rc::new(Cont::Done)))?;
    let completeness = if m.cutoff {
        Completeness::DepthCutoff
    } else {
        Completeness::Exhausted
    };
    Ok(AnswerSet {
        names,
        answers: m.answers,
        completeness,
    })
}

/// Parses a goal such as `p(X, Y), q(Y)` with the standard operator
/// table. A trailing period is optional.
pub fn parse_query(text: &str) -> Result<Goal, UnsupportedGoal> {
    let body = text.trim().trim_end_matches('.').trim();
    if body.is_empty() {
        return Err(unsup("empty query"));
    }
    let wrapped = format!("'$query' :- {body}.\n");
    let parsed = parse_file(&wrapped, FileId(u32::MAX));
    if let Some(e) = parsed.errors.first() {
        return Err(unsup(format!("query does not parse: {}", e.message)));
    }
    for item in parsed.items {
        if let Item::Clause(c) = item {
            return Ok(c.body);
        }
    }
    Err(unsup("query does not parse"))
}

pub fn solve_text(
    program: &Program,
    module: &str,
    query: &str,
    depth: usize,
) -> Result<AnswerSet, UnsupportedGoal> {
    let goal = parse_query(query)?;
    solve(program, module, &goal, depth)
}

fn renumber(values: &[RTerm]) -> Vec<RTerm> {
    fn go(t: &RTerm, map: &mut BTreeMap<usize, usize>) -> RTerm {
        match t {
            RTerm::Var(v) => {
                let n = map.len();
                RTerm::Var(*map.entry(*v).or_insert(n))
            }
            RTerm::Compound(f, args) => {
                RTerm::Compound(f.clone(), args.iter().map(|a| go(a, map)).collect())
            }
            other => other.clone(),
        }
    }
    let mut map = BTreeMap::new();
    values.iter().map(|t| go(t, &mut map)).collect()
}

fn projected_pair(
    a: &Answer,
    b: &Answer,
    projection: &Projection,
) -> (Vec<RTerm>, Vec<RTerm>) {
    match projection {
        Projection::Identity => (a.values.clone(), b.values.clone()),
        Projection::Permutation(perm) => {
            let mut aligned = vec![RTerm::Atom(String::new()); b.values.len()];
            for (k, &old_pos) in perm.iter().enumerate() {
                aligned[old_pos - 1] = b.values[k].clone();
            }
            (renumber(&a.values), renumber(&aligned))
        }
        Projection::KeptArgs(kept) => {
            let projected: Vec<RTerm> =
                kept.iter().map(|&i| a.values[i - 1].clone()).collect();
            (renumber(&projected), renumber(&b.values))
        }
    }
}

/// True iff for every query pair the two programs produce the same
/// ordered answer multiset (after projection) with matching
/// completeness flags.
pub fn equivalent(
    program_a: &Program,
    module_a: &str,
    program_b: &Program,
    module_b: &str,
    queries: &[(String, String)],
    depth: usize,
    projection: &Projection,
) -> Result<bool, UnsupportedGoal> {
    for (qa, qb) in queries {
        let tag = |mut e: UnsupportedGoal, q: &str| {
            e.query = Some(q.to_string());
            e
        };
        let sa = solve_text(program_a, module_a, qa, depth).map_err(|e| tag(e, qa))?;
        let sb = solve_text(program_b, module_b, qb, depth).map_err(|e| tag(e, qb))?;
        if sa.completeness != sb.completeness || sa.answers.len() != sb.answers.len() {
            return Ok(false);
        }
        for (a, b) in sa.answers.iter().zip(&sb.answers) {
            let (pa, pb) = projected_pair(a, b, projection);
            if pa != pb {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};

    fn program(src: &str) -> Program {
        load_program(
            &[("m.pl".to_string(), src.to_string())],
            None,
            &Config::default(),
        )
    }

    fn answers(src: &str, query: &str, depth: usize) -> (Vec<String>, Completeness) {
        let p = program(src);
        let s = solve_text(&p, "user", query, depth).unwrap();
        (s.rendered(), s.completeness)
    }

    const MEMBER: &str = "member(X, [X|_]).\nmember(X, [_|T]) :- member(X, T).\n";

    #[test]
    fn member_enumerates_in_order() {
        let (ans, c) = answers(MEMBER, "member(X, [a,b])", 50);
        assert_eq!(ans, vec!["X = a", "X = b"]);
        assert_eq!(c, Completeness::Exhausted);
    }

    #[test]
    fn infinite_loop_hits_cutoff() {
        let (ans, c) = answers("p :- p.\n", "p", 10);
        assert!(ans.is_empty());
        assert_eq!(c, Completeness::DepthCutoff);
    }

    #[test]
    fn ite_commits_to_first_condition_solution() {
        let (ans, c) = answers(
            "p(X) :- ( X = a -> true ; X = b ).\n",
            "p(Z)",
            50,
        );
        assert_eq!(ans, vec!["Z = a"]);
        assert_eq!(c, Completeness::Exhausted);
    }

    #[test]
    fn cut_prunes_clause_alternatives() {
        let (ans, _) = answers("p(a) :- !.\np(b).\n", "p(X)", 50);
        assert_eq!(ans, vec!["X = a"]);
        let (ans, _) = answers("p(a) :- !.\np(b).\n", "p(b)", 50);
        assert_eq!(ans, vec!["true"]);
    }

    #[test]
    fn cut_inside_disjunction_cuts_the_clause() {
        // Cut in the left branch removes both the right branch and the
        // second clause.
        let (ans, _) = answers(
            "p(X) :- ( X = a, ! ; X = b ).\np(c).\n",
            "p(X)",
            50,
        );
        assert_eq!(ans, vec!["X = a"]);
    }

    #[test]
    fn cut_inside_condition_is_local() {
        // The cut only prunes inside the condition; the else branch
        // still runs when the condition fails.
        let (ans, _) = answers(
            "p(X) :- ( ( X = a, !, fail ; X = b ) -> true ; X = c ).\n",
            "p(X)",
            50,
        );
        assert_eq!(ans, vec!["X = c"]);
    }

    #[test]
    fn negation_as_failure() {
        let src = "q(a).\np(X) :- member(X, [a,b]), \\+ q(X).\n";
        let full = format!("{MEMBER}{src}");
        let (ans, c) = answers(&full, "p(X)", 50);
        assert_eq!(ans, vec!["X = b"]);
        assert_eq!(c, Completeness::Exhausted);
    }

    #[test]
    fn duplicate_answers_are_kept() {
        let (ans, _) = answers("p(a).\np(a).\n", "p(X)", 50);
        assert_eq!(ans, vec!["X = a", "X = a"]);
    }

    #[test]
    fn arithmetic_and_comparison() {
        let (ans, _) = answers(
            "bigger(X, Y) :- X > Y.\n",
            "Z is 2 + 3 * 4, bigger(Z, 10)",
            50,
        );
        assert_eq!(ans, vec!["Z = 14"]);
        let (ans, _) = answers("p.\n", "X is 7 mod 3, Y is -7 mod 3", 50);
        assert_eq!(ans, vec!["X = 1, Y = 2"]);
    }

    #[test]
    fn unbound_variables_canonical_in_answers() {
        let (ans, _) = answers("p(f(A), g(A, B)).\n", "p(X, Y)", 50);
        assert_eq!(ans, vec!["X = f(_0), Y = g(_0,_1)"]);
    }

    #[test]
    fn cyclic_binding_is_refused() {
        let p = program("p(X) :- X = f(X).\n");
        let err = solve_text(&p, "user", "p(Y)", 50).unwrap_err();
        assert!(err.what.contains("cyclic"));
    }

    #[test]
    fn unsupported_builtin_is_refused() {
        let p = program("p(L) :- findall(X, q(X), L).\nq(a).\n");
        let err = solve_text(&p, "user", "p(L)", 50).unwrap_err();
        assert!(err.what.contains("findall"));
    }

    #[test]
    fn undefined_predicate_is_refused() {
        let p = program("p :- missing.\n");
        let err = solve_text(&p, "user", "p", 50).unwrap_err();
        assert!(err.what.contains("undefined"));
    }

    #[test]
    fn depth_prefix_monotonicity() {
        // Left recursion interleaved with answers: each budget yields a
        // prefix of the next one's answer list.
        let src = "nat(z).\nnat(s(N)) :- nat(N).\n";
        let mut prev: Vec<String> = Vec::new();
        for depth in [1, 2, 4, 8, 16] {
            let (ans, _) = answers(src, "nat(X)", depth);
            assert!(ans.len() >= prev.len());
            assert_eq!(&ans[..prev.len()], &prev[..]);
            prev = ans;
        }
    }

    #[test]
    fn hard_stop_keeps_prefix_property_across_branches() {
        // The first branch diverges; a small budget must not reach the
        // second branch's answer that a bigger budget finds later.
        let src = "loop :- loop.\np(X) :- ( X = a, loop ; X = b ).\n";
        let (small, c_small) = answers(src, "p(X)", 5);
        let (large, c_large) = answers(src, "p(X)", 100);
        assert_eq!(c_small, Completeness::DepthCutoff);
        assert_eq!(c_large, Completeness::DepthCutoff);
        assert!(small.is_empty());
        assert!(large.is_empty());
    }

    #[test]
    fn modules_and_imports_resolve() {
        let files = vec![
            (
                "a.pl".to_string(),
                ":- module(a, [p/1]).\n:- use_module(b, [q/1]).\np(X) :- q(X).\n".to_string(),
            ),
            (
                "b.pl".to_string(),
                ":- module(b, [q/1]).\nq(b1).\nq(b2).\n".to_string(),
            ),
        ];
        let p = load_program(&files, None, &Config::default());
        let s = solve_text(&p, "a", "p(X)", 50).unwrap();
        assert_eq!(s.rendered(), vec!["X = b1", "X = b2"]);
        // Qualified call from an unrelated module.
        let s = solve_text(&p, "user", "b:q(X)", 50).unwrap();
        assert_eq!(s.rendered(), vec!["X = b1", "X = b2"]);
    }

    #[test]
    fn equivalent_identity_and_failure() {
        let a = program("p(1).\np(2).\n");
        let b = program("p(1).\np(2).\n");
        let queries = vec![("p(X)".to_string(), "p(X)".to_string())];
        assert!(equivalent(&a, "user", &b, "user", &queries, 50, &Projection::Identity).unwrap());
        let c = program("p(2).\np(1).\n");
        assert!(!equivalent(&a, "user", &c, "user", &queries, 50, &Projection::Identity).unwrap());
    }

    #[test]
    fn equivalent_with_permutation() {
        let a = program("f(k1, v1).\nf(k2, v2).\n");
        // Arguments swapped: new position 1 holds old position 2.
        let b = program("f(v1, k1).\nf(v2, k2).\n");
        let queries = vec![("f(X, Y)".to_string(), "f(X, Y)".to_string())];
        assert!(equivalent(
            &a,
            "user",
            &b,
            "user",
            &queries,
            50,
            &Projection::Permutation(vec![2, 1])
        )
        .unwrap());
        assert!(!equivalent(&a, "user", &b, "user", &queries, 50, &Projection::Identity).unwrap());
    }

    #[test]
    fn equivalent_with_kept_args() {
        let a = program("p(a, t1).\np(b, t2).\n");
        let b = program("p(a).\np(b).\n");
        let queries = vec![("p(X, Y)".to_string(), "p(X)".to_string())];
        assert!(equivalent(
            &a,
            "user",
            &b,
            "user",
            &queries,
            50,
            &Projection::KeptArgs(vec![1])
        )
        .unwrap());
    }

    #[test]
    fn completeness_flags_must_match() {
        let a = program("p(a).\n");
        let b = program("p(a).\np(b) :- q.\nq :- q.\n");
        let queries = vec![("p(X)".to_string(), "p(X)".to_string())];
        // At a tiny depth the second program cuts off; flags differ.
        assert!(!equivalent(&a, "user", &b, "user", &queries, 3, &Projection::Identity).unwrap());
    }

    #[test]
    fn error_carries_offending_query() {
        let a = program("p.\n");
        let b = program("p :- assert(x).\n");
        let queries = vec![("p".to_string(), "p".to_string())];
        let err =
            equivalent(&a, "user", &b, "user", &queries, 10, &Projection::Identity).unwrap_err();
        assert_eq!(err.query.as_deref(), Some("p"));
    }

    #[test]
    fn solve_is_deterministic() {
        let p = program(&format!("{MEMBER}q(X, Y) :- member(X, [1,2]), member(Y, [a,b]).\n"));
        let s1 = solve_text(&p, "user", "q(A, B)", 50).unwrap();
        let s2 = solve_text(&p, "user", "q(A, B)", 50).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(
            s1.rendered(),
            vec!["A = 1, B = a", "A = 1, B = b", "A = 2, B = a", "A = 2, B = b"]
        );
    }
}
