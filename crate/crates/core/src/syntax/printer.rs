//! Structure-to-text rendering.
//!
//! The printer is the inverse of the parser up to layout: printing any
//! parsed item and reparsing it yields a structurally identical item, and
//! printing is a fixpoint (print . parse . print == print). Clause bodies
//! are laid out one goal per line with if-then-else blocks in the
//! conventional `(   Cond ->` style.

use crate::syntax::ast::{ClauseSrc, Directive, Goal, Item, Term};
use crate::syntax::lexer::is_graphic_char;
use crate::syntax::ops::OpTable;

const BODY_INDENT: usize = 8;
const BLOCK_STEP: usize = 4;

/// Renders a term, parenthesizing it if its operator priority exceeds
/// `max`.
pub fn print_term(t: &Term, ops: &OpTable, max: u16) -> String {
    let (s, prio) = render(t, ops);
    if prio > max {
        format!("({s})")
    } else {
        s
    }
}

fn render(t: &Term, ops: &OpTable) -> (String, u16) {
    match t {
        Term::Var { name, .. } => (name.clone(), 0),
        Term::Atom { text, .. } => (quote_atom(text), 0),
        Term::Int { value, .. } => (value.to_string(), 0),
        Term::Float { value, .. } => (format_float(*value), 0),
        Term::Str { text, .. } => (quote_string(text), 0),
        Term::Compound { functor, args, .. } => render_compound(functor, args, ops),
    }
}

fn render_compound(functor: &str, args: &[Term], ops: &OpTable) -> (String, u16) {
    if functor == "." && args.len() == 2 {
        return (render_list(args, ops), 0);
    }
    if functor == "{}" && args.len() == 1 {
        return (format!("{{{}}}", print_term(&args[0], ops, 1200)), 0);
    }
    if args.len() == 2 {
        if let Some(def) = ops.infix(functor) {
            let l = print_term(&args[0], ops, def.left_max());
            let r = print_term(&args[1], ops, def.right_max());
            let mut s = String::new();
            s.push_str(&l);
            if functor == "," {
                s.push_str(", ");
                s.push_str(&r);
            } else if def.priority >= 700 {
                s.push(' ');
                s.push_str(functor);
                s.push(' ');
                s.push_str(&r);
            } else {
                append(&mut s, functor);
                append(&mut s, &r);
            }
            return (s, def.priority);
        }
    }
    if args.len() == 1 {
        if let Some(def) = ops.prefix(functor) {
            let r = print_term(&args[0], ops, def.right_max());
            let mut s = String::from(functor);
            // A bare sign before a number would fuse into a literal.
            if (functor == "-" || functor == "+")
                && r.starts_with(|c: char| c.is_ascii_digit())
            {
                s.push(' ');
            }
            append(&mut s, &r);
            return (s, def.priority);
        }
        if let Some(def) = ops.postfix(functor) {
            let l = print_term(&args[0], ops, def.left_max());
            let mut s = l;
            append(&mut s, functor);
            return (s, def.priority);
        }
    }
    let mut s = quote_atom(functor);
    s.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&print_term(a, ops, 999));
    }
    s.push(')');
    (s, 0)
}

fn render_list(args: &[Term], ops: &OpTable) -> String {
    let mut s = String::from("[");
    s.push_str(&print_term(&args[0], ops, 999));
    let mut tail = &args[1];
    loop {
        match tail {
            Term::Atom { text, .. } if text == "[]" => break,
            Term::Compound { functor, args, .. } if functor == "." && args.len() == 2 => {
                s.push_str(", ");
                s.push_str(&print_term(&args[0], ops, 999));
                tail = &args[1];
            }
            other => {
                s.push('|');
                s.push_str(&print_term(other, ops, 999));
                break;
            }
        }
    }
    s.push(']');
    s
}

/// Joins two fragments, inserting a space where adjacent characters would
/// otherwise fuse into one token.
fn append(out: &mut String, next: &str) {
    if let (Some(a), Some(b)) = (out.chars().last(), next.chars().next()) {
        let fuse = (is_graphic_char(a) && is_graphic_char(b))
            || ((a.is_alphanumeric() || a == '_') && (b.is_alphanumeric() || b == '_'));
        if fuse {
            out.push(' ');
        }
    }
    out.push_str(next);
}

/// Quotes an atom when its text is not a valid unquoted token.
pub fn quote_atom(text: &str) -> String {
    if atom_needs_no_quotes(text) {
        text.to_string()
    } else {
        let mut s = String::from("'");
        for c in text.chars() {
            match c {
                '\'' => s.push_str("\\'"),
                '\\' => s.push_str("\\\\"),
                '\n' => s.push_str("\\n"),
                '\t' => s.push_str("\\t"),
                c if (c as u32) < 0x20 => s.push_str(&format!("\\x{:x}\\", c as u32)),
                c => s.push(c),
            }
        }
        s.push('\'');
        s
    }
}

fn atom_needs_no_quotes(text: &str) -> bool {
    if matches!(text, "!" | ";" | "[]" | "{}") {
        return true;
    }
    let mut chars = text.chars();
    match chars.next() {
        None => false,
        Some(c) if c.is_lowercase() && c.is_alphabetic() => {
            chars.all(|c| c.is_alphanumeric() || c == '_')
        }
        Some(c) if is_graphic_char(c) => text.chars().all(is_graphic_char),
        _ => false,
    }
}

fn quote_string(text: &str) -> String {
    let mut s = String::from("\"");
    for c in text.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c if (c as u32) < 0x20 => s.push_str(&format!("\\x{:x}\\", c as u32)),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

/// Formats a float so it re-lexes as a float (always a digit on both
/// sides of the dot).
fn format_float(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') {
        s
    } else if let Some(epos) = s.find(['e', 'E']) {
        format!("{}.0{}", &s[..epos], &s[epos..])
    } else {
        format!("{s}.0")
    }
}

/// Rebuilds the control-structure term of a goal; inverse of goal
/// conversion up to `(C -> T)` gaining an explicit `fail` alternative.
pub fn goal_to_term(g: &Goal) -> Term {
    match g {
        Goal::Call {
            term,
            qualifier: None,
            ..
        } => term.clone(),
        Goal::Call {
            term,
            qualifier: Some(m),
            ..
        } => Term::compound(":", vec![Term::atom(m.clone()), term.clone()]),
        Goal::Conj { goals, .. } => {
            let mut it = goals.iter().rev();
            let mut acc = goal_to_term(it.next().expect("conj is non-empty"));
            for g in it {
                acc = Term::compound(",", vec![goal_to_term(g), acc]);
            }
            acc
        }
        Goal::Disj { left, right, .. } => {
            Term::compound(";", vec![goal_to_term(left), goal_to_term(right)])
        }
        Goal::IfThenElse {
            cond, then, els, ..
        } => Term::compound(
            ";",
            vec![
                Term::compound("->", vec![goal_to_term(cond), goal_to_term(then)]),
                goal_to_term(els),
            ],
        ),
        Goal::Neg { goal, .. } => Term::compound("\\+", vec![goal_to_term(goal)]),
        Goal::Cut { .. } => Term::atom("!"),
        Goal::True { .. } => Term::atom("true"),
        Goal::Fail { .. } => Term::atom("fail"),
    }
}

/// Renders a goal on one line, parenthesized for the given priority
/// context.
pub fn print_goal_inline(g: &Goal, ops: &OpTable, max: u16) -> String {
    print_term(&goal_to_term(g), ops, max)
}

/// Renders a comma-joined goal sequence at argument priority.
pub fn print_goals_inline(goals: &[&Goal], ops: &OpTable) -> String {
    goals
        .iter()
        .map(|g| print_goal_inline(g, ops, 999))
        .collect::<Vec<_>>()
        .join(", ")
}

fn body_lines(g: &Goal, indent: usize, ops: &OpTable, out: &mut Vec<String>) {
    let pad = " ".repeat(indent);
    match g {
        Goal::Conj { goals, .. } => {
            for (i, sub) in goals.iter().enumerate() {
                let mark = out.len();
                body_lines(sub, indent, ops, out);
                if i + 1 < goals.len() {
                    debug_assert!(out.len() > mark);
                    let last = out.last_mut().unwrap();
                    last.push(',');
                }
            }
        }
        Goal::IfThenElse { .. } | Goal::Disj { .. } => {
            let mut arms: Vec<(Option<&Goal>, &Goal)> = Vec::new();
            let mut cur = g;
            loop {
                match cur {
                    Goal::IfThenElse {
                        cond, then, els, ..
                    } => {
                        arms.push((Some(cond), then));
                        cur = els;
                    }
                    Goal::Disj { left, right, .. } => {
                        arms.push((None, left));
                        cur = right;
                    }
                    last => {
                        arms.push((None, last));
                        break;
                    }
                }
            }
            for (i, (cond, body)) in arms.iter().enumerate() {
                let opener = if i == 0 { "(   " } else { ";   " };
                match cond {
                    Some(c) => {
                        out.push(format!(
                            "{pad}{opener}{} ->",
                            print_goal_inline(c, ops, 1049)
                        ));
                        body_lines(body, indent + BLOCK_STEP, ops, out);
                    }
                    None => {
                        let mark = out.len();
                        body_lines(body, indent + BLOCK_STEP, ops, out);
                        let first = out[mark].trim_start().to_string();
                        out[mark] = format!("{pad}{opener}{first}");
                    }
                }
            }
            out.push(format!("{pad})"));
        }
        other => {
            out.push(format!("{pad}{}", print_goal_inline(other, ops, 999)));
        }
    }
}

/// Renders one clause in canonical layout, terminated by `.` and a
/// newline.
pub fn print_clause(head: &Term, body: &Goal, ops: &OpTable) -> String {
    let head_text = print_term(head, ops, 1199);
    if matches!(body, Goal::True { .. }) {
        return format!("{head_text}.\n");
    }
    let mut lines = Vec::new();
    body_lines(body, BODY_INDENT, ops, &mut lines);
    let mut s = format!("{head_text} :-\n");
    s.push_str(&lines.join("\n"));
    s.push_str(".\n");
    s
}

pub fn print_directive(d: &Directive, ops: &OpTable) -> String {
    format!(":- {}.\n", print_term(&d.term, ops, 1199))
}

/// Renders a whole item. Grammar rules keep their original text: their
/// bodies are not modelled structurally.
pub fn print_item(item: &Item, ops: &OpTable) -> String {
    match item {
        Item::Clause(c) if c.is_dcg => {
            let mut s = c.raw.clone();
            s.push('\n');
            s
        }
        Item::Clause(ClauseSrc { head, body, .. }) => print_clause(head, body, ops),
        Item::Directive(d) => print_directive(d, ops),
    }
}

/// Renders a parsed file back to text in canonical layout.
pub fn print_items(items: &[Item], ops: &OpTable) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&print_item(item, ops));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::FileId;
    use crate::syntax::parser::parse_file;

    fn roundtrip(src: &str) -> String {
        let pf = parse_file(src, FileId(0));
        assert!(pf.errors.is_empty(), "{src:?}: {:?}", pf.errors);
        print_items(&pf.items, &pf.ops)
    }

    #[test]
    fn fact_layout() {
        assert_eq!(roundtrip("p( a ,X ).\n"), "p(a, X).\n");
    }

    #[test]
    fn rule_layout() {
        let out = roundtrip("p(X):-q(X),r(X).\n");
        assert_eq!(out, "p(X) :-\n        q(X),\n        r(X).\n");
    }

    #[test]
    fn ite_layout() {
        let out = roundtrip("p(X) :- ( X > 0 -> q(X) ; r(X) ).\n");
        let expect = "p(X) :-\n        (   X > 0 ->\n            q(X)\n        ;   r(X)\n        ).\n";
        assert_eq!(out, expect);
    }

    #[test]
    fn print_parse_print_fixpoint() {
        let samples = [
            "p(X):-q(X),r(X).\n",
            "p([1,2|T], {a,b}) :- \\+ q(T), ( a ; b ; c ).\n",
            "s(X) :- ( X == [] -> t ; X = [H|_], u(H) ).\n",
            ":- module(m, [p/1]).\n:- use_module(library(lists), [append/3]).\np(X) :- lists:append(X, [], X).\n",
            "f(-1, - X, 3.5, \"s\", 'odd atom') :- X is 3 - -1.\n",
            "g :- a = (1, 2), b = -(-(1)).\n",
        ];
        for src in samples {
            let once = roundtrip(src);
            let twice = roundtrip(&once);
            assert_eq!(once, twice, "fixpoint failed for {src:?}");
        }
    }

    #[test]
    fn operator_spacing() {
        assert_eq!(roundtrip("x :- X is 1+2*3.\n"), "x :-\n        X is 1+2*3.\n");
        assert_eq!(roundtrip("x :- X = a:b.\n"), "x :-\n        X = a:b.\n");
    }

    #[test]
    fn negative_number_spacing_survives() {
        // -(1) and -1 are different terms and must print differently.
        let out = roundtrip("g :- a = -(1), b = -1.\n");
        assert!(out.contains("a = - 1"), "{out}");
        assert!(out.contains("b = -1"), "{out}");
        let again = roundtrip(&out);
        assert_eq!(out, again);
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_atom("abc"), "abc");
        assert_eq!(quote_atom("aBc_1"), "aBc_1");
        assert_eq!(quote_atom("=="), "==");
        assert_eq!(quote_atom("[]"), "[]");
        assert_eq!(quote_atom("Abc"), "'Abc'");
        assert_eq!(quote_atom("two words"), "'two words'");
        assert_eq!(quote_atom("it's"), "'it\\'s'");
        assert_eq!(quote_atom(""), "''");
        assert_eq!(quote_atom("123"), "'123'");
    }

    #[test]
    fn comma_term_in_arg_position_parenthesized() {
        let out = roundtrip("x :- p((a, b)).\n");
        assert!(out.contains("p((a, b))"), "{out}");
    }

    #[test]
    fn dcg_clause_prints_raw() {
        let src = "greeting-->[hello] , name.\n";
        assert_eq!(roundtrip(src), "greeting-->[hello] , name.\n");
    }

    #[test]
    fn floats_relex_as_floats() {
        assert_eq!(format_float(2.5), "2.5");
        assert_eq!(format_float(1e-10), "1.0e-10");
        assert_eq!(format_float(3.0), "3.0");
        let out = roundtrip("f(1.0e-10, 2.5).\n");
        let again = roundtrip(&out);
        assert_eq!(out, again);
    }
}
