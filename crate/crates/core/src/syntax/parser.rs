//! Operator-precedence parser for the module dialect.
//!
//! Terms are read with precedence climbing against a dynamic operator
//! table; `:- op/3` directives take effect immediately, so clauses later
//! in the same file parse under the amended table. Errors are recovered
//! by skipping past the next clause terminator.

use std::collections::BTreeMap;

use crate::span::{FileId, SourceSpan};
use crate::syntax::ast::{ClauseSrc, Directive, DirectiveKind, Goal, Item, Term, VarId};
use crate::syntax::lexer::{integer_value, tokenize, unescape_quoted, Token, TokenKind};
use crate::syntax::ops::{OpTable, OpType};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub message: String,
    pub span: SourceSpan,
}

/// Result of parsing one file: items in order, recovered errors, and the
/// operator table state after the final directive.
#[derive(Debug, Clone)]
pub struct ParsedFile {
    pub file: FileId,
    pub text: String,
    pub items: Vec<Item>,
    pub errors: Vec<SyntaxError>,
    pub ops: OpTable,
}

pub fn parse_file(text: &str, file: FileId) -> ParsedFile {
    parse_file_with_ops(text, file, OpTable::standard())
}

pub fn parse_file_with_ops(text: &str, file: FileId, ops: OpTable) -> ParsedFile {
    let mut out = ParsedFile {
        file,
        text: text.to_string(),
        items: Vec::new(),
        errors: Vec::new(),
        ops,
    };
    let tokens = match tokenize(text, file) {
        Ok(t) => t,
        Err(e) => {
            out.errors.push(SyntaxError {
                message: e.to_string(),
                span: e.span(),
            });
            return out;
        }
    };
    let mut p = Parser {
        toks: &tokens,
        pos: 0,
        text,
        file,
        ops: &mut out.ops,
        vars: BTreeMap::new(),
        next_var: 0,
    };
    loop {
        p.skip_trivia();
        if p.pos >= p.toks.len() {
            break;
        }
        match p.read_item() {
            Ok(item) => out.items.push(item),
            Err(e) => {
                out.errors.push(e);
                p.recover();
            }
        }
    }
    out
}

/// Span of a term the parser itself built; always present.
fn sp(t: &Term) -> SourceSpan {
    t.span().expect("parsed terms carry spans")
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    text: &'a str,
    file: FileId,
    ops: &'a mut OpTable,
    vars: BTreeMap<String, VarId>,
    next_var: u32,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>, span: SourceSpan) -> SyntaxError {
        SyntaxError {
            message: message.into(),
            span,
        }
    }

    fn eof_span(&self) -> SourceSpan {
        SourceSpan::new(self.file, self.text.len(), self.text.len())
    }

    fn skip_trivia(&mut self) {
        while self.pos < self.toks.len() && self.toks[self.pos].is_trivia() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<&'a Token> {
        self.skip_trivia();
        self.toks.get(self.pos)
    }

    fn peek_ahead(&self) -> Option<&'a Token> {
        let mut i = self.pos + 1;
        while i < self.toks.len() && self.toks[i].is_trivia() {
            i += 1;
        }
        self.toks.get(i)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        self.skip_trivia();
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    /// True when the next raw token (no trivia allowed between) is an open
    /// paren: the compound-term condition.
    fn adjacent_open(&self) -> bool {
        matches!(self.toks.get(self.pos + 1),
                 Some(t) if t.kind == TokenKind::Punct && t.text == "(")
    }

    /// True when the next raw token (no trivia allowed between) is a number.
    fn adjacent_number(&self) -> bool {
        matches!(self.toks.get(self.pos + 1),
                 Some(t) if matches!(t.kind, TokenKind::Integer | TokenKind::Float))
    }

    fn recover(&mut self) {
        while let Some(t) = self.toks.get(self.pos) {
            self.pos += 1;
            if t.kind == TokenKind::End {
                break;
            }
        }
    }

    fn fresh_var(&mut self, name: &str) -> VarId {
        if name == "_" {
            let id = VarId(self.next_var);
            self.next_var += 1;
            return id;
        }
        if let Some(&id) = self.vars.get(name) {
            return id;
        }
        let id = VarId(self.next_var);
        self.next_var += 1;
        self.vars.insert(name.to_string(), id);
        id
    }

    fn atom_text(&self, t: &Token) -> Result<String, SyntaxError> {
        if t.text.starts_with('\'') {
            unescape_quoted(&t.text, '\'').map_err(|m| self.err(m, t.span))
        } else {
            Ok(t.text.clone())
        }
    }

    /// Can the token begin a term? Used to decide whether a prefix
    /// operator really has an operand or stands as a plain atom (so that
    /// `p(+, -, ?)` parses).
    fn starts_term(t: &Token) -> bool {
        match t.kind {
            TokenKind::Atom
            | TokenKind::Variable
            | TokenKind::Integer
            | TokenKind::Float
            | TokenKind::Str => true,
            TokenKind::Punct => !matches!(t.text.as_str(), ")" | "]" | "}" | "," | "|"),
            _ => false,
        }
    }

    fn read_item(&mut self) -> Result<Item, SyntaxError> {
        self.vars.clear();
        self.next_var = 0;
        let start = self.peek().map(|t| t.span.start).unwrap_or(0);
        let (term, _) = self.parse_term(1200)?;
        let end_tok = match self.bump() {
            Some(t) if t.kind == TokenKind::End => t,
            Some(t) => {
                return Err(self.err(
                    format!("operator clash or missing end: unexpected `{}`", t.text),
                    t.span,
                ))
            }
            None => return Err(self.err("unexpected end of file in clause", self.eof_span())),
        };
        let span = SourceSpan::new(self.file, start, end_tok.span.end);
        let raw = self.text[span.start..span.end].to_string();
        self.classify(term, span, raw)
    }

    fn classify(&mut self, term: Term, span: SourceSpan, raw: String) -> Result<Item, SyntaxError> {
        match &term {
            Term::Compound { functor, args, .. } if functor == ":-" && args.len() == 1 => {
                let kind = self.directive_kind(&args[0]);
                if let DirectiveKind::Op {
                    priority,
                    op_type,
                    names,
                } = &kind
                {
                    for n in names {
                        self.ops.define(*priority, *op_type, n);
                    }
                }
                Ok(Item::Directive(Directive {
                    kind,
                    term: args[0].clone(),
                    span,
                }))
            }
            Term::Compound { functor, args, .. } if functor == ":-" && args.len() == 2 => {
                if !args[0].is_callable() {
                    return Err(self.err("clause head is not callable", args[0].span().unwrap_or(span)));
                }
                Ok(Item::Clause(ClauseSrc {
                    head: args[0].clone(),
                    body: term_to_goal(&args[1]),
                    span,
                    raw,
                    is_dcg: false,
                }))
            }
            Term::Compound { functor, args, .. } if functor == "-->" && args.len() == 2 => {
                if !args[0].is_callable() {
                    return Err(self.err("grammar rule head is not callable", args[0].span().unwrap_or(span)));
                }
                Ok(Item::Clause(ClauseSrc {
                    head: args[0].clone(),
                    body: Goal::truth(),
                    span,
                    raw,
                    is_dcg: true,
                }))
            }
            _ => {
                if !term.is_callable() {
                    return Err(self.err("clause head is not callable", span));
                }
                Ok(Item::Clause(ClauseSrc {
                    head: term,
                    body: Goal::truth(),
                    span,
                    raw,
                    is_dcg: false,
                }))
            }
        }
    }

    fn directive_kind(&self, body: &Term) -> DirectiveKind {
        match body {
            Term::Compound { functor, args, .. } if functor == "module" && args.len() == 2 => {
                if let (Some(name), Some(exports)) = (args[0].as_atom(), indicator_list(&args[1]))
                {
                    return DirectiveKind::Module {
                        name: name.to_string(),
                        exports,
                    };
                }
            }
            Term::Compound { functor, args, .. }
                if functor == "use_module" && (args.len() == 1 || args.len() == 2) =>
            {
                if let Some(m) = module_ref(&args[0]) {
                    let imports = if args.len() == 2 {
                        match indicator_list(&args[1]) {
                            Some(list) => Some(list),
                            None => return DirectiveKind::Other { term: body.clone() },
                        }
                    } else {
                        None
                    };
                    return DirectiveKind::UseModule { module: m, imports };
                }
            }
            Term::Compound { functor, args, .. } if functor == "op" && args.len() == 3 => {
                if let (Term::Int { value, .. }, Some(ty)) = (&args[0], args[1].as_atom()) {
                    if let Some(op_type) = OpType::parse(ty) {
                        let names = match &args[2] {
                            Term::Atom { text, .. } => Some(vec![text.clone()]),
                            list => atom_list(list),
                        };
                        if let (Some(names), Ok(priority)) = (names, u16::try_from(*value)) {
                            if priority <= 1200 {
                                return DirectiveKind::Op {
                                    priority,
                                    op_type,
                                    names,
                                };
                            }
                        }
                    }
                }
            }
            Term::Compound { functor, args, .. } if functor == "mode" && args.len() == 1 => {
                return DirectiveKind::Mode {
                    term: args[0].clone(),
                };
            }
            _ => {}
        }
        DirectiveKind::Other { term: body.clone() }
    }

    /// Precedence climbing: returns the term and the priority it carries.
    fn parse_term(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let (mut lhs, mut lhs_prio) = self.parse_primary(max)?;
        loop {
            let Some(t) = self.peek() else { break };
            let name = match t.kind {
                TokenKind::Atom | TokenKind::Punct => t.text.clone(),
                _ => break,
            };
            if matches!(name.as_str(), "(" | ")" | "[" | "]" | "{" | "}" | "|") {
                break;
            }
            let op_name = if name.starts_with('\'') {
                self.atom_text(t)?
            } else {
                name
            };
            if let Some(def) = self.ops.infix(&op_name) {
                if def.priority <= max && lhs_prio <= def.left_max() {
                    let tok = self.bump().unwrap();
                    let (rhs, _) = self.parse_term(def.right_max())?;
                    let span = sp(&lhs).cover(sp(&rhs));
                    lhs = Term::Compound {
                        functor: op_name,
                        args: vec![lhs, rhs],
                        span: Some(span),
                        functor_span: Some(tok.span),
                    };
                    lhs_prio = def.priority;
                    continue;
                }
            }
            if let Some(def) = self.ops.postfix(&op_name) {
                if def.priority <= max && lhs_prio <= def.left_max() {
                    let tok = self.bump().unwrap();
                    let span = sp(&lhs).cover(tok.span);
                    lhs = Term::Compound {
                        functor: op_name,
                        args: vec![lhs],
                        span: Some(span),
                        functor_span: Some(tok.span),
                    };
                    lhs_prio = def.priority;
                    continue;
                }
            }
            break;
        }
        Ok((lhs, lhs_prio))
    }

    fn parse_primary(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let Some(t) = self.peek() else {
            return Err(self.err("unexpected end of file in term", self.eof_span()));
        };
        match t.kind {
            TokenKind::Integer => {
                let tok = self.bump().unwrap();
                let value = integer_value(&tok.text).map_err(|m| self.err(m, tok.span))?;
                Ok((
                    Term::Int {
                        value,
                        span: Some(tok.span),
                    },
                    0,
                ))
            }
            TokenKind::Float => {
                let tok = self.bump().unwrap();
                let value: f64 = tok
                    .text
                    .parse()
                    .map_err(|_| self.err("malformed float", tok.span))?;
                Ok((
                    Term::Float {
                        value,
                        span: Some(tok.span),
                    },
                    0,
                ))
            }
            TokenKind::Str => {
                let tok = self.bump().unwrap();
                let text = unescape_quoted(&tok.text, '"').map_err(|m| self.err(m, tok.span))?;
                Ok((
                    Term::Str {
                        text,
                        span: Some(tok.span),
                    },
                    0,
                ))
            }
            TokenKind::Variable => {
                let tok = self.bump().unwrap();
                let id = self.fresh_var(&tok.text);
                Ok((
                    Term::Var {
                        name: tok.text.clone(),
                        id,
                        span: Some(tok.span),
                    },
                    0,
                ))
            }
            TokenKind::Punct if t.text == "(" => {
                self.bump();
                let (term, _) = self.parse_term(1200)?;
                self.expect_punct(")")?;
                Ok((term, 0))
            }
            TokenKind::Punct if t.text == "[" => self.parse_list(),
            TokenKind::Punct if t.text == "{" => self.parse_curly(),
            TokenKind::Atom | TokenKind::Punct => self.parse_atom_or_op(max),
            TokenKind::End => Err(self.err("unexpected end of clause", t.span)),
            TokenKind::Comment | TokenKind::Layout => unreachable!("trivia skipped"),
        }
    }

    fn parse_atom_or_op(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let t = *self.peek().as_ref().unwrap();
        let name = self.atom_text(t)?;
        // Functor immediately followed by `(` forms a compound.
        if self.adjacent_open() {
            let tok = self.bump().unwrap();
            self.bump(); // (
            let args = self.parse_arglist()?;
            let close = self.expect_punct(")")?;
            let span = SourceSpan::new(self.file, tok.span.start, close.span.end);
            return Ok((
                Term::Compound {
                    functor: name,
                    args,
                    span: Some(span),
                    functor_span: Some(tok.span),
                },
                0,
            ));
        }
        // `-1` in operand position is a negative literal.
        if (name == "-" || name == "+") && self.adjacent_number() {
            let sign_tok = self.bump().unwrap();
            let num = self.bump().unwrap();
            let span = sign_tok.span.cover(num.span);
            let negate = name == "-";
            return match num.kind {
                TokenKind::Integer => {
                    let v = integer_value(&num.text).map_err(|m| self.err(m, num.span))?;
                    Ok((
                        Term::Int {
                            value: if negate { -v } else { v },
                            span: Some(span),
                        },
                        0,
                    ))
                }
                _ => {
                    let v: f64 = num
                        .text
                        .parse()
                        .map_err(|_| self.err("malformed float", num.span))?;
                    Ok((
                        Term::Float {
                            value: if negate { -v } else { v },
                            span: Some(span),
                        },
                        0,
                    ))
                }
            };
        }
        if let Some(def) = self.ops.prefix(&name) {
            let operand_follows = self.peek_ahead().map(Self::starts_term).unwrap_or(false);
            if operand_follows {
                if def.priority > max {
                    return Err(self.err(
                        format!("prefix operator `{name}` exceeds priority context"),
                        t.span,
                    ));
                }
                let tok = self.bump().unwrap();
                let (rhs, _) = self.parse_term(def.right_max())?;
                let span = tok.span.cover(sp(&rhs));
                return Ok((
                    Term::Compound {
                        functor: name,
                        args: vec![rhs],
                        span: Some(span),
                        functor_span: Some(tok.span),
                    },
                    def.priority,
                ));
            }
        }
        // Plain atom (covers operator names standing as atoms).
        let tok = self.bump().unwrap();
        Ok((
            Term::Atom {
                text: name,
                span: Some(tok.span),
            },
            0,
        ))
    }

    fn parse_arglist(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let mut args = Vec::new();
        loop {
            let (arg, _) = self.parse_term(999)?;
            args.push(arg);
            match self.peek() {
                Some(t) if t.kind == TokenKind::Punct && t.text == "," => {
                    self.bump();
                }
                _ => break,
            }
        }
        Ok(args)
    }

    fn parse_list(&mut self) -> Result<(Term, u16), SyntaxError> {
        let open = self.bump().unwrap(); // [
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Punct && t.text == "]" {
                let close = self.bump().unwrap();
                return Ok((
                    Term::Atom {
                        text: "[]".to_string(),
                        span: Some(open.span.cover(close.span)),
                    },
                    0,
                ));
            }
        }
        let mut elems = Vec::new();
        let tail;
        loop {
            let (e, _) = self.parse_term(999)?;
            elems.push(e);
            match self.peek() {
                Some(t) if t.kind == TokenKind::Punct && t.text == "," => {
                    self.bump();
                }
                Some(t) if t.kind == TokenKind::Punct && t.text == "|" => {
                    self.bump();
                    let (tl, _) = self.parse_term(999)?;
                    tail = tl;
                    break;
                }
                _ => {
                    let at = sp(elems.last().unwrap()).end;
                    tail = Term::Atom {
                        text: "[]".to_string(),
                        span: Some(SourceSpan::new(self.file, at, at)),
                    };
                    break;
                }
            }
        }
        let close = self.expect_punct("]")?;
        let full = open.span.cover(close.span);
        let mut list = tail;
        for e in elems.into_iter().rev() {
            let span = sp(&e).cover(full);
            let marker = SourceSpan::new(self.file, sp(&e).start, sp(&e).start);
            list = Term::Compound {
                functor: ".".to_string(),
                args: vec![e, list],
                span: Some(span),
                functor_span: Some(marker),
            };
        }
        // Outermost cell covers the whole bracketed range.
        if let Term::Compound { span, .. } = &mut list {
            *span = Some(full);
        }
        Ok((list, 0))
    }

    fn parse_curly(&mut self) -> Result<(Term, u16), SyntaxError> {
        let open = self.bump().unwrap(); // {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Punct && t.text == "}" {
                let close = self.bump().unwrap();
                return Ok((
                    Term::Atom {
                        text: "{}".to_string(),
                        span: Some(open.span.cover(close.span)),
                    },
                    0,
                ));
            }
        }
        let (inner, _) = self.parse_term(1200)?;
        let close = self.expect_punct("}")?;
        let span = open.span.cover(close.span);
        Ok((
            Term::Compound {
                functor: "{}".to_string(),
                args: vec![inner],
                span: Some(span),
                functor_span: Some(SourceSpan::new(self.file, open.span.start, open.span.start)),
            },
            0,
        ))
    }

    fn expect_punct(&mut self, what: &str) -> Result<&'a Token, SyntaxError> {
        match self.bump() {
            Some(t) if t.kind == TokenKind::Punct && t.text == what => Ok(t),
            Some(t) => Err(self.err(format!("expected `{what}`, found `{}`", t.text), t.span)),
            None => Err(self.err(
                format!("expected `{what}`, found end of file"),
                self.eof_span(),
            )),
        }
    }
}

fn module_ref(t: &Term) -> Option<String> {
    match t {
        Term::Atom { text, .. } => Some(text.clone()),
        Term::Compound { functor, args, .. } if functor == "library" && args.len() == 1 => {
            args[0].as_atom().map(str::to_string)
        }
        _ => None,
    }
}

/// Reads a proper list of `name/arity` terms.
fn indicator_list(t: &Term) -> Option<Vec<(String, usize)>> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Atom { text, .. } if text == "[]" => return Some(out),
            Term::Compound { functor, args, .. } if functor == "." && args.len() == 2 => {
                match &args[0] {
                    Term::Compound {
                        functor: slash,
                        args: pa,
                        ..
                    } if slash == "/" && pa.len() == 2 => match (&pa[0], &pa[1]) {
                        (Term::Atom { text, .. }, Term::Int { value, .. }) if *value >= 0 => {
                            out.push((text.clone(), *value as usize));
                        }
                        _ => return None,
                    },
                    _ => return None,
                }
                cur = &args[1];
            }
            _ => return None,
        }
    }
}

fn atom_list(t: &Term) -> Option<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Atom { text, .. } if text == "[]" => return Some(out),
            Term::Compound { functor, args, .. } if functor == "." && args.len() == 2 => {
                out.push(args[0].as_atom()?.to_string());
                cur = &args[1];
            }
            _ => return None,
        }
    }
}

/// Converts a body term into control-structure form.
pub fn term_to_goal(t: &Term) -> Goal {
    let span = t.span();
    match t {
        Term::Atom { text, .. } if text == "true" => Goal::True { span },
        Term::Atom { text, .. } if text == "fail" || text == "false" => Goal::Fail { span },
        Term::Atom { text, .. } if text == "!" => Goal::Cut { span },
        Term::Compound { functor, args, .. } if functor == "," && args.len() == 2 => {
            let mut goals = Vec::new();
            flatten_conj(&args[0], &mut goals);
            flatten_conj(&args[1], &mut goals);
            Goal::Conj { goals, span }
        }
        Term::Compound { functor, args, .. } if functor == ";" && args.len() == 2 => {
            if let Term::Compound {
                functor: arrow,
                args: ite,
                ..
            } = &args[0]
            {
                if arrow == "->" && ite.len() == 2 {
                    return Goal::IfThenElse {
                        cond: Box::new(term_to_goal(&ite[0])),
                        then: Box::new(term_to_goal(&ite[1])),
                        els: Box::new(term_to_goal(&args[1])),
                        span,
                    };
                }
            }
            Goal::Disj {
                left: Box::new(term_to_goal(&args[0])),
                right: Box::new(term_to_goal(&args[1])),
                span,
            }
        }
        Term::Compound { functor, args, .. } if functor == "->" && args.len() == 2 => {
            // Bare if-then is if-then-else with a failing alternative.
            Goal::IfThenElse {
                cond: Box::new(term_to_goal(&args[0])),
                then: Box::new(term_to_goal(&args[1])),
                els: Box::new(Goal::Fail { span: None }),
                span,
            }
        }
        Term::Compound { functor, args, .. } if functor == "\\+" && args.len() == 1 => Goal::Neg {
            goal: Box::new(term_to_goal(&args[0])),
            span,
        },
        Term::Compound { functor, args, .. } if functor == ":" && args.len() == 2 => {
            if let Some(m) = args[0].as_atom() {
                return Goal::Call {
                    term: args[1].clone(),
                    qualifier: Some(m.to_string()),
                    span,
                };
            }
            Goal::Call {
                term: t.clone(),
                qualifier: None,
                span,
            }
        }
        _ => Goal::Call {
            term: t.clone(),
            qualifier: None,
            span,
        },
    }
}

fn flatten_conj(t: &Term, out: &mut Vec<Goal>) {
    if let Term::Compound { functor, args, .. } = t {
        if functor == "," && args.len() == 2 {
            flatten_conj(&args[0], out);
            flatten_conj(&args[1], out);
            return;
        }
    }
    out.push(term_to_goal(t));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::Term::{Compound, Float, Int, Var};

    fn one_clause(src: &str) -> ClauseSrc {
        let pf = parse_file(src, FileId(0));
        assert!(pf.errors.is_empty(), "errors: {:?}", pf.errors);
        assert_eq!(pf.items.len(), 1, "items: {:?}", pf.items);
        match &pf.items[0] {
            Item::Clause(c) => c.clone(),
            other => panic!("expected clause, got {other:?}"),
        }
    }

    fn head_term(src: &str) -> Term {
        one_clause(src).head
    }

    #[test]
    fn fact_and_rule() {
        let c = one_clause("p(a, X).\n");
        assert_eq!(c.indicator(), ("p".to_string(), 2));
        assert!(c.is_fact());

        let c = one_clause("p :- q, r.\n");
        assert_eq!(c.body.conjuncts().len(), 2);
        assert_eq!(c.raw, "p :- q, r.");
    }

    #[test]
    fn precedence_shapes() {
        // a + b * c  ==>  +(a, *(b, c))
        let c = one_clause("x :- X = a + b * c.\n");
        if let Goal::Call { term, .. } = &c.body {
            if let Compound { functor, args, .. } = term {
                assert_eq!(functor, "=");
                if let Compound { functor, args, .. } = &args[1] {
                    assert_eq!(functor, "+");
                    assert_eq!(args[0].as_atom(), Some("a"));
                    assert!(matches!(&args[1], Compound { functor, .. } if functor == "*"));
                } else {
                    panic!("= rhs not compound");
                }
            } else {
                panic!("goal not compound");
            }
        } else {
            panic!("not a call");
        }

        // left associativity: a - b - c ==> -(-(a, b), c)
        let c = one_clause("y :- X = a - b - c.\n");
        if let Goal::Call { term, .. } = &c.body {
            if let Compound { args, .. } = term {
                if let Compound { functor, args, .. } = &args[1] {
                    assert_eq!(functor, "-");
                    assert!(matches!(&args[0], Compound { functor, .. } if functor == "-"));
                    assert_eq!(args[1].as_atom(), Some("c"));
                } else {
                    panic!("rhs not compound");
                }
            }
        }
    }

    #[test]
    fn if_then_else_conversion() {
        let c = one_clause("p(X) :- ( X > 0 -> q(X) ; r(X) ).\n");
        match &c.body {
            Goal::IfThenElse { cond, then, els, .. } => {
                assert!(matches!(**cond, Goal::Call { .. }));
                assert!(matches!(**then, Goal::Call { .. }));
                assert!(matches!(**els, Goal::Call { .. }));
            }
            other => panic!("expected if-then-else, got {other:?}"),
        }
    }

    #[test]
    fn disjunction_and_negation() {
        let c = one_clause("p :- ( a ; b ), \\+ c.\n");
        let gs = c.body.conjuncts();
        assert_eq!(gs.len(), 2);
        assert!(matches!(gs[0], Goal::Disj { .. }));
        assert!(matches!(gs[1], Goal::Neg { .. }));
    }

    #[test]
    fn list_sugar() {
        let t = head_term("p([1, 2 | T]).\n");
        if let Compound { args, .. } = &t {
            let mut cur = &args[0];
            let mut seen = 0;
            while let Compound { functor, args, .. } = cur {
                assert_eq!(functor, ".");
                seen += 1;
                cur = &args[1];
            }
            assert_eq!(seen, 2);
            assert!(matches!(cur, Var { name, .. } if name == "T"));
        } else {
            panic!("not a compound head");
        }
        let t = head_term("q([]).\n");
        if let Compound { args, .. } = &t {
            assert_eq!(args[0].as_atom(), Some("[]"));
        }
    }

    #[test]
    fn curly_sugar() {
        let t = head_term("p({a, b}).\n");
        if let Compound { args, .. } = &t {
            assert!(matches!(&args[0], Compound { functor, .. } if functor == "{}"));
        }
    }

    #[test]
    fn op_directive_changes_table() {
        let pf = parse_file(":- op(700, xfx, ===).\na === b.\n", FileId(0));
        assert!(pf.errors.is_empty(), "{:?}", pf.errors);
        assert_eq!(pf.items.len(), 2);
        match &pf.items[1] {
            Item::Clause(c) => assert_eq!(c.indicator(), ("===".to_string(), 2)),
            other => panic!("expected clause, got {other:?}"),
        }
    }

    #[test]
    fn mode_directive_operator_atoms() {
        let pf = parse_file(":- mode(reader_code(+, +, -)).\n", FileId(0));
        assert!(pf.errors.is_empty(), "{:?}", pf.errors);
        match &pf.items[0] {
            Item::Directive(d) => match &d.kind {
                DirectiveKind::Mode { term } => {
                    if let Compound { functor, args, .. } = term {
                        assert_eq!(functor, "reader_code");
                        let modes: Vec<_> = args.iter().filter_map(|a| a.as_atom()).collect();
                        assert_eq!(modes, vec!["+", "+", "-"]);
                    } else {
                        panic!("mode term not compound");
                    }
                }
                other => panic!("expected mode, got {other:?}"),
            },
            other => panic!("expected directive, got {other:?}"),
        }
    }

    #[test]
    fn negative_literals_vs_infix_minus() {
        let c = one_clause("p :- X is 3 - 1.\n");
        if let Goal::Call { term, .. } = &c.body {
            if let Compound { args, .. } = term {
                if let Compound { functor, args, .. } = &args[1] {
                    assert_eq!(functor, "-");
                    assert!(matches!(args[0], Int { value: 3, .. }));
                    assert!(matches!(args[1], Int { value: 1, .. }));
                } else {
                    panic!("expected infix minus");
                }
            }
        }
        let t = head_term("q(-1, -2.5).\n");
        if let Compound { args, .. } = &t {
            assert!(matches!(args[0], Int { value: -1, .. }));
            assert!(matches!(args[1], Float { value, .. } if value == -2.5));
        }
    }

    #[test]
    fn module_qualified_goal() {
        let c = one_clause("p(X) :- lists:append(X, [], X).\n");
        match &c.body {
            Goal::Call { qualifier, term, .. } => {
                assert_eq!(qualifier.as_deref(), Some("lists"));
                assert_eq!(term.indicator(), Some(("append", 3)));
            }
            other => panic!("expected qualified call, got {other:?}"),
        }
    }

    #[test]
    fn module_and_use_module_directives() {
        let src = ":- module(m, [p/1, q/0]).\n:- use_module(library(lists)).\n:- use_module(other, [r/2]).\n";
        let pf = parse_file(src, FileId(0));
        assert!(pf.errors.is_empty(), "{:?}", pf.errors);
        match &pf.items[0] {
            Item::Directive(d) => match &d.kind {
                DirectiveKind::Module { name, exports } => {
                    assert_eq!(name, "m");
                    assert_eq!(exports, &vec![("p".to_string(), 1), ("q".to_string(), 0)]);
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
        match &pf.items[1] {
            Item::Directive(d) => match &d.kind {
                DirectiveKind::UseModule { module, imports } => {
                    assert_eq!(module, "lists");
                    assert!(imports.is_none());
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
        match &pf.items[2] {
            Item::Directive(d) => match &d.kind {
                DirectiveKind::UseModule { module, imports } => {
                    assert_eq!(module, "other");
                    assert_eq!(imports, &Some(vec![("r".to_string(), 2)]));
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_recovery_skips_to_next_clause() {
        let pf = parse_file("a :- b :- c.\nd.\n", FileId(0));
        assert_eq!(pf.errors.len(), 1);
        assert_eq!(pf.items.len(), 1);
        match &pf.items[0] {
            Item::Clause(c) => assert_eq!(c.indicator(), ("d".to_string(), 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn variable_scoping_per_clause() {
        let c = one_clause("p(X, Y, X) :- q(X, _, _).\n");
        let mut occ = c.head.var_occurrences();
        occ.extend(c.body.var_occurrences());
        let x_ids: Vec<_> = occ.iter().filter(|(n, _)| *n == "X").map(|(_, i)| *i).collect();
        assert_eq!(x_ids.len(), 3);
        assert!(x_ids.iter().all(|i| *i == x_ids[0]));
        let us: Vec<_> = occ.iter().filter(|(n, _)| *n == "_").map(|(_, i)| *i).collect();
        assert_eq!(us.len(), 2);
        assert_ne!(us[0], us[1]);
    }

    #[test]
    fn dcg_clause_flagged() {
        let c = one_clause("greeting --> [hello], name.\n");
        assert!(c.is_dcg);
        assert_eq!(c.indicator(), ("greeting".to_string(), 0));
    }

    #[test]
    fn clause_raw_matches_source() {
        let src = "p(X) :-\n        q(X),\n        r(X).\n";
        let c = one_clause(src);
        assert_eq!(c.raw, src.trim_end());
        assert_eq!(&src[c.span.start..c.span.end], c.raw);
    }

    #[test]
    fn cut_and_builtin_atoms() {
        let c = one_clause("p :- !, q.\n");
        assert!(matches!(c.body.conjuncts()[0], Goal::Cut { .. }));
        let c = one_clause("p :- true.\n");
        assert!(matches!(c.body, Goal::True { .. }));
        let c = one_clause("p :- fail.\n");
        assert!(matches!(c.body, Goal::Fail { .. }));
    }

    #[test]
    fn bare_if_then_gets_failing_else() {
        let c = one_clause("p(X) :- ( X > 0 -> q(X) ).\n");
        match &c.body {
            Goal::IfThenElse { els, .. } => assert!(matches!(**els, Goal::Fail { .. })),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn meta_call_variable_goal() {
        let c = one_clause("apply(G) :- G.\n");
        match &c.body {
            Goal::Call { term, .. } => assert!(matches!(term, Var { .. })),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_callable_head_rejected() {
        let pf = parse_file("1.\n", FileId(0));
        assert_eq!(pf.errors.len(), 1);
        assert!(pf.items.is_empty());
    }
}
