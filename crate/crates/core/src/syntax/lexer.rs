//! Lossless Prolog tokenizer.
//!
//! Every byte of the input, including layout and comments, ends up in
//! exactly one token, so concatenating `text` over the token stream
//! reproduces the file byte-exactly. Graphic-character runs such as `:-`
//! and `==` are classified as `Punct`; the solo characters `!` and `;`
//! are atoms in their own right.

use crate::span::{FileId, SourceSpan};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Atom,
    Variable,
    Integer,
    Float,
    Str,
    Punct,
    /// Clause terminator: `.` followed by layout, a comment, or end of input.
    End,
    Comment,
    Layout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source slice.
    pub text: String,
    pub span: SourceSpan,
}

impl Token {
    pub fn is_trivia(&self) -> bool {
        matches!(self.kind, TokenKind::Layout | TokenKind::Comment)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LexError {
    #[error("unterminated quoted atom")]
    UnterminatedQuotedAtom { span: SourceSpan },
    #[error("unterminated string")]
    UnterminatedString { span: SourceSpan },
    #[error("unterminated block comment")]
    UnterminatedBlockComment { span: SourceSpan },
    #[error("malformed character escape")]
    BadEscape { span: SourceSpan },
    #[error("malformed character code literal")]
    BadCharCode { span: SourceSpan },
}

impl LexError {
    pub fn span(&self) -> SourceSpan {
        match self {
            LexError::UnterminatedQuotedAtom { span }
            | LexError::UnterminatedString { span }
            | LexError::UnterminatedBlockComment { span }
            | LexError::BadEscape { span }
            | LexError::BadCharCode { span } => *span,
        }
    }
}

/// Characters that may form graphic (symbolic) token runs.
pub fn is_graphic_char(c: char) -> bool {
    matches!(
        c,
        '#' | '$' | '&' | '*' | '+' | '-' | '.' | '/' | ':' | '<' | '=' | '>' | '?' | '@' | '^'
            | '~' | '\\'
    )
}

fn is_solo_punct(c: char) -> bool {
    matches!(c, '(' | ')' | '[' | ']' | '{' | '}' | ',' | '|')
}

fn is_alnum(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer<'t> {
    text: &'t str,
    file: FileId,
    pos: usize,
    tokens: Vec<Token>,
}

impl<'t> Lexer<'t> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.text[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let span = SourceSpan::new(self.file, start, self.pos);
        self.tokens.push(Token {
            kind,
            text: self.text[start..self.pos].to_string(),
            span,
        });
    }

    fn span_from(&self, start: usize) -> SourceSpan {
        SourceSpan::new(self.file, start, self.pos)
    }

    fn layout(&mut self, start: usize) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
        self.push(TokenKind::Layout, start);
    }

    fn line_comment(&mut self, start: usize) {
        while matches!(self.peek(), Some(c) if c != '\n') {
            self.bump();
        }
        self.push(TokenKind::Comment, start);
    }

    fn block_comment(&mut self, start: usize) -> Result<(), LexError> {
        self.bump(); // '/'
        self.bump(); // '*'
        loop {
            match self.peek() {
                None => {
                    return Err(LexError::UnterminatedBlockComment {
                        span: self.span_from(start),
                    })
                }
                Some('*') if self.peek2() == Some('/') => {
                    self.bump();
                    self.bump();
                    self.push(TokenKind::Comment, start);
                    return Ok(());
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Consumes the body of a quoted token up to the closing `quote`.
    /// Doubled quotes and backslash escapes stay inside the token.
    fn quoted(&mut self, start: usize, quote: char, kind: TokenKind) -> Result<(), LexError> {
        self.bump(); // opening quote
        loop {
            match self.peek() {
                None => {
                    let span = self.span_from(start);
                    return Err(match kind {
                        TokenKind::Str => LexError::UnterminatedString { span },
                        _ => LexError::UnterminatedQuotedAtom { span },
                    });
                }
                Some(c) if c == quote => {
                    self.bump();
                    if self.peek() == Some(quote) {
                        self.bump(); // doubled quote, stay inside
                    } else {
                        self.push(kind, start);
                        return Ok(());
                    }
                }
                Some('\\') => {
                    self.bump();
                    if self.bump().is_none() {
                        return Err(LexError::BadEscape {
                            span: self.span_from(start),
                        });
                    }
                }
                Some('\n') => {
                    // Raw newline inside quotes: treat as unterminated.
                    let span = self.span_from(start);
                    return Err(match kind {
                        TokenKind::Str => LexError::UnterminatedString { span },
                        _ => LexError::UnterminatedQuotedAtom { span },
                    });
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn number(&mut self, start: usize) -> Result<(), LexError> {
        // Radix and character-code forms all begin with 0.
        if self.peek() == Some('0') {
            match self.peek2() {
                Some('\'') => {
                    self.bump(); // 0
                    self.bump(); // '
                    match self.peek() {
                        Some('\\') => {
                            self.bump();
                            if self.bump().is_none() {
                                return Err(LexError::BadCharCode {
                                    span: self.span_from(start),
                                });
                            }
                            // Multi-char escapes (\x41\, \101\) run to a
                            // closing backslash.
                            if matches!(
                                self.text[start + 2..].chars().nth(1),
                                Some('x') | Some('0'..='7')
                            ) {
                                while matches!(self.peek(), Some(c) if c != '\\') {
                                    self.bump();
                                }
                                if self.peek() == Some('\\') {
                                    self.bump();
                                }
                            }
                            self.push(TokenKind::Integer, start);
                            return Ok(());
                        }
                        Some('\'') => {
                            // 0''' is the quote character itself.
                            self.bump();
                            if self.peek() == Some('\'') {
                                self.bump();
                            }
                            self.push(TokenKind::Integer, start);
                            return Ok(());
                        }
                        Some(_) => {
                            self.bump();
                            self.push(TokenKind::Integer, start);
                            return Ok(());
                        }
                        None => {
                            return Err(LexError::BadCharCode {
                                span: self.span_from(start),
                            })
                        }
                    }
                }
                Some('x') | Some('o') | Some('b') => {
                    let radix_char = self.peek2().unwrap();
                    let digits_ok = |c: char| match radix_char {
                        'x' => c.is_ascii_hexdigit(),
                        'o' => ('0'..='7').contains(&c),
                        _ => c == '0' || c == '1',
                    };
                    // Only take the radix form if at least one digit follows.
                    let mut probe = self.text[self.pos..].chars();
                    probe.next();
                    probe.next();
                    if probe.next().map(digits_ok).unwrap_or(false) {
                        self.bump();
                        self.bump();
                        while matches!(self.peek(), Some(c) if digits_ok(c)) {
                            self.bump();
                        }
                        self.push(TokenKind::Integer, start);
                        return Ok(());
                    }
                }
                _ => {}
            }
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        // A fraction part needs a digit straight after the dot; otherwise
        // the dot belongs to the next token (often `end`).
        let mut is_float = false;
        if self.peek() == Some('.') && matches!(self.peek2(), Some(c) if c.is_ascii_digit()) {
            is_float = true;
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if is_float && matches!(self.peek(), Some('e') | Some('E')) {
            let save = self.pos;
            self.bump();
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.bump();
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                self.pos = save;
            }
        }
        self.push(
            if is_float {
                TokenKind::Float
            } else {
                TokenKind::Integer
            },
            start,
        );
        Ok(())
    }

    fn graphic_run(&mut self, start: usize) {
        while matches!(self.peek(), Some(c) if is_graphic_char(c)) {
            self.bump();
        }
        self.push(TokenKind::Punct, start);
    }

    fn run(&mut self) -> Result<(), LexError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                _ if c.is_whitespace() => self.layout(start),
                '%' => self.line_comment(start),
                '/' if self.peek2() == Some('*') => self.block_comment(start)?,
                '\'' => self.quoted(start, '\'', TokenKind::Atom)?,
                '"' => self.quoted(start, '"', TokenKind::Str)?,
                '!' | ';' => {
                    self.bump();
                    self.push(TokenKind::Atom, start);
                }
                _ if is_solo_punct(c) => {
                    self.bump();
                    self.push(TokenKind::Punct, start);
                }
                _ if c.is_ascii_digit() => self.number(start)?,
                '_' => {
                    self.bump();
                    while matches!(self.peek(), Some(c) if is_alnum(c)) {
                        self.bump();
                    }
                    self.push(TokenKind::Variable, start);
                }
                _ if c.is_uppercase() => {
                    self.bump();
                    while matches!(self.peek(), Some(c) if is_alnum(c)) {
                        self.bump();
                    }
                    self.push(TokenKind::Variable, start);
                }
                _ if c.is_alphabetic() => {
                    self.bump();
                    while matches!(self.peek(), Some(c) if is_alnum(c)) {
                        self.bump();
                    }
                    self.push(TokenKind::Atom, start);
                }
                '.' => {
                    // `.` ends a clause when followed by layout, a comment,
                    // or end of input; otherwise it joins a graphic run.
                    match self.peek2() {
                        None => {
                            self.bump();
                            self.push(TokenKind::End, start);
                        }
                        Some(n) if n.is_whitespace() || n == '%' => {
                            self.bump();
                            self.push(TokenKind::End, start);
                        }
                        _ => self.graphic_run(start),
                    }
                }
                _ if is_graphic_char(c) => self.graphic_run(start),
                _ => {
                    // Unknown character: keep losslessness by emitting it as
                    // a one-char punct token; the parser will reject it.
                    self.bump();
                    self.push(TokenKind::Punct, start);
                }
            }
        }
        Ok(())
    }
}

/// Tokenizes `text`. On success the concatenation of all token texts equals
/// the input.
pub fn tokenize(text: &str, file: FileId) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        text,
        file,
        pos: 0,
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

/// Decodes the textual content of a quoted atom or string token (without
/// the surrounding quotes) into its character value.
pub fn unescape_quoted(raw: &str, quote: char) -> Result<String, String> {
    let inner = &raw[quote.len_utf8()..raw.len() - quote.len_utf8()];
    let mut out = String::new();
    let mut it = inner.chars().peekable();
    while let Some(c) = it.next() {
        if c == quote {
            // Doubled quote.
            it.next();
            out.push(quote);
        } else if c == '\\' {
            match it.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('r') => out.push('\r'),
                Some('a') => out.push('\x07'),
                Some('b') => out.push('\x08'),
                Some('f') => out.push('\x0c'),
                Some('v') => out.push('\x0b'),
                Some('0') if it.peek().is_none() => out.push('\0'),
                Some('\\') => out.push('\\'),
                Some('\'') => out.push('\''),
                Some('"') => out.push('"'),
                Some('`') => out.push('`'),
                Some('\n') => {} // line continuation
                Some('x') => {
                    let mut hex = String::new();
                    while let Some(&h) = it.peek() {
                        if h.is_ascii_hexdigit() {
                            hex.push(h);
                            it.next();
                        } else {
                            break;
                        }
                    }
                    if it.peek() == Some(&'\\') {
                        it.next();
                    }
                    let code = u32::from_str_radix(&hex, 16).map_err(|_| "bad \\x escape")?;
                    out.push(char::from_u32(code).ok_or("bad \\x code point")?);
                }
                Some(d @ '0'..='7') => {
                    let mut oct = String::from(d);
                    while let Some(&h) = it.peek() {
                        if ('0'..='7').contains(&h) {
                            oct.push(h);
                            it.next();
                        } else {
                            break;
                        }
                    }
                    if it.peek() == Some(&'\\') {
                        it.next();
                    }
                    let code = u32::from_str_radix(&oct, 8).map_err(|_| "bad octal escape")?;
                    out.push(char::from_u32(code).ok_or("bad octal code point")?);
                }
                Some(other) => return Err(format!("unknown escape \\{other}")),
                None => return Err("dangling backslash".into()),
            }
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

/// Value of an integer token, handling radix and character-code forms.
pub fn integer_value(text: &str) -> Result<i64, String> {
    if let Some(rest) = text.strip_prefix("0'") {
        let mut it = rest.chars();
        match it.next() {
            Some('\\') => {
                let quoted = format!("'\\{}'", it.as_str());
                let s = unescape_quoted(&quoted, '\'')?;
                s.chars()
                    .next()
                    .map(|c| c as i64)
                    .ok_or_else(|| "empty escape".into())
            }
            Some('\'') => Ok('\'' as i64),
            Some(c) => Ok(c as i64),
            None => Err("empty character code".into()),
        }
    } else if let Some(rest) = text.strip_prefix("0x") {
        i64::from_str_radix(rest, 16).map_err(|e| e.to_string())
    } else if let Some(rest) = text.strip_prefix("0o") {
        i64::from_str_radix(rest, 8).map_err(|e| e.to_string())
    } else if let Some(rest) = text.strip_prefix("0b") {
        i64::from_str_radix(rest, 2).map_err(|e| e.to_string())
    } else {
        text.parse::<i64>().map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<(TokenKind, String)> {
        tokenize(text, FileId(0))
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("", FileId(0)).unwrap().is_empty());
    }

    #[test]
    fn fact_with_comment() {
        let ts = kinds("p(X). % c\n");
        let expect = vec![
            (TokenKind::Atom, "p".to_string()),
            (TokenKind::Punct, "(".to_string()),
            (TokenKind::Variable, "X".to_string()),
            (TokenKind::Punct, ")".to_string()),
            (TokenKind::End, ".".to_string()),
            (TokenKind::Layout, " ".to_string()),
            (TokenKind::Comment, "% c".to_string()),
            (TokenKind::Layout, "\n".to_string()),
        ];
        assert_eq!(ts, expect);
    }

    #[test]
    fn reader_clause_tokens() {
        let ts = kinds("reader_code(end_of_file,_,end_of_file) :- ! .");
        assert!(ts.contains(&(TokenKind::Atom, "reader_code".to_string())));
        assert!(ts.contains(&(TokenKind::Variable, "_".to_string())));
        assert!(ts.contains(&(TokenKind::Punct, ":-".to_string())));
        assert!(ts.contains(&(TokenKind::Atom, "!".to_string())));
        assert_eq!(ts.last().unwrap(), &(TokenKind::End, ".".to_string()));
    }

    #[test]
    fn lossless_concat() {
        let samples = [
            "p(X). % c\n",
            "a :- b, c.\n/* block\ncomment */\nq(1,2.5,\"str\",'quoted atom').\n",
            ":- op(700, xfx, ===).  a === b.",
            "x(0'a, 0x1F, 0o17, 0b101, 1.5e-3).",
            "w :- \\+ y(_A), ! .",
        ];
        for s in samples {
            let toks = tokenize(s, FileId(0)).unwrap();
            let joined: String = toks.iter().map(|t| t.text.as_str()).collect();
            assert_eq!(joined, s, "lossless lexing failed for {s:?}");
        }
    }

    #[test]
    fn unterminated_forms_error() {
        assert!(matches!(
            tokenize("p('abc", FileId(0)),
            Err(LexError::UnterminatedQuotedAtom { .. })
        ));
        assert!(matches!(
            tokenize("p(\"abc", FileId(0)),
            Err(LexError::UnterminatedString { .. })
        ));
        assert!(matches!(
            tokenize("/* abc", FileId(0)),
            Err(LexError::UnterminatedBlockComment { .. })
        ));
    }

    #[test]
    fn end_vs_graphic_dot() {
        let ts = kinds("X =.. L.");
        assert!(ts.contains(&(TokenKind::Punct, "=..".to_string())));
        assert_eq!(ts.last().unwrap(), &(TokenKind::End, ".".to_string()));
    }

    #[test]
    fn escapes_decode() {
        assert_eq!(unescape_quoted("'a\\nb'", '\'').unwrap(), "a\nb");
        assert_eq!(unescape_quoted("'it''s'", '\'').unwrap(), "it's");
        assert_eq!(unescape_quoted("'\\x41\\'", '\'').unwrap(), "A");
        assert_eq!(integer_value("0'a").unwrap(), 97);
        assert_eq!(integer_value("0'\\n").unwrap(), 10);
        assert_eq!(integer_value("0x1F").unwrap(), 31);
        assert_eq!(integer_value("42").unwrap(), 42);
    }
}
