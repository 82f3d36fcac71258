//! Tokenizer producing logical-line tokens with INDENT/DEDENT, plus the
//! comment list used for suppressions and fixture annotations.

use std::collections::HashSet;

use super::ast::TextRange;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Name,
    Int(Option<i128>),
    Float(f64),
    Complex,
    Str { value: String, bytes: bool, fstring: bool },
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    EndMarker,
    Magic,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub range: TextRange,
}

/// A `#` comment: range covers the `#` through end of line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub range: TextRange,
    pub text: String,
    /// True when nothing but whitespace precedes the comment on its line.
    pub standalone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LexError {
    pub message: String,
    pub offset: usize,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|", "^", "~", "<", ">", "(", ")", "[", "]",
    "{", "}", ",", ":", ".", ";", "=",
];

pub(crate) struct LexOutput {
    pub tokens: Vec<Token>,
    pub comments: Vec<Comment>,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
    indents: Vec<usize>,
    tokens: Vec<Token>,
    comments: Vec<Comment>,
    /// Accept IPython `%magic` / `!shell` lines as opaque statements.
    magics: bool,
    /// 0-based lines that belong to `%%` cell-magic cells.
    opaque_lines: &'a HashSet<usize>,
    line_no: usize,
}

pub(crate) fn tokenize(src: &str, magics: bool, opaque_lines: &HashSet<usize>) -> Result<LexOutput, LexError> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        depth: 0,
        indents: vec![0],
        tokens: Vec::new(),
        comments: Vec::new(),
        magics,
        opaque_lines,
        line_no: 0,
    };
    lx.run()?;
    Ok(LexOutput {
        tokens: lx.tokens,
        comments: lx.comments,
    })
}

fn is_id_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_id_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

impl<'a> Lexer<'a> {
    fn err<T>(&self, message: impl Into<String>, offset: usize) -> Result<T, LexError> {
        Err(LexError {
            message: message.into(),
            offset,
        })
    }

    fn push(&mut self, tok: Tok, start: usize, end: usize) {
        self.tokens.push(Token {
            tok,
            range: TextRange::new(start, end),
        });
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn run(&mut self) -> Result<(), LexError> {
        let mut at_line_start = true;
        while self.pos < self.bytes.len() {
            if at_line_start && self.depth == 0 {
                if !self.line_start()? {
                    continue;
                }
                at_line_start = false;
                continue;
            }
            let c = self.peek_char().unwrap();
            let start = self.pos;
            match c {
                ' ' | '\t' | '\x0c' | '\r' => self.pos += 1,
                '\n' => {
                    self.pos += 1;
                    self.line_no += 1;
                    if self.depth == 0 {
                        self.push(Tok::Newline, start, start + 1);
                        at_line_start = true;
                    }
                }
                '#' => self.comment(),
                '\\' => {
                    let rest = &self.src[self.pos + 1..];
                    if rest.starts_with('\n') {
                        self.pos += 2;
                        self.line_no += 1;
                    } else if rest.starts_with("\r\n") {
                        self.pos += 3;
                        self.line_no += 1;
                    } else {
                        return self.err("unexpected character after line continuation", start);
                    }
                }
                '\'' | '"' => self.string(start, "")?,
                c if c.is_ascii_digit() => self.number()?,
                '.' if self.bytes.get(self.pos + 1).is_some_and(|b| b.is_ascii_digit()) => self.number()?,
                c if is_id_start(c) => {
                    let mut end = self.pos;
                    for ch in self.src[self.pos..].chars() {
                        if is_id_continue(ch) {
                            end += ch.len_utf8();
                        } else {
                            break;
                        }
                    }
                    let word = &self.src[start..end];
                    let next = self.src[end..].chars().next();
                    if matches!(next, Some('\'' | '"')) && is_string_prefix(word) {
                        self.pos = end;
                        self.string(start, word)?;
                    } else {
                        self.pos = end;
                        self.push(Tok::Name, start, end);
                    }
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) else {
                        return self.err(format!("invalid character {c:?}"), start);
                    };
                    match *op {
                        "(" | "[" | "{" => self.depth += 1,
                        ")" | "]" | "}" => {
                            if self.depth == 0 {
                                return self.err(format!("unmatched {op:?}"), start);
                            }
                            self.depth -= 1;
                        }
                        _ => {}
                    }
                    self.pos += op.len();
                    self.push(Tok::Op(op), start, self.pos);
                }
            }
        }
        if self.depth > 0 {
            return self.err("unexpected end of file inside brackets", self.pos);
        }
        let end = self.bytes.len();
        if !matches!(
            self.tokens.last().map(|t| &t.tok),
            None | Some(Tok::Newline | Tok::Dedent)
        ) {
            self.push(Tok::Newline, end, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, end, end);
        }
        self.push(Tok::EndMarker, end, end);
        Ok(())
    }

    fn comment(&mut self) {
        let start = self.pos;
        let end = self.src[start..].find('\n').map_or(self.src.len(), |i| start + i);
        let text = self.src[start..end].trim_end_matches('\r');
        let line_start = self.src[..start].rfind('\n').map_or(0, |i| i + 1);
        self.comments.push(Comment {
            range: TextRange::new(start, start + text.len()),
            text: text.to_string(),
            standalone: self.src[line_start..start].trim().is_empty(),
        });
        self.pos = end;
    }

    /// Handles indentation at the start of a physical line. Returns false when
    /// the line was blank/comment-only and fully consumed.
    fn line_start(&mut self) -> Result<bool, LexError> {
        let line_begin = self.pos;
        let mut width = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            match b {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\x0c' => width = 0,
                _ => break,
            }
            self.pos += 1;
        }
        let first = self.bytes.get(self.pos).copied();
        let opaque = self.opaque_lines.contains(&self.line_no);
        match first {
            None => return Ok(false),
            Some(b'\n') if !opaque => {
                self.pos += 1;
                self.line_no += 1;
                return Ok(false);
            }
            Some(b'\r') if self.bytes.get(self.pos + 1) == Some(&b'\n') && !opaque => {
                self.pos += 2;
                self.line_no += 1;
                return Ok(false);
            }
            Some(b'#') if !opaque => {
                self.comment();
                return Ok(false);
            }
            _ => {}
        }
        let is_magic = opaque || (self.magics && matches!(first, Some(b'%' | b'!')));
        if is_magic {
            // Magic lines do not take part in block structure.
            let start = if opaque { line_begin } else { self.pos };
            let end = self.src[self.pos..].find('\n').map_or(self.src.len(), |i| self.pos + i);
            if end > start || !opaque {
                self.push(Tok::Magic, start, end);
                self.push(Tok::Newline, end, end);
            }
            self.pos = end;
            if self.pos < self.bytes.len() {
                self.pos += 1;
                self.line_no += 1;
            }
            return Ok(false);
        }
        let top = *self.indents.last().unwrap();
        if width > top {
            self.indents.push(width);
            self.push(Tok::Indent, line_begin, self.pos);
        } else if width < top {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push(Tok::Dedent, self.pos, self.pos);
            }
            if width != *self.indents.last().unwrap() {
                return self.err("unindent does not match any outer indentation level", self.pos);
            }
        }
        Ok(true)
    }

    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        let digits = |i: &mut usize, ok: &dyn Fn(u8) -> bool| {
            while *i < b.len() && (ok(b[*i]) || b[*i] == b'_') {
                *i += 1;
            }
        };
        if b[i] == b'0' && i + 1 < b.len() && matches!(b[i + 1], b'x' | b'X' | b'o' | b'O' | b'b' | b'B') {
            let radix = match b[i + 1] {
                b'x' | b'X' => 16,
                b'o' | b'O' => 8,
                _ => 2,
            };
            i += 2;
            let body_start = i;
            digits(&mut i, &|c: u8| (c as char).is_digit(radix));
            let body: String = self.src[body_start..i].chars().filter(|&c| c != '_').collect();
            if body.is_empty() {
                return self.err("invalid number literal", start);
            }
            self.pos = i;
            self.check_number_end(start)?;
            self.push(Tok::Int(i128::from_str_radix(&body, radix).ok()), start, self.pos);
            return Ok(());
        }
        let mut is_float = false;
        digits(&mut i, &|c: u8| c.is_ascii_digit());
        if i < b.len() && b[i] == b'.' {
            is_float = true;
            i += 1;
            digits(&mut i, &|c: u8| c.is_ascii_digit());
        }
        if i < b.len() && matches!(b[i], b'e' | b'E') {
            let mut j = i + 1;
            if j < b.len() && matches!(b[j], b'+' | b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                is_float = true;
                i = j;
                digits(&mut i, &|c: u8| c.is_ascii_digit());
            }
        }
        let text: String = self.src[start..i].chars().filter(|&c| c != '_').collect();
        if i < b.len() && matches!(b[i], b'j' | b'J') {
            self.pos = i + 1;
            self.check_number_end(start)?;
            self.push(Tok::Complex, start, self.pos);
            return Ok(());
        }
        self.pos = i;
        self.check_number_end(start)?;
        if is_float {
            self.push(Tok::Float(text.parse().unwrap_or(f64::NAN)), start, self.pos);
        } else {
            if text.len() > 1 && text.starts_with('0') && text.bytes().any(|c| c != b'0') {
                return self.err("leading zeros in decimal integer literals are not permitted", start);
            }
            self.push(Tok::Int(text.parse().ok()), start, self.pos);
        }
        Ok(())
    }

    fn check_number_end(&self, start: usize) -> Result<(), LexError> {
        match self.peek_char() {
            Some(c) if is_id_continue(c) => self.err("invalid number literal", start),
            _ => Ok(()),
        }
    }

    fn string(&mut self, start: usize, prefix: &str) -> Result<(), LexError> {
        let lower = prefix.to_ascii_lowercase();
        let quote = self.bytes[self.pos];
        let triple = self.bytes.get(self.pos + 1) == Some(&quote) && self.bytes.get(self.pos + 2) == Some(&quote);
        let qlen = if triple { 3 } else { 1 };
        let body_start = self.pos + qlen;
        let mut i = body_start;
        loop {
            let Some(&c) = self.bytes.get(i) else {
                return self.err("unterminated string literal", start);
            };
            if c == b'\\' {
                if self.bytes.get(i + 1) == Some(&b'\n') {
                    self.line_no += 1;
                }
                i += 2;
                continue;
            }
            if c == b'\n' {
                if !triple {
                    return self.err("unterminated string literal", start);
                }
                self.line_no += 1;
            }
            if c == quote
                && (!triple || (self.bytes.get(i + 1) == Some(&quote) && self.bytes.get(i + 2) == Some(&quote)))
            {
                break;
            }
            i += 1;
        }
        let value = self.src[body_start..i].to_string();
        self.pos = i + qlen;
        self.push(
            Tok::Str {
                value,
                bytes: lower.contains('b'),
                fstring: lower.contains('f'),
            },
            start,
            self.pos,
        );
        Ok(())
    }
}

fn is_string_prefix(word: &str) -> bool {
    matches!(
        word.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}
