//! Recursive-descent parser for Python 3.8–3.11 source.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Comment, Tok, Token};
use super::{GrammarVersion, LineIndex, ParseError, SourceKind, SourceUnit, Span};

/// Parsed unit: module tree, comments and the line index used for spans.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    pub module: Module,
    pub comments: Vec<Comment>,
    pub line_index: LineIndex,
    pub source: String,
}

impl SyntaxTree {
    pub fn span(&self, range: TextRange) -> Span {
        self.line_index.span(&self.source, range)
    }

    pub fn text(&self, range: TextRange) -> &str {
        range.slice(&self.source)
    }
}

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parses a unit into a syntax tree. Notebook units accept IPython magics.
pub fn parse_source(unit: &SourceUnit, version: GrammarVersion) -> Result<SyntaxTree, ParseError> {
    let notebook = unit.kind == SourceKind::Notebook;
    let line_index = LineIndex::new(&unit.text);
    let mut opaque = HashSet::new();
    if notebook {
        for cell in &unit.cell_spans {
            let first = line_index
                .line_start(cell.start_line)
                .map(|s| &unit.text[s..])
                .unwrap_or("");
            if first.trim_start().starts_with("%%") {
                opaque.extend(cell.start_line - 1..cell.end_line);
            }
        }
    }
    let lexed = tokenize(&unit.text, notebook, &opaque).map_err(|e| ParseError {
        message: e.message,
        span: line_index.span(&unit.text, TextRange::new(e.offset, e.offset)),
    })?;
    let mut p = Parser {
        src: &unit.text,
        toks: lexed.tokens,
        pos: 0,
        version,
        last_end: 0,
    };
    let module = p.file().map_err(|e| ParseError {
        message: e.message,
        span: line_index.span(&unit.text, e.range),
    })?;
    Ok(SyntaxTree {
        module,
        comments: lexed.comments,
        line_index,
        source: unit.text.clone(),
    })
}

struct PErr {
    message: String,
    range: TextRange,
}

type PResult<T> = Result<T, PErr>;

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    version: GrammarVersion,
    last_end: usize,
}

fn boxed(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl<'a> Parser<'a> {
    // ---------------------------------------------------------------- tokens

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn text_of(&self, t: &Token) -> &'a str {
        t.range.slice(self.src)
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek().tok, Tok::Op(o) if o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().tok == Tok::Name && self.text_of(self.peek()) == kw
    }

    fn kw_at(&self, n: usize, kw: &str) -> bool {
        let t = self.peek_at(n);
        t.tok == Tok::Name && self.text_of(t) == kw
    }

    fn start(&self) -> usize {
        self.peek().range.start as usize
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !matches!(t.tok, Tok::Newline | Tok::Indent | Tok::Dedent | Tok::EndMarker) {
            self.last_end = t.range.end as usize;
        }
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        let message = message.into();
        let message = match t.tok {
            Tok::EndMarker => format!("{message} (unexpected end of file)"),
            Tok::Newline => format!("{message} (unexpected end of line)"),
            Tok::Indent => format!("{message} (unexpected indent)"),
            Tok::Dedent => format!("{message} (unexpected dedent)"),
            _ => format!("{message} (found {:?})", self.text_of(t)),
        };
        Err(PErr {
            message,
            range: t.range,
        })
    }

    fn expect_op(&mut self, op: &str) -> PResult<Token> {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            self.error(format!("expected {op:?}"))
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Token> {
        if self.at_kw(kw) {
            Ok(self.bump())
        } else {
            self.error(format!("expected '{kw}'"))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        let t = self.peek().clone();
        let text = self.text_of(&t);
        if t.tok != Tok::Name || is_keyword(text) {
            return self.error("expected identifier");
        }
        self.bump();
        Ok(Ident {
            name: text.to_string(),
            range: t.range,
        })
    }

    fn range_from(&self, start: usize) -> TextRange {
        TextRange::new(start, self.last_end.max(start))
    }

    fn require(&self, v: GrammarVersion, what: &str, at: TextRange) -> PResult<()> {
        if self.version < v {
            Err(PErr {
                message: format!("{what} is not supported by the selected grammar version"),
                range: at,
            })
        } else {
            Ok(())
        }
    }

    // ------------------------------------------------------------ statements

    fn file(&mut self) -> PResult<Module> {
        let mut body = Vec::new();
        while self.peek().tok != Tok::EndMarker {
            if self.peek().tok == Tok::Newline {
                self.bump();
                continue;
            }
            body.extend(self.statement()?);
        }
        Ok(Module {
            body,
            range: TextRange::new(0, self.src.len()),
        })
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        if let Some(s) = self.compound()? {
            return Ok(vec![s]);
        }
        self.simple_statements()
    }

    fn simple_statements(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.simple_statement()?];
        while self.eat_op(";") {
            if self.peek().tok == Tok::Newline {
                break;
            }
            out.push(self.simple_statement()?);
        }
        if self.peek().tok == Tok::Newline {
            self.bump();
            Ok(out)
        } else {
            self.error("invalid syntax")
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if self.peek().tok == Tok::Newline {
            self.bump();
            if self.peek().tok != Tok::Indent {
                return self.error("expected an indented block");
            }
            self.bump();
            let mut body = Vec::new();
            while !matches!(self.peek().tok, Tok::Dedent | Tok::EndMarker) {
                if self.peek().tok == Tok::Newline {
                    self.bump();
                    continue;
                }
                body.extend(self.statement()?);
            }
            if self.peek().tok == Tok::Dedent {
                self.bump();
            }
            Ok(body)
        } else {
            self.simple_statements()
        }
    }

    fn compound(&mut self) -> PResult<Option<Stmt>> {
        let start = self.start();
        if self.peek().tok != Tok::Name && !self.at_op("@") {
            return Ok(None);
        }
        if self.at_op("@") {
            let mut decorators = Vec::new();
            while self.eat_op("@") {
                decorators.push(self.named_expression()?);
                if self.peek().tok != Tok::Newline {
                    return self.error("expected newline after decorator");
                }
                self.bump();
            }
            let is_async = self.eat_kw("async");
            let kind = if self.at_kw("def") {
                self.funcdef(is_async, decorators)?
            } else if self.at_kw("class") && !is_async {
                self.classdef(decorators)?
            } else {
                return self.error("expected function or class definition after decorator");
            };
            return Ok(Some(Stmt {
                kind,
                range: self.range_from(start),
            }));
        }
        let word = self.text_of(self.peek());
        let kind = match word {
            "if" => {
                self.bump();
                self.if_rest()?
            }
            "while" => {
                self.bump();
                let test = self.named_expression()?;
                let body = self.block()?;
                let orelse = self.else_block()?;
                StmtKind::While { test, body, orelse }
            }
            "for" => self.for_stmt(false)?,
            "try" => self.try_stmt()?,
            "with" => self.with_stmt(false)?,
            "def" => self.funcdef(false, Vec::new())?,
            "class" => self.classdef(Vec::new())?,
            "async" => {
                self.bump();
                if self.at_kw("def") {
                    self.funcdef(true, Vec::new())?
                } else if self.at_kw("for") {
                    self.for_stmt(true)?
                } else if self.at_kw("with") {
                    self.with_stmt(true)?
                } else {
                    return self.error("expected 'def', 'for' or 'with' after 'async'");
                }
            }
            "match" => match self.try_match()? {
                Some(k) => k,
                None => return Ok(None),
            },
            _ => return Ok(None),
        };
        Ok(Some(Stmt {
            kind,
            range: self.range_from(start),
        }))
    }

    fn else_block(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat_kw("else") {
            self.block()
        } else {
            Ok(Vec::new())
        }
    }

    fn if_rest(&mut self) -> PResult<StmtKind> {
        let test = self.named_expression()?;
        let body = self.block()?;
        let orelse = if self.at_kw("elif") {
            let start = self.start();
            self.bump();
            let kind = self.if_rest()?;
            vec![Stmt {
                kind,
                range: self.range_from(start),
            }]
        } else {
            self.else_block()?
        };
        Ok(StmtKind::If { test, body, orelse })
    }

    fn for_stmt(&mut self, is_async: bool) -> PResult<StmtKind> {
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        let body = self.block()?;
        let orelse = self.else_block()?;
        Ok(StmtKind::For {
            is_async,
            target,
            iter,
            body,
            orelse,
        })
    }

    fn try_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw("try")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        let mut is_star = None;
        while self.at_kw("except") {
            let start = self.start();
            let kw = self.bump();
            let star = self.eat_op("*");
            if star {
                self.require(GrammarVersion::Py311, "'except*'", kw.range)?;
            }
            if *is_star.get_or_insert(star) != star {
                return self.error("cannot mix 'except' and 'except*'");
            }
            let mut type_ = None;
            let mut name = None;
            if !self.at_op(":") {
                type_ = Some(self.expression()?);
                if self.at_op(",") {
                    return self.error("multiple exception types must be parenthesized");
                }
                if self.eat_kw("as") {
                    name = Some(self.ident()?);
                }
            } else if star {
                return self.error("expected exception type after 'except*'");
            }
            let hbody = self.block()?;
            handlers.push(ExceptHandler {
                type_,
                name,
                body: hbody,
                range: self.range_from(start),
            });
        }
        let orelse = if !handlers.is_empty() {
            self.else_block()?
        } else {
            Vec::new()
        };
        let finalbody = if self.eat_kw("finally") {
            self.block()?
        } else {
            Vec::new()
        };
        if handlers.is_empty() && finalbody.is_empty() {
            return self.error("expected 'except' or 'finally' block");
        }
        Ok(StmtKind::Try {
            body,
            handlers,
            orelse,
            finalbody,
            is_star: is_star.unwrap_or(false),
        })
    }

    fn with_item(&mut self) -> PResult<WithItem> {
        let context = self.expression()?;
        let vars = if self.eat_kw("as") {
            let t = self.star_target()?;
            Some(t)
        } else {
            None
        };
        Ok(WithItem { context, vars })
    }

    fn with_stmt(&mut self, is_async: bool) -> PResult<StmtKind> {
        self.expect_kw("with")?;
        let mut items = None;
        if self.at_op("(") {
            let save = (self.pos, self.last_end);
            let open = self.peek().range;
            self.bump();
            let attempt: PResult<Vec<WithItem>> = (|| {
                let mut v = vec![self.with_item()?];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    v.push(self.with_item()?);
                }
                self.expect_op(")")?;
                if !self.at_op(":") {
                    return self.error("expected ':'");
                }
                Ok(v)
            })();
            match attempt {
                Ok(v) => {
                    if v.len() > 1 || v.iter().any(|i| i.vars.is_some()) {
                        self.require(GrammarVersion::Py39, "parenthesized context managers", open)?;
                    }
                    items = Some(v);
                }
                Err(_) => {
                    self.pos = save.0;
                    self.last_end = save.1;
                }
            }
        }
        let items = match items {
            Some(v) => v,
            None => {
                let mut v = vec![self.with_item()?];
                while self.eat_op(",") {
                    v.push(self.with_item()?);
                }
                v
            }
        };
        let body = self.block()?;
        Ok(StmtKind::With { is_async, items, body })
    }

    fn funcdef(&mut self, is_async: bool, decorators: Vec<Expr>) -> PResult<StmtKind> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        if self.at_op("[") {
            return self.error("type parameter lists are not supported by the selected grammar version");
        }
        self.expect_op("(")?;
        let params = self.parameters(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.expression()?)
        } else {
            None
        };
        let body = self.block()?;
        Ok(StmtKind::FunctionDef(Box::new(FunctionDef {
            is_async,
            name,
            decorators,
            params,
            returns,
            body,
        })))
    }

    fn classdef(&mut self, decorators: Vec<Expr>) -> PResult<StmtKind> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        if self.at_op("[") {
            return self.error("type parameter lists are not supported by the selected grammar version");
        }
        let (bases, keywords) = if self.eat_op("(") {
            let (a, k) = self.call_args()?;
            self.expect_op(")")?;
            (a, k)
        } else {
            (Vec::new(), Vec::new())
        };
        let body = self.block()?;
        Ok(StmtKind::ClassDef(Box::new(ClassDef {
            name,
            decorators,
            bases,
            keywords,
            body,
        })))
    }

    /// Parameter list up to (not including) `close`.
    fn parameters(&mut self, close: &str, annotations: bool) -> PResult<Parameters> {
        let mut params = Parameters::default();
        let mut seen_star = false;
        let mut seen_default = false;
        let mut names = HashSet::new();
        let mut check_dup = |p: &Parser, id: &Ident| -> PResult<()> {
            if !names.insert(id.name.clone()) {
                return Err(PErr {
                    message: format!("duplicate argument {:?} in function definition", id.name),
                    range: id.range,
                });
            }
            let _ = p;
            Ok(())
        };
        while !self.at_op(close) {
            if self.eat_op("/") {
                if seen_star || !params.posonly.is_empty() || params.args.is_empty() {
                    return self.error("invalid '/' in parameter list");
                }
                params.posonly = std::mem::take(&mut params.args);
            } else if self.eat_op("**") {
                let p = self.param(annotations, false)?;
                check_dup(self, &p.name)?;
                params.kwarg = Some(p);
                self.eat_op(",");
                if !self.at_op(close) {
                    return self.error("parameter after '**' parameter");
                }
                break;
            } else if self.eat_op("*") {
                if seen_star {
                    return self.error("'*' argument may appear only once");
                }
                seen_star = true;
                if !self.at_op(",") && !self.at_op(close) {
                    let p = self.param(annotations, false)?;
                    check_dup(self, &p.name)?;
                    params.vararg = Some(p);
                } else if self.at_op(close) {
                    return self.error("named arguments must follow bare '*'");
                }
            } else {
                let p = self.param(annotations, true)?;
                check_dup(self, &p.name)?;
                if seen_star {
                    params.kwonly.push(p);
                } else {
                    if p.default.is_some() {
                        seen_default = true;
                    } else if seen_default {
                        return Err(PErr {
                            message: "non-default argument follows default argument".into(),
                            range: p.name.range,
                        });
                    }
                    params.args.push(p);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn param(&mut self, annotations: bool, defaults: bool) -> PResult<Param> {
        let name = self.ident()?;
        let annotation = if annotations && self.eat_op(":") {
            Some(self.expression()?)
        } else {
            None
        };
        let default = if defaults && self.eat_op("=") {
            Some(self.expression()?)
        } else {
            None
        };
        Ok(Param {
            name,
            annotation,
            default,
        })
    }

    fn try_match(&mut self) -> PResult<Option<StmtKind>> {
        let save = (self.pos, self.last_end);
        let kw = self.bump();
        let header: PResult<Expr> = (|| {
            let subject = self.star_named_expressions()?;
            self.expect_op(":")?;
            if self.peek().tok != Tok::Newline {
                return self.error("expected newline");
            }
            if self.peek_at(1).tok != Tok::Indent || !self.kw_at(2, "case") {
                return self.error("expected case block");
            }
            Ok(subject)
        })();
        let subject = match header {
            Ok(s) => s,
            Err(_) => {
                self.pos = save.0;
                self.last_end = save.1;
                return Ok(None);
            }
        };
        self.require(GrammarVersion::Py310, "'match' statement", kw.range)?;
        self.bump(); // newline
        self.bump(); // indent
        let mut cases = Vec::new();
        while self.at_kw("case") {
            self.bump();
            let pstart = self.start();
            self.patterns()?;
            let pattern = self.range_from(pstart);
            let guard = if self.eat_kw("if") {
                Some(self.named_expression()?)
            } else {
                None
            };
            let body = self.block()?;
            cases.push(MatchCase { pattern, guard, body });
            while self.peek().tok == Tok::Newline {
                self.bump();
            }
        }
        if self.peek().tok != Tok::Dedent {
            return self.error("expected 'case'");
        }
        self.bump();
        Ok(Some(StmtKind::Match { subject, cases }))
    }

    // --------------------------------------------------------------- patterns

    fn patterns(&mut self) -> PResult<()> {
        self.maybe_star_pattern()?;
        if self.at_op(",") {
            while self.eat_op(",") {
                if self.at_op(":") || self.at_kw("if") {
                    break;
                }
                self.maybe_star_pattern()?;
            }
        }
        Ok(())
    }

    fn maybe_star_pattern(&mut self) -> PResult<()> {
        if self.eat_op("*") {
            self.ident()?;
            Ok(())
        } else {
            self.as_pattern()
        }
    }

    fn as_pattern(&mut self) -> PResult<()> {
        self.closed_pattern()?;
        while self.eat_op("|") {
            self.closed_pattern()?;
        }
        if self.eat_kw("as") {
            self.ident()?;
        }
        Ok(())
    }

    fn closed_pattern(&mut self) -> PResult<()> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Op("-") | Tok::Int(_) | Tok::Float(_) | Tok::Complex => {
                self.eat_op("-");
                if !matches!(self.peek().tok, Tok::Int(_) | Tok::Float(_) | Tok::Complex) {
                    return self.error("expected number in pattern");
                }
                self.bump();
                if self.at_op("+") || self.at_op("-") {
                    self.bump();
                    if self.peek().tok != Tok::Complex {
                        return self.error("expected imaginary number in pattern");
                    }
                    self.bump();
                }
                Ok(())
            }
            Tok::Str { .. } => {
                while matches!(self.peek().tok, Tok::Str { .. }) {
                    self.bump();
                }
                Ok(())
            }
            Tok::Name => {
                let text = self.text_of(&t);
                if matches!(text, "None" | "True" | "False") {
                    self.bump();
                    return Ok(());
                }
                self.ident()?;
                while self.eat_op(".") {
                    self.ident()?;
                }
                if self.eat_op("(") {
                    while !self.at_op(")") {
                        if self.peek().tok == Tok::Name && matches!(self.peek_at(1).tok, Tok::Op("=")) {
                            self.ident()?;
                            self.bump();
                        }
                        self.as_pattern()?;
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    self.expect_op(")")?;
                }
                Ok(())
            }
            Tok::Op("(") | Tok::Op("[") => {
                let close = if t.tok == Tok::Op("(") { ")" } else { "]" };
                self.bump();
                while !self.at_op(close) {
                    self.maybe_star_pattern()?;
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op(close)?;
                Ok(())
            }
            Tok::Op("{") => {
                self.bump();
                while !self.at_op("}") {
                    if self.eat_op("**") {
                        self.ident()?;
                    } else {
                        self.closed_pattern()?;
                        self.expect_op(":")?;
                        self.as_pattern()?;
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                Ok(())
            }
            _ => self.error("invalid pattern"),
        }
    }

    // ------------------------------------------------------ simple statements

    fn simple_statement(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let t = self.peek().clone();
        if t.tok == Tok::Magic {
            self.bump();
            return Ok(Stmt {
                kind: StmtKind::Magic(self.text_of(&t).trim().to_string()),
                range: t.range,
            });
        }
        let word = if t.tok == Tok::Name { self.text_of(&t) } else { "" };
        let kind = match word {
            "pass" => {
                self.bump();
                StmtKind::Pass
            }
            "break" => {
                self.bump();
                StmtKind::Break
            }
            "continue" => {
                self.bump();
                StmtKind::Continue
            }
            "return" => {
                self.bump();
                if self.at_stmt_end() {
                    StmtKind::Return(None)
                } else {
                    StmtKind::Return(Some(self.star_expressions()?))
                }
            }
            "raise" => {
                self.bump();
                let mut exc = None;
                let mut cause = None;
                if !self.at_stmt_end() {
                    exc = Some(self.expression()?);
                    if self.eat_kw("from") {
                        cause = Some(self.expression()?);
                    }
                }
                StmtKind::Raise { exc, cause }
            }
            "global" | "nonlocal" => {
                self.bump();
                let mut names = vec![self.ident()?];
                while self.eat_op(",") {
                    names.push(self.ident()?);
                }
                if word == "global" {
                    StmtKind::Global(names)
                } else {
                    StmtKind::Nonlocal(names)
                }
            }
            "del" => {
                self.bump();
                let mut targets = Vec::new();
                loop {
                    let e = self.bitor()?;
                    self.check_target(&e, false)?;
                    targets.push(e);
                    if !self.eat_op(",") || self.at_stmt_end() {
                        break;
                    }
                }
                StmtKind::Delete(targets)
            }
            "assert" => {
                self.bump();
                let test = self.expression()?;
                let msg = if self.eat_op(",") {
                    Some(self.expression()?)
                } else {
                    None
                };
                StmtKind::Assert { test, msg }
            }
            "import" => {
                self.bump();
                let mut names = Vec::new();
                loop {
                    let name = self.dotted_name()?;
                    let asname = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                    names.push(ImportAlias { name, asname });
                    if !self.eat_op(",") {
                        break;
                    }
                }
                StmtKind::Import(names)
            }
            "from" => self.import_from()?,
            _ => return self.expression_statement(),
        };
        Ok(Stmt {
            kind,
            range: self.range_from(start),
        })
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.peek().tok, Tok::Newline | Tok::EndMarker) || self.at_op(";")
    }

    fn dotted_name(&mut self) -> PResult<Ident> {
        let first = self.ident()?;
        let mut name = first.name;
        let start = first.range.start as usize;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.ident()?.name);
        }
        Ok(Ident {
            name,
            range: self.range_from(start),
        })
    }

    fn import_from(&mut self) -> PResult<StmtKind> {
        self.expect_kw("from")?;
        let mut level = 0;
        loop {
            if self.eat_op(".") {
                level += 1;
            } else if self.eat_op("...") {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.at_kw("import") {
            if level == 0 {
                return self.error("expected module name");
            }
            None
        } else {
            Some(self.dotted_name()?)
        };
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.at_op("*") {
            let t = self.bump();
            names.push(ImportAlias {
                name: Ident {
                    name: "*".into(),
                    range: t.range,
                },
                asname: None,
            });
        } else {
            let paren = self.eat_op("(");
            loop {
                let name = self.ident()?;
                let asname = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                names.push(ImportAlias { name, asname });
                if !self.eat_op(",") {
                    break;
                }
                if paren && self.at_op(")") {
                    break;
                }
            }
            if paren {
                self.expect_op(")")?;
            }
        }
        Ok(StmtKind::ImportFrom { module, level, names })
    }

    fn expression_statement(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let first = if self.at_kw("yield") {
            self.yield_expr()?
        } else {
            self.star_expressions()?
        };
        if self.at_op(":") {
            self.bump();
            self.check_target(&first, true)?;
            if matches!(first.kind, ExprKind::Tuple(_) | ExprKind::List(_)) {
                return Err(PErr {
                    message: "only single target (not tuple) can be annotated".into(),
                    range: first.range,
                });
            }
            let annotation = self.expression()?;
            let value = if self.eat_op("=") {
                Some(self.assign_value()?)
            } else {
                None
            };
            return Ok(Stmt {
                kind: StmtKind::AnnAssign {
                    target: first,
                    annotation,
                    value,
                },
                range: self.range_from(start),
            });
        }
        if let Tok::Op(op) = self.peek().tok {
            if let Some(bin) = aug_op(op) {
                self.bump();
                if !matches!(
                    first.kind,
                    ExprKind::Name(_) | ExprKind::Attribute { .. } | ExprKind::Subscript { .. }
                ) {
                    return Err(PErr {
                        message: "illegal expression for augmented assignment".into(),
                        range: first.range,
                    });
                }
                let value = self.assign_value()?;
                return Ok(Stmt {
                    kind: StmtKind::AugAssign {
                        target: first,
                        op: bin,
                        value,
                    },
                    range: self.range_from(start),
                });
            }
        }
        if self.at_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                exprs.push(self.assign_value()?);
            }
            let value = exprs.pop().unwrap();
            for t in &exprs {
                self.check_target(t, true)?;
            }
            return Ok(Stmt {
                kind: StmtKind::Assign { targets: exprs, value },
                range: self.range_from(start),
            });
        }
        if let ExprKind::Starred(_) = first.kind {
            return Err(PErr {
                message: "can't use starred expression here".into(),
                range: first.range,
            });
        }
        Ok(Stmt {
            kind: StmtKind::Expr(first),
            range: self.range_from(start),
        })
    }

    fn assign_value(&mut self) -> PResult<Expr> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.star_expressions()
        }
    }

    fn check_target(&self, e: &Expr, allow_star: bool) -> PResult<()> {
        match &e.kind {
            ExprKind::Name(n) => {
                if is_keyword(n) {
                    return Err(PErr {
                        message: format!("cannot assign to {n}"),
                        range: e.range,
                    });
                }
                Ok(())
            }
            ExprKind::Attribute { .. } | ExprKind::Subscript { .. } => Ok(()),
            ExprKind::Tuple(items) | ExprKind::List(items) => {
                for i in items {
                    self.check_target(i, allow_star)?;
                }
                Ok(())
            }
            ExprKind::Starred(inner) if allow_star => self.check_target(inner, false),
            _ => Err(PErr {
                message: "cannot assign to expression".into(),
                range: e.range,
            }),
        }
    }

    fn star_target(&mut self) -> PResult<Expr> {
        let e = if self.at_op("*") {
            let start = self.start();
            self.bump();
            let inner = self.bitor()?;
            Expr {
                kind: ExprKind::Starred(boxed(inner)),
                range: self.range_from(start),
            }
        } else {
            self.bitor()?
        };
        self.check_target(&e, true)?;
        Ok(e)
    }

    /// Comma-separated assignment targets (for-loop and comprehension heads).
    fn target_list(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.star_target()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_kw("in") {
                break;
            }
            items.push(self.star_target()?);
        }
        Ok(Expr {
            kind: ExprKind::Tuple(items),
            range: self.range_from(start),
        })
    }

    // ------------------------------------------------------------ expressions

    fn can_start_expr(&self) -> bool {
        let t = self.peek();
        match &t.tok {
            Tok::Name => {
                let w = self.text_of(t);
                !is_keyword(w) || matches!(w, "None" | "True" | "False" | "not" | "lambda" | "await")
            }
            Tok::Int(_) | Tok::Float(_) | Tok::Complex | Tok::Str { .. } => true,
            Tok::Op(o) => matches!(*o, "(" | "[" | "{" | "-" | "+" | "~" | "..." | "*"),
            _ => false,
        }
    }

    fn star_expressions(&mut self) -> PResult<Expr> {
        self.sequence(false)
    }

    fn star_named_expressions(&mut self) -> PResult<Expr> {
        self.sequence(true)
    }

    fn sequence(&mut self, named: bool) -> PResult<Expr> {
        let start = self.start();
        let first = self.star_expression(named)?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if !self.can_start_expr() {
                break;
            }
            items.push(self.star_expression(named)?);
        }
        Ok(Expr {
            kind: ExprKind::Tuple(items),
            range: self.range_from(start),
        })
    }

    fn star_expression(&mut self, named: bool) -> PResult<Expr> {
        if self.at_op("*") {
            let start = self.start();
            self.bump();
            let inner = self.bitor()?;
            return Ok(Expr {
                kind: ExprKind::Starred(boxed(inner)),
                range: self.range_from(start),
            });
        }
        if named {
            self.named_expression()
        } else {
            self.expression()
        }
    }

    fn named_expression(&mut self) -> PResult<Expr> {
        if self.peek().tok == Tok::Name && matches!(self.peek_at(1).tok, Tok::Op(":=")) {
            let start = self.start();
            let id = self.ident()?;
            self.bump();
            let value = self.expression()?;
            return Ok(Expr {
                kind: ExprKind::NamedExpr {
                    target: boxed(Expr {
                        kind: ExprKind::Name(id.name),
                        range: id.range,
                    }),
                    value: boxed(value),
                },
                range: self.range_from(start),
            });
        }
        self.expression()
    }

    fn expression(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let start = self.start();
        let body = self.disjunction()?;
        if self.at_kw("if") {
            self.bump();
            let test = self.disjunction()?;
            self.expect_kw("else")?;
            let orelse = self.expression()?;
            return Ok(Expr {
                kind: ExprKind::IfExp {
                    test: boxed(test),
                    body: boxed(body),
                    orelse: boxed(orelse),
                },
                range: self.range_from(start),
            });
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_kw("lambda")?;
        let params = self.parameters(":", false)?;
        self.expect_op(":")?;
        let body = self.expression()?;
        Ok(Expr {
            kind: ExprKind::Lambda {
                params: Box::new(params),
                body: boxed(body),
            },
            range: self.range_from(start),
        })
    }

    fn disjunction(&mut self) -> PResult<Expr> {
        self.bool_chain("or", BoolOp::Or)
    }

    fn bool_chain(&mut self, kw: &str, op: BoolOp) -> PResult<Expr> {
        let start = self.start();
        let first = if op == BoolOp::Or {
            self.bool_chain("and", BoolOp::And)?
        } else {
            self.inversion()?
        };
        if !self.at_kw(kw) {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw(kw) {
            values.push(if op == BoolOp::Or {
                self.bool_chain("and", BoolOp::And)?
            } else {
                self.inversion()?
            });
        }
        Ok(Expr {
            kind: ExprKind::BoolOp { op, values },
            range: self.range_from(start),
        })
    }

    fn inversion(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            let start = self.start();
            self.bump();
            let operand = self.inversion()?;
            return Ok(Expr {
                kind: ExprKind::UnaryOp {
                    op: UnaryOp::Not,
                    operand: boxed(operand),
                },
                range: self.range_from(start),
            });
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match &self.peek().tok {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Name if self.at_kw("in") => CmpOp::In,
            Tok::Name if self.at_kw("not") && self.kw_at(1, "in") => {
                self.bump();
                CmpOp::NotIn
            }
            Tok::Name if self.at_kw("is") => {
                if self.kw_at(1, "not") {
                    self.bump();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let start = self.start();
        let left = self.bitor()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push(op);
            comparators.push(self.bitor()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        Ok(Expr {
            kind: ExprKind::Compare {
                left: boxed(left),
                ops,
                comparators,
            },
            range: self.range_from(start),
        })
    }

    fn binary_level(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("|", BinOp::BitOr)],
            &[("^", BinOp::BitXor)],
            &[("&", BinOp::BitAnd)],
            &[("<<", BinOp::LShift), (">>", BinOp::RShift)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[
                ("*", BinOp::Mult),
                ("/", BinOp::Div),
                ("//", BinOp::FloorDiv),
                ("%", BinOp::Mod),
                ("@", BinOp::MatMult),
            ],
        ];
        if level == LEVELS.len() {
            return self.factor();
        }
        let start = self.start();
        let mut left = self.binary_level(level + 1)?;
        loop {
            let op = match self.peek().tok {
                Tok::Op(o) => LEVELS[level].iter().find(|(s, _)| *s == o).map(|(_, b)| *b),
                _ => None,
            };
            let Some(op) = op else { break };
            self.bump();
            let right = self.binary_level(level + 1)?;
            left = Expr {
                kind: ExprKind::BinOp {
                    left: boxed(left),
                    op,
                    right: boxed(right),
                },
                range: self.range_from(start),
            };
        }
        Ok(left)
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(0)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.peek().tok {
            Tok::Op("-") => Some(UnaryOp::Neg),
            Tok::Op("+") => Some(UnaryOp::Pos),
            Tok::Op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            let start = self.start();
            self.bump();
            let operand = self.factor()?;
            return Ok(Expr {
                kind: ExprKind::UnaryOp {
                    op,
                    operand: boxed(operand),
                },
                range: self.range_from(start),
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let start = self.start();
        let base = if self.at_kw("await") {
            self.bump();
            let inner = self.primary()?;
            Expr {
                kind: ExprKind::Await(boxed(inner)),
                range: self.range_from(start),
            }
        } else {
            self.primary()?
        };
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr {
                kind: ExprKind::BinOp {
                    left: boxed(base),
                    op: BinOp::Pow,
                    right: boxed(exp),
                },
                range: self.range_from(start),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut e = self.atom()?;
        loop {
            if self.at_op(".") {
                self.bump();
                let attr = self.ident()?;
                e = Expr {
                    kind: ExprKind::Attribute { value: boxed(e), attr },
                    range: self.range_from(start),
                };
            } else if self.at_op("(") {
                self.bump();
                let (args, keywords) = self.call_args()?;
                self.expect_op(")")?;
                e = Expr {
                    kind: ExprKind::Call {
                        func: boxed(e),
                        args,
                        keywords,
                    },
                    range: self.range_from(start),
                };
            } else if self.at_op("[") {
                self.bump();
                let slice = self.slices()?;
                self.expect_op("]")?;
                e = Expr {
                    kind: ExprKind::Subscript {
                        value: boxed(e),
                        slice: boxed(slice),
                    },
                    range: self.range_from(start),
                };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> PResult<(Vec<Expr>, Vec<Keyword>)> {
        let mut args = Vec::new();
        let mut keywords: Vec<Keyword> = Vec::new();
        while !self.at_op(")") {
            let start = self.start();
            if self.eat_op("**") {
                let value = self.expression()?;
                keywords.push(Keyword {
                    arg: None,
                    value,
                    range: self.range_from(start),
                });
            } else if self.at_op("*") {
                self.bump();
                let inner = self.expression()?;
                args.push(Expr {
                    kind: ExprKind::Starred(boxed(inner)),
                    range: self.range_from(start),
                });
            } else if self.peek().tok == Tok::Name && matches!(self.peek_at(1).tok, Tok::Op("=")) {
                let arg = self.ident()?;
                self.bump();
                let value = self.expression()?;
                keywords.push(Keyword {
                    arg: Some(arg),
                    value,
                    range: self.range_from(start),
                });
            } else {
                let e = self.named_expression()?;
                if self.at_kw("for") || (self.at_kw("async") && self.kw_at(1, "for")) {
                    let generators = self.comprehension_clauses()?;
                    args.push(Expr {
                        kind: ExprKind::GeneratorExp {
                            elt: boxed(e),
                            generators,
                        },
                        range: self.range_from(start),
                    });
                } else {
                    if keywords.iter().any(|k| k.arg.is_some()) {
                        return Err(PErr {
                            message: "positional argument follows keyword argument".into(),
                            range: e.range,
                        });
                    }
                    if keywords.iter().any(|k| k.arg.is_none()) {
                        return Err(PErr {
                            message: "positional argument follows keyword argument unpacking".into(),
                            range: e.range,
                        });
                    }
                    args.push(e);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok((args, keywords))
    }

    fn slices(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.slice()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.slice()?);
        }
        Ok(Expr {
            kind: ExprKind::Tuple(items),
            range: self.range_from(start),
        })
    }

    fn slice(&mut self) -> PResult<Expr> {
        let start = self.start();
        if self.at_op("*") {
            let t = self.peek().range;
            self.require(GrammarVersion::Py311, "starred subscript", t)?;
            return self.star_expression(false);
        }
        let lower = if self.at_op(":") {
            None
        } else {
            let e = self.named_expression()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            Some(boxed(e))
        };
        self.expect_op(":")?;
        let upper = if self.at_op(":") || self.at_op(",") || self.at_op("]") {
            None
        } else {
            Some(boxed(self.expression()?))
        };
        let step = if self.eat_op(":") {
            if self.at_op(",") || self.at_op("]") {
                None
            } else {
                Some(boxed(self.expression()?))
            }
        } else {
            None
        };
        Ok(Expr {
            kind: ExprKind::Slice { lower, upper, step },
            range: self.range_from(start),
        })
    }

    fn comprehension_clauses(&mut self) -> PResult<Vec<Comprehension>> {
        let mut gens = Vec::new();
        loop {
            let is_async = if self.at_kw("async") && self.kw_at(1, "for") {
                self.bump();
                true
            } else {
                false
            };
            if !self.eat_kw("for") {
                break;
            }
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.disjunction()?);
            }
            gens.push(Comprehension {
                is_async,
                target,
                iter,
                ifs,
            });
        }
        Ok(gens)
    }

    fn yield_expr(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            let e = self.expression()?;
            return Ok(Expr {
                kind: ExprKind::YieldFrom(boxed(e)),
                range: self.range_from(start),
            });
        }
        let value = if self.can_start_expr() {
            Some(boxed(self.star_expressions()?))
        } else {
            None
        };
        Ok(Expr {
            kind: ExprKind::Yield(value),
            range: self.range_from(start),
        })
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        let start = t.range.start as usize;
        let constant = |c: Constant| ExprKind::Constant(c);
        let kind = match &t.tok {
            Tok::Name => {
                let text = self.text_of(&t);
                let k = match text {
                    "None" => constant(Constant::None),
                    "True" => constant(Constant::Bool(true)),
                    "False" => constant(Constant::Bool(false)),
                    _ if is_keyword(text) => return self.error("invalid syntax"),
                    _ => ExprKind::Name(text.to_string()),
                };
                self.bump();
                k
            }
            Tok::Int(v) => {
                self.bump();
                constant(Constant::Int(*v))
            }
            Tok::Float(v) => {
                self.bump();
                constant(Constant::Float(*v))
            }
            Tok::Complex => {
                self.bump();
                constant(Constant::Complex)
            }
            Tok::Str { .. } => {
                let mut value = String::new();
                let mut any_bytes = None;
                while let Tok::Str { value: v, bytes, .. } = &self.peek().tok {
                    if *any_bytes.get_or_insert(*bytes) != *bytes {
                        return self.error("cannot mix bytes and nonbytes literals");
                    }
                    value.push_str(v);
                    self.bump();
                }
                if any_bytes == Some(true) {
                    constant(Constant::Bytes)
                } else {
                    constant(Constant::Str(value))
                }
            }
            Tok::Op("...") => {
                self.bump();
                constant(Constant::Ellipsis)
            }
            Tok::Op("(") => return self.paren(),
            Tok::Op("[") => return self.list(),
            Tok::Op("{") => return self.brace(),
            _ => return self.error("invalid syntax"),
        };
        Ok(Expr {
            kind,
            range: self.range_from(start),
        })
    }

    fn paren(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_op("(")?;
        if self.eat_op(")") {
            return Ok(Expr {
                kind: ExprKind::Tuple(Vec::new()),
                range: self.range_from(start),
            });
        }
        if self.at_kw("yield") {
            let e = self.yield_expr()?;
            self.expect_op(")")?;
            return Ok(e);
        }
        let first = self.star_expression(true)?;
        if self.at_kw("for") || (self.at_kw("async") && self.kw_at(1, "for")) {
            let generators = self.comprehension_clauses()?;
            self.expect_op(")")?;
            return Ok(Expr {
                kind: ExprKind::GeneratorExp {
                    elt: boxed(first),
                    generators,
                },
                range: self.range_from(start),
            });
        }
        if self.eat_op(")") {
            if let ExprKind::Starred(_) = first.kind {
                return Err(PErr {
                    message: "can't use starred expression here".into(),
                    range: first.range,
                });
            }
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op(")") {
                break;
            }
            items.push(self.star_expression(true)?);
        }
        self.expect_op(")")?;
        Ok(Expr {
            kind: ExprKind::Tuple(items),
            range: self.range_from(start),
        })
    }

    fn list(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_op("[")?;
        if self.eat_op("]") {
            return Ok(Expr {
                kind: ExprKind::List(Vec::new()),
                range: self.range_from(start),
            });
        }
        let first = self.star_expression(true)?;
        if self.at_kw("for") || (self.at_kw("async") && self.kw_at(1, "for")) {
            let generators = self.comprehension_clauses()?;
            self.expect_op("]")?;
            return Ok(Expr {
                kind: ExprKind::ListComp {
                    elt: boxed(first),
                    generators,
                },
                range: self.range_from(start),
            });
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.star_expression(true)?);
        }
        self.expect_op("]")?;
        Ok(Expr {
            kind: ExprKind::List(items),
            range: self.range_from(start),
        })
    }

    fn brace(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_op("{")?;
        if self.eat_op("}") {
            return Ok(Expr {
                kind: ExprKind::Dict {
                    keys: Vec::new(),
                    values: Vec::new(),
                },
                range: self.range_from(start),
            });
        }
        // dict entry or set element
        let (mut first_key, first_val) = if self.eat_op("**") {
            (None, Some(self.bitor()?))
        } else {
            let k = self.star_expression(true)?;
            if self.eat_op(":") {
                (Some(k), Some(self.expression()?))
            } else {
                (Some(k), None)
            }
        };
        match first_val {
            Some(v) => {
                let comprehension = self.at_kw("for") || (self.at_kw("async") && self.kw_at(1, "for"));
                if let Some(key) = first_key.take_if(|_| comprehension) {
                    let generators = self.comprehension_clauses()?;
                    self.expect_op("}")?;
                    return Ok(Expr {
                        kind: ExprKind::DictComp {
                            key: boxed(key),
                            value: boxed(v),
                            generators,
                        },
                        range: self.range_from(start),
                    });
                }
                let mut keys = vec![first_key];
                let mut values = vec![v];
                while self.eat_op(",") {
                    if self.at_op("}") {
                        break;
                    }
                    if self.eat_op("**") {
                        keys.push(None);
                        values.push(self.bitor()?);
                    } else {
                        keys.push(Some(self.expression()?));
                        self.expect_op(":")?;
                        values.push(self.expression()?);
                    }
                }
                self.expect_op("}")?;
                Ok(Expr {
                    kind: ExprKind::Dict { keys, values },
                    range: self.range_from(start),
                })
            }
            None => {
                let first = first_key.unwrap();
                if self.at_kw("for") || (self.at_kw("async") && self.kw_at(1, "for")) {
                    let generators = self.comprehension_clauses()?;
                    self.expect_op("}")?;
                    return Ok(Expr {
                        kind: ExprKind::SetComp {
                            elt: boxed(first),
                            generators,
                        },
                        range: self.range_from(start),
                    });
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op("}") {
                        break;
                    }
                    items.push(self.star_expression(true)?);
                }
                self.expect_op("}")?;
                Ok(Expr {
                    kind: ExprKind::Set(items),
                    range: self.range_from(start),
                })
            }
        }
    }
}

fn aug_op(op: &str) -> Option<BinOp> {
    Some(match op {
        "+=" => BinOp::Add,
        "-=" => BinOp::Sub,
        "*=" => BinOp::Mult,
        "@=" => BinOp::MatMult,
        "/=" => BinOp::Div,
        "//=" => BinOp::FloorDiv,
        "%=" => BinOp::Mod,
        "**=" => BinOp::Pow,
        "<<=" => BinOp::LShift,
        ">>=" => BinOp::RShift,
        "|=" => BinOp::BitOr,
        "^=" => BinOp::BitXor,
        "&=" => BinOp::BitAnd,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Result<SyntaxTree, ParseError> {
        parse_source(&SourceUnit::script("t.py", src), GrammarVersion::default())
    }

    fn body(src: &str) -> Vec<Stmt> {
        parse(src).unwrap().module.body
    }

    #[test]
    fn assignment_statement() {
        let b = body("x = 1");
        assert_eq!(b.len(), 1);
        assert!(matches!(b[0].kind, StmtKind::Assign { .. }));
    }

    #[test]
    fn invalid_def_reports_line_one() {
        let err = parse("def f(:").unwrap_err();
        assert_eq!(err.span.start_line, 1);
    }

    #[test]
    fn for_loop_with_pass() {
        let b = body("for i in r:\n    pass");
        match &b[0].kind {
            StmtKind::For { body, .. } => {
                assert_eq!(body.len(), 1);
                assert_eq!(body[0].kind, StmtKind::Pass);
            }
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn spans_slice_source_exactly() {
        let src = "import torch as t\n\nclass M(t.nn.Module):\n    def forward(self, x):\n        return self.l(x) * 2  # c\n";
        let tree = parse(src).unwrap();
        let mut checked = 0;
        for s in &tree.module.body {
            s.walk_exprs(&mut |e| {
                let text = tree.text(e.range);
                if let Some(d) = e.dotted() {
                    assert_eq!(text.replace(char::is_whitespace, ""), d);
                }
                checked += 1;
            });
        }
        assert!(checked > 5);
        let class = &tree.module.body[1];
        assert!(tree.text(class.range).starts_with("class M"));
        assert!(tree.text(class.range).ends_with("* 2"));
    }

    #[test]
    fn broad_syntax_coverage() {
        let src = r#"
from __future__ import annotations
from . import sibling
from ..pkg import (a as b, c,)
import os.path, sys as system
x: int = 5
y, *rest = [1, 2, 3]
a = b = c = None
z = {**{}, 'k': [i for i in range(3) if i], 1: {j for j in ()}}
g = (v async for v in agen()) if False else lambda p, *q, k=1, **kw: p
w = not a and b or c in d not in e is not f
v = a[1:2, ::3, ...] @ m ** -2 // 3
@decorator(arg)
@other.attr
async def coro(a, /, b: int = 2, *, c, **kw) -> "T":
    async with ctx() as (p, q), other:
        await thing
    async for item in stream:
        yield item
    return (yield)
class K(Base, metaclass=Meta):
    '''doc'''
    def m(self): return self
try:
    pass
except (A, B) as e:
    raise X from e
except Exception:
    pass
else:
    pass
finally:
    del a, b[0], c.d
while (n := next(it)) is not None:
    global q
    if n: break
    elif n > 2: continue
    else: assert n, "msg"
print(f"{x!r:>10}", *args, **kwargs)
with (open("a") as fa, open("b") as fb):
    pass
match command:
    case [x, y, *others]:
        pass
    case {"k": v, **rest} if v:
        pass
    case Point(x=0, y=_) | None:
        pass
    case -1 | 1+2j | "s" as lit:
        pass
"#;
        let tree = parse(src).unwrap();
        assert!(tree.module.body.len() > 15);
    }

    #[test]
    fn match_is_still_an_identifier() {
        let b = body("match = re.match(p, s)\nmatch(x)\n");
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn version_gating() {
        let src = "match x:\n    case 1:\n        pass\n";
        let unit = SourceUnit::script("t.py", src);
        assert!(parse_source(&unit, GrammarVersion::Py39).is_err());
        assert!(parse_source(&unit, GrammarVersion::Py310).is_ok());
        let star = SourceUnit::script("t.py", "try:\n    pass\nexcept* E:\n    pass\n");
        assert!(parse_source(&star, GrammarVersion::Py310).is_err());
        assert!(parse_source(&star, GrammarVersion::Py311).is_ok());
        assert!(parse("def f[T](x): pass\n").is_err());
        assert!(parse("type X = int\n").is_err());
    }

    #[test]
    fn rejects_invalid_programs() {
        for bad in [
            "f() = 1",
            "x +",
            "if x\n    pass",
            "def f(a=1, b): pass",
            "f(a=1, 2)",
            "return return",
            "a = (1, 2",
            "for x in y: pass\n  else: pass",
            "lambda: (yield)) ",
            "class",
            "x = 1 2",
        ] {
            assert!(parse(bad).is_err(), "should reject {bad:?}");
        }
    }

    #[test]
    fn notebook_magics_parse_as_statements() {
        let unit = SourceUnit::notebook(
            "n.ipynb",
            &[
                "import torch\nx = torch.ones(3)",
                "%xdel x",
                "%%bash\necho hi\n  indented",
            ],
        );
        let tree = parse_source(&unit, GrammarVersion::default()).unwrap();
        let magics: Vec<_> = tree
            .module
            .body
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Magic(m) => Some(m.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(magics[0], "%xdel x");
        assert_eq!(magics.len(), 4);
    }
}
