//! Per-file semantic facts queried by rule triggers.
//!
//! A single traversal records every statement, call, assignment, delete,
//! with-block, loop, function and class together with the context it sits in.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::frontend::ast::{BinOp, ClassDef, Expr, ExprKind, FunctionDef, Keyword, Stmt, StmtKind, WithItem};
use crate::frontend::{qualify, AliasMap, Qualified, Span, SyntaxTree, TextRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Framework {
    Pytorch,
    Tensorflow,
    Keras,
    Sklearn,
}

impl Framework {
    pub fn name(self) -> &'static str {
        match self {
            Framework::Pytorch => "pytorch",
            Framework::Tensorflow => "tensorflow",
            Framework::Keras => "keras",
            Framework::Sklearn => "sklearn",
        }
    }
}

/// Enclosing constructs of a node. Loop ids are outermost first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context {
    pub loops: Vec<usize>,
    pub function: Option<usize>,
    pub class: Option<usize>,
    pub grad_disabled: bool,
}

impl Context {
    pub fn in_loop(&self) -> bool {
        !self.loops.is_empty()
    }

    pub fn innermost_loop(&self) -> Option<usize> {
        self.loops.last().copied()
    }

    pub fn is_top_level(&self) -> bool {
        self.function.is_none() && self.class.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    For,
    While,
}

#[derive(Debug, Clone)]
pub struct LoopInfo<'a> {
    pub kind: LoopKind,
    pub stmt: &'a Stmt,
    pub body: &'a [Stmt],
    pub range: TextRange,
    pub is_training: bool,
    pub is_unbounded: bool,
    /// Context of the loop statement itself (not including this loop).
    pub ctx: Context,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    ForwardMethod,
    AutogradForward,
    AutogradBackward,
    Inference,
    Training,
    Plain,
}

#[derive(Debug, Clone)]
pub struct FunctionInfo<'a> {
    pub name: String,
    pub decorators: Vec<String>,
    pub kind: FunctionKind,
    pub def: &'a FunctionDef,
    pub range: TextRange,
    pub ctx: Context,
}

impl FunctionInfo<'_> {
    pub fn has_decorator(&self, name: &str) -> bool {
        self.decorators
            .iter()
            .any(|d| d == name || d.rsplit('.').next() == Some(name))
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.def.params.iter().map(|p| p.name.name.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ClassInfo<'a> {
    pub name: String,
    pub base_qualified_names: Vec<String>,
    pub is_module_subclass: bool,
    pub is_autograd_function: bool,
    pub is_layer_subclass: bool,
    pub is_keras_model: bool,
    pub def: &'a ClassDef,
    pub range: TextRange,
}

#[derive(Debug, Clone)]
pub struct CallSite<'a> {
    pub expr: &'a Expr,
    pub func: &'a Expr,
    pub callee: Qualified,
    pub args: &'a [Expr],
    pub keywords: &'a [Keyword],
    pub ctx: Context,
    pub stmt: usize,
}

impl<'a> CallSite<'a> {
    /// Final attribute segment for `recv.method(...)` calls.
    pub fn method(&self) -> Option<&'a str> {
        match &self.func.kind {
            ExprKind::Attribute { attr, .. } => Some(&attr.name),
            _ => None,
        }
    }

    pub fn receiver(&self) -> Option<&'a Expr> {
        match &self.func.kind {
            ExprKind::Attribute { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Final segment of the callee path: the method name or the bare name.
    pub fn last_segment(&self) -> Option<&'a str> {
        match &self.func.kind {
            ExprKind::Attribute { attr, .. } => Some(&attr.name),
            ExprKind::Name(n) => Some(n),
            _ => None,
        }
    }

    pub fn keyword(&self, name: &str) -> Option<&'a Expr> {
        self.keywords
            .iter()
            .find(|k| k.arg.as_ref().is_some_and(|a| a.name == name))
            .map(|k| &k.value)
    }

    pub fn keyword_is_true(&self, name: &str) -> bool {
        self.keyword(name).and_then(Expr::is_truthy_constant) == Some(true)
    }

    pub fn range(&self) -> TextRange {
        self.expr.range
    }
}

#[derive(Debug, Clone)]
pub struct AssignSite<'a> {
    pub targets: Vec<&'a Expr>,
    pub value: &'a Expr,
    /// Operator of an augmented assignment (`x += ...`).
    pub aug: Option<BinOp>,
    pub ctx: Context,
    pub stmt: usize,
}

impl<'a> AssignSite<'a> {
    /// Plain names bound by the targets, including tuple elements.
    pub fn target_names(&self) -> Vec<&'a str> {
        let mut out = Vec::new();
        for t in self.targets.iter().copied() {
            collect_target_names(t, &mut out);
        }
        out
    }
}

fn collect_target_names<'e>(e: &'e Expr, out: &mut Vec<&'e str>) {
    match &e.kind {
        ExprKind::Name(n) => out.push(n),
        ExprKind::Tuple(items) | ExprKind::List(items) => items.iter().for_each(|i| collect_target_names(i, out)),
        ExprKind::Starred(inner) => collect_target_names(inner, out),
        _ => {}
    }
}

#[derive(Debug, Clone)]
pub struct DeleteSite<'a> {
    pub targets: &'a [Expr],
    pub ctx: Context,
    pub stmt: usize,
}

#[derive(Debug, Clone)]
pub struct WithInfo<'a> {
    pub item: &'a WithItem,
    /// Qualified name of the context expression (callee when it is a call).
    pub context: Qualified,
    pub body: TextRange,
    pub ctx: Context,
    pub stmt: usize,
}

#[derive(Debug, Clone)]
pub struct MagicSite<'a> {
    pub text: &'a str,
    pub range: TextRange,
    pub stmt: usize,
}

/// Statement record in pre-order; `block` and `pos` locate it among siblings.
#[derive(Debug, Clone)]
pub struct StmtSite<'a> {
    pub stmt: &'a Stmt,
    pub ctx: Context,
    pub block: usize,
    pub pos: usize,
}

#[derive(Debug, Clone)]
pub struct FileFacts<'a> {
    pub tree: &'a SyntaxTree,
    pub aliases: &'a AliasMap,
    pub frameworks: BTreeSet<Framework>,
    pub loops: Vec<LoopInfo<'a>>,
    pub functions: Vec<FunctionInfo<'a>>,
    pub classes: Vec<ClassInfo<'a>>,
    pub calls: Vec<CallSite<'a>>,
    pub assignments: Vec<AssignSite<'a>>,
    pub deletes: Vec<DeleteSite<'a>>,
    pub with_blocks: Vec<WithInfo<'a>>,
    pub magics: Vec<MagicSite<'a>>,
    pub stmts: Vec<StmtSite<'a>>,
    /// Statement ids of each block, in order.
    pub blocks: Vec<Vec<usize>>,
}

const GRAD_OFF: &[&str] = &["torch.no_grad", "torch.inference_mode"];
const INFERENCE_WORDS: &[&str] = &["predict", "infer", "inference", "eval", "evaluate", "test", "validate"];

fn disables_grad(e: &Expr, aliases: &AliasMap) -> bool {
    let target = match &e.kind {
        ExprKind::Call { func, .. } => func.as_ref(),
        _ => e,
    };
    qualify(target, aliases).is_any(GRAD_OFF)
}

/// Qualified name when known, else the raw dotted text of a name/call chain.
pub fn qualified_or_raw(e: &Expr, aliases: &AliasMap) -> String {
    let target = match &e.kind {
        ExprKind::Call { func, .. } => func.as_ref(),
        _ => e,
    };
    match qualify(target, aliases) {
        Qualified::Known(s) | Qualified::Wildcard(s) => s,
        Qualified::Unknown => target.dotted().unwrap_or_default(),
    }
}

fn is_backward_call(e: &Expr) -> bool {
    matches!(&e.kind, ExprKind::Call { func, .. }
        if matches!(&func.kind, ExprKind::Attribute { attr, .. } if attr.name == "backward"))
}

/// Splits an identifier into lowercase words on `_` and case boundaries.
pub fn name_words(name: &str) -> Vec<String> {
    let mut words = Vec::new();
    for part in name.split('_').filter(|p| !p.is_empty()) {
        let mut cur = String::new();
        let mut prev_lower = false;
        for c in part.chars() {
            if c.is_uppercase() && prev_lower && !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
            prev_lower = c.is_lowercase() || c.is_ascii_digit();
            cur.extend(c.to_lowercase());
        }
        if !cur.is_empty() {
            words.push(cur);
        }
    }
    words
}

struct Builder<'a> {
    facts: FileFacts<'a>,
}

pub fn build_facts<'a>(tree: &'a SyntaxTree, aliases: &'a AliasMap) -> FileFacts<'a> {
    let mut b = Builder {
        facts: FileFacts {
            tree,
            aliases,
            frameworks: detect_frameworks(aliases),
            loops: Vec::new(),
            functions: Vec::new(),
            classes: Vec::new(),
            calls: Vec::new(),
            assignments: Vec::new(),
            deletes: Vec::new(),
            with_blocks: Vec::new(),
            magics: Vec::new(),
            stmts: Vec::new(),
            blocks: Vec::new(),
        },
    };
    b.block(&tree.module.body, &Context::default());
    b.propagate_class_flags();
    b.classify();
    b.facts
}

fn detect_frameworks(aliases: &AliasMap) -> BTreeSet<Framework> {
    let mut set = BTreeSet::new();
    for name in aliases.canonical_names() {
        let root = name.split('.').next().unwrap_or_default();
        match root {
            "torch" => {
                set.insert(Framework::Pytorch);
            }
            "tensorflow" => {
                set.insert(Framework::Tensorflow);
                if name == "tensorflow.keras" || name.starts_with("tensorflow.keras.") {
                    set.insert(Framework::Keras);
                }
            }
            "keras" => {
                set.insert(Framework::Keras);
            }
            "sklearn" => {
                set.insert(Framework::Sklearn);
            }
            _ => {}
        }
    }
    set
}

impl<'a> Builder<'a> {
    fn block(&mut self, stmts: &'a [Stmt], ctx: &Context) {
        let block = self.facts.blocks.len();
        self.facts.blocks.push(Vec::new());
        for (pos, s) in stmts.iter().enumerate() {
            let id = self.facts.stmts.len();
            self.facts.blocks[block].push(id);
            self.stmt(s, ctx, block, pos);
        }
    }

    fn index_calls(&mut self, e: &'a Expr, ctx: &Context, stmt: usize) {
        let aliases = self.facts.aliases;
        e.walk(&mut |x| {
            if let ExprKind::Call { func, args, keywords } = &x.kind {
                self.facts.calls.push(CallSite {
                    expr: x,
                    func,
                    callee: qualify(func, aliases),
                    args,
                    keywords,
                    ctx: ctx.clone(),
                    stmt,
                });
            }
        });
    }

    fn stmt(&mut self, s: &'a Stmt, ctx: &Context, block: usize, pos: usize) {
        let id = self.facts.stmts.len();
        self.facts.stmts.push(StmtSite {
            stmt: s,
            ctx: ctx.clone(),
            block,
            pos,
        });
        let aliases = self.facts.aliases;
        // loop headers evaluate in the outer context; everything else is owned here
        for e in s.own_exprs() {
            self.index_calls(e, ctx, id);
        }
        match &s.kind {
            StmtKind::Assign { targets, value } => self.facts.assignments.push(AssignSite {
                targets: targets.iter().collect(),
                value,
                aug: None,
                ctx: ctx.clone(),
                stmt: id,
            }),
            StmtKind::AugAssign { target, op, value } => self.facts.assignments.push(AssignSite {
                targets: vec![target],
                value,
                aug: Some(*op),
                ctx: ctx.clone(),
                stmt: id,
            }),
            StmtKind::AnnAssign {
                target,
                value: Some(value),
                ..
            } => self.facts.assignments.push(AssignSite {
                targets: vec![target],
                value,
                aug: None,
                ctx: ctx.clone(),
                stmt: id,
            }),
            StmtKind::Delete(targets) => self.facts.deletes.push(DeleteSite {
                targets,
                ctx: ctx.clone(),
                stmt: id,
            }),
            StmtKind::Magic(text) => self.facts.magics.push(MagicSite {
                text,
                range: s.range,
                stmt: id,
            }),
            _ => {}
        }
        match &s.kind {
            StmtKind::For { iter, body, orelse, .. } => {
                let unbounded = matches!(&iter.kind, ExprKind::Call { func, .. }
                    if qualify(func, aliases).is("itertools.cycle")
                        || func.dotted().as_deref() == Some("cycle"));
                self.looped(s, LoopKind::For, body, unbounded, ctx);
                self.block(orelse, ctx);
            }
            StmtKind::While { test, body, orelse, .. } => {
                let unbounded = test.is_truthy_constant() == Some(true);
                self.looped(s, LoopKind::While, body, unbounded, ctx);
                self.block(orelse, ctx);
            }
            StmtKind::With { items, body, .. } => {
                let mut inner = ctx.clone();
                for item in items {
                    if disables_grad(&item.context, aliases) {
                        inner.grad_disabled = true;
                    }
                    let target = match &item.context.kind {
                        ExprKind::Call { func, .. } => func.as_ref(),
                        _ => &item.context,
                    };
                    self.facts.with_blocks.push(WithInfo {
                        item,
                        context: qualify(target, aliases),
                        body: block_range(body),
                        ctx: ctx.clone(),
                        stmt: id,
                    });
                }
                self.block(body, &inner);
            }
            StmtKind::FunctionDef(f) => {
                let fid = self.facts.functions.len();
                let decorators = f.decorators.iter().map(|d| qualified_or_raw(d, aliases)).collect();
                self.facts.functions.push(FunctionInfo {
                    name: f.name.name.clone(),
                    decorators,
                    kind: FunctionKind::Plain,
                    def: f,
                    range: s.range,
                    ctx: ctx.clone(),
                });
                let inner = Context {
                    loops: Vec::new(),
                    function: Some(fid),
                    class: ctx.class,
                    grad_disabled: f.decorators.iter().any(|d| disables_grad(d, aliases)),
                };
                self.block(&f.body, &inner);
            }
            StmtKind::ClassDef(c) => {
                let cid = self.facts.classes.len();
                let bases: Vec<String> = c.bases.iter().map(|b| qualified_or_raw(b, aliases)).collect();
                let torch_rooted = |b: &String| b == "torch" || b.starts_with("torch.");
                let is_module_subclass = bases
                    .iter()
                    .any(|b| b.ends_with(".nn.Module") || b == "Module" || b.ends_with(".Module"));
                let is_autograd_function = bases.iter().any(|b| {
                    b.ends_with("autograd.Function") || (torch_rooted(b) && b.rsplit('.').next() == Some("Function"))
                });
                let keras_rooted = |b: &String| b.starts_with("keras.") || b.starts_with("tensorflow.");
                let is_layer_subclass = bases
                    .iter()
                    .any(|b| keras_rooted(b) && b.rsplit('.').next() == Some("Layer"));
                let is_keras_model = bases
                    .iter()
                    .any(|b| keras_rooted(b) && matches!(b.rsplit('.').next(), Some("Model" | "Sequential")));
                self.facts.classes.push(ClassInfo {
                    name: c.name.name.clone(),
                    base_qualified_names: bases,
                    is_module_subclass,
                    is_autograd_function,
                    is_layer_subclass,
                    is_keras_model,
                    def: c,
                    range: s.range,
                });
                let inner = Context {
                    loops: Vec::new(),
                    function: None,
                    class: Some(cid),
                    grad_disabled: false,
                };
                self.block(&c.body, &inner);
            }
            _ => {
                for b in s.blocks() {
                    self.block(b, ctx);
                }
            }
        }
    }

    fn looped(&mut self, s: &'a Stmt, kind: LoopKind, body: &'a [Stmt], is_unbounded: bool, ctx: &Context) {
        let lid = self.facts.loops.len();
        self.facts.loops.push(LoopInfo {
            kind,
            stmt: s,
            body,
            range: s.range,
            is_training: false,
            is_unbounded,
            ctx: ctx.clone(),
        });
        let mut inner = ctx.clone();
        inner.loops.push(lid);
        self.block(body, &inner);
    }

    /// In-file subclasses inherit the flags of in-file bases.
    fn propagate_class_flags(&mut self) {
        loop {
            let mut changed = false;
            for i in 0..self.facts.classes.len() {
                let bases = self.facts.classes[i].base_qualified_names.clone();
                for b in bases {
                    let Some(j) = self.facts.classes.iter().position(|c| c.name == b) else {
                        continue;
                    };
                    if i == j {
                        continue;
                    }
                    let src = self.facts.classes[j].clone();
                    let dst = &mut self.facts.classes[i];
                    for (d, s) in [
                        (&mut dst.is_module_subclass, src.is_module_subclass),
                        (&mut dst.is_autograd_function, src.is_autograd_function),
                        (&mut dst.is_layer_subclass, src.is_layer_subclass),
                        (&mut dst.is_keras_model, src.is_keras_model),
                    ] {
                        if s && !*d {
                            *d = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn classify(&mut self) {
        let optim_names = self.facts.optimizer_names();
        let is_step = |e: &Expr| -> bool {
            let ExprKind::Call { func, .. } = &e.kind else {
                return false;
            };
            let ExprKind::Attribute { value, attr } = &func.kind else {
                return false;
            };
            if attr.name != "step" {
                return false;
            }
            let recv = value.dotted().unwrap_or_default();
            recv.to_lowercase().contains("optim") || optim_names.contains(&recv)
        };
        let training = |stmts: &[Stmt]| -> bool {
            stmts.iter().any(|s| {
                let mut hit = false;
                s.walk_exprs(&mut |e| hit |= is_backward_call(e) || is_step(e));
                hit
            })
        };
        for l in &mut self.facts.loops {
            l.is_training = training(l.body);
        }
        let facts = &self.facts;
        let kinds: Vec<FunctionKind> = facts
            .functions
            .iter()
            .map(|f| {
                let class = f.ctx.function.is_none().then_some(f.ctx.class).flatten();
                let class = class.map(|c| &facts.classes[c]);
                if let Some(c) = class {
                    if c.is_autograd_function && f.name == "forward" {
                        return FunctionKind::AutogradForward;
                    }
                    if c.is_autograd_function && f.name == "backward" {
                        return FunctionKind::AutogradBackward;
                    }
                    if c.is_module_subclass && f.name == "forward" {
                        return FunctionKind::ForwardMethod;
                    }
                }
                let has_backward = f.def.body.iter().any(|s| {
                    let mut hit = false;
                    s.walk_exprs(&mut |e| hit |= is_backward_call(e));
                    hit
                });
                let words = name_words(&f.name);
                if !has_backward && words.iter().any(|w| INFERENCE_WORDS.contains(&w.as_str())) {
                    FunctionKind::Inference
                } else if training(&f.def.body) {
                    FunctionKind::Training
                } else {
                    FunctionKind::Plain
                }
            })
            .collect();
        for (f, k) in self.facts.functions.iter_mut().zip(kinds) {
            f.kind = k;
        }
    }
}

fn block_range(body: &[Stmt]) -> TextRange {
    match (body.first(), body.last()) {
        (Some(a), Some(b)) => a.range.cover(b.range),
        _ => TextRange::default(),
    }
}

impl<'a> FileFacts<'a> {
    pub fn span(&self, range: TextRange) -> Span {
        self.tree.span(range)
    }

    pub fn text(&self, range: TextRange) -> &'a str {
        range.slice(&self.tree.source)
    }

    pub fn has(&self, fw: Framework) -> bool {
        self.frameworks.contains(&fw)
    }

    pub fn qualify(&self, e: &Expr) -> Qualified {
        qualify(e, self.aliases)
    }

    /// True iff `range` lies inside a no_grad/inference_mode region.
    pub fn grad_disabled(&self, range: TextRange) -> bool {
        self.with_blocks
            .iter()
            .any(|w| w.body.contains(range) && w.context.is_any(GRAD_OFF))
            || self
                .functions
                .iter()
                .any(|f| f.range.contains(range) && f.def.decorators.iter().any(|d| disables_grad(d, self.aliases)))
    }

    pub fn loop_contains(&self, loop_id: usize, range: TextRange) -> bool {
        self.loops[loop_id].range.contains(range)
    }

    /// Statements sharing a block with `stmt` that follow it, up to `n`.
    pub fn next_siblings(&self, stmt: usize, n: usize) -> Vec<&'a Stmt> {
        let site = &self.stmts[stmt];
        self.blocks[site.block]
            .iter()
            .skip(site.pos + 1)
            .take(n)
            .map(|&i| self.stmts[i].stmt)
            .collect()
    }

    /// Calls lexically inside `range`.
    pub fn calls_in(&self, range: TextRange) -> impl Iterator<Item = &CallSite<'a>> + '_ {
        self.calls.iter().filter(move |c| range.contains(c.expr.range))
    }

    pub fn assignments_in(&self, range: TextRange) -> impl Iterator<Item = &AssignSite<'a>> + '_ {
        self.assignments.iter().filter(move |a| range.contains(a.value.range))
    }

    pub fn class_named(&self, name: &str) -> Option<&ClassInfo<'a>> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Range of the scope (function or module) a context belongs to.
    pub fn scope_range(&self, ctx: &Context) -> TextRange {
        match ctx.function {
            Some(f) => self.functions[f].range,
            None => self.tree.module.range,
        }
    }

    /// Names assigned from `torch.optim.*` constructors.
    pub fn optimizer_names(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        for a in &self.assignments {
            if let ExprKind::Call { func, .. } = &a.value.kind {
                if self.qualify(func).under("torch.optim") {
                    for t in &a.targets {
                        if let Some(d) = t.dotted() {
                            out.insert(d);
                        }
                    }
                }
            }
        }
        out
    }

    /// Names bound (in the given function scope, `None` for module level)
    /// to the result of a torch-rooted call.
    pub fn torch_bound_names(&self, function: Option<usize>) -> HashSet<&'a str> {
        let mut out = HashSet::new();
        for a in &self.assignments {
            if a.ctx.function != function || a.aug.is_some() {
                continue;
            }
            if self.is_torch_call(a.value) {
                out.extend(a.target_names());
            }
        }
        out
    }

    /// Call whose callee (or the root of its method chain) qualifies under torch.
    pub fn is_torch_call(&self, e: &Expr) -> bool {
        let ExprKind::Call { func, .. } = &e.kind else {
            return false;
        };
        if self.qualify(func).under("torch") {
            return true;
        }
        // `torch.x(...).to(device)` style chains
        match &func.kind {
            ExprKind::Attribute { value, .. } => self.is_torch_call(value),
            _ => false,
        }
    }

    /// Tensor-typed approximation: a torch call, or a name bound from one.
    pub fn is_tensor_expr(&self, e: &Expr, function: Option<usize>) -> bool {
        if self.is_torch_call(e) {
            return true;
        }
        match &e.kind {
            ExprKind::Name(n) => self.torch_bound_names(function).contains(n.as_str()),
            _ => false,
        }
    }

    /// Map from name to the value expressions assigned to it anywhere.
    pub fn bindings(&self) -> HashMap<&'a str, Vec<&'a Expr>> {
        let mut out: HashMap<&str, Vec<&Expr>> = HashMap::new();
        for a in &self.assignments {
            if a.aug.is_some() {
                continue;
            }
            for n in a.target_names() {
                out.entry(n).or_default().push(a.value);
            }
        }
        out
    }

    pub fn notebook_cell(&self, unit: &crate::frontend::SourceUnit, range: TextRange) -> Option<usize> {
        let span = self.span(range);
        unit.cell_of_line(span.start_line).map(|(c, _)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_alias_map, parse_source, GrammarVersion, SourceUnit};

    fn with_facts<R>(src: &str, f: impl FnOnce(&FileFacts) -> R) -> R {
        let tree = parse_source(&SourceUnit::script("t.py", src), GrammarVersion::default()).unwrap();
        let aliases = build_alias_map(&tree);
        let facts = build_facts(&tree, &aliases);
        f(&facts)
    }

    #[test]
    fn training_loop_detected() {
        with_facts("import torch\nfor e in range(10):\n    loss.backward()\n", |f| {
            assert_eq!(f.loops.len(), 1);
            assert!(f.loops[0].is_training);
            assert!(f.has(Framework::Pytorch));
        });
    }

    #[test]
    fn optimizer_step_marks_training() {
        with_facts(
            "import torch\nopt = torch.optim.SGD(p)\nfor b in dl:\n    opt.step()\nwhile x:\n    sched.step()\n",
            |f| {
                assert!(f.loops[0].is_training);
                assert!(!f.loops[1].is_training);
            },
        );
    }

    #[test]
    fn framework_detection() {
        with_facts("import tensorflow as tf\n", |f| {
            assert_eq!(f.frameworks, BTreeSet::from([Framework::Tensorflow]));
        });
        with_facts(
            "from tensorflow import keras\nfrom sklearn.model_selection import GridSearchCV\n",
            |f| {
                assert_eq!(
                    f.frameworks,
                    BTreeSet::from([Framework::Tensorflow, Framework::Keras, Framework::Sklearn])
                );
            },
        );
    }

    #[test]
    fn unbounded_loops() {
        with_facts(
            "import itertools\nwhile True:\n    pass\nfor b in itertools.cycle(dl):\n    pass\nfor i in range(3):\n    pass\n",
            |f| {
                let flags: Vec<bool> = f.loops.iter().map(|l| l.is_unbounded).collect();
                assert_eq!(flags, vec![true, true, false]);
            },
        );
    }

    #[test]
    fn grad_disabled_regions() {
        let src = "import torch\nwith torch.no_grad():\n    a = f(x)\n@torch.no_grad()\ndef g(x):\n    return m(x)\nb = f(x)\n";
        with_facts(src, |f| {
            let by_text = |t: &str| f.calls.iter().find(|c| f.text(c.range()) == t).unwrap();
            assert!(by_text("f(x)").ctx.grad_disabled);
            assert!(f.grad_disabled(by_text("m(x)").range()));
            let last = f.calls.iter().rev().find(|c| f.text(c.range()) == "f(x)").unwrap();
            assert!(!last.ctx.grad_disabled);
            assert!(!f.grad_disabled(last.range()));
        });
    }

    #[test]
    fn function_kinds() {
        let src = r#"
import torch
import torch.nn as nn
class Net(nn.Module):
    def forward(self, x):
        return x
class Sub(Net):
    def forward(self, x):
        return x
class Fn(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        return x
    @staticmethod
    def backward(ctx, g):
        return g
def predict(m, x):
    return m(x)
def runInference(m, x):
    return m(x)
def train_step(m, x):
    loss = m(x)
    loss.backward()
def evaluate_and_train(m):
    m(x).backward()
def helper():
    pass
def testing():
    pass
"#;
        with_facts(src, |f| {
            let kinds: Vec<(&str, FunctionKind)> = f.functions.iter().map(|x| (x.name.as_str(), x.kind)).collect();
            use FunctionKind::*;
            assert_eq!(
                kinds,
                vec![
                    ("forward", ForwardMethod),
                    ("forward", ForwardMethod),
                    ("forward", AutogradForward),
                    ("backward", AutogradBackward),
                    ("predict", Inference),
                    ("runInference", Inference),
                    ("train_step", Training),
                    ("evaluate_and_train", Training),
                    ("helper", Plain),
                    ("testing", Plain),
                ]
            );
            assert!(f.classes[1].is_module_subclass);
            assert!(f.classes[2].is_autograd_function);
        });
    }

    #[test]
    fn every_dotted_call_indexed_once() {
        let src = "import torch\nx = torch.ones(torch.zeros(1).size(0))\nf(g(h()))[0]()\n";
        with_facts(src, |f| {
            let mut count = 0;
            for s in &f.tree.module.body {
                s.walk_exprs(&mut |e| {
                    if matches!(e.kind, ExprKind::Call { .. }) {
                        count += 1;
                    }
                });
            }
            assert_eq!(f.calls.len(), count);
        });
    }

    #[test]
    fn comprehensions_are_not_loops() {
        with_facts("y = [f(i) for i in range(3)]\n", |f| {
            assert!(f.loops.is_empty());
            assert!(!f.calls[0].ctx.in_loop());
        });
    }

    #[test]
    fn function_body_resets_loop_context() {
        with_facts("for i in r:\n    def g():\n        h()\n    k()\n", |f| {
            let h = f.calls.iter().find(|c| f.text(c.range()) == "h()").unwrap();
            let k = f.calls.iter().find(|c| f.text(c.range()) == "k()").unwrap();
            assert!(!h.ctx.in_loop());
            assert!(k.ctx.in_loop());
        });
    }

    #[test]
    fn splits_name_words() {
        assert_eq!(name_words("runInference"), vec!["run", "inference"]);
        assert_eq!(name_words("eval_model"), vec!["eval", "model"]);
        assert_eq!(name_words("EVAL"), vec!["eval"]);
    }

    #[test]
    fn next_siblings_follow_block_order() {
        with_facts("a = 1\nb = 2\nc = 3\nd = 4\n", |f| {
            let next = f.next_siblings(0, 2);
            assert_eq!(next.len(), 2);
            assert_eq!(f.text(next[1].range), "c = 3");
        });
    }
}
