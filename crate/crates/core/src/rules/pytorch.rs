//! PyTorch detectors (PT-01 to PT-30).

use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{
    binding_assignment, call_chain, is_discarded, is_safe_value, last_lower, mentions_dotted, raw_mention, RawFinding,
    RuleInput, BUILTIN_CALLS,
};
use crate::facts::{CallSite, Context, FileFacts, FunctionInfo, FunctionKind, LoopKind};
use crate::frontend::ast::{Expr, ExprKind, StmtKind};
use crate::frontend::TextRange;

const HOOKS: &[&str] = &["register_forward_hook", "register_backward_hook", "register_hook"];
const REDUCTIONS: &[&str] = &["sum", "mean", "max", "min", "prod", "amax", "amin"];
const RUNNING_STATS: &[&str] = &["running_mean", "running_var", "running_covar"];
const METADATA_ATTRS: &[&str] = &["shape", "dtype", "device", "ndim", "is_cuda", "requires_grad"];
const METADATA_METHODS: &[&str] = &["size", "dim", "numel", "item", "tolist"];
const CTX_BUILTINS: &[&str] = &["saved_tensors", "saved_variables", "needs_input_grad"];

fn fn_kind(facts: &FileFacts, ctx: &Context) -> Option<FunctionKind> {
    ctx.function.map(|f| facts.functions[f].kind)
}

fn stmt_range(facts: &FileFacts, stmt: usize) -> TextRange {
    facts.stmts[stmt].stmt.range
}

fn grad_off(facts: &FileFacts, c: &CallSite) -> bool {
    c.ctx.grad_disabled || facts.grad_disabled(c.range())
}

fn receiver_dotted(c: &CallSite) -> Option<String> {
    c.receiver().and_then(Expr::dotted)
}

fn is_backward(c: &CallSite) -> bool {
    c.method() == Some("backward")
}

/// A model-like callee: its name mentions a model or net, or `.eval()` is
/// called on it somewhere in the file.
fn model_like(facts: &FileFacts, d: &str) -> bool {
    let last = last_lower(d);
    last.contains("model")
        || last.contains("net")
        || facts
            .calls
            .iter()
            .any(|c| c.method() == Some("eval") && receiver_dotted(c).as_deref() == Some(d))
}

/// Construction of a module defined in this file (`Net()`), possibly chained
/// (`Net().to(device)`).
fn is_local_module_ctor(facts: &FileFacts, e: &Expr) -> bool {
    call_chain(e).iter().any(|c| match &c.kind {
        ExprKind::Call { func, .. } => func
            .as_name()
            .and_then(|n| facts.class_named(n))
            .is_some_and(|k| k.is_module_subclass),
        _ => false,
    })
}

fn is_torch_value(facts: &FileFacts, e: &Expr) -> bool {
    facts.is_torch_call(e) || is_local_module_ctor(facts, e)
}

/// True when `p` occurs in `e` other than through shape or scalar metadata.
fn tensor_mention(e: &Expr, p: &str) -> bool {
    match &e.kind {
        ExprKind::Attribute { attr, .. } if METADATA_ATTRS.contains(&attr.name.as_str()) => return false,
        ExprKind::Call { func, .. } => {
            if let ExprKind::Attribute { attr, .. } = &func.kind {
                if METADATA_METHODS.contains(&attr.name.as_str()) {
                    return false;
                }
            }
        }
        _ => {}
    }
    if e.as_name() == Some(p) {
        return true;
    }
    let mut found = false;
    e.for_each_child(&mut |c| found |= tensor_mention(c, p));
    found
}

/// First parameter name of an autograd method that plays the `ctx` role.
fn ctx_param(f: &FunctionInfo) -> Option<String> {
    let names = f.param_names();
    if names.contains(&"ctx") {
        return Some("ctx".into());
    }
    names.first().map(|s| s.to_string())
}

/// Parameters that plausibly carry tensors: no constant default and no
/// scalar annotation.
fn tensorish_params(f: &FunctionInfo, ctx_name: &str) -> Vec<String> {
    f.def
        .params
        .iter()
        .filter(|p| p.name.name != ctx_name && p.name.name != "self")
        .filter(|p| {
            !p.default
                .as_ref()
                .is_some_and(|d| matches!(d.kind, ExprKind::Constant(_)))
        })
        .filter(|p| {
            !p.annotation
                .as_ref()
                .and_then(Expr::as_name)
                .is_some_and(|a| matches!(a, "int" | "float" | "bool" | "str"))
        })
        .map(|p| p.name.name.clone())
        .collect()
}

fn is_zeroing(c: &CallSite) -> bool {
    let Some(last) = c.last_segment() else {
        return false;
    };
    let last = last.to_lowercase();
    if last.contains("zero_grad")
        || (last.contains("grad") && (last.contains("zero") || last.contains("clear") || last.contains("reset")))
    {
        return true;
    }
    matches!(last.as_str(), "zero_" | "fill_") && receiver_dotted(c).is_some_and(|r| r.split('.').any(|s| s == "grad"))
}

fn is_step(c: &CallSite, optimizers: &HashSet<String>) -> bool {
    c.method() == Some("step")
        && receiver_dotted(c).is_some_and(|r| r.to_lowercase().contains("optim") || optimizers.contains(&r))
}

fn grad_set_none(facts: &FileFacts, range: TextRange) -> bool {
    facts.assignments_in(range).any(|a| {
        a.targets
            .iter()
            .any(|t| matches!(&t.kind, ExprKind::Attribute { attr, .. } if attr.name == "grad"))
            && matches!(a.value.kind, ExprKind::Constant(crate::frontend::ast::Constant::None))
    })
}

/// Backward calls grouped by their innermost enclosing loop.
fn backward_by_loop<'f, 'a>(facts: &'f FileFacts<'a>) -> BTreeMap<usize, Vec<&'f CallSite<'a>>> {
    let mut out: BTreeMap<usize, Vec<&CallSite>> = BTreeMap::new();
    for c in facts.calls.iter().filter(|c| is_backward(c)) {
        if let Some(l) = c.ctx.innermost_loop() {
            out.entry(l).or_default().push(c);
        }
    }
    out
}

/// Gradient bookkeeping and autograd graph lifetime: PT-02, PT-04, PT-05,
/// PT-21, PT-23, PT-24, PT-25, PT-26.
pub fn check_gradient_and_graph(input: &RuleInput) -> Vec<RawFinding> {
    let facts = input.facts;
    let mut out = Vec::new();

    // PT-02 / PT-23: retain_graph=True
    for c in facts
        .calls
        .iter()
        .filter(|c| is_backward(c) && c.keyword_is_true("retain_graph"))
    {
        if c.ctx.in_loop() {
            input.emit(&mut out, "PT-23", c.range(), input.callee_text(c));
        } else {
            let later = facts
                .calls
                .iter()
                .any(|o| is_backward(o) && o.ctx.function == c.ctx.function && o.range().start > c.range().end);
            if !later {
                input.emit(&mut out, "PT-02", c.range(), input.callee_text(c));
            }
        }
    }

    // PT-04: gradients never reset in a training loop
    let optimizers = facts.optimizer_names();
    for (lid, backs) in backward_by_loop(facts) {
        let l = &facts.loops[lid];
        if !facts.calls_in(l.range).any(|c| is_step(c, &optimizers)) {
            continue;
        }
        let zeroed = facts.calls_in(l.range).any(is_zeroing) || grad_set_none(facts, l.range);
        if !zeroed {
            input.emit(&mut out, "PT-04", backs[0].range(), input.callee_text(backs[0]));
        }
    }

    // PT-26: eval() then a call outside a no-grad region
    let mut pt26: HashSet<TextRange> = HashSet::new();
    for ev in facts
        .calls
        .iter()
        .filter(|c| c.method() == Some("eval") && c.args.is_empty())
    {
        let Some(r) = receiver_dotted(ev) else { continue };
        for c in &facts.calls {
            if c.ctx.function != ev.ctx.function
                || c.range().start <= ev.range().end
                || c.func.dotted().as_deref() != Some(r.as_str())
                || grad_off(facts, c)
            {
                continue;
            }
            let retrained = facts.calls.iter().any(|t| {
                t.method() == Some("train")
                    && receiver_dotted(t).as_deref() == Some(r.as_str())
                    && t.range().start > ev.range().end
                    && t.range().end < c.range().start
            });
            if !retrained && pt26.insert(c.range()) {
                input.emit(&mut out, "PT-26", c.range(), r.clone());
            }
        }
    }

    // PT-05: model call in an inference function with gradients enabled
    for c in &facts.calls {
        if fn_kind(facts, &c.ctx) != Some(FunctionKind::Inference) || grad_off(facts, c) || pt26.contains(&c.range()) {
            continue;
        }
        let Some(d) = c.func.dotted() else { continue };
        if !model_like(facts, &d) {
            continue;
        }
        let frange = facts.functions[c.ctx.function.unwrap()].range;
        let frozen = facts.assignments_in(frange).any(|a| {
            a.targets
                .iter()
                .any(|t| matches!(&t.kind, ExprKind::Attribute { attr, .. } if attr.name == "requires_grad"))
                && a.value.is_truthy_constant() == Some(false)
        }) || facts.calls_in(frange).any(|x| {
            x.method() == Some("requires_grad_") && x.args.first().and_then(Expr::is_truthy_constant) == Some(false)
        });
        if !frozen {
            input.emit(&mut out, "PT-05", c.range(), d);
        }
    }

    // PT-21: backward reads ctx attributes that were never saved
    for (bi, b) in facts.functions.iter().enumerate() {
        if b.kind != FunctionKind::AutogradBackward {
            continue;
        }
        let Some(ctx_name) = ctx_param(b) else { continue };
        // attr -> whether the paired forward stored a tensor-like value there
        let mut stored: BTreeMap<String, bool> = BTreeMap::new();
        for (fi, f) in facts.functions.iter().enumerate() {
            if f.kind != FunctionKind::AutogradForward || f.ctx.class != b.ctx.class {
                continue;
            }
            let Some(fctx) = ctx_param(f) else { continue };
            let params = tensorish_params(f, &fctx);
            for a in facts.assignments.iter().filter(|a| a.ctx.function == Some(fi)) {
                for t in &a.targets {
                    if let ExprKind::Attribute { value, attr } = &t.kind {
                        if value.as_name() == Some(fctx.as_str()) {
                            let tensorish = params.iter().any(|p| tensor_mention(a.value, p));
                            *stored.entry(attr.name.clone()).or_insert(false) |= tensorish;
                        }
                    }
                }
            }
        }
        let targets: HashSet<TextRange> = facts
            .assignments
            .iter()
            .filter(|a| a.ctx.function == Some(bi))
            .flat_map(|a| a.targets.iter().map(|t| t.range))
            .collect();
        let mut seen = BTreeSet::new();
        let mut reads = Vec::new();
        crate::frontend::ast::walk_block_exprs(&b.def.body, &mut |e| {
            if let ExprKind::Attribute { value, attr } = &e.kind {
                if value.as_name() == Some(ctx_name.as_str())
                    && !CTX_BUILTINS.contains(&attr.name.as_str())
                    && !targets.contains(&e.range)
                    && stored.get(&attr.name).copied() != Some(false)
                    && seen.insert(attr.name.clone())
                {
                    reads.push((e.range, format!("{ctx_name}.{}", attr.name)));
                }
            }
        });
        for (range, subject) in reads {
            input.emit(&mut out, "PT-21", range, subject);
        }
    }

    // PT-24: nested autograd.grad without create_graph
    let grads: Vec<&CallSite> = facts
        .calls
        .iter()
        .filter(|c| c.callee.is("torch.autograd.grad"))
        .collect();
    for g in &grads {
        let nested = grads.iter().any(|inner| {
            inner.range() != g.range() && g.range().contains(inner.range()) && !inner.keyword_is_true("create_graph")
        });
        let chained = grads.iter().any(|prev| {
            if prev.ctx.function != g.ctx.function
                || prev.range().end >= g.range().start
                || prev.keyword_is_true("create_graph")
            {
                return false;
            }
            let Some(a) = facts
                .assignments
                .iter()
                .find(|a| a.value.range.contains(prev.range()) && a.ctx.function == prev.ctx.function)
            else {
                return false;
            };
            let names = a.target_names();
            g.args
                .iter()
                .chain(g.keywords.iter().map(|k| &k.value))
                .any(|x| names.iter().any(|n| x.mentions_name(n)))
        });
        if nested || chained {
            input.emit(&mut out, "PT-24", g.range(), input.callee_text(g));
        }
    }

    // PT-25: running statistics updated with graph attached
    for a in &facts.assignments {
        let Some(fname) = a.ctx.function.map(|f| facts.functions[f].name.as_str()) else {
            continue;
        };
        if fname == "__init__" || fname.starts_with("reset") {
            continue;
        }
        for t in &a.targets {
            let Some(d) = t.dotted() else { continue };
            if !RUNNING_STATS.iter().any(|s| d.ends_with(&format!(".{s}"))) {
                continue;
            }
            let detached = a.value.any(&mut is_safe_value);
            let off = a.ctx.grad_disabled || facts.grad_disabled(a.value.range);
            if !detached && !off {
                input.emit(&mut out, "PT-25", stmt_range(facts, a.stmt), d);
            }
        }
    }

    out
}

/// Loops, data pipelines and per-iteration construction: PT-03, PT-08,
/// PT-10, PT-11, PT-22, PT-28, PT-29, PT-30.
pub fn check_loops_and_pipeline(input: &RuleInput) -> Vec<RawFinding> {
    let facts = input.facts;
    let mut out = Vec::new();

    // PT-03 / PT-10: loop iterables
    for l in facts.loops.iter().filter(|l| l.kind == LoopKind::For) {
        let StmtKind::For { iter, .. } = &l.stmt.kind else {
            continue;
        };
        let ExprKind::Call { func, args, .. } = &iter.kind else {
            continue;
        };
        let q = facts.qualify(func);
        if q.is("itertools.cycle") {
            input.emit(&mut out, "PT-03", iter.range, input.text(func.range));
        }
        let is_zip = func.dotted().as_deref() == Some("zip");
        let is_cycle = q.is("itertools.cycle") || func.dotted().as_deref() == Some("cycle");
        if (is_zip || is_cycle)
            && args
                .iter()
                .any(|a| input.text(a.range).to_lowercase().contains("loader"))
        {
            input.emit(&mut out, "PT-10", iter.range, input.text(func.range));
        }
    }

    for c in &facts.calls {
        let in_loop = c.ctx.in_loop();

        // PT-08 / PT-22: DataLoader construction
        let is_loader = c.callee.is("torch.utils.data.DataLoader")
            || (c.callee.under("torch") && c.callee.last_segment() == Some("DataLoader"));
        if is_loader {
            let zero_workers = c.keyword("num_workers").and_then(Expr::int_value) == Some(0);
            if in_loop || (c.keyword_is_true("persistent_workers") && zero_workers) {
                input.emit(&mut out, "PT-08", c.range(), input.callee_text(c));
            }
        }
        let loader_like = c.last_segment().is_some_and(|s| s.ends_with("Loader"));
        if loader_like {
            let batch = c
                .keyword("batch_size")
                .or(if is_loader { c.args.get(1) } else { None })
                .and_then(Expr::int_value);
            if batch.is_some_and(|b| b >= input.thresholds.batch_size) {
                input.emit(&mut out, "PT-22", c.range(), format!("batch_size={}", batch.unwrap()));
            }
        }

        if !in_loop {
            continue;
        }

        // PT-11: tensor regrown by cat/stack
        if c.callee.is_any(&["torch.cat", "torch.stack"]) {
            if let Some(a) = facts
                .assignments
                .iter()
                .find(|a| a.value.range == c.range() && a.aug.is_none())
            {
                let grows = a
                    .targets
                    .iter()
                    .filter_map(|t| t.dotted())
                    .find(|d| c.args.iter().any(|x| mentions_dotted(x, d)));
                if let Some(d) = grows {
                    input.emit(&mut out, "PT-11", c.range(), d);
                }
            }
        }

        // PT-28: process groups per iteration
        if c.callee
            .is_any(&["torch.distributed.new_group", "torch.distributed.init_process_group"])
        {
            input.emit(&mut out, "PT-28", c.range(), input.callee_text(c));
        }

        // PT-29: modules constructed inside a training loop
        if c.ctx.loops.iter().any(|&l| facts.loops[l].is_training) {
            let local = c
                .func
                .as_name()
                .and_then(|n| facts.class_named(n))
                .is_some_and(|k| k.is_module_subclass);
            let torch_nn = c.callee.under("torch.nn")
                && c.callee
                    .last_segment()
                    .is_some_and(|s| s.starts_with(|ch: char| ch.is_ascii_uppercase()));
            if (local || torch_nn) && binding_assignment(facts, c.expr).is_some() {
                input.emit(&mut out, "PT-29", c.range(), input.callee_text(c));
            }
        }

        // PT-30: tracing per iteration
        if c.callee
            .is_any(&["torch.jit.trace", "torch.jit.script", "torch.jit.trace_module"])
        {
            input.emit(&mut out, "PT-30", c.range(), input.callee_text(c));
        }
    }

    out
}

/// Lingering references and device memory: PT-01, PT-06, PT-07, PT-09,
/// PT-12, PT-13, PT-14, PT-15, PT-16, PT-17, PT-18, PT-19, PT-20, PT-27.
pub fn check_references_and_memory(input: &RuleInput) -> Vec<RawFinding> {
    let facts = input.facts;
    let mut out = Vec::new();

    // PT-01: unbounded caches
    for a in facts
        .assignments
        .iter()
        .filter(|a| matches!(a.value.kind, ExprKind::Call { .. }))
    {
        if !(a.ctx.in_loop() || fn_kind(facts, &a.ctx) == Some(FunctionKind::ForwardMethod)) {
            continue;
        }
        for t in &a.targets {
            let name = match &t.kind {
                ExprKind::Subscript { value, .. } => value.dotted(),
                ExprKind::Attribute { .. } => t.dotted(),
                _ => None,
            };
            let Some(name) = name.filter(|n| last_lower(n).contains("cache")) else {
                continue;
            };
            let cleared = facts.calls.iter().any(|c| {
                matches!(c.method(), Some("clear" | "pop" | "popitem")) && receiver_dotted(c).as_deref() == Some(&name)
            }) || facts.deletes.iter().any(|d| {
                d.targets.iter().any(|x| match &x.kind {
                    ExprKind::Subscript { value, .. } => value.dotted().as_deref() == Some(&name),
                    _ => x.dotted().as_deref() == Some(&name),
                })
            });
            if !cleared {
                input.emit(&mut out, "PT-01", stmt_range(facts, a.stmt), name);
            }
        }
    }

    // PT-12: notebook globals never released
    if !input.cells.is_empty() {
        let cell_of = |r: TextRange| {
            let line = facts.span(r).start_line;
            input
                .cells
                .iter()
                .position(|c| c.start_line <= line && line <= c.end_line)
        };
        let reset_at = facts
            .magics
            .iter()
            .filter(|m| m.text.trim_start().starts_with("%reset"))
            .map(|m| m.range.start)
            .min();
        for a in facts
            .assignments
            .iter()
            .filter(|a| a.ctx.is_top_level() && a.aug.is_none())
        {
            if !is_torch_value(facts, a.value) {
                continue;
            }
            let here = a.value.range;
            for n in a.target_names() {
                let deleted = facts.deletes.iter().any(|d| {
                    facts.stmts[d.stmt].stmt.range.start > here.start
                        && d.targets.iter().any(|t| t.as_name() == Some(n))
                }) || facts.magics.iter().any(|m| {
                    let mut words = m.text.split_whitespace();
                    m.range.start > here.start && words.next() == Some("%xdel") && words.any(|w| w == n)
                }) || reset_at.is_some_and(|r| r > here.start);
                let reassigned = facts.assignments.iter().any(|o| {
                    o.ctx.is_top_level()
                        && o.value.range.start > here.start
                        && o.target_names().contains(&n)
                        && cell_of(o.value.range) > cell_of(here)
                });
                if !deleted && !reassigned {
                    input.emit(&mut out, "PT-12", stmt_range(facts, a.stmt), n);
                }
            }
        }
    }

    for c in &facts.calls {
        let in_loop = c.ctx.in_loop();

        // PT-06: raw outputs collected in an inference loop
        if in_loop
            && fn_kind(facts, &c.ctx) == Some(FunctionKind::Inference)
            && matches!(c.method(), Some("append" | "extend"))
        {
            if let Some(arg) = c.args.first() {
                if let ExprKind::Call { func, .. } = &arg.kind {
                    let safe = call_chain(arg).iter().any(|x| is_safe_value(x));
                    let builtin = func.as_name().is_some_and(|n| BUILTIN_CALLS.contains(&n));
                    let foreign = match facts.qualify(func).as_str() {
                        Some(q) => !q.starts_with("torch"),
                        None => false,
                    };
                    if !safe && !builtin && !foreign {
                        input.emit(&mut out, "PT-06", c.range(), input.text(arg.range));
                    }
                }
            }
        }

        // PT-18: matrix products accumulated on the device
        if in_loop && c.callee.is_any(&["torch.mm", "torch.matmul", "torch.bmm"]) {
            let acc = facts.assignments.iter().find(|a| {
                a.value.range.contains(c.range())
                    && (a.aug.is_some()
                        || a.targets
                            .iter()
                            .filter_map(|t| t.dotted())
                            .any(|d| mentions_dotted(a.value, &d)))
            });
            if let Some(a) = acc {
                let subject = a.targets.first().map(|t| input.text(t.range)).unwrap_or_default();
                input.emit(&mut out, "PT-18", c.range(), subject);
            }
        }

        // PT-07: hook handles never removed
        if c.method().is_some_and(|m| HOOKS.contains(&m)) {
            let stmt = facts.stmts[c.stmt].stmt;
            let leaked = if is_discarded(stmt, c.expr) {
                true
            } else if let Some(a) = facts.assignments.iter().find(|a| a.value.range == c.range()) {
                a.targets.iter().filter_map(|t| t.dotted()).any(|h| {
                    !facts
                        .calls
                        .iter()
                        .any(|r| r.method() == Some("remove") && receiver_dotted(r).as_deref() == Some(&h))
                })
            } else {
                false
            };
            if leaked {
                input.emit(&mut out, "PT-07", c.range(), input.callee_text(c));
            }
        }

        // PT-15: keepdim=True followed by squeeze
        if c.method().is_some_and(|m| REDUCTIONS.contains(&m)) && c.keyword_is_true("keepdim") {
            let squeezed_now = facts
                .calls
                .iter()
                .any(|s| s.method() == Some("squeeze") && s.receiver().is_some_and(|r| r.range == c.range()));
            let squeezed_later = facts
                .assignments
                .iter()
                .find(|a| a.value.range == c.range())
                .is_some_and(|a| {
                    let names: Vec<String> = a.targets.iter().filter_map(|t| t.dotted()).collect();
                    facts.next_siblings(a.stmt, 2).iter().any(|s| {
                        let mut hit = false;
                        s.walk_exprs(&mut |e| hit |= is_squeeze_of(e, &names));
                        hit
                    })
                });
            if squeezed_now || squeezed_later {
                input.emit(&mut out, "PT-15", c.range(), input.callee_text(c));
            }
        }

        // PT-19: tensors pushed into replay memories
        let is_push = matches!(
            c.method(),
            Some("append" | "push" | "add" | "extend" | "insert" | "put" | "store")
        );
        let memory_like = receiver_dotted(c).is_some_and(|r| {
            let r = r.to_lowercase();
            r.contains("memory") || r.contains("buffer") || r.contains("replay")
        });
        if is_push && memory_like {
            let mut elems: Vec<&Expr> = Vec::new();
            for a in c.args {
                match &a.kind {
                    ExprKind::Tuple(items) | ExprKind::List(items) => elems.extend(items.iter()),
                    _ => elems.push(a),
                }
            }
            if elems
                .iter()
                .any(|e| !is_safe_value(e) && facts.is_tensor_expr(e, c.ctx.function))
            {
                input.emit(&mut out, "PT-19", c.range(), receiver_dotted(c).unwrap_or_default());
            }
        }
    }

    // PT-09: backward-carrying values kept across iterations
    for (lid, backs) in backward_by_loop(facts) {
        let l = &facts.loops[lid];
        if !l.is_training {
            continue;
        }
        let names: BTreeSet<&str> = backs
            .iter()
            .filter_map(|b| b.receiver().and_then(Expr::as_name))
            .collect();
        for name in names {
            for a in facts.assignments_in(l.range) {
                let targets = a.target_names();
                if targets.contains(&name) {
                    continue;
                }
                let accumulates = a.aug.is_some()
                    || targets.iter().any(|t| a.value.mentions_name(t))
                    || a.targets
                        .iter()
                        .any(|t| t.dotted().is_some_and(|d| mentions_dotted(a.value, &d)));
                if accumulates && raw_mention(a.value, name) {
                    input.emit(&mut out, "PT-09", stmt_range(facts, a.stmt), name);
                }
            }
            for c in facts.calls_in(l.range) {
                if matches!(c.method(), Some("append" | "extend")) && c.args.iter().any(|x| raw_mention(x, name)) {
                    input.emit(&mut out, "PT-09", c.range(), name);
                }
            }
        }
    }

    // PT-13: tensors stashed outside save_for_backward
    for (fi, f) in facts.functions.iter().enumerate() {
        if f.kind != FunctionKind::AutogradForward {
            continue;
        }
        let Some(ctx_name) = ctx_param(f) else { continue };
        let params = tensorish_params(f, &ctx_name);
        let locals: HashSet<&str> = facts
            .assignments
            .iter()
            .filter(|a| a.ctx.function == Some(fi))
            .flat_map(|a| a.target_names())
            .collect();
        for a in facts.assignments.iter().filter(|a| a.ctx.function == Some(fi)) {
            let tensorish = params.iter().any(|p| tensor_mention(a.value, p));
            if !tensorish {
                continue;
            }
            for t in &a.targets {
                match &t.kind {
                    ExprKind::Attribute { value, attr } if value.as_name() == Some(ctx_name.as_str()) => {
                        input.emit(
                            &mut out,
                            "PT-13",
                            stmt_range(facts, a.stmt),
                            format!("{ctx_name}.{}", attr.name),
                        );
                    }
                    ExprKind::Subscript { value, .. } => {
                        let root = value.root_name().unwrap_or_default();
                        if root != ctx_name && !params.iter().any(|p| p == root) && !locals.contains(root) {
                            input.emit(&mut out, "PT-13", stmt_range(facts, a.stmt), input.text(value.range));
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    // PT-14: anomaly detection left on
    for c in &facts.calls {
        let enabled = if c.callee.is("torch.autograd.set_detect_anomaly") {
            c.args
                .first()
                .or_else(|| c.keyword("mode"))
                .and_then(Expr::is_truthy_constant)
                == Some(true)
        } else if c.callee.is("torch.autograd.detect_anomaly") {
            c.args.first().and_then(Expr::is_truthy_constant) == Some(true)
        } else {
            false
        };
        if enabled && (c.ctx.is_top_level() || fn_kind(facts, &c.ctx) == Some(FunctionKind::Training)) {
            input.emit(&mut out, "PT-14", c.range(), input.callee_text(c));
        }
    }

    // PT-17: autograd Function without static methods
    for (ci, k) in facts.classes.iter().enumerate() {
        if !k.is_autograd_function {
            continue;
        }
        for f in &facts.functions {
            if f.ctx.class == Some(ci)
                && f.ctx.function.is_none()
                && matches!(f.name.as_str(), "forward" | "backward")
                && !f.has_decorator("staticmethod")
            {
                input.emit(&mut out, "PT-17", f.def.name.range, format!("{}.{}", k.name, f.name));
            }
        }
        for c in facts.calls_in(k.range) {
            if c.func.dotted().as_deref() == Some("self.save_for_backward") {
                input.emit(&mut out, "PT-17", c.range(), format!("{}.save_for_backward", k.name));
            }
        }
    }

    // PT-16: owner stored on its own child
    for a in facts
        .assignments
        .iter()
        .filter(|a| a.ctx.class.is_some() && a.value.as_name() == Some("self"))
    {
        for t in &a.targets {
            if let Some(d) = t.dotted() {
                if d.starts_with("self.") && d.matches('.').count() >= 2 {
                    input.emit(&mut out, "PT-16", stmt_range(facts, a.stmt), d);
                }
            }
        }
    }

    // PT-20: forward intermediates stored on self
    for (fi, f) in facts.functions.iter().enumerate() {
        if f.kind != FunctionKind::ForwardMethod {
            continue;
        }
        let params: Vec<&str> = f.param_names().into_iter().filter(|p| *p != "self").collect();
        let class_range = f.ctx.class.map(|k| facts.classes[k].range).unwrap_or(f.range);
        let registered: HashSet<&str> = facts
            .calls_in(class_range)
            .filter(|c| matches!(c.method(), Some("register_buffer" | "register_parameter")))
            .filter_map(|c| c.args.first().and_then(Expr::str_value))
            .collect();
        for a in facts.assignments.iter().filter(|a| a.ctx.function == Some(fi)) {
            for t in &a.targets {
                let ExprKind::Attribute { value, attr } = &t.kind else {
                    continue;
                };
                if value.as_name() != Some("self") || registered.contains(attr.name.as_str()) {
                    continue;
                }
                if params.iter().any(|p| a.value.mentions_name(p)) {
                    input.emit(
                        &mut out,
                        "PT-20",
                        stmt_range(facts, a.stmt),
                        format!("self.{}", attr.name),
                    );
                }
            }
        }
    }

    // PT-27: del without empty_cache
    for d in &facts.deletes {
        let start = facts.stmts[d.stmt].stmt.range.start;
        let bound: HashSet<&str> = facts
            .assignments
            .iter()
            .filter(|a| a.ctx.function == d.ctx.function && a.aug.is_none() && is_torch_value(facts, a.value))
            .flat_map(|a| a.target_names())
            .collect();
        let released = facts.calls.iter().any(|c| {
            c.callee.is("torch.cuda.empty_cache") && c.ctx.function == d.ctx.function && c.range().start > start
        });
        if released {
            continue;
        }
        for t in d.targets {
            if let Some(n) = t.as_name().filter(|n| bound.contains(n)) {
                input.emit(&mut out, "PT-27", stmt_range(facts, d.stmt), n);
            }
        }
    }
    out
}

fn is_squeeze_of(e: &Expr, names: &[String]) -> bool {
    let ExprKind::Call { func, args, .. } = &e.kind else {
        return false;
    };
    let ExprKind::Attribute { value, attr } = &func.kind else {
        return false;
    };
    if attr.name != "squeeze" {
        return false;
    }
    let is_target = |x: &Expr| x.dotted().is_some_and(|d| names.contains(&d));
    is_target(value) || args.first().is_some_and(is_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::testutil::{ids, run};

    fn grad(src: &str) -> Vec<&'static str> {
        ids(&run(&[src], check_gradient_and_graph))
    }
    fn loops(src: &str) -> Vec<&'static str> {
        ids(&run(&[src], check_loops_and_pipeline))
    }
    fn refs(src: &str) -> Vec<&'static str> {
        ids(&run(&[src], check_references_and_memory))
    }

    #[test]
    fn retain_graph_in_loop_is_pt23_only() {
        let src = "import torch\nfor x in data:\n    opt.zero_grad()\n    loss = model(x)\n    loss.backward(retain_graph=True)\n    opt.step()\n";
        assert_eq!(run(&[src], check_gradient_and_graph), vec![("PT-23", 5)]);
    }

    #[test]
    fn retain_graph_without_second_backward() {
        let src = "import torch\ndef f(loss):\n    loss.backward(retain_graph=True)\n";
        assert_eq!(grad(src), vec!["PT-02"]);
        let ok = "import torch\ndef f(a, b):\n    a.backward(retain_graph=True)\n    b.backward()\n";
        assert!(grad(ok).is_empty());
    }

    #[test]
    fn inference_without_no_grad() {
        let bad = "import torch\ndef predict(model, x):\n    return model(x)\n";
        assert_eq!(grad(bad), vec!["PT-05"]);
        let ok = "import torch\n@torch.no_grad()\ndef predict(model, x):\n    return model(x)\n";
        assert!(grad(ok).is_empty());
        let frozen = "import torch\ndef predict(model, x):\n    for p in model.parameters():\n        p.requires_grad = False\n    return model(x)\n";
        assert!(grad(frozen).is_empty());
    }

    #[test]
    fn eval_then_call_reports_only_pt26() {
        let src = "import torch\ndef evaluate(model, x):\n    model.eval()\n    return model(x)\n";
        assert_eq!(grad(src), vec!["PT-26"]);
        let ok = "import torch\ndef evaluate(model, x):\n    model.eval()\n    with torch.no_grad():\n        return model(x)\n";
        assert!(grad(ok).is_empty());
    }

    #[test]
    fn missing_zero_grad_and_loss_accumulation() {
        let src = "import torch\ntotal = 0\nfor x, y in loader:\n    loss = crit(model(x), y)\n    loss.backward()\n    optimizer.step()\n    total += loss\n";
        assert_eq!(grad(src), vec!["PT-04"]);
        assert_eq!(refs(src), vec!["PT-09"]);
        let ok = "import torch\ntotal = 0\nfor x, y in loader:\n    optimizer.zero_grad()\n    loss = crit(model(x), y)\n    loss.backward()\n    optimizer.step()\n    total += loss.item()\n";
        assert!(grad(ok).is_empty());
        assert!(refs(ok).is_empty());
    }

    #[test]
    fn autograd_function_smells() {
        let src = "import torch\nclass F(torch.autograd.Function):\n    def forward(self, ctx, x):\n        ctx.x = x\n        return x * 2\n    @staticmethod\n    def backward(ctx, g):\n        return g * ctx.x\n";
        assert_eq!(run(&[src], check_gradient_and_graph), vec![("PT-21", 8)]);
        assert_eq!(
            run(&[src], check_references_and_memory),
            vec![("PT-13", 4), ("PT-17", 3)]
        );
        let ok = "import torch\nclass F(torch.autograd.Function):\n    @staticmethod\n    def forward(ctx, x, alpha=1.0):\n        ctx.save_for_backward(x)\n        ctx.alpha = alpha\n        ctx.shape = x.shape\n        return x * alpha\n    @staticmethod\n    def backward(ctx, g):\n        (x,) = ctx.saved_tensors\n        return g * ctx.alpha, None\n";
        assert!(grad(ok).is_empty());
        assert!(refs(ok).is_empty());
    }

    #[test]
    fn anomaly_and_nested_grad_and_running_stats() {
        assert_eq!(
            refs("import torch\ntorch.autograd.set_detect_anomaly(True)\n"),
            vec!["PT-14"]
        );
        assert!(refs("import torch\ntorch.autograd.set_detect_anomaly(False)\n").is_empty());
        let nested = "import torch\ng = torch.autograd.grad(torch.autograd.grad(y, x)[0].sum(), x)\n";
        assert_eq!(grad(nested), vec!["PT-24"]);
        let ok = "import torch\ng = torch.autograd.grad(torch.autograd.grad(y, x, create_graph=True)[0].sum(), x)\n";
        assert!(grad(ok).is_empty());
        let stats = "import torch\nclass BN(torch.nn.Module):\n    def forward(self, x):\n        self.running_mean = 0.9 * self.running_mean + 0.1 * x.mean(0)\n        return x\n";
        assert_eq!(grad(stats), vec!["PT-25"]);
        let fixed = stats.replace("x.mean(0)\n", "x.mean(0).detach()\n");
        assert!(grad(&fixed).is_empty());
    }

    #[test]
    fn cycle_of_loader_hits_both_rules() {
        let src = "import itertools\nimport torch\nfor batch in itertools.cycle(loader):\n    step(batch)\n";
        assert_eq!(loops(src), vec!["PT-03", "PT-10"]);
        let zipped = "import torch\nfor a, b in zip(train_loader, aux_loader):\n    pass\n";
        assert_eq!(loops(zipped), vec!["PT-10"]);
    }

    #[test]
    fn per_iteration_construction() {
        let src = "import torch\nfrom torch.utils.data import DataLoader\nfor epoch in range(3):\n    dl = DataLoader(ds, batch_size=4096)\n    g = torch.distributed.new_group([0, 1])\n    t = torch.jit.trace(m, x)\n";
        let mut got = loops(src);
        got.sort();
        assert_eq!(got, vec!["PT-08", "PT-22", "PT-28", "PT-30"]);
        let pw = "import torch\ndl = torch.utils.data.DataLoader(ds, persistent_workers=True, num_workers=0)\n";
        assert_eq!(loops(pw), vec!["PT-08"]);
    }

    #[test]
    fn growth_and_products_in_loops() {
        let src = "import torch\nout = torch.zeros(0)\nacc = 0\nfor x in xs:\n    out = torch.cat([out, x])\n    acc += torch.mm(x, w)\n";
        assert_eq!(loops(src), vec!["PT-11"]);
        assert_eq!(refs(src), vec!["PT-18"]);
        let ok = "import torch\nparts = []\nfor x in xs:\n    parts.append(x)\nout = torch.cat(parts)\n";
        assert!(loops(ok).is_empty());
    }

    #[test]
    fn modules_in_training_loop_and_inference_collection() {
        let src = "import torch\nfor x in data:\n    enc = torch.nn.Linear(4, 4)\n    loss = enc(x).sum()\n    loss.backward()\n";
        assert_eq!(loops(src), vec!["PT-29"]);
        let inf = "import torch\ndef predict(model, xs):\n    out = []\n    for x in xs:\n        out.append(model(x))\n    return out\n";
        assert_eq!(refs(inf), vec!["PT-06"]);
        let ok = inf.replace("model(x))", "model(x).cpu())");
        assert!(refs(&ok).is_empty());
    }

    #[test]
    fn hooks_caches_and_cycles() {
        let src = "import torch\nm.register_forward_hook(fn)\nh = m.register_forward_hook(fn)\nk = m.register_forward_hook(fn)\nk.remove()\n";
        assert_eq!(
            run(&[src], check_references_and_memory),
            vec![("PT-07", 2), ("PT-07", 3)]
        );
        let cache = "import torch\nclass M(torch.nn.Module):\n    def forward(self, x):\n        self.cache[len(self.cache)] = self.f(x)\n        return x\n";
        assert_eq!(refs(cache), vec!["PT-01"]);
        let cyc = "import torch\nclass M(torch.nn.Module):\n    def __init__(self):\n        self.buf.owner = self\n";
        assert_eq!(refs(cyc), vec!["PT-16"]);
    }

    #[test]
    fn keepdim_squeeze_and_forward_state() {
        let src = "import torch\ny = torch.sum(x, 1, keepdim=True)\nz = y + 1\nw = y.squeeze(1)\n";
        assert_eq!(refs(src), vec!["PT-15"]);
        let far = "import torch\ny = torch.sum(x, 1, keepdim=True)\na = 1\nb = 2\nw = y.squeeze(1)\n";
        assert!(refs(far).is_empty());
        let fwd = "import torch\nclass M(torch.nn.Module):\n    def forward(self, x):\n        self.h = x * 2\n        return self.h\n";
        assert_eq!(refs(fwd), vec!["PT-20"]);
        let reg = "import torch\nclass M(torch.nn.Module):\n    def __init__(self):\n        self.register_buffer('h', None)\n    def forward(self, x):\n        self.h = x * 2\n        return self.h\n";
        assert!(refs(reg).is_empty());
    }

    #[test]
    fn del_without_empty_cache_and_replay_memory() {
        let src = "import torch\nx = torch.randn(1000, 1000)\ndel x\n";
        assert_eq!(refs(src), vec!["PT-27"]);
        let ok = "import torch\nx = torch.randn(1000, 1000)\ndel x\ntorch.cuda.empty_cache()\n";
        assert!(refs(ok).is_empty());
        let mem = "import torch\ndef step(memory):\n    s = torch.tensor([1.0])\n    memory.push(s)\n    memory.push(s.cpu())\n";
        assert_eq!(run(&[mem], check_references_and_memory), vec![("PT-19", 4)]);
    }

    #[test]
    fn notebook_globals() {
        let cells = ["import torch", "big = torch.randn(10000, 10000)", "print(big.sum())"];
        assert_eq!(run(&cells, check_references_and_memory), vec![("PT-12", 2)]);
        let cells = ["import torch", "big = torch.randn(10000, 10000)", "%xdel big"];
        assert!(run(&cells, check_references_and_memory).is_empty());
        let script = "import torch\nbig = torch.randn(10000, 10000)\n";
        assert!(refs(script).is_empty());
    }
}
