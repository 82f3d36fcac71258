//! TensorFlow and Keras detectors (TK-01 to TK-16).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{binding_assignment, call_chain, RawFinding, RuleInput};
use crate::facts::{CallSite, FileFacts};
use crate::frontend::ast::{BinOp, Expr, ExprKind, StmtKind};
use crate::frontend::{Qualified, TextRange};

const GRAPH_OPS: &[&str] = &[
    "constant",
    "Variable",
    "get_variable",
    "add",
    "subtract",
    "multiply",
    "divide",
    "matmul",
    "assign",
    "reduce_sum",
    "reduce_mean",
    "concat",
    "reshape",
    "square",
    "zeros",
    "ones",
    "random_normal",
    "random_uniform",
    "placeholder",
];
const PRIMITIVES: &[&str] = &[
    "reshape",
    "multiply",
    "matmul",
    "add",
    "subtract",
    "divide",
    "concat",
    "expand_dims",
    "squeeze",
    "transpose",
    "reduce_sum",
    "reduce_mean",
    "reduce_max",
    "square",
    "sqrt",
    "exp",
    "log",
    "tile",
    "stack",
    "split",
    "gather",
    "cast",
    "abs",
    "maximum",
    "minimum",
    "sigmoid",
    "tanh",
    "relu",
    "softmax",
];
const SHAPE_CTORS: &[&str] = &[
    "zeros",
    "ones",
    "fill",
    "empty",
    "normal",
    "uniform",
    "random_normal",
    "random_uniform",
];
const RESHAPES: &[&str] = &["reshape", "expand_dims", "squeeze", "broadcast_to"];
const CUDA_KEYS: &[&str] = &["LD_LIBRARY_PATH", "LD_CONFIG_PATH", "PATH", "CUDA_HOME", "CUDA_PATH"];
const MODEL_WORDS: &[&str] = &["generator", "discriminator", "model"];

fn under_tf(q: &Qualified) -> bool {
    q.under("tensorflow") || q.under("keras")
}

/// TensorFlow op outside the Keras namespace.
fn is_tf_op(q: &Qualified) -> bool {
    q.under("tensorflow") && !q.under("tensorflow.keras")
}

fn stmt_range(facts: &FileFacts, stmt: usize) -> TextRange {
    facts.stmts[stmt].stmt.range
}

fn is_clear_session(c: &CallSite) -> bool {
    c.last_segment() == Some("clear_session")
}

fn is_gc_collect(c: &CallSite) -> bool {
    c.callee.is("gc.collect")
}

fn receiver_dotted(c: &CallSite) -> Option<String> {
    c.receiver().and_then(Expr::dotted)
}

fn callee_of(e: &Expr) -> Option<&Expr> {
    match &e.kind {
        ExprKind::Call { func, .. } => Some(func),
        _ => None,
    }
}

/// `Sequential(...)`, `Model(...)`, `load_model(...)` or an in-file Keras model class.
fn builds_model_direct(facts: &FileFacts, e: &Expr) -> bool {
    let Some(func) = callee_of(e) else { return false };
    let q = facts.qualify(func);
    (under_tf(&q) && matches!(q.last_segment(), Some("Sequential" | "Model" | "load_model")))
        || func
            .as_name()
            .and_then(|n| facts.class_named(n))
            .is_some_and(|k| k.is_keras_model)
}

/// Model-building call, including in-file factories that build a model and
/// unresolved builder functions whose result is bound to a model-like name.
fn builds_model(facts: &FileFacts, e: &Expr) -> bool {
    if builds_model_direct(facts, e) {
        return true;
    }
    let Some(func) = callee_of(e) else { return false };
    if let Some(n) = func.as_name() {
        if let Some(fi) = facts.functions.iter().position(|f| f.name == n) {
            return facts
                .calls
                .iter()
                .any(|c| c.ctx.function == Some(fi) && builds_model_direct(facts, c.expr));
        }
    }
    if facts.qualify(func) != Qualified::Unknown {
        return false;
    }
    let Some(last) = func.dotted().map(|d| super::last_lower(&d)) else {
        return false;
    };
    let builder = ["build", "create", "make"].iter().any(|w| last.contains(w));
    let model_bound = binding_assignment(facts, e)
        .is_some_and(|a| a.target_names().iter().any(|n| n.to_lowercase().contains("model")));
    builder && (last.contains("model") || model_bound)
}

/// True for files written against the graph-mode API.
fn graph_mode(facts: &FileFacts) -> bool {
    facts
        .aliases
        .canonical_names()
        .iter()
        .any(|n| n.starts_with("tensorflow.compat.v1"))
        || facts.calls.iter().any(|c| {
            c.callee.under("tensorflow.compat.v1")
                || (c.callee.under("tensorflow")
                    && matches!(
                        c.callee.last_segment(),
                        Some("Session" | "InteractiveSession" | "placeholder")
                    ))
        })
}

fn loop_header(facts: &FileFacts, lid: usize) -> TextRange {
    let l = &facts.loops[lid];
    let end = match &l.stmt.kind {
        StmtKind::For { iter, .. } => iter.range.end,
        StmtKind::While { test, .. } => test.range.end,
        _ => l.range.end,
    };
    TextRange {
        start: l.range.start,
        end,
    }
}

fn releases(facts: &FileFacts, range: TextRange, name: &str) -> bool {
    facts.calls_in(range).any(|c| {
        is_clear_session(c)
            || (matches!(c.method(), Some("close" | "dispose")) && receiver_dotted(c).as_deref() == Some(name))
    }) || facts.deletes.iter().any(|d| {
        range.contains(stmt_range(facts, d.stmt)) && d.targets.iter().any(|t| t.dotted().as_deref() == Some(name))
    }) || facts
        .with_blocks
        .iter()
        .any(|w| range.contains(w.item.context.range) && w.item.context.mentions_name(name))
}

/// Model and session lifetimes: TK-01, TK-04, TK-06, TK-07, TK-08, TK-11, TK-13.
pub fn check_sessions_and_resources(input: &RuleInput) -> Vec<RawFinding> {
    let facts = input.facts;
    let mut out = Vec::new();
    let graph = graph_mode(facts);

    for c in &facts.calls {
        let Some(lid) = c.ctx.innermost_loop() else { continue };
        let body = facts.loops[lid].range;

        // TK-04: models rebuilt per iteration
        if builds_model(facts, c.expr) {
            if !facts.calls_in(body).any(is_clear_session) {
                input.emit(&mut out, "TK-04", c.range(), input.callee_text(c));
            }
            continue;
        }

        // TK-01: per-iteration resources never released
        let layer = (c.callee.under("tensorflow.keras.layers") || c.callee.under("keras.layers"))
            && c.callee
                .last_segment()
                .is_some_and(|s| s.starts_with(|ch: char| ch.is_ascii_uppercase()));
        let variable = !graph && is_tf_op(&c.callee) && c.callee.last_segment() == Some("Variable");
        let file = c.func.as_name() == Some("open") && c.callee == Qualified::Unknown;
        if !(layer || variable || file) {
            continue;
        }
        let Some(a) = binding_assignment(facts, c.expr) else {
            continue;
        };
        for n in a.target_names() {
            if !releases(facts, body, n) {
                input.emit(&mut out, "TK-01", c.range(), n);
            }
        }
    }

    // TK-06: loop-carried tensors rebound without disposal
    for a in facts.assignments.iter().filter(|a| a.aug.is_none()) {
        let Some(lid) = a.ctx.innermost_loop() else { continue };
        let l = &facts.loops[lid];
        let tensor = call_chain(a.value)
            .iter()
            .any(|x| callee_of(x).is_some_and(|f| is_tf_op(&facts.qualify(f))));
        if !tensor {
            continue;
        }
        for v in a.target_names() {
            let prior = facts.assignments.iter().any(|p| {
                p.ctx.function == a.ctx.function && p.value.range.end <= l.range.start && p.target_names().contains(&v)
            });
            if prior && !releases(facts, l.range, v) {
                input.emit(&mut out, "TK-06", stmt_range(facts, a.stmt), v);
            }
        }
    }

    // TK-07: sessions never closed
    for c in &facts.calls {
        if !(c.callee.under("tensorflow") && matches!(c.callee.last_segment(), Some("Session" | "InteractiveSession")))
        {
            continue;
        }
        if facts.with_blocks.iter().any(|w| w.item.context.range == c.range()) {
            continue;
        }
        let leaked = match facts.assignments.iter().find(|a| a.value.range == c.range()) {
            Some(a) => a.targets.iter().filter_map(|t| t.dotted()).any(|n| {
                let closed = facts
                    .calls
                    .iter()
                    .any(|x| x.method() == Some("close") && receiver_dotted(x).as_deref() == Some(&n));
                let scoped = facts
                    .with_blocks
                    .iter()
                    .any(|w| w.item.context.dotted().as_deref() == Some(&n));
                !closed && !scoped
            }),
            None => true,
        };
        if leaked {
            input.emit(&mut out, "TK-07", c.range(), input.callee_text(c));
        }
    }

    // TK-08: augmentation buffers that only grow
    for (fi, f) in facts.functions.iter().enumerate() {
        if !f.name.to_lowercase().contains("augment") {
            continue;
        }
        for l in facts.loops.iter().filter(|l| l.ctx.function == Some(fi)) {
            for c in facts.calls_in(l.range) {
                if !matches!(c.method(), Some("append" | "extend"))
                    || !c.args.first().is_some_and(|a| matches!(a.kind, ExprKind::Call { .. }))
                {
                    continue;
                }
                let Some(coll) = c.receiver().and_then(Expr::as_name) else {
                    continue;
                };
                let local_to_loop = facts.assignments_in(l.range).any(|a| a.target_names().contains(&coll));
                let cleared = facts
                    .calls_in(f.range)
                    .any(|x| x.method() == Some("clear") && receiver_dotted(x).as_deref() == Some(coll))
                    || facts.deletes.iter().any(|d| {
                        f.range.contains(stmt_range(facts, d.stmt))
                            && d.targets.iter().any(|t| t.root_name() == Some(coll))
                    });
                if !local_to_loop && !cleared {
                    input.emit(&mut out, "TK-08", c.range(), coll);
                }
            }
        }
    }

    // TK-11: models dropped without clearing the session
    let cleanup_after = |function: Option<usize>, start: u32| {
        facts
            .calls
            .iter()
            .any(|c| (is_clear_session(c) || is_gc_collect(c)) && c.ctx.function == function && c.range().start > start)
    };
    let bindings = facts.bindings();
    for d in &facts.deletes {
        let start = stmt_range(facts, d.stmt).start;
        for t in d.targets {
            let Some(n) = t.as_name() else { continue };
            let model = n.to_lowercase().contains("model")
                || bindings
                    .get(n)
                    .is_some_and(|vs| vs.iter().any(|v| call_chain(v).iter().any(|x| builds_model(facts, x))));
            if model && !cleanup_after(d.ctx.function, start) {
                input.emit(&mut out, "TK-11", stmt_range(facts, d.stmt), n);
            }
        }
    }
    for (fi, f) in facts.functions.iter().enumerate() {
        let own = |c: &&CallSite| c.ctx.function == Some(fi);
        let Some(build) = facts.calls.iter().filter(own).find(|c| builds_model(facts, c.expr)) else {
            continue;
        };
        let fits = facts.calls.iter().filter(own).any(|c| c.method() == Some("fit"));
        let called_in_loop = facts.calls.iter().any(|c| {
            c.ctx.in_loop()
                && (c.func.as_name() == Some(f.name.as_str())
                    || (c.method() == Some(f.name.as_str()) && c.receiver().and_then(Expr::as_name) == Some("self")))
        });
        if fits && called_in_loop && !cleanup_after(Some(fi), build.range().start) {
            input.emit(&mut out, "TK-11", f.def.name.range, f.name.clone());
        }
    }

    // TK-13: several models rebuilt in one loop
    for lid in 0..facts.loops.len() {
        let l = &facts.loops[lid];
        let inner = |ctx: &crate::facts::Context| ctx.innermost_loop() == Some(lid);
        let model_word = |d: &str| {
            let last = super::last_lower(d);
            MODEL_WORDS.iter().any(|w| last.contains(w))
        };
        let mut names: BTreeSet<String> = BTreeSet::new();
        for a in facts
            .assignments_in(l.range)
            .filter(|a| inner(&a.ctx) && a.aug.is_none())
        {
            if matches!(a.value.kind, ExprKind::Call { .. }) {
                names.extend(
                    a.target_names()
                        .into_iter()
                        .filter(|n| model_word(n))
                        .map(str::to_lowercase),
                );
            }
        }
        for c in facts
            .calls_in(l.range)
            .filter(|c| inner(&c.ctx) && c.method() == Some("compile"))
        {
            if let Some(r) = receiver_dotted(c).filter(|r| model_word(r)) {
                names.insert(super::last_lower(&r));
            }
        }
        if names.len() >= 2 && !facts.calls_in(l.range).any(is_clear_session) {
            let subject = names.into_iter().collect::<Vec<_>>().join(", ");
            input.emit(&mut out, "TK-13", loop_header(facts, lid), subject);
        }
    }

    out
}

/// Rank of a literal-constructed array, when visible.
fn literal_rank(facts: &FileFacts, e: &Expr) -> Option<usize> {
    let ExprKind::Call { func, args, keywords } = &e.kind else {
        return None;
    };
    let q = facts.qualify(func);
    if !(q.under("tensorflow") || q.under("numpy")) {
        return None;
    }
    let last = q.last_segment()?;
    let shape_rank = |s: &Expr| match &s.kind {
        ExprKind::Tuple(items) | ExprKind::List(items) => Some(items.len()),
        _ => s.int_value().map(|_| 1),
    };
    if SHAPE_CTORS.contains(&last) {
        let shape = args.first().or_else(|| {
            keywords
                .iter()
                .find(|k| k.arg.as_ref().is_some_and(|a| a.name == "shape"))
                .map(|k| &k.value)
        })?;
        return shape_rank(shape);
    }
    match last {
        "rand" | "randn" if args.iter().all(|a| a.int_value().is_some()) => Some(args.len()),
        "constant" | "array" => args.first().and_then(nesting_depth),
        _ => None,
    }
}

fn nesting_depth(e: &Expr) -> Option<usize> {
    match &e.kind {
        ExprKind::List(items) | ExprKind::Tuple(items) => match items.first() {
            Some(first) => nesting_depth(first).map(|d| d + 1),
            None => Some(1),
        },
        ExprKind::Constant(_) | ExprKind::UnaryOp { .. } => Some(0),
        _ => None,
    }
}

fn is_file_load(facts: &FileFacts, e: &Expr) -> bool {
    call_chain(e).iter().any(|c| {
        let Some(func) = callee_of(c) else { return false };
        let last = func
            .dotted()
            .map(|d| super::last_lower(&d))
            .or_else(|| facts.qualify(func).last_segment().map(str::to_lowercase))
            .unwrap_or_default();
        last.contains("load") || last.contains("read") || last == "open" || last == "fromfile"
    })
}

/// Graph growth and API misuse: TK-02, TK-03, TK-09, TK-10, TK-12.
pub fn check_graph_and_api(input: &RuleInput) -> Vec<RawFinding> {
    let facts = input.facts;
    let mut out = Vec::new();

    // TK-02: raw ops wired into Keras models
    let in_layer = |class: Option<usize>| class.is_some_and(|k| facts.classes[k].is_layer_subclass);
    let mut functional: HashSet<&str> = HashSet::new();
    for a in facts.assignments.iter().filter(|a| !in_layer(a.ctx.class)) {
        let is_input = callee_of(a.value).is_some_and(|f| {
            let q = facts.qualify(f);
            under_tf(&q) && q.last_segment() == Some("Input")
        });
        if is_input || functional.iter().any(|n| a.value.mentions_name(n)) {
            functional.extend(a.target_names());
        }
    }
    let primitive = |q: &Qualified| is_tf_op(q) && q.last_segment().is_some_and(|s| PRIMITIVES.contains(&s));
    for c in &facts.calls {
        if in_layer(c.ctx.class) {
            continue;
        }
        if primitive(&c.callee) && c.args.iter().any(|a| functional.iter().any(|n| a.mentions_name(n))) {
            input.emit(&mut out, "TK-02", c.range(), input.callee_text(c));
        }
        if under_tf(&c.callee) && c.callee.last_segment() == Some("Sequential") {
            if let Some(ExprKind::List(items)) = c.args.first().map(|a| &a.kind) {
                for item in items {
                    let target = callee_of(item).unwrap_or(item);
                    if primitive(&facts.qualify(target)) {
                        input.emit(&mut out, "TK-02", item.range, input.text(target.range));
                    }
                }
            }
        }
    }

    // TK-03: complex or repeated Lambda layers
    for c in &facts.calls {
        if !(under_tf(&c.callee) && c.callee.last_segment() == Some("Lambda")) {
            continue;
        }
        let callable = c.args.first().or_else(|| c.keyword("function"));
        let complex = match callable.map(|x| &x.kind) {
            Some(ExprKind::Name(n)) => facts.functions.iter().position(|f| &f.name == n).is_some_and(|fi| {
                facts.loops.iter().any(|l| l.ctx.function == Some(fi))
                    || facts.calls.iter().filter(|x| x.ctx.function == Some(fi)).count() >= 3
            }),
            Some(ExprKind::Lambda { body, .. }) => {
                let mut calls = 0;
                body.walk(&mut |e| calls += matches!(e.kind, ExprKind::Call { .. }) as usize);
                calls >= 3
            }
            _ => false,
        };
        if complex || c.ctx.in_loop() {
            let subject = callable
                .map(|x| input.text(x.range))
                .unwrap_or_else(|| input.callee_text(c));
            input.emit(&mut out, "TK-03", c.range(), subject);
        }
    }

    // TK-09: graph-mode nodes added per iteration
    if graph_mode(facts) {
        for c in facts.calls.iter().filter(|c| c.ctx.in_loop()) {
            if !(is_tf_op(&c.callee) && c.callee.last_segment().is_some_and(|s| GRAPH_OPS.contains(&s))) {
                continue;
            }
            let isolated = c.ctx.loops.iter().any(|&lid| {
                let r = facts.loops[lid].range;
                facts
                    .calls_in(r)
                    .any(|g| is_tf_op(&g.callee) && g.callee.last_segment() == Some("Graph"))
                    || facts.with_blocks.iter().any(|w| {
                        r.contains(w.item.context.range)
                            && callee_of(&w.item.context).is_some_and(
                                |f| matches!(&f.kind, ExprKind::Attribute { attr, .. } if attr.name == "as_default"),
                            )
                    })
            });
            if !isolated {
                input.emit(&mut out, "TK-09", c.range(), input.callee_text(c));
            }
        }
    }

    // TK-10: large data embedded as graph constants
    let bindings = facts.bindings();
    for c in &facts.calls {
        if !(is_tf_op(&c.callee) && c.callee.last_segment() == Some("constant")) {
            continue;
        }
        let Some(arg) = c.args.first().or_else(|| c.keyword("value")) else {
            continue;
        };
        let loaded = match arg.as_name() {
            Some(n) => bindings
                .get(n)
                .is_some_and(|vs| vs.iter().any(|v| is_file_load(facts, v))),
            None => is_file_load(facts, arg),
        };
        let literal = matches!(
            arg.kind,
            ExprKind::List(_) | ExprKind::Tuple(_) | ExprKind::Dict { .. } | ExprKind::Constant(_)
        ) && arg.range.end - arg.range.start > input.thresholds.constant_size as u32;
        if loaded || literal {
            let subject = if literal {
                format!("{} characters", arg.range.end - arg.range.start)
            } else {
                input.text(arg.range).to_string()
            };
            input.emit(&mut out, "TK-10", c.range(), subject);
        }
    }

    // TK-12: arithmetic across literal shapes of different rank
    let mut ranks: HashMap<(Option<usize>, &str), Vec<Option<usize>>> = HashMap::new();
    for a in facts.assignments.iter().filter(|a| a.aug.is_none()) {
        let r = literal_rank(facts, a.value);
        for n in a.target_names() {
            ranks.entry((a.ctx.function, n)).or_default().push(r);
        }
    }
    let rank_of = |f: Option<usize>, n: &str| match ranks.get(&(f, n)).map(Vec::as_slice) {
        Some([Some(r)]) => Some(*r),
        _ => None,
    };
    let reshaped = |scope: TextRange, n: &str| {
        facts.calls_in(scope).any(|c| {
            c.last_segment().is_some_and(|s| RESHAPES.contains(&s))
                && (c.receiver().and_then(Expr::as_name) == Some(n) || c.args.iter().any(|a| a.mentions_name(n)))
        })
    };
    let mut seen = BTreeSet::new();
    for s in &facts.stmts {
        let scope = facts.scope_range(&s.ctx);
        for root in s.stmt.own_exprs() {
            root.walk(&mut |e| {
                let pair = match &e.kind {
                    ExprKind::BinOp {
                        left,
                        op: BinOp::Add | BinOp::Sub | BinOp::Mult | BinOp::Div | BinOp::FloorDiv | BinOp::Mod | BinOp::Pow,
                        right,
                    } => {
                        left.as_name().zip(right.as_name())
                    }
                    ExprKind::Call { func, args, .. } if args.len() == 2 => {
                        let q = facts.qualify(func);
                        if is_tf_op(&q) && matches!(q.last_segment(), Some("add" | "subtract" | "multiply" | "divide")) {
                            args[0].as_name().zip(args[1].as_name())
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                let Some((a, b)) = pair else { return };
                let (Some(ra), Some(rb)) = (rank_of(s.ctx.function, a), rank_of(s.ctx.function, b)) else { return };
                if ra != rb && !reshaped(scope, a) && !reshaped(scope, b) && seen.insert(e.range) {
                    input.emit(&mut out, "TK-12", e.range, format!("{a} (rank {ra}) and {b} (rank {rb})"));
                }
            });
        }
    }

    out
}

/// CUDA version numbers mentioned in a path string (`cuda-10.0`, `cuda/11.2`).
fn cuda_versions(s: &str) -> Vec<String> {
    let lower = s.to_lowercase();
    let mut out = Vec::new();
    let mut rest = lower.as_str();
    while let Some(i) = rest.find("cuda") {
        rest = &rest[i + 4..];
        let tail = rest.trim_start_matches(['-', '_', '/', 'v']);
        let version: String = tail.chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
        let version = version.trim_end_matches('.');
        if !version.is_empty() {
            out.push(version.to_string());
        }
    }
    out
}

fn strings_in(e: &Expr) -> Vec<&str> {
    let mut out = Vec::new();
    e.walk(&mut |x| out.extend(x.str_value()));
    out
}

/// Iterator pipelines, batch sizes and environment: TK-05, TK-14, TK-15, TK-16.
pub fn check_pipeline_and_env(input: &RuleInput) -> Vec<RawFinding> {
    let facts = input.facts;
    let mut out = Vec::new();

    // TK-05: Dataset handed to predict per iteration
    let mut datasets: HashSet<&str> = HashSet::new();
    for a in facts.assignments.iter().filter(|a| a.aug.is_none()) {
        let chain = call_chain(a.value);
        let from_tf = chain
            .iter()
            .any(|x| callee_of(x).is_some_and(|f| facts.qualify(f).under("tensorflow.data")));
        let from_ds = chain
            .last()
            .and_then(|root| callee_of(root))
            .is_some_and(|f| match &f.kind {
                ExprKind::Attribute { value, .. } => value.as_name().is_some_and(|n| datasets.contains(n)),
                _ => false,
            });
        if from_tf || from_ds {
            datasets.extend(a.target_names());
        }
    }
    for c in facts
        .calls
        .iter()
        .filter(|c| c.ctx.in_loop() && c.method() == Some("predict"))
    {
        if let Some(n) = c.args.first().and_then(Expr::as_name).filter(|n| datasets.contains(n)) {
            input.emit(&mut out, "TK-05", c.range(), n);
        }
    }

    for c in &facts.calls {
        // TK-14: oversized batches
        if matches!(c.method(), Some("fit" | "predict" | "evaluate")) {
            if let Some(b) = c.keyword("batch_size").and_then(Expr::int_value) {
                if b >= input.thresholds.batch_size {
                    input.emit(&mut out, "TK-14", c.range(), format!("batch_size={b}"));
                }
            }
        }

        // TK-16: GridSearchCV across all cores
        if c.last_segment() == Some("GridSearchCV") && c.keyword("n_jobs").and_then(Expr::int_value) == Some(-1) {
            input.emit(&mut out, "TK-16", c.range(), input.callee_text(c));
        }
    }

    // TK-15: CUDA paths pointing at different installations
    let mut writes: Vec<(TextRange, &Expr)> = Vec::new();
    let is_environ = |e: &Expr| facts.qualify(e).is("os.environ");
    let cuda_key = |e: &Expr| e.str_value().is_some_and(|k| CUDA_KEYS.contains(&k));
    for a in &facts.assignments {
        for t in &a.targets {
            if let ExprKind::Subscript { value, slice } = &t.kind {
                if is_environ(value) && cuda_key(slice) {
                    writes.push((stmt_range(facts, a.stmt), a.value));
                }
            }
        }
    }
    for c in &facts.calls {
        let on_environ = c.receiver().is_some_and(is_environ);
        match c.method() {
            Some("setdefault") if on_environ && c.args.first().is_some_and(cuda_key) => {
                if let Some(v) = c.args.get(1) {
                    writes.push((c.range(), v));
                }
            }
            Some("putenv") if c.callee.is("os.putenv") && c.args.first().is_some_and(cuda_key) => {
                if let Some(v) = c.args.get(1) {
                    writes.push((c.range(), v));
                }
            }
            Some("update") if on_environ => {
                if let Some(ExprKind::Dict { keys, values }) = c.args.first().map(|a| &a.kind) {
                    for (k, v) in keys.iter().zip(values) {
                        if k.as_ref().is_some_and(cuda_key) {
                            writes.push((c.range(), v));
                        }
                    }
                }
            }
            _ => {}
        }
    }
    writes.sort_by_key(|w| w.0.start);
    let mut first: Option<String> = None;
    let mut reported: BTreeMap<u32, ()> = BTreeMap::new();
    for (range, value) in writes {
        for s in strings_in(value) {
            for v in cuda_versions(s) {
                match &first {
                    None => first = Some(v),
                    Some(f) if *f != v && reported.insert(range.start, ()).is_none() => {
                        input.emit(&mut out, "TK-15", range, format!("{f} vs {v}"));
                    }
                    _ => {}
                }
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::testutil::{ids, run};

    fn sessions(src: &str) -> Vec<&'static str> {
        ids(&run(&[src], check_sessions_and_resources))
    }
    fn graph(src: &str) -> Vec<&'static str> {
        ids(&run(&[src], check_graph_and_api))
    }
    fn pipeline(src: &str) -> Vec<&'static str> {
        ids(&run(&[src], check_pipeline_and_env))
    }

    #[test]
    fn model_rebuilt_in_loop() {
        let src = "import tensorflow as tf\nfor i in range(5):\n    model = build()\n    model.fit(x, y)\n";
        assert_eq!(run(&[src], check_sessions_and_resources), vec![("TK-04", 3)]);
        let ok = "import tensorflow as tf\nfor i in range(5):\n    tf.keras.backend.clear_session()\n    model = build()\n    model.fit(x, y)\n";
        assert!(sessions(ok).is_empty());
        let local = "from tensorflow import keras\ndef make():\n    return keras.Sequential([])\nfor i in range(3):\n    m = make()\n";
        assert_eq!(sessions(local), vec!["TK-04"]);
    }

    #[test]
    fn sessions_closed_or_scoped() {
        assert_eq!(
            sessions("import tensorflow as tf\nsess = tf.Session()\n"),
            vec!["TK-07"]
        );
        assert!(sessions("import tensorflow as tf\nwith tf.Session() as s:\n    pass\n").is_empty());
        assert!(sessions("import tensorflow as tf\nsess = tf.compat.v1.Session()\nsess.close()\n").is_empty());
        assert!(sessions(
            "from sklearn.model_selection import GridSearchCV\nimport keras\nGridSearchCV(est, grid, n_jobs=-1)\n"
        )
        .is_empty());
    }

    #[test]
    fn loop_resources_and_tensor_rebinding() {
        let src = "import tensorflow as tf\nfor p in paths:\n    f = open(p)\n    d = tf.keras.layers.Dense(3)\n    d2 = tf.keras.layers.Dense(3)\n    del d2\n";
        assert_eq!(
            run(&[src], check_sessions_and_resources),
            vec![("TK-01", 3), ("TK-01", 4)]
        );
        let rebind = "import tensorflow as tf\nacc = tf.zeros([3])\nfor x in xs:\n    acc = tf.add(acc, x)\n";
        assert_eq!(sessions(rebind), vec!["TK-06"]);
        let fresh = "import tensorflow as tf\nfor x in xs:\n    y = tf.add(x, 1)\n";
        assert!(sessions(fresh).is_empty());
    }

    #[test]
    fn augmentation_buffers_and_model_deletion() {
        let src = "import tensorflow as tf\nimages = []\ndef augment_all(xs):\n    for x in xs:\n        images.append(flip(x))\n";
        assert_eq!(sessions(src), vec!["TK-08"]);
        let ok = "import tensorflow as tf\ndef augment_all(xs):\n    out = []\n    for x in xs:\n        out.append(flip(x))\n    out.clear()\n";
        assert!(sessions(ok).is_empty());
        assert_eq!(sessions("import tensorflow as tf\ndel model\n"), vec!["TK-11"]);
        assert!(sessions("import gc\nimport tensorflow as tf\ndel model\ngc.collect()\n").is_empty());
    }

    #[test]
    fn gan_models_recompiled() {
        let src = "import keras\nfor epoch in range(10):\n    generator.compile(loss='mse')\n    discriminator.compile(loss='mse')\n";
        assert_eq!(run(&[src], check_sessions_and_resources), vec![("TK-13", 2)]);
        let ok = "import keras\nfor epoch in range(10):\n    keras.backend.clear_session()\n    generator.compile(loss='mse')\n    discriminator.compile(loss='mse')\n";
        assert!(sessions(ok).is_empty());
    }

    #[test]
    fn graph_growth_needs_graph_mode() {
        let src = "import tensorflow as tf\nsess = tf.Session()\nfor i in range(10):\n    c = tf.constant(i)\n";
        assert_eq!(graph(src), vec!["TK-09"]);
        let eager = "import tensorflow as tf\nfor i in range(10):\n    c = tf.constant(i)\n";
        assert!(graph(eager).is_empty());
        let isolated = "import tensorflow as tf\nsess = tf.Session()\nfor i in range(10):\n    g = tf.Graph()\n    with g.as_default():\n        c = tf.constant(i)\n";
        assert!(graph(isolated).is_empty());
    }

    #[test]
    fn constants_lambdas_and_primitives() {
        let src = "import numpy as np\nimport tensorflow as tf\nloaded_embeddings = np.load('e.npy')\nemb = tf.constant(loaded_embeddings)\n";
        assert_eq!(graph(src), vec!["TK-10"]);
        let simple =
            "from tensorflow.keras.layers import Lambda\ndef simple_fn(x):\n    return x * 2\nl = Lambda(simple_fn)\n";
        assert!(graph(simple).is_empty());
        let complex = "from tensorflow.keras.layers import Lambda\ndef heavy(x):\n    for i in range(3):\n        x = x * 2\n    return x\nl = Lambda(heavy)\n";
        assert_eq!(graph(complex), vec!["TK-03"]);
        let prim = "import tensorflow as tf\ninp = tf.keras.Input(shape=(4,))\nh = tf.reshape(inp, (2, 2))\n";
        assert_eq!(graph(prim), vec!["TK-02"]);
    }

    #[test]
    fn rank_mismatch() {
        let src = "import tensorflow as tf\na = tf.zeros((3, 4))\nb = tf.ones((4,))\nc = a + b\n";
        assert_eq!(graph(src), vec!["TK-12"]);
        let same = "import tensorflow as tf\na = tf.zeros((3, 4))\nb = tf.ones((3, 4))\nc = a + b\n";
        assert!(graph(same).is_empty());
        let reshaped =
            "import tensorflow as tf\na = tf.zeros((3, 4))\nb = tf.ones((4,))\nb = tf.reshape(b, (1, 4))\nc = a + b\n";
        assert!(graph(reshaped).is_empty());
    }

    #[test]
    fn pipeline_examples() {
        let src = "import tensorflow as tf\nds = tf.data.Dataset.from_tensor_slices(x).batch(32)\nfor p in parts:\n    preds = model.predict(ds)\n";
        assert_eq!(pipeline(src), vec!["TK-05"]);
        let env = "import os\nimport keras\nos.environ['LD_LIBRARY_PATH'] = '/usr/local/cuda-10.0/lib64'\nos.environ['PATH'] = '/usr/local/cuda-11.2/bin:' + os.environ['PATH']\n";
        assert_eq!(run(&[env], check_pipeline_and_env), vec![("TK-15", 4)]);
        let consistent = env.replace("11.2", "10.0");
        assert!(pipeline(&consistent).is_empty());
        assert_eq!(
            pipeline("from sklearn.model_selection import GridSearchCV\nGridSearchCV(clf, grid, n_jobs=-1)\n"),
            vec!["TK-16"]
        );
        assert_eq!(
            pipeline("import keras\nmodel.fit(x, y, batch_size=2048)\n"),
            vec!["TK-14"]
        );
    }

    #[test]
    fn cuda_version_scan() {
        assert_eq!(cuda_versions("/usr/local/cuda-10.0/lib64"), vec!["10.0"]);
        assert_eq!(cuda_versions("C:/CUDA/v11.2/bin"), vec!["11.2"]);
        assert!(cuda_versions("/usr/local/cuda/lib64").is_empty());
    }
}
