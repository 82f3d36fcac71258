//! Detection predicates. Each checker walks [`FileFacts`] and emits raw
//! findings for the rules it owns; the engine turns them into reports.

pub mod pytorch;
pub mod tfkeras;

use std::collections::BTreeSet;

use crate::facts::{AssignSite, CallSite, FileFacts};
use crate::frontend::ast::{Expr, ExprKind, Stmt, StmtKind};
use crate::frontend::{CellSpan, TextRange};

/// Rule hit before catalog metadata is attached.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RawFinding {
    pub rule_id: &'static str,
    pub range: TextRange,
    pub subject: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub batch_size: i128,
    pub constant_size: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            batch_size: 1024,
            constant_size: 4096,
        }
    }
}

/// Everything a checker needs besides the facts themselves.
pub struct RuleInput<'f, 'a> {
    pub facts: &'f FileFacts<'a>,
    pub enabled: &'f BTreeSet<&'static str>,
    pub thresholds: Thresholds,
    pub cells: &'f [CellSpan],
}

impl<'f, 'a> RuleInput<'f, 'a> {
    pub fn on(&self, id: &str) -> bool {
        self.enabled.contains(id)
    }

    pub fn emit(&self, out: &mut Vec<RawFinding>, rule_id: &'static str, range: TextRange, subject: impl Into<String>) {
        if self.on(rule_id) {
            out.push(RawFinding {
                rule_id,
                range,
                subject: subject.into(),
            });
        }
    }

    pub fn text(&self, range: TextRange) -> &'a str {
        self.facts.text(range)
    }

    /// Source text of a call's callee, e.g. `loss.backward`.
    pub fn callee_text(&self, c: &CallSite) -> &'a str {
        self.text(c.func.range)
    }
}

/// Method names that move a value off the graph or off the device.
pub const SAFE_METHODS: &[&str] = &["detach", "cpu", "item", "numpy", "tolist", "detach_"];

pub const BUILTIN_CALLS: &[&str] = &[
    "len",
    "str",
    "int",
    "float",
    "bool",
    "list",
    "dict",
    "tuple",
    "set",
    "repr",
    "print",
    "round",
    "abs",
    "min",
    "max",
    "sum",
    "sorted",
    "range",
    "enumerate",
    "zip",
    "isinstance",
    "type",
    "format",
    "open",
    "iter",
    "next",
    "map",
    "filter",
];

/// True for `x.detach()`, `x.cpu().numpy()` and similar outermost safe calls,
/// and for `.data` attribute reads.
pub fn is_safe_value(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Call { func, .. } => matches!(&func.kind,
            ExprKind::Attribute { attr, .. } if SAFE_METHODS.contains(&attr.name.as_str())),
        ExprKind::Attribute { attr, .. } => attr.name == "data",
        _ => false,
    }
}

/// True when `name` occurs in `e` outside any safe call chain.
pub fn raw_mention(e: &Expr, name: &str) -> bool {
    if is_safe_value(e) {
        return false;
    }
    if e.as_name() == Some(name) {
        return true;
    }
    let mut found = false;
    e.for_each_child(&mut |c| found |= raw_mention(c, name));
    found
}

/// True when the dotted path `d` occurs anywhere inside `e`.
pub fn mentions_dotted(e: &Expr, d: &str) -> bool {
    e.any(&mut |x| x.dotted().as_deref() == Some(d))
}

/// The call itself plus every call it is chained from (`A().b().c()` gives
/// `[A().b().c(), A().b(), A()]`).
pub fn call_chain(e: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    let mut cur = e;
    while let ExprKind::Call { func, .. } = &cur.kind {
        out.push(cur);
        match &func.kind {
            ExprKind::Attribute { value, .. } => cur = value,
            _ => break,
        }
    }
    out
}

/// Assignment whose value is `call` or a method chain rooted at it.
pub fn binding_assignment<'f, 'a>(facts: &'f FileFacts<'a>, call: &Expr) -> Option<&'f AssignSite<'a>> {
    facts
        .assignments
        .iter()
        .find(|a| a.value.range.contains(call.range) && call_chain(a.value).iter().any(|c| c.range == call.range))
}

/// True when the statement is the bare expression `call`.
pub fn is_discarded(stmt: &Stmt, call: &Expr) -> bool {
    matches!(&stmt.kind, StmtKind::Expr(e) if e.range == call.range)
}

/// Lowercased last segment of a dotted path.
pub fn last_lower(d: &str) -> String {
    d.rsplit('.').next().unwrap_or(d).to_lowercase()
}

/// Runs every checker of both sides.
pub fn run_all(input: &RuleInput) -> Vec<RawFinding> {
    let mut out = Vec::new();
    out.extend(pytorch::check_gradient_and_graph(input));
    out.extend(pytorch::check_loops_and_pipeline(input));
    out.extend(pytorch::check_references_and_memory(input));
    out.extend(tfkeras::check_sessions_and_resources(input));
    out.extend(tfkeras::check_graph_and_api(input));
    out.extend(tfkeras::check_pipeline_and_env(input));
    out
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::catalog::load_catalog;
    use crate::facts::build_facts;
    use crate::frontend::{build_alias_map, parse_source, GrammarVersion, SourceUnit};

    pub fn all_rules() -> BTreeSet<&'static str> {
        load_catalog().rules.iter().map(|r| r.id).collect()
    }

    /// Runs one checker over a script (or notebook cells) with every rule enabled,
    /// returning (rule id, 1-based line) pairs.
    pub fn run(cells: &[&str], checker: fn(&RuleInput) -> Vec<RawFinding>) -> Vec<(&'static str, usize)> {
        let unit = if cells.len() == 1 {
            SourceUnit::script("t.py", cells[0])
        } else {
            SourceUnit::notebook("t.ipynb", cells)
        };
        let tree = parse_source(&unit, GrammarVersion::default()).unwrap();
        let aliases = build_alias_map(&tree);
        let facts = build_facts(&tree, &aliases);
        let enabled = all_rules();
        let input = RuleInput {
            facts: &facts,
            enabled: &enabled,
            thresholds: Thresholds::default(),
            cells: &unit.cell_spans,
        };
        let mut v: Vec<_> = checker(&input)
            .into_iter()
            .map(|f| (f.rule_id, facts.span(f.range).start_line))
            .collect();
        v.sort();
        v
    }

    pub fn ids(found: &[(&'static str, usize)]) -> Vec<&'static str> {
        found.iter().map(|f| f.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, GrammarVersion, SourceUnit};

    fn expr(src: &str) -> Expr {
        let tree = parse_source(&SourceUnit::script("t.py", src), GrammarVersion::default()).unwrap();
        match &tree.module.body[0].kind {
            StmtKind::Expr(e) => e.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn raw_mentions_skip_safe_chains() {
        assert!(raw_mention(&expr("total + loss"), "loss"));
        assert!(!raw_mention(&expr("total + loss.item()"), "loss"));
        assert!(!raw_mention(&expr("f(loss.detach().cpu())"), "loss"));
        assert!(raw_mention(&expr("f(loss * 2)"), "loss"));
    }

    #[test]
    fn call_chains() {
        let e = expr("A().b().c()");
        assert_eq!(call_chain(&e).len(), 3);
        assert_eq!(call_chain(&expr("x")).len(), 0);
    }
}
