//! Import alias resolution.
//!
//! Bindings are kept in source order so that a node resolves through the
//! latest import of its leftmost name that precedes it.

use std::collections::{HashMap, HashSet};

use super::ast::{Expr, ExprKind, Stmt, StmtKind};
use super::SyntaxTree;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Binding {
    offset: u32,
    canonical: String,
}

/// Local name to canonical dotted name, plus star-import wildcards.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    bindings: HashMap<String, Vec<Binding>>,
    wildcards: Vec<(u32, String)>,
    locals: HashSet<String>,
}

/// Result of resolving a dotted-name expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Qualified {
    /// Leftmost segment bound by an explicit import.
    Known(String),
    /// Leftmost segment unbound, attributed to a star-imported module.
    Wildcard(String),
    Unknown,
}

impl Qualified {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Qualified::Known(s) | Qualified::Wildcard(s) => Some(s),
            Qualified::Unknown => None,
        }
    }

    pub fn is(&self, name: &str) -> bool {
        self.as_str() == Some(name)
    }

    pub fn is_any(&self, names: &[&str]) -> bool {
        self.as_str().is_some_and(|s| names.contains(&s))
    }

    /// True when the name is `root` or lies beneath it.
    pub fn under(&self, root: &str) -> bool {
        self.as_str()
            .is_some_and(|s| s == root || (s.starts_with(root) && s.as_bytes().get(root.len()) == Some(&b'.')))
    }

    pub fn last_segment(&self) -> Option<&str> {
        self.as_str().map(|s| s.rsplit('.').next().unwrap_or(s))
    }
}

const BUILTINS: &[&str] = &[
    "abs",
    "all",
    "any",
    "bool",
    "bytes",
    "callable",
    "dict",
    "dir",
    "enumerate",
    "eval",
    "exec",
    "filter",
    "float",
    "format",
    "getattr",
    "hasattr",
    "hash",
    "id",
    "input",
    "int",
    "isinstance",
    "issubclass",
    "iter",
    "len",
    "list",
    "map",
    "max",
    "min",
    "next",
    "object",
    "open",
    "print",
    "property",
    "range",
    "repr",
    "reversed",
    "round",
    "set",
    "setattr",
    "slice",
    "sorted",
    "staticmethod",
    "classmethod",
    "str",
    "sum",
    "super",
    "tuple",
    "type",
    "vars",
    "zip",
    "Exception",
    "ValueError",
    "TypeError",
    "KeyError",
    "RuntimeError",
    "StopIteration",
    "self",
    "cls",
    "__name__",
    "__file__",
];

impl AliasMap {
    pub fn bind(&mut self, local: &str, canonical: &str, offset: u32) {
        let list = self.bindings.entry(local.to_string()).or_default();
        list.push(Binding {
            offset,
            canonical: canonical.to_string(),
        });
        list.sort_by_key(|b| b.offset);
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty() && self.wildcards.is_empty()
    }

    /// Canonical name for `local` as seen from `offset`.
    pub fn lookup(&self, local: &str, offset: u32) -> Option<&str> {
        let list = self.bindings.get(local)?;
        let idx = list.partition_point(|b| b.offset <= offset);
        let b = if idx == 0 { &list[0] } else { &list[idx - 1] };
        Some(&b.canonical)
    }

    /// Every canonical name any binding refers to, sorted.
    pub fn canonical_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .bindings
            .values()
            .flatten()
            .map(|b| b.canonical.as_str())
            .chain(self.wildcards.iter().map(|(_, m)| m.as_str()))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn wildcard_for(&self, name: &str, offset: u32) -> Option<&str> {
        if self.locals.contains(name) || BUILTINS.contains(&name) {
            return None;
        }
        self.wildcards
            .iter()
            .rev()
            .find(|(o, _)| *o <= offset)
            .or(self.wildcards.first())
            .map(|(_, m)| m.as_str())
    }

    /// Resolves a dotted path string whose leftmost segment sits at `offset`.
    pub fn resolve(&self, dotted: &str, offset: u32) -> Qualified {
        let (head, rest) = match dotted.split_once('.') {
            Some((h, r)) => (h, Some(r)),
            None => (dotted, None),
        };
        let join = |base: &str| match rest {
            Some(r) => format!("{base}.{r}"),
            None => base.to_string(),
        };
        if let Some(c) = self.lookup(head, offset) {
            return Qualified::Known(join(c));
        }
        match self.wildcard_for(head, offset) {
            Some(m) => Qualified::Wildcard(format!("{m}.{dotted}")),
            None => Qualified::Unknown,
        }
    }
}

/// Collects import bindings from the whole tree, including nested scopes.
pub fn build_alias_map(tree: &SyntaxTree) -> AliasMap {
    let mut map = AliasMap::default();
    for stmt in &tree.module.body {
        stmt.walk(&mut |s| collect(s, &mut map));
    }
    map
}

fn collect(stmt: &Stmt, map: &mut AliasMap) {
    let offset = stmt.range.start;
    match &stmt.kind {
        StmtKind::Import(names) => {
            for alias in names {
                match &alias.asname {
                    Some(a) => map.bind(&a.name, &alias.name.name, offset),
                    None => {
                        let head = alias.name.name.split('.').next().unwrap_or_default();
                        map.bind(head, head, offset);
                    }
                }
            }
        }
        StmtKind::ImportFrom { module, level, names } => {
            let module = match module {
                Some(m) if *level == 0 => Some(m.name.as_str()),
                _ => None,
            };
            for alias in names {
                let local = alias.asname.as_ref().unwrap_or(&alias.name);
                match module {
                    Some(m) if alias.name.name == "*" => map.wildcards.push((offset, m.to_string())),
                    Some(m) => map.bind(&local.name, &format!("{m}.{}", alias.name.name), offset),
                    // relative imports have no canonical form; treat as local definitions
                    None => {
                        map.locals.insert(local.name.clone());
                    }
                }
            }
        }
        StmtKind::FunctionDef(f) => {
            map.locals.insert(f.name.name.clone());
            for p in f.params.iter() {
                map.locals.insert(p.name.name.clone());
            }
        }
        StmtKind::ClassDef(c) => {
            map.locals.insert(c.name.name.clone());
        }
        StmtKind::Assign { targets, .. } => {
            for t in targets {
                bound_names(t, &mut map.locals);
            }
        }
        StmtKind::AugAssign { target, .. } | StmtKind::AnnAssign { target, .. } => bound_names(target, &mut map.locals),
        StmtKind::For { target, .. } => bound_names(target, &mut map.locals),
        StmtKind::With { items, .. } => {
            for item in items {
                if let Some(v) = &item.vars {
                    bound_names(v, &mut map.locals);
                }
            }
        }
        StmtKind::Try { handlers, .. } => {
            for h in handlers {
                if let Some(n) = &h.name {
                    map.locals.insert(n.name.clone());
                }
            }
        }
        _ => {}
    }
}

fn bound_names(target: &Expr, out: &mut HashSet<String>) {
    match &target.kind {
        ExprKind::Name(n) => {
            out.insert(n.clone());
        }
        ExprKind::Tuple(items) | ExprKind::List(items) => {
            for i in items {
                bound_names(i, out);
            }
        }
        ExprKind::Starred(inner) => bound_names(inner, out),
        _ => {}
    }
}

/// Canonical dotted name for a name or attribute-chain expression.
pub fn qualify(expr: &Expr, aliases: &AliasMap) -> Qualified {
    match expr.dotted() {
        Some(d) => aliases.resolve(&d, expr.range.start),
        None => Qualified::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, GrammarVersion, SourceUnit};

    fn map_of(src: &str) -> (SyntaxTree, AliasMap) {
        let tree = parse_source(&SourceUnit::script("t.py", src), GrammarVersion::default()).unwrap();
        let map = build_alias_map(&tree);
        (tree, map)
    }

    fn last_expr(tree: &SyntaxTree) -> &Expr {
        match &tree.module.body.last().unwrap().kind {
            StmtKind::Expr(e) => e,
            k => panic!("not an expression statement: {k:?}"),
        }
    }

    #[test]
    fn import_forms() {
        let (_, m) = map_of(
            "import torch as t\nfrom tensorflow import keras as K\nfrom torch import no_grad\nimport os.path\nimport a.b as ab\n",
        );
        assert_eq!(m.lookup("t", 1000), Some("torch"));
        assert_eq!(m.lookup("K", 1000), Some("tensorflow.keras"));
        assert_eq!(m.lookup("no_grad", 1000), Some("torch.no_grad"));
        assert_eq!(m.lookup("os", 1000), Some("os"));
        assert_eq!(m.lookup("ab", 1000), Some("a.b"));
    }

    #[test]
    fn qualify_substitutes_leftmost_segment() {
        let (tree, m) = map_of("import torch as t\nt.cuda.empty_cache\n");
        assert_eq!(
            qualify(last_expr(&tree), &m),
            Qualified::Known("torch.cuda.empty_cache".into())
        );
        let (tree, m) = map_of("import tensorflow.keras.backend as K\nK.clear_session\n");
        assert!(qualify(last_expr(&tree), &m).is("tensorflow.keras.backend.clear_session"));
        let (tree, m) = map_of("foo.bar\n");
        assert_eq!(qualify(last_expr(&tree), &m), Qualified::Unknown);
    }

    #[test]
    fn later_binding_shadows_for_later_nodes() {
        let (tree, m) = map_of("import numpy as np\nnp.a\nimport torch as np\nnp.b\n");
        let first = match &tree.module.body[1].kind {
            StmtKind::Expr(e) => e,
            _ => unreachable!(),
        };
        assert!(qualify(first, &m).is("numpy.a"));
        assert!(qualify(last_expr(&tree), &m).is("torch.b"));
    }

    #[test]
    fn star_import_is_a_wildcard() {
        let (tree, m) = map_of("from torch.nn import *\nx = 1\nLinear\n");
        assert_eq!(
            qualify(last_expr(&tree), &m),
            Qualified::Wildcard("torch.nn.Linear".into())
        );
        let (tree, m) = map_of("from torch.nn import *\nx = 1\nx\n");
        assert_eq!(qualify(last_expr(&tree), &m), Qualified::Unknown);
        let (tree, m) = map_of("from torch.nn import *\nlen\n");
        assert_eq!(qualify(last_expr(&tree), &m), Qualified::Unknown);
    }

    #[test]
    fn qualified_helpers() {
        let q = Qualified::Known("torch.optim.SGD".into());
        assert!(q.under("torch"));
        assert!(q.under("torch.optim"));
        assert!(!q.under("torc"));
        assert_eq!(q.last_segment(), Some("SGD"));
    }
}
