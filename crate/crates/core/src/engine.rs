//! Per-file orchestration: parse, build facts, run the enabled checkers,
//! apply suppression comments and merge everything into one ordered list.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{Catalog, Category, Confidence, FrameworkTag, Side};
use crate::facts::{build_facts, Framework};
use crate::frontend::{
    build_alias_map, load_source, parse_source, GrammarVersion, SourceUnit, Span, SyntaxTree, TextRange,
};
use crate::rules::{pytorch, tfkeras, RawFinding, RuleInput, Thresholds};

/// Reserved id for suppression comments naming an unknown rule.
pub const META_RULE: &str = "META-01";
const META_NAME: &str = "Unknown Rule In Suppression";

/// Lines from the top of a file in which `ignore-file` is honoured.
const FILE_SUPPRESSION_LINES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Files are analysed on the rayon pool. Without the `parallel` feature
    /// this behaves like `Sequential`.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration for `{key}`: {reason}")]
pub struct ConfigInvalid {
    pub key: String,
    pub reason: String,
}

impl ConfigInvalid {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigInvalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintConfig {
    /// Rule ids to run; empty means every default-enabled rule.
    pub select: BTreeSet<String>,
    pub ignore: BTreeSet<String>,
    pub min_confidence: Confidence,
    pub thresholds: Thresholds,
    /// Default-disabled rules to turn on.
    pub enable: BTreeSet<String>,
    /// Restrict analysis to one framework's rules.
    pub framework: Option<Side>,
    pub grammar: GrammarVersion,
    pub execution: Execution,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            select: BTreeSet::new(),
            ignore: BTreeSet::new(),
            min_confidence: Confidence::Low,
            thresholds: Thresholds::default(),
            enable: BTreeSet::new(),
            framework: None,
            grammar: GrammarVersion::default(),
            execution: Execution::default(),
        }
    }
}

impl LintConfig {
    pub fn validate(&self, catalog: &Catalog) -> Result<(), ConfigInvalid> {
        if let Some(id) = self.select.intersection(&self.ignore).next() {
            return Err(ConfigInvalid::new(
                "select",
                format!("`{id}` is both selected and ignored"),
            ));
        }
        for (key, ids) in [
            ("select", &self.select),
            ("ignore", &self.ignore),
            ("enable", &self.enable),
        ] {
            if let Some(id) = ids.iter().find(|id| !is_known_id(catalog, id)) {
                return Err(ConfigInvalid::new(key, format!("unknown rule `{id}`")));
            }
        }
        if self.thresholds.batch_size <= 0 {
            return Err(ConfigInvalid::new(
                "thresholds.batch_size_threshold",
                "must be positive",
            ));
        }
        if self.thresholds.constant_size == 0 {
            return Err(ConfigInvalid::new(
                "thresholds.constant_size_threshold",
                "must be positive",
            ));
        }
        Ok(())
    }

    /// Sets a named threshold from its textual value.
    pub fn set_threshold(&mut self, key: &str, value: &str) -> Result<(), ConfigInvalid> {
        let full = format!("thresholds.{key}");
        let n: i128 = value
            .trim()
            .parse()
            .map_err(|_| ConfigInvalid::new(&full, format!("`{value}` is not an integer")))?;
        if n <= 0 {
            return Err(ConfigInvalid::new(full, "must be positive"));
        }
        match key {
            "batch_size_threshold" => self.thresholds.batch_size = n,
            "constant_size_threshold" => {
                self.thresholds.constant_size =
                    usize::try_from(n).map_err(|_| ConfigInvalid::new(&full, "too large"))?
            }
            _ => return Err(ConfigInvalid::new(full, "unknown threshold")),
        }
        Ok(())
    }

    /// Rules to run on a file importing `frameworks`.
    pub fn enabled_rules(&self, catalog: &Catalog, frameworks: &BTreeSet<Framework>) -> BTreeSet<&'static str> {
        let frameworks: BTreeSet<Framework> = match self.framework {
            Some(side) => frameworks.iter().copied().filter(|f| f.name() == side.name()).collect(),
            None => frameworks.clone(),
        };
        catalog
            .rules
            .iter()
            .filter(|r| {
                if self.select.is_empty() {
                    r.default_enabled || self.enable.contains(r.id)
                } else {
                    self.select.contains(r.id)
                }
            })
            .filter(|r| !self.ignore.contains(r.id))
            .filter(|r| r.confidence >= self.min_confidence)
            .filter(|r| r.applies_to(&frameworks))
            .map(|r| r.id)
            .collect()
    }
}

fn is_known_id(catalog: &Catalog, id: &str) -> bool {
    id == META_RULE || catalog.rule(id).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub rule_id: &'static str,
    pub name: &'static str,
    pub path: String,
    pub span: Span,
    /// Code cell index for notebook findings.
    pub cell: Option<usize>,
    pub message: String,
    pub category: Category,
    pub tag: FrameworkTag,
    pub confidence: Confidence,
    pub practice_ids: Vec<&'static str>,
    /// Practice names, shown on the `fix:` line.
    pub fix: String,
    /// Practice names with their summaries.
    pub suggestion: String,
}

impl Finding {
    fn sort_key(&self) -> (&str, usize, usize, &str, usize, usize, &str) {
        (
            &self.path,
            self.span.start_line,
            self.span.start_col,
            self.rule_id,
            self.span.end_line,
            self.span.end_col,
            &self.message,
        )
    }
}

/// A file that could not be read or parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
#[error("{path}: {message}")]
pub struct FileError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SuppressionScope {
    Line,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suppression {
    pub scope: SuppressionScope,
    /// Empty means every rule.
    pub rule_ids: Vec<String>,
    pub range: TextRange,
    pub line: usize,
    /// Nothing but whitespace precedes the comment.
    pub standalone: bool,
}

impl Suppression {
    fn covers(&self, rule_id: &str) -> bool {
        self.rule_ids.is_empty() || self.rule_ids.iter().any(|id| id == rule_id)
    }
}

/// Parses one `#`-delimited comment segment against the suppression grammar.
fn parse_directive(segment: &str) -> Option<(SuppressionScope, Vec<String>)> {
    let rest = segment.trim().strip_prefix("leaklint:")?.trim_start();
    if rest.trim_end() == "ignore-file" {
        return Some((SuppressionScope::File, Vec::new()));
    }
    let rest = rest.strip_prefix("ignore")?.trim_end();
    if rest.is_empty() {
        return Some((SuppressionScope::Line, Vec::new()));
    }
    let ids = rest.strip_prefix('[')?.strip_suffix(']')?;
    let ids: Vec<String> = ids
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if ids.is_empty() {
        return None;
    }
    Some((SuppressionScope::Line, ids))
}

/// Suppression directives found in the file's comments. A comment may hold
/// several `#`-separated segments, e.g. `# expect[PT-14]  # leaklint: ignore`.
pub fn parse_suppressions(tree: &SyntaxTree) -> Vec<Suppression> {
    let mut out = Vec::new();
    for c in &tree.comments {
        let line = tree.span(c.range).start_line;
        for segment in c.text.split('#').skip(1) {
            if let Some((scope, rule_ids)) = parse_directive(segment) {
                if scope == SuppressionScope::File && line > FILE_SUPPRESSION_LINES {
                    continue;
                }
                out.push(Suppression {
                    scope,
                    rule_ids,
                    range: c.range,
                    line,
                    standalone: c.standalone,
                });
            }
        }
    }
    out
}

fn same_cell(unit: &SourceUnit, a: usize, b: usize) -> bool {
    unit.cell_of_line(a).map(|c| c.0) == unit.cell_of_line(b).map(|c| c.0)
}

fn is_suppressed(unit: &SourceUnit, sups: &[Suppression], f: &Finding) -> bool {
    let line = f.span.start_line;
    sups.iter().any(|s| {
        s.covers(f.rule_id)
            && match s.scope {
                SuppressionScope::File => true,
                SuppressionScope::Line => {
                    s.line == line || (s.standalone && s.line + 1 == line && same_cell(unit, s.line, line))
                }
            }
    })
}

fn finding_from(catalog: &Catalog, unit: &SourceUnit, tree: &SyntaxTree, raw: &RawFinding) -> Finding {
    let rule = catalog.rule(raw.rule_id).expect("checkers emit catalog ids");
    let span = tree.span(raw.range);
    Finding {
        rule_id: rule.id,
        name: rule.name,
        path: unit.path.display().to_string(),
        span,
        cell: unit.cell_of_line(span.start_line).map(|c| c.0),
        message: rule.render_message(&raw.subject),
        category: rule.category,
        tag: rule.tag,
        confidence: rule.confidence,
        practice_ids: rule.practice_ids.to_vec(),
        fix: catalog.practice_names(rule),
        suggestion: catalog.suggestion(rule),
    }
}

fn meta_finding(unit: &SourceUnit, tree: &SyntaxTree, s: &Suppression, id: &str) -> Finding {
    let span = tree.span(s.range);
    Finding {
        rule_id: META_RULE,
        name: META_NAME,
        path: unit.path.display().to_string(),
        span,
        cell: unit.cell_of_line(span.start_line).map(|c| c.0),
        message: format!("suppression names unknown rule `{id}`"),
        category: Category::EnvironmentConfig,
        tag: FrameworkTag::G,
        confidence: Confidence::High,
        practice_ids: Vec::new(),
        fix: "Correct or remove the rule id".to_string(),
        suggestion: "Correct or remove the rule id.".to_string(),
    }
}

fn sort_findings(findings: &mut Vec<Finding>) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    findings.dedup();
}

/// Analyses one loaded unit.
pub fn analyze_file(unit: &SourceUnit, catalog: &Catalog, config: &LintConfig) -> Result<Vec<Finding>, FileError> {
    let tree = parse_source(unit, config.grammar).map_err(|e| FileError {
        path: unit.path.display().to_string(),
        line: Some(e.span.start_line),
        column: Some(e.span.start_col),
        message: e.message,
    })?;
    let aliases = build_alias_map(&tree);
    let facts = build_facts(&tree, &aliases);
    let enabled = config.enabled_rules(catalog, &facts.frameworks);
    let input = RuleInput {
        facts: &facts,
        enabled: &enabled,
        thresholds: config.thresholds,
        cells: &unit.cell_spans,
    };

    let mut raw = Vec::new();
    if enabled.iter().any(|id| id.starts_with("PT-")) {
        raw.extend(pytorch::check_gradient_and_graph(&input));
        raw.extend(pytorch::check_loops_and_pipeline(&input));
        raw.extend(pytorch::check_references_and_memory(&input));
    }
    if enabled.iter().any(|id| id.starts_with("TK-")) {
        raw.extend(tfkeras::check_sessions_and_resources(&input));
        raw.extend(tfkeras::check_graph_and_api(&input));
        raw.extend(tfkeras::check_pipeline_and_env(&input));
    }

    let sups = parse_suppressions(&tree);
    let mut findings: Vec<Finding> = raw
        .iter()
        .filter(|r| enabled.contains(r.rule_id))
        .map(|r| finding_from(catalog, unit, &tree, r))
        .filter(|f| !is_suppressed(unit, &sups, f))
        .collect();
    if !config.ignore.contains(META_RULE) {
        for s in &sups {
            for id in s.rule_ids.iter().filter(|id| !is_known_id(catalog, id)) {
                findings.push(meta_finding(unit, &tree, s, id));
            }
        }
    }
    sort_findings(&mut findings);
    Ok(findings)
}

/// Reads and analyses one file.
pub fn analyze_path(path: &Path, catalog: &Catalog, config: &LintConfig) -> Result<Vec<Finding>, FileError> {
    let unit = load_source(path).map_err(|e| FileError {
        path: path.display().to_string(),
        line: None,
        column: None,
        message: e.to_string(),
    })?;
    analyze_file(&unit, catalog, config)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Analysis {
    pub findings: Vec<Finding>,
    pub file_errors: Vec<FileError>,
}

fn is_source_file(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e == "py" || e == "ipynb")
}

fn is_hidden(entry: &walkdir::DirEntry) -> bool {
    entry.depth() > 0 && entry.file_type().is_dir() && entry.file_name().to_str().is_some_and(|n| n.starts_with('.'))
}

/// Expands directories into the `.py`/`.ipynb` files below them, skipping
/// hidden directories. Explicit file arguments are kept as given.
pub fn collect_files(paths: &[PathBuf]) -> (Vec<PathBuf>, Vec<FileError>) {
    let mut files = Vec::new();
    let mut errors = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in walkdir::WalkDir::new(p).into_iter().filter_entry(|e| !is_hidden(e)) {
                match entry {
                    Ok(e) if e.file_type().is_file() && is_source_file(e.path()) => files.push(e.into_path()),
                    Ok(_) => {}
                    Err(e) => errors.push(FileError {
                        path: e.path().unwrap_or(p).display().to_string(),
                        line: None,
                        column: None,
                        message: e.to_string(),
                    }),
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    (files, errors)
}

fn run_files(files: &[PathBuf], catalog: &Catalog, config: &LintConfig) -> Vec<Result<Vec<Finding>, FileError>> {
    #[cfg(feature = "parallel")]
    if config.execution == Execution::Parallel {
        use rayon::prelude::*;
        return files.par_iter().map(|f| analyze_path(f, catalog, config)).collect();
    }
    files.iter().map(|f| analyze_path(f, catalog, config)).collect()
}

/// Analyses every source file under `paths` and merges the results.
pub fn analyze_paths(paths: &[PathBuf], catalog: &Catalog, config: &LintConfig) -> Analysis {
    let (files, mut file_errors) = collect_files(paths);
    let mut findings = Vec::new();
    for result in run_files(&files, catalog, config) {
        match result {
            Ok(f) => findings.extend(f),
            Err(e) => file_errors.push(e),
        }
    }
    sort_findings(&mut findings);
    file_errors.sort_by(|a, b| (&a.path, a.line, a.column, &a.message).cmp(&(&b.path, b.line, b.column, &b.message)));
    Analysis { findings, file_errors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_catalog;

    fn check(src: &str) -> Vec<(&'static str, usize)> {
        check_with(src, &LintConfig::default())
    }

    fn check_with(src: &str, config: &LintConfig) -> Vec<(&'static str, usize)> {
        analyze_file(&SourceUnit::script("t.py", src), load_catalog(), config)
            .unwrap()
            .into_iter()
            .map(|f| (f.rule_id, f.span.start_line))
            .collect()
    }

    const RETAIN: &str = "import torch\nfor x in data:\n    loss = model(x)\n    loss.backward(retain_graph=True)\n";

    #[test]
    fn clean_torch_file_has_no_findings() {
        assert!(check("import torch\n\nx = torch.zeros(3)\nprint(x.sum().item())\n").is_empty());
    }

    #[test]
    fn trailing_suppression_hides_finding() {
        assert_eq!(check(RETAIN), vec![("PT-23", 4)]);
        let src = RETAIN.replace("True)\n", "True)  # leaklint: ignore[PT-23]\n");
        assert!(check(&src).is_empty());
    }

    #[test]
    fn suppression_on_line_above_and_file_scope() {
        let above = RETAIN.replace("    loss.backward", "    # leaklint: ignore\n    loss.backward");
        assert!(check(&above).is_empty());
        let other = RETAIN.replace("True)\n", "True)  # leaklint: ignore[PT-02]\n");
        assert_eq!(check(&other), vec![("PT-23", 4)]);
        let file = format!("# leaklint: ignore-file\n{RETAIN}");
        assert!(check(&file).is_empty());
        let late = format!("\n\n\n\n\n# leaklint: ignore-file\n{RETAIN}");
        assert_eq!(check(&late), vec![("PT-23", 10)]);
    }

    #[test]
    fn near_miss_grammar_is_not_a_suppression() {
        for c in [
            "# leaklint ignore",
            "# leaklint: ignored",
            "# leaklint: ignore[]",
            "# noqa",
        ] {
            let src = RETAIN.replace("True)\n", &format!("True)  {c}\n"));
            assert_eq!(check(&src), vec![("PT-23", 4)], "{c}");
        }
    }

    #[test]
    fn unknown_suppression_id_is_reported() {
        let src = RETAIN.replace("True)\n", "True)  # leaklint: ignore[PT-99]\n");
        assert_eq!(check(&src), vec![("PT-23", 4), ("META-01", 4)]);
        let config = LintConfig {
            ignore: BTreeSet::from([META_RULE.to_string()]),
            ..LintConfig::default()
        };
        assert_eq!(check_with(&src, &config), vec![("PT-23", 4)]);
    }

    #[test]
    fn findings_are_ordered_by_line() {
        let src = "import torch\nimport torch.nn as nn\ntorch.autograd.set_detect_anomaly(True)\n\n\n\n\n\nfor x in data:\n    loss = model(x)\n    loss.backward(retain_graph=True)\n";
        let got = check(src);
        assert_eq!(got, vec![("PT-14", 3), ("PT-23", 11)]);
    }

    #[test]
    fn frameworks_gate_rule_sides() {
        let tf = "import tensorflow as tf\nfor i in range(10):\n    sess = tf.Session()\n";
        assert!(check(tf).iter().all(|f| f.0.starts_with("TK-")));
        assert!(!check(tf).is_empty());
        let config = LintConfig {
            framework: Some(Side::Pytorch),
            ..LintConfig::default()
        };
        assert!(check_with(tf, &config).is_empty());
        assert!(check_with(RETAIN, &config).len() == 1);
    }

    #[test]
    fn selection_and_confidence_filters() {
        let c = load_catalog();
        let all = BTreeSet::from([Framework::Pytorch, Framework::Tensorflow]);
        let base = LintConfig::default();
        let default_on = base.enabled_rules(c, &all);
        assert_eq!(default_on.len(), 44);
        assert!(!default_on.contains("PT-22") && !default_on.contains("TK-14"));
        let enabled = LintConfig {
            enable: BTreeSet::from(["PT-22".to_string()]),
            ..base.clone()
        };
        assert!(enabled.enabled_rules(c, &all).contains("PT-22"));
        let select = LintConfig {
            select: BTreeSet::from(["PT-07".to_string(), "TK-14".to_string()]),
            ..base.clone()
        };
        assert_eq!(select.enabled_rules(c, &all), BTreeSet::from(["PT-07", "TK-14"]));
        let high = LintConfig {
            min_confidence: Confidence::High,
            ..base.clone()
        };
        assert!(high
            .enabled_rules(c, &all)
            .iter()
            .all(|id| c.rule(id).unwrap().confidence == Confidence::High));
    }

    #[test]
    fn config_validation_names_the_key() {
        let c = load_catalog();
        let overlap = LintConfig {
            select: BTreeSet::from(["PT-07".to_string()]),
            ignore: BTreeSet::from(["PT-07".to_string()]),
            ..LintConfig::default()
        };
        assert_eq!(overlap.validate(c).unwrap_err().key, "select");
        let unknown = LintConfig {
            ignore: BTreeSet::from(["PT-99".to_string()]),
            ..LintConfig::default()
        };
        assert_eq!(unknown.validate(c).unwrap_err().key, "ignore");
        let mut t = LintConfig::default();
        assert!(t.set_threshold("batch_size_threshold", "0").is_err());
        assert!(t.set_threshold("nope", "3").is_err());
        t.set_threshold("constant_size_threshold", "10").unwrap();
        assert_eq!(t.thresholds.constant_size, 10);
        assert!(t.validate(c).is_ok());
    }

    #[test]
    fn parse_error_becomes_file_error() {
        let err = analyze_file(
            &SourceUnit::script("bad.py", "x = = 1\n"),
            load_catalog(),
            &LintConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.path, "bad.py");
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn notebook_findings_carry_cell_index() {
        let unit = SourceUnit::notebook("n.ipynb", &["import torch", "torch.autograd.set_detect_anomaly(True)"]);
        let found = analyze_file(&unit, load_catalog(), &LintConfig::default()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].cell, Some(1));
    }

    #[test]
    fn paths_mix_errors_and_findings() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.py"), "def f(:\n").unwrap();
        std::fs::write(dir.path().join("clean.py"), "import torch\nx = 1\n").unwrap();
        std::fs::write(dir.path().join("smelly.py"), RETAIN).unwrap();
        std::fs::create_dir(dir.path().join(".hidden")).unwrap();
        std::fs::write(dir.path().join(".hidden/skip.py"), RETAIN).unwrap();
        std::fs::write(dir.path().join("notes.txt"), RETAIN).unwrap();
        let paths = vec![dir.path().to_path_buf()];
        let a = analyze_paths(&paths, load_catalog(), &LintConfig::default());
        assert_eq!(a.file_errors.len(), 1);
        assert!(a.file_errors[0].path.ends_with("bad.py"));
        assert_eq!(a.findings.len(), 1);
        assert!(a.findings[0].path.ends_with("smelly.py"));
        let seq = LintConfig {
            execution: Execution::Sequential,
            ..LintConfig::default()
        };
        assert_eq!(analyze_paths(&paths, load_catalog(), &seq), a);
    }
}
