//! Fixture-corpus runner. Fixtures carry `# expect[ID]` annotations; a run
//! compares them with the engine's findings line by line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::catalog::Catalog;
use crate::engine::{analyze_file, collect_files, FileError, LintConfig};
use crate::frontend::{load_source, parse_source, SourceUnit};

/// Rules that are off by default but must be exercised by the corpus.
pub const FORCE_ENABLED: &[&str] = &["PT-22", "TK-14"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Expectation {
    pub rule_id: String,
    pub line: usize,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("{path}:{line}: unknown rule `{rule_id}` in expectation")]
    UnknownExpectedRule { path: String, line: usize, rule_id: String },
    #[error(transparent)]
    File(#[from] FileError),
}

/// Rule ids of an `expect[...]` segment, if the segment is one.
fn expect_ids(segment: &str) -> Option<Vec<&str>> {
    let inner = segment.trim().strip_prefix("expect[")?.strip_suffix(']')?;
    Some(inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
}

/// First line after `line` that is neither blank nor a comment.
fn next_code_line(lines: &[&str], line: usize) -> Option<usize> {
    (line + 1..=lines.len()).find(|&l| {
        let t = lines[l - 1].trim();
        !t.is_empty() && !t.starts_with('#')
    })
}

pub fn parse_expectations(unit: &SourceUnit, catalog: &Catalog) -> Result<Vec<Expectation>, HarnessError> {
    let path = unit.path.display().to_string();
    let tree = parse_source(unit, Default::default()).map_err(|e| FileError {
        path: path.clone(),
        line: Some(e.span.start_line),
        column: Some(e.span.start_col),
        message: e.message,
    })?;
    let lines: Vec<&str> = unit.text.split('\n').collect();
    let mut out = Vec::new();
    for c in &tree.comments {
        let at = tree.span(c.range).start_line;
        for segment in c.text.split('#').skip(1) {
            let Some(ids) = expect_ids(segment) else { continue };
            let target = if c.standalone {
                next_code_line(&lines, at).unwrap_or(at)
            } else {
                at
            };
            for id in ids {
                if catalog.rule(id).is_none() {
                    return Err(HarnessError::UnknownExpectedRule {
                        path,
                        line: at,
                        rule_id: id.to_string(),
                    });
                }
                out.push(Expectation {
                    rule_id: id.to_string(),
                    line: target,
                    path: unit.path.clone(),
                });
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleScore {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MismatchKind {
    Missing,
    Unexpected,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mismatch {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub kind: MismatchKind,
    pub rule_id: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub path: PathBuf,
    pub expectations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusReport {
    pub per_rule: BTreeMap<String, RuleScore>,
    pub mismatches: Vec<Mismatch>,
    pub fixtures: Vec<Fixture>,
    pub pass: bool,
}

impl CorpusReport {
    pub fn totals(&self) -> RuleScore {
        self.per_rule.values().fold(RuleScore::default(), |a, s| RuleScore {
            true_positives: a.true_positives + s.true_positives,
            false_negatives: a.false_negatives + s.false_negatives,
            false_positives: a.false_positives + s.false_positives,
        })
    }

    /// Rules lacking a positive expectation or a dedicated negative fixture
    /// (`<rule-id>/neg*` without expectations).
    pub fn coverage_gaps(&self, catalog: &Catalog) -> Vec<String> {
        let mut gaps = Vec::new();
        for r in &catalog.rules {
            let positive = self
                .per_rule
                .get(r.id)
                .is_some_and(|s| s.true_positives + s.false_negatives > 0);
            let negative = self.fixtures.iter().any(|f| {
                f.expectations == 0
                    && f.path.parent().and_then(|p| p.file_name()).is_some_and(|d| d == r.id)
                    && f.path
                        .file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("neg"))
            });
            if !positive {
                gaps.push(format!("{}: no positive fixture", r.id));
            }
            if !negative {
                gaps.push(format!("{}: no negative fixture", r.id));
            }
        }
        gaps
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>4} {:>4} {:>4}", "rule", "tp", "fn", "fp");
        for (id, r) in &self.per_rule {
            let _ = writeln!(
                s,
                "{id:<8} {:>4} {:>4} {:>4}",
                r.true_positives, r.false_negatives, r.false_positives
            );
        }
        for m in &self.mismatches {
            let kind = match m.kind {
                MismatchKind::Missing => "missing",
                MismatchKind::Unexpected => "unexpected",
                MismatchKind::Error => "error",
            };
            let _ = writeln!(
                s,
                "{}:{}:{}  {kind}  {}  {}",
                m.path, m.line, m.column, m.rule_id, m.detail
            );
        }
        let t = self.totals();
        let _ = writeln!(
            s,
            "{} fixtures, tp={} fn={} fp={}: {}",
            self.fixtures.len(),
            t.true_positives,
            t.false_negatives,
            t.false_positives,
            if self.pass { "PASS" } else { "FAIL" }
        );
        s
    }
}

fn with_forced_rules(config: &LintConfig) -> LintConfig {
    let mut c = config.clone();
    for id in FORCE_ENABLED {
        c.enable.insert(id.to_string());
        if !c.select.is_empty() && !c.ignore.contains(*id) {
            c.select.insert(id.to_string());
        }
    }
    c
}

fn error_mismatch(path: &Path, line: usize, column: usize, detail: String) -> Mismatch {
    Mismatch {
        path: path.display().to_string(),
        line,
        column,
        kind: MismatchKind::Error,
        rule_id: String::new(),
        detail,
    }
}

pub fn run_corpus(dir: &Path, catalog: &Catalog, config: &LintConfig) -> CorpusReport {
    let config = with_forced_rules(config);
    let (files, walk_errors) = collect_files(&[dir.to_path_buf()]);
    let mut report = CorpusReport::default();
    for e in walk_errors {
        report
            .mismatches
            .push(error_mismatch(Path::new(&e.path), 0, 0, e.message));
    }
    for path in files {
        let unit = match load_source(&path) {
            Ok(u) => u,
            Err(e) => {
                report.mismatches.push(error_mismatch(&path, 0, 0, e.to_string()));
                continue;
            }
        };
        let expected = match parse_expectations(&unit, catalog) {
            Ok(x) => x,
            Err(e) => {
                report.mismatches.push(error_mismatch(&path, 0, 0, e.to_string()));
                continue;
            }
        };
        report.fixtures.push(Fixture {
            path: path.clone(),
            expectations: expected.len(),
        });
        let found = match analyze_file(&unit, catalog, &config) {
            Ok(f) => f,
            Err(e) => {
                let (l, c) = (e.line.unwrap_or(0), e.column.unwrap_or(0));
                report.mismatches.push(error_mismatch(&path, l, c, e.message));
                continue;
            }
        };

        let mut want: BTreeMap<(String, usize), usize> = BTreeMap::new();
        for x in &expected {
            *want.entry((x.rule_id.clone(), x.line)).or_default() += 1;
        }
        let mut got: BTreeMap<(String, usize), Vec<&crate::engine::Finding>> = BTreeMap::new();
        for f in &found {
            got.entry((f.rule_id.to_string(), f.span.start_line))
                .or_default()
                .push(f);
        }
        for (key, &n) in &want {
            let hits = got.get(key).map_or(0, Vec::len);
            let score = report.per_rule.entry(key.0.clone()).or_default();
            score.true_positives += n.min(hits);
            score.false_negatives += n.saturating_sub(hits);
            if hits < n {
                report.mismatches.push(Mismatch {
                    path: path.display().to_string(),
                    line: key.1,
                    column: 0,
                    kind: MismatchKind::Missing,
                    rule_id: key.0.clone(),
                    detail: "expected finding not reported".to_string(),
                });
            }
        }
        for (key, fs) in &got {
            let n = want.get(key).copied().unwrap_or(0);
            let score = report.per_rule.entry(key.0.clone()).or_default();
            score.false_positives += fs.len().saturating_sub(n);
            for f in fs.iter().skip(n) {
                report.mismatches.push(Mismatch {
                    path: path.display().to_string(),
                    line: f.span.start_line,
                    column: f.span.start_col,
                    kind: MismatchKind::Unexpected,
                    rule_id: key.0.clone(),
                    detail: f.message.clone(),
                });
            }
        }
    }
    report.mismatches.sort();
    let t = report.totals();
    report.pass = t.false_negatives == 0 && t.false_positives == 0 && report.mismatches.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_catalog;

    fn expect(src: &str) -> Result<Vec<(String, usize)>, HarnessError> {
        let unit = SourceUnit::script("f.py", src);
        Ok(parse_expectations(&unit, load_catalog())?
            .into_iter()
            .map(|e| (e.rule_id, e.line))
            .collect())
    }

    #[test]
    fn trailing_expectation_binds_to_its_line() {
        let got = expect("import torch\ntorch.autograd.set_detect_anomaly(True)  # expect[PT-14]\n").unwrap();
        assert_eq!(got, vec![("PT-14".to_string(), 2)]);
    }

    #[test]
    fn standalone_expectation_binds_to_next_code_line() {
        let got = expect("import tensorflow as tf\n# expect[TK-07]\n\n# setup\nsess = tf.Session()\n").unwrap();
        assert_eq!(got, vec![("TK-07".to_string(), 5)]);
    }

    #[test]
    fn comma_separated_and_repeated() {
        let got = expect("x = 1  # expect[PT-02, PT-23]  # expect[PT-09]\n").unwrap();
        assert_eq!(got.len(), 3);
        assert!(got.iter().all(|e| e.1 == 1));
    }

    #[test]
    fn unknown_rule_fails_loudly() {
        assert!(matches!(
            expect("x = 1  # expect[PT-99]\n"),
            Err(HarnessError::UnknownExpectedRule { rule_id, .. }) if rule_id == "PT-99"
        ));
    }

    fn corpus(files: &[(&str, &str)]) -> CorpusReport {
        let dir = tempfile::tempdir().unwrap();
        for (name, src) in files {
            let p = dir.path().join(name);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, src).unwrap();
        }
        run_corpus(dir.path(), load_catalog(), &LintConfig::default())
    }

    const POS: &str = "import torch\ntorch.autograd.set_detect_anomaly(True)  # expect[PT-14]\n";
    const NEG: &str = "import torch\ntorch.autograd.set_detect_anomaly(False)\n";

    #[test]
    fn consistent_corpus_passes() {
        let r = corpus(&[("pytorch/PT-14/pos.py", POS), ("pytorch/PT-14/neg.py", NEG)]);
        assert!(r.pass, "{}", r.render());
        assert_eq!(r.per_rule["PT-14"].true_positives, 1);
        assert!(!r.coverage_gaps(load_catalog()).iter().any(|g| g.starts_with("PT-14")));
    }

    #[test]
    fn missing_finding_is_a_false_negative() {
        let r = corpus(&[("pos.py", "import torch\nx = 1  # expect[PT-14]\n")]);
        assert!(!r.pass);
        assert_eq!(r.per_rule["PT-14"].false_negatives, 1);
    }

    #[test]
    fn finding_in_negative_is_a_false_positive() {
        let r = corpus(&[("neg.py", "import torch\ntorch.autograd.set_detect_anomaly(True)\n")]);
        assert!(!r.pass);
        assert_eq!(r.per_rule["PT-14"].false_positives, 1);
    }

    #[test]
    fn default_disabled_rules_are_forced_on() {
        let c = with_forced_rules(&LintConfig::default());
        assert!(FORCE_ENABLED.iter().all(|id| c.enable.contains(*id)));
    }
}
