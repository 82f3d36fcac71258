//! Line-oriented human output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::Report;

const BOLD: &str = "\x1b[1m";
const YELLOW: &str = "\x1b[33m";
const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

fn paint(s: &str, code: &str, color: bool) -> String {
    if color {
        format!("{code}{s}{RESET}")
    } else {
        s.to_string()
    }
}

fn counts(map: &BTreeMap<String, usize>) -> String {
    map.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

/// `path:line:col  ID  [category/tag/confidence]  message` per finding, each
/// followed by its `fix:` line, then file errors and the summary block.
pub fn render_text(report: &Report, color: bool) -> String {
    let mut s = String::new();
    for f in &report.findings {
        let _ = writeln!(
            s,
            "{}:{}:{}  {}  [{}/{}/{}]  {}",
            f.path,
            f.span.start_line,
            f.span.start_col,
            paint(f.rule_id, YELLOW, color),
            f.category,
            f.tag,
            f.confidence,
            f.message
        );
        let _ = writeln!(s, "  fix: {}", f.fix);
    }
    for e in &report.file_errors {
        let loc = match (e.line, e.column) {
            (Some(l), Some(c)) => format!("{}:{l}:{c}", e.path),
            _ => e.path.clone(),
        };
        let _ = writeln!(s, "{loc}  {}  {}", paint("error", RED, color), e.message);
    }
    if !report.findings.is_empty() || !report.file_errors.is_empty() {
        let _ = writeln!(s);
    }
    let sum = &report.summary;
    if sum.total > 0 {
        let _ = writeln!(s, "by rule:       {}", counts(&sum.by_rule));
        let _ = writeln!(s, "by category:   {}", counts(&sum.by_category));
        let _ = writeln!(s, "by tag:        {}", counts(&sum.by_tag));
        let _ = writeln!(s, "by confidence: {}", counts(&sum.by_confidence));
    }
    let line = format!(
        "{}, {}",
        plural(sum.total, "finding"),
        plural(sum.file_errors, "file error")
    );
    let _ = writeln!(s, "{}", paint(&line, BOLD, color));
    s
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::engine::FileError;
    use crate::frontend::SourceUnit;

    #[test]
    fn finding_line_and_fix_line() {
        let r = report_for(&[SourceUnit::script(
            "a.py",
            "import torch\ntorch.autograd.set_detect_anomaly(True)\n",
        )]);
        let text = render_text(&r, false);
        let lines: Vec<&str> = text.lines().collect();
        assert!(
            lines[0].starts_with("a.py:2:1  PT-14  [ResourceManagement/G/high]  "),
            "{}",
            lines[0]
        );
        assert_eq!(lines[1], "  fix: Remove Debug Artifacts");
        assert!(text.ends_with("1 finding, 0 file errors\n"));
    }

    #[test]
    fn empty_report_is_summary_only() {
        let r = report_for(&[]);
        assert_eq!(render_text(&r, false), "0 findings, 0 file errors\n");
    }

    #[test]
    fn summary_counts_each_rule() {
        let text = render_text(&report_for(&[SourceUnit::script("a.py", TWO_RULES)]), false);
        assert!(text.contains("by rule:       PT-14=1 PT-23=1\n"));
    }

    #[test]
    fn file_errors_are_listed() {
        let r = Report::new(
            Vec::new(),
            vec![FileError {
                path: "bad.py".into(),
                line: Some(3),
                column: Some(7),
                message: "unexpected token".into(),
            }],
        );
        let text = render_text(&r, false);
        assert!(text.starts_with("bad.py:3:7  error  unexpected token\n"));
        assert!(text.ends_with("0 findings, 1 file error\n"));
    }

    #[test]
    fn color_only_when_asked() {
        let r = report_for(&[SourceUnit::script("a.py", TWO_RULES)]);
        assert!(!render_text(&r, false).contains('\x1b'));
        assert!(render_text(&r, true).contains('\x1b'));
    }
}
