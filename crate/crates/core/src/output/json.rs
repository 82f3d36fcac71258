//! Machine-readable JSON with sorted keys.

use serde_json::{json, Value};

use super::Report;

pub(crate) fn report_value(report: &Report) -> Value {
    let findings: Vec<Value> = report
        .findings
        .iter()
        .map(|f| {
            json!({
                "rule_id": f.rule_id,
                "name": f.name,
                "tag": f.tag.name(),
                "category": f.category.name(),
                "confidence": f.confidence.name(),
                "path": f.path,
                "cell": f.cell,
                "line": f.span.start_line,
                "column": f.span.start_col,
                "end_line": f.span.end_line,
                "end_column": f.span.end_col,
                "message": f.message,
                "practice_ids": f.practice_ids,
                "suggestion": f.suggestion,
            })
        })
        .collect();
    let s = &report.summary;
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "catalog_version": report.catalog_version,
        "findings": findings,
        "file_errors": report.file_errors,
        "summary": {
            "total": s.total,
            "file_errors": s.file_errors,
            "by_rule": s.by_rule,
            "by_category": s.by_category,
            "by_tag": s.by_tag,
            "by_confidence": s.by_confidence,
        },
    })
}

/// Pretty-printed JSON document terminated by a newline.
pub fn render_json(report: &Report) -> String {
    let mut out = serde_json::to_string_pretty(&report_value(report)).expect("values always serialize");
    out.push('\n');
    out
}
