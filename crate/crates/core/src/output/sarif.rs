//! SARIF 2.1.0 subset: one run, the full rule table and one physical
//! location per result.

use serde_json::{json, Value};

use super::Report;
use crate::catalog::{Catalog, Confidence};

const SCHEMA: &str = "https://json.schemastore.org/sarif-2.1.0.json";

fn level(c: Confidence) -> &'static str {
    match c {
        Confidence::High | Confidence::Medium => "warning",
        Confidence::Low => "note",
    }
}

/// Percent-encodes a path for use as a relative URI reference.
fn path_uri(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    for b in path.replace('\\', "/").bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' | b'/' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

fn rule_value(catalog: &Catalog, r: &crate::catalog::RuleSpec) -> Value {
    json!({
        "id": r.id,
        "name": r.name,
        "shortDescription": {"text": r.name},
        "fullDescription": {"text": r.description},
        "help": {"text": catalog.suggestion(r)},
        "defaultConfiguration": {
            "level": level(r.confidence),
            "enabled": r.default_enabled,
        },
        "properties": {
            "category": r.category.name(),
            "tag": r.tag.name(),
            "confidence": r.confidence.name(),
            "practiceIds": r.practice_ids,
        },
    })
}

pub fn render_sarif(report: &Report, catalog: &Catalog) -> String {
    let rules: Vec<Value> = catalog.rules.iter().map(|r| rule_value(catalog, r)).collect();
    let results: Vec<Value> = report
        .findings
        .iter()
        .map(|f| {
            let mut result = json!({
                "ruleId": f.rule_id,
                "level": level(f.confidence),
                "message": {"text": f.message},
                "locations": [{
                    "physicalLocation": {
                        "artifactLocation": {"uri": path_uri(&f.path)},
                        "region": {
                            "startLine": f.span.start_line,
                            "startColumn": f.span.start_col,
                            "endLine": f.span.end_line,
                            "endColumn": f.span.end_col,
                        },
                    },
                }],
            });
            if let Some(i) = catalog.rules.iter().position(|r| r.id == f.rule_id) {
                result["ruleIndex"] = json!(i);
            }
            if let Some(cell) = f.cell {
                result["properties"] = json!({"cell": cell});
            }
            result
        })
        .collect();
    let doc = json!({
        "$schema": SCHEMA,
        "version": "2.1.0",
        "runs": [{
            "tool": {
                "driver": {
                    "name": "leaklint",
                    "version": env!("CARGO_PKG_VERSION"),
                    "semanticVersion": env!("CARGO_PKG_VERSION"),
                    "rules": rules,
                },
            },
            "columnKind": "unicodeCodePoints",
            "results": results,
            "properties": {"catalogVersion": report.catalog_version},
        }],
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("values always serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::catalog::load_catalog;
    use crate::frontend::SourceUnit;

    fn sarif(units: &[SourceUnit]) -> Value {
        serde_json::from_str(&render_sarif(&report_for(units), load_catalog())).unwrap()
    }

    #[test]
    fn empty_report_lists_every_rule() {
        let v = sarif(&[]);
        assert_eq!(v["version"], "2.1.0");
        assert_eq!(v["runs"].as_array().unwrap().len(), 1);
        assert_eq!(v["runs"][0]["tool"]["driver"]["rules"].as_array().unwrap().len(), 46);
        assert_eq!(v["runs"][0]["results"], json!([]));
    }

    #[test]
    fn tk16_result_is_a_warning() {
        let src = "import tensorflow as tf\nfrom sklearn.model_selection import GridSearchCV\nsearch = GridSearchCV(clf, grid, n_jobs=-1)\n";
        let v = sarif(&[SourceUnit::script("a.py", src)]);
        let results = v["runs"][0]["results"].as_array().unwrap();
        let tk16 = results.iter().find(|r| r["ruleId"] == "TK-16").expect("TK-16 result");
        assert_eq!(tk16["level"], "warning");
        assert_eq!(tk16["locations"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn low_confidence_maps_to_note() {
        assert_eq!(level(Confidence::Low), "note");
        assert_eq!(level(Confidence::Medium), "warning");
        assert_eq!(level(Confidence::High), "warning");
    }

    #[test]
    fn uris_are_percent_encoded() {
        assert_eq!(path_uri("dir name/a.py"), "dir%20name/a.py");
        assert_eq!(path_uri(r"a\b.py"), "a/b.py");
    }
}
