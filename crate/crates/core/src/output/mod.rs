//! Report assembly and the text, JSON, SARIF and statistics renderers.

mod json;
mod sarif;
mod text;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::catalog::{category_distribution, stats::distribution_note, Catalog, Side, CATALOG_VERSION};
use crate::engine::{Analysis, FileError, Finding};

pub use json::render_json;
pub use sarif::render_sarif;
pub use text::render_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Sarif,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "text" => Some(Format::Text),
            "json" => Some(Format::Json),
            "sarif" => Some(Format::Sarif),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub total: usize,
    pub file_errors: usize,
    pub by_rule: BTreeMap<String, usize>,
    pub by_category: BTreeMap<String, usize>,
    pub by_tag: BTreeMap<String, usize>,
    pub by_confidence: BTreeMap<String, usize>,
}

impl Summary {
    pub fn of(findings: &[Finding], file_errors: &[FileError]) -> Summary {
        let mut s = Summary {
            total: findings.len(),
            file_errors: file_errors.len(),
            ..Summary::default()
        };
        for f in findings {
            *s.by_rule.entry(f.rule_id.to_string()).or_default() += 1;
            *s.by_category.entry(f.category.name().to_string()).or_default() += 1;
            *s.by_tag.entry(f.tag.name().to_string()).or_default() += 1;
            *s.by_confidence.entry(f.confidence.name().to_string()).or_default() += 1;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub findings: Vec<Finding>,
    pub file_errors: Vec<FileError>,
    pub summary: Summary,
    pub catalog_version: &'static str,
}

impl Report {
    pub fn new(findings: Vec<Finding>, file_errors: Vec<FileError>) -> Report {
        let summary = Summary::of(&findings, &file_errors);
        Report {
            findings,
            file_errors,
            summary,
            catalog_version: CATALOG_VERSION,
        }
    }

    pub fn render(&self, format: Format, catalog: &Catalog, color: bool) -> String {
        match format {
            Format::Text => render_text(self, color),
            Format::Json => render_json(self),
            Format::Sarif => render_sarif(self, catalog),
        }
    }
}

impl From<Analysis> for Report {
    fn from(a: Analysis) -> Report {
        Report::new(a.findings, a.file_errors)
    }
}

/// Category distribution table for one side, with its caveat if any.
pub fn render_stats(catalog: &Catalog, side: Side) -> String {
    let rows = category_distribution(catalog, side);
    let n: usize = rows.iter().map(|r| r.count).sum();
    let mut s = String::new();
    let _ = writeln!(s, "{} smell categories (N={n})", side.name());
    let _ = writeln!(s, "{:<22} {:>6} {:>8}", "category", "count", "percent");
    for r in &rows {
        let _ = writeln!(s, "{:<22} {:>6} {:>7}%", r.category.name(), r.count, r.percent);
    }
    if let Some(note) = distribution_note(side) {
        let _ = writeln!(s);
        let _ = writeln!(s, "{note}");
    }
    s
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::catalog::load_catalog;
    use crate::engine::{analyze_file, LintConfig};
    use crate::frontend::SourceUnit;

    pub fn report_for(units: &[SourceUnit]) -> Report {
        let mut findings = Vec::new();
        for u in units {
            findings.extend(analyze_file(u, load_catalog(), &LintConfig::default()).unwrap());
        }
        Report::new(findings, Vec::new())
    }

    pub const TWO_RULES: &str = "import torch\ntorch.autograd.set_detect_anomaly(True)\nfor x in data:\n    loss = model(x)\n    loss.backward(retain_graph=True)\n";
}
