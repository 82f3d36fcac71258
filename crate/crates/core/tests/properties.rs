//! Property tests for invariants that hold across arbitrary inputs.

mod support;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use leaklint::catalog::{cohen_kappa, load_catalog, Confidence};
use leaklint::engine::{analyze_file, Finding, LintConfig};
use leaklint::frontend::{LineIndex, SourceUnit, TextRange};
use leaklint::harness::FORCE_ENABLED;
use proptest::prelude::*;

fn fixtures() -> &'static [(std::path::PathBuf, String)] {
    static F: OnceLock<Vec<(std::path::PathBuf, String)>> = OnceLock::new();
    F.get_or_init(support::fixture_sources)
}

fn config() -> LintConfig {
    let mut c = LintConfig::default();
    c.enable.extend(FORCE_ENABLED.iter().map(|s| s.to_string()));
    c
}

fn lint(text: &str, config: &LintConfig) -> Vec<Finding> {
    analyze_file(&SourceUnit::script("f.py", text), load_catalog(), config).expect("fixture parses")
}

type Key = (&'static str, usize, usize);

fn keys(findings: &[Finding]) -> BTreeSet<Key> {
    findings
        .iter()
        .map(|f| (f.rule_id, f.span.start_line, f.span.start_col))
        .collect()
}

/// Byte offset of a 1-based (line, column) position.
fn offset_of(index: &LineIndex, text: &str, line: usize, col: usize) -> usize {
    let start = index.line_start(line).unwrap();
    text[start..]
        .char_indices()
        .nth(col - 1)
        .map_or(text.len(), |(i, _)| start + i)
}

fn char_boundary(text: &str, pick: usize) -> usize {
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain([text.len()]).collect();
    bounds[pick % bounds.len()]
}

proptest! {
    #[test]
    fn span_positions_map_back_to_offsets(text in "[a-zé中\n\t ]{0,80}", a in any::<usize>(), b in any::<usize>()) {
        let (x, y) = (char_boundary(&text, a), char_boundary(&text, b));
        let range = TextRange::new(x.min(y), x.max(y));
        let index = LineIndex::new(&text);
        let span = index.span(&text, range);
        prop_assert_eq!(offset_of(&index, &text, span.start_line, span.start_col), span.byte_start);
        prop_assert_eq!(offset_of(&index, &text, span.end_line, span.end_col), span.byte_end);
        prop_assert!((span.start_line, span.start_col) <= (span.end_line, span.end_col));
    }

    #[test]
    fn kappa_stays_in_range(pairs in prop::collection::vec((0u8..4, 0u8..4), 1..80)) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        if let Ok(k) = cohen_kappa(&a, &b) {
            prop_assert!((-1.0..=1.0).contains(&k), "kappa {}", k);
        }
    }

    #[test]
    fn kappa_is_symmetric(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..60)) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        match (cohen_kappa(&a, &b), cohen_kappa(&b, &a)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x.is_ok(), y.is_ok()),
        }
    }

    #[test]
    fn ignoring_a_rule_removes_exactly_its_findings(pick in any::<prop::sample::Index>(), rule in any::<prop::sample::Index>()) {
        let (_, text) = &fixtures()[pick.index(fixtures().len())];
        let all = lint(text, &config());
        let ids: Vec<&str> = load_catalog().rules.iter().map(|r| r.id).collect();
        let id = ids[rule.index(ids.len())];
        let mut cfg = config();
        cfg.ignore.insert(id.to_string());
        let expected: BTreeSet<Key> = keys(&all).into_iter().filter(|k| k.0 != id).collect();
        prop_assert_eq!(keys(&lint(text, &cfg)), expected);
    }

    #[test]
    fn suppression_comments_never_add_findings(pick in any::<prop::sample::Index>(), line in any::<prop::sample::Index>(), ids in prop::option::of(any::<prop::sample::Index>())) {
        let (_, text) = &fixtures()[pick.index(fixtures().len())];
        let lines: Vec<&str> = text.split('\n').collect();
        let target = line.index(lines.len());
        prop_assume!(!lines[target].ends_with('\\'));
        let comment = match ids {
            Some(i) => {
                let rules = &load_catalog().rules;
                format!("  # leaklint: ignore[{}]", rules[i.index(rules.len())].id)
            }
            None => "  # leaklint: ignore".to_string(),
        };
        let edited: Vec<String> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| if i == target { format!("{l}{comment}") } else { l.to_string() })
            .collect();
        let unit = SourceUnit::script("f.py", edited.join("\n"));
        if let Ok(after) = analyze_file(&unit, load_catalog(), &config()) {
            let before = keys(&lint(text, &config()));
            prop_assert!(keys(&after).is_subset(&before));
        }
    }

    #[test]
    fn raising_min_confidence_yields_a_subset(pick in any::<prop::sample::Index>()) {
        let (_, text) = &fixtures()[pick.index(fixtures().len())];
        let at = |c: Confidence| {
            let mut cfg = config();
            cfg.min_confidence = c;
            keys(&lint(text, &cfg))
        };
        let (low, medium, high) = (at(Confidence::Low), at(Confidence::Medium), at(Confidence::High));
        prop_assert!(high.is_subset(&medium));
        prop_assert!(medium.is_subset(&low));
    }

    #[test]
    fn findings_are_sorted_and_unique(pick in any::<prop::sample::Index>(), other in any::<prop::sample::Index>()) {
        let a = &fixtures()[pick.index(fixtures().len())].1;
        let b = &fixtures()[other.index(fixtures().len())].1;
        let findings = lint(&format!("{a}\n{b}"), &config());
        let order: Vec<_> = findings.iter().map(|f| (f.span.start_line, f.span.start_col, f.rule_id)).collect();
        prop_assert!(order.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(findings.windows(2).all(|w| w[0] != w[1]));
    }
}
