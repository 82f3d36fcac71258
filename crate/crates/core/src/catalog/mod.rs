//! Built-in registry of rules and best practices, with the taxonomy queries
//! built on top of it.

mod practices;
mod rules;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::facts::Framework;

pub use stats::{category_distribution, cohen_kappa, percent_agreement, DistributionRow, KappaError};

pub const CATALOG_VERSION: &str = concat!("leaklint-catalog/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Category {
    ResourceManagement,
    GraphAndGradient,
    TrainingPipeline,
    LoopLifecycle,
    GraphManagement,
    FrameworkAbstraction,
    EnvironmentConfig,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::ResourceManagement,
        Category::GraphAndGradient,
        Category::TrainingPipeline,
        Category::LoopLifecycle,
        Category::GraphManagement,
        Category::FrameworkAbstraction,
        Category::EnvironmentConfig,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::ResourceManagement => "ResourceManagement",
            Category::GraphAndGradient => "GraphAndGradient",
            Category::TrainingPipeline => "TrainingPipeline",
            Category::LoopLifecycle => "LoopLifecycle",
            Category::GraphManagement => "GraphManagement",
            Category::FrameworkAbstraction => "FrameworkAbstraction",
            Category::EnvironmentConfig => "EnvironmentConfig",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Category::ResourceManagement => "RM",
            Category::GraphAndGradient => "GG",
            Category::TrainingPipeline => "TP",
            Category::LoopLifecycle => "LL",
            Category::GraphManagement => "GM",
            Category::FrameworkAbstraction => "FA",
            Category::EnvironmentConfig => "Env",
        }
    }

    /// Accepts the full name or the abbreviation, case-insensitively.
    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s) || c.abbrev().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FrameworkTag {
    G,
    P,
    T,
    K,
    TK,
}

impl FrameworkTag {
    pub const ALL: [FrameworkTag; 5] = [
        FrameworkTag::G,
        FrameworkTag::P,
        FrameworkTag::T,
        FrameworkTag::K,
        FrameworkTag::TK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrameworkTag::G => "G",
            FrameworkTag::P => "P",
            FrameworkTag::T => "T",
            FrameworkTag::K => "K",
            FrameworkTag::TK => "TK",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            FrameworkTag::G => "general",
            FrameworkTag::P => "PyTorch-specific",
            FrameworkTag::T => "TensorFlow-specific",
            FrameworkTag::K => "Keras-specific",
            FrameworkTag::TK => "shared by TensorFlow and Keras",
        }
    }

    pub fn parse(s: &str) -> Option<FrameworkTag> {
        FrameworkTag::ALL.into_iter().find(|t| t.name() == s)
    }
}

impl fmt::Display for FrameworkTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered low < medium < high, so `>=` means "at least as confident".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl Confidence {
    pub fn name(self) -> &'static str {
        match self {
            Confidence::Low => "low",
            Confidence::Medium => "medium",
            Confidence::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<Confidence> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Some(Confidence::Low),
            "medium" => Some(Confidence::Medium),
            "high" => Some(Confidence::High),
            _ => None,
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Framework population a distribution is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pytorch,
    Tensorflow,
    Keras,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::Pytorch, Side::Tensorflow, Side::Keras];

    pub fn name(self) -> &'static str {
        match self {
            Side::Pytorch => "pytorch",
            Side::Tensorflow => "tensorflow",
            Side::Keras => "keras",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|x| x.name().eq_ignore_ascii_case(s))
    }
}

pub(crate) const TORCH_APPLIES: &[Framework] = &[Framework::Pytorch];
pub(crate) const TF_APPLIES: &[Framework] = &[Framework::Tensorflow, Framework::Keras];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleSpec {
    pub id: &'static str,
    pub name: &'static str,
    pub tag: FrameworkTag,
    pub category: Category,
    pub confidence: Confidence,
    pub default_enabled: bool,
    pub applies_when: &'static [Framework],
    /// Distribution populations this rule is counted in.
    pub sides: &'static [Side],
    pub practice_ids: &'static [&'static str],
    pub description: &'static str,
    pub trigger: &'static str,
    pub message_template: &'static str,
}

impl RuleSpec {
    pub fn is_pytorch(&self) -> bool {
        self.id.starts_with("PT-")
    }

    pub fn render_message(&self, subject: &str) -> String {
        self.message_template.replace("{subject}", subject)
    }

    pub fn applies_to(&self, frameworks: &BTreeSet<Framework>) -> bool {
        self.applies_when.iter().any(|f| frameworks.contains(f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BestPractice {
    pub id: &'static str,
    pub name: &'static str,
    pub summary: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("catalog invariant violated: {0}")]
    CatalogInvalid(String),
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub rules: Vec<RuleSpec>,
    pub practices: Vec<BestPractice>,
}

/// The validated built-in catalog. Validation failure is a build defect.
pub fn load_catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let catalog = Catalog {
            rules: rules::RULES.to_vec(),
            practices: practices::PRACTICES.to_vec(),
        };
        if let Err(e) = catalog.validate() {
            panic!("{e}");
        }
        catalog
    })
}

fn count_by<K: Ord, T>(items: &[T], key: impl Fn(&T) -> K) -> BTreeMap<K, usize> {
    let mut out = BTreeMap::new();
    for i in items {
        *out.entry(key(i)).or_insert(0) += 1;
    }
    out
}

impl Catalog {
    pub fn rule(&self, id: &str) -> Option<&RuleSpec> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn practice(&self, id: &str) -> Option<&BestPractice> {
        self.practices.iter().find(|p| p.id == id)
    }

    pub fn pytorch_rules(&self) -> impl Iterator<Item = &RuleSpec> {
        self.rules.iter().filter(|r| r.is_pytorch())
    }

    pub fn tfkeras_rules(&self) -> impl Iterator<Item = &RuleSpec> {
        self.rules.iter().filter(|r| !r.is_pytorch())
    }

    pub fn side_rules(&self, side: Side) -> Vec<&RuleSpec> {
        self.rules.iter().filter(|r| r.sides.contains(&side)).collect()
    }

    /// Practice names of a rule joined for the `fix:` line.
    pub fn practice_names(&self, rule: &RuleSpec) -> String {
        rule.practice_ids
            .iter()
            .filter_map(|p| self.practice(p))
            .map(|p| p.name)
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// Practice summaries of a rule, for suggestion and help text.
    pub fn suggestion(&self, rule: &RuleSpec) -> String {
        rule.practice_ids
            .iter()
            .filter_map(|p| self.practice(p))
            .map(|p| format!("{}: {}", p.name, p.summary))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Checks every structural and count invariant of the registry.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let fail = |m: String| Err(CatalogError::CatalogInvalid(m));
        let ids: BTreeSet<_> = self.rules.iter().map(|r| r.id).collect();
        if ids.len() != self.rules.len() {
            return fail("rule ids are not unique".into());
        }
        let pids: BTreeSet<_> = self.practices.iter().map(|p| p.id).collect();
        if pids.len() != self.practices.len() {
            return fail("practice ids are not unique".into());
        }
        if self.rules.len() != 46 {
            return fail(format!("expected 46 rules, found {}", self.rules.len()));
        }
        let pt: Vec<_> = self.pytorch_rules().cloned().collect();
        let tk: Vec<_> = self.tfkeras_rules().cloned().collect();
        if pt.len() != 30 || tk.len() != 16 {
            return fail(format!(
                "expected 30 PT and 16 TK rules, found {} and {}",
                pt.len(),
                tk.len()
            ));
        }
        if self.practices.len() != 50 {
            return fail(format!("expected 50 practices, found {}", self.practices.len()));
        }
        let mut referenced = BTreeSet::new();
        for r in &self.rules {
            if r.practice_ids.is_empty() {
                return fail(format!("{} links no practice", r.id));
            }
            for p in r.practice_ids {
                if !pids.contains(p) {
                    return fail(format!("{} links unknown practice {p}", r.id));
                }
                referenced.insert(*p);
            }
            if r.message_template.is_empty() {
                return fail(format!("{} has an empty message template", r.id));
            }
        }
        if let Some(p) = pids.difference(&referenced).next() {
            return fail(format!("practice {p} is linked from no rule"));
        }
        use Category::*;
        use FrameworkTag::*;
        for r in &pt {
            if !matches!(r.tag, G | P) {
                return fail(format!("{} has tag {} outside G/P", r.id, r.tag));
            }
            if !matches!(
                r.category,
                ResourceManagement | GraphAndGradient | TrainingPipeline | LoopLifecycle
            ) {
                return fail(format!("{} has a non-PyTorch category", r.id));
            }
        }
        for r in &tk {
            if r.tag == P {
                return fail(format!("{} has tag P", r.id));
            }
            if matches!(r.category, GraphAndGradient | LoopLifecycle) {
                return fail(format!("{} has a PyTorch-only category", r.id));
            }
        }
        let expect = |name: &str, got: BTreeMap<String, usize>, want: &[(&str, usize)]| {
            let want: BTreeMap<String, usize> = want.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            if got != want {
                return fail(format!("{name}: expected {want:?}, found {got:?}"));
            }
            Ok(())
        };
        expect(
            "PT tags",
            count_by(&pt, |r| r.tag.name().to_string()),
            &[("G", 21), ("P", 9)],
        )?;
        expect(
            "TK tags",
            count_by(&tk, |r| r.tag.name().to_string()),
            &[("G", 7), ("T", 4), ("K", 1), ("TK", 4)],
        )?;
        expect(
            "PT categories",
            count_by(&pt, |r| r.category.abbrev().to_string()),
            &[("RM", 16), ("GG", 8), ("TP", 4), ("LL", 2)],
        )?;
        let tf: Vec<_> = self.side_rules(Side::Tensorflow).into_iter().cloned().collect();
        expect(
            "TF categories",
            count_by(&tf, |r| r.category.abbrev().to_string()),
            &[("RM", 6), ("TP", 2), ("GM", 2), ("FA", 2)],
        )?;
        if self.side_rules(Side::Pytorch).len() != 30 || tf.len() != 12 {
            return fail("side populations do not match the rule sets".into());
        }
        Ok(())
    }

    /// Human-readable description of a rule and its linked practices.
    pub fn explain(&self, rule_id: &str) -> Result<String, CatalogError> {
        let r = self
            .rule(rule_id)
            .ok_or_else(|| CatalogError::UnknownRule(rule_id.to_string()))?;
        let mut s = String::new();
        let _ = writeln!(s, "{}  {}", r.id, r.name);
        let _ = writeln!(s, "tag:        {} ({})", r.tag, r.tag.describe());
        let _ = writeln!(s, "category:   {}", r.category);
        let _ = writeln!(s, "confidence: {}", r.confidence);
        let _ = writeln!(
            s,
            "default:    {}",
            if r.default_enabled {
                "enabled"
            } else {
                "disabled (use --enable)"
            }
        );
        let fws: Vec<_> = r.applies_when.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "frameworks: {}", fws.join(", "));
        let _ = writeln!(s);
        let _ = writeln!(s, "{}", r.description);
        let _ = writeln!(s);
        let _ = writeln!(s, "trigger: {}", r.trigger);
        let _ = writeln!(s);
        let _ = writeln!(s, "practices:");
        for pid in r.practice_ids {
            if let Some(p) = self.practice(pid) {
                let _ = writeln!(s, "  {}  {}", p.id, p.name);
                let _ = writeln!(s, "       {}", p.summary);
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_loads_and_validates() {
        let c = load_catalog();
        assert_eq!(c.rules.len(), 46);
        assert_eq!(c.practices.len(), 50);
    }

    #[test]
    fn validation_rejects_broken_registries() {
        let mut c = load_catalog().clone();
        c.rules.pop();
        assert!(c.validate().is_err());
        let mut c = load_catalog().clone();
        c.practices.push(BestPractice {
            id: "X01",
            name: "x",
            summary: "x",
        });
        assert!(c.validate().is_err());
        let mut c = load_catalog().clone();
        c.rules[0].practice_ids = &[];
        assert!(c.validate().is_err());
        let mut c = load_catalog().clone();
        c.rules[0].category = Category::GraphManagement;
        assert!(matches!(c.validate(), Err(CatalogError::CatalogInvalid(_))));
    }

    #[test]
    fn explain_lists_practices() {
        let c = load_catalog();
        let text = c.explain("PT-02").unwrap();
        assert!(text.contains("P21"));
        assert!(text.contains("Clear Graph and Backpropagate Immediately"));
        let text = c.explain("TK-16").unwrap();
        assert!(text.contains("K05"));
        assert!(text.contains("setting n_jobs=1 for single-threaded execution"));
        assert_eq!(c.explain("ZZ-99"), Err(CatalogError::UnknownRule("ZZ-99".into())));
    }

    #[test]
    fn parses_names() {
        assert_eq!(Category::parse("rm"), Some(Category::ResourceManagement));
        assert_eq!(Category::parse("GraphAndGradient"), Some(Category::GraphAndGradient));
        assert_eq!(FrameworkTag::parse("TK"), Some(FrameworkTag::TK));
        assert_eq!(Confidence::parse("HIGH"), Some(Confidence::High));
        assert!(Confidence::Low < Confidence::High);
    }

    #[test]
    fn messages_render_subject() {
        let c = load_catalog();
        let r = c.rule("TK-07").unwrap();
        assert_eq!(r.render_message("sess"), "session `sess` is never closed");
    }
}
