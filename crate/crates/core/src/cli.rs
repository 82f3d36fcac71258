//! Command-line front end: argument parsing, config file loading and
//! dispatch to the engine, renderers and corpus runner.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::catalog::{load_catalog, Catalog, Category, Confidence, FrameworkTag, Side};
use crate::engine::{analyze_paths, ConfigInvalid, Execution, LintConfig, META_RULE};
use crate::harness::run_corpus;
use crate::output::{render_stats, Format, Report};

pub const CONFIG_FILE: &str = ".leaklint.json";
pub const CONFIG_ENV: &str = "LEAKLINT_CONFIG";

#[derive(Parser, Debug)]
#[command(
    name = "leaklint",
    version,
    about = "Static linter for resource-leak smells in PyTorch, TensorFlow and Keras code"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyse files and directories.
    Check(CheckArgs),
    /// Describe a rule and its recommended practices.
    Explain { rule: String },
    /// List every rule in the catalog.
    ListRules,
    /// Show the category distribution of one framework's rules.
    Stats {
        #[arg(long, value_enum)]
        side: SideArg,
    },
    /// Run an annotated fixture corpus.
    Corpus { dir: PathBuf },
}

#[derive(Args, Debug, Default)]
struct CheckArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Rule ids, category names or tags to run (comma-separated).
    #[arg(long, value_delimiter = ',')]
    select: Option<Vec<String>>,
    /// Rule ids, category names or tags to skip (comma-separated).
    #[arg(long, value_delimiter = ',')]
    ignore: Option<Vec<String>>,
    #[arg(long, value_enum)]
    min_confidence: Option<ConfidenceArg>,
    #[arg(long, value_enum)]
    framework: Option<FrameworkArg>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Threshold override as key=value (repeatable).
    #[arg(long = "threshold", value_name = "KEY=VALUE")]
    thresholds: Vec<String>,
    /// Turn on a default-disabled rule (repeatable).
    #[arg(long = "enable", value_name = "RULE", value_delimiter = ',')]
    enable: Vec<String>,
    #[arg(long)]
    no_color: bool,
    /// Analyse files one at a time on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
enum FormatArg {
    #[default]
    Text,
    Json,
    Sarif,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ConfidenceArg {
    High,
    Medium,
    Low,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FrameworkArg {
    Pytorch,
    Tensorflow,
    Keras,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SideArg {
    Pytorch,
    Tensorflow,
    Keras,
}

/// Process state the CLI reads, gathered once so runs are reproducible in tests.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    pub cwd: PathBuf,
    pub config_env: Option<PathBuf>,
    pub no_color: bool,
    pub stdout_tty: bool,
}

impl Environment {
    pub fn from_process() -> Environment {
        Environment {
            cwd: std::env::current_dir().unwrap_or_default(),
            config_env: std::env::var_os(CONFIG_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
            no_color: std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()),
            stdout_tty: std::io::stdout().is_terminal(),
        }
    }
}

/// Selection tokens expanded to rule ids, remembering which tokens were
/// literal ids.
#[derive(Debug, Default)]
struct Expanded {
    ids: BTreeSet<String>,
    literal: BTreeSet<String>,
}

fn expand(tokens: &[String], catalog: &Catalog, key: &str) -> Result<Expanded, ConfigInvalid> {
    let mut out = Expanded::default();
    for raw in tokens {
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        let upper = t.to_ascii_uppercase();
        if catalog.rule(&upper).is_some() || upper == META_RULE {
            out.ids.insert(upper.clone());
            out.literal.insert(upper);
        } else if let Some(cat) = Category::parse(t) {
            out.ids.extend(
                catalog
                    .rules
                    .iter()
                    .filter(|r| r.category == cat)
                    .map(|r| r.id.to_string()),
            );
        } else if let Some(tag) = FrameworkTag::parse(&upper) {
            out.ids
                .extend(catalog.rules.iter().filter(|r| r.tag == tag).map(|r| r.id.to_string()));
        } else {
            return Err(ConfigInvalid::new(
                key,
                format!("`{t}` is not a rule id, category or tag"),
            ));
        }
    }
    Ok(out)
}

/// Raw settings from one source (config file or flags) before merging.
#[derive(Debug, Default)]
struct Settings {
    select: Option<Vec<String>>,
    ignore: Option<Vec<String>>,
    min_confidence: Option<Confidence>,
    framework: Option<Option<Side>>,
    thresholds: Vec<(String, String)>,
    enable: Vec<String>,
}

fn string_list(v: &Value, key: &str) -> Result<Vec<String>, ConfigInvalid> {
    v.as_array()
        .and_then(|a| {
            a.iter()
                .map(|x| x.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
        })
        .ok_or_else(|| ConfigInvalid::new(key, "expected a list of strings"))
}

fn parse_framework(s: &str, key: &str) -> Result<Option<Side>, ConfigInvalid> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    Side::parse(s)
        .map(Some)
        .ok_or_else(|| ConfigInvalid::new(key, format!("unknown framework `{s}`")))
}

/// Parses a `.leaklint.json` document.
fn parse_config_text(text: &str) -> Result<Settings, ConfigInvalid> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ConfigInvalid::new("<document>", e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| ConfigInvalid::new("<document>", "expected a JSON object"))?;
    let mut s = Settings::default();
    for (key, v) in obj {
        match key.as_str() {
            "select" => s.select = Some(string_list(v, key)?),
            "ignore" => s.ignore = Some(string_list(v, key)?),
            "enable" => s.enable = string_list(v, key)?,
            "min_confidence" => {
                let c = v
                    .as_str()
                    .and_then(Confidence::parse)
                    .ok_or_else(|| ConfigInvalid::new(key, "expected high, medium or low"))?;
                s.min_confidence = Some(c);
            }
            "framework" => {
                let f = v.as_str().ok_or_else(|| ConfigInvalid::new(key, "expected a string"))?;
                s.framework = Some(parse_framework(f, key)?);
            }
            "thresholds" => {
                let m = v
                    .as_object()
                    .ok_or_else(|| ConfigInvalid::new(key, "expected an object"))?;
                for (k, x) in m {
                    let n = x
                        .as_i64()
                        .ok_or_else(|| ConfigInvalid::new(format!("thresholds.{k}"), "expected an integer"))?;
                    s.thresholds.push((k.clone(), n.to_string()));
                }
            }
            _ => return Err(ConfigInvalid::new(key, "unknown key")),
        }
    }
    Ok(s)
}

fn flag_settings(a: &CheckArgs) -> Result<Settings, ConfigInvalid> {
    let mut thresholds = Vec::new();
    for t in &a.thresholds {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| ConfigInvalid::new("--threshold", format!("`{t}` is not key=value")))?;
        thresholds.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(Settings {
        select: a.select.clone(),
        ignore: a.ignore.clone(),
        min_confidence: a.min_confidence.map(|c| match c {
            ConfidenceArg::High => Confidence::High,
            ConfidenceArg::Medium => Confidence::Medium,
            ConfidenceArg::Low => Confidence::Low,
        }),
        framework: a.framework.map(|f| match f {
            FrameworkArg::Pytorch => Some(Side::Pytorch),
            FrameworkArg::Tensorflow => Some(Side::Tensorflow),
            FrameworkArg::Keras => Some(Side::Keras),
            FrameworkArg::All => None,
        }),
        thresholds,
        enable: a.enable.clone(),
    })
}

/// Config file to use: `--config`, then `LEAKLINT_CONFIG`, then the nearest
/// `.leaklint.json` in the working directory or its ancestors.
fn config_path(explicit: Option<&Path>, env: &Environment) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    if let Some(p) = &env.config_env {
        return Some(p.clone());
    }
    env.cwd.ancestors().map(|d| d.join(CONFIG_FILE)).find(|p| p.is_file())
}

fn read_config_file(explicit: Option<&Path>, env: &Environment) -> Result<Settings, ConfigInvalid> {
    match config_path(explicit, env) {
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| ConfigInvalid::new("<file>", format!("{}: {e}", p.display())))?;
            parse_config_text(&text)
        }
        None => Ok(Settings::default()),
    }
}

/// Effective configuration without command-line overrides: the config file
/// over built-in defaults.
pub fn load_config(explicit: Option<&Path>, env: &Environment, catalog: &Catalog) -> Result<LintConfig, ConfigInvalid> {
    merge(read_config_file(explicit, env)?, Settings::default(), catalog)
}

fn merge(file: Settings, flags: Settings, catalog: &Catalog) -> Result<LintConfig, ConfigInvalid> {
    let mut config = LintConfig::default();
    let select = expand(
        flags.select.as_ref().or(file.select.as_ref()).map_or(&[][..], |v| v),
        catalog,
        "select",
    )?;
    let ignore = expand(
        flags.ignore.as_ref().or(file.ignore.as_ref()).map_or(&[][..], |v| v),
        catalog,
        "ignore",
    )?;
    if let Some(id) = select.literal.intersection(&ignore.literal).next() {
        return Err(ConfigInvalid::new(
            "select",
            format!("`{id}` is both selected and ignored"),
        ));
    }
    config.select = select.ids.difference(&ignore.ids).cloned().collect();
    if !select.ids.is_empty() && config.select.is_empty() {
        return Err(ConfigInvalid::new("select", "every selected rule is also ignored"));
    }
    config.ignore = ignore.ids;
    let mut enable = expand(&file.enable, catalog, "enable")?.ids;
    enable.extend(expand(&flags.enable, catalog, "enable")?.ids);
    config.enable = enable;
    if let Some(c) = flags.min_confidence.or(file.min_confidence) {
        config.min_confidence = c;
    }
    if let Some(f) = flags.framework.or(file.framework) {
        config.framework = f;
    }
    for (k, v) in file.thresholds.iter().chain(&flags.thresholds) {
        config.set_threshold(k, v)?;
    }
    config.validate(catalog)?;
    Ok(config)
}

/// Flags override the config file, which overrides built-in defaults.
fn check_config(a: &CheckArgs, env: &Environment, catalog: &Catalog) -> Result<LintConfig, ConfigInvalid> {
    let file = read_config_file(a.config.as_deref(), env)?;
    let mut config = merge(file, flag_settings(a)?, catalog)?;
    if a.sequential {
        config.execution = Execution::Sequential;
    }
    Ok(config)
}

fn list_rules(catalog: &Catalog) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<7} {:<3} {:<21} {:<7} {:<8} name",
        "id", "tag", "category", "conf", "default"
    );
    for r in &catalog.rules {
        let _ = writeln!(
            s,
            "{:<7} {:<3} {:<21} {:<7} {:<8} {}",
            r.id,
            r.tag.name(),
            r.category.name(),
            r.confidence.name(),
            if r.default_enabled { "on" } else { "off" },
            r.name
        );
    }
    s
}

fn run_check(a: &CheckArgs, env: &Environment, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let catalog = load_catalog();
    let config = match check_config(a, env, catalog) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "leaklint: {e}");
            return 2;
        }
    };
    let report = Report::from(analyze_paths(&a.paths, catalog, &config));
    let format = match a.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
        FormatArg::Sarif => Format::Sarif,
    };
    let color = format == Format::Text && env.stdout_tty && !env.no_color && !a.no_color;
    let _ = out.write_all(report.render(format, catalog, color).as_bytes());
    if report.findings.is_empty() && report.file_errors.is_empty() {
        0
    } else {
        1
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, env: &Environment, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
            };
        }
    };
    let catalog = load_catalog();
    match cli.command {
        Command::Check(a) => run_check(&a, env, out, err),
        Command::Explain { rule } => match catalog.explain(&rule.to_ascii_uppercase()) {
            Ok(text) => {
                let _ = out.write_all(text.as_bytes());
                0
            }
            Err(e) => {
                let _ = writeln!(err, "leaklint: {e}");
                2
            }
        },
        Command::ListRules => {
            let _ = out.write_all(list_rules(catalog).as_bytes());
            0
        }
        Command::Stats { side } => {
            let side = match side {
                SideArg::Pytorch => Side::Pytorch,
                SideArg::Tensorflow => Side::Tensorflow,
                SideArg::Keras => Side::Keras,
            };
            let _ = out.write_all(render_stats(catalog, side).as_bytes());
            0
        }
        Command::Corpus { dir } => {
            if !dir.is_dir() {
                let _ = writeln!(err, "leaklint: {} is not a directory", dir.display());
                return 2;
            }
            let config = match load_config(None, env, catalog) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(err, "leaklint: {e}");
                    return 2;
                }
            };
            let report = run_corpus(&dir, catalog, &config);
            let gaps = report.coverage_gaps(catalog);
            let _ = out.write_all(report.render().as_bytes());
            for g in &gaps {
                let _ = writeln!(out, "coverage: {g}");
            }
            i32::from(!(report.pass && gaps.is_empty()))
        }
    }
}
