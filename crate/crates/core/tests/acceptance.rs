//! End-to-end acceptance checks, one per criterion. Each prints a single
//! PASS/FAIL line; the test fails if any criterion fails.

mod support;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use leaklint::catalog::{
    category_distribution, cohen_kappa, load_catalog, percent_agreement, Category, FrameworkTag, Side,
};
use leaklint::engine::{analyze_file, analyze_paths, Execution, LintConfig};
use leaklint::frontend::{load_source, SourceUnit};
use leaklint::harness::{parse_expectations, run_corpus, FORCE_ENABLED};
use leaklint::output::{render_json, Report};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_leaklint")
}

fn criterion_1_catalog_counts() -> Outcome {
    let start = Instant::now();
    let c = load_catalog();
    c.validate().map_err(|e| e.to_string())?;
    let count = |pt: bool, tag: FrameworkTag| c.rules.iter().filter(|r| r.is_pytorch() == pt && r.tag == tag).count();
    ensure(c.rules.len() == 46, || format!("{} rules", c.rules.len()))?;
    ensure(c.pytorch_rules().count() == 30, || "PyTorch rule count".into())?;
    ensure(
        count(true, FrameworkTag::G) == 21 && count(true, FrameworkTag::P) == 9,
        || "PyTorch tags".into(),
    )?;
    ensure(c.tfkeras_rules().count() == 16, || "TF/Keras rule count".into())?;
    let tk = [FrameworkTag::G, FrameworkTag::T, FrameworkTag::K, FrameworkTag::TK].map(|t| count(false, t));
    ensure(tk == [7, 4, 1, 4], || format!("TF/Keras tags {tk:?}"))?;
    ensure(c.practices.len() == 50, || format!("{} practices", c.practices.len()))?;
    ensure(c.rules.iter().all(|r| !r.practice_ids.is_empty()), || {
        "rule without practice".into()
    })?;
    ensure(
        c.practices
            .iter()
            .all(|p| c.rules.iter().any(|r| r.practice_ids.contains(&p.id))),
        || "orphan practice".into(),
    )?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))
}

fn distribution(side: Side) -> Vec<(Category, usize, u32)> {
    category_distribution(load_catalog(), side)
        .into_iter()
        .map(|r| (r.category, r.count, r.percent))
        .collect()
}

fn criterion_2_pytorch_distribution() -> Outcome {
    let want = vec![
        (Category::ResourceManagement, 16, 53),
        (Category::GraphAndGradient, 8, 27),
        (Category::TrainingPipeline, 4, 13),
        (Category::LoopLifecycle, 2, 7),
    ];
    let got = distribution(Side::Pytorch);
    ensure(got == want, || format!("{got:?}"))
}

fn criterion_3_tensorflow_distribution() -> Outcome {
    // Published shares: RM 50, TP 16, GM 17, FA 17.
    let published = BTreeMap::from([
        (Category::ResourceManagement, 50i64),
        (Category::TrainingPipeline, 16),
        (Category::GraphManagement, 17),
        (Category::FrameworkAbstraction, 17),
    ]);
    let got = distribution(Side::Tensorflow);
    let counts: Vec<usize> = got.iter().map(|r| r.1).collect();
    ensure(counts == [6, 2, 2, 2], || format!("counts {counts:?}"))?;
    ensure(got.len() == published.len(), || format!("{got:?}"))?;
    for (cat, _, pct) in &got {
        let want = published.get(cat).ok_or_else(|| format!("unexpected category {cat}"))?;
        ensure((i64::from(*pct) - want).abs() <= 1, || {
            format!("{cat}: {pct}% vs {want}%")
        })?;
    }
    Ok(())
}

fn criterion_4_keras_distribution() -> Outcome {
    // Published shares: TP 33, Env 33, RM 17, FA 17, over a population the
    // shares imply is six rules.
    let published = BTreeMap::from([
        (Category::TrainingPipeline, 33.0),
        (Category::EnvironmentConfig, 33.0),
        (Category::ResourceManagement, 17.0),
        (Category::FrameworkAbstraction, 17.0),
    ]);
    let got = distribution(Side::Keras);
    let n: usize = got.iter().map(|r| r.1).sum();
    ensure(n == load_catalog().side_rules(Side::Keras).len(), || {
        "counts do not sum to N".into()
    })?;
    for (cat, share) in &published {
        let implied = (share * n as f64 / 100.0).round() as i64;
        let ours = got.iter().find(|r| r.0 == *cat).map_or(0, |r| r.1 as i64);
        ensure((ours - implied).abs() <= 1, || format!("{cat}: {ours} vs {implied}"))?;
    }
    ensure(got.iter().all(|r| published.contains_key(&r.0)), || format!("{got:?}"))?;
    let text = leaklint::output::render_stats(load_catalog(), Side::Keras);
    ensure(text.contains("N=5"), || "stats output lacks the caption note".into())
}

fn criterion_5_agreement() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..20 {
        let len = rng.random_range(2..60);
        let x: Vec<u8> = (0..len).map(|_| rng.random_range(0..4)).collect();
        let k = cohen_kappa(&x, &x).map_err(|e| e.to_string())?;
        ensure((k - 1.0).abs() < 1e-12, || format!("kappa(x, x) = {k}"))?;
    }
    let a: Vec<u8> = (0..46).map(|i| (i % 3) as u8).collect();
    let mut b = a.clone();
    for i in [3, 11, 25, 40] {
        b[i] = (b[i] + 1) % 3;
    }
    let po = percent_agreement(&a, &b).map_err(|e| e.to_string())? * 100.0;
    ensure((po - 91.3).abs() <= 0.1, || format!("p_o = {po:.3}%"))?;

    let mut increases = 0;
    for _ in 0..1000 {
        let len = rng.random_range(4..40);
        let x: Vec<u8> = (0..len).map(|_| rng.random_range(0..3)).collect();
        let mut y: Vec<u8> = (0..len).map(|_| rng.random_range(0..3)).collect();
        let Ok(k) = cohen_kappa(&x, &y) else { continue };
        ensure((-1.0..=1.0).contains(&k), || format!("kappa {k} out of range"))?;
        // Swapping two crossed disagreements keeps both marginals and adds
        // two agreements.
        let pair = (0..len)
            .flat_map(|i| (0..len).map(move |j| (i, j)))
            .find(|&(i, j)| x[i] != y[i] && x[j] != y[j] && x[i] == y[j] && x[j] == y[i]);
        if let Some((i, j)) = pair {
            y.swap(i, j);
            let k2 = cohen_kappa(&x, &y).map_err(|e| e.to_string())?;
            ensure(k2 > k, || format!("kappa did not increase: {k} -> {k2}"))?;
            increases += 1;
        }
    }
    ensure(increases > 100, || format!("only {increases} monotonicity cases"))
}

fn criterion_6_corpus() -> Outcome {
    let start = Instant::now();
    let c = load_catalog();
    let report = run_corpus(&support::corpus_dir(), c, &LintConfig::default());
    let elapsed = start.elapsed();
    ensure(report.fixtures.len() >= 92, || {
        format!("{} fixtures", report.fixtures.len())
    })?;
    let gaps = report.coverage_gaps(c);
    ensure(gaps.is_empty(), || gaps.join("; "))?;
    ensure(report.pass, || report.render())?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(bin())
        .args(args)
        .env_remove("LEAKLINT_CONFIG")
        .env("NO_COLOR", "1")
        .output()
        .map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0 | 1) => Ok(out.stdout),
        code => Err(format!("exit {code:?}: {}", String::from_utf8_lossy(&out.stderr))),
    }
}

fn criterion_7_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    support::synth_corpus(dir.path(), 100, 60);
    let root = dir.path().to_str().unwrap();
    for format in ["text", "json", "sarif"] {
        let first = run_cli(&["check", root, "--format", format])?;
        let second = run_cli(&["check", root, "--format", format])?;
        let sequential = run_cli(&["check", root, "--format", format, "--sequential"])?;
        ensure(first == second, || format!("{format}: repeated runs differ"))?;
        ensure(first == sequential, || {
            format!("{format}: parallel and sequential differ")
        })?;
        ensure(!first.is_empty(), || format!("{format}: empty output"))?;
    }
    let paths = vec![dir.path().to_path_buf()];
    let par = analyze_paths(
        &paths,
        load_catalog(),
        &LintConfig {
            execution: Execution::Parallel,
            ..Default::default()
        },
    );
    let seq = analyze_paths(
        &paths,
        load_catalog(),
        &LintConfig {
            execution: Execution::Sequential,
            ..Default::default()
        },
    );
    ensure(par == seq, || "engine results differ".into())?;
    ensure(!par.findings.is_empty(), || {
        "no findings in the synthetic corpus".into()
    })
}

fn sarif_schema() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sarif-schema-2.1.0.json")
}

/// Validates a document with the Python `jsonschema` package.
fn validate_with_jsonschema(doc: &Path, schema: &Path) -> Outcome {
    let script = "import json, sys, jsonschema\n\
                  schema = json.load(open(sys.argv[1]))\n\
                  doc = json.load(open(sys.argv[2]))\n\
                  cls = jsonschema.validators.validator_for(schema)\n\
                  errors = sorted(cls(schema).iter_errors(doc), key=str)\n\
                  [print(e.message, list(e.absolute_path)) for e in errors[:5]]\n\
                  sys.exit(1 if errors else 0)\n";
    let out = Command::new("python3")
        .args(["-c", script])
        .arg(schema)
        .arg(doc)
        .output()
        .map_err(|e| format!("python3 unavailable: {e}"))?;
    ensure(out.status.success(), || {
        format!(
            "schema validation failed: {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn criterion_8_output_contracts() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    support::synth_corpus(dir.path(), 10, 40);
    let analysis = analyze_paths(&[dir.path().to_path_buf()], load_catalog(), &LintConfig::default());
    let report = Report::from(analysis);
    ensure(!report.findings.is_empty(), || "no findings".into())?;

    let json = render_json(&report);
    let parsed: Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let mut again = serde_json::to_string_pretty(&parsed).map_err(|e| e.to_string())?;
    again.push('\n');
    ensure(again == json, || "JSON re-render differs".into())?;

    let sarif = leaklint::output::render_sarif(&report, load_catalog());
    let doc: Value = serde_json::from_str(&sarif).map_err(|e| e.to_string())?;
    let rules = doc["runs"][0]["tool"]["driver"]["rules"].as_array().map_or(0, Vec::len);
    ensure(rules == 46, || format!("{rules} driver rules"))?;
    let results = doc["runs"][0]["results"].as_array().map_or(0, Vec::len);
    ensure(results == report.findings.len(), || "result count differs".into())?;
    let sarif_path = dir.path().join("out.sarif");
    std::fs::write(&sarif_path, &sarif).map_err(|e| e.to_string())?;
    validate_with_jsonschema(&sarif_path, &sarif_schema())
}

fn criterion_9_throughput() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let lines = support::synth_corpus(dir.path(), 100, 200);
    ensure(lines >= 20_000, || format!("only {lines} lines"))?;
    let config = LintConfig {
        execution: Execution::Sequential,
        ..LintConfig::default()
    };
    let start = Instant::now();
    let a = analyze_paths(&[dir.path().to_path_buf()], load_catalog(), &config);
    let elapsed = start.elapsed();
    ensure(a.file_errors.is_empty(), || format!("{:?}", a.file_errors))?;
    ensure(elapsed < Duration::from_secs(2), || {
        format!("{lines} lines took {elapsed:?}")
    })
}

/// Appends a same-line suppression for `rule` to each of `lines`.
fn with_suppression(unit: &SourceUnit, rule: &str, lines: &[usize]) -> SourceUnit {
    let text: Vec<String> = unit
        .text
        .split('\n')
        .enumerate()
        .map(|(i, l)| {
            if lines.contains(&(i + 1)) {
                format!("{l}  # leaklint: ignore[{rule}]")
            } else {
                l.to_string()
            }
        })
        .collect();
    if unit.is_notebook() {
        let cells: Vec<String> = unit
            .cell_spans
            .iter()
            .map(|c| text[c.start_line - 1..c.end_line].join("\n"))
            .collect();
        SourceUnit::notebook(unit.path.clone(), &cells)
    } else {
        SourceUnit::script(unit.path.clone(), text.join("\n"))
    }
}

fn criterion_10_suppression() -> Outcome {
    let c = load_catalog();
    let mut config = LintConfig::default();
    config.enable.extend(FORCE_ENABLED.iter().map(|s| s.to_string()));
    let mut checked = 0;
    for entry in walkdir::WalkDir::new(support::corpus_dir())
        .into_iter()
        .filter_map(Result::ok)
    {
        let name = entry.file_name().to_string_lossy();
        if !name.starts_with("pos") {
            continue;
        }
        let unit = load_source(entry.path()).map_err(|e| e.to_string())?;
        let expected = parse_expectations(&unit, c).map_err(|e| e.to_string())?;
        let before = analyze_file(&unit, c, &config).map_err(|e| e.to_string())?;
        let mut rules: Vec<&str> = expected.iter().map(|e| e.rule_id.as_str()).collect();
        rules.dedup();
        for rule in rules {
            let lines: Vec<usize> = expected.iter().filter(|e| e.rule_id == rule).map(|e| e.line).collect();
            let after = analyze_file(&with_suppression(&unit, rule, &lines), c, &config).map_err(|e| e.to_string())?;
            let key =
                |f: &leaklint::engine::Finding| (f.rule_id, f.span.start_line, f.span.start_col, f.message.clone());
            let kept: Vec<_> = before.iter().filter(|f| f.rule_id != rule).map(key).collect();
            let now: Vec<_> = after.iter().map(key).collect();
            ensure(now == kept, || {
                format!(
                    "{}: {rule} suppression changed {kept:?} into {now:?}",
                    entry.path().display()
                )
            })?;
            checked += 1;
        }
    }
    ensure(checked >= 46, || format!("only {checked} rules checked"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("1 catalog counts", criterion_1_catalog_counts),
        ("2 pytorch distribution", criterion_2_pytorch_distribution),
        ("3 tensorflow distribution", criterion_3_tensorflow_distribution),
        ("4 keras distribution", criterion_4_keras_distribution),
        ("5 agreement", criterion_5_agreement),
        ("6 corpus soundness", criterion_6_corpus),
        ("7 determinism", criterion_7_determinism),
        ("8 output contracts", criterion_8_output_contracts),
        ("9 throughput", criterion_9_throughput),
        ("10 suppression", criterion_10_suppression),
    ];
    // Written past the test harness capture so the verdicts show in every run.
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let line = match check() {
            Ok(()) => format!("criterion {name}: PASS"),
            Err(e) => {
                failed.push(name);
                format!("criterion {name}: FAIL ({e})")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    drop(out);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
