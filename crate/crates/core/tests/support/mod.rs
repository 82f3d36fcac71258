//! Shared helpers for integration tests and benches.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every `.py` fixture in the corpus, sorted by path.
pub fn fixture_sources() -> Vec<(PathBuf, String)> {
    let mut out: Vec<(PathBuf, String)> = walkdir::WalkDir::new(corpus_dir())
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.path().extension().is_some_and(|x| x == "py"))
        .map(|e| {
            let text = std::fs::read_to_string(e.path()).unwrap();
            (e.into_path(), text)
        })
        .collect();
    out.sort();
    out
}

/// Writes `files` Python files of at least `min_lines` lines each, built by
/// concatenating corpus fixtures in a rotating order. Returns the total
/// line count.
pub fn synth_corpus(dir: &Path, files: usize, min_lines: usize) -> usize {
    let fixtures = fixture_sources();
    let mut total = 0;
    for i in 0..files {
        let mut text = String::new();
        let mut k = i * 7;
        while text.lines().count() < min_lines {
            let (_, src) = &fixtures[k % fixtures.len()];
            text.push_str(src);
            text.push('\n');
            k += 1;
        }
        total += text.lines().count();
        let sub = dir.join(format!("pkg{}", i % 10));
        std::fs::create_dir_all(&sub).unwrap();
        std::fs::write(sub.join(format!("mod_{i:03}.py")), text).unwrap();
    }
    total
}
