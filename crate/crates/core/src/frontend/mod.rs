//! Source loading, parsing and import-alias resolution.
//!
//! Scripts are taken verbatim. Notebooks are flattened into a single virtual
//! module: code cells joined by `\n`, with `cell_spans` recording which lines
//! belong to which cell so findings can be mapped back.

pub mod alias;
pub mod ast;
mod lexer;
mod parser;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub use alias::{build_alias_map, qualify, AliasMap, Qualified};
pub use ast::TextRange;
pub use lexer::Comment;
pub use parser::{parse_source, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Script,
    Notebook,
}

/// One notebook code cell and the (1-based, inclusive) virtual lines it covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSpan {
    pub index: usize,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub path: PathBuf,
    pub kind: SourceKind,
    pub text: String,
    pub cell_spans: Vec<CellSpan>,
}

impl SourceUnit {
    pub fn script(path: impl Into<PathBuf>, text: impl Into<String>) -> Self {
        SourceUnit {
            path: path.into(),
            kind: SourceKind::Script,
            text: text.into(),
            cell_spans: Vec::new(),
        }
    }

    /// Builds a notebook unit from already-extracted code cell sources.
    pub fn notebook<S: AsRef<str>>(path: impl Into<PathBuf>, cells: &[S]) -> Self {
        let mut text = String::new();
        let mut cell_spans = Vec::with_capacity(cells.len());
        let mut line = 1;
        for (index, cell) in cells.iter().enumerate() {
            let cell = cell.as_ref();
            if index > 0 {
                text.push('\n');
            }
            text.push_str(cell);
            let lines = cell.matches('\n').count() + 1;
            cell_spans.push(CellSpan {
                index,
                start_line: line,
                end_line: line + lines - 1,
            });
            line += lines;
        }
        SourceUnit {
            path: path.into(),
            kind: SourceKind::Notebook,
            text,
            cell_spans,
        }
    }

    pub fn is_notebook(&self) -> bool {
        self.kind == SourceKind::Notebook
    }

    /// Cell containing a virtual line, with the line number relative to that cell.
    pub fn cell_of_line(&self, line: usize) -> Option<(usize, usize)> {
        self.cell_spans
            .iter()
            .find(|c| c.start_line <= line && line <= c.end_line)
            .map(|c| (c.index, line - c.start_line + 1))
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed notebook {path}: {reason}")]
    MalformedNotebook { path: PathBuf, reason: String },
}

#[derive(Deserialize)]
struct RawNotebook {
    cells: Vec<RawCell>,
}

#[derive(Deserialize)]
struct RawCell {
    cell_type: String,
    #[serde(default)]
    source: CellSource,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CellSource {
    Lines(Vec<String>),
    Text(String),
}

impl Default for CellSource {
    fn default() -> Self {
        CellSource::Text(String::new())
    }
}

/// Reads a `.py` script or an `.ipynb` notebook.
pub fn load_source(path: &Path) -> Result<SourceUnit, LoadError> {
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| LoadError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    let is_notebook = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ipynb"));
    if is_notebook {
        notebook_from_json(path, &text)
    } else {
        Ok(SourceUnit::script(path, text))
    }
}

pub fn notebook_from_json(path: &Path, json: &str) -> Result<SourceUnit, LoadError> {
    let raw: RawNotebook = serde_json::from_str(json).map_err(|e| LoadError::MalformedNotebook {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let cells: Vec<String> = raw
        .cells
        .into_iter()
        .filter(|c| c.cell_type == "code")
        .map(|c| match c.source {
            CellSource::Lines(lines) => lines.concat(),
            CellSource::Text(text) => text,
        })
        .collect();
    Ok(SourceUnit::notebook(path, &cells))
}

/// 1-based line/column position plus byte offsets into the unit text.
///
/// Columns count Unicode scalar values, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
    pub byte_start: usize,
    pub byte_end: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

/// Maps byte offsets to line/column positions.
#[derive(Debug, Clone)]
pub struct LineIndex {
    line_starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { line_starts }
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    /// 1-based (line, column) of a byte offset.
    pub fn position(&self, text: &str, offset: usize) -> (usize, usize) {
        let line = self.line_starts.partition_point(|&s| s <= offset) - 1;
        let start = self.line_starts[line];
        let col = text[start..offset.min(text.len())].chars().count() + 1;
        (line + 1, col)
    }

    pub fn line_start(&self, line: usize) -> Option<usize> {
        self.line_starts.get(line.checked_sub(1)?).copied()
    }

    pub fn span(&self, text: &str, range: TextRange) -> Span {
        let (start_line, start_col) = self.position(text, range.start as usize);
        let (end_line, end_col) = self.position(text, range.end as usize);
        Span {
            start_line,
            start_col,
            end_line,
            end_col,
            byte_start: range.start as usize,
            byte_end: range.end as usize,
        }
    }
}

/// Language version accepted by the parser. Constructs introduced after the
/// selected version are rejected with a parse error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum GrammarVersion {
    Py38,
    Py39,
    Py310,
    #[default]
    Py311,
}

impl GrammarVersion {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "3.8" => Some(Self::Py38),
            "3.9" => Some(Self::Py39),
            "3.10" => Some(Self::Py310),
            "3.11" => Some(Self::Py311),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn notebook_cells_are_joined_with_newlines() {
        let unit = SourceUnit::notebook("nb.ipynb", &["a=1", "b=2"]);
        assert_eq!(unit.text, "a=1\nb=2");
        assert_eq!(
            unit.cell_spans,
            vec![
                CellSpan {
                    index: 0,
                    start_line: 1,
                    end_line: 1
                },
                CellSpan {
                    index: 1,
                    start_line: 2,
                    end_line: 2
                },
            ]
        );
        assert_eq!(unit.cell_of_line(2), Some((1, 1)));
    }

    #[test]
    fn notebook_json_skips_markdown_cells() {
        let json = r##"{"cells":[
            {"cell_type":"code","source":["import torch\n","x = 1"]},
            {"cell_type":"markdown","source":["# title"]},
            {"cell_type":"code","source":"y = 2"}
        ]}"##;
        let unit = notebook_from_json(Path::new("n.ipynb"), json).unwrap();
        assert_eq!(unit.kind, SourceKind::Notebook);
        assert_eq!(unit.text, "import torch\nx = 1\ny = 2");
        assert_eq!(unit.cell_spans.len(), 2);
        assert_eq!(unit.cell_spans[0].end_line, 2);
        assert_eq!(unit.cell_spans[1].start_line, 3);
    }

    #[test]
    fn notebook_without_cells_is_malformed() {
        let err = notebook_from_json(Path::new("n.ipynb"), r#"{"metadata":{}}"#).unwrap_err();
        assert!(matches!(err, LoadError::MalformedNotebook { .. }));
        let err = notebook_from_json(Path::new("n.ipynb"), "not json").unwrap_err();
        assert!(matches!(err, LoadError::MalformedNotebook { .. }));
    }

    #[test]
    fn script_loads_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.py");
        std::fs::write(&path, "a = 1\nb = 2\nc = 3\n").unwrap();
        let unit = load_source(&path).unwrap();
        assert_eq!(unit.kind, SourceKind::Script);
        assert!(unit.cell_spans.is_empty());
        assert_eq!(unit.text, "a = 1\nb = 2\nc = 3\n");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_source(Path::new("/definitely/not/here.py")).unwrap_err();
        assert!(matches!(err, LoadError::Io { .. }));
    }

    #[test]
    fn line_index_positions() {
        let text = "ab\nçd\n";
        let idx = LineIndex::new(text);
        assert_eq!(idx.position(text, 0), (1, 1));
        assert_eq!(idx.position(text, 3), (2, 1));
        // 'ç' is two bytes but one column
        assert_eq!(idx.position(text, 5), (2, 2));
        assert_eq!(idx.position(text, text.len()), (3, 1));
    }
}
