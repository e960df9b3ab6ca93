use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::augment::Stopwords;
use crate::error::{Error, Result};
use crate::seas::Candidate;
use crate::text::{Sample, TokenizedText};

/// Token standing in for a text that preprocessing emptied.
pub const EMPTY_SENTINEL: &str = "<empty>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// `label<TAB>text` per line.
    Tsv,
    /// One `{"text": ..., "label": ...}` object per line.
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Format::Tsv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            other => Err(Error::Config(format!("unknown dataset format '{other}' (expected tsv or jsonl)"))),
        }
    }
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| Error::Config(format!("cannot infer format of {}; pass --format", path.display())))?
            .parse()
    }
}

/// Labelled texts with a label vocabulary in first-occurrence order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub labels: Vec<String>,
    /// Source line of each sample, 1-based; 0 for samples not read from a file.
    pub lines: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, labels: Vec<String>) -> Result<Self> {
        let lines = vec![0; samples.len()];
        let ds = Self { samples, labels, lines };
        ds.validate()?;
        Ok(ds)
    }

    /// Builds a dataset from `(text, label)` pairs, assigning class indices in
    /// order of first appearance.
    pub fn from_labelled<S: AsRef<str>>(rows: impl IntoIterator<Item = (TokenizedText, S)>) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut samples = Vec::new();
        for (text, label) in rows {
            samples.push(Sample::new(text, intern(&mut labels, label.as_ref())));
        }
        Dataset::new(samples, labels)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::Domain(format!("need at least 2 classes, found {}", self.labels.len())));
        }
        if let Some((i, s)) = self.samples.iter().enumerate().find(|(_, s)| s.label >= self.labels.len()) {
            return Err(Error::Domain(format!("sample {i} has label {} outside the vocabulary", s.label)));
        }
        if let Some(i) = self.samples.iter().position(|s| s.text.is_empty()) {
            return Err(Error::Domain(format!("sample {i} is empty")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    /// Re-indexes labels against `labels`, e.g. to evaluate a test split with
    /// the training vocabulary.
    pub fn align_to(mut self, labels: &[String]) -> Result<Self> {
        for (i, s) in self.samples.iter_mut().enumerate() {
            let name = &self.labels[s.label];
            s.label = labels.iter().position(|l| l == name).ok_or_else(|| {
                Error::Config(format!("label '{name}' of sample {i} (line {}) is not in the vocabulary", self.lines[i]))
            })?;
        }
        self.labels = labels.to_vec();
        Ok(self)
    }

    /// Runs [`preprocess`] over every text.
    pub fn preprocessed(mut self, stopwords: &Stopwords) -> Self {
        for s in &mut self.samples {
            s.text = preprocess(s.text.original(), stopwords);
        }
        self
    }
}

fn intern(labels: &mut Vec<String>, label: &str) -> usize {
    match labels.iter().position(|l| l == label) {
        Some(i) => i,
        None => {
            labels.push(label.to_string());
            labels.len() - 1
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut labels = Vec::new();
    let mut samples = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let raw = raw.map_err(|e| Error::io(path, e))?;
        if raw.trim().is_empty() {
            continue;
        }
        let (label, text) = match format {
            Format::Tsv => {
                let (label, text) = raw
                    .split_once('\t')
                    .ok_or_else(|| parse_err(line_no, "expected label<TAB>text".into()))?;
                (label.trim().to_string(), text.to_string())
            }
            Format::Jsonl => {
                let obj: Value = serde_json::from_str(&raw).map_err(|e| parse_err(line_no, e.to_string()))?;
                let text = match obj.get("text") {
                    Some(Value::String(s)) => s.clone(),
                    Some(_) => return Err(parse_err(line_no, "field \"text\" is not a string".into())),
                    None => return Err(parse_err(line_no, "missing field \"text\"".into())),
                };
                let label = match obj.get("label") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    Some(_) => return Err(parse_err(line_no, "field \"label\" is not a string or number".into())),
                    None => return Err(parse_err(line_no, "missing field \"label\"".into())),
                };
                (label, text)
            }
        };
        if label.is_empty() {
            return Err(parse_err(line_no, "empty label".into()));
        }
        let text = TokenizedText::parse(&text).map_err(|_| parse_err(line_no, "empty text".into()))?;
        samples.push(Sample::new(text, intern(&mut labels, &label)));
        lines.push(line_no);
    }
    let ds = Dataset { samples, labels, lines };
    ds.validate().map_err(|e| e.context(path.display().to_string()))?;
    Ok(ds)
}

fn is_url(token: &str) -> bool {
    token.starts_with("www.") || token.contains("://")
}

/// Lowercases and strips URLs, hashtags, punctuation, numbers and stopwords.
pub fn preprocess(raw: &str, stopwords: &Stopwords) -> TokenizedText {
    let tokens: Vec<String> = raw
        .split_whitespace()
        .map(str::to_lowercase)
        .filter(|t| t == EMPTY_SENTINEL || !(is_url(t) || t.starts_with('#')))
        .filter_map(|t| {
            if t == EMPTY_SENTINEL {
                return Some(t);
            }
            let stripped: String = t.chars().filter(|c| c.is_alphanumeric()).collect();
            let keep = !stripped.is_empty()
                && !stripped.chars().all(|c| c.is_numeric())
                && !stopwords.contains(&stripped);
            keep.then_some(stripped)
        })
        .collect();
    if tokens.is_empty() {
        return TokenizedText::from_tokens(vec![EMPTY_SENTINEL.to_string()]).expect("sentinel is a valid token");
    }
    TokenizedText::from_tokens(tokens).expect("tokens are non-empty and whitespace-free")
}

/// One exported candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub text: String,
    pub label: String,
    pub source_index: usize,
    pub s_div_raw: f64,
    pub s_qua_raw: f64,
    pub s_div: f64,
    pub s_qua: f64,
    pub s_tot: f64,
}

/// Writes candidates as JSONL, grouped by source sample in selection order.
pub fn export_augmented(candidates: &[Candidate], labels: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| candidates[i].source_index);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for i in order {
        let c = &candidates[i];
        let label = labels
            .get(c.label)
            .ok_or_else(|| Error::Domain(format!("candidate label {} outside the vocabulary", c.label)))?;
        let record = ExportRecord {
            text: c.text.canonical(),
            label: label.clone(),
            source_index: c.source_index,
            s_div_raw: c.s_div_raw,
            s_qua_raw: c.s_qua_raw,
            s_div: c.s_div,
            s_qua: c.s_qua,
            s_tot: c.s_tot,
        };
        let line = serde_json::to_string(&record).map_err(|e| Error::Domain(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads back a file written by [`export_augmented`].
pub fn load_augmented(path: impl AsRef<Path>) -> Result<Vec<ExportRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(t: &TokenizedText) -> Vec<&str> {
        t.tokens().iter().map(String::as_str).collect()
    }

    fn write(content: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn preprocess_examples() {
        let sw = Stopwords::builtin();
        assert_eq!(tokens(&preprocess("Check http://t.co/x #fun 123!!", &sw)), ["check"]);
        assert_eq!(tokens(&preprocess("A wonderful day", &sw)), ["wonderful", "day"]);
        assert_eq!(tokens(&preprocess("#tag 42", &sw)), [EMPTY_SENTINEL]);
        assert_eq!(tokens(&preprocess("Visit www.example.com NOW", &sw)), ["visit"]);
        assert_eq!(tokens(&preprocess("I'm so HAPPY!!!", &sw)), ["happy"]);
    }

    #[test]
    fn preprocess_is_idempotent_on_its_output() {
        let sw = Stopwords::builtin();
        for raw in ["#tag 42", "Great game, 3-1 win!", "a the of"] {
            let once = preprocess(raw, &sw);
            assert_eq!(preprocess(once.original(), &sw), once);
        }
    }

    #[test]
    fn loads_tsv() {
        let f = write("pos\tgood film\nneg\tbad film\npos\tfine\n", ".tsv");
        let ds = load_dataset(f.path(), Format::Tsv).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels, ["pos", "neg"]);
        assert_eq!(ds.samples[1].label, 1);
        assert_eq!(ds.lines, [1, 2, 3]);
        assert_eq!(Format::from_path(f.path()).unwrap(), Format::Tsv);
    }

    #[test]
    fn jsonl_missing_label_names_line() {
        let f = write("{\"text\": \"a\", \"label\": \"x\"}\n{\"text\": \"b\"}\n", ".jsonl");
        match load_dataset(f.path(), Format::Jsonl) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("label"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tsv_without_tab_is_parse_error() {
        let f = write("pos\tok\nno tab here\n", ".tsv");
        assert!(matches!(load_dataset(f.path(), Format::Tsv), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn unknown_format_is_config_error() {
        assert!(matches!("csv".parse::<Format>(), Err(Error::Config(_))));
    }

    #[test]
    fn numeric_jsonl_labels() {
        let f = write("{\"text\": \"a\", \"label\": 1}\n{\"text\": \"b\", \"label\": 0}\n", ".jsonl");
        let ds = load_dataset(f.path(), Format::Jsonl).unwrap();
        assert_eq!(ds.labels, ["1", "0"]);
    }

    #[test]
    fn align_to_reindexes() {
        let ds = Dataset::from_labelled([(TokenizedText::parse("a").unwrap(), "neg"), (TokenizedText::parse("b").unwrap(), "pos")])
            .unwrap();
        let aligned = ds.clone().align_to(&["pos".into(), "neg".into()]).unwrap();
        assert_eq!(aligned.samples[0].label, 1);
        assert!(ds.align_to(&["pos".into(), "other".into()]).is_err());
    }

    #[test]
    fn empty_export_is_empty_file() {
        let f = tempfile::NamedTempFile::new().unwrap();
        export_augmented(&[], &["a".into(), "b".into()], f.path()).unwrap();
        assert_eq!(std::fs::read(f.path()).unwrap().len(), 0);
    }
}
