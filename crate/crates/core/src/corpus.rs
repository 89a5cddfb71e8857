//! Caption data model, tokenization and JSON-lines ingestion.
//!
//! Candidate files hold one `{"image_id": "...", "captions": [...]}` object
//! per line; reference files use the key `"references"` instead.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases, drops every character outside `[a-z0-9']` other than
/// whitespace, and splits on whitespace.
pub fn tokenize(raw: &str) -> Vec<String> {
    let cleaned: String = raw
        .to_lowercase()
        .chars()
        .filter(|c| c.is_whitespace() || matches!(c, 'a'..='z' | '0'..='9' | '\''))
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caption {
    raw: String,
    tokens: Vec<String>,
}

impl Caption {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Caption { raw, tokens }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl From<&str> for Caption {
    fn from(raw: &str) -> Self {
        Caption::new(raw)
    }
}

/// The K sampled captions of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionSet {
    pub image_id: String,
    pub captions: Vec<Caption>,
}

impl CaptionSet {
    pub fn new(image_id: impl Into<String>, captions: Vec<Caption>) -> Result<Self> {
        let image_id = image_id.into();
        if captions.is_empty() {
            return Err(Error::invalid(format!("caption set {image_id:?} is empty")));
        }
        Ok(CaptionSet { image_id, captions })
    }

    /// Convenience constructor from raw strings.
    pub fn from_raw<S: AsRef<str>>(image_id: impl Into<String>, raw: &[S]) -> Result<Self> {
        Self::new(image_id, raw.iter().map(|s| Caption::new(s.as_ref())).collect())
    }

    pub fn k(&self) -> usize {
        self.captions.len()
    }
}

/// Ground-truth captions of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceSet {
    pub image_id: String,
    pub references: Vec<Caption>,
}

impl ReferenceSet {
    pub fn new(image_id: impl Into<String>, references: Vec<Caption>) -> Result<Self> {
        let image_id = image_id.into();
        if references.is_empty() {
            return Err(Error::invalid(format!("reference set {image_id:?} is empty")));
        }
        Ok(ReferenceSet { image_id, references })
    }

    pub fn from_raw<S: AsRef<str>>(image_id: impl Into<String>, raw: &[S]) -> Result<Self> {
        Self::new(image_id, raw.iter().map(|s| Caption::new(s.as_ref())).collect())
    }
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CandidateLine {
    image_id: String,
    captions: Vec<String>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ReferenceLine {
    image_id: String,
    references: Vec<String>,
}

/// Reads JSON lines, skipping blank lines, and hands each parsed record to
/// `build` together with its 1-based line number.
fn read_jsonl<L, T>(path: &Path, mut build: impl FnMut(L) -> Result<(String, T)>) -> Result<Vec<T>>
where
    L: for<'de> Deserialize<'de>,
{
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let record: L = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let (id, item) = build(record).map_err(|e| parse_err(e.to_string()))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateImage(id));
        }
        out.push(item);
    }
    Ok(out)
}

pub fn load_caption_file(path: impl AsRef<Path>) -> Result<Vec<CaptionSet>> {
    read_jsonl(path.as_ref(), |line: CandidateLine| {
        let set = CaptionSet::from_raw(line.image_id, &line.captions)?;
        Ok((set.image_id.clone(), set))
    })
}

pub fn load_reference_file(path: impl AsRef<Path>) -> Result<Vec<ReferenceSet>> {
    read_jsonl(path.as_ref(), |line: ReferenceLine| {
        let set = ReferenceSet::from_raw(line.image_id, &line.references)?;
        Ok((set.image_id.clone(), set))
    })
}

pub fn write_caption_file(path: impl AsRef<Path>, sets: &[CaptionSet]) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for set in sets {
        let line = CandidateLine {
            image_id: set.image_id.clone(),
            captions: set.captions.iter().map(|c| c.raw.clone()).collect(),
        };
        let json = serde_json::to_string(&line).expect("string-only record serializes");
        writeln!(w, "{json}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
