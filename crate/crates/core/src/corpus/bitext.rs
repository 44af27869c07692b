use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TokenSeq;
use crate::error::{Error, Result};

/// A parallel sentence pair, optionally with a paraphrase of the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitextRecord {
    pub record_id: u64,
    pub source: TokenSeq,
    pub target: TokenSeq,
    pub paraphrase: Option<TokenSeq>,
}

impl BitextRecord {
    pub fn new(record_id: u64, source: TokenSeq, target: TokenSeq, paraphrase: Option<TokenSeq>) -> Result<Self> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::Record {
                record_id,
                message: "source and target must be non-empty".into(),
            });
        }
        Ok(BitextRecord {
            record_id,
            source,
            target,
            paraphrase,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitextFormat {
    /// `source \t target [\t paraphrase]`
    Tsv,
    /// One JSON object per line with `source`, `target`, optional `paraphrase`.
    Jsonl,
}

impl BitextFormat {
    /// `.jsonl` / `.json` files are structured, everything else is TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => BitextFormat::Jsonl,
            _ => BitextFormat::Tsv,
        }
    }
}

#[derive(Deserialize, Serialize)]
struct JsonBitext {
    source: Option<String>,
    target: Option<String>,
    #[serde(default)]
    paraphrase: Option<String>,
}

/// Streams [`BitextRecord`]s out of a reader. Blank lines are skipped;
/// record ids count records, errors report 1-based line numbers.
pub struct BitextReader<R> {
    lines: Lines<R>,
    format: BitextFormat,
    origin: String,
    line_no: usize,
    next_id: u64,
}

pub fn read_bitext<R: BufRead>(reader: R, format: BitextFormat, origin: &str) -> BitextReader<R> {
    BitextReader {
        lines: reader.lines(),
        format,
        origin: origin.to_owned(),
        line_no: 0,
        next_id: 0,
    }
}

/// Loads a whole bitext file.
pub fn load_bitext(path: impl AsRef<Path>, format: BitextFormat) -> Result<Vec<BitextRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_bitext(BufReader::new(file), format, &path.display().to_string()).collect()
}

impl<R: BufRead> BitextReader<R> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Input {
            path: self.origin.clone(),
            line: self.line_no,
            message: message.into(),
        }
    }

    fn field(&self, name: &str, value: Option<&str>) -> Result<TokenSeq> {
        let value = value
            .filter(|v| !v.trim().is_empty())
            .ok_or_else(|| self.err(format!("missing {name} field")))?;
        TokenSeq::from_whitespace(value).map_err(|e| self.err(format!("{name}: {e}")))
    }

    fn parse_line(&self, line: &str) -> Result<BitextRecord> {
        let (source, target, paraphrase) = match self.format {
            BitextFormat::Tsv => {
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() > 3 {
                    return Err(self.err(format!("expected at most 3 columns, found {}", cols.len())));
                }
                let para = match cols.get(2) {
                    Some(p) if !p.trim().is_empty() => Some(self.field("paraphrase", Some(p))?),
                    _ => None,
                };
                (
                    self.field("source", cols.first().copied())?,
                    self.field("target", cols.get(1).copied())?,
                    para,
                )
            }
            BitextFormat::Jsonl => {
                let raw: JsonBitext = serde_json::from_str(line).map_err(|e| self.err(e.to_string()))?;
                let para = match raw.paraphrase.as_deref() {
                    Some(p) if !p.trim().is_empty() => Some(self.field("paraphrase", Some(p))?),
                    _ => None,
                };
                (
                    self.field("source", raw.source.as_deref())?,
                    self.field("target", raw.target.as_deref())?,
                    para,
                )
            }
        };
        BitextRecord::new(self.next_id, source, target, paraphrase)
    }
}

impl<R: BufRead> Iterator for BitextReader<R> {
    type Item = Result<BitextRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.origin, e))),
            };
            self.line_no += 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let rec = self.parse_line(line);
            if rec.is_ok() {
                self.next_id += 1;
            }
            return Some(rec);
        }
    }
}
