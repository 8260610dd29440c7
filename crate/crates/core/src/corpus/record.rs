use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Number of dense captions carried by every record.
pub const DENSE_CAPTION_COUNT: usize = 5;
/// Upper bound on ground-truth captions per record.
pub const MAX_GROUND_TRUTHS: usize = 5;

/// One of the four candidate error sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Suspect {
    Style,
    Caption,
    ResNext,
    Other,
}

impl Suspect {
    pub const ALL: [Suspect; 4] = [
        Suspect::Style,
        Suspect::Caption,
        Suspect::ResNext,
        Suspect::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suspect::Style => "Style",
            Suspect::Caption => "Caption",
            Suspect::ResNext => "ResNext",
            Suspect::Other => "Other",
        }
    }
}

impl fmt::Display for Suspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suspect {
    type Err = String;

    /// Case-insensitive.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "style" => Ok(Suspect::Style),
            "caption" => Ok(Suspect::Caption),
            "resnext" => Ok(Suspect::ResNext),
            "other" => Ok(Suspect::Other),
            _ => Err(format!("unknown error label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyledText {
    pub style: String,
    pub text: String,
}

/// One diagnosis unit: an image generated under one style, plus everything
/// used to explain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: String,
    pub style: String,
    pub generation: String,
    pub other_generations: Vec<StyledText>,
    pub dense_captions: Vec<String>,
    pub ground_truths: Vec<String>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "label_serde"
    )]
    pub error_label: Option<Suspect>,
    /// Keys this crate does not know about, kept for re-serialization.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

mod label_serde {
    use super::Suspect;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Suspect>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(l) => s.serialize_str(l.as_str()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Suspect>, D::Error> {
        // Unknown labels become `None`; the corpus reader keeps their text.
        let raw: Option<String> = Option::deserialize(d)?;
        Ok(raw.and_then(|r| r.parse().ok()))
    }
}

/// Deserialization target that keeps the raw label text.
#[derive(Deserialize)]
struct RawRecord {
    image_id: String,
    style: String,
    generation: String,
    other_generations: Vec<StyledText>,
    dense_captions: Vec<String>,
    ground_truths: Vec<String>,
    #[serde(default)]
    error_label: Option<String>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

impl CaptionRecord {
    /// Parses one corpus line. A label outside the four suspects is kept
    /// verbatim in `extra["error_label"]`, so it survives a round trip and
    /// can be counted as unevaluated.
    fn from_json_line(line: &str) -> std::result::Result<Self, String> {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let mut extra = raw.extra;
        let error_label = match raw.error_label {
            None => None,
            Some(l) => match l.parse::<Suspect>() {
                Ok(s) => Some(s),
                Err(_) => {
                    extra.insert("error_label".to_owned(), Value::String(l));
                    None
                }
            },
        };
        Ok(CaptionRecord {
            image_id: raw.image_id,
            style: raw.style,
            generation: raw.generation,
            other_generations: raw.other_generations,
            dense_captions: raw.dense_captions,
            ground_truths: raw.ground_truths,
            error_label,
            extra,
        })
    }

    /// A label present in the file but not one of the four suspects.
    pub fn unrecognized_label(&self) -> Option<&str> {
        match self.error_label {
            Some(_) => None,
            None => self.extra.get("error_label").and_then(Value::as_str),
        }
    }

    /// Looks up the generation this record carries for `style`.
    pub fn generation_for(&self, style: &str) -> Option<&str> {
        self.other_generations
            .iter()
            .find(|g| g.style == style)
            .map(|g| g.text.as_str())
    }

    pub fn key(&self) -> String {
        format!("{}|{}", self.image_id, self.style)
    }
}

/// Returns every invariant violation of `record` (empty when valid).
pub fn validate_record(record: &CaptionRecord) -> Vec<String> {
    let mut v = Vec::new();
    if record.image_id.is_empty() {
        v.push("image_id: empty".to_owned());
    }
    if record.style.trim().is_empty() {
        v.push("style: empty".to_owned());
    }
    if record.dense_captions.len() != DENSE_CAPTION_COUNT {
        v.push(format!(
            "dense_captions: expected {DENSE_CAPTION_COUNT}, found {}",
            record.dense_captions.len()
        ));
    }
    if record.ground_truths.is_empty() {
        v.push("ground_truths: empty".to_owned());
    } else if record.ground_truths.len() > MAX_GROUND_TRUTHS {
        v.push(format!(
            "ground_truths: at most {MAX_GROUND_TRUTHS} allowed, found {}",
            record.ground_truths.len()
        ));
    }
    if record
        .other_generations
        .iter()
        .any(|g| g.style.trim().is_empty())
    {
        v.push("other_generations: empty style name".to_owned());
    }
    if record
        .other_generations
        .iter()
        .any(|g| g.style == record.style)
    {
        v.push("other_generations: contains current style".to_owned());
    }
    v
}

/// Parses a JSON-lines corpus from any reader. Blank lines are skipped; line
/// numbers are 1-based.
pub fn read_corpus<R: BufRead>(reader: R, path: &Path) -> Result<Vec<CaptionRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = CaptionRecord::from_json_line(&line).map_err(|message| Error::Parse {
            path: path.to_owned(),
            line: line_no,
            message,
        })?;
        let violations = validate_record(&record);
        if !violations.is_empty() {
            return Err(Error::Validation {
                path: path.to_owned(),
                line: line_no,
                violations,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CaptionRecord>> {
    let file =
        File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_corpus(BufReader::new(file), path)
}

/// Writes records as JSON lines, one object per line.
pub fn write_corpus<W: Write>(mut out: W, records: &[CaptionRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
            .map_err(|e| Error::io("writing corpus", e))?;
    }
    Ok(())
}

pub fn corpus_to_string(records: &[CaptionRecord]) -> String {
    let mut buf = Vec::new();
    write_corpus(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
