//! Table-driven categorical encoding: raw strings to short codes, years
//! to timeline bins.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::UNKNOWN_CODE;

/// The four attributes whose codes come from the encoding table rather
/// than being learned from the data.
pub const CODED_ATTRIBUTES: [&str; 4] = ["attack_type", "property_loss", "region", "weapon_type"];

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("encoding file: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("section [{0}]: fallback `{1}` is not a declared code")]
    UnknownFallback(String, String),
    #[error("section [{section}]: raw value `{raw}` mapped twice")]
    DuplicateRaw { section: String, raw: String },
    #[error("timeline bins must be contiguous: {0}-{1} then {2}-{3}")]
    TimelineGap(i32, i32, i32, i32),
    #[error("timeline bins must cover 1970-2015, found {0}-{1}")]
    TimelineCoverage(i32, i32),
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("attribute `{0}` is not table-coded")]
    NotCoded(String),
    #[error("attribute `{attribute}`: unknown value `{value}` and no fallback code")]
    UnknownValue { attribute: String, value: String },
    #[error("year {0} outside the 1970-2015 timeline")]
    YearOutOfRange(i32),
}

/// Codes of one section, each backed by one or more raw strings; the
/// first raw string registered for a code is its canonical name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMap {
    codes: Vec<String>,
    canonical: Vec<String>,
    raw_to_code: BTreeMap<String, usize>,
    fallback: Option<usize>,
}

impl CodedMap {
    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn fallback_code(&self) -> Option<&str> {
        self.fallback.map(|i| self.codes[i].as_str())
    }

    fn encode(&self, raw: &str) -> Option<&str> {
        self.raw_to_code
            .get(raw)
            .or(self.fallback.as_ref())
            .map(|&i| self.codes[i].as_str())
    }

    fn canonical_of(&self, code: &str) -> Option<&str> {
        self.codes
            .iter()
            .position(|c| c == code)
            .map(|i| self.canonical[i].as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineBin {
    pub lo: i32,
    pub hi: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingTable {
    sections: BTreeMap<String, CodedMap>,
    timeline: Vec<(TimelineBin, String)>,
}

impl EncodingTable {
    pub fn from_file(path: impl AsRef<Path>) -> Result<EncodingTable, EncodingError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<EncodingTable, EncodingError> {
        let mut sections: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        let mut fallbacks: BTreeMap<String, (String, usize)> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(name.trim().to_string());
                sections.entry(name.trim().to_string()).or_default();
                continue;
            }
            let section = current.clone().ok_or_else(|| EncodingError::Parse {
                line: line_no,
                message: "entry before any [section]".into(),
            })?;
            let (key, value) = line.split_once('=').ok_or_else(|| EncodingError::Parse {
                line: line_no,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key == "fallback" {
                fallbacks.insert(section, (value, line_no));
            } else {
                sections.get_mut(&section).unwrap().push((key, value));
            }
        }

        let timeline_entries = sections
            .remove("timeline")
            .ok_or(EncodingError::MissingSection("timeline"))?;
        let timeline = parse_timeline(&timeline_entries)?;

        let mut maps = BTreeMap::new();
        for (name, entries) in sections {
            let mut codes: Vec<String> = Vec::new();
            let mut canonical: Vec<String> = Vec::new();
            let mut raw_to_code = BTreeMap::new();
            for (code, raw) in entries {
                let idx = match codes.iter().position(|c| *c == code) {
                    Some(i) => i,
                    None => {
                        codes.push(code.clone());
                        canonical.push(raw.clone());
                        codes.len() - 1
                    }
                };
                if raw_to_code.insert(raw.clone(), idx).is_some() {
                    return Err(EncodingError::DuplicateRaw { section: name, raw });
                }
            }
            let fallback = match fallbacks.remove(&name) {
                Some((code, _)) => {
                    let idx = codes.iter().position(|c| *c == code).ok_or_else(|| {
                        EncodingError::UnknownFallback(name.clone(), code.clone())
                    })?;
                    Some(idx)
                }
                None => None,
            };
            maps.insert(
                name,
                CodedMap {
                    codes,
                    canonical,
                    raw_to_code,
                    fallback,
                },
            );
        }
        Ok(EncodingTable {
            sections: maps,
            timeline,
        })
    }

    pub fn coded_map(&self, attribute: &str) -> Option<&CodedMap> {
        self.sections.get(attribute)
    }

    /// Coded-table lookup. Unrecognized raw values take the section's
    /// fallback code; sections without a fallback (region) reject them.
    pub fn encode_categorical(&self, attribute: &str, raw: &str) -> Result<&str, EncodeError> {
        let map = self
            .sections
            .get(attribute)
            .ok_or_else(|| EncodeError::NotCoded(attribute.to_string()))?;
        map.encode(raw).ok_or_else(|| EncodeError::UnknownValue {
            attribute: attribute.to_string(),
            value: raw.to_string(),
        })
    }

    /// Canonical raw name for a code (the first raw string listed).
    pub fn decode(&self, attribute: &str, code: &str) -> Option<&str> {
        self.sections.get(attribute)?.canonical_of(code)
    }

    pub fn bin_year(&self, year: i32) -> Result<&str, EncodeError> {
        self.timeline
            .iter()
            .find(|(bin, _)| bin.lo <= year && year <= bin.hi)
            .map(|(_, code)| code.as_str())
            .ok_or(EncodeError::YearOutOfRange(year))
    }

    pub fn timeline(&self) -> impl Iterator<Item = (&TimelineBin, &str)> {
        self.timeline.iter().map(|(bin, code)| (bin, code.as_str()))
    }

    pub fn timeline_codes(&self) -> Vec<String> {
        self.timeline.iter().map(|(_, code)| code.clone()).collect()
    }

    /// Allowed codes for a coded attribute, with the `U` sentinel
    /// appended when the table itself does not declare it.
    pub fn attribute_codes(&self, attribute: &str) -> Option<Vec<String>> {
        let map = self.sections.get(attribute)?;
        let mut codes = map.codes.clone();
        if !codes.iter().any(|c| c == UNKNOWN_CODE) {
            codes.push(UNKNOWN_CODE.to_string());
        }
        Some(codes)
    }
}

fn parse_timeline(entries: &[(String, String)]) -> Result<Vec<(TimelineBin, String)>, EncodingError> {
    let mut bins = Vec::new();
    for (code, range) in entries {
        let (lo, hi) = range
            .split_once('-')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
            .ok_or_else(|| EncodingError::Parse {
                line: 0,
                message: format!("timeline range `{range}` must be `lo-hi`"),
            })?;
        bins.push((TimelineBin { lo, hi }, code.clone()));
    }
    for pair in bins.windows(2) {
        let (a, _) = &pair[0];
        let (b, _) = &pair[1];
        if b.lo != a.hi + 1 {
            return Err(EncodingError::TimelineGap(a.lo, a.hi, b.lo, b.hi));
        }
    }
    match (bins.first(), bins.last()) {
        (Some((first, _)), Some((last, _))) if first.lo == 1970 && last.hi == 2015 => Ok(bins),
        (Some((first, _)), Some((last, _))) => {
            Err(EncodingError::TimelineCoverage(first.lo, last.hi))
        }
        _ => Err(EncodingError::MissingSection("timeline")),
    }
}
