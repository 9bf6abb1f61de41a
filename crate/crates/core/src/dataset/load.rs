//! CSV ingestion: header validation, per-cell encoding with the missing
//! value policy, and a row-indexed report of rejected rows.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use thiserror::Error;

use super::encoding::EncodingTable;
use super::{
    AttributeDef, AttributeKind, AttributeSchema, ClassLabel, Dataset, DatasetError, EncodedRecord,
    GeoPoint, SchemaError, UNKNOWN_CODE,
};

/// Declared attribute before codes are resolved against a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub kind: AttributeKind,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header is missing schema attributes: {}", .missing.join(", "))]
    HeaderMismatch { missing: Vec<String> },
    #[error("schema line {line}: {message}")]
    SchemaParse { line: usize, message: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// One rejected data row (1-based index among data rows).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub row: usize,
    pub column: String,
    pub value: String,
    pub reason: String,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "row {} column `{}` value `{}`: {}",
            self.row, self.column, self.value, self.reason
        )
    }
}

#[derive(Debug)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub rejected: Vec<RowIssue>,
}

pub fn schema_decls_from_file(path: impl AsRef<Path>) -> Result<Vec<AttributeDecl>, LoadError> {
    let text = std::fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            LoadError::FileNotFound(path.as_ref().display().to_string())
        } else {
            LoadError::Io(e)
        }
    })?;
    parse_schema_decls(&text)
}

/// Parses `name = kind` lines; `#` starts a comment.
pub fn parse_schema_decls(text: &str) -> Result<Vec<AttributeDecl>, LoadError> {
    let mut decls = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line.split_once('=').ok_or_else(|| LoadError::SchemaParse {
            line: idx + 1,
            message: "expected `name = kind`".into(),
        })?;
        let kind = AttributeKind::parse(kind.trim()).ok_or_else(|| LoadError::SchemaParse {
            line: idx + 1,
            message: format!("unknown attribute kind `{}`", kind.trim()),
        })?;
        decls.push(AttributeDecl {
            name: name.trim().to_string(),
            kind,
        });
    }
    Ok(decls)
}

/// Loads a CSV into an encoded dataset.
///
/// Rows whose class label cannot be mapped, or whose cells violate the
/// encoding (unknown region, malformed year or coordinate), are rejected
/// and reported; accepted rows keep their file order. Missing or empty
/// feature cells map to the `U` code.
pub fn load_csv(
    path: impl AsRef<Path>,
    decls: &[AttributeDecl],
    table: &EncodingTable,
) -> Result<LoadReport, LoadError> {
    let file = File::open(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            LoadError::FileNotFound(path.as_ref().display().to_string())
        } else {
            LoadError::Io(e)
        }
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let headers = reader.headers()?.clone();
    let mut columns = Vec::with_capacity(decls.len());
    let mut missing = Vec::new();
    for decl in decls {
        match headers.iter().position(|h| h.trim() == decl.name) {
            Some(idx) => columns.push(idx),
            None => missing.push(decl.name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(LoadError::HeaderMismatch { missing });
    }

    // First pass materializes the cells so free-attribute codes can be
    // learned before any row is encoded.
    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(
            columns
                .iter()
                .map(|&idx| record.get(idx).unwrap_or("").trim().to_string())
                .collect(),
        );
    }

    let schema = resolve_schema(decls, table, &rows)?;
    let mut records = Vec::with_capacity(rows.len());
    let mut rejected = Vec::new();
    for (row_idx, cells) in rows.iter().enumerate() {
        match encode_row(decls, table, &schema, cells) {
            Ok(record) => records.push(record),
            Err(mut issue) => {
                issue.row = row_idx + 1;
                rejected.push(issue);
            }
        }
    }

    let dataset = Dataset::new(schema, records)?;
    Ok(LoadReport { dataset, rejected })
}

fn resolve_schema(
    decls: &[AttributeDecl],
    table: &EncodingTable,
    rows: &[Vec<String>],
) -> Result<AttributeSchema, LoadError> {
    let mut defs = Vec::with_capacity(decls.len());
    for (col, decl) in decls.iter().enumerate() {
        let codes = match decl.kind {
            AttributeKind::Categorical => match table.attribute_codes(&decl.name) {
                Some(codes) => codes,
                // Free attribute: codes learned from the file, sorted
                // lexicographically, with the U sentinel always allowed.
                None => {
                    let mut observed: BTreeSet<String> = rows
                        .iter()
                        .map(|cells| cells[col].clone())
                        .filter(|v| !v.is_empty())
                        .collect();
                    observed.insert(UNKNOWN_CODE.to_string());
                    observed.into_iter().collect()
                }
            },
            AttributeKind::Year => {
                let mut codes = table.timeline_codes();
                codes.push(UNKNOWN_CODE.to_string());
                codes
            }
            AttributeKind::GeoLatitude | AttributeKind::GeoLongitude | AttributeKind::Class => {
                Vec::new()
            }
        };
        defs.push(AttributeDef::new(decl.name.clone(), decl.kind, codes));
    }
    Ok(AttributeSchema::new(defs)?)
}

fn encode_row(
    decls: &[AttributeDecl],
    table: &EncodingTable,
    schema: &AttributeSchema,
    cells: &[String],
) -> Result<EncodedRecord, RowIssue> {
    let issue = |decl: &AttributeDecl, value: &str, reason: String| RowIssue {
        row: 0,
        column: decl.name.clone(),
        value: value.to_string(),
        reason,
    };

    let mut codes = Vec::with_capacity(schema.n_features());
    let mut label = None;
    let mut lat = None;
    let mut lon = None;
    let mut slot = 0usize;
    for (col, decl) in decls.iter().enumerate() {
        let cell = cells[col].as_str();
        match decl.kind {
            AttributeKind::Categorical => {
                let attr = schema.feature(slot);
                let code = if cell.is_empty() {
                    UNKNOWN_CODE.to_string()
                } else if table.coded_map(&decl.name).is_some() {
                    table
                        .encode_categorical(&decl.name, cell)
                        .map_err(|e| issue(decl, cell, e.to_string()))?
                        .to_string()
                } else {
                    cell.to_string()
                };
                let index = attr
                    .code_index(&code)
                    .expect("resolved schema covers every encodable cell");
                codes.push(index);
                slot += 1;
            }
            AttributeKind::Year => {
                let attr = schema.feature(slot);
                let code = if cell.is_empty() {
                    UNKNOWN_CODE.to_string()
                } else {
                    let year: i32 = cell
                        .parse()
                        .map_err(|_| issue(decl, cell, "not an integer year".into()))?;
                    table
                        .bin_year(year)
                        .map_err(|e| issue(decl, cell, e.to_string()))?
                        .to_string()
                };
                codes.push(attr.code_index(&code).expect("timeline codes resolved"));
                slot += 1;
            }
            AttributeKind::Class => {
                label = Some(
                    ClassLabel::parse(cell)
                        .ok_or_else(|| issue(decl, cell, "unmappable class label".into()))?,
                );
            }
            AttributeKind::GeoLatitude | AttributeKind::GeoLongitude => {
                if cell.is_empty() {
                    continue;
                }
                let value: f64 = cell
                    .parse()
                    .map_err(|_| issue(decl, cell, "not a number".into()))?;
                let (range, store) = if decl.kind == AttributeKind::GeoLatitude {
                    (-90.0..=90.0, &mut lat)
                } else {
                    (-180.0..=180.0, &mut lon)
                };
                if !range.contains(&value) {
                    return Err(issue(decl, cell, "coordinate out of range".into()));
                }
                *store = Some(value);
            }
        }
    }

    let geo = match (lat, lon) {
        (Some(lat), Some(lon)) => Some(GeoPoint { lat, lon }),
        (None, None) => None,
        (Some(_), None) => {
            return Err(RowIssue {
                row: 0,
                column: "longitude".into(),
                value: String::new(),
                reason: "latitude present without longitude".into(),
            })
        }
        (None, Some(_)) => {
            return Err(RowIssue {
                row: 0,
                column: "latitude".into(),
                value: String::new(),
                reason: "longitude present without latitude".into(),
            })
        }
    };

    Ok(EncodedRecord {
        codes,
        label: label.expect("schema guarantees one class attribute"),
        geo,
    })
}
