//! Versioned plain-text dataset artifact and the schema fingerprint
//! shared with model persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{
    AttributeDef, AttributeKind, AttributeSchema, ClassLabel, Dataset, DatasetError,
    EncodedRecord, GeoPoint, SchemaError,
};
use crate::digest::sha256_hex;

pub const DATASET_FORMAT_TAG: &str = "incidentmine-dataset v1";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported format tag `{0}`")]
    FormatVersionMismatch(String),
    #[error("dataset artifact line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Canonical schema block; hashing it yields the schema fingerprint
/// embedded in saved models.
fn schema_block(schema: &AttributeSchema) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "attributes = {}", schema.attributes().len());
    for (i, attr) in schema.attributes().iter().enumerate() {
        let _ = writeln!(out, "attribute {i} = {} {}", attr.kind.name(), attr.name);
        for (j, code) in attr.codes().iter().enumerate() {
            let _ = writeln!(out, "code {i} {j} = {code}");
        }
    }
    out
}

pub fn schema_fingerprint(schema: &AttributeSchema) -> String {
    sha256_hex(schema_block(schema).as_bytes())
}

pub fn dataset_to_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_FORMAT_TAG}");
    out.push_str(&schema_block(dataset.schema()));
    let _ = writeln!(out, "records = {}", dataset.len());
    for record in dataset.records() {
        let codes: Vec<String> = record.codes.iter().map(|c| c.to_string()).collect();
        let geo = match record.geo {
            Some(GeoPoint { lat, lon }) => format!("{lat} {lon}"),
            None => "-".to_string(),
        };
        let _ = writeln!(out, "record = {} | {} | {geo}", codes.join(" "), record.label);
    }
    out
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), ArtifactError> {
    fs::write(path, dataset_to_string(dataset))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, ArtifactError> {
    dataset_from_str(&fs::read_to_string(path)?)
}

pub fn dataset_from_str(text: &str) -> Result<Dataset, ArtifactError> {
    let mut lines = text.lines().enumerate();
    let (_, tag) = lines.next().ok_or(ArtifactError::Corrupt {
        line: 1,
        message: "empty artifact".into(),
    })?;
    if tag.trim() != DATASET_FORMAT_TAG {
        return Err(ArtifactError::FormatVersionMismatch(tag.trim().to_string()));
    }

    let corrupt = |line: usize, message: &str| ArtifactError::Corrupt {
        line: line + 1,
        message: message.to_string(),
    };

    let (line, header) = lines.next().ok_or_else(|| corrupt(1, "missing attributes count"))?;
    let n_attrs: usize = parse_kv(header, "attributes")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt(line, "expected `attributes = N`"))?;

    let mut defs: Vec<AttributeDef> = Vec::with_capacity(n_attrs);
    let mut pending: Option<(usize, AttributeKind, String, Vec<String>)> = None;
    let mut records: Option<Vec<EncodedRecord>> = None;
    let mut expected_records = 0usize;

    for (line, raw) in lines {
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix("attribute ") {
            if let Some((_, kind, name, codes)) = pending.take() {
                defs.push(AttributeDef::new(name, kind, codes));
            }
            let (idx, value) = split_indexed(rest).ok_or_else(|| corrupt(line, "bad attribute line"))?;
            let (kind_name, attr_name) = value
                .split_once(' ')
                .ok_or_else(|| corrupt(line, "expected `attribute i = kind name`"))?;
            let kind = AttributeKind::parse(kind_name)
                .ok_or_else(|| corrupt(line, "unknown attribute kind"))?;
            pending = Some((idx, kind, attr_name.to_string(), Vec::new()));
        } else if let Some(rest) = text.strip_prefix("code ") {
            let (_, value) = rest
                .split_once('=')
                .ok_or_else(|| corrupt(line, "bad code line"))?;
            let current = pending
                .as_mut()
                .ok_or_else(|| corrupt(line, "code before attribute"))?;
            current.3.push(value.trim().to_string());
        } else if let Some(value) = parse_kv(text, "records") {
            if let Some((_, kind, name, codes)) = pending.take() {
                defs.push(AttributeDef::new(name, kind, codes));
            }
            expected_records = value
                .parse()
                .map_err(|_| corrupt(line, "expected `records = N`"))?;
            records = Some(Vec::with_capacity(expected_records.min(1 << 20)));
        } else if let Some(value) = parse_kv(text, "record") {
            let out = records
                .as_mut()
                .ok_or_else(|| corrupt(line, "record before records count"))?;
            out.push(parse_record(value).map_err(|m| corrupt(line, &m))?);
        } else {
            return Err(corrupt(line, "unrecognized line"));
        }
    }
    if let Some((_, kind, name, codes)) = pending.take() {
        defs.push(AttributeDef::new(name, kind, codes));
    }
    let records = records.ok_or_else(|| corrupt(0, "missing records section"))?;
    if defs.len() != n_attrs {
        return Err(corrupt(0, "attribute count does not match header"));
    }
    if records.len() != expected_records {
        return Err(corrupt(0, "record count does not match header"));
    }
    let schema = AttributeSchema::new(defs)?;
    Ok(Dataset::new(schema, records)?)
}

fn parse_record(value: &str) -> Result<EncodedRecord, String> {
    let mut parts = value.split('|').map(str::trim);
    let codes_part = parts.next().ok_or("missing codes")?;
    let label_part = parts.next().ok_or("missing label")?;
    let geo_part = parts.next().ok_or("missing geo")?;
    if parts.next().is_some() {
        return Err("too many fields".into());
    }
    let codes = codes_part
        .split_whitespace()
        .map(|c| c.parse::<u16>().map_err(|_| format!("bad code `{c}`")))
        .collect::<Result<Vec<u16>, String>>()?;
    let label = ClassLabel::parse(label_part).ok_or_else(|| format!("bad label `{label_part}`"))?;
    let geo = if geo_part == "-" {
        None
    } else {
        let (lat, lon) = geo_part
            .split_once(' ')
            .ok_or("expected `lat lon` or `-`")?;
        let lat: f64 = lat.parse().map_err(|_| "bad latitude")?;
        let lon: f64 = lon.parse().map_err(|_| "bad longitude")?;
        Some(GeoPoint::new(lat, lon).ok_or("coordinates out of range")?)
    };
    Ok(EncodedRecord { codes, label, geo })
}

fn parse_kv<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let (k, v) = line.split_once('=')?;
    (k.trim() == key).then(|| v.trim())
}

fn split_indexed(rest: &str) -> Option<(usize, &str)> {
    let (idx, value) = rest.split_once('=')?;
    Some((idx.trim().parse().ok()?, value.trim()))
}
