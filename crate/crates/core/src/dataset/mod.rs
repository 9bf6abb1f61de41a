//! Incident dataset: attribute schema, table-driven categorical encoding,
//! CSV ingestion, stratified folds, and synthetic data generation.

mod encoding;
mod folds;
mod io;
mod load;
mod synthetic;

pub use encoding::{EncodeError, EncodingError, EncodingTable, TimelineBin, CODED_ATTRIBUTES};
pub use folds::{stratified_kfold, FoldError, FoldPlan};
pub use io::{
    dataset_from_str, dataset_to_string, load_dataset, save_dataset, schema_fingerprint,
    ArtifactError,
};
pub use load::{
    load_csv, parse_schema_decls, schema_decls_from_file, AttributeDecl, LoadError, LoadReport,
    RowIssue,
};
pub use synthetic::{
    generate_synthetic, ClassRecipe, SyntheticAttribute, SyntheticError, SyntheticOutcome,
    SyntheticSpec,
};

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Code reserved for missing or unknown categorical values.
pub const UNKNOWN_CODE: &str = "U";

/// Attack-responsibility label: the closed three-value evaluation class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Claimed,
    NotClaimed,
    Anonymous,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [
        ClassLabel::Claimed,
        ClassLabel::NotClaimed,
        ClassLabel::Anonymous,
    ];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<ClassLabel> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Claimed => "Claimed",
            ClassLabel::NotClaimed => "Not-Claimed",
            ClassLabel::Anonymous => "Anonymous",
        }
    }

    /// Accepts the canonical spellings seen in public exports.
    pub fn parse(raw: &str) -> Option<ClassLabel> {
        match raw {
            "Claimed" => Some(ClassLabel::Claimed),
            "Not-Claimed" | "NotClaimed" | "No-Claim" => Some(ClassLabel::NotClaimed),
            "Anonymous" => Some(ClassLabel::Anonymous),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Categorical,
    Year,
    GeoLatitude,
    GeoLongitude,
    Class,
}

impl AttributeKind {
    pub fn parse(raw: &str) -> Option<AttributeKind> {
        match raw {
            "categorical" => Some(AttributeKind::Categorical),
            "year" => Some(AttributeKind::Year),
            "geo-latitude" => Some(AttributeKind::GeoLatitude),
            "geo-longitude" => Some(AttributeKind::GeoLongitude),
            "class" => Some(AttributeKind::Class),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AttributeKind::Categorical => "categorical",
            AttributeKind::Year => "year",
            AttributeKind::GeoLatitude => "geo-latitude",
            AttributeKind::GeoLongitude => "geo-longitude",
            AttributeKind::Class => "class",
        }
    }

    /// Feature attributes carry a code in every encoded record.
    pub fn is_feature(self) -> bool {
        matches!(self, AttributeKind::Categorical | AttributeKind::Year)
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One schema attribute with its allowed codes (feature kinds only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub kind: AttributeKind,
    codes: Vec<String>,
}

impl AttributeDef {
    pub fn new(
        name: impl Into<String>,
        kind: AttributeKind,
        codes: Vec<String>,
    ) -> AttributeDef {
        AttributeDef {
            name: name.into(),
            kind,
            codes,
        }
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn n_codes(&self) -> usize {
        self.codes.len()
    }

    pub fn code_index(&self, code: &str) -> Option<u16> {
        self.codes.iter().position(|c| c == code).map(|i| i as u16)
    }

    pub fn code_name(&self, index: u16) -> Option<&str> {
        self.codes.get(index as usize).map(String::as_str)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema must declare exactly one class attribute, found {0}")]
    ClassAttributeCount(usize),
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("attribute `{0}`: duplicate code `{1}`")]
    DuplicateCode(String, String),
    #[error("categorical attribute `{0}` must allow the `U` unknown code")]
    MissingUnknownCode(String),
    #[error("feature attribute `{0}` declares no codes")]
    EmptyCodes(String),
    #[error("attribute `{0}` declares {1} codes, more than the supported 65536")]
    TooManyCodes(String, usize),
    #[error("geo-latitude and geo-longitude must be declared together")]
    UnpairedGeo,
    #[error("schema declares more than one `{0}` attribute")]
    DuplicateSpecialKind(&'static str),
}

/// Ordered attribute list with one class attribute and optional geo pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    attributes: Vec<AttributeDef>,
    feature_slots: Vec<usize>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeDef>) -> Result<AttributeSchema, SchemaError> {
        let mut names = BTreeSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.clone()) {
                return Err(SchemaError::DuplicateAttribute(attr.name.clone()));
            }
        }
        let class_count = attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::Class)
            .count();
        if class_count != 1 {
            return Err(SchemaError::ClassAttributeCount(class_count));
        }
        let lat_count = attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::GeoLatitude)
            .count();
        let lon_count = attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::GeoLongitude)
            .count();
        if lat_count > 1 {
            return Err(SchemaError::DuplicateSpecialKind("geo-latitude"));
        }
        if lon_count > 1 {
            return Err(SchemaError::DuplicateSpecialKind("geo-longitude"));
        }
        if lat_count != lon_count {
            return Err(SchemaError::UnpairedGeo);
        }
        for attr in &attributes {
            if attr.kind.is_feature() {
                if attr.codes.is_empty() {
                    return Err(SchemaError::EmptyCodes(attr.name.clone()));
                }
                // records store code indices as u16
                if attr.codes.len() > usize::from(u16::MAX) + 1 {
                    return Err(SchemaError::TooManyCodes(
                        attr.name.clone(),
                        attr.codes.len(),
                    ));
                }
                let mut seen = BTreeSet::new();
                for code in &attr.codes {
                    if !seen.insert(code.clone()) {
                        return Err(SchemaError::DuplicateCode(attr.name.clone(), code.clone()));
                    }
                }
            }
            if attr.kind == AttributeKind::Categorical
                && attr.code_index(UNKNOWN_CODE).is_none()
            {
                return Err(SchemaError::MissingUnknownCode(attr.name.clone()));
            }
        }
        let feature_slots = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind.is_feature())
            .map(|(i, _)| i)
            .collect();
        Ok(AttributeSchema {
            attributes,
            feature_slots,
        })
    }

    pub fn attributes(&self) -> &[AttributeDef] {
        &self.attributes
    }

    pub fn n_features(&self) -> usize {
        self.feature_slots.len()
    }

    pub fn feature(&self, slot: usize) -> &AttributeDef {
        &self.attributes[self.feature_slots[slot]]
    }

    pub fn features(&self) -> impl Iterator<Item = &AttributeDef> {
        self.feature_slots.iter().map(|&i| &self.attributes[i])
    }

    pub fn feature_slot(&self, name: &str) -> Option<usize> {
        self.features().position(|a| a.name == name)
    }

    pub fn has_geo(&self) -> bool {
        self.attributes
            .iter()
            .any(|a| a.kind == AttributeKind::GeoLatitude)
    }

    /// Per-feature code counts, in slot order.
    pub fn feature_sizes(&self) -> Vec<usize> {
        self.features().map(AttributeDef::n_codes).collect()
    }

    pub fn fingerprint(&self) -> String {
        io::schema_fingerprint(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Rejects coordinates outside [-90, 90] x [-180, 180].
    pub fn new(lat: f64, lon: f64) -> Option<GeoPoint> {
        if (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
            Some(GeoPoint { lat, lon })
        } else {
            None
        }
    }
}

/// One incident: a code per feature attribute, its label, optional geo.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedRecord {
    pub codes: Vec<u16>,
    pub label: ClassLabel,
    pub geo: Option<GeoPoint>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("record {index}: expected {expected} codes, found {found}")]
    CodeLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {index}: code {code} out of range for attribute `{attribute}`")]
    CodeRange {
        index: usize,
        attribute: String,
        code: u16,
    },
}

/// Schema-conforming record collection with class-count bookkeeping.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: AttributeSchema,
    records: Vec<EncodedRecord>,
    class_counts: [usize; 3],
}

impl Dataset {
    pub fn new(
        schema: AttributeSchema,
        records: Vec<EncodedRecord>,
    ) -> Result<Dataset, DatasetError> {
        let n_features = schema.n_features();
        let mut class_counts = [0usize; 3];
        for (index, record) in records.iter().enumerate() {
            if record.codes.len() != n_features {
                return Err(DatasetError::CodeLength {
                    index,
                    expected: n_features,
                    found: record.codes.len(),
                });
            }
            for (slot, &code) in record.codes.iter().enumerate() {
                let attr = schema.feature(slot);
                if code as usize >= attr.n_codes() {
                    return Err(DatasetError::CodeRange {
                        index,
                        attribute: attr.name.clone(),
                        code,
                    });
                }
            }
            class_counts[record.label.index()] += 1;
        }
        Ok(Dataset {
            schema,
            records,
            class_counts,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn records(&self) -> &[EncodedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        self.class_counts
    }

    /// Recounts labels with a full pass and checks the stored counts.
    pub fn class_distribution(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for record in &self.records {
            counts[record.label.index()] += 1;
        }
        assert_eq!(
            counts, self.class_counts,
            "stored class counts diverged from records"
        );
        counts
    }

    /// Records whose region code matches. A dataset without a `region`
    /// attribute, or a code the attribute does not allow, yields an
    /// empty result; the schema is unchanged either way.
    pub fn filter_region(&self, region: &str) -> Dataset {
        let matching = self
            .schema
            .feature_slot("region")
            .and_then(|slot| {
                self.schema
                    .feature(slot)
                    .code_index(region)
                    .map(|code| (slot, code))
            })
            .map(|(slot, code)| {
                self.records
                    .iter()
                    .filter(|r| r.codes[slot] == code)
                    .cloned()
                    .collect()
            })
            .unwrap_or_default();
        Dataset::new(self.schema.clone(), matching).expect("filtered records stay conforming")
    }

    /// Sub-dataset over the given record indices (order preserved).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        Dataset::new(self.schema.clone(), records).expect("subset records stay conforming")
    }

    pub fn geo_points(&self) -> Vec<GeoPoint> {
        self.records.iter().filter_map(|r| r.geo).collect()
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Schema of `n` categorical attributes named a0..a{n-1}, each with
    /// codes c0..c{m-1} plus the U sentinel.
    pub fn toy_schema(n_attrs: usize, n_codes: usize) -> AttributeSchema {
        let mut attrs: Vec<AttributeDef> = (0..n_attrs)
            .map(|i| {
                let mut codes: Vec<String> = (0..n_codes).map(|c| format!("c{c}")).collect();
                codes.push(UNKNOWN_CODE.to_string());
                AttributeDef::new(format!("a{i}"), AttributeKind::Categorical, codes)
            })
            .collect();
        attrs.push(AttributeDef::new("class", AttributeKind::Class, vec![]));
        AttributeSchema::new(attrs).unwrap()
    }

    pub fn toy_dataset(
        n_attrs: usize,
        n_codes: usize,
        rows: &[(&[u16], ClassLabel)],
    ) -> Dataset {
        let schema = toy_schema(n_attrs, n_codes);
        let records = rows
            .iter()
            .map(|(codes, label)| EncodedRecord {
                codes: codes.to_vec(),
                label: *label,
                geo: None,
            })
            .collect();
        Dataset::new(schema, records).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_labels_round_trip_names() {
        for label in ClassLabel::ALL {
            assert_eq!(ClassLabel::parse(label.name()), Some(label));
        }
        assert_eq!(ClassLabel::parse("No-Claim"), Some(ClassLabel::NotClaimed));
        assert_eq!(ClassLabel::parse("claimed"), None);
    }

    #[test]
    fn schema_requires_exactly_one_class_attribute() {
        let err = AttributeSchema::new(vec![AttributeDef::new(
            "a",
            AttributeKind::Categorical,
            vec!["x".into(), "U".into()],
        )])
        .unwrap_err();
        assert_eq!(err, SchemaError::ClassAttributeCount(0));
    }

    #[test]
    fn schema_requires_unknown_sentinel_on_categoricals() {
        let err = AttributeSchema::new(vec![
            AttributeDef::new("a", AttributeKind::Categorical, vec!["x".into()]),
            AttributeDef::new("class", AttributeKind::Class, vec![]),
        ])
        .unwrap_err();
        assert_eq!(err, SchemaError::MissingUnknownCode("a".into()));
    }

    #[test]
    fn schema_rejects_more_codes_than_the_index_type_holds() {
        let mut codes: Vec<String> = (0..70_000).map(|i| format!("v{i}")).collect();
        codes.push(UNKNOWN_CODE.into());
        let err = AttributeSchema::new(vec![
            AttributeDef::new("a", AttributeKind::Categorical, codes),
            AttributeDef::new("class", AttributeKind::Class, vec![]),
        ])
        .unwrap_err();
        assert!(matches!(err, SchemaError::TooManyCodes(_, 70_001)));
    }

    #[test]
    fn dataset_rejects_out_of_range_codes() {
        let schema = testutil::toy_schema(1, 2);
        let err = Dataset::new(
            schema,
            vec![EncodedRecord {
                codes: vec![9],
                label: ClassLabel::Claimed,
                geo: None,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::CodeRange { code: 9, .. }));
    }

    #[test]
    fn class_distribution_recounts() {
        let ds = testutil::toy_dataset(
            1,
            2,
            &[
                (&[0], ClassLabel::Claimed),
                (&[1], ClassLabel::Anonymous),
                (&[0], ClassLabel::Anonymous),
            ],
        );
        assert_eq!(ds.class_distribution(), [1, 0, 2]);
    }

    #[test]
    fn class_distribution_of_empty_dataset_is_all_zero() {
        let ds = testutil::toy_dataset(1, 2, &[]);
        assert_eq!(ds.class_distribution(), [0, 0, 0]);
    }

    #[test]
    fn filter_region_without_region_attribute_is_empty() {
        let ds = testutil::toy_dataset(1, 2, &[(&[0], ClassLabel::Claimed)]);
        assert_eq!(ds.filter_region("R5").len(), 0);
    }

    #[test]
    fn filter_region_is_idempotent() {
        let mut codes: Vec<String> = (1..=12).map(|i| format!("R{i}")).collect();
        codes.push(UNKNOWN_CODE.into());
        let schema = AttributeSchema::new(vec![
            AttributeDef::new("region", AttributeKind::Categorical, codes),
            AttributeDef::new("class", AttributeKind::Class, vec![]),
        ])
        .unwrap();
        let records = (0..6)
            .map(|i| EncodedRecord {
                codes: vec![(i % 3) as u16],
                label: ClassLabel::Claimed,
                geo: None,
            })
            .collect();
        let ds = Dataset::new(schema, records).unwrap();
        let once = ds.filter_region("R2");
        let twice = once.filter_region("R2");
        assert_eq!(once.len(), 2);
        assert_eq!(once, twice);
    }
}
