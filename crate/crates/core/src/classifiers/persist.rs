//! Versioned plain-text model persistence. Floats are written with
//! Rust's shortest round-trip formatting, so a reloaded model predicts
//! bit-identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::dataset::ClassLabel;

use super::forest::{ForestConfig, RandomForest};
use super::knn::{IndexVariant, KnnModel, NeighborIndex};
use super::kstar::{KStarConfig, KStarModel};
use super::mlp::MlpModel;
use super::naive_bayes::NaiveBayesModel;
use super::ovr::{OneVsRestModel, OvrConfig};
use super::tree::DecisionTree;
use super::ClassifierModel;

pub const MODEL_FORMAT_TAG: &str = "incidentmine-model v1";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported model format tag `{0}`")]
    FormatVersionMismatch(String),
    #[error("schema fingerprint mismatch: model {model}, data {data}")]
    SchemaFingerprintMismatch { model: String, data: String },
    #[error("unknown classifier family `{0}`")]
    UnknownFamily(String),
    #[error("model payload line {line}: {message}")]
    CorruptPayload { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub fingerprint: String,
    pub model: ClassifierModel,
}

impl SavedModel {
    /// Refuses to pair this model with data from another schema.
    pub fn check_fingerprint(&self, data_fingerprint: &str) -> Result<(), PersistError> {
        if self.fingerprint == data_fingerprint {
            Ok(())
        } else {
            Err(PersistError::SchemaFingerprintMismatch {
                model: self.fingerprint.clone(),
                data: data_fingerprint.to_string(),
            })
        }
    }
}

pub fn save_model(
    model: &ClassifierModel,
    fingerprint: &str,
    path: impl AsRef<Path>,
) -> Result<(), PersistError> {
    fs::write(path, model_to_string(model, fingerprint))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel, PersistError> {
    model_from_str(&fs::read_to_string(path)?)
}

pub fn model_to_string(model: &ClassifierModel, fingerprint: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_FORMAT_TAG}");
    let _ = writeln!(out, "family = {}", model.family());
    let _ = writeln!(out, "schema = {fingerprint}");
    match model {
        ClassifierModel::NaiveBayes(m) => write_nb(&mut out, m),
        ClassifierModel::DecisionTree(m) => write_tree_block(&mut out, m),
        ClassifierModel::RandomForest(m) => write_forest(&mut out, m),
        ClassifierModel::KnnLinear(m) | ClassifierModel::KnnBallTree(m) => write_knn(&mut out, m),
        ClassifierModel::KStar(m) => write_kstar(&mut out, m),
        ClassifierModel::Mlp(m) => write_mlp(&mut out, m),
        ClassifierModel::OneVsRest(m) => write_ovr(&mut out, m),
    }
    out
}

fn floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn counts(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_nb(out: &mut String, m: &NaiveBayesModel) {
    let _ = writeln!(out, "alpha = {}", m.alpha);
    let _ = writeln!(out, "priors = {}", floats(&m.priors));
    let _ = writeln!(out, "attributes = {}", m.cond.len());
    for (a, tables) in m.cond.iter().enumerate() {
        for (k, table) in tables.iter().enumerate() {
            let _ = writeln!(out, "cond {a} {k} = {}", floats(table));
        }
    }
}

fn write_tree_nodes(out: &mut String, tree: &DecisionTree) {
    use super::tree::TreeNode;
    let _ = writeln!(out, "nodes = {}", tree.nodes.len());
    for (i, node) in tree.nodes.iter().enumerate() {
        match node {
            TreeNode::Leaf { counts: c } => {
                let _ = writeln!(out, "node {i} = leaf | {}", counts(&c[..]));
            }
            TreeNode::Split {
                attribute,
                counts: c,
                children,
            } => {
                let kids = children
                    .iter()
                    .map(|child| match child {
                        Some(idx) => idx.to_string(),
                        None => "-".to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(out, "node {i} = split {attribute} | {} | {kids}", counts(&c[..]));
            }
        }
    }
}

fn write_tree_block(out: &mut String, tree: &DecisionTree) {
    let _ = writeln!(out, "min-leaf = {}", tree.min_leaf);
    let _ = writeln!(out, "n-features = {}", tree.n_features);
    write_tree_nodes(out, tree);
}

fn write_forest(out: &mut String, m: &RandomForest) {
    let _ = writeln!(out, "trees = {}", m.config.n_trees);
    let _ = writeln!(
        out,
        "mtry = {}",
        m.config.mtry.map_or("-".to_string(), |v| v.to_string())
    );
    let _ = writeln!(out, "min-leaf = {}", m.config.min_leaf);
    let _ = writeln!(out, "bootstrap = {}", m.config.bootstrap);
    let _ = writeln!(out, "seed = {}", m.seed);
    for (t, tree) in m.trees().iter().enumerate() {
        let _ = writeln!(out, "tree = {t}");
        let _ = writeln!(out, "n-features = {}", tree.n_features);
        write_tree_nodes(out, tree);
    }
}

fn write_points(out: &mut String, points: &[Vec<u16>], labels: &[ClassLabel]) {
    let _ = writeln!(out, "points = {}", points.len());
    for (codes, label) in points.iter().zip(labels) {
        let codes = codes
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "point = {codes} | {label}");
    }
}

fn write_knn(out: &mut String, m: &KnnModel) {
    let _ = writeln!(out, "k = {}", m.k);
    write_points(out, m.index.points(), m.index.labels());
}

fn write_kstar(out: &mut String, m: &KStarModel) {
    let _ = writeln!(out, "blend = {}", m.config.blend);
    let _ = writeln!(out, "attr-sizes = {}", counts(&m.attr_sizes));
    write_points(out, &m.points, &m.labels);
}

fn write_mlp(out: &mut String, m: &MlpModel) {
    let _ = writeln!(out, "eta = {}", m.eta);
    let _ = writeln!(out, "attr-sizes = {}", counts(&m.attr_sizes));
    let _ = writeln!(out, "layers = {}", m.layers.len());
    for (l, layer) in m.layers.iter().enumerate() {
        let n_in = layer.weights.first().map_or(0, Vec::len);
        let _ = writeln!(out, "layer {l} = {n_in} {}", layer.biases.len());
        for (j, row) in layer.weights.iter().enumerate() {
            let _ = writeln!(out, "w {l} {j} = {}", floats(row));
        }
        let _ = writeln!(out, "b {l} = {}", floats(&layer.biases));
    }
}

fn write_ovr(out: &mut String, m: &OneVsRestModel) {
    let _ = writeln!(out, "eta = {}", m.config.eta);
    let _ = writeln!(out, "epochs = {}", m.config.epochs);
    let _ = writeln!(out, "l2 = {}", m.config.l2);
    let _ = writeln!(out, "attr-sizes = {}", counts(&m.attr_sizes));
    let _ = writeln!(
        out,
        "single-class = {}",
        m.single_class.map_or("-".to_string(), |l| l.to_string())
    );
    if m.single_class.is_none() {
        for (k, scorer) in m.scorers.iter().enumerate() {
            let _ = writeln!(out, "w {k} = {}", floats(&scorer.weights));
            let _ = writeln!(out, "b {k} = {}", scorer.bias);
        }
    }
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    cursor: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Parser { lines, cursor: 0 }
    }

    fn err(&self, message: impl Into<String>) -> PersistError {
        let line = self
            .lines
            .get(self.cursor.saturating_sub(1))
            .map_or(0, |(n, _)| *n);
        PersistError::CorruptPayload {
            line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, PersistError> {
        let item = self.lines.get(self.cursor).copied();
        self.cursor += 1;
        item.map(|(_, l)| l).ok_or_else(|| self.err("unexpected end of payload"))
    }

    /// Next line, which must read `key [indices] = value`; index tokens
    /// after the key are positional and ignored. Returns the value.
    fn expect_kv(&mut self, key: &str) -> Result<&'a str, PersistError> {
        let line = self.next_line()?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| self.err(format!("expected `{key} = ...`")))?;
        let head = k.split_whitespace().next().unwrap_or("");
        if head != key {
            return Err(self.err(format!("expected key `{key}`, found `{head}`")));
        }
        Ok(v.trim())
    }

    fn expect_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, PersistError> {
        let value = self.expect_kv(key)?;
        value
            .parse()
            .map_err(|_| self.err(format!("bad value for `{key}`: `{value}`")))
    }

    fn parse_floats(&self, value: &str) -> Result<Vec<f64>, PersistError> {
        value
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| self.err(format!("bad float `{v}`")))
            })
            .collect()
    }

    fn parse_counts(&self, value: &str) -> Result<Vec<usize>, PersistError> {
        value
            .split_whitespace()
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| self.err(format!("bad count `{v}`")))
            })
            .collect()
    }
}

pub fn model_from_str(text: &str) -> Result<SavedModel, PersistError> {
    let mut p = Parser::new(text);
    let tag = p.next_line()?;
    if tag != MODEL_FORMAT_TAG {
        return Err(PersistError::FormatVersionMismatch(tag.to_string()));
    }
    let family = p.expect_kv("family")?.to_string();
    let fingerprint = p.expect_kv("schema")?.to_string();
    let model = match family.as_str() {
        "nb" => ClassifierModel::NaiveBayes(read_nb(&mut p)?),
        "tree" => ClassifierModel::DecisionTree(read_tree_block(&mut p)?),
        "forest" => ClassifierModel::RandomForest(read_forest(&mut p)?),
        "ibk-linear" => ClassifierModel::KnnLinear(read_knn(&mut p, IndexVariant::LinearScan)?),
        "ibk-ball" => ClassifierModel::KnnBallTree(read_knn(&mut p, IndexVariant::BallTree)?),
        "kstar" => ClassifierModel::KStar(read_kstar(&mut p)?),
        "mlp" => ClassifierModel::Mlp(read_mlp(&mut p)?),
        "ovr" => ClassifierModel::OneVsRest(read_ovr(&mut p)?),
        other => return Err(PersistError::UnknownFamily(other.to_string())),
    };
    Ok(SavedModel { fingerprint, model })
}

fn to_array3(p: &Parser<'_>, values: Vec<f64>) -> Result<[f64; 3], PersistError> {
    <[f64; 3]>::try_from(values).map_err(|v| p.err(format!("expected 3 values, found {}", v.len())))
}

fn read_nb(p: &mut Parser<'_>) -> Result<NaiveBayesModel, PersistError> {
    let alpha: f64 = p.expect_parsed("alpha")?;
    let priors = {
        let v = p.expect_kv("priors")?;
        let v = p.parse_floats(v)?;
        to_array3(p, v)?
    };
    let n_attrs: usize = p.expect_parsed("attributes")?;
    let mut cond = Vec::with_capacity(n_attrs.min(1 << 16));
    for _ in 0..n_attrs {
        let mut tables: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for slot in tables.iter_mut() {
            let row = p.expect_kv("cond")?;
            *slot = p.parse_floats(row)?;
        }
        cond.push(tables);
    }
    Ok(NaiveBayesModel {
        alpha,
        priors,
        cond,
    })
}

fn read_tree_nodes(p: &mut Parser<'_>) -> Result<Vec<super::tree::TreeNode>, PersistError> {
    use super::tree::TreeNode;
    let n_nodes: usize = p.expect_parsed("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
    for _ in 0..n_nodes {
        let value = p.expect_kv("node")?;
        let mut parts = value.split('|').map(str::trim);
        let head = parts.next().ok_or_else(|| p.err("empty node"))?;
        if head == "leaf" {
            let counts = p.parse_counts(parts.next().ok_or_else(|| p.err("leaf missing counts"))?)?;
            let counts: [usize; 3] = counts
                .try_into()
                .map_err(|_| p.err("leaf counts must have 3 entries"))?;
            nodes.push(TreeNode::Leaf { counts });
        } else if let Some(attr) = head.strip_prefix("split ") {
            let attribute: usize = attr
                .trim()
                .parse()
                .map_err(|_| p.err("bad split attribute"))?;
            let counts = p.parse_counts(parts.next().ok_or_else(|| p.err("split missing counts"))?)?;
            let counts: [usize; 3] = counts
                .try_into()
                .map_err(|_| p.err("split counts must have 3 entries"))?;
            let children = parts
                .next()
                .ok_or_else(|| p.err("split missing children"))?
                .split_whitespace()
                .map(|c| {
                    if c == "-" {
                        Ok(None)
                    } else {
                        c.parse::<usize>().map(Some).map_err(|_| p.err("bad child index"))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            nodes.push(TreeNode::Split {
                attribute,
                counts,
                children,
            });
        } else {
            return Err(p.err(format!("unknown node head `{head}`")));
        }
    }
    for node in &nodes {
        if let TreeNode::Split { children, .. } = node {
            for child in children.iter().flatten() {
                if *child >= n_nodes {
                    return Err(p.err("child index out of range"));
                }
            }
        }
    }
    Ok(nodes)
}

fn read_tree_block(p: &mut Parser<'_>) -> Result<DecisionTree, PersistError> {
    let min_leaf: usize = p.expect_parsed("min-leaf")?;
    let n_features: usize = p.expect_parsed("n-features")?;
    let nodes = read_tree_nodes(p)?;
    Ok(DecisionTree {
        nodes,
        min_leaf,
        n_features,
    })
}

fn read_forest(p: &mut Parser<'_>) -> Result<RandomForest, PersistError> {
    let n_trees: usize = p.expect_parsed("trees")?;
    let mtry = match p.expect_kv("mtry")? {
        "-" => None,
        v => Some(v.parse::<usize>().map_err(|_| p.err("bad mtry"))?),
    };
    let min_leaf: usize = p.expect_parsed("min-leaf")?;
    let bootstrap: bool = p.expect_parsed("bootstrap")?;
    let seed: u64 = p.expect_parsed("seed")?;
    let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
    for _ in 0..n_trees {
        let _index: usize = p.expect_parsed("tree")?;
        let n_features: usize = p.expect_parsed("n-features")?;
        let nodes = read_tree_nodes(p)?;
        trees.push(DecisionTree {
            nodes,
            min_leaf,
            n_features,
        });
    }
    Ok(RandomForest {
        config: ForestConfig {
            n_trees,
            mtry,
            min_leaf,
            bootstrap,
        },
        seed,
        trees,
    })
}

fn read_points(p: &mut Parser<'_>) -> Result<(Vec<Vec<u16>>, Vec<ClassLabel>), PersistError> {
    let n_points: usize = p.expect_parsed("points")?;
    let mut points = Vec::with_capacity(n_points.min(1 << 20));
    let mut labels = Vec::with_capacity(n_points.min(1 << 20));
    for _ in 0..n_points {
        let value = p.expect_kv("point")?;
        let (codes, label) = value
            .split_once('|')
            .ok_or_else(|| p.err("point missing label"))?;
        let codes = codes
            .split_whitespace()
            .map(|c| c.parse::<u16>().map_err(|_| p.err("bad code")))
            .collect::<Result<Vec<_>, _>>()?;
        let label = ClassLabel::parse(label.trim())
            .ok_or_else(|| p.err(format!("bad label `{}`", label.trim())))?;
        points.push(codes);
        labels.push(label);
    }
    Ok((points, labels))
}

fn read_knn(p: &mut Parser<'_>, variant: IndexVariant) -> Result<KnnModel, PersistError> {
    let k: usize = p.expect_parsed("k")?;
    let (points, labels) = read_points(p)?;
    let index = NeighborIndex::from_parts(points, labels, variant)
        .map_err(|e| p.err(e.to_string()))?;
    Ok(KnnModel { k, index })
}

fn read_kstar(p: &mut Parser<'_>) -> Result<KStarModel, PersistError> {
    let blend: f64 = p.expect_parsed("blend")?;
    let attr_sizes = {
        let v = p.expect_kv("attr-sizes")?;
        p.parse_counts(v)?
    };
    let (points, labels) = read_points(p)?;
    Ok(KStarModel {
        config: KStarConfig { blend },
        attr_sizes,
        points,
        labels,
    })
}

fn read_mlp(p: &mut Parser<'_>) -> Result<MlpModel, PersistError> {
    use super::mlp::Layer;
    let eta: f64 = p.expect_parsed("eta")?;
    let attr_sizes = {
        let v = p.expect_kv("attr-sizes")?;
        p.parse_counts(v)?
    };
    let n_layers: usize = p.expect_parsed("layers")?;
    let mut layers = Vec::with_capacity(n_layers.min(1 << 10));
    for _ in 0..n_layers {
        let dims = p.expect_kv("layer")?;
        let dims = p.parse_counts(dims)?;
        if dims.len() != 2 {
            return Err(p.err("layer line must read `layer l = in out`"));
        }
        let (n_in, n_out) = (dims[0], dims[1]);
        let mut weights = Vec::with_capacity(n_out);
        for _ in 0..n_out {
            let row = p.expect_kv("w")?;
            let row = p.parse_floats(row)?;
            if row.len() != n_in {
                return Err(p.err("weight row width mismatch"));
            }
            weights.push(row);
        }
        let biases = {
            let v = p.expect_kv("b")?;
            p.parse_floats(v)?
        };
        if biases.len() != n_out {
            return Err(p.err("bias width mismatch"));
        }
        layers.push(Layer { weights, biases });
    }
    Ok(MlpModel {
        eta,
        attr_sizes,
        layers,
    })
}

fn read_ovr(p: &mut Parser<'_>) -> Result<OneVsRestModel, PersistError> {
    use super::ovr::LinearScorer;
    let eta: f64 = p.expect_parsed("eta")?;
    let epochs: usize = p.expect_parsed("epochs")?;
    let l2: f64 = p.expect_parsed("l2")?;
    let attr_sizes = {
        let v = p.expect_kv("attr-sizes")?;
        p.parse_counts(v)?
    };
    let single_class = match p.expect_kv("single-class")? {
        "-" => None,
        name => Some(
            ClassLabel::parse(name).ok_or_else(|| p.err(format!("bad label `{name}`")))?,
        ),
    };
    let mut scorers = Vec::new();
    if single_class.is_none() {
        for _ in 0..3 {
            let weights = {
                let v = p.expect_kv("w")?;
                p.parse_floats(v)?
            };
            let bias: f64 = p.expect_parsed("b")?;
            scorers.push(LinearScorer { weights, bias });
        }
    }
    Ok(OneVsRestModel {
        config: OvrConfig { eta, epochs, l2 },
        attr_sizes,
        scorers,
        single_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{
        train, ClassifierConfig, ForestConfig, KStarConfig, MlpConfig, OvrConfig,
    };
    use crate::dataset::testutil::toy_dataset;
    use crate::dataset::{ClassLabel, Dataset};
    use rand::Rng;

    fn training_data() -> Dataset {
        let mut rng = crate::rng::stream_rng(12, "persist-test", 0);
        let rows: Vec<(Vec<u16>, ClassLabel)> = (0..120)
            .map(|_| {
                let codes: Vec<u16> = (0..4).map(|_| rng.gen_range(0..3u16)).collect();
                let label = ClassLabel::from_index((codes[0] % 3) as usize).unwrap();
                (codes, label)
            })
            .collect();
        let borrowed: Vec<(&[u16], ClassLabel)> =
            rows.iter().map(|(c, l)| (c.as_slice(), *l)).collect();
        toy_dataset(4, 3, &borrowed)
    }

    fn all_configs() -> Vec<ClassifierConfig> {
        vec![
            ClassifierConfig::NaiveBayes { alpha: 1.0 },
            ClassifierConfig::DecisionTree { min_leaf: 1 },
            ClassifierConfig::RandomForest(ForestConfig::default()),
            ClassifierConfig::KnnLinear { k: 3 },
            ClassifierConfig::KnnBallTree { k: 3 },
            ClassifierConfig::KStar(KStarConfig::default()),
            ClassifierConfig::Mlp(MlpConfig {
                hidden: vec![5],
                eta: 0.3,
                epochs: 10,
            }),
            ClassifierConfig::OneVsRest(OvrConfig {
                epochs: 30,
                ..OvrConfig::default()
            }),
        ]
    }

    #[test]
    fn every_family_round_trips_with_identical_predictions() {
        let ds = training_data();
        let fp = ds.schema().fingerprint();
        let mut rng = crate::rng::stream_rng(5, "persist-queries", 0);
        let queries: Vec<Vec<u16>> = (0..1000)
            .map(|_| (0..4).map(|_| rng.gen_range(0..4u16)).collect())
            .collect();
        for config in all_configs() {
            let model = train(&config, &ds, 42).unwrap();
            let text = model_to_string(&model, &fp);
            let loaded = model_from_str(&text).unwrap();
            assert_eq!(loaded.fingerprint, fp);
            assert_eq!(loaded.model.family(), model.family());
            for query in &queries {
                assert_eq!(
                    model.predict(query),
                    loaded.model.predict(query),
                    "family {}",
                    model.family()
                );
            }
            // serialization is canonical: a second round trip is stable
            assert_eq!(model_to_string(&loaded.model, &fp), text);
        }
    }

    #[test]
    fn altered_version_tag_is_refused() {
        let ds = training_data();
        let model = train(&ClassifierConfig::NaiveBayes { alpha: 1.0 }, &ds, 0).unwrap();
        let text = model_to_string(&model, "f");
        let tampered = text.replace("incidentmine-model v1", "incidentmine-model v2");
        assert!(matches!(
            model_from_str(&tampered).unwrap_err(),
            PersistError::FormatVersionMismatch(_)
        ));
    }

    #[test]
    fn fingerprint_mismatch_is_refused() {
        let ds = training_data();
        let model = train(&ClassifierConfig::NaiveBayes { alpha: 1.0 }, &ds, 0).unwrap();
        let saved = model_from_str(&model_to_string(&model, "aaa")).unwrap();
        assert!(saved.check_fingerprint("aaa").is_ok());
        assert!(matches!(
            saved.check_fingerprint("bbb").unwrap_err(),
            PersistError::SchemaFingerprintMismatch { .. }
        ));
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let ds = training_data();
        let model = train(&ClassifierConfig::DecisionTree { min_leaf: 1 }, &ds, 0).unwrap();
        let text = model_to_string(&model, "f");
        let lines: Vec<&str> = text.lines().collect();
        let truncated = lines[..lines.len() / 2].join("\n");
        assert!(matches!(
            model_from_str(&truncated).unwrap_err(),
            PersistError::CorruptPayload { .. }
        ));
    }
}
