//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Oracles here are written
//! independently of the library paths they check.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use incidentmine::classifiers::{
    self, entropy, error_energy, one_hot_target, train_decision_tree, train_mlp,
    ClassifierConfig, ForestConfig, IndexVariant, KStarConfig, MlpConfig, NeighborIndex,
    OvrConfig,
};
use incidentmine::dataset::{
    generate_synthetic, load_csv, schema_decls_from_file, AttributeDef, AttributeKind,
    AttributeSchema, ClassRecipe, Dataset, EncodedRecord, EncodingTable, SyntheticAttribute,
    SyntheticSpec,
};
use incidentmine::evaluation::{
    binary_metrics, cross_validate, per_class_metrics, render_text, roc_auc, ConfusionMatrix,
};
use incidentmine::geodensity::{build_density_grid, grid_from_str, grid_to_string, smooth_grid, GeoBounds};
use incidentmine::{ClassLabel, GeoPoint};

fn pass(n: usize, what: &str) {
    println!("[acceptance] criterion {n:02}: PASS - {what}");
}

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR")))
}

fn toy_schema(sizes: &[usize]) -> AttributeSchema {
    let mut attrs: Vec<AttributeDef> = sizes
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            assert!(m >= 2);
            let mut codes: Vec<String> = (0..m - 1).map(|c| format!("c{c}")).collect();
            codes.push("U".to_string());
            AttributeDef::new(format!("a{i}"), AttributeKind::Categorical, codes)
        })
        .collect();
    attrs.push(AttributeDef::new("class", AttributeKind::Class, vec![]));
    AttributeSchema::new(attrs).unwrap()
}

fn dataset_from_rows(sizes: &[usize], rows: Vec<(Vec<u16>, ClassLabel)>) -> Dataset {
    let records = rows
        .into_iter()
        .map(|(codes, label)| EncodedRecord {
            codes,
            label,
            geo: None,
        })
        .collect();
    Dataset::new(toy_schema(sizes), records).unwrap()
}

#[test]
fn criterion_01_metric_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0usize;
    while checked < 1000 {
        let c = rng.gen_range(2..=4usize);
        let counts: Vec<Vec<u64>> = (0..c)
            .map(|_| (0..c).map(|_| rng.gen_range(0..=20u64)).collect())
            .collect();
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            continue;
        }
        checked += 1;
        let labels: Vec<String> = (0..c).map(|i| format!("class{i}")).collect();
        let cm = ConfusionMatrix::new(labels, counts.clone()).unwrap();
        let rows = per_class_metrics(&cm).unwrap();

        // independent oracle: classify every cell pair by hand
        for (k, row) in rows.iter().enumerate() {
            let mut tp = 0u64;
            let mut fp = 0u64;
            let mut fn_ = 0u64;
            let mut tn = 0u64;
            for i in 0..c {
                for j in 0..c {
                    let v = counts[i][j];
                    match (i == k, j == k) {
                        (true, true) => tp += v,
                        (true, false) => fn_ += v,
                        (false, true) => fp += v,
                        (false, false) => tn += v,
                    }
                }
            }
            let div = |n: f64, d: f64| if d == 0.0 { 0.0 } else { n / d };
            let tp_rate = div(tp as f64, (tp + fn_) as f64);
            let fp_rate = div(fp as f64, (fp + tn) as f64);
            let precision = div(tp as f64, (tp + fp) as f64);
            let f_measure = div(2.0 * precision * tp_rate, precision + tp_rate);
            let mcc = div(
                (tp * tn) as f64 - (fp * fn_) as f64,
                (((tp + fp) * (tp + fn_)) as f64 * ((tn + fp) * (tn + fn_)) as f64).sqrt(),
            );
            assert!((row.tp_rate - tp_rate).abs() <= 1e-12);
            assert!((row.fp_rate - fp_rate).abs() <= 1e-12);
            assert!((row.precision - precision).abs() <= 1e-12);
            assert!((row.recall - tp_rate).abs() <= 1e-12);
            assert!((row.f_measure - f_measure).abs() <= 1e-12);
            assert!((row.mcc - mcc).abs() <= 1e-12, "mcc {} vs {}", row.mcc, mcc);
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    pass(1, "1000 random confusion matrices match the brute-force oracle within 1e-12");
}

#[test]
fn criterion_02_roc_auc_equals_mann_whitney() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut checked = 0usize;
    while checked < 200 {
        let n = rng.gen_range(2..=50usize);
        let items: Vec<(f64, bool)> = (0..n)
            .map(|_| (rng.gen_range(0..8) as f64 / 8.0, rng.gen_bool(0.5)))
            .collect();
        let positives = items.iter().filter(|(_, p)| *p).count();
        if positives == 0 || positives == n {
            continue;
        }
        checked += 1;
        // O(n^2) pairwise oracle with half-credit ties
        let mut score = 0.0f64;
        let mut pairs = 0.0f64;
        for &(sp, _) in items.iter().filter(|(_, p)| *p) {
            for &(sn, _) in items.iter().filter(|(_, p)| !*p) {
                pairs += 1.0;
                score += if sp > sn {
                    1.0
                } else if sp == sn {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let oracle = score / pairs;
        let fast = roc_auc(&items).unwrap();
        assert!((fast - oracle).abs() < 1e-9, "{fast} vs {oracle}");
    }
    pass(2, "200 random score sets: rank AUC equals the pairwise statistic within 1e-9");
}

#[test]
fn criterion_03_ball_tree_matches_linear_scan() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for round in 0..50 {
        let n_attrs = rng.gen_range(2..=10usize);
        let n_codes = rng.gen_range(2..=6usize);
        let n = rng.gen_range(50..=2000usize);
        let rows: Vec<(Vec<u16>, ClassLabel)> = (0..n)
            .map(|_| {
                let codes: Vec<u16> = (0..n_attrs).map(|_| rng.gen_range(0..n_codes as u16)).collect();
                (codes, ClassLabel::from_index(rng.gen_range(0..3)).unwrap())
            })
            .collect();
        let ds = dataset_from_rows(&vec![n_codes + 1; n_attrs], rows);
        let linear = NeighborIndex::build(&ds, IndexVariant::LinearScan).unwrap();
        let ball = NeighborIndex::build(&ds, IndexVariant::BallTree).unwrap();
        for _ in 0..20 {
            let query: Vec<u16> = (0..n_attrs)
                .map(|_| rng.gen_range(0..n_codes as u16 + 1))
                .collect();
            for k in [1usize, 3, 5] {
                assert_eq!(
                    linear.k_nearest(&query, k),
                    ball.k_nearest(&query, k),
                    "round {round} k={k}"
                );
                assert_eq!(linear.predict(&query, k), ball.predict(&query, k));
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(3, "50 random datasets: ball-tree kNN identical to linear scan for k in {1,3,5}");
}

#[test]
fn criterion_04_mlp_gradient_check() {
    // 6-4-3 network: three attributes of two codes one-hot to width 6
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let rows: Vec<(Vec<u16>, ClassLabel)> = (0..12)
        .map(|_| {
            let codes: Vec<u16> = (0..3).map(|_| rng.gen_range(0..2u16)).collect();
            (codes, ClassLabel::from_index(rng.gen_range(0..3)).unwrap())
        })
        .collect();
    let ds = dataset_from_rows(&[2, 2, 2], rows);
    let config = MlpConfig {
        hidden: vec![4],
        eta: 0.3,
        epochs: 1,
    };
    let model = train_mlp(&ds, &config, 404).unwrap().model;
    assert_eq!(model.layer_sizes(), vec![6, 4, 3]);

    let input = model.one_hot(&[1, 0, 1]);
    let target = one_hot_target(ClassLabel::NotClaimed);
    let analytic = model.gradients(&input, &target).unwrap();
    let eps = 1e-5;
    let mut checked = 0usize;
    for l in 0..model.n_layers() {
        let (n_in, n_out) = model.layer_dims(l);
        for j in 0..n_out {
            for slot in (0..n_in).map(Some).chain(std::iter::once(None)) {
                let plus = model.nudged(l, j, slot, eps);
                let minus = model.nudged(l, j, slot, -eps);
                let numeric = (plus.sample_error(&input, &target).unwrap()
                    - minus.sample_error(&input, &target).unwrap())
                    / (2.0 * eps);
                let a = match slot {
                    Some(i) => analytic.d_weights[l][j][i],
                    None => analytic.d_biases[l][j],
                };
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    rel < 1e-4,
                    "layer {l} unit {j} slot {slot:?}: analytic {a} numeric {numeric}"
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, (6 * 4 + 4) + (4 * 3 + 3));
    pass(4, "backprop gradients match central finite differences for every weight and bias");
}

#[test]
fn criterion_05_fully_grown_tree_memorizes_consistent_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for round in 0..100 {
        let n_attrs = rng.gen_range(2..=5usize);
        let n_codes = rng.gen_range(2..=4usize);
        let n = rng.gen_range(5..=80usize);
        // consistency: one label per distinct code vector
        let mut seen: std::collections::BTreeMap<Vec<u16>, ClassLabel> = Default::default();
        let mut rows: Vec<(Vec<u16>, ClassLabel)> = Vec::new();
        for _ in 0..n {
            let codes: Vec<u16> = (0..n_attrs).map(|_| rng.gen_range(0..n_codes as u16)).collect();
            let label = *seen
                .entry(codes.clone())
                .or_insert_with(|| ClassLabel::from_index(rng.gen_range(0..3)).unwrap());
            rows.push((codes, label));
        }
        let ds = dataset_from_rows(&vec![n_codes + 1; n_attrs], rows);
        let tree = train_decision_tree(&ds, 1).unwrap();
        for record in ds.records() {
            let p = tree.predict(&record.codes);
            assert_eq!(p.argmax(), record.label, "round {round}");
            assert!((p.get(record.label) - 1.0).abs() < 1e-12);
        }
    }
    pass(5, "100 random consistent datasets memorized with training accuracy 1.0");
}

#[test]
fn criterion_06_separable_cross_validation_accuracy() {
    let started = Instant::now();
    let spec = SyntheticSpec::disjoint_support(6, 2, [0.25, 0.45, 0.3]);
    let ds = generate_synthetic(&spec, 5000, 606).unwrap().dataset;
    assert_eq!(ds.len(), 5000);
    let configs: Vec<(&str, ClassifierConfig)> = vec![
        ("nb", ClassifierConfig::NaiveBayes { alpha: 1.0 }),
        ("tree", ClassifierConfig::DecisionTree { min_leaf: 1 }),
        (
            "forest",
            ClassifierConfig::RandomForest(ForestConfig::default()),
        ),
        ("ibk-linear", ClassifierConfig::KnnLinear { k: 3 }),
        ("ibk-ball", ClassifierConfig::KnnBallTree { k: 3 }),
        ("kstar", ClassifierConfig::KStar(KStarConfig::default())),
        (
            "mlp",
            ClassifierConfig::Mlp(MlpConfig {
                hidden: vec![16],
                eta: 0.3,
                epochs: 20,
            }),
        ),
        ("ovr", ClassifierConfig::OneVsRest(OvrConfig::default())),
    ];
    for (name, config) in configs {
        let outcome = cross_validate(&config, &ds, 10, 42).unwrap();
        assert!(
            outcome.report.accuracy >= 0.90,
            "{name}: pooled accuracy {}",
            outcome.report.accuracy
        );
        println!("[acceptance]   {name}: pooled 10-fold accuracy {:.4}", outcome.report.accuracy);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    pass(6, "10-fold pooled accuracy >= 0.90 for every family on separable data");
}

#[test]
fn criterion_07_hand_worked_numeric_checks() {
    let h = entropy(&[9, 5]).unwrap();
    assert!((h - 0.9403).abs() <= 5e-5, "entropy = {h}");

    let m = binary_metrics(2, 1, 1, 2);
    assert!((m.mcc - 1.0 / 3.0).abs() <= 1e-12, "mcc = {}", m.mcc);

    // e = d - y with d = 1 and y = 0.75, exact
    let e = 1.0f64 - 0.75;
    assert_eq!(e, 0.25);
    // E = 1/2 sum e^2 with a single error 0.5, exact
    assert_eq!(error_energy(&[0.5]), 0.125);

    pass(7, "entropy(9,5)=0.9403, MCC=1/3, e=0.25 and E=0.125 all verified");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_incidentmine"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn ingest_sample(dir: &Path) -> PathBuf {
    let out = dir.join("sample.ds");
    run_ok(
        bin()
            .arg("ingest")
            .arg("--csv")
            .arg(data_path("sample_200.csv"))
            .arg("--schema")
            .arg(data_path("schema.default"))
            .arg("--encoding")
            .arg(data_path("encoding.default"))
            .arg("--out")
            .arg(&out),
    );
    out
}

#[test]
fn criterion_08_cli_runs_are_byte_identical_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = ingest_sample(dir.path());

    let families: [(&str, &[&str]); 8] = [
        ("nb", &[]),
        ("tree", &[]),
        ("forest", &["--trees", "10"]),
        ("ibk-linear", &["--k-neighbors", "3"]),
        ("ibk-ball", &["--k-neighbors", "3"]),
        ("kstar", &[]),
        ("mlp", &["--epochs", "25", "--hidden", "20"]),
        ("ovr", &["--epochs", "60"]),
    ];
    for (family, extra) in families {
        let mut models = Vec::new();
        let mut reports = Vec::new();
        for run in 0..2 {
            let model = dir.path().join(format!("{family}-{run}.model"));
            let mut cmd = bin();
            cmd.arg("train")
                .arg("--data")
                .arg(&data)
                .arg("--classifier")
                .arg(family)
                .arg("--seed")
                .arg("42")
                .arg("--out-model")
                .arg(&model);
            cmd.args(extra);
            run_ok(&mut cmd);
            models.push(std::fs::read(&model).unwrap());

            let report = dir.path().join(format!("{family}-{run}.report"));
            let mut cmd = bin();
            cmd.arg("crossval")
                .arg("--data")
                .arg(&data)
                .arg("--classifier")
                .arg(family)
                .arg("--k")
                .arg("5")
                .arg("--seed")
                .arg("42")
                .arg("--out-report")
                .arg(&report);
            cmd.args(extra);
            run_ok(&mut cmd);
            reports.push(std::fs::read(&report).unwrap());
        }
        assert_eq!(models[0], models[1], "{family}: model bytes differ");
        assert_eq!(reports[0], reports[1], "{family}: report bytes differ");
    }
    pass(8, "train and crossval byte-identical across reruns for all eight family names");
}

#[test]
fn criterion_09_ingestion_fidelity() {
    // independent line-oriented counting script over the raw file
    let text = std::fs::read_to_string(data_path("sample_200.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let class_col = header.iter().position(|h| *h == "class").unwrap();
    let region_col = header.iter().position(|h| *h == "region").unwrap();
    let mut class_counts = [0usize; 3];
    let mut r5 = 0usize;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let label = ClassLabel::parse(cells[class_col]).unwrap();
        class_counts[label.index()] += 1;
        if cells[region_col] == "Middle East & North Africa" {
            r5 += 1;
        }
    }

    let decls = schema_decls_from_file(data_path("schema.default")).unwrap();
    let table = EncodingTable::from_file(data_path("encoding.default")).unwrap();
    let report = load_csv(data_path("sample_200.csv"), &decls, &table).unwrap();
    assert_eq!(report.dataset.class_distribution(), class_counts);
    assert_eq!(report.dataset.filter_region("R5").len(), r5);

    // the CLI stats output must agree with the same oracle
    let dir = tempfile::tempdir().unwrap();
    let data = ingest_sample(dir.path());
    let stdout = run_ok(bin().arg("stats").arg("--data").arg(&data));
    assert!(stdout.contains(&format!("records = {}", report.dataset.len())));
    for label in ClassLabel::ALL {
        assert!(
            stdout.contains(&format!("class {} = {}", label, class_counts[label.index()])),
            "stats output missing {label}: {stdout}"
        );
    }

    assert_eq!(table.bin_year(1970).unwrap(), "T-1");
    assert_eq!(table.bin_year(1976).unwrap(), "T-2");
    assert_eq!(table.bin_year(2015).unwrap(), "T-9");
    pass(9, "class counts, R5 filter, and timeline bins match the line-count oracle");
}

#[test]
fn criterion_10_density_grids_conserve_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for round in 0..100 {
        let bounds = GeoBounds::new(-30.0, 30.0, -60.0, 60.0).unwrap();
        let n = rng.gen_range(0..400usize);
        let points: Vec<GeoPoint> = (0..n)
            .map(|_| GeoPoint {
                lat: rng.gen_range(-40.0..40.0),
                lon: rng.gen_range(-70.0..70.0),
            })
            .collect();
        let nx = rng.gen_range(1..=12usize);
        let ny = rng.gen_range(1..=12usize);
        let grid = build_density_grid(&points, bounds, nx, ny).unwrap();
        assert_eq!(
            grid.total_points + grid.out_of_bounds,
            points.len(),
            "round {round}"
        );
        assert!((grid.mass() - grid.total_points as f64).abs() < 1e-9);

        let smooth = smooth_grid(&grid, 1.5).unwrap();
        assert!((smooth.mass() - grid.mass()).abs() < 1e-6);

        let text = grid_to_string(&smooth);
        let back = grid_from_str(&text).unwrap();
        assert_eq!(smooth, back, "round {round}: round trip must be exact");
    }
    pass(10, "100 random point sets: mass conserved, smoothing mass-preserving, round trip exact");
}

#[test]
fn criterion_11_report_golden_file() {
    // fixed synthetic run with overlapping class supports, frozen once
    let spec = SyntheticSpec {
        attributes: vec![
            SyntheticAttribute {
                name: "kind".into(),
                codes: (0..4).map(|i| format!("k{i}")).collect(),
            },
            SyntheticAttribute {
                name: "place".into(),
                codes: (0..5).map(|i| format!("p{i}")).collect(),
            },
        ],
        classes: vec![
            ClassRecipe {
                label: ClassLabel::Claimed,
                weight: 0.25,
                code_weights: vec![
                    vec![0.6, 0.2, 0.1, 0.1],
                    vec![0.4, 0.3, 0.1, 0.1, 0.1],
                ],
            },
            ClassRecipe {
                label: ClassLabel::NotClaimed,
                weight: 0.45,
                code_weights: vec![
                    vec![0.1, 0.5, 0.3, 0.1],
                    vec![0.1, 0.4, 0.3, 0.1, 0.1],
                ],
            },
            ClassRecipe {
                label: ClassLabel::Anonymous,
                weight: 0.3,
                code_weights: vec![
                    vec![0.1, 0.1, 0.3, 0.5],
                    vec![0.1, 0.1, 0.2, 0.3, 0.3],
                ],
            },
        ],
    };
    let ds = generate_synthetic(&spec, 300, 9).unwrap().dataset;
    let outcome = cross_validate(&ClassifierConfig::NaiveBayes { alpha: 1.0 }, &ds, 5, 42).unwrap();
    let rendered = render_text(&outcome.report);

    let header = rendered.lines().next().unwrap();
    let columns: Vec<&str> = header
        .split("  ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    assert_eq!(
        columns,
        vec![
            "TP Rate",
            "FP Rate",
            "Precision",
            "Recall",
            "F-Measure",
            "MCC",
            "ROC Area",
            "PRC Area",
            "Class"
        ]
    );

    let golden_path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/report.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path, &rendered).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path).expect("golden file present");
    assert_eq!(rendered, golden, "rendered report differs from the golden file");
    pass(11, "frozen synthetic report matches the golden file byte-for-byte");
}

/// Mean training error must not increase over the last tenth of the
/// epochs when the data is separable.
#[test]
fn mlp_epoch_error_is_nonincreasing_late_in_training() {
    let spec = SyntheticSpec::disjoint_support(4, 2, [0.3, 0.4, 0.3]);
    let ds = generate_synthetic(&spec, 600, 77).unwrap().dataset;
    let config = MlpConfig {
        hidden: vec![8],
        eta: 0.3,
        epochs: 60,
    };
    let trained = train_mlp(&ds, &config, 7).unwrap();
    let errors = &trained.epoch_error;
    assert_eq!(errors.len(), 60);
    let tail_start = errors.len() - errors.len() / 10;
    for i in tail_start..errors.len() - 1 {
        assert!(
            errors[i + 1] <= errors[i] + 1e-9,
            "epoch {} error {} rose above epoch {} error {}",
            i + 1,
            errors[i + 1],
            i,
            errors[i]
        );
    }
    // and training should have fit the separable data
    let correct = ds
        .records()
        .iter()
        .filter(|r| trained.model.predict(&r.codes).argmax() == r.label)
        .count();
    assert_eq!(correct, ds.len());
}

/// The separable-data oracle behind the synthetic generator: a 1-NN
/// classifier achieves perfect training accuracy when class supports are
/// disjoint.
#[test]
fn synthetic_disjoint_support_is_separable_by_nearest_neighbor() {
    let spec = SyntheticSpec::disjoint_support(6, 2, [0.25, 0.45, 0.3]);
    let ds = generate_synthetic(&spec, 500, 123).unwrap().dataset;
    let model = classifiers::train(&ClassifierConfig::KnnLinear { k: 1 }, &ds, 0).unwrap();
    for record in ds.records() {
        assert_eq!(model.predict(&record.codes).argmax(), record.label);
    }
}
