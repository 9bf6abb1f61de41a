//! Subcommand implementations over the library pipeline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use incidentmine::classifiers::persist::{load_model, save_model};
use incidentmine::classifiers::{
    ClassifierConfig, ClassifierError, ForestConfig, KStarConfig, MlpConfig, OvrConfig,
};
use incidentmine::dataset::{
    load_csv, load_dataset, save_dataset, schema_decls_from_file, schema_fingerprint, Dataset,
    EncodingTable,
};
use incidentmine::evaluation::{
    cross_validate, load_report, render_csv, render_text, save_report, CrossValError,
};
use incidentmine::geodensity::{
    build_density_grid, export_grid, region_presets_from_file, smooth_grid, GeoBounds,
};
use incidentmine::ClassLabel;

use crate::config::FileConfig;
use crate::manifest::Manifest;
use crate::{Cli, ClassifierArgs, CliError, Command};

const DEFAULT_SEED: u64 = 42;
const DEFAULT_K: usize = 10;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest {
            csv,
            schema,
            encoding,
            out,
        } => ingest(&file, csv, schema, encoding, out),
        Command::Stats { data } => stats(&file, data),
        Command::Train {
            data,
            classifier,
            seed,
            out_model,
        } => train(&file, data, classifier, seed, out_model),
        Command::Predict { model, data, out } => predict(&file, model, data, out),
        Command::Crossval {
            data,
            classifier,
            k,
            seed,
            out_report,
        } => crossval(&file, data, classifier, k, seed, out_report),
        Command::Density {
            data,
            bounds,
            region,
            regions,
            nx,
            ny,
            smooth,
            out_grid,
        } => density(
            &file, data, bounds, region, regions, nx, ny, smooth, out_grid,
        ),
        Command::Report { input, format } => report(&file, input, format),
    }
}

fn val(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn load_data(path: &Path) -> Result<Dataset, CliError> {
    load_dataset(path).map_err(|e| val(format!("dataset {}: {e}", path.display())))
}

fn ingest(
    file: &FileConfig,
    csv: Option<PathBuf>,
    schema: Option<PathBuf>,
    encoding: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let csv: PathBuf = file.require(csv, "csv")?;
    let schema: PathBuf = file.require(schema, "schema")?;
    let encoding: PathBuf = file.require(encoding, "encoding")?;
    let out: PathBuf = file.require(out, "out")?;

    let decls = schema_decls_from_file(&schema).map_err(val)?;
    let table = EncodingTable::from_file(&encoding).map_err(val)?;
    let report = load_csv(&csv, &decls, &table).map_err(val)?;
    for issue in &report.rejected {
        eprintln!("rejected {issue}");
    }
    save_dataset(&report.dataset, &out)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", out.display())))?;

    let mut manifest = Manifest::new("ingest");
    manifest
        .arg("csv", csv.display())
        .arg("schema", schema.display())
        .arg("encoding", encoding.display())
        .arg("out", out.display());
    manifest.input("csv", &csv)?;
    manifest.input("schema", &schema)?;
    manifest.input("encoding", &encoding)?;
    manifest.write_beside(&out)?;

    println!(
        "ingested {} records ({} rejected) -> {}",
        report.dataset.len(),
        report.rejected.len(),
        out.display()
    );
    Ok(())
}

fn stats(file: &FileConfig, data: Option<PathBuf>) -> Result<(), CliError> {
    let data: PathBuf = file.require(data, "data")?;
    let dataset = load_data(&data)?;
    let counts = dataset.class_distribution();
    println!("records = {}", dataset.len());
    for label in ClassLabel::ALL {
        println!("class {} = {}", label, counts[label.index()]);
    }
    Ok(())
}

/// Resolves the classifier family and hyperparameters; returns the
/// config plus (key, value) pairs echoed into the manifest.
fn classifier_config(
    file: &FileConfig,
    args: &ClassifierArgs,
    feature_sizes: &[usize],
) -> Result<(ClassifierConfig, Vec<(String, String)>), CliError> {
    let family: String = file.require(args.classifier.clone(), "classifier")?;
    let mut echo: Vec<(String, String)> = vec![("classifier".into(), family.clone())];
    let mut push = |key: &str, value: String| echo.push((key.to_string(), value));

    let config = match family.as_str() {
        "nb" => {
            let alpha = file.resolve(args.alpha, "alpha", 1.0)?;
            push("alpha", alpha.to_string());
            ClassifierConfig::NaiveBayes { alpha }
        }
        "tree" => {
            let min_leaf = file.resolve(args.min_leaf, "min-leaf", 1)?;
            push("min-leaf", min_leaf.to_string());
            ClassifierConfig::DecisionTree { min_leaf }
        }
        "forest" => {
            let defaults = ForestConfig::default();
            let n_trees = file.resolve(args.trees, "trees", defaults.n_trees)?;
            let mtry = file.resolve_opt(args.mtry, "mtry")?;
            let min_leaf = file.resolve(args.min_leaf, "min-leaf", defaults.min_leaf)?;
            let bootstrap = if args.no_bootstrap {
                false
            } else {
                file.resolve(None, "bootstrap", true)?
            };
            push("trees", n_trees.to_string());
            if let Some(m) = mtry {
                push("mtry", m.to_string());
            }
            push("min-leaf", min_leaf.to_string());
            push("bootstrap", bootstrap.to_string());
            ClassifierConfig::RandomForest(ForestConfig {
                n_trees,
                mtry,
                min_leaf,
                bootstrap,
            })
        }
        "ibk-linear" | "ibk-ball" => {
            let k = file.resolve(args.k_neighbors, "k-neighbors", 1)?;
            push("k-neighbors", k.to_string());
            if family == "ibk-linear" {
                ClassifierConfig::KnnLinear { k }
            } else {
                ClassifierConfig::KnnBallTree { k }
            }
        }
        "kstar" => {
            let blend = file.resolve(args.blend, "blend", KStarConfig::default().blend)?;
            push("blend", blend.to_string());
            ClassifierConfig::KStar(KStarConfig { blend })
        }
        "mlp" => {
            let width: usize = feature_sizes.iter().sum();
            let defaults = MlpConfig::default_for_input(width);
            let hidden = match file.resolve_opt(args.hidden.clone(), "hidden")? {
                Some(spec) => parse_hidden(&spec)?,
                None => defaults.hidden,
            };
            let eta = file.resolve(args.eta, "eta", defaults.eta)?;
            let epochs = file.resolve(args.epochs, "epochs", defaults.epochs)?;
            let hidden_echo = hidden
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(",");
            push("hidden", hidden_echo);
            push("eta", eta.to_string());
            push("epochs", epochs.to_string());
            ClassifierConfig::Mlp(MlpConfig {
                hidden,
                eta,
                epochs,
            })
        }
        "ovr" => {
            let defaults = OvrConfig::default();
            let eta = file.resolve(args.eta, "eta", defaults.eta)?;
            let epochs = file.resolve(args.epochs, "epochs", defaults.epochs)?;
            let l2 = file.resolve(args.l2, "l2", defaults.l2)?;
            push("eta", eta.to_string());
            push("epochs", epochs.to_string());
            push("l2", l2.to_string());
            ClassifierConfig::OneVsRest(OvrConfig { eta, epochs, l2 })
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown classifier `{other}` (expected nb, tree, forest, ibk-linear, ibk-ball, kstar, mlp, ovr)"
            )))
        }
    };
    Ok((config, echo))
}

fn parse_hidden(spec: &str) -> Result<Vec<usize>, CliError> {
    spec.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| val(format!("bad hidden layer size `{part}`")))
        })
        .collect()
}

fn train_error(e: ClassifierError) -> CliError {
    match e {
        ClassifierError::InvalidHyperparameter(_) => val(e),
        other => CliError::Runtime(other.to_string()),
    }
}

fn train(
    file: &FileConfig,
    data: Option<PathBuf>,
    args: ClassifierArgs,
    seed: Option<u64>,
    out_model: Option<PathBuf>,
) -> Result<(), CliError> {
    let data: PathBuf = file.require(data, "data")?;
    let out_model: PathBuf = file.require(out_model, "out-model")?;
    let seed = file.resolve(seed, "seed", DEFAULT_SEED)?;
    let dataset = load_data(&data)?;
    let (config, echo) = classifier_config(file, &args, &dataset.schema().feature_sizes())?;

    let model = incidentmine::classifiers::train(&config, &dataset, seed).map_err(train_error)?;
    let fingerprint = schema_fingerprint(dataset.schema());
    save_model(&model, &fingerprint, &out_model)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", out_model.display())))?;

    let mut manifest = Manifest::new("train");
    for (key, value) in &echo {
        manifest.arg(key, value);
    }
    manifest
        .arg("seed", seed)
        .arg("data", data.display())
        .arg("out-model", out_model.display());
    manifest.input("data", &data)?;
    manifest.write_beside(&out_model)?;

    println!(
        "trained {} on {} records -> {}",
        model.family(),
        dataset.len(),
        out_model.display()
    );
    Ok(())
}

fn predict(
    file: &FileConfig,
    model: Option<PathBuf>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let model_path: PathBuf = file.require(model, "model")?;
    let data: PathBuf = file.require(data, "data")?;
    let out: PathBuf = file.require(out, "out")?;

    let saved = load_model(&model_path).map_err(|e| val(format!("model {}: {e}", model_path.display())))?;
    let dataset = load_data(&data)?;
    saved
        .check_fingerprint(&schema_fingerprint(dataset.schema()))
        .map_err(val)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "predicted,{}",
        ClassLabel::ALL.map(|l| l.name()).join(",")
    );
    for record in dataset.records() {
        let probs = saved.model.predict(&record.codes);
        let row = probs
            .as_array()
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(text, "{},{row}", probs.argmax());
    }
    std::fs::write(&out, text)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", out.display())))?;

    let mut manifest = Manifest::new("predict");
    manifest
        .arg("model", model_path.display())
        .arg("data", data.display())
        .arg("out", out.display());
    manifest.input("model", &model_path)?;
    manifest.input("data", &data)?;
    manifest.write_beside(&out)?;

    println!("scored {} records -> {}", dataset.len(), out.display());
    Ok(())
}

fn crossval(
    file: &FileConfig,
    data: Option<PathBuf>,
    args: ClassifierArgs,
    k: Option<usize>,
    seed: Option<u64>,
    out_report: Option<PathBuf>,
) -> Result<(), CliError> {
    let data: PathBuf = file.require(data, "data")?;
    let out_report: PathBuf = file.require(out_report, "out-report")?;
    let k = file.resolve(k, "k", DEFAULT_K)?;
    let seed = file.resolve(seed, "seed", DEFAULT_SEED)?;
    let dataset = load_data(&data)?;
    let (config, echo) = classifier_config(file, &args, &dataset.schema().feature_sizes())?;

    let outcome = cross_validate(&config, &dataset, k, seed).map_err(|e| match e {
        CrossValError::Train(inner) => train_error(inner),
        other => CliError::Runtime(other.to_string()),
    })?;
    save_report(&outcome.report, &out_report)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", out_report.display())))?;

    let mut manifest = Manifest::new("crossval");
    for (key, value) in &echo {
        manifest.arg(key, value);
    }
    manifest
        .arg("k", k)
        .arg("seed", seed)
        .arg("data", data.display())
        .arg("out-report", out_report.display());
    manifest.input("data", &data)?;
    manifest.write_beside(&out_report)?;

    print!("{}", render_text(&outcome.report));
    println!("accuracy = {:.3}", outcome.report.accuracy);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn density(
    file: &FileConfig,
    data: Option<PathBuf>,
    bounds: Option<String>,
    region: Option<String>,
    regions: Option<PathBuf>,
    nx: Option<usize>,
    ny: Option<usize>,
    smooth: Option<f64>,
    out_grid: Option<PathBuf>,
) -> Result<(), CliError> {
    let data: PathBuf = file.require(data, "data")?;
    let out_grid: PathBuf = file.require(out_grid, "out-grid")?;
    let nx = file.resolve(nx, "nx", 64)?;
    let ny = file.resolve(ny, "ny", 64)?;
    let smooth: Option<f64> = file.resolve_opt(smooth, "smooth")?;
    let bounds_spec: Option<String> = file.resolve_opt(bounds, "bounds")?;
    let region: Option<String> = file.resolve_opt(region, "region")?;

    let dataset = load_data(&data)?;
    let mut manifest = Manifest::new("density");
    // --bounds grids every point against an explicit box; --region grids
    // only that region's records against its preset box
    let (resolved_bounds, points) = match (&bounds_spec, &region) {
        (Some(_), Some(_)) => {
            return Err(val("use either --bounds or --region, not both"));
        }
        (Some(spec), None) => {
            manifest.arg("bounds", spec);
            (parse_bounds(spec)?, dataset.geo_points())
        }
        (None, Some(code)) => {
            let regions: PathBuf =
                file.resolve(regions, "regions", PathBuf::from("data/regions.default"))?;
            let presets = region_presets_from_file(&regions)
                .map_err(|e| val(format!("regions {}: {e}", regions.display())))?;
            let found = presets
                .get(code)
                .copied()
                .ok_or_else(|| val(format!("region `{code}` not found in {}", regions.display())))?;
            manifest.arg("region", code);
            manifest.arg("regions", regions.display());
            manifest.input("regions", &regions)?;
            (found, dataset.filter_region(code).geo_points())
        }
        (None, None) => return Err(val("one of --bounds or --region is required")),
    };
    let grid = build_density_grid(&points, resolved_bounds, nx, ny)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let grid = match smooth {
        Some(bandwidth) => {
            smooth_grid(&grid, bandwidth).map_err(|e| val(format!("smoothing: {e}")))?
        }
        None => grid,
    };
    export_grid(&grid, &out_grid)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", out_grid.display())))?;

    manifest.arg("nx", nx).arg("ny", ny);
    if let Some(bandwidth) = smooth {
        manifest.arg("smooth", bandwidth);
    }
    manifest
        .arg("data", data.display())
        .arg("out-grid", out_grid.display());
    manifest.input("data", &data)?;
    manifest.write_beside(&out_grid)?;

    println!(
        "grid {}x{}: {} in bounds, {} outside -> {}",
        nx,
        ny,
        grid.total_points,
        grid.out_of_bounds,
        out_grid.display()
    );
    Ok(())
}

fn parse_bounds(spec: &str) -> Result<GeoBounds, CliError> {
    let parts: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| val(format!("bad bounds `{spec}`: expected four numbers")))?;
    if parts.len() != 4 {
        return Err(val(format!(
            "bad bounds `{spec}`: expected lat_min,lat_max,lon_min,lon_max"
        )));
    }
    GeoBounds::new(parts[0], parts[1], parts[2], parts[3]).map_err(val)
}

fn report(
    file: &FileConfig,
    input: Option<PathBuf>,
    format: Option<String>,
) -> Result<(), CliError> {
    let input: PathBuf = file.require(input, "in")?;
    let format: String = file.resolve(format, "format", "text".to_string())?;
    let report = load_report(&input).map_err(|e| val(format!("report {}: {e}", input.display())))?;
    match format.as_str() {
        "text" => print!("{}", render_text(&report)),
        "csv" => print!("{}", render_csv(&report)),
        other => return Err(val(format!("unknown format `{other}` (expected text or csv)"))),
    }
    Ok(())
}
