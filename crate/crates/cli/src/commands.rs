use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;

use dgme_core::dgme::io::{FeatureTable, StatsFile};
use dgme_core::dgme::{compute_dgme_with, fit_stats, DgmeConfig, NormStats};
use dgme_core::eval::io::{confusion_table, MetricsFile};
use dgme_core::eval::{self, AnnotatedSet, ClassSchema, Entry};
use dgme_core::flow::{FarnebackConfig, FlowMethod};
use dgme_core::meta::{stable_hash, Meta};
use dgme_core::model::io::{log_table, ModelFile};
use dgme_core::model::{self, EmbeddingProvider, Example, HeadKind, StubEmbedding, TrainConfig};
use dgme_core::synth::{make_corpus, CorpusSpec};
use dgme_core::table::{read_annotations, write_file, CsvTable};
use dgme_core::videoio::{preprocess_train, read_source, resize_center_crop, sample_frames, AugmentSpec, SamplingSpec};
use dgme_core::Error;

use crate::args::*;
use crate::viz;
use crate::{CliError, CliResult};

const CALIBRATED_KEY: &str = "calibrated";

fn seed_of(meta: &Meta) -> Option<u64> {
    meta.get("seed").and_then(|s| s.parse().ok())
}

fn hash_of(meta: &Meta) -> String {
    meta.get("config_hash").unwrap_or("none").to_string()
}

fn is_calibrated(table: &FeatureTable) -> bool {
    table.meta.get(CALIBRATED_KEY).is_some()
}

fn read_features(path: &Path) -> CliResult<FeatureTable> {
    let table = FeatureTable::read(path)?;
    if let Some(row) = table.rows.iter().find(|r| r.values.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("{}: row {}", path.display(), row.clip_id)).into());
    }
    Ok(table)
}

/// Index of the `clip_id` column, falling back to `clip_path`.
fn id_column(table: &CsvTable, path: &Path) -> CliResult<usize> {
    table
        .column("clip_id")
        .or_else(|| table.column("clip_path"))
        .ok_or_else(|| CliError::data(format!("{}: no clip_id or clip_path column", path.display())))
}

fn entries_of(table: &CsvTable, path: &Path) -> CliResult<Vec<Entry>> {
    let id = id_column(table, path)?;
    let label = table.require_column("label", path)?;
    let entries: Vec<Entry> = table.rows.iter().map(|r| Entry::new(r[id].clone(), r[label].clone())).collect();
    Ok(entries)
}

fn unique_ids(entries: &[Entry], path: &Path) -> CliResult {
    let mut seen = HashSet::new();
    match entries.iter().find(|e| !seen.insert(e.clip_id.as_str())) {
        Some(dup) => Err(CliError::data(format!("{}: duplicate id {:?}", path.display(), dup.clip_id))),
        None => Ok(()),
    }
}

pub fn synth(a: &SynthArgs) -> CliResult {
    let mut spec = CorpusSpec::new(a.classes.clone(), a.per_class, a.domain, a.seed);
    spec.frames = a.frames;
    spec.size = a.size;
    let entries = make_corpus(&spec, &a.out)?;
    println!("wrote {} clips to {}", entries.len(), a.out.display());
    Ok(())
}

/// Descriptor and optional stub embedding of one clip.
type ClipFeatures = (Vec<f64>, Option<Vec<f64>>);

pub fn extract(a: &ExtractArgs) -> CliResult {
    if a.jobs == 0 {
        return Err(CliError::usage("--jobs must be >= 1"));
    }
    let cfg =
        DgmeConfig { grid: a.grid, directional_bins: a.bins, magnitude_threshold: a.mthr, ..DgmeConfig::default() };
    cfg.validate()?;
    let flow = match a.flow {
        FlowChoice::Farneback => FlowMethod::Farneback(FarnebackConfig::default()),
        FlowChoice::BlockMatch => FlowMethod::BlockMatch { block: a.block, search_radius: a.radius },
    };
    let sampling = SamplingSpec::square(a.frames, a.interval, a.size);
    sampling.validate()?;
    let aug = AugmentSpec { rng_seed: a.augment_seed, ..AugmentSpec::default() };
    aug.validate()?;
    let stub = a.embed_out.as_ref().map(|_| StubEmbedding::new(a.embed_seed, a.embed_dim));

    let (ann_meta, rows) = read_annotations(&a.ann)?;
    let base = a.ann.parent().unwrap_or(Path::new("."));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} workers: {e}", a.jobs)))?;
    let results: Vec<CliResult<ClipFeatures>> = pool.install(|| {
        rows.par_iter()
            .enumerate()
            .map(|(i, row)| {
                let run = || -> dgme_core::Result<ClipFeatures> {
                    let mut source = read_source(base.join(&row.clip_path))?;
                    source.clip_id = row.clip_path.clone();
                    let sampled = sample_frames(&source, &sampling)?;
                    let seq = if a.augment {
                        preprocess_train(&sampled, a.size, a.size, &aug)?
                    } else {
                        resize_center_crop(&sampled, a.size, a.size)
                    };
                    let desc = compute_dgme_with(&seq, &cfg, &flow)?;
                    Ok((desc.values, stub.as_ref().map(|s| s.embed(&seq))))
                };
                run().map_err(|e| CliError::from(e).context(format_args!("row {} ({})", i + 1, row.clip_path)))
            })
            .collect()
    });

    let hash = cfg.config_hash(&flow);
    let mut meta = Meta::new(seed_of(&ann_meta), &hash)
        .with("grid", a.grid.to_string())
        .with("bins", a.bins.to_string())
        .with("mthr", a.mthr.to_string())
        .with("flow", flow.describe())
        .with("sampling", format!("{}x{}@{}", a.frames, a.interval, a.size));
    if let Some(domain) = ann_meta.get("domain") {
        meta.set("domain", domain);
    }
    if a.augment {
        meta.set("augment_seed", a.augment_seed.to_string());
    }
    let mut features = FeatureTable::new(meta, "f", cfg.descriptor_len());
    let mut embeddings = stub.as_ref().map(|s| {
        let meta = Meta::new(seed_of(&ann_meta), &stable_hash(&s.descriptor())).with("embedding", s.descriptor());
        FeatureTable::new(meta, "e", s.dim())
    });
    for (row, result) in rows.iter().zip(results) {
        let (values, embedding) = result?;
        features.push(&row.clip_path, &row.label, values)?;
        if let (Some(table), Some(e)) = (embeddings.as_mut(), embedding) {
            table.push(&row.clip_path, &row.label, e)?;
        }
    }
    features.write(&a.out)?;
    if let (Some(table), Some(path)) = (embeddings, &a.embed_out) {
        table.write(path)?;
    }
    println!("wrote {} descriptors of length {} to {}", rows.len(), cfg.descriptor_len(), a.out.display());
    Ok(())
}

pub fn stats(a: &StatsArgs) -> CliResult {
    let table = read_features(&a.features)?;
    if is_calibrated(&table) {
        return Err(CliError::data(format!("{}: features are already calibrated", a.features.display())));
    }
    let stats = fit_stats(&table.descriptors())?;
    let file = StatsFile { meta: Meta::new(seed_of(&table.meta), &stats.config_hash), stats };
    file.write(&a.out)?;
    println!("fitted statistics on {} descriptors", file.stats.source_count);
    Ok(())
}

pub fn normalize(a: &NormalizeArgs) -> CliResult {
    let table = read_features(&a.features)?;
    if is_calibrated(&table) {
        return Err(CliError::data(format!("{}: features are already calibrated", a.features.display())));
    }
    let stats = StatsFile::read(&a.stats)?;
    table.normalized(&stats.stats)?.write(&a.out)?;
    println!("calibrated {} rows", table.rows.len());
    Ok(())
}

pub fn remap(a: &RemapArgs) -> CliResult {
    let schema = ClassSchema::builtin(&a.schema)?;
    let mut table = CsvTable::read(&a.input)?;
    let id = id_column(&table, &a.input)?;
    let label = table.require_column("label", &a.input)?;
    let mut kept = Vec::with_capacity(table.rows.len());
    for mut row in std::mem::take(&mut table.rows) {
        match schema.map(&row[label]) {
            None => return Err(Error::UnknownLabel { clip_id: row[id].clone(), label: row[label].clone() }.into()),
            Some(None) => {}
            Some(Some(target)) => {
                row[label] = target.to_string();
                kept.push(row);
            }
        }
    }
    table.rows = kept;
    table.meta.set("schema", schema.name.as_str());
    table.write(&a.out)?;
    println!("kept {} rows", table.rows.len());
    Ok(())
}

/// Rows of `table` in the order of `entries`, looked up by id.
fn rows_for(table: &CsvTable, id_col: usize, entries: &[Entry]) -> Vec<Vec<String>> {
    let index: HashMap<&str, &Vec<String>> = table.rows.iter().map(|r| (r[id_col].as_str(), r)).collect();
    entries.iter().map(|e| index[e.clip_id.as_str()].clone()).collect()
}

fn annotated(table: &CsvTable, path: &Path, schema: &ClassSchema) -> CliResult<AnnotatedSet> {
    let entries = entries_of(table, path)?;
    unique_ids(&entries, path)?;
    Ok(AnnotatedSet::new(schema.classes.clone(), entries)?)
}

pub fn split(a: &SplitArgs) -> CliResult {
    let &[rt, rv, rs] = a.ratios.as_slice() else {
        return Err(CliError::usage("--ratios needs three values"));
    };
    let schema = ClassSchema::builtin(&a.schema)?;
    let table = CsvTable::read(&a.input)?;
    let id = id_column(&table, &a.input)?;
    let set = annotated(&table, &a.input, &schema)?;
    let (train, val, test) = eval::stratified_split(&set, (rt, rv, rs), a.seed)?;
    for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
        let mut out = CsvTable::new(
            table.meta.clone().with("split", name).with("split_seed", a.seed.to_string()),
            table.header.clone(),
        );
        out.rows = rows_for(&table, id, &part.entries);
        out.write(a.out_dir.join(format!("{name}.csv")))?;
    }
    println!("split {} rows into {}/{}/{}", set.len(), train.len(), val.len(), test.len());
    Ok(())
}

pub fn oversample(a: &OversampleArgs) -> CliResult {
    let mut targets = BTreeMap::new();
    for t in &a.targets {
        let parsed = t.split_once('=').and_then(|(c, n)| Some((c.trim().to_string(), n.trim().parse().ok()?)));
        let (class, n) = parsed.ok_or_else(|| CliError::usage(format!("bad target {t:?}, expected class=count")))?;
        targets.insert(class, n);
    }
    let schema = ClassSchema::builtin(&a.schema)?;
    let table = CsvTable::read(&a.input)?;
    let id = id_column(&table, &a.input)?;
    let set = annotated(&table, &a.input, &schema)?;
    let grown = eval::oversample(&set, &targets, a.seed)?;
    let mut out = CsvTable::new(table.meta.clone().with("oversample_seed", a.seed.to_string()), table.header.clone());
    out.rows = rows_for(&table, id, &grown.entries);
    out.write(&a.out)?;
    println!("oversampled {} rows to {}", set.len(), grown.len());
    Ok(())
}

/// Statistics and embeddings resolved against one features file.
struct Inputs {
    stats: Option<NormStats>,
    embeddings: Option<(String, HashMap<String, Vec<f64>>)>,
}

fn load_inputs(features: &FeatureTable, inputs: &ModelInputs) -> CliResult<Inputs> {
    let stats = match &inputs.stats {
        None => None,
        Some(path) => {
            if is_calibrated(features) {
                return Err(CliError::usage("features are already calibrated; drop --stats"));
            }
            let file = StatsFile::read(path)?;
            if file.stats.config_hash != features.config_hash() {
                return Err(Error::ConfigMismatch(features.config_hash().to_string(), file.stats.config_hash).into());
            }
            Some(file.stats)
        }
    };
    let embeddings = match &inputs.embeddings {
        None => None,
        Some(path) => {
            let table = read_features(path)?;
            let name = table.meta.get("embedding").unwrap_or("unknown").to_string();
            let map = table.rows.into_iter().map(|r| (r.clip_id, r.values)).collect();
            Some((name, map))
        }
    };
    Ok(Inputs { stats, embeddings })
}

fn examples(table: &FeatureTable, inputs: &Inputs, classes: &[String], fusion: bool) -> CliResult<Vec<Example>> {
    let calibrated = match &inputs.stats {
        Some(stats) => table.normalized(stats)?,
        None => table.clone(),
    };
    calibrated
        .rows
        .iter()
        .map(|r| {
            let label = classes
                .iter()
                .position(|c| *c == r.label)
                .ok_or_else(|| Error::UnknownLabel { clip_id: r.clip_id.clone(), label: r.label.clone() })?;
            let swin = match (&inputs.embeddings, fusion) {
                (Some((_, map)), true) => map
                    .get(&r.clip_id)
                    .cloned()
                    .ok_or_else(|| CliError::data(format!("no embedding for clip {:?}", r.clip_id)))?,
                _ => Vec::new(),
            };
            Ok(Example { swin, dgme: r.values.clone(), label })
        })
        .collect()
}

pub fn train(a: &TrainArgs) -> CliResult {
    let schema = ClassSchema::builtin(&a.schema)?;
    let train_t = read_features(&a.train)?;
    let val_t = read_features(&a.val)?;
    if train_t.config_hash() != val_t.config_hash() {
        return Err(Error::ConfigMismatch(train_t.config_hash().to_string(), val_t.config_hash().to_string()).into());
    }
    if is_calibrated(&train_t) != is_calibrated(&val_t) {
        return Err(CliError::data("train and val features must both be calibrated or both raw"));
    }
    let kind = match a.mode {
        Mode::DgmeOnly => HeadKind::DgmeOnly,
        Mode::Fusion => HeadKind::Fusion,
    };
    let calibrated = a.inputs.stats.is_some() || is_calibrated(&train_t);
    if kind == HeadKind::Fusion && !calibrated {
        let (td, vd) = (train_t.meta.get("domain"), val_t.meta.get("domain"));
        if td != vd {
            return Err(CliError::usage(format!(
                "fusion across domains ({} vs {}) needs calibrated descriptors: pass --stats",
                td.unwrap_or("unknown"),
                vd.unwrap_or("unknown")
            )));
        }
        eprintln!("warning: training the fusion head on uncalibrated descriptors");
    }
    let inputs = load_inputs(&train_t, &a.inputs)?;
    if kind == HeadKind::Fusion && inputs.embeddings.is_none() {
        return Err(CliError::usage("--mode fusion needs --embeddings"));
    }
    let present: HashSet<&str> = train_t.rows.iter().map(|r| r.label.as_str()).collect();
    let classes: Vec<String> = schema.classes.iter().filter(|c| present.contains(c.as_str())).cloned().collect();
    let fusion = kind == HeadKind::Fusion;
    let tr = examples(&train_t, &inputs, &classes, fusion)?;
    let va = examples(&val_t, &inputs, &classes, fusion)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr_max: a.lr,
        cosine_floor: a.lr_floor,
        weight_decay: a.weight_decay,
        early_stop_patience: a.patience,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let outcome = model::train(kind, classes.clone(), &tr, &va, &cfg)?;
    let hash = train_t.config_hash().to_string();
    let mut meta = Meta::new(Some(a.seed), &hash);
    if let Some(domain) = train_t.meta.get("domain") {
        meta.set("domain", domain);
    }
    let file = ModelFile {
        meta: meta.clone(),
        kind,
        num_classes: classes.len(),
        feature_config_hash: hash.clone(),
        stats_config_hash: calibrated.then(|| hash.clone()),
        embedding: if fusion { inputs.embeddings.map(|(name, _)| name) } else { None },
        train_config: cfg,
        best_epoch: outcome.best_epoch,
        head: outcome.head,
    };
    file.write(&a.out)?;
    if let Some(path) = &a.log {
        log_table(&outcome.log, meta).write(path)?;
    }
    let best = &outcome.log[outcome.best_epoch - 1];
    println!(
        "trained {} head: best epoch {} of {}, val macro F1 {:.4}, alpha {:.4}",
        kind,
        outcome.best_epoch,
        outcome.log.len(),
        best.val_macro_f1,
        best.alpha
    );
    Ok(())
}

/// Labels predicted by `model` for every row of `table`.
fn run_model(model: &ModelFile, table: &FeatureTable, inputs: &ModelInputs) -> CliResult<Vec<Entry>> {
    if table.config_hash() != model.feature_config_hash {
        return Err(Error::ConfigMismatch(model.feature_config_hash.clone(), table.config_hash().to_string()).into());
    }
    let expects_calibration = model.stats_config_hash.is_some();
    let calibrated = inputs.stats.is_some() || is_calibrated(table);
    if expects_calibration != calibrated {
        return Err(CliError::usage(if expects_calibration {
            "model was trained on calibrated descriptors: pass --stats or calibrated features"
        } else {
            "model was trained on raw descriptors: drop --stats"
        }));
    }
    let resolved = load_inputs(table, inputs)?;
    let fusion = model.kind == HeadKind::Fusion;
    if fusion {
        match (&resolved.embeddings, &model.embedding) {
            (None, _) => return Err(CliError::usage("fusion model needs --embeddings")),
            (Some((name, _)), Some(expected)) if name != expected => {
                return Err(Error::ConfigMismatch(expected.clone(), name.clone()).into())
            }
            _ => {}
        }
    }
    // labels are not needed for prediction
    let mut unlabeled = table.clone();
    let placeholder = model.head.class_names[0].clone();
    unlabeled.rows.iter_mut().for_each(|r| r.label = placeholder.clone());
    let batch = examples(&unlabeled, &resolved, &model.head.class_names, fusion)?;
    table
        .rows
        .iter()
        .zip(&batch)
        .map(|(r, ex)| {
            let k = model.head.predict(&ex.swin, &ex.dgme)?;
            Ok(Entry::new(r.clip_id.clone(), model.head.class_names[k].clone()))
        })
        .collect()
}

fn predictions_table(preds: &[Entry], meta: Meta) -> CsvTable {
    let mut table = CsvTable::new(meta, vec!["clip_id".into(), "label".into()]);
    table.rows = preds.iter().map(|e| vec![e.clip_id.clone(), e.label.clone()]).collect();
    table
}

pub fn predict(a: &PredictArgs) -> CliResult {
    let model = ModelFile::read(&a.model)?;
    let table = read_features(&a.features)?;
    let preds = run_model(&model, &table, &a.inputs)?;
    predictions_table(&preds, model.meta.clone()).write(&a.out)?;
    println!("predicted {} clips", preds.len());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> CliResult {
    let (preds, truth, classes, meta) = match (&a.model, &a.pred) {
        (Some(model_path), _) => {
            let model = ModelFile::read(model_path)?;
            let path = a.features.as_ref().expect("clap requires --features with --model");
            let table = read_features(path)?;
            let preds = run_model(&model, &table, &a.inputs)?;
            let truth: Vec<Entry> = table.rows.iter().map(|r| Entry::new(r.clip_id.clone(), r.label.clone())).collect();
            (preds, truth, model.head.class_names.clone(), model.meta.clone())
        }
        (None, Some(pred_path)) => {
            let truth_path = a.truth.as_ref().expect("clap requires --truth with --pred");
            let pred_t = CsvTable::read(pred_path)?;
            let truth_t = CsvTable::read(truth_path)?;
            let preds = entries_of(&pred_t, pred_path)?;
            let truth = entries_of(&truth_t, truth_path)?;
            let schema = ClassSchema::builtin(&a.schema)?;
            let used: HashSet<&str> = truth.iter().chain(&preds).map(|e| e.label.as_str()).collect();
            let classes = schema.classes.iter().filter(|c| used.contains(c.as_str())).cloned().collect();
            let meta = Meta::new(seed_of(&truth_t.meta), &hash_of(&truth_t.meta));
            (preds, truth, classes, meta)
        }
        (None, None) => return Err(CliError::usage("eval needs --model with --features, or --pred with --truth")),
    };
    unique_ids(&truth, Path::new("truth"))?;
    let truth = AnnotatedSet::new(classes, truth)?;
    let (cm, report) = eval::evaluate(&preds, &truth)?;
    MetricsFile { meta: meta.clone(), report: report.clone() }.write(&a.metrics)?;
    confusion_table(&cm, meta).write(&a.confusion)?;
    println!("accuracy {:.4} macro_f1 {:.4} over {} clips", report.accuracy, report.macro_f1, truth.len());
    Ok(())
}

fn descriptor_layout(table: &FeatureTable, path: &Path) -> CliResult<(usize, usize)> {
    if is_calibrated(table) {
        return Err(CliError::data(format!("{}: plots need raw (uncalibrated) descriptors", path.display())));
    }
    let read = |key: &str, default: usize| table.meta.get(key).and_then(|v| v.parse().ok()).unwrap_or(default);
    let (grid, bins) = (read("grid", 3), read("bins", 12));
    if grid * grid * (bins + 1) != table.dim {
        return Err(Error::Dimension {
            expected: grid * grid * (bins + 1),
            actual: table.dim,
            context: "descriptor length vs grid and bins",
        }
        .into());
    }
    Ok((grid, bins))
}

pub fn viz(a: &VizArgs) -> CliResult {
    match &a.kind {
        VizKind::Rose { features, class, out } => {
            let table = read_features(features)?;
            let (_, bins) = descriptor_layout(&table, features)?;
            let rows: Vec<_> = table.rows.iter().filter(|r| r.label == *class).collect();
            if rows.is_empty() {
                return Err(CliError::data(format!("no clips labelled {class:?} in {}", features.display())));
            }
            let mut totals = vec![0.0; bins];
            for r in &rows {
                for (t, v) in totals.iter_mut().zip(viz::direction_totals(&r.values, bins)) {
                    *t += v;
                }
            }
            let meta = table.meta.clone().with("plot", "rose").with("class", class.as_str());
            let title = format!("{class} ({} clips)", rows.len());
            write_file(out, viz::rose_svg(&totals, &meta, &title))?;
        }
        VizKind::Grid { features, clip, out } => {
            let table = read_features(features)?;
            let (grid, bins) = descriptor_layout(&table, features)?;
            let row =
                table.row(clip).ok_or_else(|| CliError::data(format!("no clip {clip:?} in {}", features.display())))?;
            let meta = table.meta.clone().with("plot", "grid").with("clip", clip.as_str());
            write_file(out, viz::grid_svg(&row.values, grid, bins, &meta, &format!("{clip} ({})", row.label)))?;
        }
    }
    Ok(())
}
