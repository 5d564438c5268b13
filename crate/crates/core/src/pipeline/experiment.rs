//! End-to-end experiments: synthesis, preprocessing, split, training and
//! evaluation of the wavelet CNN against the k-NN and plain CNN baselines.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::knn::knn_vote;
use super::metrics::{evaluate, MetricsReport};
use super::preprocess::{preprocess_all, FeatureExample, PreprocessConfig};
use super::split::{stratified_split, Split};
use crate::data::{ActivityLabel, Dataset};
use crate::error::{Error, Result};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::{train, AnyModel, BaselineCnn, Network, WcnnInput, WcnnModel};
use crate::synth::generate_dataset;

/// Synthesizes the dataset described by `cfg.synth`.
pub fn synthesize(cfg: &PipelineConfig) -> Result<Dataset> {
    let profiles = cfg.synth.activity_profiles()?;
    generate_dataset(&profiles, cfg.synth.samples_per_class, &cfg.synth.synth_config()?)
}

/// Sorted distinct labels; position in the list is the model's class index.
pub fn label_set(examples: &[FeatureExample]) -> Result<Vec<ActivityLabel>> {
    let mut labels = examples
        .iter()
        .map(|e| {
            e.label
                .ok_or_else(|| Error::invalid(format!("{} has no label", e.provenance.recording_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    labels.sort();
    labels.dedup();
    Ok(labels)
}

/// Class index of every example under `labels`.
pub fn class_indices(examples: &[FeatureExample], labels: &[ActivityLabel]) -> Result<Vec<usize>> {
    examples
        .iter()
        .map(|e| {
            let l = e
                .label
                .ok_or_else(|| Error::invalid(format!("{} has no label", e.provenance.recording_id)))?;
            labels
                .iter()
                .position(|&x| x == l)
                .ok_or_else(|| Error::invalid(format!("label {l} is not among the model's classes")))
        })
        .collect()
}

pub fn class_names(labels: &[ActivityLabel]) -> Vec<String> {
    labels.iter().map(ToString::to_string).collect()
}

fn wcnn_inputs(examples: &[FeatureExample]) -> Result<Vec<WcnnInput>> {
    examples.iter().map(FeatureExample::wcnn_input).collect()
}

/// Trains a fresh wavelet CNN; returns the checkpoint and per-epoch losses.
pub fn train_wcnn(cfg: &PipelineConfig, examples: &[FeatureExample]) -> Result<(Checkpoint, Vec<f64>)> {
    let labels = label_set(examples)?;
    let targets = class_indices(examples, &labels)?;
    let inputs = wcnn_inputs(examples)?;
    let mut model = WcnnModel::new(cfg.wcnn_schedule(), labels.len(), cfg.model.init_seed)?;
    let curve = train(&mut model, &inputs, &targets, &cfg.train)?;
    Ok((Checkpoint::new(AnyModel::Wcnn(model), labels)?, curve))
}

pub fn train_baseline(cfg: &PipelineConfig, examples: &[FeatureExample]) -> Result<(Checkpoint, Vec<f64>)> {
    let labels = label_set(examples)?;
    let targets = class_indices(examples, &labels)?;
    let inputs: Vec<Vec<f64>> = examples.iter().map(|e| e.flat.clone()).collect();
    let mut model = BaselineCnn::new(cfg.baseline.schedule(), labels.len(), cfg.model.init_seed)?;
    let curve = train(&mut model, &inputs, &targets, &cfg.train)?;
    Ok((Checkpoint::new(AnyModel::Baseline(model), labels)?, curve))
}

/// Predicted class index of every example, evaluated in parallel.
pub fn predict(ckpt: &Checkpoint, examples: &[FeatureExample]) -> Result<Vec<usize>> {
    examples
        .par_iter()
        .map(|e| match &ckpt.model {
            AnyModel::Wcnn(m) => m.predict(&e.wcnn_input()?),
            AnyModel::Baseline(m) => m.predict(&e.flat),
        })
        .collect()
}

/// Metrics of `ckpt` on labeled examples, named after its classes.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, examples: &[FeatureExample]) -> Result<MetricsReport> {
    let truths = class_indices(examples, &ckpt.labels)?;
    let predictions = predict(ckpt, examples)?;
    evaluate(&predictions, &truths, ckpt.labels.len())?.with_class_names(class_names(&ckpt.labels))
}

pub fn knn_predictions(train: &[FeatureExample], train_targets: &[usize], test: &[FeatureExample], k: usize) -> Result<Vec<usize>> {
    let points: Vec<(Vec<f64>, usize)> = train
        .iter()
        .zip(train_targets)
        .map(|(e, &t)| (e.knn_features(), t))
        .collect();
    test.par_iter().map(|q| knn_vote(&points, &q.knn_features(), k)).collect()
}

fn select<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub split: Split,
    pub checkpoint: Checkpoint,
    pub loss_curve: Vec<f64>,
    pub wcnn: MetricsReport,
    pub knn: MetricsReport,
    pub baseline: Option<MetricsReport>,
    pub preprocess_time: Duration,
    pub train_time: Duration,
}

/// Applies the configured subject filter and preprocesses every recording.
pub fn prepare_examples(cfg: &PipelineConfig, dataset: &Dataset) -> Result<Vec<FeatureExample>> {
    let dataset = match &cfg.split.subject {
        Some(s) => dataset.filter_subject(s)?,
        None => dataset.clone(),
    };
    preprocess_all(dataset.recordings(), &PreprocessConfig::from(cfg))
}

/// Labeled examples split into training and held-out parts.
#[derive(Debug, Clone)]
pub struct ExampleSplit {
    pub labels: Vec<ActivityLabel>,
    pub split: Split,
    pub train: Vec<FeatureExample>,
    pub test: Vec<FeatureExample>,
}

/// Stratified split of `examples` under `cfg.split`. Every class must keep
/// at least one training example.
pub fn split_examples(cfg: &PipelineConfig, examples: &[FeatureExample]) -> Result<ExampleSplit> {
    let labels = label_set(examples)?;
    let targets = class_indices(examples, &labels)?;
    let split = stratified_split(&targets, cfg.split.test_fraction, cfg.split.seed)?;
    let train = select(examples, &split.train);
    let test = select(examples, &split.test);
    if label_set(&train)? != labels {
        return Err(Error::invalid("training split does not cover every class"));
    }
    Ok(ExampleSplit {
        labels,
        split,
        train,
        test,
    })
}

/// Preprocesses `dataset`, splits it, trains on the training part and
/// evaluates every classifier on the held-out part.
pub fn run_on_dataset(cfg: &PipelineConfig, dataset: &Dataset) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let examples = prepare_examples(cfg, dataset)?;
    let preprocess_time = started.elapsed();
    let ExampleSplit {
        labels,
        split,
        train: train_set,
        test: test_set,
    } = split_examples(cfg, &examples)?;
    if test_set.is_empty() {
        return Err(Error::invalid("the split left no test examples"));
    }
    let train_targets = class_indices(&train_set, &labels)?;
    let test_targets = class_indices(&test_set, &labels)?;

    let started = Instant::now();
    let (checkpoint, loss_curve) = train_wcnn(cfg, &train_set)?;
    let train_time = started.elapsed();
    let wcnn = evaluate_checkpoint(&checkpoint, &test_set)?;

    let names = class_names(&labels);
    let knn_pred = knn_predictions(&train_set, &train_targets, &test_set, cfg.knn.k.min(train_set.len()))?;
    let knn = evaluate(&knn_pred, &test_targets, labels.len())?.with_class_names(names)?;

    let baseline = if cfg.baseline.enabled {
        let (ckpt, _) = train_baseline(cfg, &train_set)?;
        Some(evaluate_checkpoint(&ckpt, &test_set)?)
    } else {
        None
    };
    Ok(ExperimentOutcome {
        split,
        checkpoint,
        loss_curve,
        wcnn,
        knn,
        baseline,
        preprocess_time,
        train_time,
    })
}

/// Synthesizes the configured dataset and runs the experiment on it.
pub fn run_experiment(cfg: &PipelineConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    run_on_dataset(cfg, &synthesize(cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcComparisonRow {
    pub indices: Vec<usize>,
    pub wcnn_accuracy: f64,
    pub wcnn_macro_f1: f64,
    pub knn_accuracy: f64,
}

/// Reruns the experiment once per principal-component subset.
pub fn compare_pcs(cfg: &PipelineConfig, dataset: &Dataset, index_sets: &[Vec<usize>]) -> Result<Vec<PcComparisonRow>> {
    index_sets
        .iter()
        .map(|indices| {
            let mut c = cfg.clone();
            c.fusion.indices = indices.clone();
            c.baseline.enabled = false;
            let out = run_on_dataset(&c, dataset)?;
            Ok(PcComparisonRow {
                indices: indices.clone(),
                wcnn_accuracy: out.wcnn.accuracy,
                wcnn_macro_f1: out.wcnn.macro_avg.f1,
                knn_accuracy: out.knn.accuracy,
            })
        })
        .collect()
}

pub fn render_comparison(rows: &[PcComparisonRow]) -> String {
    let mut out = String::from("indices  wcnn_accuracy  wcnn_macro_f1  knn_accuracy\n");
    for r in rows {
        let idx: Vec<String> = r.indices.iter().map(ToString::to_string).collect();
        out.push_str(&format!(
            "{:<7}  {:>13.4}  {:>13.4}  {:>12.4}\n",
            idx.join(","),
            r.wcnn_accuracy,
            r.wcnn_macro_f1,
            r.knn_accuracy
        ));
    }
    out
}

/// `epoch,mean_loss` rows, epochs counted from 1.
pub fn loss_curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for (i, l) in curve.iter().enumerate() {
        out.push_str(&format!("{},{l}\n", i + 1));
    }
    out
}
