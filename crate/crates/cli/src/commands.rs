use std::fs;
use std::path::{Path, PathBuf};

use csiwave::data::{load_recording, ActivityLabel, Dataset};
use csiwave::nn::{argmax, load_checkpoint, save_checkpoint, AnyModel, Checkpoint, Network};
use csiwave::pipeline::{
    compare_pcs, evaluate_checkpoint, loss_curve_csv, preprocess, prepare_examples, read_dataset_dir,
    render_comparison, run_on_dataset, split_examples, synthesize, train_baseline, train_wcnn, write_dataset_dir,
    FileFormat, MetricsReport, PipelineConfig, PreprocessConfig,
};
use csiwave::{Error, Result};

use crate::{Command, ConfigArg, DataArg, Format, Part};

impl From<Format> for FileFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Binary => FileFormat::Binary,
            Format::Csv => FileFormat::Csv,
        }
    }
}

fn load_config(arg: &ConfigArg) -> Result<PipelineConfig> {
    match &arg.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| in_file(e, path)),
        None => {
            let cfg = PipelineConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn load_dataset(cfg: &PipelineConfig, arg: &DataArg) -> Result<Dataset> {
    match &arg.data {
        Some(dir) => read_dataset_dir(dir).map_err(|e| in_file(e, dir)),
        None => synthesize(cfg),
    }
}

fn in_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Recording { .. } => e,
        other => other.in_recording(path.display().to_string()),
    }
}

fn checkpoint(path: &Path) -> Result<Checkpoint> {
    load_checkpoint(path).map_err(|e| in_file(e, path))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn write_reports(dir: &Path, report: &MetricsReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(&dir.join("metrics.json"), report.to_json())?;
    write(&dir.join("confusion.csv"), report.confusion_csv())?;
    write(&dir.join("confusion.svg"), report.confusion_svg())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "recording".to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth { config, out, format } => {
            let cfg = load_config(&config)?;
            let dataset = synthesize(&cfg)?;
            write_dataset_dir(&dataset, &out, format.into())?;
            println!("wrote {} recordings to {}", dataset.len(), out.display());
        }
        Command::Ingest {
            out,
            format,
            label,
            subject,
            files,
        } => {
            let label = label.map(ActivityLabel::new).transpose()?;
            let mut recordings = Vec::with_capacity(files.len());
            for file in &files {
                let mut rec = load_recording(file)
                    .map_err(|e| in_file(e, file))?
                    .with_id(stem(file));
                if label.is_some() {
                    rec = rec.with_label(label);
                }
                if let Some(s) = &subject {
                    rec = rec.with_subject(s.clone());
                }
                recordings.push(rec);
            }
            let dataset = Dataset::new(recordings, ActivityLabel::COUNT)?;
            write_dataset_dir(&dataset, &out, format.into())?;
            println!("ingested {} recordings into {}", dataset.len(), out.display());
        }
        Command::Preprocess { config, data, out } => {
            let cfg = load_config(&config)?;
            let dataset = load_dataset(&cfg, &data)?;
            let pre = PreprocessConfig::from(&cfg);
            let mut table = String::from("recording,label,start,end,normalized_length,p,error\n");
            let mut failures = 0;
            for (i, rec) in dataset.recordings().iter().enumerate() {
                let id = rec.id().map_or_else(|| format!("rec_{i:04}"), str::to_string);
                let label = rec.label().map(|l| l.class_id().to_string()).unwrap_or_default();
                match preprocess(rec, &pre) {
                    Ok(ex) => {
                        let s = &ex.provenance.segment;
                        table.push_str(&format!(
                            "{id},{label},{},{},{:.4},{:.4},\n",
                            s.start, s.end, s.normalized_length_t, s.p_used
                        ));
                    }
                    Err(e) => {
                        failures += 1;
                        let msg = e.root().to_string().replace(',', ";");
                        table.push_str(&format!("{id},{label},,,,,{msg}\n"));
                    }
                }
            }
            match out {
                Some(path) => write(&path, table)?,
                None => print!("{table}"),
            }
            if failures > 0 {
                return Err(Error::invalid(format!(
                    "{failures} of {} recordings failed preprocessing",
                    dataset.len()
                )));
            }
        }
        Command::Train {
            config,
            data,
            out,
            loss_curve,
            all,
            baseline,
        } => {
            let cfg = load_config(&config)?;
            let examples = prepare_examples(&cfg, &load_dataset(&cfg, &data)?)?;
            let train_set = if all { examples } else { split_examples(&cfg, &examples)?.train };
            let (ckpt, curve) = if baseline {
                train_baseline(&cfg, &train_set)?
            } else {
                train_wcnn(&cfg, &train_set)?
            };
            save_checkpoint(&ckpt, &out)?;
            let curve_path = loss_curve.unwrap_or_else(|| out.with_extension("loss.csv"));
            write(&curve_path, loss_curve_csv(&curve))?;
            println!(
                "trained on {} examples; final mean loss {:.6}; wrote {} and {}",
                train_set.len(),
                curve.last().copied().unwrap_or(f64::NAN),
                out.display(),
                curve_path.display()
            );
        }
        Command::Eval {
            config,
            data,
            model,
            out,
            split,
        } => {
            let cfg = load_config(&config)?;
            let ckpt = checkpoint(&model)?;
            let examples = prepare_examples(&cfg, &load_dataset(&cfg, &data)?)?;
            let part = match split {
                Part::All => examples,
                Part::Train => split_examples(&cfg, &examples)?.train,
                Part::Test => split_examples(&cfg, &examples)?.test,
            };
            if part.is_empty() {
                return Err(Error::invalid("no examples to evaluate"));
            }
            let report = evaluate_checkpoint(&ckpt, &part)?;
            write_reports(&out, &report)?;
            print!("{}", report.table());
        }
        Command::Predict { config, model, files } => {
            let cfg = load_config(&config)?;
            let ckpt = checkpoint(&model)?;
            let pre = PreprocessConfig::from(&cfg);
            println!("file,class_id,activity,probability");
            for file in &files {
                let rec = load_recording(file)
                    .map_err(|e| in_file(e, file))?
                    .with_id(stem(file));
                let ex = preprocess(&rec, &pre)?;
                let probs = probabilities(&ckpt, &ex)?;
                let best = argmax(&probs);
                let label = ckpt.labels[best];
                println!("{},{},{},{:.4}", file.display(), label.class_id(), label.name(), probs[best]);
            }
        }
        Command::ComparePcs {
            config,
            data,
            indices,
            out,
        } => {
            let cfg = load_config(&config)?;
            let dataset = load_dataset(&cfg, &data)?;
            let rows = compare_pcs(&cfg, &dataset, &indices)?;
            let table = render_comparison(&rows);
            if let Some(path) = out {
                write(&path, &table)?;
            }
            print!("{table}");
        }
        Command::Run { config, data, out } => {
            let cfg = load_config(&config)?;
            let dataset = load_dataset(&cfg, &data)?;
            let outcome = run_on_dataset(&cfg, &dataset)?;
            fs::create_dir_all(&out)?;
            save_checkpoint(&outcome.checkpoint, out.join("model.bin"))?;
            write(&out.join("loss_curve.csv"), loss_curve_csv(&outcome.loss_curve))?;
            write_reports(&out, &outcome.wcnn)?;
            write(&out.join("knn_metrics.json"), outcome.knn.to_json())?;
            let mut summary = format!("wavelet CNN\n{}\nk-NN\n{}", outcome.wcnn.table(), outcome.knn.table());
            if let Some(b) = &outcome.baseline {
                write(&out.join("baseline_metrics.json"), b.to_json())?;
                summary.push_str(&format!("plain CNN\n{}", b.table()));
            }
            write(&out.join("report.txt"), &summary)?;
            print!("{summary}");
            println!(
                "preprocessing {:.2?}, training {:.2?}; reports in {}",
                outcome.preprocess_time,
                outcome.train_time,
                PathBuf::from(&out).display()
            );
        }
        Command::Config => print!("{}", PipelineConfig::default().to_toml()),
    }
    Ok(())
}

fn probabilities(ckpt: &Checkpoint, ex: &csiwave::pipeline::FeatureExample) -> Result<Vec<f64>> {
    match &ckpt.model {
        AnyModel::Wcnn(m) => m.probabilities(&ex.wcnn_input()?),
        AnyModel::Baseline(m) => m.probabilities(&ex.flat),
    }
}
