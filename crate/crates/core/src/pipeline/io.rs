//! Dataset directories: one recording file per example plus `manifest.csv`.
//!
//! ```text
//! file,label,subject,window_start,window_end
//! c00_000.csiw,0,synth00,61,139
//! ```
//!
//! Empty fields mean "unknown". The recording id is the file stem.

use std::fs;
use std::path::Path;

use crate::data::{load_recording, save_binary, save_csv, ActivityLabel, CsiRecording, Dataset};
use crate::error::{Error, FormatError, Result};

pub const MANIFEST: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "file,label,subject,window_start,window_end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FileFormat {
    #[default]
    Binary,
    Csv,
}

impl FileFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FileFormat::Binary => "csiw",
            FileFormat::Csv => "csv",
        }
    }
}

impl std::str::FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "csiw" => Ok(FileFormat::Binary),
            "csv" => Ok(FileFormat::Csv),
            other => Err(Error::invalid(format!("unknown file format {other:?}"))),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_dataset_dir(dataset: &Dataset, dir: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    for (i, rec) in dataset.recordings().iter().enumerate() {
        let stem = rec.id().map_or_else(|| format!("rec_{i:04}"), str::to_string);
        if stem.contains([',', '/', '\\', '\n']) {
            return Err(Error::invalid(format!("recording id {stem:?} is not usable as a file name")));
        }
        let file = format!("{stem}.{}", format.extension());
        match format {
            FileFormat::Binary => save_binary(rec, dir.join(&file))?,
            FileFormat::Csv => save_csv(rec, dir.join(&file))?,
        }
        let (ws, we) = rec.activity_window().unzip();
        manifest.push_str(&format!(
            "{file},{},{},{},{}\n",
            opt(rec.label().map(ActivityLabel::class_id)),
            rec.subject_id().unwrap_or(""),
            opt(ws),
            opt(we)
        ));
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(field: &str, line: usize, column: usize) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| FormatError::at(line, column, format!("{field:?} is not a valid value")).into())
}

/// Loads every manifest entry, ordered by recording id.
pub fn read_dataset_dir(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
        _ => return Err(FormatError::at_line(1, format!("manifest header must be {MANIFEST_HEADER:?}")).into()),
    }
    let mut recordings = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(FormatError::at_line(line_no, format!("expected 5 fields, found {}", fields.len())).into());
        }
        let file = fields[0];
        if file.is_empty() {
            return Err(FormatError::at(line_no, 1, "empty file name").into());
        }
        let label = parse_opt::<u8>(fields[1], line_no, 2)?
            .map(|id| ActivityLabel::new(id).map_err(|e| Error::from(FormatError::at(line_no, 2, e.to_string()))))
            .transpose()?;
        let ws = parse_opt::<usize>(fields[3], line_no, 4)?;
        let we = parse_opt::<usize>(fields[4], line_no, 5)?;
        let id = Path::new(file).file_stem().and_then(|s| s.to_str()).unwrap_or(file).to_string();
        let mut rec = load_recording(dir.join(file)).map_err(|e| e.in_recording(&id))?;
        if let (Some(m), Some(f)) = (label, rec.label()) {
            if m != f {
                return Err(FormatError::at(line_no, 2, format!("manifest label {m} disagrees with file label {f}")).into());
            }
        }
        let merged = label.or(rec.label());
        rec = rec.with_label(merged).with_id(&id);
        if !fields[2].is_empty() {
            rec = rec.with_subject(fields[2]);
        }
        match (ws, we) {
            (Some(s), Some(e)) => {
                rec = rec
                    .with_activity_window(s, e)
                    .map_err(|e| Error::from(FormatError::at(line_no, 4, e.to_string())))?
            }
            (None, None) => {}
            _ => return Err(FormatError::at(line_no, 4, "window start and end must both be given").into()),
        }
        recordings.push(rec);
    }
    recordings.sort_by(|a: &CsiRecording, b: &CsiRecording| a.id().cmp(&b.id()));
    Dataset::new(recordings, ActivityLabel::COUNT)
}
