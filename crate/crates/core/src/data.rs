//! CSI recordings, activity labels and the on-disk interchange formats.
//!
//! Two formats are supported:
//!
//! * a text format: a header line
//!   `# csiwave v1; rate=<Hz>; ntx=<int>; nrx=<int>; nsub=<int>; label=<id|none>`
//!   followed by one line per time sample holding `N = ntx*nrx*nsub`
//!   comma-separated amplitudes;
//! * a binary format: magic `CSIW`, version byte `1`, then little-endian
//!   `u32 T, u32 ntx, u32 nrx, u32 nsub, f64 rate, i32 label (-1 = none)`
//!   and `T*N` `f32` amplitudes in row-major order.
//!
//! Stream columns are ordered tx-major, then rx, then subcarrier.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::linalg::Matrix;

/// Activity names in class-id order.
pub const ACTIVITY_NAMES: [&str; 16] = [
    "Horizontal Arm Wave",
    "High Arm Wave",
    "Two Hands Wave",
    "High Throw",
    "Draw X",
    "Draw Tick",
    "Toss Paper",
    "Forward Kick",
    "Side Kick",
    "Bend",
    "Hand Clap",
    "Walk",
    "Phone Call",
    "Drink Water",
    "Sit Down",
    "Squat",
];

pub const CSV_MAGIC: &str = "# csiwave v1";
pub const BINARY_MAGIC: &[u8; 4] = b"CSIW";
pub const BINARY_VERSION: u8 = 1;
const BINARY_HEADER_LEN: usize = 4 + 1 + 4 * 4 + 8 + 4;

/// Amplitude of a complex CSI sample.
pub fn complex_magnitude(re: f64, im: f64) -> Result<f64> {
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::invalid(format!("non-finite CSI sample ({re}, {im})")));
    }
    Ok(re.hypot(im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivityLabel(u8);

impl ActivityLabel {
    pub const COUNT: usize = ACTIVITY_NAMES.len();

    pub fn new(class_id: u8) -> Result<Self> {
        if usize::from(class_id) < Self::COUNT {
            Ok(Self(class_id))
        } else {
            Err(Error::invalid(format!(
                "activity class id {class_id} is outside 0..{}",
                Self::COUNT
            )))
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ACTIVITY_NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name.trim()))
            .map(|i| Self(i as u8))
            .ok_or_else(|| Error::invalid(format!("unknown activity name {name:?}")))
    }

    pub fn class_id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        ACTIVITY_NAMES[usize::from(self.0)]
    }

    pub fn all() -> impl Iterator<Item = ActivityLabel> {
        (0..Self::COUNT as u8).map(ActivityLabel)
    }
}

impl std::fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:02}. {}", self.0 + 1, self.name())
    }
}

/// Antenna and subcarrier counts behind the stream columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamLayout {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_subcarriers: usize,
}

impl StreamLayout {
    pub fn new(n_tx: usize, n_rx: usize, n_subcarriers: usize) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 || n_subcarriers == 0 {
            return Err(Error::invalid(format!(
                "stream layout {n_tx}x{n_rx}x{n_subcarriers} has a zero dimension"
            )));
        }
        Ok(Self {
            n_tx,
            n_rx,
            n_subcarriers,
        })
    }

    /// Single stream; for recordings that are already one scalar series.
    pub fn single() -> Self {
        Self {
            n_tx: 1,
            n_rx: 1,
            n_subcarriers: 1,
        }
    }

    pub fn stream_count(&self) -> usize {
        self.n_tx * self.n_rx * self.n_subcarriers
    }

    /// Column index of a (tx, rx, subcarrier) triple.
    pub fn column(&self, tx: usize, rx: usize, subcarrier: usize) -> usize {
        debug_assert!(tx < self.n_tx && rx < self.n_rx && subcarrier < self.n_subcarriers);
        (tx * self.n_rx + rx) * self.n_subcarriers + subcarrier
    }

    /// Inverse of [`StreamLayout::column`].
    pub fn triple(&self, column: usize) -> (usize, usize, usize) {
        let subcarrier = column % self.n_subcarriers;
        let pair = column / self.n_subcarriers;
        (pair / self.n_rx, pair % self.n_rx, subcarrier)
    }
}

impl Default for StreamLayout {
    fn default() -> Self {
        Self {
            n_tx: 1,
            n_rx: 3,
            n_subcarriers: 30,
        }
    }
}

/// A T x N matrix of CSI amplitudes plus acquisition metadata.
///
/// Construction validates every invariant, so a value of this type is always
/// well formed.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiRecording {
    sample_rate_hz: f64,
    streams: Matrix,
    layout: StreamLayout,
    label: Option<ActivityLabel>,
    subject_id: Option<String>,
    id: Option<String>,
    activity_window: Option<(usize, usize)>,
}

impl CsiRecording {
    pub fn new(
        sample_rate_hz: f64,
        streams: Matrix,
        layout: StreamLayout,
        label: Option<ActivityLabel>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if streams.rows() < 2 {
            return Err(Error::invalid(format!(
                "a recording needs at least 2 samples, got {}",
                streams.rows()
            )));
        }
        if streams.cols() != layout.stream_count() || streams.cols() == 0 {
            return Err(Error::invalid(format!(
                "layout {}x{}x{} implies {} streams but the matrix has {}",
                layout.n_tx,
                layout.n_rx,
                layout.n_subcarriers,
                layout.stream_count(),
                streams.cols()
            )));
        }
        if let Some(pos) = streams
            .as_slice()
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0)
        {
            let (t, n) = (pos / streams.cols(), pos % streams.cols());
            return Err(Error::invalid(format!(
                "amplitude at sample {t}, stream {n} is {} (must be finite and >= 0)",
                streams.as_slice()[pos]
            )));
        }
        Ok(Self {
            sample_rate_hz,
            streams,
            layout,
            label,
            subject_id: None,
            id: None,
            activity_window: None,
        })
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject_id = Some(subject.into());
        self
    }

    pub fn with_label(mut self, label: Option<ActivityLabel>) -> Self {
        self.label = label;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    /// Records the ground-truth activity span `[start, end)` in samples.
    pub fn with_activity_window(mut self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::invalid(format!(
                "activity window [{start}, {end}) does not fit a {}-sample recording",
                self.len()
            )));
        }
        self.activity_window = Some((start, end));
        Ok(self)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn layout(&self) -> StreamLayout {
        self.layout
    }

    pub fn label(&self) -> Option<ActivityLabel> {
        self.label
    }

    pub fn subject_id(&self) -> Option<&str> {
        self.subject_id.as_deref()
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn activity_window(&self) -> Option<(usize, usize)> {
        self.activity_window
    }

    /// Number of time samples T.
    pub fn len(&self) -> usize {
        self.streams.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.rows() == 0
    }

    pub fn stream_count(&self) -> usize {
        self.streams.cols()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    /// One (tx, rx, subcarrier) amplitude series.
    pub fn stream(&self, tx: usize, rx: usize, subcarrier: usize) -> Vec<f64> {
        self.streams.column(self.layout.column(tx, rx, subcarrier))
    }
}

/// The T x N stream matrix, columns ordered tx-major, then rx, then subcarrier.
pub fn stream_matrix(recording: &CsiRecording) -> &Matrix {
    &recording.streams
}

/// An ordered collection of recordings sharing stream count and sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    recordings: Vec<CsiRecording>,
    class_count: usize,
}

impl Dataset {
    pub fn new(recordings: Vec<CsiRecording>, class_count: usize) -> Result<Self> {
        if let Some(first) = recordings.first() {
            for (i, r) in recordings.iter().enumerate() {
                if r.stream_count() != first.stream_count() {
                    return Err(Error::invalid(format!(
                        "recording {i} has {} streams, expected {}",
                        r.stream_count(),
                        first.stream_count()
                    )));
                }
                if r.sample_rate_hz() != first.sample_rate_hz() {
                    return Err(Error::invalid(format!(
                        "recording {i} has sample rate {}, expected {}",
                        r.sample_rate_hz(),
                        first.sample_rate_hz()
                    )));
                }
                if let Some(label) = r.label() {
                    if usize::from(label.class_id()) >= class_count {
                        return Err(Error::invalid(format!(
                            "recording {i} label {} is not below class count {class_count}",
                            label.class_id()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            recordings,
            class_count,
        })
    }

    pub fn recordings(&self) -> &[CsiRecording] {
        &self.recordings
    }

    pub fn into_recordings(self) -> Vec<CsiRecording> {
        self.recordings
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty()
    }

    /// Recordings whose subject id matches.
    pub fn filter_subject(&self, subject: &str) -> Result<Dataset> {
        let kept = self
            .recordings
            .iter()
            .filter(|r| r.subject_id() == Some(subject))
            .cloned()
            .collect();
        Dataset::new(kept, self.class_count)
    }
}

// ---------------------------------------------------------------------------
// Text format

fn label_token(label: Option<ActivityLabel>) -> String {
    label.map_or_else(|| "none".to_string(), |l| l.class_id().to_string())
}

pub fn write_csv<W: Write>(recording: &CsiRecording, mut out: W) -> Result<()> {
    let layout = recording.layout();
    writeln!(
        out,
        "{CSV_MAGIC}; rate={}; ntx={}; nrx={}; nsub={}; label={}",
        recording.sample_rate_hz(),
        layout.n_tx,
        layout.n_rx,
        layout.n_subcarriers,
        label_token(recording.label())
    )?;
    let mut line = String::new();
    for t in 0..recording.len() {
        line.clear();
        for (j, v) in recording.streams.row(t).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            // `Display` for f64 prints the shortest string that parses back exactly.
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_csv(recording: &CsiRecording, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(recording, &mut w)?;
    w.flush()?;
    Ok(())
}

struct CsvHeader {
    rate: f64,
    layout: StreamLayout,
    label: Option<ActivityLabel>,
}

fn parse_csv_header(line: &str) -> std::result::Result<CsvHeader, FormatError> {
    let rest = line
        .strip_prefix(CSV_MAGIC)
        .ok_or_else(|| FormatError::at_line(1, format!("header must start with {CSV_MAGIC:?}")))?;
    let mut rate = None;
    let mut dims = [None; 3];
    let mut label = None;
    for field in rest.split(';').map(str::trim).filter(|f| !f.is_empty()) {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| FormatError::at_line(1, format!("header field {field:?} is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| FormatError::at_line(1, format!("header {key}={value:?}: {what}"));
        let slot = match key {
            "rate" => {
                let r: f64 = value.parse().map_err(|_| bad("not a number"))?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(bad("must be positive"));
                }
                if rate.replace(r).is_some() {
                    return Err(bad("duplicate key"));
                }
                continue;
            }
            "label" => {
                let l = if value == "none" {
                    None
                } else {
                    let id: u8 = value.parse().map_err(|_| bad("not a class id"))?;
                    Some(ActivityLabel::new(id).map_err(|e| bad(&e.to_string()))?)
                };
                if label.replace(l).is_some() {
                    return Err(bad("duplicate key"));
                }
                continue;
            }
            "ntx" => 0,
            "nrx" => 1,
            "nsub" => 2,
            _ => return Err(bad("unknown key")),
        };
        let n: usize = value.parse().map_err(|_| bad("not a positive integer"))?;
        if n == 0 {
            return Err(bad("must be positive"));
        }
        if dims[slot].replace(n).is_some() {
            return Err(bad("duplicate key"));
        }
    }
    let missing = |k: &str| FormatError::at_line(1, format!("header is missing {k}="));
    Ok(CsvHeader {
        rate: rate.ok_or_else(|| missing("rate"))?,
        layout: StreamLayout {
            n_tx: dims[0].ok_or_else(|| missing("ntx"))?,
            n_rx: dims[1].ok_or_else(|| missing("nrx"))?,
            n_subcarriers: dims[2].ok_or_else(|| missing("nsub"))?,
        },
        label: label.ok_or_else(|| missing("label"))?,
    })
}

pub fn parse_csv(text: &str) -> Result<CsiRecording> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| FormatError::at_line(1, "empty file, expected header"))?;
    let header = parse_csv_header(header.trim_end())?;
    let n = header.layout.stream_count();
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.trim_end_matches('\r');
        let mut count = 0usize;
        for (j, token) in line.split(',').enumerate() {
            let token = token.trim();
            let v: f64 = token.parse().map_err(|_| {
                FormatError::at(line_no, j + 1, format!("{token:?} is not a decimal number"))
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "line {line_no}, column {}: amplitude {v} must be finite and >= 0",
                    j + 1
                )));
            }
            values.push(v);
            count += 1;
        }
        if count != n {
            return Err(FormatError::at(
                line_no,
                count.min(n) + 1,
                format!("expected {n} fields, found {count}"),
            )
            .into());
        }
        rows += 1;
    }
    let streams = Matrix::from_vec(rows, n, values)?;
    CsiRecording::new(header.rate, streams, header.layout, header.label)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<CsiRecording> {
    parse_csv(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Binary format

pub fn encode_binary(recording: &CsiRecording) -> Result<Vec<u8>> {
    let layout = recording.layout();
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} does not fit in u32")))
    };
    let mut out = Vec::with_capacity(BINARY_HEADER_LEN + 4 * recording.streams.as_slice().len());
    out.extend_from_slice(BINARY_MAGIC);
    out.push(BINARY_VERSION);
    out.extend_from_slice(&to_u32(recording.len(), "sample count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(layout.n_tx, "ntx")?.to_le_bytes());
    out.extend_from_slice(&to_u32(layout.n_rx, "nrx")?.to_le_bytes());
    out.extend_from_slice(&to_u32(layout.n_subcarriers, "nsub")?.to_le_bytes());
    out.extend_from_slice(&recording.sample_rate_hz().to_le_bytes());
    let label: i32 = recording.label().map_or(-1, |l| i32::from(l.class_id()));
    out.extend_from_slice(&label.to_le_bytes());
    for &v in recording.streams.as_slice() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::invalid(format!("amplitude {v} overflows f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> Result<CsiRecording> {
    if bytes.len() < BINARY_HEADER_LEN {
        return Err(FormatError::new(format!(
            "truncated header: expected {BINARY_HEADER_LEN} bytes, found {}",
            bytes.len()
        ))
        .into());
    }
    if &bytes[..4] != BINARY_MAGIC {
        return Err(FormatError::new(format!("bad magic {:?}, expected \"CSIW\"", &bytes[..4])).into());
    }
    if bytes[4] != BINARY_VERSION {
        return Err(FormatError::new(format!(
            "unsupported version {}, expected {BINARY_VERSION}",
            bytes[4]
        ))
        .into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let t = u32_at(5);
    let (n_tx, n_rx, n_sub) = (u32_at(9), u32_at(13), u32_at(17));
    let rate = f64::from_le_bytes(bytes[21..29].try_into().unwrap());
    let label = i32::from_le_bytes(bytes[29..33].try_into().unwrap());

    if t < 2 {
        return Err(FormatError::new(format!("sample count {t} is below 2")).into());
    }
    if n_tx == 0 || n_rx == 0 || n_sub == 0 {
        return Err(FormatError::new(format!("stream layout {n_tx}x{n_rx}x{n_sub} has a zero dimension")).into());
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(FormatError::new(format!("sample rate {rate} is not positive")).into());
    }
    let label = match label {
        -1 => None,
        0..=15 => Some(ActivityLabel(label as u8)),
        other => return Err(FormatError::new(format!("label {other} is outside -1..=15")).into()),
    };
    let expected = n_tx
        .checked_mul(n_rx)
        .and_then(|v| v.checked_mul(n_sub))
        .and_then(|n| n.checked_mul(t))
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(BINARY_HEADER_LEN))
        .ok_or_else(|| FormatError::new("declared dimensions overflow the payload size"))?;
    if bytes.len() != expected {
        let what = if bytes.len() < expected { "truncated payload" } else { "trailing bytes" };
        return Err(FormatError::new(format!(
            "{what}: expected {expected} bytes, found {}",
            bytes.len()
        ))
        .into());
    }
    let values: Vec<f64> = bytes[BINARY_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let layout = StreamLayout {
        n_tx,
        n_rx,
        n_subcarriers: n_sub,
    };
    let streams = Matrix::from_vec(t, layout.stream_count(), values)?;
    CsiRecording::new(rate, streams, layout, label)
}

pub fn save_binary(recording: &CsiRecording, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_binary(recording)?)?;
    Ok(())
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<CsiRecording> {
    decode_binary(&fs::read(path)?)
}

/// Loads either format, deciding by the leading magic bytes.
pub fn load_recording(path: impl AsRef<Path>) -> Result<CsiRecording> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|e| FormatError::new(format!("not UTF-8 text and not CSIW binary: {e}")))?;
        parse_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_recording(t: usize, layout: StreamLayout) -> CsiRecording {
        let n = layout.stream_count();
        let data = (0..t * n).map(|i| (i as f64 * 0.37).sin().abs() * 3.0 + 0.125).collect();
        CsiRecording::new(30.0, Matrix::from_vec(t, n, data).unwrap(), layout, ActivityLabel::new(4).ok())
            .unwrap()
    }

    #[test]
    fn magnitude_cases() {
        assert_eq!(complex_magnitude(3.0, 4.0).unwrap(), 5.0);
        assert_eq!(complex_magnitude(0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(complex_magnitude(f64::NAN, 1.0), Err(Error::InvalidValue(_))));
        assert!(matches!(complex_magnitude(1.0, f64::INFINITY), Err(Error::InvalidValue(_))));
    }

    #[test]
    fn label_table() {
        assert_eq!(ActivityLabel::new(0).unwrap().name(), "Horizontal Arm Wave");
        assert_eq!(ActivityLabel::new(15).unwrap().name(), "Squat");
        assert!(ActivityLabel::new(16).is_err());
        for l in ActivityLabel::all() {
            assert_eq!(ActivityLabel::from_name(l.name()).unwrap(), l);
        }
        assert_eq!(ActivityLabel::new(9).unwrap().to_string(), "10. Bend");
    }

    #[test]
    fn layout_ordering() {
        let layout = StreamLayout::new(1, 3, 30).unwrap();
        assert_eq!(layout.column(0, 0, 0), 0);
        assert_eq!(layout.column(0, 0, 29), 29);
        assert_eq!(layout.column(0, 1, 0), 30);
        assert_eq!(layout.column(0, 2, 29), 89);
        for c in 0..90 {
            let (tx, rx, s) = layout.triple(c);
            assert_eq!(layout.column(tx, rx, s), c);
        }
    }

    #[test]
    fn degenerate_layout_is_raw_series() {
        let series: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rec = CsiRecording::new(
            30.0,
            Matrix::from_columns(std::slice::from_ref(&series)).unwrap(),
            StreamLayout::single(),
            None,
        )
        .unwrap();
        assert_eq!(stream_matrix(&rec).column(0), series);
        assert_eq!(rec.stream(0, 0, 0), series);
    }

    #[test]
    fn construction_rejects_invariant_violations() {
        let layout = StreamLayout::single();
        let one_row = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        assert!(CsiRecording::new(30.0, one_row, layout, None).is_err());
        let neg = Matrix::from_vec(2, 1, vec![1.0, -0.5]).unwrap();
        assert!(matches!(CsiRecording::new(30.0, neg, layout, None), Err(Error::InvalidValue(_))));
        let ok = Matrix::from_vec(2, 1, vec![1.0, 0.5]).unwrap();
        assert!(CsiRecording::new(0.0, ok.clone(), layout, None).is_err());
        assert!(CsiRecording::new(30.0, ok, StreamLayout::new(1, 1, 2).unwrap(), None).is_err());
    }

    #[test]
    fn csv_paper_shaped_recording() {
        let rec = sample_recording(240, StreamLayout::default());
        let mut buf = Vec::new();
        write_csv(&rec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# csiwave v1; rate=30; ntx=1; nrx=3; nsub=30; label=4\n"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), 240);
        assert_eq!(back.stream_count(), 90);
        assert_eq!(back.sample_rate_hz(), 30.0);
        assert_eq!(back, rec);
    }

    #[test]
    fn csv_bad_token_names_line_and_column() {
        let text = "# csiwave v1; rate=30; ntx=1; nrx=1; nsub=2; label=none\n1,2\n3,abc\n";
        match parse_csv(text) {
            Err(Error::Format(e)) => {
                assert_eq!(e.line, Some(3));
                assert_eq!(e.column, Some(2));
                assert!(e.to_string().contains("line 3"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn csv_header_errors() {
        let cases = [
            "",
            "rate=30; ntx=1; nrx=1; nsub=1; label=none",
            "# csiwave v1; rate=30; ntx=1; nrx=1; label=none",
            "# csiwave v1; rate=x; ntx=1; nrx=1; nsub=1; label=none",
            "# csiwave v1; rate=30; ntx=0; nrx=1; nsub=1; label=none",
            "# csiwave v1; rate=30; ntx=1; nrx=1; nsub=1; label=16",
            "# csiwave v1; rate=30; ntx=1; nrx=1; nsub=1; label=none; extra=1",
        ];
        for header in cases {
            let text = format!("{header}\n1\n2\n");
            match parse_csv(&text) {
                Err(Error::Format(e)) => assert_eq!(e.line, Some(1), "{header}"),
                other => panic!("{header}: expected format error, got {other:?}"),
            }
        }
    }

    #[test]
    fn csv_field_count_and_negative_values() {
        let short = "# csiwave v1; rate=30; ntx=1; nrx=1; nsub=2; label=none\n1,2\n3\n";
        assert!(matches!(parse_csv(short), Err(Error::Format(FormatError { line: Some(3), .. }))));
        let neg = "# csiwave v1; rate=30; ntx=1; nrx=1; nsub=2; label=none\n1,2\n3,-1\n";
        assert!(matches!(parse_csv(neg), Err(Error::InvalidValue(_))));
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let rec = sample_recording(17, StreamLayout::new(2, 2, 3).unwrap());
        let bytes = encode_binary(&rec).unwrap();
        assert_eq!(&bytes[..5], b"CSIW\x01");
        assert_eq!(bytes.len(), 33 + 17 * 12 * 4);
        let back = decode_binary(&bytes).unwrap();
        assert_eq!(encode_binary(&back).unwrap(), bytes);
        for (a, b) in rec.streams.as_slice().iter().zip(back.streams.as_slice()) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn binary_bad_magic() {
        let rec = sample_recording(4, StreamLayout::single());
        let mut bytes = encode_binary(&rec).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_binary(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn binary_truncation_reports_byte_counts() {
        let layout = StreamLayout::new(1, 1, 3).unwrap();
        let rec = sample_recording(100, layout);
        let bytes = encode_binary(&rec).unwrap();
        // Keep the header that declares 100 rows but only 50 rows of payload.
        let cut = &bytes[..33 + 50 * 3 * 4];
        let expected = 33 + 100 * 3 * 4;
        match decode_binary(cut) {
            Err(Error::Format(e)) => {
                assert!(e.message.contains(&format!("expected {expected} bytes")), "{e}");
                assert!(e.message.contains(&format!("found {}", cut.len())), "{e}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
