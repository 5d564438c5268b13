//! Versioned binary model checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! "WCNN" | u32 version | u8 kind | u32 class count | u32 schedule len | u32 schedule[..]
//!        | u8 label id per class | u64 parameter count | f64 parameters
//! ```
//!
//! Parameters follow the model's declaration order.

use std::path::Path;

use super::{BaselineCnn, BaselineSchedule, Network, WcnnModel, WcnnSchedule};
use crate::data::ActivityLabel;
use crate::error::{Error, FormatError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WCNN";
pub const CHECKPOINT_VERSION: u32 = 1;

const KIND_WCNN: u8 = 0;
const KIND_BASELINE: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Wcnn(WcnnModel),
    Baseline(BaselineCnn),
}

impl AnyModel {
    pub fn class_count(&self) -> usize {
        match self {
            AnyModel::Wcnn(m) => m.class_count,
            AnyModel::Baseline(m) => m.class_count,
        }
    }

    fn kind(&self) -> u8 {
        match self {
            AnyModel::Wcnn(_) => KIND_WCNN,
            AnyModel::Baseline(_) => KIND_BASELINE,
        }
    }

    fn schedule(&self) -> Vec<u32> {
        match self {
            AnyModel::Wcnn(m) => {
                let s = &m.schedule;
                let mut v = vec![
                    s.input_channels as u32,
                    s.wavelet_channels as u32,
                    s.stem as u32,
                    s.stages.len() as u32,
                ];
                v.extend(s.stages.iter().map(|&c| c as u32));
                v.push(s.post as u32);
                v
            }
            AnyModel::Baseline(m) => {
                let s = &m.schedule;
                vec![s.input_len as u32, s.conv1 as u32, s.conv2 as u32]
            }
        }
    }

    fn flat_params(&self) -> Vec<f64> {
        let params = match self {
            AnyModel::Wcnn(m) => m.params(),
            AnyModel::Baseline(m) => m.params(),
        };
        params.iter().flat_map(|p| p.value.iter().copied()).collect()
    }

    fn set_params(&mut self, values: &[f64]) {
        let params = match self {
            AnyModel::Wcnn(m) => m.params_mut(),
            AnyModel::Baseline(m) => m.params_mut(),
        };
        let mut rest = values;
        for p in params {
            let (head, tail) = rest.split_at(p.len());
            p.value.copy_from_slice(head);
            rest = tail;
        }
    }
}

/// A trained model and the activity label behind each output class.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: AnyModel,
    pub labels: Vec<ActivityLabel>,
}

impl Checkpoint {
    pub fn new(model: AnyModel, labels: Vec<ActivityLabel>) -> Result<Self> {
        if labels.len() != model.class_count() {
            return Err(Error::shape(format!(
                "{} output labels for a {}-class model",
                labels.len(),
                model.class_count()
            )));
        }
        Ok(Self { model, labels })
    }
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let schedule = ckpt.model.schedule();
    let params = ckpt.model.flat_params();
    let mut out = Vec::with_capacity(32 + 4 * schedule.len() + ckpt.labels.len() + 8 * params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(ckpt.model.kind());
    out.extend_from_slice(&(ckpt.model.class_count() as u32).to_le_bytes());
    out.extend_from_slice(&(schedule.len() as u32).to_le_bytes());
    for s in schedule {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend(ckpt.labels.iter().map(|l| l.class_id()));
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            FormatError::new(format!(
                "truncated checkpoint: {what} needs {n} bytes at offset {}, {} remain",
                self.pos,
                self.bytes.len() - self.pos
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

fn bad(msg: impl Into<String>) -> Error {
    FormatError::new(msg).into()
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(bad("bad checkpoint magic"));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let kind = r.u8("model kind")?;
    let class_count = r.u32("class count")? as usize;
    if class_count == 0 || class_count > ActivityLabel::COUNT {
        return Err(bad(format!("class count {class_count} outside 1..={}", ActivityLabel::COUNT)));
    }
    let schedule_len = r.u32("schedule length")? as usize;
    if schedule_len > 64 {
        return Err(bad(format!("implausible schedule length {schedule_len}")));
    }
    let schedule: Vec<usize> = (0..schedule_len)
        .map(|_| r.u32("schedule").map(|v| v as usize))
        .collect::<Result<_>>()?;
    let model = match kind {
        KIND_WCNN => {
            if schedule.len() < 5 || schedule[3] + 5 != schedule.len() {
                return Err(bad("malformed WCNN schedule"));
            }
            let n = schedule[3];
            let s = WcnnSchedule {
                input_channels: schedule[0],
                wavelet_channels: schedule[1],
                stem: schedule[2],
                stages: schedule[4..4 + n].to_vec(),
                post: schedule[4 + n],
            };
            AnyModel::Wcnn(WcnnModel::zeros(s, class_count).map_err(|e| bad(e.to_string()))?)
        }
        KIND_BASELINE => {
            if schedule.len() != 3 {
                return Err(bad("malformed baseline schedule"));
            }
            let s = BaselineSchedule {
                input_len: schedule[0],
                conv1: schedule[1],
                conv2: schedule[2],
            };
            AnyModel::Baseline(BaselineCnn::zeros(s, class_count).map_err(|e| bad(e.to_string()))?)
        }
        other => return Err(bad(format!("unknown model kind {other}"))),
    };
    let labels = r
        .take(class_count, "labels")?
        .iter()
        .map(|&id| ActivityLabel::new(id).map_err(|e| bad(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let count = r.u64("parameter count")?;
    let expected = match &model {
        AnyModel::Wcnn(m) => m.param_count(),
        AnyModel::Baseline(m) => m.param_count(),
    };
    if count != expected as u64 {
        return Err(bad(format!("parameter count {count} does not match the schedule's {expected}")));
    }
    let raw = r.take(expected * 8, "parameters")?;
    if r.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes after parameters", bytes.len() - r.pos)));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite parameter"));
    }
    let mut model = model;
    model.set_params(&values);
    Checkpoint::new(model, labels)
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_checkpoint(ckpt))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: u8) -> Vec<ActivityLabel> {
        (0..n).map(|i| ActivityLabel::new(i * 2).unwrap()).collect()
    }

    #[test]
    fn wcnn_round_trip_is_exact() {
        let model = WcnnModel::new(WcnnSchedule::default(), 6, 2).unwrap();
        let ckpt = Checkpoint::new(AnyModel::Wcnn(model), labels(6)).unwrap();
        let bytes = encode_checkpoint(&ckpt);
        assert_eq!(&bytes[..4], b"WCNN");
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(encode_checkpoint(&back), bytes);
    }

    #[test]
    fn baseline_round_trip_is_exact() {
        let model = BaselineCnn::new(BaselineSchedule::default(), 3, 2).unwrap();
        let ckpt = Checkpoint::new(AnyModel::Baseline(model), labels(3)).unwrap();
        assert_eq!(decode_checkpoint(&encode_checkpoint(&ckpt)).unwrap(), ckpt);
    }

    #[test]
    fn corrupt_checkpoints_are_format_errors() {
        let model = BaselineCnn::new(
            BaselineSchedule {
                input_len: 8,
                conv1: 1,
                conv2: 1,
            },
            2,
            0,
        )
        .unwrap();
        let bytes = encode_checkpoint(&Checkpoint::new(AnyModel::Baseline(model), labels(2)).unwrap());
        let mut cases = vec![bytes[..bytes.len() - 1].to_vec(), bytes[..3].to_vec()];
        let mut magic = bytes.clone();
        magic[0] = b'X';
        cases.push(magic);
        let mut version = bytes.clone();
        version[4] = 9;
        cases.push(version);
        let mut kind = bytes.clone();
        kind[8] = 7;
        cases.push(kind);
        let mut trailing = bytes.clone();
        trailing.push(0);
        cases.push(trailing);
        for case in cases {
            assert!(matches!(decode_checkpoint(&case), Err(Error::Format(_))));
        }
    }

    #[test]
    fn label_count_must_match() {
        let model = WcnnModel::zeros(WcnnSchedule::default(), 4).unwrap();
        assert!(Checkpoint::new(AnyModel::Wcnn(model), labels(3)).is_err());
    }
}
