//! Paired ECG/ABP records: on-disk formats, 15 s segmentation and BP labels.
//!
//! Text format, one or more blocks per file:
//!
//! ```text
//! subject_id,fs,n_samples
//! ecg_value,abp_value      (n_samples lines)
//! ```
//!
//! Binary format, one record per `.pgrd` file (subject id = file stem):
//! magic `PGRD`, `u32` fs, `u64` n, then `n` interleaved `(ecg, abp)` pairs,
//! all little-endian, samples as `f64`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const SEGMENT_SECONDS: usize = 15;
pub const BINARY_MAGIC: &[u8; 4] = b"PGRD";
pub const TEXT_EXTENSION: &str = "txt";
pub const BINARY_EXTENSION: &str = "pgrd";

/// Label plausibility bounds in mmHg.
pub const MIN_PLAUSIBLE_MMHG: f64 = 30.0;
pub const MAX_PLAUSIBLE_MMHG: f64 = 300.0;

pub const DEFAULT_REGULARITY_TOLERANCE: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Text,
    Binary,
}

impl std::str::FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(RecordFormat::Text),
            "binary" => Ok(RecordFormat::Binary),
            other => Err(Error::InvalidArgument(format!("unknown record format `{other}`"))),
        }
    }
}

/// One subject's simultaneously sampled ECG and ABP.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformRecord {
    pub subject_id: String,
    pub fs: u32,
    pub ecg: Vec<f64>,
    pub abp: Vec<f64>,
}

impl WaveformRecord {
    pub fn new(subject_id: impl Into<String>, fs: u32, ecg: Vec<f64>, abp: Vec<f64>) -> Result<Self> {
        let record = Self { subject_id: subject_id.into(), fs, ecg, abp };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fs == 0 {
            return Err(Error::UnsupportedRate(0));
        }
        if self.subject_id.is_empty() || self.subject_id.contains([',', '\n', '\r']) {
            return Err(Error::MalformedRecord(format!(
                "invalid subject id `{}`",
                self.subject_id
            )));
        }
        if self.ecg.len() != self.abp.len() {
            return Err(Error::MalformedRecord(format!(
                "{}: ecg has {} samples, abp has {}",
                self.subject_id,
                self.ecg.len(),
                self.abp.len()
            )));
        }
        for (channel, samples) in [("ecg", &self.ecg), ("abp", &self.abp)] {
            if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
                return Err(Error::MalformedRecord(format!(
                    "{}: non-finite {channel} sample at index {i}",
                    self.subject_id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ecg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ecg.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / f64::from(self.fs)
    }
}

/// Diastolic, systolic and mean arterial pressure of one window, mmHg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpLabels {
    pub dbp: f64,
    pub sbp: f64,
    pub map: f64,
}

impl BpLabels {
    pub fn from_extremes(dbp: f64, sbp: f64) -> Self {
        Self { dbp, sbp, map: mean_arterial_pressure(dbp, sbp) }
    }
}

pub fn mean_arterial_pressure(dbp: f64, sbp: f64) -> f64 {
    (2.0 * dbp + sbp) / 3.0
}

/// A 15 s window cut from a [`WaveformRecord`], labeled from its ABP.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub subject_id: String,
    pub window_index: usize,
    pub fs: u32,
    pub ecg: Vec<f64>,
    pub abp: Vec<f64>,
    pub labels: BpLabels,
}

impl SegmentRecord {
    /// Stable key identifying this window within a dataset.
    pub fn record_key(&self) -> String {
        format!("{}#{}", self.subject_id, self.window_index)
    }
}

pub fn window_len(fs: u32) -> usize {
    SEGMENT_SECONDS * fs as usize
}

/// Cut `count` consecutive, non-overlapping 15 s windows starting at sample 0.
pub fn segment(record: &WaveformRecord, count: usize) -> Result<Vec<SegmentRecord>> {
    if count == 0 {
        return Err(Error::InvalidArgument("segment count must be positive".into()));
    }
    let win = window_len(record.fs);
    let needed = count * win;
    if record.len() < needed {
        return Err(Error::TooShort { needed, available: record.len() });
    }
    (0..count)
        .map(|w| {
            let range = w * win..(w + 1) * win;
            let abp = record.abp[range.clone()].to_vec();
            let labels = derive_labels(&abp, record.fs)?;
            Ok(SegmentRecord {
                subject_id: record.subject_id.clone(),
                window_index: w,
                fs: record.fs,
                ecg: record.ecg[range].to_vec(),
                abp,
                labels,
            })
        })
        .collect()
}

/// DBP and SBP are the window minimum and maximum; MAP follows from them.
pub fn derive_labels(abp_window: &[f64], fs: u32) -> Result<BpLabels> {
    let expected = window_len(fs);
    if abp_window.len() != expected {
        return Err(Error::MalformedRecord(format!(
            "label window has {} samples, expected {expected}",
            abp_window.len()
        )));
    }
    let mut dbp = f64::INFINITY;
    let mut sbp = f64::NEG_INFINITY;
    for (i, &v) in abp_window.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteSample(i));
        }
        dbp = dbp.min(v);
        sbp = sbp.max(v);
    }
    if dbp < MIN_PLAUSIBLE_MMHG || sbp > MAX_PLAUSIBLE_MMHG || dbp >= sbp {
        return Err(Error::ImplausibleLabel { dbp, sbp });
    }
    Ok(BpLabels::from_extremes(dbp, sbp))
}

/// Admission rule for sinus-like rhythm: every RR interval lies within
/// `tolerance` (as a fraction) of the median RR. Fewer than three peaks
/// cannot establish regularity and yield `false`.
pub fn check_regularity(peaks: &[usize], fs: u32, tolerance: f64) -> bool {
    if peaks.len() < 3 || fs == 0 {
        return false;
    }
    let mut rr: Vec<f64> = peaks
        .windows(2)
        .map(|p| (p[1] as f64 - p[0] as f64) / f64::from(fs))
        .collect();
    let deviations: Vec<f64> = rr.clone();
    rr.sort_by(f64::total_cmp);
    let mid = rr.len() / 2;
    let median = if rr.len() % 2 == 0 { 0.5 * (rr[mid - 1] + rr[mid]) } else { rr[mid] };
    if median <= 0.0 {
        return false;
    }
    deviations.iter().all(|r| ((r - median) / median).abs() <= tolerance)
}

// ---------------------------------------------------------------------------
// Reading

/// Load every record under `path`, which may be a single file or a dataset
/// directory. Directory entries are read in file-name order; files ending in
/// `.pgrd` are binary, `.txt`/`.csv` are text, anything else is ignored.
pub fn load_records(path: &Path) -> Result<Vec<WaveformRecord>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && record_file_kind(p).is_some())
            .collect();
        files.sort();
        let mut records = Vec::new();
        for f in files {
            records.extend(load_file(&f)?);
        }
        Ok(records)
    } else {
        load_file(path)
    }
}

fn record_file_kind(path: &Path) -> Option<RecordFormat> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(BINARY_EXTENSION) => Some(RecordFormat::Binary),
        Some("txt") | Some("csv") => Some(RecordFormat::Text),
        _ => None,
    }
}

fn load_file(path: &Path) -> Result<Vec<WaveformRecord>> {
    match record_file_kind(path) {
        Some(RecordFormat::Binary) => {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::MalformedRecord(format!("bad file name {}", path.display())))?;
            Ok(vec![read_binary(&fs::read(path)?, stem)?])
        }
        _ => read_text(BufReader::new(fs::File::open(path)?)),
    }
}

pub fn read_text<R: BufRead>(reader: R) -> Result<Vec<WaveformRecord>> {
    let mut records = Vec::new();
    let mut lines = reader.lines().enumerate();
    while let Some((lineno, line)) = lines.next() {
        let line = line?;
        let header = line.trim();
        if header.is_empty() {
            continue;
        }
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::MalformedRecord(format!(
                "line {}: expected header `subject_id,fs,n_samples`",
                lineno + 1
            )));
        }
        let subject_id = fields[0].to_string();
        let fs: i64 = fields[1]
            .parse()
            .map_err(|_| Error::MalformedRecord(format!("line {}: bad fs `{}`", lineno + 1, fields[1])))?;
        if fs <= 0 || fs > i64::from(u32::MAX) {
            return Err(Error::UnsupportedRate(fs));
        }
        let n: usize = fields[2].parse().map_err(|_| {
            Error::MalformedRecord(format!("line {}: bad sample count `{}`", lineno + 1, fields[2]))
        })?;
        let mut ecg = Vec::with_capacity(n);
        let mut abp = Vec::with_capacity(n);
        for _ in 0..n {
            let (lineno, line) = lines.next().ok_or_else(|| {
                Error::MalformedRecord(format!("{subject_id}: expected {n} samples, got {}", ecg.len()))
            })?;
            let line = line?;
            let mut parts = line.trim().split(',');
            let mut channel = |name: &str| -> Result<f64> {
                let raw = parts.next().map(str::trim).filter(|s| !s.is_empty()).ok_or_else(|| {
                    Error::MalformedRecord(format!("line {}: missing {name} channel", lineno + 1))
                })?;
                raw.parse::<f64>().map_err(|_| {
                    Error::MalformedRecord(format!("line {}: bad {name} value `{raw}`", lineno + 1))
                })
            };
            ecg.push(channel("ecg")?);
            abp.push(channel("abp")?);
            if parts.next().is_some() {
                return Err(Error::MalformedRecord(format!("line {}: extra columns", lineno + 1)));
            }
        }
        records.push(WaveformRecord::new(subject_id, fs as u32, ecg, abp)?);
    }
    Ok(records)
}

pub fn read_binary(bytes: &[u8], subject_id: &str) -> Result<WaveformRecord> {
    if bytes.len() < 16 || &bytes[..4] != BINARY_MAGIC {
        return Err(Error::MalformedRecord(format!("{subject_id}: missing PGRD header")));
    }
    let fs = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if fs == 0 {
        return Err(Error::UnsupportedRate(0));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if n.checked_mul(16) != Some(body.len()) {
        return Err(Error::MalformedRecord(format!(
            "{subject_id}: header declares {n} samples, body holds {} bytes",
            body.len()
        )));
    }
    let mut ecg = Vec::with_capacity(n);
    let mut abp = Vec::with_capacity(n);
    for pair in body.chunks_exact(16) {
        ecg.push(f64::from_le_bytes(pair[..8].try_into().unwrap()));
        abp.push(f64::from_le_bytes(pair[8..].try_into().unwrap()));
    }
    WaveformRecord::new(subject_id, fs, ecg, abp)
}

// ---------------------------------------------------------------------------
// Writing

pub fn write_text<W: Write>(records: &[WaveformRecord], mut out: W) -> Result<()> {
    for r in records {
        writeln!(out, "{},{},{}", r.subject_id, r.fs, r.len())?;
        for (e, a) in r.ecg.iter().zip(&r.abp) {
            // `{}` on f64 prints the shortest string that parses back to the same bits.
            writeln!(out, "{e},{a}")?;
        }
    }
    Ok(())
}

pub fn encode_binary(record: &WaveformRecord) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 + 16 * record.len());
    bytes.extend_from_slice(BINARY_MAGIC);
    bytes.extend_from_slice(&record.fs.to_le_bytes());
    bytes.extend_from_slice(&(record.len() as u64).to_le_bytes());
    for (e, a) in record.ecg.iter().zip(&record.abp) {
        bytes.extend_from_slice(&e.to_le_bytes());
        bytes.extend_from_slice(&a.to_le_bytes());
    }
    bytes
}

/// Write a record set into `dir`: a single `records.txt` in text mode, or one
/// `<subject_id>.pgrd` per record in binary mode. Returns the written paths.
pub fn write_record_set(records: &[WaveformRecord], dir: &Path, format: RecordFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    for r in records {
        r.validate()?;
    }
    match format {
        RecordFormat::Text => {
            let path = dir.join(format!("records.{TEXT_EXTENSION}"));
            let mut out = BufWriter::new(fs::File::create(&path)?);
            write_text(records, &mut out)?;
            out.flush()?;
            Ok(vec![path])
        }
        RecordFormat::Binary => records
            .iter()
            .map(|r| {
                if r.subject_id.contains(['/', '\\']) || r.subject_id.starts_with('.') {
                    return Err(Error::MalformedRecord(format!(
                        "subject id `{}` is not a valid file name",
                        r.subject_id
                    )));
                }
                let path = dir.join(format!("{}.{BINARY_EXTENSION}", r.subject_id));
                fs::write(&path, encode_binary(r))?;
                Ok(path)
            })
            .collect(),
    }
}
