//! Whole-beat feature vectors: the normalized ECG between two consecutive R
//! peaks, stretched to a fixed length.

use std::fmt::Write as _;

use crate::ampd::{detect_peaks, rr_intervals, AmpdConfig, PeakSet};
use crate::dsp::{fft_bandpass, normalize, resample_linear, BandSpec};
use crate::error::{Error, Result};
use crate::signalio::{check_regularity, BpLabels, SegmentRecord, DEFAULT_REGULARITY_TOLERANCE};

pub const DEFAULT_BEAT_LENGTH: usize = 625;

/// Admissible RR range in seconds (50 to 150 bpm), both ends inclusive.
pub const MIN_RR_S: f64 = 0.4;
pub const MAX_RR_S: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct BeatVector {
    pub values: Vec<f64>,
    pub subject_id: String,
    pub window_index: usize,
    pub labels: BpLabels,
    pub rr_s: f64,
}

/// Cut one vector per admissible RR interval of `ecg`. `ecg` is expected to
/// be filtered and normalized already; samples `[p_i, p_{i+1})` are
/// resampled to `length`.
pub fn extract_beats(segment: &SegmentRecord, ecg: &[f64], peaks: &PeakSet, length: usize) -> Result<Vec<BeatVector>> {
    let rr = rr_intervals(peaks, segment.fs)?;
    let mut beats = Vec::new();
    for iv in rr {
        if !(MIN_RR_S..=MAX_RR_S).contains(&iv.duration_s) {
            continue;
        }
        beats.push(BeatVector {
            values: resample_linear(&ecg[iv.start..iv.end], length)?,
            subject_id: segment.subject_id.clone(),
            window_index: segment.window_index,
            labels: segment.labels,
            rr_s: iv.duration_s,
        });
    }
    if beats.is_empty() {
        return Err(Error::NoValidBeats);
    }
    Ok(beats)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub band: BandSpec,
    pub length: usize,
    /// Peak detector settings; `None` uses [`AmpdConfig::for_rate`].
    pub ampd: Option<AmpdConfig>,
    /// Drop segments whose RR intervals fail the regularity check at this
    /// tolerance; `None` keeps every segment.
    pub regularity_tolerance: Option<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            band: BandSpec::default(),
            length: DEFAULT_BEAT_LENGTH,
            ampd: None,
            regularity_tolerance: Some(DEFAULT_REGULARITY_TOLERANCE),
        }
    }
}

/// Band-limit and normalize a segment's ECG.
pub fn preprocess_ecg(ecg: &[f64], fs: u32, band: BandSpec) -> Result<Vec<f64>> {
    normalize(&fft_bandpass(ecg, f64::from(fs), band)?)
}

/// Preprocess, detect R peaks and extract the beats of one segment.
pub fn segment_beats(segment: &SegmentRecord, cfg: &FeatureConfig) -> Result<Vec<BeatVector>> {
    let ecg = preprocess_ecg(&segment.ecg, segment.fs, cfg.band)?;
    let ampd = cfg.ampd.unwrap_or_else(|| AmpdConfig::for_rate(segment.fs));
    let peaks = detect_peaks(&ecg, &ampd)?;
    if peaks.len() < 2 {
        return Err(Error::NoValidBeats);
    }
    if let Some(tol) = cfg.regularity_tolerance {
        if !check_regularity(&peaks.indices, segment.fs, tol) {
            return Err(Error::NoValidBeats);
        }
    }
    extract_beats(segment, &ecg, &peaks, cfg.length)
}

/// Feature matrix with its three label columns and subject index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_cols: usize,
    pub rows: Vec<Vec<f64>>,
    pub dbp: Vec<f64>,
    pub map: Vec<f64>,
    pub sbp: Vec<f64>,
    pub subjects: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Label column by target order DBP, MAP, SBP.
    pub fn labels(&self) -> [&[f64]; 3] {
        [&self.dbp, &self.map, &self.sbp]
    }

    /// Distinct subjects in order of first appearance.
    pub fn distinct_subjects(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.subjects.iter().filter(|s| seen.insert(s.as_str())).cloned().collect()
    }

    pub fn from_beats(beats: &[BeatVector]) -> Result<Self> {
        let first = beats.first().ok_or(Error::EmptyDataset)?;
        let n_cols = first.values.len();
        let mut d = Dataset {
            n_cols,
            rows: Vec::with_capacity(beats.len()),
            dbp: Vec::with_capacity(beats.len()),
            map: Vec::with_capacity(beats.len()),
            sbp: Vec::with_capacity(beats.len()),
            subjects: Vec::with_capacity(beats.len()),
        };
        for b in beats {
            if b.values.len() != n_cols {
                return Err(Error::DimensionMismatch { expected: n_cols, got: b.values.len() });
            }
            d.rows.push(b.values.clone());
            d.dbp.push(b.labels.dbp);
            d.map.push(b.labels.map);
            d.sbp.push(b.labels.sbp);
            d.subjects.push(b.subject_id.clone());
        }
        Ok(d)
    }

    /// `n_rows,n_cols`, then one line per row: the values, then dbp, map,
    /// sbp and the subject id.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{},{}", self.len(), self.n_cols);
        for (i, row) in self.rows.iter().enumerate() {
            for v in row {
                let _ = write!(s, "{v},");
            }
            let _ = writeln!(s, "{},{},{},{}", self.dbp[i], self.map[i], self.sbp[i], self.subjects[i]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse(format!("dataset: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let (r, c) = header.split_once(',').ok_or_else(|| bad(format!("bad header `{header}`")))?;
        let n_rows: usize = r.trim().parse().map_err(|_| bad(format!("bad header `{header}`")))?;
        let n_cols: usize = c.trim().parse().map_err(|_| bad(format!("bad header `{header}`")))?;
        let mut d = Dataset { n_cols, rows: vec![], dbp: vec![], map: vec![], sbp: vec![], subjects: vec![] };
        for (ln, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n_cols + 4 {
                return Err(bad(format!("row {ln} has {} fields, expected {}", fields.len(), n_cols + 4)));
            }
            let nums = fields[..n_cols + 3]
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|_| bad(format!("row {ln}: bad number `{f}`"))))
                .collect::<Result<Vec<f64>>>()?;
            d.rows.push(nums[..n_cols].to_vec());
            d.dbp.push(nums[n_cols]);
            d.map.push(nums[n_cols + 1]);
            d.sbp.push(nums[n_cols + 2]);
            d.subjects.push(fields[n_cols + 3].trim().to_string());
        }
        if d.len() != n_rows {
            return Err(bad(format!("header says {n_rows} rows, found {}", d.len())));
        }
        if d.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(d)
    }
}

/// Per-segment beat counts reported alongside an assembled dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSummary {
    pub record_key: String,
    pub beats: usize,
}

/// Extract beats from every segment (in parallel) and stack them in
/// segment order. Segments without a valid beat contribute nothing.
pub fn assemble_dataset(segments: &[SegmentRecord], cfg: &FeatureConfig) -> Result<(Dataset, Vec<SegmentSummary>)> {
    let per_segment: Vec<Result<Vec<BeatVector>>> = parallel_map(segments, |s| segment_beats(s, cfg));
    let mut beats = Vec::new();
    let mut summary = Vec::with_capacity(segments.len());
    for (seg, res) in segments.iter().zip(per_segment) {
        let got = match res {
            Ok(b) => b,
            Err(Error::NoValidBeats | Error::TooFewPeaks(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        summary.push(SegmentSummary { record_key: seg.record_key(), beats: got.len() });
        beats.extend(got);
    }
    Ok((Dataset::from_beats(&beats)?, summary))
}

/// Order-preserving map over scoped threads.
pub(crate) fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                scope.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
