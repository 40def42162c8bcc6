//! Synthetic paired ECG/ABP records with known R peaks and BP labels.
//!
//! ECG beats are sums of five Gaussian waves (P, Q, R, S, T) laid on an RR
//! grid. R centres fall on integer samples. Each 15 s window has its own
//! heart rate, and its DBP/SBP are a fixed nonlinear function of the
//! subject's R amplitude, QRS width and that heart rate. The ABP trace is a
//! raised-cosine pulse per beat between the planted DBP and SBP, so the
//! window minimum and maximum recover the planted labels up to the bounded
//! ABP noise.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::signalio::{mean_arterial_pressure, window_len, write_record_set, RecordFormat, WaveformRecord, SEGMENT_SECONDS};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.gt";

/// Planted DBP and SBP must stay inside these spans.
pub const DBP_SPAN: (f64, f64) = (50.0, 116.0);
pub const SBP_SPAN: (f64, f64) = (74.0, 200.0);

/// Planted BP as a function of normalized morphology `a` (R amplitude),
/// `w` (QRS width) and `h` (heart rate), each in `[0, 1]`:
///
/// `dbp = dbp_base + dbp_gain * (0.5a + 0.3h + 0.2w) + interaction * a * h`
/// `sbp = dbp + pp_base + pp_gain * (0.45a + 0.35w^1.5 + 0.2h)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub dbp_base: f64,
    pub dbp_gain: f64,
    pub interaction: f64,
    pub pp_base: f64,
    pub pp_gain: f64,
}

impl Default for Coupling {
    fn default() -> Self {
        Self { dbp_base: 52.0, dbp_gain: 30.0, interaction: 8.0, pp_base: 30.0, pp_gain: 50.0 }
    }
}

impl Coupling {
    /// `(dbp, sbp)` for normalized inputs.
    pub fn pressures(&self, a: f64, w: f64, h: f64) -> (f64, f64) {
        let dbp = self.dbp_base + self.dbp_gain * (0.5 * a + 0.3 * h + 0.2 * w) + self.interaction * a * h;
        let pp = self.pp_base + self.pp_gain * (0.45 * a + 0.35 * w.powf(1.5) + 0.2 * h);
        (dbp, dbp + pp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub fs: u32,
    /// Heart-rate range in bpm; the coupling's `h` maps 50..143 to 0..1.
    pub hr_range: (f64, f64),
    /// ECG signal-to-noise ratio in dB; `None` leaves the ECG noiseless.
    pub snr_db: Option<f64>,
    pub duration_s: usize,
    pub coupling: Coupling,
    pub af_mode: bool,
    /// SD of per-beat RR variation, as a fraction of the nominal RR.
    pub rr_jitter: f64,
    /// Per-window heart rate varies by up to this fraction around the
    /// subject's base rate.
    pub hr_drift: f64,
    /// Half-width of the uniform ABP noise, mmHg.
    pub abp_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 40,
            fs: 125,
            hr_range: (50.0, 143.0),
            snr_db: Some(20.0),
            duration_s: 3 * SEGMENT_SECONDS,
            coupling: Coupling::default(),
            af_mode: false,
            rr_jitter: 0.02,
            hr_drift: 0.05,
            abp_noise: 0.25,
            seed: 0,
        }
    }
}

const HR_NORM: (f64, f64) = (50.0, 143.0);

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let (lo, hi) = self.hr_range;
        if self.n_subjects == 0 {
            return bad("n_subjects must be positive".into());
        }
        if self.fs < 2 {
            return bad(format!("fs {} too low", self.fs));
        }
        if !(lo.is_finite() && hi.is_finite() && 30.0 <= lo && lo <= hi && hi <= 220.0) {
            return bad(format!("hr_range ({lo}, {hi}) must lie within [30, 220]"));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return bad("snr_db must be finite (omit it for a noiseless ECG)".into());
            }
        }
        if self.duration_s < SEGMENT_SECONDS || self.duration_s % SEGMENT_SECONDS != 0 {
            return bad(format!("duration {} s is not a positive multiple of {SEGMENT_SECONDS} s", self.duration_s));
        }
        for (name, v) in [("rr_jitter", self.rr_jitter), ("hr_drift", self.hr_drift), ("abp_noise", self.abp_noise)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative"));
            }
        }
        if self.hr_drift >= 0.5 || self.rr_jitter >= 0.2 {
            return bad("hr_drift must be < 0.5 and rr_jitter < 0.2".into());
        }
        let c = &self.coupling;
        if [c.dbp_gain, c.interaction, c.pp_base, c.pp_gain].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("coupling gains must be finite and non-negative".into());
        }
        // monotone in every input, so the corners bound the planted values
        let (dmin, smin) = c.pressures(0.0, 0.0, 0.0);
        let (dmax, smax) = c.pressures(1.0, 1.0, 1.0);
        if dmin < DBP_SPAN.0 || dmax > DBP_SPAN.1 || smin < SBP_SPAN.0 || smax > SBP_SPAN.1 {
            return bad(format!(
                "coupling plants dbp in [{dmin}, {dmax}] and sbp in [{smin}, {smax}], outside [{}, {}] / [{}, {}]",
                DBP_SPAN.0, DBP_SPAN.1, SBP_SPAN.0, SBP_SPAN.1
            ));
        }
        if self.abp_noise >= 0.5 * (smin - dmin) {
            return bad("abp_noise too large for the pulse pressure".into());
        }
        Ok(())
    }

    pub fn windows(&self) -> usize {
        self.duration_s / SEGMENT_SECONDS
    }
}

/// Per-subject morphology.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectParams {
    pub subject_id: String,
    /// Normalized R amplitude and QRS width in `[0, 1]`.
    pub a: f64,
    pub w: f64,
    pub r_amp: f64,
    pub qrs_sigma_s: f64,
    pub p_amp: f64,
    pub t_amp: f64,
    pub base_hr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowTruth {
    pub subject_id: String,
    pub window_index: usize,
    pub hr: f64,
    pub dbp: f64,
    pub sbp: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub windows: Vec<WindowTruth>,
    /// Planted R-peak sample indices per subject, ascending.
    pub peaks: Vec<(String, Vec<usize>)>,
    pub subjects: Vec<SubjectParams>,
}

impl GroundTruth {
    pub fn peaks_of(&self, subject_id: &str) -> Option<&[usize]> {
        self.peaks.iter().find(|(s, _)| s == subject_id).map(|(_, p)| p.as_slice())
    }

    /// Sidecar text: `[windows]`, `[peaks]` and `[subjects]` sections, each
    /// with a CSV header.
    pub fn to_text(&self) -> String {
        let mut s = String::from("[windows]\nsubject_id,window_idx,dbp,sbp,map\n");
        for w in &self.windows {
            let _ = writeln!(s, "{},{},{},{},{}", w.subject_id, w.window_index, w.dbp, w.sbp, w.map);
        }
        s.push_str("\n[peaks]\nsubject_id,peak_idx\n");
        for (id, peaks) in &self.peaks {
            for p in peaks {
                let _ = writeln!(s, "{id},{p}");
            }
        }
        s.push_str("\n[subjects]\nsubject_id,a,w,r_amp,qrs_sigma_s,p_amp,t_amp,base_hr\n");
        for p in &self.subjects {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                p.subject_id, p.a, p.w, p.r_amp, p.qrs_sigma_s, p.p_amp, p.t_amp, p.base_hr
            );
        }
        s
    }

    /// Parse the sidecar. Window heart rates are not stored and read back as 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse(format!("ground truth: {m}"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
        let idx = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(format!("bad index `{s}`")));
        let mut gt = GroundTruth::default();
        let mut section = "";
        let mut header_pending = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line.starts_with('[') {
                section = match line {
                    "[windows]" => "windows",
                    "[peaks]" => "peaks",
                    "[subjects]" => "subjects",
                    other => return Err(bad(format!("unknown section {other}"))),
                };
                header_pending = true;
                continue;
            }
            if header_pending {
                header_pending = false;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            match (section, f.len()) {
                ("windows", 5) => gt.windows.push(WindowTruth {
                    subject_id: f[0].to_string(),
                    window_index: idx(f[1])?,
                    hr: 0.0,
                    dbp: num(f[2])?,
                    sbp: num(f[3])?,
                    map: num(f[4])?,
                }),
                ("peaks", 2) => {
                    let p = idx(f[1])?;
                    match gt.peaks.last_mut() {
                        Some((id, v)) if id == f[0] => v.push(p),
                        _ => gt.peaks.push((f[0].to_string(), vec![p])),
                    }
                }
                ("subjects", 8) => gt.subjects.push(SubjectParams {
                    subject_id: f[0].to_string(),
                    a: num(f[1])?,
                    w: num(f[2])?,
                    r_amp: num(f[3])?,
                    qrs_sigma_s: num(f[4])?,
                    p_amp: num(f[5])?,
                    t_amp: num(f[6])?,
                    base_hr: num(f[7])?,
                }),
                _ => return Err(bad(format!("unexpected line `{line}`"))),
            }
        }
        Ok(gt)
    }
}

pub fn subject_id(index: usize) -> String {
    format!("synth{index:03}")
}

struct Beat {
    /// R centre, may be negative or past the end for the padding beats.
    r: i64,
    /// Nominal RR in seconds used for the wave layout.
    rr_s: f64,
    pulse: bool,
}

/// Generate `n_subjects` records and their ground truth. Each subject uses
/// its own seed stream, so adding subjects leaves earlier ones unchanged.
pub fn generate(config: &SynthConfig) -> Result<(Vec<WaveformRecord>, GroundTruth)> {
    config.validate()?;
    let idx: Vec<usize> = (0..config.n_subjects).collect();
    let per_subject = crate::features::parallel_map(&idx, |&i| generate_subject(config, i));
    let mut records = Vec::with_capacity(config.n_subjects);
    let mut gt = GroundTruth::default();
    for r in per_subject {
        let (rec, params, windows, peaks) = r?;
        gt.peaks.push((rec.subject_id.clone(), peaks));
        gt.windows.extend(windows);
        gt.subjects.push(params);
        records.push(rec);
    }
    Ok((records, gt))
}

type SubjectOutput = (WaveformRecord, SubjectParams, Vec<WindowTruth>, Vec<usize>);

fn generate_subject(cfg: &SynthConfig, index: usize) -> Result<SubjectOutput> {
    let seed = derive_seed(cfg.seed, index as u64);
    let mut rng = rng_from_seed(seed);
    let fs = f64::from(cfg.fs);
    let n = cfg.duration_s * cfg.fs as usize;
    let win = window_len(cfg.fs);
    let id = subject_id(index);

    let a: f64 = rng.random();
    let w: f64 = rng.random();
    let p_amp = rng.random_range(0.1..0.2);
    let t_amp = rng.random_range(0.25..0.4);
    let (lo, hi) = cfg.hr_range;
    let base_hr = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let params = SubjectParams {
        subject_id: id.clone(),
        a,
        w,
        r_amp: 0.8 + 0.8 * a,
        qrs_sigma_s: 0.008 + 0.008 * w,
        p_amp,
        t_amp,
        base_hr,
    };

    let windows: Vec<WindowTruth> = (0..cfg.windows())
        .map(|wi| {
            let drift = if cfg.hr_drift > 0.0 { rng.random_range(-cfg.hr_drift..cfg.hr_drift) } else { 0.0 };
            let hr = (base_hr * (1.0 + drift)).clamp(lo, hi);
            let h = ((hr - HR_NORM.0) / (HR_NORM.1 - HR_NORM.0)).clamp(0.0, 1.0);
            let (dbp, sbp) = cfg.coupling.pressures(a, w, h);
            WindowTruth { subject_id: id.clone(), window_index: wi, hr, dbp, sbp, map: mean_arterial_pressure(dbp, sbp) }
        })
        .collect();

    let beats = lay_beats(cfg, &windows, &mut rng, n, win);
    let peaks: Vec<usize> = beats.iter().filter(|b| b.r >= 0 && (b.r as usize) < n).map(|b| b.r as usize).collect();

    let mut ecg = vec![0.0; n];
    for b in &beats {
        add_beat(&mut ecg, b, &params, fs);
    }
    if let Some(snr) = cfg.snr_db {
        let power = ecg.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let sd = (power / 10f64.powf(snr / 10.0)).sqrt();
        let mut noise_rng = rng_from_seed(derive_seed(seed, 1));
        for v in &mut ecg {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *v += sd * z;
        }
    }

    let mut abp = vec![0.0; n];
    let shape = pulse_shape(&beats, n);
    let mut abp_rng = rng_from_seed(derive_seed(seed, 2));
    for (i, v) in abp.iter_mut().enumerate() {
        let wt = &windows[(i / win).min(windows.len() - 1)];
        let noise = if cfg.abp_noise > 0.0 { abp_rng.random_range(-cfg.abp_noise..=cfg.abp_noise) } else { 0.0 };
        *v = wt.dbp + (wt.sbp - wt.dbp) * shape[i] + noise;
    }

    let rec = WaveformRecord::new(id, cfg.fs, ecg, abp)?;
    Ok((rec, params, windows, peaks))
}

/// R-peak grid from just before sample 0 to just past the end. Each beat's
/// rate is that of the window holding its R peak.
fn lay_beats(cfg: &SynthConfig, windows: &[WindowTruth], rng: &mut Rng, n: usize, win: usize) -> Vec<Beat> {
    let fs = f64::from(cfg.fs);
    let hr_at = |r: i64| windows[(r.max(0) as usize / win).min(windows.len() - 1)].hr;
    let rr_of = |hr: f64, rng: &mut Rng| -> f64 {
        let nominal = 60.0 / hr;
        let mut rr = nominal;
        if cfg.rr_jitter > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            rr *= 1.0 + cfg.rr_jitter * z.clamp(-3.0, 3.0);
        }
        if cfg.af_mode {
            rr *= 1.0 + rng.random_range(-0.35..0.35);
        }
        rr
    };

    let first_rr = 60.0 / hr_at(0);
    let mut r = -((rng.random::<f64>() * first_rr * fs).round() as i64) - 1;
    let mut beats = Vec::new();
    let mut dropped_run = 0;
    while r < n as i64 + (2.0 * fs) as i64 {
        let rr = rr_of(hr_at(r), rng);
        let mut pulse = true;
        if cfg.af_mode {
            let drop = rng.random::<f64>() < 0.2;
            if drop && dropped_run < 2 {
                pulse = false;
                dropped_run += 1;
            } else {
                dropped_run = 0;
            }
        }
        beats.push(Beat { r, rr_s: rr, pulse });
        r += ((rr * fs).round() as i64).max(1);
    }
    beats
}

fn add_wave(ecg: &mut [f64], centre_s: f64, amp: f64, sigma_s: f64, fs: f64) {
    let lo = ((centre_s - 5.0 * sigma_s) * fs).floor().max(0.0) as usize;
    let hi = (((centre_s + 5.0 * sigma_s) * fs).ceil().max(-1.0) as i64 + 1).min(ecg.len() as i64);
    for i in lo..hi.max(0) as usize {
        let d = i as f64 / fs - centre_s;
        ecg[i] += amp * (-(d * d) / (2.0 * sigma_s * sigma_s)).exp();
    }
}

fn add_beat(ecg: &mut [f64], b: &Beat, p: &SubjectParams, fs: f64) {
    let t = b.r as f64 / fs;
    let sq = b.rr_s.sqrt();
    let s = p.qrs_sigma_s;
    add_wave(ecg, t - 0.18 * sq, p.p_amp, 0.025, fs);
    add_wave(ecg, t - 2.5 * s, -0.1, s, fs);
    add_wave(ecg, t, p.r_amp, s, fs);
    add_wave(ecg, t + 2.5 * s, -0.2, 1.2 * s, fs);
    add_wave(ecg, t + 0.28 * sq, p.t_amp, 0.05, fs);
}

/// Pulse shape in `[0, 1]` per sample: zero at every R peak, a raised-cosine
/// rise to one at 30% of the beat and a raised-cosine fall to the next R.
/// Dropped pulses stay at zero.
fn pulse_shape(beats: &[Beat], n: usize) -> Vec<f64> {
    let mut shape = vec![0.0; n];
    for pair in beats.windows(2) {
        let (b, next) = (&pair[0], &pair[1]);
        if !b.pulse {
            continue;
        }
        let m = (next.r - b.r) as usize;
        let q = ((0.3 * m as f64).round() as usize).clamp(1, m.saturating_sub(1).max(1));
        for j in 0..m {
            let i = b.r + j as i64;
            if i < 0 || i >= n as i64 {
                continue;
            }
            shape[i as usize] = if j <= q {
                0.5 * (1.0 - (PI * j as f64 / q as f64).cos())
            } else {
                0.5 * (1.0 + (PI * (j - q) as f64 / (m - q) as f64).cos())
            };
        }
    }
    shape
}

/// Write the records in `format` plus the ground-truth sidecar into `dir`.
pub fn write_records(records: &[WaveformRecord], truth: &GroundTruth, dir: &Path, format: RecordFormat) -> Result<Vec<PathBuf>> {
    let mut paths = write_record_set(records, dir, format)?;
    let sidecar = dir.join(GROUND_TRUTH_FILE);
    std::fs::write(&sidecar, truth.to_text())?;
    paths.push(sidecar);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalio::segment;

    fn small() -> SynthConfig {
        SynthConfig { n_subjects: 3, seed: 11, ..SynthConfig::default() }
    }

    #[test]
    fn labels_match_planted_values() {
        let (recs, gt) = generate(&small()).unwrap();
        for rec in &recs {
            for s in segment(rec, 3).unwrap() {
                let w = gt
                    .windows
                    .iter()
                    .find(|w| w.subject_id == s.subject_id && w.window_index == s.window_index)
                    .unwrap();
                assert!((s.labels.dbp - w.dbp).abs() <= 0.25 + 1e-9);
                assert!((s.labels.sbp - w.sbp).abs() <= 0.25 + 1e-9);
            }
        }
    }

    #[test]
    fn exact_spacing_without_jitter() {
        let cfg = SynthConfig {
            n_subjects: 1,
            hr_range: (60.0, 60.0),
            rr_jitter: 0.0,
            snr_db: None,
            duration_s: 15,
            ..SynthConfig::default()
        };
        let (_, gt) = generate(&cfg).unwrap();
        let p = &gt.peaks[0].1;
        assert!(p.windows(2).all(|w| w[1] - w[0] == 125));
        assert_eq!(p.len(), 15);
    }

    #[test]
    fn sidecar_round_trip() {
        let (_, gt) = generate(&small()).unwrap();
        let back = GroundTruth::from_text(&gt.to_text()).unwrap();
        assert_eq!(back.peaks, gt.peaks);
        assert_eq!(back.subjects, gt.subjects);
        assert_eq!(back.windows.len(), 9);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = SynthConfig { hr_range: (20.0, 100.0), ..SynthConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = SynthConfig { coupling: Coupling { pp_gain: 200.0, ..Coupling::default() }, ..SynthConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SynthConfig { snr_db: Some(f64::INFINITY), ..SynthConfig::default() };
        assert!(bad.validate().is_err());
    }
}
