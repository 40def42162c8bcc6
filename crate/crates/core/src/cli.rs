//! Subcommand front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or configuration, 2 on an
//! internal failure (numerical breakdown, partition violation, I/O).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ampd::{detect_peaks, AmpdConfig, LmsNoise};
use crate::boost::{ensembles_to_text, train_targets};
use crate::config::{RunConfig, SEED_ENV};
use crate::error::{Error, Result};
use crate::eval::{
    aami_check, bhs_from_percentages, error_stats, evaluate, pairs_from_bland_altman, parse_bland_altman_csv,
    sha256_hex, BhsResult, ErrorStats,
};
use crate::features::{assemble_dataset, preprocess_ecg, Dataset};
use crate::pca::pca_fit;
use crate::rng::RNG_ALGORITHM;
use crate::signalio::{load_records, segment, window_len, write_record_set, RecordFormat, WaveformRecord};
use crate::synth::{generate, write_records, SynthConfig};

pub const MANIFEST_FILE: &str = "manifest.kv";

#[derive(Parser, Debug)]
#[command(name = "pulsegrid", version, about = "ECG-only blood pressure estimation pipeline")]
struct Cli {
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic ECG/ABP corpus with ground truth.
    Synth(SynthArgs),
    /// Band-filter and normalize the ECG of every segment.
    Preprocess(PreprocessArgs),
    /// Detect R peaks and print one index per line.
    Peaks(PeaksArgs),
    /// Extract whole-beat feature vectors into a dataset file.
    Features(FeaturesArgs),
    /// Fit PCA and the DBP/MAP/SBP ensembles on a dataset.
    Train(TrainArgs),
    /// Cross-validate the pipeline and write the evaluation report.
    Evaluate(EvaluateArgs),
    /// Grade precomputed statistics against the BHS and AAMI protocols.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    subjects: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// ECG SNR in dB.
    #[arg(long, default_value_t = 20.0, conflicts_with = "noiseless")]
    snr: f64,
    #[arg(long)]
    noiseless: bool,
    /// Irregular rhythm with dropped ABP pulses.
    #[arg(long)]
    af: bool,
    /// Record length in seconds (multiple of 15).
    #[arg(long, default_value_t = 45)]
    duration: usize,
    #[arg(long, default_value_t = 125)]
    fs: u32,
    #[arg(long, value_parser = ["text", "binary"], default_value = "text")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    segments: Option<usize>,
}

#[derive(Args, Debug)]
struct PeaksArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Use `r = 0.5` in the scalogram (default).
    #[arg(long, conflicts_with = "seed")]
    deterministic: bool,
    /// Draw scalogram noise from this seed instead.
    #[arg(long)]
    seed: Option<u64>,
    /// Detect on the raw ECG rather than the band-limited, normalized one.
    #[arg(long)]
    raw: bool,
    /// Write to this file (plus a manifest beside it) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset file written by `features`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    retain: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Record file or directory.
    #[arg(long, conflicts_with = "dataset")]
    input: Option<PathBuf>,
    /// Dataset file written by `features`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["subject", "record"])]
    split_by: Option<String>,
    #[arg(long)]
    pca_global: bool,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, value_parser = ["tables", "bland-altman"])]
    from: String,
    /// Cumulative percentages `p5,p10,p15`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    bhs: Vec<String>,
    /// Signed-error statistics `me,sd,subjects`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    aami: Vec<String>,
    /// Directory holding `bland_altman_{dbp,map,sbp}.csv`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `argv` (program name first), run the subcommand and return the
/// exit code. Messages go to stderr, primary output to stdout.
pub fn run_subcommand<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    let file_text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config {
            key: "config".into(),
            message: format!("{}: {e}", p.display()),
        })?),
        None => None,
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let mut cfg = RunConfig::resolve(file_text.as_deref(), env_seed.as_deref())?;
    match cli.command {
        Command::Synth(a) => cmd_synth(&mut cfg, a),
        Command::Preprocess(a) => cmd_preprocess(&mut cfg, a),
        Command::Peaks(a) => cmd_peaks(&mut cfg, a),
        Command::Features(a) => cmd_features(&mut cfg, a),
        Command::Train(a) => cmd_train(&mut cfg, a),
        Command::Evaluate(a) => cmd_evaluate(&mut cfg, a),
        Command::Report(a) => cmd_report(a),
    }
}

fn set_opt<T: ToString>(cfg: &mut RunConfig, key: &str, v: Option<T>) -> Result<()> {
    if let Some(v) = v {
        cfg.set(key, &v.to_string())?;
    }
    Ok(())
}

fn require(p: Option<PathBuf>, key: &str) -> Result<PathBuf> {
    p.ok_or_else(|| Error::Config { key: key.into(), message: "required (flag or config file)".into() })
}

// ---------------------------------------------------------------------------
// Manifest

struct Manifest {
    command: &'static str,
    lines: Vec<(String, String)>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    fn new(command: &'static str, cfg: &RunConfig) -> Self {
        let mut lines = vec![("tool".to_string(), format!("pulsegrid {}", env!("CARGO_PKG_VERSION")))];
        lines.push(("command".into(), command.into()));
        lines.push(("rng".into(), RNG_ALGORITHM.into()));
        for l in cfg.render().lines() {
            if let Some((k, v)) = l.split_once(" = ") {
                lines.push((format!("config.{k}"), v.to_string()));
            }
        }
        Self { command, lines, inputs: Vec::new(), outputs: Vec::new() }
    }

    fn extra(&mut self, k: &str, v: impl ToString) {
        self.lines.push((k.to_string(), v.to_string()));
    }

    fn render(&self) -> Result<String> {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (tag, files) in [("input", &self.inputs), ("output", &self.outputs)] {
            for f in expand(files)? {
                let _ = writeln!(s, "{tag}.{} = sha256:{}", display_name(&f), sha256_hex(&std::fs::read(&f)?));
            }
        }
        Ok(s)
    }

    /// Write `manifest.txt` into `dir`.
    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let body = self.render()?;
        std::fs::write(&path, body)?;
        let _ = self.command;
        Ok(path)
    }
}

/// Directories expand to their files in name order.
fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.file_name().is_some_and(|n| n != MANIFEST_FILE))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn display_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_synth(cfg: &mut RunConfig, a: SynthArgs) -> Result<String> {
    set_opt(cfg, "seed", a.seed)?;
    cfg.output = Some(a.out.clone());
    let format: RecordFormat = a.format.parse()?;
    let sc = SynthConfig {
        n_subjects: a.subjects,
        fs: a.fs,
        snr_db: (!a.noiseless).then_some(a.snr),
        duration_s: a.duration,
        af_mode: a.af,
        seed: cfg.seed,
        ..SynthConfig::default()
    };
    let (records, truth) = generate(&sc)?;
    let written = write_records(&records, &truth, &a.out, format)?;
    let mut m = Manifest::new("synth", cfg);
    m.extra("synth.subjects", sc.n_subjects);
    m.extra("synth.snr_db", sc.snr_db.map_or("none".to_string(), |s| s.to_string()));
    m.extra("synth.af_mode", sc.af_mode);
    m.extra("synth.duration_s", sc.duration_s);
    m.extra("synth.fs", sc.fs);
    m.outputs = written;
    m.write(&a.out)?;
    Ok(format!("wrote {} records to {}\n", records.len(), a.out.display()))
}

fn load_segments(cfg: &RunConfig, input: &Path) -> Result<Vec<crate::signalio::SegmentRecord>> {
    let records = load_records(input)?;
    let mut segs = Vec::new();
    for r in &records {
        segs.extend(segment(r, cfg.segments)?);
    }
    Ok(segs)
}

fn cmd_preprocess(cfg: &mut RunConfig, a: PreprocessArgs) -> Result<String> {
    set_opt(cfg, "band_lo", a.lo)?;
    set_opt(cfg, "band_hi", a.hi)?;
    set_opt(cfg, "segments", a.segments)?;
    set_opt(cfg, "input", a.input.as_ref().map(|p| p.display().to_string()))?;
    set_opt(cfg, "output", a.out.as_ref().map(|p| p.display().to_string()))?;
    cfg.validate()?;
    let input = require(cfg.input.clone(), "input")?;
    let out = require(cfg.output.clone(), "output")?;
    let band = cfg.band()?;
    let segs = load_segments(cfg, &input)?;
    let processed = segs
        .iter()
        .map(|s| {
            let ecg = preprocess_ecg(&s.ecg, s.fs, band)?;
            WaveformRecord::new(s.record_key(), s.fs, ecg, s.abp.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let written = write_record_set(&processed, &out, RecordFormat::Text)?;
    let mut m = Manifest::new("preprocess", cfg);
    m.inputs.push(input);
    m.outputs = written;
    m.write(&out)?;
    Ok(format!("wrote {} segments to {}\n", processed.len(), out.display()))
}

fn cmd_peaks(cfg: &mut RunConfig, a: PeaksArgs) -> Result<String> {
    set_opt(cfg, "input", a.input.as_ref().map(|p| p.display().to_string()))?;
    set_opt(cfg, "seed", a.seed)?;
    if a.seed.is_some() {
        cfg.ampd_deterministic = false;
    } else if a.deterministic {
        cfg.ampd_deterministic = true;
    }
    cfg.validate()?;
    let input = require(cfg.input.clone(), "input")?;
    let band = cfg.band()?;
    let records = load_records(&input)?;
    let mut text = String::new();
    for rec in &records {
        if records.len() > 1 {
            let _ = writeln!(text, "# {}", rec.subject_id);
        }
        let win = window_len(rec.fs);
        let spans: Vec<(usize, usize)> = if rec.len() < win {
            vec![(0, rec.len())]
        } else {
            (0..rec.len() / win).map(|w| (w * win, (w + 1) * win)).collect()
        };
        let mut amp = AmpdConfig::for_rate(rec.fs);
        if !cfg.ampd_deterministic {
            amp.noise = LmsNoise::Seeded(cfg.seed);
        }
        for (lo, hi) in spans {
            let x = &rec.ecg[lo..hi];
            let sig = if a.raw { x.to_vec() } else { preprocess_ecg(x, rec.fs, band)? };
            for p in detect_peaks(&sig, &amp)?.indices {
                let _ = writeln!(text, "{}", lo + p);
            }
        }
    }
    match a.out {
        Some(path) => {
            std::fs::write(&path, &text)?;
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut m = Manifest::new("peaks", cfg);
            m.extra("peaks.raw", a.raw);
            m.inputs.push(input);
            m.outputs.push(path.clone());
            m.write(dir)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn cmd_features(cfg: &mut RunConfig, a: FeaturesArgs) -> Result<String> {
    set_opt(cfg, "feature_length", a.length)?;
    set_opt(cfg, "segments", a.segments)?;
    set_opt(cfg, "input", a.input.as_ref().map(|p| p.display().to_string()))?;
    set_opt(cfg, "output", a.out.as_ref().map(|p| p.display().to_string()))?;
    cfg.validate()?;
    let input = require(cfg.input.clone(), "input")?;
    let out = require(cfg.output.clone(), "output")?;
    let segs = load_segments(cfg, &input)?;
    let (dataset, summary) = assemble_dataset(&segs, &cfg.feature_config()?)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&out, dataset.to_text())?;
    let dir = out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut m = Manifest::new("features", cfg);
    m.extra("features.rows", dataset.len());
    m.extra("features.segments_used", summary.iter().filter(|s| s.beats > 0).count());
    m.extra("features.segments_total", summary.len());
    m.inputs.push(input);
    m.outputs.push(out.clone());
    m.write(dir)?;
    Ok(format!("{} rows x {} columns -> {}\n", dataset.len(), dataset.n_cols, out.display()))
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_text(&std::fs::read_to_string(path)?)
}

fn cmd_train(cfg: &mut RunConfig, a: TrainArgs) -> Result<String> {
    set_opt(cfg, "rounds", a.rounds)?;
    set_opt(cfg, "max_depth", a.depth)?;
    set_opt(cfg, "min_leaf", a.min_leaf)?;
    set_opt(cfg, "loss", a.loss)?;
    set_opt(cfg, "pca_retain", a.retain)?;
    set_opt(cfg, "seed", a.seed)?;
    set_opt(cfg, "input", a.input.as_ref().map(|p| p.display().to_string()))?;
    set_opt(cfg, "output", a.out.as_ref().map(|p| p.display().to_string()))?;
    cfg.validate()?;
    let input = require(cfg.input.clone(), "input")?;
    let out = require(cfg.output.clone(), "output")?;
    let ds = read_dataset(&input)?;
    let pca = pca_fit(&ds.rows, cfg.pca_retain)?;
    let reduced = pca.transform_rows(&ds.rows)?;
    let models = train_targets(&reduced, ds.labels(), &cfg.boost_params(), cfg.seed)?;
    std::fs::create_dir_all(&out)?;
    let pca_path = out.join("pca.txt");
    let model_path = out.join("ensembles.txt");
    std::fs::write(&pca_path, pca.to_text())?;
    std::fs::write(&model_path, ensembles_to_text(&models))?;
    let mut m = Manifest::new("train", cfg);
    m.extra("pca.k", pca.k);
    for e in &models {
        m.extra(&format!("{}.rounds_completed", e.target.name().to_ascii_lowercase()), e.rounds_completed());
        m.extra(&format!("{}.seed", e.target.name().to_ascii_lowercase()), e.seed);
    }
    m.inputs.push(input);
    m.outputs = vec![pca_path, model_path];
    m.write(&out)?;
    Ok(format!("pca k = {}; models written to {}\n", pca.k, out.display()))
}

fn cmd_evaluate(cfg: &mut RunConfig, a: EvaluateArgs) -> Result<String> {
    set_opt(cfg, "folds", a.k)?;
    set_opt(cfg, "seed", a.seed)?;
    set_opt(cfg, "split_by", a.split_by)?;
    if a.pca_global {
        cfg.pca_global = true;
    }
    set_opt(cfg, "rounds", a.rounds)?;
    set_opt(cfg, "max_depth", a.depth)?;
    set_opt(cfg, "min_leaf", a.min_leaf)?;
    set_opt(cfg, "loss", a.loss)?;
    set_opt(cfg, "feature_length", a.length)?;
    set_opt(cfg, "input", a.input.as_ref().map(|p| p.display().to_string()))?;
    set_opt(cfg, "output", a.out.as_ref().map(|p| p.display().to_string()))?;
    cfg.validate()?;
    let out = require(cfg.output.clone(), "output")?;
    let (dataset, input) = match (a.dataset, cfg.input.clone()) {
        (Some(d), _) => (read_dataset(&d)?, d),
        (None, Some(i)) => {
            let segs = load_segments(cfg, &i)?;
            (assemble_dataset(&segs, &cfg.feature_config()?)?.0, i)
        }
        (None, None) => return Err(Error::Config { key: "input".into(), message: "required (or --dataset)".into() }),
    };
    let report = evaluate(&dataset, &cfg.cv_params())?;
    let written = report.write(&out)?;
    let mut m = Manifest::new("evaluate", cfg);
    m.extra("dataset_digest", &report.dataset_digest);
    m.extra("fold_digest", &report.fold_digest);
    m.inputs.push(input);
    m.outputs = written;
    m.write(&out)?;
    let mut s = String::new();
    for t in &report.targets {
        let _ = writeln!(
            s,
            "{}: mae {:.3} me {:.3} sd {:.3} bhs {} aami {}",
            t.target.name(),
            t.stats.mae,
            t.stats.me,
            t.stats.sd,
            t.bhs.grade,
            t.aami
        );
    }
    Ok(s)
}

fn parse_triple(s: &str, what: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("{what} expects three comma-separated numbers, got `{s}`")))?;
    v.try_into().map_err(|_| Error::InvalidArgument(format!("{what} expects three numbers, got `{s}`")))
}

fn bhs_line(label: &str, b: &BhsResult) -> String {
    format!("bhs {label}: {}/{}/{} -> {}\n", b.pct5, b.pct10, b.pct15, b.grade)
}

fn aami_line(label: &str, st: &ErrorStats) -> String {
    format!("aami {label}: me {} sd {} subjects {} -> {}\n", st.me, st.sd, st.n_subjects, aami_check(st))
}

fn cmd_report(a: ReportArgs) -> Result<String> {
    let mut s = String::new();
    match a.from.as_str() {
        "tables" => {
            if a.bhs.is_empty() && a.aami.is_empty() {
                return Err(Error::InvalidArgument("report --from tables needs --bhs and/or --aami rows".into()));
            }
            for (i, row) in a.bhs.iter().enumerate() {
                let [p5, p10, p15] = parse_triple(row, "--bhs")?;
                if !(0.0..=100.0).contains(&p5) || p5 > p10 || p10 > p15 || p15 > 100.0 {
                    return Err(Error::InvalidArgument(format!("--bhs `{row}` is not a cumulative percentage triple")));
                }
                s.push_str(&bhs_line(&(i + 1).to_string(), &bhs_from_percentages(p5, p10, p15)));
            }
            for (i, row) in a.aami.iter().enumerate() {
                let [me, sd, n] = parse_triple(row, "--aami")?;
                if sd < 0.0 || n < 0.0 || n.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("--aami `{row}` needs sd >= 0 and a whole subject count")));
                }
                let st = ErrorStats { me, sd, mae: f64::NAN, mae_sd: f64::NAN, n: 0, n_subjects: n as usize };
                s.push_str(&aami_line(&(i + 1).to_string(), &st));
            }
        }
        _ => {
            let dir = a.input.clone().ok_or_else(|| Error::Config {
                key: "input".into(),
                message: "report --from bland-altman needs --input".into(),
            })?;
            let subjects = a.subjects.unwrap_or(0);
            for t in ["dbp", "map", "sbp"] {
                let pts = parse_bland_altman_csv(&std::fs::read_to_string(dir.join(format!("bland_altman_{t}.csv")))?)?;
                let pairs = pairs_from_bland_altman(&pts);
                let st = error_stats(&pairs, subjects)?;
                let abs: Vec<f64> = pairs.iter().map(|(e, r)| (e - r).abs()).collect();
                let b = crate::eval::bhs_grade(&abs)?;
                let _ = writeln!(s, "{t}: n {} me {:.3} sd {:.3} mae {:.3} mae_sd {:.3}", st.n, st.me, st.sd, st.mae, st.mae_sd);
                s.push_str(&bhs_line(t, &b));
                s.push_str(&aami_line(t, &st));
            }
        }
    }
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out)?;
        let path = out.join("report.txt");
        std::fs::write(&path, &s)?;
        let mut m = Manifest::new("report", &RunConfig::default());
        m.extra("report.from", &a.from);
        for r in &a.bhs {
            m.extra("report.bhs", r);
        }
        for r in &a.aami {
            m.extra("report.aami", r);
        }
        if let Some(i) = &a.input {
            m.inputs.push(i.clone());
        }
        m.outputs.push(path);
        m.write(out)?;
    }
    Ok(s)
}
