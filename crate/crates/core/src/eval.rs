//! Cross-validation, error statistics, BHS grading, AAMI check and
//! Bland-Altman agreement.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::boost::{adaboost_predict, train_targets, BoostParams, Target};
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::pca::{pca_fit, PcaModel};
use crate::rng::{derive_seed, rng_from_seed, RNG_ALGORITHM};

pub const DEFAULT_FOLDS: usize = 10;

/// BHS cumulative-percentage thresholds at 5, 10 and 15 mmHg.
pub const BHS_A: [f64; 3] = [60.0, 85.0, 95.0];
pub const BHS_B: [f64; 3] = [50.0, 75.0, 90.0];
pub const BHS_C: [f64; 3] = [40.0, 65.0, 85.0];

pub const AAMI_MAX_ME: f64 = 5.0;
pub const AAMI_MAX_SD: f64 = 8.0;
pub const AAMI_MIN_SUBJECTS: usize = 85;

/// Sample count both standards quote for a validation study; reported only.
pub const STANDARD_MIN_SAMPLES: usize = 225;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// ---------------------------------------------------------------------------
// Folds

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Every row of a subject lands in the same fold.
    Subject,
    /// Folds are drawn over 15 s windows; one subject may span folds.
    Record,
}

impl SplitMode {
    pub fn name(self) -> &'static str {
        match self {
            SplitMode::Subject => "subject",
            SplitMode::Record => "record",
        }
    }
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subject" => Ok(SplitMode::Subject),
            "record" => Ok(SplitMode::Record),
            other => Err(Error::InvalidArgument(format!("unknown split mode `{other}`"))),
        }
    }
}

/// Assignment of grouping units (subjects, or windows in record mode) to folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// `(unit, fold)` in shuffled order; fold = position mod `k`.
    pub assignments: Vec<(String, usize)>,
}

impl FoldPlan {
    pub fn fold_of(&self) -> HashMap<&str, usize> {
        self.assignments.iter().map(|(u, f)| (u.as_str(), *f)).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for (_, f) in &self.assignments {
            sizes[*f] += 1;
        }
        sizes
    }

    pub fn digest(&self) -> String {
        let mut s = format!("k={},seed={}\n", self.k, self.seed);
        for (u, f) in &self.assignments {
            let _ = writeln!(s, "{u},{f}");
        }
        sha256_hex(s.as_bytes())
    }
}

/// Shuffle the distinct `units` with a seeded ChaCha stream and deal them
/// round-robin into `k` folds.
pub fn make_folds(units: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    let mut distinct: Vec<String> = Vec::with_capacity(units.len());
    let mut seen = std::collections::HashSet::new();
    for u in units {
        if seen.insert(u.as_str()) {
            distinct.push(u.clone());
        }
    }
    if k < 2 || distinct.len() < k {
        return Err(Error::TooFewSubjects { groups: distinct.len(), k });
    }
    // Sort first so the plan does not depend on the caller's order.
    distinct.sort();
    let mut rng = rng_from_seed(derive_seed(seed, 0xF01D));
    distinct.shuffle(&mut rng);
    let assignments = distinct.into_iter().enumerate().map(|(i, u)| (u, i % k)).collect();
    Ok(FoldPlan { k, seed, assignments })
}

/// Grouping unit of every dataset row under `mode`. In record mode a window
/// is a maximal run of consecutive rows sharing subject and labels; the
/// dataset is assembled window by window, so runs are exactly windows.
pub fn row_units(dataset: &Dataset, mode: SplitMode) -> Vec<String> {
    match mode {
        SplitMode::Subject => dataset.subjects.clone(),
        SplitMode::Record => {
            let mut out = Vec::with_capacity(dataset.len());
            let mut run = 0usize;
            for i in 0..dataset.len() {
                if i > 0 {
                    let same = dataset.subjects[i] == dataset.subjects[i - 1]
                        && dataset.dbp[i] == dataset.dbp[i - 1]
                        && dataset.sbp[i] == dataset.sbp[i - 1];
                    if !same {
                        run += 1;
                    }
                }
                out.push(format!("{}#{run}", dataset.subjects[i]));
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Cross-validation

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvParams {
    pub k: usize,
    pub split: SplitMode,
    pub retain: f64,
    /// Fit one PCA on all rows instead of per training fold.
    pub pca_global: bool,
    pub boost: BoostParams,
    pub seed: u64,
}

impl Default for CvParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_FOLDS,
            split: SplitMode::Subject,
            retain: crate::pca::DEFAULT_RETAIN,
            pca_global: false,
            boost: BoostParams::default(),
            seed: 0,
        }
    }
}

/// One `(estimate, reference)` pair per dataset row and target.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub plan: FoldPlan,
    /// Indexed by [`Target::index`], rows in dataset order.
    pub pairs: [Vec<(f64, f64)>; 3],
    pub row_fold: Vec<usize>,
    /// Retained PCA dimension per fold.
    pub fold_k: Vec<usize>,
    /// Boosting rounds kept per fold and target.
    pub fold_rounds: Vec<[usize; 3]>,
}

struct FoldResult {
    test_rows: Vec<usize>,
    estimates: [Vec<f64>; 3],
    pca_k: usize,
    rounds: [usize; 3],
}

/// Run k-fold cross-validation: per fold, fit PCA and three ensembles on
/// the training rows and predict the held-out rows.
///
/// Folds run concurrently; results are merged by row index, so the outcome
/// does not depend on scheduling. Every row must be tested exactly once and,
/// under subject split, no subject may sit on both sides of a fold; either
/// violation is an error.
pub fn run_cv(dataset: &Dataset, params: &CvParams) -> Result<CvOutcome> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let units = row_units(dataset, params.split);
    let plan = make_folds(&units, params.k, params.seed)?;
    let fold_of = plan.fold_of();
    let row_fold: Vec<usize> = units.iter().map(|u| fold_of[u.as_str()]).collect();

    let global = if params.pca_global { Some(pca_fit(&dataset.rows, params.retain)?) } else { None };

    let folds: Vec<usize> = (0..params.k).collect();
    let results: Vec<Result<FoldResult>> = crate::features::parallel_map(&folds, |&f| {
        run_fold(dataset, &row_fold, f, global.as_ref(), params)
    });

    let mut pairs: [Vec<Option<(f64, f64)>>; 3] = std::array::from_fn(|_| vec![None; dataset.len()]);
    let mut fold_k = Vec::with_capacity(params.k);
    let mut fold_rounds = Vec::with_capacity(params.k);
    for res in results {
        let fr = res?;
        fold_k.push(fr.pca_k);
        fold_rounds.push(fr.rounds);
        for t in Target::ALL {
            let labels = dataset.labels()[t.index()];
            for (&row, &est) in fr.test_rows.iter().zip(&fr.estimates[t.index()]) {
                if pairs[t.index()][row].replace((est, labels[row])).is_some() {
                    return Err(Error::PartitionViolation(format!("row {row} tested twice")));
                }
            }
        }
    }
    let pairs = pairs.map(|col| {
        col.into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::PartitionViolation(format!("row {i} never tested"))))
            .collect::<Result<Vec<_>>>()
    });
    let [a, b, c] = pairs;
    Ok(CvOutcome { plan, pairs: [a?, b?, c?], row_fold, fold_k, fold_rounds })
}

fn run_fold(
    dataset: &Dataset,
    row_fold: &[usize],
    fold: usize,
    global: Option<&PcaModel>,
    params: &CvParams,
) -> Result<FoldResult> {
    let (test_rows, train_rows): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| row_fold[i] == fold);
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::DegenerateFold(fold));
    }
    if params.split == SplitMode::Subject {
        let train_subjects: std::collections::HashSet<&str> =
            train_rows.iter().map(|&i| dataset.subjects[i].as_str()).collect();
        if let Some(&i) = test_rows.iter().find(|&&i| train_subjects.contains(dataset.subjects[i].as_str())) {
            return Err(Error::PartitionViolation(format!(
                "subject {} on both sides of fold {fold}",
                dataset.subjects[i]
            )));
        }
    }

    let train_x: Vec<Vec<f64>> = train_rows.iter().map(|&i| dataset.rows[i].clone()).collect();
    let local;
    let pca = match global {
        Some(m) => m,
        None => {
            local = pca_fit(&train_x, params.retain)?;
            &local
        }
    };
    let reduced_train = pca.transform_rows(&train_x)?;
    let labels = dataset.labels();
    let train_y: [Vec<f64>; 3] = std::array::from_fn(|t| train_rows.iter().map(|&i| labels[t][i]).collect());
    let models = train_targets(
        &reduced_train,
        [&train_y[0], &train_y[1], &train_y[2]],
        &params.boost,
        derive_seed(params.seed, 1 + fold as u64),
    )?;

    let reduced_test: Vec<Vec<f64>> =
        test_rows.iter().map(|&i| crate::pca::pca_transform(pca, &dataset.rows[i])).collect::<Result<_>>()?;
    let mut estimates: [Vec<f64>; 3] = Default::default();
    for (m, est) in models.iter().zip(estimates.iter_mut()) {
        *est = reduced_test.iter().map(|x| adaboost_predict(m, x)).collect::<Result<_>>()?;
    }
    let rounds = std::array::from_fn(|t| models[t].rounds_completed());
    Ok(FoldResult { test_rows, estimates, pca_k: pca.k, rounds })
}

// ---------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    /// Mean of `estimate - reference`.
    pub me: f64,
    /// Standard deviation of the signed error (divisor `n - 1`).
    pub sd: f64,
    pub mae: f64,
    /// Standard deviation of the absolute error (divisor `n - 1`).
    pub mae_sd: f64,
    pub n: usize,
    pub n_subjects: usize,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn error_stats(pairs: &[(f64, f64)], n_subjects: usize) -> Result<ErrorStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    let err: Vec<f64> = pairs.iter().map(|(e, r)| e - r).collect();
    let abs: Vec<f64> = err.iter().map(|e| e.abs()).collect();
    let (me, sd) = mean_sd(&err);
    let (mae, mae_sd) = mean_sd(&abs);
    Ok(ErrorStats { me, sd, mae, mae_sd, n: pairs.len(), n_subjects })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BhsGrade {
    A,
    B,
    C,
    D,
}

impl fmt::Display for BhsGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BhsGrade::A => "A",
            BhsGrade::B => "B",
            BhsGrade::C => "C",
            BhsGrade::D => "D",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BhsResult {
    pub pct5: f64,
    pub pct10: f64,
    pub pct15: f64,
    pub grade: BhsGrade,
}

/// Grade from cumulative percentages; every threshold is inclusive.
pub fn bhs_from_percentages(pct5: f64, pct10: f64, pct15: f64) -> BhsResult {
    let meets = |t: [f64; 3]| pct5 >= t[0] && pct10 >= t[1] && pct15 >= t[2];
    let grade = if meets(BHS_A) {
        BhsGrade::A
    } else if meets(BHS_B) {
        BhsGrade::B
    } else if meets(BHS_C) {
        BhsGrade::C
    } else {
        BhsGrade::D
    };
    BhsResult { pct5, pct10, pct15, grade }
}

pub fn bhs_grade(abs_errors: &[f64]) -> Result<BhsResult> {
    if abs_errors.is_empty() {
        return Err(Error::EmptyPairs);
    }
    let n = abs_errors.len() as f64;
    let pct = |lim: f64| 100.0 * abs_errors.iter().filter(|e| e.abs() <= lim).count() as f64 / n;
    Ok(bhs_from_percentages(pct(5.0), pct(10.0), pct(15.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AamiClause {
    MeanError,
    Sd,
    Subjects,
}

impl AamiClause {
    pub fn name(self) -> &'static str {
        match self {
            AamiClause::MeanError => "me",
            AamiClause::Sd => "sd",
            AamiClause::Subjects => "subjects",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AamiVerdict {
    Pass,
    Fail(Vec<AamiClause>),
}

impl AamiVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, AamiVerdict::Pass)
    }
}

impl fmt::Display for AamiVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AamiVerdict::Pass => f.write_str("pass"),
            AamiVerdict::Fail(c) => {
                let names: Vec<&str> = c.iter().map(|c| c.name()).collect();
                write!(f, "fail({})", names.join(","))
            }
        }
    }
}

pub fn aami_check(stats: &ErrorStats) -> AamiVerdict {
    let mut failed = Vec::new();
    if stats.me.abs() > AAMI_MAX_ME {
        failed.push(AamiClause::MeanError);
    }
    if stats.sd > AAMI_MAX_SD {
        failed.push(AamiClause::Sd);
    }
    if stats.n_subjects < AAMI_MIN_SUBJECTS {
        failed.push(AamiClause::Subjects);
    }
    if failed.is_empty() {
        AamiVerdict::Pass
    } else {
        AamiVerdict::Fail(failed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltman {
    /// `((estimate + reference) / 2, estimate - reference)` per pair.
    pub points: Vec<(f64, f64)>,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub loa_low: f64,
    pub loa_high: f64,
}

impl BlandAltman {
    pub fn fraction_inside(&self) -> f64 {
        let inside = self.points.iter().filter(|(_, d)| *d >= self.loa_low && *d <= self.loa_high).count();
        inside as f64 / self.points.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mean,diff\n");
        for (m, d) in &self.points {
            let _ = writeln!(s, "{m},{d}");
        }
        s
    }
}

pub fn bland_altman(pairs: &[(f64, f64)]) -> Result<BlandAltman> {
    if pairs.len() < 2 {
        return Err(Error::TooFewPairs(pairs.len()));
    }
    let points: Vec<(f64, f64)> = pairs.iter().map(|(e, r)| ((e + r) / 2.0, e - r)).collect();
    let diffs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (mean_diff, sd_diff) = mean_sd(&diffs);
    Ok(BlandAltman {
        points,
        mean_diff,
        sd_diff,
        loa_low: mean_diff - 1.96 * sd_diff,
        loa_high: mean_diff + 1.96 * sd_diff,
    })
}

/// Recover `(estimate, reference)` pairs from Bland-Altman points.
pub fn pairs_from_bland_altman(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|(m, d)| (m + d / 2.0, m - d / 2.0)).collect()
}

pub fn parse_bland_altman_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "mean,diff" => {}
        _ => return Err(Error::Parse("bland-altman csv: expected header `mean,diff`".into())),
    }
    lines
        .map(|l| {
            let (m, d) = l.split_once(',').ok_or_else(|| Error::Parse(format!("bad line `{l}`")))?;
            let p = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
            Ok((p(m)?, p(d)?))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, PartialEq)]
pub struct TargetReport {
    pub target: Target,
    pub stats: ErrorStats,
    pub bhs: BhsResult,
    pub aami: AamiVerdict,
    pub bland_altman: BlandAltman,
    /// Out-of-fold MAE of each fold.
    pub fold_mae: Vec<f64>,
}

impl TargetReport {
    pub fn from_pairs(target: Target, pairs: &[(f64, f64)], n_subjects: usize, row_fold: &[usize], k: usize) -> Result<Self> {
        let stats = error_stats(pairs, n_subjects)?;
        let abs: Vec<f64> = pairs.iter().map(|(e, r)| (e - r).abs()).collect();
        let bhs = bhs_grade(&abs)?;
        let aami = aami_check(&stats);
        let bland_altman = bland_altman(pairs)?;
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for (a, &f) in abs.iter().zip(row_fold) {
            sum[f] += a;
            cnt[f] += 1;
        }
        let fold_mae = sum.iter().zip(&cnt).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        Ok(Self { target, stats, bhs, aami, bland_altman, fold_mae })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub params: CvParams,
    pub dataset_digest: String,
    pub fold_digest: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_subjects: usize,
    pub fold_sizes: Vec<usize>,
    pub fold_k: Vec<usize>,
    pub fold_rounds: Vec<[usize; 3]>,
    pub targets: [TargetReport; 3],
}

/// Whole-number percentage as printed in reports (rounded down).
pub fn display_percent(p: f64) -> u32 {
    // tolerate representation error just below an integer
    (p + 1e-9).floor() as u32
}

pub fn evaluate(dataset: &Dataset, params: &CvParams) -> Result<EvalReport> {
    let cv = run_cv(dataset, params)?;
    report_from_cv(dataset, params, cv)
}

/// Assemble the report of a finished cross-validation run.
pub fn report_from_cv(dataset: &Dataset, params: &CvParams, cv: CvOutcome) -> Result<EvalReport> {
    let n_subjects = dataset.distinct_subjects().len();
    let mut reports = Vec::with_capacity(3);
    for t in Target::ALL {
        reports.push(TargetReport::from_pairs(t, &cv.pairs[t.index()], n_subjects, &cv.row_fold, params.k)?);
    }
    let mut it = reports.into_iter();
    let targets = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
    Ok(EvalReport {
        params: *params,
        dataset_digest: sha256_hex(dataset.to_text().as_bytes()),
        fold_digest: cv.plan.digest(),
        n_rows: dataset.len(),
        n_cols: dataset.n_cols,
        n_subjects,
        fold_sizes: cv.plan.fold_sizes(),
        fold_k: cv.fold_k,
        fold_rounds: cv.fold_rounds,
        targets,
    })
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl EvalReport {
    pub fn target(&self, t: Target) -> &TargetReport {
        &self.targets[t.index()]
    }

    /// `key = value` lines, 3 decimals for mmHg quantities.
    pub fn render(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("dataset_digest", self.dataset_digest.clone());
        kv("rows", self.n_rows.to_string());
        kv("feature_length", self.n_cols.to_string());
        kv("subjects", self.n_subjects.to_string());
        kv("folds", p.k.to_string());
        kv("split_by", p.split.name().into());
        kv("fold_digest", self.fold_digest.clone());
        kv("fold_sizes", join(&self.fold_sizes));
        kv("seed", p.seed.to_string());
        kv("rng", RNG_ALGORITHM.into());
        kv("pca_retain", p.retain.to_string());
        kv("pca_global", p.pca_global.to_string());
        kv("pca_k_per_fold", join(&self.fold_k));
        kv("rounds", p.boost.rounds.to_string());
        kv("max_depth", p.boost.max_depth.to_string());
        kv("min_leaf", p.boost.min_leaf.to_string());
        kv("loss", p.boost.loss.name().into());
        for t in &self.targets {
            let n = t.target.name().to_ascii_lowercase();
            let st = &t.stats;
            kv(&format!("{n}.n"), st.n.to_string());
            kv(&format!("{n}.me"), format!("{:.3}", st.me));
            kv(&format!("{n}.sd"), format!("{:.3}", st.sd));
            kv(&format!("{n}.mae"), format!("{:.3}", st.mae));
            kv(&format!("{n}.mae_sd"), format!("{:.3}", st.mae_sd));
            kv(&format!("{n}.bhs_pct5"), display_percent(t.bhs.pct5).to_string());
            kv(&format!("{n}.bhs_pct10"), display_percent(t.bhs.pct10).to_string());
            kv(&format!("{n}.bhs_pct15"), display_percent(t.bhs.pct15).to_string());
            kv(&format!("{n}.bhs_grade"), t.bhs.grade.to_string());
            kv(&format!("{n}.aami"), t.aami.to_string());
            kv(&format!("{n}.loa_low"), format!("{:.3}", t.bland_altman.loa_low));
            kv(&format!("{n}.loa_high"), format!("{:.3}", t.bland_altman.loa_high));
            let folds: Vec<String> = t.fold_mae.iter().map(|m| format!("{m:.3}")).collect();
            kv(&format!("{n}.fold_mae"), folds.join(","));
            let rounds: Vec<usize> = self.fold_rounds.iter().map(|r| r[t.target.index()]).collect();
            kv(&format!("{n}.rounds_per_fold"), join(&rounds));
        }
        kv(
            "note",
            format!("validation protocols also call for at least {STANDARD_MIN_SAMPLES} samples; rows = {}", self.n_rows),
        );
        s
    }

    /// Three sections: BHS cumulative percentages, AAMI rows and MAE/SD.
    pub fn tables_csv(&self) -> String {
        let mut s = String::from("bhs,le5,le10,le15,grade\n");
        for t in &self.targets {
            let b = &t.bhs;
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                t.target.name(),
                display_percent(b.pct5),
                display_percent(b.pct10),
                display_percent(b.pct15),
                b.grade
            );
        }
        for (name, th) in [("grade_A", BHS_A), ("grade_B", BHS_B), ("grade_C", BHS_C)] {
            let _ = writeln!(s, "{name},{},{},{},", th[0], th[1], th[2]);
        }
        s.push_str("\naami,me,sd,subjects,verdict\n");
        for t in &self.targets {
            let st = &t.stats;
            let _ = writeln!(s, "{},{:.3},{:.3},{},{}", t.target.name(), st.me, st.sd, st.n_subjects, t.aami);
        }
        let _ = writeln!(s, "standard,<={AAMI_MAX_ME},<={AAMI_MAX_SD},>={AAMI_MIN_SUBJECTS},");
        s.push_str("\nerror,mae,sd\n");
        for t in &self.targets {
            let _ = writeln!(s, "{},{:.3},{:.3}", t.target.name(), t.stats.mae, t.stats.mae_sd);
        }
        s
    }

    /// Write `report.txt`, `report_tables.csv` and the three Bland-Altman
    /// CSVs into `dir`; returns the paths in that order.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files: BTreeMap<usize, (PathBuf, String)> = BTreeMap::new();
        files.insert(0, (dir.join("report.txt"), self.render()));
        files.insert(1, (dir.join("report_tables.csv"), self.tables_csv()));
        for t in &self.targets {
            let name = format!("bland_altman_{}.csv", t.target.name().to_ascii_lowercase());
            files.insert(2 + t.target.index(), (dir.join(name), t.bland_altman.to_csv()));
        }
        let mut out = Vec::new();
        for (_, (path, body)) in files {
            std::fs::write(&path, body)?;
            out.push(path);
        }
        Ok(out)
    }
}
