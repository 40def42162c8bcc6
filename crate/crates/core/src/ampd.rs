//! Automatic multiscale-based peak detection (AMPD).
//!
//! For a detrended signal of length `N`, the local maxima scalogram (LMS)
//! has one row per scale `k = 1..=L`. Entry `(k, i)` is zero when sample `i`
//! is strictly greater than both samples `k` away, and `1 + r` otherwise
//! (`r` uniform in `[0, 1)`, or `0.5` in deterministic mode). Columns whose
//! scale-`k` comparison would reach outside the signal count as non-maxima.
//! The row sums `gamma_k` pick the scale `lambda = argmin gamma_k`, and the
//! peaks are the columns that are zero in every row `1..=lambda`.
//!
//! The LMS is never materialized: for each column we only keep the first
//! scale at which it stops being a maximum.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const MIN_SIGNAL_LEN: usize = 8;

/// Comparisons closer than this fraction of the detrended range are ties.
/// Exactly periodic synthetic signals otherwise produce FFT-rounding noise
/// at `k = period` that decides the scale by chance.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Edge candidates must reach this fraction of the median height of the
/// interior peaks.
pub const EDGE_HEIGHT_FRACTION: f64 = 0.75;

/// Edge candidates need this many samples on each side at scales 1..=2.
const EDGE_MARGIN: usize = 2;

/// Longest RR interval admitted, used to cap the number of LMS rows.
pub const MAX_RR_S: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmsNoise {
    /// Every non-maximum entry is exactly `1.5`.
    Deterministic,
    /// Entries are `1 + r`, `r` drawn from a ChaCha stream with this seed.
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpdConfig {
    pub noise: LmsNoise,
    /// Upper bound on the number of scales, on top of `ceil(N/2) - 1`.
    pub max_scale: Option<usize>,
    /// Also report peaks within `lambda` samples of either end, where the
    /// two-sided scalogram cannot see them (see [`detect_peaks`]).
    pub edge_recovery: bool,
}

impl Default for AmpdConfig {
    fn default() -> Self {
        Self { noise: LmsNoise::Deterministic, max_scale: None, edge_recovery: true }
    }
}

impl AmpdConfig {
    /// Deterministic detection with the scale cap `ceil(1.2 * fs)`.
    pub fn for_rate(fs: u32) -> Self {
        Self { max_scale: Some((MAX_RR_S * f64::from(fs)).ceil() as usize), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeakSet {
    /// Strictly increasing, all within `1..=N-2`.
    pub indices: Vec<usize>,
    /// Selected scale `lambda`.
    pub scale: usize,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Least-squares linear detrend.
pub fn detrend(signal: &[f64]) -> Vec<f64> {
    let n = signal.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = signal.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &x) in signal.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (x - x_mean);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    signal
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - x_mean) - slope * (i as f64 - t_mean))
        .collect()
}

/// Detect peaks in `signal`.
///
/// With `edge_recovery` on, columns inside the first or last `lambda`
/// samples are re-examined with one-sided comparisons where the other side
/// would leave the signal. Such a column is reported when it is a strict
/// maximum at scales 1 and 2 on both sides, a maximum on every available
/// side up to `lambda`, and at least [`EDGE_HEIGHT_FRACTION`] of the median
/// interior peak height above the signal minimum. The height gate keeps a
/// truncated T wave at a window edge from being taken for an R peak.
pub fn detect_peaks(signal: &[f64], config: &AmpdConfig) -> Result<PeakSet> {
    let n = signal.len();
    if n < MIN_SIGNAL_LEN {
        return Err(Error::SignalTooShort(n));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    let x = detrend(signal);
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let tol = TIE_TOLERANCE * (hi - lo);

    let mut rows = n.div_ceil(2) - 1;
    if let Some(cap) = config.max_scale {
        rows = rows.min(cap.max(1));
    }

    // first_fail[i] = smallest k at which column i is not a maximum (rows + 1 if none).
    let never = rows + 1;
    let mut first_fail = vec![never; n];
    let mut gamma = Vec::with_capacity(rows);
    let mut rng = match config.noise {
        LmsNoise::Seeded(seed) => Some(rng_from_seed(seed)),
        LmsNoise::Deterministic => None,
    };
    for k in 1..=rows {
        let mut row_sum = 0.0;
        for i in 0..n {
            let is_max = i >= k && i + k < n && x[i] > x[i - k] + tol && x[i] > x[i + k] + tol;
            let r = match rng.as_mut() {
                Some(rng) => rng.random::<f64>(),
                None => 0.5,
            };
            if !is_max {
                row_sum += 1.0 + r;
                if first_fail[i] == never {
                    first_fail[i] = k;
                }
            }
        }
        gamma.push(row_sum);
    }

    // argmin with the smallest k winning ties
    let mut scale = 1;
    for (k, &g) in gamma.iter().enumerate() {
        if g < gamma[scale - 1] {
            scale = k + 1;
        }
    }

    let mut indices: Vec<usize> = (0..n).filter(|&i| first_fail[i] > scale).collect();

    if config.edge_recovery && !indices.is_empty() {
        let extra = recover_edges(&x, &indices, scale, tol, lo);
        if !extra.is_empty() {
            indices.extend(extra);
            indices.sort_unstable();
        }
    }
    Ok(PeakSet { indices, scale })
}

fn recover_edges(x: &[f64], core: &[usize], scale: usize, tol: f64, lo: f64) -> Vec<usize> {
    let n = x.len();
    let mut heights: Vec<f64> = core.iter().map(|&i| x[i] - lo).collect();
    heights.sort_by(f64::total_cmp);
    let mid = heights.len() / 2;
    let median = if heights.len() % 2 == 0 { 0.5 * (heights[mid - 1] + heights[mid]) } else { heights[mid] };
    let gate = EDGE_HEIGHT_FRACTION * median;

    let is_edge_max = |i: usize| -> bool {
        if i < EDGE_MARGIN || i + EDGE_MARGIN >= n {
            return false;
        }
        (1..=scale).all(|k| {
            let left = i < k || x[i] > x[i - k] + tol;
            let right = i + k >= n || x[i] > x[i + k] + tol;
            left && right
        })
    };

    let left_zone = 0..scale.min(n);
    let right_zone = n.saturating_sub(scale).max(scale.min(n))..n;
    left_zone
        .chain(right_zone)
        .filter(|&i| x[i] - lo >= gate && is_edge_max(i))
        .collect()
}

/// One RR interval between consecutive peaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrInterval {
    pub duration_s: f64,
    pub start: usize,
    pub end: usize,
}

pub fn rr_intervals(peaks: &PeakSet, fs: u32) -> Result<Vec<RrInterval>> {
    if peaks.indices.len() < 2 {
        return Err(Error::TooFewPeaks(peaks.indices.len()));
    }
    Ok(peaks
        .indices
        .windows(2)
        .map(|p| RrInterval {
            duration_s: (p[1] - p[0]) as f64 / f64::from(fs),
            start: p[0],
            end: p[1],
        })
        .collect())
}
