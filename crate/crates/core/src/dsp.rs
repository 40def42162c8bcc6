//! Frequency-domain band masking, amplitude normalization and resampling.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Closed pass band `[lo_hz, hi_hz]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl BandSpec {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if !(lo_hz.is_finite() && hi_hz.is_finite()) || lo_hz < 0.0 || hi_hz <= lo_hz {
            return Err(Error::InvalidBand { lo_hz, hi_hz });
        }
        Ok(Self { lo_hz, hi_hz })
    }

    pub fn check_nyquist(&self, fs: f64) -> Result<()> {
        if self.hi_hz >= fs / 2.0 {
            return Err(Error::NyquistViolation { hi_hz: self.hi_hz, fs });
        }
        Ok(())
    }

    /// Whether a DFT bin of an `n`-point transform lies inside the band.
    pub fn keeps_bin(&self, bin: usize, n: usize, fs: f64) -> bool {
        let freq = bin_frequency(bin, n, fs);
        freq >= self.lo_hz && freq <= self.hi_hz
    }
}

impl Default for BandSpec {
    fn default() -> Self {
        Self { lo_hz: 0.8, hi_hz: 40.0 }
    }
}

/// Absolute center frequency of `bin`, folding negative frequencies.
pub fn bin_frequency(bin: usize, n: usize, fs: f64) -> f64 {
    let folded = if bin <= n / 2 { bin } else { n - bin };
    (folded as f64 * fs) / n as f64
}

fn check_finite(signal: &[f64]) -> Result<()> {
    match signal.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteSample(i)),
        None => Ok(()),
    }
}

/// Brick-wall band filter: forward DFT over the full signal length, zero
/// every bin outside the band, inverse DFT, keep the real part.
///
/// The mask depends only on `|f|`, so conjugate bins are kept or zeroed
/// together and the output is real up to rounding.
pub fn fft_bandpass(signal: &[f64], fs: f64, band: BandSpec) -> Result<Vec<f64>> {
    if signal.len() < 2 {
        return Err(Error::EmptySignal);
    }
    check_finite(signal)?;
    band.check_nyquist(fs)?;

    let n = signal.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward.process(&mut buf);
    for (bin, c) in buf.iter_mut().enumerate() {
        if !band.keeps_bin(bin, n, fs) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.into_iter().map(|c| c.re * scale).collect())
}

/// Min-max normalization onto `[0, 1]`.
pub fn normalize(signal: &[f64]) -> Result<Vec<f64>> {
    if signal.len() < 2 {
        return Err(Error::EmptySignal);
    }
    check_finite(signal)?;
    let (lo, hi) = signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi == lo {
        return Err(Error::DegenerateSignal);
    }
    let span = hi - lo;
    Ok(signal.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect())
}

/// Linear interpolation onto `target_len` uniformly spaced fractional
/// indices spanning the input. Endpoints are reproduced exactly.
pub fn resample_linear(segment: &[f64], target_len: usize) -> Result<Vec<f64>> {
    let n = segment.len();
    if n < 2 || target_len < 2 {
        return Err(Error::BadLength { input: n, target: target_len });
    }
    check_finite(segment)?;
    let span = (target_len - 1) as f64;
    let mut out = Vec::with_capacity(target_len);
    for j in 0..target_len {
        // j*(n-1) is exact in integers; a single division keeps the identity case exact.
        let pos = (j * (n - 1)) as f64 / span;
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        let v = if frac == 0.0 {
            segment[i]
        } else if frac == 1.0 {
            segment[i + 1]
        } else {
            segment[i] + frac * (segment[i + 1] - segment[i])
        };
        out.push(v);
    }
    out[target_len - 1] = segment[n - 1];
    Ok(out)
}
