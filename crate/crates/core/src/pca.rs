//! Principal component reduction of beat vectors.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

pub const DEFAULT_RETAIN: f64 = 0.98;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// The `k` retained unit eigenvectors, by descending eigenvalue.
    pub components: Vec<Vec<f64>>,
    /// All `L` covariance eigenvalues, non-increasing, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    /// Cumulative eigenvalue fraction covered by the first `k` components.
    pub energy_fraction: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Sum of the eigenvalues left out of the model.
    pub fn discarded_energy(&self) -> f64 {
        self.eigenvalues[self.k..].iter().sum()
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| pca_transform(self, r)).collect()
    }

    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (y, c) in scores.iter().zip(&self.components) {
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += y * ci;
            }
        }
        x
    }

    /// Text form: `L,k`, then the mean row, `k` component rows and the row
    /// of all `L` eigenvalues.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, v: &[f64]| {
            let line: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        };
        let _ = writeln!(s, "{},{}", self.dim(), self.k);
        row(&mut s, &self.mean);
        for c in &self.components {
            row(&mut s, c);
        }
        row(&mut s, &self.eigenvalues);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |m: &str| Error::Parse(format!("pca model: {m}"));
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let (l, k) = header.split_once(',').ok_or_else(|| bad("header"))?;
        let l: usize = l.trim().parse().map_err(|_| bad("header L"))?;
        let k: usize = k.trim().parse().map_err(|_| bad("header k"))?;
        let mut row = || -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            let v = line
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad("number")))
                .collect::<Result<Vec<f64>>>()?;
            if v.len() != l {
                return Err(bad("row length"));
            }
            Ok(v)
        };
        let mean = row()?;
        let components = (0..k).map(|_| row()).collect::<Result<Vec<_>>>()?;
        let eigenvalues = row()?;
        if k == 0 || k > l {
            return Err(bad("k out of range"));
        }
        let total: f64 = eigenvalues.iter().sum();
        let kept: f64 = eigenvalues[..k].iter().sum();
        let energy_fraction = if total > 0.0 { kept / total } else { 1.0 };
        Ok(Self { mean, components, eigenvalues, k, energy_fraction })
    }
}

/// Smallest `k` whose leading eigenvalues cover at least `retain` of the
/// total. `eigenvalues` must be sorted non-increasing and non-negative.
pub fn retained_count(eigenvalues: &[f64], retain: f64) -> (usize, f64) {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return (1, 1.0);
    }
    let mut cum = 0.0;
    for (j, v) in eigenvalues.iter().enumerate() {
        cum += v;
        let frac = cum / total;
        if frac >= retain {
            return (j + 1, frac);
        }
    }
    (eigenvalues.len(), 1.0)
}

/// Sample covariance (divisor `n - 1`) of the rows, row-major `L x L`.
pub fn covariance(rows: &[Vec<f64>], mean: &[f64]) -> Vec<f64> {
    let l = mean.len();
    let mut cov = vec![0.0; l * l];
    let mut centered = vec![0.0; l];
    for r in rows {
        for ((c, x), m) in centered.iter_mut().zip(r).zip(mean) {
            *c = x - m;
        }
        for a in 0..l {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            let dst = &mut cov[a * l + a..a * l + l];
            for (d, cb) in dst.iter_mut().zip(&centered[a..]) {
                *d += ca * cb;
            }
        }
    }
    let denom = (rows.len() - 1) as f64;
    for a in 0..l {
        for b in a..l {
            let v = cov[a * l + b] / denom;
            cov[a * l + b] = v;
            cov[b * l + a] = v;
        }
    }
    cov
}

pub fn pca_fit(rows: &[Vec<f64>], retain: f64) -> Result<PcaModel> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows(rows.len()));
    }
    if !(retain > 0.0 && retain <= 1.0) {
        return Err(Error::InvalidArgument(format!("retain fraction {retain} outside (0, 1]")));
    }
    let l = rows[0].len();
    if l == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    for r in rows {
        if r.len() != l {
            return Err(Error::DimensionMismatch { expected: l, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("non-finite feature value".into()));
        }
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; l];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }

    let cov = covariance(rows, &mean);
    let eig = jacobi_eigen(&cov, l)?;

    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.values[j].max(0.0)).collect();
    let (k, energy_fraction) = retained_count(&eigenvalues, retain);
    let components = order[..k]
        .iter()
        .map(|&j| {
            let mut v = eig.vectors[j].clone();
            orient(&mut v);
            v
        })
        .collect();
    Ok(PcaModel { mean, components, eigenvalues, k, energy_fraction })
}

/// Flip `v` so that its entry of largest magnitude (first on ties) is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

pub fn pca_transform(model: &PcaModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x.len() });
    }
    Ok(model
        .components
        .iter()
        .map(|c| c.iter().zip(x).zip(&model.mean).map(|((ci, xi), mi)| ci * (xi - mi)).sum())
        .collect())
}
