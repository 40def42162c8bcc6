//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Brick-wall band mask by direct O(n^2) DFT. Twiddles come from a table
/// indexed by `(j * k) mod n` so large products keep full accuracy.
pub fn dft_bandpass(x: &[f64], fs: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = x.len();
    let cos: Vec<f64> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).sin()).collect();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..n {
        let f = k.min(n - k) as f64 * fs / n as f64;
        if f < lo || f > hi {
            continue;
        }
        let (mut sr, mut si) = (0.0, 0.0);
        for (j, &v) in x.iter().enumerate() {
            let m = (j * k) % n;
            sr += v * cos[m];
            si -= v * sin[m];
        }
        re[k] = sr;
        im[k] = si;
    }
    (0..n)
        .map(|j| {
            let mut s = 0.0;
            for k in 0..n {
                if re[k] == 0.0 && im[k] == 0.0 {
                    continue;
                }
                let m = (j * k) % n;
                s += re[k] * cos[m] - im[k] * sin[m];
            }
            s / n as f64
        })
        .collect()
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Classical Jacobi: always annihilate the largest off-diagonal entry, with
/// the rotation angle from `atan2`. Returns eigenvalues descending and the
/// matching unit eigenvectors.
pub fn max_pivot_jacobi(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let norm: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..100 * n * n + 100 {
        let (mut p, mut q, mut big) = (0, 1, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big <= 1e-15 * norm || n < 2 {
            break;
        }
        let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (s, c) = theta.sin_cos();
        // A <- G^T A G with G the (p, q) plane rotation
        for k in 0..n {
            let (akp, akq) = (a[k][p], a[k][q]);
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..n {
            let (apk, aqk) = (a[p][k], a[q][k]);
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
        for row in v.iter_mut() {
            let (vp, vq) = (row[p], row[q]);
            row[p] = c * vp - s * vq;
            row[q] = s * vp + c * vq;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let vals = idx.iter().map(|&i| a[i][i]).collect();
    let vecs = idx.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (vals, vecs)
}

/// Sample covariance, divisor `n - 1`, computed the textbook way.
pub fn sample_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let l = rows[0].len();
    let mean: Vec<f64> = (0..l).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    (0..l)
        .map(|a| {
            (0..l)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}

/// `sum v v^T` over the given unit vectors.
pub fn projector(vecs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let l = vecs[0].len();
    let mut p = vec![vec![0.0; l]; l];
    for v in vecs {
        for i in 0..l {
            for j in 0..l {
                p[i][j] += v[i] * v[j];
            }
        }
    }
    p
}

pub fn frobenius_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Weighted squared error of the best single split over every threshold
/// between distinct sorted values of one feature.
pub fn brute_force_best_threshold(x: &[f64], y: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let mut vals: Vec<f64> = x.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let sse = |idx: &[usize]| {
        let sw: f64 = idx.iter().map(|&i| w[i]).sum();
        let m = idx.iter().map(|&i| w[i] * y[i]).sum::<f64>() / sw;
        idx.iter().map(|&i| w[i] * (y[i] - m).powi(2)).sum::<f64>()
    };
    let mut best: Option<(f64, f64)> = None;
    for pair in vals.windows(2) {
        let t = 0.5 * (pair[0] + pair[1]);
        let (l, r): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| x[i] <= t);
        let s = sse(&l) + sse(&r);
        if best.is_none_or(|(_, b)| s < b - 1e-12) {
            best = Some((t, s));
        }
    }
    best
}
