//! Dense symmetric eigensolver (cyclic Jacobi).

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Unsorted, in the order the diagonal ended up.
    pub values: Vec<f64>,
    /// Row `j` is the unit eigenvector of `values[j]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Off-diagonal Frobenius norm, relative to the full norm, at which the
/// iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Cyclic Jacobi on the `n x n` row-major symmetric `matrix`.
///
/// Each sweep visits every off-diagonal pair once in round-robin
/// (tournament) order: a round pairs all indices disjointly, so its
/// rotations commute and are applied together as one column pass and one
/// row pass over contiguous rows. From the fifth sweep on, entries already
/// negligible against both diagonal entries are set to zero without
/// rotating. Stops once the off-diagonal norm is at most
/// [`JACOBI_TOLERANCE`] of the matrix norm, or when a sweep performs no
/// rotation.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: matrix.len() });
    }
    if let Some(i) = matrix.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!("non-finite matrix entry at {i}")));
    }
    let mut a = matrix.to_vec();
    // vt[p*n + j] = component j of eigenvector p; rotations touch whole rows.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }

    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let max_sweeps = (10 * n * n).max(1);
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += a[p * n + q] * a[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    if n < 2 || norm == 0.0 || off_norm(&a) <= JACOBI_TOLERANCE * norm {
        return Ok(finish(a, vt, n, sweeps));
    }

    let rounds = tournament(n);
    let mut rots: Vec<Rotation> = Vec::with_capacity(n / 2);
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for round in &rounds {
            rots.clear();
            for &(p, q) in round {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                rots.push(Rotation { p, q, c, s: t * c, app: app - t * apq, aqq: aqq + t * apq });
            }
            if rots.is_empty() {
                continue;
            }
            rotated = true;
            // A <- A J, row by row
            for row in a.chunks_exact_mut(n) {
                for r in &rots {
                    let (x, y) = (row[r.p], row[r.q]);
                    row[r.p] = r.c * x - r.s * y;
                    row[r.q] = r.s * x + r.c * y;
                }
            }
            // A <- J^T A, and V <- V J on the stored transpose
            for r in &rots {
                rotate_rows(&mut a, n, r);
                rotate_rows(&mut vt, n, r);
                a[r.p * n + r.p] = r.app;
                a[r.q * n + r.q] = r.aqq;
                a[r.p * n + r.q] = 0.0;
                a[r.q * n + r.p] = 0.0;
            }
        }
        // keep rounding from breaking symmetry across sweeps
        for p in 0..n {
            for q in p + 1..n {
                let v = 0.5 * (a[p * n + q] + a[q * n + p]);
                a[p * n + q] = v;
                a[q * n + p] = v;
            }
        }
        if !rotated || off_norm(&a) <= JACOBI_TOLERANCE * norm {
            return Ok(finish(a, vt, n, sweeps));
        }
    }
    Err(Error::NumericalFailure(format!("Jacobi did not converge in {max_sweeps} sweeps")))
}

struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    app: f64,
    aqq: f64,
}

fn rotate_rows(m: &mut [f64], n: usize, r: &Rotation) {
    let (head, tail) = m.split_at_mut(r.q * n);
    let rp = &mut head[r.p * n..r.p * n + n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (u, v) = (*x, *y);
        *x = r.c * u - r.s * v;
        *y = r.s * u + r.c * v;
    }
}

/// Round-robin schedule covering every pair `p < q` of `0..n` exactly once.
fn tournament(n: usize) -> Vec<Vec<(usize, usize)>> {
    let m = n + n % 2; // odd n gets a bye slot
    let mut ring: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(m - 1);
    for _ in 0..m - 1 {
        let mut round = Vec::with_capacity(m / 2);
        for i in 0..m / 2 {
            let (x, y) = (ring[i], ring[m - 1 - i]);
            if x < n && y < n {
                round.push((x.min(y), x.max(y)));
            }
        }
        rounds.push(round);
        ring[1..].rotate_right(1);
    }
    rounds
}

fn finish(a: Vec<f64>, vt: Vec<f64>, n: usize, sweeps: usize) -> SymmetricEigen {
    let values = (0..n).map(|i| a[i * n + i]).collect();
    let vectors = vt.chunks(n.max(1)).take(n).map(<[f64]>::to_vec).collect();
    SymmetricEigen { values, vectors, sweeps }
}
