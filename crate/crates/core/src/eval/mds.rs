use rand::Rng;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::sampling::stream_rng;

const POWER_SEED: u64 = 0x4d44_5332;
const POWER_MAX_ITER: usize = 20_000;
const POWER_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Mds {
    pub coords: Vec<[f64; 2]>,
    pub eigenvalues: [f64; 2],
    /// All input points coincide; coordinates are zero.
    pub degenerate: bool,
}

/// Classical (Torgerson) MDS of the embedding rows onto two dimensions.
pub fn reduce_2d(emb: &EmbeddingMatrix) -> Result<Mds> {
    let rows: Vec<&[f64]> = emb.rows().collect();
    classical_mds_2d(&rows)
}

/// Double-centres the squared Euclidean distance matrix and takes its top two
/// eigenpairs by power iteration with deflation; coordinates are
/// `eigenvector × √eigenvalue`.
pub fn classical_mds_2d(points: &[&[f64]]) -> Result<Mds> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Evaluation(format!("MDS needs at least 3 points, got {n}")));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: p.len(),
        });
    }

    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d2: f64 = points[i]
                .iter()
                .zip(points[j])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            b[i * n + j] = d2;
            b[j * n + i] = d2;
        }
    }
    if b.iter().all(|&x| x == 0.0) {
        log::warn!("all {n} points coincide; MDS coordinates are zero");
        return Ok(Mds {
            coords: vec![[0.0; 2]; n],
            eigenvalues: [0.0; 2],
            degenerate: true,
        });
    }
    double_center(&mut b, n);

    let scale = (0..n).map(|i| b[i * n + i].abs()).fold(0.0, f64::max);
    let mut rng = stream_rng(POWER_SEED, 0);
    let mut coords = vec![[0.0; 2]; n];
    let mut eigenvalues = [0.0; 2];
    for axis in 0..2 {
        let (lambda, v) = power_iteration(&b, n, &mut rng);
        eigenvalues[axis] = lambda;
        if lambda > 1e-12 * scale {
            let s = lambda.sqrt();
            for i in 0..n {
                coords[i][axis] = v[i] * s;
            }
        }
        for i in 0..n {
            for j in 0..n {
                b[i * n + j] -= lambda * v[i] * v[j];
            }
        }
    }
    Ok(Mds {
        coords,
        eigenvalues,
        degenerate: false,
    })
}

/// `B = -1/2 J D² J` in place.
fn double_center(d2: &mut [f64], n: usize) {
    let row_means: Vec<f64> = (0..n)
        .map(|i| d2[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            // symmetric, so column means equal row means
            d2[i * n + j] = -0.5 * (d2[i * n + j] - row_means[i] - row_means[j] + grand);
        }
    }
}

fn mat_vec(m: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = m[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Dominant eigenpair of the symmetric matrix `m`; the eigenvector is
/// normalised with its largest-magnitude entry positive.
fn power_iteration<R: Rng>(m: &[f64], n: usize, rng: &mut R) -> (f64, Vec<f64>) {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v);
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITER {
        mat_vec(m, n, &v, &mut next);
        if normalize(&mut next) == 0.0 {
            return (0.0, v);
        }
        let delta = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if delta < POWER_TOL {
            break;
        }
    }
    mat_vec(m, n, &v, &mut next);
    let lambda: f64 = v.iter().zip(&next).map(|(a, b)| a * b).sum();
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda, v)
}
