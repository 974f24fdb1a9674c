use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::stream_rng;

pub const MAX_KMEANS_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans<const D: usize> {
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; D]>,
    pub inertia: f64,
    /// Inertia after seeding, then after every Lloyd iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
}

#[inline]
fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest<const D: usize>(p: &[f64; D], centroids: &[[f64; D]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centre) in centroids.iter().enumerate() {
        let d = dist2(p, centre);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn inertia<const D: usize>(points: &[[f64; D]], centroids: &[[f64; D]], assign: &[usize]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &c)| dist2(p, &centroids[c]))
        .sum()
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or [`MAX_KMEANS_ITERATIONS`] is reached.
pub fn kmeans<const D: usize>(points: &[[f64; D]], k: usize, seed: u64) -> Result<KMeans<D>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut rng = stream_rng(seed, 0);

    let mut centroids: Vec<[f64; D]> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    chosen = i;
                    break;
                }
                r -= w;
            }
            // rounding can land on a zero-weight tail
            while d2[chosen] == 0.0 {
                chosen -= 1;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[pick]);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &points[pick]));
        }
    }

    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = vec![inertia(points, &centroids, &assign)];
    let mut iterations = 0;
    while iterations < MAX_KMEANS_ITERATIONS {
        iterations += 1;
        let mut sums = vec![[0.0; D]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..D {
                    centroids[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
        }
        let mut changed = false;
        for (p, a) in points.iter().zip(assign.iter_mut()) {
            let (c, d) = nearest(p, &centroids);
            // move only on strict improvement so a fixpoint is reached
            if c != *a && d < dist2(p, &centroids[*a]) {
                *a = c;
                changed = true;
            }
        }
        let current = inertia(points, &centroids, &assign);
        debug_assert!(current <= history.last().unwrap() * (1.0 + 1e-12) + 1e-12);
        history.push(current);
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        inertia: *history.last().unwrap(),
        assignments: assign,
        centroids,
        history,
        iterations,
    })
}
