use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::stream_rng;

/// Inverse regularisation strengths searched by [`fit_cv`], ascending.
pub const C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const CV_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Inverse L2 strength; the penalty is `|W|² / (2 C n)`.
    pub c: f64,
    pub max_iter: usize,
    /// Stop once the full gradient norm drops below this.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            c: 1.0,
            max_iter: 2000,
            tol: 1e-5,
        }
    }
}

/// Multinomial logistic regression on standardised features. The intercept
/// is not penalised.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub classes: usize,
    pub dim: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `classes × (dim + 1)`, intercept last in each row.
    params: Vec<f64>,
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    fn standardize_into(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..self.dim {
            out[j] = (row[j] - self.mean[j]) / self.scale[j];
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        self.standardize_into(row, &mut z);
        let mut p = vec![0.0; self.classes];
        logits(&self.params, self.dim, &z, &mut p);
        softmax_in_place(&mut p);
        p
    }

    /// Most probable class; ties go to the lower class id.
    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.predict_proba(row))
    }

    /// Percentage of rows of `x` predicted as `y`.
    pub fn accuracy(&self, x: &[f64], y: &[usize]) -> f64 {
        if y.is_empty() {
            return 0.0;
        }
        let hits = x
            .chunks_exact(self.dim)
            .zip(y)
            .filter(|(row, &t)| self.predict(row) == t)
            .count();
        100.0 * hits as f64 / y.len() as f64
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn logits(params: &[f64], dim: usize, z: &[f64], out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        let w = &params[c * (dim + 1)..(c + 1) * (dim + 1)];
        *o = w[dim] + w[..dim].iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Turns logits into probabilities and returns `log Σ exp`.
fn softmax_in_place(v: &mut [f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    v.iter_mut().for_each(|x| *x /= s);
    m + s.ln()
}

struct Problem<'a> {
    /// Standardised rows.
    z: &'a [f64],
    y: &'a [usize],
    dim: usize,
    classes: usize,
    penalty: f64,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn value_and_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let (d, k) = (self.dim, self.classes);
        let n = self.n() as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut p = vec![0.0; k];
        let mut loss = 0.0;
        for (row, &t) in self.z.chunks_exact(d).zip(self.y) {
            logits(params, d, row, &mut p);
            let target = p[t];
            loss += softmax_in_place(&mut p) - target;
            p[t] -= 1.0;
            for c in 0..k {
                let r = p[c];
                if r == 0.0 {
                    continue;
                }
                let g = &mut grad[c * (d + 1)..(c + 1) * (d + 1)];
                for (gj, zj) in g[..d].iter_mut().zip(row) {
                    *gj += r * zj;
                }
                g[d] += r;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        let mut reg = 0.0;
        for c in 0..k {
            let w = &params[c * (d + 1)..c * (d + 1) + d];
            let g = &mut grad[c * (d + 1)..c * (d + 1) + d];
            for (gj, wj) in g.iter_mut().zip(w) {
                reg += wj * wj;
                *gj += self.penalty * wj;
            }
        }
        loss / n + 0.5 * self.penalty * reg
    }

    fn value(&self, params: &[f64]) -> f64 {
        let d = self.dim;
        let mut p = vec![0.0; self.classes];
        let mut loss = 0.0;
        for (row, &t) in self.z.chunks_exact(d).zip(self.y) {
            logits(params, d, row, &mut p);
            let target = p[t];
            loss += softmax_in_place(&mut p) - target;
        }
        let reg: f64 = params
            .chunks_exact(d + 1)
            .map(|w| w[..d].iter().map(|x| x * x).sum::<f64>())
            .sum();
        loss / self.n() as f64 + 0.5 * self.penalty * reg
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Accelerated proximal-free gradient descent with backtracking on the
/// Lipschitz estimate and function-value restarts. Returns the iteration
/// count and whether the gradient tolerance was met.
fn minimize(problem: &Problem, params: &mut Vec<f64>, opts: &FitOptions) -> (usize, bool) {
    let len = params.len();
    let mut grad = vec![0.0; len];
    let mut f_x = problem.value_and_grad(params, &mut grad);
    if norm(&grad) < opts.tol {
        return (0, true);
    }
    let mut lipschitz = 1.0;
    let mut t = 1.0f64;
    let mut x_prev = params.clone();
    let mut y = params.clone();
    let mut g_y = grad.clone();
    let mut f_y = f_x;
    let mut candidate = vec![0.0; len];
    for iter in 1..=opts.max_iter {
        // backtracking from the extrapolated point
        loop {
            for i in 0..len {
                candidate[i] = y[i] - g_y[i] / lipschitz;
            }
            let f_c = problem.value(&candidate);
            let g2: f64 = g_y.iter().map(|g| g * g).sum();
            if f_c <= f_y - 0.5 * g2 / lipschitz + 1e-15 * f_y.abs() || lipschitz > 1e12 {
                break;
            }
            lipschitz *= 2.0;
        }
        std::mem::swap(&mut x_prev, params);
        params.copy_from_slice(&candidate);
        let f_new = problem.value_and_grad(params, &mut grad);
        if norm(&grad) < opts.tol {
            return (iter, true);
        }
        if f_new > f_x {
            // momentum overshot; restart from the plain gradient step
            t = 1.0;
            y.copy_from_slice(params);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..len {
                y[i] = params[i] + beta * (params[i] - x_prev[i]);
            }
            t = t_next;
        }
        f_x = f_new;
        f_y = problem.value_and_grad(&y, &mut g_y);
        lipschitz *= 0.9;
    }
    (opts.max_iter, false)
}

fn check_inputs(x: &[f64], dim: usize, y: &[usize], classes: usize) -> Result<()> {
    if dim == 0 || x.len() != y.len() * dim {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len() * dim,
        });
    }
    if y.is_empty() {
        return Err(Error::Evaluation("no training samples".into()));
    }
    if classes < 2 {
        return Err(Error::Evaluation("need at least two classes".into()));
    }
    if let Some(&bad) = y.iter().find(|&&t| t >= classes) {
        return Err(Error::Evaluation(format!("class {bad} outside 0..{classes}")));
    }
    Ok(())
}

fn standardization(x: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (x.len() / dim) as f64;
    let mut mean = vec![0.0; dim];
    for row in x.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for row in x.chunks_exact(dim) {
        for j in 0..dim {
            var[j] += (row[j] - mean[j]).powi(2);
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

struct Prepared {
    z: Vec<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

fn prepare(x: &[f64], dim: usize) -> Prepared {
    let (mean, scale) = standardization(x, dim);
    let mut z = x.to_vec();
    for row in z.chunks_exact_mut(dim) {
        for j in 0..dim {
            row[j] = (row[j] - mean[j]) / scale[j];
        }
    }
    Prepared { z, mean, scale }
}

fn fit_prepared(
    prep: &Prepared,
    dim: usize,
    y: &[usize],
    classes: usize,
    opts: &FitOptions,
    init: Option<&[f64]>,
) -> LogisticModel {
    let problem = Problem {
        z: &prep.z,
        y,
        dim,
        classes,
        penalty: 1.0 / (opts.c * y.len() as f64),
    };
    let mut params = match init {
        Some(p) => p.to_vec(),
        None => vec![0.0; classes * (dim + 1)],
    };
    let (iterations, converged) = minimize(&problem, &mut params, opts);
    LogisticModel {
        classes,
        dim,
        mean: prep.mean.clone(),
        scale: prep.scale.clone(),
        params,
        c: opts.c,
        iterations,
        converged,
    }
}

/// Fits one model with fixed `opts.c`. `x` is row-major with `dim` columns.
pub fn fit(
    x: &[f64],
    dim: usize,
    y: &[usize],
    classes: usize,
    opts: &FitOptions,
) -> Result<LogisticModel> {
    check_inputs(x, dim, y, classes)?;
    if !(opts.c > 0.0) {
        return Err(Error::InvalidConfig("C must be positive".into()));
    }
    Ok(fit_prepared(&prepare(x, dim), dim, y, classes, opts, None))
}

/// Stratified fold id per sample: each class is shuffled and dealt
/// round-robin over the folds.
fn stratified_folds(y: &[usize], classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 0x464f_4c44);
    let mut fold_of = vec![0; y.len()];
    let mut next = 0;
    for class in 0..classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % folds;
            next += 1;
        }
    }
    fold_of
}

fn gather(x: &[f64], dim: usize, y: &[usize], idx: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let mut xs = Vec::with_capacity(idx.len() * dim);
    let mut ys = Vec::with_capacity(idx.len());
    for &i in idx {
        xs.extend_from_slice(&x[i * dim..(i + 1) * dim]);
        ys.push(y[i]);
    }
    (xs, ys)
}

/// Picks C from [`C_GRID`] by stratified [`CV_FOLDS`]-fold cross-validated
/// accuracy (ties to the smaller C), then refits on all of `x`. Also returns
/// the mean CV accuracy per grid value.
pub fn fit_cv(
    x: &[f64],
    dim: usize,
    y: &[usize],
    classes: usize,
    base: &FitOptions,
    seed: u64,
) -> Result<(LogisticModel, Vec<f64>)> {
    check_inputs(x, dim, y, classes)?;
    let folds = CV_FOLDS.min(y.len());
    if folds < 2 {
        return Err(Error::Evaluation("too few samples to cross-validate".into()));
    }
    let fold_of = stratified_folds(y, classes, folds, seed);

    // per fold, sweep C upward with warm starts
    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == f).collect();
            let (xt, yt) = gather(x, dim, y, &train);
            let (xv, yv) = gather(x, dim, y, &test);
            let prep = prepare(&xt, dim);
            let mut warm: Option<Vec<f64>> = None;
            C_GRID
                .iter()
                .map(|&c| {
                    let opts = FitOptions { c, ..*base };
                    let model = fit_prepared(&prep, dim, &yt, classes, &opts, warm.as_deref());
                    let acc = model.accuracy(&xv, &yv);
                    warm = Some(model.params);
                    acc
                })
                .collect()
        })
        .collect();

    let scores: Vec<f64> = (0..C_GRID.len())
        .map(|ci| per_fold.iter().map(|f| f[ci]).sum::<f64>() / folds as f64)
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let opts = FitOptions {
        c: C_GRID[best],
        ..*base
    };
    let model = fit_prepared(&prepare(x, dim), dim, y, classes, &opts, None);
    Ok((model, scores))
}
