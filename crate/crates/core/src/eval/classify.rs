use rand::seq::SliceRandom;
use serde::Serialize;

use super::logistic::{fit_cv, FitOptions};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampling::stream_rng;

/// Row-major feature matrix with one class id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub x: Vec<f64>,
    pub dim: usize,
    pub y: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

/// Embedding rows of every labelled node, in node order.
pub fn labelled_samples(emb: &EmbeddingMatrix, graph: &Graph) -> Result<Samples> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for node in graph.nodes() {
        if let Some(label) = graph.label(node) {
            let token = graph.token(node);
            let v = emb
                .vector(token)
                .ok_or_else(|| Error::MissingEmbedding(token.to_string()))?;
            x.extend_from_slice(v);
            y.push(label as usize);
        }
    }
    if y.is_empty() {
        return Err(Error::Evaluation("graph has no labelled nodes".into()));
    }
    Ok(Samples {
        x,
        dim: emb.dim(),
        y,
        class_names: graph.label_names().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationOutcome {
    /// Test accuracy in percent.
    pub accuracy: f64,
    pub best_c: f64,
    pub cv_scores: Vec<f64>,
    pub train_size: usize,
    pub test_size: usize,
}

/// Stratified split with `train_ratio` of each class for training (at least
/// one node of each class on both sides), cross-validated logistic
/// regression on the training part, accuracy on the rest.
pub fn classify_nodes(
    samples: &Samples,
    train_ratio: f64,
    seed: u64,
) -> Result<ClassificationOutcome> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train ratio must lie in (0, 1), got {train_ratio}"
        )));
    }
    let n_classes = samples.y.iter().max().map_or(0, |&m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in samples.y.iter().enumerate() {
        members[c].push(i);
    }
    // classes absent from the samples are dropped and ids compacted
    let present: Vec<usize> = (0..n_classes).filter(|&c| !members[c].is_empty()).collect();
    if present.len() < 2 {
        return Err(Error::Evaluation(format!(
            "need at least two classes, found {}",
            present.len()
        )));
    }
    for &c in &present {
        if members[c].len() < 2 {
            let class = samples
                .class_names
                .get(c)
                .cloned()
                .unwrap_or_else(|| c.to_string());
            return Err(Error::ClassTooSmall {
                class,
                count: members[c].len(),
            });
        }
    }
    let mut compact = vec![usize::MAX; n_classes];
    for (new, &old) in present.iter().enumerate() {
        compact[old] = new;
    }

    let mut rng = stream_rng(seed, 0x5350_4c54);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for &c in &present {
        let mut idx = members[c].clone();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_train = ((n as f64 * train_ratio).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    if test.is_empty() {
        return Err(Error::Evaluation("empty test set".into()));
    }

    let take = |idx: &[usize]| {
        let mut x = Vec::with_capacity(idx.len() * samples.dim);
        let mut y = Vec::with_capacity(idx.len());
        for &i in idx {
            x.extend_from_slice(samples.row(i));
            y.push(compact[samples.y[i]]);
        }
        (x, y)
    };
    let (xt, yt) = take(&train);
    let (xv, yv) = take(&test);
    let (model, cv_scores) = fit_cv(
        &xt,
        samples.dim,
        &yt,
        present.len(),
        &FitOptions::default(),
        seed,
    )?;
    Ok(ClassificationOutcome {
        accuracy: model.accuracy(&xv, &yv),
        best_c: model.c,
        cv_scores,
        train_size: train.len(),
        test_size: test.len(),
    })
}
