//! Downstream measurements on trained embeddings.

mod classify;
mod kmeans;
mod link;
mod logistic;
mod mds;
mod report;

pub use classify::{classify_nodes, labelled_samples, ClassificationOutcome, Samples};
pub use kmeans::{kmeans, KMeans, MAX_KMEANS_ITERATIONS};
pub use link::{
    auc, edge_features, make_link_split, predict_links, EdgeOperator, LinkOutcome, LinkSplit,
};
pub use logistic::{fit, fit_cv, FitOptions, LogisticModel, CV_FOLDS, C_GRID};
pub use mds::{classical_mds_2d, reduce_2d, Mds};
pub use report::{apply_baseline, write_reports_csv, EvalReport, Task, REPORT_CSV_HEADER};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// `u·v / (|u| |v|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Row with the highest cosine similarity to `row` among all other rows.
/// Ties go to the lowest row index; zero rows are never chosen.
pub fn most_similar(emb: &EmbeddingMatrix, row: usize) -> Result<(usize, f64)> {
    if emb.num_rows() < 2 {
        return Err(Error::Evaluation("need at least two rows".into()));
    }
    let target = emb.row(row);
    let mut best: Option<(usize, f64)> = None;
    for (i, other) in emb.rows().enumerate() {
        if i == row {
            continue;
        }
        let score = match cosine_similarity(target, other) {
            Ok(s) => s,
            Err(Error::ZeroVector) if target.iter().any(|&x| x != 0.0) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.ok_or(Error::ZeroVector)
}

/// Fraction of positions where `predicted` agrees with `truth` under the best
/// relabelling of the predicted clusters (brute force over permutations, up
/// to 8 clusters).
pub fn community_match(predicted: &[usize], truth: &[usize], k: usize) -> Result<usize> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if k > 8 {
        return Err(Error::Evaluation(format!("{k} clusters is too many to permute")));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= k || t >= k {
            return Err(Error::Evaluation(format!("label outside 0..{k}")));
        }
        confusion[p][t] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |perm| {
        let hits = (0..k).map(|p| confusion[p][perm[p]]).sum();
        best = best.max(hits);
    });
    Ok(best)
}

fn permute(items: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(
            cosine_similarity(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap(),
            -1.0
        );
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn matrix(rows: &[&[f64]]) -> EmbeddingMatrix {
        let dim = rows[0].len();
        let tokens = (0..rows.len()).map(|i| i.to_string()).collect();
        EmbeddingMatrix::from_rows(tokens, dim, rows.concat()).unwrap()
    }

    #[test]
    fn most_similar_identical_rows() {
        let m = matrix(&[&[1.0, 2.0], &[1.0, 2.0], &[-2.0, 1.0]]);
        let (i, s) = most_similar(&m, 0).unwrap();
        assert_eq!(i, 1);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn most_similar_orthonormal_ties_to_lowest() {
        let m = matrix(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(most_similar(&m, 2).unwrap(), (0, 0.0));
        assert_eq!(most_similar(&m, 0).unwrap(), (1, 0.0));
    }

    #[test]
    fn community_match_uses_best_permutation() {
        assert_eq!(community_match(&[1, 1, 0, 0], &[0, 0, 1, 1], 2).unwrap(), 4);
        assert_eq!(community_match(&[0, 1, 0, 0], &[0, 0, 1, 1], 2).unwrap(), 3);
        assert_eq!(
            community_match(&[2, 2, 0, 1, 1], &[0, 0, 1, 2, 1], 3).unwrap(),
            4
        );
    }
}
