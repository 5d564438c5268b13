//! k-nearest-neighbour baseline on deepest-level approximation coefficients.

use super::preprocess::FeatureExample;
use crate::data::ActivityLabel;
use crate::error::{Error, Result};

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Majority vote among the `k` nearest points (Euclidean). Among classes
/// tied on votes, the one owning the nearest neighbour wins; equal distances
/// go to the earlier training point.
pub fn knn_vote(train: &[(Vec<f64>, usize)], query: &[f64], k: usize) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::invalid("k-NN training set is empty"));
    }
    if k == 0 || k > train.len() {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={}", train.len())));
    }
    if let Some((x, _)) = train.iter().find(|(x, _)| x.len() != query.len()) {
        return Err(Error::shape(format!(
            "feature length {} does not match query length {}",
            x.len(),
            query.len()
        )));
    }
    let mut ranked: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, (x, _))| (squared_distance(x, query), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let neighbours: Vec<usize> = ranked[..k].iter().map(|&(_, i)| train[i].1).collect();
    let votes = |c: usize| neighbours.iter().filter(|&&n| n == c).count();
    let top = neighbours.iter().map(|&c| votes(c)).max().expect("k >= 1");
    Ok(*neighbours
        .iter()
        .find(|&&c| votes(c) == top)
        .expect("some class reaches the top count"))
}

pub fn knn_classify(train: &[FeatureExample], query: &FeatureExample, k: usize) -> Result<ActivityLabel> {
    let points = train
        .iter()
        .map(|ex| {
            let label = ex.label.ok_or_else(|| {
                Error::invalid(format!("training example {} is unlabeled", ex.provenance.recording_id))
            })?;
            Ok((ex.knn_features(), usize::from(label.class_id())))
        })
        .collect::<Result<Vec<_>>>()?;
    let class = knn_vote(&points, &query.knn_features(), k)?;
    ActivityLabel::new(class as u8)
}
