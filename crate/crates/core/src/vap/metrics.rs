use serde::{Deserialize, Serialize};

use super::VapError;

/// Per-class recall (absent when the class never occurs), overall accuracy
/// and frequency-weighted accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VapMetrics {
    pub counts: [usize; 4],
    pub recall: [Option<f64>; 4],
    pub aacc: f64,
    pub wacc: f64,
}

/// Weighted accuracy from per-class recall and support. Classes with no
/// support are skipped.
pub fn weighted_accuracy(recall: &[f64], support: &[usize]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (r, &n) in recall.iter().zip(support) {
        if n > 0 {
            num += r / n as f64;
            den += 1.0 / n as f64;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Normalised wAcc weight of each class; zero for empty classes.
pub fn class_weights(counts: &[usize; 4]) -> [f64; 4] {
    let inv = counts.map(|n| if n > 0 { 1.0 / n as f64 } else { 0.0 });
    let total: f64 = inv.iter().sum();
    inv.map(|w| if total > 0.0 { w / total } else { 0.0 })
}

pub fn vap_metrics(preds: &[usize], labels: &[usize]) -> Result<VapMetrics, VapError> {
    if preds.len() != labels.len() {
        return Err(VapError::Misaligned { preds: preds.len(), labels: labels.len() });
    }
    if labels.is_empty() {
        return Err(VapError::Empty);
    }
    if let Some(&bad) = preds.iter().chain(labels).find(|&&a| a >= 4) {
        return Err(VapError::BadAction(bad));
    }
    let mut counts = [0usize; 4];
    let mut hits = [0usize; 4];
    for (&p, &l) in preds.iter().zip(labels) {
        counts[l] += 1;
        if p == l {
            hits[l] += 1;
        }
    }
    let recall: [Option<f64>; 4] = std::array::from_fn(|a| (counts[a] > 0).then(|| hits[a] as f64 / counts[a] as f64));
    let r: Vec<f64> = recall.iter().map(|r| r.unwrap_or(0.0)).collect();
    Ok(VapMetrics {
        counts,
        recall,
        aacc: hits.iter().sum::<usize>() as f64 / labels.len() as f64,
        wacc: weighted_accuracy(&r, &counts).expect("at least one label"),
    })
}
