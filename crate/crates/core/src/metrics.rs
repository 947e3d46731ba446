//! Ranking and classification metrics.

/// Area under the ROC curve as the Mann-Whitney rank statistic, with tied
/// scores receiving their average rank. `None` when only one class is present.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based: positions i..=j share the average rank
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Fraction of predictions on the correct side of 0.5 (`p > 0.5` predicts 1).
pub fn accuracy(probs: &[f64], labels: &[bool]) -> Option<f64> {
    if probs.is_empty() {
        return None;
    }
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| (p > 0.5) == l)
        .count();
    Some(hits as f64 / probs.len() as f64)
}

pub fn mse(pred: &[f64], target: &[f64]) -> Option<f64> {
    if pred.is_empty() {
        return None;
    }
    let s: f64 = pred.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Some(s / pred.len() as f64)
}
