//! Evaluation metrics: MAE, RMSE, Mann-Whitney AUC, thresholded accuracy.

use crate::error::{Error, Result};

fn check_lengths(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::contract(op, "empty input"));
    }
    if a != b {
        return Err(Error::shape(op, format!("{} predictions vs {} targets", a, b)));
    }
    Ok(())
}

/// Mean absolute error (1/m)·Σ|p − a|.
pub fn mae(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths("mae", preds.len(), targets.len())?;
    Ok(preds
        .iter()
        .zip(targets)
        .map(|(p, a)| (p - a).abs())
        .sum::<f64>()
        / preds.len() as f64)
}

/// Root mean squared error √((1/m)·Σ(p − a)²).
pub fn rmse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths("rmse", preds.len(), targets.len())?;
    Ok((preds
        .iter()
        .zip(targets)
        .map(|(p, a)| (p - a) * (p - a))
        .sum::<f64>()
        / preds.len() as f64)
        .sqrt())
}

/// Mann-Whitney AUC: P(score⁺ > score⁻) + ½·P(tie), computed through
/// tie-averaged ranks. Errs unless both classes are present.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths("auc", scores.len(), labels.len())?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both a positive and a negative example".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    // tie-averaged ranks (1-based)
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Fraction of examples with `(score >= threshold) == label`.
pub fn accuracy(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    check_lengths("accuracy", scores.len(), labels.len())?;
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &l)| (s >= threshold) == l)
        .count();
    Ok(correct as f64 / scores.len() as f64)
}
