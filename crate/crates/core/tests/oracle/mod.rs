//! Brute-force reference implementations of the localization metrics.
//! Each works pixel by pixel from the definitions, with no sorting, and
//! follows the same tie rule: higher score first, then lower row-major index.

#![allow(dead_code)]

/// Number of pixels ranked ahead of pixel `i`.
pub fn rank(scores: &[f64], i: usize) -> usize {
    (0..scores.len())
        .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
        .count()
}

pub fn top_count(p: f64, n: usize) -> usize {
    ((p * n as f64) / 100.0).ceil() as usize
}

pub fn gamepoint_k(scores: &[f64], mask: &[bool], k: usize) -> f64 {
    let hits = (0..scores.len()).filter(|&i| rank(scores, i) < k && mask[i]).count();
    hits as f64 / k as f64
}

pub fn gamepoint_p(scores: &[f64], mask: &[bool], p: f64) -> f64 {
    gamepoint_k(scores, mask, top_count(p, scores.len()))
}

/// `None` when the mask has no positives or no negatives.
pub fn auc(scores: &[f64], mask: &[bool]) -> Option<f64> {
    let pos = mask.iter().filter(|&&b| b).count() as u64;
    let neg = mask.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut half_units = 0u64;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if mask[i] && !mask[j] {
                if scores[i] > scores[j] {
                    half_units += 2;
                } else if scores[i] == scores[j] {
                    half_units += 1;
                }
            }
        }
    }
    Some(half_units as f64 / (2 * pos * neg) as f64)
}

/// `None` for an empty mask or a constant map.
pub fn nss(scores: &[f64], mask: &[bool]) -> Option<f64> {
    let n = scores.len() as f64;
    let pos = mask.iter().filter(|&&b| b).count();
    if pos == 0 {
        return None;
    }
    let mean = scores.iter().sum::<f64>() / n;
    let std = (scores.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if std == 0.0 {
        return None;
    }
    let mut acc = 0.0;
    for i in 0..scores.len() {
        if mask[i] {
            acc += (scores[i] - mean) / std;
        }
    }
    Some(acc / pos as f64)
}

/// `None` for an empty mask.
pub fn average_precision(scores: &[f64], mask: &[bool]) -> Option<f64> {
    let pos = mask.iter().filter(|&&b| b).count();
    if pos == 0 {
        return None;
    }
    let mut acc = 0.0;
    for r in 0..scores.len() {
        // the pixel holding rank r
        let i = (0..scores.len()).find(|&i| rank(scores, i) == r).unwrap();
        if mask[i] {
            let found = (0..scores.len()).filter(|&j| mask[j] && rank(scores, j) <= r).count();
            acc += found as f64 / (r + 1) as f64;
        }
    }
    Some(acc / pos as f64)
}

/// Precision and whether nothing was predicted.
pub fn precision_at(scores: &[f64], mask: &[bool], tau: f64) -> (f64, bool) {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut tp = 0;
    let mut predicted = 0;
    for i in 0..scores.len() {
        let v = if hi > lo { (scores[i] - lo) / (hi - lo) } else { 0.0 };
        if v >= tau {
            predicted += 1;
            if mask[i] {
                tp += 1;
            }
        }
    }
    if predicted == 0 {
        (0.0, true)
    } else {
        (tp as f64 / predicted as f64, false)
    }
}
