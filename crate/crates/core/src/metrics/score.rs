use crate::error::{Error, Result};
use crate::numerics::Tensor2D;
use crate::scenes::InstanceMask;

pub const PRECISION_THRESHOLD: f64 = 0.75;

fn check_shapes(map: &Tensor2D, mask: &InstanceMask) -> Result<()> {
    if map.shape() != mask.shape() {
        return Err(Error::shape(format!(
            "map is {}x{}, mask is {}x{}",
            map.rows(),
            map.cols(),
            mask.height(),
            mask.width()
        )));
    }
    Ok(())
}

/// Pixel indices ordered by descending score, ties by ascending row-major
/// index.
pub fn ranking(map: &Tensor2D) -> Vec<usize> {
    let d = map.data();
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    idx
}

/// `ceil(P/100 * n)`, the size of the top-P% set.
pub fn top_count(p: f64, n: usize) -> Result<usize> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::invalid(format!("P = {p} outside (0, 100]")));
    }
    Ok(((p * n as f64) / 100.0).ceil() as usize)
}

pub fn top_perc(map: &Tensor2D, p: f64) -> Result<Vec<usize>> {
    let k = top_count(p, map.len())?;
    let mut r = ranking(map);
    r.truncate(k);
    Ok(r)
}

fn hits(top: &[usize], mask: &InstanceMask) -> usize {
    top.iter().filter(|&&i| mask.bits()[i]).count()
}

pub fn gamepoint_p(map: &Tensor2D, mask: &InstanceMask, p: f64) -> Result<f64> {
    check_shapes(map, mask)?;
    let top = top_perc(map, p)?;
    Ok(hits(&top, mask) as f64 / top.len() as f64)
}

pub fn gamepoint_k(map: &Tensor2D, mask: &InstanceMask, k: usize) -> Result<f64> {
    check_shapes(map, mask)?;
    if k == 0 || k > map.len() {
        return Err(Error::invalid(format!("K = {k} outside [1, {}]", map.len())));
    }
    let mut r = ranking(map);
    r.truncate(k);
    Ok(hits(&r, mask) as f64 / k as f64)
}

/// Probability that a random positive pixel outscores a random negative one,
/// ties counting one half.
pub fn auc(map: &Tensor2D, mask: &InstanceMask) -> Result<f64> {
    check_shapes(map, mask)?;
    let pos = mask.positives();
    let neg = mask.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    // Walk groups of equal scores from low to high, counting in half units.
    let d = map.data();
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut half_units: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && d[order[j]] == d[order[i]] {
            j += 1;
        }
        let (mut gp, mut gn) = (0u64, 0u64);
        for &k in &order[i..j] {
            if mask.bits()[k] {
                gp += 1;
            } else {
                gn += 1;
            }
        }
        half_units += gp * (2 * neg_below + gn);
        neg_below += gn;
        i = j;
    }
    Ok(half_units as f64 / (2 * pos * neg) as f64)
}

/// Mean of the standardized map over mask pixels (population deviation).
pub fn nss(map: &Tensor2D, mask: &InstanceMask) -> Result<f64> {
    check_shapes(map, mask)?;
    if mask.positives() == 0 {
        return Err(Error::EmptyMask);
    }
    let n = map.len() as f64;
    let mean = map.data().iter().sum::<f64>() / n;
    let var = map.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut acc = 0.0;
    for (v, &b) in map.data().iter().zip(mask.bits()) {
        if b {
            acc += (v - mean) / std;
        }
    }
    Ok(acc / mask.positives() as f64)
}

/// Non-interpolated average precision over the deterministic ranking.
pub fn average_precision(map: &Tensor2D, mask: &InstanceMask) -> Result<f64> {
    check_shapes(map, mask)?;
    let pos = mask.positives();
    if pos == 0 {
        return Err(Error::EmptyMask);
    }
    let mut found = 0usize;
    let mut acc = 0.0;
    for (rank, i) in ranking(map).into_iter().enumerate() {
        if mask.bits()[i] {
            found += 1;
            acc += found as f64 / (rank + 1) as f64;
            if found == pos {
                break;
            }
        }
    }
    Ok(acc / pos as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Precision {
    pub value: f64,
    /// True when nothing reached the threshold and the value was defined as 0.
    pub empty_prediction: bool,
}

/// Precision of `normalized >= tau` where the map is min-max normalized
/// (a constant map normalizes to zeros).
pub fn precision_at(map: &Tensor2D, mask: &InstanceMask, tau: f64) -> Result<Precision> {
    check_shapes(map, mask)?;
    let (lo, hi) = (map.min(), map.max());
    let range = hi - lo;
    let (mut tp, mut predicted) = (0usize, 0usize);
    for (v, &b) in map.data().iter().zip(mask.bits()) {
        let norm = if range > 0.0 { (v - lo) / range } else { 0.0 };
        if norm >= tau {
            predicted += 1;
            if b {
                tp += 1;
            }
        }
    }
    Ok(if predicted == 0 {
        Precision {
            value: 0.0,
            empty_prediction: true,
        }
    } else {
        Precision {
            value: tp as f64 / predicted as f64,
            empty_prediction: false,
        }
    })
}
