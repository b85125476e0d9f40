//! Pure (graph-free) numeric kernels shared by the differentiable ops.

use super::Tensor2D;
use crate::error::{Error, Result};

/// Numerically stable softmax of one row of logits.
pub fn softmax_row(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyLogits);
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax logits".into()));
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// One output coordinate of a 1-D align-corners interpolation: the two
/// source indices and the weight of the upper one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Tap {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
}

pub(crate) fn align_corners_taps(src: usize, dst: usize) -> Vec<Tap> {
    (0..dst)
        .map(|i| {
            if src == 1 || dst == 1 {
                return Tap {
                    lo: 0,
                    hi: 0,
                    frac: 0.0,
                };
            }
            let pos = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            Tap {
                lo,
                hi,
                frac: pos - lo as f64,
            }
        })
        .collect()
}

/// Bilinear resize with the align-corners convention.
///
/// Corner pixels map onto corner pixels whenever both the source and the
/// target extent of an axis exceed one, so a same-shape resize is the
/// identity.
pub fn bilinear_resize(map: &Tensor2D, target_h: usize, target_w: usize) -> Result<Tensor2D> {
    if map.rows() == 0 || map.cols() == 0 {
        return Err(Error::invalid("cannot resize an empty grid"));
    }
    if target_h == 0 || target_w == 0 {
        return Err(Error::invalid(format!(
            "zero-sized resize target {target_h}x{target_w}"
        )));
    }
    if map.shape() == (target_h, target_w) {
        return Ok(map.clone());
    }
    let ys = align_corners_taps(map.rows(), target_h);
    let xs = align_corners_taps(map.cols(), target_w);
    let mut out = Tensor2D::zeros(target_h, target_w);
    for (r, ty) in ys.iter().enumerate() {
        for (c, tx) in xs.iter().enumerate() {
            let top = lerp(map.get(ty.lo, tx.lo), map.get(ty.lo, tx.hi), tx.frac);
            let bottom = lerp(map.get(ty.hi, tx.lo), map.get(ty.hi, tx.hi), tx.frac);
            out.set(r, c, lerp(top, bottom, ty.frac));
        }
    }
    Ok(out)
}

/// Adjoint of [`bilinear_resize`]: scatters an output-shaped gradient back
/// onto the source grid.
pub(crate) fn bilinear_resize_adjoint(
    grad_out: &Tensor2D,
    src_h: usize,
    src_w: usize,
) -> Tensor2D {
    if grad_out.shape() == (src_h, src_w) {
        return grad_out.clone();
    }
    let ys = align_corners_taps(src_h, grad_out.rows());
    let xs = align_corners_taps(src_w, grad_out.cols());
    let mut out = Tensor2D::zeros(src_h, src_w);
    for (r, ty) in ys.iter().enumerate() {
        for (c, tx) in xs.iter().enumerate() {
            let g = grad_out.get(r, c);
            let d = out.data_mut();
            d[ty.lo * src_w + tx.lo] += g * (1.0 - ty.frac) * (1.0 - tx.frac);
            d[ty.lo * src_w + tx.hi] += g * (1.0 - ty.frac) * tx.frac;
            d[ty.hi * src_w + tx.lo] += g * ty.frac * (1.0 - tx.frac);
            d[ty.hi * src_w + tx.hi] += g * ty.frac * tx.frac;
        }
    }
    out
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        a + (b - a) * t
    }
}
