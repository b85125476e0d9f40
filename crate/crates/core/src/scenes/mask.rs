use crate::error::{Error, Result};
use crate::numerics::Tensor2D;

/// Binary H×W grid marking the target object's cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceMask {
    h: usize,
    w: usize,
    bits: Vec<bool>,
}

impl InstanceMask {
    pub fn empty(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            bits: vec![false; h * w],
        }
    }

    pub fn from_cells(h: usize, w: usize, cells: &[(usize, usize)]) -> Result<Self> {
        let mut m = Self::empty(h, w);
        for &(r, c) in cells {
            if r >= h || c >= w {
                return Err(Error::invalid(format!("mask cell ({r},{c}) outside {h}x{w}")));
            }
            m.bits[r * w + c] = true;
        }
        Ok(m)
    }

    pub fn from_bits(h: usize, w: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != h * w {
            return Err(Error::shape(format!("{} mask bits for {h}x{w}", bits.len())));
        }
        Ok(Self { h, w, bits })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.w + c]
    }

    /// Row-major flattened bits.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn positives(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(k, _)| (k / self.w, k % self.w))
            .collect()
    }

    pub fn to_tensor(&self) -> Tensor2D {
        Tensor2D::from_raw(
            self.h,
            self.w,
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }

    /// Foreground runs as `(start, length)` over the row-major flattening.
    pub fn to_rle(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut k = 0;
        while k < self.bits.len() {
            if self.bits[k] {
                let start = k;
                while k < self.bits.len() && self.bits[k] {
                    k += 1;
                }
                runs.push((start, k - start));
            } else {
                k += 1;
            }
        }
        runs
    }

    pub fn from_rle(h: usize, w: usize, runs: &[(usize, usize)]) -> Result<Self> {
        let mut m = Self::empty(h, w);
        let mut prev_end = 0;
        for (i, &(start, len)) in runs.iter().enumerate() {
            if len == 0 || start + len > h * w || (i > 0 && start <= prev_end) {
                return Err(Error::invalid(format!("malformed mask run {i}: ({start}, {len})")));
            }
            m.bits[start..start + len].fill(true);
            prev_end = start + len;
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rle_of_rectangle() {
        let m = InstanceMask::from_cells(4, 5, &[(1, 1), (1, 2), (2, 1), (2, 2)]).unwrap();
        assert_eq!(m.to_rle(), vec![(6, 2), (11, 2)]);
        assert_eq!(m.positives(), 4);
        assert_eq!(InstanceMask::from_rle(4, 5, &m.to_rle()).unwrap(), m);
    }

    #[test]
    fn rejects_bad_runs() {
        assert!(InstanceMask::from_rle(2, 2, &[(3, 2)]).is_err());
        assert!(InstanceMask::from_rle(2, 2, &[(0, 0)]).is_err());
        // adjacent runs would have been merged by the encoder
        assert!(InstanceMask::from_rle(2, 2, &[(0, 1), (1, 1)]).is_err());
    }

    proptest! {
        #[test]
        fn rle_round_trip(bits in prop::collection::vec(any::<bool>(), 1..80), w in 1usize..9) {
            let h = bits.len().div_ceil(w);
            let mut padded = bits.clone();
            padded.resize(h * w, false);
            let m = InstanceMask::from_bits(h, w, padded).unwrap();
            prop_assert_eq!(InstanceMask::from_rle(h, w, &m.to_rle()).unwrap(), m);
        }
    }
}
