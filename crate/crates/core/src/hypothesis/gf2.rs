//! Achievable parity labelings by row reduction over GF(2).
//!
//! For unique points `x_1..x_u` the labeling of mask `a` is `X a`, so the
//! achievable labelings form the column space of `X` restricted to the
//! allowed coordinates. Each labeling gets its numerically smallest preimage
//! mask as witness: a particular preimage reduced by an echelon basis of
//! the kernel, highest leading bit first.

use crate::model::BitVector;

/// A vector over GF(2) of arbitrary length.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Gf2Vec {
    words: Vec<u64>,
}

impl Gf2Vec {
    fn zeros(len: usize) -> Self {
        Gf2Vec { words: vec![0; len.div_ceil(64)] }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn xor_with(&mut self, other: &Gf2Vec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn lowest_set(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

pub(super) struct ParityLabelings {
    len: usize,
    /// Independent image vectors paired with a mask realizing each.
    basis: Vec<(Gf2Vec, u64)>,
    /// Kernel masks in echelon form, leading (highest) bits strictly decreasing.
    kernel: Vec<u64>,
}

impl ParityLabelings {
    /// `points` are the unique sample points; `support` is the number of
    /// leading coordinates a mask may use.
    pub(super) fn new(points: &[BitVector], n: usize, support: usize) -> Self {
        let len = points.len();
        let mut basis: Vec<(Gf2Vec, u64, usize)> = Vec::new();
        let mut kernel_raw: Vec<u64> = Vec::new();
        for coord in 0..support {
            let mask_bit = 1u64 << (n - 1 - coord);
            let mut image = Gf2Vec::zeros(len);
            for (i, x) in points.iter().enumerate() {
                if x.get(coord) {
                    image.set(i);
                }
            }
            let mut mask = mask_bit;
            for (b_img, b_mask, pivot) in &basis {
                if image.get(*pivot) {
                    image.xor_with(b_img);
                    mask ^= b_mask;
                }
            }
            match image.lowest_set() {
                Some(pivot) => {
                    // Keep earlier basis vectors free of the new pivot.
                    for (b_img, b_mask, _) in basis.iter_mut() {
                        if b_img.get(pivot) {
                            b_img.xor_with(&image);
                            *b_mask ^= mask;
                        }
                    }
                    basis.push((image, mask, pivot));
                }
                None => kernel_raw.push(mask),
            }
        }
        ParityLabelings {
            len,
            basis: basis.into_iter().map(|(v, m, _)| (v, m)).collect(),
            kernel: echelon(kernel_raw),
        }
    }

    pub(super) fn rank(&self) -> usize {
        self.basis.len()
    }

    fn min_in_coset(&self, mut mask: u64) -> u64 {
        for &k in &self.kernel {
            let lead = 63 - k.leading_zeros();
            if mask >> lead & 1 == 1 {
                mask ^= k;
            }
        }
        mask
    }

    /// Every achievable labeling with its smallest realizing mask word.
    pub(super) fn enumerate(&self) -> Vec<(Vec<bool>, u64)> {
        let r = self.rank();
        let mut out = Vec::with_capacity(1 << r);
        for combo in 0u64..1 << r {
            let mut image = Gf2Vec::zeros(self.len);
            let mut mask = 0u64;
            for (i, (b_img, b_mask)) in self.basis.iter().enumerate() {
                if combo >> i & 1 == 1 {
                    image.xor_with(b_img);
                    mask ^= b_mask;
                }
            }
            let labels = (0..self.len).map(|i| image.get(i)).collect();
            out.push((labels, self.min_in_coset(mask)));
        }
        out
    }
}

fn echelon(mut vectors: Vec<u64>) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    while let Some(pos) = (0..vectors.len()).max_by_key(|&i| vectors[i]) {
        let top = vectors.swap_remove(pos);
        if top == 0 {
            break;
        }
        let lead = 63 - top.leading_zeros();
        for v in vectors.iter_mut() {
            if *v >> lead & 1 == 1 {
                *v ^= top;
            }
        }
        out.push(top);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echelon_has_distinct_decreasing_leads() {
        let e = echelon(vec![0b1100, 0b1010, 0b0110, 0b0001]);
        let leads: Vec<u32> = e.iter().map(|v| 63 - v.leading_zeros()).collect();
        assert!(leads.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn two_points_two_bits() {
        let pts: Vec<BitVector> = ["00", "11"].iter().map(|s| s.parse().unwrap()).collect();
        let pl = ParityLabelings::new(&pts, 2, 2);
        let mut all = pl.enumerate();
        all.sort();
        // Only (0,0) and (0,1) are achievable; (0,0) via mask 00.
        assert_eq!(all, vec![(vec![false, false], 0), (vec![false, true], 0b01)]);
    }
}
