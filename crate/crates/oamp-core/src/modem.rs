//! QAM constellations, symbol mapping, hard decisions and error metrics.

use alloc::{vec, vec::Vec};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmath;

/// Square QAM constellation with unit average energy.
///
/// Points are the Cartesian product of `pam_levels` over the real and
/// imaginary axes, indexed re-major: `index = re_idx * K + im_idx` where
/// `K = pam_levels.len()`. Bit labels are Gray codes per axis, concatenated
/// as (re bits << bits_per_axis) | im bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    points: Vec<Complex64>,
    pam_levels: Vec<f64>,
    bit_labels: Vec<u32>,
    bits_per_symbol: usize,
}

fn gray(i: usize) -> u32 {
    (i ^ (i >> 1)) as u32
}

/// Build a QAM-4 or QAM-16 constellation.
pub fn qam_constellation(order: usize) -> Result<Constellation> {
    let pam_levels: Vec<f64> = match order {
        4 => {
            let a = 1.0 / fmath::sqrt(2.0);
            vec![-a, a]
        }
        16 => {
            let a = 1.0 / fmath::sqrt(10.0);
            vec![-3.0 * a, -a, a, 3.0 * a]
        }
        _ => return Err(Error::UnsupportedOrder(order)),
    };
    let k = pam_levels.len();
    let bits_per_axis = k.trailing_zeros() as usize;
    let mut points = Vec::with_capacity(order);
    let mut bit_labels = Vec::with_capacity(order);
    for (ri, &re) in pam_levels.iter().enumerate() {
        for (ii, &im) in pam_levels.iter().enumerate() {
            points.push(Complex64::new(re, im));
            bit_labels.push((gray(ri) << bits_per_axis) | gray(ii));
        }
    }
    Ok(Constellation {
        order,
        points,
        pam_levels,
        bit_labels,
        bits_per_symbol: 2 * bits_per_axis,
    })
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Per-axis PAM amplitudes, ascending.
    pub fn pam_levels(&self) -> &[f64] {
        &self.pam_levels
    }

    pub fn bit_labels(&self) -> &[u32] {
        &self.bit_labels
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// PAM levels per axis (2 for QAM-4, 4 for QAM-16).
    pub fn levels_per_axis(&self) -> usize {
        self.pam_levels.len()
    }

    /// Split a symbol index into (re level index, im level index).
    #[inline]
    pub fn split_index(&self, index: usize) -> (usize, usize) {
        let k = self.pam_levels.len();
        (index / k, index % k)
    }

    /// Combine per-axis level indices into a symbol index.
    #[inline]
    pub fn join_index(&self, re_idx: usize, im_idx: usize) -> usize {
        re_idx * self.pam_levels.len() + im_idx
    }
}

/// Look symbol indices up as complex points.
pub fn modulate(indices: &[u16], c: &Constellation) -> Result<Vec<Complex64>> {
    indices
        .iter()
        .map(|&i| {
            c.points
                .get(i as usize)
                .copied()
                .ok_or(Error::SymbolIndexOutOfRange {
                    index: i as usize,
                    order: c.order,
                })
        })
        .collect()
}

/// Nearest PAM level by absolute distance; ties go to the smaller index.
#[inline]
pub fn nearest_pam_index(v: f64, pam_levels: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &a) in pam_levels.iter().enumerate() {
        let d = fmath::abs(v - a);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Hard decision per element: index of the closest constellation point,
/// ties broken toward the smaller index.
pub fn nearest_symbol(xhat: &[Complex64], c: &Constellation) -> Vec<u16> {
    xhat.iter()
        .map(|z| {
            let mut best = 0u16;
            let mut best_d = f64::INFINITY;
            for (i, p) in c.points.iter().enumerate() {
                let d = (z - p).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = i as u16;
                }
            }
            best
        })
        .collect()
}

/// Hard decision from a real-equivalent estimate: nearest PAM level per
/// dimension, recombined into symbol indices.
pub fn decide_real_equivalent(x_r: &[f64], c: &Constellation) -> Vec<u16> {
    let n = x_r.len() / 2;
    (0..n)
        .map(|i| {
            let re_idx = nearest_pam_index(x_r[i], &c.pam_levels);
            let im_idx = nearest_pam_index(x_r[i + n], &c.pam_levels);
            c.join_index(re_idx, im_idx) as u16
        })
        .collect()
}

/// Symbol error rate.
pub fn ser(pred: &[u16], truth: &[u16]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "ser over {} predictions vs {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let errors = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / pred.len() as f64)
}

/// Bit error rate over Gray labels.
pub fn ber(pred: &[u16], truth: &[u16], c: &Constellation) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "ber over {} predictions vs {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let mut bit_errors = 0u64;
    for (&p, &t) in pred.iter().zip(truth) {
        let lp = c.bit_labels[p as usize];
        let lt = c.bit_labels[t as usize];
        bit_errors += (lp ^ lt).count_ones() as u64;
    }
    Ok(bit_errors as f64 / (pred.len() * c.bits_per_symbol) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn qam4_points_and_energy() {
        let c = qam_constellation(4).unwrap();
        assert_eq!(c.order(), 4);
        let a = 1.0 / 2f64.sqrt();
        assert_eq!(c.pam_levels(), &[-a, a]);
        let energy: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((energy - 1.0).abs() < 1e-12);
        for p in c.points() {
            assert!((p.re.abs() - a).abs() < 1e-15);
            assert!((p.im.abs() - a).abs() < 1e-15);
        }
    }

    #[test]
    fn qam16_energy_is_unit() {
        let c = qam_constellation(16).unwrap();
        let energy: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_order_rejected() {
        assert_eq!(qam_constellation(64), Err(Error::UnsupportedOrder(64)));
    }

    #[test]
    fn gray_labels_adjacent_along_axes() {
        for order in [4usize, 16] {
            let c = qam_constellation(order).unwrap();
            let k = c.levels_per_axis();
            for ri in 0..k {
                for ii in 0..k {
                    let here = c.bit_labels()[c.join_index(ri, ii)];
                    if ri + 1 < k {
                        let right = c.bit_labels()[c.join_index(ri + 1, ii)];
                        assert_eq!((here ^ right).count_ones(), 1);
                    }
                    if ii + 1 < k {
                        let up = c.bit_labels()[c.join_index(ri, ii + 1)];
                        assert_eq!((here ^ up).count_ones(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn modulate_roundtrips_through_nearest() {
        let mut rng = Rng::new(2);
        for order in [4usize, 16] {
            let c = qam_constellation(order).unwrap();
            let idx: alloc::vec::Vec<u16> =
                (0..64).map(|_| rng.next_index(order) as u16).collect();
            let x = modulate(&idx, &c).unwrap();
            assert_eq!(nearest_symbol(&x, &c), idx);
        }
    }

    #[test]
    fn modulate_rejects_out_of_range() {
        let c = qam_constellation(4).unwrap();
        assert!(matches!(
            modulate(&[4], &c),
            Err(Error::SymbolIndexOutOfRange { index: 4, order: 4 })
        ));
    }

    #[test]
    fn nearest_symbol_tie_breaks_to_smallest_index() {
        let c = qam_constellation(4).unwrap();
        let out = nearest_symbol(&[Complex64::new(0.0, 0.0)], &c);
        assert_eq!(out, vec![0]);
    }

    #[test]
    fn nearest_symbol_agrees_with_exhaustive_scan() {
        let c = qam_constellation(4).unwrap();
        let z = Complex64::new(0.6, 0.8);
        // Oracle: explicit distance over all four points.
        let oracle = c
            .points()
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (z - *a).norm_sqr().partial_cmp(&(z - *b).norm_sqr()).unwrap()
            })
            .map(|(i, _)| i as u16)
            .unwrap();
        assert_eq!(nearest_symbol(&[z], &c), vec![oracle]);
        let a = 1.0 / 2f64.sqrt();
        assert_eq!(c.points()[oracle as usize], Complex64::new(a, a));
    }

    #[test]
    fn ser_counts_mismatches() {
        assert_eq!(ser(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(
            ser(&[0, 0, 0, 0, 0, 0, 0, 1], &[0, 0, 0, 0, 0, 0, 0, 0]).unwrap(),
            0.125
        );
        assert!(ser(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn ber_counts_gray_bits() {
        let c = qam_constellation(4).unwrap();
        // Adjacent along the real axis: exactly one of two bits differs.
        let p = vec![c.join_index(0, 0) as u16];
        let t = vec![c.join_index(1, 0) as u16];
        assert_eq!(ber(&p, &t, &c).unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn ser_is_permutation_covariant(seed in 0u64..1000) {
            let mut rng = Rng::new(seed);
            let n = 32;
            let a: alloc::vec::Vec<u16> = (0..n).map(|_| rng.next_index(4) as u16).collect();
            let b: alloc::vec::Vec<u16> = (0..n).map(|_| rng.next_index(4) as u16).collect();
            let perm = rng.shuffled_indices(n);
            let ap: alloc::vec::Vec<u16> = perm.iter().map(|&i| a[i]).collect();
            let bp: alloc::vec::Vec<u16> = perm.iter().map(|&i| b[i]).collect();
            prop_assert_eq!(ser(&a, &b).unwrap(), ser(&ap, &bp).unwrap());
        }

        #[test]
        fn ber_bounded_by_ser(seed in 0u64..1000) {
            let c = qam_constellation(16).unwrap();
            let mut rng = Rng::new(seed);
            let n = 64;
            let a: alloc::vec::Vec<u16> = (0..n).map(|_| rng.next_index(16) as u16).collect();
            let b: alloc::vec::Vec<u16> = (0..n).map(|_| rng.next_index(16) as u16).collect();
            let s = ser(&a, &b).unwrap();
            let r = ber(&a, &b, &c).unwrap();
            // Each wrong symbol flips between 1 and bits_per_symbol bits.
            prop_assert!(r <= s + 1e-15);
            prop_assert!(r >= s / c.bits_per_symbol() as f64 - 1e-15);
        }
    }
}
