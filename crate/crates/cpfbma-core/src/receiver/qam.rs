//! Gray-mapped square QAM with unit average symbol energy.
//!
//! Supported orders are 4, 16, and 64. A symbol label packs the in-phase
//! axis bits (most significant) ahead of the quadrature bits; each axis uses
//! a reflected Gray code, so nearest-neighbor decision errors cost exactly
//! one bit. Axis levels are the odd integers `±1, ±3, …` scaled so that the
//! constellation's average energy is exactly 1.

use super::ReceiverError;
use crate::{c64, C64};
use crate::CVec;

/// Bits carried by one symbol: `log2(order)`.
pub fn bits_per_symbol(order: usize) -> Result<usize, ReceiverError> {
    match order {
        4 => Ok(2),
        16 => Ok(4),
        64 => Ok(6),
        _ => Err(ReceiverError::UnsupportedQamOrder { order }),
    }
}

fn side(order: usize) -> usize {
    (order as f64).sqrt().round() as usize
}

/// Per-axis amplitude step making the average symbol energy exactly 1.
fn step(order: usize) -> f64 {
    (3.0 / (2.0 * (order as f64 - 1.0))).sqrt()
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

/// Level carried by axis index `i`: descending odd multiples of the step,
/// so index 0 is the most positive level (all-zero bits map to the positive
/// corner).
fn level(i: usize, order: usize) -> f64 {
    let s = side(order);
    (s as f64 - 1.0 - 2.0 * i as f64) * step(order)
}

fn nearest_index(value: f64, order: usize) -> usize {
    let s = side(order);
    let raw = ((s as f64 - 1.0 - value / step(order)) / 2.0).round();
    raw.clamp(0.0, s as f64 - 1.0) as usize
}

/// The symbol for a label whose bits are `[gray(i_I) | gray(i_Q)]`.
pub fn label_to_symbol(label: usize, order: usize) -> Result<C64, ReceiverError> {
    let bits = bits_per_symbol(order)?;
    debug_assert!(label < order);
    let axis_bits = bits / 2;
    let gi = label >> axis_bits;
    let gq = label & ((1 << axis_bits) - 1);
    Ok(c64(
        level(gray_inverse(gi), order),
        level(gray_inverse(gq), order),
    ))
}

/// Hard decision: the label of the constellation point nearest to `value`.
pub fn nearest_label(value: C64, order: usize) -> Result<usize, ReceiverError> {
    let bits = bits_per_symbol(order)?;
    let axis_bits = bits / 2;
    let gi = gray(nearest_index(value.re, order));
    let gq = gray(nearest_index(value.im, order));
    Ok((gi << axis_bits) | gq)
}

/// Maps a bit stream (entries 0/1, length a multiple of `log2(order)`) to
/// unit-average-energy Gray QAM symbols.
pub fn qam_map(bits: &[u8], order: usize) -> Result<CVec, ReceiverError> {
    let per = bits_per_symbol(order)?;
    if bits.len() % per != 0 {
        return Err(ReceiverError::BitLength { len: bits.len(), per_symbol: per });
    }
    let symbols = bits.len() / per;
    let mut out = CVec::zeros(symbols);
    for s in 0..symbols {
        let mut label = 0usize;
        for b in 0..per {
            debug_assert!(bits[s * per + b] <= 1);
            label = (label << 1) | bits[s * per + b] as usize;
        }
        out[s] = label_to_symbol(label, order)?;
    }
    Ok(out)
}

/// Hard-demaps symbols back to bits (inverse of [`qam_map`] without noise).
pub fn qam_demap(symbols: &CVec, order: usize) -> Result<Vec<u8>, ReceiverError> {
    let per = bits_per_symbol(order)?;
    let mut bits = Vec::with_capacity(symbols.len() * per);
    for s in 0..symbols.len() {
        let label = nearest_label(symbols[s], order)?;
        for b in (0..per).rev() {
            bits.push(((label >> b) & 1) as u8);
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qpsk_all_zero_bits_hit_the_positive_corner() {
        let sym = qam_map(&[0, 0], 4).unwrap();
        let expected = c64(1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt());
        assert!((sym[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn average_energy_is_exactly_one() {
        for &order in &[4usize, 16, 64] {
            let mut acc = 0.0;
            for label in 0..order {
                acc += label_to_symbol(label, order).unwrap().norm_sqr();
            }
            assert!((acc / order as f64 - 1.0).abs() < 1e-12, "order {order}");
        }
    }

    #[test]
    fn labels_round_trip_through_map_and_demap() {
        for &order in &[4usize, 16, 64] {
            let per = bits_per_symbol(order).unwrap();
            for label in 0..order {
                let bits: Vec<u8> = (0..per).rev().map(|b| ((label >> b) & 1) as u8).collect();
                let sym = qam_map(&bits, order).unwrap();
                assert_eq!(qam_demap(&sym, order).unwrap(), bits, "order {order} label {label}");
            }
        }
    }

    #[test]
    fn axis_neighbors_differ_in_one_bit() {
        for &order in &[4usize, 16, 64] {
            let s = side(order);
            for i in 0..s - 1 {
                assert_eq!((gray(i) ^ gray(i + 1)).count_ones(), 1, "order {order}");
            }
        }
    }

    #[test]
    fn random_bits_survive_a_noiseless_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &order in &[4usize, 16, 64] {
            let per = bits_per_symbol(order).unwrap();
            let bits: Vec<u8> = (0..per * 2500).map(|_| rng.random::<bool>() as u8).collect();
            let symbols = qam_map(&bits, order).unwrap();
            assert_eq!(qam_demap(&symbols, order).unwrap(), bits);
        }
    }

    #[test]
    fn nearest_label_clamps_outliers_to_the_edge() {
        let label = nearest_label(c64(100.0, -100.0), 16).unwrap();
        let corner = label_to_symbol(label, 16).unwrap();
        let step = step(16);
        assert!((corner.re - 3.0 * step).abs() < 1e-12);
        assert!((corner.im + 3.0 * step).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_lengths_and_orders() {
        assert!(matches!(qam_map(&[0, 1, 0], 4), Err(ReceiverError::BitLength { .. })));
        assert!(matches!(
            qam_map(&[0, 1], 8),
            Err(ReceiverError::UnsupportedQamOrder { .. })
        ));
        assert!(matches!(
            bits_per_symbol(32),
            Err(ReceiverError::UnsupportedQamOrder { .. })
        ));
    }
}
