//! Physical transmit chain and its circular-model equivalent.
//!
//! [`transmit_physical`] runs the literal pipeline — prepend a cyclic prefix,
//! zero-insert upsample, shape with the synthesis filter, pass through the
//! multipath channel as *linear* convolutions — while [`transmit_circular`]
//! evaluates the circulant model `Σ_m H_m F_m U x_m` the analysis works with.
//! With `L_g·P ≥ N_f + L_h − 1` the window starting `L_g·P` samples into the
//! physical output equals the circular model exactly, and in a stream of
//! consecutive blocks the previous block's convolution tail dies out inside
//! the prefix. Tests pin both equalities and locate the exact failure
//! boundary of an undersized prefix.

use crate::model::{circulant_spectrum, ChannelSet, FilterBank, SystemConfig};
use crate::numerics::dft_matrix;
use crate::{c64, CVec, C64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// One draw from the standard circular complex Gaussian `CN(0, 1)`
/// (`E|z|² = 1`), via the polar Box–Muller map.
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let radius = (-(1.0 - rng.random::<f64>()).ln()).sqrt();
    let angle = TAU * rng.random::<f64>();
    c64(radius * angle.cos(), radius * angle.sin())
}

/// Deterministic Rayleigh channel draws: `L_h` i.i.d. `CN(0, 1/L_h)` taps per
/// user, then normalized to exactly unit energy so that `P_m/N0` is the
/// received SNR by construction.
pub fn generate_channels(config: &SystemConfig, seed: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (config.channel_len as f64).sqrt();
    let taps = (0..config.num_users)
        .map(|_| {
            let mut h =
                CVec::from_fn(config.channel_len, |_, _| complex_gaussian(&mut rng).scale(scale));
            let norm = h.norm();
            h /= c64(norm, 0.0);
            h
        })
        .collect();
    ChannelSet { taps }
}

/// Noiseless circular-model output `Σ_m H_m F_m U x_m ∈ C^{NP}`, evaluated
/// in the DFT basis where both circulants are diagonal.
pub fn transmit_circular(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    symbols: &[CVec],
) -> CVec {
    let (n, p) = (config.block_len, config.upsample);
    let np = n * p;
    assert_eq!(symbols.len(), config.num_users, "one symbol block per user");
    let w = dft_matrix(np);
    let mut spectrum = CVec::zeros(np);
    for m in 0..config.num_users {
        assert_eq!(symbols[m].len(), n, "symbol blocks carry N entries");
        let h_spec = circulant_spectrum(&channels.taps[m], np);
        let f_spec = circulant_spectrum(&filters.coeffs[m], np);
        let mut upsampled = CVec::zeros(np);
        for k in 0..n {
            upsampled[k * p] = symbols[m][k];
        }
        let x_spec = &w * upsampled;
        for k in 0..np {
            spectrum[k] += h_spec[k] * f_spec[k] * x_spec[k];
        }
    }
    w.adjoint() * spectrum
}

fn linear_conv(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() + b.len() - 1);
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn transmit_stream_with_cp(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    blocks: &[Vec<CVec>],
    cp_symbols: usize,
) -> CVec {
    let (n, p) = (config.block_len, config.upsample);
    assert!(!blocks.is_empty());
    let body = (n + cp_symbols) * p;
    let out_len = body * blocks.len() + config.filter_len - 1 + config.channel_len - 1;
    let mut received = CVec::zeros(out_len);
    for m in 0..config.num_users {
        // Blocks abut in time; each is CP-extended, so within a block,
        // position k carries x[(k - cp_symbols) mod N].
        let mut upsampled = CVec::zeros(body * blocks.len());
        for (b, symbols) in blocks.iter().enumerate() {
            assert_eq!(symbols.len(), config.num_users, "one symbol block per user");
            assert_eq!(symbols[m].len(), n, "symbol blocks carry N entries");
            for k in 0..n + cp_symbols {
                let idx = ((k as isize - cp_symbols as isize).rem_euclid(n as isize)) as usize;
                upsampled[b * body + k * p] = symbols[m][idx];
            }
        }
        let shaped = linear_conv(&upsampled, &filters.coeffs[m]);
        let through = linear_conv(&shaped, &channels.taps[m]);
        received += through;
    }
    received
}

/// Noiseless single-block physical transmit chain: CP prepend, upsample,
/// filter, channel, all as linear convolutions; output keeps the full tail.
pub fn transmit_physical(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    symbols: &[CVec],
) -> CVec {
    transmit_stream_with_cp(config, channels, filters, &[symbols.to_vec()], config.cp_len())
}

/// The receiver's observation window: `NP` samples starting after the cyclic
/// prefix, where the physical chain matches the circular model.
pub fn receive_window(signal: &CVec, config: &SystemConfig) -> CVec {
    let start = config.cp_len() * config.upsample;
    let np = config.total_len();
    assert!(signal.len() >= start + np, "signal shorter than prefix plus block");
    CVec::from_fn(np, |k, _| signal[start + k])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(m: usize, n: usize, p: usize, nf: usize, lh: usize) -> SystemConfig {
        SystemConfig {
            num_users: m,
            block_len: n,
            upsample: p,
            filter_len: nf,
            channel_len: lh,
            noise_power: 0.2,
            user_power: vec![1.0; m],
            qam_order: 4,
            seed: 2,
        }
    }

    fn random_symbols(config: &SystemConfig, seed: u64) -> Vec<CVec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..config.num_users)
            .map(|_| CVec::from_fn(config.block_len, |_, _| complex_gaussian(&mut rng)))
            .collect()
    }

    #[test]
    fn gaussian_draws_have_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 20_000;
        let mut mean = C64::ZERO;
        let mut power = 0.0;
        for _ in 0..draws {
            let z = complex_gaussian(&mut rng);
            assert!(z.re.is_finite() && z.im.is_finite());
            mean += z;
            power += z.norm_sqr();
        }
        assert!((mean / draws as f64).norm() < 0.02);
        assert!((power / draws as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn channels_are_deterministic_unit_norm() {
        let cfg = config(3, 4, 2, 4, 3);
        let a = generate_channels(&cfg, 9);
        let b = generate_channels(&cfg, 9);
        let c = generate_channels(&cfg, 10);
        for m in 0..3 {
            assert_eq!(a.taps[m], b.taps[m]);
            assert!((a.taps[m].norm() - 1.0).abs() < 1e-12);
            assert_eq!(a.taps[m].len(), 3);
        }
        assert!((a.taps[0].clone() - c.taps[0].clone()).norm() > 1e-3);
    }

    #[test]
    fn windowed_physical_chain_equals_circular_model() {
        for (cfg, seed) in [
            (config(2, 4, 2, 4, 3), 11u64),
            (config(3, 6, 3, 6, 4), 12),
            (config(1, 5, 1, 5, 5), 13),
            (config(4, 8, 2, 8, 7), 14),
        ] {
            cfg.validate().unwrap();
            let channels = generate_channels(&cfg, seed);
            let filters = FilterBank::random_unit(&cfg, seed + 40);
            let symbols = random_symbols(&cfg, seed + 80);
            let physical = transmit_physical(&cfg, &channels, &filters, &symbols);
            let windowed = receive_window(&physical, &cfg);
            let circular = transmit_circular(&cfg, &channels, &filters, &symbols);
            let err = (&windowed - &circular).norm();
            assert!(err < 1e-10, "window/circular mismatch {err} for {cfg:?}");
        }
    }

    #[test]
    fn full_prefix_shields_the_window_in_a_stream() {
        // Two blocks back to back: the first block's convolution tail must
        // die out inside the second block's prefix. With the designed L_g it
        // does, and the second window equals the circular model exactly.
        let cfg = config(2, 4, 2, 4, 3);
        let channels = generate_channels(&cfg, 21);
        let filters = FilterBank::random_unit(&cfg, 22);
        let blocks = [random_symbols(&cfg, 23), random_symbols(&cfg, 24)];
        let cp = cfg.cp_len();
        let stream = transmit_stream_with_cp(&cfg, &channels, &filters, &blocks, cp);
        let body = (cfg.block_len + cp) * cfg.upsample;
        let start = body + cp * cfg.upsample;
        let windowed = CVec::from_fn(cfg.total_len(), |k, _| stream[start + k]);
        let circular = transmit_circular(&cfg, &channels, &filters, &blocks[1]);
        assert!((windowed - circular).norm() < 1e-10);
    }

    #[test]
    fn shortened_prefix_leaks_the_previous_block_into_the_window() {
        // The designed prefix is one symbol conservative: the last symbol of
        // a block sits P−1 samples before the block edge, buying that much
        // slack. Dropping two symbols crosses the true boundary and the
        // first block's tail reaches into the second block's window.
        let cfg = config(2, 4, 2, 4, 3);
        let channels = generate_channels(&cfg, 21);
        let filters = FilterBank::random_unit(&cfg, 22);
        let blocks = [random_symbols(&cfg, 23), random_symbols(&cfg, 24)];
        let cp = cfg.cp_len() - 2;
        let stream = transmit_stream_with_cp(&cfg, &channels, &filters, &blocks, cp);
        let body = (cfg.block_len + cp) * cfg.upsample;
        let start = body + cp * cfg.upsample;
        let windowed = CVec::from_fn(cfg.total_len(), |k, _| stream[start + k]);
        let circular = transmit_circular(&cfg, &channels, &filters, &blocks[1]);
        assert!((windowed - circular).norm() > 1e-6);
    }

    #[test]
    fn drastically_short_prefix_corrupts_even_one_block() {
        // With almost no prefix the wrap structure itself is wrong: filter
        // taps reach symbol positions the circular model wraps around.
        let cfg = config(2, 4, 2, 4, 3);
        let channels = generate_channels(&cfg, 21);
        let filters = FilterBank::random_unit(&cfg, 22);
        let blocks = [random_symbols(&cfg, 23)];
        let stream = transmit_stream_with_cp(&cfg, &channels, &filters, &blocks, 1);
        let start = cfg.upsample;
        let windowed = CVec::from_fn(cfg.total_len(), |k, _| stream[start + k]);
        let circular = transmit_circular(&cfg, &channels, &filters, &blocks[0]);
        assert!((windowed - circular).norm() > 1e-6);
    }

    #[test]
    fn window_takes_the_post_prefix_samples() {
        let cfg = config(1, 2, 1, 2, 2);
        // L_g = ceil((2+2-1)/1) = 3, so the window is samples 3 and 4.
        assert_eq!(cfg.cp_len(), 3);
        let signal = CVec::from_fn(8, |k, _| c64(k as f64, 0.0));
        let window = receive_window(&signal, &cfg);
        assert_eq!(window.len(), 2);
        assert!((window[0] - c64(3.0, 0.0)).norm() < 1e-15);
        assert!((window[1] - c64(4.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn circular_model_matches_dense_operator_product() {
        let cfg = config(2, 4, 2, 4, 2);
        let channels = generate_channels(&cfg, 5);
        let filters = FilterBank::random_unit(&cfg, 6);
        let symbols = random_symbols(&cfg, 7);
        let fast = transmit_circular(&cfg, &channels, &filters, &symbols);
        let np = cfg.total_len();
        let u = crate::model::upsampler(cfg.block_len, cfg.upsample).map(|x| c64(x, 0.0));
        let mut dense = CVec::zeros(np);
        for m in 0..cfg.num_users {
            let h = crate::model::circulant(&channels.taps[m], np);
            let f = crate::model::circulant(&filters.coeffs[m], np);
            dense += h * f * &u * &symbols[m];
        }
        assert!((fast - dense).norm() < 1e-10);
    }

    #[test]
    #[should_panic(expected = "signal shorter")]
    fn window_rejects_short_signals() {
        let cfg = config(1, 2, 1, 2, 2);
        let signal = CVec::zeros(3);
        receive_window(&signal, &cfg);
    }

    #[test]
    fn upsampled_grid_spacing_is_preserved() {
        // A lone unit symbol with impulse filter and impulse channel lands
        // exactly P·(L_g + position) samples into the physical output.
        let cfg = SystemConfig {
            num_users: 1,
            block_len: 3,
            upsample: 1,
            filter_len: 1,
            channel_len: 1,
            noise_power: 0.1,
            user_power: vec![1.0],
            qam_order: 4,
            seed: 0,
        };
        let channels = ChannelSet { taps: vec![CVec::from_vec(vec![c64(1.0, 0.0)])] };
        let filters = FilterBank { coeffs: vec![CVec::from_vec(vec![c64(1.0, 0.0)])] };
        let mut x = CVec::zeros(3);
        x[1] = c64(1.0, 0.0);
        let out = transmit_physical(&cfg, &channels, &filters, &[x]);
        // L_g = 1: prefix carries x[2], body starts at sample 1.
        assert!((out[2] - c64(1.0, 0.0)).norm() < 1e-15);
        let nonzero: Vec<usize> =
            (0..out.len()).filter(|&k| out[k].norm() > 1e-15).collect();
        assert_eq!(nonzero, vec![2]);
    }
}
