//! Frequency-domain LMMSE multi-user detection.
//!
//! In the DFT basis the received window obeys `Y = T·W_{(M)}·x + Z`, where
//! `W_{(M)}` applies the per-user DFT to the symbol stack and `T_m =
//! Λ_{H_m} Λ_{F_m} W_{NP} U W_N^H`. Because `W_{NP} U` stacks `P` copies of
//! `W_N/√P`, column `r` of `T_m` touches only rows `iN+r`: each DFT-domain
//! symbol is spread over its `P` aliases with gains `H·F/√P`. The LMMSE
//! estimate is computed in the push-through form
//! `x̂ = W_{(M)}^H T^H (T T^H + N0 I_{NP})^{-1} Y`, whose regularized Gram
//! splits along subcarriers into `N` Hermitian blocks of size `P×P` —
//! [`lmmse_detect_fast`] inverts those, [`lmmse_detect`] is the dense oracle.
//!
//! [`qam_map`]/[`qam_demap`] provide Gray-coded unit-energy constellations,
//! and [`ber_monte_carlo`] runs the end-to-end chain with deterministic
//! per-trial noise streams.

mod qam;

pub use qam::{bits_per_symbol, label_to_symbol, nearest_label, qam_demap, qam_map};

use crate::model::{
    complex_gaussian, ChannelSet, CovarianceSet, FilterBank, ModelError, SystemConfig,
};
use crate::numerics::dft_matrix;
use crate::{c64, CMat, CVec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Errors raised by detection, mapping, and the Monte-Carlo harness.
#[derive(Debug, thiserror::Error)]
pub enum ReceiverError {
    /// Constellation size outside {4, 16, 64}.
    #[error("unsupported QAM order {order} (supported: 4, 16, 64)")]
    UnsupportedQamOrder { order: usize },
    /// Bit stream length not divisible by the bits per symbol.
    #[error("bit stream length {len} is not a multiple of {per_symbol}")]
    BitLength { len: usize, per_symbol: usize },
    /// An underlying model construction failed.
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The DFT-domain multi-user channel in compressed per-subcarrier form.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    /// `t_blocks[n]` is `P×M`; entry `(i, m)` is the gain with which user
    /// `m`'s subcarrier-`n` symbol lands on DFT bin `iN+n`.
    pub t_blocks: Vec<CMat>,
    /// `N`.
    pub block_len: usize,
    /// `P`.
    pub upsample: usize,
    /// `M`.
    pub num_users: usize,
    /// Constellation order used for hard decisions.
    pub qam_order: usize,
}

impl EffectiveChannel {
    /// Re-inflates the full `NP×MN` map `T = [T_1 … T_M]`: user `m`'s block
    /// has `t_blocks[r][(i, m)]` at `(iN+r, r)` and zeros elsewhere.
    pub fn dense_t(&self) -> CMat {
        let (n, p, m_users) = (self.block_len, self.upsample, self.num_users);
        let mut t = CMat::zeros(n * p, m_users * n);
        for r in 0..n {
            for i in 0..p {
                for m in 0..m_users {
                    t[(i * n + r, m * n + r)] = self.t_blocks[r][(i, m)];
                }
            }
        }
        t
    }
}

/// Builds the effective channel of a filter bank over a channel set, under
/// the unit-variance symbol prior (no covariance shaping).
pub fn build_effective_channel(
    channels: &ChannelSet,
    filters: &FilterBank,
    config: &SystemConfig,
) -> EffectiveChannel {
    let (n, p, m_users) = (config.block_len, config.upsample, config.num_users);
    let np = n * p;
    let root_p = (p as f64).sqrt();
    let spectra: Vec<(CVec, CVec)> = (0..m_users)
        .map(|m| {
            (
                crate::model::circulant_spectrum(&channels.taps[m], np),
                crate::model::filter_dft(&filters.coeffs[m], n, p),
            )
        })
        .collect();
    let t_blocks = (0..n)
        .map(|sub| {
            CMat::from_fn(p, m_users, |i, m| {
                let k = i * n + sub;
                spectra[m].0[k] * spectra[m].1[k] / c64(root_p, 0.0)
            })
        })
        .collect();
    EffectiveChannel {
        t_blocks,
        block_len: n,
        upsample: p,
        num_users: m_users,
        qam_order: config.qam_order,
    }
}

/// Folds transmit covariances into the channel: user `m`'s subcarrier-`n`
/// column is scaled by `√δ_{m,n}`, the Fourier-diagonal of `C_m`. This is the
/// true linear map from unit-variance symbols when blocks are shaped to have
/// covariance `C_m`, so detection against it stays matched.
pub fn shape_by_covariances(
    eff: &EffectiveChannel,
    covs: &CovarianceSet,
    config: &SystemConfig,
) -> Result<EffectiveChannel, ModelError> {
    let n = config.block_len;
    let w = dft_matrix(n);
    let mut shaped = eff.clone();
    for (m, c) in covs.cov.iter().enumerate() {
        let deviation = crate::model::circulant_class_deviation(c);
        if deviation > 1e-8 {
            return Err(ModelError::NotFourierDiagonal { off_diagonal: deviation });
        }
        let spectral = &w * c * w.adjoint();
        for sub in 0..n {
            let d = spectral[(sub, sub)].re;
            let scale = spectral.diagonal().iter().fold(1.0f64, |a, v| a.max(v.re.abs()));
            if d < -1e-10 * scale {
                return Err(ModelError::CovarianceNotPsd { index: sub, value: d });
            }
            let gain = c64(d.max(0.0).sqrt(), 0.0);
            for i in 0..eff.upsample {
                shaped.t_blocks[sub][(i, m)] *= gain;
            }
        }
    }
    Ok(shaped)
}

/// Output of an LMMSE detection pass.
#[derive(Clone, Debug)]
pub struct DetectionResult {
    /// Per-user soft symbol estimates (time domain, length `N`).
    pub estimates: Vec<CVec>,
    /// Per-user hard constellation labels for each symbol.
    pub hard_symbols: Vec<Vec<usize>>,
    /// Per-user mean-square error of the soft estimates under the
    /// unit-variance prior, `1 − (1/N)·tr(T_m^H Q^{-1} T_m)`.
    pub per_user_mse: Vec<f64>,
}

fn finish(
    eff: &EffectiveChannel,
    c_freq: Vec<CVec>,
    quad: Vec<f64>,
) -> Result<DetectionResult, ReceiverError> {
    let wn = dft_matrix(eff.block_len);
    let mut estimates = Vec::with_capacity(eff.num_users);
    let mut hard_symbols = Vec::with_capacity(eff.num_users);
    for c in c_freq {
        let x = wn.adjoint() * c;
        let mut labels = Vec::with_capacity(eff.block_len);
        for k in 0..eff.block_len {
            labels.push(nearest_label(x[k], eff.qam_order)?);
        }
        estimates.push(x);
        hard_symbols.push(labels);
    }
    let per_user_mse = quad
        .into_iter()
        .map(|q| (1.0 - q / eff.block_len as f64).max(0.0))
        .collect();
    Ok(DetectionResult { estimates, hard_symbols, per_user_mse })
}

/// LMMSE detection by dense construction of `T` and one `NP×NP` Cholesky
/// solve — the oracle path. `y_freq` is the DFT of the received window.
pub fn lmmse_detect(
    y_freq: &CVec,
    eff: &EffectiveChannel,
    noise_power: f64,
) -> Result<DetectionResult, ReceiverError> {
    assert!(noise_power > 0.0, "noise power must be positive");
    let (n, p, m_users) = (eff.block_len, eff.upsample, eff.num_users);
    let np = n * p;
    assert_eq!(y_freq.len(), np, "observation must have NP entries");
    let t = eff.dense_t();
    let q = &t * t.adjoint() + CMat::identity(np, np).scale(noise_power);
    let chol = nalgebra::linalg::Cholesky::new(q)
        .ok_or(ModelError::NotPositiveDefinite { context: "lmmse dense gram" })?;
    let v = chol.solve(y_freq);
    let x_inv_t = chol.solve(&t);
    let mut c_freq = Vec::with_capacity(m_users);
    let mut quad = Vec::with_capacity(m_users);
    for m in 0..m_users {
        let block = t.columns(m * n, n);
        c_freq.push(block.adjoint() * &v);
        let mut acc = 0.0;
        for r in 0..n {
            acc += block.column(r).dotc(&x_inv_t.column(m * n + r)).re;
        }
        quad.push(acc);
    }
    finish(eff, c_freq, quad)
}

/// LMMSE detection through the per-subcarrier `P×P` blocks of the
/// regularized Gram — `N` small Hermitian solves instead of one of size `NP`.
pub fn lmmse_detect_fast(
    y_freq: &CVec,
    eff: &EffectiveChannel,
    noise_power: f64,
) -> Result<DetectionResult, ReceiverError> {
    assert!(noise_power > 0.0, "noise power must be positive");
    let (n, p, m_users) = (eff.block_len, eff.upsample, eff.num_users);
    assert_eq!(y_freq.len(), n * p, "observation must have NP entries");
    let mut c_freq = vec![CVec::zeros(n); m_users];
    let mut quad = vec![0.0f64; m_users];
    for sub in 0..n {
        let tb = &eff.t_blocks[sub];
        let gram = tb * tb.adjoint() + CMat::identity(p, p).scale(noise_power);
        let chol = nalgebra::linalg::Cholesky::new(gram)
            .ok_or(ModelError::NotPositiveDefinite { context: "lmmse subcarrier block" })?;
        let y_sub = CVec::from_fn(p, |i, _| y_freq[i * n + sub]);
        let v = chol.solve(&y_sub);
        let x_inv_t = chol.solve(tb);
        for m in 0..m_users {
            c_freq[m][sub] = tb.column(m).dotc(&v);
            quad[m] += tb.column(m).dotc(&x_inv_t.column(m)).re;
        }
    }
    finish(eff, c_freq, quad)
}

/// One bit-error-rate measurement point.
#[derive(Clone, Debug)]
pub struct BerPoint {
    /// Per-user SNR `P̄/N0` in dB.
    pub snr_db: f64,
    /// Bit error rate estimate.
    pub ber: f64,
    /// Lower 95% Wilson confidence bound.
    pub ci_low: f64,
    /// Upper 95% Wilson confidence bound.
    pub ci_high: f64,
    /// Number of Monte-Carlo block transmissions.
    pub trials: usize,
}

fn wilson_interval(errors: usize, total: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054f64;
    let n = total as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn run_trial(
    eff: &EffectiveChannel,
    wn: &CMat,
    per_symbol: usize,
    noise_power: f64,
    rng: &mut ChaCha8Rng,
) -> Result<usize, ReceiverError> {
    use rand::Rng;
    let (n, p, m_users) = (eff.block_len, eff.upsample, eff.num_users);
    let mut tx_bits = Vec::with_capacity(m_users);
    let mut s_freq = Vec::with_capacity(m_users);
    for _ in 0..m_users {
        let bits: Vec<u8> = (0..n * per_symbol).map(|_| rng.random::<bool>() as u8).collect();
        let symbols = qam_map(&bits, eff.qam_order)?;
        s_freq.push(wn * symbols);
        tx_bits.push(bits);
    }
    let mut y_freq = CVec::zeros(n * p);
    for sub in 0..n {
        for m in 0..m_users {
            let gain = s_freq[m][sub];
            for i in 0..p {
                y_freq[i * n + sub] += eff.t_blocks[sub][(i, m)] * gain;
            }
        }
    }
    let sigma = noise_power.sqrt();
    for k in 0..n * p {
        y_freq[k] += complex_gaussian(rng).scale(sigma);
    }
    let detected = lmmse_detect_fast(&y_freq, eff, noise_power)?;
    let mut errors = 0;
    for m in 0..m_users {
        let rx_bits = qam_demap(&detected.estimates[m], eff.qam_order)?;
        errors += rx_bits
            .iter()
            .zip(&tx_bits[m])
            .filter(|(a, b)| a != b)
            .count();
    }
    Ok(errors)
}

/// End-to-end coded-free BER sweep. SNR point `γ` uses noise power
/// `N0 = P̄/γ` with `P̄` the mean configured user power; covariance shaping is
/// folded into the effective channel, so detection stays matched. Each
/// (SNR, trial) pair draws from its own counter-based RNG stream, making the
/// run deterministic in `seed` and independent of execution order.
pub fn ber_monte_carlo(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    covs: &CovarianceSet,
    snr_db_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<BerPoint>, ReceiverError> {
    assert!(trials >= 1, "at least one trial per SNR point");
    let eff = shape_by_covariances(&build_effective_channel(channels, filters, config), covs, config)?;
    let per_symbol = bits_per_symbol(config.qam_order)?;
    let wn = dft_matrix(config.block_len);
    let mean_power =
        config.user_power.iter().sum::<f64>() / config.num_users as f64;
    let bits_per_trial = config.num_users * config.block_len * per_symbol;
    let mut points = Vec::with_capacity(snr_db_grid.len());
    for (si, &snr_db) in snr_db_grid.iter().enumerate() {
        let noise_power = mean_power / 10f64.powf(snr_db / 10.0);
        let counts = crate::par::batch_map((0..trials).collect(), |trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((si as u64) << 32) | trial as u64);
            run_trial(&eff, &wn, per_symbol, noise_power, &mut rng)
        });
        let mut errors = 0usize;
        for count in counts {
            errors += count?;
        }
        let total = trials * bits_per_trial;
        let ber = errors as f64 / total as f64;
        let (ci_low, ci_high) = wilson_interval(errors, total);
        points.push(BerPoint { snr_db, ber, ci_low, ci_high, trials });
    }
    Ok(points)
}
