//! CP-FBMA uplink system model.
//!
//! `M` single-antenna users share the channel without subband orthogonality:
//! user `m` CP-extends a block of `N` QAM symbols, upsamples by `P`, shapes it
//! with a length-`N_f` synthesis filter `f_m`, and transmits over an `L_h`-tap
//! channel. With a cyclic prefix of `L_g = ⌈(N_f + L_h − 1)/P⌉` symbols the
//! received window obeys the circular model `y = Σ_m H_m F_m U x_m + z`, where
//! `H_m`/`F_m` are circulant and `U` is the upsampler.
//!
//! Everything downstream exploits two structural facts. First, circulants
//! diagonalize in the DFT basis, so rates and power constraints reduce to
//! per-bin quantities. Second, the interleaving permutation `Ω` regroups the
//! `NP`-bin frequency grid into `N` independent `P×P` blocks, collapsing each
//! `O(N³P³)` inversion or determinant into `N` small ones. The module offers
//! both dense constructions (for oracles and audits) and the compressed block
//! forms used by the optimizers and the receiver, with equality between the
//! two enforced by tests.

mod baseline;
mod interference;
mod ops;
mod physical;
mod rates;

pub use baseline::{band_energy_fraction, legacy_filterbank};
pub use interference::{build_interference, reduce_user_channel, InterferenceState, ReducedUserChannel};
pub use ops::{
    build_g, build_g_compressed, circulant, circulant_spectrum, cp_length, filter_dft,
    omega_matrix, omega_permutation, spectral_efficiency, upsampler, CompressedG, QVectors,
};
pub use ops::build_q_vectors;
pub use physical::{
    complex_gaussian, generate_channels, receive_window, transmit_circular, transmit_physical,
};
pub use rates::{
    check_power, circulant_class_deviation, log2_det_hpd, per_user_rates, sum_rate_fast,
    sum_rate_freq, sum_rate_time,
};

use crate::numerics::NumericsError;
use crate::{CMat, CVec};
use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Errors raised by model construction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    /// A configuration violates a structural invariant.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    /// Inputs disagree on dimensions.
    #[error("dimension mismatch in {context}")]
    DimensionMismatch { context: &'static str },
    /// A covariance matrix has a negative spectral diagonal entry.
    #[error("covariance is not PSD: spectral diagonal entry {index} is {value:.3e}")]
    CovarianceNotPsd { index: usize, value: f64 },
    /// A covariance is not diagonal in the Fourier basis, so the interleaved
    /// block evaluation does not apply to it.
    #[error("covariance is not Fourier-diagonal (off-diagonal mass {off_diagonal:.3e}); use the dense evaluator")]
    NotFourierDiagonal { off_diagonal: f64 },
    /// A matrix expected to be positive definite failed its factorization.
    #[error("matrix not positive definite in {context}")]
    NotPositiveDefinite { context: &'static str },
    /// An underlying numerics kernel failed.
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    /// Configuration JSON failed to parse.
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Static description of one uplink scenario.
///
/// Serializes to a flat JSON object with exactly these field names; unknown
/// keys are rejected so silently ignored typos cannot skew an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of users `M` (one subband filter each).
    pub num_users: usize,
    /// Symbols per user block, `N`.
    pub block_len: usize,
    /// Upsampling factor `P` (samples per symbol), `1 ≤ P ≤ M`.
    pub upsample: usize,
    /// Synthesis-filter length `N_f`; must be a multiple of `P`.
    pub filter_len: usize,
    /// Channel impulse-response length `L_h`.
    pub channel_len: usize,
    /// Noise power `N0` (linear).
    pub noise_power: f64,
    /// Per-user transmit power `P_m` (linear), one entry per user.
    pub user_power: Vec<f64>,
    /// QAM constellation size, one of 4, 16, 64.
    pub qam_order: usize,
    /// Base RNG seed for channel generation and Monte-Carlo runs.
    pub seed: u64,
}

impl SystemConfig {
    /// Total samples per transmitted block body, `N·P`.
    pub fn total_len(&self) -> usize {
        self.block_len * self.upsample
    }

    /// Cyclic-prefix length in symbols, `⌈(N_f + L_h − 1)/P⌉`.
    pub fn cp_len(&self) -> usize {
        cp_length(self.filter_len, self.channel_len, self.upsample)
    }

    /// The constant that converts a raw log-determinant into bits/s/Hz:
    /// `1/((N + L_g)·P)`. Optimizers drop it; reported rates include it.
    pub fn rate_prefactor(&self) -> f64 {
        1.0 / ((self.block_len + self.cp_len()) as f64 * self.upsample as f64)
    }

    /// Spectral efficiency of the configured uncoded constellation.
    pub fn spectral_efficiency(&self) -> f64 {
        spectral_efficiency(self.block_len, self.cp_len(), self.qam_order)
    }

    /// Checks every structural invariant, returning the first violation.
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: String| Err(ModelError::InvalidConfig { reason });
        if self.num_users == 0 {
            return fail("num_users must be at least 1".into());
        }
        if self.block_len == 0 {
            return fail("block_len must be at least 1".into());
        }
        if self.upsample == 0 || self.upsample > self.num_users {
            return fail(format!(
                "upsample must satisfy 1 <= P <= M (got P={}, M={})",
                self.upsample, self.num_users
            ));
        }
        if self.filter_len == 0 {
            return fail("filter_len must be at least 1".into());
        }
        if self.filter_len % self.upsample != 0 {
            return fail(format!(
                "filter_len must be a multiple of upsample (got N_f={}, P={})",
                self.filter_len, self.upsample
            ));
        }
        if self.filter_len > self.total_len() {
            return fail(format!(
                "filter_len must not exceed N*P (got N_f={}, N*P={})",
                self.filter_len,
                self.total_len()
            ));
        }
        if self.channel_len == 0 || self.channel_len > self.total_len() {
            return fail(format!(
                "channel_len must satisfy 1 <= L_h <= N*P (got L_h={}, N*P={})",
                self.channel_len,
                self.total_len()
            ));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return fail(format!("noise_power must be positive (got {})", self.noise_power));
        }
        if self.user_power.len() != self.num_users {
            return fail(format!(
                "user_power must have one entry per user (got {} for M={})",
                self.user_power.len(),
                self.num_users
            ));
        }
        if let Some(p) = self.user_power.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return fail(format!("user_power entries must be positive (got {p})"));
        }
        if !matches!(self.qam_order, 4 | 16 | 64) {
            return fail(format!("qam_order must be 4, 16, or 64 (got {})", self.qam_order));
        }
        // The CP bound L_g*P >= N_f + L_h - 1 holds by construction of cp_len.
        debug_assert!(self.cp_len() * self.upsample >= self.filter_len + self.channel_len - 1);
        Ok(())
    }

    /// Parses and validates a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes to pretty JSON (the manifest snapshot format).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

/// One channel impulse response per user.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    /// `taps[m]` has length `L_h`.
    pub taps: Vec<CVec>,
}

impl ChannelSet {
    /// Checks per-user lengths against the configuration.
    pub fn validate(&self, config: &SystemConfig) -> Result<(), ModelError> {
        if self.taps.len() != config.num_users
            || self.taps.iter().any(|h| h.len() != config.channel_len)
        {
            return Err(ModelError::DimensionMismatch { context: "ChannelSet" });
        }
        Ok(())
    }
}

/// One synthesis filter per user.
#[derive(Clone, Debug)]
pub struct FilterBank {
    /// `coeffs[m]` has length `N_f`.
    pub coeffs: Vec<CVec>,
}

impl FilterBank {
    /// Checks lengths and the unit-energy constraint `f^H f = 1`.
    pub fn validate(&self, config: &SystemConfig) -> Result<(), ModelError> {
        if self.coeffs.len() != config.num_users
            || self.coeffs.iter().any(|f| f.len() != config.filter_len)
        {
            return Err(ModelError::DimensionMismatch { context: "FilterBank" });
        }
        for (m, f) in self.coeffs.iter().enumerate() {
            let energy = f.norm_squared();
            if (energy - 1.0).abs() > 1e-10 {
                return Err(ModelError::InvalidConfig {
                    reason: format!("filter {m} energy is {energy}, expected 1"),
                });
            }
        }
        Ok(())
    }

    /// Deterministic random unit-energy filters (optimizer starting points).
    pub fn random_unit(config: &SystemConfig, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..config.num_users)
            .map(|_| {
                let mut f = CVec::from_fn(config.filter_len, |_, _| complex_gaussian(&mut rng));
                let norm = f.norm();
                f /= Complex::new(norm, 0.0);
                f
            })
            .collect();
        FilterBank { coeffs }
    }
}

/// One transmit covariance per user.
#[derive(Clone, Debug)]
pub struct CovarianceSet {
    /// `cov[m]` is `N×N` Hermitian PSD.
    pub cov: Vec<CMat>,
}

impl CovarianceSet {
    /// The default transmit strategy: `C_m = P·P_m·I_N`, which meets the
    /// power constraint exactly for any unit-energy filter.
    pub fn identity_scaled(config: &SystemConfig) -> Self {
        let n = config.block_len;
        let cov = config
            .user_power
            .iter()
            .map(|&pm| {
                DMatrix::from_diagonal_element(n, n, Complex::new(config.upsample as f64 * pm, 0.0))
            })
            .collect();
        CovarianceSet { cov }
    }

    /// Random covariances that are diagonal in the Fourier basis,
    /// `C = W_N^H diag(d) W_N` with positive `d`: the class produced by the
    /// covariance optimizer, and the class on which the interleaved fast
    /// evaluators are exact.
    pub fn random_spectral(config: &SystemConfig, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = config.block_len;
        let w = crate::numerics::dft_matrix(n);
        let cov = config
            .user_power
            .iter()
            .map(|&pm| {
                let d = CVec::from_fn(n, |_, _| {
                    Complex::new(config.upsample as f64 * pm * (0.1 + 1.8 * rng.random::<f64>()), 0.0)
                });
                let c = w.adjoint() * DMatrix::from_diagonal(&d) * &w;
                crate::numerics::hermitize(&c)
            })
            .collect();
        CovarianceSet { cov }
    }

    /// Checks shapes, Hermitian symmetry (1e−10), and PSD-ness
    /// (min eigenvalue ≥ −1e−8·trace).
    pub fn validate(&self, config: &SystemConfig) -> Result<(), ModelError> {
        let n = config.block_len;
        if self.cov.len() != config.num_users
            || self.cov.iter().any(|c| c.nrows() != n || c.ncols() != n)
        {
            return Err(ModelError::DimensionMismatch { context: "CovarianceSet" });
        }
        for c in &self.cov {
            crate::numerics::require_hermitian(c)?;
            let trace = c.trace().re.max(f64::EPSILON);
            let eigs = crate::numerics::hermitian_evd(c)?.0;
            let min = eigs[eigs.len() - 1];
            if min < -1e-8 * trace {
                return Err(ModelError::CovarianceNotPsd { index: 0, value: min });
            }
        }
        Ok(())
    }

    /// Checks the transmit power constraint
    /// `tr(F_m U C_m U^T F_m^H)/(NP) = P_m` against each user's filter.
    pub fn check_power_normalized(
        &self,
        filters: &FilterBank,
        config: &SystemConfig,
    ) -> Result<(), ModelError> {
        for m in 0..config.num_users {
            let power = check_power(&filters.coeffs[m], &self.cov[m], config);
            let target = config.user_power[m];
            if (power - target).abs() > 1e-8 * target.max(1.0) {
                return Err(ModelError::InvalidConfig {
                    reason: format!("user {m} transmit power {power} differs from target {target}"),
                });
            }
        }
        Ok(())
    }
}
