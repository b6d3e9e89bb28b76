//! Sum-rate evaluation in three algebraically equal forms, plus the transmit
//! power functional.
//!
//! * [`sum_rate_time`] builds the dense circulant operators and evaluates
//!   `log2|I + (1/N0)·Σ_m H_m F_m U C_m U^T F_m^H H_m^H|` directly — the
//!   ground truth everything else is checked against.
//! * [`sum_rate_freq`] conjugates into the DFT basis where `H` and `F` are
//!   diagonal; exact for arbitrary Hermitian covariances.
//! * [`sum_rate_fast`] additionally exploits the interleaved block structure,
//!   reducing the determinant to `N` blocks of size `P×P`. That structure
//!   exists only when every covariance is diagonal in the Fourier basis
//!   (identity covariances and every covariance the optimizer produces are;
//!   an arbitrary Hermitian PSD matrix is not), so this path verifies the
//!   class first and refuses input outside it rather than returning a wrong
//!   number.
//!
//! All reported rates carry the `1/((N+L_g)P)` prefactor.

use crate::model::{
    build_g_compressed, build_interference, build_q_vectors, circulant, circulant_spectrum,
    filter_dft, upsampler, ChannelSet, CompressedG, CovarianceSet, FilterBank, ModelError,
    SystemConfig,
};
use crate::numerics::dft_matrix;
use crate::{c64, CMat, CVec};

/// `log2 det` of a Hermitian positive-definite matrix via Cholesky.
pub fn log2_det_hpd(a: &CMat) -> Result<f64, ModelError> {
    let chol = nalgebra::linalg::Cholesky::new(a.clone())
        .ok_or(ModelError::NotPositiveDefinite { context: "log2_det" })?;
    let l = chol.l();
    let mut acc = 0.0;
    for k in 0..a.nrows() {
        // Complex square roots always exist, so the factorization itself
        // cannot certify definiteness: insist on a real positive diagonal.
        let d = l[(k, k)];
        if !(d.re > 0.0) || d.im.abs() > 1e-8 * d.re {
            return Err(ModelError::NotPositiveDefinite { context: "log2_det" });
        }
        acc += d.re.log2();
    }
    Ok(2.0 * acc)
}

/// Maximum off-diagonal magnitude of `W_N C W_N^H`, relative to its largest
/// diagonal entry. Zero exactly when `C` is diagonal in the Fourier basis.
pub fn circulant_class_deviation(c: &CMat) -> f64 {
    let n = c.nrows();
    let w = dft_matrix(n);
    let spectral = &w * c * w.adjoint();
    let scale = (0..n)
        .map(|k| spectral[(k, k)].norm())
        .fold(1.0f64, f64::max);
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(spectral[(i, j)].norm());
            }
        }
    }
    off / scale
}

fn validate_inputs(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    covs: &CovarianceSet,
) -> Result<(), ModelError> {
    channels.validate(config)?;
    if filters.coeffs.len() != config.num_users
        || filters.coeffs.iter().any(|f| f.len() != config.filter_len)
    {
        return Err(ModelError::DimensionMismatch { context: "FilterBank" });
    }
    if covs.cov.len() != config.num_users
        || covs
            .cov
            .iter()
            .any(|c| c.nrows() != config.block_len || c.ncols() != config.block_len)
    {
        return Err(ModelError::DimensionMismatch { context: "CovarianceSet" });
    }
    Ok(())
}

/// Sum rate by dense time-domain construction of every operator.
pub fn sum_rate_time(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    covs: &CovarianceSet,
) -> Result<f64, ModelError> {
    validate_inputs(config, channels, filters, covs)?;
    let np = config.total_len();
    let u = upsampler(config.block_len, config.upsample).map(|x| c64(x, 0.0));
    let mut a = CMat::identity(np, np);
    for m in 0..config.num_users {
        let h = circulant(&channels.taps[m], np);
        let f = circulant(&filters.coeffs[m], np);
        let hfu = &h * &f * &u;
        a += (&hfu * &covs.cov[m] * hfu.adjoint()).unscale(config.noise_power);
    }
    Ok(config.rate_prefactor() * log2_det_hpd(&crate::numerics::hermitize(&a))?)
}

/// Sum rate in the DFT basis: `H` and `F` become diagonal, the upsampler Gram
/// becomes a `P×P` grid of `N×N` blocks `(1/P)·W_N C W_N^H`. Exact for any
/// Hermitian covariance.
pub fn sum_rate_freq(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    covs: &CovarianceSet,
) -> Result<f64, ModelError> {
    validate_inputs(config, channels, filters, covs)?;
    let (n, p) = (config.block_len, config.upsample);
    let np = n * p;
    let wn = dft_matrix(n);
    let mut a = CMat::identity(np, np);
    for m in 0..config.num_users {
        let h = circulant_spectrum(&channels.taps[m], np);
        let f = filter_dft(&filters.coeffs[m], n, p);
        let spectral = (&wn * &covs.cov[m] * wn.adjoint()).unscale(p as f64 * config.noise_power);
        for i in 0..p {
            for j in 0..p {
                for r in 0..n {
                    for s in 0..n {
                        let (row, col) = (i * n + r, j * n + s);
                        a[(row, col)] += h[row]
                            * f[row]
                            * spectral[(r, s)]
                            * f[col].conj()
                            * h[col].conj();
                    }
                }
            }
        }
    }
    Ok(config.rate_prefactor() * log2_det_hpd(&crate::numerics::hermitize(&a))?)
}

/// Builds each user's compressed reduced channel map. Fails if any covariance
/// is outside the Fourier-diagonal class that makes the compression exact.
pub(crate) fn compressed_maps(
    config: &SystemConfig,
    channels: &ChannelSet,
    covs: &CovarianceSet,
) -> Result<Vec<CompressedG>, ModelError> {
    let class_tol = 1e-8;
    covs.cov
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let deviation = circulant_class_deviation(c);
            if deviation > class_tol {
                return Err(ModelError::NotFourierDiagonal { off_diagonal: deviation });
            }
            let q = build_q_vectors(c, config.upsample, config.noise_power)?;
            let h_spec = circulant_spectrum(&channels.taps[m], config.total_len());
            Ok(build_g_compressed(&h_spec, &q, config.filter_len))
        })
        .collect()
}

/// Sum rate via the interleaved block decomposition:
/// `Σ_n log2 det(I_P + Σ_m ĝ_{m,n} ĝ_{m,n}^H)`, at `O(N·P³)` instead of
/// `O(N³P³)` per determinant.
pub fn sum_rate_fast(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    covs: &CovarianceSet,
) -> Result<f64, ModelError> {
    validate_inputs(config, channels, filters, covs)?;
    let gs = compressed_maps(config, channels, covs)?;
    let state = build_interference(&gs, filters, None)?;
    Ok(config.rate_prefactor() * state.log2_det()?)
}

/// Sum rate together with each user's rate when all other users are treated
/// as noise: `R̄_m = log2|Φ_all| − log2|Φ_{-m}|`, both accumulated blockwise.
/// Same Fourier-diagonal requirement as [`sum_rate_fast`].
pub fn per_user_rates(
    config: &SystemConfig,
    channels: &ChannelSet,
    filters: &FilterBank,
    covs: &CovarianceSet,
) -> Result<(f64, Vec<f64>), ModelError> {
    validate_inputs(config, channels, filters, covs)?;
    let gs = compressed_maps(config, channels, covs)?;
    let all = build_interference(&gs, filters, None)?;
    let total = all.log2_det()?;
    let prefactor = config.rate_prefactor();
    let mut per_user = Vec::with_capacity(config.num_users);
    for m in 0..config.num_users {
        let without = build_interference(&gs, filters, Some(m))?;
        per_user.push(prefactor * (total - without.log2_det()?));
    }
    Ok((prefactor * total, per_user))
}

/// Transmit power of one user: `tr(F U C U^T F^H)/(NP)`, evaluated in the
/// DFT basis where it reduces to a weighted sum of squared filter-spectrum
/// magnitudes, `Σ_n d_n Σ_i |𝐅[iN+n]|² / (NP·P)`.
pub fn check_power(f: &CVec, c: &CMat, config: &SystemConfig) -> f64 {
    let (n, p) = (config.block_len, config.upsample);
    let wn = dft_matrix(n);
    let spectral = &wn * c * wn.adjoint();
    let f_spec = filter_dft(f, n, p);
    let mut acc = 0.0;
    for sub in 0..n {
        let d = spectral[(sub, sub)].re;
        let mut energy = 0.0;
        for i in 0..p {
            energy += f_spec[i * n + sub].norm_sqr();
        }
        acc += d * energy;
    }
    acc / ((n * p * p) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;
    use crate::model::reduce_user_channel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(m: usize, n: usize, p: usize, nf: usize, lh: usize) -> SystemConfig {
        SystemConfig {
            num_users: m,
            block_len: n,
            upsample: p,
            filter_len: nf,
            channel_len: lh,
            noise_power: 0.4,
            user_power: (0..m).map(|k| 0.8 + 0.2 * k as f64).collect(),
            qam_order: 16,
            seed: 1,
        }
    }

    #[test]
    fn zero_filters_give_zero_rate() {
        let cfg = config(2, 4, 2, 4, 2);
        let channels = generate_channels(&cfg, 3);
        let filters = FilterBank { coeffs: vec![CVec::zeros(4); 2] };
        let covs = CovarianceSet::identity_scaled(&cfg);
        assert!(sum_rate_time(&cfg, &channels, &filters, &covs).unwrap().abs() < 1e-12);
        assert!(sum_rate_fast(&cfg, &channels, &filters, &covs).unwrap().abs() < 1e-12);
    }

    #[test]
    fn scalar_case_closed_form() {
        // M=N=P=N_f=L_h=1: rate = (1/((N+L_g)P))·log2(1 + P_1/N0) with L_g=1.
        let cfg = SystemConfig {
            num_users: 1,
            block_len: 1,
            upsample: 1,
            filter_len: 1,
            channel_len: 1,
            noise_power: 0.25,
            user_power: vec![2.0],
            qam_order: 4,
            seed: 1,
        };
        let channels = ChannelSet { taps: vec![CVec::from_vec(vec![c64(1.0, 0.0)])] };
        let filters = FilterBank { coeffs: vec![CVec::from_vec(vec![c64(1.0, 0.0)])] };
        let covs = CovarianceSet::identity_scaled(&cfg);
        let expected = 0.5 * (1.0f64 + 2.0 / 0.25).log2();
        let rate = sum_rate_time(&cfg, &channels, &filters, &covs).unwrap();
        assert!((rate - expected).abs() < 1e-12);
    }

    #[test]
    fn three_forms_agree_for_identity_covariances() {
        let cfg = config(3, 4, 2, 4, 3);
        for seed in 0..8 {
            let channels = generate_channels(&cfg, seed);
            let filters = FilterBank::random_unit(&cfg, seed + 50);
            let covs = CovarianceSet::identity_scaled(&cfg);
            let t = sum_rate_time(&cfg, &channels, &filters, &covs).unwrap();
            let f = sum_rate_freq(&cfg, &channels, &filters, &covs).unwrap();
            let b = sum_rate_fast(&cfg, &channels, &filters, &covs).unwrap();
            assert!((t - f).abs() < 1e-8 * t.abs().max(1.0), "time {t} vs freq {f}");
            assert!((t - b).abs() < 1e-8 * t.abs().max(1.0), "time {t} vs fast {b}");
        }
    }

    #[test]
    fn three_forms_agree_for_spectral_covariances() {
        let cfg = config(2, 6, 2, 6, 3);
        for seed in 0..8 {
            let channels = generate_channels(&cfg, seed);
            let filters = FilterBank::random_unit(&cfg, seed + 90);
            let covs = CovarianceSet::random_spectral(&cfg, seed + 200);
            let t = sum_rate_time(&cfg, &channels, &filters, &covs).unwrap();
            let f = sum_rate_freq(&cfg, &channels, &filters, &covs).unwrap();
            let b = sum_rate_fast(&cfg, &channels, &filters, &covs).unwrap();
            assert!((t - f).abs() < 1e-8 * t.abs().max(1.0), "time {t} vs freq {f}");
            assert!((t - b).abs() < 1e-8 * t.abs().max(1.0), "time {t} vs fast {b}");
        }
    }

    #[test]
    fn freq_form_matches_time_for_general_covariances() {
        // The dense frequency evaluation needs no structure at all; check it
        // on covariances with off-diagonal Fourier mass.
        let cfg = config(2, 4, 2, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for seed in 0..6 {
            let channels = generate_channels(&cfg, seed);
            let filters = FilterBank::random_unit(&cfg, seed + 70);
            let cov = (0..2)
                .map(|_| {
                    let a = CMat::from_fn(4, 4, |_, _| {
                        c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                    });
                    crate::numerics::hermitize(&(&a * a.adjoint()))
                })
                .collect();
            let covs = CovarianceSet { cov };
            let t = sum_rate_time(&cfg, &channels, &filters, &covs).unwrap();
            let f = sum_rate_freq(&cfg, &channels, &filters, &covs).unwrap();
            assert!((t - f).abs() < 1e-8 * t.abs().max(1.0), "time {t} vs freq {f}");
        }
    }

    #[test]
    fn fast_form_refuses_general_covariances() {
        let cfg = config(1, 4, 1, 4, 2);
        let channels = generate_channels(&cfg, 1);
        let filters = FilterBank::random_unit(&cfg, 2);
        let mut c = CMat::identity(4, 4);
        c[(0, 1)] = c64(0.0, 0.4);
        c[(1, 0)] = c64(0.0, -0.4);
        let covs = CovarianceSet { cov: vec![c] };
        assert!(matches!(
            sum_rate_fast(&cfg, &channels, &filters, &covs),
            Err(ModelError::NotFourierDiagonal { .. })
        ));
    }

    #[test]
    fn per_user_rates_sum_against_whitened_kernels() {
        // Each user's rate equals its whitened-kernel objective, and the
        // full blockwise sum equals the dense evaluation.
        let cfg = config(3, 4, 2, 4, 2);
        let channels = generate_channels(&cfg, 9);
        let filters = FilterBank::random_unit(&cfg, 10);
        let covs = CovarianceSet::identity_scaled(&cfg);
        let (sum, per_user) = per_user_rates(&cfg, &channels, &filters, &covs).unwrap();
        let dense = sum_rate_time(&cfg, &channels, &filters, &covs).unwrap();
        assert!((sum - dense).abs() < 1e-9);

        let gs = compressed_maps(&cfg, &channels, &covs).unwrap();
        for m in 0..cfg.num_users {
            let state = build_interference(&gs, &filters, Some(m)).unwrap();
            let reduced = reduce_user_channel(&state, &gs[m]);
            let expected = cfg.rate_prefactor() * reduced.rate(&filters.coeffs[m]);
            assert!((per_user[m] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn power_identity_for_scaled_identity_covariance() {
        // C = P·P_m·I and unit-energy f give exactly P_m, for any filter.
        let cfg = config(2, 8, 2, 8, 3);
        for seed in 0..100 {
            let filters = FilterBank::random_unit(&cfg, seed);
            for m in 0..cfg.num_users {
                let c = CMat::from_diagonal_element(
                    8,
                    8,
                    c64(cfg.upsample as f64 * cfg.user_power[m], 0.0),
                );
                let power = check_power(&filters.coeffs[m], &c, &cfg);
                assert!(
                    (power - cfg.user_power[m]).abs() < 1e-12,
                    "seed {seed} user {m}: {power} vs {}",
                    cfg.user_power[m]
                );
            }
        }
    }

    #[test]
    fn power_scales_quadratically_in_the_filter() {
        let cfg = config(1, 4, 1, 4, 2);
        let f = FilterBank::random_unit(&cfg, 3).coeffs.remove(0);
        let c = CMat::from_diagonal_element(4, 4, c64(1.0, 0.0));
        let base = check_power(&f, &c, &cfg);
        let doubled = check_power(&f.scale(2.0), &c, &cfg);
        assert!((doubled - 4.0 * base).abs() < 1e-12);
    }

    #[test]
    fn power_matches_dense_trace_oracle() {
        let cfg = config(1, 5, 1, 5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let f = CVec::from_fn(5, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let a = CMat::from_fn(5, 5, |_, _| {
                c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let c = crate::numerics::hermitize(&(&a * a.adjoint()));
            let fast = check_power(&f, &c, &cfg);
            let np = cfg.total_len();
            let u = upsampler(cfg.block_len, cfg.upsample).map(|x| c64(x, 0.0));
            let fmat = circulant(&f, np);
            let prod = &fmat * &u * &c * u.transpose() * fmat.adjoint();
            let dense = prod.trace().re / np as f64;
            assert!((fast - dense).abs() < 1e-10 * dense.abs().max(1.0));
        }
    }

    #[test]
    fn circulant_class_deviation_detects_structure() {
        let n = 6;
        let w = dft_matrix(n);
        let d = CVec::from_fn(n, |k, _| c64(1.0 + k as f64, 0.0));
        let inside = crate::numerics::hermitize(&(w.adjoint() * CMat::from_diagonal(&d) * &w));
        assert!(circulant_class_deviation(&inside) < 1e-12);
        let mut outside = CMat::identity(n, n);
        outside[(0, 1)] = c64(0.0, 0.3);
        outside[(1, 0)] = c64(0.0, -0.3);
        assert!(circulant_class_deviation(&outside) > 1e-3);
    }

    #[test]
    fn log2_det_matches_lu_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = CMat::from_fn(6, 6, |_, _| {
            c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let hpd = crate::numerics::hermitize(&(&a * a.adjoint() + CMat::identity(6, 6)));
        let fast = log2_det_hpd(&hpd).unwrap();
        let direct = hpd.clone().lu().determinant().re.log2();
        assert!((fast - direct).abs() < 1e-10);
        // Negative-definite input is rejected rather than mis-evaluated.
        assert!(log2_det_hpd(&hpd.scale(-1.0)).is_err());
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let cfg = config(2, 4, 2, 4, 2);
        let channels = generate_channels(&cfg, 1);
        let filters = FilterBank { coeffs: vec![CVec::zeros(4); 1] };
        let covs = CovarianceSet::identity_scaled(&cfg);
        assert!(matches!(
            sum_rate_time(&cfg, &channels, &filters, &covs),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }
}
