//! Legacy subband filter bank: the orthogonal-style reference design that the
//! optimizers are measured against.
//!
//! User `m` gets the `NP/M` DFT bins starting at `⌊m·NP/M⌋`. Its filter is the
//! ideal (periodic Dirichlet) impulse response of that brick-wall band,
//! truncated to `N_f` taps around its linear-phase center and shaped by a Hann
//! taper for sidelobe control, then normalized to unit energy. All users share
//! one prototype: filter `m` is the baseband prototype modulated up by its
//! band offset, so the bank is a uniform DFT-modulated bank.

use crate::model::{FilterBank, SystemConfig};
use crate::{c64, CVec};
use std::f64::consts::TAU;

/// Builds the Hann-tapered subband filter bank for a configuration.
pub fn legacy_filterbank(config: &SystemConfig) -> FilterBank {
    let np = config.total_len();
    let m_users = config.num_users;
    let nf = config.filter_len;
    let tau = (nf as f64 - 1.0) / 2.0;
    let coeffs = (0..m_users)
        .map(|m| {
            let lo = m * np / m_users;
            let hi = (m + 1) * np / m_users;
            let mut f = CVec::from_fn(nf, |c, _| {
                let taper = 0.5 * (1.0 - (TAU * (c as f64 + 0.5) / nf as f64).cos());
                let mut acc = c64(0.0, 0.0);
                for k in lo..hi {
                    let angle = TAU * k as f64 * (c as f64 - tau) / np as f64;
                    acc += c64(angle.cos(), angle.sin());
                }
                acc.scale(taper)
            });
            let norm = f.norm();
            assert!(norm > 0.0, "degenerate band for user {m}");
            f /= c64(norm, 0.0);
            f
        })
        .collect();
    FilterBank { coeffs }
}

/// Fraction of a filter's spectral energy falling in DFT bins
/// `[lo − grace, hi + grace)` of the `NP`-point grid (indices wrap).
pub fn band_energy_fraction(f: &CVec, config: &SystemConfig, lo: usize, hi: usize, grace: usize) -> f64 {
    let np = config.total_len();
    let spec = crate::model::filter_dft(f, config.block_len, config.upsample);
    let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
    let count = (hi - lo + 2 * grace).min(np);
    let mut in_band = 0.0;
    for offset in 0..count {
        let k = (lo + np - (grace % np) + offset) % np;
        in_band += spec[k].norm_sqr();
    }
    in_band / total
}
