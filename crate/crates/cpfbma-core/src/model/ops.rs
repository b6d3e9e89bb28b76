//! Structured-matrix constructions: upsampler, interleaver, circulants and
//! their spectra, the per-subband spectral weights `q_{m,n}`, and the reduced
//! channel maps `G_{m,n}`.
//!
//! Conventions that everything here relies on:
//!
//! * `W_n` is the **unitary** DFT matrix ([`crate::numerics::dft_matrix`]);
//!   circulants factor as `Circ(v) = W^H diag(λ) W` with `λ` the
//!   *unnormalized* DFT of the first column.
//! * `(W_{NP} U)[iN+r, c] = W_N[r, c]/√P`: the tall DFT of the upsampler is a
//!   stack of `P` copies of the small DFT, scaled by `1/√P`. This single
//!   identity is what turns `NP`-dimensional Grams into `N` blocks of size
//!   `P×P`, and it fixes the `1/√P` that appears in the `q` values below.
//! * The interleaver `Ω` maps index `ω = ω₁P + ω₂` to `ω₁ + ω₂N`; conjugating
//!   a grid-of-diagonals matrix by it produces a block-diagonal matrix whose
//!   `n`th block collects entries `[iN+n, jN+n]`.

use crate::model::ModelError;
use crate::numerics::dft_matrix;
use crate::{c64, CMat, CVec, RVec, C64};
use nalgebra::DMatrix;
use std::f64::consts::TAU;

/// Cyclic-prefix length in symbols: `⌈(N_f + L_h − 1)/P⌉`.
pub fn cp_length(filter_len: usize, channel_len: usize, upsample: usize) -> usize {
    assert!(filter_len >= 1 && channel_len >= 1 && upsample >= 1);
    (filter_len + channel_len - 1).div_ceil(upsample)
}

/// Uncoded spectral efficiency `N·log2(K)/(N + L_g)` in bits/s/Hz.
pub fn spectral_efficiency(block_len: usize, cp_len: usize, qam_order: usize) -> f64 {
    assert!(block_len >= 1 && qam_order.is_power_of_two());
    block_len as f64 * (qam_order as f64).log2() / (block_len + cp_len) as f64
}

/// The `NP×N` zero-insertion upsampler: ones at `(nP, n)`, zeros elsewhere.
pub fn upsampler(block_len: usize, upsample: usize) -> DMatrix<f64> {
    assert!(block_len >= 1 && upsample >= 1);
    let mut u = DMatrix::zeros(block_len * upsample, block_len);
    for n in 0..block_len {
        u[(n * upsample, n)] = 1.0;
    }
    u
}

/// The interleaving permutation: entry `ω = ω₁P + ω₂` maps to `ω₁ + ω₂N`.
///
/// Returned as `pi` with `pi[ω]` the image index, i.e. the permutation matrix
/// has its `ω`th row equal to `e_{pi[ω]}^T`.
pub fn omega_permutation(block_len: usize, upsample: usize) -> Vec<usize> {
    assert!(block_len >= 1 && upsample >= 1);
    (0..block_len * upsample)
        .map(|omega| {
            let (w1, w2) = (omega / upsample, omega % upsample);
            w1 + w2 * block_len
        })
        .collect()
}

/// Dense form of [`omega_permutation`] (oracle/test use).
pub fn omega_matrix(block_len: usize, upsample: usize) -> DMatrix<f64> {
    let pi = omega_permutation(block_len, upsample);
    let size = pi.len();
    let mut m = DMatrix::zeros(size, size);
    for (row, &col) in pi.iter().enumerate() {
        m[(row, col)] = 1.0;
    }
    m
}

/// Dense circulant matrix whose first column is `v` zero-padded to `size`.
pub fn circulant(v: &CVec, size: usize) -> CMat {
    assert!(v.len() <= size, "generator longer than the matrix");
    CMat::from_fn(size, size, |i, j| {
        let k = (i + size - j) % size;
        if k < v.len() {
            v[k]
        } else {
            C64::ZERO
        }
    })
}

/// Unnormalized `size`-point DFT of the zero-padded vector `v`; equals the
/// eigenvalue list (DFT-basis diagonal) of [`circulant`]`(v, size)`.
pub fn circulant_spectrum(v: &CVec, size: usize) -> CVec {
    assert!(v.len() <= size, "generator longer than the transform");
    CVec::from_fn(size, |k, _| {
        let mut acc = C64::ZERO;
        for (j, &vj) in v.iter().enumerate() {
            let angle = -TAU * (((k as u64 * j as u64) % size as u64) as f64) / size as f64;
            acc += vj * c64(angle.cos(), angle.sin());
        }
        acc
    })
}

/// The `NP`-point spectrum of a length-`N_f` filter, `√(NP)·W_{NP}·𝐏·f`.
pub fn filter_dft(f: &CVec, block_len: usize, upsample: usize) -> CVec {
    circulant_spectrum(f, block_len * upsample)
}

/// The per-subband spectral weights of one user's transmit covariance.
///
/// `values[n]` is the single magnitude shared by the `P` nonzero entries
/// (at indices `iN+n`) of the sparse vector `q_{m,n} ∈ R^{NP}`. The defining
/// property is `Σ_n q_{m,n} q_{m,n}^T = (1/N0)·W_{NP} U C_m U^T W_{NP}^H`
/// whenever `C_m` is diagonal in the Fourier basis, which pins the value to
/// `√(d_n/(P·N0))` with `d_n = [W_N C_m W_N^H]_{n,n}`.
#[derive(Clone, Debug)]
pub struct QVectors {
    /// `√(d_n/(P·N0))` for `n = 0..N−1`.
    pub values: RVec,
    /// `N`.
    pub block_len: usize,
    /// `P`.
    pub upsample: usize,
}

impl QVectors {
    /// Materializes the sparse `q_{m,n} ∈ R^{NP}` for one subband index.
    pub fn dense(&self, n: usize) -> RVec {
        let (nn, p) = (self.block_len, self.upsample);
        let mut q = RVec::zeros(nn * p);
        for i in 0..p {
            q[i * nn + n] = self.values[n];
        }
        q
    }
}

/// Builds the spectral weights `q_{m,n}` from a covariance matrix.
///
/// Fails if the Fourier-basis diagonal of `C` has an entry more negative than
/// the PSD tolerance; small negative round-off is clamped to zero.
pub fn build_q_vectors(c: &CMat, upsample: usize, n0: f64) -> Result<QVectors, ModelError> {
    assert!(n0 > 0.0, "noise power must be positive");
    crate::numerics::require_hermitian(c)?;
    let n = c.nrows();
    let w = dft_matrix(n);
    let spectral = &w * c * w.adjoint();
    let scale = spectral
        .diagonal()
        .iter()
        .fold(1.0f64, |acc, d| acc.max(d.re.abs()));
    let mut values = RVec::zeros(n);
    for k in 0..n {
        let d = spectral[(k, k)].re;
        if d < -1e-10 * scale {
            return Err(ModelError::CovarianceNotPsd { index: k, value: d });
        }
        values[k] = (d.max(0.0) / (upsample as f64 * n0)).sqrt();
    }
    Ok(QVectors { values, block_len: n, upsample })
}

/// The dense reduced channel map `G_{m,n} = √(NP)·Λ_H·Λ_q·W_{NP}·𝐏` for one
/// subband: rows `iN+n` carry `h_spec[iN+n]·q[iN+n]·e^{−2πi(iN+n)c/(NP)}`,
/// all other rows are zero (`q` is sparse).
pub fn build_g(
    channel_taps: &CVec,
    q_dense: &RVec,
    block_len: usize,
    upsample: usize,
    filter_len: usize,
) -> CMat {
    let np = block_len * upsample;
    assert_eq!(q_dense.len(), np, "q vector must have NP entries");
    assert!(filter_len <= np);
    let h_spec = circulant_spectrum(channel_taps, np);
    CMat::from_fn(np, filter_len, |k, c| {
        if q_dense[k] == 0.0 {
            return C64::ZERO;
        }
        let angle = -TAU * (((k as u64 * c as u64) % np as u64) as f64) / np as f64;
        h_spec[k] * q_dense[k] * c64(angle.cos(), angle.sin())
    })
}

/// All of one user's reduced channel maps in compressed form: block `n` holds
/// the `P` nonzero rows of `G_{m,n}` (row `i` is row `iN+n` of the dense map).
#[derive(Clone, Debug)]
pub struct CompressedG {
    /// `N` blocks of shape `P×N_f`.
    pub blocks: Vec<CMat>,
    /// `N`.
    pub block_len: usize,
    /// `P`.
    pub upsample: usize,
}

impl CompressedG {
    /// Re-inflates block `n` to the dense `NP×N_f` map.
    pub fn dense(&self, n: usize) -> CMat {
        let (nn, p) = (self.block_len, self.upsample);
        let nf = self.blocks[n].ncols();
        let mut g = CMat::zeros(nn * p, nf);
        for i in 0..p {
            g.row_mut(i * nn + n).copy_from(&self.blocks[n].row(i));
        }
        g
    }

    /// The effective per-subband channel vector `ĝ_{m,n} = Ĝ_{m,n}·f ∈ C^P`.
    pub fn apply(&self, n: usize, f: &CVec) -> CVec {
        &self.blocks[n] * f
    }
}

/// Builds [`CompressedG`] for one user from the channel spectrum (length
/// `NP`) and the covariance weights.
pub fn build_g_compressed(h_spec: &CVec, q: &QVectors, filter_len: usize) -> CompressedG {
    let (nn, p) = (q.block_len, q.upsample);
    let np = nn * p;
    assert_eq!(h_spec.len(), np, "channel spectrum must have NP entries");
    let blocks = (0..nn)
        .map(|n| {
            CMat::from_fn(p, filter_len, |i, c| {
                let k = i * nn + n;
                let angle = -TAU * (((k as u64 * c as u64) % np as u64) as f64) / np as f64;
                h_spec[k] * q.values[n] * c64(angle.cos(), angle.sin())
            })
        })
        .collect();
    CompressedG { blocks, block_len: nn, upsample: p }
}
