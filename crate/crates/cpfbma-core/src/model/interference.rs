//! Multi-user interference state and the per-user reduced channel.
//!
//! `Φ_m = I + Σ_{i≠m} Σ_n G_{i,n} f_i f_i^H G_{i,n}^H` is the
//! noise-plus-interference Gram seen by user `m`. Every `G_{i,n}` touches only
//! rows `iN+n`, so conjugating by the interleaver leaves `N` independent `P×P`
//! Hermitian blocks; all inverses and square roots happen block-wise and are
//! re-inflated to dense form only on demand.

use crate::model::{CompressedG, FilterBank, ModelError};
use crate::numerics::hermitian_evd;
use crate::{CMat, CVec};

/// Blockwise representation of `Φ_m`, its inverse, and its inverse square
/// root. Block `n` of each field is the `P×P` matrix collecting entries
/// `[iN+n, jN+n]` of the corresponding dense `NP×NP` matrix.
#[derive(Clone, Debug)]
pub struct InterferenceState {
    /// `N` blocks of `Φ`.
    pub phi_blocks: Vec<CMat>,
    /// `N` blocks of `Φ^{-1}`.
    pub phi_inv_blocks: Vec<CMat>,
    /// `N` blocks of `Φ^{-1/2}`.
    pub phi_inv_sqrt_blocks: Vec<CMat>,
    /// `N`.
    pub block_len: usize,
    /// `P`.
    pub upsample: usize,
}

/// Re-inflates interleaved blocks to the dense `NP×NP` matrix they came from.
fn inflate(blocks: &[CMat], block_len: usize, upsample: usize) -> CMat {
    let np = block_len * upsample;
    let mut out = CMat::zeros(np, np);
    for (n, blk) in blocks.iter().enumerate() {
        for i in 0..upsample {
            for j in 0..upsample {
                out[(i * block_len + n, j * block_len + n)] = blk[(i, j)];
            }
        }
    }
    out
}

impl InterferenceState {
    /// The no-interference state `Φ = I` (single user, or all others silent).
    pub fn identity(block_len: usize, upsample: usize) -> Self {
        let eye = CMat::identity(upsample, upsample);
        InterferenceState {
            phi_blocks: vec![eye.clone(); block_len],
            phi_inv_blocks: vec![eye.clone(); block_len],
            phi_inv_sqrt_blocks: vec![eye; block_len],
            block_len,
            upsample,
        }
    }

    /// Dense `Φ`.
    pub fn phi_dense(&self) -> CMat {
        inflate(&self.phi_blocks, self.block_len, self.upsample)
    }

    /// Dense `Φ^{-1}`.
    pub fn phi_inv_dense(&self) -> CMat {
        inflate(&self.phi_inv_blocks, self.block_len, self.upsample)
    }

    /// Dense `Φ^{-1/2}`.
    pub fn phi_inv_sqrt_dense(&self) -> CMat {
        inflate(&self.phi_inv_sqrt_blocks, self.block_len, self.upsample)
    }

    /// `log2 det Φ`, accumulated block by block.
    pub fn log2_det(&self) -> Result<f64, ModelError> {
        self.phi_blocks
            .iter()
            .map(|blk| crate::model::log2_det_hpd(blk))
            .sum()
    }

    /// Recomputes `phi_inv` and `phi_inv_sqrt` for one block after `phi_blocks[n]`
    /// changed. Blocks satisfy `Φ_n ⪰ I`, so eigenvalues below the floor mean
    /// the block was corrupted rather than ill-conditioned.
    pub fn refresh_block(&mut self, n: usize) -> Result<(), ModelError> {
        let (inv, inv_sqrt) = invert_block(&self.phi_blocks[n])?;
        self.phi_inv_blocks[n] = inv;
        self.phi_inv_sqrt_blocks[n] = inv_sqrt;
        Ok(())
    }
}

/// Inverse and inverse square root of one Hermitian block with `Φ_n ⪰ I`.
fn invert_block(block: &CMat) -> Result<(CMat, CMat), ModelError> {
    let (eigs, vecs) = hermitian_evd(block)?;
    let p = block.nrows();
    let mut inv = CMat::zeros(p, p);
    let mut inv_sqrt = CMat::zeros(p, p);
    for k in 0..p {
        let lambda = eigs[k];
        if lambda < 1e-12 {
            return Err(ModelError::NotPositiveDefinite { context: "interference block" });
        }
        let col = vecs.column(k);
        let outer = col * col.adjoint();
        inv += outer.scale(1.0 / lambda);
        inv_sqrt += outer.scale(1.0 / lambda.sqrt());
    }
    Ok((crate::numerics::hermitize(&inv), crate::numerics::hermitize(&inv_sqrt)))
}

/// Builds `Φ` (and its blockwise inverse/inverse-sqrt) from the reduced
/// channel maps and filters of all users, excluding `exclude` if given.
/// `exclude: None` yields the all-users Gram `I + Σ_m Σ_n ĝ ĝ^H` used by the
/// sum-rate evaluators.
pub fn build_interference(
    gs: &[CompressedG],
    filters: &FilterBank,
    exclude: Option<usize>,
) -> Result<InterferenceState, ModelError> {
    assert_eq!(gs.len(), filters.coeffs.len(), "one G tensor per filter");
    let (block_len, upsample) = match gs.first() {
        Some(g) => (g.block_len, g.upsample),
        None => return Err(ModelError::DimensionMismatch { context: "build_interference" }),
    };
    let mut state = InterferenceState::identity(block_len, upsample);
    for (m, g) in gs.iter().enumerate() {
        if Some(m) == exclude {
            continue;
        }
        for n in 0..block_len {
            let gain = g.apply(n, &filters.coeffs[m]);
            let outer = &gain * gain.adjoint();
            state.phi_blocks[n] += outer;
        }
    }
    for n in 0..block_len {
        state.phi_blocks[n] = crate::numerics::hermitize(&state.phi_blocks[n]);
        state.refresh_block(n)?;
    }
    Ok(state)
}

/// User `m`'s whitened channel: `G̃_{m,n} = Φ_b[n]^{-1/2}·Ĝ_{m,n}` (the `P`
/// surviving rows of `Φ^{-1/2} G_{m,n}`) and the rate kernels
/// `B_{m,n} = G̃^H G̃`.
#[derive(Clone, Debug)]
pub struct ReducedUserChannel {
    /// `N` whitened maps of shape `P×N_f`.
    pub g_tilde: Vec<CMat>,
    /// `N` Hermitian PSD kernels of shape `N_f×N_f`.
    pub b: Vec<CMat>,
}

impl ReducedUserChannel {
    /// The inner objective `R̄_m(f) = Σ_n log2(1 + f^H B_n f)`.
    pub fn rate(&self, f: &CVec) -> f64 {
        self.b
            .iter()
            .map(|b| {
                let quad = (f.adjoint() * b * f)[(0, 0)].re;
                (1.0 + quad).log2()
            })
            .sum()
    }
}

/// Whitens one user's reduced channel against an interference state built
/// with that user excluded.
pub fn reduce_user_channel(state: &InterferenceState, g: &CompressedG) -> ReducedUserChannel {
    assert_eq!(state.block_len, g.block_len);
    assert_eq!(state.upsample, g.upsample);
    let g_tilde: Vec<CMat> = (0..state.block_len)
        .map(|n| &state.phi_inv_sqrt_blocks[n] * &g.blocks[n])
        .collect();
    let b = g_tilde
        .iter()
        .map(|gt| crate::numerics::hermitize(&(gt.adjoint() * gt)))
        .collect();
    ReducedUserChannel { g_tilde, b }
}
