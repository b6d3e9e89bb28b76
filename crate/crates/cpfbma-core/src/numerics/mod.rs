//! Dense complex linear-algebra kernels shared by the model, receiver, and
//! optimizer modules.
//!
//! Everything here is a pure function of its inputs; no kernel keeps internal
//! state, so values are safe to share read-only across workers. Matrix sizes
//! in this crate stay small (a few hundred rows at most), so all kernels are
//! dense and favor clarity plus verifiable invariants over asymptotics:
//!
//! * [`dft_matrix`] — the unitary discrete Fourier transform matrix;
//! * [`hermitian_evd`] — Hermitian eigendecomposition, eigenvalues descending;
//! * [`inv_sqrt_psd`] — inverse square root of a PSD matrix;
//! * [`gsvd`] — generalized singular value decomposition of a matrix pair;
//! * [`water_fill`] — water-filling allocation for weighted log-sum rates;
//! * [`woodbury_update`] — rank-one update/downdate of a cached inverse;
//! * [`leading_eigpair`] — dominant eigenpair of a Hermitian PSD matrix.

mod gsvd;
mod water_fill;

pub use gsvd::{gsvd, GsvdFactors};
pub use water_fill::water_fill;

use crate::{c64, tol, CMat, CVec, RVec};
use thiserror::Error;

/// Errors surfaced by the numeric kernels. Each variant signals a caller bug
/// or a genuinely degenerate input, never a tolerable roundoff.
#[derive(Debug, Error)]
pub enum NumericsError {
    /// Input claimed to be Hermitian deviates from its adjoint.
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    /// Input claimed to be PSD has a significantly negative eigenvalue.
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    /// The regularized pencil could not be factored.
    #[error("pencil is rank-deficient after ridge regularization ({deficiency} deficient modes)")]
    RankDeficient { deficiency: usize },
    /// A rank-one inverse update would pass through a singular matrix.
    #[error("rank-one update denominator {denominator:.3e} is below the singularity guard")]
    NearSingularUpdate { denominator: f64 },
    /// A required inversion failed.
    #[error("matrix is numerically singular while computing {context}")]
    Singular { context: &'static str },
}

/// Sign of a rank-one modification `A ± b bᴴ` applied through
/// [`woodbury_update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateSign {
    /// `(A + b bᴴ)⁻¹` from `A⁻¹`.
    Add,
    /// `(A − b bᴴ)⁻¹` from `A⁻¹`.
    Subtract,
}

/// Returns the `n`-point unitary DFT matrix `W` with
/// `[W]_{j,k} = exp(−2πi·jk/n)/√n`, so that `Wᴴ W = I`.
///
/// The angle is reduced modulo `n` before evaluating sin/cos, which keeps the
/// unitarity defect at the 1e−15 level even for `n` in the thousands.
pub fn dft_matrix(n: usize) -> CMat {
    assert!(n >= 1, "DFT size must be at least 1");
    let scale = 1.0 / (n as f64).sqrt();
    let step = -2.0 * std::f64::consts::PI / n as f64;
    CMat::from_fn(n, n, |j, k| {
        let phase = ((j as u64 * k as u64) % n as u64) as f64 * step;
        c64(phase.cos() * scale, phase.sin() * scale)
    })
}

/// Max-norm deviation of `a` from its own adjoint.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..a.nrows() {
        for k in j..a.ncols() {
            dev = dev.max((a[(j, k)] - a[(k, j)].conj()).norm());
        }
    }
    dev
}

/// Replaces `a` by its Hermitian part `(A + Aᴴ)/2`, silencing roundoff drift.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).map(|z| z * 0.5)
}

/// Errors unless `a` is Hermitian to within the shared input tolerance,
/// scaled by the largest entry magnitude.
pub fn require_hermitian(a: &CMat) -> Result<(), NumericsError> {
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
    let dev = hermitian_deviation(a);
    if dev > tol::HERMITIAN_INPUT * scale {
        return Err(NumericsError::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Eigendecomposition `A = U diag(λ) Uᴴ` of a Hermitian matrix, with the
/// eigenvalues sorted in non-increasing order and `U` unitary.
///
/// Errors when the input deviates from Hermitian symmetry beyond
/// [`tol::HERMITIAN_INPUT`] (relative), which always signals a caller bug.
pub fn hermitian_evd(a: &CMat) -> Result<(RVec, CMat), NumericsError> {
    require_hermitian(a)?;
    let sym = nalgebra::SymmetricEigen::new(hermitize(a));
    let n = sym.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        sym.eigenvalues[j]
            .partial_cmp(&sym.eigenvalues[i])
            .expect("eigenvalues are finite")
    });
    let values = RVec::from_fn(n, |k, _| sym.eigenvalues[order[k]]);
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &sym.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Inverse square root of a Hermitian PSD matrix.
///
/// Eigenvalues below `ridge` are lifted by `ridge` before inversion;
/// eigenvalues that remain at the numerical-noise floor are treated as a
/// genuine null space and contribute nothing (pseudo-inverse convention), so
/// the result `B` satisfies `B·A·B ≈ I` on the numerical range of `A`.
///
/// Errors when an eigenvalue is more negative than the PSD tolerance allows.
pub fn inv_sqrt_psd(a: &CMat, ridge: f64) -> Result<CMat, NumericsError> {
    assert!(ridge >= 0.0, "ridge must be non-negative");
    let (values, vectors) = hermitian_evd(a)?;
    let scale = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let floor = -tol::NOT_PSD_REL * scale.max(f64::MIN_POSITIVE);
    let mut inv_roots = RVec::zeros(values.len());
    for k in 0..values.len() {
        let v = values[k];
        if v < floor {
            return Err(NumericsError::NotPsd { min_eigenvalue: v });
        }
        let lifted = if v < ridge { v + ridge } else { v };
        // Anything at the noise floor of the spectrum is null space.
        if lifted > 1e-14 * scale.max(1.0) {
            inv_roots[k] = 1.0 / lifted.max(0.0).sqrt();
        }
    }
    let mut b = CMat::zeros(values.len(), values.len());
    for k in 0..values.len() {
        if inv_roots[k] != 0.0 {
            let col = vectors.column(k);
            let w = inv_roots[k];
            // b += w * col * colᴴ, accumulated explicitly to skip null modes.
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    b[(i, j)] += col[i] * col[j].conj() * w;
                }
            }
        }
    }
    Ok(hermitize(&b))
}

/// Rank-one update of a cached inverse:
/// `(A ± b bᴴ)⁻¹ = A⁻¹ ∓ A⁻¹ b (1 ± bᴴ A⁻¹ b)⁻¹ bᴴ A⁻¹`.
///
/// `a_inv` must be the (Hermitian) inverse of the current matrix. Errors when
/// the update denominator falls below [`tol::WOODBURY_DENOM`], which means
/// the modified matrix is numerically singular.
pub fn woodbury_update(a_inv: &CMat, b: &CVec, sign: UpdateSign) -> Result<CMat, NumericsError> {
    let t = a_inv * b;
    let q = b.dotc(&t); // bᴴ A⁻¹ b, real for Hermitian a_inv
    let denom = match sign {
        UpdateSign::Add => c64(1.0, 0.0) + q,
        UpdateSign::Subtract => c64(1.0, 0.0) - q,
    };
    if denom.norm() < tol::WOODBURY_DENOM {
        return Err(NumericsError::NearSingularUpdate {
            denominator: denom.norm(),
        });
    }
    let coeff = match sign {
        UpdateSign::Add => -(c64(1.0, 0.0) / denom),
        UpdateSign::Subtract => c64(1.0, 0.0) / denom,
    };
    let mut out = a_inv.clone();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            out[(i, j)] += coeff * t[i] * t[j].conj();
        }
    }
    Ok(hermitize(&out))
}

/// Dominant eigenpair `(λ₁, v₁)` of a Hermitian PSD matrix, with `‖v₁‖ = 1`.
pub fn leading_eigpair(a: &CMat) -> Result<(f64, CVec), NumericsError> {
    let (values, vectors) = hermitian_evd(a)?;
    let v = CVec::from_column_slice(vectors.column(0).as_slice());
    Ok((values[0], v))
}
