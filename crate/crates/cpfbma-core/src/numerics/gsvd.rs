//! Generalized singular value decomposition of a matrix pair.
//!
//! For a pair `(M, N)` of `r×c` matrices (`r ≥ c`) the factorization is
//!
//! ```text
//! M = V_M · Λ_M · Xᴴ        N = V_N · Λ_N · Xᴴ
//! ```
//!
//! with `V_M`, `V_N` unitary `r×r`, `Λ_M`, `Λ_N` non-negative `r×c` diagonals
//! and a shared invertible `c×c` factor `X`. The implementation goes through
//! the Hermitian pencil `(MᴴM, NᴴN)`: the second Gram matrix is
//! ridge-regularized and Cholesky-factored, the whitened pencil is
//! eigendecomposed, and both left factors are recovered by normalizing the
//! mapped generalized eigenvectors. At the column counts this crate uses
//! (`c ≤ 64`) the Gram route is numerically adequate and far simpler than a
//! CS-decomposition.

use super::{hermitian_evd, hermitize, NumericsError};
use crate::{c64, tol, CMat, CVec, RVec};

/// Result of [`gsvd`]. `sig_m`/`sig_n` hold the diagonals of `Λ_M`/`Λ_N`
/// (length `c`); `common` is the shared right factor `X`.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    /// Left unitary factor of the first matrix (`r_M × r_M`).
    pub left_m: CMat,
    /// Left unitary factor of the second matrix (`r_N × r_N`).
    pub left_n: CMat,
    /// Diagonal of `Λ_M`, non-negative, one entry per column.
    pub sig_m: RVec,
    /// Diagonal of `Λ_N`, non-negative, one entry per column.
    pub sig_n: RVec,
    /// Shared invertible right factor `X` (`c × c`).
    pub common: CMat,
}

impl GsvdFactors {
    /// Rebuilds the first matrix as `V_M Λ_M Xᴴ`.
    pub fn reconstruct_m(&self) -> CMat {
        reconstruct(&self.left_m, &self.sig_m, &self.common)
    }

    /// Rebuilds the second matrix as `V_N Λ_N Xᴴ`.
    pub fn reconstruct_n(&self) -> CMat {
        reconstruct(&self.left_n, &self.sig_n, &self.common)
    }

    /// Returns `Y = X⁻ᴴ`, the basis in which the pencil is simultaneously
    /// diagonal; covariances rebuilt as `Y·diag(s)·Yᴴ` satisfy the pencil's
    /// power weighting with weights `sig_n²`.
    pub fn common_inv_adjoint(&self) -> Result<CMat, NumericsError> {
        self.common
            .clone()
            .try_inverse()
            .map(|inv| inv.adjoint())
            .ok_or(NumericsError::Singular {
                context: "inverse of the shared GSVD factor",
            })
    }
}

fn reconstruct(left: &CMat, sig: &RVec, common: &CMat) -> CMat {
    let c = sig.len();
    let mut scaled = CMat::zeros(left.nrows(), c);
    for k in 0..c {
        let col = left.column(k) * c64(sig[k], 0.0);
        scaled.set_column(k, &col);
    }
    scaled * common.adjoint()
}

/// Computes the GSVD of `(m, n_mat)`; both inputs must have the same column
/// count `c` and at least `c` rows.
///
/// The second Gram matrix receives a ridge of [`tol::GSVD_RIDGE_REL`] times
/// its trace before factorization. Errors with
/// [`NumericsError::RankDeficient`] when the regularized pencil still cannot
/// be factored, i.e. the stacked pair has (numerically) deficient column
/// rank.
pub fn gsvd(m: &CMat, n_mat: &CMat) -> Result<GsvdFactors, NumericsError> {
    let c = m.ncols();
    assert_eq!(n_mat.ncols(), c, "GSVD inputs must share a column count");
    assert!(m.nrows() >= c && n_mat.nrows() >= c, "inputs must be tall");

    let a = hermitize(&(m.adjoint() * m));
    let b = hermitize(&(n_mat.adjoint() * n_mat));
    let ridge = tol::GSVD_RIDGE_REL * b.trace().re.max(0.0);
    let mut b_reg = b;
    for i in 0..c {
        b_reg[(i, i)] += c64(ridge, 0.0);
    }

    let chol =
        nalgebra::Cholesky::new(b_reg).ok_or(NumericsError::RankDeficient { deficiency: c })?;
    let l = chol.l();

    // Whitened pencil S = L⁻¹ A L⁻ᴴ, then its eigenbasis.
    let z = l
        .solve_lower_triangular(&a)
        .ok_or(NumericsError::RankDeficient { deficiency: c })?;
    let s = l
        .solve_lower_triangular(&z.adjoint())
        .ok_or(NumericsError::RankDeficient { deficiency: c })?
        .adjoint();
    let (eigvals, eigvecs) = hermitian_evd(&hermitize(&s))?;

    // Generalized eigenvectors Y = L⁻ᴴ V, and the shared factor X = Y⁻ᴴ.
    let y = l
        .adjoint()
        .solve_upper_triangular(&eigvecs)
        .ok_or(NumericsError::RankDeficient { deficiency: c })?;
    let common = y
        .clone()
        .try_inverse()
        .map(|inv| inv.adjoint())
        .ok_or(NumericsError::RankDeficient { deficiency: c })?;

    let my = m * &y;
    let ny = n_mat * &y;
    let (sig_m, left_m) = left_factor(&my, eigvals.as_slice());
    let (sig_n, left_n) = left_factor(&ny, &[]);

    Ok(GsvdFactors {
        left_m,
        left_n,
        sig_m,
        sig_n,
        common,
    })
}

/// Normalizes the columns of `mapped` into a left unitary factor, recording
/// the column norms as the diagonal entries. Columns whose norm sits at the
/// noise floor (possible here only for the first matrix, whose pencil
/// eigenvalue may be zero) are filled from the orthonormal completion, as is
/// the trailing `r − c` block.
fn left_factor(mapped: &CMat, eigvals: &[f64]) -> (RVec, CMat) {
    let (r, c) = mapped.shape();
    let scale = eigvals
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0)
        .sqrt();
    let mut sig = RVec::zeros(c);
    let mut left = CMat::zeros(r, r);
    let mut filled = vec![false; r];
    for k in 0..c {
        let norm = mapped.column(k).norm();
        sig[k] = norm;
        if norm > 1e-12 * scale {
            let col = mapped.column(k) / c64(norm, 0.0);
            left.set_column(k, &col);
            filled[k] = true;
        }
    }
    complete_unitary(&mut left, &mut filled);
    (sig, left)
}

/// Fills the unfilled columns of `left` with an orthonormal completion of the
/// filled ones, via twice-repeated Gram–Schmidt against the standard basis.
fn complete_unitary(left: &mut CMat, filled: &mut [bool]) {
    let r = left.nrows();
    let mut basis: Vec<CVec> = (0..r)
        .filter(|&k| filled[k])
        .map(|k| left.column(k).clone_owned())
        .collect();
    let mut candidates = (0..r).map(|j| {
        let mut e = CVec::zeros(r);
        e[j] = c64(1.0, 0.0);
        e
    });
    for k in 0..r {
        if filled[k] {
            continue;
        }
        let v = loop {
            let cand = candidates
                .next()
                .expect("standard basis always completes an orthonormal set");
            let mut v = cand;
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v -= b * proj;
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                break v / c64(norm, 0.0);
            }
        };
        left.set_column(k, &v);
        basis.push(v);
        filled[k] = true;
    }
}
