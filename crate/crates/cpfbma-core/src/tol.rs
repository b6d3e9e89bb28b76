//! Centralized numerical tolerances.
//!
//! Every tolerance that appears in a public contract (input validation,
//! invariant checks, cross-form equivalence) is named here so that library
//! code and the test suites agree on a single value. Tolerances fall into
//! three tiers:
//!
//! * *exact-identity* tier (`1e-12`): algebraic identities that hold to
//!   machine precision up to mild rounding (unitarity, permutation block
//!   structure, power identities);
//! * *reconstruction* tier (`1e-8`..`1e-10`): quantities produced by
//!   factorizations or accumulated updates;
//! * *finite-difference* tier (`1e-4`..`1e-5`): derivative checks limited by
//!   truncation error of the difference stencil.

/// Max-norm deviation allowed for a unitary matrix: `‖Wᴴ W − I‖_max`.
pub const UNITARITY: f64 = 1e-12;

/// Relative max-norm deviation under which an input matrix is accepted as
/// Hermitian.
pub const HERMITIAN_INPUT: f64 = 1e-10;

/// Relative reconstruction residual for the Hermitian eigendecomposition.
pub const EVD_RECONSTRUCTION: f64 = 1e-9;

/// Eigenvalues below `-NOT_PSD_REL · ‖A‖` make a nominally PSD input an error.
pub const NOT_PSD_REL: f64 = 1e-8;

/// Relative reconstruction residual for the generalized SVD factors.
pub const GSVD_RECONSTRUCTION: f64 = 1e-8;

/// Ridge added to the second Gram matrix of the GSVD pencil, relative to its
/// trace.
pub const GSVD_RIDGE_REL: f64 = 1e-12;

/// Relative budget residual of the water-filling allocation.
pub const WATER_BUDGET_REL: f64 = 1e-10;

/// Smallest rank-one update denominator accepted before the update is
/// declared near-singular.
pub const WOODBURY_DENOM: f64 = 1e-12;

/// Max-norm of off-block entries after interleaving a matrix that must be
/// per-tone block-diagonal (interference inverse square root tier).
pub const OFF_BLOCK_INV_SQRT: f64 = 1e-12;

/// Off-block tier for interleaved covariance-bearing matrices.
pub const OFF_BLOCK_COVARIANCE: f64 = 1e-10;

/// Relative agreement required between independent sum-rate evaluations of
/// the same operating point.
pub const RATE_EQUIVALENCE: f64 = 1e-8;

/// Exact-identity tier for the transmit-power identity of unit-energy
/// filters under scaled-identity covariance.
pub const POWER_IDENTITY: f64 = 1e-12;

/// Relative tolerance on the transmit-power constraint after a covariance
/// update.
pub const POWER_CONSTRAINT_REL: f64 = 1e-8;

/// Unit-energy tolerance for filters.
pub const UNIT_ENERGY: f64 = 1e-12;

/// Tangency tolerance for Riemannian gradients: `|Re(gradᴴ f)|`.
pub const TANGENCY: f64 = 1e-12;

/// Relative error allowed between analytic gradients and central finite
/// differences.
pub const GRAD_FD_REL: f64 = 1e-5;

/// Relative error allowed between the analytic curvature model and second
/// differences.
pub const HESS_FD_REL: f64 = 1e-4;

/// Accumulated error allowed for a long chain of rank-one inverse updates
/// against a direct inversion.
pub const WOODBURY_CHAIN: f64 = 1e-7;

/// Agreement between the dense and per-tone block LMMSE detectors.
pub const LMMSE_EQUIVALENCE: f64 = 1e-9;

/// Normalized duality-gap target of the interior-point solver.
pub const SDP_GAP: f64 = 1e-7;

/// Stopband budgets may be exceeded by at most this much by an accepted
/// filter.
pub const STOPBAND_SLACK: f64 = 1e-8;

/// Monotonicity slack for sum-rate trajectories.
pub const MONOTONE_SLACK: f64 = 1e-9;
