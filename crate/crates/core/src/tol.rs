//! Numerical tolerances shared by every module.
//!
//! All arithmetic is `f64`. Relative tolerances are scaled by the quantity
//! named in their doc line.

/// Representation check: `‖gᵒʳᵈᵉʳ − I‖_F ≤ REP_TOL · d₀`.
pub const REP_TOL: f64 = 1e-10;

/// Singular values `≤ RANK_RTOL · σ_max · max(rows, cols)` count as zero.
pub const RANK_RTOL: f64 = 1e-12;

/// Symmetry check for `pd_sqrt`, relative to `max(1, ‖M‖_F)`.
pub const SYM_TOL: f64 = 1e-10;

/// Eigenvalues `≤ PD_RTOL · λ_max` fail the positive-definiteness check.
pub const PD_RTOL: f64 = 1e-12;

/// Adjacent nonzero singular values closer than this (relative) are "equal".
pub const DISTINCT_SV_RTOL: f64 = 1e-8;

/// Truncation is unique when `σ_r > σ_{r+1}(1 + SPECTRAL_GAP_RTOL)`.
pub const SPECTRAL_GAP_RTOL: f64 = 1e-8;

/// Upper bound on enumerated index subsets.
pub const SUBSET_LIMIT: u128 = 1_000_000;

/// Sweep bound for the one-sided Jacobi SVD.
pub const SVD_MAX_SWEEPS: usize = 80;

/// Default unitarity tolerance for `GroupRep::is_unitary`.
pub const UNITARY_TOL: f64 = 1e-10;

/// `|f̄(x)|` below this makes ε_inv undefined.
pub const ORBIT_MEAN_MIN: f64 = 1e-12;

/// Training aborts once the objective exceeds this multiple of its initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Default kernel jitter, relative to `trace(K) / n`.
pub const KERNEL_JITTER_REL: f64 = 1e-10;

/// Accepted relative residual `‖Kα − y‖ / ‖y‖` of a kernel solve.
pub const KERNEL_RESIDUAL_RTOL: f64 = 1e-6;

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;
