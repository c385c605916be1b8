//! Low-rank linear regression under group symmetry.
//!
//! Given data `X` (`d0 × n`), targets `Y` (`dL × n`) and a finite group acting
//! on inputs through a representation `ρ`, the crate finds rank-`r` maps `W`
//! that are invariant (`W ρ(g) = W` for every `g`), either exactly, through a
//! penalty, or by training on the orbit-augmented dataset.
//!
//! - [`grouprep`]: representations, presets and the invariance constraint.
//! - [`linalg`]: SVD, matrix square roots, truncation.
//! - [`solvers`]: closed-form optima, regularization paths, critical points.
//! - [`trainer`]: deep linear and two-layer networks trained with Adam.
//! - [`ntk`]: limiting and empirical tangent kernels and their symmetrized forms.
//!
//! ```
//! use invlrr::grouprep::c4_image_rotation;
//! use invlrr::solvers::{solve_constrained, RegressionProblem};
//! use invlrr::Matrix;
//!
//! let rep = c4_image_rotation(2);
//! let x = Matrix::from_fn(4, 8, |i, j| (((3 * i + 5 * j) as f64).powi(2) * 0.37).sin());
//! let y = Matrix::from_fn(2, 8, |i, j| (((i + 2 * j) as f64).powi(2) * 0.91).cos());
//! let sol = solve_constrained(&RegressionProblem::new(x, y, 1)?.with_rep(rep)?)?;
//! assert!(sol.invariance_residual < 1e-12);
//! # Ok::<(), invlrr::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod error;
pub mod grouprep;
pub mod linalg;
pub mod ntk;
pub mod solvers;
pub mod tol;
pub mod trainer;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/groups.md")]
    struct Groups;
    #[doc = include_str!("../../../book/src/low_rank.md")]
    struct LowRank;
    #[doc = include_str!("../../../book/src/closed_form.md")]
    struct ClosedForm;
    #[doc = include_str!("../../../book/src/regularization_path.md")]
    struct RegularizationPath;
    #[doc = include_str!("../../../book/src/critical_points.md")]
    struct CriticalPoints;
    #[doc = include_str!("../../../book/src/training.md")]
    struct Training;
    #[doc = include_str!("../../../book/src/ntk.md")]
    struct Ntk;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
