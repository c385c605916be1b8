//! Closed-form global optima for rank-bounded regression under invariance.
//!
//! All three problems reduce to an Eckart–Young truncation after a change of
//! variables `W̃ = W·R⁻¹`:
//!
//! | mode        | transformed target `Z̄`              | right factor `R⁻¹` |
//! |-------------|--------------------------------------|--------------------|
//! | constrained | `Z (I − G̃G̃⁺)`                       | `P⁻¹`              |
//! | regularized | `Z B(λ)⁻¹`                           | `B(λ)⁻¹ P⁻¹`       |
//! | augmented   | `\|𝒢\| Y Xᵀ Ḡᵀ Q⁻¹`                   | `Q⁻¹`              |
//!
//! with `P = (XXᵀ)^{1/2}`, `Z = YXᵀP⁻¹`, `G̃ = P⁻¹G`,
//! `B(λ)² = I + nλ G̃G̃ᵀ` and `Q² = Σ_g ρ(g)XXᵀρ(g)ᵀ`. The optimum is
//! `best_rank_r(Z̄, r) · R⁻¹`, and the critical points on the rank-`r`
//! variety are `U Σ_𝓘 Vᵀ · R⁻¹` for index subsets `𝓘` of the nonzero
//! singular values of `Z̄`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grouprep::{ConstraintMatrix, GroupRep};
use crate::linalg::{self, Matrix, PdRoot, SvdFactors};
use crate::tol;

/// Which of the three invariance strategies to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Constrained,
    Augmented,
    Regularized,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Constrained => "constrained",
            Mode::Augmented => "augmented",
            Mode::Regularized => "regularized",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constrained" => Ok(Mode::Constrained),
            "augmented" => Ok(Mode::Augmented),
            "regularized" => Ok(Mode::Regularized),
            other => Err(Error::InvalidConfig(format!("unknown solver mode `{other}`"))),
        }
    }
}

/// Non-fatal conditions attached to a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Warning {
    /// `r ≥ d`: the projected least-squares solution already satisfies the rank bound.
    RankConstraintVacuous,
    /// The transformed target has rank `≤ r`.
    RankAssumptionViolated,
    /// `σ_r ≤ σ_{r+1}(1 + 1e-8)`: the truncation is not unique (the loss still is).
    NonUniqueOptimum,
    /// `σ_r − σ_{r+1} < 1e-8 σ_1` somewhere on a regularization path.
    SpectralGapSmall,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Warning::RankConstraintVacuous => "RankConstraintVacuous",
            Warning::RankAssumptionViolated => "RankAssumptionViolated",
            Warning::NonUniqueOptimum => "NonUniqueOptimum",
            Warning::SpectralGapSmall => "SpectralGapSmall",
        })
    }
}

/// Data, rank bound and invariance specification of one regression instance.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    x: Matrix,
    y: Matrix,
    r: usize,
    constraint: Option<ConstraintMatrix>,
    rep: Option<GroupRep>,
    lambda: Option<f64>,
    whitening: PdRoot,
    z: Matrix,
}

impl RegressionProblem {
    /// `x` is `d₀ × n`, `y` is `d_L × n`; `XXᵀ` must be positive definite.
    pub fn new(x: Matrix, y: Matrix, r: usize) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::ShapeMismatch(format!("X has {} samples but Y has {}", x.ncols(), y.ncols())));
        }
        if x.nrows() == 0 || y.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::ShapeMismatch("empty data matrix".into()));
        }
        let whitening = match linalg::pd_root(&(&x * x.transpose())) {
            Ok(w) => w,
            Err(Error::NotPositiveDefinite { .. }) => return Err(Error::SingularData),
            Err(e) => return Err(e),
        };
        let z = &y * x.transpose() * &whitening.inv_sqrt;
        Ok(Self { x, y, r, constraint: None, rep: None, lambda: None, whitening, z })
    }

    /// Attach an invariance constraint `G` with `d₀` rows.
    pub fn with_constraint(mut self, g: ConstraintMatrix) -> Result<Self> {
        if g.dim() != self.d0() {
            return Err(Error::DimensionMismatch { expected: self.d0(), found: g.dim() });
        }
        self.constraint = Some(g);
        Ok(self)
    }

    /// Attach a representation; also sets the constraint to its invariance constraint.
    pub fn with_rep(mut self, rep: GroupRep) -> Result<Self> {
        if rep.dim() != self.d0() {
            return Err(Error::DimensionMismatch { expected: self.d0(), found: rep.dim() });
        }
        self.constraint = Some(rep.invariance_constraint()?);
        self.rep = Some(rep);
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be finite and nonnegative, got {lambda}")));
        }
        self.lambda = Some(lambda);
        Ok(self)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn d0(&self) -> usize {
        self.x.nrows()
    }

    pub fn dl(&self) -> usize {
        self.y.nrows()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn constraint(&self) -> Option<&ConstraintMatrix> {
        self.constraint.as_ref()
    }

    pub fn rep(&self) -> Option<&GroupRep> {
        self.rep.as_ref()
    }

    /// `P = (XXᵀ)^{1/2}`.
    pub fn data_root(&self) -> &Matrix {
        &self.whitening.sqrt
    }

    /// `Z = Y Xᵀ P⁻¹`.
    pub fn whitened_target(&self) -> &Matrix {
        &self.z
    }

    /// `r ≥ min(d₀, d_L)`: the rank bound does not restrict the function space.
    pub fn is_filling(&self) -> bool {
        self.r >= self.d0().min(self.dl())
    }

    /// Dimension of the invariant subspace, if a constraint is attached.
    pub fn invariant_dim(&self) -> Option<usize> {
        self.constraint.as_ref().map(|g| g.nullity())
    }

    fn require_constraint(&self) -> Result<&ConstraintMatrix> {
        self.constraint.as_ref().ok_or(Error::MissingInput("invariance constraint"))
    }

    fn require_rep(&self) -> Result<&GroupRep> {
        self.rep.as_ref().ok_or(Error::MissingInput("group representation"))
    }

    fn require_lambda(&self) -> Result<f64> {
        self.lambda.ok_or(Error::MissingInput("lambda"))
    }

    /// Problem objective of `w` under `mode`.
    pub fn objective(&self, mode: Mode, w: &Matrix) -> Result<f64> {
        match mode {
            Mode::Constrained => empirical_risk(w, &self.x, &self.y, None),
            Mode::Regularized => {
                let g = self.require_constraint()?;
                empirical_risk(w, &self.x, &self.y, Some((g.entries(), self.require_lambda()?)))
            }
            Mode::Augmented => augmented_risk(w, &self.x, &self.y, self.require_rep()?),
        }
    }

    /// Transformed target and right factor for `mode`.
    pub fn transformed_target(&self, mode: Mode) -> Result<TransformedTarget> {
        let p_inv = &self.whitening.inv_sqrt;
        match mode {
            Mode::Constrained => {
                let g = self.require_constraint()?;
                let g_tilde = p_inv * g.entries();
                let pi = linalg::left_null_projector(&g_tilde)?;
                Ok(TransformedTarget { target: &self.z * pi, right_factor: p_inv.clone() })
            }
            Mode::Regularized => {
                let lambda = self.require_lambda()?;
                self.regularized_target(lambda)
            }
            Mode::Augmented => {
                let rep = self.require_rep()?;
                let elems = rep.elements()?;
                let cov = &self.x * self.x.transpose();
                let d0 = self.d0();
                let q2 = elems.iter().fold(Matrix::zeros(d0, d0), |acc, g| acc + g * &cov * g.transpose());
                let q = linalg::pd_root(&q2).map_err(|e| match e {
                    Error::NotPositiveDefinite { .. } => Error::SingularData,
                    e => e,
                })?;
                let gbar = rep.group_average()?;
                let target = &self.y * self.x.transpose() * gbar.transpose() * &q.inv_sqrt * elems.len() as f64;
                Ok(TransformedTarget { target, right_factor: q.inv_sqrt })
            }
        }
    }

    fn regularized_target(&self, lambda: f64) -> Result<TransformedTarget> {
        let g = self.require_constraint()?;
        let p_inv = &self.whitening.inv_sqrt;
        let g_tilde = p_inv * g.entries();
        let d0 = self.d0();
        let b2 = Matrix::identity(d0, d0) + &g_tilde * g_tilde.transpose() * (self.n() as f64 * lambda);
        let b = linalg::pd_root(&b2)?;
        Ok(TransformedTarget { target: &self.z * &b.inv_sqrt, right_factor: &b.inv_sqrt * p_inv })
    }
}

/// `Z̄` and `R⁻¹` such that the problem becomes `min ‖W̃ − Z̄‖_F` over rank `≤ r`, `W = W̃ R⁻¹`.
#[derive(Debug, Clone)]
pub struct TransformedTarget {
    pub target: Matrix,
    pub right_factor: Matrix,
}

/// Global optimum of one of the three problems.
#[derive(Debug, Clone)]
pub struct RankBoundedSolution {
    pub mode: Mode,
    /// End-to-end `d_L × d₀` matrix.
    pub w: Matrix,
    /// Problem objective at `w` (penalized or averaged as the mode requires).
    pub loss: f64,
    pub rank: usize,
    /// `‖W G‖_F`.
    pub invariance_residual: f64,
    pub warnings: Vec<Warning>,
    /// Singular values of the transformed target.
    pub target_spectrum: Vec<f64>,
}

/// Hard-wired invariance: `min (1/n)‖WX − Y‖²` s.t. `WG = 0`, `rank W ≤ r`.
pub fn solve_constrained(problem: &RegressionProblem) -> Result<RankBoundedSolution> {
    solve(problem, Mode::Constrained)
}

/// Penalized: `min (1/n)‖WX − Y‖² + λ‖WG‖²` s.t. `rank W ≤ r`.
pub fn solve_regularized(problem: &RegressionProblem) -> Result<RankBoundedSolution> {
    solve(problem, Mode::Regularized)
}

/// Data augmentation: `min (1/(n|𝒢|)) Σ_g ‖Wρ(g)X − Y‖²` s.t. `rank W ≤ r`.
///
/// The optimum satisfies `WG = 0` for any finite-group representation, since
/// `ρ(g)Q²ρ(g)ᵀ = Q²` and `ρ(g)Ḡ = Ḡ`. On invariant maps the averaged loss is
/// the plain loss, so the optimum coincides with [`solve_constrained`].
pub fn solve_augmented(problem: &RegressionProblem) -> Result<RankBoundedSolution> {
    solve(problem, Mode::Augmented)
}

pub fn solve(problem: &RegressionProblem, mode: Mode) -> Result<RankBoundedSolution> {
    let tt = problem.transformed_target(mode)?;
    finish(problem, mode, &tt)
}

fn finish(problem: &RegressionProblem, mode: Mode, tt: &TransformedTarget) -> Result<RankBoundedSolution> {
    let f = linalg::svd(&tt.target)?;
    let r = problem.r.min(f.sigma.len());
    let w = f.truncated(r) * &tt.right_factor;
    let mut warnings = truncation_warnings(&f, problem.r);
    if mode != Mode::Regularized {
        if let Some(d) = problem.invariant_dim() {
            if problem.r >= d {
                warnings.push(Warning::RankConstraintVacuous);
            }
        }
    }
    warnings.sort();
    let invariance_residual = match &problem.constraint {
        Some(g) => (&w * g.entries()).norm(),
        None => 0.0,
    };
    Ok(RankBoundedSolution {
        mode,
        loss: problem.objective(mode, &w)?,
        rank: linalg::numerical_rank(&w)?,
        invariance_residual,
        warnings,
        target_spectrum: f.sigma,
        w,
    })
}

fn truncation_warnings(f: &SvdFactors, r: usize) -> Vec<Warning> {
    let mut out = Vec::new();
    let k = f.rank();
    if k <= r {
        out.push(Warning::RankAssumptionViolated);
    } else if r > 0 && f.sigma[r - 1] <= f.sigma[r] * (1.0 + tol::SPECTRAL_GAP_RTOL) {
        out.push(Warning::NonUniqueOptimum);
    }
    out
}

/// One point on the regularization path.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub lambda: f64,
    pub w: Matrix,
    /// Penalized objective at `w`.
    pub loss: f64,
    pub invariance_residual: f64,
    /// `‖W(λ) − Ŵ^inv‖_F`.
    pub distance_to_inv: f64,
    /// `σ_r − σ_{r+1} < 1e-8 σ_1` for `Z̄(λ)`.
    pub spectral_gap_small: bool,
}

/// Solve the penalized problem on each `λ` of a strictly increasing positive grid.
///
/// Samples are computed in parallel; the output order matches the grid.
pub fn regularization_path(problem: &RegressionProblem, lambdas: &[f64]) -> Result<Vec<PathSample>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidGrid(format!("lambda {bad} is not a positive finite number")));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    let w_inv = solve_constrained(problem)?.w;
    let g = problem.require_constraint()?.entries().clone();
    let r = problem.r;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let tt = problem.regularized_target(lambda)?;
            let f = linalg::svd(&tt.target)?;
            let w = f.truncated(r.min(f.sigma.len())) * &tt.right_factor;
            let spectral_gap_small =
                r > 0 && r < f.sigma.len() && f.sigma[r - 1] - f.sigma[r] < tol::SPECTRAL_GAP_RTOL * f.sigma[0];
            Ok(PathSample {
                lambda,
                loss: empirical_risk(&w, &problem.x, &problem.y, Some((&g, lambda)))?,
                invariance_residual: (&w * &g).norm(),
                distance_to_inv: (&w - &w_inv).norm(),
                spectral_gap_small,
                w,
            })
        })
        .collect()
}

/// A critical point of the objective restricted to rank-`≤ r` matrices.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub w: Matrix,
    /// Selected singular-value indices (0-based, sorted).
    pub index_set: Vec<usize>,
    /// `Σ_{i∉𝓘} σᵢ²` of the transformed target.
    pub loss: f64,
    /// Problem objective at `w`.
    pub objective: f64,
    pub is_global_min: bool,
}

/// Transformed-space critical points `U Σ_𝓘 Vᵀ` of `‖W̃ − target‖²` on rank `≤ r`.
///
/// Index sets range over `r`-subsets of the `k` nonzero singular values
/// (a single full set when `r ≥ k`). Sorted by loss, ascending.
pub fn target_critical_points(target: &Matrix, r: usize) -> Result<Vec<(Vec<usize>, Matrix, f64)>> {
    let f = linalg::svd(target)?;
    let k = f.rank();
    for i in 0..k.saturating_sub(1) {
        let gap = (f.sigma[i] - f.sigma[i + 1]) / f.sigma[i];
        if gap <= tol::DISTINCT_SV_RTOL {
            return Err(Error::DegenerateSpectrum { index: i, gap });
        }
    }
    let take = r.min(k);
    let count = binomial(k, take);
    if count > tol::SUBSET_LIMIT {
        return Err(Error::TooManySubsets { count });
    }
    let sq: Vec<f64> = f.sigma[..k].iter().map(|s| s * s).collect();
    let mut out: Vec<(Vec<usize>, Matrix, f64)> = Combinations::new(k, take)
        .map(|set| {
            let loss = (0..k).filter(|i| !set.contains(i)).map(|i| sq[i]).sum();
            let w = f.select(&set);
            (set, w, loss)
        })
        .collect();
    out.sort_by(|a, b| a.2.total_cmp(&b.2).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// All critical points of the `mode` problem, mapped back to end-to-end matrices.
///
/// Fails with [`Error::DegenerateSpectrum`] when two nonzero singular values of
/// the transformed target coincide (the critical set is then not finite).
pub fn enumerate_critical_points(problem: &RegressionProblem, mode: Mode) -> Result<Vec<CriticalPoint>> {
    let tt = problem.transformed_target(mode)?;
    let points = target_critical_points(&tt.target, problem.r)?;
    let global: Vec<usize> = points.first().map(|p| p.0.clone()).unwrap_or_default();
    points
        .into_iter()
        .map(|(set, wt, loss)| {
            let w = wt * &tt.right_factor;
            Ok(CriticalPoint {
                objective: problem.objective(mode, &w)?,
                is_global_min: set == global,
                index_set: set,
                loss,
                w,
            })
        })
        .collect()
}

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let cur = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, cur }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.cur = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// `(1/n)‖WX − Y‖_F²`, plus `λ‖WG‖_F²` when a penalty is given.
pub fn empirical_risk(w: &Matrix, x: &Matrix, y: &Matrix, penalty: Option<(&Matrix, f64)>) -> Result<f64> {
    if w.ncols() != x.nrows() || w.nrows() != y.nrows() || x.ncols() != y.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "W {}x{}, X {}x{}, Y {}x{}",
            w.nrows(),
            w.ncols(),
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let mut risk = (w * x - y).norm_squared() / x.ncols() as f64;
    if let Some((g, lambda)) = penalty {
        if g.nrows() != w.ncols() {
            return Err(Error::ShapeMismatch(format!("G has {} rows, W has {} columns", g.nrows(), w.ncols())));
        }
        risk += lambda * (w * g).norm_squared();
    }
    Ok(risk)
}

/// `(1/(n|𝒢|)) Σ_g ‖Wρ(g)X − Y‖_F²`.
pub fn augmented_risk(w: &Matrix, x: &Matrix, y: &Matrix, rep: &GroupRep) -> Result<f64> {
    let elems = rep.elements()?;
    let mut total = 0.0;
    for g in &elems {
        total += empirical_risk(&(w * g), x, y, None)?;
    }
    Ok(total / elems.len() as f64)
}

/// Split of `W` into its invariant part and the orthogonal remainder.
#[derive(Debug, Clone)]
pub struct InvarianceSplit {
    /// `W (I − GG⁺)`.
    pub invariant: Matrix,
    /// `W − W_inv = W GG⁺`.
    pub perp: Matrix,
    /// `‖W_inv‖_F² / ‖W‖_F²`, defined as 1 for `W = 0`.
    pub ratio: f64,
}

pub fn invariance_decomposition(w: &Matrix, g: &ConstraintMatrix) -> Result<InvarianceSplit> {
    if w.ncols() != g.dim() {
        return Err(Error::ShapeMismatch(format!("W has {} columns, G has {} rows", w.ncols(), g.dim())));
    }
    let invariant = w * g.projector()?;
    Ok(split_with(w, invariant))
}

/// As [`invariance_decomposition`] with a precomputed projector `I − GG⁺`.
pub fn invariance_decomposition_with(w: &Matrix, projector: &Matrix) -> InvarianceSplit {
    split_with(w, w * projector)
}

fn split_with(w: &Matrix, invariant: Matrix) -> InvarianceSplit {
    let perp = w - &invariant;
    let total = w.norm_squared();
    let ratio = if total > 0.0 { invariant.norm_squared() / total } else { 1.0 };
    InvarianceSplit { invariant, perp, ratio }
}
