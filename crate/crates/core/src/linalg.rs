//! Dense kernels: SVD, Eckart–Young truncation, positive-definite square
//! roots, pseudoinverses and null-space projectors.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration with a fixed cyclic
//! sweep order, so identical inputs give bit-identical factors. Jacobi is
//! slower than bidiagonal QR but resolves small singular values to high
//! relative accuracy, which the spectral-gap and distinctness checks in the
//! solvers rely on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tol;

/// Dense column-major `f64` matrix.
pub type Matrix = DMatrix<f64>;
/// Dense `f64` column vector.
pub type Vector = DVector<f64>;

/// Full singular value decomposition `M = U · diag(sigma) · Vᵀ`.
///
/// `u` is `rows × rows`, `v` is `cols × cols` and `sigma` has
/// `min(rows, cols)` nonincreasing entries. Each left singular vector has its
/// largest-magnitude entry positive (the matching right vector is flipped
/// along with it). Singular vectors are not unique, so callers should compare
/// products, never individual factors.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    /// Threshold below which a singular value counts as zero.
    pub fn zero_threshold(&self) -> f64 {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        tol::RANK_RTOL * smax * self.rows().max(self.cols()) as f64
    }

    /// Number of singular values above [`SvdFactors::zero_threshold`].
    pub fn rank(&self) -> usize {
        let cut = self.zero_threshold();
        self.sigma.iter().filter(|&&s| s > cut).count()
    }

    /// `Σ_{i<r} σᵢ uᵢ vᵢᵀ`.
    pub fn truncated(&self, r: usize) -> Matrix {
        self.select(&(0..r).collect::<Vec<_>>())
    }

    /// `Σ_{i∈indices} σᵢ uᵢ vᵢᵀ`.
    pub fn select(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows(), self.cols());
        for &i in indices {
            let s = self.sigma[i];
            if s != 0.0 {
                out.ger(s, &self.u.column(i), &self.v.column(i), 1.0);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.truncated(self.sigma.len())
    }
}

/// Full SVD of `m`.
///
/// Fails with [`Error::NoConvergence`] if the Jacobi sweeps do not settle
/// within [`tol::SVD_MAX_SWEEPS`].
pub fn svd(m: &Matrix) -> Result<SvdFactors> {
    let (rows, cols) = m.shape();
    let mut f = if rows >= cols {
        svd_tall(m)?
    } else {
        let t = svd_tall(&m.transpose())?;
        SvdFactors { u: t.v, sigma: t.sigma, v: t.u }
    };
    for j in 0..rows {
        let col = f.u.column(j);
        let best = (1..rows).fold(0, |b, i| if col[i].abs() > col[b].abs() { i } else { b });
        if col[best] < 0.0 {
            f.u.column_mut(j).neg_mut();
            if j < f.sigma.len() {
                f.v.column_mut(j).neg_mut();
            }
        }
    }
    Ok(f)
}

// rows >= cols
fn svd_tall(m: &Matrix) -> Result<SvdFactors> {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = Matrix::identity(cols, cols);
    jacobi_sweeps(&mut a, &mut v)?;

    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let smax = order.first().map(|&j| norms[j]).unwrap_or(0.0);
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut v_sorted = Matrix::zeros(cols, cols);
    for (k, &j) in order.iter().enumerate() {
        v_sorted.set_column(k, &v.column(j));
    }

    // Left vectors: normalized columns for significant σ, re-orthogonalized;
    // the rest come from completing the basis.
    let mut basis: Vec<Vector> = Vec::with_capacity(rows);
    let mut u = Matrix::zeros(rows, rows);
    let mut pending = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        if s > f64::EPSILON * smax && s > 0.0 {
            let mut col: Vector = a.column(j) / s;
            orthogonalize(&mut col, &basis);
            let nrm = col.norm();
            if nrm > 0.5 {
                col /= nrm;
                u.set_column(k, &col);
                basis.push(col);
                continue;
            }
        }
        pending.push(k);
    }
    // Complete with the standard basis vector that keeps the largest residual.
    for k in pending.into_iter().chain(cols..rows) {
        let mut best: Option<Vector> = None;
        for e in 0..rows {
            let mut col = Vector::zeros(rows);
            col[e] = 1.0;
            orthogonalize(&mut col, &basis);
            if best.as_ref().is_none_or(|b| col.norm() > b.norm()) {
                best = Some(col);
            }
        }
        let mut col = best.expect("rows > 0");
        col /= col.norm();
        u.set_column(k, &col);
        basis.push(col);
    }
    Ok(SvdFactors { u, sigma, v: v_sorted })
}

fn orthogonalize(col: &mut Vector, basis: &[Vector]) {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dot(col);
            col.axpy(-proj, b, 1.0);
        }
    }
}

fn jacobi_sweeps(a: &mut Matrix, v: &mut Matrix) -> Result<()> {
    let n = a.ncols();
    for _ in 0..tol::SVD_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma == 0.0 || gamma.abs() <= 2.0 * f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                if t == 0.0 {
                    continue;
                }
                rotated = true;
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(a, i, j, c, s);
                rotate(v, i, j, c, s);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::NoConvergence { sweeps: tol::SVD_MAX_SWEEPS })
}

fn rotate(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let x = m[(r, i)];
        let y = m[(r, j)];
        m[(r, i)] = c * x - s * y;
        m[(r, j)] = s * x + c * y;
    }
}

/// Numerical rank under the shared [`tol::RANK_RTOL`] cutoff.
pub fn numerical_rank(m: &Matrix) -> Result<usize> {
    Ok(svd(m)?.rank())
}

/// Best rank-`r` approximation in Frobenius norm (Eckart–Young).
///
/// `r = 0` gives the zero matrix. Ties among equal singular values are broken
/// by the order of the deterministic SVD.
pub fn best_rank_r(m: &Matrix, r: usize) -> Result<Matrix> {
    let max = m.nrows().min(m.ncols());
    if r > max {
        return Err(Error::RankOutOfRange { r, max });
    }
    if r == max {
        return Ok(m.clone());
    }
    Ok(svd(m)?.truncated(r))
}

/// Square root and inverse square root of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct PdRoot {
    pub sqrt: Matrix,
    pub inv_sqrt: Matrix,
    /// Eigenvalues of the input, nonincreasing.
    pub eigenvalues: Vec<f64>,
}

/// Factor a symmetric positive definite matrix through its eigenbasis.
pub fn pd_root(m: &Matrix) -> Result<PdRoot> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let asym = (m - m.transpose()).norm();
    if asym > tol::SYM_TOL * m.norm().max(1.0) {
        return Err(Error::NotSymmetric { residual: asym });
    }
    let sym = (m + m.transpose()) * 0.5;
    let f = svd(&sym)?;
    // For symmetric input the right singular vectors are eigenvectors; the
    // Rayleigh quotient recovers the sign the SVD discards.
    let lambdas: Vec<f64> = (0..rows)
        .map(|j| {
            let vj = f.v.column(j);
            vj.dot(&(&sym * vj))
        })
        .collect();
    let lmax = lambdas.iter().cloned().fold(0.0_f64, f64::max);
    let lmin = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    if rows > 0 && (lmax <= 0.0 || lmin <= tol::PD_RTOL * lmax) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lmin });
    }
    let mut root = Matrix::zeros(rows, rows);
    let mut inv = Matrix::zeros(rows, rows);
    for j in 0..rows {
        let s = f.sigma[j];
        let vj = f.v.column(j);
        root.ger(s.sqrt(), &vj, &vj, 1.0);
        inv.ger(1.0 / s.sqrt(), &vj, &vj, 1.0);
    }
    Ok(PdRoot { sqrt: root, inv_sqrt: inv, eigenvalues: f.sigma })
}

/// Symmetric positive definite square root `P` with `P·P = M`.
pub fn pd_sqrt(m: &Matrix) -> Result<Matrix> {
    pd_root(m).map(|r| r.sqrt)
}

/// Moore–Penrose pseudoinverse with the shared rank cutoff.
pub fn pinv(m: &Matrix) -> Result<Matrix> {
    let f = svd(m)?;
    let k = f.rank();
    let mut out = Matrix::zeros(m.ncols(), m.nrows());
    for i in 0..k {
        out.ger(1.0 / f.sigma[i], &f.v.column(i), &f.u.column(i), 1.0);
    }
    Ok(out)
}

/// Orthogonal projector `I − G·G⁺` onto the left null space of `g`.
///
/// Computed as `I − U_k U_kᵀ` from the significant left singular vectors,
/// which is the same operator and exactly symmetric.
pub fn left_null_projector(g: &Matrix) -> Result<Matrix> {
    let f = svd(g)?;
    let k = f.rank();
    let mut pi = Matrix::identity(g.nrows(), g.nrows());
    for i in 0..k {
        let ui = f.u.column(i);
        pi.ger(-1.0, &ui, &ui, 1.0);
    }
    Ok(pi)
}

/// Orthonormal basis of the left null space of `g`, one vector per row.
///
/// Each row's first entry above `1e-12` in magnitude is made positive.
pub fn left_null_basis(g: &Matrix) -> Result<Matrix> {
    let f = svd(g)?;
    let k = f.rank();
    let d = g.nrows() - k;
    let mut b = Matrix::zeros(d, g.nrows());
    for (row, j) in (k..g.nrows()).enumerate() {
        let mut col = f.u.column(j).clone_owned();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        b.set_row(row, &col.transpose());
    }
    Ok(b)
}

/// `‖A − B‖_F / ‖B‖_F`, or the absolute distance when `B = 0`.
pub fn relative_distance(a: &Matrix, b: &Matrix) -> f64 {
    let diff = (a - b).norm();
    let nb = b.norm();
    if nb > 0.0 {
        diff / nb
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn check_factors(m: &Matrix, f: &SvdFactors) {
        let (rows, cols) = m.shape();
        let smax = f.sigma.first().copied().unwrap_or(0.0);
        let rec = (f.reconstruct() - m).norm();
        assert!(rec <= 1e-10 * smax.max(1e-300) * rows.max(cols) as f64 || rec == 0.0, "rec {rec}");
        assert!((f.u.transpose() * &f.u - Matrix::identity(rows, rows)).norm() < 1e-10);
        assert!((f.v.transpose() * &f.v - Matrix::identity(cols, cols)).norm() < 1e-10);
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_of_diagonal() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 2.0, 1.0]));
        let f = svd(&m).unwrap();
        assert_eq!(f.sigma, vec![3.0, 2.0, 1.0]);
        for i in 0..3 {
            assert!((f.u[(i, i)].abs() - 1.0).abs() < 1e-15);
            assert!((f.v[(i, i)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn svd_of_zero_matrix() {
        let m = Matrix::zeros(3, 5);
        let f = svd(&m).unwrap();
        assert!(f.sigma.iter().all(|&s| s == 0.0));
        check_factors(&m, &f);
        assert_eq!(f.rank(), 0);
    }

    #[test]
    fn svd_random_shapes() {
        for (seed, (r, c)) in [(6, 4), (4, 6), (5, 5), (1, 7), (7, 1), (9, 3)].into_iter().enumerate() {
            let m = gaussian(r, c, seed as u64);
            let f = svd(&m).unwrap();
            check_factors(&m, &f);
        }
    }

    #[test]
    fn svd_rank_deficient() {
        let a = gaussian(6, 2, 11);
        let b = gaussian(2, 5, 12);
        let m = &a * &b;
        let f = svd(&m).unwrap();
        check_factors(&m, &f);
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn svd_is_deterministic() {
        let m = gaussian(7, 5, 3);
        let a = svd(&m).unwrap();
        let b = svd(&m).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
        assert_eq!(a.sigma, b.sigma);
    }

    #[test]
    fn truncation_examples() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 2.0, 1.0]));
        let t = best_rank_r(&m, 2).unwrap();
        let want = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 2.0, 0.0]));
        assert!((t - want).norm() < 1e-14);
        let g = gaussian(4, 6, 5);
        assert!((best_rank_r(&g, 4).unwrap() - &g).norm() < 1e-10);
        assert_eq!(best_rank_r(&g, 0).unwrap(), Matrix::zeros(4, 6));
        assert_eq!(best_rank_r(&g, 5), Err(Error::RankOutOfRange { r: 5, max: 4 }));
    }

    #[test]
    fn eckart_young_random_search() {
        // Random-search oracle: no factored rank-2 matrix beats the truncation.
        let m = gaussian(5, 5, 21);
        let best = (&m - best_rank_r(&m, 2).unwrap()).norm();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..1000 {
            let a = Matrix::from_fn(5, 2, |_, _| StandardNormal.sample(&mut rng));
            let b = Matrix::from_fn(2, 5, |_, _| StandardNormal.sample(&mut rng));
            assert!(best <= (&m - a * b).norm());
        }
        let f = svd(&m).unwrap();
        let tail: f64 = f.sigma[2..].iter().map(|s| s * s).sum();
        assert!((best * best - tail).abs() <= 1e-10 * tail);
    }

    #[test]
    fn pd_sqrt_examples() {
        let i = Matrix::identity(3, 3);
        assert!((pd_sqrt(&i).unwrap() - &i).norm() < 1e-15);
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]));
        let want = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 3.0]));
        assert!((pd_sqrt(&d).unwrap() - want).norm() < 1e-14);
        let a = gaussian(5, 5, 8);
        let m = &a * a.transpose() + Matrix::identity(5, 5);
        let p = pd_sqrt(&m).unwrap();
        assert!((&p * &p - &m).norm() < 1e-10 * m.norm());
        assert!((&p - p.transpose()).norm() < 1e-12);
        let r = pd_root(&m).unwrap();
        assert!((&r.inv_sqrt * &r.sqrt - Matrix::identity(5, 5)).norm() < 1e-10);
    }

    #[test]
    fn pd_sqrt_errors() {
        let ns = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(pd_sqrt(&ns), Err(Error::NotSymmetric { .. })));
        let indef = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(pd_sqrt(&indef), Err(Error::NotPositiveDefinite { .. })));
        let singular = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(pd_sqrt(&singular), Err(Error::NotPositiveDefinite { .. })));
        assert!(matches!(pd_sqrt(&Matrix::zeros(2, 3)), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn pinv_examples() {
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 4.0]));
        let want = Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.25]));
        assert!((pinv(&d).unwrap() - want).norm() < 1e-15);
        assert_eq!(pinv(&Matrix::zeros(2, 3)).unwrap(), Matrix::zeros(3, 2));
        let g = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let gp = pinv(&g).unwrap();
        assert!((&gp - &g * 0.25).norm() < 1e-14);
        // Penrose identities
        assert!((&g * &gp * &g - &g).norm() < 1e-8);
        assert!((&gp * &g * &gp - &gp).norm() < 1e-8);
        assert!((&g * &gp - (&g * &gp).transpose()).norm() < 1e-8);
        assert!((&gp * &g - (&gp * &g).transpose()).norm() < 1e-8);
    }

    #[test]
    fn projector_examples() {
        assert_eq!(left_null_projector(&Matrix::zeros(3, 3)).unwrap(), Matrix::identity(3, 3));
        let g = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let pi = left_null_projector(&g).unwrap();
        assert!((pi - Matrix::from_element(2, 2, 0.5)).norm() < 1e-14);
        let g = gaussian(6, 3, 31);
        let pi = left_null_projector(&g).unwrap();
        assert!((&pi * &g).norm() < 1e-10);
        assert!((&pi * &pi - &pi).norm() < 1e-10);
        assert_eq!(pi, pi.transpose());
    }

    #[test]
    fn null_basis_sign_convention() {
        let g = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let b = left_null_basis(&g).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b - Matrix::from_row_slice(1, 2, &[h, h])).norm() < 1e-14);
    }
}
