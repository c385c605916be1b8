//! Test-only oracles.
//!
//! Everything here deliberately avoids the library's own factorizations:
//! square roots, projections and truncations all come from nalgebra's
//! symmetric eigensolver, and optima from iterative methods. The library is
//! then checked against these independent routes.

use invlrr::grouprep::GroupRep;
use invlrr::Matrix;
use nalgebra::SymmetricEigen;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use invlrr::Vector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

pub fn unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    let v = gaussian_vector(d, rng);
    let n = v.norm();
    v / n
}

pub fn rel_dist(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}

/// Random permutation of `0..d0` with one `k`-cycle, further cycles whose
/// lengths divide `k`, and fixed points; its order is exactly `k`.
pub fn cyclic_permutation(d0: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(k >= 1 && k <= d0);
    let divisors: Vec<usize> = (1..=k).filter(|&l| k.is_multiple_of(l)).collect();
    let mut lengths = vec![k];
    let mut left = d0 - k;
    while left > 0 {
        let choices: Vec<usize> = divisors.iter().copied().filter(|l| *l <= left).collect();
        let l = choices[rng.random_range(0..choices.len())];
        lengths.push(l);
        left -= l;
    }
    let mut labels: Vec<usize> = (0..d0).collect();
    labels.shuffle(rng);
    let mut perm = vec![0; d0];
    let mut at = 0;
    for l in lengths {
        let cycle = &labels[at..at + l];
        for i in 0..l {
            perm[cycle[i]] = cycle[(i + 1) % l];
        }
        at += l;
    }
    perm
}

pub fn cycle_count(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut count = 0;
    for s in 0..perm.len() {
        if !seen[s] {
            count += 1;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
            }
        }
    }
    count
}

/// A random regression instance with a permutation representation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: Matrix,
    pub y: Matrix,
    pub rep: GroupRep,
    pub perm: Vec<usize>,
    /// Number of cycles, which is the dimension of the invariant subspace.
    pub d: usize,
}

impl Instance {
    /// Gaussian `X` (`d0 × n`) and `Y` (`dl × n`), permutation with order `k`.
    pub fn random(d0: usize, dl: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let perm = cyclic_permutation(d0, k, rng);
        let rep = GroupRep::permutation(&perm).expect("valid permutation");
        let x = gaussian(d0, n, rng);
        let y = gaussian(dl, n, rng);
        let d = cycle_count(&perm);
        Self { x, y, rep, perm, d }
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// Stacked constraint `I − ρ(g)` for the single generator.
    pub fn g(&self) -> Matrix {
        let d0 = self.x.nrows();
        Matrix::identity(d0, d0) - &self.rep.generators()[0]
    }

    /// All group elements by repeated multiplication.
    pub fn elements(&self) -> Vec<Matrix> {
        let gen = &self.rep.generators()[0];
        let d0 = gen.nrows();
        let mut out = vec![Matrix::identity(d0, d0)];
        for _ in 1..self.rep.orders()[0] {
            let next = gen * out.last().unwrap();
            out.push(next);
        }
        out
    }
}

/// `(M^{1/2}, M^{-1/2})` from nalgebra's symmetric eigendecomposition.
pub fn sqrt_pair(m: &Matrix) -> (Matrix, Matrix) {
    let eig = SymmetricEigen::new(m.clone());
    let q = &eig.eigenvectors;
    let s = Matrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let si = Matrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    (q * s * q.transpose(), q * si * q.transpose())
}

/// Moore–Penrose inverse from [`sorted_svd`].
pub fn pinv(m: &Matrix) -> Matrix {
    let (u, s, v) = sorted_svd(m);
    let tol = 1e-10 * s.first().copied().unwrap_or(0.0).max(1e-300);
    let mut p = Matrix::zeros(m.ncols(), m.nrows());
    for (i, &sigma) in s.iter().enumerate().filter(|(_, &sigma)| sigma > tol) {
        p += v.column(i) * u.column(i).transpose() / sigma;
    }
    assert!((m * &p * m - m).norm() <= 1e-9 * m.norm().max(1e-300), "oracle pseudo-inverse failed");
    p
}

/// Thin SVD `(U, σ, V)` sorted by decreasing σ.
///
/// Computed from the symmetric eigenproblem of `[[0, M], [Mᵀ, 0]]`, whose
/// eigenpairs are `(±σᵢ, (uᵢ, ±vᵢ)/√2)`. nalgebra's `SVD` is not used: on
/// some rank-deficient inputs it returns factors that do not reconstruct the
/// matrix. Columns belonging to zero singular values are completed to an
/// orthonormal set.
pub fn sorted_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (a, b) = (m.nrows(), m.ncols());
    let k = a.min(b);
    let mut h = Matrix::zeros(a + b, a + b);
    h.view_mut((0, a), (a, b)).copy_from(m);
    h.view_mut((a, 0), (b, a)).copy_from(&m.transpose());
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..a + b).collect();
    idx.sort_by(|i, j| eig.eigenvalues[*j].total_cmp(&eig.eigenvalues[*i]));
    let top = eig.eigenvalues[idx[0]].max(0.0);
    let tol = 1e-12 * top.max(1e-300) * (a + b) as f64;
    let kept: Vec<usize> = idx.iter().copied().take(k).filter(|&i| eig.eigenvalues[i] > tol).collect();
    let s: Vec<f64> = (0..k).map(|j| kept.get(j).map_or(0.0, |&i| eig.eigenvalues[i])).collect();
    let root2 = std::f64::consts::SQRT_2;
    let u = Matrix::from_fn(a, kept.len(), |r, j| eig.eigenvectors[(r, kept[j])] * root2);
    let v = Matrix::from_fn(b, kept.len(), |r, j| eig.eigenvectors[(a + r, kept[j])] * root2);
    let (u, v) = (complete(&u, k), complete(&v, k));
    let recon = Matrix::from_fn(a, b, |r, c| (0..k).map(|j| u[(r, j)] * s[j] * v[(c, j)]).sum());
    let err = (&recon - m).norm();
    assert!(err <= 1e-10 * m.norm().max(1e-300), "oracle SVD failed to reconstruct: error {err:e}");
    (u, s, v)
}

/// Extends orthonormal columns `q` to `k` orthonormal columns, keeping the originals.
fn complete(q: &Matrix, k: usize) -> Matrix {
    let (rows, p) = q.shape();
    if p >= k {
        return q.clone();
    }
    let mut out = Matrix::zeros(rows, k);
    out.columns_mut(0, p).copy_from(q);
    let mut filled = p;
    for e in 0..rows {
        if filled == k {
            break;
        }
        let mut v = invlrr::Vector::from_fn(rows, |i, _| if i == e { 1.0 } else { 0.0 });
        for _ in 0..2 {
            for j in 0..filled {
                let c = out.column(j).dot(&v);
                v -= out.column(j) * c;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            out.column_mut(filled).copy_from(&(v / norm));
            filled += 1;
        }
    }
    out
}

/// Best rank-`r` approximation from [`sorted_svd`].
pub fn truncate(m: &Matrix, r: usize) -> Matrix {
    let (u, s, v) = sorted_svd(m);
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for (i, sigma) in s.iter().enumerate().take(r) {
        out += u.column(i) * v.column(i).transpose() * *sigma;
    }
    out
}

/// Orthogonal projector onto the left null space of `g`: `I − g g⁺`.
pub fn null_projector(g: &Matrix) -> Matrix {
    Matrix::identity(g.nrows(), g.nrows()) - g * pinv(g)
}

/// Which objective an oracle works on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Constrained,
    Augmented,
    Regularized(f64),
}

/// Transformed target `Z̄` and the map `R` with `W̃ = W R`, built from scratch.
pub fn transformed_target(inst: &Instance, obj: Objective) -> (Matrix, Matrix) {
    let n = inst.n() as f64;
    let cov = &inst.x * inst.x.transpose();
    let (p, p_inv) = sqrt_pair(&cov);
    let z = &inst.y * inst.x.transpose() * &p_inv;
    let gt = &p_inv * inst.g();
    match obj {
        Objective::Constrained => (&z * null_projector(&gt), p),
        Objective::Regularized(lambda) => {
            let d0 = cov.nrows();
            let (b, b_inv) = sqrt_pair(&(Matrix::identity(d0, d0) + &gt * gt.transpose() * (n * lambda)));
            (&z * b_inv, p * b)
        }
        Objective::Augmented => {
            let elems = inst.elements();
            let k = elems.len() as f64;
            let q2 =
                elems.iter().fold(Matrix::zeros(cov.nrows(), cov.ncols()), |acc, g| acc + g * &cov * g.transpose());
            let (q, q_inv) = sqrt_pair(&q2);
            let gbar = elems.iter().fold(Matrix::zeros(cov.nrows(), cov.ncols()), |acc, g| acc + g) / k;
            (&inst.y * inst.x.transpose() * gbar.transpose() * q_inv * k, q)
        }
    }
}

/// Objective value evaluated directly from its definition.
pub fn objective(inst: &Instance, obj: Objective, w: &Matrix) -> f64 {
    let n = inst.n() as f64;
    match obj {
        Objective::Constrained => (w * &inst.x - &inst.y).norm_squared() / n,
        Objective::Regularized(l) => (w * &inst.x - &inst.y).norm_squared() / n + l * (w * inst.g()).norm_squared(),
        Objective::Augmented => {
            let elems = inst.elements();
            elems.iter().map(|g| (w * g * &inst.x - &inst.y).norm_squared()).sum::<f64>() / (n * elems.len() as f64)
        }
    }
}

/// Euclidean gradient of [`objective`].
pub fn objective_gradient(inst: &Instance, obj: Objective, w: &Matrix) -> Matrix {
    let n = inst.n() as f64;
    match obj {
        Objective::Constrained => (w * &inst.x - &inst.y) * inst.x.transpose() * (2.0 / n),
        Objective::Regularized(l) => {
            let g = inst.g();
            (w * &inst.x - &inst.y) * inst.x.transpose() * (2.0 / n) + w * &g * g.transpose() * (2.0 * l)
        }
        Objective::Augmented => {
            let elems = inst.elements();
            let k = elems.len() as f64;
            elems.iter().fold(Matrix::zeros(w.nrows(), w.ncols()), |acc, g| {
                let gx = g * &inst.x;
                acc + (w * &gx - &inst.y) * gx.transpose() * (2.0 / (n * k))
            })
        }
    }
}

/// Norm of the tangent-space component of `target − w̃` at a rank-`r` point `w̃`.
pub fn tangent_residual(wt: &Matrix, target: &Matrix, r: usize) -> f64 {
    let (u, _, v) = sorted_svd(wt);
    let ur = u.columns(0, r).into_owned();
    let vr = v.columns(0, r).into_owned();
    let res = target - wt;
    let pu = &ur * ur.transpose();
    let pv = &vr * vr.transpose();
    (&pu * &res + &res * &pv - &pu * &res * &pv).norm()
}

/// Largest eigenvalue of a symmetric PSD matrix.
fn top_eigenvalue(m: &Matrix) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// Projected gradient descent from `w0`: gradient step, then `project`.
pub fn projected_gradient<P>(inst: &Instance, obj: Objective, w0: Matrix, project: P, iters: usize) -> Matrix
where
    P: Fn(&Matrix) -> Matrix,
{
    let n = inst.n() as f64;
    let lip = match obj {
        Objective::Augmented => {
            let elems = inst.elements();
            let k = elems.len() as f64;
            let m = elems.iter().fold(Matrix::zeros(inst.x.nrows(), inst.x.nrows()), |acc, g| {
                acc + g * &inst.x * inst.x.transpose() * g.transpose()
            });
            2.0 * top_eigenvalue(&m) / (n * k)
        }
        _ => 2.0 * top_eigenvalue(&(&inst.x * inst.x.transpose())) / n,
    };
    let step = 1.0 / lip;
    let mut w = project(&w0);
    for _ in 0..iters {
        let g = objective_gradient(inst, obj, &w);
        w = project(&(&w - g * step));
    }
    w
}

/// Gradient descent on `W = A B` (`A`: `d_L × r`, `B`: `r × d₀`) with backtracking.
pub fn factored_descent(inst: &Instance, obj: Objective, r: usize, rng: &mut ChaCha8Rng, iters: usize) -> Matrix {
    let (dl, d0) = (inst.y.nrows(), inst.x.nrows());
    let mut a = gaussian(dl, r, rng) * 0.5;
    let mut b = gaussian(r, d0, rng) * 0.5;
    let mut step = 1e-2;
    let mut value = objective(inst, obj, &(&a * &b));
    for _ in 0..iters {
        let g = objective_gradient(inst, obj, &(&a * &b));
        let ga = &g * b.transpose();
        let gb = a.transpose() * &g;
        loop {
            let na = &a - &ga * step;
            let nb = &b - &gb * step;
            let nv = objective(inst, obj, &(&na * &nb));
            if nv <= value {
                a = na;
                b = nb;
                value = nv;
                step *= 1.2;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                return &a * &b;
            }
        }
    }
    &a * &b
}

/// Central finite differences of `f` with respect to every entry of every matrix in `at`.
pub fn central_differences<F>(f: F, at: &[Matrix], h: f64) -> Vec<Matrix>
where
    F: Fn(&[Matrix]) -> f64,
{
    let mut out = Vec::with_capacity(at.len());
    let mut work = at.to_vec();
    for j in 0..at.len() {
        let mut g = Matrix::zeros(at[j].nrows(), at[j].ncols());
        for idx in 0..at[j].len() {
            let orig = work[j][idx];
            work[j][idx] = orig + h;
            let plus = f(&work);
            work[j][idx] = orig - h;
            let minus = f(&work);
            work[j][idx] = orig;
            g[idx] = (plus - minus) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// Largest relative error over a list of gradient blocks.
pub fn max_relative_error(analytic: &[Matrix], numeric: &[Matrix]) -> f64 {
    analytic.iter().zip(numeric).map(|(a, b)| (a - b).norm() / b.norm().max(1e-12)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_have_requested_order() {
        let mut r = rng(1);
        for k in 2..=6 {
            let p = cyclic_permutation(9, k, &mut r);
            let rep = GroupRep::permutation(&p).unwrap();
            assert_eq!(rep.order().unwrap(), k);
            assert_eq!(rep.invariance_constraint().unwrap().nullity(), cycle_count(&p));
        }
    }

    #[test]
    fn gradient_oracle_matches_differences() {
        let mut r = rng(2);
        let inst = Instance::random(6, 3, 18, 3, &mut r);
        let w = gaussian(3, 6, &mut r);
        for obj in [Objective::Constrained, Objective::Augmented, Objective::Regularized(0.3)] {
            let fd = central_differences(|m| objective(&inst, obj, &m[0]), std::slice::from_ref(&w), 1e-6);
            assert!(max_relative_error(&[objective_gradient(&inst, obj, &w)], &fd) < 1e-6);
        }
    }
}
