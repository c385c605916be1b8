//! Finite group representations and the linear constraints that carve out
//! invariant and equivariant maps.
//!
//! A representation is stored as its generator matrices together with each
//! generator's order. A linear map `W` is invariant iff `W·G = 0` where `G`
//! stacks one block `I − ρ(g_m)` per generator; [`ConstraintMatrix`] holds
//! that stack and caches the dimension of its left null space.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::tol;

/// A validated representation of a finitely generated group on `ℝ^{d₀}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRep {
    generators: Vec<Matrix>,
    orders: Vec<usize>,
}

/// Build a cyclic representation from one generator and its order.
///
/// The generator raised to `order` must equal the identity within
/// `1e-10 · d₀` in Frobenius norm.
pub fn rep_from_generator(gen: Matrix, order: usize) -> Result<GroupRep> {
    GroupRep::from_generators(vec![(gen, order)])
}

impl GroupRep {
    /// Build a representation from several `(generator, order)` pairs.
    pub fn from_generators(gens: Vec<(Matrix, usize)>) -> Result<Self> {
        let mut dim = None;
        let mut generators = Vec::with_capacity(gens.len());
        let mut orders = Vec::with_capacity(gens.len());
        if gens.is_empty() {
            return Err(Error::MissingInput("at least one generator"));
        }
        for (g, order) in gens {
            let (rows, cols) = g.shape();
            if rows != cols || rows == 0 {
                return Err(Error::NonSquare { rows, cols });
            }
            match dim {
                None => dim = Some(rows),
                Some(d) if d != rows => return Err(Error::DimensionMismatch { expected: d, found: rows }),
                _ => {}
            }
            if order == 0 {
                return Err(Error::NotARepresentation { order, residual: f64::INFINITY });
            }
            let residual = (matrix_power(&g, order) - Matrix::identity(rows, rows)).norm();
            if !(residual <= tol::REP_TOL * rows as f64) {
                return Err(Error::NotARepresentation { order, residual });
            }
            generators.push(g);
            orders.push(order);
        }
        Ok(Self { generators, orders })
    }

    /// The identity representation of the one-element group on `ℝ^d`.
    pub fn trivial(dim: usize) -> Self {
        Self { generators: vec![Matrix::identity(dim, dim)], orders: vec![1] }
    }

    /// Permutation representation; `perm[i]` is the image of coordinate `i`.
    ///
    /// The order is the least common multiple of the cycle lengths.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || seen[p] {
                return Err(Error::InvalidConfig(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        let mut g = Matrix::zeros(d, d);
        for (src, &dst) in perm.iter().enumerate() {
            g[(dst, src)] = 1.0;
        }
        let order = cycle_lengths(perm).into_iter().fold(1, lcm);
        rep_from_generator(g, order)
    }

    /// Cyclic shift `eᵢ ↦ e_{i+1 mod d}` on `ℝ^d`, of order `d`.
    pub fn cyclic_shift(d: usize) -> Result<Self> {
        let perm: Vec<usize> = (0..d).map(|i| (i + 1) % d).collect();
        Self::permutation(&perm)
    }

    /// Planar rotation by `2π/k`, of order `k`.
    pub fn rotation2d(k: usize) -> Result<Self> {
        let theta = 2.0 * std::f64::consts::PI / k as f64;
        let (s, c) = theta.sin_cos();
        rep_from_generator(Matrix::from_row_slice(2, 2, &[c, -s, s, c]), k)
    }

    pub fn dim(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn is_cyclic(&self) -> bool {
        self.generators.len() == 1
    }

    /// Group order of a single-generator representation.
    pub fn order(&self) -> Result<usize> {
        if self.is_cyclic() {
            Ok(self.orders[0])
        } else {
            Err(Error::NotCyclic)
        }
    }

    /// `ρ(gʲ)` for `0 ≤ j < order`.
    pub fn element(&self, j: usize) -> Result<Matrix> {
        let order = self.order()?;
        if j >= order {
            return Err(Error::IndexOutOfRange { index: j, order });
        }
        Ok(matrix_power(&self.generators[0], j))
    }

    /// All group elements `ρ(g⁰), …, ρ(g^{order−1})` in power order.
    pub fn elements(&self) -> Result<Vec<Matrix>> {
        let order = self.order()?;
        let g = &self.generators[0];
        let mut out = Vec::with_capacity(order);
        let mut cur = Matrix::identity(self.dim(), self.dim());
        for _ in 0..order {
            let next = g * &cur;
            out.push(std::mem::replace(&mut cur, next));
        }
        Ok(out)
    }

    /// Group average `Ḡ = (1/|𝒢|) Σ_g ρ(g)`.
    pub fn group_average(&self) -> Result<Matrix> {
        let elems = self.elements()?;
        let n = elems.len() as f64;
        let sum = elems.iter().fold(Matrix::zeros(self.dim(), self.dim()), |acc, e| acc + e);
        Ok(sum / n)
    }

    /// Invariance constraint `G = [I − ρ(g₁), …, I − ρ(g_M)]`.
    pub fn invariance_constraint(&self) -> Result<ConstraintMatrix> {
        let d = self.dim();
        let mut entries = Matrix::zeros(d, d * self.generators.len());
        for (m, g) in self.generators.iter().enumerate() {
            entries.view_mut((0, m * d), (d, d)).copy_from(&(Matrix::identity(d, d) - g));
        }
        ConstraintMatrix::new(entries)
    }

    /// True iff every generator is orthogonal within `tol` (Frobenius).
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.generators.iter().all(|g| {
            let d = g.nrows();
            (g.transpose() * g - Matrix::identity(d, d)).norm() <= tol
        })
    }

    /// Inverse of each generator image, `ρ(g⁻¹) = ρ(g)^{order−1}`.
    fn inverse_generators(&self) -> Vec<Matrix> {
        self.generators.iter().zip(&self.orders).map(|(g, &o)| matrix_power(g, o - 1)).collect()
    }
}

/// Left-null-space constraint on row vectors: `W` is admissible iff `W·G = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    entries: Matrix,
    nullity: usize,
}

impl ConstraintMatrix {
    pub fn new(entries: Matrix) -> Result<Self> {
        let rank = linalg::numerical_rank(&entries)?;
        let nullity = entries.nrows() - rank;
        Ok(Self { entries, nullity })
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// Dimension `d` of the left null space.
    pub fn nullity(&self) -> usize {
        self.nullity
    }

    /// Input dimension `d₀` (number of rows).
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Orthogonal projector onto the admissible row space.
    pub fn projector(&self) -> Result<Matrix> {
        linalg::left_null_projector(&self.entries)
    }
}

/// `d × d₀` matrix whose orthonormal rows span the left null space of `g`.
///
/// Rows come from the SVD and each row's first nonzero entry is positive, so
/// the output is reproducible.
pub fn invariant_basis(g: &ConstraintMatrix) -> Result<Matrix> {
    if g.nullity() == 0 {
        return Err(Error::EmptyNullSpace);
    }
    linalg::left_null_basis(g.entries())
}

/// Constraint on `vec(W)` (column-major) for maps equivariant from `ρ_X` to `ρ_Y`.
///
/// Stored like [`ConstraintMatrix`]: `vec(W)ᵀ · entries = 0` iff
/// `W ρ_X(g) = ρ_Y(g) W` for every generator. Each block is the transpose of
/// `ρ_X(g)ᵀ ⊗ ρ_Y(g⁻¹) − I`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivarianceConstraint {
    inner: ConstraintMatrix,
    out_dim: usize,
    in_dim: usize,
}

pub fn equivariance_constraint(rep_x: &GroupRep, rep_y: &GroupRep) -> Result<EquivarianceConstraint> {
    if rep_x.generators.len() != rep_y.generators.len() {
        return Err(Error::OrderMismatch { left: rep_x.generators.len(), right: rep_y.generators.len() });
    }
    for (&a, &b) in rep_x.orders.iter().zip(&rep_y.orders) {
        if a != b {
            return Err(Error::OrderMismatch { left: a, right: b });
        }
    }
    let (d0, dl) = (rep_x.dim(), rep_y.dim());
    let k = d0 * dl;
    let mut entries = Matrix::zeros(k, k * rep_x.generators.len());
    for (m, (gx, gy_inv)) in rep_x.generators.iter().zip(rep_y.inverse_generators()).enumerate() {
        let block = gx.transpose().kronecker(&gy_inv) - Matrix::identity(k, k);
        entries.view_mut((0, m * k), (k, k)).copy_from(&block.transpose());
    }
    Ok(EquivarianceConstraint { inner: ConstraintMatrix::new(entries)?, out_dim: dl, in_dim: d0 })
}

impl EquivarianceConstraint {
    pub fn entries(&self) -> &Matrix {
        self.inner.entries()
    }

    pub fn nullity(&self) -> usize {
        self.inner.nullity()
    }

    /// Orthonormal basis of equivariant maps, each reshaped to `d_L × d₀`.
    pub fn basis_maps(&self) -> Result<Vec<Matrix>> {
        if self.nullity() == 0 {
            return Ok(Vec::new());
        }
        let b = invariant_basis(&self.inner)?;
        Ok(b.row_iter()
            .map(|row| Matrix::from_column_slice(self.out_dim, self.in_dim, row.transpose().as_slice()))
            .collect())
    }

    /// `vec(W)` is admissible iff `vec(W)ᵀ · entries = 0`.
    pub fn residual(&self, w: &Matrix) -> Result<f64> {
        if w.shape() != (self.out_dim, self.in_dim) {
            return Err(Error::ShapeMismatch(format!(
                "W is {}x{}, constraint expects {}x{}",
                w.nrows(),
                w.ncols(),
                self.out_dim,
                self.in_dim
            )));
        }
        let v = Matrix::from_column_slice(1, w.len(), w.as_slice());
        Ok((v * self.entries()).norm())
    }
}

/// `p² × p²` permutation rotating a column-major `p × p` image by 90°,
/// pixel `(i, j) ↦ (j, p−1−i)`; order 4.
pub fn c4_image_rotation(p: usize) -> GroupRep {
    let n = p * p;
    let idx = |i: usize, j: usize| i + j * p;
    let mut perm = vec![0; n];
    for j in 0..p {
        for i in 0..p {
            perm[idx(i, j)] = idx(j, p - 1 - i);
        }
    }
    let mut g = Matrix::zeros(n, n);
    for (src, &dst) in perm.iter().enumerate() {
        g[(dst, src)] = 1.0;
    }
    GroupRep { generators: vec![g], orders: vec![4] }
}

fn matrix_power(g: &Matrix, k: usize) -> Matrix {
    let d = g.nrows();
    let mut out = Matrix::identity(d, d);
    for _ in 0..k {
        out = g * out;
    }
    out
}

fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        out.push(len);
    }
    out
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}
