//! Small dense linear algebra for covariance matrices.
//!
//! Everything here targets the sizes that show up in basket pricing (a few
//! dozen assets) and the symmetric tridiagonal matrices behind Gaussian
//! quadrature. The central routine is [`rank_one_reduce`], which factors a
//! covariance as `Σ = V·D·Vᵀ` with a prescribed first column of `V`, so that
//! one Gaussian factor loads every asset in the basket identically.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |self - other|` over all entries.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix whose stored entries satisfy `a[i][j] == a[j][i]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Rejects non-square or non-symmetric input.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch {
                expected: m.rows,
                got: m.cols,
            });
        }
        for i in 0..m.rows {
            for j in 0..i {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::OutOfDomain {
                        what: "asymmetric entry",
                        value: m[(i, j)] - m[(j, i)],
                    });
                }
            }
        }
        Ok(Self(m))
    }

    /// Builds from the lower triangle of `f(i, j)` (`i >= j`) and mirrors it.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_lower_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.0.clone();
        m.data.iter_mut().for_each(|v| *v *= factor);
        Self(m)
    }

    /// `vᵀ·A·v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        v.iter().zip(self.0.matvec(v)).map(|(a, b)| a * b).sum()
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Lower Cholesky factor `L` with `L·Lᵀ = A`.
pub fn cholesky(a: &SymMatrix) -> Result<Matrix> {
    let n = a.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Sweep cap for the cyclic Jacobi eigensolver.
pub const MAX_JACOBI_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-13;

/// Eigenvalues sorted descending together with the matching orthonormal
/// eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigendecomposition of a symmetric (possibly semidefinite or
/// indefinite) matrix.
pub fn sym_eigen(a: &SymMatrix) -> Result<SymEigen> {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut q = Matrix::identity(n);
    let scale = m.frobenius();
    let target = JACOBI_REL_TOL * scale;

    let off_norm = |m: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= target || scale == 0.0 {
            break;
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for r in p + 1..n {
                let apr = m[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let arr = m[(r, r)];
                // tan of the rotation angle, smaller root for stability
                let theta = (arr - app) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkr = m[(k, r)];
                    m[(k, p)] = c * mkp - s * mkr;
                    m[(k, r)] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mrk = m[(r, k)];
                    m[(p, k)] = c * mpk - s * mrk;
                    m[(r, k)] = s * mpk + c * mrk;
                }
                m[(p, r)] = 0.0;
                m[(r, p)] = 0.0;
                m[(p, p)] = app - t * apr;
                m[(r, r)] = arr + t * apr;

                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(SymEigen { values, vectors })
}

/// `Σ = V·diag(lambda_sq)·Vᵀ` with the first column of `V` equal to `v`.
#[derive(Debug, Clone)]
pub struct SmoothingDecomposition {
    pub v: Vec<f64>,
    /// Columns `[v, q₂, …, q_d]`.
    pub vmat: Matrix,
    /// `λ₁²` followed by `λ₂² ≥ … ≥ λ_d² ≥ 0`.
    pub lambda_sq: Vec<f64>,
}

impl SmoothingDecomposition {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Variance of the factor that smoothing integrates out.
    pub fn lambda1_sq(&self) -> f64 {
        self.lambda_sq[0]
    }

    /// Same factorization for `factor·Σ`: only the diagonal scales.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            v: self.v.clone(),
            vmat: self.vmat.clone(),
            lambda_sq: self.lambda_sq.iter().map(|l| l * factor).collect(),
        }
    }

    /// `V·D·Vᵀ`, for reconstruction checks.
    pub fn reconstruct(&self) -> Matrix {
        let d = self.dim();
        Matrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| self.vmat[(i, k)] * self.lambda_sq[k] * self.vmat[(j, k)])
                .sum()
        })
    }
}

fn check_nonzero(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| *x == 0.0) {
        Err(Error::ZeroVector)
    } else {
        Ok(())
    }
}

/// `1 / ⟨v, Σ⁻¹v⟩`.
pub fn lambda1_sq(sigma: &SymMatrix, v: &[f64]) -> Result<f64> {
    check_sizes(sigma, v)?;
    check_nonzero(v)?;
    let l = cholesky(sigma)?;
    let w = cholesky_solve(&l, v);
    Ok(1.0 / dot(v, &w))
}

fn check_sizes(sigma: &SymMatrix, v: &[f64]) -> Result<()> {
    if sigma.dim() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rank-one reduction `Σ̃ = Σ − v·vᵀ/⟨v, Σ⁻¹v⟩` followed by an
/// eigendecomposition of `Σ̃`, assembled into `Σ = V·D·Vᵀ`.
pub fn rank_one_reduce(sigma: &SymMatrix, v: &[f64]) -> Result<SmoothingDecomposition> {
    check_sizes(sigma, v)?;
    check_nonzero(v)?;
    let d = sigma.dim();
    let l = cholesky(sigma)?;
    let w = cholesky_solve(&l, v);
    let lambda1 = 1.0 / dot(v, &w);

    let reduced = SymMatrix::from_lower_fn(d, |i, j| sigma[(i, j)] - lambda1 * v[i] * v[j]);
    let eig = sym_eigen(&reduced)?;
    let floor = -1e-12 * reduced.as_matrix().max_abs().max(sigma.as_matrix().max_abs());

    let mut lambda_sq = Vec::with_capacity(d);
    lambda_sq.push(lambda1);
    let mut vmat = Matrix::zeros(d, d);
    for i in 0..d {
        vmat[(i, 0)] = v[i];
    }
    // The smallest eigenvalue belongs to the null direction w; drop it.
    for k in 0..d.saturating_sub(1) {
        let mut mu = eig.values[k];
        if mu < 0.0 {
            if mu < floor {
                return Err(Error::NotPositiveDefinite { index: k, pivot: mu });
            }
            mu = 0.0;
        }
        lambda_sq.push(mu);
        for i in 0..d {
            vmat[(i, k + 1)] = eig.vectors[(i, k)];
        }
    }
    Ok(SmoothingDecomposition {
        v: v.to_vec(),
        vmat,
        lambda_sq,
    })
}

/// Enumeration guard for [`best_binary_v`].
pub const MAX_BINARY_SEARCH_DIM: usize = 25;

/// Binary selector `v ∈ {0,1}^d \ {0}` maximizing `λ₁²(Σ, v)`.
///
/// Ties go to the smallest integer `Σ v_i 2^i`.
pub fn best_binary_v(sigma: &SymMatrix) -> Result<(Vec<f64>, f64)> {
    let d = sigma.dim();
    if d > MAX_BINARY_SEARCH_DIM {
        return Err(Error::DimensionTooLarge {
            dim: d,
            max: MAX_BINARY_SEARCH_DIM,
        });
    }
    if d == 0 {
        return Err(Error::ZeroVector);
    }
    let l = cholesky(sigma)?;
    let inv: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            cholesky_solve(&l, &e)
        })
        .collect();

    // Depth-first over masks, adding bits in increasing order, tracking
    // q = vᵀΣ⁻¹v and r = Σ⁻¹v.
    struct Search<'a> {
        inv: &'a [Vec<f64>],
        best_q: f64,
        best_mask: u64,
    }
    impl Search<'_> {
        fn visit(&mut self, start: usize, mask: u64, q: f64, r: &[f64]) {
            let d = self.inv.len();
            for k in start..d {
                let q_next = q + 2.0 * r[k] + self.inv[k][k];
                let mask_next = mask | (1 << k);
                if q_next < self.best_q || (q_next == self.best_q && mask_next < self.best_mask) {
                    self.best_q = q_next;
                    self.best_mask = mask_next;
                }
                if k + 1 < d {
                    let r_next: Vec<f64> = r.iter().zip(&self.inv[k]).map(|(a, b)| a + b).collect();
                    self.visit(k + 1, mask_next, q_next, &r_next);
                }
            }
        }
    }
    let mut search = Search {
        inv: &inv,
        best_q: f64::INFINITY,
        best_mask: u64::MAX,
    };
    search.visit(0, 0, 0.0, &vec![0.0; d]);

    let v: Vec<f64> = (0..d)
        .map(|i| if search.best_mask >> i & 1 == 1 { 1.0 } else { 0.0 })
        .collect();
    let lam = 1.0 / dot(&v, &cholesky_solve(&l, &v));
    Ok((v, lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(d: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let mmt = m.matmul(&m.transpose());
        SymMatrix::from_lower_fn(d, |i, j| mmt[(i, j)] + if i == j { 1.0 } else { 0.0 })
    }

    fn three_asset_sigma(sigma3: f64) -> SymMatrix {
        let s = [0.1099, 0.1677, sigma3];
        let rho = [[1.0, 0.6, 0.9], [0.6, 1.0, 0.8], [0.9, 0.8, 1.0]];
        SymMatrix::from_lower_fn(3, |i, j| s[i] * s[j] * rho[i][j])
    }

    #[test]
    fn cholesky_identity_and_2x2() {
        let l = cholesky(&SymMatrix::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
        let a = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = cholesky(&a).unwrap();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let a = random_spd(10, 7);
        let l = cholesky(&a).unwrap();
        let llt = l.matmul(&l.transpose());
        assert!(llt.max_abs_diff(a.as_matrix()) <= 1e-12 * a.as_matrix().max_abs());
        for i in 0..10 {
            assert!(l[(i, i)] > 0.0);
            for j in i + 1..10 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn asymmetric_input_rejected() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
    }

    #[test]
    fn eigen_diagonal_and_2x2() {
        let e = sym_eigen(&SymMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors.column(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(e.vectors.column(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.vectors.column(2), vec![0.0, 1.0, 0.0]);

        let e = sym_eigen(&SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q0 = e.vectors.column(0);
        let q1 = e.vectors.column(1);
        assert!((q0[0].abs() - h).abs() < 1e-14 && (q0[0] - q0[1]).abs() < 1e-14);
        assert!((q1[0].abs() - h).abs() < 1e-14 && (q1[0] + q1[1]).abs() < 1e-14);
    }

    #[test]
    fn reduced_matrix_is_rank_deficient() {
        let sigma = random_spd(8, 11);
        let ones = vec![1.0; 8];
        let lam = lambda1_sq(&sigma, &ones).unwrap();
        let reduced = SymMatrix::from_lower_fn(8, |i, j| sigma[(i, j)] - lam);
        let e = sym_eigen(&reduced).unwrap();
        assert!(e.values[7].abs() <= 1e-10 * reduced.as_matrix().max_abs());
    }

    #[test]
    fn rank_one_identity() {
        for d in 1..6 {
            let dec = rank_one_reduce(&SymMatrix::identity(d), &vec![1.0; d]).unwrap();
            assert!((dec.lambda_sq[0] - 1.0 / d as f64).abs() < 1e-15);
            for &l in &dec.lambda_sq[1..] {
                assert!((l - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rank_one_three_asset_values() {
        let dec = rank_one_reduce(&three_asset_sigma(0.0365), &[1.0; 3]).unwrap();
        let expected = [0.00023, 0.03432, 0.00652];
        for (l, e) in dec.lambda_sq.iter().zip(expected) {
            assert!((l - e).abs() < 5e-6, "{l} vs {e}");
        }
        let dec = rank_one_reduce(&three_asset_sigma(0.1365), &[1.0; 3]).unwrap();
        let expected = [0.01034, 0.02255, 0.00526];
        for (l, e) in dec.lambda_sq.iter().zip(expected) {
            assert!((l - e).abs() < 5e-6, "{l} vs {e}");
        }
    }

    #[test]
    fn rank_one_rejects_zero_vector() {
        assert!(matches!(
            rank_one_reduce(&SymMatrix::identity(2), &[0.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn lambda1_boundary_cases() {
        assert_eq!(lambda1_sq(&SymMatrix::identity(3), &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let mu = [4.0, 2.0, 0.5];
        let l = lambda1_sq(&SymMatrix::diagonal(&mu), &[0.0, 0.0, 1.0]).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
        let l = lambda1_sq(&three_asset_sigma(0.0365), &[1.0, 1.0, 0.0]).unwrap();
        assert!((l - 0.00109).abs() < 5e-6);
    }

    #[test]
    fn best_binary_identity_picks_first_axis() {
        let (v, l) = best_binary_v(&SymMatrix::identity(4)).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(l, 1.0);
    }

    #[test]
    fn best_binary_matches_exhaustive_loop() {
        for seed in 0..5 {
            let sigma = random_spd(6, 100 + seed);
            let (v, l) = best_binary_v(&sigma).unwrap();
            let mut best = (0u32, f64::NEG_INFINITY);
            for mask in 1u32..64 {
                let cand: Vec<f64> = (0..6).map(|i| f64::from(mask >> i & 1)).collect();
                let lam = 1.0 / sigma_inverse_form(&sigma, &cand);
                if lam > best.1 {
                    best = (mask, lam);
                }
            }
            let expected: Vec<f64> = (0..6).map(|i| f64::from(best.0 >> i & 1)).collect();
            assert_eq!(v, expected);
            assert!((l - best.1).abs() <= 1e-12 * best.1);
        }
    }

    // Independent route: Gaussian elimination on the augmented system.
    fn sigma_inverse_form(sigma: &SymMatrix, v: &[f64]) -> f64 {
        let d = v.len();
        let mut a: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut row: Vec<f64> = (0..d).map(|j| sigma[(i, j)]).collect();
                row.push(v[i]);
                row
            })
            .collect();
        for c in 0..d {
            let p = (c..d).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            a.swap(c, p);
            for r in 0..d {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=d {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        (0..d).map(|i| v[i] * a[i][d] / a[i][i]).sum()
    }

    #[test]
    fn best_binary_dimension_guard() {
        assert!(matches!(
            best_binary_v(&SymMatrix::identity(26)),
            Err(Error::DimensionTooLarge { dim: 26, max: 25 })
        ));
    }

    #[test]
    fn lower_bound_smallest_eigenvalue() {
        for d in 2..=10 {
            let sigma = random_spd(d, 500 + d as u64);
            let mu_min = *sym_eigen(&sigma).unwrap().values.last().unwrap();
            let (_, best) = best_binary_v(&sigma).unwrap();
            assert!(best >= mu_min - 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn eigen_residual_and_orthogonality(d in 1usize..12, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = SymMatrix::from_lower_fn(d, |_, _| rng.random_range(-2.0..2.0));
            let e = sym_eigen(&a).unwrap();
            let scale = a.as_matrix().max_abs();
            for k in 0..d {
                let q = e.vectors.column(k);
                let aq = a.as_matrix().matvec(&q);
                for i in 0..d {
                    prop_assert!((aq[i] - e.values[k] * q[i]).abs() <= 1e-10 * scale);
                }
            }
            let qtq = e.vectors.transpose().matmul(&e.vectors);
            prop_assert!(qtq.max_abs_diff(&Matrix::identity(d)) <= 1e-12);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn rank_one_invariants(d in 2usize..20, seed in any::<u64>()) {
            let sigma = random_spd(d, seed);
            let v = vec![1.0; d];
            let dec = rank_one_reduce(&sigma, &v).unwrap();
            let scale = sigma.as_matrix().max_abs();
            prop_assert!(dec.reconstruct().max_abs_diff(sigma.as_matrix()) <= 1e-10 * scale);
            prop_assert_eq!(dec.vmat.column(0), v.clone());
            let exact = lambda1_sq(&sigma, &v).unwrap();
            prop_assert!((dec.lambda_sq[0] - exact).abs() <= 1e-10 * exact);
            prop_assert!(dec.lambda_sq[1..].windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(dec.lambda_sq.iter().all(|l| *l >= 0.0));
            let mu_max = sym_eigen(&sigma).unwrap().values[0];
            prop_assert!(dec.lambda_sq[0] <= mu_max / d as f64 + 1e-12);
        }
    }
}
