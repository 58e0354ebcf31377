//! Small dense linear algebra: ridge regression, SPD factorizations,
//! Mahalanobis norms, log-determinants and independent-column selection.
//!
//! Everything here is desk scale (dimensions up to a few hundred) and
//! immutable once built, so values can be shared freely between episodes.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative pivot threshold below which a Cholesky factorization is
/// declared singular.
const PIVOT_TOL: f64 = 1e-13;

/// Default tolerance on the smallest singular value of a selected set of
/// feature columns.
pub const DEFAULT_INDEPENDENCE_TOL: f64 = 1e-8;

/// Above this many candidate subsets `select_independent_arms` switches from
/// exact maximum-volume search to greedy pivoting.
const EXHAUSTIVE_SUBSET_BUDGET: u128 = 10_000;

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = scale;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Column subset, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                out[(i, k)] = self[(i, j)];
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} rows",
                x.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        Ok(out)
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            g.add_outer(self.row(i), 1.0);
        }
        g
    }

    /// `self += scale · x xᵀ` (square matrices only).
    pub fn add_outer(&mut self, x: &[f64], scale: f64) {
        debug_assert_eq!(self.rows, self.cols);
        debug_assert_eq!(x.len(), self.rows);
        let n = self.cols;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * n..(i + 1) * n];
            axpy(scale * xi, x, row);
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
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

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha · x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Cholesky factorization `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    source: Matrix,
    lower: Matrix,
}

impl SpdFactor {
    pub fn new(source: Matrix) -> Result<Self> {
        let n = source.rows();
        if source.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                n,
                source.cols()
            )));
        }
        let scale = (0..n).map(|i| source[(i, i)].abs()).fold(0.0, f64::max);
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = l.row(j);
            let pivot = source[(j, j)] - dot(&lj[..j], &lj[..j]);
            if !(pivot > PIVOT_TOL * scale.max(f64::MIN_POSITIVE)) {
                return Err(Error::SingularSystem);
            }
            let diag = pivot.sqrt();
            l[(j, j)] = diag;
            for i in j + 1..n {
                let s = source[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / diag;
            }
        }
        Ok(Self { source, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.source.rows()
    }

    pub fn source(&self) -> &Matrix {
        &self.source
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {len} against a {}x{} factor",
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Solves `L z = b`.
    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let n = self.dim();
        let mut z = b.to_vec();
        for i in 0..n {
            let row = self.lower.row(i);
            z[i] = (z[i] - dot(&row[..i], &z[..i])) / row[i];
        }
        Ok(z)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.forward_solve(b)?;
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[(k, i)] * x[k];
            }
            x[i] = s / self.lower[(i, i)];
        }
        Ok(x)
    }

    /// `xᵀ A⁻¹ x`.
    pub fn inv_quad(&self, x: &[f64]) -> Result<f64> {
        let z = self.forward_solve(x)?;
        Ok(dot(&z, &z))
    }

    /// `x_jᵀ A⁻¹ x_j` for every column `x_j` of a `dim × m` matrix.
    pub fn inv_quad_columns(&self, columns: &Matrix) -> Result<Vec<f64>> {
        if columns.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows against a {}x{} factor",
                columns.rows(),
                self.dim(),
                self.dim()
            )));
        }
        let n = self.dim();
        let m = columns.cols();
        // Row-wise forward substitution over all columns at once.
        let mut z = vec![0.0; n * m];
        for i in 0..n {
            let (done, rest) = z.split_at_mut(i * m);
            let zi = &mut rest[..m];
            zi.copy_from_slice(columns.row(i));
            let li = self.lower.row(i);
            for k in 0..i {
                let lik = li[k];
                if lik != 0.0 {
                    axpy(-lik, &done[k * m..(k + 1) * m], zi);
                }
            }
            let inv = 1.0 / li[i];
            zi.iter_mut().for_each(|v| *v *= inv);
        }
        let mut out = vec![0.0; m];
        for i in 0..n {
            for (o, v) in out.iter_mut().zip(&z[i * m..(i + 1) * m]) {
                *o += v * v;
            }
        }
        Ok(out)
    }

    /// `ln det A`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim())
            .map(|i| self.lower[(i, i)].ln())
            .sum::<f64>()
    }
}

/// Ridge regression `(XᵀX + λI) θ = Xᵀy`, returning `θ̂` and the regularized
/// Gram matrix `V̄ = XᵀX + λI`.
pub fn ridge_solve(x: &Matrix, y: &[f64], lambda: f64) -> Result<(Vec<f64>, Matrix)> {
    if x.rows() == 0 {
        return Err(Error::InvalidDimensions("design matrix has no rows".into()));
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} rows",
            y.len(),
            x.rows()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    let mut gram = x.gram();
    for i in 0..gram.rows() {
        gram[(i, i)] += lambda;
    }
    let rhs = x.tr_mul_vec(y)?;
    let factor = SpdFactor::new(gram)?;
    let theta = factor.solve(&rhs)?;
    Ok((theta, factor.source))
}

/// Ordinary least-squares fit of `y` on the rows of `x`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub theta: Vec<f64>,
    /// `y − Xθ`.
    pub residuals: Vec<f64>,
    /// Set when `XᵀX` was singular and a `1e-10` ridge was used instead.
    pub regularized: bool,
}

/// Unregularized least squares, falling back to a `1e-10` ridge when the
/// normal equations are singular.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares> {
    let (theta, regularized) = match ridge_solve(x, y, 0.0) {
        Ok((theta, _)) => (theta, false),
        Err(Error::SingularSystem) => (ridge_solve(x, y, 1e-10)?.0, true),
        Err(e) => return Err(e),
    };
    let fit = x.mul_vec(&theta)?;
    let residuals = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    Ok(LeastSquares {
        theta,
        residuals,
        regularized,
    })
}

/// `‖x‖_{V⁻¹} = √(xᵀV⁻¹x)`.
pub fn mahalanobis_norm(x: &[f64], gram_factor: &SpdFactor) -> Result<f64> {
    Ok(gram_factor.inv_quad(x)?.max(0.0).sqrt())
}

/// `ln(det(V)^{1/2} det(λI)^{-1/2}) = ½(ln det V − d ln λ)`.
pub fn log_det_ratio(gram_factor: &SpdFactor, lambda: f64, d: usize) -> f64 {
    0.5 * (gram_factor.log_det() - d as f64 * lambda.ln())
}

/// Smallest singular value of a (possibly rectangular) matrix.
pub fn smallest_singular_value(m: &Matrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    m.to_nalgebra()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Picks `d` arms (columns of the `d × N` feature matrix) whose features are
/// linearly independent with smallest singular value above `tol`.
///
/// Small problems are solved exactly: the subset of maximal volume
/// `√det(X_SᵀX_S)` wins, ties going to the lexicographically smallest index
/// set. Larger problems use greedy pivoting (largest residual norm after
/// projecting out the columns already chosen, lowest index on ties).
/// Returned indices are sorted ascending.
pub fn select_independent_arms(features: &Matrix, tol: f64) -> Result<Vec<usize>> {
    let d = features.rows();
    let n = features.cols();
    if n < d {
        return Err(Error::TooFewArms { need: d, have: n });
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let picked = if binomial(n, d) <= EXHAUSTIVE_SUBSET_BUDGET {
        max_volume_subset(features, tol)
    } else {
        greedy_pivoted(features, tol)
    };
    let mut picked = picked.ok_or(Error::NoIndependentSet(d))?;
    picked.sort_unstable();
    Ok(picked)
}

fn max_volume_subset(features: &Matrix, tol: f64) -> Option<Vec<usize>> {
    let d = features.rows();
    let n = features.cols();
    let mut scored: Vec<(f64, Vec<usize>)> = Vec::new();
    for subset in Combinations::new(n, d) {
        let block = features.select_columns(&subset);
        let vol2 = match SpdFactor::new(block.gram()) {
            Ok(f) => f.log_det(),
            Err(_) => continue,
        };
        scored.push((vol2, subset));
    }
    // Volumes equal to within rounding are ties; snap them so the stable sort
    // keeps lexicographic order among them.
    let best = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    for s in &mut scored {
        if (s.0 - best).abs() <= 1e-12 * best.abs().max(1.0) {
            s.0 = best;
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored
        .into_iter()
        .map(|(_, s)| s)
        .find(|s| smallest_singular_value(&features.select_columns(s)) > tol)
}

fn greedy_pivoted(features: &Matrix, tol: f64) -> Option<Vec<usize>> {
    let d = features.rows();
    let n = features.cols();
    // Residual columns, stored column-major for cheap projections.
    let mut resid: Vec<Vec<f64>> = (0..n).map(|j| features.column(j)).collect();
    let mut chosen = Vec::with_capacity(d);
    let mut used = vec![false; n];
    for _ in 0..d {
        let mut best = None;
        let mut best_norm = tol;
        for (j, r) in resid.iter().enumerate() {
            if used[j] {
                continue;
            }
            let nr = norm2(r);
            if nr > best_norm {
                best_norm = nr;
                best = Some(j);
            }
        }
        let j = best?;
        used[j] = true;
        chosen.push(j);
        let q: Vec<f64> = resid[j].iter().map(|v| v / best_norm).collect();
        for (k, r) in resid.iter_mut().enumerate() {
            if !used[k] {
                let c = dot(&q, r);
                axpy(-c, &q, r);
            }
        }
    }
    let block = features.select_columns(&chosen);
    (smallest_singular_value(&block) > tol).then_some(chosen)
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

/// Lexicographic k-subsets of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn ridge_identity_design_interpolates() {
        let x = Matrix::identity(2);
        let (theta, gram) = ridge_solve(&x, &[1.0, 2.0], 0.0).unwrap();
        assert!((theta[0] - 1.0).abs() < 1e-14);
        assert!((theta[1] - 2.0).abs() < 1e-14);
        assert_eq!(gram, Matrix::identity(2));
    }

    #[test]
    fn ridge_scalar_shrinks_by_half() {
        let x = Matrix::new(1, 1, vec![1.0]).unwrap();
        let (theta, gram) = ridge_solve(&x, &[1.0], 1.0).unwrap();
        assert!((theta[0] - 0.5).abs() < 1e-15);
        assert_eq!(gram[(0, 0)], 2.0);
    }

    #[test]
    fn ridge_rejects_singular_unregularized_design() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            ridge_solve(&x, &[1.0, 2.0], 0.0),
            Err(Error::SingularSystem)
        ));
    }

    #[test]
    fn ridge_rejects_length_mismatch() {
        let x = Matrix::identity(2);
        assert!(matches!(
            ridge_solve(&x, &[1.0], 0.1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn tiny_lambda_interpolates_square_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = random_matrix(&mut rng, 4, 4);
            if smallest_singular_value(&x) < 0.05 {
                continue;
            }
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (theta, _) = ridge_solve(&x, &y, 1e-12).unwrap();
            let fit = x.mul_vec(&theta).unwrap();
            let err: f64 = fit.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(err.sqrt() <= 1e-6);
        }
    }

    #[test]
    fn gram_is_symmetric_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 9, 4);
        let y = vec![0.3; 9];
        let (_, gram) = ridge_solve(&x, &y, 0.01).unwrap();
        assert!(gram.max_asymmetry() < 1e-12);
        let f = SpdFactor::new(gram).unwrap();
        assert!((0..4).all(|i| f.lower()[(i, i)] > 0.0));
    }

    #[test]
    fn factor_reconstructs_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 10, 5);
        let mut v = x.gram();
        for i in 0..5 {
            v[(i, i)] += 0.5;
        }
        let f = SpdFactor::new(v.clone()).unwrap();
        let l = f.lower();
        let lt = l.transpose();
        for i in 0..5 {
            for j in 0..5 {
                let s: f64 = (0..5).map(|k| l[(i, k)] * lt[(k, j)]).sum();
                assert!((s - v[(i, j)]).abs() <= 1e-9 * v[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn mahalanobis_basic_cases() {
        let f = SpdFactor::new(Matrix::identity(2)).unwrap();
        assert!((mahalanobis_norm(&[3.0, 4.0], &f).unwrap() - 5.0).abs() < 1e-15);
        let f = SpdFactor::new(Matrix::new(1, 1, vec![4.0]).unwrap()).unwrap();
        assert!((mahalanobis_norm(&[2.0], &f).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mahalanobis_norm(&[0.0], &f).unwrap(), 0.0);
        assert!(matches!(
            mahalanobis_norm(&[1.0, 2.0], &f),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn batch_inverse_quadratic_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 12, 4);
        let mut v = x.gram();
        for i in 0..4 {
            v[(i, i)] += 0.1;
        }
        let f = SpdFactor::new(v).unwrap();
        let cols = random_matrix(&mut rng, 4, 7);
        let batch = f.inv_quad_columns(&cols).unwrap();
        for (j, b) in batch.iter().enumerate() {
            let single = f.inv_quad(&cols.column(j)).unwrap();
            assert!((single - b).abs() < 1e-12 * single.max(1.0));
        }
    }

    #[test]
    fn log_det_ratio_cases() {
        let lambda = 0.3;
        let f = SpdFactor::new(Matrix::scaled_identity(4, lambda)).unwrap();
        assert!(log_det_ratio(&f, lambda, 4).abs() < 1e-14);
        let f = SpdFactor::new(Matrix::scaled_identity(1, 2.0 * lambda)).unwrap();
        assert!((log_det_ratio(&f, lambda, 1) - 0.5 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_det_ratio_monotone_under_rank_one_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let lambda = 0.01;
        let mut v = Matrix::scaled_identity(3, lambda);
        let mut prev = log_det_ratio(&SpdFactor::new(v.clone()).unwrap(), lambda, 3);
        for _ in 0..30 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            v.add_outer(&x, 1.0);
            let cur = log_det_ratio(&SpdFactor::new(v.clone()).unwrap(), lambda, 3);
            assert!(cur >= prev - 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn independent_arms_examples() {
        let f = Matrix::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]).unwrap();
        assert_eq!(select_independent_arms(&f, 1e-8).unwrap(), vec![0, 1]);
        let f = Matrix::from_rows(&[vec![0.0, 5.0]]).unwrap();
        assert_eq!(select_independent_arms(&f, 1e-8).unwrap(), vec![1]);
        let f = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            select_independent_arms(&f, 1e-8),
            Err(Error::NoIndependentSet(2))
        ));
    }

    #[test]
    fn greedy_path_finds_independent_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_matrix(&mut rng, 6, 200);
        let picked = select_independent_arms(&f, 1e-8).unwrap();
        assert_eq!(picked.len(), 6);
        assert!(smallest_singular_value(&f.select_columns(&picked)) > 1e-8);
        assert_eq!(picked, select_independent_arms(&f, 1e-8).unwrap());
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(Combinations::new(5, 0).count(), 1);
    }
}
