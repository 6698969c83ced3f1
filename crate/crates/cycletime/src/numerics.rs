//! Dense numerics needed by the trainers: a small row-major matrix type,
//! a Cholesky solver for symmetric positive definite systems, and a normal-
//! equations least-squares solver with a ridge fallback for rank-deficient
//! design matrices.
//!
//! The solvers are deliberately dense and allocation-light; the systems they
//! see are small (weight counts in the low hundreds, rule tables below a few
//! hundred columns).

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check in [`solve_spd`].
const SYMMETRY_RTOL: f64 = 1e-10;

/// Condition estimate above which the least-squares solver switches to ridge.
const CONDITION_LIMIT: f64 = 1e12;

/// Ridge added to the normal equations when the design matrix is close to
/// rank deficient.
const RIDGE_LAMBDA: f64 = 1e-8;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    left: cols,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `A^T A`, exploiting symmetry of the product.
    pub fn transpose_times_self(&self) -> Matrix {
        let n = self.cols;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for r in 0..self.rows {
                    let row = &self.data[r * n..(r + 1) * n];
                    acc += row[i] * row[j];
                }
                out.set(i, j, acc);
                out.set(j, i, acc);
            }
        }
        out
    }

    /// `A^T v` for a vector with one entry per row.
    pub fn transpose_times_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let vr = v[r];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vr;
            }
        }
        out
    }

    /// `A x` for a vector with one entry per column.
    pub fn times_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| dot(self.row(r), x))
            .collect()
    }

    /// Adds `v` to every diagonal entry.
    pub fn add_to_diagonal(&mut self, v: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += v;
        }
    }

    /// Multiplies every entry by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Lower-triangular Cholesky factor stored densely. Fails with
/// [`Error::NotPositiveDefinite`] on a non-positive pivot, which callers such
/// as the Levenberg-Marquardt step use as the signal to raise damping.
fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            let ljk = l.get(j, k);
            d -= ljk * ljk;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, acc / ljj);
        }
    }
    Ok(l)
}

/// Solves `L y = b` then `L^T x = y` given the lower Cholesky factor.
fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l.get(i, k) * y[k];
        }
        y[i] = acc / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l.get(k, i) * x[k];
        }
        x[i] = acc / l.get(i, i);
    }
    x
}

fn check_square_system(a: &Matrix, b: &[f64]) -> Result<()> {
    if a.rows == 0 {
        return Err(Error::EmptyInput);
    }
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: a.cols,
        });
    }
    if b.len() != a.rows {
        return Err(Error::LengthMismatch {
            left: a.rows,
            right: b.len(),
        });
    }
    Ok(())
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky
/// factorization. `A` must be symmetric within a small tolerance relative to
/// its largest entry.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square_system(a, b)?;
    let n = a.rows;
    let mut max_abs: f64 = 0.0;
    for v in &a.data {
        max_abs = max_abs.max(v.abs());
    }
    let tol = SYMMETRY_RTOL * max_abs.max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a.get(i, j) - a.get(j, i)).abs() > tol {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Trace of `A^{-1}` for symmetric positive definite `A`: one factorization,
/// then a triangular solve per basis vector.
pub fn spd_inverse_trace(a: &Matrix) -> Result<f64> {
    spd_inverse_trace_and_logdet(a).map(|(trace, _)| trace)
}

/// Trace of `A^{-1}` together with `ln det A` for symmetric positive
/// definite `A`, from a single Cholesky factorization.
pub fn spd_inverse_trace_and_logdet(a: &Matrix) -> Result<(f64, f64)> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: a.cols,
        });
    }
    let l = cholesky(a)?;
    let n = a.rows;
    let mut log_det = 0.0;
    for i in 0..n {
        log_det += 2.0 * l.get(i, i).ln();
    }
    let mut e = vec![0.0; n];
    let mut trace = 0.0;
    for i in 0..n {
        e[i] = 1.0;
        let x = cholesky_solve(&l, &e);
        trace += x[i];
        e[i] = 0.0;
    }
    Ok((trace, log_det))
}

/// Least-squares solution of an overdetermined system.
#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub x: Vec<f64>,
    /// True when the normal equations looked rank deficient and a ridge term
    /// was added to keep the solve well posed.
    pub rank_deficient: bool,
}

/// Minimizes `|A x - b|` through the normal equations `A^T A x = A^T b`.
///
/// When the Cholesky condition estimate of `A^T A` exceeds a threshold, or
/// the factorization fails outright, the solver retries with a small ridge
/// term on the diagonal and flags the result as rank deficient.
pub fn solve_least_squares(a: &Matrix, b: &[f64]) -> Result<LsqSolution> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::EmptyInput);
    }
    if a.rows < a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.cols,
            found: a.rows,
        });
    }
    if b.len() != a.rows {
        return Err(Error::LengthMismatch {
            left: a.rows,
            right: b.len(),
        });
    }
    let gram = a.transpose_times_self();
    let rhs = a.transpose_times_vec(b);

    let well_posed = match cholesky(&gram) {
        Ok(l) => {
            let mut dmin = f64::INFINITY;
            let mut dmax: f64 = 0.0;
            for i in 0..l.rows() {
                let d = l.get(i, i);
                dmin = dmin.min(d);
                dmax = dmax.max(d);
            }
            let cond = (dmax / dmin).powi(2);
            if cond.is_finite() && cond <= CONDITION_LIMIT {
                Some(l)
            } else {
                None
            }
        }
        Err(Error::NotPositiveDefinite) => None,
        Err(e) => return Err(e),
    };

    match well_posed {
        Some(l) => Ok(LsqSolution {
            x: cholesky_solve(&l, &rhs),
            rank_deficient: false,
        }),
        None => {
            let mut ridged = gram;
            ridged.add_to_diagonal(RIDGE_LAMBDA);
            let l = cholesky(&ridged)?;
            Ok(LsqSolution {
                x: cholesky_solve(&l, &rhs),
                rank_deficient: true,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
            assert!(
                (a - e).abs() <= tol,
                "component {i}: {a} vs {e} (tol {tol})"
            );
        }
    }

    #[test]
    fn spd_solve_matches_hand_elimination() {
        let a = Matrix::from_rows(vec![vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = solve_spd(&a, &[1.0, 2.0]).unwrap();
        assert_close(&x, &[1.0 / 11.0, 7.0 / 11.0], 1e-15);
    }

    #[test]
    fn spd_solve_identity_returns_rhs_exactly() {
        let mut a = Matrix::zeros(3, 3);
        a.add_to_diagonal(1.0);
        let b = [0.25, -3.5, 17.0];
        let x = solve_spd(&a, &b).unwrap();
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn spd_solve_rejects_indefinite_matrix() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_spd(&a, &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn spd_solve_rejects_asymmetric_matrix() {
        let a = Matrix::from_rows(vec![vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert!(matches!(solve_spd(&a, &[1.0, 1.0]), Err(Error::NotSymmetric)));
    }

    #[test]
    fn spd_solve_checks_shapes() {
        let a = Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            solve_spd(&a, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut sq = Matrix::zeros(2, 2);
        sq.add_to_diagonal(1.0);
        assert!(matches!(
            solve_spd(&sq, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn inverse_trace_matches_closed_form_for_diagonal() {
        let a = Matrix::from_rows(vec![
            vec![2.0, 0.0, 0.0],
            vec![0.0, 4.0, 0.0],
            vec![0.0, 0.0, 8.0],
        ])
        .unwrap();
        let tr = spd_inverse_trace(&a).unwrap();
        assert!((tr - (0.5 + 0.25 + 0.125)).abs() < 1e-14);
    }

    #[test]
    fn least_squares_recovers_consistent_full_rank_system() {
        // b = A [2, -1] exactly, so the residual must vanish.
        let a = Matrix::from_rows(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![2.0, -1.0],
        ])
        .unwrap();
        let b = a.times_vec(&[2.0, -1.0]);
        let sol = solve_least_squares(&a, &b).unwrap();
        assert!(!sol.rank_deficient);
        assert_close(&sol.x, &[2.0, -1.0], 1e-12);
    }

    #[test]
    fn least_squares_flags_duplicated_columns_and_stays_finite() {
        let a = Matrix::from_rows(vec![
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
        ])
        .unwrap();
        let sol = solve_least_squares(&a, &[2.0, 2.0, 4.0]).unwrap();
        assert!(sol.rank_deficient);
        // The ridge splits the coefficient evenly; the fit itself stays exact
        // to well below the ridge magnitude.
        let fit = a.times_vec(&sol.x);
        assert_close(&fit, &[2.0, 2.0, 4.0], 1e-6);
    }

    #[test]
    fn least_squares_rejects_underdetermined_systems() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            solve_least_squares(&a, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn spd_solve_inverts_generated_systems(
            dim in 1usize..12,
            seed_vals in proptest::collection::vec(-1.0f64..1.0, 144 + 12),
        ) {
            // A = M^T M + I is SPD and well conditioned enough for a tight check.
            let mut m = Matrix::zeros(dim, dim);
            for r in 0..dim {
                for c in 0..dim {
                    m.set(r, c, seed_vals[r * dim + c]);
                }
            }
            let mut a = m.transpose_times_self();
            a.add_to_diagonal(1.0);
            let x_true: Vec<f64> = seed_vals[144..144 + dim].to_vec();
            let b = a.times_vec(&x_true);
            let x = solve_spd(&a, &b).unwrap();
            for (xs, xt) in x.iter().zip(&x_true) {
                prop_assert!((xs - xt).abs() < 1e-9);
            }
        }

        #[test]
        fn least_squares_residual_is_orthogonal_to_columns(
            rows in 3usize..10,
            cols in 1usize..3,
            vals in proptest::collection::vec(-1.0f64..1.0, 10 * 3 + 10),
        ) {
            prop_assume!(rows > cols);
            let mut a = Matrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    // Diagonal boost keeps the system comfortably full rank.
                    let bump = if r == c { 2.0 } else { 0.0 };
                    a.set(r, c, vals[r * cols + c] + bump);
                }
            }
            let b: Vec<f64> = vals[30..30 + rows].to_vec();
            let sol = solve_least_squares(&a, &b).unwrap();
            prop_assert!(!sol.rank_deficient);
            let fit = a.times_vec(&sol.x);
            let resid: Vec<f64> = b.iter().zip(&fit).map(|(bi, fi)| bi - fi).collect();
            let ortho = a.transpose_times_vec(&resid);
            for v in ortho {
                prop_assert!(v.abs() < 1e-8);
            }
        }
    }
}
