//! Small dense linear algebra: row-major matrices, Cholesky, and
//! Householder QR with column pivoting.

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        Self { rows, cols, data }
    }

    /// Build from a list of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, data }
    }

    /// Build from a list of equal-length columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    /// Returns `None` if the matrix is not positive definite.
    pub fn new(a: &Matrix) -> Option<Self> {
        let n = a.rows();
        if n != a.cols() {
            return None;
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(Self { lower: l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Solves L y = b by forward substitution.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lower.rows();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * y[k];
            }
            y[i] = s / self.lower[(i, i)];
        }
        y
    }

    /// Solves A x = b via L y = b, then Lᵀ x = y.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lower.rows();
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * x[k];
            }
            x[i] = s / self.lower[(i, i)];
        }
        x
    }

    /// Computes bᵀ A⁻¹ b as b · (A⁻¹ b). Going through the full solve keeps
    /// diagonal cases exact (b_i² / a_ii), which ‖L⁻¹ b‖² does not.
    /// Clamped at zero against rounding.
    pub fn quadratic_form_inverse(&self, b: &[f64]) -> f64 {
        let x = self.solve(b);
        let terms: Vec<f64> = b.iter().zip(&x).map(|(p, q)| p * q).collect();
        super::pairwise_sum(&terms).max(0.0)
    }
}

/// Householder QR with column pivoting: A P = Q R.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Householder vectors below the diagonal, R on and above it.
    qr: Matrix,
    tau: Vec<f64>,
    /// `perm[k]` is the original column placed at position k.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// `rel_tol` decides the numerical rank: |R_kk| <= rel_tol * |R_00| is zero.
    pub fn new(a: &Matrix, rel_tol: f64) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![0.0; n.min(m)];
        let mut norms: Vec<f64> = (0..n).map(|j| (0..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum::<f64>()).collect();
        let steps = n.min(m);
        for k in 0..steps {
            // pivot: largest remaining column norm
            let mut best = k;
            for j in (k + 1)..n {
                if norms[j] > norms[best] {
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    let tmp = qr[(i, k)];
                    qr[(i, k)] = qr[(i, best)];
                    qr[(i, best)] = tmp;
                }
                norms.swap(k, best);
                perm.swap(k, best);
            }
            let alpha_norm = (k..m).map(|i| qr[(i, k)] * qr[(i, k)]).sum::<f64>().sqrt();
            if alpha_norm == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let alpha = if qr[(k, k)] > 0.0 { -alpha_norm } else { alpha_norm };
            let v0 = qr[(k, k)] - alpha;
            // normalize so v[k] = 1
            for i in (k + 1)..m {
                qr[(i, k)] /= v0;
            }
            tau[k] = -v0 / alpha;
            qr[(k, k)] = alpha;
            for j in (k + 1)..n {
                let mut s = qr[(k, j)];
                for i in (k + 1)..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in (k + 1)..m {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
            }
            // downdated norms are recomputed exactly; matrices here are small
            for j in (k + 1)..n {
                norms[j] = ((k + 1)..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum();
            }
        }
        let r00 = if steps > 0 { qr[(0, 0)].abs() } else { 0.0 };
        let rank = (0..steps).take_while(|&k| r00 > 0.0 && qr[(k, k)].abs() > rel_tol * r00).count();
        Self { qr, tau, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Original column indices that fall outside the numerical rank.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.perm[self.rank..].to_vec();
        d.sort_unstable();
        d
    }

    /// Qᵀ b.
    fn apply_qt(&self, b: &[f64]) -> Vec<f64> {
        let m = self.qr.rows();
        let mut y = b.to_vec();
        for k in 0..self.tau.len() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut s = y[k];
            for i in (k + 1)..m {
                s += self.qr[(i, k)] * y[i];
            }
            s *= self.tau[k];
            y[k] -= s;
            for i in (k + 1)..m {
                y[i] -= s * self.qr[(i, k)];
            }
        }
        y
    }

    /// Least-squares solution of A x = b. Requires full column rank.
    pub fn solve_least_squares(&self, b: &[f64]) -> Vec<f64> {
        let n = self.qr.cols();
        assert_eq!(self.rank, n, "least squares on a rank-deficient factorization");
        let y = self.apply_qt(b);
        let mut z = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.qr[(i, j)] * z[j];
            }
            z[i] = s / self.qr[(i, i)];
        }
        let mut x = vec![0.0; n];
        for (k, &col) in self.perm.iter().enumerate() {
            x[col] = z[k];
        }
        x
    }

    /// (AᵀA)⁻¹ in the original column order. Requires full column rank.
    pub fn gram_inverse(&self) -> Matrix {
        let n = self.qr.cols();
        assert_eq!(self.rank, n, "gram inverse on a rank-deficient factorization");
        // R⁻¹ (upper triangular)
        let mut rinv = Matrix::zeros(n, n);
        for j in 0..n {
            rinv[(j, j)] = 1.0 / self.qr[(j, j)];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in (i + 1)..=j {
                    s += self.qr[(i, k)] * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.qr[(i, i)];
            }
        }
        // (RᵀR)⁻¹ = R⁻¹ R⁻ᵀ, then undo the permutation
        let mut out = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for k in a.max(b)..n {
                    s += rinv[(a, k)] * rinv[(b, k)];
                }
                out[(self.perm[a], self.perm[b])] = s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let c = Cholesky::new(&a).unwrap();
        let l = c.lower();
        for i in 0..2 {
            for j in 0..2 {
                let s: f64 = (0..2).map(|k| l[(i, k)] * l[(j, k)]).sum();
                assert!((s - a[(i, j)]).abs() < 1e-14);
            }
        }
        assert!(Cholesky::new(&Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]])).is_none());
    }

    #[test]
    fn qr_least_squares_exact_system() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]]);
        let qr = PivotedQr::new(&a, 1e-12);
        assert_eq!(qr.rank(), 2);
        let x = qr.solve_least_squares(&[3.0, 5.0, 7.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn qr_detects_dependent_column() {
        let a =
            Matrix::from_rows(&[vec![1.0, 2.0, 1.0], vec![1.0, 4.0, 2.0], vec![1.0, 6.0, 3.0], vec![1.0, 1.0, 0.5]]);
        let qr = PivotedQr::new(&a, 1e-10);
        assert_eq!(qr.rank(), 2);
        assert_eq!(qr.dependent_columns().len(), 1);
    }

    #[test]
    fn gram_inverse_matches_closed_form() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        // AᵀA = [[3,3],[3,5]], inverse = 1/6 [[5,-3],[-3,3]]
        let inv = PivotedQr::new(&a, 1e-12).gram_inverse();
        let want = [[5.0 / 6.0, -0.5], [-0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)] - want[i][j]).abs() < 1e-13);
            }
        }
    }
}
