use serde::{Deserialize, Serialize};

use super::linalg::{Matrix, PivotedQr};
use super::{check_finite, mean, pairwise_sum, student_t_two_sided_p, StatsError};
use crate::serde_util::f64_nonfinite;

const RANK_TOL: f64 = 1e-10;
/// R² at or above this is treated as perfect collinearity by [`vif`].
const VIF_COLLINEAR_R2: f64 = 1.0 - 1e-12;

/// OLS fit summary. Vectors are aligned with `names`; the intercept, when
/// present, comes first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    #[serde(with = "f64_nonfinite::vec")]
    pub std_errors: Vec<f64>,
    #[serde(with = "f64_nonfinite::vec")]
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub df_resid: usize,
    /// Per-predictor VIF (no entry for the intercept). Empty when fewer than
    /// two predictors. `+inf` marks perfect collinearity.
    #[serde(with = "f64_nonfinite::vec")]
    pub vif: Vec<f64>,
}

impl RegressionReport {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }
}

fn default_names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("x{j}")).collect()
}

/// Ordinary least squares of `y` on the columns of `x`.
///
/// Coefficients come from a column-pivoted QR, standard errors from
/// σ²(XᵀX)⁻¹ with σ² = SSR / (n − p). R² is centered when an intercept is
/// included and uncentered otherwise. VIF is filled in for k ≥ 2 predictors.
pub fn ols(
    x: &Matrix,
    y: &[f64],
    with_intercept: bool,
    predictor_names: Option<&[String]>,
) -> Result<RegressionReport, StatsError> {
    let (n, k) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(StatsError::LengthMismatch { left: n, right: y.len() });
    }
    let p = k + usize::from(with_intercept);
    if n <= p {
        return Err(StatsError::TooFew { needed: p + 1, got: n });
    }
    check_finite(y)?;
    let mut names = Vec::with_capacity(p);
    if with_intercept {
        names.push("intercept".to_string());
    }
    match predictor_names {
        Some(given) => {
            assert_eq!(given.len(), k, "one name per predictor");
            names.extend(given.iter().cloned());
        }
        None => names.extend(default_names(k)),
    }

    let design = design_matrix(x, with_intercept);
    let qr = PivotedQr::new(&design, RANK_TOL);
    if qr.rank() < p {
        let dep = qr.dependent_columns().into_iter().map(|j| names[j].clone()).collect();
        return Err(StatsError::RankDeficient(dep));
    }
    let beta = qr.solve_least_squares(y);
    let fitted = design.mul_vec(&beta);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let ssr = pairwise_sum(&resid.iter().map(|r| r * r).collect::<Vec<_>>());
    let sst = if with_intercept {
        let m = mean(y);
        pairwise_sum(&y.iter().map(|v| (v - m) * (v - m)).collect::<Vec<_>>())
    } else {
        pairwise_sum(&y.iter().map(|v| v * v).collect::<Vec<_>>())
    };
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 1.0 };
    let df_resid = n - p;
    let sigma2 = ssr / df_resid as f64;
    let gram_inv = qr.gram_inverse();
    let mut std_errors = Vec::with_capacity(p);
    let mut t_values = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let se = (sigma2 * gram_inv[(j, j)]).max(0.0).sqrt();
        let t = if se > 0.0 {
            beta[j] / se
        } else if beta[j] == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(beta[j])
        };
        std_errors.push(se);
        t_values.push(t);
        p_values.push(student_t_two_sided_p(t, df_resid as f64));
    }
    let vif_values = if k >= 2 { vif(x)? } else { Vec::new() };
    Ok(RegressionReport {
        names,
        coefficients: beta,
        std_errors,
        t_values,
        p_values,
        r_squared,
        n_obs: n,
        df_resid,
        vif: vif_values,
    })
}

fn design_matrix(x: &Matrix, with_intercept: bool) -> Matrix {
    if !with_intercept {
        return x.clone();
    }
    let mut d = Matrix::zeros(x.rows(), x.cols() + 1);
    for i in 0..x.rows() {
        d[(i, 0)] = 1.0;
        for j in 0..x.cols() {
            d[(i, j + 1)] = x[(i, j)];
        }
    }
    d
}

/// Variance inflation factor of each column: 1 / (1 − R²_j) from regressing
/// column j on the remaining columns with an intercept. Perfect collinearity
/// yields `f64::INFINITY`.
pub fn vif(x: &Matrix) -> Result<Vec<f64>, StatsError> {
    let (n, k) = (x.rows(), x.cols());
    if k < 2 {
        return Err(StatsError::TooFew { needed: 2, got: k });
    }
    if n <= k {
        return Err(StatsError::TooFew { needed: k + 1, got: n });
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let target = x.column(j);
        let others: Vec<Vec<f64>> = (0..k).filter(|&c| c != j).map(|c| x.column(c)).collect();
        let design = design_matrix(&Matrix::from_columns(&others), true);
        let qr = PivotedQr::new(&design, RANK_TOL);
        let m = mean(&target);
        let sst = pairwise_sum(&target.iter().map(|v| (v - m) * (v - m)).collect::<Vec<_>>());
        if sst == 0.0 {
            // a constant column is fully explained by the intercept
            out.push(f64::INFINITY);
            continue;
        }
        let r2 = if qr.rank() < design.cols() {
            // Others are collinear among themselves; project on a reduced basis.
            reduced_r_squared(&design, &target, sst)
        } else {
            let beta = qr.solve_least_squares(&target);
            let fitted = design.mul_vec(&beta);
            let ssr = pairwise_sum(&target.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).collect::<Vec<_>>());
            1.0 - ssr / sst
        };
        out.push(if r2 >= VIF_COLLINEAR_R2 { f64::INFINITY } else { 1.0 / (1.0 - r2) });
    }
    Ok(out)
}

fn reduced_r_squared(design: &Matrix, target: &[f64], sst: f64) -> f64 {
    // Greedily keep columns that add rank, then fit on those.
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for c in 0..design.cols() {
        let mut trial = kept.clone();
        trial.push(design.column(c));
        if PivotedQr::new(&Matrix::from_columns(&trial), RANK_TOL).rank() == trial.len() {
            kept = trial;
        }
    }
    let basis = Matrix::from_columns(&kept);
    let qr = PivotedQr::new(&basis, RANK_TOL);
    let beta = qr.solve_least_squares(target);
    let fitted = basis.mul_vec(&beta);
    let ssr: f64 = target.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - ssr / sst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> Matrix {
        Matrix::from_columns(&[xs.to_vec()])
    }

    #[test]
    fn four_point_hand_example() {
        let r = ols(&col(&[1.0, 2.0, 3.0, 4.0]), &[1.0, 2.0, 2.0, 3.0], true, None).unwrap();
        assert!((r.coefficients[0] - 0.5).abs() < 1e-12);
        assert!((r.coefficients[1] - 0.6).abs() < 1e-12);
        assert!((r.r_squared - 0.9).abs() < 1e-12);
        assert_eq!(r.df_resid, 2);
    }

    #[test]
    fn exact_fit() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = ols(&col(&x), &y, true, None).unwrap();
        assert!((r.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(r.coefficients[0].abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_column_is_rank_error() {
        let x = Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 5.0], vec![1.0, 2.0, 3.0, 5.0]]);
        let err = ols(&x, &[1.0, 0.0, 2.0, 1.0], true, None).unwrap_err();
        match err {
            StatsError::RankDeficient(cols) => {
                assert_eq!(cols.len(), 1);
                assert!(cols[0] == "x1" || cols[0] == "x2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(ols(&col(&[1.0, 2.0]), &[1.0, 2.0], true, None), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn vif_orthogonal_and_collinear() {
        let a = vec![1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0];
        let v = vif(&Matrix::from_columns(&[a.clone(), b])).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-12));
        let v = vif(&Matrix::from_columns(&[a.clone(), a])).unwrap();
        assert!(v.iter().all(|x| x.is_infinite()));
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let x = Matrix::from_columns(&[vec![0.3, 1.2, -0.7, 2.2, 0.9, -1.4], vec![1.0, 0.1, 0.4, -0.3, 2.0, 0.5]]);
        let y = [1.0, 2.5, -0.3, 4.1, 3.3, -0.9];
        let r = ols(&x, &y, true, None).unwrap();
        let resid: Vec<f64> = (0..6)
            .map(|i| y[i] - r.coefficients[0] - r.coefficients[1] * x[(i, 0)] - r.coefficients[2] * x[(i, 1)])
            .collect();
        assert!(resid.iter().sum::<f64>().abs() < 1e-12);
        for j in 0..2 {
            let dot: f64 = (0..6).map(|i| resid[i] * x[(i, j)]).sum();
            assert!(dot.abs() < 1e-12);
        }
    }
}
