//! Ordinary least squares and quantile regression on achievement scores.
//!
//! OLS solves the normal equations by Cholesky factorization and reports
//! conventional standard errors. Quantile fits minimize the pinball loss
//! through the simplex solver and return a vertex solution, so with an
//! intercept-only design the fitted value is always a sample order
//! statistic.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Mat};
use crate::simplex::{self, SimplexError};

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("need more rows than coefficients: {rows} rows for {cols} coefficients")]
    TooFewRows { rows: usize, cols: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("quantile level must lie strictly between 0 and 1, got {0}")]
    BadTau(f64),
    #[error("response length {y} does not match design rows {rows}")]
    LengthMismatch { y: usize, rows: usize },
    #[error("design matrix has a non-finite entry")]
    NonFinite,
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    /// Present for OLS fits only.
    pub std_errors: Option<Vec<f64>>,
    /// Residual variance estimate (OLS only).
    pub residual_variance: Option<f64>,
    /// Quantile level (quantile fits only).
    pub tau: Option<f64>,
    /// Optimal pinball loss (quantile fits only).
    pub objective: Option<f64>,
}

fn validate(x: &Mat, y: &[f64]) -> Result<(), RegressError> {
    if y.len() != x.rows {
        return Err(RegressError::LengthMismatch {
            y: y.len(),
            rows: x.rows,
        });
    }
    if x.rows <= x.cols {
        return Err(RegressError::TooFewRows {
            rows: x.rows,
            cols: x.cols,
        });
    }
    if x.data().iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite);
    }
    Ok(())
}

/// Least squares via the normal equations. Standard errors come from
/// sigma^2 (X'X)^-1 with sigma^2 = RSS / (n - p).
pub fn ols_fit(x: &Mat, y: &[f64]) -> Result<RegressionFit, RegressError> {
    validate(x, y)?;
    let gram = x.gram();
    let l = linalg::cholesky(&gram).map_err(|_| RegressError::RankDeficient)?;
    let xty = x.tr_mul_vec(y);
    let beta = linalg::chol_solve(&l, &xty);

    let fitted = x.mul_vec(&beta);
    let rss: f64 = y
        .iter()
        .zip(&fitted)
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    let dof = (x.rows - x.cols) as f64;
    let sigma2 = rss / dof;
    let inv = linalg::chol_inverse(&l);
    let se: Vec<f64> = (0..x.cols).map(|j| (sigma2 * inv[(j, j)]).sqrt()).collect();

    Ok(RegressionFit {
        coefficients: beta,
        std_errors: Some(se),
        residual_variance: Some(sigma2),
        tau: None,
        objective: None,
    })
}

/// Quantile regression at level `tau` by pinball-loss minimization.
pub fn quantile_fit(x: &Mat, y: &[f64], tau: f64) -> Result<RegressionFit, RegressError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(RegressError::BadTau(tau));
    }
    validate(x, y)?;
    // rank problems surface as unbounded or cycling programs; refuse early
    linalg::cholesky(&x.gram()).map_err(|_| RegressError::RankDeficient)?;
    let sol = simplex::solve_pinball(x, y, tau)?;
    Ok(RegressionFit {
        coefficients: sol.coefficients,
        std_errors: None,
        residual_variance: None,
        tau: Some(tau),
        objective: Some(sol.objective),
    })
}

/// One quantile fit per level, in the given order.
pub fn quantile_fits(x: &Mat, y: &[f64], taus: &[f64]) -> Result<Vec<RegressionFit>, RegressError> {
    taus.iter().map(|&tau| quantile_fit(x, y, tau)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_design(xs: &[f64]) -> Mat {
        Mat::from_rows(xs.iter().map(|&v| vec![1.0, v]).collect())
    }

    #[test]
    fn ols_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = xs.iter().map(|&v| 3.0 - 0.5 * v).collect();
        let fit = ols_fit(&line_design(&xs), &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((fit.coefficients[1] + 0.5).abs() < 1e-10);
        assert!(fit.residual_variance.unwrap() < 1e-18);
    }

    #[test]
    fn ols_residuals_orthogonal_to_design() {
        let xs = [0.1, 0.9, 0.4, 0.7, 0.2, 0.95, 0.55, 0.33];
        let y = [0.2, 1.4, 0.7, 1.3, 0.1, 1.7, 0.9, 0.5];
        let x = line_design(&xs);
        let fit = ols_fit(&x, &y).unwrap();
        let fitted = x.mul_vec(&fit.coefficients);
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let xtr = x.tr_mul_vec(&resid);
        for v in xtr {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn ols_standard_errors_match_closed_form() {
        // balanced two-point design: hand-checkable X'X
        let x = Mat::from_rows(vec![
            vec![1.0, -1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        ]);
        let y = vec![0.0, 1.0, 2.0, 3.0];
        let fit = ols_fit(&x, &y).unwrap();
        // X'X = diag(4, 4), sigma2 = 0.5, se = sqrt(0.5/4)
        let want = (0.5f64 / 4.0).sqrt();
        for se in fit.std_errors.unwrap() {
            assert!((se - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficiency_refused() {
        let x = Mat::from_rows(vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        let y = vec![1.0, 2.0, 3.0];
        assert!(matches!(ols_fit(&x, &y), Err(RegressError::RankDeficient)));
        assert!(matches!(
            quantile_fit(&x, &y, 0.5),
            Err(RegressError::RankDeficient)
        ));
    }

    #[test]
    fn quantile_intercept_is_order_statistic() {
        let y = vec![0.9, 0.2, 0.6, 0.4, 0.8, 0.1, 0.7];
        let x = Mat::from_rows(vec![vec![1.0]; y.len()]);
        for &tau in &[0.1, 0.15, 0.5, 0.85] {
            let fit = quantile_fit(&x, &y, tau).unwrap();
            assert!(
                y.contains(&fit.coefficients[0]),
                "tau={tau} gave {}",
                fit.coefficients[0]
            );
        }
    }

    #[test]
    fn quantile_shift_equivariance() {
        // adding a constant shifts the intercept by that constant
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [0.3, 1.8, 1.1, 3.4, 2.9, 5.2, 4.4];
        let x = line_design(&xs);
        let base = quantile_fit(&x, &y, 0.5).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let moved = quantile_fit(&x, &shifted, 0.5).unwrap();
        assert!((moved.coefficients[0] - base.coefficients[0] - 10.0).abs() < 1e-9);
        assert!((moved.coefficients[1] - base.coefficients[1]).abs() < 1e-9);
    }

    #[test]
    fn bad_tau_rejected() {
        let x = Mat::from_rows(vec![vec![1.0]; 3]);
        let y = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            quantile_fit(&x, &y, 0.0),
            Err(RegressError::BadTau(_))
        ));
        assert!(matches!(
            quantile_fit(&x, &y, 1.0),
            Err(RegressError::BadTau(_))
        ));
    }
}
