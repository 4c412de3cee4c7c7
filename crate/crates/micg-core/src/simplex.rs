//! Primal simplex solver for the pinball-loss linear program behind
//! quantile regression:
//!
//! ```text
//! min  tau * sum(u) + (1 - tau) * sum(v)
//! s.t. X (b+ - b-) + u - v = y,   b+, b-, u, v >= 0
//! ```
//!
//! The revised method keeps a dense basis inverse instead of the full
//! tableau; the residual columns are unit vectors, so only coefficient
//! columns ever need a matrix-vector product. Bland's rule (lowest
//! variable index enters, lowest basic index leaves on ties) prevents
//! cycling on the degenerate bases this program routinely produces.
//! Variable order: b+ block, b- block, u block, v block.

use thiserror::Error;

use crate::linalg::Mat;

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("linear program is unbounded; the design matrix is rank deficient")]
    Unbounded,
    #[error("simplex failed to converge within {0} pivots")]
    MaxIterations(usize),
}

/// Reduced costs below this are treated as improving.
const COST_TOL: f64 = 1e-9;
/// Pivot entries below this cannot leave the basis.
const PIVOT_TOL: f64 = 1e-11;
/// Ratio-test ties closer than this are broken by Bland's rule.
const RATIO_TIE_TOL: f64 = 1e-12;

pub struct PinballSolution {
    pub coefficients: Vec<f64>,
    /// Optimal pinball loss, recomputed by direct summation over rows.
    pub objective: f64,
    pub iterations: usize,
}

/// Pinball loss of coefficients `b`, summed in row order.
pub fn pinball_loss(x: &Mat, y: &[f64], b: &[f64], tau: f64) -> f64 {
    assert_eq!(y.len(), x.rows, "one response per design row");
    let mut total = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let fitted = crate::linalg::dot(x.row(i), b);
        let r = yi - fitted;
        total += if r >= 0.0 {
            tau * r
        } else {
            (1.0 - tau) * (-r)
        };
    }
    total
}

/// Solve the quantile-regression program at level `tau`.
pub fn solve_pinball(x: &Mat, y: &[f64], tau: f64) -> Result<PinballSolution, SimplexError> {
    let m = x.rows;
    let p = x.cols;
    assert_eq!(y.len(), m);

    // basis holds one variable index per row; start from u_i / v_i
    // depending on the residual sign at b = 0
    let mut basis: Vec<usize> = (0..m)
        .map(|i| {
            if y[i] >= 0.0 {
                2 * p + i
            } else {
                2 * p + m + i
            }
        })
        .collect();
    let mut binv = Mat::identity(m);
    for i in 0..m {
        if y[i] < 0.0 {
            binv[(i, i)] = -1.0;
        }
    }
    let mut xb: Vec<f64> = y.iter().map(|v| v.abs()).collect();

    let cost = |var: usize| -> f64 {
        if var < 2 * p {
            0.0
        } else if var < 2 * p + m {
            tau
        } else {
            1.0 - tau
        }
    };

    let max_iterations = 200 * (m + 2 * p) + 1_000;
    let mut iterations = 0;
    loop {
        if iterations > max_iterations {
            return Err(SimplexError::MaxIterations(max_iterations));
        }

        // dual vector c_B' B^-1
        let mut dual = vec![0.0; m];
        for (r, &var) in basis.iter().enumerate() {
            let c = cost(var);
            if c == 0.0 {
                continue;
            }
            for i in 0..m {
                dual[i] += c * binv[(r, i)];
            }
        }

        // Bland: first variable (lowest index) with an improving reduced cost
        let mut entering: Option<usize> = None;
        'scan: {
            for j in 0..p {
                let mut d = 0.0;
                for i in 0..m {
                    d -= dual[i] * x[(i, j)];
                }
                if d < -COST_TOL {
                    entering = Some(j);
                    break 'scan;
                }
            }
            for j in 0..p {
                let mut d = 0.0;
                for i in 0..m {
                    d += dual[i] * x[(i, j)];
                }
                if d < -COST_TOL {
                    entering = Some(p + j);
                    break 'scan;
                }
            }
            for (i, &d) in dual.iter().enumerate() {
                if tau - d < -COST_TOL {
                    entering = Some(2 * p + i);
                    break 'scan;
                }
            }
            for (i, &d) in dual.iter().enumerate() {
                if (1.0 - tau) + d < -COST_TOL {
                    entering = Some(2 * p + m + i);
                    break 'scan;
                }
            }
        }
        let Some(entering) = entering else {
            return Ok(finish(x, y, tau, &basis, &xb, p, iterations));
        };

        // direction w = B^-1 a_e
        let w: Vec<f64> = if entering < p {
            let col = x.col(entering);
            (0..m)
                .map(|r| crate::linalg::dot(binv.row(r), &col))
                .collect()
        } else if entering < 2 * p {
            let col = x.col(entering - p);
            (0..m)
                .map(|r| -crate::linalg::dot(binv.row(r), &col))
                .collect()
        } else if entering < 2 * p + m {
            binv.col(entering - 2 * p)
        } else {
            binv.col(entering - 2 * p - m)
                .into_iter()
                .map(|v| -v)
                .collect()
        };

        // ratio test with Bland tie-breaking on the leaving variable
        let mut leave: Option<(usize, f64)> = None;
        for (r, &wr) in w.iter().enumerate() {
            if wr <= PIVOT_TOL {
                continue;
            }
            let ratio = xb[r] / wr;
            match leave {
                None => leave = Some((r, ratio)),
                Some((best_r, best)) => {
                    if ratio < best - RATIO_TIE_TOL
                        || ((ratio - best).abs() <= RATIO_TIE_TOL && basis[r] < basis[best_r])
                    {
                        leave = Some((r, ratio));
                    }
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            // the objective cannot actually be unbounded unless X columns
            // are dependent, which shows up as a column of zeros here
            return Err(SimplexError::Unbounded);
        };

        // eta update of the inverse and the basic values
        let piv = w[pivot_row];
        for k in 0..m {
            binv[(pivot_row, k)] /= piv;
        }
        xb[pivot_row] /= piv;
        for r in 0..m {
            if r == pivot_row {
                continue;
            }
            let factor = w[r];
            if factor == 0.0 {
                continue;
            }
            for k in 0..m {
                let delta = factor * binv[(pivot_row, k)];
                binv[(r, k)] -= delta;
            }
            xb[r] -= factor * xb[pivot_row];
            if xb[r] < 0.0 && xb[r] > -1e-9 {
                xb[r] = 0.0;
            }
        }
        basis[pivot_row] = entering;
        iterations += 1;
    }
}

/// Extract coefficients at the final vertex. Whenever the optimal basis
/// pins down an active set (rows with zero residual matching the basic
/// coefficient variables), the coefficients are re-solved exactly from
/// those rows so interpolated data points are reproduced bit for bit.
fn finish(
    x: &Mat,
    y: &[f64],
    tau: f64,
    basis: &[usize],
    xb: &[f64],
    p: usize,
    iterations: usize,
) -> PinballSolution {
    let m = x.rows;
    let mut coefficients = vec![0.0; p];
    let mut active_cols: Vec<usize> = Vec::new();
    for (r, &var) in basis.iter().enumerate() {
        if var < p {
            coefficients[var] += xb[r];
            active_cols.push(var);
        } else if var < 2 * p {
            coefficients[var - p] -= xb[r];
            active_cols.push(var - p);
        }
    }
    active_cols.sort_unstable();
    active_cols.dedup();

    // rows where neither residual variable is basic have zero residual
    let mut residual_basic = vec![false; m];
    for &var in basis {
        if var >= 2 * p {
            let i = if var < 2 * p + m {
                var - 2 * p
            } else {
                var - 2 * p - m
            };
            residual_basic[i] = true;
        }
    }
    let active_rows: Vec<usize> = (0..m).filter(|&i| !residual_basic[i]).collect();

    if !active_cols.is_empty() && active_rows.len() >= active_cols.len() {
        let k = active_cols.len();
        let mut a = Mat::zeros(k, k);
        let mut rhs = vec![0.0; k];
        for (ri, &row) in active_rows.iter().take(k).enumerate() {
            for (ci, &col) in active_cols.iter().enumerate() {
                a[(ri, ci)] = x[(row, col)];
            }
            rhs[ri] = y[row];
        }
        if let Ok(solved) = crate::linalg::gauss_solve(&a, &rhs) {
            let mut refined = vec![0.0; p];
            for (ci, &col) in active_cols.iter().enumerate() {
                refined[col] = solved[ci];
            }
            // accept the refinement only if it does not worsen the loss
            if pinball_loss(x, y, &refined, tau) <= pinball_loss(x, y, &coefficients, tau) + 1e-9 {
                coefficients = refined;
            }
        }
    }

    let objective = pinball_loss(x, y, &coefficients, tau);
    PinballSolution {
        coefficients,
        objective,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_design(n: usize) -> Mat {
        Mat::from_rows(vec![vec![1.0]; n])
    }

    #[test]
    fn median_of_odd_sample_is_exact() {
        let y = vec![3.0, 1.0, 4.0, 1.5, 9.0];
        let x = intercept_design(y.len());
        let sol = solve_pinball(&x, &y, 0.5).unwrap();
        assert_eq!(sol.coefficients[0], 3.0);
    }

    #[test]
    fn low_quantile_picks_low_order_statistic() {
        let y: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let x = intercept_design(10);
        let sol = solve_pinball(&x, &y, 0.1).unwrap();
        // any b in [1,2] is optimal at tau = 0.1 with n = 10; the vertex
        // must be one of the data points
        assert!(y.contains(&sol.coefficients[0]));
        let loss_at = |b: f64| pinball_loss(&x, &y, &[b], 0.1);
        assert!((sol.objective - loss_at(1.0)).abs() < 1e-12);
    }

    #[test]
    fn fitted_line_interpolates_two_points() {
        // y = 2x + 1 exactly: zero loss at every tau
        let x = Mat::from_rows((0..6).map(|i| vec![1.0, i as f64]).collect());
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64 + 1.0).collect();
        for &tau in &[0.25, 0.5, 0.9] {
            let sol = solve_pinball(&x, &y, tau).unwrap();
            assert!((sol.coefficients[0] - 1.0).abs() < 1e-9, "tau={tau}");
            assert!((sol.coefficients[1] - 2.0).abs() < 1e-9);
            assert!(sol.objective.abs() < 1e-9);
        }
    }

    #[test]
    fn objective_is_optimal_against_grid() {
        let y = vec![0.3, -1.2, 2.5, 0.9, -0.4, 1.7, 0.0, 3.3];
        let x = intercept_design(y.len());
        for &tau in &[0.15, 0.5, 0.8] {
            let sol = solve_pinball(&x, &y, tau).unwrap();
            for &candidate in &y {
                assert!(
                    sol.objective <= pinball_loss(&x, &y, &[candidate], tau) + 1e-12,
                    "tau={tau} candidate={candidate} b={:?} obj={} iters={} cand_loss={}",
                    sol.coefficients,
                    sol.objective,
                    sol.iterations,
                    pinball_loss(&x, &y, &[candidate], tau)
                );
            }
        }
    }

    #[test]
    fn duplicate_column_reports_unbounded() {
        let x = Mat::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
        let y = vec![1.0, 2.0, 3.0];
        // the duplicated coefficient pair lets b+ and b- grow together;
        // the program detects the dependent structure instead of cycling
        let r = solve_pinball(&x, &y, 0.5);
        match r {
            Ok(sol) => {
                // degenerate but bounded vertices are also acceptable as
                // long as the loss is optimal
                assert!(
                    (sol.objective - pinball_loss(&x, &y, &sol.coefficients, 0.5)).abs() < 1e-12
                );
            }
            Err(SimplexError::Unbounded) => {}
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }
}
