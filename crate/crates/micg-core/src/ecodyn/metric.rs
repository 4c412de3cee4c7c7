//! Metric tensor fields over small coordinate spaces, with Christoffel
//! symbols from central finite differences. Constant metrics short-circuit
//! to exactly zero symbols.

use crate::expr::{self, Arith};
use crate::linalg::{self, Mat};

use super::EcodynError;

/// Finite-difference step for metric derivatives.
const FD_STEP: f64 = 1e-5;
/// Pivot tolerance when inverting the metric.
const SINGULAR_TOL: f64 = 1e-12;

/// Coordinate names usable in metric entry expressions, by position.
const COORDS: [&str; 4] = ["x", "y", "z", "w"];

enum Kind {
    Constant(Mat),
    /// Row-major dim x dim entry expressions.
    Expr(Vec<Arith>),
}

pub struct MetricField {
    dim: usize,
    kind: Kind,
}

impl MetricField {
    /// Flat metric with signature (+, +, -) on three coordinates.
    pub fn minkowski() -> Self {
        let mut g = Mat::identity(3);
        g[(2, 2)] = -1.0;
        MetricField {
            dim: 3,
            kind: Kind::Constant(g),
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        MetricField {
            dim,
            kind: Kind::Constant(Mat::identity(dim)),
        }
    }

    /// Hyperbolic upper half-plane: g = diag(1/y^2, 1/y^2) on (x, y).
    pub fn poincare_half_plane() -> Self {
        Self::from_expressions(2, &["1/(y*y)", "0", "0", "1/(y*y)"])
            .expect("half-plane entries parse")
    }

    /// Constant metric from a symmetric matrix.
    pub fn constant(g: Mat) -> Result<Self, EcodynError> {
        let dim = g.rows;
        if g.cols != dim {
            return Err(EcodynError::BadMetricEntries {
                dim,
                expected: dim * dim,
                got: g.rows * g.cols,
            });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if g[(i, j)] != g[(j, i)] {
                    return Err(EcodynError::NotSymmetric);
                }
            }
        }
        Ok(MetricField {
            dim,
            kind: Kind::Constant(g),
        })
    }

    /// Metric whose entries are arithmetic expressions over coordinates
    /// named x, y, z, w (up to `dim`). Entries are given row-major and
    /// must be symmetric as written.
    pub fn from_expressions(dim: usize, entries: &[&str]) -> Result<Self, EcodynError> {
        assert!(dim >= 1 && dim <= COORDS.len(), "dim must be 1..=4");
        if entries.len() != dim * dim {
            return Err(EcodynError::BadMetricEntries {
                dim,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let params = std::collections::BTreeMap::new();
        let mut parsed = Vec::with_capacity(entries.len());
        for text in entries {
            let e = expr::parse_arith(text, &params)?;
            for name in e.vars() {
                let ok = COORDS[..dim].contains(&name.as_str());
                if !ok {
                    return Err(EcodynError::UnknownVariable { name });
                }
            }
            parsed.push(e);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(EcodynError::NotSymmetric);
                }
            }
        }
        Ok(MetricField {
            dim,
            kind: Kind::Expr(parsed),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    /// Metric tensor at a point.
    pub fn eval(&self, point: &[f64]) -> Mat {
        debug_assert_eq!(point.len(), self.dim);
        match &self.kind {
            Kind::Constant(g) => g.clone(),
            Kind::Expr(entries) => {
                let mut g = Mat::zeros(self.dim, self.dim);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        g[(i, j)] = entries[i * self.dim + j].eval(&|name| {
                            COORDS[..self.dim]
                                .iter()
                                .position(|c| *c == name)
                                .map(|k| point[k])
                        });
                    }
                }
                g
            }
        }
    }

    /// Christoffel symbols of the second kind at a point, indexed
    /// `gamma[k * dim * dim + i * dim + j]` for Gamma^k_ij. Constant
    /// metrics return exact zeros; otherwise entries come from central
    /// differences of the metric.
    pub fn christoffel(&self, point: &[f64]) -> Result<Vec<f64>, EcodynError> {
        let d = self.dim;
        if let Kind::Constant(_) = self.kind {
            return Ok(vec![0.0; d * d * d]);
        }
        let g = self.eval(point);
        let ginv =
            linalg::invert_small(&g, SINGULAR_TOL).map_err(|_| EcodynError::SingularMetric {
                point: point.to_vec(),
            })?;

        // dg[l] = partial of the metric along coordinate l
        let mut dg = Vec::with_capacity(d);
        let mut shifted = point.to_vec();
        for l in 0..d {
            let original = shifted[l];
            shifted[l] = original + FD_STEP;
            let plus = self.eval(&shifted);
            shifted[l] = original - FD_STEP;
            let minus = self.eval(&shifted);
            shifted[l] = original;
            let mut grad = Mat::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    grad[(i, j)] = (plus[(i, j)] - minus[(i, j)]) / (2.0 * FD_STEP);
                }
            }
            if grad.data().iter().any(|v| !v.is_finite()) {
                return Err(EcodynError::SingularMetric {
                    point: point.to_vec(),
                });
            }
            dg.push(grad);
        }

        let mut gamma = vec![0.0; d * d * d];
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += ginv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                    }
                    gamma[k * d * d + i * d + j] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_signature_and_zero_symbols() {
        let m = MetricField::minkowski();
        let g = m.eval(&[0.4, -1.0, 2.0]);
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(2, 2)], -1.0);
        assert_eq!(g[(0, 1)], 0.0);
        let gamma = m.christoffel(&[0.4, -1.0, 2.0]).unwrap();
        assert!(gamma.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn half_plane_symbols_match_closed_form() {
        // nonzero symbols: G^x_xy = G^x_yx = -1/y, G^y_xx = 1/y, G^y_yy = -1/y
        let m = MetricField::poincare_half_plane();
        for &y in &[0.5, 1.0, 3.0] {
            let gamma = m.christoffel(&[0.7, y]).unwrap();
            let d = 2;
            let at = |k: usize, i: usize, j: usize| gamma[k * d * d + i * d + j];
            let tol = 1e-6;
            assert!((at(0, 0, 1) + 1.0 / y).abs() < tol, "y={y}");
            assert!((at(0, 1, 0) + 1.0 / y).abs() < tol);
            assert!((at(1, 0, 0) - 1.0 / y).abs() < tol);
            assert!((at(1, 1, 1) + 1.0 / y).abs() < tol);
            assert!(at(0, 0, 0).abs() < tol);
            assert!(at(1, 0, 1).abs() < tol);
        }
    }

    #[test]
    fn singular_metric_detected() {
        let m = MetricField::from_expressions(2, &["x", "0", "0", "x"]).unwrap();
        assert!(matches!(
            m.christoffel(&[0.0, 1.0]),
            Err(EcodynError::SingularMetric { .. })
        ));
    }

    #[test]
    fn expression_entry_validation() {
        assert!(matches!(
            MetricField::from_expressions(2, &["1", "0", "0"]),
            Err(EcodynError::BadMetricEntries { .. })
        ));
        assert!(matches!(
            MetricField::from_expressions(2, &["q", "0", "0", "1"]),
            Err(EcodynError::UnknownVariable { .. })
        ));
        assert!(matches!(
            MetricField::from_expressions(2, &["1", "x", "y", "1"]),
            Err(EcodynError::NotSymmetric)
        ));
    }

    #[test]
    fn constant_metric_requires_symmetry() {
        let g = Mat::from_rows(vec![vec![1.0, 0.5], vec![0.4, 1.0]]);
        assert!(matches!(
            MetricField::constant(g),
            Err(EcodynError::NotSymmetric)
        ));
    }
}
