//! Geodesic integration: the second-order geodesic equation reduced to
//! first order on (position, velocity) and integrated with the shared
//! fixed-step driver.

use super::metric::MetricField;
use super::{integrate, EcodynError, Trajectory};

/// Integrate the geodesic with initial position `x0` and velocity `v0`
/// in affine parameterization over `[0, horizon]`. States are
/// `[x_0..x_d, v_0..v_d]`.
pub fn geodesic(
    metric: &MetricField,
    x0: &[f64],
    v0: &[f64],
    h: f64,
    horizon: f64,
) -> Result<Trajectory, EcodynError> {
    let d = metric.dim();
    if x0.len() != d {
        return Err(EcodynError::DimensionMismatch {
            expected: d,
            got: x0.len(),
            context: "initial position",
        });
    }
    if v0.len() != d {
        return Err(EcodynError::DimensionMismatch {
            expected: d,
            got: v0.len(),
            context: "initial velocity",
        });
    }

    let mut y0 = Vec::with_capacity(2 * d);
    y0.extend_from_slice(x0);
    y0.extend_from_slice(v0);

    let constant = metric.is_constant();
    integrate(
        move |_t, y, dy| {
            let (pos, vel) = y.split_at(d);
            dy[..d].copy_from_slice(vel);
            if constant {
                // flat connection: straight lines
                for a in dy[d..].iter_mut() {
                    *a = 0.0;
                }
                return Ok(());
            }
            let gamma = metric.christoffel(pos)?;
            for k in 0..d {
                let mut acc = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        acc += gamma[k * d * d + i * d + j] * vel[i] * vel[j];
                    }
                }
                dy[d + k] = -acc;
            }
            Ok(())
        },
        &y0,
        h,
        horizon,
        d,
    )
}

/// Squared metric norm g(v, v) of the velocity part of a geodesic state.
pub fn speed(metric: &MetricField, state: &[f64]) -> f64 {
    let d = metric.dim();
    debug_assert_eq!(state.len(), 2 * d);
    let (pos, vel) = state.split_at(d);
    let g = metric.eval(pos);
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += g[(i, j)] * vel[i] * vel[j];
        }
    }
    s
}
