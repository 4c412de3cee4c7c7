//! Ecological dynamics toolkit: fixed-step integration of the coupled
//! micro/meso/exo system, chronosystem modulation, hyperbolic embeddings
//! with Lorentzian intervals, metric geodesics, and scalar potential
//! fields over the embedding space.

mod geodesic;
mod metric;

pub use geodesic::{geodesic, speed};
pub use metric::MetricField;

use thiserror::Error;

use crate::expr::{Arith, ExprError};

#[derive(Debug, Error)]
pub enum EcodynError {
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("integration horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("trajectory blew up at t = {t}")]
    Blowup { t: f64 },
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("metric needs {expected} entries ({dim} x {dim}), got {got}")]
    BadMetricEntries {
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("expression refers to `{name}`, which is not a coordinate of this space")]
    UnknownVariable { name: String },
    #[error("constant metric must be symmetric")]
    NotSymmetric,
    #[error("{couplings} couplings cannot scale {components} potential components")]
    CountMismatch { couplings: usize, components: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// States over uniform times `times[i] = i * h`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub step: f64,
    /// Leading coordinates of each state that are positions (a geodesic
    /// state carries velocities after them).
    pub position_dim: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.states[i][..self.position_dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has an initial state")
    }
}

/// Magnitude beyond which a trajectory counts as blown up.
const BLOWUP_LIMIT: f64 = 1e100;

fn steps_for(h: f64, horizon: f64) -> Result<usize, EcodynError> {
    if !h.is_finite() || h <= 0.0 {
        return Err(EcodynError::NonPositiveStep(h));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(EcodynError::NonPositiveHorizon(horizon));
    }
    Ok(((horizon / h).round() as usize).max(1))
}

/// Classical fixed-step fourth-order Runge-Kutta. Times are computed as
/// `i * h` rather than accumulated, so they carry no drift.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[f64],
    h: f64,
    horizon: f64,
    position_dim: usize,
) -> Result<Trajectory, EcodynError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), EcodynError>,
{
    let steps = steps_for(h, horizon)?;
    let d = y0.len();
    let mut states = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    states.push(y0.to_vec());
    times.push(0.0);

    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];

    let mut y = y0.to_vec();
    for step in 0..steps {
        let t = step as f64 * h;
        rhs(t, &y, &mut k1)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..d {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4)?;
        for i in 0..d {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = (step + 1) as f64 * h;
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_LIMIT) {
            return Err(EcodynError::Blowup { t: t_next });
        }
        states.push(y.clone());
        times.push(t_next);
    }

    Ok(Trajectory {
        times,
        states,
        step: h,
        position_dim,
    })
}

/// Coupling coefficients of the three-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureParams {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

/// Coefficients in the chaotic regime.
pub const CHAOTIC_PRESET: CurvatureParams = CurvatureParams {
    phi1: 10.0,
    phi2: 28.0,
    phi3: 8.0 / 3.0,
};

impl CurvatureParams {
    /// Nontrivial equilibrium with positive coordinates, when it exists.
    pub fn fixed_point(&self) -> Option<[f64; 3]> {
        let s = self.phi3 * (self.phi2 - 1.0);
        if s < 0.0 {
            return None;
        }
        let r = s.sqrt();
        Some([r, r, self.phi2 - 1.0])
    }
}

/// Right-hand side of the coupled system:
/// dfx = phi1 (fy - fx), dfy = fx (phi2 - fz) - fy, dfz = fx fy - phi3 fz.
pub fn coupled_rhs(params: CurvatureParams) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] {
    move |_t, f| {
        [
            params.phi1 * (f[1] - f[0]),
            f[0] * (params.phi2 - f[2]) - f[1],
            f[0] * f[1] - params.phi3 * f[2],
        ]
    }
}

fn integrate_3d<F>(rhs: F, y0: [f64; 3], h: f64, horizon: f64) -> Result<Trajectory, EcodynError>
where
    F: Fn(f64, &[f64; 3]) -> [f64; 3],
{
    integrate(
        move |t, y, dy| {
            let d = rhs(t, &[y[0], y[1], y[2]]);
            dy.copy_from_slice(&d);
            Ok(())
        },
        &y0,
        h,
        horizon,
        3,
    )
}

/// Integrate the coupled system from `f0` over `[0, horizon]`.
pub fn integrate_coupled(
    params: CurvatureParams,
    f0: [f64; 3],
    h: f64,
    horizon: f64,
) -> Result<Trajectory, EcodynError> {
    let rhs = coupled_rhs(params);
    integrate_3d(move |t, y| rhs(t, y), f0, h, horizon)
}

/// Integrate `dpsi/dt = base(t, psi) + kappa(t) psi`. A kappa that
/// returns exactly zero adds nothing, so the trajectory is bit-identical
/// to integrating `base` alone.
pub fn chronosystem_modulate<B, K>(
    base: B,
    kappa: K,
    psi0: [f64; 3],
    h: f64,
    horizon: f64,
) -> Result<Trajectory, EcodynError>
where
    B: Fn(f64, &[f64; 3]) -> [f64; 3],
    K: Fn(f64) -> f64,
{
    integrate_3d(
        move |t, y| {
            let d = base(t, y);
            let k = kappa(t);
            if k == 0.0 {
                d
            } else {
                [d[0] + k * y[0], d[1] + k * y[1], d[2] + k * y[2]]
            }
        },
        psi0,
        h,
        horizon,
    )
}

/// Embedding of polar hyperboloid coordinates (r, u, v) into flat
/// three-space carrying the signature (+, +, -).
pub fn hyperbolic_embed(r: f64, u: f64, v: f64) -> [f64; 3] {
    [
        r.sinh() * v.sin() * u.cos(),
        r.sinh() * v.sin() * u.sin(),
        r.cosh(),
    ]
}

/// Lorentzian interval ds^2 = dx^2 + dy^2 - dz^2 between consecutive
/// trajectory positions. The trajectory must live in three position
/// coordinates.
pub fn interval(traj: &Trajectory) -> Result<Vec<f64>, EcodynError> {
    if traj.position_dim != 3 {
        return Err(EcodynError::DimensionMismatch {
            expected: 3,
            got: traj.position_dim,
            context: "Lorentzian interval needs three position coordinates",
        });
    }
    let mut out = Vec::with_capacity(traj.len().saturating_sub(1));
    for w in traj.states.windows(2) {
        let dx = w[1][0] - w[0][0];
        let dy = w[1][1] - w[0][1];
        let dz = w[1][2] - w[0][2];
        out.push(dx * dx + dy * dy - dz * dz);
    }
    Ok(out)
}

/// Boxed spatial function over embedding coordinates.
pub type SpatialFn = Box<dyn Fn(&[f64; 3]) -> f64>;

/// Spatial component of a potential field.
pub enum ScalarField {
    /// Arithmetic expression over coordinates x, y, z.
    Expr(Arith),
    Func(SpatialFn),
}

/// Time-varying coupling strength.
pub enum TimeCoupling {
    Constant(f64),
    /// Arithmetic expression over t.
    Expr(Arith),
    Func(Box<dyn Fn(f64) -> f64>),
}

/// Potential over the embedding space: a sum of components, each scaled
/// by its own time coupling.
pub struct PotentialField {
    pairs: Vec<(TimeCoupling, ScalarField)>,
}

const COORD_NAMES: [&str; 3] = ["x", "y", "z"];

impl PotentialField {
    pub fn new(
        couplings: Vec<TimeCoupling>,
        components: Vec<ScalarField>,
    ) -> Result<Self, EcodynError> {
        if couplings.len() != components.len() {
            return Err(EcodynError::CountMismatch {
                couplings: couplings.len(),
                components: components.len(),
            });
        }
        for c in &components {
            if let ScalarField::Expr(e) = c {
                for name in e.vars() {
                    if !COORD_NAMES.contains(&name.as_str()) {
                        return Err(EcodynError::UnknownVariable { name });
                    }
                }
            }
        }
        for c in &couplings {
            if let TimeCoupling::Expr(e) = c {
                for name in e.vars() {
                    if name != "t" {
                        return Err(EcodynError::UnknownVariable { name });
                    }
                }
            }
        }
        Ok(PotentialField {
            pairs: couplings.into_iter().zip(components).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Total potential at a point and time.
    pub fn eval(&self, t: f64, point: &[f64; 3]) -> f64 {
        let mut total = 0.0;
        for (coupling, field) in &self.pairs {
            let lambda = match coupling {
                TimeCoupling::Constant(c) => *c,
                TimeCoupling::Expr(e) => e.eval(&|name| (name == "t").then_some(t)),
                TimeCoupling::Func(f) => f(t),
            };
            let psi = match field {
                ScalarField::Expr(e) => e.eval(&|name| {
                    COORD_NAMES
                        .iter()
                        .position(|c| *c == name)
                        .map(|i| point[i])
                }),
                ScalarField::Func(f) => f(point),
            };
            total += lambda * psi;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_arith;
    use std::collections::BTreeMap;

    #[test]
    fn fixed_point_of_chaotic_preset() {
        let fp = CHAOTIC_PRESET.fixed_point().unwrap();
        assert!((fp[0] - 72.0f64.sqrt()).abs() < 1e-12);
        assert!((fp[2] - 27.0).abs() < 1e-12);
        let rhs = coupled_rhs(CHAOTIC_PRESET);
        let d = rhs(0.0, &fp);
        for v in d {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_is_stationary_under_integration() {
        let fp = CHAOTIC_PRESET.fixed_point().unwrap();
        let traj = integrate_coupled(CHAOTIC_PRESET, fp, 1e-3, 1.0).unwrap();
        let last = traj.last_state();
        for (a, b) in last.iter().zip(&fp) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn times_are_exact_multiples() {
        let traj = integrate_coupled(CHAOTIC_PRESET, [1.0, 1.0, 1.0], 0.01, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.times[7], 7.0 * 0.01);
    }

    #[test]
    fn zero_kappa_reduces_to_plain_integration() {
        let f0 = [1.0, 2.0, 3.0];
        let base = coupled_rhs(CHAOTIC_PRESET);
        let plain = integrate_coupled(CHAOTIC_PRESET, f0, 1e-3, 0.5).unwrap();
        let modulated = chronosystem_modulate(base, |_| 0.0, f0, 1e-3, 0.5).unwrap();
        // bit-identical, not merely close
        assert_eq!(plain.states, modulated.states);
    }

    #[test]
    fn constant_kappa_on_zero_base_is_exponential() {
        let traj =
            chronosystem_modulate(|_, _| [0.0, 0.0, 0.0], |_| 0.7, [1.0, 2.0, -1.0], 1e-4, 1.0)
                .unwrap();
        let last = traj.last_state();
        let growth = 0.7f64.exp();
        assert!((last[0] - growth).abs() < 1e-10);
        assert!((last[1] - 2.0 * growth).abs() < 1e-10);
        assert!((last[2] + growth).abs() < 1e-10);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let f0 = [1.0, 1.0, 1.0];
        let run = |h: f64| {
            integrate_coupled(CHAOTIC_PRESET, f0, h, 1.0)
                .unwrap()
                .last_state()
                .to_vec()
        };
        let coarse = run(2e-3);
        let mid = run(1e-3);
        let fine = run(5e-4);
        let err = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let order = (err(&coarse, &mid) / err(&mid, &fine)).log2();
        assert!((3.5..=4.5).contains(&order), "order {order}");
    }

    #[test]
    fn blowup_detected() {
        let r = chronosystem_modulate(
            |_, y| [y[0] * y[0], 0.0, 0.0],
            |_| 0.0,
            [1.0, 0.0, 0.0],
            0.1,
            100.0,
        );
        assert!(matches!(r, Err(EcodynError::Blowup { .. })));
    }

    #[test]
    fn bad_step_and_horizon_rejected() {
        assert!(matches!(
            integrate_coupled(CHAOTIC_PRESET, [1.0; 3], 0.0, 1.0),
            Err(EcodynError::NonPositiveStep(_))
        ));
        assert!(matches!(
            integrate_coupled(CHAOTIC_PRESET, [1.0; 3], 0.1, -1.0),
            Err(EcodynError::NonPositiveHorizon(_))
        ));
    }

    #[test]
    fn embedding_lands_on_unit_hyperboloid_at_equator() {
        use std::f64::consts::FRAC_PI_2;
        for &(r, u) in &[(0.5, 0.3), (1.2, 2.0), (2.0, -1.0)] {
            let p = hyperbolic_embed(r, u, FRAC_PI_2);
            let q = p[0] * p[0] + p[1] * p[1] - p[2] * p[2];
            assert!((q + 1.0).abs() < 1e-12, "r={r} u={u}: {q}");
        }
    }

    #[test]
    fn interval_signs_distinguish_directions() {
        // straight lines in the embedding space: spacelike along x,
        // timelike along z
        let spacelike = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            step: 1.0,
            position_dim: 3,
        };
        assert_eq!(interval(&spacelike).unwrap(), vec![1.0]);
        let timelike = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 2.0]],
            step: 1.0,
            position_dim: 3,
        };
        assert_eq!(interval(&timelike).unwrap(), vec![-4.0]);
    }

    #[test]
    fn interval_needs_three_positions() {
        let two_d = Trajectory {
            times: vec![0.0],
            states: vec![vec![0.0, 0.0]],
            step: 1.0,
            position_dim: 2,
        };
        assert!(matches!(
            interval(&two_d),
            Err(EcodynError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn potential_field_sums_coupled_components() {
        let params = BTreeMap::new();
        let field = PotentialField::new(
            vec![
                TimeCoupling::Constant(2.0),
                TimeCoupling::Expr(parse_arith("t * t", &params).unwrap()),
            ],
            vec![
                ScalarField::Expr(parse_arith("x + y", &params).unwrap()),
                ScalarField::Func(Box::new(|p| p[2])),
            ],
        )
        .unwrap();
        // 2 (x + y) + t^2 z at t = 3, p = (1, 2, 4): 6 + 36 = 42
        let v = field.eval(3.0, &[1.0, 2.0, 4.0]);
        assert!((v - 42.0).abs() < 1e-12);
    }

    #[test]
    fn potential_field_validates_counts_and_vars() {
        let params = BTreeMap::new();
        assert!(matches!(
            PotentialField::new(vec![TimeCoupling::Constant(1.0)], vec![]),
            Err(EcodynError::CountMismatch { .. })
        ));
        assert!(matches!(
            PotentialField::new(
                vec![TimeCoupling::Constant(1.0)],
                vec![ScalarField::Expr(parse_arith("q + 1", &params).unwrap())],
            ),
            Err(EcodynError::UnknownVariable { .. })
        ));
    }
}
