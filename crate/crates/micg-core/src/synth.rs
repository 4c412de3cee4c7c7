//! Synthetic cohort generators. Deprivation statuses come from a
//! single-factor Gaussian copula, so cross-indicator dependence is
//! controlled by one parameter; raw field values are then constructed to
//! witness each status under the catalog rules, which makes the emitted
//! CSV round-trip through ingestion and coding back to the same matrix.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use thiserror::Error;

use crate::catalog::IndicatorCatalog;
use crate::coding::{DeprivationMatrix, MissingPolicy};
use crate::dataset::{Area, ChildDataset, ChildRecord, Sex};
use crate::expr::{CmpOp, Literal, Rule, Value};
use crate::linalg::Mat;
use crate::math::{inv_logit, norm_cdf, norm_ppf};
use crate::weighting::WeightVector;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    BadConfig(String),
    #[error("probability given for unknown indicator `{0}`")]
    UnknownIndicator(String),
    #[error("cannot construct witness values for indicator `{indicator}`: {reason}")]
    Unsatisfiable { indicator: String, reason: String },
}

/// Configuration for the copula cohort generator. Deprivation on
/// indicator j occurs when sqrt(rho) z + sqrt(1-rho) eps falls below the
/// normal quantile of its probability plus the group shifts, so
/// `sex_effect` and `area_effect` move deprivation odds for girls and
/// rural children on the probit scale.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub n: usize,
    /// Per-indicator marginal deprivation probabilities; indicators not
    /// listed use `default_prob`.
    pub probs: BTreeMap<String, f64>,
    pub default_prob: f64,
    /// Shared-factor loading, in [0, 1).
    pub rho: f64,
    pub sex_effect: f64,
    pub area_effect: f64,
    pub female_share: f64,
    pub rural_share: f64,
    pub country: String,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n: 500,
            probs: BTreeMap::new(),
            default_prob: 0.25,
            rho: 0.3,
            sex_effect: 0.0,
            area_effect: 0.0,
            female_share: 0.5,
            rural_share: 0.5,
            country: "synthland".to_string(),
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    fn validate(&self, catalog: &IndicatorCatalog) -> Result<(), SynthError> {
        if self.n == 0 {
            return Err(SynthError::BadConfig("n must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(SynthError::BadConfig(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        let ids = catalog.indicator_ids();
        for (id, &p) in &self.probs {
            if !ids.iter().any(|x| x == id) {
                return Err(SynthError::UnknownIndicator(id.clone()));
            }
            if !(p > 0.0 && p < 1.0) {
                return Err(SynthError::BadConfig(format!(
                    "probability for `{id}` must lie in (0, 1), got {p}"
                )));
            }
        }
        if !(self.default_prob > 0.0 && self.default_prob < 1.0) {
            return Err(SynthError::BadConfig(format!(
                "default probability must lie in (0, 1), got {}",
                self.default_prob
            )));
        }
        for (label, v) in [
            ("female_share", self.female_share),
            ("rural_share", self.rural_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::BadConfig(format!(
                    "{label} must lie in [0, 1], got {v}"
                )));
            }
        }
        if !self.sex_effect.is_finite() || !self.area_effect.is_finite() {
            return Err(SynthError::BadConfig("group effects must be finite".into()));
        }
        Ok(())
    }

    fn prob(&self, id: &str) -> f64 {
        self.probs.get(id).copied().unwrap_or(self.default_prob)
    }
}

/// Generated cohort: raw records plus the status matrix they encode.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: ChildDataset,
    pub truth: DeprivationMatrix,
}

fn numeric_witness<R: Rng>(op: CmpOp, t: f64, want: bool, rng: &mut R) -> f64 {
    // strict side keeps a gap away from the threshold; the lax side may
    // land exactly on it, which exercises boundary semantics
    let strict = 0.25 + 1.75 * rng.random::<f64>();
    let lax = 2.0 * rng.random::<f64>();
    let step = 1.0 + rng.random_range(0..3) as f64;
    match (op, want) {
        (CmpOp::Lt, true) | (CmpOp::Ge, false) => t - strict,
        (CmpOp::Lt, false) | (CmpOp::Ge, true) => t + lax,
        (CmpOp::Le, true) | (CmpOp::Gt, false) => t - lax,
        (CmpOp::Le, false) | (CmpOp::Gt, true) => t + strict,
        (CmpOp::Eq, true) | (CmpOp::Ne, false) => t,
        (CmpOp::Eq, false) | (CmpOp::Ne, true) => t + step,
    }
}

fn witness_into<R: Rng>(
    rule: &Rule,
    want: bool,
    rng: &mut R,
    out: &mut BTreeMap<String, Value>,
) -> Result<(), String> {
    match rule {
        Rule::Cmp { field, op, literal } => {
            let value = match literal {
                Literal::Num(t) => Value::Num(numeric_witness(*op, *t, want, rng)),
                Literal::Token(tok) => match (op, want) {
                    (CmpOp::Eq, true) | (CmpOp::Ne, false) => Value::Cat(tok.clone()),
                    (CmpOp::Eq, false) | (CmpOp::Ne, true) => Value::Cat(format!("not_{tok}")),
                    _ => {
                        return Err(format!(
                            "ordering comparison against text `{tok}` has no witness"
                        ))
                    }
                },
            };
            out.insert(field.clone(), value);
            Ok(())
        }
        Rule::And(a, b) => {
            if want {
                witness_into(a, true, rng, out)?;
                witness_into(b, true, rng, out)
            } else {
                witness_into(a, false, rng, out)?;
                witness_into(b, false, rng, out)
            }
        }
        Rule::Or(a, b) => {
            if want {
                // satisfy one random branch, falsify the rest
                if rng.random::<bool>() {
                    witness_into(a, true, rng, out)?;
                    witness_into(b, false, rng, out)
                } else {
                    witness_into(a, false, rng, out)?;
                    witness_into(b, true, rng, out)
                }
            } else {
                witness_into(a, false, rng, out)?;
                witness_into(b, false, rng, out)
            }
        }
        Rule::Not(inner) => witness_into(inner, !want, rng, out),
    }
}

const WITNESS_RETRIES: usize = 16;

fn witness_fields<R: Rng>(
    indicator: &str,
    rule: &Rule,
    want: bool,
    rng: &mut R,
) -> Result<BTreeMap<String, Value>, SynthError> {
    let mut last_reason = String::new();
    for _ in 0..WITNESS_RETRIES {
        let mut fields = BTreeMap::new();
        match witness_into(rule, want, rng, &mut fields) {
            Err(reason) => {
                return Err(SynthError::Unsatisfiable {
                    indicator: indicator.to_string(),
                    reason,
                })
            }
            Ok(()) => {
                // branches sharing a field can clobber each other, so
                // always confirm by evaluation
                if rule.eval(&|name: &str| fields.get(name)) == Some(want) {
                    return Ok(fields);
                }
                last_reason = format!("could not realise status {want}");
            }
        }
    }
    Err(SynthError::Unsatisfiable {
        indicator: indicator.to_string(),
        reason: last_reason,
    })
}

fn id_width(n: usize) -> usize {
    let mut width = 1;
    let mut rest = n;
    while rest >= 10 {
        width += 1;
        rest /= 10;
    }
    width
}

/// Generate a cohort whose coded statuses follow the copula model.
pub fn generate(catalog: &IndicatorCatalog, spec: &GeneratorSpec) -> Result<SynthData, SynthError> {
    spec.validate(catalog)?;
    let ids = catalog.indicator_ids();
    let m = ids.len();
    let thresholds: Vec<f64> = ids.iter().map(|id| norm_ppf(spec.prob(id))).collect();
    let rules: Vec<&Rule> = catalog.indicators().map(|ind| &ind.rule).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sqrt_rho = spec.rho.sqrt();
    let sqrt_comp = (1.0 - spec.rho).sqrt();
    let width = id_width(spec.n);

    let mut records = Vec::with_capacity(spec.n);
    let mut cells = vec![None; spec.n * m];
    for i in 0..spec.n {
        let female = rng.random::<f64>() < spec.female_share;
        let rural = rng.random::<f64>() < spec.rural_share;
        let z: f64 = rng.sample(StandardNormal);
        let shift =
            if female { spec.sex_effect } else { 0.0 } + if rural { spec.area_effect } else { 0.0 };

        let mut rec = ChildRecord::new(format!("c{:0width$}", i + 1));
        rec.sex = Some(if female { Sex::Female } else { Sex::Male });
        rec.area = Some(if rural { Area::Rural } else { Area::Urban });
        rec.country = spec.country.clone();

        for j in 0..m {
            let eps: f64 = rng.sample(StandardNormal);
            let latent = sqrt_rho * z + sqrt_comp * eps;
            let deprived = latent < thresholds[j] + shift;
            let fields = witness_fields(&ids[j], rules[j], deprived, &mut rng)?;
            for (name, value) in fields {
                rec.set_field(name, value);
            }
            cells[i * m + j] = Some(deprived);
        }
        records.push(rec);
    }

    let truth = DeprivationMatrix::new(
        ids,
        records.iter().map(|r| r.child_id.clone()).collect(),
        MissingPolicy::ExcludeChild,
        cells,
    );
    Ok(SynthData {
        dataset: ChildDataset { records },
        truth,
    })
}

/// Analytic mean weighted deprivation under the generator: indicator j
/// is deprived with probability Phi(ppf(p_j) + shift), mixed over the
/// four sex-by-area groups.
pub fn expected_mean_deprivation(
    catalog: &IndicatorCatalog,
    spec: &GeneratorSpec,
    weights: &WeightVector,
) -> f64 {
    let groups = [
        ((1.0 - spec.female_share) * (1.0 - spec.rural_share), 0.0),
        (
            spec.female_share * (1.0 - spec.rural_share),
            spec.sex_effect,
        ),
        (
            (1.0 - spec.female_share) * spec.rural_share,
            spec.area_effect,
        ),
        (
            spec.female_share * spec.rural_share,
            spec.sex_effect + spec.area_effect,
        ),
    ];
    catalog
        .indicator_ids()
        .iter()
        .map(|id| {
            let t = norm_ppf(spec.prob(id));
            let p: f64 = groups
                .iter()
                .map(|&(share, shift)| share * norm_cdf(t + shift))
                .sum();
            weights.get(id).unwrap_or(0.0) * p
        })
        .sum()
}

/// True parameters for the simulated production process.
#[derive(Debug, Clone)]
pub struct FrontierTruth {
    /// Intercept first, then one coefficient per binary covariate.
    pub beta: Vec<f64>,
    pub sigma_v: f64,
    pub lambda: f64,
}

/// Sample drawn from the production process, with the latent pieces kept
/// for checking estimators.
#[derive(Debug, Clone)]
pub struct FrontierSample {
    pub design: Mat,
    pub achievements: Vec<f64>,
    pub inefficiency: Vec<f64>,
}

/// Simulate achievements A = logistic(x'beta + v - u) with binary
/// covariates, Gaussian noise v, and exponential shortfall u.
pub fn frontier_sample(
    truth: &FrontierTruth,
    n: usize,
    seed: u64,
) -> Result<FrontierSample, SynthError> {
    if truth.beta.is_empty() {
        return Err(SynthError::BadConfig("beta must not be empty".into()));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(truth.sigma_v) || !positive(truth.lambda) {
        return Err(SynthError::BadConfig(
            "sigma_v and lambda must be positive".into(),
        ));
    }
    if n == 0 {
        return Err(SynthError::BadConfig("n must be positive".into()));
    }
    let p = truth.beta.len();
    let exp = Exp::new(truth.lambda).expect("positive rate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut design = Mat::zeros(n, p);
    let mut achievements = Vec::with_capacity(n);
    let mut inefficiency = Vec::with_capacity(n);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        let mut xb = truth.beta[0];
        for j in 1..p {
            let x = if rng.random::<bool>() { 1.0 } else { 0.0 };
            design[(i, j)] = x;
            xb += truth.beta[j] * x;
        }
        let v: f64 = truth.sigma_v * rng.sample::<f64, _>(StandardNormal);
        let u: f64 = exp.sample(&mut rng);
        achievements.push(inv_logit(xb + v - u));
        inefficiency.push(u);
    }
    Ok(FrontierSample {
        design,
        achievements,
        inefficiency,
    })
}
