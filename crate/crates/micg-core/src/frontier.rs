//! Bayesian stochastic frontier estimation of opportunity.
//!
//! Achievements are mapped to the real line by a clamped logit and modeled
//! as y_i = x_i'beta + v_i - u_i with symmetric noise v_i ~ N(0, sigma_v^2)
//! and one-sided inefficiency u_i ~ Exp(lambda). A Gibbs sampler draws from
//! the posterior under conjugate-style priors:
//!
//! * u_i | rest is normal truncated to [0, inf) with location
//!   x_i'beta - y_i - lambda sigma_v^2 and scale sigma_v;
//! * beta | rest is multivariate normal with precision
//!   X'X / sigma_v^2 + I / prior_sd^2;
//! * sigma_v^2 | rest is inverse gamma;
//! * lambda | rest is gamma.
//!
//! Each chain runs on its own counter-based stream of one seeded ChaCha
//! generator, so results are reproducible bit for bit. Convergence is
//! summarized by split-chain R-hat; crossing the threshold flags the fit
//! as divergent but never fails it.
//!
//! Opportunity curves reuse one shared frontier-noise draw per retained
//! posterior draw across children. Children with identical covariate rows
//! therefore receive exactly identical curves, which keeps group contrasts
//! free of sampling artifacts.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Area, ChildDataset, Sex};
use crate::linalg::{self, Mat};
use crate::math;
use crate::stats::{self, DensityCurve, StatsError};

#[derive(Debug, Error)]
pub enum FrontierError {
    #[error("frontier estimation needs at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("achievements length {a} does not match design rows {rows}")]
    LengthMismatch { a: usize, rows: usize },
    #[error("achievement values must be finite")]
    NonFinite,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("invalid sampler configuration: {0}")]
    BadConfig(String),
    #[error("child index {index} is out of range for a fit on {n} children")]
    UnknownChild { index: usize, n: usize },
    #[error("child `{child}` is missing {what}; cannot build the design matrix")]
    MissingCovariate { child: String, what: &'static str },
    #[error("density of opportunity draws failed: {0}")]
    Density(#[from] StatsError),
    #[error("failed to write draws: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct Priors {
    /// Prior sd of each coefficient (mean zero normal).
    pub beta_sd: f64,
    /// Inverse-gamma shape for sigma_v^2.
    pub sigma_shape: f64,
    /// Inverse-gamma rate for sigma_v^2.
    pub sigma_rate: f64,
    /// Gamma shape for lambda.
    pub lambda_shape: f64,
    /// Gamma rate for lambda.
    pub lambda_rate: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors {
            beta_sd: 10.0,
            sigma_shape: 2.0,
            sigma_rate: 0.1,
            lambda_shape: 2.0,
            lambda_rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McmcConfig {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub priors: Priors,
    /// Achievements are clamped into [eps, 1 - eps] before the logit.
    pub clamp_eps: f64,
    /// Split-chain R-hat above this flags the fit as divergent.
    pub rhat_threshold: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            chains: 4,
            iterations: 5_000,
            burn_in: 2_000,
            thinning: 1,
            seed: 0,
            priors: Priors::default(),
            clamp_eps: 1e-3,
            rhat_threshold: 1.05,
        }
    }
}

impl McmcConfig {
    fn validate(&self) -> Result<(), FrontierError> {
        if self.chains == 0 {
            return Err(FrontierError::BadConfig("chains must be at least 1".into()));
        }
        if self.thinning == 0 {
            return Err(FrontierError::BadConfig(
                "thinning must be at least 1".into(),
            ));
        }
        if self.iterations <= self.burn_in {
            return Err(FrontierError::BadConfig(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        let retained = (self.iterations - self.burn_in).div_ceil(self.thinning);
        if retained < 4 {
            return Err(FrontierError::BadConfig(
                "fewer than 4 retained draws per chain; extend the run".into(),
            ));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(FrontierError::BadConfig(
                "clamp epsilon must lie in (0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Split-chain R-hat per parameter: beta_0.., sigma_v2, lambda.
    pub rhat: Vec<(String, f64)>,
    pub threshold: f64,
    /// True when every R-hat is at or below the threshold.
    pub converged: bool,
}

/// Posterior draws pooled across chains, with per-draw provenance.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub n_obs: usize,
    pub n_coef: usize,
    /// Retained draws in chain-major order: draws x coefficients.
    pub beta: Vec<f64>,
    pub sigma_v2: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Inefficiency draws: draws x observations.
    pub u: Vec<f64>,
    /// One shared frontier noise draw per retained draw.
    pub frontier_noise: Vec<f64>,
    /// One shared inefficiency draw per retained draw (predictive mode).
    pub shared_u: Vec<f64>,
    pub chain: Vec<u32>,
    pub iteration: Vec<u32>,
    pub design: Mat,
    pub diagnostics: Diagnostics,
}

/// Which frontier quantity an opportunity curve describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpportunityMode {
    /// Attainable outcome at the frontier: sigmoid(x'beta + v).
    Frontier,
    /// Predictive outcome including inefficiency: sigmoid(x'beta + v - u).
    Predictive,
}

impl PosteriorDraws {
    pub fn n_draws(&self) -> usize {
        self.sigma_v2.len()
    }

    pub fn beta_draw(&self, j: usize) -> &[f64] {
        &self.beta[j * self.n_coef..(j + 1) * self.n_coef]
    }

    /// Posterior mean of each coefficient.
    pub fn beta_mean(&self) -> Vec<f64> {
        let k = self.n_draws();
        let mut out = vec![0.0; self.n_coef];
        for j in 0..k {
            for (o, &b) in out.iter_mut().zip(self.beta_draw(j)) {
                *o += b;
            }
        }
        for o in &mut out {
            *o /= k as f64;
        }
        out
    }

    /// Equal-tailed posterior interval for a scalar parameter series.
    pub fn credible_interval(series: &[f64], level: f64) -> (f64, f64) {
        let alpha = (1.0 - level) / 2.0;
        (
            math::quantile(series, alpha),
            math::quantile(series, 1.0 - alpha),
        )
    }

    /// Opportunity draws for one child, using the shared noise sequence.
    pub fn opportunity_draws(
        &self,
        child: usize,
        mode: OpportunityMode,
    ) -> Result<Vec<f64>, FrontierError> {
        if child >= self.n_obs {
            return Err(FrontierError::UnknownChild {
                index: child,
                n: self.n_obs,
            });
        }
        let row = self.design.row(child).to_vec();
        let k = self.n_draws();
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let mut eta = linalg::dot(&row, self.beta_draw(j)) + self.frontier_noise[j];
            if mode == OpportunityMode::Predictive {
                eta -= self.shared_u[j];
            }
            out.push(math::inv_logit(eta));
        }
        Ok(out)
    }

    /// Kernel density of a child's opportunity draws.
    pub fn opportunity_distribution(
        &self,
        child: usize,
        mode: OpportunityMode,
        bandwidth: Option<f64>,
    ) -> Result<DensityCurve, FrontierError> {
        let draws = self.opportunity_draws(child, mode)?;
        Ok(stats::kde_unit_interval(&draws, bandwidth)?)
    }

    /// Posterior mean inefficiency per child.
    pub fn expected_inefficiency(&self) -> Vec<f64> {
        let k = self.n_draws();
        let mut out = vec![0.0; self.n_obs];
        for j in 0..k {
            let row = &self.u[j * self.n_obs..(j + 1) * self.n_obs];
            for (o, &u) in out.iter_mut().zip(row) {
                *o += u;
            }
        }
        for o in &mut out {
            *o /= k as f64;
        }
        out
    }

    /// CSV export of the sampled parameters, one row per draw and
    /// parameter: chain, iteration, parameter, value.
    pub fn write_draws_csv<W: Write>(&self, mut out: W) -> Result<(), FrontierError> {
        writeln!(out, "chain,iteration,parameter,value")?;
        for j in 0..self.n_draws() {
            let chain = self.chain[j];
            let iter = self.iteration[j];
            for (c, b) in self.beta_draw(j).iter().enumerate() {
                writeln!(out, "{chain},{iter},beta_{c},{b}")?;
            }
            writeln!(out, "{chain},{iter},sigma_v2,{}", self.sigma_v2[j])?;
            writeln!(out, "{chain},{iter},lambda,{}", self.lambda[j])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OpportunityProfile {
    pub child: usize,
    pub achievement: f64,
    pub opportunity_mean: f64,
    pub opportunity_q05: f64,
    pub opportunity_q95: f64,
    pub expected_inefficiency: f64,
    /// 1-based position in ascending opportunity order.
    pub rank: usize,
}

/// Rank children by posterior mean opportunity, lowest first. Ties break
/// toward the child with higher expected inefficiency, then lower index.
pub fn left_behind(
    draws: &PosteriorDraws,
    achievements: &[f64],
    mode: OpportunityMode,
) -> Result<Vec<OpportunityProfile>, FrontierError> {
    if achievements.len() != draws.n_obs {
        return Err(FrontierError::LengthMismatch {
            a: achievements.len(),
            rows: draws.n_obs,
        });
    }
    let e_u = draws.expected_inefficiency();
    let mut profiles = Vec::with_capacity(draws.n_obs);
    for i in 0..draws.n_obs {
        let d = draws.opportunity_draws(i, mode)?;
        profiles.push(OpportunityProfile {
            child: i,
            achievement: achievements[i],
            opportunity_mean: math::mean(&d),
            opportunity_q05: math::quantile(&d, 0.05),
            opportunity_q95: math::quantile(&d, 0.95),
            expected_inefficiency: e_u[i],
            rank: 0,
        });
    }
    profiles.sort_by(|a, b| {
        a.opportunity_mean
            .partial_cmp(&b.opportunity_mean)
            .unwrap()
            .then(
                b.expected_inefficiency
                    .partial_cmp(&a.expected_inefficiency)
                    .unwrap(),
            )
            .then(a.child.cmp(&b.child))
    });
    for (pos, p) in profiles.iter_mut().enumerate() {
        p.rank = pos + 1;
    }
    Ok(profiles)
}

/// Covariates available when building a design matrix from a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Covariate {
    Rural,
    Female,
}

/// Intercept-plus-indicators design from child records. Column names are
/// returned alongside the matrix.
pub fn design_from_dataset(
    dataset: &ChildDataset,
    covariates: &[Covariate],
) -> Result<(Mat, Vec<String>), FrontierError> {
    let mut names = vec!["intercept".to_string()];
    for c in covariates {
        names.push(match c {
            Covariate::Rural => "rural".to_string(),
            Covariate::Female => "female".to_string(),
        });
    }
    let mut rows = Vec::with_capacity(dataset.len());
    for rec in &dataset.records {
        let mut row = vec![1.0];
        for c in covariates {
            let v = match c {
                Covariate::Rural => match rec.area {
                    Some(Area::Rural) => 1.0,
                    Some(Area::Urban) => 0.0,
                    None => {
                        return Err(FrontierError::MissingCovariate {
                            child: rec.child_id.clone(),
                            what: "area",
                        })
                    }
                },
                Covariate::Female => match rec.sex {
                    Some(Sex::Female) => 1.0,
                    Some(Sex::Male) => 0.0,
                    None => {
                        return Err(FrontierError::MissingCovariate {
                            child: rec.child_id.clone(),
                            what: "sex",
                        })
                    }
                },
            };
            row.push(v);
        }
        rows.push(row);
    }
    Ok((Mat::from_rows(rows), names))
}

/// Standard normal truncated to [0, inf) shifted to `mean` and `sd`.
/// Plain rejection serves when the truncation point sits left of the
/// mode; Robert's translated-exponential proposal covers the deep tail.
pub fn sample_truncnorm_pos<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let alpha = -mean / sd;
    let z = if alpha <= 0.3 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= alpha {
                break z;
            }
        }
    } else {
        let a_star = (alpha + (alpha * alpha + 4.0).sqrt()) / 2.0;
        loop {
            let e: f64 = rng.sample(Exp::new(a_star).expect("positive rate"));
            let z = alpha + e;
            let rho = (-(z - a_star) * (z - a_star) / 2.0).exp();
            if rng.random::<f64>() < rho {
                break z;
            }
        }
    };
    mean + sd * z
}

fn inv_gamma<R: Rng>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("valid gamma");
    1.0 / g.sample(rng)
}

/// Fit the frontier model to achievements `a` with design `x`.
pub fn fit_frontier(
    a: &[f64],
    x: &Mat,
    config: &McmcConfig,
) -> Result<PosteriorDraws, FrontierError> {
    config.validate()?;
    let n = x.rows;
    let p = x.cols;
    if a.len() != n {
        return Err(FrontierError::LengthMismatch {
            a: a.len(),
            rows: n,
        });
    }
    if n < 10 {
        return Err(FrontierError::TooFewObservations { need: 10, got: n });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(FrontierError::NonFinite);
    }
    let gram = x.gram();
    let gram_chol = linalg::cholesky(&gram).map_err(|_| FrontierError::RankDeficient)?;

    let eps = config.clamp_eps;
    let y: Vec<f64> = a
        .iter()
        .map(|&v| math::logit(v.clamp(eps, 1.0 - eps)))
        .collect();

    // deterministic start: least squares ignoring the one-sided term
    let beta_start = linalg::chol_solve(&gram_chol, &x.tr_mul_vec(&y));
    let fitted = x.mul_vec(&beta_start);
    let resid_var = {
        let rss: f64 = y
            .iter()
            .zip(&fitted)
            .map(|(yi, fi)| (yi - fi) * (yi - fi))
            .sum();
        (rss / n as f64).max(1e-4)
    };

    let retained_per_chain = (config.iterations - config.burn_in).div_ceil(config.thinning);
    let total = retained_per_chain * config.chains;
    let mut beta = Vec::with_capacity(total * p);
    let mut sigma_v2 = Vec::with_capacity(total);
    let mut lambda_out = Vec::with_capacity(total);
    let mut u_out = Vec::with_capacity(total * n);
    let mut chain_ix = Vec::with_capacity(total);
    let mut iter_ix = Vec::with_capacity(total);

    let prior = &config.priors;
    let prior_prec = 1.0 / (prior.beta_sd * prior.beta_sd);

    for chain in 0..config.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chain as u64);

        let mut b = beta_start.clone();
        let mut s2 = resid_var;
        let mut lam = 1.0;
        let mut u = vec![0.0; n];
        let mut xb = x.mul_vec(&b);

        for iter in 0..config.iterations {
            // u_i | rest: truncated normal
            let sd = s2.sqrt();
            for i in 0..n {
                let mu = xb[i] - y[i] - lam * s2;
                u[i] = sample_truncnorm_pos(&mut rng, mu, sd);
            }

            // beta | rest: normal with ridge-augmented precision
            let mut q = gram.clone();
            for r in 0..p {
                for c in 0..p {
                    q[(r, c)] /= s2;
                }
                q[(r, r)] += prior_prec;
            }
            let y_adj: Vec<f64> = y.iter().zip(&u).map(|(yi, ui)| yi + ui).collect();
            let mut rhs = x.tr_mul_vec(&y_adj);
            for v in &mut rhs {
                *v /= s2;
            }
            let l = linalg::cholesky(&q).expect("posterior precision is positive definite");
            let mean = linalg::chol_solve(&l, &rhs);
            // sample: mean + L^-T z
            let z: Vec<f64> = (0..p)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut draw = vec![0.0; p];
            for r in (0..p).rev() {
                let mut s = z[r];
                for k in (r + 1)..p {
                    s -= l[(k, r)] * draw[k];
                }
                draw[r] = s / l[(r, r)];
            }
            for (bi, (m, d)) in b.iter_mut().zip(mean.iter().zip(&draw)) {
                *bi = m + d;
            }
            xb = x.mul_vec(&b);

            // sigma_v^2 | rest: inverse gamma on the symmetric residuals
            let ss: f64 = (0..n)
                .map(|i| {
                    let r = y_adj[i] - xb[i];
                    r * r
                })
                .sum();
            s2 = inv_gamma(
                &mut rng,
                prior.sigma_shape + n as f64 / 2.0,
                prior.sigma_rate + 0.5 * ss,
            );

            // lambda | rest: gamma
            let u_sum: f64 = u.iter().sum();
            let lam_dist = Gamma::new(
                prior.lambda_shape + n as f64,
                1.0 / (prior.lambda_rate + u_sum),
            )
            .expect("valid gamma");
            lam = lam_dist.sample(&mut rng);

            if iter >= config.burn_in && (iter - config.burn_in) % config.thinning == 0 {
                beta.extend_from_slice(&b);
                sigma_v2.push(s2);
                lambda_out.push(lam);
                u_out.extend_from_slice(&u);
                chain_ix.push(chain as u32);
                iter_ix.push(iter as u32);
            }
        }
    }

    // shared noise sequence: one v and one u per retained draw, drawn on a
    // stream no chain uses, so opportunity curves are identical for
    // identical covariate rows
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(u64::MAX);
    let mut frontier_noise = Vec::with_capacity(total);
    let mut shared_u = Vec::with_capacity(total);
    for j in 0..total {
        let z: f64 = noise_rng.sample(StandardNormal);
        frontier_noise.push(z * sigma_v2[j].sqrt());
        let e: f64 = noise_rng.sample(Exp::new(lambda_out[j]).expect("positive rate"));
        shared_u.push(e);
    }

    let diagnostics = compute_diagnostics(
        &beta,
        &sigma_v2,
        &lambda_out,
        p,
        config.chains,
        retained_per_chain,
        config.rhat_threshold,
    );

    Ok(PosteriorDraws {
        n_obs: n,
        n_coef: p,
        beta,
        sigma_v2,
        lambda: lambda_out,
        u: u_out,
        frontier_noise,
        shared_u,
        chain: chain_ix,
        iteration: iter_ix,
        design: x.clone(),
        diagnostics,
    })
}

/// Split-chain R-hat: each chain is halved, then the usual
/// between/within variance ratio is taken over the half-chains.
pub fn split_rhat(series: &[f64], chains: usize, per_chain: usize) -> f64 {
    assert_eq!(series.len(), chains * per_chain);
    let half = per_chain / 2;
    if half < 2 {
        return f64::NAN;
    }
    let mut means = Vec::with_capacity(chains * 2);
    let mut vars = Vec::with_capacity(chains * 2);
    for c in 0..chains {
        let chunk = &series[c * per_chain..(c + 1) * per_chain];
        for half_chunk in [&chunk[..half], &chunk[per_chain - half..]] {
            means.push(math::mean(half_chunk));
            vars.push(math::sample_variance(half_chunk));
        }
    }
    let m = means.len() as f64;
    let nh = half as f64;
    let grand = math::mean(&means);
    let b = nh / (m - 1.0)
        * means
            .iter()
            .map(|mu| (mu - grand) * (mu - grand))
            .sum::<f64>();
    let w = math::mean(&vars);
    if w <= 0.0 {
        return if b <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (nh - 1.0) / nh * w + b / nh;
    (var_plus / w).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn compute_diagnostics(
    beta: &[f64],
    sigma_v2: &[f64],
    lambda: &[f64],
    p: usize,
    chains: usize,
    per_chain: usize,
    threshold: f64,
) -> Diagnostics {
    let mut rhat = Vec::with_capacity(p + 2);
    for c in 0..p {
        let series: Vec<f64> = (0..chains * per_chain).map(|j| beta[j * p + c]).collect();
        rhat.push((format!("beta_{c}"), split_rhat(&series, chains, per_chain)));
    }
    rhat.push((
        "sigma_v2".to_string(),
        split_rhat(sigma_v2, chains, per_chain),
    ));
    rhat.push(("lambda".to_string(), split_rhat(lambda, chains, per_chain)));
    let converged = rhat.iter().all(|(_, r)| r.is_finite() && *r <= threshold);
    Diagnostics {
        rhat,
        threshold,
        converged,
    }
}
