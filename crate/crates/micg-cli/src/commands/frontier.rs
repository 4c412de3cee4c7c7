//! `micg frontier`: Bayesian stochastic-frontier fit of achievement on
//! covariates, with posterior draws, per-child opportunity profiles, and
//! convergence diagnostics.

use std::path::PathBuf;

use clap::Args;
use micg_core::frontier::{design_from_dataset, Covariate, Priors};
use micg_core::{fit_frontier, left_behind, McmcConfig, OpportunityMode};
use serde::Serialize;

use crate::pipeline::{score, write_csv_with_header, ScoringArgs, ScoringConfig};
use crate::run::{self, invalid, RunError, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[clap(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Frontier,
    Predictive,
}

impl From<ModeArg> for OpportunityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Frontier => OpportunityMode::Frontier,
            ModeArg::Predictive => OpportunityMode::Predictive,
        }
    }
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Design covariates, comma separated from rural, female.
    #[arg(long, default_value = "rural,female")]
    covariates: String,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 5000)]
    iterations: usize,
    #[arg(long, default_value_t = 2000)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thinning: usize,
    /// Opportunity distributions: attainable frontier or posterior
    /// predictive including the shortfall term.
    #[arg(long, value_enum, default_value_t = ModeArg::Frontier)]
    mode: ModeArg,
    /// Flag the lowest q percent of children by mean opportunity.
    #[arg(long, default_value_t = 10.0)]
    left_behind_pct: f64,
    /// Prior standard deviation of each coefficient.
    #[arg(long, default_value_t = 10.0)]
    beta_sd: f64,
    /// Inverse-gamma shape for the noise variance.
    #[arg(long, default_value_t = 2.0)]
    sigma_shape: f64,
    /// Inverse-gamma rate for the noise variance.
    #[arg(long, default_value_t = 0.1)]
    sigma_rate: f64,
    /// Gamma shape for the shortfall rate.
    #[arg(long, default_value_t = 2.0)]
    lambda_shape: f64,
    /// Gamma rate for the shortfall rate.
    #[arg(long, default_value_t = 2.0)]
    lambda_rate: f64,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    scoring: ScoringConfig,
    covariates: String,
    chains: usize,
    iterations: usize,
    burn_in: usize,
    thinning: usize,
    mode: ModeArg,
    left_behind_pct: f64,
    beta_sd: f64,
    sigma_shape: f64,
    sigma_rate: f64,
    lambda_shape: f64,
    lambda_rate: f64,
}

pub fn parse_covariates(spec: &str) -> Result<Vec<Covariate>, RunError> {
    spec.split(',')
        .map(|tok| match tok.trim() {
            "rural" => Ok(Covariate::Rural),
            "female" => Ok(Covariate::Female),
            other => Err(RunError::Validation(format!(
                "unknown covariate `{other}`; expected rural or female"
            ))),
        })
        .collect()
}

pub fn run(args: &FrontierArgs, seed: u64) -> RunResult {
    let config = Config {
        command: "frontier",
        scoring: args.scoring.config(),
        covariates: args.covariates.clone(),
        chains: args.chains,
        iterations: args.iterations,
        burn_in: args.burn_in,
        thinning: args.thinning,
        mode: args.mode,
        left_behind_pct: args.left_behind_pct,
        beta_sd: args.beta_sd,
        sigma_shape: args.sigma_shape,
        sigma_rate: args.sigma_rate,
        lambda_shape: args.lambda_shape,
        lambda_rate: args.lambda_rate,
    };
    let header = run::header_line(&config, seed);
    if !(0.0..=100.0).contains(&args.left_behind_pct) {
        return Err(RunError::Validation(
            "--left-behind-pct must lie in [0, 100]".into(),
        ));
    }

    let covariates = parse_covariates(&args.covariates)?;
    let scored = score(&args.scoring)?;
    let (design, names) = design_from_dataset(&scored.dataset, &covariates).map_err(invalid)?;
    let achievements = scored.scores.achievements();

    let mcmc = McmcConfig {
        chains: args.chains,
        iterations: args.iterations,
        burn_in: args.burn_in,
        thinning: args.thinning,
        seed,
        priors: Priors {
            beta_sd: args.beta_sd,
            sigma_shape: args.sigma_shape,
            sigma_rate: args.sigma_rate,
            lambda_shape: args.lambda_shape,
            lambda_rate: args.lambda_rate,
        },
        ..McmcConfig::default()
    };
    let draws = fit_frontier(&achievements, &design, &mcmc).map_err(invalid)?;

    let draws_path = args.out_dir.join("draws.csv");
    let mut body = Vec::new();
    draws.write_draws_csv(&mut body).map_err(invalid)?;
    let mut out = header.as_bytes().to_vec();
    out.extend_from_slice(&body);
    run::write_file(&draws_path, &out)?;

    let profiles = left_behind(&draws, &achievements, args.mode.into()).map_err(invalid)?;
    let n = profiles.len();
    let flagged = ((args.left_behind_pct / 100.0 * n as f64).round() as usize).min(n);
    write_csv_with_header(&args.out_dir.join("opportunity.csv"), &header, |w| {
        w.write_record([
            "rank",
            "child_id",
            "sex",
            "area",
            "achievement",
            "opportunity_mean",
            "opportunity_q05",
            "opportunity_q95",
            "expected_inefficiency",
            "left_behind",
        ])?;
        for p in &profiles {
            let rec = &scored.dataset.records[p.child];
            w.write_record([
                p.rank.to_string().as_str(),
                rec.child_id.as_str(),
                rec.sex.map(|s| s.label()).unwrap_or(""),
                rec.area.map(|a| a.label()).unwrap_or(""),
                &p.achievement.to_string(),
                &p.opportunity_mean.to_string(),
                &p.opportunity_q05.to_string(),
                &p.opportunity_q95.to_string(),
                &p.expected_inefficiency.to_string(),
                if p.rank <= flagged { "true" } else { "false" },
            ])?;
        }
        Ok(())
    })?;

    write_csv_with_header(&args.out_dir.join("diagnostics.csv"), &header, |w| {
        w.write_record(["quantity", "value"])?;
        for (name, rhat) in &draws.diagnostics.rhat {
            w.write_record([format!("rhat_{name}").as_str(), &rhat.to_string()])?;
        }
        w.write_record([
            "converged",
            if draws.diagnostics.converged {
                "true"
            } else {
                "false"
            },
        ])?;
        Ok(())
    })?;

    if !draws.diagnostics.converged {
        eprintln!(
            "warning: split-chain diagnostic above {}; treat the draws with suspicion",
            draws.diagnostics.threshold
        );
    }
    eprintln!(
        "fitted {} children on [{}] -> {}",
        achievements.len(),
        names.join(", "),
        args.out_dir.display()
    );
    Ok(())
}
