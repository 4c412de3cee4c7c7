//! `micg index`: score children and emit results, weights audit,
//! summary, frequency table, and optional group profiles.

use std::path::PathBuf;

use clap::Args;
use micg_core::index::{
    dimension_achievements, frequency_table, group_profile, DimensionScoring, GroupKey,
};
use micg_core::summarize;
use serde::Serialize;

use crate::pipeline::{opt_num, score, write_csv_with_header, ScoringArgs, ScoringConfig};
use crate::run::{self, invalid, RunError, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[clap(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum ScoringArg {
    Graded,
    Binary,
}

impl From<ScoringArg> for DimensionScoring {
    fn from(s: ScoringArg) -> Self {
        match s {
            ScoringArg::Graded => DimensionScoring::Graded,
            ScoringArg::Binary => DimensionScoring::Binary,
        }
    }
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Group profile keys, comma separated from sex, area, country.
    #[arg(long)]
    group: Option<String>,
    /// Dimension achievement scoring for profiles.
    #[arg(long, value_enum, default_value_t = ScoringArg::Graded)]
    dimension_scoring: ScoringArg,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    scoring: ScoringConfig,
    group: Option<String>,
    dimension_scoring: ScoringArg,
}

pub fn parse_group_keys(spec: &str) -> Result<Vec<GroupKey>, RunError> {
    spec.split(',')
        .map(|tok| match tok.trim() {
            "sex" => Ok(GroupKey::Sex),
            "area" => Ok(GroupKey::Area),
            "country" => Ok(GroupKey::Country),
            other => Err(RunError::Validation(format!(
                "unknown group key `{other}`; expected sex, area, or country"
            ))),
        })
        .collect()
}

pub fn run(args: &IndexArgs, seed: u64) -> RunResult {
    let config = Config {
        command: "index",
        scoring: args.scoring.config(),
        group: args.group.clone(),
        dimension_scoring: args.dimension_scoring,
    };
    let header = run::header_line(&config, seed);

    let scored = score(&args.scoring)?;
    if scored.ingest_warnings > 0 {
        eprintln!(
            "note: {} numeric cells failed to parse and were treated as missing",
            scored.ingest_warnings
        );
    }

    let results_path = args.out_dir.join("results.csv");
    write_csv_with_header(&results_path, &header, |w| {
        w.write_record([
            "child_id",
            "sex",
            "area",
            "country",
            "deprivation",
            "achievement",
            "deprived",
        ])?;
        for child in &scored.scores.children {
            let rec = scored.dataset.find(&child.child_id);
            let sex = rec.and_then(|r| r.sex).map(|s| s.label()).unwrap_or("");
            let area = rec.and_then(|r| r.area).map(|a| a.label()).unwrap_or("");
            let country = rec.map(|r| r.country.as_str()).unwrap_or("");
            w.write_record([
                child.child_id.as_str(),
                sex,
                area,
                country,
                &child.deprivation.to_string(),
                &child.achievement.to_string(),
                if child.deprived { "true" } else { "false" },
            ])?;
        }
        Ok(())
    })?;

    write_csv_with_header(&args.out_dir.join("weights.csv"), &header, |w| {
        w.write_record(["indicator", "weight", "dropped"])?;
        for (id, weight) in &scored.weights.entries {
            w.write_record([id.as_str(), &weight.to_string(), "false"])?;
        }
        for id in &scored.weights.dropped {
            w.write_record([id.as_str(), "", "true"])?;
        }
        Ok(())
    })?;

    let summary = summarize(&scored.scores).map_err(invalid)?;
    write_csv_with_header(&args.out_dir.join("summary.csv"), &header, |w| {
        w.write_record([
            "n_children",
            "headcount_ratio",
            "intensity",
            "mean_deprivation",
            "mean_achievement",
        ])?;
        w.write_record([
            summary.n_children.to_string(),
            summary.headcount_ratio.to_string(),
            opt_num(summary.intensity),
            summary.mean_deprivation.to_string(),
            summary.mean_achievement.to_string(),
        ])?;
        Ok(())
    })?;

    let freq = frequency_table(&scored.dataset).map_err(invalid)?;
    write_csv_with_header(&args.out_dir.join("frequency.csv"), &header, |w| {
        w.write_record([
            "country",
            "urban_male",
            "urban_female",
            "rural_male",
            "rural_female",
            "urban_pct",
            "rural_pct",
        ])?;
        for row in &freq.rows {
            w.write_record([
                row.country.as_str(),
                &row.urban_male.to_string(),
                &row.urban_female.to_string(),
                &row.rural_male.to_string(),
                &row.rural_female.to_string(),
                &row.urban_pct().to_string(),
                &row.rural_pct().to_string(),
            ])?;
        }
        Ok(())
    })?;

    if let Some(spec) = &args.group {
        let keys = parse_group_keys(spec)?;
        let dims = dimension_achievements(
            &scored.matrix,
            &scored.catalog,
            &scored.weights,
            args.dimension_scoring.into(),
        )
        .map_err(invalid)?;
        let profile = group_profile(&dims, &scored.dataset, &keys).map_err(invalid)?;
        write_csv_with_header(&args.out_dir.join("profile.csv"), &header, |w| {
            let mut head = vec!["group".to_string(), "n_children".to_string()];
            head.extend(profile.dimension_names.iter().cloned());
            w.write_record(&head)?;
            for g in &profile.groups {
                let mut rec = vec![g.label.clone(), g.n_children.to_string()];
                rec.extend(g.shares.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
    }

    eprintln!(
        "scored {} children -> {}",
        scored.scores.children.len(),
        results_path.display()
    );
    Ok(())
}
