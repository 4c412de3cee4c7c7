//! `micg chart`: publication-style SVG figures from pipeline outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use micg_core::charts::{
    density_svg, scatter_svg, spiderweb_svg, DensitySeries, ScatterPoint, ScatterSpec,
    SpiderSeries, SpiderwebSpec,
};
use micg_core::index::dimension_achievements;
use micg_core::{kde_unit_interval, Area, Sex};
use serde::Serialize;

use crate::commands::index::{parse_group_keys, ScoringArg};
use crate::pipeline::{score, ScoringArgs, ScoringConfig};
use crate::run::{self, invalid, RunError, RunResult};

#[derive(Debug, Subcommand)]
pub enum ChartCmd {
    /// Spiderweb of group dimension achievements.
    Spider(SpiderArgs),
    /// Overlaid kernel densities of score distributions.
    Density(DensityArgs),
    /// Achievement and opportunity panels per child.
    Scatter(ScatterArgs),
}

#[derive(Debug, Args)]
pub struct SpiderArgs {
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
    /// Group keys, comma separated from sex, area, country.
    #[arg(long, default_value = "sex,area")]
    group: String,
    /// Dimension achievement scoring.
    #[arg(long, value_enum, default_value_t = ScoringArg::Graded)]
    dimension_scoring: ScoringArg,
    /// Series color, in group order; repeatable. The built-in palette
    /// fills any remainder.
    #[arg(long = "color")]
    colors: Vec<String>,
}

#[derive(Serialize)]
struct SpiderConfig {
    command: &'static str,
    scoring: ScoringConfig,
    group: String,
    dimension_scoring: ScoringArg,
    colors: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Results CSV from `micg index`; repeatable for overlays.
    #[arg(long = "scores", required = true)]
    scores: Vec<PathBuf>,
    /// Legend label per scores file; file stem when absent.
    #[arg(long = "label")]
    labels: Vec<String>,
    /// Column to estimate the density of.
    #[arg(long, default_value = "achievement")]
    column: String,
    /// Kernel bandwidth; Silverman's rule when absent.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Draw a dotted marker at each median.
    #[arg(long)]
    medians: bool,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct DensityConfig {
    command: &'static str,
    scores: Vec<String>,
    labels: Vec<String>,
    column: String,
    bandwidth: Option<f64>,
    medians: bool,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    /// Opportunity CSV from `micg frontier`.
    #[arg(long)]
    opportunity: PathBuf,
    /// Highlight the lowest q percent of opportunity in panel b.
    #[arg(long)]
    highlight_pct: Option<f64>,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ScatterConfig {
    command: &'static str,
    opportunity: String,
    highlight_pct: Option<f64>,
}

pub fn run(cmd: &ChartCmd, seed: u64) -> RunResult {
    match cmd {
        ChartCmd::Spider(args) => spider(args, seed),
        ChartCmd::Density(args) => density(args, seed),
        ChartCmd::Scatter(args) => scatter(args, seed),
    }
}

fn write_svg(path: &Path, header: &str, svg: &str) -> RunResult {
    let mut out = header.as_bytes().to_vec();
    out.extend_from_slice(svg.as_bytes());
    run::write_file(path, &out)
}

fn spider(args: &SpiderArgs, seed: u64) -> RunResult {
    let config = SpiderConfig {
        command: "chart spider",
        scoring: args.scoring.config(),
        group: args.group.clone(),
        dimension_scoring: args.dimension_scoring,
        colors: args.colors.clone(),
    };
    let header = run::svg_header_line(&config, seed);

    let keys = parse_group_keys(&args.group)?;
    let scored = score(&args.scoring)?;
    let dims = dimension_achievements(
        &scored.matrix,
        &scored.catalog,
        &scored.weights,
        args.dimension_scoring.into(),
    )
    .map_err(invalid)?;
    let profile =
        micg_core::index::group_profile(&dims, &scored.dataset, &keys).map_err(invalid)?;

    let spec = SpiderwebSpec {
        axes: profile.dimension_names.clone(),
        series: profile
            .groups
            .iter()
            .map(|g| SpiderSeries {
                label: format!("{} (n={})", g.label, g.n_children),
                values: g.shares.clone(),
            })
            .collect(),
        colors: args.colors.clone(),
    };
    let svg = spiderweb_svg(&spec).map_err(invalid)?;
    write_svg(&args.out, &header, &svg)?;
    eprintln!(
        "spiderweb of {} groups -> {}",
        profile.groups.len(),
        args.out.display()
    );
    Ok(())
}

/// Pull one numeric column from a results CSV, skipping `#` comments.
fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, RunError> {
    let file =
        fs::File::open(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers().map_err(invalid)?.clone();
    let pos = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| RunError::Validation(format!("{}: no column `{column}`", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(invalid)?;
        let cell = rec.get(pos).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| {
            RunError::Validation(format!(
                "{}: `{cell}` in column `{column}` is not a number",
                path.display()
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

fn density(args: &DensityArgs, seed: u64) -> RunResult {
    let config = DensityConfig {
        command: "chart density",
        scores: args
            .scores
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        labels: args.labels.clone(),
        column: args.column.clone(),
        bandwidth: args.bandwidth,
        medians: args.medians,
    };
    let header = run::svg_header_line(&config, seed);
    if !args.labels.is_empty() && args.labels.len() != args.scores.len() {
        return Err(RunError::Validation(format!(
            "{} labels for {} scores files",
            args.labels.len(),
            args.scores.len()
        )));
    }

    let mut curves = Vec::new();
    for (i, path) in args.scores.iter().enumerate() {
        let values = read_column(path, &args.column)?;
        let curve = kde_unit_interval(&values, args.bandwidth).map_err(invalid)?;
        let label = args.labels.get(i).cloned().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("series {}", i + 1))
        });
        let median = if args.medians {
            Some(micg_core::math::quantile(&values, 0.5))
        } else {
            None
        };
        curves.push((label, curve, median));
    }
    let series: Vec<DensitySeries<'_>> = curves
        .iter()
        .map(|(label, curve, median)| DensitySeries {
            label: label.clone(),
            curve,
            median: *median,
        })
        .collect();
    let svg = density_svg(&series).map_err(invalid)?;
    write_svg(&args.out, &header, &svg)?;
    eprintln!("{} density curves -> {}", series.len(), args.out.display());
    Ok(())
}

fn scatter(args: &ScatterArgs, seed: u64) -> RunResult {
    let config = ScatterConfig {
        command: "chart scatter",
        opportunity: args.opportunity.display().to_string(),
        highlight_pct: args.highlight_pct,
    };
    let header = run::svg_header_line(&config, seed);

    let file = fs::File::open(&args.opportunity)
        .map_err(|e| RunError::Io(format!("{}: {e}", args.opportunity.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers().map_err(invalid)?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            RunError::Validation(format!(
                "{}: no column `{name}`",
                args.opportunity.display()
            ))
        })
    };
    let (c_sex, c_area) = (col("sex")?, col("area")?);
    let (c_ach, c_opp) = (col("achievement")?, col("opportunity_mean")?);

    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(invalid)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let sex = match field(c_sex) {
            "male" => Sex::Male,
            "female" => Sex::Female,
            other => {
                return Err(RunError::Validation(format!(
                    "unknown sex `{other}` in {}",
                    args.opportunity.display()
                )))
            }
        };
        let area = match field(c_area) {
            "urban" => Area::Urban,
            "rural" => Area::Rural,
            other => {
                return Err(RunError::Validation(format!(
                    "unknown area `{other}` in {}",
                    args.opportunity.display()
                )))
            }
        };
        let parse_num = |i: usize| -> Result<f64, RunError> {
            field(i).parse().map_err(|_| {
                RunError::Validation(format!(
                    "`{}` is not a number in {}",
                    field(i),
                    args.opportunity.display()
                ))
            })
        };
        points.push(ScatterPoint {
            achievement: parse_num(c_ach)?,
            opportunity: parse_num(c_opp)?,
            sex,
            area,
        });
    }

    let spec = ScatterSpec {
        points,
        highlight_pct: args.highlight_pct,
    };
    let svg = scatter_svg(&spec).map_err(invalid)?;
    write_svg(&args.out, &header, &svg)?;
    eprintln!(
        "scatter of {} children -> {}",
        spec.points.len(),
        args.out.display()
    );
    Ok(())
}
