//! `micg simulate`: synthetic datasets and dynamical trajectories.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use micg_core::ecodyn::{
    chronosystem_modulate, coupled_rhs, geodesic, integrate_coupled, CurvatureParams, MetricField,
    Trajectory, CHAOTIC_PRESET,
};
use micg_core::synth::{generate, GeneratorSpec};
use serde::Serialize;

use crate::pipeline::write_csv_with_header;
use crate::run::{self, invalid, RunError, RunResult};

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// Synthetic child records for the given catalog.
    Data(DataArgs),
    /// Trajectory of the rotationally coupled system.
    Coupled(CoupledArgs),
    /// Geodesic under a chosen metric.
    Geodesic(GeodesicArgs),
    /// Coupled system with time-dependent modulation.
    Chrono(ChronoArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Indicator catalog JSON.
    #[arg(long)]
    catalog: PathBuf,
    /// Output records CSV.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth deprivation matrix CSV.
    #[arg(long)]
    truth_out: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Shared-factor loading in [0, 1).
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    /// Deprivation probability for indicators without an explicit one.
    #[arg(long, default_value_t = 0.25)]
    default_prob: f64,
    /// Per-indicator probability, id=p; repeatable.
    #[arg(long = "prob", value_parser = run::parse_kv)]
    probs: Vec<(String, f64)>,
    /// Latent shift added for girls.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sex_effect: f64,
    /// Latent shift added for rural children.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    area_effect: f64,
    #[arg(long, default_value_t = 0.5)]
    female_share: f64,
    #[arg(long, default_value_t = 0.5)]
    rural_share: f64,
    #[arg(long, default_value = "synthland")]
    country: String,
}

#[derive(Serialize)]
struct DataConfig {
    command: &'static str,
    catalog: String,
    n: usize,
    rho: f64,
    default_prob: f64,
    probs: BTreeMap<String, f64>,
    sex_effect: f64,
    area_effect: f64,
    female_share: f64,
    rural_share: f64,
    country: String,
}

#[derive(Debug, Args)]
pub struct CoupledArgs {
    /// Output trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Use the named chaotic coefficients instead of --phi values.
    #[arg(long, conflicts_with_all = ["phi1", "phi2", "phi3"])]
    preset_chaotic: bool,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi2: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi3: f64,
    /// Initial state, three comma-separated numbers.
    #[arg(
        long,
        default_value = "1,1,1",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    x0: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
}

#[derive(Serialize)]
struct CoupledConfig {
    command: &'static str,
    phi1: f64,
    phi2: f64,
    phi3: f64,
    x0: Vec<f64>,
    h: f64,
    horizon: f64,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    /// Output trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Metric preset: minkowski, euclidean, poincare-half-plane, custom.
    #[arg(long, default_value = "minkowski")]
    metric: String,
    /// Dimension for euclidean and custom metrics.
    #[arg(long)]
    dim: Option<usize>,
    /// Metric entry expression, row-major; repeat dim*dim times for
    /// custom metrics. Coordinates are named x, y, z, w.
    #[arg(long = "entry")]
    entries: Vec<String>,
    /// Initial position, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Initial velocity, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
}

#[derive(Serialize)]
struct GeodesicConfig {
    command: &'static str,
    metric: String,
    dim: Option<usize>,
    entries: Vec<String>,
    x0: Vec<f64>,
    v0: Vec<f64>,
    h: f64,
    horizon: f64,
}

#[derive(Debug, Args)]
pub struct ChronoArgs {
    /// Output trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, conflicts_with_all = ["phi1", "phi2", "phi3"])]
    preset_chaotic: bool,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi2: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi3: f64,
    /// Constant modulation rate applied to the state.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    kappa: f64,
    /// Initial state, three comma-separated numbers.
    #[arg(
        long,
        default_value = "1,1,1",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    psi0: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
}

#[derive(Serialize)]
struct ChronoConfig {
    command: &'static str,
    phi1: f64,
    phi2: f64,
    phi3: f64,
    kappa: f64,
    psi0: Vec<f64>,
    h: f64,
    horizon: f64,
}

pub fn run(cmd: &SimulateCmd, seed: u64) -> RunResult {
    match cmd {
        SimulateCmd::Data(args) => data(args, seed),
        SimulateCmd::Coupled(args) => coupled(args, seed),
        SimulateCmd::Geodesic(args) => run_geodesic(args, seed),
        SimulateCmd::Chrono(args) => chrono(args, seed),
    }
}

fn data(args: &DataArgs, seed: u64) -> RunResult {
    let config = DataConfig {
        command: "simulate data",
        catalog: args.catalog.display().to_string(),
        n: args.n,
        rho: args.rho,
        default_prob: args.default_prob,
        probs: args.probs.iter().cloned().collect(),
        sex_effect: args.sex_effect,
        area_effect: args.area_effect,
        female_share: args.female_share,
        rural_share: args.rural_share,
        country: args.country.clone(),
    };
    let header = run::header_line(&config, seed);

    let catalog = run::load_catalog(&args.catalog, &BTreeMap::new())?;
    let spec = GeneratorSpec {
        n: args.n,
        probs: args.probs.iter().cloned().collect(),
        default_prob: args.default_prob,
        rho: args.rho,
        sex_effect: args.sex_effect,
        area_effect: args.area_effect,
        female_share: args.female_share,
        rural_share: args.rural_share,
        country: args.country.clone(),
        seed,
    };
    let synth = generate(&catalog, &spec).map_err(invalid)?;

    let columns = catalog.source_columns();
    let mut body = Vec::new();
    synth
        .dataset
        .write_csv(&columns, &mut body)
        .map_err(invalid)?;
    let mut out = header.as_bytes().to_vec();
    out.extend_from_slice(&body);
    run::write_file(&args.out, &out)?;

    if let Some(truth_path) = &args.truth_out {
        let truth = &synth.truth;
        write_csv_with_header(truth_path, &header, |w| {
            let mut head = vec!["child_id".to_string()];
            head.extend(truth.indicator_ids.iter().cloned());
            w.write_record(&head)?;
            for i in 0..truth.n_children() {
                let mut rec = vec![truth.child_ids[i].clone()];
                for cell in truth.row(i) {
                    rec.push(match cell {
                        Some(true) => "1".to_string(),
                        Some(false) => "0".to_string(),
                        None => String::new(),
                    });
                }
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
    }
    eprintln!("generated {} children -> {}", args.n, args.out.display());
    Ok(())
}

fn params_of(preset: bool, phi1: f64, phi2: f64, phi3: f64) -> CurvatureParams {
    if preset {
        CHAOTIC_PRESET
    } else {
        CurvatureParams { phi1, phi2, phi3 }
    }
}

fn write_trajectory(
    path: &Path,
    header: &str,
    traj: &Trajectory,
    state_names: &[String],
) -> RunResult {
    write_csv_with_header(path, header, |w| {
        let mut head = vec!["t".to_string()];
        head.extend(state_names.iter().cloned());
        w.write_record(&head)?;
        for (t, state) in traj.times.iter().zip(&traj.states) {
            let mut rec = vec![t.to_string()];
            rec.extend(state.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

fn coupled(args: &CoupledArgs, seed: u64) -> RunResult {
    let p = params_of(args.preset_chaotic, args.phi1, args.phi2, args.phi3);
    let config = CoupledConfig {
        command: "simulate coupled",
        phi1: p.phi1,
        phi2: p.phi2,
        phi3: p.phi3,
        x0: args.x0.clone(),
        h: args.h,
        horizon: args.horizon,
    };
    let header = run::header_line(&config, seed);
    let x0 = three(&args.x0, "--x0")?;
    let traj = integrate_coupled(p, x0, args.h, args.horizon).map_err(invalid)?;
    let names = ["f_x", "f_y", "f_z"].map(String::from);
    write_trajectory(&args.out, &header, &traj, &names)?;
    eprintln!("{} steps -> {}", traj.len(), args.out.display());
    Ok(())
}

fn three(v: &[f64], flag: &str) -> Result<[f64; 3], RunError> {
    <[f64; 3]>::try_from(v).map_err(|_| {
        RunError::Validation(format!(
            "{flag} needs exactly three comma-separated numbers"
        ))
    })
}

fn run_geodesic(args: &GeodesicArgs, seed: u64) -> RunResult {
    let (metric, dim) = match args.metric.as_str() {
        "minkowski" => (MetricField::minkowski(), 3),
        "poincare-half-plane" => (MetricField::poincare_half_plane(), 2),
        "euclidean" => {
            let dim = args.dim.ok_or_else(|| {
                RunError::Validation("euclidean metric needs --dim".into())
            })?;
            (MetricField::euclidean(dim), dim)
        }
        "custom" => {
            let dim = args
                .dim
                .ok_or_else(|| RunError::Validation("custom metric needs --dim".into()))?;
            if args.entries.len() != dim * dim {
                return Err(RunError::Validation(format!(
                    "custom metric needs {} --entry expressions, got {}",
                    dim * dim,
                    args.entries.len()
                )));
            }
            let refs: Vec<&str> = args.entries.iter().map(String::as_str).collect();
            (
                MetricField::from_expressions(dim, &refs).map_err(invalid)?,
                dim,
            )
        }
        other => {
            return Err(RunError::Validation(format!(
                "unknown metric `{other}`; expected minkowski, euclidean, poincare-half-plane, or custom"
            )))
        }
    };

    let default_x0 = vec![0.0; dim];
    let mut default_v0 = vec![0.0; dim];
    default_v0[0] = 1.0;
    let x0 = args.x0.clone().unwrap_or(default_x0);
    let v0 = args.v0.clone().unwrap_or(default_v0);

    let config = GeodesicConfig {
        command: "simulate geodesic",
        metric: args.metric.clone(),
        dim: args.dim,
        entries: args.entries.clone(),
        x0: x0.clone(),
        v0: v0.clone(),
        h: args.h,
        horizon: args.horizon,
    };
    let header = run::header_line(&config, seed);

    let traj = geodesic(&metric, &x0, &v0, args.h, args.horizon).map_err(invalid)?;
    let coords = ["x", "y", "z", "w"];
    let mut names: Vec<String> = (0..dim)
        .map(|i| {
            coords
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or(format!("x{i}"))
        })
        .collect();
    let vel_names: Vec<String> = names.iter().map(|n| format!("v_{n}")).collect();
    names.extend(vel_names);
    write_trajectory(&args.out, &header, &traj, &names)?;
    eprintln!("{} steps -> {}", traj.len(), args.out.display());
    Ok(())
}

fn chrono(args: &ChronoArgs, seed: u64) -> RunResult {
    let p = params_of(args.preset_chaotic, args.phi1, args.phi2, args.phi3);
    let config = ChronoConfig {
        command: "simulate chrono",
        phi1: p.phi1,
        phi2: p.phi2,
        phi3: p.phi3,
        kappa: args.kappa,
        psi0: args.psi0.clone(),
        h: args.h,
        horizon: args.horizon,
    };
    let header = run::header_line(&config, seed);
    let psi0 = three(&args.psi0, "--psi0")?;
    let rate = args.kappa;
    let rhs = coupled_rhs(p);
    let traj = chronosystem_modulate(
        move |t, y: &[f64; 3]| rhs(t, y),
        move |_t| rate,
        psi0,
        args.h,
        args.horizon,
    )
    .map_err(invalid)?;
    let names = ["psi_x", "psi_y", "psi_z"].map(String::from);
    write_trajectory(&args.out, &header, &traj, &names)?;
    eprintln!("{} steps -> {}", traj.len(), args.out.display());
    Ok(())
}
