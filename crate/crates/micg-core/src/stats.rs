//! Rank correlation and kernel density estimation for robustness
//! analysis of score distributions.

use serde::Serialize;
use thiserror::Error;

use crate::math;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("input vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("rank correlation is undefined for a constant vector")]
    ConstantInput,
    #[error("density estimation needs values inside [0, 1]; found {0}")]
    OutOfRange(f64),
    #[error("all values are identical; bandwidth is undefined")]
    DegenerateSample,
    #[error("bandwidth must be positive, got {0}")]
    BadBandwidth(f64),
}

/// Ranks with ties sharing their average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite value"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // tied block spans sorted positions i..=j
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok(cov / (va * vb).sqrt())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(StatsError::TooFewValues {
            need: 3,
            got: a.len(),
        });
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcordanceMatrix {
    pub labels: Vec<String>,
    /// Row-major square matrix of pairwise Spearman correlations.
    pub rho: Vec<f64>,
}

impl ConcordanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.labels.len() + j]
    }
}

/// Pairwise Spearman correlations between labeled score vectors.
pub fn concordance(series: &[(String, Vec<f64>)]) -> Result<ConcordanceMatrix, StatsError> {
    let k = series.len();
    if k < 2 {
        return Err(StatsError::TooFewValues { need: 2, got: k });
    }
    let n0 = series[0].1.len();
    for (_, v) in series {
        if v.len() != n0 {
            return Err(StatsError::LengthMismatch(n0, v.len()));
        }
    }
    let mut rho = vec![1.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let r = spearman(&series[i].1, &series[j].1)?;
            rho[i * k + j] = r;
            rho[j * k + i] = r;
        }
    }
    Ok(ConcordanceMatrix {
        labels: series.iter().map(|(l, _)| l.clone()).collect(),
        rho,
    })
}

/// Number of grid points for density curves.
pub const DENSITY_GRID: usize = 512;

#[derive(Debug, Clone, Serialize)]
pub struct DensityCurve {
    /// Uniform grid over [0, 1], inclusive of both ends.
    pub grid: Vec<f64>,
    pub heights: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoid mass over the grid; should be 1 within tolerance.
    pub fn mass(&self) -> f64 {
        let mut total = 0.0;
        for i in 1..self.grid.len() {
            let dx = self.grid[i] - self.grid[i - 1];
            total += 0.5 * dx * (self.heights[i] + self.heights[i - 1]);
        }
        total
    }
}

/// Silverman's rule of thumb with the usual fallback chain: scale is the
/// smaller of the standard deviation and IQR/1.34; a zero IQR falls back
/// to the standard deviation alone, and a zero spread is an error.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64, StatsError> {
    let sd = math::sample_sd(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value"));
    let iqr = math::quantile_sorted(&sorted, 0.75) - math::quantile_sorted(&sorted, 0.25);
    let mut scale = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if scale == 0.0 {
        scale = sd;
    }
    if scale == 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    Ok(0.9 * scale * (values.len() as f64).powf(-0.2))
}

/// Gaussian kernel density for scores on [0, 1] with boundary reflection
/// at both ends, evaluated on a uniform 512-point grid.
pub fn kde_unit_interval(
    values: &[f64],
    bandwidth: Option<f64>,
) -> Result<DensityCurve, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewValues {
            need: 2,
            got: values.len(),
        });
    }
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(StatsError::OutOfRange(v));
        }
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(StatsError::BadBandwidth(h)),
        None => silverman_bandwidth(values)?,
    };
    let n = values.len() as f64;
    let grid: Vec<f64> = (0..DENSITY_GRID)
        .map(|i| i as f64 / (DENSITY_GRID - 1) as f64)
        .collect();
    let mut heights = vec![0.0; DENSITY_GRID];
    for (g, &x) in grid.iter().enumerate() {
        let mut acc = 0.0;
        for &v in values {
            // reflect mass that would spill past 0 and past 1
            acc += math::norm_pdf((x - v) / h);
            acc += math::norm_pdf((x + v) / h);
            acc += math::norm_pdf((x - (2.0 - v)) / h);
        }
        heights[g] = acc / (n * h);
    }
    Ok(DensityCurve {
        grid,
        heights,
        bandwidth: h,
    })
}
