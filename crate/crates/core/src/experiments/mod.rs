//! Seeded end-to-end studies and their CSV/JSON records.
//!
//! Every record is written as `{experiment}-{seed}.csv` (one row per data
//! point, preceded by a `# {json}` line echoing the configuration) and
//! `{experiment}-{seed}.json` (configuration plus summary).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod qubitisation;
pub mod seeds;
pub mod trotter;
pub mod vary_m;

pub use qubitisation::{run_qubitisation_histogram, QubitHistogramConfig, Strategy};
pub use trotter::{run_noise_floor_sweep, run_trotter_sweep, NoiseFloorConfig, TrotterSweepConfig};
pub use vary_m::{run_vary_m, VaryMConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord<C, R, S> {
    pub experiment: String,
    pub seed: u64,
    pub config: C,
    #[serde(skip)]
    pub rows: Vec<R>,
    pub summary: S,
}

#[derive(Serialize)]
struct Header<'a, C> {
    experiment: &'a str,
    seed: u64,
    config: &'a C,
}

impl<C: Serialize, R: Serialize, S: Serialize> ExperimentRecord<C, R, S> {
    pub fn file_stem(&self) -> String {
        format!("{}-{}", self.experiment, self.seed)
    }

    /// `# {config json}` followed by a headed CSV table of the rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header { experiment: &self.experiment, seed: self.seed, config: &self.config };
        writeln!(out, "# {}", serde_json::to_string(&header)?)?;
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// Write both files into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.file_stem()));
        let json_path = dir.join(format!("{}.json", self.file_stem()));
        self.write_csv(std::io::BufWriter::new(fs::File::create(&csv_path)?))?;
        self.write_json(std::io::BufWriter::new(fs::File::create(&json_path)?))?;
        Ok((csv_path, json_path))
    }
}

/// error ≈ C · (1/x)^α, fitted as a line in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    /// ln C.
    pub intercept: f64,
    /// Root-mean-square residual of the log-log line.
    pub residual: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidParameter(format!("power-law fit needs positive values, got ({x}, {y})")));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (-x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("power-law fit needs distinct x values".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - alpha * p.0).powi(2)).sum();
    Ok(PowerLawFit { alpha, intercept, residual: (ss / n).sqrt() })
}

/// Sample mean and (n − 1)-normalised standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
