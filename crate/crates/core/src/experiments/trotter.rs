//! Trotter-step sweeps: algorithmic error against the number of steps, with
//! and without Gaussian phase-estimation noise.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_power_law, seeds, ExperimentRecord, PowerLawFit};
use crate::error::{Error, Result};
use crate::error_models::{trotter_delta_set, TrotterSplit};
use crate::extrapolate::{combine, design_matrix, noise_floor, solve_lambda_min_l2, MitigationWeights};
use crate::hamiltonian::{Model, SpinHamiltonian};
use crate::linalg::{ground_energy, DEFAULT_RANK_TOL};
use crate::pe_sim::{noisy_energy_sample, MeanShift, NoiseTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterSweepConfig {
    pub model: Model,
    pub n: usize,
    pub seed: u64,
    pub orders: Vec<usize>,
    /// Values of N_Trotter,max; the smallest step is t_total / N.
    pub trotter_steps: Vec<u64>,
    pub t_total: f64,
}

impl Default for TrotterSweepConfig {
    fn default() -> Self {
        Self {
            model: Model::Xyz,
            n: 6,
            seed: 1,
            orders: vec![0, 2, 4],
            trotter_steps: vec![8, 10, 14, 20, 28, 40, 56, 80],
            t_total: 1.0,
        }
    }
}

impl TrotterSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() || self.trotter_steps.is_empty() {
            return Err(Error::InvalidParameter("orders and trotter steps must be non-empty".into()));
        }
        if let Some(p) = self.orders.iter().find(|p| *p % 2 != 0) {
            return Err(Error::InvalidParameter(format!("Trotter sweeps take even orders only, got {p}")));
        }
        if self.trotter_steps.contains(&0) {
            return Err(Error::InvalidParameter("N_Trotter,max must be positive".into()));
        }
        if !(self.t_total > 0.0) || !self.t_total.is_finite() {
            return Err(Error::InvalidParameter(format!("t_total must be positive, got {}", self.t_total)));
        }
        Ok(())
    }
}

/// One (order, step count) point of a sweep.
#[derive(Debug, Clone)]
pub struct TrotterPoint {
    pub p: usize,
    pub n_trotter_max: u64,
    pub dt_min: f64,
    pub steps: Vec<f64>,
    pub energies: Vec<f64>,
    pub weights: MitigationWeights,
    pub estimate: f64,
    pub error: f64,
}

/// Exact ground energy of H and the mitigated points of a sweep.
pub fn evaluate_points(config: &TrotterSweepConfig) -> Result<(f64, Vec<TrotterPoint>)> {
    config.validate()?;
    let h = SpinHamiltonian::build(config.model, config.n, config.seed)?;
    let exact = ground_energy(&h.dense_matrix()?)?;
    let (h_a, h_b) = h.split_even_odd();
    let split = TrotterSplit::from_hamiltonians(&h_a, &h_b)?;

    let mut plan = Vec::new();
    for &p in &config.orders {
        for &nt in &config.trotter_steps {
            let dt_min = config.t_total / nt as f64;
            plan.push((p, nt, dt_min, trotter_delta_set(p, dt_min)?));
        }
    }
    // Orders share steps at equal δt_min, so each distinct step is diagonalised once.
    let mut unique: BTreeMap<u64, f64> = BTreeMap::new();
    for (.., steps) in &plan {
        for &dt in steps {
            unique.insert(dt.to_bits(), dt);
        }
    }
    let steps: Vec<f64> = unique.values().copied().collect();
    let energies: Vec<f64> = steps
        .par_iter()
        .map(|&dt| split.effective(dt).and_then(|eff| eff.ground_energy()))
        .collect::<Result<_>>()?;
    let lookup: BTreeMap<u64, f64> = steps.iter().zip(&energies).map(|(dt, e)| (dt.to_bits(), *e)).collect();

    let points = plan
        .into_iter()
        .map(|(p, n_trotter_max, dt_min, steps)| {
            let energies: Vec<f64> = steps.iter().map(|dt| lookup[&dt.to_bits()]).collect();
            let deltas = DMatrix::from_row_slice(1, steps.len(), &steps);
            let (x, b) = design_matrix(&deltas, p)?;
            let weights = solve_lambda_min_l2(&x, &b, DEFAULT_RANK_TOL)?.with_delta_hash(&deltas);
            let estimate = combine(&weights, &energies)?.value;
            Ok(TrotterPoint { p, n_trotter_max, dt_min, steps, energies, weights, estimate, error: (estimate - exact).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((exact, points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterRow {
    pub p: usize,
    pub n_trotter_max: u64,
    pub dt_min: f64,
    pub m: usize,
    pub estimate: f64,
    pub exact: f64,
    pub error: f64,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub p: usize,
    /// Absent when some error is exactly zero or too few points exist.
    pub fit: Option<PowerLawFit>,
    pub lambda: Vec<f64>,
    pub lambda_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterSummary {
    pub exact_energy: f64,
    pub fits: Vec<OrderFit>,
}

pub type TrotterSweepRecord = ExperimentRecord<TrotterSweepConfig, TrotterRow, TrotterSummary>;

fn order_fits(orders: &[usize], points: &[TrotterPoint]) -> Vec<OrderFit> {
    orders
        .iter()
        .map(|&p| {
            let of_p: Vec<&TrotterPoint> = points.iter().filter(|pt| pt.p == p).collect();
            let xy: Vec<(f64, f64)> = of_p.iter().map(|pt| (pt.n_trotter_max as f64, pt.error)).collect();
            let w = &of_p[0].weights;
            OrderFit { p, fit: fit_power_law(&xy).ok(), lambda: w.lambda.clone(), lambda_l2: w.l2_norm }
        })
        .collect()
}

pub fn run_trotter_sweep(config: &TrotterSweepConfig) -> Result<TrotterSweepRecord> {
    let (exact, points) = evaluate_points(config)?;
    let rows = points
        .iter()
        .map(|pt| TrotterRow {
            p: pt.p,
            n_trotter_max: pt.n_trotter_max,
            dt_min: pt.dt_min,
            m: pt.steps.len(),
            estimate: pt.estimate,
            exact,
            error: pt.error,
            lambda_l1: pt.weights.l1_norm,
            lambda_l2: pt.weights.l2_norm,
        })
        .collect();
    Ok(ExperimentRecord {
        experiment: "trotter-sweep".into(),
        seed: config.seed,
        config: config.clone(),
        rows,
        summary: TrotterSummary { exact_energy: exact, fits: order_fits(&config.orders, &points) },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFloorConfig {
    #[serde(flatten)]
    pub sweep: TrotterSweepConfig,
    pub noise_table: NoiseTable,
    pub noise_strengths: Vec<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFloorRow {
    pub noise_strength: f64,
    pub p: usize,
    pub n_trotter_max: u64,
    pub run: usize,
    pub estimate: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub noise_strength: f64,
    pub p: usize,
    pub n_trotter_max: u64,
    pub dt_min: f64,
    pub lambda_l2: f64,
    /// |estimate − E| from exact eigenvalues, no sampling.
    pub algorithmic_error: f64,
    /// √(mean (Ẽ − E)²) over the runs.
    pub rms: f64,
    /// √(‖λ‖₂²ΔE² + (Ē − E)²).
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFloorSummary {
    pub exact_energy: f64,
    pub points: Vec<NoisePoint>,
}

pub type NoiseFloorRecord = ExperimentRecord<NoiseFloorConfig, NoiseFloorRow, NoiseFloorSummary>;

/// The Trotter sweep with every eigenvalue replaced by a noisy sample,
/// repeated `runs` times per point.
pub fn run_noise_floor_sweep(config: &NoiseFloorConfig) -> Result<NoiseFloorRecord> {
    if config.runs == 0 {
        return Err(Error::InvalidParameter("runs must be positive".into()));
    }
    if config.noise_strengths.is_empty() {
        return Err(Error::InvalidParameter("no noise strengths requested".into()));
    }
    let entries = config
        .noise_strengths
        .iter()
        .map(|&s| config.noise_table.lookup(s).copied())
        .collect::<Result<Vec<_>>>()?;
    let (exact, points) = evaluate_points(&config.sweep)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (si, entry) in entries.iter().enumerate() {
        for pt in &points {
            let tag = format!("noise-floor/{si}/{}/{}", pt.p, pt.n_trotter_max);
            let estimates: Vec<f64> = (0..config.runs)
                .into_par_iter()
                .map(|run| {
                    let mut rng = seeds::stream(config.sweep.seed, &tag, run as u64);
                    let sampled = pt
                        .energies
                        .iter()
                        .map(|&e| noisy_energy_sample(e, exact, entry, &mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    pt.weights.apply(&sampled)
                })
                .collect::<Result<_>>()?;
            let ms = estimates.iter().map(|e| (e - exact).powi(2)).sum::<f64>() / config.runs as f64;
            let e_bar = match entry.e_bar {
                MeanShift::Exact => exact,
                MeanShift::Mean(v) => v,
            };
            summary.push(NoisePoint {
                noise_strength: entry.noise_strength,
                p: pt.p,
                n_trotter_max: pt.n_trotter_max,
                dt_min: pt.dt_min,
                lambda_l2: pt.weights.l2_norm,
                algorithmic_error: pt.error,
                rms: ms.sqrt(),
                floor: noise_floor(&pt.weights, entry.delta_e, e_bar, exact)?,
            });
            rows.extend(estimates.into_iter().enumerate().map(|(run, estimate)| NoiseFloorRow {
                noise_strength: entry.noise_strength,
                p: pt.p,
                n_trotter_max: pt.n_trotter_max,
                run,
                estimate,
                error: estimate - exact,
            }));
        }
    }
    Ok(ExperimentRecord {
        experiment: "noise-floor".into(),
        seed: config.sweep.seed,
        config: config.clone(),
        rows,
        summary: NoiseFloorSummary { exact_energy: exact, points: summary },
    })
}
