//! Mean estimation error against the number m of implemented observables,
//! always using the highest order whose weight system is solvable.
//!
//! One offset sequence is drawn per chain length; the observable set for a
//! given m is its first m columns, with no condition imposed on λ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{seeds, ExperimentRecord};
use crate::error::{Error, Result};
use crate::error_models::{delta_matrix, OffsetSampler};
use crate::extrapolate::{design_matrix, solve_lambda_min_l2, structural_min_m, DeltaStructure, MitigationWeights};
use crate::hamiltonian::{Model, SpinHamiltonian};
use crate::linalg::{ground_energy, DEFAULT_RANK_TOL};
use crate::pe_sim::{energy_to_phase, pe_sample_energy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaryMConfig {
    pub model: Model,
    /// Chain lengths in sites; an Ising chain of n sites has 2n terms.
    pub n_values: Vec<usize>,
    pub seed: u64,
    pub mu: u32,
    pub m_max: usize,
    pub runs: usize,
    pub q: u32,
    pub max_order: usize,
}

impl Default for VaryMConfig {
    fn default() -> Self {
        Self { model: Model::Ising, n_values: vec![3, 4, 5], seed: 1, mu: 5, m_max: 60, runs: 10_000, q: 16, max_order: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaryMRow {
    pub n_sites: usize,
    pub n_terms: usize,
    pub m: usize,
    pub p: usize,
    /// Mean over runs of |estimate − exact|.
    pub mean_error: f64,
    /// |Σλ_k E'_k − exact| from exact eigenvalues.
    pub algorithmic_error: f64,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderThreshold {
    pub n_terms: usize,
    pub p: usize,
    /// First m at which this order was used.
    pub first_m: usize,
    /// Rank of generic zero-sum columns at this order.
    pub structural_m_min: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaryMSummary {
    pub exact_energies: Vec<f64>,
    pub thresholds: Vec<OrderThreshold>,
}

pub type VaryMRecord = ExperimentRecord<VaryMConfig, VaryMRow, VaryMSummary>;

/// Highest order ≤ `max_order` whose system is consistent for these columns.
pub fn highest_order(deltas: &crate::linalg::RMatrix, max_order: usize) -> Result<(usize, MitigationWeights)> {
    for p in (0..=max_order).rev() {
        let (x, b) = design_matrix(deltas, p)?;
        if let Ok(w) = solve_lambda_min_l2(&x, &b, DEFAULT_RANK_TOL) {
            return Ok((p, w));
        }
    }
    Err(Error::Infeasible { residual: f64::NAN, rank: 0 })
}

pub fn run_vary_m(config: &VaryMConfig) -> Result<VaryMRecord> {
    if config.runs == 0 || config.m_max == 0 || config.n_values.is_empty() {
        return Err(Error::InvalidParameter("runs, m_max and chain lengths must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut exact_energies = Vec::new();
    let mut thresholds = Vec::new();
    for &n in &config.n_values {
        let h = SpinHamiltonian::build(config.model, n, config.seed)?.normalised()?;
        let exact = ground_energy(&h.dense_matrix()?)?;
        exact_energies.push(exact);
        let n_terms = h.n_terms();
        let mut rng = seeds::stream(config.seed, &format!("vary-m/{n}/offsets"), 0);
        let mut sampler = OffsetSampler::new(&h, config.mu)?;
        let columns = sampler.draw_many(&mut rng, config.m_max)?;
        let energies: Vec<f64> = columns
            .par_iter()
            .map(|c| ground_energy(&h.with_coefficients(&c.coefficients)?.dense_matrix()?))
            .collect::<Result<_>>()?;
        let phases = energies.iter().map(|&e| energy_to_phase(e)).collect::<Result<Vec<_>>>()?;
        let deltas_all: Vec<Vec<f64>> = columns.iter().map(|c| c.delta.clone()).collect();

        let mut last_p = None;
        for m in 1..=config.m_max {
            let deltas = delta_matrix(&deltas_all[..m])?;
            let (p, w) = highest_order(&deltas, config.max_order)?;
            if last_p != Some(p) {
                thresholds.push(OrderThreshold {
                    n_terms,
                    p,
                    first_m: m,
                    structural_m_min: structural_min_m(n_terms, p, DeltaStructure::SumZero),
                });
                last_p = Some(p);
            }
            let tag = format!("vary-m/{n}/{m}");
            let errors: Vec<f64> = (0..config.runs)
                .into_par_iter()
                .map(|run| {
                    let mut rng = seeds::stream(config.seed, &tag, run as u64);
                    let sampled = phases[..m]
                        .iter()
                        .map(|&phi| pe_sample_energy(phi, config.q, &mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((w.apply(&sampled)? - exact).abs())
                })
                .collect::<Result<_>>()?;
            rows.push(VaryMRow {
                n_sites: n,
                n_terms,
                m,
                p,
                mean_error: errors.iter().sum::<f64>() / config.runs as f64,
                algorithmic_error: (w.apply(&energies[..m])? - exact).abs(),
                lambda_l1: w.l1_norm,
                lambda_l2: w.l2_norm,
            });
        }
    }
    Ok(ExperimentRecord {
        experiment: "vary-m".into(),
        seed: config.seed,
        config: config.clone(),
        rows,
        summary: VaryMSummary { exact_energies, thresholds },
    })
}
