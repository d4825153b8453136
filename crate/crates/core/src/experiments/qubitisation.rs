//! Ground-energy estimates from qubitised Hamiltonians with rounded LCU
//! coefficients, raw and mitigated, sampled through simulated phase
//! estimation.
//!
//! Each run (1) redraws offset sets until the weights meet the strategy's
//! condition, growing m when a size keeps failing, (2)
//! diagonalises the retained observables, (3) takes one phase-estimation
//! sample per observable and (4) combines them.
//!
//! Steps (1) and (2) dominate the cost, so the number of independent offset
//! draws can be capped with `draws`; run r then reuses draw r mod draws and
//! only the phase-estimation samples are fresh. `draws = runs` is the
//! unshared protocol.
//!
//! Run r uses the same sample stream under every strategy at a given μ.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, seeds, ExperimentRecord};
use crate::error::{Error, Result};
use crate::error_models::{delta_matrix, OffsetColumn, OffsetSampler};
use crate::extrapolate::{
    design_matrix, solve_lambda_min_l2, solve_lambda_nonnegative, structural_min_m, DeltaStructure, MitigationWeights,
};
use crate::hamiltonian::{Model, SpinHamiltonian};
use crate::linalg::{ground_energy, DEFAULT_RANK_TOL};
use crate::pe_sim::{energy_to_phase, pe_sample_energy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The best implementable observable alone (all offsets zero).
    Raw,
    /// First order, ‖λ‖₂ < 1.
    FirstOrderMinL2,
    /// First order, every λ_k > 0 (origin inside the hull of the deltas).
    FirstOrderNonneg,
    /// Second order, ‖λ‖₂ < 1.
    SecondOrderMinL2,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Self::Raw, Self::FirstOrderMinL2, Self::FirstOrderNonneg, Self::SecondOrderMinL2];

    pub fn order(self) -> usize {
        match self {
            Self::Raw => 0,
            Self::FirstOrderMinL2 | Self::FirstOrderNonneg => 1,
            Self::SecondOrderMinL2 => 2,
        }
    }

    pub fn accepts(self, w: &MitigationWeights) -> bool {
        match self {
            Self::Raw => true,
            Self::FirstOrderMinL2 | Self::SecondOrderMinL2 => w.l2_norm < 1.0,
            Self::FirstOrderNonneg => w.lambda.iter().all(|&l| l > 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::FirstOrderMinL2 => "first_order_min_l2",
            Self::FirstOrderNonneg => "first_order_nonneg",
            Self::SecondOrderMinL2 => "second_order_min_l2",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitHistogramConfig {
    pub model: Model,
    pub n: usize,
    pub seed: u64,
    pub mus: Vec<u32>,
    pub strategies: Vec<Strategy>,
    pub runs: usize,
    pub q: u32,
    /// Independent offset draws shared out over the runs; `None` means one per run.
    pub draws: Option<usize>,
    /// Offset redraws tried at each m before m is incremented.
    pub attempts_per_m: usize,
    /// Largest m tried beyond the structural minimum.
    pub max_extra_m: usize,
}

impl Default for QubitHistogramConfig {
    fn default() -> Self {
        Self {
            model: Model::Ising,
            n: 8,
            seed: 1,
            mus: vec![6, 8, 10],
            strategies: vec![Strategy::Raw, Strategy::FirstOrderMinL2, Strategy::FirstOrderNonneg],
            runs: 10_000,
            q: 16,
            draws: None,
            attempts_per_m: 200,
            max_extra_m: 60,
        }
    }
}

impl QubitHistogramConfig {
    fn draw_count(&self) -> usize {
        self.draws.unwrap_or(self.runs).clamp(1, self.runs.max(1))
    }
}

/// A retained observable set: its offset columns, weights and exact ground
/// energies.
#[derive(Debug, Clone)]
pub struct RetainedSet {
    pub columns: Vec<OffsetColumn>,
    pub weights: MitigationWeights,
    pub energies: Vec<f64>,
}

/// Step (1): redraw offset sets until the weights satisfy the strategy.
pub fn select_offsets<R: rand::Rng + ?Sized>(
    sampler: &mut OffsetSampler,
    strategy: Strategy,
    rng: &mut R,
    attempts_per_m: usize,
    max_extra_m: usize,
) -> Result<(Vec<OffsetColumn>, MitigationWeights)> {
    let p = strategy.order();
    if strategy == Strategy::Raw {
        let zero = sampler.column(vec![0; sampler.n_params()])?;
        let deltas = delta_matrix(std::slice::from_ref(&zero.delta))?;
        let (x, b) = design_matrix(&deltas, 0)?;
        return Ok((vec![zero], solve_lambda_min_l2(&x, &b, DEFAULT_RANK_TOL)?));
    }
    let n = sampler.n_params();
    let m_min = structural_min_m(n, p, DeltaStructure::SumZero);
    let mut tries = 0;
    for m in m_min..=m_min + max_extra_m {
        for _ in 0..attempts_per_m {
            tries += 1;
            sampler.reset();
            let Ok(cols) = sampler.draw_many(rng, m) else { continue };
            if let Some(found) = try_columns(cols, strategy)? {
                return Ok(found);
            }
        }
    }
    Err(Error::Exhausted { wanted: m_min + max_extra_m, attempts: tries })
}

fn weights_for(cols: &[OffsetColumn], p: usize, nonneg: bool) -> Result<Result<MitigationWeights>> {
    let deltas = delta_matrix(&cols.iter().map(|c| c.delta.clone()).collect::<Vec<_>>())?;
    let (x, b) = design_matrix(&deltas, p)?;
    let w = if nonneg { solve_lambda_nonnegative(&x, &b) } else { solve_lambda_min_l2(&x, &b, DEFAULT_RANK_TOL) };
    Ok(w.map(|w| w.with_delta_hash(&deltas)))
}

/// Weights for one candidate set if it meets the strategy's condition.
fn try_columns(cols: Vec<OffsetColumn>, strategy: Strategy) -> Result<Option<(Vec<OffsetColumn>, MitigationWeights)>> {
    let p = strategy.order();
    if strategy != Strategy::FirstOrderNonneg {
        let w = weights_for(&cols, p, false)?;
        return Ok(w.ok().filter(|w| strategy.accepts(w)).map(|w| (cols, w)));
    }
    // Min-norm weights of random offset sets are practically never all
    // positive, so nonnegative weights come from the hull-feasibility solve.
    // Observables with zero weight are dropped and the rest re-solved.
    let Ok(w) = weights_for(&cols, p, true)? else { return Ok(None) };
    let kept: Vec<OffsetColumn> = cols.into_iter().zip(&w.lambda).filter(|(_, &l)| l > 0.0).map(|(c, _)| c).collect();
    let w = weights_for(&kept, p, true)?;
    Ok(w.ok().filter(|w| strategy.accepts(w)).map(|w| (kept, w)))
}

fn retained_set(h: &SpinHamiltonian, cols: Vec<OffsetColumn>, weights: MitigationWeights) -> Result<RetainedSet> {
    let energies = cols
        .iter()
        .map(|c| ground_energy(&h.with_coefficients(&c.coefficients)?.dense_matrix()?))
        .collect::<Result<Vec<_>>>()?;
    Ok(RetainedSet { columns: cols, weights, energies })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitRow {
    pub mu: u32,
    pub strategy: Strategy,
    pub run: usize,
    pub draw: usize,
    pub m: usize,
    pub estimate: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitGroup {
    pub mu: u32,
    pub strategy: Strategy,
    pub draws: usize,
    pub mean: f64,
    /// mean − exact ground energy.
    pub bias: f64,
    pub std: f64,
    pub mean_m: f64,
    pub mean_lambda_l1: f64,
    pub mean_lambda_l2: f64,
    /// Mean over draws of the noiseless combination Σλ_k E'_k minus the exact energy.
    pub algorithmic_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitSummary {
    pub exact_energy: f64,
    pub n_terms: usize,
    pub groups: Vec<QubitGroup>,
}

pub type QubitHistogramRecord = ExperimentRecord<QubitHistogramConfig, QubitRow, QubitSummary>;

pub fn run_qubitisation_histogram(config: &QubitHistogramConfig) -> Result<QubitHistogramRecord> {
    if config.runs == 0 || config.mus.is_empty() || config.strategies.is_empty() {
        return Err(Error::InvalidParameter("runs, μ values and strategies must be non-empty".into()));
    }
    if config.attempts_per_m == 0 {
        return Err(Error::InvalidParameter("attempts_per_m must be positive".into()));
    }
    let h = SpinHamiltonian::build(config.model, config.n, config.seed)?.normalised()?;
    let exact = ground_energy(&h.dense_matrix()?)?;
    let draws = config.draw_count();
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for &mu in &config.mus {
        for &strategy in &config.strategies {
            let tag = format!("qubit-histogram/{mu}/{strategy}");
            // Runs share sample streams across strategies (common random
            // numbers), so spreads are compared on identical PE randomness.
            let run_tag = format!("qubit-histogram/{mu}/run");
            // Raw has a single deterministic observable; no need to repeat it.
            let n_draws = if strategy == Strategy::Raw { 1 } else { draws };
            let sets: Vec<RetainedSet> = (0..n_draws)
                .into_par_iter()
                .map(|d| {
                    let mut rng = seeds::stream(config.seed, &format!("{tag}/draw"), d as u64);
                    let mut sampler = OffsetSampler::new(&h, mu)?;
                    let (cols, w) = select_offsets(&mut sampler, strategy, &mut rng, config.attempts_per_m, config.max_extra_m)?;
                    retained_set(&h, cols, w)
                })
                .collect::<Result<_>>()?;
            let phases: Vec<Vec<f64>> = sets
                .iter()
                .map(|s| s.energies.iter().map(|&e| energy_to_phase(e)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?;
            let estimates: Vec<f64> = (0..config.runs)
                .into_par_iter()
                .map(|run| {
                    let d = run % n_draws;
                    let mut rng = seeds::stream(config.seed, &run_tag, run as u64);
                    let sampled = phases[d]
                        .iter()
                        .map(|&phi| pe_sample_energy(phi, config.q, &mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    sets[d].weights.apply(&sampled)
                })
                .collect::<Result<_>>()?;
            let (mean, std) = mean_std(&estimates);
            let per_draw = |f: &dyn Fn(&RetainedSet) -> f64| sets.iter().map(f).sum::<f64>() / n_draws as f64;
            groups.push(QubitGroup {
                mu,
                strategy,
                draws: n_draws,
                mean,
                bias: mean - exact,
                std,
                mean_m: per_draw(&|s| s.energies.len() as f64),
                mean_lambda_l1: per_draw(&|s| s.weights.l1_norm),
                mean_lambda_l2: per_draw(&|s| s.weights.l2_norm),
                algorithmic_bias: per_draw(&|s| s.weights.apply(&s.energies).unwrap_or(f64::NAN) - exact),
            });
            rows.extend(estimates.into_iter().enumerate().map(|(run, estimate)| QubitRow {
                mu,
                strategy,
                run,
                draw: run % n_draws,
                m: sets[run % n_draws].energies.len(),
                estimate,
                error: estimate - exact,
            }));
        }
    }
    Ok(ExperimentRecord {
        experiment: "qubit-histogram".into(),
        seed: config.seed,
        config: config.clone(),
        rows,
        summary: QubitSummary { exact_energy: exact, n_terms: h.n_terms(), groups },
    })
}
