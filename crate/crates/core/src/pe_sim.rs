//! Simulated phase-estimation outcomes.
//!
//! With q ancillae and M = 2^q the textbook output distribution for an
//! eigenphase φ is
//!
//!   P(j) = sin²(π f) / (M² sin²(π (f − j)/M)),  f = φ·M,
//!
//! over outcomes j = Σ y_i 2^{q−1−i}, with the removable singularity at
//! j = f evaluating to 1. The outcome is read as y = j/M and, for a walk
//! operator e^{−i arccos H}, as the energy cos(2πy).

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ancilla count accepted by the dense distribution.
pub const MAX_DENSE_ANCILLAE: u32 = 24;
/// Largest ancilla count accepted by the sampler.
pub const MAX_ANCILLAE: u32 = 52;

fn check_phase(phi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&phi) {
        return Err(Error::PhaseOutOfRange(phi));
    }
    Ok(())
}

fn check_q(q: u32, limit: u32) -> Result<()> {
    if q == 0 || q > limit {
        return Err(Error::InvalidParameter(format!("ancilla count must lie in 1..={limit}, got {q}")));
    }
    Ok(())
}

/// Scaled phase f = φ·2^q with its distance to the nearest integer.
#[derive(Debug, Clone, Copy)]
struct ScaledPhase {
    f: f64,
    m: f64,
    /// sin²(π f), computed from f − round(f) to avoid cancellation.
    numerator: f64,
    on_grid: bool,
}

impl ScaledPhase {
    fn new(phi: f64, q: u32) -> Self {
        let m = (q as f64).exp2();
        let f = phi * m;
        let r = f - f.round();
        Self { f, m, numerator: (PI * r).sin().powi(2), on_grid: r == 0.0 }
    }

    fn prob(&self, j: f64) -> f64 {
        let d = self.f - j;
        if d == 0.0 {
            return 1.0;
        }
        if self.on_grid {
            return 0.0;
        }
        let s = (PI * d / self.m).sin();
        self.numerator / (self.m * self.m * s * s)
    }
}

/// Probabilities of all 2^q outcomes, indexed by j.
pub fn pe_distribution(phi: f64, q: u32) -> Result<Vec<f64>> {
    check_phase(phi)?;
    check_q(q, MAX_DENSE_ANCILLAE)?;
    let sp = ScaledPhase::new(phi, q);
    Ok((0..1u64 << q).map(|j| sp.prob(j as f64)).collect())
}

/// Ancilla bits (y_0 first, most significant) of outcome j.
pub fn outcome_bits(j: u64, q: u32) -> Vec<u8> {
    (0..q).map(|i| ((j >> (q - 1 - i)) & 1) as u8).collect()
}

/// Draw an outcome j by inverse transform over outcomes ordered by distance
/// from ⌊f⌋ (⌊f⌋, ⌊f⌋+1, ⌊f⌋−1, ⌊f⌋+2, ... mod 2^q). Mass concentrates
/// near f, so the walk is short on average and nothing is precomputed.
pub fn pe_sample_index<R: Rng + ?Sized>(phi: f64, q: u32, rng: &mut R) -> Result<u64> {
    check_phase(phi)?;
    check_q(q, MAX_ANCILLAE)?;
    let sp = ScaledPhase::new(phi, q);
    let size = 1u64 << q;
    let base = (sp.f.floor() as u64) % size;
    if sp.on_grid {
        return Ok((sp.f as u64) % size);
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut j = base;
    for k in 0..size {
        let offset = if k % 2 == 1 { (k as i64 + 1) / 2 } else { -(k as i64 / 2) };
        // The offset is applied to ⌊f⌋ in real arithmetic so that the
        // probability uses the unwrapped distance f − j.
        let unwrapped = sp.f.floor() + offset as f64;
        j = (base as i64 + offset).rem_euclid(size as i64) as u64;
        acc += sp.prob(unwrapped);
        if u < acc {
            return Ok(j);
        }
    }
    // Rounding left the total a hair below u; take the last outcome visited.
    Ok(j)
}

/// One simulated energy cos(2π j/2^q).
pub fn pe_sample_energy<R: Rng + ?Sized>(phi: f64, q: u32, rng: &mut R) -> Result<f64> {
    let j = pe_sample_index(phi, q, rng)?;
    Ok((2.0 * PI * j as f64 / (q as f64).exp2()).cos())
}

/// φ = arccos(E)/(2π) for an energy of a normalised Hamiltonian.
pub fn energy_to_phase(e: f64) -> Result<f64> {
    if !(e.abs() <= 1.0) {
        return Err(Error::SpectralNorm(e));
    }
    Ok(e.acos() / (2.0 * PI))
}

/// Mean of the noisy estimate at one noise strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanShift {
    /// Samples are centred on the exact eigenvalue.
    Exact,
    /// The noisy mean of the target eigenvalue; every observable's samples
    /// are shifted by Ē − E_target.
    Mean(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub noise_strength: f64,
    pub e_bar: MeanShift,
    pub delta_e: f64,
}

impl NoiseEntry {
    pub fn exact(noise_strength: f64, delta_e: f64) -> Self {
        Self { noise_strength, e_bar: MeanShift::Exact, delta_e }
    }

    /// Ē − E for a target eigenvalue E.
    pub fn bias(&self, e_target: f64) -> f64 {
        match self.e_bar {
            MeanShift::Exact => 0.0,
            MeanShift::Mean(e_bar) => e_bar - e_target,
        }
    }
}

#[derive(Debug, Deserialize)]
struct NoiseRow {
    noise_strength: f64,
    #[serde(rename = "E_bar")]
    e_bar: String,
    #[serde(rename = "Delta_E")]
    delta_e: f64,
}

/// Noise strength → (Ē, ΔE) response, read from CSV with header
/// `noise_strength,E_bar,Delta_E`. `E_bar` is a number or `exact`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTable {
    pub entries: Vec<NoiseEntry>,
}

impl NoiseTable {
    pub fn new(entries: Vec<NoiseEntry>) -> Result<Self> {
        for e in &entries {
            if !(e.delta_e >= 0.0) || !e.delta_e.is_finite() {
                return Err(Error::InvalidParameter(format!("ΔE must be finite and non-negative, got {}", e.delta_e)));
            }
            if !e.noise_strength.is_finite() {
                return Err(Error::InvalidParameter("non-finite noise strength".into()));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut entries = Vec::new();
        for row in rdr.deserialize::<NoiseRow>() {
            let row = row?;
            let e_bar = if row.e_bar.eq_ignore_ascii_case("exact") {
                MeanShift::Exact
            } else {
                MeanShift::Mean(row.e_bar.parse().map_err(|_| {
                    Error::InvalidParameter(format!("E_bar must be a number or `exact`, got {:?}", row.e_bar))
                })?)
            };
            entries.push(NoiseEntry { noise_strength: row.noise_strength, e_bar, delta_e: row.delta_e });
        }
        Self::new(entries)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// Entry whose strength matches within a relative 1e-12.
    pub fn lookup(&self, strength: f64) -> Result<&NoiseEntry> {
        self.entries
            .iter()
            .find(|e| (e.noise_strength - strength).abs() <= 1e-12 * strength.abs().max(1.0))
            .ok_or(Error::MissingNoiseEntry(strength))
    }
}

/// Normal(E_k + (Ē − E_target), ΔE). With ΔE = 0 the mean is returned and
/// the generator is left untouched.
pub fn noisy_energy_sample<R: Rng + ?Sized>(e_k: f64, e_target: f64, entry: &NoiseEntry, rng: &mut R) -> Result<f64> {
    let mean = e_k + entry.bias(e_target);
    if entry.delta_e == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, entry.delta_e).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(normal.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PeMode {
    ExactSampling,
    GaussianNoise { e_bar: MeanShift, delta_e: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeConfig {
    pub q: u32,
    #[serde(flatten)]
    pub mode: PeMode,
}

impl PeConfig {
    pub fn exact(q: u32) -> Result<Self> {
        check_q(q, MAX_ANCILLAE)?;
        Ok(Self { q, mode: PeMode::ExactSampling })
    }

    pub fn gaussian(q: u32, entry: &NoiseEntry) -> Result<Self> {
        check_q(q, MAX_ANCILLAE)?;
        if !(entry.delta_e >= 0.0) {
            return Err(Error::InvalidParameter(format!("ΔE must be non-negative, got {}", entry.delta_e)));
        }
        Ok(Self { q, mode: PeMode::GaussianNoise { e_bar: entry.e_bar, delta_e: entry.delta_e } })
    }

    /// One estimate of eigenvalue `e_k`; `e_target` is only used by the
    /// Gaussian mode's mean shift.
    pub fn sample<R: Rng + ?Sized>(&self, e_k: f64, e_target: f64, rng: &mut R) -> Result<f64> {
        match self.mode {
            PeMode::ExactSampling => pe_sample_energy(energy_to_phase(e_k)?, self.q, rng),
            PeMode::GaussianNoise { e_bar, delta_e } => {
                let entry = NoiseEntry { noise_strength: 0.0, e_bar, delta_e };
                noisy_energy_sample(e_k, e_target, &entry, rng)
            }
        }
    }
}
