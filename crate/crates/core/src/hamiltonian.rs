//! Periodic spin-chain Hamiltonians as weighted Pauli-string sums.
//!
//! Two families are provided, both on an `n`-site ring (site `n` wraps to 0):
//!
//!   Ising:  H = Σ a_i Z_i + Σ b_i X_i X_{i+1}
//!   XYZ:    H = Σ a_i Z_i + Σ (b_i X_i X_{i+1} + c_i Y_i Y_{i+1} + d_i Z_i Z_{i+1})
//!
//! Random coefficients are uniform on (0, 1) and drawn from a generator
//! seeded with the Hamiltonian's `seed`, in the order a, b, c, d (each
//! ascending in `i`).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Largest chain handled by [`SpinHamiltonian::dense_matrix`] unless overridden.
pub const DEFAULT_MAX_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ising,
    Xyz,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ising" => Ok(Model::Ising),
            "xyz" => Ok(Model::Xyz),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Ising => "ising",
            Model::Xyz => "xyz",
        })
    }
}

/// `coeff · ⊗ P_site`. The first operator's site is the term's chain index
/// `i` (for a bond this is the left site of `(i, i+1)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, Axis)>,
}

impl PauliTerm {
    pub fn new(coeff: f64, ops: Vec<(usize, Axis)>) -> Self {
        Self { coeff, ops }
    }

    /// Chain index used by the even/odd split.
    pub fn anchor(&self) -> usize {
        self.ops.first().map_or(0, |&(site, _)| site)
    }

    fn validate(&self, n_sites: usize) -> Result<()> {
        for (k, &(site, _)) in self.ops.iter().enumerate() {
            if site >= n_sites {
                return Err(Error::InvalidParameter(format!(
                    "site {site} outside chain of {n_sites}"
                )));
            }
            if self.ops[..k].iter().any(|&(s, _)| s == site) {
                return Err(Error::InvalidParameter(format!(
                    "two operators on site {site} in one term"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinHamiltonian {
    pub model: Option<Model>,
    #[serde(rename = "n")]
    pub n_sites: usize,
    pub seed: Option<u64>,
    pub terms: Vec<PauliTerm>,
}

fn bond(i: usize, n: usize, axis: Axis) -> Vec<(usize, Axis)> {
    vec![(i, axis), ((i + 1) % n, axis)]
}

fn check_chain(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSize { n, min: 2 });
    }
    Ok(())
}

impl SpinHamiltonian {
    /// Arbitrary term list; validates site ranges and one-operator-per-site.
    pub fn from_terms(n_sites: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSize { n: 0, min: 1 });
        }
        for t in &terms {
            t.validate(n_sites)?;
        }
        Ok(Self { model: None, n_sites, seed: None, terms })
    }

    pub fn build_ising(n: usize, seed: u64) -> Result<Self> {
        check_chain(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = draw_uniform(&mut rng, n);
        let b = draw_uniform(&mut rng, n);
        let mut h = Self::ising_from_coeffs(&a, &b)?;
        h.seed = Some(seed);
        Ok(h)
    }

    pub fn build_xyz(n: usize, seed: u64) -> Result<Self> {
        check_chain(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = draw_uniform(&mut rng, n);
        let b = draw_uniform(&mut rng, n);
        let c = draw_uniform(&mut rng, n);
        let d = draw_uniform(&mut rng, n);
        let mut h = Self::xyz_from_coeffs(&a, &b, &c, &d)?;
        h.seed = Some(seed);
        Ok(h)
    }

    pub fn build(model: Model, n: usize, seed: u64) -> Result<Self> {
        match model {
            Model::Ising => Self::build_ising(n, seed),
            Model::Xyz => Self::build_xyz(n, seed),
        }
    }

    /// Ising chain with explicit field (`a`) and coupling (`b`) coefficients.
    pub fn ising_from_coeffs(a: &[f64], b: &[f64]) -> Result<Self> {
        let n = a.len();
        check_chain(n)?;
        if b.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: b.len() });
        }
        let mut terms = Vec::with_capacity(2 * n);
        terms.extend(a.iter().enumerate().map(|(i, &c)| PauliTerm::new(c, vec![(i, Axis::Z)])));
        terms.extend(b.iter().enumerate().map(|(i, &c)| PauliTerm::new(c, bond(i, n, Axis::X))));
        Ok(Self { model: Some(Model::Ising), n_sites: n, seed: None, terms })
    }

    pub fn xyz_from_coeffs(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Self> {
        let n = a.len();
        check_chain(n)?;
        for v in [b, c, d] {
            if v.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: v.len() });
            }
        }
        let mut terms = Vec::with_capacity(4 * n);
        terms.extend(a.iter().enumerate().map(|(i, &x)| PauliTerm::new(x, vec![(i, Axis::Z)])));
        for (family, axis) in [(b, Axis::X), (c, Axis::Y), (d, Axis::Z)] {
            terms.extend(family.iter().enumerate().map(|(i, &x)| PauliTerm::new(x, bond(i, n, axis))));
        }
        Ok(Self { model: Some(Model::Xyz), n_sites: n, seed: None, terms })
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.coeff).collect()
    }

    /// Same operators, new coefficients (in term order).
    pub fn with_coefficients(&self, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != self.terms.len() {
            return Err(Error::LengthMismatch { expected: self.terms.len(), got: coeffs.len() });
        }
        let mut out = self.clone();
        for (t, &c) in out.terms.iter_mut().zip(coeffs) {
            t.coeff = c;
        }
        Ok(out)
    }

    /// Rescale so the coefficients sum to one.
    pub fn normalised(&self) -> Result<Self> {
        let total: f64 = self.terms.iter().map(|t| t.coeff).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coefficient sum {total} cannot be normalised"
            )));
        }
        let coeffs: Vec<f64> = self.terms.iter().map(|t| t.coeff / total).collect();
        self.with_coefficients(&coeffs)
    }

    /// Split into (H_A, H_B): terms whose chain index is even go to H_A,
    /// odd to H_B. Single-site Z terms follow their own site index.
    pub fn split_even_odd(&self) -> (Self, Self) {
        let (even, odd): (Vec<_>, Vec<_>) =
            self.terms.iter().cloned().partition(|t| t.anchor() % 2 == 0);
        let half = |terms| Self { model: self.model, n_sites: self.n_sites, seed: self.seed, terms };
        (half(even), half(odd))
    }

    pub fn dense_matrix(&self) -> Result<CMatrix> {
        self.dense_matrix_with_limit(DEFAULT_MAX_SITES)
    }

    /// Dense 2ⁿ×2ⁿ realisation. Site 0 is the most significant qubit, i.e.
    /// the left-most factor of the Kronecker product.
    pub fn dense_matrix_with_limit(&self, max_sites: usize) -> Result<CMatrix> {
        let n = self.n_sites;
        if n > max_sites {
            return Err(Error::TooLarge { n, limit: max_sites });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            add_pauli_term(&mut m, n, term);
        }
        Ok(m)
    }
}

fn draw_uniform<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| Open01.sample(rng)).collect()
}

/// Accumulate `coeff · P` into `m`. P maps |c⟩ to a phase times |c ⊕ flip⟩.
fn add_pauli_term(m: &mut CMatrix, n: usize, term: &PauliTerm) {
    let mut flip = 0usize;
    let mut z_mask = 0usize;
    let mut y_mask = 0usize;
    for &(site, axis) in &term.ops {
        let bit = 1usize << (n - 1 - site);
        match axis {
            Axis::X => flip |= bit,
            Axis::Y => {
                flip |= bit;
                y_mask |= bit;
            }
            Axis::Z => z_mask |= bit,
        }
    }
    let n_y = y_mask.count_ones();
    for col in 0..(1usize << n) {
        let row = col ^ flip;
        // Z contributes (-1)^{c}; Y contributes i·(-1)^{c} on its site.
        let sign_bits = (col & (z_mask | y_mask)).count_ones();
        let mut phase = if sign_bits.is_multiple_of(2) { Complex64::new(1.0, 0.0) } else { Complex64::new(-1.0, 0.0) };
        phase *= Complex64::i().powu(n_y);
        m[(row, col)] += phase * term.coeff;
    }
}
