//! Effectively implemented Hamiltonians and their known perturbation
//! parameters.
//!
//! Two sources of algorithmic error are modelled:
//!
//! * first-order Trotterisation with step δt, where the implemented
//!   Hamiltonian is H' = (i/δt)·log(e^{-iH_A δt} e^{-iH_B δt}) and the single
//!   perturbation parameter is δt itself;
//! * qubitisation with μ-bit state preparation, where each LCU coefficient is
//!   snapped to the 2^-μ grid, shifted by an offset in {-1, 0, +1}·2^-μ and
//!   renormalised, giving one parameter δ_i = c'_i − c_i per term.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SpinHamiltonian;
use crate::linalg::{eig_hermitian, expm_from_spectrum, logm_principal, CMatrix, RMatrix, Spectrum};

/// Redraw allowance per requested column in [`sample_offset_sets`].
pub const REDRAW_BUDGET_PER_COLUMN: usize = 100;

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Trotter { dt: f64 },
    Qubitised { epsilon: Vec<f64>, mu: u32 },
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveHamiltonian {
    #[serde(skip)]
    pub matrix: CMatrix,
    pub provenance: Provenance,
    pub delta: Vec<f64>,
}

impl EffectiveHamiltonian {
    pub fn ground_energy(&self) -> Result<f64> {
        crate::linalg::ground_energy(&self.matrix)
    }
}

/// Cached spectra of the two halves of a split Hamiltonian, so repeated
/// Trotter steps only cost two rotations, a product and a logarithm.
#[derive(Debug, Clone)]
pub struct TrotterSplit {
    a: Spectrum,
    b: Spectrum,
}

impl TrotterSplit {
    pub fn new(h_a: &CMatrix, h_b: &CMatrix) -> Result<Self> {
        if h_a.shape() != h_b.shape() {
            return Err(Error::InvalidParameter("split halves differ in dimension".into()));
        }
        Ok(Self { a: eig_hermitian(h_a)?, b: eig_hermitian(h_b)? })
    }

    pub fn from_hamiltonians(h_a: &SpinHamiltonian, h_b: &SpinHamiltonian) -> Result<Self> {
        Self::new(&h_a.dense_matrix()?, &h_b.dense_matrix()?)
    }

    /// Sum of the two halves, i.e. the target Hamiltonian.
    pub fn target(&self) -> CMatrix {
        self.a.apply(|l| Complex64::new(l, 0.0)) + self.b.apply(|l| Complex64::new(l, 0.0))
    }

    /// H̃(δt). A negative step is realised as H̃(|δt|) with the halves
    /// applied in swapped order.
    pub fn effective(&self, dt: f64) -> Result<EffectiveHamiltonian> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("Trotter step must be finite and non-zero, got {dt}")));
        }
        let step = dt.abs();
        let (first, second) = if dt > 0.0 { (&self.a, &self.b) } else { (&self.b, &self.a) };
        let u = expm_from_spectrum(first, step) * expm_from_spectrum(second, step);
        let log = logm_principal(&u)?;
        let h = log.map(|z| z * Complex64::new(0.0, 1.0 / step));
        let matrix = (&h + h.adjoint()).scale(0.5);
        Ok(EffectiveHamiltonian { matrix, provenance: Provenance::Trotter { dt }, delta: vec![dt] })
    }
}

pub fn trotter_effective(h_a: &SpinHamiltonian, h_b: &SpinHamiltonian, dt: f64) -> Result<EffectiveHamiltonian> {
    TrotterSplit::from_hamiltonians(h_a, h_b)?.effective(dt)
}

/// {k·δt_min : k ∈ [-p/2, p/2 + 1], k ≠ 0}, ascending. Needs even `p`.
pub fn trotter_delta_set(p: usize, dt_min: f64) -> Result<Vec<f64>> {
    if !p.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "Trotter step sets are built for even orders only (got p = {p}); \
             the negative half of the set mirrors the positive one"
        )));
    }
    if !(dt_min > 0.0) || !dt_min.is_finite() {
        return Err(Error::InvalidParameter(format!("δt_min must be positive, got {dt_min}")));
    }
    let half = (p / 2) as i64;
    Ok((-half..=half + 1).filter(|&k| k != 0).map(|k| k as f64 * dt_min).collect())
}

fn check_normalised(c: &[f64]) -> Result<()> {
    let total: f64 = c.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidParameter(format!("coefficients sum to {total}, expected 1")));
    }
    Ok(())
}

fn grid(mu: u32) -> f64 {
    (-(mu as f64)).exp2()
}

/// Round to the μ-bit grid, add the offsets and renormalise.
pub fn qubitise_coeffs(c: &[f64], mu: u32, epsilon: &[f64]) -> Result<Vec<f64>> {
    if epsilon.len() != c.len() {
        return Err(Error::LengthMismatch { expected: c.len(), got: epsilon.len() });
    }
    check_normalised(c)?;
    let step = grid(mu);
    let scale = step.recip();
    let mut out = Vec::with_capacity(c.len());
    for (i, (&ci, &ei)) in c.iter().zip(epsilon).enumerate() {
        let units = ei * scale;
        if !(units == 0.0 || units == 1.0 || units == -1.0) {
            return Err(Error::InvalidParameter(format!(
                "offset {ei} for coefficient {i} is not one of {{-2^-{mu}, 0, 2^-{mu}}}"
            )));
        }
        let value = (ci * scale).round() * step + ei;
        if value < 0.0 {
            return Err(Error::InvalidOffset { index: i, value });
        }
        out.push(value);
    }
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("all qubitised coefficients vanished".into()));
    }
    out.iter_mut().for_each(|x| *x /= total);
    Ok(out)
}

fn offsets_from_steps(steps: &[i8], mu: u32) -> Vec<f64> {
    let step = grid(mu);
    steps.iter().map(|&s| s as f64 * step).collect()
}

/// H' = Σ c'_i P_i for a Hamiltonian whose coefficients already sum to one.
pub fn qubitised_effective(h: &SpinHamiltonian, mu: u32, epsilon: &[f64]) -> Result<EffectiveHamiltonian> {
    let c = h.coefficients();
    let c_prime = qubitise_coeffs(&c, mu, epsilon)?;
    let matrix = h.with_coefficients(&c_prime)?.dense_matrix()?;
    let delta = c_prime.iter().zip(&c).map(|(a, b)| a - b).collect();
    Ok(EffectiveHamiltonian {
        matrix,
        provenance: Provenance::Qubitised { epsilon: epsilon.to_vec(), mu },
        delta,
    })
}

/// One drawn offset column, before any matrix is built.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetColumn {
    /// Offsets in units of 2^-μ, each in {-1, 0, 1}.
    pub steps: Vec<i8>,
    pub epsilon: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Draws distinct, valid offset columns for a normalised Hamiltonian.
///
/// Offsets are i.i.d. uniform over {-1, 0, +1}·2^-μ. Draws that push a
/// coefficient negative, or repeat an earlier column, are discarded.
#[derive(Debug, Clone)]
pub struct OffsetSampler {
    coefficients: Vec<f64>,
    mu: u32,
    seen: HashSet<Vec<i8>>,
}

impl OffsetSampler {
    pub fn new(h: &SpinHamiltonian, mu: u32) -> Result<Self> {
        let coefficients = h.coefficients();
        check_normalised(&coefficients)?;
        Ok(Self { coefficients, mu, seen: HashSet::new() })
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    /// Column for explicit steps; does not register it as seen.
    pub fn column(&self, steps: Vec<i8>) -> Result<OffsetColumn> {
        let epsilon = offsets_from_steps(&steps, self.mu);
        let coefficients = qubitise_coeffs(&self.coefficients, self.mu, &epsilon)?;
        let delta = coefficients.iter().zip(&self.coefficients).map(|(a, b)| a - b).collect();
        Ok(OffsetColumn { steps, epsilon, coefficients, delta })
    }

    /// Next fresh column, or `None` after `max_attempts` failed draws.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, max_attempts: usize) -> Option<OffsetColumn> {
        for _ in 0..max_attempts {
            let steps: Vec<i8> = (0..self.coefficients.len())
                .map(|_| match rng.random_range(0..3u8) {
                    0 => 0,
                    1 => -1,
                    _ => 1,
                })
                .collect();
            if self.seen.contains(&steps) {
                continue;
            }
            if let Ok(col) = self.column(steps) {
                self.seen.insert(col.steps.clone());
                return Some(col);
            }
        }
        None
    }

    /// `m` fresh columns within a total budget of `100·m` draws.
    pub fn draw_many<R: Rng + ?Sized>(&mut self, rng: &mut R, m: usize) -> Result<Vec<OffsetColumn>> {
        let budget = REDRAW_BUDGET_PER_COLUMN * m.max(1);
        let mut used = 0;
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let before = self.seen.len();
            let remaining = budget.saturating_sub(used);
            if remaining == 0 {
                return Err(Error::Exhausted { wanted: m, attempts: budget });
            }
            // Draw one attempt at a time so the budget is exact.
            match self.draw(rng, 1) {
                Some(col) => out.push(col),
                None => debug_assert_eq!(before, self.seen.len()),
            }
            used += 1;
        }
        Ok(out)
    }

    pub fn reset(&mut self) {
        self.seen.clear();
    }
}

/// The implemented observables A'_k and their delta columns (N × m).
#[derive(Debug, Clone)]
pub struct PerturbationSet {
    pub deltas: RMatrix,
    pub effective: Vec<EffectiveHamiltonian>,
    pub mu: Option<u32>,
    pub seed: Option<u64>,
}

impl PerturbationSet {
    pub fn new(effective: Vec<EffectiveHamiltonian>) -> Result<Self> {
        let columns: Vec<Vec<f64>> = effective.iter().map(|e| e.delta.clone()).collect();
        let deltas = delta_matrix(&columns)?;
        let mu = effective.iter().find_map(|e| match e.provenance {
            Provenance::Qubitised { mu, .. } => Some(mu),
            Provenance::Trotter { .. } => None,
        });
        Ok(Self { deltas, effective, mu, seed: None })
    }

    pub fn m(&self) -> usize {
        self.deltas.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.deltas.nrows()
    }

    pub fn record(&self) -> DeltaRecord {
        DeltaRecord {
            mu: self.mu,
            seed: self.seed,
            provenance: self.effective.iter().map(|e| e.provenance.clone()).collect(),
            deltas: (0..self.m()).map(|k| self.deltas.column(k).iter().copied().collect()).collect(),
        }
    }
}

/// Stack delta columns into an N × m matrix, checking the set invariants.
pub fn delta_matrix(columns: &[Vec<f64>]) -> Result<RMatrix> {
    let m = columns.len();
    if m == 0 {
        return Err(Error::InvalidParameter("a perturbation set needs at least one column".into()));
    }
    let n = columns[0].len();
    for col in columns {
        if col.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: col.len() });
        }
        if col.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite delta".into()));
        }
    }
    for (k, col) in columns.iter().enumerate() {
        if columns[..k].contains(col) {
            return Err(Error::InvalidParameter(format!("delta column {k} duplicates an earlier one")));
        }
    }
    Ok(DMatrix::from_fn(n, m, |i, k| columns[k][i]))
}

/// Serialisable form of a perturbation set: one delta array per observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    #[serde(default)]
    pub mu: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
    pub deltas: Vec<Vec<f64>>,
}

impl DeltaRecord {
    pub fn delta_matrix(&self) -> Result<RMatrix> {
        delta_matrix(&self.deltas)
    }
}

/// `m` distinct qubitised observables with independently drawn offsets.
pub fn sample_offset_sets<R: Rng + ?Sized>(h: &SpinHamiltonian, mu: u32, m: usize, rng: &mut R) -> Result<PerturbationSet> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let mut sampler = OffsetSampler::new(h, mu)?;
    let columns = sampler.draw_many(rng, m)?;
    let effective = columns
        .iter()
        .map(|col| {
            Ok(EffectiveHamiltonian {
                matrix: h.with_coefficients(&col.coefficients)?.dense_matrix()?,
                provenance: Provenance::Qubitised { epsilon: col.epsilon.clone(), mu },
                delta: col.delta.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut set = PerturbationSet::new(effective)?;
    set.mu = Some(mu);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Axis, PauliTerm};
    use crate::linalg::expm_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Every draw is zero, which maps to the zero offset.
    struct ZeroRng;

    impl rand::RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0);
        }
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn single_qubit(axis: Axis) -> SpinHamiltonian {
        SpinHamiltonian::from_terms(1, vec![PauliTerm::new(1.0, vec![(0, axis)])]).unwrap()
    }

    #[test]
    fn commuting_split_is_exact() {
        let z_only = SpinHamiltonian::from_terms(
            3,
            vec![
                PauliTerm::new(0.4, vec![(0, Axis::Z)]),
                PauliTerm::new(0.9, vec![(1, Axis::Z), (2, Axis::Z)]),
                PauliTerm::new(0.2, vec![(1, Axis::Z)]),
            ],
        )
        .unwrap();
        let (ha, hb) = z_only.split_even_odd();
        let split = TrotterSplit::from_hamiltonians(&ha, &hb).unwrap();
        for dt in [0.05, -0.3, 0.7] {
            let eff = split.effective(dt).unwrap();
            assert!(max_abs(&(eff.matrix - z_only.dense_matrix().unwrap())) < 1e-12);
        }
    }

    #[test]
    fn one_qubit_matches_product_then_log_oracle() {
        let (hx, hz) = (single_qubit(Axis::X), single_qubit(Axis::Z));
        let dt = 0.1;
        let eff = trotter_effective(&hx, &hz, dt).unwrap();
        // Oracle: closed-form 2×2 rotations, product, and the SU(2) logarithm.
        // e^{-iXdt}e^{-iZdt} = cos²dt I - i sin dt cos dt (X + Z) - sin²dt XZ, with XZ = -iY.
        // For U = cos φ I - i sin φ (n·σ): H' = (φ/dt)(n·σ).
        let (s, c) = (dt.sin(), dt.cos());
        let w = c * c; // scalar part
        let v = [s * c, -s * s, s * c]; // coefficients of -i(σx, σy, σz); XZ = -iY gives -s² on σy
        let sin_phi = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let phi = sin_phi.atan2(w);
        let n = v.map(|x| x / sin_phi);
        let co = |x: f64| Complex64::new(x * phi / dt, 0.0);
        let i = Complex64::i();
        let oracle = CMatrix::from_row_slice(
            2,
            2,
            &[co(n[2]), co(n[0]) - i * co(n[1]), co(n[0]) + i * co(n[1]), -co(n[2])],
        );
        assert!(max_abs(&(eff.matrix.clone() - oracle)) < 1e-12);
        assert_eq!(eff.delta, vec![dt]);

        // Sanity: exponentiating back reproduces the ordered product.
        let u = expm_unitary(&eff.matrix, dt).unwrap();
        let prod = expm_unitary(&hx.dense_matrix().unwrap(), dt).unwrap() * expm_unitary(&hz.dense_matrix().unwrap(), dt).unwrap();
        assert!(max_abs(&(u - prod)) < 1e-12);
    }

    #[test]
    fn negative_step_is_swapped_order() {
        let h = SpinHamiltonian::build_xyz(4, 3).unwrap();
        let (ha, hb) = h.split_even_odd();
        let forward = TrotterSplit::from_hamiltonians(&ha, &hb).unwrap();
        let swapped = TrotterSplit::from_hamiltonians(&hb, &ha).unwrap();
        for dt in [0.01, 0.1, 0.2] {
            let neg = forward.effective(-dt).unwrap();
            let sw = swapped.effective(dt).unwrap();
            assert!(max_abs(&(neg.matrix - sw.matrix)) < 1e-10);
            assert_eq!(neg.delta, vec![-dt]);
            assert_eq!(neg.provenance, Provenance::Trotter { dt: -dt });
        }
    }

    #[test]
    fn zero_step_rejected() {
        let (hx, hz) = (single_qubit(Axis::X), single_qubit(Axis::Z));
        assert!(matches!(trotter_effective(&hx, &hz, 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn step_reaching_branch_cut_is_rejected() {
        // e^{-iZπ} has both eigenvalues at -1.
        let z = single_qubit(Axis::Z).dense_matrix().unwrap();
        let split = TrotterSplit::new(&z, &CMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(split.effective(std::f64::consts::PI), Err(Error::BranchAmbiguity { .. })));
        assert!(split.effective(3.0).is_ok());
    }

    #[test]
    fn trotter_error_is_first_order() {
        let h = SpinHamiltonian::build_xyz(4, 8).unwrap();
        let (ha, hb) = h.split_even_odd();
        let split = TrotterSplit::from_hamiltonians(&ha, &hb).unwrap();
        let target = h.dense_matrix().unwrap();
        let err = |dt: f64| max_abs(&(split.effective(dt).unwrap().matrix - &target));
        let (e1, e2, e3) = (err(0.004), err(0.002), err(0.001));
        assert!((e2 / e1 - 0.5).abs() < 0.01, "{}", e2 / e1);
        assert!((e3 / e2 - 0.5).abs() < 0.01, "{}", e3 / e2);
    }

    #[test]
    fn delta_sets() {
        assert_eq!(trotter_delta_set(0, 0.1).unwrap(), vec![0.1]);
        assert_eq!(trotter_delta_set(2, 1.0).unwrap(), vec![-1.0, 1.0, 2.0]);
        assert_eq!(trotter_delta_set(4, 1.0).unwrap(), vec![-2.0, -1.0, 1.0, 2.0, 3.0]);
        let set = trotter_delta_set(6, 0.01).unwrap();
        assert_eq!(set.len(), 7);
        assert!(set.windows(2).all(|w| w[0] < w[1]));
        assert!(trotter_delta_set(3, 0.1).is_err());
        assert!(trotter_delta_set(2, 0.0).is_err());
        assert!(trotter_delta_set(2, -0.1).is_err());
    }

    #[test]
    fn rounding_examples() {
        // Already on the 2^-3 grid, no offsets: fixed point.
        let c = [0.125, 0.375, 0.5];
        assert_eq!(qubitise_coeffs(&c, 3, &[0.0; 3]).unwrap(), c.to_vec());
        // round(4·0.3)/4 = 1/4, round(4·0.7)/4 = 3/4; already sums to one.
        assert_eq!(qubitise_coeffs(&[0.3, 0.7], 2, &[0.0, 0.0]).unwrap(), vec![0.25, 0.75]);
        // With offsets (+1/4, -1/4): (0.5, 0.5).
        assert_eq!(qubitise_coeffs(&[0.3, 0.7], 2, &[0.25, -0.25]).unwrap(), vec![0.5, 0.5]);
        // Offsets (+1/4, 0): (0.5, 0.75) renormalised by 1.25.
        let c2 = qubitise_coeffs(&[0.3, 0.7], 2, &[0.25, 0.0]).unwrap();
        assert!((c2[0] - 0.4).abs() < 1e-15 && (c2[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn offsets_restricted_to_grid_steps() {
        assert!(matches!(qubitise_coeffs(&[0.3, 0.7], 2, &[0.1, 0.0]), Err(Error::InvalidParameter(_))));
        assert!(matches!(qubitise_coeffs(&[0.3, 0.7], 2, &[0.5, 0.0]), Err(Error::InvalidParameter(_))));
        assert!(matches!(qubitise_coeffs(&[0.3, 0.6], 2, &[0.0, 0.0]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn negative_coefficient_rejected() {
        // round(4·0.05) = 0, minus 1/4 goes negative.
        let res = qubitise_coeffs(&[0.05, 0.95], 2, &[-0.25, 0.0]);
        assert!(matches!(res, Err(Error::InvalidOffset { index: 0, .. })));
    }

    #[test]
    fn qubitised_on_grid_is_target() {
        let h = SpinHamiltonian::ising_from_coeffs(&[0.125, 0.25], &[0.375, 0.25]).unwrap();
        let eff = qubitised_effective(&h, 4, &[0.0; 4]).unwrap();
        assert_eq!(max_abs(&(eff.matrix - h.dense_matrix().unwrap())), 0.0);
        assert!(eff.delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn qubitised_ising_has_sixteen_zero_sum_parameters() {
        let h = SpinHamiltonian::build_ising(8, 2).unwrap().normalised().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = sample_offset_sets(&h, 6, 4, &mut rng).unwrap();
        assert_eq!(set.n_params(), 16);
        assert_eq!(set.m(), 4);
        for eff in &set.effective {
            assert_eq!(eff.delta.len(), 16);
            assert!(eff.delta.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn unnormalised_hamiltonian_rejected() {
        let h = SpinHamiltonian::build_ising(3, 2).unwrap();
        assert!(qubitised_effective(&h, 4, &[0.0; 6]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_offset_sets(&h, 4, 2, &mut rng).is_err());
    }

    #[test]
    fn forced_zero_offsets_give_best_implementable() {
        let h = SpinHamiltonian::build_ising(3, 5).unwrap().normalised().unwrap();
        let mut rng = ZeroRng;
        let set = sample_offset_sets(&h, 5, 1, &mut rng).unwrap();
        let best = qubitised_effective(&h, 5, &[0.0; 6]).unwrap();
        assert_eq!(set.effective[0].provenance, Provenance::Qubitised { epsilon: vec![0.0; 6], mu: 5 });
        assert_eq!(max_abs(&(set.effective[0].matrix.clone() - best.matrix)), 0.0);
        // The constant generator cannot produce a second distinct column.
        let mut rng = ZeroRng;
        assert!(matches!(sample_offset_sets(&h, 5, 2, &mut rng), Err(Error::Exhausted { wanted: 2, .. })));
    }

    #[test]
    fn sampled_columns_are_distinct_and_sum_to_zero() {
        let h = SpinHamiltonian::build_ising(4, 9).unwrap().normalised().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let set = sample_offset_sets(&h, 5, 30, &mut rng).unwrap();
        for k in 0..set.m() {
            let col = set.deltas.column(k);
            // Summation oracle: plain sequential sum of the column.
            let mut sum = 0.0;
            for i in 0..col.len() {
                sum += col[i];
            }
            assert!(sum.abs() < 1e-12);
            for j in 0..k {
                assert_ne!(set.deltas.column(j), col);
            }
        }
    }

    #[test]
    fn deltas_bounded_by_three_grid_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mu in 3..=10 {
            let h = SpinHamiltonian::build_ising(4, mu as u64).unwrap().normalised().unwrap();
            let mut sampler = match OffsetSampler::new(&h, mu) {
                Ok(s) => s,
                Err(e) => panic!("{e}"),
            };
            for col in sampler.draw_many(&mut rng, 40).unwrap() {
                let inf = col.delta.iter().map(|d| d.abs()).fold(0.0, f64::max);
                assert!(inf <= 3.0 * grid(mu), "mu = {mu}: {inf}");
                // Before renormalisation the offsets sit on the lattice j/2^μ.
                for e in &col.epsilon {
                    assert_eq!((e / grid(mu)).fract(), 0.0);
                }
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let h = SpinHamiltonian::build_ising(2, 1).unwrap().normalised().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut set = sample_offset_sets(&h, 4, 3, &mut rng).unwrap();
        set.seed = Some(2);
        let rec = set.record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: DeltaRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.delta_matrix().unwrap(), set.deltas);
        assert!(json.contains("\"kind\":\"qubitised\""));
    }

    #[test]
    fn duplicate_columns_rejected() {
        assert!(delta_matrix(&[vec![0.1], vec![0.1]]).is_err());
        assert!(delta_matrix(&[]).is_err());
        assert!(delta_matrix(&[vec![0.1, 0.2], vec![0.3]]).is_err());
    }
}
