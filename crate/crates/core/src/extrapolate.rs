//! Weights that cancel every error monomial up to a chosen total degree.
//!
//! For perturbation columns δ_k ∈ ℝ^N the design matrix X has one row per
//! exponent tuple i with |i| ≤ p and entries X[i, k] = ∏_j δ_{j,k}^{i_j}.
//! Any λ with Xλ = e₀ makes Σ_k λ_k a'(δ_k) exact for polynomials of total
//! degree ≤ p, so the combination removes the error up to that order.
//!
//! Solvers work on a row-equilibrated copy of X (each row divided by its
//! largest magnitude). This leaves the solution set and the min-norm solution
//! unchanged for consistent systems, but keeps high-degree rows built from
//! small δ's from being lost to the relative rank cutoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{pinv_min_norm, RMatrix, DEFAULT_RANK_TOL};

/// Largest equilibrated residual for which a system counts as consistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;
/// Extra observables beyond the minimum, as a working margin.
pub const WORKING_MARGIN: usize = 10;

/// Binomial coefficient, exact for the sizes used here.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of exponent tuples over `n` parameters with total degree ≤ `p`.
pub fn count_monomials(n: usize, p: usize) -> usize {
    assert!(n >= 1, "need at least one parameter");
    (0..=p as u64).map(|q| binomial(n as u64 + q - 1, n as u64 - 1)).sum::<u128>() as usize
}

/// Exponent tuples of total degree ≤ p, graded, lexicographically descending
/// within each degree: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    pub n_params: usize,
    pub order: usize,
    pub tuples: Vec<Vec<u32>>,
}

fn push_compositions(total: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if slots == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        push_compositions(total - first, slots - 1, prefix, out);
        prefix.pop();
    }
}

impl MonomialBasis {
    pub fn new(n_params: usize, order: usize) -> Result<Self> {
        if n_params == 0 {
            return Err(Error::InvalidParameter("need at least one perturbation parameter".into()));
        }
        let mut tuples = Vec::with_capacity(count_monomials(n_params, order));
        let mut prefix = Vec::with_capacity(n_params);
        for q in 0..=order as u32 {
            push_compositions(q, n_params, &mut prefix, &mut tuples);
        }
        Ok(Self { n_params, order, tuples })
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn degree(&self, row: usize) -> u32 {
        self.tuples[row].iter().sum()
    }

    /// Evaluate every monomial at one point.
    pub fn evaluate(&self, delta: &[f64]) -> Vec<f64> {
        self.tuples
            .iter()
            .map(|t| t.iter().zip(delta).map(|(&e, &d)| d.powi(e as i32)).product())
            .collect()
    }

    /// s × m design matrix for the N × m delta matrix.
    pub fn design_matrix(&self, deltas: &RMatrix) -> Result<RMatrix> {
        if deltas.nrows() != self.n_params {
            return Err(Error::LengthMismatch { expected: self.n_params, got: deltas.nrows() });
        }
        let m = deltas.ncols();
        let mut x = RMatrix::zeros(self.len(), m);
        for k in 0..m {
            let col: Vec<f64> = deltas.column(k).iter().copied().collect();
            for (r, v) in self.evaluate(&col).into_iter().enumerate() {
                x[(r, k)] = v;
            }
        }
        Ok(x)
    }
}

/// Design matrix X and target b = (1, 0, ..., 0).
pub fn design_matrix(deltas: &RMatrix, p: usize) -> Result<(RMatrix, DVector<f64>)> {
    let basis = MonomialBasis::new(deltas.nrows(), p)?;
    let x = basis.design_matrix(deltas)?;
    let mut b = DVector::zeros(basis.len());
    b[0] = 1.0;
    Ok((x, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    MinL2,
    Nonnegative,
    ExactSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationWeights {
    pub lambda: Vec<f64>,
    pub regime: Regime,
    /// ‖Xλ − b‖_∞ on the unscaled system.
    pub residual: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_sha256: Option<String>,
}

impl MitigationWeights {
    fn new(lambda: Vec<f64>, regime: Regime, x: &RMatrix, b: &DVector<f64>, rank: usize) -> Self {
        let residual = residual_inf(x, b, &lambda);
        let l1_norm = lambda.iter().map(|l| l.abs()).sum();
        let l2_norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
        Self { lambda, regime, residual, l1_norm, l2_norm, rank, delta_sha256: None }
    }

    pub fn m(&self) -> usize {
        self.lambda.len()
    }

    pub fn sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// Σλ_k², the factor multiplying the per-sample variance.
    pub fn variance_factor(&self) -> f64 {
        self.l2_norm * self.l2_norm
    }

    /// Σ λ_k a'_k without building an estimate record.
    pub fn apply(&self, energies: &[f64]) -> Result<f64> {
        if energies.len() != self.lambda.len() {
            return Err(Error::LengthMismatch { expected: self.lambda.len(), got: energies.len() });
        }
        Ok(self.lambda.iter().zip(energies).map(|(l, e)| l * e).sum())
    }

    pub fn with_delta_hash(mut self, deltas: &RMatrix) -> Self {
        self.delta_sha256 = Some(delta_hash(deltas));
        self
    }
}

/// Hex SHA-256 of the delta matrix: shape, then entries column-major as
/// little-endian f64.
pub fn delta_hash(deltas: &RMatrix) -> String {
    let mut h = Sha256::new();
    h.update((deltas.nrows() as u64).to_le_bytes());
    h.update((deltas.ncols() as u64).to_le_bytes());
    for v in deltas.iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn residual_inf(x: &RMatrix, b: &DVector<f64>, lambda: &[f64]) -> f64 {
    let l = DVector::from_column_slice(lambda);
    (x * l - b).amax()
}

fn check_system(x: &RMatrix, b: &DVector<f64>) -> Result<()> {
    if x.nrows() != b.len() {
        return Err(Error::LengthMismatch { expected: x.nrows(), got: b.len() });
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidParameter("no observables to weight".into()));
    }
    if x.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite entry in the weight system".into()));
    }
    Ok(())
}

/// Row scales 1/max|row|; zero rows keep scale 1.
fn equilibrate(x: &RMatrix, b: &DVector<f64>) -> (RMatrix, DVector<f64>, Vec<f64>) {
    let scales: Vec<f64> = (0..x.nrows())
        .map(|r| {
            let m = x.row(r).amax();
            if m > 0.0 { m.recip() } else { 1.0 }
        })
        .collect();
    let xs = DMatrix::from_fn(x.nrows(), x.ncols(), |r, k| x[(r, k)] * scales[r]);
    let bs = DVector::from_fn(b.len(), |r, _| b[r] * scales[r]);
    (xs, bs, scales)
}

/// Minimum-ℓ² λ with Xλ = b, after truncating singular values below
/// `rank_tol · σ_max` of the equilibrated system.
pub fn solve_lambda_min_l2(x: &RMatrix, b: &DVector<f64>, rank_tol: f64) -> Result<MitigationWeights> {
    check_system(x, b)?;
    let (xs, bs, _) = equilibrate(x, b);
    let pinv = pinv_min_norm(&xs, rank_tol);
    let lambda = &pinv.matrix * &bs;
    let scaled_residual = (&xs * &lambda - &bs).amax();
    if !(scaled_residual <= CONSISTENCY_TOL) {
        return Err(Error::Infeasible { residual: scaled_residual, rank: pinv.rank });
    }
    Ok(MitigationWeights::new(lambda.iter().copied().collect(), Regime::MinL2, x, b, pinv.rank))
}

/// Direct solve for a square, non-singular system.
pub fn solve_lambda_exact(x: &RMatrix, b: &DVector<f64>) -> Result<MitigationWeights> {
    check_system(x, b)?;
    if !x.is_square() {
        return Err(Error::InvalidParameter(format!(
            "exact solve needs a square system, got {}×{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let (xs, bs, _) = equilibrate(x, b);
    let lambda = xs
        .clone()
        .lu()
        .solve(&bs)
        .ok_or(Error::Infeasible { residual: f64::INFINITY, rank: 0 })?;
    let scaled_residual = (&xs * &lambda - &bs).amax();
    if !(scaled_residual <= CONSISTENCY_TOL) {
        return Err(Error::Infeasible { residual: scaled_residual, rank: x.nrows() });
    }
    Ok(MitigationWeights::new(lambda.iter().copied().collect(), Regime::ExactSquare, x, b, x.nrows()))
}

/// Least-squares solution restricted to a subset of columns.
fn restricted_lstsq(a: &RMatrix, c: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(cols);
    &pinv_min_norm(&sub, 1e-13).matrix * c
}

/// Lawson–Hanson active-set NNLS: argmin ‖Aλ − c‖₂ subject to λ ≥ 0.
fn nnls(a: &RMatrix, c: &DVector<f64>) -> DVector<f64> {
    let m = a.ncols();
    let tol = 1e-12 * a.amax().max(1.0) * (a.nrows().max(m) as f64);
    let mut x = DVector::<f64>::zeros(m);
    let mut passive = vec![false; m];
    let max_outer = 3 * m + 10;
    for _ in 0..max_outer {
        let w = a.transpose() * (c - a * &x);
        let candidate = (0..m).filter(|&j| !passive[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate.filter(|&j| w[j] > tol) else { break };
        passive[t] = true;
        loop {
            let cols: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
            let s_p = restricted_lstsq(a, c, &cols);
            if s_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (i, &j) in cols.iter().enumerate() {
                    x[j] = s_p[i];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (i, &j) in cols.iter().enumerate() {
                if s_p[i] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - s_p[i]));
                }
            }
            for (i, &j) in cols.iter().enumerate() {
                x[j] += alpha * (s_p[i] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Nonnegative λ with Xλ = b. For p = 1 this exists exactly when the origin
/// lies in the convex hull of the delta columns, and then ‖λ‖₁ = Σλ = 1.
///
/// On failure the error carries a direction u over the non-constant rows
/// with u·x_k > 0 for every column x_k (rows beyond the first), i.e. a
/// half-space holding every column.
pub fn solve_lambda_nonnegative(x: &RMatrix, b: &DVector<f64>) -> Result<MitigationWeights> {
    check_system(x, b)?;
    let (xs, bs, scales) = equilibrate(x, b);
    let lambda = nnls(&xs, &bs);
    let r = &bs - &xs * &lambda;
    let scaled_residual = r.amax();
    if scaled_residual < CONSISTENCY_TOL {
        let rank = lambda.iter().filter(|&&l| l > 0.0).count();
        return Ok(MitigationWeights::new(lambda.iter().copied().collect(), Regime::Nonnegative, x, b, rank));
    }
    let direction = (1..x.nrows()).map(|row| -r[row] * scales[row]).collect();
    Err(Error::HullInfeasible { direction, residual: scaled_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigatedEstimate {
    pub value: f64,
    pub weights: MitigationWeights,
    pub energies: Vec<f64>,
    pub predicted_variance_factor: f64,
}

/// Σ λ_k a'_k with the weights and measured energies kept alongside.
pub fn combine(weights: &MitigationWeights, energies: &[f64]) -> Result<MitigatedEstimate> {
    let value = weights.apply(energies)?;
    Ok(MitigatedEstimate {
        value,
        weights: weights.clone(),
        energies: energies.to_vec(),
        predicted_variance_factor: weights.variance_factor(),
    })
}

/// RMS error floor √(‖λ‖₂²ΔE² + (Ē − E)²) for samples with spread ΔE and
/// mean Ē around a true value E.
pub fn noise_floor(weights: &MitigationWeights, delta_e: f64, e_bar: f64, e_true: f64) -> Result<f64> {
    if !(delta_e >= 0.0) {
        return Err(Error::InvalidParameter(format!("ΔE must be non-negative, got {delta_e}")));
    }
    let bias = e_bar - e_true;
    Ok((weights.variance_factor() * delta_e * delta_e + bias * bias).sqrt())
}

/// How the delta columns are constrained, which fixes the attainable rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaStructure {
    /// No relation between the N parameters.
    Generic,
    /// Every column sums to zero, as for renormalised coefficients.
    SumZero,
}

/// Smallest m for which generic columns of the given structure make the
/// order-p system solvable: the rank of the design matrix.
pub fn structural_min_m(n: usize, p: usize, structure: DeltaStructure) -> usize {
    match structure {
        DeltaStructure::Generic => count_monomials(n, p),
        // Eliminating one parameter leaves all monomials in N − 1 variables.
        DeltaStructure::SumZero if n == 1 => 1,
        DeltaStructure::SumZero => count_monomials(n - 1, p),
    }
}

/// Adds columns from `next_column` one at a time until the order-p system
/// becomes consistent; returns that m and the columns used.
pub fn min_m_for_order<F>(mut next_column: F, p: usize, max_m: usize) -> Result<(usize, RMatrix)>
where
    F: FnMut() -> Option<Vec<f64>>,
{
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < max_m {
        let Some(col) = next_column() else { break };
        if let Some(first) = cols.first() {
            if first.len() != col.len() {
                return Err(Error::LengthMismatch { expected: first.len(), got: col.len() });
            }
        }
        cols.push(col);
        let n = cols[0].len();
        let deltas = DMatrix::from_fn(n, cols.len(), |i, k| cols[k][i]);
        let (x, b) = design_matrix(&deltas, p)?;
        if solve_lambda_min_l2(&x, &b, DEFAULT_RANK_TOL).is_ok() {
            return Ok((cols.len(), deltas));
        }
    }
    Err(Error::Exhausted { wanted: max_m, attempts: cols.len() })
}

/// Phase-estimation calls needed: (m_min + 10)/β, rounded up.
pub fn pe_call_budget(n: usize, p: usize, beta: f64, structure: DeltaStructure) -> Result<u64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("overlap β must lie in (0, 1], got {beta}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one perturbation parameter".into()));
    }
    let m = (structural_min_m(n, p, structure) + WORKING_MARGIN) as f64;
    Ok((m / beta - 1e-9).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col_matrix(cols: &[&[f64]]) -> RMatrix {
        DMatrix::from_fn(cols[0].len(), cols.len(), |i, k| cols[k][i])
    }

    fn solve(deltas: &RMatrix, p: usize) -> Result<MitigationWeights> {
        let (x, b) = design_matrix(deltas, p)?;
        solve_lambda_min_l2(&x, &b, DEFAULT_RANK_TOL)
    }

    #[test]
    fn monomial_counts() {
        for p in 0..6 {
            assert_eq!(count_monomials(1, p), p + 1);
        }
        assert_eq!(count_monomials(2, 2), 6);
        assert_eq!(count_monomials(16, 1), 17);
        assert_eq!(count_monomials(16, 2), 153);
    }

    #[test]
    fn tuple_order() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let expect: Vec<Vec<u32>> = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]];
        assert_eq!(basis.tuples, expect);
        let b3 = MonomialBasis::new(3, 1).unwrap();
        assert_eq!(b3.tuples, vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn vandermonde_design() {
        let d = col_matrix(&[&[-1.0], &[1.0], &[2.0]]);
        let (x, b) = design_matrix(&d, 2).unwrap();
        assert_eq!(x, RMatrix::from_row_slice(3, 3, &[1., 1., 1., -1., 1., 2., 1., 1., 4.]));
        assert_eq!(b.as_slice(), &[1.0, 0.0, 0.0]);
        let (x0, _) = design_matrix(&d, 0).unwrap();
        assert_eq!(x0, RMatrix::from_element(1, 3, 1.0));
    }

    #[test]
    fn three_point_weights() {
        let d = col_matrix(&[&[-1.0], &[1.0], &[2.0]]);
        let w = solve(&d, 2).unwrap();
        let expect = [1.0 / 3.0, 1.0, -1.0 / 3.0];
        for (l, e) in w.lambda.iter().zip(expect) {
            assert!((l - e).abs() < 1e-12);
        }
        assert_eq!(w.regime, Regime::MinL2);
        let (x, b) = design_matrix(&d, 2).unwrap();
        let ex = solve_lambda_exact(&x, &b).unwrap();
        for (l, e) in ex.lambda.iter().zip(expect) {
            assert!((l - e).abs() < 1e-12);
        }
    }

    #[test]
    fn order_zero_is_uniform_average() {
        let d = col_matrix(&[&[0.1, 0.3], &[-0.2, 0.5], &[0.7, 0.0], &[0.4, -0.9]]);
        let w = solve(&d, 0).unwrap();
        assert!(w.lambda.iter().all(|l| (l - 0.25).abs() < 1e-14));
    }

    #[test]
    fn too_few_points_infeasible() {
        let d = col_matrix(&[&[-1.0], &[1.0]]);
        assert!(matches!(solve(&d, 2), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn nonneg_examples() {
        let d = col_matrix(&[&[-1.0], &[1.0]]);
        let (x, b) = design_matrix(&d, 1).unwrap();
        let w = solve_lambda_nonnegative(&x, &b).unwrap();
        assert!((w.lambda[0] - 0.5).abs() < 1e-14 && (w.lambda[1] - 0.5).abs() < 1e-14);
        assert!((w.l1_norm - 1.0).abs() < 1e-14);

        let d = col_matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, -1.0]]);
        let (x, b) = design_matrix(&d, 1).unwrap();
        let w = solve_lambda_nonnegative(&x, &b).unwrap();
        assert!(w.lambda.iter().all(|l| (l - 1.0 / 3.0).abs() < 1e-12));
        assert_eq!(w.regime, Regime::Nonnegative);
    }

    #[test]
    fn nonneg_reports_separating_direction() {
        let d = col_matrix(&[&[1.0, 0.2], &[0.5, -0.3], &[2.0, 1.0]]);
        let (x, b) = design_matrix(&d, 1).unwrap();
        match solve_lambda_nonnegative(&x, &b) {
            Err(Error::HullInfeasible { direction, .. }) => {
                assert_eq!(direction.len(), 2);
                for k in 0..3 {
                    let dot = direction[0] * d[(0, k)] + direction[1] * d[(1, k)];
                    assert!(dot > 0.0, "column {k}: {dot}");
                }
            }
            other => panic!("expected hull infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn combine_examples() {
        let d = col_matrix(&[&[-1.0], &[1.0], &[2.0]]);
        let w = solve(&d, 2).unwrap();
        let e = -1.2345;
        assert!((combine(&w, &[e, e, e]).unwrap().value - e).abs() < 1e-14);
        // a + αδ + βδ²
        let (a, alpha, beta) = (0.75, -0.4, 2.5);
        let energies: Vec<f64> = [-1.0, 1.0, 2.0].iter().map(|d| a + alpha * d + beta * d * d).collect();
        let est = combine(&w, &energies).unwrap();
        assert!((est.value - a).abs() < 1e-13);
        assert!((est.predicted_variance_factor - (1.0 / 9.0 + 1.0 + 1.0 / 9.0)).abs() < 1e-13);
        assert!(matches!(combine(&w, &[1.0]), Err(Error::LengthMismatch { .. })));

        let single = solve(&col_matrix(&[&[0.3]]), 0).unwrap();
        assert_eq!(combine(&single, &[0.42]).unwrap().value, 0.42);
    }

    #[test]
    fn noise_floor_closed_form() {
        let single = solve(&col_matrix(&[&[0.3]]), 0).unwrap();
        assert_eq!(noise_floor(&single, 0.0, 0.5, 0.5).unwrap(), 0.0);
        assert!((noise_floor(&single, 0.1, 0.5, 0.5).unwrap() - 0.1).abs() < 1e-15);
        assert!((noise_floor(&single, 0.3, 0.9, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(noise_floor(&single, -0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn step_set_norms() {
        // Weight norms for the Trotter step sets {-p/2..p/2+1}·δt.
        let norms: Vec<f64> = [(0usize, vec![1.0]), (2, vec![-1.0, 1.0, 2.0]), (4, vec![-2.0, -1.0, 1.0, 2.0, 3.0])]
            .into_iter()
            .map(|(p, pts)| {
                let d = DMatrix::from_row_slice(1, pts.len(), &pts);
                solve(&d, p).unwrap().l2_norm
            })
            .collect();
        assert!((norms[0] - 1.0).abs() < 1e-14);
        assert!((norms[1] - (11.0f64 / 9.0).sqrt()).abs() < 1e-12);
        // Lagrange weights at 0 for nodes -2,-1,1,2,3: 1/10, -1/2, 1, 1/2, -1/10.
        let l4 = (0.01f64 + 0.25 + 1.0 + 0.25 + 0.01).sqrt();
        assert!((norms[2] - l4).abs() < 1e-12, "{}", norms[2]);
    }

    #[test]
    fn sum_zero_rank_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let cols: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-3..1e-3)).collect();
                let mean = v.iter().sum::<f64>() / n as f64;
                v.iter_mut().for_each(|x| *x -= mean);
                v
            })
            .collect();
        let d = DMatrix::from_fn(n, cols.len(), |i, k| cols[k][i]);
        let (x, _) = design_matrix(&d, 1).unwrap();
        let degree_one_sum: f64 = (0..x.ncols()).map(|k| (1..=n).map(|r| x[(r, k)]).sum::<f64>().abs()).fold(0.0, f64::max);
        assert!(degree_one_sum < 1e-15);
        let rank = pinv_min_norm(&equilibrate(&x, &DVector::zeros(x.nrows())).0, DEFAULT_RANK_TOL).rank;
        assert_eq!(rank, count_monomials(n, 1) - 1);
    }

    #[test]
    fn min_m_generic_and_sum_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in 0..5 {
            let (m, _) = min_m_for_order(|| Some(vec![rng.random_range(-1.0..1.0)]), p, 50).unwrap();
            assert_eq!(m, p + 1);
        }
        for n in [3usize, 6] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let gen = || {
                let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-0.01..0.01)).collect();
                let mean = v.iter().sum::<f64>() / n as f64;
                v.iter_mut().for_each(|x| *x -= mean);
                Some(v)
            };
            let (m, _) = min_m_for_order(gen, 1, 100).unwrap();
            assert_eq!(m, n);
            assert_eq!(structural_min_m(n, 1, DeltaStructure::SumZero), n);
        }
        assert!(matches!(min_m_for_order(|| None, 1, 10), Err(Error::Exhausted { .. })));
    }

    #[test]
    fn budgets() {
        assert_eq!(pe_call_budget(1, 4, 1.0, DeltaStructure::Generic).unwrap(), 15);
        assert_eq!(pe_call_budget(1, 4, 0.5, DeltaStructure::Generic).unwrap(), 30);
        assert_eq!(pe_call_budget(16, 1, 1.0, DeltaStructure::SumZero).unwrap(), 26);
        assert_eq!(pe_call_budget(16, 1, 1.0, DeltaStructure::Generic).unwrap(), 27);
        assert!(pe_call_budget(2, 1, 0.0, DeltaStructure::Generic).is_err());
        assert!(pe_call_budget(2, 1, 1.5, DeltaStructure::Generic).is_err());
    }

    #[test]
    fn weights_json_carries_hash() {
        let d = col_matrix(&[&[-1.0], &[1.0], &[2.0]]);
        let w = solve(&d, 2).unwrap().with_delta_hash(&d);
        let json = serde_json::to_value(&w).unwrap();
        assert_eq!(json["regime"], "min_l2");
        assert_eq!(json["delta_sha256"].as_str().unwrap().len(), 64);
        let back: MitigationWeights = serde_json::from_value(json).unwrap();
        assert_eq!(back, w);
        // The hash depends on the shape, not just the values.
        assert_ne!(delta_hash(&d), delta_hash(&DMatrix::from_row_slice(3, 1, &[-1.0, 1.0, 2.0])));
    }

    #[test]
    fn square_solve_requires_square() {
        let d = col_matrix(&[&[-1.0], &[1.0], &[2.0], &[3.0]]);
        let (x, b) = design_matrix(&d, 2).unwrap();
        assert!(solve_lambda_exact(&x, &b).is_err());
    }
}
