//! Dense kernels: Hermitian eigendecomposition, unitary exponential,
//! principal logarithm of a unitary, and the SVD pseudoinverse.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-8;
/// Angular guard band around ±π for [`logm_principal`].
pub const BRANCH_GUARD: f64 = 1e-6;
/// Relative singular-value cut-off for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// V f(Λ) V† for a scalar function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let fj = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fj;
            }
        }
        scaled * v.adjoint()
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

fn check_hermitian(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidParameter(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    let dev = hermitian_deviation(a);
    if dev > HERMITIAN_TOL * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

fn symmetrised(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

fn sorted_spectrum(values: DVector<f64>, vectors: CMatrix) -> Spectrum {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = CMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    Spectrum { eigenvalues, eigenvectors }
}

pub fn eig_hermitian(a: &CMatrix) -> Result<Spectrum> {
    check_hermitian(a)?;
    let eig = symmetrised(a).symmetric_eigen();
    Ok(sorted_spectrum(eig.eigenvalues, eig.eigenvectors))
}

/// Ascending eigenvalues only. Real-valued input takes the cheaper real
/// symmetric path.
pub fn eigvals_hermitian(a: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(a)?;
    let mut values: Vec<f64> = if a.iter().all(|z| z.im == 0.0) {
        let re = RMatrix::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)].re + a[(j, i)].re));
        re.symmetric_eigenvalues().iter().copied().collect()
    } else {
        symmetrised(a).symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn ground_energy(a: &CMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(a)?[0])
}

/// e^{-iHt} through the eigendecomposition of `h`.
pub fn expm_unitary(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let spec = eig_hermitian(h)?;
    Ok(expm_from_spectrum(&spec, t))
}

pub fn expm_from_spectrum(spec: &Spectrum, t: f64) -> CMatrix {
    spec.apply(|lambda| Complex64::from_polar(1.0, -lambda * t))
}

/// Principal logarithm of a unitary matrix (a skew-Hermitian result).
///
/// Uses the Cayley transform C = i(I − U)(I + U)⁻¹, which is Hermitian with
/// eigenvalues tan(θ/2) for each eigenphase θ of U, so the phases come out of
/// a Hermitian eigensolve already on the principal branch.
pub fn logm_principal(u: &CMatrix) -> Result<CMatrix> {
    logm_principal_with_guard(u, BRANCH_GUARD)
}

pub fn logm_principal_with_guard(u: &CMatrix, guard: f64) -> Result<CMatrix> {
    if !u.is_square() {
        return Err(Error::InvalidParameter("logarithm of a non-square matrix".into()));
    }
    let n = u.nrows();
    let id = CMatrix::identity(n, n);
    let dev = max_abs(&(u.adjoint() * u - &id));
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let plus = &id + u;
    let minus = &id - u;
    let lu = plus.lu();
    let ratio = lu
        .solve(&minus)
        .ok_or(Error::BranchAmbiguity { phase: std::f64::consts::PI, guard })?;
    let cayley = symmetrised(&ratio.map(|z| z * Complex64::i()));
    let eig = cayley.symmetric_eigen();
    let spec = sorted_spectrum(eig.eigenvalues, eig.eigenvectors);
    let limit = std::f64::consts::PI - guard;
    for &c in &spec.eigenvalues {
        let theta = 2.0 * c.atan();
        if !theta.is_finite() || theta.abs() >= limit {
            return Err(Error::BranchAmbiguity { phase: theta, guard });
        }
    }
    Ok(spec.apply(|c| Complex64::new(0.0, 2.0 * c.atan())))
}

#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: RMatrix,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Moore–Penrose pseudoinverse; singular values at or below
/// `rank_tol · σ_max` are treated as zero.
pub fn pinv_min_norm(m: &RMatrix, rank_tol: f64) -> PseudoInverse {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return PseudoInverse { matrix: RMatrix::zeros(cols, rows), rank: 0, singular_values: vec![] };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rank_tol * sigma_max;
    let mut pinv = RMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            pinv += (v_t.row(k).transpose() * u.column(k).transpose()) / s;
        }
    }
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    PseudoInverse { matrix: pinv, rank, singular_values }
}
