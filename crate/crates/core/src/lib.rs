//! Richardson-style extrapolation of eigenvalues against fully known
//! algorithmic errors.
//!
//! Several perturbed observables A'_k = Ã(δ_k) with known perturbation
//! vectors δ_k are measured; weights λ chosen so that every monomial of the
//! δ's up to total degree `p` cancels give an estimate Σ λ_k a'_k of the
//! unperturbed eigenvalue that is accurate to order `p`.
//!
//! Modules:
//! - [`hamiltonian`]: Ising and XYZ spin chains as Pauli sums.
//! - [`linalg`]: dense eigen, exp, log and pseudoinverse kernels.
//! - [`error_models`]: Trotterised and qubitised effective Hamiltonians.
//! - [`extrapolate`]: monomial design matrix, weight solvers, combination.
//! - [`pe_sim`]: phase-estimation output distribution and noise surrogate.
//! - [`experiments`]: seeded end-to-end numerical studies.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod error_models;
pub mod experiments;
pub mod extrapolate;
pub mod hamiltonian;
pub mod linalg;
pub mod pe_sim;

pub use error::{Error, Result};
