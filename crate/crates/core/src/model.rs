//! XXZ Hamiltonian with open boundaries, restricted to one magnetization
//! sector, and exact propagation through its eigendecomposition.
//!
//! ```text
//! H = J Σ_{i<N-1} [σˣᵢσˣᵢ₊₁ + σʸᵢσʸᵢ₊₁ + Δ σᶻᵢσᶻᵢ₊₁] + h Σᵢ σᶻᵢ
//! ```
//!
//! In the computational basis the sector matrix is real symmetric: hopping
//! terms contribute `2J` between configurations related by moving one
//! excitation across a bond, the remaining terms are diagonal.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Exchange constant; sets the frequency unit.
    #[serde(default = "one")]
    pub j: f64,
    /// Anisotropy of the `σᶻσᶻ` coupling.
    #[serde(default)]
    pub delta: f64,
    /// Uniform longitudinal field.
    #[serde(default)]
    pub h: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            j: 1.0,
            delta: 0.0,
            h: 0.0,
        }
    }
}

impl ModelParams {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("J", self.j), ("Delta", self.delta), ("h", self.h)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Sector Hamiltonian together with `H = V diag(λ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SpectralHamiltonian<T: Real> {
    basis: Arc<SectorBasis>,
    params: ModelParams,
    matrix: DMatrix<T>,
    eigenvalues: DVector<T>,
    eigenvectors: DMatrix<T>,
    // Vᵀ, so that rows of V are contiguous columns here.
    eigenvectors_t: DMatrix<T>,
}

impl<T: Real> SpectralHamiltonian<T> {
    pub fn new(basis: Arc<SectorBasis>, params: ModelParams) -> Result<Self> {
        params.validate()?;
        let matrix = sector_matrix::<T>(&basis, &params)?;
        Self::from_matrix(basis, params, matrix)
    }

    /// Decompose an arbitrary real symmetric sector matrix. Used for test
    /// Hamiltonians (e.g. `H = 0`) that are not of XXZ form.
    pub fn from_matrix(
        basis: Arc<SectorBasis>,
        params: ModelParams,
        matrix: DMatrix<T>,
    ) -> Result<Self> {
        let d = basis.dimension();
        if matrix.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{d}"),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let tol = T::default_epsilon() * T::lit(16.0);
        let eigen = SymmetricEigen::try_new(matrix.clone(), tol, EIGEN_MAX_ITER)
            .ok_or_else(|| Error::Decomposition(format!("no convergence for d = {d}")))?;

        let reconstructed = &eigen.eigenvectors
            * DMatrix::from_diagonal(&eigen.eigenvalues)
            * eigen.eigenvectors.transpose();
        let scale = matrix.norm().max(T::one());
        let err = ((reconstructed - &matrix).norm() / scale).as_f64();
        if !(err <= T::RECONSTRUCTION_TOL) {
            return Err(Error::Decomposition(format!(
                "reconstruction error {err:.3e} exceeds {:.1e}",
                T::RECONSTRUCTION_TOL
            )));
        }

        let eigenvectors_t = eigen.eigenvectors.transpose();
        Ok(Self {
            basis,
            params,
            matrix,
            eigenvalues: eigen.eigenvalues,
            eigenvectors: eigen.eigenvectors,
            eigenvectors_t,
        })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// Columns are eigenvectors.
    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    /// Transposed eigenvector matrix; column `k` holds row `k` of `V`.
    pub fn eigenvectors_transposed(&self) -> &DMatrix<T> {
        &self.eigenvectors_t
    }

    /// Relative Frobenius error of `V diag(λ) Vᵀ` against the stored matrix.
    pub fn reconstruction_error(&self) -> f64 {
        let r = &self.eigenvectors
            * DMatrix::from_diagonal(&self.eigenvalues)
            * &self.eigenvectors_t;
        ((r - &self.matrix).norm() / self.matrix.norm().max(T::one())).as_f64()
    }

    /// `exp(-iλₖ t)` for every eigenvalue.
    pub fn phases(&self, duration: f64) -> DVector<Complex<T>> {
        let t = T::lit(duration);
        self.eigenvalues
            .map(|lambda| T::cis(-(lambda * t)))
    }

    /// Dense `U(t) = V diag(exp(-iλt)) Vᵀ`.
    pub fn propagator(&self, duration: f64) -> DMatrix<Complex<T>> {
        let v = self.eigenvectors.map(|x| Complex::new(x, T::zero()));
        let mut vp = v.clone();
        for (k, phase) in self.phases(duration).iter().enumerate() {
            for x in vp.column_mut(k).iter_mut() {
                *x *= *phase;
            }
        }
        vp * v.transpose()
    }

    /// Energy expectation `Tr(Hρ)`.
    pub fn energy(&self, rho: &DensityMatrix<T>) -> Result<T> {
        self.check_state(rho)?;
        let m = rho.elements();
        let d = self.dimension();
        let mut acc = T::zero();
        for k in 0..d {
            for l in 0..d {
                acc += self.matrix[(k, l)] * m[(l, k)].re;
            }
        }
        Ok(acc)
    }

    pub(crate) fn check_state(&self, rho: &DensityMatrix<T>) -> Result<()> {
        if !self.basis.same_sector(rho.basis()) {
            return Err(Error::DimensionMismatch {
                expected: format!(
                    "sector (N = {}, q = {})",
                    self.basis.n_sites(),
                    self.basis.n_excitations()
                ),
                found: format!(
                    "sector (N = {}, q = {})",
                    rho.basis().n_sites(),
                    rho.basis().n_excitations()
                ),
            });
        }
        Ok(())
    }
}

/// Real symmetric sector matrix of the XXZ chain.
pub fn sector_matrix<T: Real>(basis: &SectorBasis, params: &ModelParams) -> Result<DMatrix<T>> {
    let d = basis.dimension();
    let n = basis.n_sites();
    let mut m = DMatrix::<T>::zeros(d, d);
    let hop = T::lit(2.0 * params.j);
    for bond in 0..n - 1 {
        for (k, l) in basis.hop_elements(bond)? {
            m[(k, l)] += hop;
        }
    }
    for k in 0..d {
        let zz: i32 = (0..n - 1)
            .map(|i| i32::from(basis.z_sign(k, i) * basis.z_sign(k, i + 1)))
            .sum();
        let z: i32 = (0..n).map(|i| i32::from(basis.z_sign(k, i))).sum();
        m[(k, k)] = T::lit(params.j * params.delta * f64::from(zz) + params.h * f64::from(z));
    }
    Ok(m)
}

/// `U ρ U†` over `duration`, evaluated in the eigenbasis of `h`.
pub fn propagate<T: Real>(
    h: &SpectralHamiltonian<T>,
    rho: &DensityMatrix<T>,
    duration: f64,
) -> Result<DensityMatrix<T>> {
    h.check_state(rho)?;
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::invalid(format!(
            "propagation time must be finite and non-negative, got {duration}"
        )));
    }
    let mut out = rho.clone();
    if duration > 0.0 {
        propagate_in_place(h, out.elements_mut(), duration);
    }
    Ok(out)
}

pub(crate) fn propagate_in_place<T: Real>(
    h: &SpectralHamiltonian<T>,
    rho: &mut DMatrix<Complex<T>>,
    duration: f64,
) {
    let v = h.eigenvectors.map(|x| Complex::new(x, T::zero()));
    let vt = v.transpose();
    let mut tilde = &vt * &*rho * &v;
    let phases = h.phases(duration);
    let d = phases.len();
    for l in 0..d {
        let pl = phases[l].conj();
        for k in 0..d {
            tilde[(k, l)] *= phases[k] * pl;
        }
    }
    *rho = v * tilde * vt;
}
