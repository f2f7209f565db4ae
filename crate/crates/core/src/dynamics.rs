//! Single stochastic trajectory: exact unitary evolution between collisions,
//! a dephasing kick `ρ → σᶻᵢ ρ σᶻᵢ` at each collision, observables sampled
//! on a fixed grid.
//!
//! The collision unitary `exp(-i(π/2) σˣ_a ⊗ σᶻᵢ) = -i σˣ_a ⊗ σᶻᵢ` turns the
//! ancilla trace into conjugation by `σᶻᵢ`, whatever the ancilla state. In
//! the sector basis that is a sign flip of every coherence between
//! configurations that disagree on site `i`.
//!
//! Two state representations are available. [`Backend::Density`] evolves the
//! full density matrix in the site basis. [`Backend::PureState`] evolves a
//! state vector in the Hamiltonian eigenbasis; both the propagator and the
//! collision map pure states to pure states, so for the pure initial states
//! used here the two agree to rounding, and the vector form is cheaper by a
//! factor of the sector dimension.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::model::{propagate_in_place, SpectralHamiltonian};
use crate::noise::{CollisionSchedule, NoiseConfig, StreamSeed};
use crate::observables::{self, ObservableRecord};
use crate::scalar::Real;

/// Grid points between full positivity checks.
const SPOT_CHECK_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    basis: Arc<SectorBasis>,
    elements: DMatrix<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Wrap `elements`, checking shape, unit trace and Hermiticity.
    pub fn new(basis: Arc<SectorBasis>, elements: DMatrix<Complex<T>>) -> Result<Self> {
        let d = basis.dimension();
        if elements.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{d}"),
                found: format!("{}x{}", elements.nrows(), elements.ncols()),
            });
        }
        let rho = Self { basis, elements };
        let trace_err = (rho.trace().re - T::one()).abs().as_f64();
        if !(trace_err <= T::TRACE_TOL) {
            return Err(Error::invalid(format!("trace differs from 1 by {trace_err:.3e}")));
        }
        let herm = rho.hermiticity_error().as_f64();
        if !(herm <= T::HERMITICITY_TOL) {
            return Err(Error::invalid(format!("not Hermitian (error {herm:.3e})")));
        }
        Ok(rho)
    }

    /// `|k⟩⟨k|` for sector index `k`.
    pub fn pure_configuration(basis: Arc<SectorBasis>, index: usize) -> Result<Self> {
        let d = basis.dimension();
        if index >= d {
            return Err(Error::IndexOutOfRange {
                what: "sector state",
                index,
                limit: d,
            });
        }
        let mut elements = DMatrix::zeros(d, d);
        elements[(index, index)] = Complex::new(T::one(), T::zero());
        Ok(Self { basis, elements })
    }

    pub fn from_state_vector(basis: Arc<SectorBasis>, psi: &DVector<Complex<T>>) -> Result<Self> {
        let elements = psi * psi.adjoint();
        Self::new(basis, elements)
    }

    pub fn maximally_mixed(basis: Arc<SectorBasis>) -> Self {
        let d = basis.dimension();
        let w = T::one() / T::lit(d as f64);
        let elements = DMatrix::from_diagonal_element(d, d, Complex::new(w, T::zero()));
        Self { basis, elements }
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex<T>> {
        &self.elements
    }

    pub(crate) fn elements_mut(&mut self) -> &mut DMatrix<Complex<T>> {
        &mut self.elements
    }

    pub fn into_elements(self) -> DMatrix<Complex<T>> {
        self.elements
    }

    pub fn trace(&self) -> Complex<T> {
        self.elements.trace()
    }

    pub fn purity(&self) -> T {
        // Tr ρ² = Σ |ρ_kl|² for Hermitian ρ
        self.elements.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Diagonal occupation probabilities.
    pub fn populations(&self) -> Vec<T> {
        (0..self.dimension()).map(|k| self.elements[(k, k)].re).collect()
    }

    /// `max |ρ_kl − conj(ρ_lk)|`.
    pub fn hermiticity_error(&self) -> T {
        hermiticity_error(&self.elements)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> T {
        min_eigenvalue(&self.elements)
    }

    /// Frobenius distance to another state.
    pub fn distance(&self, other: &Self) -> T {
        (&self.elements - &other.elements).norm()
    }
}

fn hermiticity_error<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let d = m.nrows();
    let mut worst = T::zero();
    for k in 0..d {
        for l in k..d {
            let e = T::abs_complex(m[(k, l)] - m[(l, k)].conj());
            if e > worst {
                worst = e;
            }
        }
    }
    worst
}

fn min_eigenvalue<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let herm = (m + m.adjoint()).map(|z| z * T::lit(0.5));
    SymmetricEigen::new(herm).eigenvalues.min()
}

/// Pure configuration with excitations exactly on `sites`.
pub fn initial_state<T: Real>(basis: Arc<SectorBasis>, sites: &[usize]) -> Result<DensityMatrix<T>> {
    let index = basis.index_of_sites(sites)?;
    DensityMatrix::pure_configuration(basis, index)
}

/// Collision on `site`: `ρ → σᶻ_site ρ σᶻ_site`.
pub fn apply_collision<T: Real>(rho: &DensityMatrix<T>, site: usize) -> Result<DensityMatrix<T>> {
    let mut out = rho.clone();
    dephase_in_place(&rho.basis, &mut out.elements, site)?;
    Ok(out)
}

fn dephase_in_place<T: Real>(
    basis: &SectorBasis,
    m: &mut DMatrix<Complex<T>>,
    site: usize,
) -> Result<()> {
    let z = basis.sigma_z_diagonal::<T>(site)?;
    let d = z.len();
    for l in 0..d {
        for k in 0..d {
            if z[k] != z[l] {
                m[(k, l)] = -m[(k, l)];
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// State vector in the energy eigenbasis.
    #[default]
    PureState,
    /// Full density matrix in the site basis.
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Spacing of the observable grid, in `1/J`.
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    /// Last grid time, in `1/J`.
    pub t_final: f64,
    /// Boundary `σᶻ` deviation that ends the finite-size-safe window.
    #[serde(default = "default_boundary_epsilon")]
    pub boundary_epsilon: f64,
    /// Sites (0-indexed) carrying the initial excitations.
    pub initial_sites: Vec<usize>,
    #[serde(default)]
    pub backend: Backend,
}

pub const DEFAULT_SAMPLE_DT: f64 = 0.02;
pub const DEFAULT_BOUNDARY_EPSILON: f64 = 1e-3;

fn default_sample_dt() -> f64 {
    DEFAULT_SAMPLE_DT
}

fn default_boundary_epsilon() -> f64 {
    DEFAULT_BOUNDARY_EPSILON
}

impl TrajectoryConfig {
    pub fn new(t_final: f64, initial_sites: Vec<usize>) -> Self {
        Self {
            sample_dt: DEFAULT_SAMPLE_DT,
            t_final,
            boundary_epsilon: DEFAULT_BOUNDARY_EPSILON,
            initial_sites,
            backend: Backend::default(),
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = dt;
        self
    }

    /// Number of grid intervals; grid points are `k · sample_dt`, `k = 0..=n`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.sample_dt + 1e-9).floor() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| k as f64 * self.sample_dt).collect()
    }

    pub fn validate(&self, basis: &SectorBasis) -> Result<()> {
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(Error::invalid(format!(
                "sample_dt must be positive, got {}",
                self.sample_dt
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.t_final < self.sample_dt {
            return Err(Error::invalid("t_final is shorter than one sample interval"));
        }
        if !(self.boundary_epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "boundary_epsilon must be positive, got {}",
                self.boundary_epsilon
            )));
        }
        basis.index_of_sites(&self.initial_sites).map(|_| ())
    }
}

/// Worst-case invariant deviations seen along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateChecks {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// Most negative spot-checked eigenvalue (0 for pure states).
    pub min_eigenvalue: f64,
    /// `max_t |Σᵢ⟨σᶻᵢ⟩ − (2q − N)|`.
    pub max_magnetization_drift: f64,
    /// Largest excursion of IPR / IER outside their analytic bounds.
    pub max_bound_violation: f64,
}

impl Default for StateChecks {
    fn default() -> Self {
        Self {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: 0.0,
            max_magnetization_drift: 0.0,
            max_bound_violation: 0.0,
        }
    }
}

impl StateChecks {
    pub fn merge(&mut self, other: &StateChecks) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.max_magnetization_drift = self
            .max_magnetization_drift
            .max(other.max_magnetization_drift);
        self.max_bound_violation = self.max_bound_violation.max(other.max_bound_violation);
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryOutput {
    pub record: ObservableRecord,
    /// First grid time at which a boundary site left its initial polarization.
    pub stop_time: f64,
    pub n_collisions: usize,
    pub checks: StateChecks,
    /// Site-basis density matrix at `t_final`, when requested.
    pub final_state: Option<DMatrix<Complex<f64>>>,
}

/// Evolves one realization; both backends implement it.
trait Evolver<T: Real> {
    fn advance(&mut self, h: &SpectralHamiltonian<T>, dt: f64);
    fn collide(&mut self, h: &SpectralHamiltonian<T>, site: usize);
    fn populations(&self, h: &SpectralHamiltonian<T>) -> Vec<T>;
    /// `(trace error, Hermiticity error, min eigenvalue if `full`)`.
    fn check(&self, full: bool) -> (T, T, Option<T>);
    fn density(&self, h: &SpectralHamiltonian<T>) -> DMatrix<Complex<T>>;
}

struct DensityEvolver<T: Real> {
    rho: DMatrix<Complex<T>>,
    basis: Arc<SectorBasis>,
}

impl<T: Real> Evolver<T> for DensityEvolver<T> {
    fn advance(&mut self, h: &SpectralHamiltonian<T>, dt: f64) {
        if dt > 0.0 {
            propagate_in_place(h, &mut self.rho, dt);
        }
    }

    fn collide(&mut self, _h: &SpectralHamiltonian<T>, site: usize) {
        dephase_in_place(&self.basis, &mut self.rho, site).expect("collision site validated");
    }

    fn populations(&self, _h: &SpectralHamiltonian<T>) -> Vec<T> {
        (0..self.rho.nrows()).map(|k| self.rho[(k, k)].re).collect()
    }

    fn check(&self, full: bool) -> (T, T, Option<T>) {
        let trace = T::abs_complex(self.rho.trace() - Complex::new(T::one(), T::zero()));
        let herm = hermiticity_error(&self.rho);
        (trace, herm, full.then(|| min_eigenvalue(&self.rho)))
    }

    fn density(&self, _h: &SpectralHamiltonian<T>) -> DMatrix<Complex<T>> {
        self.rho.clone()
    }
}

/// Pure state stored as eigenbasis amplitudes `c = Vᵀψ`.
struct EigenbasisEvolver<T: Real> {
    coeffs: DVector<Complex<T>>,
    basis: Arc<SectorBasis>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> EigenbasisEvolver<T> {
    fn new(h: &SpectralHamiltonian<T>, index: usize) -> Self {
        // ψ = e_index, so c_k = V[index, k]
        let coeffs = h
            .eigenvectors_transposed()
            .column(index)
            .map(|x| Complex::new(x, T::zero()));
        Self {
            coeffs,
            basis: h.basis().clone(),
            scratch: Vec::new(),
        }
    }

    fn site_amplitudes(&self, h: &SpectralHamiltonian<T>) -> DVector<Complex<T>> {
        let v = h.eigenvectors();
        let d = self.coeffs.len();
        DVector::from_fn(d, |r, _| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..d {
                acc += self.coeffs[k] * v[(r, k)];
            }
            acc
        })
    }
}

impl<T: Real> Evolver<T> for EigenbasisEvolver<T> {
    fn advance(&mut self, h: &SpectralHamiltonian<T>, dt: f64) {
        if dt > 0.0 {
            let t = T::lit(dt);
            for (c, &lambda) in self.coeffs.iter_mut().zip(h.eigenvalues().iter()) {
                *c *= T::cis(-(lambda * t));
            }
        }
    }

    fn collide(&mut self, h: &SpectralHamiltonian<T>, site: usize) {
        // σᶻ = 1 − 2P with P the projector onto configurations occupying `site`:
        // c ← c − 2 Vᵀ P V c, touching only the occupied rows of V.
        let rows = self.basis.occupied_indices(site).expect("collision site validated");
        let vt = h.eigenvectors_transposed();
        let d = self.coeffs.len();
        self.scratch.clear();
        for &r in rows {
            let row = vt.column(r);
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..d {
                acc += self.coeffs[k] * row[k];
            }
            self.scratch.push(acc * T::lit(2.0));
        }
        for (&r, &a) in rows.iter().zip(self.scratch.iter()) {
            let row = vt.column(r);
            for k in 0..d {
                self.coeffs[k] -= a * row[k];
            }
        }
    }

    fn populations(&self, h: &SpectralHamiltonian<T>) -> Vec<T> {
        self.site_amplitudes(h).iter().map(|a| a.norm_sqr()).collect()
    }

    fn check(&self, full: bool) -> (T, T, Option<T>) {
        let norm = self.coeffs.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr());
        (
            (norm - T::one()).abs(),
            T::zero(),
            full.then(T::zero),
        )
    }

    fn density(&self, h: &SpectralHamiltonian<T>) -> DMatrix<Complex<T>> {
        let psi = self.site_amplitudes(h);
        &psi * psi.adjoint()
    }
}

/// Run one trajectory with independent random stream `seed`.
pub fn run_trajectory<T: Real>(
    h: &SpectralHamiltonian<T>,
    noise: &NoiseConfig,
    config: &TrajectoryConfig,
    seed: impl Into<StreamSeed>,
) -> Result<TrajectoryOutput> {
    run_trajectory_with(h, noise, config, seed.into(), false)
}

/// As [`run_trajectory`], optionally keeping the final density matrix.
pub fn run_trajectory_with<T: Real>(
    h: &SpectralHamiltonian<T>,
    noise: &NoiseConfig,
    config: &TrajectoryConfig,
    seed: StreamSeed,
    capture_final_state: bool,
) -> Result<TrajectoryOutput> {
    let basis = h.basis().clone();
    config.validate(&basis)?;
    noise.validate(basis.n_sites())?;
    let start = basis.index_of_sites(&config.initial_sites)?;

    match config.backend {
        Backend::PureState => {
            let ev = EigenbasisEvolver::new(h, start);
            evolve(h, noise, config, seed, ev, capture_final_state)
        }
        Backend::Density => {
            let d = basis.dimension();
            let mut rho = DMatrix::zeros(d, d);
            rho[(start, start)] = Complex::new(T::one(), T::zero());
            let ev = DensityEvolver { rho, basis };
            evolve(h, noise, config, seed, ev, capture_final_state)
        }
    }
}

fn evolve<T: Real, E: Evolver<T>>(
    h: &SpectralHamiltonian<T>,
    noise: &NoiseConfig,
    config: &TrajectoryConfig,
    seed: StreamSeed,
    mut state: E,
    capture_final_state: bool,
) -> Result<TrajectoryOutput> {
    let basis = h.basis();
    let n_steps = config.n_steps();
    let mut schedule = CollisionSchedule::new(noise, seed);
    let mut record = ObservableRecord::with_capacity(basis, n_steps + 1);
    let mut checks = StateChecks::default();
    let mut n_collisions = 0usize;
    let mut t = 0.0;

    for step in 0..=n_steps {
        let t_grid = step as f64 * config.sample_dt;
        loop {
            let (_, next) = schedule.peek();
            // collisions exactly on the grid point are applied before sampling
            if next > t_grid {
                break;
            }
            let (site, tc) = schedule.pop_next(noise);
            state.advance(h, tc - t);
            t = tc;
            state.collide(h, site);
            n_collisions += 1;
        }
        state.advance(h, t_grid - t);
        t = t_grid;

        let (trace_err, herm_err, min_eig) = state.check(step % SPOT_CHECK_EVERY == 0);
        let trace_err = trace_err.as_f64();
        if !(trace_err <= T::TRACE_TOL) {
            return Err(Error::InvariantViolation {
                time: t,
                detail: format!(
                    "trace drift {trace_err:.3e} after {n_collisions} collisions (seed {}:{})",
                    seed.master, seed.stream
                ),
            });
        }
        checks.max_trace_error = checks.max_trace_error.max(trace_err);
        checks.max_hermiticity_error = checks.max_hermiticity_error.max(herm_err.as_f64());
        if let Some(e) = min_eig {
            let e = e.as_f64();
            if e < -T::NEGATIVITY_TOL {
                return Err(Error::InvariantViolation {
                    time: t,
                    detail: format!("negative eigenvalue {e:.3e}"),
                });
            }
            checks.min_eigenvalue = checks.min_eigenvalue.min(e);
        }

        let pops = state.populations(h);
        let sample = record.push(t, basis, &pops)?;
        checks.max_magnetization_drift = checks.max_magnetization_drift.max(sample.magnetization_drift);
        checks.max_bound_violation = checks.max_bound_violation.max(sample.bound_violation);
    }

    let stop_time = observables::boundary_stop_time(&record, config.boundary_epsilon);
    let final_state = capture_final_state
        .then(|| state.density(h).map(|z| Complex::new(z.re.as_f64(), z.im.as_f64())));

    Ok(TrajectoryOutput {
        record,
        stop_time,
        n_collisions,
        checks,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn basis(n: usize, q: usize) -> Arc<SectorBasis> {
        Arc::new(SectorBasis::new(n, q).unwrap())
    }

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn initial_states() {
        let rho = initial_state::<f64>(basis(41, 1), &[20]).unwrap();
        let pops = rho.populations();
        assert_eq!(pops.iter().sum::<f64>(), 1.0);
        assert_eq!(pops[20], 1.0);

        let b = basis(20, 2);
        let rho = initial_state::<f64>(b.clone(), &[9, 10]).unwrap();
        let k = b.index_of(0b11 << 9).unwrap();
        assert_eq!(rho.elements()[(k, k)], c(1.0));
        let rho = initial_state::<f64>(b.clone(), &[7, 11]).unwrap();
        let k = b.index_of(1 << 7 | 1 << 11).unwrap();
        assert_eq!(rho.elements()[(k, k)], c(1.0));

        assert!(initial_state::<f64>(b.clone(), &[3]).is_err());
        assert!(initial_state::<f64>(b, &[3, 20]).is_err());
    }

    #[test]
    fn collision_on_two_sites() {
        let b = basis(2, 1);
        let rho = DensityMatrix::new(b, DMatrix::from_element(2, 2, c(0.5))).unwrap();
        let out = apply_collision(&rho, 0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(0.5), c(-0.5), c(-0.5), c(0.5)]);
        assert_eq!(out.elements(), &expected);
        assert_eq!(apply_collision(&out, 0).unwrap(), rho);
    }

    #[test]
    fn collision_leaves_diagonal_states() {
        let b = basis(5, 2);
        let rho = DensityMatrix::<f64>::maximally_mixed(b);
        for site in 0..5 {
            assert_eq!(apply_collision(&rho, site).unwrap(), rho);
        }
        assert!(apply_collision(&rho, 5).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let b = basis(2, 1);
        assert!(DensityMatrix::new(b.clone(), DMatrix::from_element(2, 2, c(1.0))).is_err());
        let mut m = DMatrix::from_element(2, 2, c(0.5));
        m[(0, 1)] = Complex::new(0.5, 0.1);
        assert!(DensityMatrix::new(b.clone(), m).is_err());
        assert!(DensityMatrix::new(b, DMatrix::from_element(3, 3, c(1.0 / 3.0))).is_err());
    }

    #[test]
    fn two_site_noiseless_trajectory() {
        let b = basis(2, 1);
        let h = SpectralHamiltonian::<f64>::new(b, ModelParams::default()).unwrap();
        // site 1 carries the excitation
        let cfg = TrajectoryConfig::new(3.0, vec![1]);
        for backend in [Backend::PureState, Backend::Density] {
            let out = run_trajectory(
                &h,
                &NoiseConfig::disabled(2),
                &cfg.clone().with_backend(backend),
                1,
            )
            .unwrap();
            for (k, &t) in out.record.times.iter().enumerate() {
                let m = out.record.magnetization[k][1];
                assert!((m - (4.0 * t).cos()).abs() < 1e-8, "{backend:?} t={t}");
            }
            assert_eq!(out.n_collisions, 0);
        }
    }

    #[test]
    fn backends_agree_under_noise() {
        let b = basis(7, 2);
        let h = SpectralHamiltonian::<f64>::new(b, ModelParams::with_delta(1.7)).unwrap();
        let noise = NoiseConfig::from_rate(7, 0.8, 3.0).unwrap();
        let cfg = TrajectoryConfig::new(2.0, vec![3, 4]);
        let pure = run_trajectory_with(&h, &noise, &cfg, StreamSeed::new(5, 2), true).unwrap();
        let dens = run_trajectory_with(
            &h,
            &noise,
            &cfg.clone().with_backend(Backend::Density),
            StreamSeed::new(5, 2),
            true,
        )
        .unwrap();
        assert_eq!(pure.n_collisions, dens.n_collisions);
        assert!(pure.n_collisions > 10);
        for (a, b) in pure.record.magnetization.iter().zip(&dens.record.magnetization) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        let diff = (pure.final_state.unwrap() - dens.final_state.unwrap()).norm();
        assert!(diff < 1e-10, "final states differ by {diff}");
    }

    #[test]
    fn frozen_dynamics_without_hamiltonian() {
        let b = basis(6, 2);
        let zero = DMatrix::<f64>::zeros(b.dimension(), b.dimension());
        let h = SpectralHamiltonian::from_matrix(b, ModelParams::default(), zero).unwrap();
        let noise = NoiseConfig::from_rate(6, 1.0, 20.0).unwrap();
        for backend in [Backend::PureState, Backend::Density] {
            let cfg = TrajectoryConfig::new(1.0, vec![1, 4]).with_backend(backend);
            let out = run_trajectory(&h, &noise, &cfg, 9).unwrap();
            assert!(out.n_collisions > 0);
            let first = &out.record.magnetization[0];
            for m in &out.record.magnetization {
                assert_eq!(m, first);
            }
        }
    }

    #[test]
    fn noiseless_runs_ignore_the_seed() {
        let b = basis(9, 1);
        let h = SpectralHamiltonian::<f64>::new(b, ModelParams::default()).unwrap();
        let cfg = TrajectoryConfig::new(1.0, vec![4]);
        let a = run_trajectory(&h, &NoiseConfig::disabled(9), &cfg, 1).unwrap();
        let b = run_trajectory(&h, &NoiseConfig::disabled(9), &cfg, 2).unwrap();
        assert_eq!(a.record, b.record);
    }

    #[test]
    fn f32_trajectory_tracks_f64() {
        let b = basis(8, 1);
        let h64 = SpectralHamiltonian::<f64>::new(b.clone(), ModelParams::default()).unwrap();
        let h32 = SpectralHamiltonian::<f32>::new(b, ModelParams::default()).unwrap();
        let noise = NoiseConfig::from_rate(8, 2.0, 1.0).unwrap();
        let cfg = TrajectoryConfig::new(2.0, vec![3]);
        let a = run_trajectory(&h64, &noise, &cfg, 4).unwrap();
        let b = run_trajectory(&h32, &noise, &cfg, 4).unwrap();
        assert_eq!(a.n_collisions, b.n_collisions);
        for (x, y) in a.record.ier.iter().zip(&b.record.ier) {
            assert!((x - y).abs() < 1e-4);
        }
    }
}
