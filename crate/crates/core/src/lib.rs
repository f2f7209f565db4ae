//! Transport of spin excitations in an XXZ chain subject to stochastic
//! collision noise.
//!
//! Ancillas hit individual sites at times drawn from independent Weibull
//! renewal processes; each hit dephases the site. Between hits the chain
//! evolves exactly under its sector Hamiltonian. Observables are averaged
//! over many such trajectories.
//!
//! The linear algebra is generic over [`Real`] (`f64` or `f32`); the aliases
//! below fix the scalar for ordinary use.
//!
//! ```
//! use std::sync::Arc;
//! use scm_core::{run_ensemble, EnsembleConfig, Hamiltonian, ModelParams, NoiseConfig,
//!     SectorBasis, TrajectoryConfig};
//!
//! let basis = Arc::new(SectorBasis::new(11, 1)?);
//! let h = Hamiltonian::new(basis, ModelParams::default())?;
//! let noise = NoiseConfig::from_rate(11, 100.0, 10.0)?;
//! let traj = TrajectoryConfig::new(1.0, vec![5]);
//! let series = run_ensemble(&h, &noise, &traj, &EnsembleConfig::new(8, 42))?;
//! assert_eq!(series.times().len(), 51);
//! # Ok::<(), scm_core::Error>(())
//! ```

pub mod basis;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod model;
pub mod noise;
pub mod observables;
pub mod scalar;

pub use basis::SectorBasis;
pub use dynamics::{
    apply_collision, initial_state, run_trajectory, run_trajectory_with, Backend, DensityMatrix,
    StateChecks, TrajectoryConfig, TrajectoryOutput,
};
pub use ensemble::{compare_runs, run_ensemble, Comparison, EnsembleConfig, EnsembleSeries};
pub use error::{Error, Result};
pub use model::{propagate, ModelParams, SpectralHamiltonian};
pub use noise::{
    collision_rate, init_schedule, params_for_rate, sample_interval, sample_stationary_delay,
    CollisionSchedule, NoiseConfig, RenewalStart, StreamSeed, WeibullParams,
};
pub use observables::{
    boundary_stop_time, fft_difference_spectrum, ier, ipr, local_magnetization, spread_width,
    FrequencyAxis, Observable, ObservableRecord, Spectrum, SpectrumOptions, Window,
};
pub use scalar::Real;

pub type Hamiltonian = SpectralHamiltonian<f64>;
pub type HamiltonianF32 = SpectralHamiltonian<f32>;
pub type Density = DensityMatrix<f64>;
pub type DensityF32 = DensityMatrix<f32>;
