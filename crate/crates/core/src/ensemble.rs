//! Trajectory ensembles: parallel execution with reproducible seeding and a
//! deterministic reduction to means and standard errors.
//!
//! Trajectory `m` always draws from ChaCha stream `m` keyed by the master
//! seed, and results are folded strictly in trajectory order, so the output
//! does not depend on how many workers ran or how rayon split the work.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_trajectory_with, StateChecks, TrajectoryConfig, TrajectoryOutput};
use crate::error::{Error, Result};
use crate::model::{ModelParams, SpectralHamiltonian};
use crate::noise::{NoiseConfig, StreamSeed};
use crate::observables::{Observable, ObservableRecord};
use crate::scalar::Real;

/// Trajectories per parallel batch; bounds memory for large ensembles.
const BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// `None` lets rayon pick.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_count: Option<usize>,
    /// Also average the final density matrices.
    #[serde(default)]
    pub average_density: bool,
}

impl EnsembleConfig {
    pub fn new(n_trajectories: usize, master_seed: u64) -> Self {
        Self {
            n_trajectories,
            master_seed,
            worker_count: None,
            average_density: false,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.worker_count = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::invalid("an ensemble needs at least one trajectory"));
        }
        if self.worker_count == Some(0) {
            return Err(Error::invalid("worker count must be positive"));
        }
        Ok(())
    }
}

/// Configuration echo stored alongside results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMetadata {
    pub n_sites: usize,
    pub n_excitations: usize,
    pub model: ModelParams,
    pub noise: NoiseConfig,
    pub trajectory: TrajectoryConfig,
    pub ensemble: EnsembleConfig,
    pub scalar: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub mean: ObservableRecord,
    /// Sample standard deviation over `√M`, same layout as `mean`.
    pub std_error: ObservableRecord,
    /// Smallest per-trajectory boundary stop time.
    pub effective_t_final: f64,
    pub stop_times: Vec<f64>,
    pub mean_collisions: f64,
    pub checks: StateChecks,
    pub mean_density: Option<DMatrix<Complex<f64>>>,
    pub metadata: EnsembleMetadata,
}

impl EnsembleSeries {
    pub fn times(&self) -> &[f64] {
        &self.mean.times
    }

    pub fn n_trajectories(&self) -> usize {
        self.metadata.ensemble.n_trajectories
    }

    /// Last grid index not beyond `effective_t_final`.
    pub fn effective_len(&self) -> usize {
        self.mean
            .times
            .iter()
            .take_while(|&&t| t <= self.effective_t_final + 1e-12)
            .count()
    }

    pub fn series(&self, observable: Observable) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            self.mean.series(observable)?,
            self.std_error.series(observable)?,
        ))
    }

    pub fn value_at(&self, observable: Observable, time: f64) -> Result<(f64, f64)> {
        let k = self.mean.time_index(time)?;
        let (m, se) = self.series(observable)?;
        Ok((m[k], se[k]))
    }
}

/// Running mean and squared deviations (Welford), one slot per value.
struct Accumulator {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn add(&mut self, values: impl Iterator<Item = f64>) {
        self.n += 1;
        let n = self.n as f64;
        for ((mean, m2), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(values) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    fn std_error(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|&m2| (m2.max(0.0) / (n - 1.0)).sqrt() / n.sqrt())
            .collect()
    }
}

fn flatten(record: &ObservableRecord) -> impl Iterator<Item = f64> + '_ {
    record
        .magnetization
        .iter()
        .flatten()
        .copied()
        .chain(record.ipr.iter().flatten().copied())
        .chain(record.ier.iter().copied())
        .chain(record.width.iter().copied())
}

fn unflatten(template: &ObservableRecord, flat: &[f64]) -> ObservableRecord {
    let t = template.times.len();
    let n = template.n_sites;
    let mut it = flat.iter().copied();
    let mut take = |len: usize| -> Vec<f64> { it.by_ref().take(len).collect() };
    let magnetization = (0..t).map(|_| take(n)).collect();
    let ipr = template.ipr.as_ref().map(|_| take(t));
    let ier = take(t);
    let width = take(t);
    ObservableRecord {
        n_sites: template.n_sites,
        n_excitations: template.n_excitations,
        times: template.times.clone(),
        magnetization,
        ipr,
        ier,
        width,
    }
}

/// Run `M` trajectories and reduce them to means and standard errors.
pub fn run_ensemble<T: Real>(
    h: &SpectralHamiltonian<T>,
    noise: &NoiseConfig,
    traj_config: &TrajectoryConfig,
    ens_config: &EnsembleConfig,
) -> Result<EnsembleSeries> {
    ens_config.validate()?;
    traj_config.validate(h.basis())?;
    noise.validate(h.basis().n_sites())?;

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = ens_config.worker_count {
            builder = builder.num_threads(w);
        }
        builder
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?
    };

    let m = ens_config.n_trajectories;
    let master = ens_config.master_seed;
    let run_one = |index: usize| -> Result<TrajectoryOutput> {
        let seed = StreamSeed::new(master, index as u64);
        run_trajectory_with(h, noise, traj_config, seed, ens_config.average_density).map_err(
            |e| Error::Trajectory {
                index: index as u64,
                master_seed: master,
                source: Box::new(e),
            },
        )
    };

    let mut acc: Option<(ObservableRecord, Accumulator)> = None;
    let mut stop_times = Vec::with_capacity(m);
    let mut checks = StateChecks::default();
    let mut collisions = 0usize;
    let mut density_sum: Option<DMatrix<Complex<f64>>> = None;

    for start in (0..m).step_by(BATCH) {
        let end = (start + BATCH).min(m);
        let outputs: Vec<Result<TrajectoryOutput>> =
            pool.install(|| (start..end).into_par_iter().map(run_one).collect());
        for out in outputs {
            let out = out?;
            let (_, a) = acc.get_or_insert_with(|| {
                let len = flatten(&out.record).count();
                (out.record.clone(), Accumulator::new(len))
            });
            a.add(flatten(&out.record));
            stop_times.push(out.stop_time);
            checks.merge(&out.checks);
            collisions += out.n_collisions;
            if let Some(rho) = out.final_state {
                match density_sum.as_mut() {
                    Some(sum) => *sum += rho,
                    None => density_sum = Some(rho),
                }
            }
        }
    }

    let (template, acc) = acc.expect("at least one trajectory");
    let mean = unflatten(&template, &acc.mean);
    let std_error = unflatten(&template, &acc.std_error());
    let effective_t_final = stop_times.iter().copied().fold(f64::INFINITY, f64::min);
    let basis = h.basis();

    Ok(EnsembleSeries {
        mean,
        std_error,
        effective_t_final,
        stop_times,
        mean_collisions: collisions as f64 / m as f64,
        checks,
        mean_density: density_sum.map(|s| s.unscale(m as f64)),
        metadata: EnsembleMetadata {
            n_sites: basis.n_sites(),
            n_excitations: basis.n_excitations(),
            model: *h.params(),
            noise: noise.clone(),
            trajectory: traj_config.clone(),
            ensemble: ens_config.clone(),
            scalar: T::name().to_string(),
        },
    })
}

/// Outcome of comparing one observable between two ensembles at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub observable: Observable,
    pub time: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_a − mean_b`.
    pub difference: f64,
    /// `√(SE_a² + SE_b²)`.
    pub combined_se: f64,
    /// `|difference| > 3 · combined_se`.
    pub significant: bool,
}

impl Comparison {
    /// Separation in units of the combined standard error.
    pub fn sigmas(&self) -> f64 {
        if self.combined_se > 0.0 {
            self.difference.abs() / self.combined_se
        } else if self.difference == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// `a > b` by more than `k` combined standard errors.
    pub fn a_exceeds_b_by(&self, k: f64) -> bool {
        self.difference > k * self.combined_se
    }
}

pub fn compare_runs(
    a: &EnsembleSeries,
    b: &EnsembleSeries,
    observable: Observable,
    time: f64,
) -> Result<Comparison> {
    let ka = a.mean.time_index(time)?;
    let kb = b.mean.time_index(time)?;
    if (a.mean.times[ka] - b.mean.times[kb]).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "grids disagree near t = {time}: {} vs {}",
            a.mean.times[ka], b.mean.times[kb]
        )));
    }
    let (ma, sa) = a.series(observable)?;
    let (mb, sb) = b.series(observable)?;
    let difference = ma[ka] - mb[kb];
    let combined_se = sa[ka].hypot(sb[kb]);
    Ok(Comparison {
        observable,
        time: a.mean.times[ka],
        mean_a: ma[ka],
        mean_b: mb[kb],
        difference,
        combined_se,
        significant: difference.abs() > 3.0 * combined_se,
    })
}
