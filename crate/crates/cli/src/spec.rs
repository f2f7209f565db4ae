//! Run specification files (TOML). Times are in units of `1/J`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use scm_core::{
    Backend, EnsembleConfig, FrequencyAxis, ModelParams, NoiseConfig, Observable,
    RenewalStart, SectorBasis, TrajectoryConfig, WeibullParams, Window,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub model: ModelSpec,
    pub noise: NoiseSpec,
    pub trajectory: TrajectorySpec,
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n_sites: usize,
    pub n_excitations: usize,
    /// 0-indexed sites carrying the initial excitations.
    pub initial_sites: Vec<usize>,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default)]
    pub precision: Precision,
}

fn one() -> f64 {
    1.0
}

/// One `(ν, r_c)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoisePointSpec {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub shapes: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Exactly one of `disabled`, `points`, `grid`, `per_site` must be used.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub disabled: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<NoisePointSpec>,
    /// Cartesian product, expanded by `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_site: Vec<WeibullParams>,
    #[serde(default)]
    pub start: RenewalStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub sample_dt: f64,
    #[serde(default = "default_eps")]
    pub boundary_epsilon: f64,
    #[serde(default)]
    pub backend: Backend,
}

fn default_dt() -> f64 {
    scm_core::dynamics::DEFAULT_SAMPLE_DT
}

fn default_eps() -> f64 {
    scm_core::dynamics::DEFAULT_BOUNDARY_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_trajectories: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// Observable read at a fixed time for every noise point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarySpec {
    pub time: f64,
    pub observable: Observable,
}

/// Difference spectrum between two noise points (indices into the
/// expanded point list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FftSpec {
    pub a: usize,
    pub b: usize,
    #[serde(default = "central")]
    pub observable: Observable,
    #[serde(default)]
    pub axis: FrequencyAxis,
    #[serde(default)]
    pub window: Window,
    /// Restrict both series to the common pre-boundary window.
    #[serde(default = "yes")]
    pub pre_boundary: bool,
}

fn central() -> Observable {
    Observable::CentralMagnetization
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub plots: bool,
    /// Series drawn in the line plots; empty picks a default set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<Observable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummarySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fft: Vec<FftSpec>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            plots: true,
            observables: Vec::new(),
            summary: None,
            fft: Vec::new(),
        }
    }
}

/// A fully resolved noise configuration with a file-friendly label.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePoint {
    pub label: String,
    pub shape: Option<f64>,
    pub rate: Option<f64>,
    pub config: NoiseConfig,
}

pub fn parse_run_spec(path: &Path) -> Result<RunSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    parse_str(&text).map_err(|e| match e {
        CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_str(text: &str) -> Result<RunSpec, CliError> {
    let spec: RunSpec = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn emit(spec: &RunSpec) -> String {
    toml::to_string(spec).expect("run spec serializes")
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl RunSpec {
    /// Every problem found, each prefixed with its field path.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let m = &self.model;
        let mut sector_ok = false;
        match SectorBasis::new(m.n_sites, m.n_excitations) {
            Ok(_) => sector_ok = true,
            Err(e) => out.push(format!("model: {e}")),
        }
        for (name, v) in [("j", m.j), ("delta", m.delta), ("h", m.h)] {
            if !v.is_finite() {
                out.push(format!("model.{name}: must be finite, got {v}"));
            }
        }
        if m.initial_sites.len() != m.n_excitations {
            out.push(format!(
                "model.initial_sites: {} sites listed but n_excitations = {}",
                m.initial_sites.len(),
                m.n_excitations
            ));
        }
        let mut seen = HashSet::new();
        for (i, &s) in m.initial_sites.iter().enumerate() {
            if s >= m.n_sites {
                out.push(format!("model.initial_sites[{i}]: site {s} outside 0..{}", m.n_sites));
            }
            if !seen.insert(s) {
                out.push(format!("model.initial_sites[{i}]: site {s} repeated"));
            }
        }

        let n = &self.noise;
        let modes = [n.disabled, !n.points.is_empty(), n.grid.is_some(), !n.per_site.is_empty()]
            .iter()
            .filter(|&&x| x)
            .count();
        if modes != 1 {
            out.push(
                "noise: specify exactly one of `disabled = true`, `points`, `grid` or `per_site`"
                    .into(),
            );
        }
        for (i, p) in n.points.iter().enumerate() {
            if !positive(p.shape) {
                out.push(format!("noise.points[{i}].shape: must be positive, got {}", p.shape));
            }
            if !positive(p.rate) {
                out.push(format!("noise.points[{i}].rate: must be positive, got {}", p.rate));
            }
        }
        if let Some(g) = &n.grid {
            for (name, list) in [("shapes", &g.shapes), ("rates", &g.rates)] {
                if list.is_empty() {
                    out.push(format!("noise.grid.{name}: empty"));
                }
                for (i, &v) in list.iter().enumerate() {
                    if !positive(v) {
                        out.push(format!("noise.grid.{name}[{i}]: must be positive, got {v}"));
                    }
                }
            }
        }
        if !n.per_site.is_empty() {
            if n.per_site.len() != m.n_sites {
                out.push(format!(
                    "noise.per_site: {} entries for {} sites",
                    n.per_site.len(),
                    m.n_sites
                ));
            }
            for (i, p) in n.per_site.iter().enumerate() {
                if let Err(e) = p.validate() {
                    out.push(format!("noise.per_site[{i}]: {e}"));
                }
            }
        }
        let mut labels = HashSet::new();
        if out.is_empty() {
            for p in self.noise_points().unwrap_or_default() {
                if !labels.insert(p.label.clone()) {
                    out.push(format!("noise: point {} listed twice", p.label));
                }
            }
        }

        let t = &self.trajectory;
        if !positive(t.t_final) {
            out.push(format!("trajectory.t_final: must be positive, got {}", t.t_final));
        }
        if !positive(t.sample_dt) {
            out.push(format!("trajectory.sample_dt: must be positive, got {}", t.sample_dt));
        } else if t.sample_dt > t.t_final {
            out.push("trajectory.sample_dt: larger than t_final".into());
        }
        if !positive(t.boundary_epsilon) {
            out.push(format!(
                "trajectory.boundary_epsilon: must be positive, got {}",
                t.boundary_epsilon
            ));
        }

        if self.ensemble.n_trajectories == 0 {
            out.push("ensemble.n_trajectories: must be at least 1".into());
        }
        if self.ensemble.workers == Some(0) {
            out.push("ensemble.workers: must be at least 1".into());
        }

        let o = &self.outputs;
        let check_obs = |path: String, obs: Observable, out: &mut Vec<String>| match obs {
            Observable::Ipr if m.n_excitations != 1 => {
                out.push(format!("{path}: ipr needs n_excitations = 1"))
            }
            Observable::Magnetization(i) if i >= m.n_sites => {
                out.push(format!("{path}: site {i} outside 0..{}", m.n_sites))
            }
            _ => {}
        };
        for (i, &obs) in o.observables.iter().enumerate() {
            check_obs(format!("outputs.observables[{i}]"), obs, &mut out);
        }
        if let Some(s) = &o.summary {
            if !(s.time >= 0.0 && s.time <= t.t_final) {
                out.push(format!("outputs.summary.time: {} outside [0, t_final]", s.time));
            }
            check_obs("outputs.summary.observable".into(), s.observable, &mut out);
        }
        let n_points = if sector_ok && modes == 1 {
            self.noise_points().map(|p| p.len()).unwrap_or(0)
        } else {
            usize::MAX
        };
        for (i, f) in o.fft.iter().enumerate() {
            for (name, idx) in [("a", f.a), ("b", f.b)] {
                if idx >= n_points {
                    out.push(format!("outputs.fft[{i}].{name}: no noise point {idx}"));
                }
            }
            if f.a == f.b {
                out.push(format!("outputs.fft[{i}]: a and b are the same point"));
            }
            check_obs(format!("outputs.fft[{i}].observable"), f.observable, &mut out);
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems.join("\n")))
        }
    }

    /// Noise points in file order; grids expand shape-major.
    pub fn noise_points(&self) -> Result<Vec<NoisePoint>, CliError> {
        let n_sites = self.model.n_sites;
        let start = self.noise.start;
        let rated = |shape: f64, rate: f64| -> Result<NoisePoint, CliError> {
            let config = NoiseConfig::from_rate(n_sites, shape, rate)
                .map_err(|e| CliError::Validation(format!("noise: {e}")))?
                .with_start(start);
            Ok(NoisePoint {
                label: format!("nu{shape}_rc{rate}"),
                shape: Some(shape),
                rate: Some(rate),
                config,
            })
        };
        if self.noise.disabled {
            return Ok(vec![NoisePoint {
                label: "noiseless".into(),
                shape: None,
                rate: None,
                config: NoiseConfig::disabled(n_sites),
            }]);
        }
        if !self.noise.per_site.is_empty() {
            let config = NoiseConfig {
                per_site: self.noise.per_site.clone(),
                enabled: true,
                start,
            };
            return Ok(vec![NoisePoint {
                label: "per_site".into(),
                shape: None,
                rate: None,
                config,
            }]);
        }
        if let Some(g) = &self.noise.grid {
            let mut out = Vec::new();
            for &shape in &g.shapes {
                for &rate in &g.rates {
                    out.push(rated(shape, rate)?);
                }
            }
            return Ok(out);
        }
        self.noise.points.iter().map(|p| rated(p.shape, p.rate)).collect()
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            j: self.model.j,
            delta: self.model.delta,
            h: self.model.h,
        }
    }

    pub fn trajectory_config(&self) -> TrajectoryConfig {
        TrajectoryConfig {
            sample_dt: self.trajectory.sample_dt,
            t_final: self.trajectory.t_final,
            boundary_epsilon: self.trajectory.boundary_epsilon,
            initial_sites: self.model.initial_sites.clone(),
            backend: self.trajectory.backend,
        }
    }

    pub fn ensemble_config(&self, point_index: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_trajectories: self.ensemble.n_trajectories,
            master_seed: point_seed(self.ensemble.master_seed, point_index),
            worker_count: self.ensemble.workers,
            average_density: false,
        }
    }

    /// Series drawn in line plots.
    pub fn plot_observables(&self) -> Vec<Observable> {
        if !self.outputs.observables.is_empty() {
            return self.outputs.observables.clone();
        }
        let concentration = if self.model.n_excitations == 1 {
            Observable::Ipr
        } else {
            Observable::Ier
        };
        vec![Observable::CentralMagnetization, concentration, Observable::Width]
    }
}

/// Master seed of the ensemble for noise point `index`.
///
/// Points get unrelated key streams so that comparisons between them are
/// between independent samples.
pub fn point_seed(master: u64, index: usize) -> u64 {
    // SplitMix64 finalizer
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
