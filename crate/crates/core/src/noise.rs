//! Weibull renewal processes driving the collisions.
//!
//! Each site carries an independent renewal process whose inter-collision
//! times follow `p(τ) = (ν/μ)(τ/μ)^(ν-1) exp(-(τ/μ)^ν)`. The shape `ν`
//! controls temporal heterogeneity (`ν = 1` is Poissonian, `ν ≫ 1` nearly
//! periodic) and the scale `μ` fixes the collision rate
//! `r_c = 1 / (μ Γ(1 + 1/ν))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeibullParams {
    /// Shape `ν`.
    pub shape: f64,
    /// Scale `μ`, in units of `1/J`.
    pub scale: f64,
}

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        let params = Self { shape, scale };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            return Err(Error::invalid(format!(
                "Weibull shape must be positive and finite, got {}",
                self.shape
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!(
                "Weibull scale must be positive and finite, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// Mean inter-collision time `μ Γ(1 + 1/ν)`.
    pub fn mean_interval(&self) -> f64 {
        self.scale * gamma(1.0 + 1.0 / self.shape)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -(-(t / self.scale).powf(self.shape)).exp_m1()
        }
    }

    /// Inverse CDF at survival probability `u ∈ (0, 1]`.
    #[inline]
    pub fn interval_from_uniform(&self, u: f64) -> f64 {
        self.scale * (-u.ln()).powf(1.0 / self.shape)
    }
}

/// Draw one inter-collision time.
#[inline]
pub fn sample_interval<R: Rng + ?Sized>(params: &WeibullParams, rng: &mut R) -> f64 {
    // random() is in [0, 1), so u is in (0, 1] and the log is finite
    let u = 1.0 - rng.random::<f64>();
    params.interval_from_uniform(u)
}

pub fn collision_rate(params: &WeibullParams) -> f64 {
    1.0 / params.mean_interval()
}

/// Scale that realizes `target_rate` at the given shape.
pub fn params_for_rate(shape: f64, target_rate: f64) -> Result<WeibullParams> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::invalid(format!(
            "Weibull shape must be positive and finite, got {shape}"
        )));
    }
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(Error::invalid(format!(
            "collision rate must be positive and finite, got {target_rate}"
        )));
    }
    WeibullParams::new(shape, 1.0 / (target_rate * gamma(1.0 + 1.0 / shape)))
}

/// Delay before the first event of each site.
///
/// `Fresh` draws an ordinary interval at `t = 0`, so near-periodic sites
/// start in phase. `Stationary` draws the forward recurrence time of an
/// equilibrium renewal process, which randomizes the phases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenewalStart {
    #[default]
    Fresh,
    Stationary,
}

/// Forward recurrence time of an equilibrium Weibull renewal process.
///
/// The interval straddling `t = 0` is length biased, and for a Weibull
/// law `(L/μ)^ν` is then `Gamma(1 + 1/ν, 1)`; the origin falls uniformly
/// inside it.
pub fn sample_stationary_delay<R: Rng + ?Sized>(params: &WeibullParams, rng: &mut R) -> f64 {
    let g = Gamma::new(1.0 + 1.0 / params.shape, 1.0)
        .expect("shape validated positive")
        .sample(rng);
    let straddling = params.scale * g.powf(1.0 / params.shape);
    (1.0 - rng.random::<f64>()) * straddling
}

/// Per-site noise description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub per_site: Vec<WeibullParams>,
    pub enabled: bool,
    #[serde(default)]
    pub start: RenewalStart,
}

impl NoiseConfig {
    pub fn uniform(n_sites: usize, params: WeibullParams) -> Self {
        Self {
            per_site: vec![params; n_sites],
            enabled: true,
            start: RenewalStart::Fresh,
        }
    }

    pub fn from_rate(n_sites: usize, shape: f64, rate: f64) -> Result<Self> {
        Ok(Self::uniform(n_sites, params_for_rate(shape, rate)?))
    }

    pub fn disabled(n_sites: usize) -> Self {
        // placeholder parameters, never sampled
        Self {
            per_site: vec![WeibullParams { shape: 1.0, scale: 1.0 }; n_sites],
            enabled: false,
            start: RenewalStart::Fresh,
        }
    }

    pub fn with_start(mut self, start: RenewalStart) -> Self {
        self.start = start;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.per_site.len()
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.per_site.len() != n_sites {
            return Err(Error::invalid(format!(
                "noise lists {} sites, chain has {n_sites}",
                self.per_site.len()
            )));
        }
        for (i, p) in self.per_site.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::invalid(format!("site {i}: {e}")))?;
        }
        Ok(())
    }
}

/// Identifies one reproducible random stream: the ChaCha key comes from
/// `master`, the stream number from `stream` (the trajectory index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for StreamSeed {
    fn from(master: u64) -> Self {
        Self { master, stream: 0 }
    }
}

/// Absolute time of the next collision on every site.
#[derive(Debug, Clone)]
pub struct CollisionSchedule {
    next_time: Vec<f64>,
    rng: ChaCha8Rng,
}

impl CollisionSchedule {
    /// First collision time of each site, drawn at `t = 0`. With noise
    /// disabled every entry is `+∞` and nothing ever fires.
    pub fn new(config: &NoiseConfig, seed: impl Into<StreamSeed>) -> Self {
        let mut rng = seed.into().rng();
        let next_time = if config.enabled {
            config
                .per_site
                .iter()
                .map(|p| match config.start {
                    RenewalStart::Fresh => sample_interval(p, &mut rng),
                    RenewalStart::Stationary => sample_stationary_delay(p, &mut rng),
                })
                .collect()
        } else {
            vec![f64::INFINITY; config.n_sites()]
        };
        Self { next_time, rng }
    }

    pub fn next_times(&self) -> &[f64] {
        &self.next_time
    }

    /// Earliest pending collision; ties go to the lowest site index.
    pub fn peek(&self) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (site, &t) in self.next_time.iter().enumerate() {
            if t < best.1 {
                best = (site, t);
            }
        }
        best
    }

    /// Remove the earliest collision and redraw that site's next one.
    pub fn pop_next(&mut self, config: &NoiseConfig) -> (usize, f64) {
        let (site, time) = self.peek();
        if time.is_finite() {
            self.next_time[site] = time + sample_interval(&config.per_site[site], &mut self.rng);
        }
        (site, time)
    }

    #[cfg(test)]
    fn with_times(next_time: Vec<f64>, seed: u64) -> Self {
        Self {
            next_time,
            rng: StreamSeed::from(seed).rng(),
        }
    }
}

pub fn init_schedule(config: &NoiseConfig, seed: impl Into<StreamSeed>) -> CollisionSchedule {
    CollisionSchedule::new(config, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_cdf_points() {
        let p = WeibullParams::new(1.0, 2.0).unwrap();
        assert_relative_eq!(p.interval_from_uniform((-1.0f64).exp()), 2.0, epsilon = 1e-15);
        let p = WeibullParams::new(2.0, 1.0).unwrap();
        assert_relative_eq!(p.interval_from_uniform((-4.0f64).exp()), 2.0, epsilon = 1e-15);
        // u = 1 is the smallest admissible draw
        assert_eq!(p.interval_from_uniform(1.0), 0.0);
    }

    #[test]
    fn rates() {
        assert_relative_eq!(
            collision_rate(&WeibullParams::new(1.0, 2.0).unwrap()),
            0.5,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            collision_rate(&WeibullParams::new(2.0, 1.0).unwrap()),
            2.0 / std::f64::consts::PI.sqrt(),
            max_relative = 1e-13
        );
        let p = params_for_rate(100.0, 10.0).unwrap();
        assert_relative_eq!(p.scale, 1.0 / (10.0 * gamma(1.01)), max_relative = 1e-15);
        assert_relative_eq!(collision_rate(&p), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn scale_from_rate() {
        assert_relative_eq!(params_for_rate(1.0, 0.5).unwrap().scale, 2.0, max_relative = 1e-14);
        assert_relative_eq!(params_for_rate(1.0, 100.0).unwrap().scale, 0.01, max_relative = 1e-14);
        assert_relative_eq!(params_for_rate(0.5, 1.0).unwrap().scale, 0.5, max_relative = 1e-13);
        assert!(params_for_rate(0.0, 1.0).is_err());
        assert!(params_for_rate(1.0, -1.0).is_err());
        assert!(WeibullParams::new(-0.5, 1.0).is_err());
        assert!(WeibullParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn disabled_schedule_never_fires() {
        let s = CollisionSchedule::new(&NoiseConfig::disabled(5), 7);
        assert!(s.next_times().iter().all(|t| *t == f64::INFINITY));
        assert_eq!(s.peek().1, f64::INFINITY);
    }

    #[test]
    fn deterministic_schedule() {
        let cfg = NoiseConfig::from_rate(41, 0.7, 3.0).unwrap();
        let a = CollisionSchedule::new(&cfg, StreamSeed::new(11, 4));
        let b = CollisionSchedule::new(&cfg, StreamSeed::new(11, 4));
        let c = CollisionSchedule::new(&cfg, StreamSeed::new(11, 5));
        assert_eq!(a.next_times(), b.next_times());
        assert_ne!(a.next_times(), c.next_times());
    }

    #[test]
    fn pop_extracts_minimum_and_redraws() {
        let cfg = NoiseConfig::from_rate(3, 1.0, 1.0).unwrap();
        let mut s = CollisionSchedule::with_times(vec![3.0, 1.5, 2.2], 1);
        assert_eq!(s.pop_next(&cfg), (1, 1.5));
        assert!(s.next_times()[1] > 1.5);
        assert_eq!(s.next_times()[0], 3.0);
        assert_eq!(s.next_times()[2], 2.2);
    }

    #[test]
    fn ties_go_to_lowest_site() {
        let cfg = NoiseConfig::from_rate(3, 1.0, 1.0).unwrap();
        let mut s = CollisionSchedule::with_times(vec![2.0, 5.0, 2.0], 1);
        assert_eq!(s.pop_next(&cfg).0, 0);
    }

    #[test]
    fn stationary_delay_mean() {
        // equilibrium forward recurrence has mean E[τ²] / (2 E[τ])
        for shape in [0.5, 1.0, 100.0] {
            let p = params_for_rate(shape, 2.0).unwrap();
            let m2 = p.scale.powi(2) * gamma(1.0 + 2.0 / shape);
            let expected = m2 / (2.0 * p.mean_interval());
            let mut rng = StreamSeed::new(5, 0).rng();
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| sample_stationary_delay(&p, &mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            assert!((mean - expected).abs() < 4.0 * sd / (n as f64).sqrt(), "shape {shape}: {mean} vs {expected}");
        }
    }

    #[test]
    fn near_periodic_gaps() {
        let cfg = NoiseConfig::from_rate(1, 100.0, 10.0).unwrap();
        let mut s = CollisionSchedule::new(&cfg, 3);
        let mut last = 0.0;
        let mut gaps = Vec::new();
        for _ in 0..1000 {
            let (_, t) = s.pop_next(&cfg);
            assert!(t > last);
            gaps.push(t - last);
            last = t;
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let sd = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>()
            / (gaps.len() - 1) as f64)
            .sqrt();
        assert!((mean - 0.1).abs() < 0.002, "mean gap {mean}");
        assert!(sd / mean < 0.02, "relative spread {}", sd / mean);
    }
}
