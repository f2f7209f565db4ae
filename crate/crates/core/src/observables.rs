//! Observables of the excitation transport.
//!
//! All of them depend on the state only through its diagonal in the
//! configuration basis, so trajectories hand over populations rather than
//! full states.

use std::fmt;
use std::str::FromStr;

use rustfft::{num_complex::Complex, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Slack allowed on analytic bounds of recorded observables.
pub const BOUND_SLACK: f64 = 1e-9;

/// `⟨σᶻᵢ⟩ = Σₖ zᵢ(k) ρₖₖ` for every site.
pub fn local_magnetization<T: Real>(rho: &DensityMatrix<T>) -> Vec<T> {
    magnetization_from_populations(rho.basis(), &rho.populations())
}

pub fn magnetization_from_populations<T: Real>(basis: &SectorBasis, pops: &[T]) -> Vec<T> {
    let total = pops.iter().fold(T::zero(), |a, &p| a + p);
    (0..basis.n_sites())
        .map(|site| {
            let up = basis
                .occupied_indices(site)
                .expect("site in range")
                .iter()
                .fold(T::zero(), |a, &k| a + pops[k]);
            up + up - total
        })
        .collect()
}

/// Inverse participation ratio `Σᵢ ⟨i|ρ|i⟩²` over localized single-excitation
/// states. Ranges from `1/N` (fully delocalized) to 1 (localized).
pub fn ipr<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    let q = rho.basis().n_excitations();
    if q != 1 {
        return Err(Error::WrongSector(q));
    }
    Ok(sum_of_squares(&rho.populations()))
}

/// Inverse ergodicity ratio `Σⱼ ⟨j|ρ|j⟩²` over the sector configurations.
///
/// Ranges from `1/d` (uniform over the sector) to 1 (a single
/// configuration); for one excitation it coincides with [`ipr`]. The weights
/// are squared: the unsquared sum is the trace and carries no information.
pub fn ier<T: Real>(rho: &DensityMatrix<T>) -> T {
    sum_of_squares(&rho.populations())
}

pub fn sum_of_squares<T: Real>(pops: &[T]) -> T {
    pops.iter().fold(T::zero(), |a, &p| a + p * p)
}

/// Variance of the occupation profile `nᵢ = (⟨σᶻᵢ⟩ + 1)/2` over site
/// positions `0..N`, normalized by the total occupation.
pub fn spread_width<T: Real>(magnetization: &[T]) -> T {
    let half = T::lit(0.5);
    let occ: Vec<T> = magnetization.iter().map(|&m| (m + T::one()) * half).collect();
    let total = occ.iter().fold(T::zero(), |a, &n| a + n);
    if total <= T::zero() {
        return T::zero();
    }
    let mean = occ
        .iter()
        .enumerate()
        .fold(T::zero(), |a, (i, &n)| a + n * T::lit(i as f64))
        / total;
    occ.iter()
        .enumerate()
        .fold(T::zero(), |a, (i, &n)| {
            let x = T::lit(i as f64) - mean;
            a + n * x * x
        })
        / total
}

/// Observable time series of one trajectory (or an ensemble mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub n_sites: usize,
    pub n_excitations: usize,
    pub times: Vec<f64>,
    /// `magnetization[t][i] = ⟨σᶻᵢ⟩` at `times[t]`.
    pub magnetization: Vec<Vec<f64>>,
    /// Only for single-excitation sectors.
    pub ipr: Option<Vec<f64>>,
    pub ier: Vec<f64>,
    pub width: Vec<f64>,
}

/// Per-sample invariant deviations reported by [`ObservableRecord::push`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleChecks {
    pub magnetization_drift: f64,
    pub bound_violation: f64,
}

impl ObservableRecord {
    pub fn with_capacity(basis: &SectorBasis, len: usize) -> Self {
        Self {
            n_sites: basis.n_sites(),
            n_excitations: basis.n_excitations(),
            times: Vec::with_capacity(len),
            magnetization: Vec::with_capacity(len),
            ipr: (basis.n_excitations() == 1).then(|| Vec::with_capacity(len)),
            ier: Vec::with_capacity(len),
            width: Vec::with_capacity(len),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Append observables computed from configuration populations.
    pub fn push<T: Real>(&mut self, t: f64, basis: &SectorBasis, pops: &[T]) -> Result<SampleChecks> {
        if pops.len() != basis.dimension() {
            return Err(Error::DimensionMismatch {
                expected: basis.dimension().to_string(),
                found: pops.len().to_string(),
            });
        }
        let mag = magnetization_from_populations(basis, pops);
        let width = spread_width(&mag).as_f64();
        let concentration = sum_of_squares(pops).as_f64();
        let mag: Vec<f64> = mag.into_iter().map(Real::as_f64).collect();

        let expected_total = 2.0 * basis.n_excitations() as f64 - basis.n_sites() as f64;
        let drift = (mag.iter().sum::<f64>() - expected_total).abs();
        let lower = 1.0 / basis.dimension() as f64;
        let violation = (lower - concentration).max(concentration - 1.0).max(0.0);

        self.times.push(t);
        self.magnetization.push(mag);
        if let Some(ipr) = self.ipr.as_mut() {
            ipr.push(concentration);
        }
        self.ier.push(concentration);
        self.width.push(width);
        Ok(SampleChecks {
            magnetization_drift: drift,
            bound_violation: violation,
        })
    }

    pub fn central_site(&self) -> usize {
        self.n_sites / 2
    }

    /// Time series of one observable.
    pub fn series(&self, observable: Observable) -> Result<Vec<f64>> {
        match observable {
            Observable::Magnetization(site) => {
                if site >= self.n_sites {
                    return Err(Error::IndexOutOfRange {
                        what: "site",
                        index: site,
                        limit: self.n_sites,
                    });
                }
                Ok(self.magnetization.iter().map(|m| m[site]).collect())
            }
            Observable::CentralMagnetization => {
                self.series(Observable::Magnetization(self.central_site()))
            }
            Observable::Ipr => self
                .ipr
                .clone()
                .ok_or(Error::WrongSector(self.n_excitations)),
            Observable::Ier => Ok(self.ier.clone()),
            Observable::Width => Ok(self.width.clone()),
        }
    }

    /// Index of the grid point nearest `t`, if it lies within half a step.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::invalid("empty record"))?;
        let step = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            f64::INFINITY
        };
        if (self.times[idx] - t).abs() > 0.5 * step + 1e-12 {
            return Err(Error::invalid(format!(
                "t = {t} is outside the recorded grid [{}, {}]",
                self.times[0],
                self.times[self.times.len() - 1]
            )));
        }
        Ok(idx)
    }
}

/// Selects one scalar observable series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    Magnetization(usize),
    CentralMagnetization,
    Ipr,
    Ier,
    Width,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Magnetization(i) => write!(f, "mz:{i}"),
            Observable::CentralMagnetization => f.write_str("central"),
            Observable::Ipr => f.write_str("ipr"),
            Observable::Ier => f.write_str("ier"),
            Observable::Width => f.write_str("width"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(Observable::CentralMagnetization),
            "ipr" => Ok(Observable::Ipr),
            "ier" => Ok(Observable::Ier),
            "width" => Ok(Observable::Width),
            _ => s
                .strip_prefix("mz:")
                .and_then(|i| i.parse().ok())
                .map(Observable::Magnetization)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "unknown observable `{s}` (expected central, ipr, ier, width or mz:<site>)"
                    ))
                }),
        }
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// First grid time at which either edge site deviates from its initial
/// `⟨σᶻ⟩` by more than `epsilon`; the last grid time if that never happens.
pub fn boundary_stop_time(record: &ObservableRecord, epsilon: f64) -> f64 {
    let Some(first) = record.magnetization.first() else {
        return 0.0;
    };
    let last_site = record.n_sites - 1;
    let (left0, right0) = (first[0], first[last_site]);
    record
        .magnetization
        .iter()
        .zip(&record.times)
        .find(|(m, _)| (m[0] - left0).abs() > epsilon || (m[last_site] - right0).abs() > epsilon)
        .map(|(_, &t)| t)
        .unwrap_or_else(|| *record.times.last().expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyAxis {
    /// `ω = 2πk / (n Δt)`.
    #[default]
    Angular,
    /// `f = k / (n Δt)`.
    Ordinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpectrumOptions {
    #[serde(default)]
    pub axis: FrequencyAxis,
    #[serde(default)]
    pub window: Window,
}

/// One-sided amplitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub axis: FrequencyAxis,
}

impl Spectrum {
    /// Bin spacing on the frequency axis.
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// Largest amplitude excluding the zero-frequency bin.
    pub fn dominant_peak(&self) -> Option<(usize, f64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .skip(1)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| (k, self.frequencies[k]))
    }
}

pub const MIN_SPECTRUM_SAMPLES: usize = 8;

/// Spectrum of `a − b` after removing its mean.
///
/// The amplitude in bin `k` is `2|X_k|/n` (the DC and Nyquist bins are not
/// doubled), so a unit-amplitude tone on a bin centre reads 1.
pub fn fft_difference_spectrum<T: Real + FftNum>(
    series_a: &[T],
    series_b: &[T],
    grid_dt: f64,
    options: SpectrumOptions,
) -> Result<Spectrum> {
    if series_a.len() != series_b.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} samples", series_a.len()),
            found: format!("{} samples", series_b.len()),
        });
    }
    let n = series_a.len();
    if n < MIN_SPECTRUM_SAMPLES {
        return Err(Error::invalid(format!(
            "spectrum needs at least {MIN_SPECTRUM_SAMPLES} samples, got {n}"
        )));
    }
    if !(grid_dt > 0.0) {
        return Err(Error::invalid(format!("grid spacing must be positive, got {grid_dt}")));
    }

    let mut diff: Vec<T> = series_a.iter().zip(series_b).map(|(&a, &b)| a - b).collect();
    remove_mean(&mut diff);
    if options.window == Window::Hann {
        let two_pi = 2.0 * std::f64::consts::PI;
        for (i, x) in diff.iter_mut().enumerate() {
            let w = 0.5 * (1.0 - (two_pi * i as f64 / (n - 1) as f64).cos());
            *x *= T::lit(w);
        }
        remove_mean(&mut diff);
    }

    let mut buffer: Vec<Complex<T>> = diff.iter().map(|&x| Complex::new(x, T::zero())).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buffer);

    let half = n / 2;
    let scale = match options.axis {
        FrequencyAxis::Angular => 2.0 * std::f64::consts::PI,
        FrequencyAxis::Ordinary => 1.0,
    } / (n as f64 * grid_dt);
    let mut frequencies = Vec::with_capacity(half + 1);
    let mut amplitudes = Vec::with_capacity(half + 1);
    for (k, x) in buffer.iter().take(half + 1).enumerate() {
        let doubled = k != 0 && !(n % 2 == 0 && k == half);
        let factor = if doubled { 2.0 } else { 1.0 };
        frequencies.push(k as f64 * scale);
        amplitudes.push(factor * T::abs_complex(*x).as_f64() / n as f64);
    }
    Ok(Spectrum {
        frequencies,
        amplitudes,
        axis: options.axis,
    })
}

fn remove_mean<T: Real>(xs: &mut [T]) {
    let mean = xs.iter().fold(T::zero(), |a, &x| a + x) / T::lit(xs.len() as f64);
    for x in xs.iter_mut() {
        *x -= mean;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn diag_state(basis: Arc<SectorBasis>, diag: &[f64]) -> DensityMatrix<f64> {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            diag.len(),
            diag.iter().map(|&x| nalgebra::Complex::new(x, 0.0)),
        ));
        DensityMatrix::new(basis, m).unwrap()
    }

    #[test]
    fn magnetization_of_localized_and_mixed_states() {
        let b = Arc::new(SectorBasis::new(5, 1).unwrap());
        let rho = crate::dynamics::initial_state::<f64>(b, &[2]).unwrap();
        assert_eq!(local_magnetization(&rho), vec![-1.0, -1.0, 1.0, -1.0, -1.0]);

        let b = Arc::new(SectorBasis::new(2, 1).unwrap());
        let rho = DensityMatrix::<f64>::maximally_mixed(b);
        assert_eq!(local_magnetization(&rho), vec![0.0, 0.0]);
    }

    #[test]
    fn ipr_values() {
        let b = Arc::new(SectorBasis::new(41, 1).unwrap());
        let rho = crate::dynamics::initial_state::<f64>(b.clone(), &[20]).unwrap();
        assert_eq!(ipr(&rho).unwrap(), 1.0);
        let uniform = DensityMatrix::<f64>::maximally_mixed(b);
        assert!((ipr(&uniform).unwrap() - 1.0 / 41.0).abs() < 1e-15);

        let b = Arc::new(SectorBasis::new(2, 1).unwrap());
        assert_eq!(ipr(&diag_state(b, &[0.5, 0.5])).unwrap(), 0.5);
    }

    #[test]
    fn ipr_needs_one_excitation() {
        let b = Arc::new(SectorBasis::new(6, 2).unwrap());
        let rho = DensityMatrix::<f64>::maximally_mixed(b);
        assert!(matches!(ipr(&rho), Err(Error::WrongSector(2))));
    }

    #[test]
    fn ier_values() {
        let b = Arc::new(SectorBasis::new(20, 2).unwrap());
        let rho = crate::dynamics::initial_state::<f64>(b.clone(), &[9, 10]).unwrap();
        assert_eq!(ier(&rho), 1.0);
        let mixed = DensityMatrix::<f64>::maximally_mixed(b);
        assert!((ier(&mixed) - 1.0 / 190.0).abs() < 1e-15);
    }

    #[test]
    fn widths() {
        assert_eq!(spread_width(&[-1.0f64, 1.0, -1.0]), 0.0);
        // half an excitation on sites 0 and 2
        assert!((spread_width(&[0.0f64, -1.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stop_time_rules() {
        let b = SectorBasis::new(5, 1).unwrap();
        let mut rec = ObservableRecord::with_capacity(&b, 4);
        for (k, edge) in [0.0, 0.0, 2e-3, 0.1].iter().enumerate() {
            let pops = [edge / 2.0, 0.0, 1.0 - edge, 0.0, edge / 2.0];
            rec.push(k as f64 * 0.5, &b, &pops).unwrap();
        }
        assert_eq!(boundary_stop_time(&rec, 1e-3), 1.0);
        assert_eq!(boundary_stop_time(&rec, 0.5), 1.5);
    }

    #[test]
    fn observable_names_round_trip() {
        for o in [
            Observable::Magnetization(7),
            Observable::CentralMagnetization,
            Observable::Ipr,
            Observable::Ier,
            Observable::Width,
        ] {
            assert_eq!(o.to_string().parse::<Observable>().unwrap(), o);
        }
        assert!("mz:x".parse::<Observable>().is_err());
    }

    #[test]
    fn spectrum_errors() {
        let a = vec![0.0f64; 7];
        assert!(fft_difference_spectrum(&a, &a, 0.1, SpectrumOptions::default()).is_err());
        let b = vec![0.0f64; 9];
        assert!(fft_difference_spectrum(&b, &a, 0.1, SpectrumOptions::default()).is_err());
    }

    #[test]
    fn identical_series_have_flat_spectrum() {
        let a: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let s = fft_difference_spectrum(&a, &a, 0.1, SpectrumOptions::default()).unwrap();
        assert!(s.amplitudes.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pure_tone_peak() {
        let dt = 0.02;
        let omega0 = 10.0;
        let n = 2000;
        let a: Vec<f64> = (0..n).map(|i| (omega0 * i as f64 * dt).sin() + 0.3).collect();
        let b = vec![0.0; n];
        for window in [Window::Rectangular, Window::Hann] {
            let s = fft_difference_spectrum(
                &a,
                &b,
                dt,
                SpectrumOptions {
                    axis: FrequencyAxis::Angular,
                    window,
                },
            )
            .unwrap();
            let (_, w) = s.dominant_peak().unwrap();
            assert!((w - omega0).abs() <= s.resolution(), "{window:?}: peak at {w}");
            assert!(s.amplitudes[0] < 1e-12);
        }
        let s = fft_difference_spectrum(
            &a,
            &b,
            dt,
            SpectrumOptions {
                axis: FrequencyAxis::Ordinary,
                window: Window::Rectangular,
            },
        )
        .unwrap();
        let (_, f) = s.dominant_peak().unwrap();
        assert!((f - omega0 / (2.0 * std::f64::consts::PI)).abs() <= s.resolution());
    }

    #[test]
    fn spectrum_ignores_subtraction_order() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).cos() * (-0.01 * i as f64).exp()).collect();
        let b: Vec<f64> = (0..100).map(|i| (i as f64 * 0.11).sin()).collect();
        let ab = fft_difference_spectrum(&a, &b, 0.05, SpectrumOptions::default()).unwrap();
        let ba = fft_difference_spectrum(&b, &a, 0.05, SpectrumOptions::default()).unwrap();
        for (x, y) in ab.amplitudes.iter().zip(&ba.amplitudes) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
