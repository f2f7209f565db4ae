//! Result files: per-point CSV series, spectra, run metadata, staging.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use scm_core::{EnsembleSeries, Observable, Spectrum, StateChecks};
use serde::Serialize;

use crate::spec::RunSpec;
use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn column_name(obs: Observable, n_sites: usize) -> String {
    match obs {
        Observable::Magnetization(i) => format!("mz{i}"),
        Observable::CentralMagnetization => format!("mz{}", n_sites / 2),
        Observable::Ipr => "ipr".into(),
        Observable::Ier => "ier".into(),
        Observable::Width => "width".into(),
    }
}

/// Mean and standard error of every observable on the full grid.
///
/// `pre_boundary` marks grid points up to the ensemble's effective final
/// time.
pub fn series_csv(series: &EnsembleSeries) -> Result<Vec<u8>, CliError> {
    let n = series.mean.n_sites;
    let has_ipr = series.mean.ipr.is_some();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_string(), "pre_boundary".to_string()];
    for i in 0..n {
        header.push(format!("mz{i}_mean"));
        header.push(format!("mz{i}_se"));
    }
    let mut scalars = Vec::new();
    if has_ipr {
        scalars.push(Observable::Ipr);
    }
    scalars.extend([Observable::Ier, Observable::Width]);
    for obs in &scalars {
        header.push(format!("{}_mean", column_name(*obs, n)));
        header.push(format!("{}_se", column_name(*obs, n)));
    }
    w.write_record(&header).map_err(CliError::runtime)?;

    let columns: Vec<(Vec<f64>, Vec<f64>)> = scalars
        .iter()
        .map(|&obs| series.series(obs).map_err(CliError::runtime))
        .collect::<Result<_, _>>()?;
    let cut = series.effective_len();
    for (k, &t) in series.times().iter().enumerate() {
        let mut row = vec![fmt_f64(t), u8::from(k < cut).to_string()];
        for i in 0..n {
            row.push(fmt_f64(series.mean.magnetization[k][i]));
            row.push(fmt_f64(series.std_error.magnetization[k][i]));
        }
        for (mean, se) in &columns {
            row.push(fmt_f64(mean[k]));
            row.push(fmt_f64(se[k]));
        }
        w.write_record(&row).map_err(CliError::runtime)?;
    }
    w.into_inner().map_err(|e| CliError::runtime(e.into_error()))
}

/// One observable read back from a series CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSeries {
    pub times: Vec<f64>,
    pub pre_boundary: Vec<bool>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

pub fn read_series_csv(path: &Path, obs: Observable) -> Result<StoredSeries, CliError> {
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("no column `{name}`")))
    };
    let n_sites = headers.iter().filter(|h| h.starts_with("mz") && h.ends_with("_mean")).count();
    let name = column_name(obs, n_sites);
    let (ti, pi, mi, si) = (
        find("time")?,
        find("pre_boundary")?,
        find(&format!("{name}_mean"))?,
        find(&format!("{name}_se"))?,
    );
    let mut out = StoredSeries {
        times: Vec::new(),
        pre_boundary: Vec::new(),
        mean: Vec::new(),
        std_error: Vec::new(),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .parse()
                .map_err(|_| bad(format!("row {}: `{}` is not a number", line + 2, &rec[i])))
        };
        out.times.push(num(ti)?);
        out.pre_boundary.push(&rec[pi] == "1");
        out.mean.push(num(mi)?);
        out.std_error.push(num(si)?);
    }
    Ok(out)
}

pub fn spectrum_csv(spectrum: &Spectrum) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let axis = match spectrum.axis {
        scm_core::FrequencyAxis::Angular => "omega",
        scm_core::FrequencyAxis::Ordinary => "frequency",
    };
    w.write_record([axis, "amplitude"]).map_err(CliError::runtime)?;
    for (f, a) in spectrum.frequencies.iter().zip(&spectrum.amplitudes) {
        w.write_record([fmt_f64(*f), fmt_f64(*a)]).map_err(CliError::runtime)?;
    }
    w.into_inner().map_err(|e| CliError::runtime(e.into_error()))
}

#[derive(Debug, Clone, Serialize)]
pub struct PointMetadata {
    pub label: String,
    pub file: String,
    pub shape: Option<f64>,
    pub rate: Option<f64>,
    pub master_seed: u64,
    pub effective_t_final: f64,
    pub mean_collisions: f64,
    pub checks: StateChecks,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub code_version: &'static str,
    pub command: String,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub spec: RunSpec,
    pub points: Vec<PointMetadata>,
    pub spectra: Vec<crate::exec::SpectrumMetadata>,
    pub wall_seconds: f64,
}

/// Scratch directory next to the destination. Files are moved into the
/// destination by [`Staging::commit`]; dropping without committing
/// deletes everything written so far.
#[derive(Debug)]
pub struct Staging {
    dir: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl Staging {
    pub fn new(target: &Path) -> io::Result<Self> {
        let name = target
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let dir = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir)?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes).map_err(CliError::runtime)
    }

    pub fn commit(mut self) -> io::Result<PathBuf> {
        fs::create_dir_all(&self.target)?;
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            fs::rename(entry.path(), self.target.join(entry.file_name()))?;
        }
        fs::remove_dir(&self.dir)?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}
