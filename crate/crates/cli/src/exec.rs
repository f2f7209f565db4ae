//! Verb implementations.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use scm_core::{
    fft_difference_spectrum, run_ensemble, EnsembleSeries, Observable, Real, SectorBasis,
    SpectralHamiltonian, Spectrum, SpectrumOptions,
};
use serde::Serialize;

use crate::output::{
    read_series_csv, series_csv, spectrum_csv, PointMetadata, RunMetadata, Staging,
};
use crate::plot::{heatmap, Line, LinePlot};
use crate::spec::{parse_run_spec, NoisePoint, Precision, RunSpec};
use crate::{Cli, CliError, Command};

/// One finished noise point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: NoisePoint,
    pub series: EnsembleSeries,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub out_dir: PathBuf,
    pub plots: bool,
    pub command: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumMetadata {
    pub file: String,
    pub a: String,
    pub b: String,
    pub observable: Observable,
    pub n_samples: usize,
    pub resolution: f64,
    pub peak_frequency: Option<f64>,
    pub peak_amplitude: Option<f64>,
}

pub fn dispatch(cli: &Cli, command_line: &str) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { spec } => {
            let spec = load(cli, spec)?;
            let points = spec.noise_points()?;
            let dim = SectorBasis::new(spec.model.n_sites, spec.model.n_excitations)
                .map_err(|e| CliError::Validation(e.to_string()))?
                .dimension();
            println!(
                "ok: {} noise point(s), sector dimension {dim}, {} trajectories each",
                points.len(),
                spec.ensemble.n_trajectories
            );
            Ok(())
        }
        Command::Run { spec: path } | Command::Sweep { spec: path } => {
            let sweep = matches!(cli.command, Command::Sweep { .. });
            let spec = load(cli, path)?;
            match (sweep, spec.noise.grid.is_some()) {
                (false, true) => {
                    return Err(CliError::Validation(
                        "noise.grid: grids are expanded by `sweep`, not `run`".into(),
                    ))
                }
                (true, false) => {
                    return Err(CliError::Validation(
                        "noise: `sweep` needs a [noise.grid] table".into(),
                    ))
                }
                _ => {}
            }
            let out_dir = cli
                .out_dir
                .clone()
                .or_else(|| spec.outputs.dir.clone())
                .unwrap_or_else(|| default_out_dir(path));
            let opts = ExecOptions {
                out_dir,
                plots: spec.outputs.plots && !cli.no_plots,
                command: command_line.to_string(),
            };
            let dir = execute(&spec, &opts)?;
            println!("{}", dir.display());
            Ok(())
        }
        Command::Fft {
            run_a,
            run_b,
            observable,
            axis,
            window,
            all_times,
        } => {
            let options = SpectrumOptions {
                axis: (*axis).into(),
                window: (*window).into(),
            };
            let out_dir = cli.out_dir.clone().unwrap_or_else(|| {
                run_a
                    .parent()
                    .filter(|p| !p.as_os_str().is_empty())
                    .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
            });
            let meta = fft_files(run_a, run_b, *observable, options, !*all_times, &out_dir, !cli.no_plots)?;
            match (meta.peak_frequency, meta.peak_amplitude) {
                (Some(f), Some(a)) => println!(
                    "{}: peak at {f} (amplitude {a}, resolution {})",
                    out_dir.join(&meta.file).display(),
                    meta.resolution
                ),
                _ => println!("{}: no peak", out_dir.join(&meta.file).display()),
            }
            Ok(())
        }
    }
}

/// Parse a spec and apply the command-line overrides.
fn load(cli: &Cli, path: &Path) -> Result<RunSpec, CliError> {
    let mut spec = parse_run_spec(path)?;
    if let Some(seed) = cli.seed {
        spec.ensemble.master_seed = seed;
    }
    if let Some(w) = cli.workers {
        spec.ensemble.workers = Some(w as usize);
    }
    Ok(spec)
}

fn default_out_dir(spec_path: &Path) -> PathBuf {
    let stem = spec_path
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from("results").join(stem)
}

/// Run the ensemble of every noise point, in order.
pub fn run_points(spec: &RunSpec) -> Result<Vec<PointResult>, CliError> {
    spec.validate()?;
    match spec.model.precision {
        Precision::F64 => run_points_with::<f64>(spec),
        Precision::F32 => run_points_with::<f32>(spec),
    }
}

fn run_points_with<T: Real>(spec: &RunSpec) -> Result<Vec<PointResult>, CliError> {
    let points = spec.noise_points()?;
    let basis = SectorBasis::new(spec.model.n_sites, spec.model.n_excitations)
        .map_err(|e| CliError::Validation(format!("model: {e}")))?;
    let h = SpectralHamiltonian::<T>::new(Arc::new(basis), spec.model_params())
        .map_err(CliError::runtime)?;
    let traj = spec.trajectory_config();
    let mut out = Vec::with_capacity(points.len());
    for (i, point) in points.into_iter().enumerate() {
        let clock = Instant::now();
        let series = run_ensemble(&h, &point.config, &traj, &spec.ensemble_config(i))
            .map_err(|e| CliError::Runtime(format!("noise point {}: {e}", point.label)))?;
        let wall_seconds = clock.elapsed().as_secs_f64();
        eprintln!(
            "{}: {} trajectories in {wall_seconds:.2} s, effective t_final {}",
            point.label, spec.ensemble.n_trajectories, series.effective_t_final
        );
        out.push(PointResult {
            point,
            series,
            wall_seconds,
        });
    }
    Ok(out)
}

/// Run everything and write the result directory. Nothing is left behind
/// if a step fails.
pub fn execute(spec: &RunSpec, opts: &ExecOptions) -> Result<PathBuf, CliError> {
    let clock = Instant::now();
    let staging = Staging::new(&opts.out_dir).map_err(|e| {
        CliError::Runtime(format!("{}: {e}", opts.out_dir.display()))
    })?;
    let results = run_points(spec)?;

    let mut points = Vec::new();
    for r in &results {
        let file = format!("{}.csv", r.point.label);
        staging.write(&file, &series_csv(&r.series)?)?;
        points.push(PointMetadata {
            label: r.point.label.clone(),
            file,
            shape: r.point.shape,
            rate: r.point.rate,
            master_seed: r.series.metadata.ensemble.master_seed,
            effective_t_final: r.series.effective_t_final,
            mean_collisions: r.series.mean_collisions,
            checks: r.series.checks,
            wall_seconds: r.wall_seconds,
        });
    }

    if let Some(summary) = &spec.outputs.summary {
        staging.write("summary.csv", &summary_csv(&results, summary.observable, summary.time)?)?;
        if opts.plots {
            if let Some(svg) = summary_plot(&results, summary.observable, summary.time)? {
                staging.write("summary.svg", svg.as_bytes())?;
            }
        }
    }

    let mut spectra = Vec::new();
    for f in &spec.outputs.fft {
        let (a, b) = (&results[f.a], &results[f.b]);
        let options = SpectrumOptions {
            axis: f.axis,
            window: f.window,
        };
        let (xa, _) = a.series.series(f.observable).map_err(CliError::runtime)?;
        let (xb, _) = b.series.series(f.observable).map_err(CliError::runtime)?;
        let len = if f.pre_boundary {
            a.series.effective_len().min(b.series.effective_len())
        } else {
            xa.len()
        };
        let dt = grid_step(a.series.times())?;
        let spectrum = fft_difference_spectrum::<f64>(&xa[..len], &xb[..len], dt, options)
            .map_err(|e| CliError::Runtime(format!("outputs.fft: {e}")))?;
        let stem = format!("fft_{}_minus_{}", a.point.label, b.point.label);
        let (meta, files) =
            render_spectrum(&stem, &spectrum, len, f.observable, &a.point.label, &b.point.label, opts.plots)?;
        for (name, bytes) in files {
            staging.write(&name, &bytes)?;
        }
        spectra.push(meta);
    }

    if opts.plots {
        for obs in spec.plot_observables() {
            let svg = time_plot(&results, obs)?;
            staging.write(&format!("plot_{}.svg", file_tag(obs)), svg.as_bytes())?;
        }
        for r in &results {
            let svg = heatmap(
                &format!("<σᶻ> {}", r.point.label),
                r.series.times(),
                &r.series.mean.magnetization,
                r.series.effective_t_final,
            );
            staging.write(&format!("heatmap_{}.svg", r.point.label), svg.as_bytes())?;
        }
    }

    let meta = RunMetadata {
        code_version: env!("CARGO_PKG_VERSION"),
        command: opts.command.clone(),
        master_seed: spec.ensemble.master_seed,
        workers: spec.ensemble.workers,
        spec: spec.clone(),
        points,
        spectra,
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(CliError::runtime)?;
    staging.write("run.json", &json)?;
    staging
        .commit()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", opts.out_dir.display())))
}

fn file_tag(obs: Observable) -> String {
    obs.to_string().replace(':', "")
}

fn grid_step(times: &[f64]) -> Result<f64, CliError> {
    match times {
        [t0, t1, ..] if t1 > t0 => Ok(t1 - t0),
        _ => Err(CliError::Validation("time grid needs two increasing samples".into())),
    }
}

fn summary_csv(results: &[PointResult], obs: Observable, time: f64) -> Result<Vec<u8>, CliError> {
    use crate::output::fmt_f64;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "shape", "rate", "time", "observable", "mean", "se", "pre_boundary"])
        .map_err(CliError::runtime)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in results {
        let (mean, se) = r.series.value_at(obs, time).map_err(CliError::runtime)?;
        w.write_record([
            r.point.label.clone(),
            opt(r.point.shape),
            opt(r.point.rate),
            fmt_f64(time),
            obs.to_string(),
            fmt_f64(mean),
            fmt_f64(se),
            u8::from(time <= r.series.effective_t_final + 1e-12).to_string(),
        ])
        .map_err(CliError::runtime)?;
    }
    w.into_inner().map_err(|e| CliError::runtime(e.into_error()))
}

/// Observable at a fixed time against the shape, one line per rate.
fn summary_plot(results: &[PointResult], obs: Observable, time: f64) -> Result<Option<String>, CliError> {
    let mut rates: Vec<f64> = results.iter().filter_map(|r| r.point.rate).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    if rates.is_empty() {
        return Ok(None);
    }
    let mut lines = Vec::new();
    for rate in rates {
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        for r in results.iter().filter(|r| r.point.rate == Some(rate)) {
            let (m, se) = r.series.value_at(obs, time).map_err(CliError::runtime)?;
            pts.push((r.point.shape.unwrap_or(f64::NAN), m, se));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        lines.push(Line {
            label: format!("r_c = {rate}"),
            x: pts.iter().map(|p| p.0).collect(),
            y: pts.iter().map(|p| p.1).collect(),
            err: Some(pts.iter().map(|p| p.2).collect()),
        });
    }
    let plot = LinePlot {
        title: format!("{obs} at tJ = {time}"),
        x_label: "shape ν".into(),
        y_label: obs.to_string(),
        log_x: true,
        markers: true,
        lines,
    };
    Ok(Some(plot.render()))
}

fn time_plot(results: &[PointResult], obs: Observable) -> Result<String, CliError> {
    let mut lines = Vec::new();
    for r in results {
        let (mean, se) = r.series.series(obs).map_err(CliError::runtime)?;
        let len = r.series.effective_len();
        lines.push(Line {
            label: r.point.label.clone(),
            x: r.series.times()[..len].to_vec(),
            y: mean[..len].to_vec(),
            err: Some(se[..len].to_vec()),
        });
    }
    Ok(LinePlot {
        title: format!("{obs} (pre-boundary window)"),
        x_label: "t J".into(),
        y_label: obs.to_string(),
        log_x: false,
        markers: false,
        lines,
    }
    .render())
}

type Files = Vec<(String, Vec<u8>)>;

fn render_spectrum(
    stem: &str,
    spectrum: &Spectrum,
    n_samples: usize,
    obs: Observable,
    a: &str,
    b: &str,
    plots: bool,
) -> Result<(SpectrumMetadata, Files), CliError> {
    let file = format!("{stem}.csv");
    let mut files = vec![(file.clone(), spectrum_csv(spectrum)?)];
    if plots {
        let axis = match spectrum.axis {
            scm_core::FrequencyAxis::Angular => "ω / J",
            scm_core::FrequencyAxis::Ordinary => "f / J",
        };
        let svg = LinePlot {
            title: format!("|FFT| of {obs}: {a} − {b}"),
            x_label: axis.into(),
            y_label: "amplitude".into(),
            log_x: false,
            markers: false,
            lines: vec![Line {
                label: obs.to_string(),
                x: spectrum.frequencies.clone(),
                y: spectrum.amplitudes.clone(),
                err: None,
            }],
        }
        .render();
        files.push((format!("{stem}.svg"), svg.into_bytes()));
    }
    let peak = spectrum.dominant_peak();
    let meta = SpectrumMetadata {
        file,
        a: a.into(),
        b: b.into(),
        observable: obs,
        n_samples,
        resolution: spectrum.resolution(),
        peak_frequency: peak.map(|(_, f)| f),
        peak_amplitude: peak.map(|(k, _)| spectrum.amplitudes[k]),
    };
    Ok((meta, files))
}

/// The `fft` verb: spectrum of `a − b` from two stored series CSVs.
pub fn fft_files(
    run_a: &Path,
    run_b: &Path,
    obs: Observable,
    options: SpectrumOptions,
    pre_boundary: bool,
    out_dir: &Path,
    plots: bool,
) -> Result<SpectrumMetadata, CliError> {
    let a = read_series_csv(run_a, obs)?;
    let b = read_series_csv(run_b, obs)?;
    if a.times.len() != b.times.len()
        || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-9)
    {
        return Err(CliError::Validation(format!(
            "{} and {} are on different time grids",
            run_a.display(),
            run_b.display()
        )));
    }
    let len = if pre_boundary {
        let lead = |p: &[bool]| p.iter().take_while(|&&x| x).count();
        lead(&a.pre_boundary).min(lead(&b.pre_boundary))
    } else {
        a.times.len()
    };
    let dt = grid_step(&a.times)?;
    let spectrum = fft_difference_spectrum::<f64>(&a.mean[..len], &b.mean[..len], dt, options)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let stem_of = |p: &Path| {
        p.file_stem()
            .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
    };
    let (la, lb) = (stem_of(run_a), stem_of(run_b));
    let stem = format!("fft_{la}_minus_{lb}");
    let (meta, files) = render_spectrum(&stem, &spectrum, len, obs, &la, &lb, plots)?;
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", out_dir.display()));
    std::fs::create_dir_all(out_dir).map_err(io)?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = out_dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for p in written {
                let _ = std::fs::remove_file(p);
            }
            return Err(io(e));
        }
        written.push(path);
    }
    Ok(meta)
}
