//! The four subcommands. Each reads a [`RunConfig`], computes everything in
//! memory and then writes its files in one pass, so outputs never depend on
//! scheduling.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use beamkit_core::{
    coherence_matrix, robust_mvdr, BemModel, BemOptions, BeamformerWeights, ChiefConfig, Complex64, DesignSpec,
    Direction, Error as CoreError, MetricRow, MicArrayGeometry, NoisePowerModel, PlaneWaveModel, RigidSphere, RigidSphereModel,
    SeriesConfig, SphericalWaveModel, SteeringDictionary, SteeringModel, TotalFieldModel,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{ModelKind, RunConfig};
use crate::error::{CliError, Result, EXIT_OK, EXIT_PARTIAL};
use crate::formats::{self, ComparisonRow, ScatterRow, SummaryRow, SweepRecord};

pub const DICTIONARY_FILE: &str = "dictionary.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SUMMARY_FILE: &str = "comparison_summary.csv";
pub const SCATTER_FILE: &str = "scatterfield.csv";

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Design rows skipped because the WNG floor could not be met.
    pub skipped: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.skipped.is_empty() {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }
}

/// A steering source selected by the config.
pub enum ModelHandle {
    Plane(PlaneWaveModel),
    Spherical(SphericalWaveModel),
    Sphere(RigidSphereModel),
    Bem(Box<BemModel>),
    Dictionary(SteeringDictionary),
}

impl ModelHandle {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let kind = cfg.model_kind()?;
        let setup = formats::read_geometry(cfg.geometry_path()?)?;
        let (geometry, consts) = (setup.geometry, setup.consts);
        let distance = cfg.source_distance()?;
        let setup_err = |e: CoreError| cfg.error(format!("cannot set up `{}` model: {e}", kind.name()));
        if distance.is_some() && !matches!(kind, ModelKind::FreefieldSpherical | ModelKind::Bem) {
            return Err(cfg.error(format!("`source_distance` is not supported by the `{}` model", kind.name())));
        }
        Ok(match kind {
            ModelKind::FreefieldPlane => ModelHandle::Plane(PlaneWaveModel::new(geometry, consts)),
            ModelKind::FreefieldSpherical => {
                let d = distance.ok_or_else(|| cfg.error("missing required key `source_distance`"))?;
                ModelHandle::Spherical(SphericalWaveModel::new(geometry, consts, d).map_err(setup_err)?)
            }
            ModelKind::RigidSphere => {
                let (radius, center) = cfg.sphere_section()?;
                let sphere = RigidSphere::new(radius, center).map_err(setup_err)?;
                ModelHandle::Sphere(
                    RigidSphereModel::new(geometry, sphere, SeriesConfig::default(), consts).map_err(setup_err)?,
                )
            }
            ModelKind::Bem => {
                let mesh = formats::read_mesh(cfg.mesh_path()?)?;
                let chief = match cfg.bem.chief_points {
                    0 => ChiefConfig::none(),
                    n => ChiefConfig::auto(&mesh, n).map_err(setup_err)?,
                };
                let options = BemOptions {
                    max_elements: cfg.bem.max_elements,
                };
                let mut model = BemModel::new(mesh, geometry, chief, consts, options).map_err(setup_err)?;
                if let Some(d) = distance {
                    model = model.with_source_distance(d).map_err(setup_err)?;
                }
                ModelHandle::Bem(Box::new(model))
            }
            ModelKind::DictionaryFile => {
                ModelHandle::Dictionary(formats::read_dictionary(cfg.dictionary_path()?, &geometry)?)
            }
        })
    }

    pub fn as_steering(&self) -> &dyn SteeringModel {
        match self {
            ModelHandle::Plane(m) => m,
            ModelHandle::Spherical(m) => m,
            ModelHandle::Sphere(m) => m,
            ModelHandle::Bem(m) => m.as_ref(),
            ModelHandle::Dictionary(m) => m,
        }
    }

    pub fn geometry(&self) -> &MicArrayGeometry {
        match self {
            ModelHandle::Plane(m) => m.geometry(),
            ModelHandle::Spherical(m) => m.geometry(),
            ModelHandle::Sphere(m) => m.geometry(),
            ModelHandle::Bem(m) => m.geometry(),
            ModelHandle::Dictionary(m) => m.geometry(),
        }
    }

    /// `None` for models without a scattered field.
    pub fn as_total(&self) -> Option<&dyn TotalFieldModel> {
        match self {
            ModelHandle::Sphere(m) => Some(m),
            ModelHandle::Bem(m) => Some(m.as_ref()),
            _ => None,
        }
    }

    /// BEM systems are large; one frequency at a time keeps memory bounded
    /// and the assembly is parallel on its own.
    fn frequencies_in_parallel(&self) -> bool {
        !matches!(self, ModelHandle::Bem(_))
    }

    /// Runs `job` for every frequency, in parallel where allowed, and returns
    /// results in frequency order.
    fn per_frequency<T: Send>(&self, freqs: &[f64], job: impl Fn(f64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        if self.frequencies_in_parallel() {
            freqs.par_iter().map(|&f| job(f)).collect()
        } else {
            freqs.iter().map(|&f| job(f)).collect()
        }
    }
}

fn create_output(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_file(
    dir: &Path,
    name: &str,
    write: impl FnOnce(BufWriter<File>) -> csv::Result<()>,
) -> Result<PathBuf> {
    let (path, out) = create_output(dir, name)?;
    write(out).map_err(|e| csv_err(&path, e))?;
    info!("wrote {}", path.display());
    Ok(path)
}

/// Builds the steering dictionary over the configured frequency and
/// direction grids and writes `dictionary.csv`.
pub fn cmd_steering(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Outcome> {
    let freqs = cfg.frequency_grid()?;
    let dirs = cfg.direction_grid()?;
    let model = ModelHandle::from_config(cfg)?;
    let provider = model.as_steering();
    info!(
        "steering: {} frequencies x {} directions x {} mics",
        freqs.len(),
        dirs.len(),
        provider.num_mics()
    );
    let blocks = model.per_frequency(freqs.as_slice(), |f| Ok(provider.steering_batch(f, &dirs)?))?;
    let entries: Vec<Complex64> = blocks
        .into_iter()
        .flatten()
        .flat_map(|v| v.into_values())
        .collect();
    let dict = SteeringDictionary::new(model.geometry().clone(), freqs, dirs, entries)?;
    let dir = cfg.output_dir(out_dir);
    let path = write_file(&dir, DICTIONARY_FILE, |w| formats::write_dictionary(w, &dict))?;
    Ok(Outcome {
        files: vec![path],
        skipped: Vec::new(),
    })
}

/// Designs and scores one frequency. Infeasible look directions come back
/// as messages instead of errors.
fn design_frequency(
    provider: &dyn SteeringModel,
    f: f64,
    cfg: &RunConfig,
    quadrature: &beamkit_core::SphereQuadrature,
    looks: &[Direction],
    gamma_db: f64,
    metric_cfg: &beamkit_core::MetricConfig,
) -> Result<Vec<std::result::Result<(BeamformerWeights, MetricRow), String>>> {
    let psi = coherence_matrix(provider, f, &NoisePowerModel::diffuse(), quadrature)?;
    let vectors = provider.steering_batch(f, looks)?;
    looks
        .iter()
        .zip(&vectors)
        .map(|(look, v)| {
            let spec = DesignSpec::from_db(gamma_db, *look).map_err(|e| cfg.error(format!("`gamma_db`: {e}")))?;
            match robust_mvdr(&psi, v, &spec) {
                Ok(w) => {
                    let row = MetricRow::evaluate(w.weights(), v, &psi, *look, metric_cfg)?;
                    Ok(Ok((w, row)))
                }
                Err(e @ (CoreError::Infeasible { .. } | CoreError::NonBracketing { .. })) => Ok(Err(format!(
                    "f = {f} Hz, look = ({}, {}) deg: {e}",
                    look.theta_deg(),
                    look.phi_deg()
                ))),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

/// Per frequency: diffuse coherence, robust MVDR per look direction, then
/// metrics. Writes `weights.csv` and `sweep.csv`.
pub fn cmd_design(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Outcome> {
    let freqs = cfg.frequency_grid()?;
    let looks = cfg.look_directions()?;
    let gamma_db = cfg.gamma_db()?;
    let quadrature = cfg.quadrature()?;
    let metric_cfg = cfg.metric_config()?;
    let model = ModelHandle::from_config(cfg)?;
    let provider = model.as_steering();
    info!(
        "design: {} frequencies x {} look directions, gamma = {gamma_db} dB, {} quadrature nodes",
        freqs.len(),
        looks.len(),
        quadrature.len()
    );

    let per_freq = model.per_frequency(freqs.as_slice(), |f| {
        design_frequency(provider, f, cfg, &quadrature, &looks, gamma_db, &metric_cfg)
    })?;

    let mut weights = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for item in per_freq.into_iter().flatten() {
        match item {
            Ok((w, row)) => {
                weights.push(w);
                rows.push(row);
            }
            Err(msg) => {
                warn!("skipped design: {msg}");
                skipped.push(msg);
            }
        }
    }
    let dir = cfg.output_dir(out_dir);
    let files = vec![
        write_file(&dir, WEIGHTS_FILE, |w| formats::write_weights(w, &weights))?,
        write_file(&dir, SWEEP_FILE, |w| formats::write_sweep(w, &rows))?,
    ];
    Ok(Outcome { files, skipped })
}

fn same_node(a: &SweepRecord, b: &SweepRecord) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= beamkit_core::model::GRID_TOLERANCE * x.abs().max(y.abs()).max(1.0);
    close(a.freq_hz, b.freq_hz) && close(a.ld_theta_deg, b.ld_theta_deg) && close(a.ld_phi_deg, b.ld_phi_deg)
}

fn ratio_db(b: f64, a: f64) -> f64 {
    10.0 * (b / a).log10()
}

/// Row-wise deltas of sweep B relative to sweep A. The two sweeps must list
/// the same (frequency, look direction) nodes in the same order.
pub fn compare_sweeps(a: &[SweepRecord], b: &[SweepRecord], path_b: &Path) -> Result<Vec<ComparisonRow>> {
    if a.len() != b.len() {
        return Err(CliError::input(
            path_b,
            format!("sweeps have {} and {} rows; grids must match", a.len(), b.len()),
        ));
    }
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (ra, rb))| {
            if !same_node(ra, rb) {
                return Err(CliError::input(
                    path_b,
                    format!(
                        "row {} is (f = {}, ld = ({}, {})) but the other sweep has (f = {}, ld = ({}, {}))",
                        i + 2,
                        rb.freq_hz,
                        rb.ld_theta_deg,
                        rb.ld_phi_deg,
                        ra.freq_hz,
                        ra.ld_theta_deg,
                        ra.ld_phi_deg
                    ),
                ));
            }
            Ok(ComparisonRow {
                freq_hz: ra.freq_hz,
                ld_theta_deg: ra.ld_theta_deg,
                ld_phi_deg: ra.ld_phi_deg,
                ag_delta_db: ratio_db(rb.ag_lin, ra.ag_lin),
                wng_delta_db: ratio_db(rb.wng_lin, ra.wng_lin),
                macc_delta_db: ratio_db(rb.macc_nats, ra.macc_nats),
            })
        })
        .collect()
}

pub fn summarize(rows: &[ComparisonRow]) -> Vec<SummaryRow> {
    let stat = |metric: &'static str, pick: fn(&ComparisonRow) -> f64| {
        let values: Vec<f64> = rows.iter().map(pick).collect();
        let n = values.len();
        let (mean, min, max) = if n == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                values.iter().sum::<f64>() / n as f64,
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        SummaryRow {
            metric,
            count: n,
            mean_db: mean,
            min_db: min,
            max_db: max,
        }
    };
    vec![
        stat("ag", |r| r.ag_delta_db),
        stat("wng", |r| r.wng_delta_db),
        stat("macc", |r| r.macc_delta_db),
    ]
}

/// Compares `[compare] sweep_a` against `sweep_b`; writes
/// `comparison.csv` and `comparison_summary.csv`.
pub fn cmd_compare(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Outcome> {
    let section = cfg.compare_section()?;
    let a = formats::read_sweep(&section.sweep_a)?;
    let b = formats::read_sweep(&section.sweep_b)?;
    let rows = compare_sweeps(&a, &b, &section.sweep_b)?;
    let summary = summarize(&rows);
    for s in &summary {
        info!(
            "{}: mean {} dB, min {} dB, max {} dB over {} rows",
            s.metric, s.mean_db, s.min_db, s.max_db, s.count
        );
    }
    let dir = cfg.output_dir(out_dir);
    let files = vec![
        write_file(&dir, COMPARISON_FILE, |w| formats::write_comparison(w, &rows))?,
        write_file(&dir, SUMMARY_FILE, |w| formats::write_summary(w, &summary))?,
    ];
    Ok(Outcome {
        files,
        skipped: Vec::new(),
    })
}

/// Scattered pressure `p_t - p_i` at each mic for every frequency and
/// incidence listed in `look_directions`; writes `scatterfield.csv`.
pub fn cmd_scatterfield(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Outcome> {
    let freqs = cfg.frequency_grid()?;
    let dirs = cfg.look_directions()?;
    let kind = cfg.model_kind()?;
    if !matches!(kind, ModelKind::RigidSphere | ModelKind::Bem) {
        return Err(cfg.error(format!(
            "scatterfield needs a total-field model (rigid-sphere or bem); `{}` has no scattered field",
            kind.name()
        )));
    }
    let model = ModelHandle::from_config(cfg)?;
    let total = model.as_total().expect("rigid-sphere and bem models carry a total field");
    let blocks = model.per_frequency(freqs.as_slice(), |f| Ok(total.total_and_incident(f, &dirs)?))?;
    let mut rows = Vec::new();
    for (&f, block) in freqs.as_slice().iter().zip(&blocks) {
        for (d, (pt, pi)) in dirs.iter().zip(block) {
            for (mic, (t, i)) in pt.values().iter().zip(pi.values()).enumerate() {
                rows.push(ScatterRow {
                    frequency: f,
                    direction: *d,
                    mic,
                    ps: t - i,
                });
            }
        }
    }
    let dir = cfg.output_dir(out_dir);
    let path = write_file(&dir, SCATTER_FILE, |w| formats::write_scatterfield(w, &rows))?;
    Ok(Outcome {
        files: vec![path],
        skipped: Vec::new(),
    })
}
