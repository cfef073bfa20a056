//! Run configuration: a single TOML file per invocation.
//!
//! ```toml
//! geometry = "array.toml"
//! model = "rigid-sphere"          # freefield-plane | freefield-spherical | rigid-sphere | bem | dictionary-file
//! gamma_db = -25.0
//! look_directions = [[30.0, 0.0], [90.0, 0.0]]   # (theta, phi) in degrees
//! output_dir = "out"
//!
//! [sphere]
//! radius = 0.05
//! center = [0.0, 0.0, 0.0]
//!
//! [frequencies]
//! start = 80.0
//! stop = 8000.0
//! count = 40
//! spacing = "log"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use beamkit_core::{Direction, FrequencyGrid, Vec3};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    FreefieldPlane,
    FreefieldSpherical,
    RigidSphere,
    Bem,
    DictionaryFile,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FreefieldPlane => "freefield-plane",
            ModelKind::FreefieldSpherical => "freefield-spherical",
            ModelKind::RigidSphere => "rigid-sphere",
            ModelKind::Bem => "bem",
            ModelKind::DictionaryFile => "dictionary-file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// Equal polar and azimuth steps; each pole appears once.
    #[default]
    Uniform,
    /// The coherence quadrature nodes.
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSection {
    pub radius: f64,
    #[serde(default)]
    pub center: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySection {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    /// Explicit list, used instead of start/stop/count.
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectionSection {
    pub n_theta: usize,
    pub n_phi: usize,
    pub grid: GridKind,
    /// Explicit (theta, phi) list in degrees, used instead of a grid.
    pub list: Option<Vec<[f64; 2]>>,
}

impl Default for DirectionSection {
    fn default() -> Self {
        Self {
            n_theta: 19,
            n_phi: 36,
            grid: GridKind::Uniform,
            list: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            n_theta: beamkit_core::coherence::DEFAULT_QUADRATURE_THETA,
            n_phi: beamkit_core::coherence::DEFAULT_QUADRATURE_PHI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub input_power: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { input_power: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BemSection {
    /// Interior CHIEF points; 0 disables them.
    pub chief_points: usize,
    pub max_elements: usize,
}

impl Default for BemSection {
    fn default() -> Self {
        Self {
            chief_points: beamkit_core::bem::DEFAULT_CHIEF_POINTS,
            max_elements: beamkit_core::bem::DEFAULT_MAX_ELEMENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub sweep_a: PathBuf,
    pub sweep_b: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<PathBuf>,
    pub model: Option<ModelKind>,
    pub sphere: Option<SphereSection>,
    pub mesh: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    /// Point-source distance from the origin for near-field models.
    pub source_distance: Option<f64>,
    pub frequencies: Option<FrequencySection>,
    #[serde(default)]
    pub directions: DirectionSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub gamma_db: Option<f64>,
    #[serde(default)]
    pub look_directions: Vec<[f64; 2]>,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub bem: BemSection,
    pub compare: Option<CompareSection>,
    pub output_dir: Option<PathBuf>,

    #[serde(skip)]
    source: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses `text` as if read from `path`; relative paths resolve against
    /// `path`'s directory.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(path, e.to_string()))?;
        cfg.source = path.to_path_buf();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut cfg.geometry, &mut cfg.mesh, &mut cfg.dictionary, &mut cfg.output_dir]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        if let Some(c) = cfg.compare.as_mut() {
            resolve(&mut c.sweep_a);
            resolve(&mut c.sweep_b);
        }
        Ok(cfg)
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> CliError {
        CliError::config(&self.source, message)
    }

    fn require<'a, T>(&self, value: &'a Option<T>, key: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| self.error(format!("missing required key `{key}`")))
    }

    pub fn geometry_path(&self) -> Result<&Path> {
        self.require(&self.geometry, "geometry").map(PathBuf::as_path)
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        self.require(&self.model, "model").copied()
    }

    pub fn mesh_path(&self) -> Result<&Path> {
        self.require(&self.mesh, "mesh").map(PathBuf::as_path)
    }

    pub fn dictionary_path(&self) -> Result<&Path> {
        self.require(&self.dictionary, "dictionary").map(PathBuf::as_path)
    }

    pub fn sphere_section(&self) -> Result<(f64, Vec3)> {
        let s = self.require(&self.sphere, "sphere")?;
        if !(s.radius > 0.0 && s.radius.is_finite()) {
            return Err(self.error(format!("`sphere.radius` must be positive, got {}", s.radius)));
        }
        Ok((s.radius, Vec3::from_array(s.center)))
    }

    pub fn source_distance(&self) -> Result<Option<f64>> {
        match self.source_distance {
            Some(d) if !(d > 0.0 && d.is_finite()) => {
                Err(self.error(format!("`source_distance` must be positive, got {d}")))
            }
            other => Ok(other),
        }
    }

    pub fn gamma_db(&self) -> Result<f64> {
        let g = *self.require(&self.gamma_db, "gamma_db")?;
        if !g.is_finite() {
            return Err(self.error("`gamma_db` must be finite"));
        }
        Ok(g)
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        let s = self.require(&self.frequencies, "frequencies")?;
        let grid = if let Some(values) = &s.values {
            if s.start.is_some() || s.stop.is_some() || s.count.is_some() {
                return Err(self.error("`frequencies.values` excludes start/stop/count"));
            }
            FrequencyGrid::new(values.clone())
        } else {
            let start = *self.require(&s.start, "frequencies.start")?;
            let stop = *self.require(&s.stop, "frequencies.stop")?;
            let count = *self.require(&s.count, "frequencies.count")?;
            match s.spacing {
                Spacing::Linear => FrequencyGrid::linear(start, stop, count),
                Spacing::Log => FrequencyGrid::logarithmic(start, stop, count),
            }
        };
        grid.map_err(|e| self.error(format!("[frequencies]: {e}")))
    }

    pub fn quadrature(&self) -> Result<beamkit_core::SphereQuadrature> {
        beamkit_core::make_quadrature(self.quadrature.n_theta, self.quadrature.n_phi)
            .map_err(|e| self.error(format!("[quadrature]: {e}")))
    }

    /// Dictionary direction grid, ordered by ascending theta, then phi.
    pub fn direction_grid(&self) -> Result<Vec<Direction>> {
        let s = &self.directions;
        if let Some(list) = &s.list {
            if list.is_empty() {
                return Err(self.error("`directions.list` is empty"));
            }
            let mut dirs = parse_directions(list).map_err(|e| self.error(format!("`directions.list`: {e}")))?;
            dirs.sort_by(|a, b| a.theta().total_cmp(&b.theta()).then(a.phi().total_cmp(&b.phi())));
            return Ok(dirs);
        }
        match s.grid {
            GridKind::Uniform => {
                if s.n_theta < 2 || s.n_phi < 1 {
                    return Err(self.error(format!(
                        "[directions] needs n_theta >= 2 and n_phi >= 1, got {} x {}",
                        s.n_theta, s.n_phi
                    )));
                }
                Ok(uniform_grid(s.n_theta, s.n_phi))
            }
            GridKind::GaussLegendre => beamkit_core::make_quadrature(s.n_theta, s.n_phi)
                .map(|q| q.nodes().to_vec())
                .map_err(|e| self.error(format!("[directions]: {e}"))),
        }
    }

    pub fn look_directions(&self) -> Result<Vec<Direction>> {
        if self.look_directions.is_empty() {
            return Err(self.error("`look_directions` must list at least one (theta, phi) pair"));
        }
        parse_directions(&self.look_directions).map_err(|e| self.error(format!("`look_directions`: {e}")))
    }

    pub fn metric_config(&self) -> Result<beamkit_core::MetricConfig> {
        beamkit_core::MetricConfig::new(self.metrics.input_power)
            .map_err(|e| self.error(format!("[metrics]: {e}")))
    }

    pub fn compare_section(&self) -> Result<&CompareSection> {
        self.require(&self.compare, "compare")
    }

    /// `--out` wins over `output_dir`; the default is `out` next to the config.
    pub fn output_dir(&self, overridden: Option<&Path>) -> PathBuf {
        match (overridden, &self.output_dir) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => p.clone(),
            (None, None) => self.source.parent().map(Path::to_path_buf).unwrap_or_default().join("out"),
        }
    }
}

fn parse_directions(list: &[[f64; 2]]) -> beamkit_core::Result<Vec<Direction>> {
    list.iter().map(|[t, p]| Direction::from_degrees(*t, *p)).collect()
}

/// `n_theta` polar angles from 0 to 180 degrees inclusive and `n_phi` azimuths
/// per ring; the poles carry a single azimuth of 0.
pub fn uniform_grid(n_theta: usize, n_phi: usize) -> Vec<Direction> {
    let mut out = Vec::new();
    for i in 0..n_theta {
        let theta_deg = 180.0 * i as f64 / (n_theta - 1) as f64;
        let ring = if i == 0 || i == n_theta - 1 { 1 } else { n_phi };
        for j in 0..ring {
            let phi_deg = 360.0 * j as f64 / n_phi as f64;
            out.push(Direction::from_degrees(theta_deg, phi_deg).expect("grid angles are in range"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/tmp/cfg/run.toml"))
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let cfg = parse("geometry = \"g.toml\"\nmesh = \"/abs/m.txt\"").unwrap();
        assert_eq!(cfg.geometry_path().unwrap(), Path::new("/tmp/cfg/g.toml"));
        assert_eq!(cfg.mesh_path().unwrap(), Path::new("/abs/m.txt"));
        assert_eq!(cfg.output_dir(None), Path::new("/tmp/cfg/out"));
        assert_eq!(cfg.output_dir(Some(Path::new("x"))), Path::new("x"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("model = \"rigid-sphere\"\n\n[sphere]\nradius = \"big\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4"), "{msg}");
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
        assert!(parse("modle = \"bem\"").is_err());
        assert!(parse("model = \"fem\"").is_err());
    }

    #[test]
    fn missing_keys_are_named() {
        let cfg = parse("").unwrap();
        assert!(cfg.gamma_db().unwrap_err().to_string().contains("gamma_db"));
        assert!(cfg.frequency_grid().unwrap_err().to_string().contains("frequencies"));
    }

    #[test]
    fn uniform_grid_shape() {
        let g = uniform_grid(3, 2);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0].theta(), 0.0);
        assert!((g[3].theta_deg() - 180.0).abs() < 1e-12);
        assert_eq!(uniform_grid(19, 36).len(), 17 * 36 + 2);
    }

    #[test]
    fn frequency_variants() {
        let cfg = parse("[frequencies]\nvalues = [100.0, 200.0]").unwrap();
        assert_eq!(cfg.frequency_grid().unwrap().as_slice(), &[100.0, 200.0]);
        let cfg = parse("[frequencies]\nstart = 80.0\nstop = 8000.0\ncount = 3\nspacing = \"log\"").unwrap();
        let g = cfg.frequency_grid().unwrap();
        assert!((g.as_slice()[1] - 800.0).abs() < 1e-9);
        let cfg = parse("[frequencies]\nstart = 80.0\nstop = 8000.0\ncount = 3\nvalues = [1.0]").unwrap();
        assert!(cfg.frequency_grid().is_err());
    }
}
