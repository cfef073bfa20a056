//! Exterior Helmholtz scattering from rigid triangulated bodies.
//!
//! Collocation with constant elements at triangle centroids. For a
//! sound-hard surface the Kirchhoff–Helmholtz identity gives
//!
//! ```text
//! c(x) p(x) = p_inc(x) + ∫_S p(y) ∂G/∂n_y(x, y) dS(y),   G = e^{-jkR} / (4πR)
//! ```
//!
//! with `c = 1/2` on the (locally flat) surface and `c = 0` strictly inside.
//! Surface collocation yields `(½I − A) p = p_inc`. Interior (CHIEF) points
//! add rows `A_x p = −p_inc(x)` that remove the spurious solutions at the
//! interior Dirichlet eigenfrequencies; with them the system is solved in
//! the least-squares sense.
//!
//! Off-diagonal entries use one-point (centroid) quadrature; the flat
//! self-element contributes nothing to the double layer.

use std::f64::consts::PI;

use faer::prelude::*;
use faer::Mat;
use log::warn;
use rayon::prelude::*;

use crate::mesh::TriMesh;
use crate::model::{
    Direction, FrequencyGrid, Incidence, MicArrayGeometry, PhysicalConstants, SteeringDictionary, SteeringVector,
};
use crate::provider::{SteeringModel, TotalFieldModel};
use crate::{Complex64, Error, Result, Vec3};

pub const DEFAULT_MAX_ELEMENTS: usize = 4000;
pub const DEFAULT_CHIEF_POINTS: usize = 6;
/// CHIEF points sit on a sphere of this fraction of the inscribed radius.
pub const CHIEF_RADIUS_FRACTION: f64 = 0.4;
/// Below this many elements per wavelength a warning is logged.
pub const MIN_ELEMENTS_PER_WAVELENGTH: f64 = 6.0;
/// Factorizations whose pivot ratio falls under this are rejected.
const PIVOT_RATIO_FLOOR: f64 = 1e-13;

/// Incident pressure at `x`: `e^{+jk uᵀx}` for a plane wave arriving from
/// `u`, `e^{-jk‖x−s‖} / (4π‖x−s‖)` for a point source at `s`.
pub fn incident_field(
    incidence: &Incidence,
    frequency: f64,
    x: Vec3,
    consts: &PhysicalConstants,
) -> Result<Complex64> {
    let k = consts.wavenumber(frequency)?;
    incident_at(incidence, k, x)
}

fn incident_at(incidence: &Incidence, k: f64, x: Vec3) -> Result<Complex64> {
    match incidence {
        Incidence::Plane(d) => Ok(Complex64::cis(k * d.unit_vector().dot(x))),
        Incidence::Point(s) => {
            let r = x.distance(*s);
            if r <= 0.0 {
                return Err(Error::CoincidentSource {
                    index: 0,
                    x: s.x,
                    y: s.y,
                    z: s.z,
                });
            }
            Ok(Complex64::cis(-k * r) / (4.0 * PI * r))
        }
    }
}

/// `∂G/∂n_y` for `G = e^{-jkR}/(4πR)`, `R = ‖x − y‖`.
#[inline]
pub fn dlp_kernel(k: f64, x: Vec3, y: Vec3, normal: Vec3) -> Complex64 {
    let d = x - y;
    let r2 = d.norm_squared();
    let r = r2.sqrt();
    let kr = k * r;
    Complex64::cis(-kr) * Complex64::new(1.0, kr) * (d.dot(normal) / (4.0 * PI * r2 * r))
}

fn check_wavenumber(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("wavenumber must be positive, got {k}")))
    }
}

/// Column-major block of double-layer entries for the given collocation
/// points; `skip_self` zeroes entry (i, i).
fn dlp_block(mesh: &TriMesh, k: f64, points: &[Vec3], skip_self: bool) -> Vec<Complex64> {
    let rows = points.len();
    let centroids = mesh.centroids();
    let normals = mesh.normals();
    let areas = mesh.areas();
    let mut data = vec![Complex64::new(0.0, 0.0); rows * mesh.len()];
    if rows == 0 {
        return data;
    }
    data.par_chunks_mut(rows).enumerate().for_each(|(j, col)| {
        let (y, n, a) = (centroids[j], normals[j], areas[j]);
        for (i, out) in col.iter_mut().enumerate() {
            if skip_self && i == j {
                continue;
            }
            *out = dlp_kernel(k, points[i], y, n) * a;
        }
    });
    data
}

/// Double-layer matrix `A[i][j] = ∂G/∂n_y(x_i, y_j) · area_j`, `A[i][i] = 0`.
pub fn assemble_dlp(mesh: &TriMesh, k: f64) -> Result<Mat<Complex64>> {
    check_wavenumber(k)?;
    let t = mesh.len();
    let data = dlp_block(mesh, k, mesh.centroids(), true);
    Ok(Mat::from_fn(t, t, |i, j| data[j * t + i]))
}

/// Interior points for irregular-frequency suppression.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChiefConfig {
    interior_points: Vec<Vec3>,
}

impl ChiefConfig {
    /// No interior rows: plain square collocation.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(mesh: &TriMesh, interior_points: Vec<Vec3>) -> Result<Self> {
        for p in &interior_points {
            if !p.is_finite() || !mesh.contains(*p) || mesh.distance_to_surface(*p) <= 0.0 {
                return Err(Error::ChiefPointOutside { x: p.x, y: p.y, z: p.z });
            }
        }
        Ok(Self { interior_points })
    }

    /// `count` golden-spiral points on a sphere of radius
    /// `CHIEF_RADIUS_FRACTION · r_in` about the volume centroid, where `r_in`
    /// is the centroid's distance to the surface.
    pub fn auto(mesh: &TriMesh, count: usize) -> Result<Self> {
        let center = mesh.volume_centroid();
        if !mesh.contains(center) {
            return Err(Error::ChiefPointOutside {
                x: center.x,
                y: center.y,
                z: center.z,
            });
        }
        let radius = CHIEF_RADIUS_FRACTION * mesh.distance_to_surface(center);
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                center + Vec3::new(r * a.cos(), r * a.sin(), z) * radius
            })
            .collect();
        Self::new(mesh, points)
    }

    pub fn interior_points(&self) -> &[Vec3] {
        &self.interior_points
    }

    pub fn is_empty(&self) -> bool {
        self.interior_points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BemOptions {
    pub max_elements: usize,
}

impl Default for BemOptions {
    fn default() -> Self {
        Self {
            max_elements: DEFAULT_MAX_ELEMENTS,
        }
    }
}

/// Total surface pressure at every triangle centroid for one excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSolution {
    frequency: f64,
    incidence: Incidence,
    surface_pressure: Vec<Complex64>,
    incident_pressure: Vec<Complex64>,
}

impl ScatterSolution {
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn incidence(&self) -> Incidence {
        self.incidence
    }

    /// Total field `p_t` per triangle.
    pub fn surface_pressure(&self) -> &[Complex64] {
        &self.surface_pressure
    }

    /// Incident field `p_i` per triangle centroid.
    pub fn incident_pressure(&self) -> &[Complex64] {
        &self.incident_pressure
    }

    /// Scattered field `p_s = p_t − p_i` per triangle.
    pub fn scattered_pressure(&self) -> Vec<Complex64> {
        self.surface_pressure
            .iter()
            .zip(&self.incident_pressure)
            .map(|(t, i)| t - i)
            .collect()
    }

    fn scaled(mut self, factor: Complex64) -> Self {
        for v in self.surface_pressure.iter_mut().chain(self.incident_pressure.iter_mut()) {
            *v *= factor;
        }
        self
    }
}

enum Factorization {
    Square(faer::linalg::solvers::PartialPivLu<Complex64>),
    LeastSquares(faer::linalg::solvers::Qr<Complex64>),
}

/// Boundary system factored once for a frequency, reusable for any number
/// of incident fields.
pub struct FactoredSystem<'a> {
    mesh: &'a TriMesh,
    chief: &'a ChiefConfig,
    frequency: f64,
    k: f64,
    factorization: Factorization,
}

impl FactoredSystem<'_> {
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn solve(&self, incidences: &[Incidence]) -> Result<Vec<ScatterSolution>> {
        let t = self.mesh.len();
        let rows = t + self.chief.interior_points().len();
        let points: Vec<Vec3> = self
            .mesh
            .centroids()
            .iter()
            .chain(self.chief.interior_points())
            .copied()
            .collect();
        let mut rhs = Mat::<Complex64>::zeros(rows, incidences.len());
        let mut incident = vec![Vec::with_capacity(t); incidences.len()];
        for (col, inc) in incidences.iter().enumerate() {
            for (row, p) in points.iter().enumerate() {
                let value = incident_at(inc, self.k, *p)?;
                if row < t {
                    rhs[(row, col)] = value;
                    incident[col].push(value);
                } else {
                    rhs[(row, col)] = -value;
                }
            }
        }
        let x = match &self.factorization {
            Factorization::Square(lu) => lu.solve(&rhs),
            Factorization::LeastSquares(qr) => qr.solve_lstsq(&rhs),
        };
        let mut out = Vec::with_capacity(incidences.len());
        for (col, (inc, incident_pressure)) in incidences.iter().zip(incident).enumerate() {
            let surface_pressure: Vec<Complex64> = (0..t).map(|i| x[(i, col)]).collect();
            if surface_pressure.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::SingularSystem(format!(
                    "non-finite surface pressure at f = {} Hz",
                    self.frequency
                )));
            }
            out.push(ScatterSolution {
                frequency: self.frequency,
                incidence: *inc,
                surface_pressure,
                incident_pressure,
            });
        }
        Ok(out)
    }
}

fn pivot_ratio(diag: impl Iterator<Item = Complex64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in diag {
        let a = d.norm();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if hi > 0.0 {
        lo / hi
    } else {
        0.0
    }
}

/// Assembles and factors the boundary system at `frequency`.
pub fn factor_system<'a>(
    mesh: &'a TriMesh,
    chief: &'a ChiefConfig,
    frequency: f64,
    consts: &PhysicalConstants,
    options: &BemOptions,
) -> Result<FactoredSystem<'a>> {
    if mesh.len() > options.max_elements {
        return Err(Error::TooManyElements {
            count: mesh.len(),
            cap: options.max_elements,
        });
    }
    let k = consts.wavenumber(frequency)?;
    let wavelength = 2.0 * PI / k;
    let per_wavelength = wavelength / mesh.max_edge_length();
    if per_wavelength < MIN_ELEMENTS_PER_WAVELENGTH {
        warn!(
            "f = {frequency} Hz: {per_wavelength:.2} elements per wavelength (< {MIN_ELEMENTS_PER_WAVELENGTH}); \
             refine the mesh for reliable results"
        );
    }

    let t = mesh.len();
    let c = chief.interior_points().len();
    let surface = dlp_block(mesh, k, mesh.centroids(), true);
    let interior = dlp_block(mesh, k, chief.interior_points(), false);
    let system = Mat::from_fn(t + c, t, |i, j| {
        if i < t {
            let a = surface[j * t + i];
            if i == j {
                Complex64::new(0.5, 0.0) - a
            } else {
                -a
            }
        } else {
            interior[j * c + (i - t)]
        }
    });
    drop(surface);
    drop(interior);

    let factorization = if c == 0 {
        let lu = system.partial_piv_lu();
        let ratio = pivot_ratio(lu.U().diagonal().column_vector().iter().copied());
        if !(ratio > PIVOT_RATIO_FLOOR) {
            return Err(Error::SingularSystem(format!(
                "LU pivot ratio {ratio:e} at f = {frequency} Hz"
            )));
        }
        Factorization::Square(lu)
    } else {
        let qr = system.qr();
        let ratio = pivot_ratio(qr.thin_R().diagonal().column_vector().iter().copied());
        if !(ratio > PIVOT_RATIO_FLOOR) {
            return Err(Error::SingularSystem(format!(
                "QR diagonal ratio {ratio:e} at f = {frequency} Hz"
            )));
        }
        Factorization::LeastSquares(qr)
    };
    Ok(FactoredSystem {
        mesh,
        chief,
        frequency,
        k,
        factorization,
    })
}

/// Solves one rigid-body scattering problem with default options.
pub fn solve_scattering(
    mesh: &TriMesh,
    frequency: f64,
    incidence: &Incidence,
    chief: &ChiefConfig,
    consts: &PhysicalConstants,
) -> Result<ScatterSolution> {
    solve_scattering_with(mesh, frequency, incidence, chief, consts, &BemOptions::default())
}

pub fn solve_scattering_with(
    mesh: &TriMesh,
    frequency: f64,
    incidence: &Incidence,
    chief: &ChiefConfig,
    consts: &PhysicalConstants,
    options: &BemOptions,
) -> Result<ScatterSolution> {
    let system = factor_system(mesh, chief, frequency, consts, options)?;
    Ok(system.solve(std::slice::from_ref(incidence))?.remove(0))
}

/// Maps each microphone to the triangle whose centroid is nearest.
#[derive(Debug, Clone, PartialEq)]
pub struct MicSampler {
    triangles: Vec<usize>,
}

impl MicSampler {
    /// Fails if a microphone is farther than twice the local edge length
    /// from its nearest centroid.
    pub fn new(mesh: &TriMesh, geometry: &MicArrayGeometry) -> Result<Self> {
        let triangles = geometry
            .positions()
            .iter()
            .enumerate()
            .map(|(index, r)| {
                let (best, distance) = mesh
                    .centroids()
                    .iter()
                    .enumerate()
                    .map(|(t, c)| (t, c.distance(*r)))
                    .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
                let tolerance = 2.0 * mesh.triangle_max_edge(best);
                if distance > tolerance {
                    Err(Error::MicOffSurface {
                        index,
                        distance,
                        tolerance,
                    })
                } else {
                    Ok(best)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { triangles })
    }

    pub fn triangles(&self) -> &[usize] {
        &self.triangles
    }

    fn pick(&self, field: &[Complex64]) -> Vec<Complex64> {
        self.triangles.iter().map(|&t| field[t]).collect()
    }

    pub fn total(&self, sol: &ScatterSolution) -> Result<SteeringVector> {
        SteeringVector::new(self.pick(&sol.surface_pressure), sol.frequency, sol.incidence)
    }

    pub fn incident(&self, sol: &ScatterSolution) -> Result<SteeringVector> {
        SteeringVector::new(self.pick(&sol.incident_pressure), sol.frequency, sol.incidence)
    }
}

/// Nearest-centroid point receivers: `v_m = p_t` at the triangle nearest `r_m`.
pub fn sample_at_mics(sol: &ScatterSolution, mesh: &TriMesh, geometry: &MicArrayGeometry) -> Result<SteeringVector> {
    if sol.surface_pressure.len() != mesh.len() {
        return Err(Error::DimensionMismatch {
            expected: mesh.len(),
            got: sol.surface_pressure.len(),
        });
    }
    MicSampler::new(mesh, geometry)?.total(sol)
}

/// One factorization per frequency, all directions solved against it.
/// Entries are laid out frequency-major, then direction, then microphone.
pub fn build_dictionary(
    mesh: &TriMesh,
    geometry: &MicArrayGeometry,
    frequencies: &FrequencyGrid,
    directions: &[Direction],
    chief: &ChiefConfig,
    consts: &PhysicalConstants,
) -> Result<SteeringDictionary> {
    build_dictionary_with(mesh, geometry, frequencies, directions, chief, consts, &BemOptions::default())
}

pub fn build_dictionary_with(
    mesh: &TriMesh,
    geometry: &MicArrayGeometry,
    frequencies: &FrequencyGrid,
    directions: &[Direction],
    chief: &ChiefConfig,
    consts: &PhysicalConstants,
    options: &BemOptions,
) -> Result<SteeringDictionary> {
    let sampler = MicSampler::new(mesh, geometry)?;
    let incidences: Vec<Incidence> = directions.iter().map(|d| Incidence::Plane(*d)).collect();
    let mut entries = Vec::with_capacity(frequencies.len() * directions.len() * geometry.len());
    for &f in frequencies.as_slice() {
        let annotate = |e: Error| match directions.first() {
            Some(d) if directions.len() == 1 => e.at_node(f, d.theta(), d.phi()),
            _ => e.at_node(f, f64::NAN, f64::NAN),
        };
        let system = factor_system(mesh, chief, f, consts, options).map_err(annotate)?;
        let solutions = system.solve(&incidences).map_err(annotate)?;
        for (sol, d) in solutions.iter().zip(directions) {
            let v = sampler.total(sol).map_err(|e| e.at_node(f, d.theta(), d.phi()))?;
            entries.extend_from_slice(v.values());
        }
    }
    SteeringDictionary::new(geometry.clone(), frequencies.clone(), directions.to_vec(), entries)
}

/// Numerical total-field model backed by the BEM solver.
///
/// With `source_distance` set, each direction is modeled as a point source
/// at that distance from the coordinate origin, rescaled to unit amplitude
/// and zero phase at the origin so it tends to the plane-wave model as the
/// distance grows.
#[derive(Debug, Clone)]
pub struct BemModel {
    mesh: TriMesh,
    geometry: MicArrayGeometry,
    chief: ChiefConfig,
    consts: PhysicalConstants,
    options: BemOptions,
    sampler: MicSampler,
    source_distance: Option<f64>,
}

impl BemModel {
    pub fn new(
        mesh: TriMesh,
        geometry: MicArrayGeometry,
        chief: ChiefConfig,
        consts: PhysicalConstants,
        options: BemOptions,
    ) -> Result<Self> {
        if mesh.len() > options.max_elements {
            return Err(Error::TooManyElements {
                count: mesh.len(),
                cap: options.max_elements,
            });
        }
        let sampler = MicSampler::new(&mesh, &geometry)?;
        Ok(Self {
            mesh,
            geometry,
            chief,
            consts,
            options,
            sampler,
            source_distance: None,
        })
    }

    pub fn with_source_distance(mut self, distance: f64) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "source distance must be positive, got {distance}"
            )));
        }
        self.source_distance = Some(distance);
        Ok(self)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn geometry(&self) -> &MicArrayGeometry {
        &self.geometry
    }

    pub fn sampler(&self) -> &MicSampler {
        &self.sampler
    }

    fn solve_all(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<ScatterSolution>> {
        let k = self.consts.wavenumber(frequency)?;
        let incidences: Vec<Incidence> = directions
            .iter()
            .map(|d| match self.source_distance {
                None => Incidence::Plane(*d),
                Some(r) => Incidence::Point(d.unit_vector() * r),
            })
            .collect();
        let system = factor_system(&self.mesh, &self.chief, frequency, &self.consts, &self.options)?;
        let solutions = system.solve(&incidences)?;
        Ok(match self.source_distance {
            None => solutions,
            Some(r) => {
                let factor = Complex64::cis(k * r) * (4.0 * PI * r);
                solutions.into_iter().map(|s| s.scaled(factor)).collect()
            }
        })
    }
}

impl SteeringModel for BemModel {
    fn num_mics(&self) -> usize {
        self.geometry.len()
    }

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        Ok(self.steering_batch(frequency, std::slice::from_ref(direction))?.remove(0))
    }

    fn steering_batch(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<SteeringVector>> {
        self.solve_all(frequency, directions)?
            .iter()
            .map(|s| self.sampler.total(s))
            .collect()
    }
}

impl TotalFieldModel for BemModel {
    fn total_and_incident(
        &self,
        frequency: f64,
        directions: &[Direction],
    ) -> Result<Vec<(SteeringVector, SteeringVector)>> {
        self.solve_all(frequency, directions)?
            .iter()
            .map(|s| Ok((self.sampler.total(s)?, self.sampler.incident(s)?)))
            .collect()
    }
}
