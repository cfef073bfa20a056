//! Free-field steering vectors: the incident wave alone, ignoring the body
//! the array is mounted on.

use rayon::prelude::*;

use crate::model::{Direction, Incidence, MicArrayGeometry, PhysicalConstants, SteeringVector};
use crate::provider::SteeringModel;
use crate::{Complex64, Error, Result, Vec3};

/// Point-source location for near-field modeling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePoint {
    position: Vec3,
}

impl SourcePoint {
    pub fn new(position: Vec3) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::InvalidGeometry("source position is not finite".into()));
        }
        Ok(Self { position })
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }
}

/// `v_m = e^{+jk uᵀr_m}`, unit amplitude at the coordinate origin.
pub fn plane_wave_steering(
    geometry: &MicArrayGeometry,
    frequency: f64,
    direction: &Direction,
    consts: &PhysicalConstants,
) -> Result<SteeringVector> {
    let k = consts.wavenumber(frequency)?;
    let u = direction.unit_vector();
    let values = geometry
        .positions()
        .iter()
        .map(|r| Complex64::cis(k * u.dot(*r)))
        .collect();
    SteeringVector::new(values, frequency, Incidence::Plane(*direction))
}

/// Point-source response normalized to the reference microphone:
/// `v_m = (R_ref / R_m) e^{-jk(R_m - R_ref)}`.
pub fn spherical_wave_steering(
    geometry: &MicArrayGeometry,
    frequency: f64,
    source: &SourcePoint,
    consts: &PhysicalConstants,
) -> Result<SteeringVector> {
    let k = consts.wavenumber(frequency)?;
    let s = source.position;
    let dist: Vec<f64> = geometry.positions().iter().map(|r| s.distance(*r)).collect();
    if let Some(index) = dist.iter().position(|&d| d <= 1e-12) {
        return Err(Error::CoincidentSource {
            index,
            x: s.x,
            y: s.y,
            z: s.z,
        });
    }
    let reference = geometry.reference_index();
    let r_ref = dist[reference];
    let mut values: Vec<Complex64> = dist
        .iter()
        .map(|&r| Complex64::from_polar(r_ref / r, -k * (r - r_ref)))
        .collect();
    values[reference] = Complex64::new(1.0, 0.0);
    SteeringVector::new(values, frequency, Incidence::Point(s))
}

/// Far-field free-field model.
#[derive(Debug, Clone)]
pub struct PlaneWaveModel {
    geometry: MicArrayGeometry,
    consts: PhysicalConstants,
}

impl PlaneWaveModel {
    pub fn new(geometry: MicArrayGeometry, consts: PhysicalConstants) -> Self {
        Self { geometry, consts }
    }

    pub fn geometry(&self) -> &MicArrayGeometry {
        &self.geometry
    }
}

impl SteeringModel for PlaneWaveModel {
    fn num_mics(&self) -> usize {
        self.geometry.len()
    }

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        plane_wave_steering(&self.geometry, frequency, direction, &self.consts)
    }

    fn steering_batch(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<SteeringVector>> {
        directions
            .par_iter()
            .map(|d| self.steering(frequency, d))
            .collect()
    }
}

/// Near-field free-field model: the source for direction `d` sits at
/// `distance · u(d)` from the coordinate origin.
#[derive(Debug, Clone)]
pub struct SphericalWaveModel {
    geometry: MicArrayGeometry,
    consts: PhysicalConstants,
    distance: f64,
}

impl SphericalWaveModel {
    pub fn new(geometry: MicArrayGeometry, consts: PhysicalConstants, distance: f64) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "source distance must be positive, got {distance}"
            )));
        }
        Ok(Self {
            geometry,
            consts,
            distance,
        })
    }

    pub fn geometry(&self) -> &MicArrayGeometry {
        &self.geometry
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn source_for(&self, direction: &Direction) -> SourcePoint {
        SourcePoint {
            position: direction.unit_vector() * self.distance,
        }
    }
}

impl SteeringModel for SphericalWaveModel {
    fn num_mics(&self) -> usize {
        self.geometry.len()
    }

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        spherical_wave_steering(&self.geometry, frequency, &self.source_for(direction), &self.consts)
    }

    fn steering_batch(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<SteeringVector>> {
        directions
            .par_iter()
            .map(|d| {
                self.steering(frequency, d)
                    .map_err(|e| e.at_node(frequency, d.theta(), d.phi()))
            })
            .collect()
    }
}
