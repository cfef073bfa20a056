//! Total field on the surface of a rigid sphere illuminated by a plane wave.
//!
//! With `h_n = h_n^{(2)}` and the Wronskian `j_n y_n' - j_n' y_n = 1/x²`, the
//! incident-plus-scattered surface pressure collapses to
//!
//! ```text
//! p_t(ka, γ) = -j/(ka)² Σ_n jⁿ (2n+1) P_n(cos γ) / h_n'(ka)
//! ```
//!
//! where `γ` is the angle between the surface point and the arrival
//! direction (`γ = 0` is the illuminated pole). Only `h'` appears, so there is
//! no cancellation between incident and scattered terms at the surface.

use rayon::prelude::*;

use crate::model::{Direction, Incidence, MicArrayGeometry, PhysicalConstants, SteeringVector};
use crate::provider::{SteeringModel, TotalFieldModel};
use crate::special::sph_hankel2_derivative_upto;
use crate::{Complex64, Error, Result, Vec3};

/// Extra orders beyond `⌈ka⌉` used as the starting AUTO truncation.
pub const AUTO_MARGIN: usize = 12;
/// Tail tolerance for AUTO truncation (relative to the series value).
pub const TAIL_TOLERANCE: f64 = 1e-10;
const MAX_EXTRA_ORDERS: usize = 400;

/// Rigid sphere carrying the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidSphere {
    radius: f64,
    center: Vec3,
}

impl RigidSphere {
    pub fn new(radius: f64, center: Vec3) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "sphere radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { radius, center })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// Checks that every microphone sits on the surface within `1e-9·radius`.
    pub fn check_on_surface(&self, geometry: &MicArrayGeometry) -> Result<()> {
        let tolerance = 1e-9 * self.radius;
        for (index, p) in geometry.positions().iter().enumerate() {
            let distance = (p.distance(self.center) - self.radius).abs();
            if distance > tolerance {
                return Err(Error::MicOffSurface {
                    index,
                    distance,
                    tolerance,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    #[default]
    Auto,
    Order(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SeriesConfig {
    pub truncation: Truncation,
}

impl SeriesConfig {
    pub fn order(order: usize) -> Self {
        Self {
            truncation: Truncation::Order(order),
        }
    }
}

/// Precomputed modal coefficients `c_n = -j jⁿ (2n+1) / ((ka)² h_n'(ka))`
/// for one value of `ka`.
#[derive(Debug, Clone)]
pub struct SphereSeries {
    ka: f64,
    coefficients: Vec<Complex64>,
}

impl SphereSeries {
    pub fn new(ka: f64, cfg: SeriesConfig) -> Result<Self> {
        if !(ka > 0.0 && ka.is_finite()) {
            return Err(Error::Domain(format!("ka must be positive, got {ka}")));
        }
        match cfg.truncation {
            Truncation::Order(n) => Ok(Self {
                ka,
                coefficients: coefficients(ka, n)?,
            }),
            Truncation::Auto => {
                let base = ka.ceil() as usize + AUTO_MARGIN;
                let cap = base + MAX_EXTRA_ORDERS;
                let all = coefficients(ka, cap)?;
                // |P_n| ≤ 1 bounds each term by |c_n|; stop when that bound is negligible.
                let mut partial: f64 = all[..base].iter().map(|c| c.norm()).sum();
                let mut n = base;
                while n <= cap {
                    let term = all[n].norm();
                    partial += term;
                    if term < TAIL_TOLERANCE * partial.max(f64::MIN_POSITIVE) || term == 0.0 {
                        return Ok(Self {
                            ka,
                            coefficients: all[..=n].to_vec(),
                        });
                    }
                    n += 1;
                }
                Err(Error::SeriesNotConverged { ka, order: cap })
            }
        }
    }

    pub fn ka(&self) -> f64 {
        self.ka
    }

    /// Highest order kept.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Surface pressure at `cos γ`.
    pub fn evaluate(&self, cos_gamma: f64) -> Result<Complex64> {
        if !(-1.0..=1.0).contains(&cos_gamma) {
            return Err(Error::Domain(format!("cos(gamma) must lie in [-1, 1], got {cos_gamma}")));
        }
        let x = cos_gamma;
        let mut p_prev = 1.0;
        let mut p = x;
        let mut sum = self.coefficients[0];
        if self.coefficients.len() > 1 {
            sum += self.coefficients[1] * x;
        }
        for (n, c) in self.coefficients.iter().enumerate().skip(2) {
            let m = (n - 1) as f64;
            let next = ((2.0 * m + 1.0) * x * p - m * p_prev) / (m + 1.0);
            p_prev = p;
            p = next;
            sum += c * p;
        }
        Ok(sum)
    }
}

fn coefficients(ka: f64, order: usize) -> Result<Vec<Complex64>> {
    let hd = sph_hankel2_derivative_upto(order, ka)?;
    let prefactor = Complex64::new(0.0, -1.0 / (ka * ka));
    let mut j_pow = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(order + 1);
    for (n, h) in hd.iter().enumerate() {
        let c = if h.norm().is_finite() {
            prefactor * j_pow * (2 * n + 1) as f64 / h
        } else {
            Complex64::new(0.0, 0.0)
        };
        out.push(c);
        j_pow *= Complex64::i();
    }
    Ok(out)
}

/// `p_t / p_0` on the sphere surface at angle `γ` from the illuminated pole.
pub fn rigid_sphere_surface_pressure(ka: f64, cos_gamma: f64, cfg: SeriesConfig) -> Result<Complex64> {
    SphereSeries::new(ka, cfg)?.evaluate(cos_gamma)
}

/// Total-field steering vector for microphones on a rigid sphere.
///
/// The series is phase-referenced to the sphere center; the result is
/// multiplied by the incident phase at the center, `e^{+jk uᵀc}`, so that it
/// shares the coordinate-origin reference of [`crate::freefield`] and
/// [`crate::bem`]. For a sphere centered at the origin the factor is 1.
pub fn rigid_sphere_steering(
    geometry: &MicArrayGeometry,
    sphere: &RigidSphere,
    frequency: f64,
    direction: &Direction,
    cfg: SeriesConfig,
    consts: &PhysicalConstants,
) -> Result<SteeringVector> {
    sphere.check_on_surface(geometry)?;
    let k = consts.wavenumber(frequency)?;
    let series = SphereSeries::new(k * sphere.radius, cfg)?;
    steering_from_series(geometry, sphere, &series, k, frequency, direction)
}

fn cos_gamma(sphere: &RigidSphere, u: Vec3, mic: Vec3) -> f64 {
    (u.dot(mic - sphere.center) / sphere.radius).clamp(-1.0, 1.0)
}

fn steering_from_series(
    geometry: &MicArrayGeometry,
    sphere: &RigidSphere,
    series: &SphereSeries,
    k: f64,
    frequency: f64,
    direction: &Direction,
) -> Result<SteeringVector> {
    let u = direction.unit_vector();
    let shift = Complex64::cis(k * u.dot(sphere.center));
    let values = geometry
        .positions()
        .iter()
        .map(|r| Ok(series.evaluate(cos_gamma(sphere, u, *r))? * shift))
        .collect::<Result<Vec<_>>>()?;
    SteeringVector::new(values, frequency, Incidence::Plane(*direction))
}

/// Analytical total-field model for an array on a rigid sphere.
#[derive(Debug, Clone)]
pub struct RigidSphereModel {
    geometry: MicArrayGeometry,
    sphere: RigidSphere,
    series: SeriesConfig,
    consts: PhysicalConstants,
}

impl RigidSphereModel {
    pub fn new(
        geometry: MicArrayGeometry,
        sphere: RigidSphere,
        series: SeriesConfig,
        consts: PhysicalConstants,
    ) -> Result<Self> {
        sphere.check_on_surface(&geometry)?;
        Ok(Self {
            geometry,
            sphere,
            series,
            consts,
        })
    }

    pub fn geometry(&self) -> &MicArrayGeometry {
        &self.geometry
    }

    pub fn sphere(&self) -> &RigidSphere {
        &self.sphere
    }
}

impl SteeringModel for RigidSphereModel {
    fn num_mics(&self) -> usize {
        self.geometry.len()
    }

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        rigid_sphere_steering(
            &self.geometry,
            &self.sphere,
            frequency,
            direction,
            self.series,
            &self.consts,
        )
    }

    fn steering_batch(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<SteeringVector>> {
        let k = self.consts.wavenumber(frequency)?;
        let series = SphereSeries::new(k * self.sphere.radius, self.series)?;
        directions
            .par_iter()
            .map(|d| {
                steering_from_series(&self.geometry, &self.sphere, &series, k, frequency, d)
                    .map_err(|e| e.at_node(frequency, d.theta(), d.phi()))
            })
            .collect()
    }
}

impl TotalFieldModel for RigidSphereModel {
    fn total_and_incident(
        &self,
        frequency: f64,
        directions: &[Direction],
    ) -> Result<Vec<(SteeringVector, SteeringVector)>> {
        let total = self.steering_batch(frequency, directions)?;
        let incident = directions
            .iter()
            .map(|d| crate::freefield::plane_wave_steering(&self.geometry, frequency, d, &self.consts))
            .collect::<Result<Vec<_>>>()?;
        Ok(total.into_iter().zip(incident).collect())
    }
}
