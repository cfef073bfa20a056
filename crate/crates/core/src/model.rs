//! Shared physical model: constants, directions, array geometry, frequency
//! grids, steering vectors and steering dictionaries.
//!
//! Conventions used throughout the crate:
//!
//! * time dependence `e^{+jωt}`, so outgoing waves carry `e^{-jkr}`;
//! * a [`Direction`] is the *arrival* direction, the unit vector pointing from
//!   the array origin toward the source. A plane wave arriving from `u`
//!   propagates along `-u` and reads `e^{+jk uᵀr}`;
//! * `theta` is the polar angle from `+z`, `phi` the azimuth from `+x`.

use std::f64::consts::PI;

use crate::{Complex64, Error, Result, Vec3};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Absolute tolerance used to match dictionary grid nodes (Hz and radians).
pub const GRID_TOLERANCE: f64 = 1e-9;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    speed_of_sound: f64,
}

impl PhysicalConstants {
    pub fn new(speed_of_sound: f64) -> Result<Self> {
        if !(speed_of_sound > 0.0 && speed_of_sound.is_finite()) {
            return Err(Error::InvalidSpeedOfSound(speed_of_sound));
        }
        Ok(Self { speed_of_sound })
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    pub fn wavenumber(&self, frequency: f64) -> Result<f64> {
        wavenumber(frequency, self)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
        }
    }
}

/// `k = 2πf / c` in radians per meter.
pub fn wavenumber(frequency: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_frequency(frequency)?;
    Ok(TAU * frequency / consts.speed_of_sound)
}

pub(crate) fn check_frequency(frequency: f64) -> Result<()> {
    if frequency > 0.0 && frequency.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveFrequency(frequency))
    }
}

/// Arrival direction in spherical angles (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// Builds a direction; `phi` is wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        const SLACK: f64 = 1e-12;
        if !theta.is_finite() || !phi.is_finite() || !(-SLACK..=PI + SLACK).contains(&theta) {
            return Err(Error::InvalidDirection { theta, phi });
        }
        let theta = theta.clamp(0.0, PI);
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// Direction of a nonzero Cartesian vector.
    pub fn from_vector(v: Vec3) -> Option<Self> {
        let u = v.normalized()?;
        let theta = u.z.clamp(-1.0, 1.0).acos();
        let phi = u.y.atan2(u.x);
        Self::new(theta, phi).ok()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi.to_degrees()
    }

    pub fn unit_vector(&self) -> Vec3 {
        unit_vector(self)
    }

    /// Whether both angles agree within `tol` radians (azimuth compared on the circle).
    pub fn approx_eq(&self, other: &Direction, tol: f64) -> bool {
        (self.theta - other.theta).abs() <= tol && azimuth_gap(self.phi, other.phi) <= tol
    }
}

fn azimuth_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(TAU - d)
}

/// `(sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn unit_vector(d: &Direction) -> Vec3 {
    let (st, ct) = d.theta.sin_cos();
    let (sp, cp) = d.phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

/// Microphone positions (meters) and the reference channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MicArrayGeometry {
    positions: Vec<Vec3>,
    reference_index: usize,
}

impl MicArrayGeometry {
    pub fn new(positions: Vec<Vec3>, reference_index: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidGeometry("at least one microphone is required".into()));
        }
        if reference_index >= positions.len() {
            return Err(Error::InvalidGeometry(format!(
                "reference index {reference_index} out of range for {} microphones",
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(format!("microphone {i} has a non-finite coordinate")));
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if positions[i] == positions[j] {
                    return Err(Error::InvalidGeometry(format!("microphones {i} and {j} coincide")));
                }
            }
        }
        Ok(Self {
            positions,
            reference_index,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, index: usize) -> Vec3 {
        self.positions[index]
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    /// Largest inter-microphone distance; zero for a single microphone.
    pub fn aperture(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                best = best.max(a.distance(*b));
            }
        }
        best
    }

    pub fn distance(&self, m: usize, q: usize) -> f64 {
        self.positions[m].distance(self.positions[q])
    }
}

/// Strictly increasing list of positive frequencies in hertz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    frequencies: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidFrequencyGrid("grid is empty".into()));
        }
        if let Some(f) = frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidFrequencyGrid(format!("frequency {f} is not positive")));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidFrequencyGrid("frequencies must be strictly increasing".into()));
        }
        Ok(Self { frequencies })
    }

    pub fn linear(start: f64, stop: f64, count: usize) -> Result<Self> {
        Self::new(spaced(start, stop, count, |a, b, t| a + (b - a) * t)?)
    }

    pub fn logarithmic(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && stop > 0.0) {
            return Err(Error::InvalidFrequencyGrid("log spacing needs positive endpoints".into()));
        }
        Self::new(spaced(start, stop, count, |a, b, t| (a.ln() + (b.ln() - a.ln()) * t).exp())?)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Index of the node within `tol` of `f`.
    pub fn find(&self, f: f64, tol: f64) -> Option<usize> {
        let i = self.frequencies.partition_point(|x| *x < f - tol);
        (i < self.frequencies.len() && (self.frequencies[i] - f).abs() <= tol).then_some(i)
    }

    fn nearest(&self, f: f64) -> usize {
        let mut best = 0;
        for (i, x) in self.frequencies.iter().enumerate() {
            if (x - f).abs() < (self.frequencies[best] - f).abs() {
                best = i;
            }
        }
        best
    }
}

fn spaced(start: f64, stop: f64, count: usize, at: impl Fn(f64, f64, f64) -> f64) -> Result<Vec<f64>> {
    match count {
        0 => Err(Error::InvalidFrequencyGrid("count must be at least 1".into())),
        1 => Ok(vec![start]),
        _ => {
            let mut out: Vec<f64> = (0..count)
                .map(|i| at(start, stop, i as f64 / (count - 1) as f64))
                .collect();
            // pin the endpoints exactly
            out[0] = start;
            out[count - 1] = stop;
            Ok(out)
        }
    }
}

/// What excites the array: a plane wave from a direction, or a point source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Incidence {
    Plane(Direction),
    Point(Vec3),
}

/// Per-microphone complex pressure response.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    values: Vec<Complex64>,
    frequency: f64,
    incidence: Incidence,
}

impl SteeringVector {
    pub fn new(values: Vec<Complex64>, frequency: f64, incidence: Incidence) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFiniteSteering(i));
        }
        Ok(Self {
            values,
            frequency,
            incidence,
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn incidence(&self) -> Incidence {
        self.incidence
    }

    /// Plane-wave arrival direction, if this vector came from one.
    pub fn direction(&self) -> Option<Direction> {
        match self.incidence {
            Incidence::Plane(d) => Some(d),
            Incidence::Point(_) => None,
        }
    }

    /// `‖v‖²`
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Divides every entry by the entry at `reference`, which becomes exactly 1.
pub fn normalize_to_reference(v: &SteeringVector, reference: usize) -> Result<SteeringVector> {
    let pivot = *v.values.get(reference).ok_or(Error::ReferenceOutOfRange {
        index: reference,
        len: v.len(),
    })?;
    if pivot.norm_sqr() == 0.0 {
        return Err(Error::ZeroReference { index: reference });
    }
    let mut values: Vec<Complex64> = v.values.iter().map(|x| x / pivot).collect();
    values[reference] = Complex64::new(1.0, 0.0);
    SteeringVector::new(values, v.frequency, v.incidence)
}

/// Dense grid of steering vectors indexed by (frequency, direction, microphone).
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringDictionary {
    geometry: MicArrayGeometry,
    frequencies: FrequencyGrid,
    directions: Vec<Direction>,
    entries: Vec<Complex64>,
    // direction indices sorted by (theta, phi)
    order: Vec<usize>,
}

impl SteeringDictionary {
    /// `entries` is laid out frequency-major, then direction, then microphone.
    pub fn new(
        geometry: MicArrayGeometry,
        frequencies: FrequencyGrid,
        directions: Vec<Direction>,
        entries: Vec<Complex64>,
    ) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidDictionary("direction grid is empty".into()));
        }
        let expected = frequencies.len() * directions.len() * geometry.len();
        if entries.len() != expected {
            return Err(Error::InvalidDictionary(format!(
                "expected {} x {} x {} = {expected} entries, got {}",
                frequencies.len(),
                directions.len(),
                geometry.len(),
                entries.len()
            )));
        }
        if entries.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidDictionary("non-finite entry".into()));
        }
        let mut order: Vec<usize> = (0..directions.len()).collect();
        order.sort_by(|&a, &b| {
            let (da, db) = (directions[a], directions[b]);
            da.theta.total_cmp(&db.theta).then(da.phi.total_cmp(&db.phi))
        });
        for w in order.windows(2) {
            if directions[w[0]].approx_eq(&directions[w[1]], GRID_TOLERANCE) {
                return Err(Error::InvalidDictionary(format!(
                    "directions {} and {} coincide",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            geometry,
            frequencies,
            directions,
            entries,
            order,
        })
    }

    pub fn geometry(&self) -> &MicArrayGeometry {
        &self.geometry
    }

    pub fn frequencies(&self) -> &FrequencyGrid {
        &self.frequencies
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Stored vector for grid indices.
    pub fn entry(&self, freq_index: usize, dir_index: usize) -> &[Complex64] {
        let m = self.geometry.len();
        let start = (freq_index * self.directions.len() + dir_index) * m;
        &self.entries[start..start + m]
    }

    pub fn find_direction(&self, d: &Direction, tol: f64) -> Option<usize> {
        let lo = self
            .order
            .partition_point(|&i| self.directions[i].theta < d.theta - tol);
        self.order[lo..]
            .iter()
            .take_while(|&&i| self.directions[i].theta <= d.theta + tol)
            .copied()
            .find(|&i| self.directions[i].approx_eq(d, tol))
    }

    fn nearest_direction(&self, d: &Direction) -> usize {
        let u = d.unit_vector();
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, dir) in self.directions.iter().enumerate() {
            let dot = dir.unit_vector().dot(u);
            if dot > best_dot {
                best_dot = dot;
                best = i;
            }
        }
        best
    }

    /// Exact-node retrieval; off-grid queries fail and name the nearest node.
    pub fn lookup(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        let fi = self.frequencies.find(frequency, GRID_TOLERANCE);
        let di = self.find_direction(direction, GRID_TOLERANCE);
        match (fi, di) {
            (Some(fi), Some(di)) => SteeringVector::new(
                self.entry(fi, di).to_vec(),
                self.frequencies.as_slice()[fi],
                Incidence::Plane(self.directions[di]),
            ),
            _ => {
                let nf = self.frequencies.as_slice()[self.frequencies.nearest(frequency)];
                let nd = self.directions[self.nearest_direction(direction)];
                Err(Error::OffGrid {
                    freq: frequency,
                    theta: direction.theta,
                    phi: direction.phi,
                    nearest_freq: nf,
                    nearest_theta: nd.theta,
                    nearest_phi: nd.phi,
                })
            }
        }
    }
}

/// `dictionary.lookup(f, d)`
pub fn dictionary_lookup(dict: &SteeringDictionary, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
    dict.lookup(frequency, direction)
}
