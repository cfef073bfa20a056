//! Array gain, white noise gain, MACC and beampatterns.

use faer::Side;

use crate::coherence::{max_abs, max_asymmetry, CoherenceMatrix, HERMITIAN_TOLERANCE};
use crate::designer::{inner, to_db};
use crate::model::{Direction, SteeringVector};
use crate::provider::SteeringModel;
use crate::{Complex64, Error, Result};

/// Eigenvalues of `Ψ` below `EIGEN_FLOOR_REL · trace(Ψ)/M` are clamped.
pub const EIGEN_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    input_power: f64,
    pub eigen_floor_rel: f64,
}

impl MetricConfig {
    pub fn new(input_power: f64) -> Result<Self> {
        if !(input_power > 0.0 && input_power.is_finite()) {
            return Err(Error::InvalidInputPower(input_power));
        }
        Ok(Self {
            input_power,
            eigen_floor_rel: EIGEN_FLOOR_REL,
        })
    }

    pub fn input_power(&self) -> f64 {
        self.input_power
    }
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self::new(1.0).expect("unit power is valid")
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `w^H Ψ w`.
pub fn quadratic_form(w: &[Complex64], psi: &CoherenceMatrix) -> f64 {
    let p = psi.psi();
    let m = w.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let mut col = Complex64::new(0.0, 0.0);
        for i in 0..m {
            col += w[i].conj() * p[(i, j)];
        }
        acc += col * w[j];
    }
    acc.re
}

/// `|w^H v|² / (w^H Ψ w)`.
pub fn array_gain(w: &[Complex64], v: &SteeringVector, psi: &CoherenceMatrix) -> Result<f64> {
    check_len(v.len(), w.len())?;
    check_len(psi.size(), w.len())?;
    let den = quadratic_form(w, psi);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator(den));
    }
    Ok(inner(w, v.values()).norm_sqr() / den)
}

/// `|w^H v|² / (w^H w)`.
pub fn white_noise_gain(w: &[Complex64], v: &SteeringVector) -> Result<f64> {
    check_len(v.len(), w.len())?;
    let den: f64 = w.iter().map(|x| x.norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::ZeroWeights);
    }
    Ok(inner(w, v.values()).norm_sqr() / den)
}

/// `ln(1 + P ‖S^{-1/2} U^H v‖²)` with `Ψ = U S U^H`.
pub fn macc(psi: &CoherenceMatrix, v: &SteeringVector, cfg: &MetricConfig) -> Result<f64> {
    check_len(psi.size(), v.len())?;
    let p = psi.psi();
    let asym = max_asymmetry(p);
    if !(asym <= HERMITIAN_TOLERANCE * max_abs(p).max(f64::MIN_POSITIVE)) {
        return Err(Error::NotHermitian(asym));
    }
    let m = psi.size();
    let floor = cfg.eigen_floor_rel * psi.trace() / m as f64;
    let evd = p.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let mut acc = 0.0;
    for i in 0..m {
        let proj: Complex64 = (0..m).map(|r| u[(r, i)].conj() * v.values()[r]).sum();
        acc += proj.norm_sqr() / s[i].re.max(floor);
    }
    Ok((cfg.input_power * acc).ln_1p())
}

/// `B(Θ) = w^H v(Θ)` over a grid of directions.
pub fn beampattern<P: SteeringModel + ?Sized>(
    w: &[Complex64],
    provider: &P,
    frequency: f64,
    directions: &[Direction],
) -> Result<Vec<Complex64>> {
    check_len(provider.num_mics(), w.len())?;
    provider
        .steering_batch(frequency, directions)?
        .iter()
        .map(|v| {
            check_len(w.len(), v.len())?;
            Ok(inner(w, v.values()))
        })
        .collect()
}

/// Metrics for one (frequency, look direction) design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub frequency: f64,
    pub look_direction: Direction,
    pub ag: f64,
    pub wng: f64,
    /// Natural-log units.
    pub macc: f64,
}

impl MetricRow {
    pub fn evaluate(
        w: &[Complex64],
        v: &SteeringVector,
        psi: &CoherenceMatrix,
        look_direction: Direction,
        cfg: &MetricConfig,
    ) -> Result<Self> {
        Ok(Self {
            frequency: v.frequency(),
            look_direction,
            ag: array_gain(w, v, psi)?,
            wng: white_noise_gain(w, v)?,
            macc: macc(psi, v, cfg)?,
        })
    }

    pub fn ag_db(&self) -> f64 {
        to_db(self.ag)
    }

    pub fn wng_db(&self) -> f64 {
        to_db(self.wng)
    }
}

/// Rows ordered by frequency, then look direction as supplied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSweep {
    pub rows: Vec<MetricRow>,
}

impl MetricSweep {
    pub fn new(rows: Vec<MetricRow>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
