//! MVDR beamformers with a white-noise-gain floor.
//!
//! Under `w^H v = 1` the WNG constraint is `‖w‖² ≤ 1/γ`, and diagonally
//! loaded MVDR weights sweep the AG/WNG trade-off as the loading grows. The
//! robust design is the loaded MVDR with the smallest loading that meets
//! the floor, found by bisection on `log ε`.

use faer::prelude::*;
use faer::{Mat, Side};

use crate::coherence::CoherenceMatrix;
use crate::model::{Direction, SteeringVector};
use crate::{Complex64, Error, Result};

/// Default loading floor relative to `trace(Ψ)/M`.
pub const LOADING_FLOOR_REL: f64 = 1e-12;
/// Upper end of the loading search relative to `trace(Ψ)/M`.
pub const LOADING_CEILING_REL: f64 = 1e6;
pub const BISECTION_TOLERANCE: f64 = 1e-6;
pub const MAX_BISECTION_ITERATIONS: usize = 200;

/// `10 log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Design parameters for one look direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    gamma: f64,
    look_direction: Direction,
    /// Absolute loading floor; `None` uses `LOADING_FLOOR_REL · trace(Ψ)/M`.
    pub loading_floor: Option<f64>,
    /// Relative tolerance on the loading found by bisection.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl DesignSpec {
    /// `gamma` is the WNG floor as a linear power ratio.
    pub fn new(gamma: f64, look_direction: Direction) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidDesign(format!("WNG floor must be positive, got {gamma}")));
        }
        Ok(Self {
            gamma,
            look_direction,
            loading_floor: None,
            tolerance: BISECTION_TOLERANCE,
            max_iterations: MAX_BISECTION_ITERATIONS,
        })
    }

    pub fn from_db(gamma_db: f64, look_direction: Direction) -> Result<Self> {
        Self::new(from_db(gamma_db), look_direction)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_db(&self) -> f64 {
        to_db(self.gamma)
    }

    pub fn look_direction(&self) -> Direction {
        self.look_direction
    }
}

/// Per-design numbers kept alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignDiagnostics {
    pub loading: f64,
    pub achieved_wng: f64,
    /// True when the WNG floor forced loading above the floor value.
    pub constraint_active: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    w: Vec<Complex64>,
    frequency: f64,
    look_direction: Direction,
    diagnostics: DesignDiagnostics,
}

impl BeamformerWeights {
    pub fn weights(&self) -> &[Complex64] {
        &self.w
    }

    pub fn into_weights(self) -> Vec<Complex64> {
        self.w
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn look_direction(&self) -> Direction {
        self.look_direction
    }

    pub fn diagnostics(&self) -> &DesignDiagnostics {
        &self.diagnostics
    }
}

/// `w^H v`.
pub fn inner(w: &[Complex64], v: &[Complex64]) -> Complex64 {
    w.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm_sqr(w: &[Complex64]) -> f64 {
    w.iter().map(|x| x.norm_sqr()).sum()
}

fn check_sizes(psi: &CoherenceMatrix, v: &SteeringVector) -> Result<()> {
    if psi.size() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.size(),
            got: v.len(),
        });
    }
    Ok(())
}

/// `w = (Ψ+εI)^{-1} v / (v^H (Ψ+εI)^{-1} v)` via a Cholesky factorization.
pub fn mvdr_closed_form(psi: &CoherenceMatrix, v: &SteeringVector, loading: f64) -> Result<Vec<Complex64>> {
    check_sizes(psi, v)?;
    if !(loading >= 0.0 && loading.is_finite()) {
        return Err(Error::InvalidDesign(format!("loading must be nonnegative, got {loading}")));
    }
    if v.norm_squared() == 0.0 {
        return Err(Error::ZeroSteering);
    }
    let m = psi.size();
    let p = psi.psi();
    let loaded = Mat::from_fn(m, m, |i, j| if i == j { p[(i, j)] + loading } else { p[(i, j)] });
    let llt = loaded.llt(Side::Lower).map_err(|_| Error::SingularCoherence(loading))?;
    let rhs = Mat::from_fn(m, 1, |i, _| v.values()[i]);
    let a = llt.solve(&rhs);
    let a: Vec<Complex64> = (0..m).map(|i| a[(i, 0)]).collect();
    let s = inner(v.values(), &a);
    if !(s.re > 0.0 && s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::SingularCoherence(loading));
    }
    let w: Vec<Complex64> = a.into_iter().map(|x| x / s).collect();
    if w.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::SingularCoherence(loading));
    }
    Ok(w)
}

/// Largest WNG any distortionless beamformer reaches for `v`: `‖v‖²`.
pub fn max_achievable_wng(v: &SteeringVector) -> Result<f64> {
    let n = v.norm_squared();
    if n > 0.0 {
        Ok(n)
    } else {
        Err(Error::ZeroSteering)
    }
}

fn wng_of(w: &[Complex64], v: &[Complex64]) -> f64 {
    inner(w, v).norm_sqr() / norm_sqr(w)
}

/// Minimum-loading MVDR meeting `WNG ≥ γ`.
pub fn robust_mvdr(psi: &CoherenceMatrix, v: &SteeringVector, spec: &DesignSpec) -> Result<BeamformerWeights> {
    check_sizes(psi, v)?;
    let max_wng = max_achievable_wng(v)?;
    let gamma = spec.gamma;
    if gamma > max_wng {
        return Err(Error::Infeasible { gamma, max_wng });
    }
    let scale = psi.trace() / psi.size() as f64;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidDesign(format!("coherence trace must be positive, got {}", psi.trace())));
    }
    let floor = spec.loading_floor.unwrap_or(LOADING_FLOOR_REL * scale);
    let ceiling = LOADING_CEILING_REL * scale;
    if !(floor > 0.0 && floor < ceiling) {
        return Err(Error::InvalidDesign(format!("loading floor {floor} outside (0, {ceiling})")));
    }
    let done = |w: Vec<Complex64>, loading: f64, active: bool, iterations: usize| {
        let achieved_wng = wng_of(&w, v.values());
        BeamformerWeights {
            w,
            frequency: v.frequency(),
            look_direction: spec.look_direction,
            diagnostics: DesignDiagnostics {
                loading,
                achieved_wng,
                constraint_active: active,
                iterations,
            },
        }
    };

    let w_floor = mvdr_closed_form(psi, v, floor)?;
    let wng_low = wng_of(&w_floor, v.values());
    if wng_low >= gamma {
        return Ok(done(w_floor, floor, false, 0));
    }
    let w_ceiling = mvdr_closed_form(psi, v, ceiling)?;
    let wng_high = wng_of(&w_ceiling, v.values());
    let accept = gamma * (1.0 - spec.tolerance);
    if wng_high < accept {
        return Err(Error::NonBracketing {
            gamma,
            loading_low: floor,
            wng_low,
            loading_high: ceiling,
            wng_high,
        });
    }
    if wng_high < gamma {
        // the floor sits at the supremum; the ceiling is as close as loading gets
        return Ok(done(w_ceiling, ceiling, true, 0));
    }

    let (mut lo, mut hi) = (floor.ln(), ceiling.ln());
    let mut w_hi = w_ceiling;
    let mut iterations = 0;
    while iterations < spec.max_iterations && (hi - lo) > spec.tolerance.ln_1p() {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let w = mvdr_closed_form(psi, v, mid.exp())?;
        if wng_of(&w, v.values()) >= gamma {
            hi = mid;
            w_hi = w;
        } else {
            lo = mid;
        }
    }
    Ok(done(w_hi, hi.exp(), true, iterations))
}
