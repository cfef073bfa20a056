//! Noise coherence matrices over the sphere of arrival directions.
//!
//! `Λ_mq = ∮ v_m v_q* σ² dΩ`, `β = ∮ σ² dΩ` and `Ψ = Λ / β`, evaluated with a
//! Gauss–Legendre (in cos θ) by uniform-azimuth product rule.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::{Mat, Side};

use crate::model::{Direction, MicArrayGeometry, PhysicalConstants};
use crate::provider::SteeringModel;
use crate::{Complex64, Error, Result};

pub const DEFAULT_QUADRATURE_THETA: usize = 64;
pub const DEFAULT_QUADRATURE_PHI: usize = 128;
/// Relative asymmetry accepted by [`CoherenceMatrix::from_matrix`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Eigenvalues down to `-PSD_TOLERANCE · trace` count as nonnegative.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_{n-1}(x) by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pm) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Direction nodes with solid-angle weights summing to 4π.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    nodes: Vec<Direction>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(Θ_i)`.
    pub fn integrate(&self, f: impl Fn(&Direction) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(d, w)| w * f(d)).sum()
    }
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        make_quadrature(DEFAULT_QUADRATURE_THETA, DEFAULT_QUADRATURE_PHI).expect("default quadrature is valid")
    }
}

/// `n_theta` Gauss–Legendre points in cos θ times `n_phi` equispaced azimuths.
/// Nodes are ordered polar-major, ascending θ, then ascending φ.
pub fn make_quadrature(n_theta: usize, n_phi: usize) -> Result<SphereQuadrature> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::QuadratureTooSmall { n_theta, n_phi });
    }
    let (x, w) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    // descending cos θ is ascending θ
    for i in (0..n_theta).rev() {
        let theta = x[i].clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            nodes.push(Direction::new(theta, j as f64 * dphi)?);
            weights.push(w[i] * dphi);
        }
    }
    Ok(SphereQuadrature { nodes, weights })
}

type NoiseFn = dyn Fn(f64, &Direction) -> f64 + Send + Sync;

/// Noise power `σ²_N(f, Θ)` arriving from each direction.
#[derive(Clone)]
pub struct NoisePowerModel {
    evaluator: Arc<NoiseFn>,
    constant: Option<f64>,
}

impl NoisePowerModel {
    /// Spherically diffuse noise, `σ² ≡ 1`.
    pub fn diffuse() -> Self {
        Self::constant(1.0).expect("unit power is valid")
    }

    pub fn constant(power: f64) -> Result<Self> {
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::InvalidNoisePower {
                value: power,
                theta: f64::NAN,
                phi: f64::NAN,
            });
        }
        Ok(Self {
            evaluator: Arc::new(move |_, _| power),
            constant: Some(power),
        })
    }

    pub fn from_fn(f: impl Fn(f64, &Direction) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            evaluator: Arc::new(f),
            constant: None,
        }
    }

    /// Evaluates and validates `σ²` at one node.
    pub fn power(&self, frequency: f64, direction: &Direction) -> Result<f64> {
        let value = (self.evaluator)(frequency, direction);
        if value >= 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InvalidNoisePower {
                value,
                theta: direction.theta(),
                phi: direction.phi(),
            })
        }
    }
}

impl Default for NoisePowerModel {
    fn default() -> Self {
        Self::diffuse()
    }
}

impl fmt::Debug for NoisePowerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(p) => write!(f, "NoisePowerModel::Constant({p})"),
            None => f.write_str("NoisePowerModel::Custom"),
        }
    }
}

/// Normalized noise correlation `Ψ = Λ / β` at one frequency.
#[derive(Debug, Clone)]
pub struct CoherenceMatrix {
    psi: Mat<Complex64>,
    frequency: f64,
    beta: f64,
    lambda: Option<Mat<Complex64>>,
}

impl CoherenceMatrix {
    /// Wraps a user-supplied matrix after checking it is square, Hermitian
    /// and positive semidefinite. `β` is taken as 1.
    pub fn from_matrix(psi: Mat<Complex64>, frequency: f64) -> Result<Self> {
        if psi.nrows() != psi.ncols() || psi.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: psi.nrows(),
                got: psi.ncols(),
            });
        }
        let asym = max_asymmetry(&psi);
        let scale = max_abs(&psi).max(f64::MIN_POSITIVE);
        if !(asym <= HERMITIAN_TOLERANCE * scale) {
            return Err(Error::NotHermitian(asym));
        }
        let psi = symmetrize(psi);
        check_psd(&psi)?;
        Ok(Self {
            psi,
            frequency,
            beta: 1.0,
            lambda: None,
        })
    }

    pub fn identity(m: usize, frequency: f64) -> Self {
        Self {
            psi: Mat::identity(m, m),
            frequency,
            beta: 1.0,
            lambda: None,
        }
    }

    pub fn psi(&self) -> &Mat<Complex64> {
        &self.psi
    }

    pub fn size(&self) -> usize {
        self.psi.nrows()
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Unnormalized `Λ`, when built from a quadrature.
    pub fn lambda(&self) -> Option<&Mat<Complex64>> {
        self.lambda.as_ref()
    }

    pub fn trace(&self) -> f64 {
        (0..self.size()).map(|i| self.psi[(i, i)].re).sum()
    }

    /// Ascending eigenvalues of `Ψ`.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues(&self.psi)
    }

    /// `cΨ`, keeping the same frequency.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            psi: Mat::from_fn(self.size(), self.size(), |i, j| self.psi[(i, j)] * c),
            frequency: self.frequency,
            beta: self.beta,
            lambda: self.lambda.clone(),
        }
    }
}

pub(crate) fn max_abs(m: &Mat<Complex64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

pub(crate) fn max_asymmetry(m: &Mat<Complex64>) -> f64 {
    let n = m.nrows();
    let mut out = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            out = out.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    out
}

fn symmetrize(m: Mat<Complex64>) -> Mat<Complex64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    })
}

pub(crate) fn eigenvalues(m: &Mat<Complex64>) -> Result<Vec<f64>> {
    let vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?;
    Ok(vals)
}

fn check_psd(psi: &Mat<Complex64>) -> Result<()> {
    let trace: f64 = (0..psi.nrows()).map(|i| psi[(i, i)].re).sum();
    let min = eigenvalues(psi)?.into_iter().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * trace.abs() || !min.is_finite() {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
            trace,
        });
    }
    Ok(())
}

/// Builds `Ψ` by quadrature over the provider's steering vectors. Node
/// contributions are summed in quadrature order, so the result does not
/// depend on how the provider parallelizes.
pub fn coherence_matrix<P: SteeringModel + ?Sized>(
    provider: &P,
    frequency: f64,
    noise: &NoisePowerModel,
    quadrature: &SphereQuadrature,
) -> Result<CoherenceMatrix> {
    let m = provider.num_mics();
    let nodes = quadrature.nodes();
    let powers = nodes
        .iter()
        .map(|d| noise.power(frequency, d).map_err(|e| e.at_node(frequency, d.theta(), d.phi())))
        .collect::<Result<Vec<_>>>()?;
    let vectors = provider.steering_batch(frequency, nodes)?;
    if vectors.len() != nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            got: vectors.len(),
        });
    }

    let mut lambda = vec![Complex64::new(0.0, 0.0); m * m];
    let mut beta = 0.0;
    for ((v, w), s2) in vectors.iter().zip(quadrature.weights()).zip(&powers) {
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: v.len() });
        }
        let scale = w * s2;
        beta += scale;
        if scale == 0.0 {
            continue;
        }
        let v = v.values();
        for q in 0..m {
            let vq = v[q].conj() * scale;
            for (p, vp) in v.iter().enumerate() {
                lambda[q * m + p] += vp * vq;
            }
        }
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidNoisePower {
            value: beta,
            theta: f64::NAN,
            phi: f64::NAN,
        });
    }
    let lambda = symmetrize(Mat::from_fn(m, m, |i, j| lambda[j * m + i]));
    let psi = Mat::from_fn(m, m, |i, j| lambda[(i, j)] / beta);
    Ok(CoherenceMatrix {
        psi,
        frequency,
        beta,
        lambda: Some(lambda),
    })
}

/// Closed-form spherically diffuse coherence in free field:
/// `Ψ_mq = sin(k d_mq) / (k d_mq)`.
pub fn diffuse_sinc_coherence(
    geometry: &MicArrayGeometry,
    frequency: f64,
    consts: &PhysicalConstants,
) -> Result<CoherenceMatrix> {
    let k = consts.wavenumber(frequency)?;
    let m = geometry.len();
    let psi = Mat::from_fn(m, m, |i, j| {
        let x = k * geometry.distance(i, j);
        Complex64::new(sinc(x), 0.0)
    });
    Ok(CoherenceMatrix {
        psi,
        frequency,
        beta: 4.0 * PI,
        lambda: None,
    })
}

/// `sin(x)/x`, with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
