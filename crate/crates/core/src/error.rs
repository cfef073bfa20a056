use thiserror::Error;

/// Errors produced by the beamkit numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("frequency must be positive and finite, got {0} Hz")]
    NonPositiveFrequency(f64),

    #[error("speed of sound must be positive and finite, got {0} m/s")]
    InvalidSpeedOfSound(f64),

    #[error("invalid direction (theta = {theta} rad, phi = {phi} rad): theta must lie in [0, pi]")]
    InvalidDirection { theta: f64, phi: f64 },

    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid frequency grid: {0}")]
    InvalidFrequencyGrid(String),

    #[error("steering vector length {got} does not match {expected} microphones")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("steering vector contains a non-finite entry at microphone {0}")]
    NonFiniteSteering(usize),

    #[error("reference entry {index} is zero, cannot normalize")]
    ZeroReference { index: usize },

    #[error("reference index {index} out of range for {len} microphones")]
    ReferenceOutOfRange { index: usize, len: usize },

    #[error(
        "query (f = {freq} Hz, theta = {theta} rad, phi = {phi} rad) is not a dictionary grid node; \
         nearest node is (f = {nearest_freq} Hz, theta = {nearest_theta} rad, phi = {nearest_phi} rad)"
    )]
    OffGrid {
        freq: f64,
        theta: f64,
        phi: f64,
        nearest_freq: f64,
        nearest_theta: f64,
        nearest_phi: f64,
    },

    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),

    #[error("source at ({x}, {y}, {z}) coincides with microphone {index}")]
    CoincidentSource { index: usize, x: f64, y: f64, z: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("partial-wave series did not converge for ka = {ka} within {order} terms")]
    SeriesNotConverged { ka: f64, order: usize },

    #[error("microphone {index} lies {distance} m from the scatterer surface (tolerance {tolerance} m)")]
    MicOffSurface { index: usize, distance: f64, tolerance: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("triangle {0} is degenerate (zero area)")]
    DegenerateTriangle(usize),

    #[error("mesh has {count} elements, above the configured cap of {cap}")]
    TooManyElements { count: usize, cap: usize },

    #[error("interior point ({x}, {y}, {z}) is not strictly inside the mesh")]
    ChiefPointOutside { x: f64, y: f64, z: f64 },

    #[error("singular or ill-conditioned system: {0}")]
    SingularSystem(String),

    #[error("quadrature needs at least 2 polar and 2 azimuthal points, got {n_theta} x {n_phi}")]
    QuadratureTooSmall { n_theta: usize, n_phi: usize },

    #[error("noise power model returned an invalid value {value} at theta = {theta} rad, phi = {phi} rad")]
    InvalidNoisePower { value: f64, theta: f64, phi: f64 },

    #[error("steering model failed at f = {freq} Hz, theta = {theta} rad, phi = {phi} rad: {source}")]
    AtNode {
        freq: f64,
        theta: f64,
        phi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is not Hermitian (max asymmetry {0})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue}, trace {trace})")]
    NotPositiveSemidefinite { min_eigenvalue: f64, trace: f64 },

    #[error("eigendecomposition failed to converge")]
    Eigen,

    #[error("invalid design parameter: {0}")]
    InvalidDesign(String),

    #[error("WNG floor {gamma} is infeasible; the maximum achievable WNG is {max_wng}")]
    Infeasible { gamma: f64, max_wng: f64 },

    #[error(
        "diagonal loading does not bracket the WNG floor {gamma}: WNG is {wng_low} at loading {loading_low} \
         and {wng_high} at loading {loading_high}"
    )]
    NonBracketing {
        gamma: f64,
        loading_low: f64,
        wng_low: f64,
        loading_high: f64,
        wng_high: f64,
    },

    #[error("loaded coherence matrix is numerically singular (loading {0})")]
    SingularCoherence(f64),

    #[error("beamformer weights are all zero")]
    ZeroWeights,

    #[error("steering vector is all zero")]
    ZeroSteering,

    #[error("output noise power w^H Psi w is not positive ({0})")]
    ZeroDenominator(f64),

    #[error("input power must be positive, got {0}")]
    InvalidInputPower(f64),
}

impl Error {
    /// Wraps `self` with the grid node at which it happened.
    pub fn at_node(self, freq: f64, theta: f64, phi: f64) -> Self {
        Error::AtNode {
            freq,
            theta,
            phi,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
