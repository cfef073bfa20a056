//! Beamformer design for microphone arrays mounted on rigid bodies.
//!
//! The crate covers the whole chain from geometry to metrics:
//!
//! - steering vectors in free field ([`freefield`]), on a rigid sphere
//!   ([`sphere`]) and on arbitrary closed meshes ([`bem`]);
//! - noise coherence matrices by spherical quadrature ([`coherence`]);
//! - MVDR weights with a white-noise-gain floor ([`designer`]);
//! - array gain, WNG, MACC and beampatterns ([`metrics`]).
//!
//! Time dependence is `e^{+jωt}`; a plane wave arriving from direction `u`
//! is `e^{+jk uᵀr}` and outgoing waves carry `e^{-jkr}`. Directions are
//! arrival directions in radians, θ from +z and φ from +x.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bem;
pub mod coherence;
pub mod designer;
mod error;
pub mod freefield;
pub mod mesh;
pub mod metrics;
pub mod model;
pub mod provider;
pub mod special;
pub mod sphere;
mod vec3;

pub use faer;
pub use num_complex::Complex64;

pub use bem::{build_dictionary, sample_at_mics, solve_scattering, BemModel, BemOptions, ChiefConfig, ScatterSolution};
pub use coherence::{
    coherence_matrix, diffuse_sinc_coherence, make_quadrature, CoherenceMatrix, NoisePowerModel, SphereQuadrature,
};
pub use designer::{from_db, max_achievable_wng, mvdr_closed_form, robust_mvdr, to_db, BeamformerWeights, DesignSpec};
pub use error::{Error, Result};
pub use freefield::{plane_wave_steering, spherical_wave_steering, PlaneWaveModel, SourcePoint, SphericalWaveModel};
pub use mesh::{geodesic_sphere, icosphere, TriMesh};
pub use metrics::{array_gain, beampattern, macc, white_noise_gain, MetricConfig, MetricRow, MetricSweep};
pub use model::{
    dictionary_lookup, normalize_to_reference, wavenumber, Direction, FrequencyGrid, Incidence, MicArrayGeometry,
    PhysicalConstants, SteeringDictionary, SteeringVector,
};
pub use provider::{SteeringModel, TotalFieldModel};
pub use sphere::{rigid_sphere_steering, RigidSphere, RigidSphereModel, SeriesConfig, Truncation};
pub use vec3::Vec3;
