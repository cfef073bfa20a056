//! Shared fixtures for the benchmarks in `benches/`.

use beamkit_core::{MicArrayGeometry, RigidSphere, Vec3};

/// Five mics: a 30 mm ring 3 mm below a center mic at the origin.
pub fn five_mic_array() -> MicArrayGeometry {
    let (r, z) = (0.03, -0.003);
    MicArrayGeometry::new(
        vec![
            Vec3::new(r, 0.0, z),
            Vec3::new(0.0, r, z),
            Vec3::new(-r, 0.0, z),
            Vec3::new(0.0, -r, z),
            Vec3::ZERO,
        ],
        4,
    )
    .expect("fixed geometry is valid")
}

/// Rigid sphere passing through every mic of [`five_mic_array`].
pub fn five_mic_sphere() -> RigidSphere {
    RigidSphere::new(0.1515, Vec3::new(0.0, 0.0, -0.1515)).expect("fixed sphere is valid")
}
