//! Writes an approximate smart-speaker form factor: a 70 mm cylinder, 130 mm
//! tall, whose top is a shallow spherical cap through the five microphones of
//! `configs/paper_array.toml`. The cap curvature is a guess chosen so the
//! mics lie on it; treat the result as an example input, not a reference.
//!
//! ```text
//! cargo run -p beamkit-cli --example form_factor_mesh -- configs/form_factor.mesh
//! ```

use std::f64::consts::PI;
use std::io::BufWriter;

use beamkit_cli::formats::write_mesh;
use beamkit_core::{TriMesh, Vec3};

const RADIUS: f64 = 0.035;
const HEIGHT: f64 = 0.130;
/// Cap sphere through (0,0,0) and (0.03, 0, -0.003).
const CAP_RADIUS: f64 = 0.1515;
const AROUND: usize = 32;
const CAP_RINGS: usize = 5;
const SIDE_LAYERS: usize = 18;

struct Builder {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl Builder {
    fn ring(&mut self, r: f64, z: f64, n: usize) -> Vec<usize> {
        (0..n)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / n as f64;
                self.vertices.push(Vec3::new(r * a.cos(), r * a.sin(), z));
                self.vertices.len() - 1
            })
            .collect()
    }

    fn tri(&mut self, t: [usize; 3], flip: bool) {
        self.triangles.push(if flip { [t[0], t[2], t[1]] } else { t });
    }

    /// Joins two concentric rings (inner may be a single center vertex) by
    /// marching around both in angle order. Unflipped faces point to +z.
    fn stitch(&mut self, inner: &[usize], outer: &[usize], flip: bool) {
        let (na, nb) = (inner.len(), outer.len());
        if na == 1 {
            for j in 0..nb {
                self.tri([inner[0], outer[j], outer[(j + 1) % nb]], flip);
            }
            return;
        }
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (j + 1) as f64 / nb as f64;
            if j < nb && (i == na || next_b <= next_a) {
                self.tri([inner[i % na], outer[j], outer[(j + 1) % nb]], flip);
                j += 1;
            } else {
                self.tri([inner[i], outer[j % nb], inner[(i + 1) % na]], flip);
                i += 1;
            }
        }
    }
}

fn cap_z(r: f64) -> f64 {
    (CAP_RADIUS * CAP_RADIUS - r * r).sqrt() - CAP_RADIUS
}

fn build() -> TriMesh {
    let mut b = Builder {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };
    let counts: Vec<usize> = (1..=CAP_RINGS)
        .map(|i| ((AROUND * i) as f64 / CAP_RINGS as f64).round().max(6.0) as usize)
        .collect();
    let radii: Vec<f64> = (1..=CAP_RINGS).map(|i| RADIUS * i as f64 / CAP_RINGS as f64).collect();

    // top cap
    let mut prev = b.ring(0.0, 0.0, 1);
    for (&r, &n) in radii.iter().zip(&counts) {
        let ring = b.ring(r, cap_z(r), n);
        b.stitch(&prev, &ring, false);
        prev = ring;
    }

    // side wall, from the cap edge down to the base
    let z_top = cap_z(RADIUS);
    let z_bottom = -HEIGHT;
    for layer in 1..=SIDE_LAYERS {
        let z = z_top + (z_bottom - z_top) * layer as f64 / SIDE_LAYERS as f64;
        let ring = b.ring(RADIUS, z, AROUND);
        for j in 0..AROUND {
            let k = (j + 1) % AROUND;
            b.tri([prev[j], ring[j], ring[k]], false);
            b.tri([prev[j], ring[k], prev[k]], false);
        }
        prev = ring;
    }

    // flat base, facing down
    let mut outer = prev;
    for i in (0..CAP_RINGS - 1).rev() {
        let ring = b.ring(radii[i], z_bottom, counts[i]);
        b.stitch(&ring, &outer, true);
        outer = ring;
    }
    let center = b.ring(0.0, z_bottom, 1);
    b.stitch(&center, &outer, true);

    TriMesh::new(b.vertices, b.triangles).expect("form factor mesh is closed and outward")
}

fn main() -> std::io::Result<()> {
    let mesh = build();
    let path = std::env::args().nth(1).unwrap_or_else(|| "form_factor.mesh".into());
    let mut out = BufWriter::new(std::fs::File::create(&path)?);
    use std::io::Write;
    writeln!(out, "# approximate cylinder with spherical-cap top; {} triangles", mesh.len())?;
    write_mesh(&mut out, &mesh)?;
    eprintln!(
        "{path}: {} triangles, longest edge {:.4} m",
        mesh.len(),
        mesh.max_edge_length()
    );
    Ok(())
}
