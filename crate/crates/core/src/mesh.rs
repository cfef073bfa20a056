//! Closed triangle meshes for rigid scatterers.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::{Error, Result, Vec3};

/// Closed, consistently oriented triangle surface with outward normals.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    centroids: Vec<Vec3>,
    areas: Vec<f64>,
}

impl TriMesh {
    /// Validates the surface: indices in range, nonzero areas, every edge
    /// shared by exactly two oppositely oriented triangles, positive signed
    /// volume (outward normals) and no intersecting non-adjacent triangles.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.len() < 4 {
            return Err(Error::InvalidMesh(format!(
                "a closed surface needs at least 4 triangles, got {}",
                triangles.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(t));
            }
        }

        let scale = bounding_diagonal(&vertices);
        let mut normals = Vec::with_capacity(triangles.len());
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let cross = (b - a).cross(c - a);
            let area = 0.5 * cross.norm();
            if !(area > 1e-14 * scale * scale) {
                return Err(Error::DegenerateTriangle(t));
            }
            normals.push(cross / (2.0 * area));
            centroids.push((a + b + c) / 3.0);
            areas.push(area);
        }

        let mesh = Self {
            vertices,
            triangles,
            normals,
            centroids,
            areas,
        };
        mesh.check_closed_and_oriented()?;
        let volume = mesh.signed_volume();
        if !(volume > 0.0) {
            return Err(Error::InvalidMesh(format!(
                "signed volume is {volume}; triangles must be ordered counter-clockwise seen from outside"
            )));
        }
        if let Some((a, b)) = mesh.find_self_intersection() {
            return Err(Error::InvalidMesh(format!("triangles {a} and {b} intersect")));
        }
        Ok(mesh)
    }

    fn check_closed_and_oriented(&self) -> Result<()> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let edge = (tri[e], tri[(e + 1) % 3]);
                if let Some(prev) = directed.insert(edge, t) {
                    return Err(Error::InvalidMesh(format!(
                        "edge {}-{} is used with the same orientation by triangles {prev} and {t}",
                        edge.0, edge.1
                    )));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidMesh(format!("edge {a}-{b} is a boundary edge; surface is not closed")));
            }
        }
        Ok(())
    }

    fn find_self_intersection(&self) -> Option<(usize, usize)> {
        let boxes: Vec<(Vec3, Vec3)> = self
            .triangles
            .iter()
            .map(|tri| {
                let p = tri.map(|i| self.vertices[i]);
                let lo = Vec3::new(
                    p[0].x.min(p[1].x).min(p[2].x),
                    p[0].y.min(p[1].y).min(p[2].y),
                    p[0].z.min(p[1].z).min(p[2].z),
                );
                let hi = Vec3::new(
                    p[0].x.max(p[1].x).max(p[2].x),
                    p[0].y.max(p[1].y).max(p[2].y),
                    p[0].z.max(p[1].z).max(p[2].z),
                );
                (lo, hi)
            })
            .collect();
        let mut order: Vec<usize> = (0..self.triangles.len()).collect();
        order.sort_by(|&a, &b| boxes[a].0.x.total_cmp(&boxes[b].0.x));
        for (pos, &a) in order.iter().enumerate() {
            for &b in &order[pos + 1..] {
                if boxes[b].0.x > boxes[a].1.x {
                    break;
                }
                let overlap = boxes[a].0.y <= boxes[b].1.y
                    && boxes[b].0.y <= boxes[a].1.y
                    && boxes[a].0.z <= boxes[b].1.z
                    && boxes[b].0.z <= boxes[a].1.z;
                if !overlap {
                    continue;
                }
                let (ta, tb) = (self.triangles[a], self.triangles[b]);
                if ta.iter().any(|v| tb.contains(v)) {
                    continue;
                }
                if self.triangles_intersect(ta, tb) {
                    return Some((a.min(b), a.max(b)));
                }
            }
        }
        None
    }

    fn triangles_intersect(&self, ta: [usize; 3], tb: [usize; 3]) -> bool {
        let pa = ta.map(|i| self.vertices[i]);
        let pb = tb.map(|i| self.vertices[i]);
        (0..3).any(|e| segment_hits_triangle(pa[e], pa[(e + 1) % 3], pb))
            || (0..3).any(|e| segment_hits_triangle(pb[e], pb[(e + 1) % 3], pa))
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Enclosed volume by the divergence theorem; positive for outward normals.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|i| self.vertices[i]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// Centroid of the enclosed solid.
    pub fn volume_centroid(&self) -> Vec3 {
        let mut acc = Vec3::ZERO;
        let mut vol = 0.0;
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            let v = a.dot(b.cross(c)) / 6.0;
            acc += (a + b + c) * (v / 4.0);
            vol += v;
        }
        acc / vol
    }

    pub fn triangle_max_edge(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        a.distance(b).max(b.distance(c)).max(c.distance(a))
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.len()).map(|t| self.triangle_max_edge(t)).fold(0.0, f64::max)
    }

    /// Generalized winding number: ≈1 inside, ≈0 outside.
    pub fn winding_number(&self, p: Vec3) -> f64 {
        let mut total = 0.0;
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i] - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(b.cross(c));
            let den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * PI)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.winding_number(p) > 0.5
    }

    /// Distance from `p` to the closest point of the surface.
    pub fn distance_to_surface(&self, p: Vec3) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|i| self.vertices[i]);
                closest_point_on_triangle(p, a, b, c).distance(p)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Same surface with triangles listed in the order given by `perm`
    /// (`new[i] = old[perm[i]]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::InvalidMesh("permutation length mismatch".into()));
        }
        let triangles = perm.iter().map(|&i| self.triangles[i]).collect();
        Self::new(self.vertices.clone(), triangles)
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += offset;
        }
        for c in &mut out.centroids {
            *c += offset;
        }
        out
    }
}

fn bounding_diagonal(vertices: &[Vec3]) -> f64 {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for v in vertices {
        lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
        hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
    }
    (hi - lo).norm()
}

fn segment_hits_triangle(p: Vec3, q: Vec3, tri: [Vec3; 3]) -> bool {
    const EPS: f64 = 1e-12;
    let d = q - p;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let h = d.cross(e2);
    let det = e1.dot(h);
    if det.abs() < EPS * d.norm() * e1.norm() * e2.norm() {
        return false;
    }
    let f = 1.0 / det;
    let s = p - tri[0];
    let u = f * s.dot(h);
    if !(EPS..=1.0 - EPS).contains(&u) {
        return false;
    }
    let qv = s.cross(e1);
    let v = f * d.dot(qv);
    if v < EPS || u + v > 1.0 - EPS {
        return false;
    }
    let t = f * e2.dot(qv);
    (EPS..=1.0 - EPS).contains(&t)
}

/// Closest point of triangle `abc` to `p` (Voronoi-region walk).
fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn icosahedron_vertices() -> Vec<Vec3> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|&v| Vec3::from_array(v).normalized().expect("nonzero"))
    .collect()
}

/// Geodesic sphere: every icosahedron face split into `frequency²`
/// triangles on a barycentric grid, vertices projected onto the sphere.
/// Gives `20·frequency²` triangles.
pub fn geodesic_sphere(frequency: usize, radius: f64, center: Vec3) -> Result<TriMesh> {
    if frequency == 0 {
        return Err(Error::InvalidMesh("geodesic frequency must be at least 1".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidMesh(format!("sphere radius must be positive, got {radius}")));
    }
    let n = frequency;
    let corners = icosahedron_vertices();
    let mut vertices = corners.clone();
    let mut edge_points: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(20 * n * n);

    for face in ICOSAHEDRON_FACES {
        let [a, b, c] = face;
        // grid[i][j] for i + j <= n: A + (B-A) i/n + (C-A) j/n
        let mut grid = vec![vec![0usize; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=(n - i) {
                let id = if i == 0 && j == 0 {
                    a
                } else if i == n {
                    b
                } else if j == n {
                    c
                } else if j == 0 {
                    edge_vertex(&mut vertices, &mut edge_points, &corners, a, b, i, n)
                } else if i == 0 {
                    edge_vertex(&mut vertices, &mut edge_points, &corners, a, c, j, n)
                } else if i + j == n {
                    edge_vertex(&mut vertices, &mut edge_points, &corners, b, c, j, n)
                } else {
                    let w = [(n - i - j) as f64, i as f64, j as f64];
                    let p = corners[a] * w[0] + corners[b] * w[1] + corners[c] * w[2];
                    vertices.push(p.normalized().expect("nonzero"));
                    vertices.len() - 1
                };
                grid[i][j] = id;
            }
        }
        for i in 0..n {
            for j in 0..(n - i) {
                triangles.push([grid[i][j], grid[i + 1][j], grid[i][j + 1]]);
                if i + j + 1 < n {
                    triangles.push([grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
                }
            }
        }
    }

    for v in &mut vertices {
        *v = center + *v * radius;
    }
    TriMesh::new(vertices, triangles)
}

// Point `step`/`n` of the way from corner `from` to corner `to`, shared by
// both faces adjacent to that edge.
fn edge_vertex(
    vertices: &mut Vec<Vec3>,
    cache: &mut HashMap<(usize, usize, usize), usize>,
    corners: &[Vec3],
    from: usize,
    to: usize,
    step: usize,
    n: usize,
) -> usize {
    let (lo, hi, s) = if from < to { (from, to, step) } else { (to, from, n - step) };
    *cache.entry((lo, hi, s)).or_insert_with(|| {
        let t = s as f64 / n as f64;
        let p = corners[lo] * (1.0 - t) + corners[hi] * t;
        vertices.push(p.normalized().expect("nonzero"));
        vertices.len() - 1
    })
}

/// Icosphere at subdivision `level`: `20·4^level` triangles.
pub fn icosphere(level: u32, radius: f64, center: Vec3) -> Result<TriMesh> {
    geodesic_sphere(1usize << level, radius, center)
}
