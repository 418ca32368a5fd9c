//! Structured triangulations of axis-aligned rectangles and their face
//! skeleton. Each grid cell is split along the same diagonal, so refinement
//! level `m` on the unit square gives `2*4^m` congruent right triangles.

use crate::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub const UNIT: Rectangle = Rectangle {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// A mesh edge. `vertices` is stored with the lower global index first and
/// the unit normal has a fixed global orientation: outward from the
/// lower-indexed adjacent triangle (outward from the domain on the boundary).
#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
    pub boundary: bool,
    /// Adjacent triangles; `tris[1]` is None on the boundary.
    pub tris: [Option<usize>; 2],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    /// Per triangle: the face id of local edges 0..3 (edge `e` joins local
    /// vertices `e` and `(e+1)%3`) and the sign such that
    /// `sign * face.normal` is the outward normal of this triangle.
    pub tri_faces: Vec<[(usize, f64); 3]>,
    pub h_max: f64,
    pub refinement_level: Option<u32>,
    pub domain: Rectangle,
}

/// Geometry of one triangle: the affine map `x = p0 + J xi` from the
/// reference triangle (0,0),(1,0),(0,1).
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub p0: [f64; 2],
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    pub inv_jac: [[f64; 2]; 2],
    /// `J^{-T}`, mapping reference gradients to physical gradients.
    pub inv_jac_t: [[f64; 2]; 2],
    pub h_k: f64,
    /// Outward unit normals of the three local edges.
    pub normals: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.p0[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.p0[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn unmap(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.p0[0], x[1] - self.p0[1]];
        [
            self.inv_jac[0][0] * d[0] + self.inv_jac[0][1] * d[1],
            self.inv_jac[1][0] * d[0] + self.inv_jac[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn push_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_jac_t[0][0] * g[0] + self.inv_jac_t[0][1] * g[1],
            self.inv_jac_t[1][0] * g[0] + self.inv_jac_t[1][1] * g[1],
        ]
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.boundary).count()
    }

    pub fn element_geometry(&self, k: usize) -> Result<ElementGeometry> {
        let t = self.triangles[k];
        let p0 = self.vertices[t[0]];
        let p1 = self.vertices[t[1]];
        let p2 = self.vertices[t[2]];
        let jac = [
            [p1[0] - p0[0], p2[0] - p0[0]],
            [p1[1] - p0[1], p2[1] - p0[1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det <= f64::EPSILON * 16.0 * (jac[0][0].abs() + jac[1][1].abs() + 1.0) {
            return Err(Error::DegenerateElement(k));
        }
        let inv_jac = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let inv_jac_t = [
            [inv_jac[0][0], inv_jac[1][0]],
            [inv_jac[0][1], inv_jac[1][1]],
        ];
        let pts = [p0, p1, p2];
        let h_k = dist(p0, p1).max(dist(p1, p2)).max(dist(p2, p0));
        let mut normals = [[0.0; 2]; 3];
        for e in 0..3 {
            let a = pts[e];
            let b = pts[(e + 1) % 3];
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            // right-hand normal of a CCW-ordered edge points outward
            normals[e] = [t[1] / len, -t[0] / len];
        }
        Ok(ElementGeometry {
            p0,
            jac,
            det,
            inv_jac,
            inv_jac_t,
            h_k,
            normals,
        })
    }

    /// Plain-text dump: vertex, triangle and face lists, one entity per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "vertices {}\ntriangles {}\nfaces {}\n",
            self.vertices.len(),
            self.triangles.len(),
            self.faces.len()
        ));
        for (i, v) in self.vertices.iter().enumerate() {
            s.push_str(&format!("v {} {:.17e} {:.17e}\n", i, v[0], v[1]));
        }
        for (i, t) in self.triangles.iter().enumerate() {
            s.push_str(&format!("t {} {} {} {}\n", i, t[0], t[1], t[2]));
        }
        for (i, f) in self.faces.iter().enumerate() {
            s.push_str(&format!(
                "f {} {} {} b={} n=({:.17e},{:.17e})\n",
                i, f.vertices[0], f.vertices[1], f.boundary as u8, f.normal[0], f.normal[1]
            ));
        }
        s
    }
}

/// Structured triangulation with `2^m` cells per side, every cell split along
/// the (lower-left -> upper-right) diagonal.
pub fn build_structured(m: u32, domain: Rectangle) -> Mesh {
    let n = 1usize << m;
    let mesh = build_grid(n, n, domain);
    Mesh {
        refinement_level: Some(m),
        ..mesh
    }
}

fn build_grid(nx: usize, ny: usize, domain: Rectangle) -> Mesh {
    let dx = (domain.x1 - domain.x0) / nx as f64;
    let dy = (domain.y1 - domain.y0) / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([domain.x0 + i as f64 * dx, domain.y0 + j as f64 * dy]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    finish_mesh(vertices, triangles, domain)
}

fn finish_mesh(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, domain: Rectangle) -> Mesh {
    // Collect unique edges with their adjacent triangles.
    let mut edge_map: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for e in 0..3 {
            let a = tri[e];
            let b = tri[(e + 1) % 3];
            let key = [a.min(b), a.max(b)];
            edge_map.entry(key).or_default().push(t);
        }
    }
    // Deterministic face order: by edge midpoint (y, x), then vertex indices.
    let mut keys: Vec<[usize; 2]> = edge_map.keys().copied().collect();
    let mid = |k: &[usize; 2]| {
        let a = vertices[k[0]];
        let b = vertices[k[1]];
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    };
    keys.sort_by(|p, q| {
        let mp = mid(p);
        let mq = mid(q);
        (mp[1], mp[0], p[0], p[1])
            .partial_cmp(&(mq[1], mq[0], q[0], q[1]))
            .unwrap()
    });

    let mut faces = Vec::with_capacity(keys.len());
    let mut face_of_edge: HashMap<[usize; 2], usize> = HashMap::new();
    let mut h_max: f64 = 0.0;
    for key in keys {
        let mut tris = edge_map.remove(&key).unwrap();
        tris.sort_unstable();
        let a = vertices[key[0]];
        let b = vertices[key[1]];
        let length = dist(a, b);
        // Normal oriented outward from the lower-indexed adjacent triangle.
        let t0 = triangles[tris[0]];
        let local = (0..3)
            .find(|&e| {
                let p = t0[e];
                let q = t0[(e + 1) % 3];
                (p.min(q), p.max(q)) == (key[0], key[1])
            })
            .expect("edge belongs to its triangle");
        let p = vertices[t0[local]];
        let q = vertices[t0[(local + 1) % 3]];
        let tvec = [q[0] - p[0], q[1] - p[1]];
        let normal = [tvec[1] / length, -tvec[0] / length];
        face_of_edge.insert(key, faces.len());
        faces.push(Face {
            vertices: key,
            normal,
            length,
            boundary: tris.len() == 1,
            tris: [Some(tris[0]), tris.get(1).copied()],
        });
    }
    let mut tri_faces = vec![[(0usize, 0.0f64); 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        let mut h_k: f64 = 0.0;
        for e in 0..3 {
            let a = tri[e];
            let b = tri[(e + 1) % 3];
            h_k = h_k.max(dist(vertices[a], vertices[b]));
            let f = face_of_edge[&[a.min(b), a.max(b)]];
            // Outward normal of edge (a->b) for a CCW triangle.
            let pa = vertices[a];
            let pb = vertices[b];
            let len = dist(pa, pb);
            let n_out = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
            let dot = n_out[0] * faces[f].normal[0] + n_out[1] * faces[f].normal[1];
            tri_faces[t][e] = (f, if dot > 0.0 { 1.0 } else { -1.0 });
        }
        h_max = h_max.max(h_k);
    }
    Mesh {
        vertices,
        triangles,
        faces,
        tri_faces,
        h_max,
        refinement_level: None,
        domain,
    }
}
