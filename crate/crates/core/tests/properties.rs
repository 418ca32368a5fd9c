//! Property tests for the building blocks: quadrature exactness, basis
//! orthonormality, mesh invariants, the discrete gradient identity, and the
//! table bookkeeping.

use kg_hdg::basis::{p_dim, TriangleBasis};
use kg_hdg::harness::{eoc, snapped_dt};
use kg_hdg::mesh::{build_structured, Rectangle};
use kg_hdg::nonlinear::{discrete_gradient, f, potential};
use kg_hdg::quadrature::{edge_quadrature, monomial_integral_tri, triangle_quadrature};
use proptest::prelude::*;

proptest! {
    #[test]
    fn triangle_quadrature_is_exact_for_its_degree(
        d in 1usize..=12,
        a in 0u32..=6,
        b in 0u32..=6,
    ) {
        prop_assume!((a + b) as usize <= d);
        let rule = triangle_quadrature(d).unwrap();
        let approx: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&p, &w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
            .sum();
        let exact = monomial_integral_tri(a, b);
        prop_assert!((approx - exact).abs() < 1e-13, "{approx} vs {exact}");
    }

    #[test]
    fn edge_quadrature_is_exact_for_its_degree(d in 1usize..=12, p in 0u32..=12) {
        prop_assume!(p as usize <= d);
        let rule = edge_quadrature(d).unwrap();
        let approx: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&s, &w)| w * s.powi(p as i32))
            .sum();
        let exact = 1.0 / (p as f64 + 1.0);
        prop_assert!((approx - exact).abs() < 1e-14);
    }

    #[test]
    fn triangle_basis_is_orthonormal(k in 0usize..=5) {
        let basis = TriangleBasis::new(k).unwrap();
        let rule = triangle_quadrature(2 * k + 2).unwrap();
        for i in 0..basis.dim {
            for j in 0..=i {
                let g: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&p, &w)| {
                        let v = basis.eval(p);
                        w * v[i] * v[j]
                    })
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - want).abs() < 1e-12, "({i},{j}): {g}");
            }
        }
        prop_assert_eq!(basis.dim, p_dim(k));
    }

    #[test]
    fn structured_mesh_invariants(
        m in 0u32..=3,
        x0 in -2.0f64..0.0,
        dx in 0.5f64..3.0,
        y0 in -2.0f64..0.0,
        dy in 0.5f64..3.0,
    ) {
        let rect = Rectangle { x0, x1: x0 + dx, y0, y1: y0 + dy };
        let mesh = build_structured(m, rect);
        let mut area = 0.0;
        for t in 0..mesh.n_triangles() {
            let g = mesh.element_geometry(t).unwrap();
            prop_assert!(g.det > 0.0);
            area += 0.5 * g.det;
        }
        prop_assert!((area - rect.area()).abs() < 1e-12 * rect.area());
        for face in &mesh.faces {
            let n = face.normal;
            prop_assert!((n[0] * n[0] + n[1] * n[1] - 1.0).abs() < 1e-12);
            prop_assert_eq!(face.boundary, face.tris[1].is_none());
            if face.boundary {
                for &v in &face.vertices {
                    let p = mesh.vertices[v];
                    let on_edge = (p[0] - rect.x0).abs() < 1e-12
                        || (p[0] - rect.x1).abs() < 1e-12
                        || (p[1] - rect.y0).abs() < 1e-12
                        || (p[1] - rect.y1).abs() < 1e-12;
                    prop_assert!(on_edge);
                }
            }
        }
        // every triangle's outward normals point away from its centroid
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangles[t];
            let c = [
                (mesh.vertices[tri[0]][0] + mesh.vertices[tri[1]][0] + mesh.vertices[tri[2]][0])
                    / 3.0,
                (mesh.vertices[tri[0]][1] + mesh.vertices[tri[1]][1] + mesh.vertices[tri[2]][1])
                    / 3.0,
            ];
            for &(fid, sign) in &mesh.tri_faces[t] {
                let face = &mesh.faces[fid];
                let a = mesh.vertices[face.vertices[0]];
                let b = mesh.vertices[face.vertices[1]];
                let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                let outward = sign
                    * (face.normal[0] * (mid[0] - c[0]) + face.normal[1] * (mid[1] - c[1]));
                prop_assert!(outward > 0.0);
            }
        }
    }

    #[test]
    fn discrete_gradient_telescopes_the_potential(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let g = discrete_gradient(a, b);
        if (a - b).abs() > 1e-6 {
            prop_assert!((g * (a - b) - (potential(a) - potential(b))).abs() < 1e-12);
        }
        // symmetric, and consistent with f on the diagonal
        prop_assert!((g - discrete_gradient(b, a)).abs() < 1e-12);
        prop_assert!((discrete_gradient(a, a) - f(a)).abs() < 1e-12);
    }

    #[test]
    fn snapped_step_divides_the_final_time(
        rate in 1usize..=5,
        m in 1u32..=5,
        final_time in 0.1f64..4.0,
    ) {
        let (dt, n) = snapped_dt(rate, m, final_time, None);
        prop_assert!((n as f64 * dt - final_time).abs() < 1e-12);
        let h = 1.0 / (1u64 << m) as f64;
        prop_assert!(dt <= h.powf(rate as f64 / 2.0) + 1e-12);
    }

    #[test]
    fn eoc_of_a_geometric_sequence_is_its_rate(c in 0.1f64..10.0, p in 0.5f64..6.0) {
        let e1 = c * 2.0f64.powf(-p);
        let e2 = c * 2.0f64.powf(-2.0 * p);
        prop_assert!((eoc(e1, e2) - p).abs() < 1e-10);
    }
}
