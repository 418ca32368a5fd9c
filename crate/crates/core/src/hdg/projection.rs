//! L2 projections onto the element, face and mixed HDG spaces.

use super::Discretization;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Element L2 projection of a scalar field onto the u space. With the
/// orthonormal basis the coefficients are plain weighted moments.
pub fn l2_project_element(
    disc: &Discretization,
    t: usize,
    f: impl Fn([f64; 2]) -> f64,
) -> DVector<f64> {
    let g = &disc.geoms[t];
    let mut c = DVector::zeros(disc.dofs.nu);
    for (p, (&pt, &w)) in disc
        .vol_rule
        .points
        .iter()
        .zip(&disc.vol_rule.weights)
        .enumerate()
    {
        c.axpy(w * f(g.map(pt)), &disc.u_vals.column(p).clone_owned(), 1.0);
    }
    c
}

/// Face L2 projection onto the trace space; the face is parameterized from
/// its lower-indexed vertex to the higher one.
pub fn l2_project_face(
    disc: &Discretization,
    face: usize,
    f: impl Fn([f64; 2]) -> f64,
) -> DVector<f64> {
    let fc = &disc.mesh.faces[face];
    let a = disc.mesh.vertices[fc.vertices[0]];
    let b = disc.mesh.vertices[fc.vertices[1]];
    let mut c = DVector::zeros(disc.dofs.nf);
    for (g, (&s, &w)) in disc
        .edge_rule
        .points
        .iter()
        .zip(&disc.edge_rule.weights)
        .enumerate()
    {
        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        c.axpy(w * f(x), &disc.f_edge.column(g).clone_owned(), 1.0);
    }
    c
}

/// The mixed projection tailored to the HDG operator: on each element,
/// (Pq, v) + (Pu, div v) matches the data for v in [P_{k-1}]^2,
/// (Pu, w) matches for w in P_{k-1}, and on each edge
/// <Pq.n - tau Pu, mu> matches for mu in the trace space. Returns
/// ([qx, qy], u) coefficient blocks. Equal-degree spaces only.
pub fn hdg_project(
    disc: &Discretization,
    t: usize,
    u: impl Fn([f64; 2]) -> f64,
    q: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<(DVector<f64>, DVector<f64>)> {
    assert!(
        !disc.cfg.variant,
        "the mixed projection is defined for equal-degree spaces"
    );
    let d = &disc.dofs;
    let (nq, nu, nf) = (d.nq, d.nu, d.nf);
    let nlow = if disc.cfg.k == 0 {
        0
    } else {
        crate::basis::p_dim(disc.cfg.k - 1)
    };
    let n = 2 * nq + nu;
    debug_assert_eq!(2 * nlow + nlow + 3 * nf, n);
    let g = &disc.geoms[t];
    let em = &disc.elems[t];

    let mut mat = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);

    // volume rows: momenta against the low-degree test spaces
    for dc in 0..2 {
        for i in 0..nlow {
            let r = dc * nlow + i;
            mat[(r, dc * nq + i)] = g.det; // (Pq_d, psi_i)
            for j in 0..nu {
                // (Pu, d_d psi_i) = a_qu entry
                mat[(r, 2 * nq + j)] = em.a_qu[(dc * nq + i, j)];
            }
        }
    }
    for j in 0..nlow {
        mat[(2 * nlow + j, 2 * nq + j)] = g.det; // (Pu, phi_j)
    }
    // face rows: <Pq.n - tau Pu, mu>
    for e in 0..3 {
        for m in 0..nf {
            let r = 3 * nlow + e * nf + m;
            for c in 0..2 * nq {
                mat[(r, c)] = em.a_fq[(e * nf + m, c)];
            }
            for j in 0..nu {
                mat[(r, 2 * nq + j)] = em.a_fu[(e * nf + m, j)];
            }
        }
    }

    // right-hand sides by quadrature on the exact fields
    for (p, (&pt, &w)) in disc
        .vol_rule
        .points
        .iter()
        .zip(&disc.vol_rule.weights)
        .enumerate()
    {
        let x = g.map(pt);
        let qv = q(x);
        let uv = u(x);
        let s = w * g.det;
        for dc in 0..2 {
            for i in 0..nlow {
                let gref = [disc.q_grad[0][(i, p)], disc.q_grad[1][(i, p)]];
                let gphys = g.push_grad(gref);
                rhs[dc * nlow + i] += s * (qv[dc] * disc.q_vals[(i, p)] + uv * gphys[dc]);
            }
        }
        for j in 0..nlow {
            rhs[2 * nlow + j] += s * uv * disc.u_vals[(j, p)];
        }
    }
    for e in 0..3 {
        let (face_id, _) = disc.mesh.tri_faces[t][e];
        let len = disc.mesh.faces[face_id].length;
        let nrm = g.normals[e];
        let tau_e = em.tau[e];
        let fl = disc.edge_flip(t, e);
        for (gp, (&s, &w)) in disc
            .edge_rule
            .points
            .iter()
            .zip(&disc.edge_rule.weights)
            .enumerate()
        {
            let tref = if fl == 1 { 1.0 - s } else { s };
            let xi = match e {
                0 => [tref, 0.0],
                1 => [1.0 - tref, tref],
                _ => [0.0, 1.0 - tref],
            };
            let x = g.map(xi);
            let qv = q(x);
            let val = qv[0] * nrm[0] + qv[1] * nrm[1] - tau_e * u(x);
            for m in 0..nf {
                rhs[3 * nlow + e * nf + m] += len * w * val * disc.f_edge[(m, gp)];
            }
        }
    }

    let sol = mat.lu().solve(&rhs).ok_or(Error::SingularLocalBlock(t))?;
    Ok((sol.rows(0, 2 * nq).clone_owned(), sol.rows(2 * nq, nu).clone_owned()))
}
