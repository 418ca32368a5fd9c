//! Per-element operator blocks of the HDG system. Element unknowns are
//! blocked as [qx, qy, u]; local trace unknowns as [face0, face1, face2]
//! in local edge order. With the orthonormal bases the element mass matrix
//! is det * I and each face mass matrix is L * I.
//!
//! Row conventions (rhs on the right):
//!   q-row:  det*Q + a_qu*U + a_qf*T = r_q
//!   u-row:  alpha*det*U + beta*(a_uq*Q + a_uu*U + a_uf*T) + N(U) = r_u
//!   trace:  a_fq*Q + a_fu*U + a_ff*T = r_f   (summed over both sides)

use super::Discretization;
use crate::par::{map_collect, ExecMode};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub det: f64,
    pub h_k: f64,
    /// (u, div v): 2nq x nu
    pub a_qu: DMatrix<f64>,
    /// -<t, v.n>: 2nq x 3nf
    pub a_qf: DMatrix<f64>,
    /// (q, grad w) - <q.n, w>: nu x 2nq
    pub a_uq: DMatrix<f64>,
    /// <tau P u, w> on each edge: nu x nu
    pub a_uu: DMatrix<f64>,
    /// -<tau t, w>: nu x 3nf
    pub a_uf: DMatrix<f64>,
    /// <q.n, mu>: 3nf x 2nq
    pub a_fq: DMatrix<f64>,
    /// -<tau P u, mu>: 3nf x nu
    pub a_fu: DMatrix<f64>,
    /// <tau t, mu> is block diagonal: tau_e * L_e times identity
    pub a_ff_diag: [f64; 3],
    /// face moment matrices (u basis against face basis), used for the
    /// face L2 projection of u and the face seminorm
    pub e_uf: [DMatrix<f64>; 3],
    pub face_len: [f64; 3],
    pub tau: [f64; 3],
}

impl ElementMatrices {
    /// Coefficients of the face L2 projection of u|_e in the face basis.
    pub fn proj_u_on_face(&self, e: usize, u: &DVector<f64>) -> DVector<f64> {
        self.e_uf[e].tr_mul(u) / self.face_len[e]
    }
}

pub(super) fn assemble_all(disc: &Discretization, mode: ExecMode) -> Vec<ElementMatrices> {
    map_collect(mode, disc.dofs.n_elems, |t| assemble_one(disc, t))
}

fn assemble_one(disc: &Discretization, t: usize) -> ElementMatrices {
    let d = &disc.dofs;
    let g = &disc.geoms[t];
    let (nu, nq, nf) = (d.nu, d.nq, d.nf);
    let nvp = disc.vol_rule.points.len();

    // physical gradients at volume points, columns scaled by det * w
    let it = &g.inv_jac_t;
    let mut q_gx = &disc.q_grad[0] * it[0][0] + &disc.q_grad[1] * it[0][1];
    let mut q_gy = &disc.q_grad[0] * it[1][0] + &disc.q_grad[1] * it[1][1];
    let mut u_gx = &disc.u_grad[0] * it[0][0] + &disc.u_grad[1] * it[0][1];
    let mut u_gy = &disc.u_grad[0] * it[1][0] + &disc.u_grad[1] * it[1][1];
    for p in 0..nvp {
        let s = g.det * disc.vol_rule.weights[p];
        q_gx.column_mut(p).scale_mut(s);
        q_gy.column_mut(p).scale_mut(s);
        u_gx.column_mut(p).scale_mut(s);
        u_gy.column_mut(p).scale_mut(s);
    }
    // G_d[i][j] = (phi_j, d_d psi_i), S_d[i][j] = (psi_j, d_d phi_i)
    let gx = &q_gx * disc.u_vals.transpose();
    let gy = &q_gy * disc.u_vals.transpose();
    let sx = &u_gx * disc.q_vals.transpose();
    let sy = &u_gy * disc.q_vals.transpose();

    let mut a_qu = DMatrix::zeros(2 * nq, nu);
    a_qu.view_mut((0, 0), (nq, nu)).copy_from(&gx);
    a_qu.view_mut((nq, 0), (nq, nu)).copy_from(&gy);

    let mut a_uq = DMatrix::zeros(nu, 2 * nq);
    a_uq.view_mut((0, 0), (nu, nq)).copy_from(&sx);
    a_uq.view_mut((0, nq), (nu, nq)).copy_from(&sy);

    let mut a_qf = DMatrix::zeros(2 * nq, 3 * nf);
    let mut a_uu = DMatrix::zeros(nu, nu);
    let mut a_uf = DMatrix::zeros(nu, 3 * nf);
    let mut a_fq = DMatrix::zeros(3 * nf, 2 * nq);
    let mut a_fu = DMatrix::zeros(3 * nf, nu);
    let mut a_ff_diag = [0.0; 3];
    let mut e_uf_store: [DMatrix<f64>; 3] = Default::default();
    let mut face_len = [0.0; 3];
    let mut tau_store = [0.0; 3];

    let nep = disc.edge_rule.points.len();
    for e in 0..3 {
        let (face_id, _) = disc.mesh.tri_faces[t][e];
        let len = disc.mesh.faces[face_id].length;
        let n = g.normals[e];
        let tau_e = disc.tau_edge(t, e);
        let fl = disc.edge_flip(t, e);
        let uv = &disc.u_edge[e][fl];
        let qv = &disc.q_edge[e][fl];

        // weighted face basis values: L * diag(w) applied on the right
        let mut fw = disc.f_edge.clone();
        let mut uw = uv.clone();
        for gpt in 0..nep {
            let s = len * disc.edge_rule.weights[gpt];
            fw.column_mut(gpt).scale_mut(s);
            uw.column_mut(gpt).scale_mut(s);
        }
        let e_qf = qv * fw.transpose(); // nq x nf
        let e_uf = uv * fw.transpose(); // nu x nf
        let e_uq = &uw * qv.transpose(); // nu x nq

        for dcomp in 0..2 {
            let nd = n[dcomp];
            let mut v = a_qf.view_mut((dcomp * nq, e * nf), (nq, nf));
            v -= nd * &e_qf;
            let mut v = a_fq.view_mut((e * nf, dcomp * nq), (nf, nq));
            v += nd * e_qf.transpose();
            let mut v = a_uq.view_mut((0, dcomp * nq), (nu, nq));
            v -= nd * &e_uq;
        }
        // stabilization through the face projection P; for equal-degree
        // spaces the trace of P_k(K) already lies in the face space, so
        // this reduces to the plain <tau u, .> coupling
        a_uu += (tau_e / len) * &e_uf * e_uf.transpose();
        let mut v = a_uf.view_mut((0, e * nf), (nu, nf));
        v -= tau_e * &e_uf;
        let mut v = a_fu.view_mut((e * nf, 0), (nf, nu));
        v -= tau_e * e_uf.transpose();
        a_ff_diag[e] = tau_e * len;
        e_uf_store[e] = e_uf;
        face_len[e] = len;
        tau_store[e] = tau_e;
    }

    ElementMatrices {
        det: g.det,
        h_k: g.h_k,
        a_qu,
        a_qf,
        a_uq,
        a_uu,
        a_uf,
        a_fq,
        a_fu,
        a_ff_diag,
        e_uf: e_uf_store,
        face_len,
        tau: tau_store,
    }
}

impl Discretization {
    /// Moments (F(u_a, u_c), phi_i)_K of the discrete-gradient nonlinearity,
    /// from the coefficient vectors of the two time levels.
    pub fn nonlin_moments(
        &self,
        t: usize,
        ua: &DVector<f64>,
        uc: &DVector<f64>,
    ) -> DVector<f64> {
        let det = self.geoms[t].det;
        let va = self.u_at_vol(ua);
        let vc = self.u_at_vol(uc);
        let mut out = DVector::zeros(self.dofs.nu);
        for (p, &w) in self.vol_rule.weights.iter().enumerate() {
            let fv = crate::nonlinear::discrete_gradient(va[p], vc[p]) * w * det;
            out.axpy(fv, &self.u_vals.column(p).clone_owned(), 1.0);
        }
        out
    }

    /// Jacobian of `nonlin_moments` with respect to the first-slot
    /// coefficients: det * Phi diag(w F_a) Phi^T.
    pub fn nonlin_jacobian(
        &self,
        t: usize,
        ua: &DVector<f64>,
        uc: &DVector<f64>,
    ) -> DMatrix<f64> {
        let det = self.geoms[t].det;
        let va = self.u_at_vol(ua);
        let vc = self.u_at_vol(uc);
        let nvp = self.vol_rule.weights.len();
        let mut scaled = self.u_vals.clone();
        for p in 0..nvp {
            let s = det
                * self.vol_rule.weights[p]
                * crate::nonlinear::discrete_gradient_da(va[p], vc[p]);
            scaled.column_mut(p).scale_mut(s);
        }
        &scaled * self.u_vals.transpose()
    }

    /// Moments (f(u), phi_i)_K of the plain nonlinearity.
    pub fn f_moments(&self, t: usize, u: &DVector<f64>) -> DVector<f64> {
        let det = self.geoms[t].det;
        let v = self.u_at_vol(u);
        let mut out = DVector::zeros(self.dofs.nu);
        for (p, &w) in self.vol_rule.weights.iter().enumerate() {
            out.axpy(crate::nonlinear::f(v[p]) * w * det, &self.u_vals.column(p).clone_owned(), 1.0);
        }
        out
    }

    /// Jacobian of `f_moments`: det * Phi diag(w f'(u)) Phi^T.
    pub fn f_jacobian(&self, t: usize, u: &DVector<f64>) -> DMatrix<f64> {
        let det = self.geoms[t].det;
        let v = self.u_at_vol(u);
        let mut scaled = self.u_vals.clone();
        for (p, &w) in self.vol_rule.weights.iter().enumerate() {
            scaled.column_mut(p).scale_mut(det * w * crate::nonlinear::f_prime(v[p]));
        }
        &scaled * self.u_vals.transpose()
    }

    /// Integral of F(u) over element `t`.
    pub fn potential_integral(&self, t: usize, u: &DVector<f64>) -> f64 {
        let det = self.geoms[t].det;
        let v = self.u_at_vol(u);
        self.vol_rule
            .weights
            .iter()
            .enumerate()
            .map(|(p, &w)| w * crate::nonlinear::potential(v[p]))
            .sum::<f64>()
            * det
    }
}
