//! HDG spatial discretization: element-local operators, static condensation
//! onto face traces, projections, and the elliptic initialization solve.

mod condense;
mod elliptic;
mod local;
mod projection;

pub use condense::{CondensedSystem, Solution};
pub use elliptic::solve_elliptic_init;
pub use local::ElementMatrices;
pub use projection::{hdg_project, l2_project_element, l2_project_face};

use crate::basis::{p_dim, EdgeBasis, TriangleBasis};
use crate::mesh::{ElementGeometry, Mesh};
use crate::quadrature::{edge_quadrature, triangle_quadrature, EdgeRule, TriangleRule};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Which flux/space pairing to use.
///
/// Standard: u, q and traces all of degree k, flux
/// `q^.n = q.n - tau (u - u^)`. Variant: u of degree k+1, q and traces of
/// degree k, flux `q^.n = q.n - (tau/h_K)(P u - u^)` with P the face L2
/// projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceConfig {
    pub k: usize,
    pub variant: bool,
    pub tau: f64,
}

impl SpaceConfig {
    pub fn standard(k: usize, tau: f64) -> SpaceConfig {
        SpaceConfig {
            k,
            variant: false,
            tau,
        }
    }

    pub fn variant(k: usize, tau: f64) -> SpaceConfig {
        SpaceConfig {
            k,
            variant: true,
            tau,
        }
    }

    /// degree of the displacement space
    pub fn ku(&self) -> usize {
        if self.variant {
            self.k + 1
        } else {
            self.k
        }
    }

    /// degree of each flux component
    pub fn kq(&self) -> usize {
        self.k
    }

    /// degree of the face trace space
    pub fn kf(&self) -> usize {
        self.k
    }

    pub fn validate(&self) -> Result<()> {
        let kmax = if self.variant { 3 } else { 4 };
        if self.k > kmax {
            return Err(Error::UnsupportedDegree(self.k, 0, kmax));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "stabilization tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Dof layout. Element dofs are blocked per element as [qx, qy, u]; trace
/// dofs are blocked per face, interior faces only in the condensed system.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub nu: usize,
    pub nq: usize,
    pub nf: usize,
    /// element block size, 2*nq + nu
    pub ne: usize,
    pub n_elems: usize,
    pub n_faces: usize,
    /// slot of each interior face among the condensed unknowns
    pub interior: Vec<Option<usize>>,
    pub n_interior: usize,
    /// scalar half-bandwidth of the condensed system
    pub bandwidth: usize,
}

impl DofMap {
    fn new(mesh: &Mesh, cfg: &SpaceConfig) -> DofMap {
        let nu = p_dim(cfg.ku());
        let nq = p_dim(cfg.kq());
        let nf = cfg.kf() + 1;
        let mut interior = vec![None; mesh.n_faces()];
        let mut n_interior = 0;
        for (f, face) in mesh.faces.iter().enumerate() {
            if !face.boundary {
                interior[f] = Some(n_interior);
                n_interior += 1;
            }
        }
        let mut max_diff = 0usize;
        for t in 0..mesh.n_triangles() {
            let slots: Vec<usize> = mesh.tri_faces[t]
                .iter()
                .filter_map(|&(f, _)| interior[f])
                .collect();
            for &a in &slots {
                for &b in &slots {
                    max_diff = max_diff.max(a.abs_diff(b));
                }
            }
        }
        let bandwidth = if n_interior == 0 {
            0
        } else {
            (max_diff + 1) * nf - 1
        };
        DofMap {
            nu,
            nq,
            nf,
            ne: 2 * nq + nu,
            n_elems: mesh.n_triangles(),
            n_faces: mesh.n_faces(),
            interior,
            n_interior,
            bandwidth,
        }
    }
}

/// Coefficient vectors of one discrete triple (u_h, q_h, u^_h).
#[derive(Debug, Clone)]
pub struct HDGState {
    pub t: f64,
    /// per element, length nu
    pub u: Vec<DVector<f64>>,
    /// per element, length 2*nq: x component then y component
    pub q: Vec<DVector<f64>>,
    /// per face, length nf
    pub trace: Vec<DVector<f64>>,
}

impl HDGState {
    pub fn zeros(disc: &Discretization) -> HDGState {
        HDGState {
            t: 0.0,
            u: vec![DVector::zeros(disc.dofs.nu); disc.dofs.n_elems],
            q: vec![DVector::zeros(2 * disc.dofs.nq); disc.dofs.n_elems],
            trace: vec![DVector::zeros(disc.dofs.nf); disc.dofs.n_faces],
        }
    }
}

/// Everything fixed once mesh and spaces are chosen: bases, quadrature
/// tables at reference points, element geometry, and the per-element
/// operator blocks. Immutable after construction and shared across
/// parallel workers.
pub struct Discretization {
    pub mesh: Mesh,
    pub cfg: SpaceConfig,
    pub dofs: DofMap,
    pub basis_u: TriangleBasis,
    pub basis_q: TriangleBasis,
    pub basis_f: EdgeBasis,
    pub vol_rule: TriangleRule,
    pub edge_rule: EdgeRule,
    /// raised rule for error norms
    pub err_rule: TriangleRule,
    pub geoms: Vec<ElementGeometry>,
    pub elems: Vec<ElementMatrices>,
    // reference-point tables
    /// nu x n_vol_pts values of the u basis at volume quadrature points
    pub u_vals: DMatrix<f64>,
    pub q_vals: DMatrix<f64>,
    /// reference gradients of u and q bases at volume points
    pub u_grad: [DMatrix<f64>; 2],
    pub q_grad: [DMatrix<f64>; 2],
    /// u/q basis values on local edge `e` at edge quadrature points, in face
    /// parameterization; `[e][flip]` where flip means the face's global
    /// vertex order runs against the element's local edge direction
    pub u_edge: [[DMatrix<f64>; 2]; 3],
    pub q_edge: [[DMatrix<f64>; 2]; 3],
    /// face basis values at edge quadrature points (nf x pts)
    pub f_edge: DMatrix<f64>,
}

impl Discretization {
    pub fn new(mesh: Mesh, cfg: SpaceConfig) -> Result<Discretization> {
        cfg.validate()?;
        let dofs = DofMap::new(&mesh, &cfg);
        let basis_u = TriangleBasis::new(cfg.ku())?;
        let basis_q = TriangleBasis::new(cfg.kq())?;
        let basis_f = EdgeBasis::new(cfg.kf())?;
        let ku = cfg.ku();
        // 4k exactness integrates the cubic term against a test function
        // exactly, which is what makes the discrete energy identity exact.
        let d_vol = (2 * ku + 2).max(4 * ku);
        let d_edge = 2 * ku + 2;
        let vol_rule = triangle_quadrature(d_vol)?;
        let edge_rule = edge_quadrature(d_edge)?;
        let err_rule = triangle_quadrature(2 * ku + 8)?;

        let nvp = vol_rule.points.len();
        let mut u_vals = DMatrix::zeros(dofs.nu, nvp);
        let mut q_vals = DMatrix::zeros(dofs.nq, nvp);
        let mut u_gx = DMatrix::zeros(dofs.nu, nvp);
        let mut u_gy = DMatrix::zeros(dofs.nu, nvp);
        let mut q_gx = DMatrix::zeros(dofs.nq, nvp);
        let mut q_gy = DMatrix::zeros(dofs.nq, nvp);
        for (p, &pt) in vol_rule.points.iter().enumerate() {
            u_vals.set_column(p, &basis_u.eval(pt));
            q_vals.set_column(p, &basis_q.eval(pt));
            let (gx, gy) = basis_u.grad(pt);
            u_gx.set_column(p, &gx);
            u_gy.set_column(p, &gy);
            let (gx, gy) = basis_q.grad(pt);
            q_gx.set_column(p, &gx);
            q_gy.set_column(p, &gy);
        }

        let nep = edge_rule.points.len();
        let edge_ref = |e: usize, t: f64| -> [f64; 2] {
            match e {
                0 => [t, 0.0],
                1 => [1.0 - t, t],
                _ => [0.0, 1.0 - t],
            }
        };
        let mut u_edge: [[DMatrix<f64>; 2]; 3] = Default::default();
        let mut q_edge: [[DMatrix<f64>; 2]; 3] = Default::default();
        for e in 0..3 {
            for flip in 0..2 {
                let mut ue = DMatrix::zeros(dofs.nu, nep);
                let mut qe = DMatrix::zeros(dofs.nq, nep);
                for (g, &s) in edge_rule.points.iter().enumerate() {
                    let t = if flip == 1 { 1.0 - s } else { s };
                    let xi = edge_ref(e, t);
                    ue.set_column(g, &basis_u.eval(xi));
                    qe.set_column(g, &basis_q.eval(xi));
                }
                u_edge[e][flip] = ue;
                q_edge[e][flip] = qe;
            }
        }
        let mut f_edge = DMatrix::zeros(dofs.nf, nep);
        for (g, &s) in edge_rule.points.iter().enumerate() {
            f_edge.set_column(g, &basis_f.eval(s));
        }

        let geoms = (0..mesh.n_triangles())
            .map(|t| mesh.element_geometry(t))
            .collect::<Result<Vec<_>>>()?;

        let mut disc = Discretization {
            mesh,
            cfg,
            dofs,
            basis_u,
            basis_q,
            basis_f,
            vol_rule,
            edge_rule,
            err_rule,
            geoms,
            elems: Vec::new(),
            u_vals,
            q_vals,
            u_grad: [u_gx, u_gy],
            q_grad: [q_gx, q_gy],
            u_edge,
            q_edge,
            f_edge,
        };
        disc.elems = local::assemble_all(&disc, crate::par::ExecMode::Parallel);
        Ok(disc)
    }

    /// True if the face vertex order (low global index first) runs against
    /// the local direction of edge `e` of triangle `t`.
    pub fn edge_flip(&self, t: usize, e: usize) -> usize {
        let tri = self.mesh.triangles[t];
        let a = tri[e];
        let b = tri[(e + 1) % 3];
        if a < b {
            0
        } else {
            1
        }
    }

    /// Stabilization weight on edge `e` of element `t`.
    pub fn tau_edge(&self, t: usize, _e: usize) -> f64 {
        if self.cfg.variant {
            self.cfg.tau / self.geoms[t].h_k
        } else {
            self.cfg.tau
        }
    }

    /// u values at the volume quadrature points of element `t`.
    pub fn u_at_vol(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        self.u_vals.tr_mul(coeffs)
    }

    /// Moments (f, phi_i)_K of a scalar field against the u basis.
    pub fn u_moments(&self, t: usize, f: impl Fn([f64; 2]) -> f64) -> DVector<f64> {
        let g = &self.geoms[t];
        let mut out = DVector::zeros(self.dofs.nu);
        for (p, (&pt, &w)) in self.vol_rule.points.iter().zip(&self.vol_rule.weights).enumerate() {
            let x = g.map(pt);
            let fv = f(x) * w * g.det;
            out.axpy(fv, &self.u_vals.column(p).clone_owned(), 1.0);
        }
        out
    }

    /// Evaluates (u_h, qx_h, qy_h) of a state at a physical point inside
    /// element `t`.
    pub fn eval_state(&self, state: &HDGState, t: usize, x: [f64; 2]) -> (f64, f64, f64) {
        let xi = self.geoms[t].unmap(x);
        let pu = self.basis_u.eval(xi);
        let pq = self.basis_q.eval(xi);
        let nq = self.dofs.nq;
        let u = pu.dot(&state.u[t]);
        let qx = pq.dot(&state.q[t].rows(0, nq).clone_owned());
        let qy = pq.dot(&state.q[t].rows(nq, nq).clone_owned());
        (u, qx, qy)
    }
}
