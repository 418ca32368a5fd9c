//! Elliptic solve that initializes the discrete triple (u_h, q_h, u^_h)
//! from the initial displacement: the stationary HDG system with right-hand
//! side -(lap u0, w) and the boundary trace taken from u0.

use super::{
    l2_project_face, CondensedSystem, Discretization, HDGState, Solution,
};
use crate::par::ExecMode;
use crate::Result;
use nalgebra::DVector;

/// Solves the stationary system for the initial data. `lap_u0` is the
/// Laplacian of the initial displacement, `boundary` its boundary values
/// (None for a homogeneous Dirichlet trace).
pub fn solve_elliptic_init(
    disc: &Discretization,
    lap_u0: impl Fn([f64; 2]) -> f64 + Sync,
    boundary: Option<&(dyn Fn([f64; 2]) -> f64 + Sync)>,
    mode: ExecMode,
) -> Result<HDGState> {
    let d = &disc.dofs;
    let sys = CondensedSystem::build(disc, 0.0, 1.0, None, mode)?;
    let r_e: Vec<DVector<f64>> = crate::par::map_collect(mode, d.n_elems, |t| {
        let mut r = DVector::zeros(d.ne);
        let m = disc.u_moments(t, |x| -lap_u0(x));
        r.rows_mut(2 * d.nq, d.nu).copy_from(&m);
        r
    });
    let r_f = vec![DVector::zeros(d.nf); d.n_faces];
    let mut bc: Vec<Option<DVector<f64>>> = vec![None; d.n_faces];
    if let Some(g) = boundary {
        for (f, face) in disc.mesh.faces.iter().enumerate() {
            if face.boundary {
                bc[f] = Some(l2_project_face(disc, f, g));
            }
        }
    }
    let Solution { elems, trace } = sys.solve(disc, &r_e, &r_f, &bc, mode);
    let mut state = HDGState::zeros(disc);
    for (t, e) in elems.into_iter().enumerate() {
        state.q[t].copy_from(&e.rows(0, 2 * d.nq));
        state.u[t].copy_from(&e.rows(2 * d.nq, d.nu));
    }
    state.trace = trace;
    Ok(state)
}
