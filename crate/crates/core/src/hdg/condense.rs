//! Static condensation of the element unknowns onto the interior face
//! traces. Every linear(ized) solve in the code goes through here: the
//! elliptic initialization, each Newton iteration of the conservative
//! scheme, and the constant-matrix steps of the non-conservative scheme.
//!
//! The condensed operator is
//!   S = J_FF - J_FE J_EE^{-1} J_EF
//! assembled element by element into a band matrix over the interior face
//! dofs (boundary traces are known and folded into the right-hand side).

use super::{Discretization, ElementMatrices};
use crate::band::{BandLu, BandMatrix};
use crate::par::{map_collect, ExecMode};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Dyn, LU};

struct ElemFactor {
    lu: LU<f64, Dyn, Dyn>,
    /// J_EE^{-1} J_EF, element block by local trace block
    x: DMatrix<f64>,
    j_fe: DMatrix<f64>,
    /// local Schur block J_FF - J_FE X, 3nf x 3nf
    s_loc: DMatrix<f64>,
}

pub struct CondensedSystem {
    elems: Vec<ElemFactor>,
    band: Option<BandLu>,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// per-element [qx, qy, u] coefficient blocks
    pub elems: Vec<DVector<f64>>,
    /// per-face trace coefficients, boundary faces included
    pub trace: Vec<DVector<f64>>,
}

/// Builds the element J_EE block for the scaled operator
/// `alpha (u, w) + beta (spatial)` plus an optional nonlinear u-u block.
fn elem_jacobian(
    em: &ElementMatrices,
    nq: usize,
    nu: usize,
    alpha: f64,
    beta: f64,
    nonlin: Option<&DMatrix<f64>>,
) -> DMatrix<f64> {
    let ne = 2 * nq + nu;
    let mut j = DMatrix::zeros(ne, ne);
    for i in 0..2 * nq {
        j[(i, i)] = em.det;
    }
    j.view_mut((0, 2 * nq), (2 * nq, nu)).copy_from(&em.a_qu);
    let mut v = j.view_mut((2 * nq, 0), (nu, 2 * nq));
    v += beta * &em.a_uq;
    let mut uu = j.view_mut((2 * nq, 2 * nq), (nu, nu));
    uu += beta * &em.a_uu;
    for i in 0..nu {
        uu[(i, i)] += alpha * em.det;
    }
    if let Some(n) = nonlin {
        uu += n;
    }
    j
}

impl CondensedSystem {
    pub fn build(
        disc: &Discretization,
        alpha: f64,
        beta: f64,
        nonlin: Option<&[DMatrix<f64>]>,
        mode: ExecMode,
    ) -> Result<CondensedSystem> {
        let d = &disc.dofs;
        let (nq, nu, nf) = (d.nq, d.nu, d.nf);
        let factors: Vec<Result<ElemFactor>> = map_collect(mode, d.n_elems, |t| {
            let em = &disc.elems[t];
            let j_ee = elem_jacobian(em, nq, nu, alpha, beta, nonlin.map(|n| &n[t]));
            let mut j_ef = DMatrix::zeros(2 * nq + nu, 3 * nf);
            j_ef.view_mut((0, 0), (2 * nq, 3 * nf)).copy_from(&em.a_qf);
            let mut v = j_ef.view_mut((2 * nq, 0), (nu, 3 * nf));
            v += beta * &em.a_uf;
            let mut j_fe = DMatrix::zeros(3 * nf, 2 * nq + nu);
            j_fe.view_mut((0, 0), (3 * nf, 2 * nq)).copy_from(&em.a_fq);
            j_fe.view_mut((0, 2 * nq), (3 * nf, nu)).copy_from(&em.a_fu);
            let lu = j_ee.lu();
            let x = lu.solve(&j_ef).ok_or(Error::SingularLocalBlock(t))?;
            let mut s_loc = -(&j_fe * &x);
            for e in 0..3 {
                for i in 0..nf {
                    s_loc[(e * nf + i, e * nf + i)] += em.a_ff_diag[e];
                }
            }
            Ok(ElemFactor { lu, x, j_fe, s_loc })
        });
        let elems = factors.into_iter().collect::<Result<Vec<_>>>()?;

        let band = if d.n_interior > 0 {
            let mut band = BandMatrix::new(d.n_interior * nf, d.bandwidth, d.bandwidth);
            for t in 0..d.n_elems {
                let s_loc = &elems[t].s_loc;
                let slots: [Option<usize>; 3] = std::array::from_fn(|e| {
                    let (f, _) = disc.mesh.tri_faces[t][e];
                    d.interior[f]
                });
                for (ea, sa) in slots.iter().enumerate() {
                    let Some(sa) = sa else { continue };
                    for (eb, sb) in slots.iter().enumerate() {
                        let Some(sb) = sb else { continue };
                        for i in 0..nf {
                            for j in 0..nf {
                                let v = s_loc[(ea * nf + i, eb * nf + j)];
                                if v != 0.0 {
                                    band.add(sa * nf + i, sb * nf + j, v);
                                }
                            }
                        }
                    }
                }
            }
            Some(band.factor()?)
        } else {
            None
        };
        Ok(CondensedSystem {
            elems,
            band,
            alpha,
            beta,
        })
    }

    /// Solves for element fields and traces. `r_e` are per-element residual
    /// right-hand sides ([q, u] blocks), `r_f` per-face trace right-hand
    /// sides (ignored on the boundary), `bc` the known boundary traces
    /// (None means homogeneous).
    pub fn solve(
        &self,
        disc: &Discretization,
        r_e: &[DVector<f64>],
        r_f: &[DVector<f64>],
        bc: &[Option<DVector<f64>>],
        mode: ExecMode,
    ) -> Solution {
        let d = &disc.dofs;
        let nf = d.nf;
        let z: Vec<DVector<f64>> = map_collect(mode, d.n_elems, |t| {
            self.elems[t]
                .lu
                .solve(&r_e[t])
                .expect("factorized block stays nonsingular")
        });

        // local trace vector with only the known boundary blocks filled
        let bc_local = |t: usize| -> DVector<f64> {
            let mut tb = DVector::zeros(3 * nf);
            for e in 0..3 {
                let (f, _) = disc.mesh.tri_faces[t][e];
                if disc.mesh.faces[f].boundary {
                    if let Some(v) = &bc[f] {
                        tb.rows_mut(e * nf, nf).copy_from(v);
                    }
                }
            }
            tb
        };

        let trace_all = if let Some(band) = &self.band {
            let contribs: Vec<DVector<f64>> = map_collect(mode, d.n_elems, |t| {
                let ef = &self.elems[t];
                &ef.j_fe * &z[t] + &ef.s_loc * bc_local(t)
            });
            let mut g = DVector::zeros(d.n_interior * nf);
            for (f, slot) in d.interior.iter().enumerate() {
                if let Some(s) = slot {
                    g.rows_mut(s * nf, nf).copy_from(&r_f[f]);
                }
            }
            for t in 0..d.n_elems {
                for e in 0..3 {
                    let (f, _) = disc.mesh.tri_faces[t][e];
                    if let Some(s) = d.interior[f] {
                        let mut rows = g.rows_mut(s * nf, nf);
                        rows -= contribs[t].rows(e * nf, nf);
                    }
                }
            }
            let sol = band.solve(&g);
            let mut trace = vec![DVector::zeros(nf); d.n_faces];
            for (f, slot) in d.interior.iter().enumerate() {
                match slot {
                    Some(s) => trace[f].copy_from(&sol.rows(s * nf, nf)),
                    None => {
                        if let Some(v) = &bc[f] {
                            trace[f].copy_from(v);
                        }
                    }
                }
            }
            trace
        } else {
            let mut trace = vec![DVector::zeros(nf); d.n_faces];
            for (f, v) in bc.iter().enumerate() {
                if let Some(v) = v {
                    trace[f].copy_from(v);
                }
            }
            trace
        };

        let elems = map_collect(mode, d.n_elems, |t| {
            let mut t_loc = DVector::zeros(3 * nf);
            for e in 0..3 {
                let (f, _) = disc.mesh.tri_faces[t][e];
                t_loc.rows_mut(e * nf, nf).copy_from(&trace_all[f]);
            }
            &z[t] - &self.elems[t].x * t_loc
        });
        Solution {
            elems,
            trace: trace_all,
        }
    }
}
