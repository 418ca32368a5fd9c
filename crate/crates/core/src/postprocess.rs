//! Element-local superconvergent reconstruction: u* in P_{k+1}(K) with
//! (grad u*, grad w)_K = (q_h, grad w)_K for all w in P_{k+1}(K) and the
//! element mean of u_h preserved. Gains one order over u_h for smooth
//! solutions.

use crate::basis::TriangleBasis;
use crate::hdg::{Discretization, HDGState};
use crate::par::{map_collect, ExecMode};
use crate::Result;
use nalgebra::{DMatrix, DVector};

pub struct Postprocessor {
    pub basis: TriangleBasis,
    pub dim: usize,
    /// reference gradients at the volume quadrature points of the parent
    /// discretization
    grad: [DMatrix<f64>; 2],
}

/// Coefficients of u* per element, in `Postprocessor::basis`.
pub type PostprocessedField = Vec<DVector<f64>>;

impl Postprocessor {
    pub fn new(disc: &Discretization) -> Result<Postprocessor> {
        let basis = TriangleBasis::new(disc.cfg.ku() + 1)?;
        let dim = basis.dim;
        let nvp = disc.vol_rule.points.len();
        let mut gx = DMatrix::zeros(dim, nvp);
        let mut gy = DMatrix::zeros(dim, nvp);
        for (p, &pt) in disc.vol_rule.points.iter().enumerate() {
            let (dx, dy) = basis.grad(pt);
            gx.set_column(p, &dx);
            gy.set_column(p, &dy);
        }
        Ok(Postprocessor {
            basis,
            dim,
            grad: [gx, gy],
        })
    }

    /// Reconstructs one element. The basis is degree-sorted and orthonormal,
    /// so index 0 is the constant: the Neumann-type stiffness solve runs on
    /// the complement of constants and the mean pins coefficient 0 directly
    /// (both spaces share the same normalized constant).
    pub fn element(&self, disc: &Discretization, t: usize, state: &HDGState) -> DVector<f64> {
        let g = &disc.geoms[t];
        let it = &g.inv_jac_t;
        let nvp = disc.vol_rule.points.len();
        let nq = disc.dofs.nq;
        let gx = &self.grad[0] * it[0][0] + &self.grad[1] * it[0][1];
        let gy = &self.grad[0] * it[1][0] + &self.grad[1] * it[1][1];
        // q_h at quadrature points
        let qx = disc.q_vals.tr_mul(&state.q[t].rows(0, nq).clone_owned());
        let qy = disc.q_vals.tr_mul(&state.q[t].rows(nq, nq).clone_owned());

        let n = self.dim - 1;
        let mut stiff = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for p in 0..nvp {
            let w = disc.vol_rule.weights[p] * g.det;
            for i in 0..n {
                let gi = [gx[(i + 1, p)], gy[(i + 1, p)]];
                rhs[i] += w * (qx[p] * gi[0] + qy[p] * gi[1]);
                for j in i..n {
                    let gj = [gx[(j + 1, p)], gy[(j + 1, p)]];
                    stiff[(i, j)] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
            }
        }
        stiff.fill_lower_triangle_with_upper_triangle();
        let sol = stiff
            .cholesky()
            .expect("restricted stiffness is positive definite")
            .solve(&rhs);
        let mut c = DVector::zeros(self.dim);
        c[0] = state.u[t][0];
        c.rows_mut(1, n).copy_from(&sol);
        c
    }

    pub fn all(
        &self,
        disc: &Discretization,
        state: &HDGState,
        mode: ExecMode,
    ) -> PostprocessedField {
        map_collect(mode, disc.dofs.n_elems, |t| self.element(disc, t, state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdg::{l2_project_element, solve_elliptic_init, SpaceConfig};
    use crate::mesh::{build_structured, Rectangle};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn disc(m: u32, k: usize) -> Discretization {
        Discretization::new(build_structured(m, Rectangle::UNIT), SpaceConfig::standard(k, 1.0))
            .unwrap()
    }

    #[test]
    fn reproduces_quadratic_from_exact_flux() {
        // q_h = grad p for p in P_{k+1} and matching mean force u* = p
        let p = |x: [f64; 2]| x[0] * x[0] + x[1] * x[1] - x[0] * x[1] + 0.3;
        let d = disc(1, 1);
        let pp = Postprocessor::new(&d).unwrap();
        let mut state = HDGState::zeros(&d);
        for t in 0..d.dofs.n_elems {
            state.u[t] = l2_project_element(&d, t, p);
            let qx = l2_project_element(&d, t, |x| 2.0 * x[0] - x[1]);
            let qy = l2_project_element(&d, t, |x| 2.0 * x[1] - x[0]);
            state.q[t].rows_mut(0, d.dofs.nq).copy_from(&qx);
            state.q[t].rows_mut(d.dofs.nq, d.dofs.nq).copy_from(&qy);
        }
        for t in [0, 3, 6] {
            let c = pp.element(&d, t, &state);
            for &xi in &[[0.2, 0.3], [0.6, 0.1]] {
                let val = pp.basis.eval(xi).dot(&c);
                let x = d.geoms[t].map(xi);
                assert!((val - p(x)).abs() < 1e-12, "{val} vs {}", p(x));
            }
        }
    }

    #[test]
    fn mean_preserved_and_gradient_orthogonality_on_random_states() {
        let d = disc(1, 2);
        let pp = Postprocessor::new(&d).unwrap();
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..20 {
            let mut state = HDGState::zeros(&d);
            for t in 0..d.dofs.n_elems {
                state.u[t] = DVector::from_fn(d.dofs.nu, |_, _| rng.random::<f64>() - 0.5);
                state.q[t] = DVector::from_fn(2 * d.dofs.nq, |_, _| rng.random::<f64>() - 0.5);
            }
            for t in 0..d.dofs.n_elems {
                let c = pp.element(&d, t, &state);
                // same normalized constant in both bases: equal coefficient 0
                // is equal element mean
                assert!((c[0] - state.u[t][0]).abs() < 1e-11);
                // weak gradient identity tested against every basis function
                let g = &d.geoms[t];
                let it = &g.inv_jac_t;
                let nq = d.dofs.nq;
                let qx = d.q_vals.tr_mul(&state.q[t].rows(0, nq).clone_owned());
                let qy = d.q_vals.tr_mul(&state.q[t].rows(nq, nq).clone_owned());
                for i in 0..pp.dim {
                    let mut resid = 0.0;
                    for (p, &pt) in d.vol_rule.points.iter().enumerate() {
                        let w = d.vol_rule.weights[p] * g.det;
                        let (dx, dy) = pp.basis.grad(pt);
                        let gi = [
                            it[0][0] * dx[i] + it[0][1] * dy[i],
                            it[1][0] * dx[i] + it[1][1] * dy[i],
                        ];
                        let mut ustar_g = [0.0, 0.0];
                        for j in 0..pp.dim {
                            let gj = [
                                it[0][0] * dx[j] + it[0][1] * dy[j],
                                it[1][0] * dx[j] + it[1][1] * dy[j],
                            ];
                            ustar_g[0] += c[j] * gj[0];
                            ustar_g[1] += c[j] * gj[1];
                        }
                        resid += w
                            * ((ustar_g[0] - qx[p]) * gi[0] + (ustar_g[1] - qy[p]) * gi[1]);
                    }
                    assert!(resid.abs() < 1e-11, "i={i}: {resid}");
                }
            }
        }
    }

    #[test]
    fn superconverges_on_elliptic_solution() {
        // stationary sin-mode: u* should gain roughly one order over u_h
        let u0 = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let mut errs_u = Vec::new();
        let mut errs_star = Vec::new();
        for m in [2u32, 3] {
            let d = disc(m, 1);
            let pp = Postprocessor::new(&d).unwrap();
            let state = solve_elliptic_init(
                &d,
                |x| -2.0 * PI * PI * u0(x),
                None,
                ExecMode::Sequential,
            )
            .unwrap();
            let stars = pp.all(&d, &state, ExecMode::Sequential);
            let mut eu = 0.0;
            let mut es = 0.0;
            for t in 0..d.dofs.n_elems {
                let g = &d.geoms[t];
                for (&pt, &w) in d.err_rule.points.iter().zip(&d.err_rule.weights) {
                    let x = g.map(pt);
                    let uh = d.basis_u.eval(pt).dot(&state.u[t]);
                    let us = pp.basis.eval(pt).dot(&stars[t]);
                    eu += w * g.det * (uh - u0(x)).powi(2);
                    es += w * g.det * (us - u0(x)).powi(2);
                }
            }
            errs_u.push(eu.sqrt());
            errs_star.push(es.sqrt());
        }
        let rate_u = (errs_u[0] / errs_u[1]).log2();
        let rate_s = (errs_star[0] / errs_star[1]).log2();
        assert!(rate_u > 1.6 && rate_u < 2.4, "u rate {rate_u}");
        assert!(rate_s > 2.5 && rate_s < 3.5, "u* rate {rate_s}");
        assert!(errs_star[1] < errs_u[1]);
    }
}
