//! Polynomial bases: an L2-orthonormal basis of P_k on the reference
//! triangle (built from the exact monomial Gram matrix) and normalized
//! shifted Legendre polynomials of P_k on the reference edge [0,1].
//!
//! Basis functions are ordered by total degree, so the first dim(P_{k-1})
//! triangle functions span P_{k-1}.

use crate::quadrature::monomial_integral_tri;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub const MAX_K: usize = 5;

pub fn p_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

#[derive(Debug, Clone)]
pub struct TriangleBasis {
    pub k: usize,
    pub dim: usize,
    /// exponent pairs (a, b) of the monomial x^a y^b, sorted by total degree
    monos: Vec<(u32, u32)>,
    /// rows: orthonormal basis functions as monomial coefficients
    coeff: DMatrix<f64>,
}

impl TriangleBasis {
    pub fn new(k: usize) -> Result<TriangleBasis> {
        if k > MAX_K {
            return Err(Error::UnsupportedDegree(k, 0, MAX_K));
        }
        let dim = p_dim(k);
        let mut monos = Vec::with_capacity(dim);
        for d in 0..=k as u32 {
            for b in 0..=d {
                monos.push((d - b, b));
            }
        }
        let gram = DMatrix::from_fn(dim, dim, |i, j| {
            monomial_integral_tri(monos[i].0 + monos[j].0, monos[i].1 + monos[j].1)
        });
        let mut b = TriangleBasis {
            k,
            dim,
            monos,
            coeff: DMatrix::identity(dim, dim),
        };
        // First pass against the exact monomial Gram, then refinement passes
        // with the Gram of the evaluated basis; forming the latter by
        // quadrature sidesteps the monomial Gram's conditioning.
        let rule = crate::quadrature::triangle_quadrature(2 * k)?;
        for pass in 0..3 {
            let g = if pass == 0 {
                &b.coeff * &gram * b.coeff.transpose()
            } else {
                let mut g = DMatrix::zeros(dim, dim);
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let v = b.eval(*p);
                    g.syger(*w, &v, &v, 1.0);
                }
                g
            };
            let chol = nalgebra::Cholesky::new(g)
                .ok_or_else(|| Error::InvalidConfig("monomial Gram not SPD".into()))?;
            let l = chol.l();
            b.coeff = l
                .solve_lower_triangular(&b.coeff)
                .ok_or_else(|| Error::InvalidConfig("singular Cholesky factor".into()))?;
        }
        Ok(b)
    }

    pub fn eval(&self, xi: [f64; 2]) -> DVector<f64> {
        let m = DVector::from_iterator(
            self.dim,
            self.monos
                .iter()
                .map(|&(a, b)| xi[0].powi(a as i32) * xi[1].powi(b as i32)),
        );
        &self.coeff * m
    }

    /// Reference gradients (d/dxi, d/deta) of every basis function.
    pub fn grad(&self, xi: [f64; 2]) -> (DVector<f64>, DVector<f64>) {
        let mx = DVector::from_iterator(
            self.dim,
            self.monos.iter().map(|&(a, b)| {
                if a == 0 {
                    0.0
                } else {
                    a as f64 * xi[0].powi(a as i32 - 1) * xi[1].powi(b as i32)
                }
            }),
        );
        let my = DVector::from_iterator(
            self.dim,
            self.monos.iter().map(|&(a, b)| {
                if b == 0 {
                    0.0
                } else {
                    b as f64 * xi[0].powi(a as i32) * xi[1].powi(b as i32 - 1)
                }
            }),
        );
        (&self.coeff * mx, &self.coeff * my)
    }
}

#[derive(Debug, Clone)]
pub struct EdgeBasis {
    pub k: usize,
    pub dim: usize,
}

impl EdgeBasis {
    pub fn new(k: usize) -> Result<EdgeBasis> {
        if k > MAX_K {
            return Err(Error::UnsupportedDegree(k, 0, MAX_K));
        }
        Ok(EdgeBasis { k, dim: k + 1 })
    }

    /// Values at s in [0,1]; orthonormal in L2(0,1).
    pub fn eval(&self, s: f64) -> DVector<f64> {
        let x = 2.0 * s - 1.0;
        let mut out = DVector::zeros(self.dim);
        let mut p0 = 1.0;
        let mut p1 = x;
        for n in 0..self.dim {
            let p = match n {
                0 => 1.0,
                1 => x,
                _ => {
                    let nf = n as f64;
                    let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            out[n] = (2.0 * n as f64 + 1.0).sqrt() * p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{edge_quadrature, triangle_quadrature};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn dims() {
        assert_eq!(TriangleBasis::new(1).unwrap().dim, 3);
        assert_eq!(TriangleBasis::new(2).unwrap().dim, 6);
        assert_eq!(TriangleBasis::new(3).unwrap().dim, 10);
        assert!(TriangleBasis::new(6).is_err());
    }

    #[test]
    fn orthonormality() {
        for k in 0..=4 {
            let b = TriangleBasis::new(k).unwrap();
            let q = triangle_quadrature(2 * k).unwrap();
            let mut g = DMatrix::zeros(b.dim, b.dim);
            for (p, w) in q.points.iter().zip(&q.weights) {
                let v = b.eval(*p);
                g += *w * &v * v.transpose();
            }
            for i in 0..b.dim {
                for j in 0..b.dim {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - want).abs() < 1e-12, "k={k} ({i},{j}) {}", g[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn constant_in_span() {
        // least-squares fit of the constant 1 has zero residual
        let b = TriangleBasis::new(2).unwrap();
        // with an orthonormal basis, coefficients are just moments
        let q = triangle_quadrature(4).unwrap();
        let mut c = DVector::zeros(b.dim);
        for (p, w) in q.points.iter().zip(&q.weights) {
            c += *w * b.eval(*p);
        }
        for (p, _) in q.points.iter().zip(&q.weights) {
            let v = b.eval(*p).dot(&c);
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vandermonde_fit_reproduces_x2y() {
        // fit x^2*y with the k=3 basis via a Vandermonde solve at dim generic
        // points, then check at 20 random points
        let b = TriangleBasis::new(3).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let mut pts = Vec::new();
        while pts.len() < b.dim {
            let x: f64 = rng.random::<f64>();
            let y: f64 = rng.random::<f64>() * (1.0 - x);
            pts.push([x, y]);
        }
        let v = DMatrix::from_fn(b.dim, b.dim, |i, j| b.eval(pts[i])[j]);
        let rhs = DVector::from_iterator(b.dim, pts.iter().map(|p| p[0] * p[0] * p[1]));
        let c = v.lu().solve(&rhs).expect("Vandermonde nonsingular");
        for _ in 0..20 {
            let x: f64 = rng.random::<f64>();
            let y: f64 = rng.random::<f64>() * (1.0 - x);
            let val = b.eval([x, y]).dot(&c);
            assert!((val - x * x * y).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = TriangleBasis::new(4).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..10 {
            let x: f64 = 0.1 + 0.5 * rng.random::<f64>();
            let y: f64 = 0.1 + rng.random::<f64>() * (0.8 - x).max(0.05);
            let (gx, gy) = b.grad([x, y]);
            let fx = (b.eval([x + h, y]) - b.eval([x - h, y])) / (2.0 * h);
            let fy = (b.eval([x, y + h]) - b.eval([x, y - h])) / (2.0 * h);
            for i in 0..b.dim {
                assert!((gx[i] - fx[i]).abs() < 1e-6);
                assert!((gy[i] - fy[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn edge_basis_orthonormal_and_spans() {
        for k in 0..=4 {
            let b = EdgeBasis::new(k).unwrap();
            let q = edge_quadrature(2 * k).unwrap();
            let mut g = DMatrix::zeros(b.dim, b.dim);
            for (&s, &w) in q.points.iter().zip(&q.weights) {
                let v = b.eval(s);
                g += w * &v * v.transpose();
            }
            for i in 0..b.dim {
                for j in 0..b.dim {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - want).abs() < 1e-13);
                }
            }
        }
    }
}
