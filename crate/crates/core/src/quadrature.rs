//! Quadrature rules: Gauss-Legendre on the reference edge [0,1] and
//! Duffy-collapsed tensor rules on the reference triangle (0,0),(1,0),(0,1).

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

const MAX_DEGREE: usize = 40;

/// Gauss-Legendre nodes/weights on [-1,1], by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, t);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule on [0,1], exact for degree `d`.
pub fn edge_quadrature(d: usize) -> Result<EdgeRule> {
    if d > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(d, 0, MAX_DEGREE));
    }
    let n = d / 2 + 1; // 2n-1 >= d
    let (x, w) = gauss_legendre(n);
    let points = x.iter().map(|&t| 0.5 * (t + 1.0)).collect();
    let weights = w.iter().map(|&wi| 0.5 * wi).collect();
    Ok(EdgeRule {
        points,
        weights,
        degree: d,
    })
}

/// Collapsed tensor rule on the reference triangle, exact for total degree
/// `d`. Duffy map x = s(1-t), y = t with Jacobian (1-t); the extra factor
/// raises the needed 1D exactness in t by one.
pub fn triangle_quadrature(d: usize) -> Result<TriangleRule> {
    if d > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(d, 0, MAX_DEGREE));
    }
    let ns = d / 2 + 1; // exact through degree d in s
    let nt = (d + 1) / 2 + 1; // exact through degree d+1 in t
    let (xs, ws) = gauss_legendre(ns);
    let (xt, wt) = gauss_legendre(nt);
    let mut points = Vec::with_capacity(ns * nt);
    let mut weights = Vec::with_capacity(ns * nt);
    for (i, (&ti_raw, &wti)) in xt.iter().zip(&wt).enumerate() {
        let _ = i;
        let t = 0.5 * (ti_raw + 1.0);
        for (&si_raw, &wsi) in xs.iter().zip(&ws) {
            let s = 0.5 * (si_raw + 1.0);
            points.push([s * (1.0 - t), t]);
            weights.push(0.25 * wsi * wti * (1.0 - t));
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        degree: d,
    })
}

/// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
pub fn monomial_integral_tri(a: u32, b: u32) -> f64 {
    // a!b!/(a+b+2)! computed as a product to avoid overflow
    let mut val = 1.0;
    // 1/( (a+1)(a+2)...(a+b+2) ) * 1/ C ... simpler: log-free iterative
    // a!b!/(a+b+2)! = [prod_{j=1..b} j/(a+j)] / ((a+b+1)(a+b+2))
    for j in 1..=b {
        val *= j as f64 / (a + j) as f64;
    }
    val / ((a + b + 1) as f64 * (a + b + 2) as f64)
}
