//! The cubic nonlinearity f(u) = u^3 - u, its potential F, the two-level
//! discrete gradient used by the conservative scheme, and a dense Newton
//! solver for small algebraic systems.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[inline]
pub fn f(s: f64) -> f64 {
    s * s * s - s
}

#[inline]
pub fn f_prime(s: f64) -> f64 {
    3.0 * s * s - 1.0
}

/// F(s) = 1/4 (1 - s^2)^2, with F' = f.
#[inline]
pub fn potential(s: f64) -> f64 {
    let t = 1.0 - s * s;
    0.25 * t * t
}

/// Discrete gradient of the potential in closed form,
/// (F(a) - F(b)) / (a - b) = 1/4 (a + b)(a^2 + b^2 - 2),
/// which removes the a = b singularity of the difference quotient.
#[inline]
pub fn discrete_gradient(a: f64, b: f64) -> f64 {
    0.25 * (a + b) * (a * a + b * b - 2.0)
}

/// Partial derivative of `discrete_gradient` with respect to its first slot.
#[inline]
pub fn discrete_gradient_da(a: f64, b: f64) -> f64 {
    0.25 * (a * a + b * b - 2.0) + 0.5 * a * (a + b)
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    /// tolerance on the rms of the algebraic residual, |R|_2 / sqrt(n)
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping: Option<f64>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tolerance: 1e-12,
            max_iterations: 30,
            damping: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub solution: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Dense Newton iteration. `residual` and `jacobian` are evaluated at the
/// current iterate; convergence is on the rms residual.
pub fn newton_solve<R, J>(
    mut residual: R,
    mut jacobian: J,
    x0: DVector<f64>,
    cfg: &NewtonConfig,
) -> Result<NewtonResult>
where
    R: FnMut(&DVector<f64>) -> DVector<f64>,
    J: FnMut(&DVector<f64>) -> DMatrix<f64>,
{
    let n = x0.len();
    let scale = (n as f64).sqrt();
    let mut x = x0;
    for it in 0..=cfg.max_iterations {
        let r = residual(&x);
        let rms = r.norm() / scale;
        if rms <= cfg.tolerance {
            return Ok(NewtonResult {
                solution: x,
                iterations: it,
                residual: rms,
            });
        }
        if it == cfg.max_iterations {
            return Err(Error::NewtonDidNotConverge {
                step: 0,
                residual: rms,
                iters: it,
            });
        }
        let j = jacobian(&x);
        let dx = j
            .lu()
            .solve(&(-&r))
            .ok_or(Error::SingularLocalBlock(0))?;
        x += cfg.damping.unwrap_or(1.0) * dx;
    }
    unreachable!()
}
