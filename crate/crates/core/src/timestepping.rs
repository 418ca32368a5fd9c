//! Second-order two-level time integrators for the semidiscrete HDG system:
//! the energy-conserving scheme with the discrete-gradient nonlinearity
//! (a Newton solve on the condensed system per step) and the linearized
//! non-conservative scheme with the nonlinear term taken explicitly
//! (one back-substitution per step against a matrix factored once).

use crate::hdg::{
    l2_project_element, l2_project_face, solve_elliptic_init, CondensedSystem, Discretization,
    HDGState,
};
use crate::nonlinear::NewtonConfig;
use crate::par::{map_collect, ExecMode};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// discrete-gradient treatment of the cubic term; conserves the
    /// discrete energy exactly
    Conservative,
    /// explicit f(U^n); linear constant-matrix steps, no conservation
    NonConservative,
}

#[derive(Debug, Clone, Copy)]
pub struct TimeConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub newton: NewtonConfig,
    pub mode: ExecMode,
}

/// Continuous problem data. `boundary` is the exact trace for
/// inhomogeneous Dirichlet conditions (None: homogeneous), `source` the
/// forcing g(x, t).
pub struct ProblemData<'a> {
    pub u0: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
    pub lap_u0: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
    pub u1: &'a (dyn Fn([f64; 2]) -> f64 + Sync),
    pub source: Option<&'a (dyn Fn([f64; 2], f64) -> f64 + Sync)>,
    pub boundary: Option<&'a (dyn Fn([f64; 2], f64) -> f64 + Sync)>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub newton_iterations: usize,
    pub residual: f64,
}

#[derive(Debug)]
pub struct Outcome {
    /// states at the two last time levels (t = T - dt and t = T)
    pub prev: HDGState,
    pub last: HDGState,
    /// discrete energies E^{n+1/2} for n = 0 .. n_steps-1
    pub energies: Vec<f64>,
    pub stats: Vec<StepStats>,
}

/// Sum over elements of det * |c|^2; the L2 norm with orthonormal bases.
pub fn l2_norm_sq(disc: &Discretization, coeffs: &[DVector<f64>]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(t, c)| disc.geoms[t].det * c.norm_squared())
        .sum()
}

/// The stabilization face seminorm |u - u^|_+^2, summed over element
/// boundaries: sum_K sum_e tau_e |P u - u^|^2_e.
pub fn face_seminorm_sq(disc: &Discretization, state: &HDGState) -> f64 {
    let mut s = 0.0;
    for t in 0..disc.dofs.n_elems {
        let em = &disc.elems[t];
        for e in 0..3 {
            let (f, _) = disc.mesh.tri_faces[t][e];
            let p = em.proj_u_on_face(e, &state.u[t]);
            let d = p - &state.trace[f];
            s += em.tau[e] * em.face_len[e] * d.norm_squared();
        }
    }
    s
}

/// The conserved quantity E^{n+1/2} formed from consecutive levels n, n+1.
pub fn discrete_energy(
    disc: &Discretization,
    level_n: &HDGState,
    level_n1: &HDGState,
    dt: f64,
) -> f64 {
    let dtu: Vec<DVector<f64>> = level_n1
        .u
        .iter()
        .zip(&level_n.u)
        .map(|(a, b)| (a - b) / dt)
        .collect();
    let potential: f64 = (0..disc.dofs.n_elems)
        .map(|t| disc.potential_integral(t, &level_n.u[t]) + disc.potential_integral(t, &level_n1.u[t]))
        .sum();
    l2_norm_sq(disc, &dtu)
        + 0.5
            * (l2_norm_sq(disc, &level_n.q)
                + l2_norm_sq(disc, &level_n1.q)
                + face_seminorm_sq(disc, level_n)
                + face_seminorm_sq(disc, level_n1)
                + 2.0 * potential)
}

/// Initial discrete triple. Equal-degree spaces use the stationary HDG
/// solve on the initial displacement; the mixed-degree variant takes plain
/// L2 projections with the flux recovered from its own constraint row.
pub fn initial_state(
    disc: &Discretization,
    pd: &ProblemData,
    mode: ExecMode,
) -> Result<HDGState> {
    if !disc.cfg.variant {
        let bc: Option<&(dyn Fn([f64; 2]) -> f64 + Sync)> = match pd.boundary {
            Some(b) => Some(&move |x| b(x, 0.0)),
            None => None,
        };
        return solve_elliptic_init(disc, pd.lap_u0, bc, mode);
    }
    let d = &disc.dofs;
    let mut state = HDGState::zeros(disc);
    for t in 0..d.n_elems {
        state.u[t] = l2_project_element(disc, t, pd.u0);
    }
    for f in 0..d.n_faces {
        state.trace[f] = l2_project_face(disc, f, pd.u0);
    }
    for t in 0..d.n_elems {
        let tloc = gather_trace(disc, &state.trace, t);
        let em = &disc.elems[t];
        let rhs = &em.a_qu * &state.u[t] + &em.a_qf * tloc;
        state.q[t] = -rhs / em.det;
    }
    Ok(state)
}

fn gather_trace(disc: &Discretization, trace: &[DVector<f64>], t: usize) -> DVector<f64> {
    let nf = disc.dofs.nf;
    let mut tloc = DVector::zeros(3 * nf);
    for e in 0..3 {
        let (f, _) = disc.mesh.tri_faces[t][e];
        tloc.rows_mut(e * nf, nf).copy_from(&trace[f]);
    }
    tloc
}

/// a_uq Q + a_uu U + a_uf T for one element.
fn spatial_u(disc: &Discretization, t: usize, state: &HDGState) -> DVector<f64> {
    let em = &disc.elems[t];
    let tloc = gather_trace(disc, &state.trace, t);
    &em.a_uq * &state.q[t] + &em.a_uu * &state.u[t] + &em.a_uf * tloc
}

/// Residual of one time level at iterate `x`:
///   q-row:   det Q + a_qu U + a_qf T
///   u-row:   alpha det U + 1/2 spatial(x) + known_u
///            [+ discrete-gradient moments against `nonlin_with`]
///   trace:   transmission rows of `x` on interior faces
/// Returns per-element and per-face residuals plus their joint rms.
fn assemble_residual(
    disc: &Discretization,
    x: &HDGState,
    alpha: f64,
    known_u: &[DVector<f64>],
    nonlin_with: Option<&HDGState>,
    mode: ExecMode,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, f64) {
    let d = &disc.dofs;
    let (nq, nu, nf) = (d.nq, d.nu, d.nf);
    let per_elem: Vec<(DVector<f64>, DVector<f64>)> = map_collect(mode, d.n_elems, |t| {
        let em = &disc.elems[t];
        let tloc = gather_trace(disc, &x.trace, t);
        let mut r = DVector::zeros(d.ne);
        let rq = em.det * &x.q[t] + &em.a_qu * &x.u[t] + &em.a_qf * &tloc;
        r.rows_mut(0, 2 * nq).copy_from(&rq);
        let mut ru = alpha * em.det * &x.u[t]
            + 0.5 * spatial_u(disc, t, x)
            + &known_u[t];
        if let Some(other) = nonlin_with {
            ru += disc.nonlin_moments(t, &x.u[t], &other.u[t]);
        }
        r.rows_mut(2 * nq, nu).copy_from(&ru);
        let mut rf = &em.a_fq * &x.q[t] + &em.a_fu * &x.u[t];
        for e in 0..3 {
            let mut v = rf.rows_mut(e * nf, nf);
            v += em.a_ff_diag[e] * tloc.rows(e * nf, nf);
        }
        (r, rf)
    });
    let mut r_e = Vec::with_capacity(d.n_elems);
    let mut r_f = vec![DVector::zeros(nf); d.n_faces];
    for (t, (re, rf)) in per_elem.into_iter().enumerate() {
        for e in 0..3 {
            let (f, _) = disc.mesh.tri_faces[t][e];
            if d.interior[f].is_some() {
                let mut v = r_f[f].rows_mut(0, nf);
                v += rf.rows(e * nf, nf);
            }
        }
        r_e.push(re);
    }
    let mut sq = 0.0;
    let mut count = 0usize;
    for r in &r_e {
        sq += r.norm_squared();
        count += r.len();
    }
    for (f, r) in r_f.iter().enumerate() {
        if d.interior[f].is_some() {
            sq += r.norm_squared();
            count += r.len();
        }
    }
    (r_e, r_f, (sq / count as f64).sqrt())
}

/// Prescribed boundary traces at time `t`, written into `state`.
fn apply_boundary(disc: &Discretization, pd: &ProblemData, state: &mut HDGState, t: f64) {
    if let Some(b) = pd.boundary {
        for (f, face) in disc.mesh.faces.iter().enumerate() {
            if face.boundary {
                state.trace[f] = l2_project_face(disc, f, |x| b(x, t));
            }
        }
    }
}

/// Source moments 0.5 (g(t_a) + g(t_b), phi_i) per element; zero without g.
fn source_moments(
    disc: &Discretization,
    pd: &ProblemData,
    ta: f64,
    tb: f64,
    mode: ExecMode,
) -> Vec<DVector<f64>> {
    match pd.source {
        Some(g) => map_collect(mode, disc.dofs.n_elems, |t| {
            disc.u_moments(t, |x| 0.5 * (g(x, ta) + g(x, tb)))
        }),
        None => vec![DVector::zeros(disc.dofs.nu); disc.dofs.n_elems],
    }
}

/// Solves one time level. Newton when `nonlin_with` is set (the Jacobian is
/// rebuilt each iteration), otherwise a single linear solve, optionally
/// against a prefactored system.
#[allow(clippy::too_many_arguments)]
fn solve_level(
    disc: &Discretization,
    mut x: HDGState,
    alpha: f64,
    known_u: &[DVector<f64>],
    nonlin_with: Option<&HDGState>,
    fixed_sys: Option<&CondensedSystem>,
    newton: &NewtonConfig,
    step: usize,
    mode: ExecMode,
) -> Result<(HDGState, StepStats)> {
    let d = &disc.dofs;
    let bc: Vec<Option<DVector<f64>>> = vec![None; d.n_faces];
    let mut stats = StepStats::default();
    for it in 0..=newton.max_iterations {
        let (r_e, r_f, rms) = assemble_residual(disc, &x, alpha, known_u, nonlin_with, mode);
        stats.residual = rms;
        if rms <= newton.tolerance {
            stats.newton_iterations = it;
            return Ok((x, stats));
        }
        if it == newton.max_iterations {
            return Err(Error::NewtonDidNotConverge {
                step,
                residual: rms,
                iters: it,
            });
        }
        let owned;
        let sys = match fixed_sys {
            Some(s) => s,
            None => {
                let blocks: Vec<DMatrix<f64>> = match nonlin_with {
                    Some(other) => map_collect(mode, d.n_elems, |t| {
                        disc.nonlin_jacobian(t, &x.u[t], &other.u[t])
                    }),
                    None => vec![DMatrix::zeros(d.nu, d.nu); d.n_elems],
                };
                owned = CondensedSystem::build(disc, alpha, 0.5, Some(&blocks), mode)?;
                &owned
            }
        };
        let neg_e: Vec<DVector<f64>> = r_e.iter().map(|r| -r).collect();
        let neg_f: Vec<DVector<f64>> = r_f.iter().map(|r| -r).collect();
        let delta = sys.solve(disc, &neg_e, &neg_f, &bc, mode);
        for t in 0..d.n_elems {
            let de = &delta.elems[t];
            let mut q = x.q[t].rows_mut(0, 2 * d.nq);
            q += de.rows(0, 2 * d.nq);
            let mut u = x.u[t].rows_mut(0, d.nu);
            u += de.rows(2 * d.nq, d.nu);
        }
        for f in 0..d.n_faces {
            if d.interior[f].is_some() {
                x.trace[f] += &delta.trace[f];
            }
        }
    }
    unreachable!()
}

/// Runs the full time loop from the discrete initial data.
pub fn integrate(
    disc: &Discretization,
    pd: &ProblemData,
    tcfg: &TimeConfig,
) -> Result<Outcome> {
    let d = &disc.dofs;
    let dt = tcfg.dt;
    let mode = tcfg.mode;
    if !(dt > 0.0) || tcfg.n_steps == 0 {
        return Err(Error::InvalidConfig(format!(
            "need a positive time step and at least one step, got dt={dt}, n={}",
            tcfg.n_steps
        )));
    }
    let state0 = initial_state(disc, pd, mode)?;
    let vel_moments: Vec<DVector<f64>> =
        map_collect(mode, d.n_elems, |t| disc.u_moments(t, pd.u1));

    let mut energies = Vec::with_capacity(tcfg.n_steps);
    let mut stats = Vec::with_capacity(tcfg.n_steps);

    // first step: alpha = 2/dt^2, both schemes differ only in the cubic term
    let alpha1 = 2.0 / (dt * dt);
    let src1 = source_moments(disc, pd, 0.0, dt, mode);
    let known1: Vec<DVector<f64>> = map_collect(mode, d.n_elems, |t| {
        let mut k = -alpha1 * disc.elems[t].det * &state0.u[t] - (2.0 / dt) * &vel_moments[t]
            + 0.5 * spatial_u(disc, t, &state0)
            - &src1[t];
        if tcfg.scheme == Scheme::NonConservative {
            k += disc.f_moments(t, &state0.u[t]);
        }
        k
    });
    let mut guess = state0.clone();
    guess.t = dt;
    apply_boundary(disc, pd, &mut guess, dt);
    let first_sys;
    let (fixed1, nonlin1) = match tcfg.scheme {
        Scheme::Conservative => (None, Some(&state0)),
        Scheme::NonConservative => {
            first_sys = CondensedSystem::build(disc, alpha1, 0.5, None, mode)?;
            (Some(&first_sys), None)
        }
    };
    let (mut curr, st) = solve_level(
        disc, guess, alpha1, &known1, nonlin1, fixed1, &tcfg.newton, 1, mode,
    )?;
    curr.t = dt;
    stats.push(st);
    let mut prev = state0;
    energies.push(discrete_energy(disc, &prev, &curr, dt));

    // interior steps share one matrix in the non-conservative scheme
    let alpha = 1.0 / (dt * dt);
    let interior_sys = match tcfg.scheme {
        Scheme::NonConservative if tcfg.n_steps > 1 => {
            Some(CondensedSystem::build(disc, alpha, 0.5, None, mode)?)
        }
        _ => None,
    };

    for n in 1..tcfg.n_steps {
        let t_next = (n as f64 + 1.0) * dt;
        let src = source_moments(disc, pd, (n as f64 - 1.0) * dt, t_next, mode);
        let known: Vec<DVector<f64>> = map_collect(mode, d.n_elems, |t| {
            let em = &disc.elems[t];
            let mut k = alpha * em.det * (&prev.u[t] - 2.0 * &curr.u[t])
                + 0.5 * spatial_u(disc, t, &prev)
                - &src[t];
            if tcfg.scheme == Scheme::NonConservative {
                k += disc.f_moments(t, &curr.u[t]);
            }
            k
        });
        let mut guess = HDGState {
            t: t_next,
            u: curr
                .u
                .iter()
                .zip(&prev.u)
                .map(|(a, b)| 2.0 * a - b)
                .collect(),
            q: curr
                .q
                .iter()
                .zip(&prev.q)
                .map(|(a, b)| 2.0 * a - b)
                .collect(),
            trace: curr
                .trace
                .iter()
                .zip(&prev.trace)
                .map(|(a, b)| 2.0 * a - b)
                .collect(),
        };
        apply_boundary(disc, pd, &mut guess, t_next);
        let nonlin_with = match tcfg.scheme {
            Scheme::Conservative => Some(&prev),
            Scheme::NonConservative => None,
        };
        let (mut next, st) = solve_level(
            disc,
            guess,
            alpha,
            &known,
            nonlin_with,
            interior_sys.as_ref(),
            &tcfg.newton,
            n + 1,
            mode,
        )?;
        next.t = t_next;
        stats.push(st);
        energies.push(discrete_energy(disc, &curr, &next, dt));
        prev = curr;
        curr = next;
    }
    Ok(Outcome {
        prev,
        last: curr,
        energies,
        stats,
    })
}
