//! The two variational functionals and their first-order calculus.
//!
//! Everything here routes through the discrete definitions of [`crate::grid`]
//! (in particular `grad_norm_sq(u) = -<Δu, u>`), so action, energy, gradients
//! and Euler-Lagrange residuals are mutually consistent exactly, not just to
//! discretization order.

use std::sync::Arc;

use crate::error::SolverError;
use crate::grid::{
    self, grad_norm_sq, laplacian_into, norm_l2, norm_lp_pow, DiscreteDomain, Field,
};

/// Problem parameters: nonlinearity exponent `p`, frequency `lambda` for the
/// action side and half-mass `mu` for the energy side. The exponent
/// `kappa = 1/2 - 1/p` is always derived from `p`, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub p: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ProblemParams {
    pub fn new(p: f64, lambda: f64, mu: f64) -> Result<Self, SolverError> {
        if !(p.is_finite() && p > 2.0) {
            return Err(SolverError::InvalidParameter(format!(
                "nonlinearity exponent must satisfy p > 2, got {p}"
            )));
        }
        if !(lambda.is_finite()) {
            return Err(SolverError::InvalidParameter("lambda must be finite".into()));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(SolverError::InvalidParameter(format!(
                "half-mass must be nonnegative, got {mu}"
            )));
        }
        Ok(ProblemParams { p, lambda, mu })
    }

    /// Action-side parameters (frequency fixed, mass unconstrained).
    pub fn for_action(p: f64, lambda: f64) -> Result<Self, SolverError> {
        Self::new(p, lambda, 0.0)
    }

    /// Energy-side parameters (half-mass fixed, frequency free).
    pub fn for_energy(p: f64, mu: f64) -> Result<Self, SolverError> {
        if !(mu > 0.0) {
            return Err(SolverError::InvalidParameter(format!(
                "energy solves need a positive half-mass, got {mu}"
            )));
        }
        Self::new(p, 0.0, mu)
    }

    pub fn kappa(&self) -> f64 {
        0.5 - 1.0 / self.p
    }
}

/// Critical-regime data: the L2-critical exponent for the dimension, the
/// estimated best interpolation constant and the critical half-mass derived
/// from it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CriticalData {
    pub p_crit: f64,
    /// Best-constant estimate from the bounded-domain quotient. A certified
    /// lower bound of the true constant; it is not attained on any proper
    /// subdomain of the whole space, so reports must label it
    /// "estimate (lower bound)".
    pub k_p: f64,
    pub mu_n: f64,
}

/// Action functional `J_λ(u) = 1/2 |∇u|² + λ/2 |u|² - 1/p |u|_p^p`.
pub fn action(u: &Field, params: &ProblemParams) -> f64 {
    let gn = grad_norm_sq(u);
    let l2 = norm_l2(u);
    let lp = norm_lp_pow(u, params.p).expect("p > 2 by construction");
    0.5 * gn + 0.5 * params.lambda * l2 * l2 - lp / params.p
}

/// Energy functional `E(u) = 1/2 |∇u|² - 1/p |u|_p^p`.
pub fn energy(u: &Field, params: &ProblemParams) -> f64 {
    let gn = grad_norm_sq(u);
    let lp = norm_lp_pow(u, params.p).expect("p > 2 by construction");
    0.5 * gn - lp / params.p
}

/// Scalar projection factor onto the Nehari constraint set:
/// `σ_λ(u) = ((|∇u|² + λ|u|²) / |u|_p^p)^{1/(p-2)}`, so that `σ_λ(u) u`
/// satisfies `|∇w|² + λ|w|² = |w|_p^p`.
///
/// Fails with [`SolverError::BelowSpectrum`] when the quadratic part is not
/// positive, which is how frequencies at or below the spectral bottom
/// manifest; sweeps probing that edge must treat this as a recoverable,
/// per-sample condition.
pub fn sigma(u: &Field, params: &ProblemParams) -> Result<f64, SolverError> {
    let lp = norm_lp_pow(u, params.p)?;
    if lp <= 0.0 {
        return Err(SolverError::ZeroField);
    }
    let l2 = norm_l2(u);
    let num = grad_norm_sq(u) + params.lambda * l2 * l2;
    if num <= 0.0 {
        let lam_omega = grad_norm_sq(u) / (l2 * l2);
        return Err(SolverError::BelowSpectrum {
            lambda: params.lambda,
            lambda_omega: lam_omega,
        });
    }
    Ok((num / lp).powf(1.0 / (params.p - 2.0)))
}

/// Pointwise nonlinearity `|u|^{p-2} u`.
pub(crate) fn nonlinear_term(u: &[f64], p: f64, out: &mut [f64]) {
    if p == 4.0 {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = v * v * v;
        }
    } else if p == 3.0 {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = v.abs() * v;
        }
    } else {
        let q = p - 2.0;
        for (o, &v) in out.iter_mut().zip(u) {
            *o = v.abs().powf(q) * v;
        }
    }
}

/// Residual field of the stationary equation, `Δu + |u|^{p-2}u - λu`.
pub fn el_residual_field(u: &Field, params: &ProblemParams) -> Field {
    let domain = u.domain();
    let mut out = domain.zero_field();
    laplacian_into(domain, u.values(), out.values_mut());
    let mut nl = vec![0.0; u.len()];
    nonlinear_term(u.values(), params.p, &mut nl);
    for ((o, &n), &v) in out.values_mut().iter_mut().zip(&nl).zip(u.values()) {
        *o += n - params.lambda * v;
    }
    out
}

/// L2 norm of the Euler-Lagrange residual `Δu + |u|^{p-2}u - λu`; zero
/// exactly at discrete critical points.
pub fn el_residual(u: &Field, params: &ProblemParams) -> f64 {
    norm_l2(&el_residual_field(u, params))
}

/// Lagrange multiplier consistent with the stationary equation,
/// `λ = (|u|_p^p - |∇u|²) / |u|²`.
pub fn extract_multiplier(u: &Field, p: f64) -> Result<f64, SolverError> {
    let l2 = norm_l2(u);
    if l2 <= 0.0 {
        return Err(SolverError::ZeroField);
    }
    let lp = norm_lp_pow(u, p)?;
    Ok((lp - grad_norm_sq(u)) / (l2 * l2))
}

/// L2 gradient of the action, `-Δu + λu - |u|^{p-2}u`; vanishes exactly at
/// solutions of the stationary equation.
pub fn action_gradient(u: &Field, params: &ProblemParams) -> Field {
    let mut g = el_residual_field(u, params);
    g.scale_in_place(-1.0);
    g
}

/// L2 gradient of the energy, `-Δu - |u|^{p-2}u`.
pub fn energy_gradient(u: &Field, params: &ProblemParams) -> Field {
    let domain = u.domain();
    let mut out = domain.zero_field();
    laplacian_into(domain, u.values(), out.values_mut());
    let mut nl = vec![0.0; u.len()];
    nonlinear_term(u.values(), params.p, &mut nl);
    for (o, &n) in out.values_mut().iter_mut().zip(&nl) {
        *o = -*o - n;
    }
    out
}

/// Interpolation quotient `|u|_p^p / (|u|_2^{p-α} |∇u|_2^α)` with
/// `α = N (p/2 - 1)`.
fn gn_quotient(u: &Field, p: f64, alpha: f64) -> Result<f64, SolverError> {
    let lp = norm_lp_pow(u, p)?;
    let l2 = norm_l2(u);
    let gn = grad_norm_sq(u).max(0.0).sqrt();
    if l2 == 0.0 || gn == 0.0 {
        return Err(SolverError::ZeroField);
    }
    Ok(lp / (l2.powf(p - alpha) * gn.powf(alpha)))
}

/// Estimate the best interpolation constant by maximizing the quotient over
/// the grid with normalized gradient ascent, and derive the critical
/// half-mass from it.
///
/// On a bounded domain the supremum is not attained and the maximized
/// quotient is a lower bound converging from below as the domain grows
/// (enlarging the domain never decreases it); the discrete evaluation adds a
/// +O(h^2) quadrature offset on top. Reports should label the result
/// "estimate (lower bound)".
pub fn estimate_gn_constant(
    domain: &Arc<DiscreteDomain>,
    p: f64,
) -> Result<CriticalData, SolverError> {
    let dim = domain.dim() as f64;
    if !(p > 2.0) {
        return Err(SolverError::InvalidParameter(format!(
            "interpolation estimate needs p > 2, got {p}"
        )));
    }
    let alpha = dim * (0.5 * p - 1.0);

    // Start from the frequency-one ground state: the quotient maximizer is a
    // rescaling of it, so the ascent begins at the right profile width and
    // only has to polish. (The width direction is nearly flat on large
    // domains and first-order steps crawl along it from a generic start.)
    // A partially converged solve is still a good initializer, so the
    // convergence flag is ignored here.
    let center = domain.barycenter();
    let width = domain
        .extents()
        .iter()
        .fold(f64::INFINITY, |m, &l| m.min(l))
        / 6.0;
    let bump = domain.field_from_fn(|x| {
        let r2: f64 = x
            .iter()
            .zip(&center)
            .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
            .sum();
        (-r2 / (2.0 * width * width)).exp()
    })?;
    let warm = crate::solve::solve_action_warm(
        domain,
        p,
        1.0,
        &bump,
        &crate::solve::SolverConfig {
            tol: 1e-9,
            max_iters: 30_000,
            n_starts: 1,
            ..Default::default()
        },
    );
    let warm_ok = warm.is_ok();
    let mut u = match warm {
        Ok(gs) => gs.field,
        Err(_) => bump,
    };
    normalize_l2(&mut u);

    // Ascent on ln Q with Barzilai-Borwein steps and a nonmonotone window;
    // the quotient is invariant under amplitude scaling so the gradient is
    // automatically tangent to the normalization.
    // The discrete quotient also has spurious lattice-scale maxima (an
    // unresolved one-point spike scores above the continuum constant because
    // centered differences underestimate its gradient), so the ascent must
    // stay in the smooth basin: modest step caps, a bounded polish budget,
    // and value-stagnation stopping. The reported value is the smooth-profile
    // plateau, which is the meaningful lower bound.
    let mut q = gn_quotient(&u, p, alpha)?;
    let mut step = 0.1;
    let max_iters = if warm_ok { 3_000 } else { 30_000 };
    let gtol = 1e-9;
    let mut prev_u: Option<Field> = None;
    let mut prev_g: Option<Field> = None;
    let mut recent = vec![q.ln()];
    let mut best_q = q;
    let mut quiet = 0usize;
    for _ in 0..max_iters {
        let lp = norm_lp_pow(&u, p)?;
        let l2sq = {
            let n = norm_l2(&u);
            n * n
        };
        let gnsq = grad_norm_sq(&u);
        let mut nl = vec![0.0; u.len()];
        nonlinear_term(u.values(), p, &mut nl);
        let mut lap = vec![0.0; u.len()];
        laplacian_into(domain, u.values(), &mut lap);

        // d/du ln Q = p|u|^{p-2}u / |u|_p^p - (p-α) u / |u|² + α Δu / |∇u|².
        let mut g = domain.zero_field();
        let ca = p / lp;
        let cb = (p - alpha) / l2sq;
        let cc = alpha / gnsq;
        let mut gnorm_sq = 0.0;
        for i in 0..u.len() {
            let gi = ca * nl[i] - cb * u.values()[i] + cc * lap[i];
            g.values_mut()[i] = gi;
            gnorm_sq += gi * gi;
        }
        gnorm_sq *= domain.quadrature_weight();
        let gnorm = gnorm_sq.sqrt();

        if gnorm <= gtol {
            break;
        }
        // The value settles long before the gradient does (the profile-width
        // direction is nearly flat on large domains and carries only a
        // second-order value error); stop once the quotient stagnates.
        if q - best_q > 1e-10 * q.abs().max(1e-3) {
            best_q = q;
            quiet = 0;
        } else {
            best_q = best_q.max(q);
            quiet += 1;
            if quiet > 300 {
                break;
            }
        }

        let mut alpha_step = match (&prev_u, &prev_g) {
            (Some(pu), Some(pg)) => {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for i in 0..u.len() {
                    let s = u.values()[i] - pu.values()[i];
                    let y = g.values()[i] - pg.values()[i];
                    ss += s * s;
                    sy += s * y;
                }
                if sy.abs() > 1e-300 {
                    (ss / sy).abs().clamp(1e-14, 1e2)
                } else {
                    step
                }
            }
            _ => step,
        };

        // Nonmonotone ascent: beat the worst of the recent window by the
        // first-order predicted gain, with a roundoff bypass near the top.
        let g_floor = recent.iter().cloned().fold(f64::INFINITY, f64::min);
        let noise = 64.0 * f64::EPSILON * g_floor.abs().max(1.0);
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = u.clone();
            trial.axpy(alpha_step, &g);
            normalize_l2(&mut trial);
            let pred = 1e-4 * alpha_step * gnorm_sq;
            if let Ok(q_trial) = gn_quotient(&trial, p, alpha) {
                let lnq = q_trial.ln();
                let ok = lnq.is_finite()
                    && (lnq >= g_floor + pred || (pred <= noise && lnq >= g_floor - noise));
                if ok {
                    prev_u = Some(std::mem::replace(&mut u, trial));
                    prev_g = Some(g.clone());
                    q = q_trial;
                    recent.push(lnq);
                    if recent.len() > 10 {
                        recent.remove(0);
                    }
                    step = (alpha_step * 2.0).min(1e2);
                    accepted = true;
                    break;
                }
            }
            alpha_step *= 0.5;
            if alpha_step < 1e-14 {
                break;
            }
        }
        if !accepted {
            step = (step * 0.5).max(1e-12);
        }
    }

    let q = best_q.max(q);
    if !(q.is_finite() && q > 0.0) {
        return Err(SolverError::NonConvergence {
            iterations: max_iters,
            residual: f64::NAN,
        });
    }
    let mu_n = 0.5 * (p / (2.0 * q)).powf(dim / 2.0);
    Ok(CriticalData {
        p_crit: 2.0 + 4.0 / dim,
        k_p: q,
        mu_n,
    })
}

pub(crate) fn normalize_l2(u: &mut Field) {
    let n = norm_l2(u);
    if n > 0.0 {
        u.scale_in_place(1.0 / n);
    }
}

/// `1/2 |u|²`, the half-mass of a field.
pub fn half_mass(u: &Field) -> f64 {
    let n = norm_l2(u);
    0.5 * n * n
}

/// Nehari defect `|∇u|² + λ|u|² - |u|_p^p`; zero on the constraint set.
pub fn nehari_defect(u: &Field, params: &ProblemParams) -> f64 {
    let l2 = norm_l2(u);
    let lp = norm_lp_pow(u, params.p).expect("p > 2 by construction");
    grad_norm_sq(u) + params.lambda * l2 * l2 - lp
}

/// Convenience check used by tests and report builders: relative error of the
/// identity `J_λ(u) = E(u) + λ · mu(u)`.
pub fn action_energy_identity_defect(u: &Field, params: &ProblemParams) -> f64 {
    let a = action(u, params);
    let e = energy(u, params);
    let mu = half_mass(u);
    (a - e - params.lambda * mu).abs() / (1.0 + a.abs())
}

pub(crate) fn lp_normalize(u: &mut Field, p: f64) -> Result<(), SolverError> {
    let n = grid::norm_lp(u, p)?;
    if n <= 0.0 || !n.is_finite() {
        return Err(SolverError::ZeroField);
    }
    u.scale_in_place(1.0 / n);
    Ok(())
}
