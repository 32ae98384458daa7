//! Closed-form oracles for the cubic (p = 4) problem on long 1D intervals,
//! plus finite-difference oracles for the constrained second forms.
//!
//! The 1D profile sqrt(2)/cosh(x) solves u'' + u^3 = u, and rescaling gives
//! the whole frequency family; the integrals below are elementary:
//! int sech^2 = 2, int sech^4 = 4/3, so at lambda = 1 the action level is
//! (1/4) * |u|_4^4 = 4/3 and the half-mass is 2. The frequency family then
//! pins the level curves used throughout the acceptance run.

#![allow(dead_code)]

use nehari_lab::functional::{action, energy, sigma, ProblemParams};
use nehari_lab::grid::{norm_l2, Field};
use nehari_lab::solve::GroundState;

/// J(lambda) for p = 4 on a long 1D interval.
pub fn action_level_1d_p4(lambda: f64) -> f64 {
    (4.0 / 3.0) * lambda.powf(1.5)
}

/// Half-mass of the action ground state, = J'(lambda).
pub fn mass_1d_p4(lambda: f64) -> f64 {
    2.0 * lambda.sqrt()
}

/// E(mu) for p = 4 on a long 1D interval.
pub fn energy_level_1d_p4(mu: f64) -> f64 {
    -mu * mu * mu / 12.0
}

/// Frequency of the energy ground state of half-mass mu.
pub fn multiplier_1d_p4(mu: f64) -> f64 {
    mu * mu / 4.0
}

/// Second central difference with one Richardson step: O(s^4) estimate of
/// f''(0) from five evaluations.
pub fn second_derivative_richardson<F: FnMut(f64) -> f64>(mut f: F, s: f64) -> f64 {
    let f0 = f(0.0);
    let d = |fp: f64, fm: f64, h: f64| (fp - 2.0 * f0 + fm) / (h * h);
    let d1 = d(f(s), f(-s), s);
    let d2 = d(f(0.5 * s), f(-0.5 * s), 0.5 * s);
    (4.0 * d2 - d1) / 3.0
}

/// Value of the action along the constraint-respecting curve
/// gamma(t) = sigma(u + t v) (u + t v).
pub fn action_along_curve(state: &GroundState, v: &Field, t: f64) -> f64 {
    let params = ProblemParams::new(state.p, state.lambda, 0.0).unwrap();
    let mut w = state.field.clone();
    w.axpy(t, v);
    let s = sigma(&w, &params).unwrap();
    w.scale_in_place(s);
    action(&w, &params)
}

/// Value of the energy along the mass-preserving curve
/// eta(t) = sqrt(2 mu) (u + t phi) / |u + t phi|_2.
pub fn energy_along_curve(state: &GroundState, phi: &Field, t: f64) -> f64 {
    let params = ProblemParams::new(state.p, state.lambda, 0.0).unwrap();
    let mut w = state.field.clone();
    w.axpy(t, phi);
    let n = norm_l2(&w);
    w.scale_in_place((2.0 * state.mu).sqrt() / n);
    energy(&w, &params)
}
