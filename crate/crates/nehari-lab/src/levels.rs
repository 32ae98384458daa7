//! Level curves, the Legendre-Fenchel transform between them, and the
//! derivative/mass diagnostics.
//!
//! The action level `J(λ)` and the energy level `E(μ)` are sampled by
//! continuation sweeps; the transform `J*(μ) = sup_λ (λμ - J(λ))` then
//! reconstructs `-E(μ)` from the action curve alone, and the central
//! difference `J'(λ)` is compared against the minimizer mass. The sup over a
//! finite sweep is a lower bound of the true sup, so samples whose sup is
//! attained at a sweep endpoint are flagged `boundary-attained` rather than
//! treated as duality violations.

use std::sync::Arc;

use serde::Serialize;

use crate::error::SolverError;
use crate::grid::{DiscreteDomain, DomainKind};
use crate::solve::{continuation_sweep, SolverConfig, SolverKind, SweepSample};

/// Which level a curve samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    ActionLevel,
    EnergyLevel,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::ActionLevel => "action_level",
            CurveKind::EnergyLevel => "energy_level",
        }
    }
}

/// A monotone-sampled level curve with per-sample metadata.
///
/// `mass_or_multiplier` stores the minimizer half-mass on action curves and
/// the extracted frequency on energy curves. Audit findings are appended to
/// the per-sample `flags` instead of silently passing or panicking.
#[derive(Debug, Clone, Serialize)]
pub struct LevelCurve {
    pub kind: CurveKind,
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    pub mass_or_multiplier: Vec<f64>,
    pub converged: Vec<bool>,
    pub flags: Vec<Vec<String>>,
}

impl LevelCurve {
    fn from_sweep(kind: CurveKind, sweep: &[SweepSample]) -> Self {
        let mut curve = LevelCurve {
            kind,
            params: Vec::with_capacity(sweep.len()),
            values: Vec::with_capacity(sweep.len()),
            mass_or_multiplier: Vec::with_capacity(sweep.len()),
            converged: Vec::with_capacity(sweep.len()),
            flags: Vec::with_capacity(sweep.len()),
        };
        for sample in sweep {
            curve.params.push(sample.param);
            match &sample.result {
                Ok(gs) => {
                    let (value, companion) = match kind {
                        CurveKind::ActionLevel => (gs.action_value, gs.mu),
                        CurveKind::EnergyLevel => (gs.energy_value, gs.lambda),
                    };
                    curve.values.push(value);
                    curve.mass_or_multiplier.push(companion);
                    curve.converged.push(gs.converged);
                    curve.flags.push(if gs.converged {
                        Vec::new()
                    } else {
                        vec!["non-convergence".into()]
                    });
                }
                Err(e) => {
                    curve.values.push(f64::NAN);
                    curve.mass_or_multiplier.push(f64::NAN);
                    curve.converged.push(false);
                    curve.flags.push(vec![e.flag().into()]);
                }
            }
        }
        curve
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Indices of converged samples.
    pub fn converged_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.converged[i]).collect()
    }

    /// CSV rendering: `kind,abscissa,value,mass_or_multiplier,converged,flags`
    /// with 17-significant-digit floats and `;`-joined flags.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,abscissa,value,mass_or_multiplier,converged,flags\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.kind.as_str(),
                format_float(self.params[i]),
                format_float(self.values[i]),
                format_float(self.mass_or_multiplier[i]),
                self.converged[i],
                self.flags[i].join(";"),
            ));
        }
        out
    }
}

/// 17 significant digits, locale-independent.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Build the action level curve over a strictly increasing frequency grid.
/// Samples violating nonnegativity or monotonicity are flagged, never hidden.
pub fn build_action_curve(
    domain: &Arc<DiscreteDomain>,
    p: f64,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<LevelCurve, SolverError> {
    let sweep = continuation_sweep(domain, p, lambda_grid, cfg, SolverKind::Action)?;
    let mut curve = LevelCurve::from_sweep(CurveKind::ActionLevel, &sweep);
    audit_action_curve(&mut curve);
    Ok(curve)
}

/// Build the energy level curve over a strictly increasing half-mass grid.
/// Divergent samples (unbounded regimes) carry a `divergence` flag.
pub fn build_energy_curve(
    domain: &Arc<DiscreteDomain>,
    p: f64,
    mu_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<LevelCurve, SolverError> {
    if mu_grid.iter().any(|&m| !(m > 0.0)) {
        return Err(SolverError::InvalidParameter(
            "energy curves need strictly positive half-masses".into(),
        ));
    }
    let sweep = continuation_sweep(domain, p, mu_grid, cfg, SolverKind::Energy)?;
    let mut curve = LevelCurve::from_sweep(CurveKind::EnergyLevel, &sweep);
    audit_energy_curve(&mut curve);
    Ok(curve)
}

fn audit_action_curve(curve: &mut LevelCurve) {
    let idx = curve.converged_indices();
    for &i in &idx {
        if curve.values[i] < 0.0 {
            curve.flags[i].push("negative-level".into());
        }
    }
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if curve.values[b] < curve.values[a] {
            curve.flags[b].push("monotonicity-violation".into());
        }
    }
}

fn audit_energy_curve(curve: &mut LevelCurve) {
    // Concavity audit on consecutive converged triples (slope test, which
    // reduces to the midpoint test on uniform grids).
    let idx = curve.converged_indices();
    for w in idx.windows(3) {
        let (i, j, k) = (w[0], w[1], w[2]);
        let s1 = (curve.values[j] - curve.values[i]) / (curve.params[j] - curve.params[i]);
        let s2 = (curve.values[k] - curve.values[j]) / (curve.params[k] - curve.params[j]);
        let scale = curve.values[k].abs().max(curve.values[i].abs()).max(1.0);
        if s2 - s1 > 1e-6 * scale {
            curve.flags[j].push("concavity-violation".into());
        }
    }
}

/// One sample of a Legendre-Fenchel transform.
#[derive(Debug, Clone, Serialize)]
pub struct TransformSample {
    pub dual_param: f64,
    pub value: f64,
    /// Abscissa where the sup was attained.
    pub argmax: f64,
    /// True when the sup sits on the first or last converged sweep sample, in
    /// which case the true sup may lie outside the sweep range.
    pub boundary_attained: bool,
}

/// Legendre-Fenchel transform of a sampled curve: for each dual abscissa,
/// `sup (λ μ - f(λ))` over the converged samples, refined by golden-section
/// search on the piecewise-linear interpolant between the bracketing samples.
///
/// The output is convex on its grid for any input (it is a max of affine
/// functions of the dual variable).
pub fn legendre_transform(
    curve: &LevelCurve,
    dual_grid: &[f64],
) -> Result<Vec<TransformSample>, SolverError> {
    let idx = curve.converged_indices();
    if idx.len() < 3 {
        return Err(SolverError::InvalidParameter(format!(
            "transform needs at least 3 converged samples, have {}",
            idx.len()
        )));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| curve.params[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| curve.values[i]).collect();

    let mut out = Vec::with_capacity(dual_grid.len());
    for &mu in dual_grid {
        let mut kbest = 0usize;
        let mut best = xs[0] * mu - ys[0];
        for (k, (&x, &y)) in xs.iter().zip(&ys).enumerate().skip(1) {
            let v = x * mu - y;
            if v > best {
                best = v;
                kbest = k;
            }
        }
        // Refine on the piecewise-linear interpolant between the neighbors of
        // the best grid point; on a PL interpolant the sup of an affine-minus-
        // PL function is attained at a vertex, so this confirms the bracketing
        // and pins the reported argmax.
        let lo = kbest.saturating_sub(1);
        let hi = (kbest + 1).min(xs.len() - 1);
        let mut argmax = xs[kbest];
        if hi > lo {
            let eval = |x: f64| {
                let seg = if hi - lo == 2 && x > xs[lo + 1] {
                    lo + 1
                } else {
                    lo
                };
                let (x0, x1) = (xs[seg], xs[seg + 1]);
                let t = (x - x0) / (x1 - x0);
                let y = ys[seg] * (1.0 - t) + ys[seg + 1] * t;
                x * mu - y
            };
            let (x_ref, v_ref) = golden_section_max(eval, xs[lo], xs[hi], 1e-12);
            if v_ref > best {
                best = v_ref;
                argmax = x_ref;
            }
        }
        out.push(TransformSample {
            dual_param: mu,
            value: best,
            argmax,
            boundary_attained: kbest == 0 || kbest == xs.len() - 1,
        });
    }
    Ok(out)
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Largest violation of convexity (in the slope sense) over a sampled
/// function; nonpositive means convex up to roundoff.
pub fn convexity_defect(xs: &[f64], ys: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (x, y) in xs.windows(3).zip(ys.windows(3)) {
        let s1 = (y[1] - y[0]) / (x[1] - x[0]);
        let s2 = (y[2] - y[1]) / (x[2] - x[1]);
        worst = worst.max(s1 - s2);
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    }
}

/// One row of the derivative-vs-mass comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeRow {
    pub lambda: f64,
    /// Central difference of the level curve (one-sided at sweep endpoints).
    pub j_prime: f64,
    /// Half-mass of the computed minimizer at this frequency.
    pub mass: f64,
    pub abs_discrepancy: f64,
    pub rel_discrepancy: f64,
    /// Interior rows use a true central difference and take part in
    /// pass/fail; endpoint rows are informational only.
    pub interior: bool,
}

/// Side-by-side duality report: the energy level computed directly versus
/// reconstructed through the transform of the action level, plus the
/// derivative table.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub schema: String,
    pub domain_kind: DomainKind,
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
    /// Truncation length of the unbounded axis when the domain approximates a
    /// cylinder; such results approximate the unbounded problem and must not
    /// be read as exact.
    pub truncation_length: Option<f64>,
    pub p: f64,
    pub lambda_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub energy_direct: Vec<f64>,
    pub energy_via_transform: Vec<f64>,
    pub abs_err: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub sup_attained_at: Vec<f64>,
    pub boundary_attained: Vec<bool>,
    pub row_flags: Vec<Vec<String>>,
    pub derivative_table: Vec<DerivativeRow>,
    /// Max duality error over rows that participate in pass/fail.
    pub max_rel_err: f64,
    /// Worst interior derivative-vs-mass relative discrepancy.
    pub worst_derivative_rel: f64,
    /// Minimum over the mu grid of `min_λ (J(λ) - λμ) - E(μ)`; the two-sided
    /// level inequality requires this to be nonnegative up to tolerance.
    pub min_cross_slack: f64,
    pub action_curve: LevelCurve,
    pub energy_curve: LevelCurve,
}

/// Assemble the full duality report. Rows with `μ = 0` are kept (the energy
/// level is zero there by definition) but flagged and excluded from
/// pass/fail, as are rows whose transform sup is boundary-attained.
pub fn duality_report(
    domain: &Arc<DiscreteDomain>,
    p: f64,
    lambda_grid: &[f64],
    mu_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<DualityReport, SolverError> {
    if mu_grid.iter().any(|&m| m < 0.0) {
        return Err(SolverError::InvalidParameter(
            "the transform of the action level is +inf for negative masses".into(),
        ));
    }
    let action_curve = build_action_curve(domain, p, lambda_grid, cfg)?;

    let positive_mu: Vec<f64> = mu_grid.iter().cloned().filter(|&m| m > 0.0).collect();
    let energy_curve = build_energy_curve(domain, p, &positive_mu, cfg)?;

    let transform = legendre_transform(&action_curve, mu_grid)?;

    let mut energy_direct = Vec::with_capacity(mu_grid.len());
    let mut energy_via = Vec::with_capacity(mu_grid.len());
    let mut abs_err = Vec::with_capacity(mu_grid.len());
    let mut rel_err = Vec::with_capacity(mu_grid.len());
    let mut sup_at = Vec::with_capacity(mu_grid.len());
    let mut boundary = Vec::with_capacity(mu_grid.len());
    let mut row_flags: Vec<Vec<String>> = Vec::with_capacity(mu_grid.len());
    let mut max_rel_err: f64 = 0.0;

    let mut pos_row = 0usize;
    for (row, &mu) in mu_grid.iter().enumerate() {
        let t = &transform[row];
        let mut flags = Vec::new();
        let direct = if mu == 0.0 {
            flags.push("zero-mass".into());
            0.0
        } else {
            let i = pos_row;
            pos_row += 1;
            if !energy_curve.converged[i] {
                flags.push("energy-sample-failed".into());
                f64::NAN
            } else {
                energy_curve.values[i]
            }
        };
        if t.boundary_attained {
            flags.push("boundary-attained".into());
        }
        let via = -t.value;
        let a_err = (direct - via).abs();
        let r_err = a_err / (1.0 + direct.abs());
        if flags.is_empty() && a_err.is_finite() {
            max_rel_err = max_rel_err.max(r_err);
        }
        energy_direct.push(direct);
        energy_via.push(via);
        abs_err.push(a_err);
        rel_err.push(r_err);
        sup_at.push(t.argmax);
        boundary.push(t.boundary_attained);
        row_flags.push(flags);
    }

    // Derivative table: grid-adapted central differences on converged action
    // samples versus the minimizer mass.
    let derivative_table = derivative_table(&action_curve);
    let worst_derivative_rel = derivative_table
        .iter()
        .filter(|r| r.interior)
        .map(|r| r.rel_discrepancy)
        .fold(0.0f64, f64::max);

    // Cross inequality: J(λ) - λμ >= E(μ) sample-wise.
    let mut min_cross_slack = f64::INFINITY;
    let idx = action_curve.converged_indices();
    for (i, &mu) in positive_mu.iter().enumerate() {
        if !energy_curve.converged[i] {
            continue;
        }
        let min_j_minus = idx
            .iter()
            .map(|&k| action_curve.values[k] - action_curve.params[k] * mu)
            .fold(f64::INFINITY, f64::min);
        min_cross_slack = min_cross_slack.min(min_j_minus - energy_curve.values[i]);
    }
    if min_cross_slack == f64::INFINITY {
        min_cross_slack = 0.0;
    }

    Ok(DualityReport {
        schema: "nehari-lab/duality/v1".into(),
        domain_kind: domain.kind(),
        extents: domain.extents().to_vec(),
        resolution: domain.resolution().to_vec(),
        truncation_length: domain.truncation_length(),
        p,
        lambda_grid: lambda_grid.to_vec(),
        mu_grid: mu_grid.to_vec(),
        energy_direct,
        energy_via_transform: energy_via,
        abs_err,
        rel_err,
        sup_attained_at: sup_at,
        boundary_attained: boundary,
        row_flags,
        derivative_table,
        max_rel_err,
        worst_derivative_rel,
        min_cross_slack,
        action_curve,
        energy_curve,
    })
}

/// Grid-adapted derivative estimates along a level curve (three-point
/// formulas on nonuniform grids, one-sided at the ends).
pub fn derivative_table(curve: &LevelCurve) -> Vec<DerivativeRow> {
    let idx = curve.converged_indices();
    let n = idx.len();
    let mut rows = Vec::with_capacity(n);
    if n < 2 {
        return rows;
    }
    for j in 0..n {
        let i = idx[j];
        let (j_prime, interior) = if j == 0 || j == n - 1 {
            let (a, b) = if j == 0 {
                (idx[0], idx[1])
            } else {
                (idx[n - 2], idx[n - 1])
            };
            (
                (curve.values[b] - curve.values[a]) / (curve.params[b] - curve.params[a]),
                false,
            )
        } else {
            let (a, b, c) = (idx[j - 1], idx[j], idx[j + 1]);
            let h1 = curve.params[b] - curve.params[a];
            let h2 = curve.params[c] - curve.params[b];
            let d = (h1 * h1 * curve.values[c] - h2 * h2 * curve.values[a]
                + (h2 * h2 - h1 * h1) * curve.values[b])
                / (h1 * h2 * (h1 + h2));
            (d, true)
        };
        let mass = curve.mass_or_multiplier[i];
        let abs_d = (j_prime - mass).abs();
        rows.push(DerivativeRow {
            lambda: curve.params[i],
            j_prime,
            mass,
            abs_discrepancy: abs_d,
            rel_discrepancy: abs_d / mass.abs().max(1e-300),
            interior,
        });
    }
    rows
}

/// One-sided mass estimates from continuation in both sweep directions, and
/// the jump flags derived from them. A flagged sample marks a candidate
/// non-differentiability point of the action level; the scan is purely
/// diagnostic and never asserts a violation.
#[derive(Debug, Clone, Serialize)]
pub struct MassJumpDiagnostic {
    pub schema: String,
    pub lambda_grid: Vec<f64>,
    pub left_mass: Vec<f64>,
    pub right_mass: Vec<f64>,
    pub jump_detected: Vec<bool>,
    pub threshold: f64,
}

/// Pure jump rule shared by the scan and its tests:
/// `|left - right| > threshold * max(1, |right|)` (failed samples never flag).
pub fn detect_jumps(left: &[f64], right: &[f64], threshold: f64) -> Vec<bool> {
    left.iter()
        .zip(right)
        .map(|(&l, &r)| {
            if l.is_nan() || r.is_nan() {
                false
            } else {
                (l - r).abs() > threshold * r.abs().max(1.0)
            }
        })
        .collect()
}

/// Run continuation in increasing and decreasing frequency directions and
/// compare the per-frequency minimizer masses.
pub fn mass_jump_scan(
    domain: &Arc<DiscreteDomain>,
    p: f64,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
    threshold: f64,
) -> Result<MassJumpDiagnostic, SolverError> {
    if !(threshold > 0.0) {
        return Err(SolverError::InvalidParameter(
            "jump threshold must be positive".into(),
        ));
    }
    let forward = continuation_sweep(domain, p, lambda_grid, cfg, SolverKind::Action)?;
    let left_mass: Vec<f64> = forward
        .iter()
        .map(|s| match &s.result {
            Ok(gs) if gs.converged => gs.mu,
            _ => f64::NAN,
        })
        .collect();

    // Decreasing direction: walk the grid backwards, warm-starting each solve
    // from its right neighbor (the sweep API itself requires increasing
    // grids, so this leg is spelled out).
    let mut right_mass = vec![f64::NAN; lambda_grid.len()];
    let mut warm: Option<crate::grid::Field> = None;
    for (pos, &lam) in lambda_grid.iter().enumerate().rev() {
        let result = match &warm {
            Some(init) => match crate::solve::solve_action_warm(domain, p, lam, init, cfg) {
                Ok(gs) if gs.converged => Ok(gs),
                _ => crate::solve::solve_action(domain, p, lam, cfg),
            },
            None => crate::solve::solve_action(domain, p, lam, cfg),
        };
        if let Ok(gs) = result {
            if gs.converged {
                right_mass[pos] = gs.mu;
                warm = Some(gs.field.clone());
            }
        }
    }

    let jump_detected = detect_jumps(&left_mass, &right_mass, threshold);
    Ok(MassJumpDiagnostic {
        schema: "nehari-lab/massjump/v1".into(),
        lambda_grid: lambda_grid.to_vec(),
        left_mass,
        right_mass,
        jump_detected,
        threshold,
    })
}

/// Geometric grid helper: `n` samples from `a` to `b` with constant ratio.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>, SolverError> {
    if !(a > 0.0 && b > a && n >= 2) {
        return Err(SolverError::InvalidParameter(format!(
            "geometric grid needs 0 < a < b and n >= 2, got a={a}, b={b}, n={n}"
        )));
    }
    let ratio = (b / a).powf(1.0 / (n as f64 - 1.0));
    let mut out: Vec<f64> = (0..n).map(|i| a * ratio.powi(i as i32)).collect();
    out[n - 1] = b;
    Ok(out)
}

/// Uniform grid helper: `n` samples from `a` to `b` inclusive.
pub fn linear_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>, SolverError> {
    if !(b > a && n >= 2) {
        return Err(SolverError::InvalidParameter(format!(
            "linear grid needs a < b and n >= 2, got a={a}, b={b}, n={n}"
        )));
    }
    let h = (b - a) / (n as f64 - 1.0);
    let mut out: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    out[n - 1] = b;
    Ok(out)
}
