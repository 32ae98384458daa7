//! Acceptance suite: every release-gating check, one pass/fail line each.
//!
//! The shared frequency sweep (geometric, 60 samples on [0.1, 6]) and the
//! half-mass grid {0.5, ..., 3} are computed once and reused by the duality,
//! derivative, shape and inequality checks.

mod common;

use std::sync::OnceLock;

use nehari_lab::functional::estimate_gn_constant;
use nehari_lab::grid::{lambda_omega, DiscreteDomain};
use nehari_lab::hessian::{
    extremal_eigs, second_form_action, second_form_energy, verify_bind_identity, constant_c1,
    Constraint, TangentBasis,
};
use nehari_lab::levels::{duality_report, geometric_grid, linear_grid, DualityReport};
use nehari_lab::solve::{solve_action, solve_energy, GroundState, SolverConfig};
use nehari_lab::SolverError;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn soliton_domain() -> std::sync::Arc<DiscreteDomain> {
    DiscreteDomain::interval(40.0, 2000).unwrap()
}

fn cfg_fast() -> SolverConfig {
    SolverConfig {
        n_starts: 1,
        ..SolverConfig::default()
    }
}

static DUALITY: OnceLock<DualityReport> = OnceLock::new();

/// The reference duality run: p = 4 soliton regime, frequency sweep on
/// [0.1, 6] with 60 samples, half-masses {0.5, 1, ..., 3}.
fn reference_duality() -> &'static DualityReport {
    DUALITY.get_or_init(|| {
        let domain = soliton_domain();
        let lambda_grid = geometric_grid(0.1, 6.0, 60).unwrap();
        let mu_grid = linear_grid(0.5, 3.0, 6).unwrap();
        duality_report(&domain, 4.0, &lambda_grid, &mu_grid, &cfg_fast()).unwrap()
    })
}

#[test]
fn criterion_01_soliton_benchmark() {
    let domain = soliton_domain();
    let cfg = cfg_fast();

    let a = solve_action(&domain, 4.0, 1.0, &cfg).unwrap();
    assert!(a.converged);
    assert!(
        (a.action_value - 4.0 / 3.0).abs() <= 2e-3,
        "J(1) = {} vs 4/3",
        a.action_value
    );
    assert!((a.mu - 2.0).abs() <= 5e-3, "mass {} vs 2", a.mu);

    let e = solve_energy(&domain, 4.0, 2.0, &cfg).unwrap();
    assert!(e.converged);
    assert!(
        (e.energy_value + 2.0 / 3.0).abs() <= 2e-3,
        "E(2) = {} vs -2/3",
        e.energy_value
    );
    assert!((e.lambda - 1.0).abs() <= 2e-2, "lambda {} vs 1", e.lambda);

    println!(
        "criterion 01 (soliton benchmark): PASS  J={:.6} mu={:.6} E={:.6} lambda={:.6}",
        a.action_value, a.mu, e.energy_value, e.lambda
    );
}

#[test]
fn criterion_02_duality_transform() {
    let report = reference_duality();
    // |E_direct(mu) + J*(mu)| <= 1e-2 (1 + |E|) for every half-mass,
    // including the boundary-attained smallest one.
    for (i, &mu) in report.mu_grid.iter().enumerate() {
        let direct = report.energy_direct[i];
        let err = report.abs_err[i];
        assert!(
            err <= 1e-2 * (1.0 + direct.abs()),
            "mu={mu}: |E + J*| = {err} vs {}",
            1e-2 * (1.0 + direct.abs())
        );
        // Both sides near the closed form.
        assert!(
            (direct - common::energy_level_1d_p4(mu)).abs() <= 1e-2 * (1.0 + direct.abs()),
            "mu={mu}: direct level {direct} off the closed form"
        );
    }
    println!(
        "criterion 02 (duality transform): PASS  max rel err {:.3e}",
        report.max_rel_err
    );
}

#[test]
fn criterion_03_rigidity_roundtrip() {
    let domain = soliton_domain();
    let cfg = cfg_fast();
    for mu in [1.0, 2.0, 3.0] {
        let e = solve_energy(&domain, 4.0, mu, &cfg).unwrap();
        assert!(e.converged, "energy solve mu={mu}");
        let a = solve_action(&domain, 4.0, e.lambda, &cfg).unwrap();
        assert!(a.converged, "action solve lambda={}", e.lambda);
        assert!(
            (a.mu - mu).abs() <= 1e-2 * mu,
            "mu={mu}: roundtrip mass {} drifted",
            a.mu
        );
        let j_from_energy = e.energy_value + e.lambda * e.mu;
        assert!(
            (a.action_value - j_from_energy).abs() <= 1e-3 * j_from_energy.abs(),
            "mu={mu}: action {} vs {}",
            a.action_value,
            j_from_energy
        );
    }
    println!("criterion 03 (rigidity roundtrip): PASS  mu in {{1,2,3}}");
}

#[test]
fn criterion_04_derivative_matches_mass() {
    let report = reference_duality();
    let mut worst = 0.0f64;
    for row in report.derivative_table.iter().filter(|r| r.interior) {
        assert!(
            row.abs_discrepancy <= 1e-2 * row.mass,
            "lambda={}: J' = {} vs mass {}",
            row.lambda,
            row.j_prime,
            row.mass
        );
        // Oracle: both equal 2 sqrt(lambda).
        let oracle = common::mass_1d_p4(row.lambda);
        assert!(
            (row.mass - oracle).abs() <= 1e-2 * oracle,
            "lambda={}: mass {} vs oracle {oracle}",
            row.lambda,
            row.mass
        );
        worst = worst.max(row.rel_discrepancy);
    }
    println!(
        "criterion 04 (level derivative = minimizer mass): PASS  worst interior {:.3e}",
        worst
    );
}

#[test]
fn criterion_05_shape_properties() {
    let report = reference_duality();
    let ec = &report.energy_curve;
    let idx = ec.converged_indices();
    assert_eq!(idx.len(), ec.len(), "all energy samples must converge");

    // Concavity of the energy level: midpoint test on consecutive triples.
    for w in idx.windows(3) {
        let (i, j, k) = (w[0], w[1], w[2]);
        let scale = ec.values[k].abs().max(1.0);
        assert!(
            ec.values[j] >= 0.5 * (ec.values[i] + ec.values[k]) - 1e-6 * scale,
            "concavity violated at mu={}",
            ec.params[j]
        );
    }
    // E(mu)/mu strictly decreasing.
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        assert!(
            ec.values[j] / ec.params[j] < ec.values[i] / ec.params[i],
            "E/mu not strictly decreasing at mu={}",
            ec.params[j]
        );
    }

    let ac = &report.action_curve;
    let aidx = ac.converged_indices();
    assert_eq!(aidx.len(), ac.len(), "all action samples must converge");
    for &i in &aidx {
        assert!(ac.values[i] >= 0.0, "negative action level at index {i}");
        assert!(
            ac.flags[i].is_empty(),
            "flag {:?} at lambda={}",
            ac.flags[i],
            ac.params[i]
        );
    }
    for w in aidx.windows(2) {
        assert!(
            ac.values[w[1]] >= ac.values[w[0]],
            "action level not nondecreasing at lambda={}",
            ac.params[w[1]]
        );
    }
    // Concavity of h = (J/kappa)^{(p-2)/p} (slope test; exponent 1/2 at p=4).
    let kappa = 0.25;
    let hs: Vec<f64> = aidx
        .iter()
        .map(|&i| (ac.values[i] / kappa).powf(0.5))
        .collect();
    for w in (0..hs.len()).collect::<Vec<_>>().windows(3) {
        let (i, j, k) = (w[0], w[1], w[2]);
        let s1 = (hs[j] - hs[i]) / (ac.params[aidx[j]] - ac.params[aidx[i]]);
        let s2 = (hs[k] - hs[j]) / (ac.params[aidx[k]] - ac.params[aidx[j]]);
        let scale = hs[k].abs().max(1.0);
        assert!(
            s2 - s1 <= 1e-6 * scale,
            "h-concavity violated at lambda={}",
            ac.params[aidx[j]]
        );
    }
    println!("criterion 05 (level-curve shape properties): PASS  zero violations");
}

#[test]
fn criterion_06_critical_regime_guard() {
    // Mass-critical exponent in 1D (p = 6). The grid must be fine enough for
    // concentration to drive |grad u|^2 past the divergence cutoff before it
    // reaches lattice scale (a one-site spike saturates at ~4 mu / h^2).
    let domain = DiscreteDomain::interval(20.0, 12_000).unwrap();
    let cfg = SolverConfig {
        n_starts: 1,
        max_iters: 200_000,
        ..SolverConfig::default()
    };

    let critical = estimate_gn_constant(&domain, 6.0).unwrap();
    assert!(critical.k_p > 0.0 && critical.mu_n > 0.0);
    // K_6 = 4/pi^2 for this exponent; the estimate must be in range.
    let truth = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);
    assert!(
        (critical.k_p - truth).abs() <= 0.02 * truth,
        "K_6 estimate {} vs {truth}",
        critical.k_p
    );

    let above = 1.5 * critical.mu_n;
    match solve_energy(&domain, 6.0, above, &cfg) {
        Err(SolverError::Divergence { .. }) => {}
        other => panic!("mu = 1.5 mu_N must diverge, got {other:?}"),
    }

    let below = 0.5 * critical.mu_n;
    let gs = solve_energy(&domain, 6.0, below, &cfg).unwrap();
    assert!(gs.converged);
    assert!(
        gs.energy_value >= -1e-6,
        "subcritical-mass level must be nonnegative, got {}",
        gs.energy_value
    );
    println!(
        "criterion 06 (critical-regime guard): PASS  mu_N≈{:.4}, diverges above, E={:.3e} below",
        critical.mu_n, gs.energy_value
    );
}

/// Catalogue state + the probe machinery shared by criterion 7.
fn check_second_variation_suite(state: &GroundState, label: &str) {
    assert!(state.converged && state.residual <= 1e-8, "{label}: loose state");
    let bind = verify_bind_identity(state, 50, 1234).unwrap();
    assert!(
        bind.max_rel_err <= 1e-8,
        "{label}: decomposition identity error {}",
        bind.max_rel_err
    );

    // Finite-difference oracles for both forms along their curves.
    let nehari = TangentBasis::new(state, Constraint::Nehari).unwrap();
    let mass = TangentBasis::new(state, Constraint::Mass).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let domain = state.field.domain();
    for probe in 0..10 {
        let mut raw = domain.zero_field();
        for x in raw.values_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let mut v = nehari.project(&raw).unwrap();
        v.scale_in_place(1.0 / nehari_lab::grid::norm_l2(&v));
        let analytic = second_form_action(state, &v).unwrap();
        let fd = common::second_derivative_richardson(
            |t| common::action_along_curve(state, &v, t),
            1e-4,
        );
        assert!(
            (analytic - fd).abs() <= 1e-4 * analytic.abs().max(1.0),
            "{label} probe {probe}: action form {analytic} vs fd {fd}"
        );

        let mut phi = mass.project(&raw).unwrap();
        phi.scale_in_place(1.0 / nehari_lab::grid::norm_l2(&phi));
        let analytic_e = second_form_energy(state, &phi).unwrap();
        let fd_e = common::second_derivative_richardson(
            |t| common::energy_along_curve(state, &phi, t),
            1e-4,
        );
        assert!(
            (analytic_e - fd_e).abs() <= 1e-4 * analytic_e.abs().max(1.0),
            "{label} probe {probe}: energy form {analytic_e} vs fd {fd_e}"
        );
    }

    // Extremal eigenvalue comparison with the explicit constant.
    let eig_n = extremal_eigs(state, Constraint::Nehari, 1e-9).unwrap();
    let eig_m = extremal_eigs(state, Constraint::Mass, 1e-9).unwrap();
    let c1 = constant_c1(state).unwrap();
    assert!(
        eig_n >= eig_m / (1.0 + c1) - 1e-6,
        "{label}: eigen inequality failed ({eig_n} vs {eig_m}, C1 = {c1})"
    );
    println!(
        "  {label}: identity {:.2e}, eig_nehari {:.3e}, eig_mass {:.3e}, C1 {:.3}",
        bind.max_rel_err, eig_n, eig_m, c1
    );
}

#[test]
fn criterion_07_second_variation_identities() {
    let tight = SolverConfig {
        tol: 1e-10,
        n_starts: 1,
        ..SolverConfig::default()
    };

    let d1 = DiscreteDomain::interval(30.0, 1500).unwrap();
    let s_p4 = solve_action(&d1, 4.0, 1.0, &tight).unwrap();
    check_second_variation_suite(&s_p4, "1D p=4");
    let s_p3 = solve_action(&d1, 3.0, 1.0, &tight).unwrap();
    check_second_variation_suite(&s_p3, "1D p=3");

    let d2 = DiscreteDomain::rectangle(4.0, 3.0, 96, 72).unwrap();
    let s_2d = solve_action(&d2, 3.0, 1.0, &tight).unwrap();
    check_second_variation_suite(&s_2d, "2D rectangle p=3");

    println!("criterion 07 (second-variation identity suite): PASS");
}

#[test]
fn criterion_08_eigenvalue_convergence_order() {
    // 1D interval of length pi: eigenvalue 1; errors must shrink at second
    // order when the mesh halves.
    let mut orders = Vec::new();
    let mut errs = Vec::new();
    for &n in &[49usize, 99, 199] {
        let d = DiscreteDomain::interval(std::f64::consts::PI, n).unwrap();
        errs.push((lambda_omega(&d, 1e-11).unwrap() - 1.0).abs());
    }
    for w in errs.windows(2) {
        orders.push((w[0] / w[1]).log2());
    }
    // Square of side pi: eigenvalue 2.
    let mut errs2 = Vec::new();
    for &n in &[24usize, 49, 99] {
        let d = DiscreteDomain::rectangle(
            std::f64::consts::PI,
            std::f64::consts::PI,
            n,
            n,
        )
        .unwrap();
        errs2.push((lambda_omega(&d, 1e-11).unwrap() - 2.0).abs());
    }
    for w in errs2.windows(2) {
        orders.push((w[0] / w[1]).log2());
    }
    for (i, o) in orders.iter().enumerate() {
        assert!(
            (1.8..=2.2).contains(o),
            "refinement {i}: observed order {o} (errors 1D {errs:?}, 2D {errs2:?})"
        );
    }
    println!(
        "criterion 08 (spectral-bottom convergence order): PASS  orders {:?}",
        orders
    );
}

#[test]
fn criterion_09_transform_inequalities() {
    let report = reference_duality();
    let ac = &report.action_curve;
    let idx = ac.converged_indices();
    // J*(mu) as reported: -energy_via_transform.
    let jstar: Vec<f64> = report.energy_via_transform.iter().map(|v| -v).collect();

    // Pairing inequality on the full sample grid.
    for (mi, &mu) in report.mu_grid.iter().enumerate() {
        for &i in &idx {
            let lambda = ac.params[i];
            let lhs = lambda * mu;
            let rhs = ac.values[i] + jstar[mi];
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            assert!(
                lhs <= rhs + 1e-8 * scale,
                "pairing inequality failed at lambda={lambda}, mu={mu}: {lhs} vs {rhs}"
            );
        }
    }

    // Double transform stays below the curve at every sampled frequency.
    for &i in &idx {
        let lambda = ac.params[i];
        let jj = ac.values[i];
        let jstarstar = report
            .mu_grid
            .iter()
            .zip(&jstar)
            .map(|(&mu, &js)| lambda * mu - js)
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = jj.abs().max(1.0);
        assert!(
            jstarstar <= jj + 1e-8 * scale,
            "double transform exceeded the curve at lambda={lambda}: {jstarstar} vs {jj}"
        );
    }
    println!("criterion 09 (pairing and double-transform inequalities): PASS");
}

#[test]
fn criterion_10_byte_identical_reports() {
    // Two identical duality runs through the CLI must produce byte-identical
    // JSON (fixed seed, no timestamps, index-ordered merges).
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("run.conf");
    std::fs::write(
        &config_path,
        "\
domain.kind = interval
domain.extents = 30
domain.resolution = 400
problem.p = 4
problem.lambda_grid = geom:0.5:2.5:10
problem.mu_grid = 0.8,1.2,1.6
solver.seed = 20
solver.n_starts = 2
output.formats = json
",
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_nehari-lab");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_dir = tmp.path().join(format!("run{run}"));
        let status = std::process::Command::new(exe)
            .args([
                "duality",
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "duality run failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(out_dir.join("duality.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "reports must be byte-identical");
    println!(
        "criterion 10 (deterministic reports): PASS  {} bytes identical",
        outputs[0].len()
    );
}
