use nehari_lab::grid::{DiscreteDomain, norm_l2, norm_lp_pow, grad_norm_sq};
use nehari_lab::solve::{solve_action_warm, SolverConfig};
use nehari_lab::functional::estimate_gn_constant;

fn main() {
    let d = DiscreteDomain::interval(20.0, 12_000).unwrap();
    let bump = d.field_from_fn(|x| {
        let r = x[0] - 10.0;
        (-r * r / (2.0 * (20.0f64 / 6.0).powi(2))).exp()
    }).unwrap();
    let cfg = SolverConfig { tol: 1e-9, max_iters: 30_000, n_starts: 1, ..Default::default() };
    let t0 = std::time::Instant::now();
    match solve_action_warm(&d, 6.0, 1.0, &bump, &cfg) {
        Ok(gs) => {
            println!("converged {} iters {} residual {:.3e} in {:?}", gs.converged, gs.iterations, gs.residual, t0.elapsed());
            let u = &gs.field;
            let i6 = norm_lp_pow(u, 6.0).unwrap();
            let l2 = norm_l2(u);
            let gn = grad_norm_sq(u);
            println!("quotient at state: {}", i6 / (l2.powi(4) * gn));
            println!("max |u| {} mu {}", u.max_abs(), gs.mu);
        }
        Err(e) => println!("ERR {e:?} in {:?}", t0.elapsed()),
    }
    let t1 = std::time::Instant::now();
    let est = estimate_gn_constant(&d, 6.0);
    println!("estimate: {est:?} in {:?}", t1.elapsed());
}
