use nalgebra::Vector3;
use trajopt_ocp::*;
use trajopt_scp::*;
use trajopt_vehicles::*;

fn quad_scvx(max_iters: usize) -> ScvxConfig {
    ScvxConfig { lambda: 100.0, eta_init: 0.5, beta_sh: 4.0, eps: 0.0, eps_r: 0.0, max_iters, ..Default::default() }
}

fn quad_gusto(max_iters: usize) -> GustoConfig {
    GustoConfig {
        lambda0: 1e3,
        lambda_max: 1e10,
        penalty: PenaltyKind::Hinge,
        eps: 0.0,
        eps_r: 0.0,
        max_iters,
        ..Default::default()
    }
}

fn solve_quad(algo: Algorithm, max_iters: usize) -> (Quadrotor, ScpReport) {
    let quad = Quadrotor::new(QuadrotorParams::default()).unwrap();
    let guess = quadrotor_guess(&quad.params, TimeGrid::new(30).unwrap()).unwrap();
    let sm = make_scaling(&quad.scaling_bounds()).unwrap();
    let rep = match algo {
        Algorithm::Scvx => scvx::run(&quad, &guess, &quad_scvx(max_iters), &sm, Scheme::Foh),
        Algorithm::Gusto => gusto::run(&quad, &guess, &quad_gusto(max_iters), &sm, Scheme::Foh),
    }
    .unwrap();
    (quad, rep)
}

fn max_scaled_defect(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    let sm = make_scaling(&ocp.scaling_bounds()).unwrap();
    defects(ocp, it, Scheme::Foh).unwrap().max_scaled_defect(&sm.sx)
}

fn worst_node_path(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    (0..it.len()).map(|k| ocp.path(k, &it.x[k], &it.u[k], &it.p).max()).fold(f64::NEG_INFINITY, f64::max)
}

fn running(ocp: &dyn Ocp, it: &TrajectoryIterate) -> f64 {
    let l: Vec<f64> = (0..it.len()).map(|k| running_cost(ocp, &it.x[k], &it.u[k], &it.p)).collect();
    trapz(&l, it.grid.dt()).unwrap()
}

fn check_quad_solution(quad: &Quadrotor, rep: &ScpReport) {
    let it = &rep.trajectory;
    assert!(max_scaled_defect(quad, it) < 1e-6);
    assert!(worst_node_path(quad, it) < 1e-6);
    for u in &it.u {
        let a = Vector3::new(u[0], u[1], u[2]).norm();
        assert!((a - u[3]).abs() < 1e-6, "|a| = {a}, sigma = {}", u[3]);
    }
    assert!((it.p[0] - quad.params.tf_max).abs() < 1e-3, "tf = {}", it.p[0]);
}

#[test]
fn quadrotor_fixed_iteration_runs() {
    let (quad, scvx) = solve_quad(Algorithm::Scvx, 15);
    assert_eq!(scvx.iterations.len(), 15);
    assert_eq!(scvx.outcome, Outcome::MaxIterations);
    assert!(scvx.virtual_norm.unwrap() < 1e-7);
    check_quad_solution(&quad, &scvx);

    let (_, gusto) = solve_quad(Algorithm::Gusto, 15);
    assert_eq!(gusto.iterations.len(), 15);
    let last = gusto.iterations.last().unwrap();
    assert!(last.lambda <= 1e10);
    assert_eq!(last.state_violated, Some(false));
    check_quad_solution(&quad, &gusto);

    let (js, jg) = (running(&quad, &scvx.trajectory), running(&quad, &gusto.trajectory));
    assert!((js - jg).abs() <= 0.01 * js.max(jg), "{js} vs {jg}");
}

#[test]
fn larger_penalty_weight_does_not_raise_virtual_control() {
    let quad = Quadrotor::new(QuadrotorParams::default()).unwrap();
    let guess = quadrotor_guess(&quad.params, TimeGrid::new(30).unwrap()).unwrap();
    let sm = make_scaling(&quad.scaling_bounds()).unwrap();
    let base = ScvxConfig { lambda: 100.0, eta_init: 0.5, beta_sh: 4.0, ..Default::default() };
    let lo = scvx::run(&quad, &guess, &base, &sm, Scheme::Foh).unwrap();
    let hi = scvx::run(&quad, &guess, &ScvxConfig { lambda: 1000.0, ..base }, &sm, Scheme::Foh).unwrap();
    assert_eq!(lo.outcome, Outcome::Converged);
    assert_eq!(hi.outcome, Outcome::Converged);
    let (vl, vh) = (lo.virtual_norm.unwrap(), hi.virtual_norm.unwrap());
    assert!(vh <= vl.max(1e-9), "{vh} > {vl}");
}

fn solve_freeflyer(algo: Algorithm, eps_iss: f64) -> (FreeFlyer, ScpReport) {
    let grid = TimeGrid::new(30).unwrap();
    let params = FreeFlyerParams { eps_iss, ..Default::default() };
    let ff = FreeFlyer::new(params, grid.clone()).unwrap();
    let guess = freeflyer_guess(&ff, grid).unwrap();
    let sm = make_scaling(&ff.scaling_bounds()).unwrap();
    let rep = match algo {
        Algorithm::Scvx => {
            let cfg = ScvxConfig { lambda: 10.0, eta_init: 1.0, max_iters: 15, ..Default::default() };
            scvx::run(&ff, &guess, &cfg, &sm, Scheme::Foh)
        }
        Algorithm::Gusto => {
            let cfg = GustoConfig { lambda0: 100.0, lambda_max: 1e10, penalty: PenaltyKind::Hinge, max_iters: 15, ..Default::default() };
            gusto::run(&ff, &guess, &cfg, &sm, Scheme::Foh)
        }
    }
    .unwrap();
    (ff, rep)
}

fn check_freeflyer_solution(ff: &FreeFlyer, rep: &ScpReport) {
    assert_eq!(rep.outcome, Outcome::Converged, "{:?}", rep.algorithm);
    let it = &rep.trajectory;
    assert!(max_scaled_defect(ff, it) < 1e-6);
    for x in &it.x {
        assert!(ff.params.sdf(&Vector3::new(x[0], x[1], x[2])) >= -1e-6);
    }
    for s in defects(ff, it, Scheme::Foh).unwrap().samples {
        for x in s.x {
            assert!((Vector3::new(x[6], x[7], x[8]).norm_squared() + x[9] * x[9] - 1.0).abs() < 2e-6);
        }
    }
    // the maximizing room's slack is pulled up to its SDF
    for (k, d) in ff.exact_slacks(it).iter().enumerate() {
        let (i, &best) = d.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!(it.p[ff.slack_index(k, i)] >= best - 1e-4, "node {k}: {} vs {best}", it.p[ff.slack_index(k, i)]);
    }
}

#[test]
fn freeflyer_converges_with_both_loops() {
    let (ff, scvx) = solve_freeflyer(Algorithm::Scvx, 1e-4);
    check_freeflyer_solution(&ff, &scvx);
    let (_, gusto) = solve_freeflyer(Algorithm::Gusto, 1e-4);
    check_freeflyer_solution(&ff, &gusto);
    let (js, jg) = (running(&ff, &scvx.trajectory), running(&ff, &gusto.trajectory));
    assert!((js - jg).abs() <= 0.01 * js.max(jg), "{js} vs {jg}");
}

#[test]
fn slack_terminal_cost_improves_control_effort() {
    let (ff, with) = solve_freeflyer(Algorithm::Scvx, 1e-4);
    let (ff0, without) = solve_freeflyer(Algorithm::Scvx, 0.0);
    assert_eq!(without.outcome, Outcome::Converged);
    let (j, j0) = (running(&ff, &with.trajectory), running(&ff0, &without.trajectory));
    assert!(j0 >= j, "{j0} < {j}");
}
