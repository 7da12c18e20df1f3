use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajopt_conic::*;

/// Random rows with a strictly feasible point: zero rows pass through it,
/// nonnegative and second-order rows hold it in their interior.
fn random_rows(rng: &mut ChaCha8Rng) -> (usize, Vec<Row>) {
    let n = rng.gen_range(2..6);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut rows: Vec<Row> = Vec::new();
    let mut push = |cone: RowCone, s0: f64, rng: &mut ChaCha8Rng| {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ax: f64 = coeffs.iter().zip(&x0).map(|(a, x)| a * x).sum();
        rows.push(Row { coeffs, offset: s0 - ax, cone });
    };
    for _ in 0..rng.gen_range(0..2) {
        push(RowCone::Zero, 0.0, rng);
    }
    for _ in 0..rng.gen_range(1..5) {
        let s0 = rng.gen_range(0.1..1.0);
        push(RowCone::Nonnegative, s0, rng);
    }
    for g in 0..rng.gen_range(1..3) {
        let d = rng.gen_range(2..5);
        let tail: Vec<f64> = (1..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let head = tail.iter().map(|v| v * v).sum::<f64>().sqrt() + rng.gen_range(0.1..1.0);
        push(RowCone::SecondOrder(g), head, rng);
        for v in tail {
            push(RowCone::SecondOrder(g), v, rng);
        }
    }
    (n, rows)
}

/// Assembles the rows with objective `Aᵀy` for a `y` strictly inside `K*`
/// (free on the zero block), which makes the optimum finite.
fn with_dual_interior_objective(n: usize, rows: Vec<Row>, rng: &mut ChaCha8Rng) -> ConicProgram {
    let mut program = assemble(vec![0.0; n], rows).unwrap();
    let mut y = vec![0.0; program.num_rows()];
    for (cone, r) in program.cones.ranges() {
        match cone {
            Cone::Zero(_) => r.for_each(|i| y[i] = rng.gen_range(-1.0..1.0)),
            Cone::Nonnegative(_) => r.for_each(|i| y[i] = rng.gen_range(0.1..1.0)),
            Cone::SecondOrder(_) => {
                let tail: Vec<f64> = (r.start + 1..r.end).map(|_| rng.gen_range(-1.0..1.0)).collect();
                y[r.start] = tail.iter().map(|v| v * v).sum::<f64>().sqrt() + rng.gen_range(0.1..1.0);
                for (i, v) in (r.start + 1..r.end).zip(tail) {
                    y[i] = v;
                }
            }
        }
    }
    program.objective = program.constraint_matrix.mul_t(&y);
    program
}

fn random_socp(rng: &mut ChaCha8Rng) -> ConicProgram {
    let (n, rows) = random_rows(rng);
    with_dual_interior_objective(n, rows, rng)
}

#[test]
fn twenty_random_socps_reach_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..20 {
        let p = random_socp(&mut rng);
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, Status::Optimal, "instance {i}");
        let r = kkt_residuals(&p, &s.primal, &s.dual);
        assert!(r.max() <= 1e-8, "instance {i}: {r:?}");
    }
}

#[test]
fn contradictory_rows_yield_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..10 {
        let (n, mut rows) = random_rows(&mut rng);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // aᵀx ≥ 1 together with aᵀx ≤ 0
        rows.push(Row { coeffs: a.clone(), offset: -1.0, cone: RowCone::Nonnegative });
        rows.push(Row { coeffs: a.iter().map(|v| -v).collect(), offset: 0.0, cone: RowCone::Nonnegative });
        let p = with_dual_interior_objective(n, rows, &mut rng);
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, Status::Infeasible, "instance {i}");
        let r = certificate_residual(&p, &s).expect("certificate present");
        assert!(r <= 1e-8, "instance {i}: certificate residual {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_duality_and_determinism(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_socp(&mut rng);
        let a = solve(&p, &SolverSettings::default()).unwrap();
        prop_assert_eq!(a.status, Status::Optimal);
        let dual_obj = p.objective_constant
            - p.constraint_offset.iter().zip(&a.dual).map(|(c, y)| c * y).sum::<f64>();
        prop_assert!(dual_obj <= a.objective_value + 1e-8);
        let b = solve(&p, &SolverSettings::default()).unwrap();
        prop_assert!((a.objective_value - b.objective_value).abs() <= 1e-12);
        prop_assert_eq!(a.status, b.status);
    }
}
