use crn_uav::channel::LosModel;
use crn_uav::driver::{optimize_with, DriverOptions, Scheme, MONOTONE_TOL};
use crn_uav::model::{feasibility_audit, init_solution, objective, Scenario};
use crn_uav::subproblems::{solve_horizontal, solve_power, solve_scheduling, solve_vertical, AUDIT_TOL};
use proptest::prelude::*;

fn small(users: Vec<[f64; 2]>, primary: [f64; 2], gamma_db: f64) -> Scenario {
    Scenario::table2()
        .modified(|f| {
            f.users_m = users;
            f.primary_m = primary;
            f.start_m = [150.0, 150.0, 40.0];
            f.horizon_s = 12.0;
            f.gamma_db = gamma_db;
        })
        .unwrap()
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..300.0f64, 0.0..300.0f64).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn no_block_loses_rate(
        users in prop::collection::vec(point(), 1..=3),
        primary in point(),
        gamma_db in -125.0..-100.0f64,
    ) {
        let sc = small(users, primary, gamma_db);
        let mut dv = init_solution(&sc).unwrap();
        prop_assert!(feasibility_audit(&dv, &sc, LosModel::Probabilistic, AUDIT_TOL).feasible());
        let mut prev = objective(&dv, &sc).unwrap();
        for round in 0..2 {
            for block in 0..4 {
                let out = match block {
                    0 => solve_scheduling(&dv, &sc, LosModel::Probabilistic),
                    1 => solve_power(&dv, &sc, LosModel::Probabilistic),
                    2 => solve_horizontal(&dv, &sc, LosModel::Probabilistic),
                    _ => solve_vertical(&dv, &sc, LosModel::Probabilistic),
                }
                .unwrap();
                dv = out.dv;
                let now = objective(&dv, &sc).unwrap();
                prop_assert!(now >= prev - MONOTONE_TOL, "round {round} block {block}: {now} < {prev}");
                let audit = feasibility_audit(&dv, &sc, LosModel::Probabilistic, AUDIT_TOL);
                prop_assert!(audit.feasible(), "round {round} block {block}: {:?}", audit.violations().collect::<Vec<_>>());
                prev = now;
            }
        }
    }
}

#[test]
fn every_scheme_is_monotone_on_a_small_instance() {
    let sc = small(vec![[40.0, 60.0], [260.0, 90.0], [120.0, 270.0]], [280.0, 280.0], -121.0);
    for scheme in Scheme::ALL {
        let rep = optimize_with(&sc, scheme.into(), &DriverOptions::default()).unwrap();
        let seq = rep.monotone_sequence();
        assert!(seq.windows(2).all(|w| w[1] >= w[0] - MONOTONE_TOL), "{scheme}: {seq:?}");
        assert!(rep.audit.feasible(), "{scheme}: {:?}", rep.diagnostic);
        assert!(rep.records.len() <= sc.max_outer_iters);
    }
}

#[test]
fn runs_are_deterministic() {
    let sc = small(vec![[40.0, 60.0], [260.0, 90.0]], [280.0, 280.0], -121.0);
    let opts = DriverOptions {
        max_outer_iters: Some(3),
        ..DriverOptions::default()
    };
    let a = optimize_with(&sc, Scheme::Proposed.into(), &opts).unwrap();
    let b = optimize_with(&sc, Scheme::Proposed.into(), &opts).unwrap();
    assert_eq!(a.solution, b.solution);
    assert_eq!(a.objective().to_bits(), b.objective().to_bits());
}
