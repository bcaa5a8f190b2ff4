mod common;

use common::{dominance, rng, surrogate_case, tangency, TANGENCY_TOL};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_surrogate_touches_its_target(seed in any::<u64>()) {
        let case = surrogate_case(&mut rng(seed));
        for (name, dev) in tangency(&case) {
            prop_assert!(dev <= TANGENCY_TOL, "{name}: {dev:e} at {case:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lower_bounds_hold_everywhere(seed in any::<u64>()) {
        let case = surrogate_case(&mut rng(seed));
        for (name, margin) in dominance(&case) {
            prop_assert!(margin >= -1e-12, "{name}: {margin:e} at {case:?}");
        }
    }

    #[test]
    fn f7_is_an_upper_bound(z_k in 30.0..100.0f64, z in 0.0..150.0f64, s in 0.0..600.0f64) {
        let lin = crn_uav::sca::f7(z, z_k, s).unwrap().value;
        let exact = if s == 0.0 { std::f64::consts::FRAC_PI_2 } else { (z / s).atan() };
        prop_assert!(lin >= exact - 1e-12);
    }
}
