mod common;

use common::{hessian_fd_deviation, hessian_suite, HESSIAN_EIG_TOL, HESSIAN_FD_TOL};
use crn_uav::sca::lemma1_hessian_check;
use proptest::prelude::*;

#[test]
fn unit_triple() {
    let c = lemma1_hessian_check(1.0, 1.0, 1.0);
    assert!(c.min_eigenvalue >= -HESSIAN_EIG_TOL);
    assert!(hessian_fd_deviation(1.0, 1.0, 1.0) <= HESSIAN_FD_TOL);
}

#[test]
fn zero_snr_is_flat() {
    let c = lemma1_hessian_check(2.0, 3.0, 0.0);
    assert_eq!(c.hessian, [[0.0, 0.0], [0.0, 0.0]]);
    assert_eq!(c.min_eigenvalue, 0.0);
}

#[test]
fn ten_thousand_triples() {
    let (psd, fd) = hessian_suite(17, 10_000);
    assert!(psd.pass, "{}", psd.detail);
    assert!(fd.pass, "{}", fd.detail);
}

proptest! {
    #[test]
    fn hessian_is_psd(x in 1e-2..1e3f64, y in 1e-2..1e7f64, a in 1e-3..1e7f64) {
        prop_assert!(lemma1_hessian_check(x, y, a).psd(HESSIAN_EIG_TOL));
        prop_assert!(hessian_fd_deviation(x, y, a) <= HESSIAN_FD_TOL);
    }
}
