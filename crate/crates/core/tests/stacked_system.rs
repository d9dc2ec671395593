//! Solving segments one after another must agree with running the same
//! engine on the explicitly stacked single-interval system.

mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use samdde::{SamConfig, SamMethod};

use common::stacked_equivalence_defect;

#[test]
fn three_scalar_segments_case_one() {
    let cfg = SamConfig::for_method(SamMethod::Rk4, 2);
    for seed in 0..5 {
        let d = stacked_equivalence_defect(seed, 1, 3, 32.0 * PI, &cfg);
        assert!(d <= 1e-12, "seed {seed}: {d:e}");
    }
}

#[test]
fn three_scalar_segments_case_two() {
    let cfg = SamConfig::for_method(SamMethod::Rk4, 2);
    for seed in 0..5 {
        let d = stacked_equivalence_defect(seed, 1, 3, 100.0, &cfg);
        assert!(d <= 1e-12, "seed {seed}: {d:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn stacked_matches_sequential(
        seed in any::<u64>(),
        dim in 1usize..=2,
        segments in 1usize..=3,
        method in prop_oneof![Just(SamMethod::Rk2), Just(SamMethod::Rk3), Just(SamMethod::Rk4)],
        omega in prop_oneof![Just(32.0 * PI), Just(64.0 * PI), Just(100.0), Just(150.0)],
        n in prop_oneof![Just(1usize), Just(2)],
    ) {
        let cfg = SamConfig::for_method(method, n);
        let d = stacked_equivalence_defect(seed, dim, segments, omega, &cfg);
        prop_assert!(d <= 1e-12, "defect {:e}", d);
    }
}
