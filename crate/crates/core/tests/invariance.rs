//! The test is unchanged when `G` is replaced by `PG`, when every
//! observation `y(t)` is replaced by `A(t) y(t)`, and when curves are
//! reordered within a group.

mod common;

use common::{random_g, rel, rng, well_conditioned};
use mfglht::glht::{run_test, TestOptions, TestReport};
use mfglht::oracle::random_sample_set;
use mfglht::{MfdSample, SampleSet};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const TOL: f64 = 1e-8;

fn assert_same(a: &TestReport, b: &TestReport) -> Result<(), TestCaseError> {
    prop_assert!(rel(a.t_n, b.t_n) < TOL, "T_n {} vs {}", a.t_n, b.t_n);
    prop_assert!(rel(a.c_n, b.c_n) < TOL, "c_n {} vs {}", a.c_n, b.c_n);
    prop_assert!(rel(a.p_value, b.p_value) < TOL, "p {} vs {}", a.p_value, b.p_value);
    Ok(())
}

fn instance(seed: u64) -> (SampleSet, nalgebra::DMatrix<f64>) {
    let mut r = rng(seed ^ 0x51);
    let k = r.random_range(2..=4);
    let p = r.random_range(1..=3);
    let m = r.random_range(5..=15);
    let sizes: Vec<usize> = (0..k).map(|_| r.random_range(5..=12)).collect();
    let q = r.random_range(1..k);
    let g = random_g(&mut r, q, k);
    (random_sample_set(seed, p, m, &sizes).unwrap(), g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn coefficient_matrix_left_multiplication(seed in any::<u64>()) {
        let (set, g) = instance(seed);
        let mut r = rng(seed ^ 0xA1);
        let pmat = well_conditioned(&mut r, g.nrows(), 0.3);
        let opts = TestOptions::default();
        let base = run_test(&set, &g, &opts).unwrap();
        let moved = run_test(&set, &(&pmat * &g), &opts).unwrap();
        assert_same(&base, &moved)?;
    }

    #[test]
    fn pointwise_component_transform(seed in any::<u64>()) {
        let (set, g) = instance(seed);
        let mut r = rng(seed ^ 0xB2);
        let (p, m) = (set.p(), set.grid().len());
        let maps: Vec<_> = (0..m).map(|_| well_conditioned(&mut r, p, 0.3)).collect();
        let groups: Vec<MfdSample> = set
            .groups()
            .iter()
            .map(|g| {
                let mut g = g.clone();
                g.map_points(|t, y| {
                    let v = &maps[t] * nalgebra::DVector::from_column_slice(y);
                    y.copy_from_slice(v.as_slice());
                });
                g
            })
            .collect();
        let moved = SampleSet::new(set.grid().clone(), groups).unwrap();
        let opts = TestOptions::default();
        assert_same(&run_test(&set, &g, &opts).unwrap(), &run_test(&moved, &g, &opts).unwrap())?;
    }

    #[test]
    fn curve_order_within_groups(seed in any::<u64>()) {
        let (set, g) = instance(seed);
        let mut r = rng(seed ^ 0xC3);
        let groups: Vec<MfdSample> = set
            .groups()
            .iter()
            .map(|g| {
                let mut order: Vec<usize> = (0..g.n()).collect();
                order.shuffle(&mut r);
                let values = order.iter().flat_map(|&i| g.curve(i).to_vec()).collect();
                MfdSample::new(g.group_id(), g.p(), g.m(), values).unwrap()
            })
            .collect();
        let moved = SampleSet::new(set.grid().clone(), groups).unwrap();
        let opts = TestOptions::default();
        assert_same(&run_test(&set, &g, &opts).unwrap(), &run_test(&moved, &g, &opts).unwrap())?;
    }
}
