use dmlab_core::grid::{forward_transform, inverse_transform, propagate, random_smooth_field};
use dmlab_core::{make_grid, ComplexField, Grid};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(grid: &Grid, seed: u64, bandwidth: f64) -> ComplexField {
    random_smooth_field(grid, bandwidth, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn grid() -> Grid {
    make_grid(256, 32.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parseval(seed in any::<u64>(), bw in 0.5f64..6.0) {
        let f = field(&grid(), seed, bw);
        let fh = forward_transform(&f).unwrap();
        prop_assert!((fh.norm() - f.norm()).abs() <= 1e-12 * f.norm());
        let back = inverse_transform(&fh).unwrap();
        prop_assert!(back.max_diff(&f).unwrap() <= 1e-12 * f.norm());
    }

    #[test]
    fn propagator_is_unitary(seed in any::<u64>(), r in -5.0f64..5.0) {
        let f = field(&grid(), seed, 3.0);
        let g = propagate(&f, r);
        prop_assert!((g.norm() - f.norm()).abs() <= 1e-12 * f.norm());
    }

    #[test]
    fn group_law(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = field(&grid(), seed, 3.0);
        let two = propagate(&propagate(&f, a), b);
        let one = propagate(&f, a + b);
        prop_assert!(two.max_diff(&one).unwrap() <= 1e-12 * f.norm());
    }

    #[test]
    fn conjugation_symmetry(seed in any::<u64>(), r in -3.0f64..3.0) {
        let f = field(&grid(), seed, 3.0);
        let lhs = propagate(&f.conj(), r);
        let rhs = propagate(&f, -r).conj();
        prop_assert!(lhs.max_diff(&rhs).unwrap() <= 1e-12 * f.norm());
    }

    #[test]
    fn inverse_propagation(seed in any::<u64>(), r in -3.0f64..3.0) {
        let f = field(&grid(), seed, 3.0);
        prop_assert!(propagate(&propagate(&f, r), -r).max_diff(&f).unwrap() <= 1e-12 * f.norm());
    }
}
