use proptest::prelude::*;

use stablefluct::identities::{beta_cdf, closest_reach_radial_cdf, expected_exit_time, stationary_radial_moment, survival_probability};
use stablefluct::montecarlo::{estimate, ks_statistic, Experiment, Moments, SeedSpec};
use stablefluct::numerics::special::reg_inc_beta;
use stablefluct::{kelvin_invert, Point, StableParams};

fn params(d: usize, a: f64) -> StableParams {
    StableParams::new(d, a).unwrap()
}

proptest! {
    #[test]
    fn kelvin_is_an_involution(c in prop::collection::vec(-5.0..5.0f64, 2..5)) {
        let x = Point::new(c);
        prop_assume!(x.norm() > 1e-3);
        let back = kelvin_invert(&kelvin_invert(&x).unwrap()).unwrap();
        prop_assert!(back.dist(&x) <= 1e-12 * x.norm());
    }

    #[test]
    fn survival_is_a_probability_increasing_in_distance(d in 2usize..6, a in 0.05..1.95f64, x1 in 1.01..10.0f64, dx in 0.01..5.0f64) {
        let p = params(d, a);
        let s1 = survival_probability(&p, &Point::on_axis(d, x1), 1.0).unwrap();
        let s2 = survival_probability(&p, &Point::on_axis(d, x1 + dx), 1.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&s1));
        prop_assert!(s2 >= s1 - 1e-14);
    }

    #[test]
    fn survival_is_scale_invariant(a in 0.1..1.9f64, x in 1.1..5.0f64, c in 0.1..10.0f64) {
        let p = params(3, a);
        let s = survival_probability(&p, &Point::on_axis(3, x), 1.0).unwrap();
        let sc = survival_probability(&p, &Point::on_axis(3, c * x), c).unwrap();
        prop_assert!((s - sc).abs() < 1e-12);
    }

    #[test]
    fn closest_reach_cdf_is_a_cdf(d in 2usize..5, a in 0.1..1.9f64, r1 in 0.0..1.0f64, r2 in 0.0..1.0f64) {
        let p = params(d, a);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let f_lo = closest_reach_radial_cdf(&p, lo.max(1e-9)).unwrap();
        let f_hi = closest_reach_radial_cdf(&p, hi.max(1e-9)).unwrap();
        prop_assert!(f_lo <= f_hi + 1e-14);
        prop_assert!((closest_reach_radial_cdf(&p, 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_symmetry(x in 0.0..1.0f64, a in 0.05..20.0f64, b in 0.05..20.0f64) {
        let l = reg_inc_beta(x, a, b).unwrap();
        let r = 1.0 - reg_inc_beta(1.0 - x, b, a).unwrap();
        prop_assert!((l - r).abs() < 1e-12, "{l} {r}");
        prop_assert!((beta_cdf(x, a, b).unwrap() - l).abs() < 1e-15);
    }

    #[test]
    fn stationary_moments_decrease(d in 2usize..6, a in 0.1..1.9f64, g in 0.1..4.0f64) {
        let p = params(d, a);
        let m1 = stationary_radial_moment(&p, g).unwrap();
        let m2 = stationary_radial_moment(&p, g + 0.5).unwrap();
        prop_assert!(m1 > 0.0 && m1 < 1.0);
        prop_assert!(m2 < m1);
    }

    #[test]
    fn exit_time_is_maximal_at_centre(a in 0.2..1.8f64, x in 0.0..0.99f64) {
        let p = params(2, a);
        let centre = expected_exit_time(&p, &Point::zeros(2), 1.0).unwrap();
        let off = expected_exit_time(&p, &Point::on_axis(2, x), 1.0).unwrap();
        prop_assert!(off <= centre * (1.0 + 1e-12));
    }

    #[test]
    fn moments_merge_matches_single_pass(xs in prop::collection::vec(-100.0..100.0f64, 2..60), split in 0usize..60) {
        let split = split.min(xs.len());
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..split].iter().for_each(|&x| a.push(x));
        xs[split..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(&b);
        prop_assert_eq!(merged.n, whole.n);
        prop_assert!((merged.mean - whole.mean).abs() < 1e-9);
        prop_assert!((merged.stderr() - whole.stderr()).abs() < 1e-9);
    }

    #[test]
    fn seed_streams_are_distinct(master in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(SeedSpec::new(master, i).stream_seed(), SeedSpec::new(master, j).stream_seed());
    }

    #[test]
    fn ks_of_uniform_grid_is_small(n in 10usize..500) {
        let xs: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        let ks = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        prop_assert!(ks <= 0.5 / n as f64 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn estimate_is_reproducible(seed in any::<u64>(), workers in 1usize..4) {
        let p = params(2, 1.0);
        let exp = Experiment::FirstEntrancePosition { x0: Point::new(vec![2.0, 0.0]), r: 1.0, dt: None };
        let a = estimate(&p, &exp, 150, seed, workers).unwrap();
        let b = estimate(&p, &exp, 150, seed, workers).unwrap();
        prop_assert_eq!(a, b);
    }
}
