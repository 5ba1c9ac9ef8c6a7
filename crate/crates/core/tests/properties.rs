//! Property tests for the invariants that hold on arbitrary inputs.

use ndarray::{Array1, Array2};
use poishp::evaluation::rmse;
use poishp::geometry::{feature_map, sample_hyperplane, sample_php, PhpMode};
use poishp::inference::{ess, make_schedule, ScheduleShape};
use poishp::rng::{self, tag};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_planes_satisfy_invariants(
        seed in any::<u64>(),
        p in 1usize..8,
        l in 0.05f64..10.0,
    ) {
        let mut r = rng::stream(seed, &[tag::DATA]);
        let h = sample_hyperplane(p, l, &mut r).unwrap();
        let norm = h.normal().dot(&h.normal()).sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-10);
        prop_assert!(h.offset() > 0.0 && h.offset() <= l);
    }

    #[test]
    fn feature_map_is_nonnegative_deterministic_and_permutation_equivariant(
        seed in any::<u64>(),
        n in 1usize..12,
        p in 1usize..5,
        m in 1usize..6,
    ) {
        let mut r = rng::stream(seed, &[tag::DATA]);
        let planes = sample_php(p, 1.0, PhpMode::FixedCount(m), &mut r).unwrap();
        let x = Array2::from_shape_fn((n, p), |_| r.random_range(-2.0..2.0));

        let z1 = feature_map(x.view(), &planes).unwrap();
        let z2 = feature_map(x.view(), &planes).unwrap();
        prop_assert_eq!(&z1, &z2);
        for i in 0..n {
            prop_assert_eq!(z1[(i, 0)], 1.0);
            for j in 0..=m {
                prop_assert!(z1[(i, j)] >= 0.0);
            }
        }

        // Reversing the plane list permutes the feature columns the same way.
        let reversed = poishp::HyperplaneSet::new(
            p,
            1.0,
            planes.planes().iter().rev().cloned().collect(),
        )
        .unwrap();
        let zr = feature_map(x.view(), &reversed).unwrap();
        for i in 0..n {
            for j in 1..=m {
                prop_assert_eq!(zr[(i, j)], z1[(i, m + 1 - j)]);
            }
        }
    }

    #[test]
    fn rmse_scale_covariance(
        values in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..20),
        scale in -50.0f64..50.0,
    ) {
        let predictions: Vec<f64> = values.iter().map(|(p, _)| *p).collect();
        let y = Array1::from_iter(values.iter().map(|(_, t)| *t));
        let base = rmse(&predictions, y.view()).unwrap();
        let scaled_pred: Vec<f64> = predictions.iter().map(|p| p * scale).collect();
        let scaled_y = &y * scale;
        let scaled = rmse(&scaled_pred, scaled_y.view()).unwrap();
        prop_assert!((scaled - scale.abs() * base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn ess_lies_between_one_and_count(
        weights in proptest::collection::vec(-30.0f64..30.0, 1..40),
    ) {
        let value = ess(&weights).unwrap();
        let l = weights.len() as f64;
        prop_assert!(value >= 1.0 - 1e-9 && value <= l + 1e-9);
    }

    #[test]
    fn schedules_are_valid_or_cleanly_rejected(
        r_steps in 1usize..200,
        rate in 0.1f64..8.0,
    ) {
        for shape in [ScheduleShape::Linear, ScheduleShape::Geometric(rate)] {
            // Extreme (rate, R) pairs saturate f64 and must be rejected as
            // invalid rather than producing a non-increasing schedule.
            match make_schedule(r_steps, shape) {
                Ok(s) => {
                    let powers = s.powers();
                    prop_assert_eq!(powers[0], 0.0);
                    prop_assert_eq!(powers[powers.len() - 1], 1.0);
                    for w in powers.windows(2) {
                        prop_assert!(w[0] < w[1]);
                    }
                }
                Err(e) => {
                    prop_assert!(matches!(e, poishp::Error::InvalidParameter(_)));
                    prop_assert!(matches!(shape, ScheduleShape::Geometric(_)));
                }
            }
        }
    }
}
