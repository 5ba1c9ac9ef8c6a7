//! Statistical contracts of the geometry samplers: uniformity of the
//! directional mark, the offset law, and the superposition/restriction
//! behavior of realization counts.

mod common;

use poishp::geometry::{
    restrict, sample_hyperplane, sample_php, sample_unit_normal, superpose, PhpMode, Slab,
};
use poishp::rng::{self, tag};

#[test]
fn directions_uniform_on_the_circle() {
    let mut r = rng::stream(101, &[tag::DATA]);
    let draws = 100_000;
    let bins = 36;
    let mut counts = vec![0.0; bins];
    for _ in 0..draws {
        let v = sample_unit_normal(2, &mut r).unwrap();
        let mut angle = v[1].atan2(v[0]);
        if angle < 0.0 {
            angle += 2.0 * std::f64::consts::PI;
        }
        let k = ((angle / (2.0 * std::f64::consts::PI) * bins as f64) as usize).min(bins - 1);
        counts[k] += 1.0;
    }
    let expected = vec![draws as f64 / bins as f64; bins];
    let p = common::chi_square_p_value(&counts, &expected);
    assert!(p > 0.01, "angle histogram p-value {p}");
}

#[test]
fn offsets_follow_uniform_law() {
    let mut r = rng::stream(102, &[tag::DATA]);
    let mut offsets: Vec<f64> = (0..100_000)
        .map(|_| sample_hyperplane(3, 1.0, &mut r).unwrap().offset())
        .collect();
    let p = common::ks_uniform_p_value(&mut offsets);
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn offsets_respect_domain_radius() {
    let mut r = rng::stream(103, &[tag::DATA]);
    for _ in 0..10_000 {
        let h = sample_hyperplane(2, 2.0, &mut r).unwrap();
        assert!(h.offset() > 0.0 && h.offset() < 2.0);
    }
}

#[test]
fn poisson_mode_count_mean() {
    let mut r = rng::stream(104, &[tag::DATA]);
    let trials = 10_000;
    let mut total = 0usize;
    for _ in 0..trials {
        total += sample_php(2, 1.0, PhpMode::PoissonIntensity(40.0), &mut r)
            .unwrap()
            .len();
    }
    let mean = total as f64 / trials as f64;
    // 3-sigma band for the sample mean of Poisson(40) over 1e4 draws.
    assert!((mean - 40.0).abs() < 0.19, "count mean {mean}");
}

#[test]
fn superposition_of_split_intensities_is_poisson() {
    // Four independent Poisson(10) realizations merged: counts must fit
    // Poisson(40).
    let mut r = rng::stream(105, &[tag::DATA]);
    let trials = 10_000;
    let mut counts = Vec::with_capacity(trials);
    for _ in 0..trials {
        let parts: Vec<_> = (0..4)
            .map(|_| sample_php(2, 1.0, PhpMode::PoissonIntensity(10.0), &mut r).unwrap())
            .collect();
        counts.push(superpose(&parts).unwrap().len());
    }
    let p = common::poisson_gof_p_value(&counts, 40.0);
    assert!(p > 0.01, "merged counts p-value {p}");
}

#[test]
fn restriction_thins_the_intensity() {
    // In p = 1 the parameter point of a plane is +/-offset, each sign with
    // probability 1/2, so the slab (0.2, 0.7] carries parameter measure
    // fraction q = 0.25 and restricted counts follow Poisson(q * 40).
    let mut r = rng::stream(106, &[tag::DATA]);
    let slab = Slab {
        axis: 0,
        lower: 0.2,
        upper: 0.7,
        include_upper: false,
    };
    let trials = 10_000;
    let mut counts = Vec::with_capacity(trials);
    for _ in 0..trials {
        let set = sample_php(1, 1.0, PhpMode::PoissonIntensity(40.0), &mut r).unwrap();
        counts.push(restrict(&set, &slab).unwrap().len());
    }
    let p = common::poisson_gof_p_value(&counts, 10.0);
    assert!(p > 0.01, "restricted counts p-value {p}");
}

#[test]
fn restriction_counts_on_disjoint_slabs_uncorrelated() {
    let mut r = rng::stream(107, &[tag::DATA]);
    let left = Slab {
        axis: 0,
        lower: -0.5,
        upper: 0.0,
        include_upper: false,
    };
    let right = Slab {
        axis: 0,
        lower: 0.0,
        upper: 0.5,
        include_upper: false,
    };
    let trials = 10_000;
    let mut a = Vec::with_capacity(trials);
    let mut b = Vec::with_capacity(trials);
    for _ in 0..trials {
        let set = sample_php(2, 1.0, PhpMode::PoissonIntensity(30.0), &mut r).unwrap();
        a.push(restrict(&set, &left).unwrap().len() as f64);
        b.push(restrict(&set, &right).unwrap().len() as f64);
    }
    let corr = common::sample_correlation(&a, &b);
    assert!(corr.abs() < 0.05, "slab count correlation {corr}");
}
