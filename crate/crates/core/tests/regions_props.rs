use gfi_core::binom_np::{
    run_np_sampler, solution_set, NpSamplerConfig, UniformConfig, DEFAULT_EPS2,
};
use gfi_core::numerics::{sample_binomial, seeded, SpdMatrix};
use gfi_core::regions::{
    ball_region, belief_plaus_boxes, central_interval, euclidean_ball, fm_distance, frobenius_norm,
    representatives, stein_loss, BoxFit, CovRegion, MatrixMetric,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spd_from(entries: &[f64], d: usize) -> SpdMatrix {
    let b = DMatrix::from_column_slice(d, d, &entries[..d * d]);
    SpdMatrix::new(&b * b.transpose() + DMatrix::identity(d, d) * 0.1).unwrap()
}

fn spd_pair() -> impl Strategy<Value = (SpdMatrix, SpdMatrix)> {
    (1usize..5).prop_flat_map(|d| {
        (
            prop::collection::vec(-2.0f64..2.0, d * d),
            prop::collection::vec(-2.0f64..2.0, d * d),
        )
            .prop_map(move |(a, b)| (spd_from(&a, d), spd_from(&b, d)))
    })
}

const METRICS: [MatrixMetric; 4] = [
    MatrixMetric::Fm,
    MatrixMetric::Stein,
    MatrixMetric::Spectral,
    MatrixMetric::Frobenius,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distances_vanish_on_the_diagonal_and_are_nonnegative((m, n) in spd_pair()) {
        for metric in METRICS {
            prop_assert!(metric.dist(&m, &m).unwrap().abs() < 1e-9);
            prop_assert!(metric.dist(&m, &n).unwrap() >= 0.0);
        }
    }

    #[test]
    fn symmetric_metrics((m, n) in spd_pair()) {
        let a = fm_distance(&m, &n).unwrap();
        let b = fm_distance(&n, &m).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        for metric in [MatrixMetric::Spectral, MatrixMetric::Frobenius] {
            prop_assert!((metric.dist(&m, &n).unwrap() - metric.dist(&n, &m).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn frobenius_distance_separates((m, n) in spd_pair()) {
        let d = frobenius_norm(&(m.matrix() - n.matrix()));
        prop_assert_eq!(d == 0.0, m == n);
    }

    #[test]
    fn regions_grow_with_level(xs in prop::collection::vec(-50.0f64..50.0, 2..40), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (l1, l2) = if a <= b { (a, b) } else { (b, a) };
        let (lo1, hi1) = central_interval(&xs, l1).unwrap();
        let (lo2, hi2) = central_interval(&xs, l2).unwrap();
        prop_assert!(lo2 <= lo1 && hi1 <= hi2);
        let pts: Vec<Vec<f64>> = xs.chunks(2).filter(|c| c.len() == 2).map(|c| c.to_vec()).collect();
        if pts.len() >= 2 {
            prop_assert!(euclidean_ball(&pts, l1).unwrap().radius <= euclidean_ball(&pts, l2).unwrap().radius);
        }
    }
}

#[test]
fn stein_loss_is_asymmetric() {
    let m = SpdMatrix::from_diagonal(&[1.0, 3.0]).unwrap();
    let n = SpdMatrix::from_diagonal(&[2.0, 0.5]).unwrap();
    assert!((stein_loss(&m, &n).unwrap() - stein_loss(&n, &m).unwrap()).abs() > 1e-3);
}

fn random_draws(count: usize, seed: u64) -> Vec<SpdMatrix> {
    let mut rng = seeded(seed);
    use rand::Rng;
    (0..count)
        .map(|_| {
            spd_from(
                &(0..9)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
                3,
            )
        })
        .collect()
}

#[test]
fn full_level_ball_reaches_the_farthest_draw() {
    let draws = random_draws(50, 1);
    for metric in METRICS {
        let ball = ball_region(&draws, metric, 1.0).unwrap();
        let far = draws
            .iter()
            .map(|x| metric.dist(&ball.center, x).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(ball.radius, far);
        assert!(draws.iter().all(|x| ball.contains(x, metric).unwrap()));
    }
}

#[test]
fn covariance_regions_are_nested_in_level() {
    let draws = random_draws(200, 2);
    let truth = SpdMatrix::identity(3);
    for r in CovRegion::ALL {
        let fit = r.fit(&draws).unwrap();
        let mut prev = (false, -1.0);
        for level in [0.5, 0.8, 0.9, 0.95, 0.99] {
            let (inside, size) = fit.covers(&truth, level).unwrap();
            assert!(size >= prev.1, "{r}");
            assert!(inside || !prev.0, "{r}");
            prev = (inside, size);
        }
    }
}

#[test]
fn containment_replays_under_a_fixed_seed() {
    let a = random_draws(100, 3);
    let b = random_draws(100, 3);
    let truth = SpdMatrix::identity(3);
    for r in CovRegion::ALL {
        assert_eq!(
            r.fit(&a).unwrap().covers(&truth, 0.9).unwrap(),
            r.fit(&b).unwrap().covers(&truth, 0.9).unwrap()
        );
    }
}

#[test]
fn symmetric_draws_give_symmetric_intervals() {
    let xs: Vec<f64> = (0..201).map(|i| 5.0 + (i as f64 - 100.0) * 0.37).collect();
    let (lo, hi) = central_interval(&xs, 0.9).unwrap();
    assert!(((lo + hi) / 2.0 - 5.0).abs() < 1e-9);
}

#[test]
fn identical_point_sets_give_degenerate_boxes() {
    // one observation with a bounded set is not available; take a finished set and repeat it
    let y = sample_binomial(15, 0.9, 50, &mut seeded(4)).unwrap();
    let run = run_np_sampler(
        &y,
        &NpSamplerConfig {
            iterations: 50,
            burn_in: 10,
            seed: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let mut one = run.sets[0].clone();
    one.entries.truncate(1);
    let e = one.entries[0];
    one.entries[0].mu_hi = e.mu_lo;
    let sets = vec![one; 20];
    let (belief, plaus) = belief_plaus_boxes(&sets, 0.95, &mut seeded(6)).unwrap();
    for b in [belief, plaus] {
        assert_eq!((b.n_lo, b.n_hi), (e.n as f64, e.n as f64));
        assert_eq!((b.mu_lo, b.mu_hi), (e.mu_lo, e.mu_lo));
    }
}

#[test]
fn belief_boxes_contain_plausibility_boxes() {
    for (p, seed) in [(0.1, 7u64), (0.5, 8), (0.9, 9)] {
        let y = sample_binomial(15, p, 50, &mut seeded(seed)).unwrap();
        let cfg = NpSamplerConfig {
            iterations: 600,
            burn_in: 100,
            seed,
            ..Default::default()
        };
        let sets = run_np_sampler(&y, &cfg).unwrap().sets;
        let reps = representatives(&sets, &mut seeded(seed + 100)).unwrap();
        let fit = BoxFit::fit(&sets, &reps).unwrap();
        let mut prev = (0.0, 0.0);
        for level in [0.5, 0.8, 0.9, 0.95] {
            let b = fit.belief(level).unwrap();
            let q = fit.plausibility(level).unwrap();
            assert!(
                b.n_lo <= q.n_lo && q.n_hi <= b.n_hi && b.mu_lo <= q.mu_lo && q.mu_hi <= b.mu_hi
            );
            let inside = sets
                .iter()
                .filter(|s| s.inside(b.n_lo, b.n_hi, b.mu_lo, b.mu_hi))
                .count();
            let meets = sets
                .iter()
                .filter(|s| s.intersects(q.n_lo, q.n_hi, q.mu_lo, q.mu_hi))
                .count();
            if !b.unbounded {
                assert!(inside as f64 >= level * sets.len() as f64);
            }
            assert!(
                meets as f64 >= level * sets.len() as f64,
                "p={p} level={level}: {meets}"
            );
            let w = (q.n_hi - q.n_lo, q.mu_hi - q.mu_lo);
            assert!(w.0 >= prev.0 && w.1 >= prev.1);
            prev = w;
        }
    }
}

#[test]
fn unbounded_majority_flags_the_belief_box() {
    let sets: Vec<_> = [0.2, 0.5, 0.8]
        .iter()
        .map(|&u| solution_set(&UniformConfig::new(vec![u]).unwrap(), &[2], DEFAULT_EPS2).unwrap())
        .collect();
    let (belief, plaus) = belief_plaus_boxes(&sets, 0.9, &mut seeded(10)).unwrap();
    assert!(belief.unbounded);
    assert!(!plaus.unbounded);
}
