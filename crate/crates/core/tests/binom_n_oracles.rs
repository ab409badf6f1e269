use std::collections::BTreeMap;

use gfi_core::binom_n::{
    bayes_posterior_n, candidate_range, commonality, ds_masses, gfd_pmf, total_variation,
    IntegerInterval, DEFAULT_EPS1,
};
use gfi_core::numerics::{binom_cdf, sample_binomial, seeded};
use proptest::prelude::*;

/// Partitions `U ∈ (0, 1)` at every `F_n(y)` and `F_n(y−1)`, `n ∈ range`, and
/// reads off which candidates solve `F_n(y−1) < U ≤ F_n(y)` on each piece.
fn enumerate_single(y: u64, p: f64, range: IntegerInterval) -> BTreeMap<(u64, u64), f64> {
    let ns: Vec<u64> = (range.lo..=range.hi).collect();
    let bounds: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            (
                binom_cdf(n, p, y as i64 - 1).unwrap(),
                binom_cdf(n, p, y as i64).unwrap(),
            )
        })
        .collect();
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for &(a, b) in &bounds {
        cuts.push(a);
        cuts.push(b);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = BTreeMap::new();
    for w in cuts.windows(2) {
        let width = w[1] - w[0];
        if width <= 0.0 {
            continue;
        }
        let u = 0.5 * (w[0] + w[1]);
        let members: Vec<u64> = ns
            .iter()
            .zip(&bounds)
            .filter(|(_, &(a, b))| a < u && u <= b)
            .map(|(&n, _)| n)
            .collect();
        if let (Some(&lo), Some(&hi)) = (members.first(), members.last()) {
            assert_eq!(
                members.len() as u64,
                hi - lo + 1,
                "solution set is not contiguous"
            );
            *out.entry((lo, hi)).or_insert(0.0) += width;
        }
    }
    out
}

#[test]
fn single_observation_masses_match_enumeration() {
    for &(y, p) in &[
        (1u64, 0.5),
        (0, 0.3),
        (4, 0.2),
        (7, 0.65),
        (3, 0.9),
        (12, 0.05),
    ] {
        let range = candidate_range(&[y], p, 1e-6).unwrap();
        let masses = ds_masses(range, &[y], p).unwrap();
        let oracle = enumerate_single(y, p, range);
        let total: f64 = oracle.values().sum();
        let got: BTreeMap<(u64, u64), f64> = masses
            .intervals
            .iter()
            .map(|(s, m)| ((s.lo, s.hi), *m))
            .collect();
        for (key, w) in &oracle {
            let g = got.get(key).copied().unwrap_or(0.0);
            assert!(
                (g - w / total).abs() < 1e-10,
                "y={y} p={p} {key:?}: {g} vs {}",
                w / total
            );
        }
        for (key, m) in &got {
            if !oracle.contains_key(key) {
                assert!(*m < 1e-10, "y={y} p={p} spurious {key:?} with mass {m}");
            }
        }
        assert!((masses.empty_mass - (1.0 - total)).abs() < 1e-10);
    }
}

#[test]
fn gfd_matches_bayes_when_singletons_dominate() {
    let mut rng = seeded(7);
    let y = sample_binomial(10, 0.9, 100, &mut rng).unwrap();
    let range = candidate_range(&y, 0.9, DEFAULT_EPS1).unwrap();
    let masses = ds_masses(range, &y, 0.9).unwrap();
    let tv = total_variation(
        &gfd_pmf(&masses),
        &bayes_posterior_n(&y, 0.9, range).unwrap(),
    );
    assert!(tv < 0.02, "TV = {tv}");
}

fn counts() -> impl Strategy<Value = (Vec<u64>, f64)> {
    (prop::collection::vec(0u64..12, 1..6), 0.05f64..0.95)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masses_are_normalized((y, p) in counts()) {
        let range = candidate_range(&y, p, 1e-6).unwrap();
        let m = ds_masses(range, &y, p).unwrap();
        let total: f64 = m.intervals.iter().map(|(_, w)| w).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(m.intervals.iter().all(|(s, w)| *w > 0.0 && s.is_subset_of(&range)));
        prop_assert!((0.0..=1.0).contains(&m.empty_mass));
    }

    #[test]
    fn commonality_shrinks_on_supersets((y, p) in counts(), a in 0u64..5, b in 0u64..5, c in 0u64..5, d in 0u64..5) {
        let base = *y.iter().max().unwrap();
        let inner = IntegerInterval::new(base + a, base + a + b).unwrap();
        let outer = IntegerInterval::new(base + a - a.min(c), base + a + b + d).unwrap();
        prop_assert!(commonality(outer, &y, p).unwrap() <= commonality(inner, &y, p).unwrap() * (1.0 + 1e-12));
    }
}
