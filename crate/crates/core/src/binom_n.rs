//! Set-valued fiducial distribution for the binomial `n` with `p` known.
//!
//! For one observation the data generating algorithm `Y = F⁻¹_{n,p}(U)` is
//! solved by every `n` with `F_{n,p}(y−1) < U ≤ F_{n,p}(y)`. Since `F_{n,p}(y)`
//! decreases in `n`, the solutions form a run of consecutive integers, and the
//! probability that a whole interval `s` is contained in the solution set (its
//! commonality) is `∏ᵢ [F_{max s}(yᵢ) − F_{min s}(yᵢ−1)]⁺`. Masses of the focal
//! intervals follow by Möbius inversion over supersets, then renormalize after
//! discarding the empty set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, GfiError, Result};
use crate::numerics::special::{binom_ln_pmf, inc_beta};

/// Default ratio cutoff for [`candidate_range`].
pub const DEFAULT_EPS1: f64 = 1e-8;
/// Default cap on the number of candidates examined by [`candidate_range`].
pub const DEFAULT_RANGE_CAP: u64 = 1_000_000;

/// `{lo, lo+1, …, hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntegerInterval {
    pub lo: u64,
    pub hi: u64,
}

impl IntegerInterval {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if lo > hi {
            return domain(format!("empty integer interval [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: u64) -> bool {
        self.lo <= n && n <= self.hi
    }

    pub fn is_subset_of(&self, other: &IntegerInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

/// Focal intervals with their renormalized masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassAssignment {
    /// Intervals with positive mass, longest first.
    pub intervals: Vec<(IntegerInterval, f64)>,
    /// Mass the recursion left on the empty set before renormalization.
    pub empty_mass: f64,
}

fn check_inputs(y: &[u64], p: f64) -> Result<()> {
    if y.is_empty() {
        return domain("need at least one observation");
    }
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    Ok(())
}

/// Distinct values of `y` with their multiplicities, ascending.
fn tally(y: &[u64]) -> Vec<(u64, f64)> {
    let mut v = y.to_vec();
    v.sort_unstable();
    let mut out: Vec<(u64, f64)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some((val, c)) if *val == x => *c += 1.0,
            _ => out.push((x, 1.0)),
        }
    }
    out
}

/// `P(Bin(n, p) ≤ y)` and `P(Bin(n, p) > y)`, each computed directly so that
/// differences of either kind keep their relative accuracy.
fn cdf_pair(n: u64, p: f64, y: i64) -> (f64, f64) {
    if y < 0 {
        return (0.0, 1.0);
    }
    let y = y as u64;
    if y >= n {
        return (1.0, 0.0);
    }
    let (yf, nf) = (y as f64, n as f64);
    (
        inc_beta(nf - yf, yf + 1.0, 1.0 - p),
        inc_beta(yf + 1.0, nf - yf, p),
    )
}

/// `F_{hi}(v) − F_{lo}(v−1)` from the two (cdf, survival) pairs.
fn cdf_gap(at_hi: (f64, f64), below_lo: (f64, f64)) -> f64 {
    if at_hi.0 > 0.5 && below_lo.0 > 0.5 {
        below_lo.1 - at_hi.1
    } else {
        at_hi.0 - below_lo.0
    }
}

/// Log of the commonality of `s`; `−∞` when it is zero.
pub fn ln_commonality(s: IntegerInterval, y: &[u64], p: f64) -> Result<f64> {
    check_inputs(y, p)?;
    let max_y = *y.iter().max().unwrap();
    if s.lo < max_y {
        return domain(format!(
            "interval starts at {} below max(y) = {max_y}",
            s.lo
        ));
    }
    let mut acc = 0.0;
    for (v, mult) in tally(y) {
        let term = if s.lo == s.hi {
            binom_ln_pmf(s.lo, v, p)
        } else {
            let gap = cdf_gap(cdf_pair(s.hi, p, v as i64), cdf_pair(s.lo, p, v as i64 - 1));
            if gap > 0.0 {
                gap.ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        acc += mult * term;
    }
    Ok(acc)
}

/// Probability that every `n` in `s` reproduces all of `y`:
/// `∏ᵢ [F_{max s,p}(yᵢ) − F_{min s,p}(yᵢ−1)]⁺`.
pub fn commonality(s: IntegerInterval, y: &[u64], p: f64) -> Result<f64> {
    Ok(ln_commonality(s, y, p)?.exp())
}

fn ln_likelihood(n: u64, y: &[(u64, f64)], p: f64) -> f64 {
    y.iter().map(|&(v, c)| c * binom_ln_pmf(n, v, p)).sum()
}

/// Candidates `{max(y), …, n_stop}`: keeps adding `n` while its singleton
/// commonality (the likelihood) exceeds `eps1` times the best seen so far.
pub fn candidate_range(y: &[u64], p: f64, eps1: f64) -> Result<IntegerInterval> {
    candidate_range_capped(y, p, eps1, DEFAULT_RANGE_CAP)
}

/// [`candidate_range`] with an explicit cap on the number of candidates.
pub fn candidate_range_capped(y: &[u64], p: f64, eps1: f64, cap: u64) -> Result<IntegerInterval> {
    check_inputs(y, p)?;
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return domain(format!("eps1 must lie in (0, 1), got {eps1}"));
    }
    let t = tally(y);
    let lo = *y.iter().max().unwrap();
    let ln_eps = eps1.ln();
    let mut best = ln_likelihood(lo, &t, p);
    let mut hi = lo;
    loop {
        let next = hi + 1;
        if next - lo >= cap {
            return Err(GfiError::IterationCap {
                cap: cap as usize,
                context: "searching the candidate range for n".into(),
            });
        }
        let ll = ln_likelihood(next, &t, p);
        best = best.max(ll);
        if ll - best <= ln_eps {
            break;
        }
        hi = next;
    }
    Ok(IntegerInterval { lo, hi })
}

/// Dempster–Shafer masses of every subinterval of `range`.
///
/// Intervals are visited from longest to shortest; each gets
/// `m(s) = [c(s) − Σ_{r ⊋ s} m(r)]⁺`. The superset sum is read off
/// two-dimensional tail sums `S(i, j) = Σ_{i' ≤ i, j' ≥ j} m(i', j')` via
/// `S(i−1, j) + S(i, j+1) − S(i−1, j+1)`, kept one diagonal at a time, so the
/// whole recursion costs `O(|N|²)` commonality evaluations and `O(|N|)` memory.
/// Commonalities are scaled by the largest singleton value; the scale cancels
/// on renormalization.
pub fn ds_masses(range: IntegerInterval, y: &[u64], p: f64) -> Result<MassAssignment> {
    check_inputs(y, p)?;
    let max_y = *y.iter().max().unwrap();
    if range.lo < max_y {
        return domain(format!(
            "range starts at {} below max(y) = {max_y}",
            range.lo
        ));
    }
    let t = tally(y);
    let k = range.len() as usize;
    let ns: Vec<u64> = (range.lo..=range.hi).collect();
    // (cdf, survival) at v and at v − 1, for every candidate n and distinct v
    let at: Vec<Vec<(f64, f64)>> = ns
        .iter()
        .map(|&n| t.iter().map(|&(v, _)| cdf_pair(n, p, v as i64)).collect())
        .collect();
    let below: Vec<Vec<(f64, f64)>> = ns
        .iter()
        .map(|&n| {
            t.iter()
                .map(|&(v, _)| cdf_pair(n, p, v as i64 - 1))
                .collect()
        })
        .collect();
    let single: Vec<f64> = ns.iter().map(|&n| ln_likelihood(n, &t, p)).collect();
    let scale = single.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ln_c = |i: usize, j: usize| -> f64 {
        if i == j {
            return single[i];
        }
        let mut acc = 0.0;
        for (c, &(_, mult)) in t.iter().enumerate() {
            let gap = cdf_gap(at[j][c], below[i][c]);
            if gap <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += mult * gap.ln();
        }
        acc
    };

    let mut intervals = Vec::new();
    let mut total = 0.0;
    // tail sums on the diagonals of length len+1 and len+2, indexed by start i
    let mut s_next: Vec<f64> = Vec::new();
    let mut s_next2: Vec<f64> = Vec::new();
    for len in (1..=k).rev() {
        let count = k - len + 1;
        let mut s_cur = vec![0.0; count];
        for i in 0..count {
            let j = i + len - 1;
            // S(i−1, j): start i−1, length len+1
            let left = if i >= 1 { s_next[i - 1] } else { 0.0 };
            // S(i, j+1): start i, length len+1
            let right = if j + 1 < k { s_next[i] } else { 0.0 };
            // S(i−1, j+1): start i−1, length len+2
            let both = if i >= 1 && j + 1 < k {
                s_next2[i - 1]
            } else {
                0.0
            };
            let supersets = left + right - both;
            let c = (ln_c(i, j) - scale).exp();
            let m = (c - supersets).max(0.0);
            s_cur[i] = m + supersets;
            if m > 0.0 {
                intervals.push((
                    IntegerInterval {
                        lo: ns[i],
                        hi: ns[j],
                    },
                    m,
                ));
                total += m;
            }
        }
        s_next2 = std::mem::take(&mut s_next);
        s_next = s_cur;
    }
    if !(total > 0.0) {
        return Err(GfiError::Invariant(
            "all Dempster-Shafer masses vanished".into(),
        ));
    }
    let empty_mass = (1.0 - total * scale.exp()).clamp(0.0, 1.0);
    for (_, m) in intervals.iter_mut() {
        *m /= total;
    }
    Ok(MassAssignment {
        intervals,
        empty_mass,
    })
}

/// Draws `n`: picks a focal interval with probability equal to its mass, then
/// returns its lower or upper end with probability ½ each.
pub fn sample_n<R: Rng + ?Sized>(
    masses: &MassAssignment,
    count: usize,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if masses.intervals.is_empty() {
        return domain("mass assignment has no focal intervals");
    }
    let mut cum = Vec::with_capacity(masses.intervals.len());
    let mut acc = 0.0;
    for (_, m) in &masses.intervals {
        acc += m;
        cum.push(acc);
    }
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
            let s = masses.intervals[idx].0;
            if rng.random::<bool>() {
                s.lo
            } else {
                s.hi
            }
        })
        .collect())
}

/// The distribution of [`sample_n`] draws, as `(n, probability)` ascending in `n`.
pub fn gfd_pmf(masses: &MassAssignment) -> Vec<(u64, f64)> {
    let mut map = std::collections::BTreeMap::new();
    for (s, m) in &masses.intervals {
        *map.entry(s.lo).or_insert(0.0) += 0.5 * m;
        *map.entry(s.hi).or_insert(0.0) += 0.5 * m;
    }
    map.into_iter().collect()
}

/// Flat-prior posterior of `n` over `range`: `∝ ∏ᵢ pmf(yᵢ; n, p)`.
pub fn bayes_posterior_n(y: &[u64], p: f64, range: IntegerInterval) -> Result<Vec<(u64, f64)>> {
    check_inputs(y, p)?;
    let t = tally(y);
    let ll: Vec<f64> = (range.lo..=range.hi)
        .map(|n| ln_likelihood(n, &t, p))
        .collect();
    let max = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return domain("likelihood vanishes on the whole range");
    }
    let w: Vec<f64> = ll.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok((range.lo..=range.hi)
        .zip(w)
        .map(|(n, w)| (n, w / z))
        .collect())
}

/// Empirical pmf of integer draws, ascending in `n`.
pub fn empirical_pmf(draws: &[u64]) -> Vec<(u64, f64)> {
    let mut map = std::collections::BTreeMap::new();
    for &d in draws {
        *map.entry(d).or_insert(0.0) += 1.0;
    }
    let n = draws.len() as f64;
    map.into_iter().map(|(k, c)| (k, c / n)).collect()
}

/// One-sided set `{lo, …, q}` with `q` the smallest value whose cumulative
/// probability reaches `level`; `lo` is the first support point (or `floor`
/// if smaller).
pub fn upper_interval(pmf: &[(u64, f64)], level: f64, floor: u64) -> Result<IntegerInterval> {
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("level must lie in (0, 1), got {level}"));
    }
    let Some(&(first, _)) = pmf.first() else {
        return domain("empty pmf");
    };
    let mut acc = 0.0;
    for &(n, w) in pmf {
        acc += w;
        if acc >= level - 1e-12 {
            return Ok(IntegerInterval {
                lo: first.min(floor),
                hi: n,
            });
        }
    }
    Ok(IntegerInterval {
        lo: first.min(floor),
        hi: pmf.last().unwrap().0,
    })
}

/// Total variation distance between two pmfs given as ascending `(n, prob)` lists.
pub fn total_variation(a: &[(u64, f64)], b: &[(u64, f64)]) -> f64 {
    let mut map = std::collections::BTreeMap::new();
    for &(n, w) in a {
        *map.entry(n).or_insert(0.0) += w;
    }
    for &(n, w) in b {
        *map.entry(n).or_insert(0.0) -= w;
    }
    0.5 * map.values().map(|v: &f64| v.abs()).sum::<f64>()
}

/// Mean absolute difference between draws and a reference value.
pub fn mean_abs_diff(draws: &[u64], truth: u64) -> f64 {
    draws
        .iter()
        .map(|&d| (d as f64 - truth as f64).abs())
        .sum::<f64>()
        / draws.len() as f64
}
