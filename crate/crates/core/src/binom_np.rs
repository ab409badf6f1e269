//! Set-valued fiducial distribution for the binomial `(n, μ = np)` with both
//! parameters unknown.
//!
//! For a fixed uniform configuration `U`, observation `i` is reproduced by
//! `(n, p)` exactly when `p ∈ (p̂ˡᵒ_{i,n}, p̂ᵘᵖ_{i,n}]`, where
//! `p̂ᵘᵖ = G⁻¹_{yᵢ+1, n−yᵢ}(1−uᵢ)` and `p̂ˡᵒ = G⁻¹_{yᵢ, n−yᵢ+1}(1−uᵢ)` are Beta
//! quantiles. The draw is the union over `n` of `{n} × (max lo, min up]`,
//! carried on the `μ = np` scale. As `n → ∞` the scaled bounds settle on the
//! Gamma(yᵢ+1, 1) and Gamma(yᵢ, 1) quantiles, which gives a stopping rule for
//! the scan in `n`.
//!
//! Implementation notes:
//!
//! * Only the smallest and largest uniform among observations sharing a
//!   count bind, so bounds are computed per distinct count ("group").
//! * `n` is evaluated on knots: every value for the first [`DENSE_HEAD`]
//!   candidates, then a geometric grid. The ends of the feasible run are
//!   located exactly by bisection, assuming feasible `n` are contiguous.
//! * The sampler is Metropolis within Gibbs on `U`: each `uᵢ` is redrawn
//!   uniformly over the values that keep the set nonempty, followed by
//!   random-walk moves in `μ` and `n` that propose a fresh `U` from the box
//!   of configurations consistent with the proposed point.

use rustc_hash::FxHashMap as HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, GfiError, Result};
use crate::numerics::random::{open01, standard_normal};
use crate::numerics::special::{
    binom_cdf_unchecked, binom_ln_pmf, gamma_quantile_unit, inv_inc_beta_from,
};

/// Default Gamma-limit tolerance.
pub const DEFAULT_EPS2: f64 = 1e-3;
/// Number of consecutive `n` values evaluated before switching to a geometric grid.
pub const DENSE_HEAD: u64 = 64;
/// Ratio between successive knots past the dense head.
pub const KNOT_RATIO: f64 = 1.1;
/// Largest `n` ever examined; sets reaching it are treated as unbounded.
pub const MAX_N: u64 = 1 << 40;

/// One uniform per observation, each strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformConfig {
    u: Vec<f64>,
}

impl UniformConfig {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return domain("uniform configuration is empty");
        }
        if let Some(x) = u.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return domain(format!("uniform {x} is not inside (0, 1)"));
        }
        Ok(Self { u })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// `{n} × (mu_lo, mu_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpEntry {
    pub n: u64,
    pub mu_lo: f64,
    pub mu_hi: f64,
}

/// One draw: the feasible `(n, μ)` pairs for a configuration `U`.
///
/// `entries` lists every evaluated `n` of the feasible run: all of them near
/// `max(y)`, knots further out, and the exact first and last feasible `n`.
/// With `unbounded_tail` set, every `n` past the last entry is feasible with
/// an interval within ε₂ of the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpSolutionSet {
    pub entries: Vec<NpEntry>,
    pub unbounded_tail: bool,
    pub u: UniformConfig,
}

impl NpSolutionSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_n(&self) -> Option<u64> {
        self.entries.first().map(|e| e.n)
    }

    /// Largest computed `n`; a lower bound on the true maximum when the tail is unbounded.
    pub fn max_n(&self) -> Option<u64> {
        self.entries.last().map(|e| e.n)
    }

    pub fn mu_min(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.mu_lo).min_by(f64::total_cmp)
    }

    pub fn mu_max(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.mu_hi).max_by(f64::total_cmp)
    }

    /// The μ-interval at `n`. Values between listed entries are interpolated
    /// linearly in `1/n`; past the last entry of an unbounded set the last
    /// interval is returned.
    pub fn interval_at(&self, n: u64) -> Option<(f64, f64)> {
        let first = self.entries.first()?;
        let last = self.entries.last()?;
        if n < first.n {
            return None;
        }
        if n >= last.n {
            return if n == last.n || self.unbounded_tail {
                Some((last.mu_lo, last.mu_hi))
            } else {
                None
            };
        }
        let k = self.entries.partition_point(|e| e.n <= n);
        let (a, b) = (self.entries[k - 1], self.entries[k]);
        if a.n == n {
            return Some((a.mu_lo, a.mu_hi));
        }
        let t = (1.0 / a.n as f64 - 1.0 / n as f64) / (1.0 / a.n as f64 - 1.0 / b.n as f64);
        Some((
            a.mu_lo + t * (b.mu_lo - a.mu_lo),
            a.mu_hi + t * (b.mu_hi - a.mu_hi),
        ))
    }

    /// Whether the set meets the rectangle `[n_lo, n_hi] × [mu_lo, mu_hi]`.
    pub fn intersects(&self, n_lo: f64, n_hi: f64, mu_lo: f64, mu_hi: f64) -> bool {
        let meets = |(a, b): (f64, f64)| a < mu_hi && b >= mu_lo;
        if self
            .entries
            .iter()
            .filter(|e| (e.n as f64) >= n_lo && (e.n as f64) <= n_hi)
            .any(|e| meets((e.mu_lo, e.mu_hi)))
        {
            return true;
        }
        // rectangle edges falling between listed entries
        [n_lo.ceil(), n_hi.floor()]
            .iter()
            .filter(|x| **x >= n_lo && **x <= n_hi && **x >= 0.0)
            .filter_map(|x| self.interval_at(*x as u64))
            .any(meets)
    }

    /// Whether the whole set lies inside the rectangle; never true for an unbounded tail.
    pub fn inside(&self, n_lo: f64, n_hi: f64, mu_lo: f64, mu_hi: f64) -> bool {
        if self.unbounded_tail || self.entries.is_empty() {
            return false;
        }
        let (a, b) = (self.min_n().unwrap() as f64, self.max_n().unwrap() as f64);
        a >= n_lo && b <= n_hi && self.mu_min().unwrap() >= mu_lo && self.mu_max().unwrap() <= mu_hi
    }

    /// Representative point: the smallest or largest `n` and the smallest or
    /// largest μ, each picked with probability ½. The flag marks an `n` taken
    /// from an unbounded tail (right-censored).
    pub fn representative<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(u64, f64, bool)> {
        let first = self.entries.first()?;
        let last = self.entries.last()?;
        let (n, censored) = if rng.random::<bool>() {
            (first.n, false)
        } else {
            (last.n, self.unbounded_tail)
        };
        let mu = if rng.random::<bool>() {
            self.mu_min()?
        } else {
            self.mu_max()?
        };
        Some((n, mu, censored))
    }
}

/// Settings for [`run_np_sampler`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpSamplerConfig {
    pub eps2: f64,
    /// Random-walk step for the μ move; `None` uses `0.5·√ȳ`.
    pub mu_proposal_sd: Option<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for NpSamplerConfig {
    fn default() -> Self {
        Self {
            eps2: DEFAULT_EPS2,
            mu_proposal_sd: None,
            iterations: 5000,
            burn_in: 1000,
            seed: 1,
        }
    }
}

impl NpSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps2 > 0.0 && self.eps2.is_finite()) {
            return config(format!("eps2 must be positive, got {}", self.eps2));
        }
        if let Some(sd) = self.mu_proposal_sd {
            if !(sd > 0.0 && sd.is_finite()) {
                return config(format!("mu_proposal_sd must be positive, got {sd}"));
            }
        }
        if self.burn_in >= self.iterations {
            return config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            ));
        }
        Ok(())
    }

    fn proposal_sd(&self, y: &[u64]) -> f64 {
        self.mu_proposal_sd.unwrap_or_else(|| {
            let ybar = y.iter().sum::<u64>() as f64 / y.len() as f64;
            (0.5 * ybar.sqrt()).max(1e-3)
        })
    }
}

/// `(p̂ˡᵒ, p̂ᵘᵖ)`: the `p` reproducing `yᵢ` out of `n` trials given `uᵢ`.
pub fn p_bounds(y: u64, n: u64, u: f64) -> Result<(f64, f64)> {
    if n < y {
        return domain(format!("n = {n} is smaller than the count {y}"));
    }
    if !(u > 0.0 && u < 1.0) {
        return domain(format!("uniform {u} is not inside (0, 1)"));
    }
    Ok((p_lower(y, n, u, None), p_upper(y, n, u, None)))
}

fn p_lower(y: u64, n: u64, u: f64, guess: Option<f64>) -> f64 {
    if y == 0 {
        0.0
    } else {
        inv_inc_beta_from(y as f64, (n - y + 1) as f64, 1.0 - u, guess)
    }
}

fn p_upper(y: u64, n: u64, u: f64, guess: Option<f64>) -> f64 {
    if y >= n {
        1.0
    } else {
        inv_inc_beta_from(y as f64 + 1.0, (n - y) as f64, 1.0 - u, guess)
    }
}

/// Limits of `n·p̂ˡᵒ` and `n·p̂ᵘᵖ` as `n → ∞`.
fn gamma_limits(y: u64, u: f64) -> (f64, f64) {
    let lo = if y == 0 {
        0.0
    } else {
        gamma_quantile_unit(y as f64, 1.0 - u)
    };
    (lo, gamma_quantile_unit(y as f64 + 1.0, 1.0 - u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Side {
    Lower,
    Upper,
}

/// Observations grouped by count, with the grid of knots in `n`.
#[derive(Debug, Clone)]
struct Groups {
    values: Vec<u64>,
    members: Vec<Vec<usize>>,
    eps2: f64,
    knots: Vec<u64>,
}

/// Bounds already computed, keyed by group, uniform and `n`.
#[derive(Debug, Clone, Default)]
struct Memo {
    bounds: HashMap<(usize, u64, Side, u64), f64>,
    limits: HashMap<(usize, u64, Side), f64>,
}

impl Memo {
    /// Drops entries for uniforms that no longer bound any group.
    fn retain_current(&mut self, ext: &[(f64, f64)]) {
        let keep = |g: usize, u: u64, side: Side| match side {
            Side::Lower => ext[g].0.to_bits() == u,
            Side::Upper => ext[g].1.to_bits() == u,
        };
        self.bounds.retain(|&(g, u, side, _), _| keep(g, u, side));
        self.limits.retain(|&(g, u, side), _| keep(g, u, side));
    }
}

impl Groups {
    fn new(y: &[u64], eps2: f64) -> Result<Self> {
        if y.is_empty() {
            return domain("need at least one observation");
        }
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by_key(|&i| y[i]);
        let mut values: Vec<u64> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for i in order {
            if values.last() == Some(&y[i]) {
                members.last_mut().unwrap().push(i);
            } else {
                values.push(y[i]);
                members.push(vec![i]);
            }
        }
        let max_y = *values.last().unwrap();
        let first = max_y.max(1);
        let mut knots = vec![first];
        while let Some(&n) = knots.last() {
            let next = if n < first + DENSE_HEAD - 1 {
                n + 1
            } else {
                ((n as f64 * KNOT_RATIO).ceil() as u64).max(n + 1)
            };
            if next > MAX_N {
                break;
            }
            knots.push(next);
        }
        Ok(Self {
            values,
            members,
            eps2,
            knots,
        })
    }

    fn first_n(&self) -> u64 {
        self.knots[0]
    }

    fn knot_below(&self, n: u64) -> Option<u64> {
        let k = self.knots.partition_point(|&x| x < n);
        k.checked_sub(1).map(|k| self.knots[k])
    }

    fn knot_above(&self, n: u64) -> Option<u64> {
        self.knots
            .get(self.knots.partition_point(|&x| x <= n))
            .copied()
    }

    fn extremes(&self, u: &[f64]) -> Vec<(f64, f64)> {
        self.members
            .iter()
            .map(|m| {
                m.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
                        (a.min(u[i]), b.max(u[i]))
                    })
            })
            .collect()
    }

    /// μ-scale bound of group `g` at `n` for the uniform `u`.
    fn bound(&self, memo: &mut Memo, g: usize, u: f64, side: Side, n: u64) -> f64 {
        let y = self.values[g];
        *memo
            .bounds
            .entry((g, u.to_bits(), side, n))
            .or_insert_with(|| {
                n as f64
                    * match side {
                        Side::Lower => p_lower(y, n, u, None),
                        Side::Upper => p_upper(y, n, u, None),
                    }
            })
    }

    fn limit(&self, memo: &mut Memo, g: usize, u: f64, side: Side) -> f64 {
        let y = self.values[g];
        *memo
            .limits
            .entry((g, u.to_bits(), side))
            .or_insert_with(|| match side {
                Side::Lower => gamma_limits(y, u).0,
                Side::Upper => gamma_limits(y, u).1,
            })
    }

    /// `(max lo, min up)` at `n` over every group except `skip`.
    fn interval_without(
        &self,
        memo: &mut Memo,
        n: u64,
        ext: &[(f64, f64)],
        skip: Option<usize>,
    ) -> (f64, f64) {
        let mut lo: f64 = 0.0;
        let mut up = f64::INFINITY;
        for g in (0..self.values.len()).filter(|&g| Some(g) != skip) {
            lo = lo.max(self.bound(memo, g, ext[g].0, Side::Lower, n));
            up = up.min(self.bound(memo, g, ext[g].1, Side::Upper, n));
        }
        (lo, up)
    }

    fn interval(&self, memo: &mut Memo, n: u64, ext: &[(f64, f64)]) -> (f64, f64) {
        self.interval_without(memo, n, ext, None)
    }

    fn feasible(&self, memo: &mut Memo, n: u64, ext: &[(f64, f64)]) -> bool {
        n >= self.first_n() && {
            let (a, b) = self.interval(memo, n, ext);
            a < b
        }
    }

    /// Gamma-limit stopping rule at `n`, applied to the bounds that define the set.
    fn converged(&self, memo: &mut Memo, n: u64, ext: &[(f64, f64)]) -> bool {
        (0..self.values.len()).all(|g| {
            let (umin, umax) = ext[g];
            (self.bound(memo, g, umin, Side::Lower, n) - self.limit(memo, g, umin, Side::Lower))
                .abs()
                < self.eps2
                && (self.bound(memo, g, umax, Side::Upper, n)
                    - self.limit(memo, g, umax, Side::Upper))
                .abs()
                    < self.eps2
        })
    }

    /// The feasible run through `anchor`, which must itself be feasible.
    /// Both ends are located exactly, bisecting between knots when needed.
    fn set_from_anchor(
        &self,
        memo: &mut Memo,
        u: &UniformConfig,
        ext: &[(f64, f64)],
        anchor: u64,
    ) -> NpSolutionSet {
        debug_assert!(self.feasible(memo, anchor, ext));
        let mut ns = vec![anchor];
        // downwards
        let mut first = anchor;
        while let Some(c) = self.knot_below(first) {
            if self.feasible(memo, c, ext) {
                first = c;
                ns.push(c);
                continue;
            }
            let (mut a, mut b) = (c, first);
            while b - a > 1 {
                let mid = a + (b - a) / 2;
                if self.feasible(memo, mid, ext) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            ns.push(b);
            break;
        }
        // upwards
        let mut last = anchor;
        let unbounded_tail = loop {
            if self.converged(memo, last, ext) {
                break true;
            }
            let Some(c) = self.knot_above(last) else {
                log::debug!("solution set reached n = {last} before the Gamma-limit rule held");
                break true;
            };
            if self.feasible(memo, c, ext) {
                last = c;
                ns.push(c);
                continue;
            }
            let (mut a, mut b) = (last, c);
            while b - a > 1 {
                let mid = a + (b - a) / 2;
                if self.feasible(memo, mid, ext) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            ns.push(a);
            debug_assert!(
                (b + 1..=b + 3).all(|n| !self.feasible(memo, n, ext)),
                "feasible n values are not contiguous past n = {b}"
            );
            break false;
        };
        ns.sort_unstable();
        ns.dedup();
        let entries = ns
            .into_iter()
            .map(|n| {
                let (lo, hi) = self.interval(memo, n, ext);
                NpEntry {
                    n,
                    mu_lo: lo,
                    mu_hi: hi,
                }
            })
            .collect();
        NpSolutionSet {
            entries,
            unbounded_tail,
            u: u.clone(),
        }
    }

    /// Scans the knots upwards from `max(y)` for the first feasible `n`.
    fn set_from_scan(
        &self,
        memo: &mut Memo,
        u: &UniformConfig,
        ext: &[(f64, f64)],
    ) -> NpSolutionSet {
        for &n in &self.knots {
            if self.feasible(memo, n, ext) {
                return self.set_from_anchor(memo, u, ext, n);
            }
            if self.converged(memo, n, ext) {
                break;
            }
        }
        NpSolutionSet {
            entries: Vec::new(),
            unbounded_tail: false,
            u: u.clone(),
        }
    }
}

/// Computes the solution set for a configuration `u` and counts `y`.
///
/// Knots are scanned upwards from `max(y)`; past the dense head a feasible
/// run lying strictly between two knots is not detected.
pub fn solution_set(u: &UniformConfig, y: &[u64], eps2: f64) -> Result<NpSolutionSet> {
    if u.len() != y.len() {
        return domain(format!("{} uniforms for {} observations", u.len(), y.len()));
    }
    if !(eps2 > 0.0) {
        return config(format!("eps2 must be positive, got {eps2}"));
    }
    let groups = Groups::new(y, eps2)?;
    let ext = groups.extremes(u.values());
    Ok(groups.set_from_scan(&mut Memo::default(), u, &ext))
}

/// Checks a recorded set against the data: `n` strictly increasing and at
/// least `max(y)`, every interval nonempty, and the midpoint of every
/// interval reproducing each `yᵢ` from its uniform.
pub fn check_set(set: &NpSolutionSet, y: &[u64]) -> Result<()> {
    let fail = |msg: String| Err(GfiError::Invariant(msg));
    if set.entries.is_empty() {
        return fail("empty solution set".into());
    }
    if set.u.len() != y.len() {
        return fail(format!(
            "{} uniforms for {} observations",
            set.u.len(),
            y.len()
        ));
    }
    let max_y = y.iter().copied().max().unwrap_or(0);
    if set.entries[0].n < max_y {
        return fail(format!(
            "n = {} is below max(y) = {max_y}",
            set.entries[0].n
        ));
    }
    if set.entries.windows(2).any(|w| w[1].n <= w[0].n) {
        return fail("n values are not strictly increasing".into());
    }
    for e in &set.entries {
        if !(e.mu_lo < e.mu_hi) {
            return fail(format!(
                "empty interval ({}, {}] at n = {}",
                e.mu_lo, e.mu_hi, e.n
            ));
        }
        let p = 0.5 * (e.mu_lo + e.mu_hi) / e.n as f64;
        for (&v, &u) in y.iter().zip(set.u.values()) {
            if !(binom_cdf_unchecked(e.n, p, v as i64 - 1) < u
                && u <= binom_cdf_unchecked(e.n, p, v as i64))
            {
                return fail(format!(
                    "(n = {}, p = {p}) does not reproduce y = {v} from u = {u}",
                    e.n
                ));
            }
        }
    }
    Ok(())
}

/// Sampler state: a configuration with a nonempty solution set.
#[derive(Debug, Clone)]
pub struct NpState {
    pub set: NpSolutionSet,
    groups: Groups,
    memo: Memo,
}

impl NpState {
    fn from_config(groups: Groups, u: UniformConfig, anchor: u64) -> Result<Self> {
        let mut memo = Memo::default();
        let ext = groups.extremes(u.values());
        if !groups.feasible(&mut memo, anchor, &ext) {
            return Err(GfiError::Invariant(format!(
                "configuration has no solution at n = {anchor}"
            )));
        }
        let set = groups.set_from_anchor(&mut memo, &u, &ext, anchor);
        Ok(Self { set, groups, memo })
    }

    pub fn u(&self) -> &UniformConfig {
        &self.set.u
    }

    fn first_interval(&self) -> Result<(u64, f64, f64)> {
        let e =
            self.set.entries.first().ok_or_else(|| {
                GfiError::Invariant("sampler state has an empty solution set".into())
            })?;
        Ok((e.n, e.mu_lo, e.mu_hi))
    }
}

/// State for an arbitrary configuration; fails when its solution set is empty.
pub fn state_from_config(y: &[u64], u: UniformConfig, eps2: f64) -> Result<NpState> {
    let set = solution_set(&u, y, eps2)?;
    let anchor = set
        .min_n()
        .ok_or_else(|| GfiError::Domain("configuration has an empty solution set".into()))?;
    NpState::from_config(Groups::new(y, eps2)?, u, anchor)
}

fn mean_and_variance(y: &[u64]) -> (f64, f64) {
    let m = y.len() as f64;
    let mean = y.iter().sum::<u64>() as f64 / m;
    if y.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let s2 = y.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, s2)
}

/// Moment estimate of `n`, clamped to `[max y, 10·max y]`; `2·max y` when the
/// data are not under-dispersed or have no spread at all.
pub fn initial_n(y: &[u64]) -> Result<u64> {
    let max_y = y
        .iter()
        .copied()
        .max()
        .ok_or_else(|| GfiError::Domain("need at least one observation".into()))?;
    if max_y == 0 {
        return Err(GfiError::Unidentifiable(
            "all counts are zero, so n cannot be estimated".into(),
        ));
    }
    let (mean, s2) = mean_and_variance(y);
    if mean <= s2 || s2 == 0.0 {
        return Ok(2 * max_y);
    }
    let est = (mean * mean / (mean - s2)).round();
    Ok(est.clamp(max_y as f64, 10.0 * max_y as f64) as u64)
}

/// Starting state: `n̂` from [`initial_n`], `p̂ = ȳ/n̂`, and each `uᵢ` at the
/// midpoint of `(F_{n̂,p̂}(yᵢ−1), F_{n̂,p̂}(yᵢ)]`.
pub fn init_state(y: &[u64], cfg: &NpSamplerConfig) -> Result<NpState> {
    cfg.validate()?;
    let n = initial_n(y)?;
    let p = y.iter().sum::<u64>() as f64 / y.len() as f64 / n as f64;
    let u: Vec<f64> = y
        .iter()
        .map(|&v| {
            0.5 * (binom_cdf_unchecked(n, p, v as i64 - 1) + binom_cdf_unchecked(n, p, v as i64))
        })
        .collect();
    NpState::from_config(Groups::new(y, cfg.eps2)?, UniformConfig::new(u)?, n)
}

/// Uniform draw from a union of open intervals; also returns the index of
/// the interval the draw came from.
fn sample_union<R: Rng + ?Sized>(parts: &[(f64, f64)], rng: &mut R) -> Option<(f64, usize)> {
    // overlapping pieces are handled by rejection: pick a piece by length,
    // draw inside it, and keep the draw only if it is not covered by an
    // earlier piece
    let lens: Vec<f64> = parts.iter().map(|(a, b)| (b - a).max(0.0)).collect();
    let total: f64 = lens.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    for _ in 0..10_000 {
        let mut t = open01(rng) * total;
        let mut k = 0;
        while k + 1 < lens.len() && t >= lens[k] {
            t -= lens[k];
            k += 1;
        }
        let (a, b) = parts[k];
        let x = a + (b - a) * open01(rng);
        if !(x > a && x < b) {
            continue;
        }
        if parts[..k].iter().any(|&(c, d)| x > c && x < d) {
            continue;
        }
        return Some((x, k));
    }
    None
}

/// Min and max over `members`, skipping index `skip`.
fn extremes_without(u: &[f64], members: &[usize], skip: usize) -> Option<(f64, f64)> {
    members
        .iter()
        .filter(|&&i| i != skip)
        .map(|&i| u[i])
        .fold(None, |acc, x| {
            Some(acc.map_or((x, x), |(a, b): (f64, f64)| (a.min(x), b.max(x))))
        })
}

/// One sweep over the uniforms, batch by batch of equal counts. Each `uᵢ` is
/// redrawn uniformly over the values that keep the joint solution set
/// nonempty, given every other uniform.
///
/// The admissible values are collected over the `n` of the current set and
/// the knots beyond either end where the rest of the configuration stays
/// feasible.
pub fn gibbs_scan<R: Rng + ?Sized>(state: NpState, rng: &mut R) -> Result<NpState> {
    let NpState {
        set,
        groups,
        mut memo,
    } = state;
    let mut u = set.u.u;
    let mut ext = groups.extremes(&u);
    let mut pts: Vec<u64> = set.entries.iter().map(|e| e.n).collect();
    let mut anchor = pts[0];
    for g in 0..groups.values.len() {
        let y = groups.values[g];
        let members = &groups.members[g];
        // the other groups' interval at each n does not change within this batch
        let mut rest: HashMap<u64, (f64, f64)> = HashMap::default();
        for &i in members {
            let others = extremes_without(&u, members, i);
            let mut constraint = |memo: &mut Memo, n: u64| -> (f64, f64) {
                let (mut lo, mut up) = *rest
                    .entry(n)
                    .or_insert_with(|| groups.interval_without(memo, n, &ext, Some(g)));
                if let Some((a, b)) = others {
                    lo = lo.max(groups.bound(memo, g, a, Side::Lower, n));
                    up = up.min(groups.bound(memo, g, b, Side::Upper, n));
                }
                (lo, up)
            };
            let mut admissible: Vec<(u64, f64, f64)> = Vec::new();
            for &n in &pts {
                let (lo, up) = constraint(&mut memo, n);
                if lo < up {
                    admissible.push((n, lo, up));
                }
            }
            if admissible.first().map(|a| a.0) == pts.first().copied() {
                let mut n = pts[0];
                while let Some(c) = groups.knot_below(n) {
                    let (lo, up) = constraint(&mut memo, c);
                    if lo >= up {
                        break;
                    }
                    admissible.push((c, lo, up));
                    pts.insert(0, c);
                    n = c;
                }
            }
            if admissible.iter().any(|a| Some(a.0) == pts.last().copied()) {
                let mut n = *pts.last().unwrap();
                while !groups.converged(&mut memo, n, &ext) {
                    let Some(c) = groups.knot_above(n) else { break };
                    let (lo, up) = constraint(&mut memo, c);
                    if lo >= up {
                        break;
                    }
                    admissible.push((c, lo, up));
                    pts.push(c);
                    n = c;
                }
            }
            let parts: Vec<(f64, f64)> = admissible
                .iter()
                .map(|&(n, lo, up)| {
                    let nf = n as f64;
                    (
                        binom_cdf_unchecked(n, (up / nf).min(1.0), y as i64 - 1),
                        binom_cdf_unchecked(n, lo / nf, y as i64),
                    )
                })
                .collect();
            let (x, k) = sample_union(&parts, rng).ok_or_else(|| {
                GfiError::Invariant(format!("no admissible value for uniform {i} (count {y})"))
            })?;
            u[i] = x;
            anchor = admissible[k].0;
            ext[g] = extremes_without(&u, members, usize::MAX).unwrap();
        }
    }
    let u = UniformConfig::new(u)?;
    if !groups.feasible(&mut memo, anchor, &ext) {
        return Err(GfiError::Invariant(format!(
            "Gibbs scan left no solution at n = {anchor}"
        )));
    }
    let set = groups.set_from_anchor(&mut memo, &u, &ext, anchor);
    memo.retain_current(&ext);
    Ok(NpState { set, groups, memo })
}

/// Log-likelihood `Σ ln P(Bin(n, μ/n) = yᵢ)`, the log volume of the box of
/// configurations consistent with `(n, μ)`.
fn box_ln_volume(y: &[u64], n: u64, mu: f64) -> f64 {
    let p = mu / n as f64;
    y.iter().map(|&v| binom_ln_pmf(n, v, p)).sum()
}

/// Log acceptance ratio for moving from a state whose smallest-`n` interval
/// has length `old_len`, with auxiliary point `old`, to a state proposed from
/// the box at `new` whose smallest-`n` interval has length `new_len`.
///
/// The auxiliary point is uniform on the current smallest-`n` interval and the
/// proposed configuration is uniform on the box of configurations
/// reproducing `y` at the proposed point; the reverse move retraces both
/// choices, giving `|I_old|·L(new) / (|I_new|·L(old))`.
pub fn mh_log_ratio(
    y: &[u64],
    old_len: f64,
    old: (u64, f64),
    new_len: f64,
    new: (u64, f64),
) -> f64 {
    old_len.ln() + box_ln_volume(y, new.0, new.1) - new_len.ln() - box_ln_volume(y, old.0, old.1)
}

/// Outcome of one Metropolis–Hastings move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome {
    pub accepted: bool,
    /// `None` when the proposal was rejected before the ratio was formed.
    pub log_ratio: Option<f64>,
}

const REJECTED: MhOutcome = MhOutcome {
    accepted: false,
    log_ratio: None,
};

/// Proposes a configuration from the box at `new` and accepts it with
/// [`mh_log_ratio`]. The move is only reversible when `new.0` is the
/// smallest feasible `n` of the proposed configuration, so anything else is
/// rejected.
fn mh_move<R: Rng + ?Sized>(
    mut state: NpState,
    y: &[u64],
    old: (u64, f64),
    old_len: f64,
    new: (u64, f64),
    rng: &mut R,
) -> Result<(NpState, MhOutcome)> {
    let (n_new, mu_new) = new;
    if n_new < state.groups.first_n() || !(mu_new > 0.0) || mu_new >= n_new as f64 {
        return Ok((state, REJECTED));
    }
    let p = mu_new / n_new as f64;
    let mut u = Vec::with_capacity(y.len());
    for &v in y {
        let a = binom_cdf_unchecked(n_new, p, v as i64 - 1);
        let b = binom_cdf_unchecked(n_new, p, v as i64);
        let x = a + (b - a) * open01(rng);
        if !(x > a && x < b && x > 0.0 && x < 1.0) {
            return Ok((state, REJECTED));
        }
        u.push(x);
    }
    let ext = state.groups.extremes(&u);
    let groups = &state.groups;
    let memo = &mut state.memo;
    if n_new > groups.first_n() && groups.feasible(memo, n_new - 1, &ext) {
        return Ok((state, REJECTED));
    }
    let (lo, hi) = groups.interval(memo, n_new, &ext);
    if !(hi > lo) {
        return Ok((state, REJECTED));
    }
    let log_ratio = mh_log_ratio(y, old_len, old, hi - lo, new);
    if !(log_ratio >= 0.0 || open01(rng).ln() < log_ratio) {
        return Ok((
            state,
            MhOutcome {
                accepted: false,
                log_ratio: Some(log_ratio),
            },
        ));
    }
    let set = groups.set_from_anchor(memo, &UniformConfig::new(u)?, &ext, n_new);
    if set.min_n() != Some(n_new) {
        return Err(GfiError::Invariant(format!(
            "accepted configuration starts at n = {:?}, expected {n_new}",
            set.min_n()
        )));
    }
    state.memo.retain_current(&ext);
    state.set = set;
    Ok((
        state,
        MhOutcome {
            accepted: true,
            log_ratio: Some(log_ratio),
        },
    ))
}

/// Random-walk move in μ at the smallest feasible `n`.
pub fn mh_step_mu<R: Rng + ?Sized>(
    state: NpState,
    y: &[u64],
    sd: f64,
    rng: &mut R,
) -> Result<(NpState, MhOutcome)> {
    let (n, lo, hi) = state.first_interval()?;
    let mu_star = lo + (hi - lo) * open01(rng);
    let mu_new = mu_star + sd * standard_normal(rng);
    mh_move(state, y, (n, mu_star), hi - lo, (n, mu_new), rng)
}

/// Move of the smallest feasible `n` by ±1 at a μ drawn from its interval.
pub fn mh_step_n<R: Rng + ?Sized>(
    state: NpState,
    y: &[u64],
    rng: &mut R,
) -> Result<(NpState, MhOutcome)> {
    let (n, lo, hi) = state.first_interval()?;
    let mu_star = lo + (hi - lo) * open01(rng);
    let n_new = if rng.random::<bool>() {
        n + 1
    } else {
        n.saturating_sub(1)
    };
    mh_move(state, y, (n, mu_star), hi - lo, (n_new, mu_star), rng)
}

/// Recorded draws and move statistics from [`run_np_sampler`].
#[derive(Debug, Clone)]
pub struct NpRun {
    pub sets: Vec<NpSolutionSet>,
    pub mu_acceptance: f64,
    pub n_acceptance: f64,
}

/// Metropolis within Gibbs: per iteration a Gibbs scan, a μ move and an `n`
/// move; post-burn-in solution sets are recorded.
pub fn run_np_sampler(y: &[u64], cfg: &NpSamplerConfig) -> Result<NpRun> {
    cfg.validate()?;
    let mut rng = crate::numerics::seeded(cfg.seed);
    let sd = cfg.proposal_sd(y);
    let mut state = init_state(y, cfg)?;
    let mut sets = Vec::with_capacity(cfg.iterations - cfg.burn_in);
    let (mut acc_mu, mut acc_n) = (0usize, 0usize);
    for it in 0..cfg.iterations {
        state = gibbs_scan(state, &mut rng)?;
        let (s, o) = mh_step_mu(state, y, sd, &mut rng)?;
        acc_mu += o.accepted as usize;
        let (s, o) = mh_step_n(s, y, &mut rng)?;
        acc_n += o.accepted as usize;
        state = s;
        if it >= cfg.burn_in {
            sets.push(state.set.clone());
        }
    }
    let it = cfg.iterations as f64;
    log::debug!(
        "binomial (n, mu) sampler: mu acceptance {:.3}, n acceptance {:.3}",
        acc_mu as f64 / it,
        acc_n as f64 / it
    );
    Ok(NpRun {
        sets,
        mu_acceptance: acc_mu as f64 / it,
        n_acceptance: acc_n as f64 / it,
    })
}
