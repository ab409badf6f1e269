//! Fiducial distribution for a binomial success probability with `n` known.
//!
//! Writing `Y = Σ 1{Uⱼ ≤ p}` over `n` uniforms, the set of `p` reproducing an
//! observed `y` is `(U₍y₎, U₍y+1₎]`. The endpoints are Beta(y, n−y+1) and
//! Beta(y+1, n−y); two conventions turn the interval into a single density:
//!
//! * arithmetic: the average of the two endpoint densities;
//! * geometric: the normalized geometric mean, which is Beta(y+½, n−y+½).
//!
//! `m` observations with `n` trials each pool into one observation
//! `Σyᵢ` out of `nm`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::random::{sample_beta, sample_gamma};
use crate::numerics::special::{beta_pdf_unchecked, inc_beta, inv_inc_beta_from};

/// How the interval-valued draw is reduced to a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Arithmetic,
    Geometric,
}

impl std::str::FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "arithmetic" => Ok(Self::Arithmetic),
            "geometric" => Ok(Self::Geometric),
            other => Err(format!(
                "unknown convention `{other}` (expected arithmetic or geometric)"
            )),
        }
    }
}

/// Pooled binomial data: `m` counts out of `n` trials each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinPModel {
    pub n: u64,
    pub m: u64,
    pub total: u64,
}

impl BinPModel {
    pub fn from_counts(n: u64, counts: &[u64]) -> Result<Self> {
        if n == 0 {
            return domain("number of trials must be positive");
        }
        if counts.is_empty() {
            return domain("need at least one count");
        }
        if let Some(c) = counts.iter().find(|&&c| c > n) {
            return domain(format!("count {c} exceeds the number of trials {n}"));
        }
        Ok(Self {
            n,
            m: counts.len() as u64,
            total: counts.iter().sum(),
        })
    }

    /// Trials in the pooled observation, `n·m`.
    pub fn pooled_trials(&self) -> u64 {
        self.n * self.m
    }
}

fn check(y: u64, n: u64) -> Result<()> {
    if n == 0 || y > n {
        return domain(format!("need 0 <= y <= n and n > 0, got y = {y}, n = {n}"));
    }
    Ok(())
}

/// Draws the interval `(U₍y₎, U₍y+1₎]` of adjacent uniform order statistics.
///
/// Uses the spacing construction: with `G₁ ~ Γ(y)`, `E ~ Exp(1)`,
/// `G₂ ~ Γ(n−y)` and `T = G₁ + E + G₂`, the pair is `(G₁/T, (G₁+E)/T)`.
pub fn gfd_interval_p<R: Rng + ?Sized>(y: u64, n: u64, rng: &mut R) -> Result<(f64, f64)> {
    check(y, n)?;
    let g1 = if y == 0 {
        0.0
    } else {
        sample_gamma(y as f64, 1.0, rng)?
    };
    let e = sample_gamma(1.0, 1.0, rng)?;
    let g2 = if y == n {
        0.0
    } else {
        sample_gamma((n - y) as f64, 1.0, rng)?
    };
    let t = g1 + e + g2;
    let lower = g1 / t;
    let upper = if y == n { 1.0 } else { (g1 + e) / t };
    Ok((lower, upper))
}

/// Beta parameter pairs whose equal-weight mixture (arithmetic) or single
/// component (geometric) is the fiducial density.
fn components(y: u64, n: u64, conv: Convention) -> Vec<(f64, f64)> {
    let (yf, nf) = (y as f64, n as f64);
    match conv {
        Convention::Geometric => vec![(yf + 0.5, nf - yf + 0.5)],
        Convention::Arithmetic if y == 0 => vec![(1.0, nf)],
        Convention::Arithmetic if y == n => vec![(nf, 1.0)],
        Convention::Arithmetic => vec![(yf, nf - yf + 1.0), (yf + 1.0, nf - yf)],
    }
}

/// Fiducial density of `p` at a point.
///
/// Arithmetic: `½[f_{Beta(y, n−y+1)} + f_{Beta(y+1, n−y)}]`, equal to
/// `n/(2y(n−y)) · (p(n−2y) + y) · f_{Beta(y, n−y)}(p)`; at `y = 0` or `y = n`
/// only the nondegenerate endpoint density is used. Geometric:
/// `f_{Beta(y+½, n−y+½)}`.
pub fn gfd_density_p(y: u64, n: u64, p: f64, conv: Convention) -> Result<f64> {
    check(y, n)?;
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    let comps = components(y, n, conv);
    let w = 1.0 / comps.len() as f64;
    Ok(comps
        .iter()
        .map(|&(a, b)| w * beta_pdf_unchecked(a, b, p))
        .sum())
}

/// Fiducial distribution function of `p`.
pub fn gfd_cdf_p(y: u64, n: u64, p: f64, conv: Convention) -> Result<f64> {
    check(y, n)?;
    let comps = components(y, n, conv);
    let w = 1.0 / comps.len() as f64;
    Ok(comps
        .iter()
        .map(|&(a, b)| w * inc_beta(a, b, p.clamp(0.0, 1.0)))
        .sum())
}

/// Fiducial quantile of `p`.
pub fn gfd_quantile_p(y: u64, n: u64, u: f64, conv: Convention) -> Result<f64> {
    check(y, n)?;
    if !(0.0..=1.0).contains(&u) {
        return domain(format!("probability {u} outside [0, 1]"));
    }
    let comps = components(y, n, conv);
    if comps.len() == 1 {
        let (a, b) = comps[0];
        return Ok(inv_inc_beta_from(a, b, u, None));
    }
    // mixture: the quantile lies between the component quantiles
    let q: Vec<f64> = comps
        .iter()
        .map(|&(a, b)| inv_inc_beta_from(a, b, u, None))
        .collect();
    let (mut lo, mut hi) = (q[0].min(q[1]), q[0].max(q[1]));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gfd_cdf_p(y, n, mid, conv)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Equal-tailed interval holding `level` fiducial probability.
pub fn central_interval_p(y: u64, n: u64, level: f64, conv: Convention) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("level must lie in (0, 1), got {level}"));
    }
    let a = 0.5 * (1.0 - level);
    Ok((
        gfd_quantile_p(y, n, a, conv)?,
        gfd_quantile_p(y, n, 1.0 - a, conv)?,
    ))
}

/// Draws from the fiducial distribution of `p` for pooled data.
///
/// Geometric draws are Beta(total+½, nm−total+½); arithmetic draws pick one
/// of the two endpoint Betas with probability ½ each.
pub fn gfd_sample_p<R: Rng + ?Sized>(
    model: &BinPModel,
    conv: Convention,
    count: usize,
    rng: &mut R,
) -> Vec<f64> {
    let comps = components(model.total, model.pooled_trials(), conv);
    (0..count)
        .map(|_| {
            let (a, b) = if comps.len() == 1 {
                comps[0]
            } else {
                comps[rng.random_range(0..comps.len())]
            };
            sample_beta(a, b, rng)
        })
        .collect()
}
