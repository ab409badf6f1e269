//! Confidence regions built from fiducial draws.
//!
//! Covariance draws are summarized either by a ball around their elementwise
//! mean under a matrix distance, or by a central interval of a scalar
//! functional. Set-valued draws of the binomial `(n, μ)` sampler get belief
//! and plausibility boxes.
//!
//! All empirical quantiles are type 7 ([`quantile_sorted`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binom_np::NpSolutionSet;
use crate::error::{domain, GfiError, Result};
use crate::numerics::linalg::chol_logdet;
use crate::numerics::{quantile_sorted, sorted_copy, SpdMatrix};

fn same_dim(m: &SpdMatrix, n: &SpdMatrix) -> Result<()> {
    if m.dim() != n.dim() {
        return domain(format!("dimension mismatch: {} vs {}", m.dim(), n.dim()));
    }
    Ok(())
}

/// Eigenvalues λ of `det(λM − N) = 0`, from `L⁻¹ N L⁻ᵀ` with `M = L Lᵀ`.
pub fn generalized_eigenvalues(m: &SpdMatrix, n: &SpdMatrix) -> Result<Vec<f64>> {
    same_dim(m, n)?;
    let l = m.cholesky_l()?;
    let li = l
        .solve_lower_triangular(&DMatrix::identity(m.dim(), m.dim()))
        .ok_or_else(|| GfiError::Singular("Cholesky factor".into()))?;
    let w = &li * n.matrix() * li.transpose();
    let w = (&w + w.transpose()) * 0.5;
    let ev: Vec<f64> = SymmetricEigen::new(w).eigenvalues.iter().copied().collect();
    if ev.iter().any(|&x| !(x > 0.0)) {
        return Err(GfiError::NotSpd(
            "generalized eigenvalue is not positive".into(),
        ));
    }
    Ok(ev)
}

/// Förstner–Moonen distance `√Σ ln² λᵢ(M, N)`.
pub fn fm_distance(m: &SpdMatrix, n: &SpdMatrix) -> Result<f64> {
    Ok(generalized_eigenvalues(m, n)?
        .iter()
        .map(|l| l.ln().powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Stein loss `tr(M⁻¹N) − ln det(M⁻¹N) − d`, evaluated as `Σ (λᵢ − ln λᵢ − 1)`
/// over the generalized eigenvalues. Not symmetric in its arguments.
pub fn stein_loss(m: &SpdMatrix, n: &SpdMatrix) -> Result<f64> {
    let s: f64 = generalized_eigenvalues(m, n)?
        .iter()
        .map(|&l| l - l.ln() - 1.0)
        .sum();
    Ok(s.max(0.0))
}

/// Largest absolute eigenvalue of a symmetric matrix; the largest eigenvalue
/// when the matrix is SPD.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `√tr(M Mᵀ)`.
pub fn frobenius_norm(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn logdet(m: &SpdMatrix) -> Result<f64> {
    chol_logdet(m.matrix()).ok_or_else(|| GfiError::NotSpd("Cholesky factorization failed".into()))
}

/// Distances used for covariance balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixMetric {
    Fm,
    Stein,
    Spectral,
    Frobenius,
}

impl MatrixMetric {
    /// `dist(center, x)`.
    pub fn dist(self, center: &SpdMatrix, x: &SpdMatrix) -> Result<f64> {
        match self {
            MatrixMetric::Fm => fm_distance(center, x),
            MatrixMetric::Stein => stein_loss(center, x),
            MatrixMetric::Spectral => {
                same_dim(center, x)?;
                Ok(spectral_norm(&(center.matrix() - x.matrix())))
            }
            MatrixMetric::Frobenius => {
                same_dim(center, x)?;
                Ok(frobenius_norm(&(center.matrix() - x.matrix())))
            }
        }
    }
}

/// Scalar summaries used for central intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixFunctional {
    LogDet,
    Spectral,
    Frobenius,
}

impl MatrixFunctional {
    pub fn eval(self, m: &SpdMatrix) -> Result<f64> {
        match self {
            MatrixFunctional::LogDet => logdet(m),
            MatrixFunctional::Spectral => Ok(spectral_norm(m.matrix())),
            MatrixFunctional::Frobenius => Ok(frobenius_norm(m.matrix())),
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&level) {
        return domain(format!("level must lie in [0, 1], got {level}"));
    }
    Ok(())
}

fn enough<T>(draws: &[T]) -> Result<()> {
    if draws.len() < 2 {
        return Err(GfiError::InsufficientDraws {
            needed: 2,
            got: draws.len(),
        });
    }
    Ok(())
}

/// Empirical `((1−level)/2, (1+level)/2)` quantiles.
pub fn central_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    enough(draws)?;
    check_level(level)?;
    let s = sorted_copy(draws);
    Ok(central_from_sorted(&s, level))
}

fn central_from_sorted(s: &[f64], level: f64) -> (f64, f64) {
    let a = (1.0 - level) / 2.0;
    (quantile_sorted(s, a), quantile_sorted(s, 1.0 - a))
}

/// Distances from the draw mean, kept sorted so radii at any level are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFit<C> {
    pub center: C,
    dists: Vec<f64>,
}

impl<C> BallFit<C> {
    pub fn radius(&self, level: f64) -> f64 {
        quantile_sorted(&self.dists, level)
    }

    pub fn distances(&self) -> &[f64] {
        &self.dists
    }
}

pub fn elementwise_mean(draws: &[SpdMatrix]) -> Result<SpdMatrix> {
    let first = draws
        .first()
        .ok_or(GfiError::InsufficientDraws { needed: 1, got: 0 })?;
    let d = first.dim();
    let mut acc = DMatrix::zeros(d, d);
    for m in draws {
        if m.dim() != d {
            return domain("draws differ in dimension");
        }
        acc += m.matrix();
    }
    SpdMatrix::new(acc / draws.len() as f64)
}

impl BallFit<SpdMatrix> {
    pub fn fit(draws: &[SpdMatrix], metric: MatrixMetric) -> Result<Self> {
        enough(draws)?;
        let center = elementwise_mean(draws)?;
        let d: Result<Vec<f64>> = draws.iter().map(|x| metric.dist(&center, x)).collect();
        Ok(Self {
            dists: sorted_copy(&d?),
            center,
        })
    }
}

impl BallFit<Vec<f64>> {
    /// Euclidean ball around the mean vector.
    pub fn fit_euclidean(draws: &[Vec<f64>]) -> Result<Self> {
        enough(draws)?;
        let d = draws[0].len();
        if draws.iter().any(|v| v.len() != d) {
            return domain("draws differ in dimension");
        }
        let mut center = vec![0.0; d];
        for v in draws {
            for (c, x) in center.iter_mut().zip(v) {
                *c += x;
            }
        }
        center.iter_mut().for_each(|c| *c /= draws.len() as f64);
        let dists: Vec<f64> = draws.iter().map(|v| euclidean(&center, v)).collect();
        Ok(Self {
            dists: sorted_copy(&dists),
            center,
        })
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// A ball at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball<C> {
    pub center: C,
    pub radius: f64,
}

impl Ball<SpdMatrix> {
    pub fn contains(&self, x: &SpdMatrix, metric: MatrixMetric) -> Result<bool> {
        Ok(metric.dist(&self.center, x)? <= self.radius)
    }
}

impl Ball<Vec<f64>> {
    pub fn contains(&self, x: &[f64]) -> bool {
        euclidean(&self.center, x) <= self.radius
    }
}

/// Ball around the elementwise mean holding a `level` fraction of the draws.
pub fn ball_region(
    draws: &[SpdMatrix],
    metric: MatrixMetric,
    level: f64,
) -> Result<Ball<SpdMatrix>> {
    check_level(level)?;
    let fit = BallFit::fit(draws, metric)?;
    Ok(Ball {
        radius: fit.radius(level),
        center: fit.center,
    })
}

pub fn euclidean_ball(draws: &[Vec<f64>], level: f64) -> Result<Ball<Vec<f64>>> {
    check_level(level)?;
    let fit = BallFit::fit_euclidean(draws)?;
    Ok(Ball {
        radius: fit.radius(level),
        center: fit.center,
    })
}

/// The seven covariance regions reported for the multivariate normal study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovRegion {
    FmDistance,
    SteinLoss,
    LogDetParameter,
    SpectralParameter,
    FrobeniusParameter,
    SpectralDistance,
    FrobeniusDistance,
}

impl CovRegion {
    pub const ALL: [CovRegion; 7] = [
        CovRegion::FmDistance,
        CovRegion::SteinLoss,
        CovRegion::LogDetParameter,
        CovRegion::SpectralParameter,
        CovRegion::FrobeniusParameter,
        CovRegion::SpectralDistance,
        CovRegion::FrobeniusDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovRegion::FmDistance => "fm_distance",
            CovRegion::SteinLoss => "stein_loss",
            CovRegion::LogDetParameter => "logdet",
            CovRegion::SpectralParameter => "spectral_norm",
            CovRegion::FrobeniusParameter => "frobenius_norm",
            CovRegion::SpectralDistance => "spectral_distance",
            CovRegion::FrobeniusDistance => "frobenius_distance",
        }
    }

    pub fn kind(self) -> RegionKind {
        match self {
            CovRegion::LogDetParameter
            | CovRegion::SpectralParameter
            | CovRegion::FrobeniusParameter => RegionKind::CentralInterval,
            _ => RegionKind::Ball,
        }
    }

    fn metric(self) -> Option<MatrixMetric> {
        match self {
            CovRegion::FmDistance => Some(MatrixMetric::Fm),
            CovRegion::SteinLoss => Some(MatrixMetric::Stein),
            CovRegion::SpectralDistance => Some(MatrixMetric::Spectral),
            CovRegion::FrobeniusDistance => Some(MatrixMetric::Frobenius),
            _ => None,
        }
    }

    fn functional(self) -> Option<MatrixFunctional> {
        match self {
            CovRegion::LogDetParameter => Some(MatrixFunctional::LogDet),
            CovRegion::SpectralParameter => Some(MatrixFunctional::Spectral),
            CovRegion::FrobeniusParameter => Some(MatrixFunctional::Frobenius),
            _ => None,
        }
    }

    /// Fits the region to covariance draws once; levels are applied afterwards.
    pub fn fit(self, draws: &[SpdMatrix]) -> Result<CovRegionFit> {
        if let Some(metric) = self.metric() {
            return Ok(CovRegionFit::Ball {
                metric,
                fit: BallFit::fit(draws, metric)?,
            });
        }
        let f = self
            .functional()
            .expect("every region is a ball or an interval");
        enough(draws)?;
        let vals: Result<Vec<f64>> = draws.iter().map(|m| f.eval(m)).collect();
        Ok(CovRegionFit::Interval {
            functional: f,
            sorted: sorted_copy(&vals?),
        })
    }
}

impl fmt::Display for CovRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CovRegion {
    type Err = GfiError;

    fn from_str(s: &str) -> Result<Self> {
        CovRegion::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| GfiError::Config(format!("unknown covariance region '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovRegionFit {
    Ball {
        metric: MatrixMetric,
        fit: BallFit<SpdMatrix>,
    },
    Interval {
        functional: MatrixFunctional,
        sorted: Vec<f64>,
    },
}

impl CovRegionFit {
    /// Whether the region at `level` contains `truth`, with the radius or
    /// interval width as a size summary.
    pub fn covers(&self, truth: &SpdMatrix, level: f64) -> Result<(bool, f64)> {
        check_level(level)?;
        match self {
            CovRegionFit::Ball { metric, fit } => {
                let r = fit.radius(level);
                Ok((metric.dist(&fit.center, truth)? <= r, r))
            }
            CovRegionFit::Interval { functional, sorted } => {
                let (lo, hi) = central_from_sorted(sorted, level);
                let v = functional.eval(truth)?;
                Ok((lo <= v && v <= hi, hi - lo))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Ball,
    CentralInterval,
    BeliefBox,
    PlausibilityBox,
}

/// What to build: a kind, a level in `(0, 1)` and the metric or functional name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub level: f64,
    pub metric: String,
}

impl RegionSpec {
    pub fn new(kind: RegionKind, level: f64, metric: impl Into<String>) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return domain(format!("level must lie in (0, 1), got {level}"));
        }
        Ok(Self {
            kind,
            level,
            metric: metric.into(),
        })
    }
}

/// Rectangle `[n_lo, n_hi] × [mu_lo, mu_hi]` in `(n, μ)` space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpBox {
    pub n_lo: f64,
    pub n_hi: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
    /// Set when the box had to grow without bound.
    pub unbounded: bool,
}

impl NpBox {
    pub fn contains(&self, n: f64, mu: f64) -> bool {
        self.n_lo <= n && n <= self.n_hi && self.mu_lo <= mu && mu <= self.mu_hi
    }
}

/// Representative points of set-valued draws (see
/// [`NpSolutionSet::representative`]), one per set.
pub fn representatives<R: Rng + ?Sized>(
    sets: &[NpSolutionSet],
    rng: &mut R,
) -> Result<Vec<(u64, f64, bool)>> {
    sets.iter()
        .map(|s| {
            s.representative(rng)
                .ok_or_else(|| GfiError::Domain("empty solution set".into()))
        })
        .collect()
}

/// Belief and plausibility boxes for a collection of set-valued draws.
///
/// Boxes are centered at the marginal medians of the representatives and
/// have half-widths `t·s_n`, `t·s_μ` with `s` the marginal interquartile
/// range (half the range if the IQR is zero, then 1). For each draw we find
/// the smallest `t` at which the box contains it (belief) or meets it
/// (plausibility); the box at a level uses the matching order statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxFit {
    pub center: (f64, f64),
    pub scale: (f64, f64),
    t_belief: Vec<f64>,
    t_plaus: Vec<f64>,
}

fn robust_scale(xs: &[f64]) -> f64 {
    let s = sorted_copy(xs);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    if iqr > 0.0 {
        return iqr;
    }
    let half_range = 0.5 * (s[s.len() - 1] - s[0]);
    if half_range > 0.0 {
        half_range
    } else {
        1.0
    }
}

impl BoxFit {
    pub fn fit(sets: &[NpSolutionSet], reps: &[(u64, f64, bool)]) -> Result<Self> {
        if sets.is_empty() || sets.len() != reps.len() {
            return Err(GfiError::InsufficientDraws {
                needed: 1,
                got: sets.len().min(reps.len()),
            });
        }
        let ns: Vec<f64> = reps.iter().map(|r| r.0 as f64).collect();
        let mus: Vec<f64> = reps.iter().map(|r| r.1).collect();
        let center = (
            quantile_sorted(&sorted_copy(&ns), 0.5),
            quantile_sorted(&sorted_copy(&mus), 0.5),
        );
        let scale = (robust_scale(&ns), robust_scale(&mus));
        let mut t_belief = Vec::with_capacity(sets.len());
        let mut t_plaus = Vec::with_capacity(sets.len());
        for s in sets {
            if s.is_empty() {
                return domain("empty solution set");
            }
            t_belief.push(containing_t(s, center, scale));
            t_plaus.push(meeting_t(s, center, scale));
        }
        Ok(Self {
            center,
            scale,
            t_belief: sorted_copy(&t_belief),
            t_plaus: sorted_copy(&t_plaus),
        })
    }

    fn rect(&self, t: f64) -> NpBox {
        if !t.is_finite() {
            return NpBox {
                n_lo: f64::NEG_INFINITY,
                n_hi: f64::INFINITY,
                mu_lo: f64::NEG_INFINITY,
                mu_hi: f64::INFINITY,
                unbounded: true,
            };
        }
        let (cn, cm) = self.center;
        let (sn, sm) = self.scale;
        NpBox {
            n_lo: cn - t * sn,
            n_hi: cn + t * sn,
            mu_lo: cm - t * sm,
            mu_hi: cm + t * sm,
            unbounded: false,
        }
    }

    /// Smallest box fully containing at least a `level` fraction of the sets.
    /// Unbounded when more than `1 − level` of them have unbounded tails.
    pub fn belief(&self, level: f64) -> Result<NpBox> {
        Ok(self.rect(order_stat(&self.t_belief, level)?))
    }

    /// Smallest box meeting at least a `level` fraction of the sets.
    pub fn plausibility(&self, level: f64) -> Result<NpBox> {
        Ok(self.rect(order_stat(&self.t_plaus, level)?))
    }
}

fn order_stat(sorted: &[f64], level: f64) -> Result<f64> {
    check_level(level)?;
    let k = (level * sorted.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    Ok(if k == 0 {
        0.0
    } else {
        sorted[k.min(sorted.len()) - 1]
    })
}

fn containing_t(s: &NpSolutionSet, (cn, cm): (f64, f64), (sn, sm): (f64, f64)) -> f64 {
    if s.unbounded_tail {
        return f64::INFINITY;
    }
    let (n0, n1) = (s.min_n().unwrap() as f64, s.max_n().unwrap() as f64);
    let (m0, m1) = (s.mu_min().unwrap(), s.mu_max().unwrap());
    ((cn - n0) / sn)
        .max((n1 - cn) / sn)
        .max((cm - m0) / sm)
        .max((m1 - cm) / sm)
        .max(0.0)
}

fn meeting_t(s: &NpSolutionSet, (cn, cm): (f64, f64), (sn, sm): (f64, f64)) -> f64 {
    let meets = |t: f64| s.intersects(cn - t * sn, cn + t * sn, cm - t * sm, cm + t * sm);
    // any listed entry bounds the answer from above
    let mut hi = s
        .entries
        .iter()
        .map(|e| {
            let dm = if cm < e.mu_lo {
                e.mu_lo - cm
            } else if cm > e.mu_hi {
                cm - e.mu_hi
            } else {
                0.0
            };
            ((e.n as f64 - cn).abs() / sn).max(dm / sm)
        })
        .fold(f64::INFINITY, f64::min);
    if s.unbounded_tail {
        let last = s.entries.last().unwrap();
        if cn > last.n as f64 {
            let dm = if cm < last.mu_lo {
                last.mu_lo - cm
            } else if cm > last.mu_hi {
                cm - last.mu_hi
            } else {
                0.0
            };
            hi = hi.min(dm / sm);
        }
    }
    if meets(0.0) {
        return 0.0;
    }
    hi = hi * (1.0 + 1e-12) + 1e-300;
    if !meets(hi) {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if meets(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Belief and plausibility boxes at one level; representatives are drawn with `rng`.
pub fn belief_plaus_boxes<R: Rng + ?Sized>(
    sets: &[NpSolutionSet],
    level: f64,
    rng: &mut R,
) -> Result<(NpBox, NpBox)> {
    let reps = representatives(sets, rng)?;
    let fit = BoxFit::fit(sets, &reps)?;
    Ok((fit.belief(level)?, fit.plausibility(level)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(rows: &[&[f64]]) -> SpdMatrix {
        let d = rows.len();
        SpdMatrix::new(DMatrix::from_fn(d, d, |i, j| rows[i][j])).unwrap()
    }

    #[test]
    fn fm_scalar_case() {
        let a = spd(&[&[1.0]]);
        let b = spd(&[&[std::f64::consts::E.powi(2)]]);
        assert!((fm_distance(&a, &b).unwrap() - 2.0).abs() < 1e-12);
        assert!(fm_distance(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn stein_identity_vs_twice_identity() {
        for d in 1..5 {
            let a = SpdMatrix::identity(d);
            let b = SpdMatrix::from_diagonal(&vec![2.0; d]).unwrap();
            let want = d as f64 * (1.0 - 2.0_f64.ln());
            assert!((stein_loss(&a, &b).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_functionals() {
        let m = SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        assert!((spectral_norm(m.matrix()) - 4.0).abs() < 1e-12);
        assert!((frobenius_norm(m.matrix()) - 17.0_f64.sqrt()).abs() < 1e-12);
        assert!((logdet(&m).unwrap() - 4.0_f64.ln()).abs() < 1e-12);
        let i = SpdMatrix::identity(3);
        assert_eq!(spectral_norm(i.matrix()), 1.0);
        assert!((frobenius_norm(i.matrix()) - 3.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(logdet(&i).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(fm_distance(&SpdMatrix::identity(2), &SpdMatrix::identity(3)).is_err());
    }

    #[test]
    fn identical_draws_give_zero_radius() {
        let m = spd(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let draws = vec![m.clone(); 5];
        for metric in [
            MatrixMetric::Fm,
            MatrixMetric::Stein,
            MatrixMetric::Spectral,
            MatrixMetric::Frobenius,
        ] {
            let ball = ball_region(&draws, metric, 0.9).unwrap();
            assert!(ball.radius < 1e-12);
            assert!(ball.contains(&m, metric).unwrap());
            assert!(!ball.contains(&SpdMatrix::identity(2), metric).unwrap());
        }
    }

    #[test]
    fn too_few_draws() {
        assert!(matches!(
            central_interval(&[1.0], 0.9),
            Err(GfiError::InsufficientDraws { .. })
        ));
        assert!(ball_region(&[SpdMatrix::identity(2)], MatrixMetric::Fm, 0.9).is_err());
    }

    #[test]
    fn central_interval_at_zero_is_the_median() {
        let (lo, hi) = central_interval(&[3.0, 1.0, 2.0, 5.0, 4.0], 0.0).unwrap();
        assert_eq!((lo, hi), (3.0, 3.0));
    }

    #[test]
    fn region_names_round_trip() {
        for r in CovRegion::ALL {
            assert_eq!(r.name().parse::<CovRegion>().unwrap(), r);
        }
    }

    #[test]
    fn spec_rejects_boundary_levels() {
        assert!(RegionSpec::new(RegionKind::Ball, 1.0, "fm_distance").is_err());
        assert!(RegionSpec::new(RegionKind::Ball, 0.95, "fm_distance").is_ok());
    }
}
