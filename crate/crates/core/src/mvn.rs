//! Fiducial distribution for the mean and covariance of multivariate normal data.
//!
//! Observations are generated as `Y = μ + Z Λ U` with `U` standard normal,
//! `Λ` positive diagonal and `Z = (I − A)(I + A)⁻¹` the Cayley transform of a
//! skew-symmetric `A`. The free entries of `A` are confined to `[−1, 1]`,
//! which is possible for every covariance after flipping column signs of `Z`.
//!
//! Integrating `μ` and `Λ` out of the fiducial density leaves
//!
//! ```text
//! r(veck A) ∝ J*(y, A) · ∏ᵢ (Zᵀ n S² Z)ᵢᵢ^{−(n−1)/2}
//! ```
//!
//! which [`run_chains`] explores by random-walk Metropolis while drawing `Λ`
//! and `μ` exactly from their conditionals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, GfiError, Result};
use crate::mcmc::{check_acceptance, Adapter, ChainConfig};
use crate::numerics::linalg::{log_pseudo_det, SpdMatrix};
use crate::numerics::random::{sample_gamma, standard_normal, stream, GfiRng};

/// Sampler settings for [`run_chains`].
pub type MvnChainConfig = ChainConfig;

/// The `d(d−1)/2` free entries of the skew-symmetric Cayley parameter.
///
/// Entry `a` for the pair `j < k` sits at `A[j][k] = a`, `A[k][j] = −a`.
/// Pairs are enumerated column by column over the strict lower triangle,
/// i.e. `(1,0), (2,0), …, (d−1,0), (2,1), …`. With this sign convention
/// `d = 2, a = 1` gives `Z = [[0, −1], [1, 0]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewParam {
    dim: usize,
    veck: Vec<f64>,
}

/// Index pairs `(j, k)`, `j < k`, in `veck` order.
pub fn skew_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for j in 0..d {
        for k in j + 1..d {
            out.push((j, k));
        }
    }
    out
}

impl SkewParam {
    pub fn new(dim: usize, veck: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be positive");
        }
        if veck.len() != dim * (dim - 1) / 2 {
            return domain(format!(
                "veck for d={dim} needs {} entries, got {}",
                dim * (dim - 1) / 2,
                veck.len()
            ));
        }
        if let Some(x) = veck.iter().find(|x| !(x.abs() <= 1.0)) {
            return domain(format!("skew entry {x} outside [-1, 1]"));
        }
        Ok(Self { dim, veck })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            veck: vec![0.0; dim * dim.saturating_sub(1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn veck(&self) -> &[f64] {
        &self.veck
    }

    /// The full skew-symmetric matrix `A`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for (&(j, k), &v) in skew_pairs(self.dim).iter().zip(&self.veck) {
            a[(j, k)] = v;
            a[(k, j)] = -v;
        }
        a
    }

    /// Reads `veck` back from a (numerically) skew-symmetric matrix.
    pub fn from_matrix(a: &DMatrix<f64>) -> Self {
        let d = a.nrows();
        let veck = skew_pairs(d)
            .iter()
            .map(|&(j, k)| 0.5 * (a[(j, k)] - a[(k, j)]))
            .collect();
        Self { dim: d, veck }
    }
}

/// `Z` together with the two resolvents needed for derivatives.
struct CayleyParts {
    z: DMatrix<f64>,
    /// `(I + A)⁻¹`
    ipa_inv: DMatrix<f64>,
    /// `(I − A)⁻¹`
    ima_inv: DMatrix<f64>,
}

fn cayley_parts(skew: &SkewParam) -> Result<CayleyParts> {
    let d = skew.dim;
    let a = skew.matrix();
    let eye = DMatrix::<f64>::identity(d, d);
    let ipa_inv = (&eye + &a)
        .try_inverse()
        .ok_or_else(|| GfiError::Singular("I + A in the Cayley transform".into()))?;
    let ima_inv = (&eye - &a)
        .try_inverse()
        .ok_or_else(|| GfiError::Singular("I - A in the Cayley transform".into()))?;
    let z = (&eye - &a) * &ipa_inv;
    Ok(CayleyParts {
        z,
        ipa_inv,
        ima_inv,
    })
}

/// Cayley transform `Z = (I − A)(I + A)⁻¹`, an orthogonal matrix with determinant +1.
pub fn cayley(skew: &SkewParam) -> Result<DMatrix<f64>> {
    Ok(cayley_parts(skew)?.z)
}

/// Inverse Cayley transform `A = (I + Z)⁻¹(I − Z)`; fails when `Z` has eigenvalue −1.
pub fn inverse_cayley(z: &DMatrix<f64>) -> Result<SkewParam> {
    let d = z.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    let a = (&eye + z)
        .lu()
        .solve(&(&eye - z))
        .ok_or_else(|| GfiError::Singular("I + Z in the inverse Cayley transform".into()))?;
    Ok(SkewParam::from_matrix(&a))
}

/// `Z diag(λ²) Zᵀ`.
pub fn implied_cov(z: &DMatrix<f64>, lambda: &[f64]) -> DMatrix<f64> {
    let mut zl = z.clone();
    for (j, l) in lambda.iter().enumerate() {
        zl.column_mut(j).scale_mut(*l);
    }
    &zl * zl.transpose()
}

/// One forward pass of the data generating algorithm: `μ + Z Λ u`.
pub fn dga_forward(
    mu: &[f64],
    skew: &SkewParam,
    lambda: &[f64],
    u: &[f64],
) -> Result<DVector<f64>> {
    let z = cayley(skew)?;
    let lu = DVector::from_iterator(u.len(), u.iter().zip(lambda).map(|(u, l)| u * l));
    Ok(DVector::from_column_slice(mu) + z * lu)
}

/// Recovers `u = Λ⁻¹ Zᵀ (y − μ)`, the inverse of [`dga_forward`].
pub fn dga_inverse(
    y: &[f64],
    mu: &[f64],
    skew: &SkewParam,
    lambda: &[f64],
) -> Result<DVector<f64>> {
    let z = cayley(skew)?;
    let r = DVector::from_iterator(y.len(), y.iter().zip(mu).map(|(a, b)| a - b));
    let mut u = z.transpose() * r;
    for (ui, l) in u.iter_mut().zip(lambda) {
        *ui /= l;
    }
    Ok(u)
}

/// Derivative directions of `Y` with respect to `λ` and `veck A`, as matrices
/// applied to `y − μ`: `λ_j⁻¹ z_j z_jᵀ` and `2(I+A)⁻¹(E_kj − E_jk)(I−A)⁻¹`.
fn derivative_maps(parts: &CayleyParts, lambda: Option<&[f64]>) -> Vec<DMatrix<f64>> {
    let d = parts.z.nrows();
    let mut maps = Vec::with_capacity(d + d * (d - 1) / 2);
    for j in 0..d {
        let zj = parts.z.column(j);
        let scale = lambda.map_or(1.0, |l| 1.0 / l[j]);
        maps.push(zj * zj.transpose() * scale);
    }
    for (j, k) in skew_pairs(d) {
        // (I+A)⁻¹ (E_kj − E_jk) (I−A)⁻¹ = col_k(P) row_j(Q) − col_j(P) row_k(Q)
        let p = &parts.ipa_inv;
        let q = &parts.ima_inv;
        let m = (p.column(k) * q.row(j) - p.column(j) * q.row(k)) * 2.0;
        maps.push(m);
    }
    maps
}

/// Jacobian block `∂Yᵢ/∂(μ, λ, veck A)` for one observation, `d × d(d+3)/2`.
///
/// Column order is `μ₁…μ_d`, `λ₁…λ_d`, then `veck A` in [`SkewParam`] order.
pub fn jacobian_columns(
    y: &[f64],
    mu: &[f64],
    skew: &SkewParam,
    lambda: &[f64],
) -> Result<DMatrix<f64>> {
    let d = skew.dim;
    if y.len() != d || mu.len() != d || lambda.len() != d {
        return domain("jacobian_columns: dimension mismatch");
    }
    if lambda.iter().any(|l| !(*l > 0.0)) {
        return domain("lambda entries must be positive");
    }
    let parts = cayley_parts(skew)?;
    let r = DVector::from_iterator(d, y.iter().zip(mu).map(|(a, b)| a - b));
    let maps = derivative_maps(&parts, Some(lambda));
    let mut jac = DMatrix::zeros(d, d + maps.len());
    jac.view_mut((0, 0), (d, d)).fill_with_identity();
    for (c, m) in maps.iter().enumerate() {
        jac.set_column(d + c, &(m * &r));
    }
    Ok(jac)
}

/// Observations with their sufficient statistics.
#[derive(Debug, Clone)]
pub struct MvnData {
    /// `n × d`, one observation per row.
    obs: DMatrix<f64>,
    ybar: DVector<f64>,
    /// `n⁻¹ Σ (Yᵢ − Ȳ)(Yᵢ − Ȳ)ᵀ`
    s2: DMatrix<f64>,
}

impl MvnData {
    pub fn new(obs: DMatrix<f64>) -> Result<Self> {
        let (n, d) = obs.shape();
        if d == 0 || n < 2 {
            return domain(format!(
                "need at least 2 observations of positive dimension, got {n}x{d}"
            ));
        }
        if obs.iter().any(|x| !x.is_finite()) {
            return domain("observations must be finite");
        }
        let ybar = obs.row_mean().transpose();
        let mut centered = obs.clone();
        for mut row in centered.row_iter_mut() {
            row -= ybar.transpose();
        }
        let s2 = centered.transpose() * &centered / n as f64;
        let s2 = (&s2 + s2.transpose()) * 0.5;
        Ok(Self { obs, ybar, s2 })
    }

    pub fn n(&self) -> usize {
        self.obs.nrows()
    }

    pub fn d(&self) -> usize {
        self.obs.ncols()
    }

    pub fn ybar(&self) -> &DVector<f64> {
        &self.ybar
    }

    pub fn s2(&self) -> &DMatrix<f64> {
        &self.s2
    }

    pub fn observations(&self) -> &DMatrix<f64> {
        &self.obs
    }
}

/// `log D*(J(y, A))` through the stacked `nd × d(d+3)/2` Jacobian at `μ = Ȳ`, `Λ = I`.
///
/// Reference implementation; [`log_jstar`] computes the same value from a
/// small Gram matrix.
pub fn log_jstar_stacked(data: &MvnData, skew: &SkewParam) -> Result<f64> {
    let (n, d) = (data.n(), data.d());
    let mu: Vec<f64> = data.ybar.iter().cloned().collect();
    let ones = vec![1.0; d];
    let cols = d * (d + 3) / 2;
    let mut stacked = DMatrix::zeros(n * d, cols);
    for i in 0..n {
        let y: Vec<f64> = data.obs.row(i).iter().cloned().collect();
        let block = jacobian_columns(&y, &mu, skew, &ones)?;
        stacked.view_mut((i * d, 0), (d, cols)).copy_from(&block);
    }
    log_pseudo_det(&stacked)
}

/// `D*(J(y, A))`, the Jacobian factor left after pulling `det Λ⁻¹` out.
pub fn jstar(data: &MvnData, skew: &SkewParam) -> Result<f64> {
    Ok(log_jstar(data, skew)?.exp())
}

/// `log D*(J(y, A))` from the Gram matrix of the stacked Jacobian.
///
/// At `μ = Ȳ` the `μ` columns are orthogonal to the rest because the residuals
/// sum to zero, so `JᵀJ = diag(n I_d, G)` with
/// `G_{cc'} = n tr(M_cᵀ M_{c'} S²)` over the derivative maps `M_c`.
pub fn log_jstar(data: &MvnData, skew: &SkewParam) -> Result<f64> {
    let parts = cayley_parts(skew)?;
    log_jstar_parts(data, &parts)
}

fn log_jstar_parts(data: &MvnData, parts: &CayleyParts) -> Result<f64> {
    let (n, d) = (data.n() as f64, data.d());
    let maps = derivative_maps(parts, None);
    let k = maps.len();
    let ms: Vec<DMatrix<f64>> = maps.iter().map(|m| m * &data.s2).collect();
    let mut g = DMatrix::zeros(k, k);
    for c in 0..k {
        for c2 in c..k {
            let v = n * maps[c].dot(&ms[c2]);
            g[(c, c2)] = v;
            g[(c2, c)] = v;
        }
    }
    let logdet_g = match g.cholesky() {
        Some(ch) => 2.0 * ch.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>(),
        None => return Ok(f64::NEG_INFINITY),
    };
    Ok(0.5 * (d as f64 * n.ln() + logdet_g))
}

/// `(Zᵀ n S² Z)ᵢᵢ` for each `i`.
fn rotated_scatter_diag(data: &MvnData, z: &DMatrix<f64>) -> Vec<f64> {
    let n = data.n() as f64;
    let sz = &data.s2 * z;
    (0..z.ncols())
        .map(|i| n * z.column(i).dot(&sz.column(i)))
        .collect()
}

/// Unnormalized log density of `veck A` with `μ` and `Λ` integrated out.
///
/// `−∞` outside `[−1, 1]^{d(d−1)/2}` or when the scatter matrix is degenerate.
pub fn log_marginal_a(data: &MvnData, skew: &SkewParam) -> Result<f64> {
    if skew.dim != data.d() {
        return domain("skew dimension does not match the data");
    }
    if skew.veck.iter().any(|x| !(x.abs() <= 1.0)) {
        return Ok(f64::NEG_INFINITY);
    }
    let parts = cayley_parts(skew)?;
    Ok(log_marginal_parts(data, &parts))
}

fn log_marginal_parts(data: &MvnData, parts: &CayleyParts) -> f64 {
    let n = data.n() as f64;
    let c = rotated_scatter_diag(data, &parts.z);
    if c.iter().any(|x| !(*x > 0.0)) {
        return f64::NEG_INFINITY;
    }
    let lj = match log_jstar_parts(data, parts) {
        Ok(v) => v,
        Err(_) => return f64::NEG_INFINITY,
    };
    lj - 0.5 * (n - 1.0) * c.iter().map(|x| x.ln()).sum::<f64>()
}

/// Draws `λ` given `A`: `λᵢ⁻² ~ Gamma(shape (n−1)/2, rate (Zᵀ n S² Z)ᵢᵢ / 2)`.
pub fn sample_lambda_given_a<R: Rng + ?Sized>(
    data: &MvnData,
    skew: &SkewParam,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let z = cayley(skew)?;
    lambda_from_z(data, &z, rng)
}

fn lambda_from_z<R: Rng + ?Sized>(
    data: &MvnData,
    z: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let shape = 0.5 * (data.n() as f64 - 1.0);
    rotated_scatter_diag(data, z)
        .into_iter()
        .map(|c| {
            if !(c > 0.0) {
                return Err(GfiError::Unidentifiable(
                    "degenerate scatter along a rotated axis".into(),
                ));
            }
            Ok(sample_gamma(shape, 0.5 * c, rng)?.powf(-0.5))
        })
        .collect()
}

/// Draws `μ ~ N(Ȳ, n⁻¹ Z Λ² Zᵀ)`.
pub fn sample_mu_given<R: Rng + ?Sized>(
    data: &MvnData,
    skew: &SkewParam,
    lambda: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let z = cayley(skew)?;
    Ok(mu_from_z(data, &z, lambda, rng))
}

fn mu_from_z<R: Rng + ?Sized>(
    data: &MvnData,
    z: &DMatrix<f64>,
    lambda: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let d = data.d();
    let scale = 1.0 / (data.n() as f64).sqrt();
    let e = DVector::from_iterator(d, lambda.iter().map(|l| l * scale * standard_normal(rng)));
    (&data.ybar + z * e).iter().cloned().collect()
}

/// One fiducial draw.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnDraw {
    pub chain: usize,
    pub iter: usize,
    pub skew: SkewParam,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub cov: SpdMatrix,
}

/// Starting `veck A` from the eigenvectors of `S²`, taken in a random order.
///
/// Column signs are chosen among those giving determinant +1 so that the
/// largest `|a|` is smallest; if no choice keeps every entry in `[−1, 1]`
/// the chain starts at `A = 0`.
pub fn pca_init<R: Rng + ?Sized>(data: &MvnData, rng: &mut R) -> SkewParam {
    let d = data.d();
    if d == 1 {
        return SkewParam::zeros(1);
    }
    if d > 12 {
        return SkewParam::zeros(d);
    }
    let eig = SymmetricEigen::new(data.s2.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut v = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &eig.eigenvectors.column(src));
    }
    let base_det = v.determinant();
    let mut best: Option<(f64, SkewParam)> = None;
    for mask in 0u32..(1 << d) {
        let flips = mask.count_ones();
        let det = if flips % 2 == 0 { base_det } else { -base_det };
        if det < 0.0 {
            continue;
        }
        let mut z = v.clone();
        for j in 0..d {
            if mask & (1 << j) != 0 {
                z.column_mut(j).neg_mut();
            }
        }
        if let Ok(s) = inverse_cayley(&z) {
            let worst = s.veck.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if worst.is_finite() && best.as_ref().is_none_or(|(w, _)| worst < *w) {
                best = Some((worst, s));
            }
        }
    }
    match best {
        Some((w, s)) if w <= 1.0 => s,
        _ => SkewParam::zeros(d),
    }
}

/// Default random-walk step for `veck A`: `0.05 · 2 / √(d(d−1))`.
pub fn default_proposal_sd(d: usize) -> f64 {
    if d < 2 {
        return 0.0;
    }
    0.05 * 2.0 / ((d * (d - 1)) as f64).sqrt()
}

/// Runs `config.chains` independent Metropolis-within-Gibbs chains and pools
/// their post-burn-in draws, ordered by chain then iteration.
///
/// Each iteration makes one joint random-walk proposal for `veck A` (rejected
/// outside the box), then draws `Λ` and `μ` from their exact conditionals.
/// The step size adapts toward 30% acceptance during burn-in only.
pub fn run_chains(data: &MvnData, config: &MvnChainConfig) -> Result<Vec<MvnDraw>> {
    config.validate()?;
    if data.n() <= data.d() {
        return config_err(data);
    }
    let per_chain: Vec<Result<Vec<MvnDraw>>> = (0..config.chains)
        .into_par_iter()
        .map(|k| run_one_chain(data, config, k))
        .collect();
    let mut out = Vec::with_capacity(config.chains * config.kept_per_chain());
    for chain in per_chain {
        out.extend(chain?);
    }
    Ok(out)
}

fn config_err<T>(data: &MvnData) -> Result<T> {
    config(format!(
        "need n > d, got n = {} and d = {}",
        data.n(),
        data.d()
    ))
}

fn run_one_chain(data: &MvnData, config: &MvnChainConfig, chain: usize) -> Result<Vec<MvnDraw>> {
    let d = data.d();
    let mut rng: GfiRng = stream(config.seed, chain as u64);
    let mut skew = pca_init(data, &mut rng);
    let mut parts = cayley_parts(&skew)?;
    let mut lp = log_marginal_parts(data, &parts);
    if !lp.is_finite() {
        skew = SkewParam::zeros(d);
        parts = cayley_parts(&skew)?;
        lp = log_marginal_parts(data, &parts);
    }
    if !lp.is_finite() {
        return Err(GfiError::Unidentifiable(
            "scatter matrix is singular".into(),
        ));
    }
    let mut adapter = Adapter::new(
        config.proposal_sd.unwrap_or_else(|| default_proposal_sd(d)),
        0.3,
    );
    let (mut tried, mut accepted) = (0usize, 0usize);
    let mut draws = Vec::with_capacity(config.kept_per_chain());
    let k = skew.veck.len();
    for iter in 0..config.iterations {
        if k > 0 {
            let sd = adapter.sd;
            let prop: Vec<f64> = skew
                .veck
                .iter()
                .map(|a| a + sd * standard_normal(&mut rng))
                .collect();
            let mut ok = false;
            if prop.iter().all(|a| a.abs() <= 1.0) {
                let cand = SkewParam { dim: d, veck: prop };
                let cand_parts = cayley_parts(&cand)?;
                let cand_lp = log_marginal_parts(data, &cand_parts);
                let log_u = rng.random::<f64>().ln();
                if log_u < cand_lp - lp {
                    skew = cand;
                    parts = cand_parts;
                    lp = cand_lp;
                    ok = true;
                }
            }
            if iter < config.burn_in {
                adapter.record(ok);
            } else {
                tried += 1;
                accepted += ok as usize;
            }
        }
        if config.keeps(iter) {
            let lambda = lambda_from_z(data, &parts.z, &mut rng)?;
            let mu = mu_from_z(data, &parts.z, &lambda, &mut rng);
            let cov = SpdMatrix::from_symmetric_unchecked(implied_cov(&parts.z, &lambda));
            draws.push(MvnDraw {
                chain,
                iter,
                skew: skew.clone(),
                lambda,
                mu,
                cov,
            });
        }
    }
    check_acceptance("mvn veck(A)", chain, accepted, tried);
    Ok(draws)
}

/// Simulates `n` rows from `N(μ, Σ)` using the Cholesky factor of `Σ`.
pub fn simulate<R: Rng + ?Sized>(
    mu: &[f64],
    sigma: &SpdMatrix,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let d = mu.len();
    if sigma.dim() != d {
        return domain("mean and covariance dimensions differ");
    }
    let l = sigma.cholesky_l()?;
    let mut out = DMatrix::zeros(n, d);
    for i in 0..n {
        let e = DVector::from_iterator(d, (0..d).map(|_| standard_normal(rng)));
        let y = &l * e;
        for j in 0..d {
            out[(i, j)] = mu[j] + y[j];
        }
    }
    Ok(out)
}
