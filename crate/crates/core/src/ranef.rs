//! Fiducial distribution for the one-way random effects model
//!
//! ```text
//! Y = 𝕏β + Σ^{1/2} U,   Σ = σ_a² S_α + σ_e² I,
//! ```
//!
//! where `S_α` is block diagonal with an all-ones block per group. The
//! fiducial density is the normal likelihood times `D` of the Jacobian
//! `[𝕏 | ½Σ⁻¹r | ½S_αΣ⁻¹r]` with `r = y − 𝕏β`; the two variance columns follow
//! from differentiating the symmetric square root, which commutes with `S_α`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::mcmc::{check_acceptance, Adapter, ChainConfig};
use crate::numerics::linalg::{log_pseudo_det, re_cov_logdet_solve};
use crate::numerics::random::{standard_normal, stream, GfiRng};

/// Smallest `ln σ_a²` the sampler may visit; below it the random effect is
/// numerically absent.
pub const MIN_LOG_SIGMA_A2: f64 = -30.0;

/// Group layout and fixed-effect design.
#[derive(Debug, Clone, PartialEq)]
pub struct ReModel {
    group_sizes: Vec<usize>,
    design: DMatrix<f64>,
    random_effect: bool,
}

impl ReModel {
    /// Model with the given group sizes and design (intercept only when `None`).
    pub fn new(group_sizes: Vec<usize>, design: Option<DMatrix<f64>>) -> Result<Self> {
        Self::build(group_sizes, design, true)
    }

    /// Plain normal model `Y = 𝕏β + σ_e U` without a random effect.
    pub fn without_random_effect(n: usize, design: Option<DMatrix<f64>>) -> Result<Self> {
        Self::build(vec![n], design, false)
    }

    fn build(
        group_sizes: Vec<usize>,
        design: Option<DMatrix<f64>>,
        random_effect: bool,
    ) -> Result<Self> {
        if group_sizes.is_empty() || group_sizes.contains(&0) {
            return domain("group sizes must be positive");
        }
        let n: usize = group_sizes.iter().sum();
        let design = design.unwrap_or_else(|| DMatrix::from_element(n, 1, 1.0));
        if design.nrows() != n {
            return domain(format!(
                "design has {} rows but groups hold {n} observations",
                design.nrows()
            ));
        }
        if design.ncols() == 0 || !log_pseudo_det(&design)?.is_finite() {
            return domain("design matrix must have full column rank");
        }
        Ok(Self {
            group_sizes,
            design,
            random_effect,
        })
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn has_random_effect(&self) -> bool {
        self.random_effect
    }

    pub fn n_obs(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_fixed(&self) -> usize {
        self.design.ncols()
    }

    fn n_params(&self) -> usize {
        self.n_fixed() + 1 + self.random_effect as usize
    }
}

/// Fixed effects and variance components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReParams {
    pub beta: Vec<f64>,
    pub sigma_a2: f64,
    pub sigma_e2: f64,
}

impl ReParams {
    fn valid(&self) -> bool {
        self.sigma_e2 > 0.0
            && self.sigma_a2 >= 0.0
            && self.sigma_e2.is_finite()
            && self.sigma_a2.is_finite()
    }
}

fn residual(y: &[f64], model: &ReModel, beta: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(y) - model.design() * DVector::from_column_slice(beta)
}

/// `S_α v`: each entry replaced by its group sum.
fn group_sums(group_sizes: &[usize], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut start = 0;
    for &g in group_sizes {
        let s: f64 = v[start..start + g].iter().sum();
        out.extend(std::iter::repeat_n(s, g));
        start += g;
    }
    out
}

/// The `N × (q+2)` Jacobian `[𝕏 | ∂Y/∂σ_e² | ∂Y/∂σ_a²]` (the last column is
/// absent for a model without random effect).
pub fn re_jacobian_matrix(y: &[f64], model: &ReModel, params: &ReParams) -> Result<DMatrix<f64>> {
    check_inputs(y, model, params)?;
    let r = residual(y, model, &params.beta);
    let sa2 = if model.random_effect {
        params.sigma_a2
    } else {
        0.0
    };
    let (_, solved) = re_cov_logdet_solve(sa2, params.sigma_e2, &model.group_sizes, r.as_slice())?;
    Ok(jacobian_from_solved(model, &solved))
}

fn jacobian_from_solved(model: &ReModel, solved: &[f64]) -> DMatrix<f64> {
    let (n, q) = (model.n_obs(), model.n_fixed());
    let mut jac = DMatrix::zeros(n, model.n_params());
    jac.view_mut((0, 0), (n, q)).copy_from(&model.design);
    for (i, s) in solved.iter().enumerate() {
        jac[(i, q)] = 0.5 * s;
    }
    if model.random_effect {
        for (i, s) in group_sums(&model.group_sizes, solved)
            .into_iter()
            .enumerate()
        {
            jac[(i, q + 1)] = 0.5 * s;
        }
    }
    jac
}

fn check_inputs(y: &[f64], model: &ReModel, params: &ReParams) -> Result<()> {
    if y.len() != model.n_obs() {
        return domain(format!(
            "y has length {} but the model has {} observations",
            y.len(),
            model.n_obs()
        ));
    }
    if params.beta.len() != model.n_fixed() {
        return domain(format!(
            "beta has length {} but the design has {} columns",
            params.beta.len(),
            model.n_fixed()
        ));
    }
    if !params.valid() {
        return domain(format!(
            "invalid variances ({}, {})",
            params.sigma_a2, params.sigma_e2
        ));
    }
    Ok(())
}

/// `D` of the Jacobian, `det(JᵀJ)^{1/2}`.
pub fn re_jacobian(y: &[f64], model: &ReModel, params: &ReParams) -> Result<f64> {
    Ok(log_pseudo_det(&re_jacobian_matrix(y, model, params)?)?.exp())
}

/// Unnormalized log fiducial density: normal log-likelihood plus `log D(J)`.
///
/// `−∞` for invalid variances. For a model without random effect `σ_a²` is ignored.
pub fn re_log_density(y: &[f64], model: &ReModel, params: &ReParams) -> f64 {
    if y.len() != model.n_obs() || params.beta.len() != model.n_fixed() || !params.valid() {
        return f64::NEG_INFINITY;
    }
    let r = residual(y, model, &params.beta);
    let sa2 = if model.random_effect {
        params.sigma_a2
    } else {
        0.0
    };
    let Ok((logdet, solved)) =
        re_cov_logdet_solve(sa2, params.sigma_e2, &model.group_sizes, r.as_slice())
    else {
        return f64::NEG_INFINITY;
    };
    let quad: f64 = r.iter().zip(&solved).map(|(a, b)| a * b).sum();
    let jac = jacobian_from_solved(model, &solved);
    let lj = log_pseudo_det(&jac).unwrap_or(f64::NEG_INFINITY);
    -0.5 * logdet - 0.5 * quad + lj
}

/// One fiducial draw of the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReDraw {
    pub chain: usize,
    pub iter: usize,
    pub params: ReParams,
}

/// Moment-based starting point: OLS `β`, pooled within-group mean square for
/// `σ_e²`, and the ANOVA estimate for `σ_a²` floored at a tenth of `σ_e²`.
pub fn anova_start(y: &[f64], model: &ReModel) -> Result<ReParams> {
    let x = model.design();
    let yv = DVector::from_column_slice(y);
    let beta = (x.transpose() * x)
        .lu()
        .solve(&(x.transpose() * &yv))
        .ok_or_else(|| crate::GfiError::Singular("normal equations".into()))?;
    let r = &yv - x * &beta;
    let (msw, msb, n0) = anova_mean_squares(r.as_slice(), &model.group_sizes);
    let resid_var = r.norm_squared() / (r.len().saturating_sub(model.n_fixed()).max(1)) as f64;
    let sigma_e2 = if msw.is_finite() && msw > 0.0 {
        msw
    } else {
        resid_var.max(1e-8)
    };
    let sigma_a2 = if model.random_effect {
        let est = if msb.is_finite() {
            (msb - sigma_e2) / n0
        } else {
            0.0
        };
        est.max(0.1 * sigma_e2)
    } else {
        0.0
    };
    Ok(ReParams {
        beta: beta.iter().cloned().collect(),
        sigma_a2,
        sigma_e2,
    })
}

/// Within and between mean squares of `v` and the effective group size
/// `(N − Σnᵢ²/N)/(m − 1)`.
pub fn anova_mean_squares(v: &[f64], group_sizes: &[usize]) -> (f64, f64, f64) {
    let n: usize = group_sizes.iter().sum();
    let m = group_sizes.len();
    let grand = v.iter().sum::<f64>() / n as f64;
    let (mut ssw, mut ssb) = (0.0, 0.0);
    let mut start = 0;
    for &g in group_sizes {
        let block = &v[start..start + g];
        let mean = block.iter().sum::<f64>() / g as f64;
        ssw += block.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        ssb += g as f64 * (mean - grand).powi(2);
        start += g;
    }
    let msw = if n > m {
        ssw / (n - m) as f64
    } else {
        f64::NAN
    };
    let msb = if m > 1 {
        ssb / (m - 1) as f64
    } else {
        f64::NAN
    };
    let sq: f64 = group_sizes.iter().map(|&g| (g * g) as f64).sum();
    let n0 = if m > 1 {
        (n as f64 - sq / n as f64) / (m - 1) as f64
    } else {
        n as f64
    };
    (msw, msb, n0)
}

/// Random-walk Metropolis on `(β, ln σ_a², ln σ_e²)`, one coordinate at a time.
///
/// The target is [`re_log_density`] plus `ln σ_a² + ln σ_e²` for the change
/// to log scale. Step sizes adapt toward 44% acceptance during burn-in and are
/// frozen afterwards. Chains run in parallel; draws come back ordered by chain.
pub fn re_sample(y: &[f64], model: &ReModel, cfg: &ChainConfig) -> Result<Vec<ReDraw>> {
    cfg.validate()?;
    if y.len() != model.n_obs() {
        return domain("y length does not match the model");
    }
    if model.n_obs() <= model.n_params() {
        return config(format!(
            "need more than {} observations, got {}",
            model.n_params(),
            model.n_obs()
        ));
    }
    let start = anova_start(y, model)?;
    let chains: Vec<Result<Vec<ReDraw>>> = (0..cfg.chains)
        .into_par_iter()
        .map(|k| run_chain(y, model, cfg, &start, k))
        .collect();
    let mut out = Vec::with_capacity(cfg.chains * cfg.kept_per_chain());
    for c in chains {
        out.extend(c?);
    }
    Ok(out)
}

fn unpack(theta: &[f64], model: &ReModel) -> ReParams {
    let q = model.n_fixed();
    ReParams {
        beta: theta[..q].to_vec(),
        sigma_e2: theta[q].exp(),
        sigma_a2: if model.random_effect {
            theta[q + 1].exp()
        } else {
            0.0
        },
    }
}

fn log_target(y: &[f64], model: &ReModel, theta: &[f64]) -> f64 {
    let q = model.n_fixed();
    if model.random_effect && theta[q + 1] < MIN_LOG_SIGMA_A2 {
        return f64::NEG_INFINITY;
    }
    let log_scale: f64 = theta[q..].iter().sum();
    re_log_density(y, model, &unpack(theta, model)) + log_scale
}

fn run_chain(
    y: &[f64],
    model: &ReModel,
    cfg: &ChainConfig,
    start: &ReParams,
    chain: usize,
) -> Result<Vec<ReDraw>> {
    let mut rng: GfiRng = stream(cfg.seed, chain as u64);
    let q = model.n_fixed();
    let mut theta: Vec<f64> = start.beta.clone();
    theta.push(start.sigma_e2.ln());
    if model.random_effect {
        theta.push(start.sigma_a2.ln());
    }
    // jitter so chains do not start at the same point
    if chain > 0 {
        for t in theta[q..].iter_mut() {
            *t += 0.3 * standard_normal(&mut rng);
        }
    }
    let mut lp = log_target(y, model, &theta);
    if !lp.is_finite() {
        return Err(crate::GfiError::Unidentifiable(
            "starting point has zero fiducial density".into(),
        ));
    }
    let beta_sd = (start.sigma_e2 / model.n_obs() as f64).sqrt().max(1e-8);
    let mut adapters: Vec<Adapter> = (0..theta.len())
        .map(|i| {
            Adapter::new(
                cfg.proposal_sd
                    .unwrap_or(if i < q { 2.0 * beta_sd } else { 0.5 }),
                0.44,
            )
        })
        .collect();
    let (mut tried, mut accepted) = (0usize, 0usize);
    let mut draws = Vec::with_capacity(cfg.kept_per_chain());
    for iter in 0..cfg.iterations {
        for c in 0..theta.len() {
            let old = theta[c];
            theta[c] = old + adapters[c].sd * standard_normal(&mut rng);
            let cand = log_target(y, model, &theta);
            let ok = rng.random::<f64>().ln() < cand - lp;
            if ok {
                lp = cand;
            } else {
                theta[c] = old;
            }
            if iter < cfg.burn_in {
                adapters[c].record(ok);
            } else {
                tried += 1;
                accepted += ok as usize;
            }
        }
        if cfg.keeps(iter) {
            draws.push(ReDraw {
                chain,
                iter,
                params: unpack(&theta, model),
            });
        }
    }
    check_acceptance("random effects", chain, accepted, tried);
    Ok(draws)
}

/// Simulates `y = 𝕏β + α_g + ε` with `α_g ~ N(0, σ_a²)`, `ε ~ N(0, σ_e²)`.
pub fn simulate<R: Rng + ?Sized>(
    model: &ReModel,
    params: &ReParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !params.valid() || params.beta.len() != model.n_fixed() {
        return domain("invalid simulation parameters");
    }
    let mean = model.design() * DVector::from_column_slice(&params.beta);
    let (sa, se) = (params.sigma_a2.sqrt(), params.sigma_e2.sqrt());
    let mut out = Vec::with_capacity(model.n_obs());
    let mut i = 0;
    for &g in &model.group_sizes {
        let alpha = if model.random_effect {
            sa * standard_normal(rng)
        } else {
            0.0
        };
        for _ in 0..g {
            out.push(mean[i] + alpha + se * standard_normal(rng));
            i += 1;
        }
    }
    Ok(out)
}
