//! Special functions, seeded random generation and linear algebra shared by
//! the inference modules.

pub mod linalg;
pub mod random;
pub mod special;

pub use linalg::{log_pseudo_det, pseudo_det, re_cov_logdet_solve, SpdMatrix};
pub use random::{
    derive, sample_binomial, sample_gamma, sample_normal, sample_uniform, seeded, stream, GfiRng,
};
pub use special::{
    beta_pdf, binom_cdf, binom_ln_pmf, gamma_cdf, gamma_quantile, inv_reg_inc_beta, ln_beta,
    ln_gamma, normal_cdf, normal_quantile, reg_inc_beta,
};

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorts a copy of `xs` (NaN-free) ascending.
pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Two-sided one-sample Kolmogorov–Smirnov p-value against a continuous CDF,
/// using the asymptotic Kolmogorov distribution with the Stephens correction.
pub fn ks_pvalue(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted_copy(xs);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sq = n.sqrt();
    let t = (sq + 0.12 + 0.11 / sq) * d;
    kolmogorov_survival(t)
}

fn kolmogorov_survival(t: f64) -> f64 {
    if t < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        sum += if (k as i64) % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
