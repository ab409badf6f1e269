//! Dense and structured linear algebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, GfiError, Result};

/// A symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
}

impl SpdMatrix {
    /// Checks symmetry (to `1e-12` relative to the largest entry) and positive
    /// definiteness (Cholesky succeeds), then stores the exactly symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(GfiError::NotSpd(format!(
                "shape {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale.max(1.0) {
            return Err(GfiError::NotSpd(format!("asymmetry {asym:e}")));
        }
        let m = (&m + m.transpose()) * 0.5;
        if m.clone().cholesky().is_none() {
            return Err(GfiError::NotSpd("Cholesky factorization failed".into()));
        }
        Ok(Self { m })
    }

    /// Symmetrizes `m` without checking definiteness. For internally built
    /// matrices that are SPD by construction (e.g. `Z Λ² Zᵀ`).
    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        let m = (&m + m.transpose()) * 0.5;
        Self { m }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: DMatrix::identity(d, d),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Lower Cholesky factor.
    pub fn cholesky_l(&self) -> Result<DMatrix<f64>> {
        self.m
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| GfiError::NotSpd("Cholesky factorization failed".into()))
    }

    /// Upper-triangle entries in row order (`vech` of the transpose).
    pub fn vech(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }
}

/// `D(M) = det(MᵀM)^{1/2}` for a matrix with at least as many rows as columns.
///
/// Computed as the product of the absolute diagonal of the QR factor `R`.
/// Returns 0 when `M` is numerically rank deficient.
pub fn pseudo_det(m: &DMatrix<f64>) -> Result<f64> {
    Ok(log_pseudo_det(m)?.exp())
}

/// Natural log of [`pseudo_det`]; `-∞` for rank-deficient input.
pub fn log_pseudo_det(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() < m.ncols() {
        return domain(format!(
            "pseudo_det needs rows >= cols, got {}x{}",
            m.nrows(),
            m.ncols()
        ));
    }
    if m.ncols() == 0 {
        return Ok(0.0);
    }
    let r = m.clone().qr().r();
    let diag: Vec<f64> = r.diagonal().iter().map(|x| x.abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let col_scale = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = col_scale.max(max) * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * 4.0;
    if max == 0.0 || diag.iter().any(|&x| x <= tol) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(diag.iter().map(|x| x.ln()).sum())
}

/// Log-determinant and solve for the one-way random-effects covariance
/// `Σ = σ_a² S_α + σ_e² I`, where `S_α` is block diagonal with all-ones blocks.
///
/// Each block of size `n_g` has eigenvalue `σ_e² + n_g σ_a²` once (along the
/// ones vector) and `σ_e²` with multiplicity `n_g − 1`, so both results cost
/// `O(N)`.
pub fn re_cov_logdet_solve(
    sigma_a2: f64,
    sigma_e2: f64,
    group_sizes: &[usize],
    v: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if !(sigma_e2 > 0.0) {
        return domain(format!("sigma_e2 must be positive, got {sigma_e2}"));
    }
    if !(sigma_a2 >= 0.0) {
        return domain(format!("sigma_a2 must be nonnegative, got {sigma_a2}"));
    }
    let total: usize = group_sizes.iter().sum();
    if total != v.len() {
        return domain(format!(
            "group sizes sum to {total} but v has length {}",
            v.len()
        ));
    }
    let mut logdet = 0.0;
    let mut out = Vec::with_capacity(v.len());
    let mut start = 0;
    for &ng in group_sizes {
        let block = &v[start..start + ng];
        let lead = sigma_e2 + ng as f64 * sigma_a2;
        logdet += (ng as f64 - 1.0) * sigma_e2.ln() + lead.ln();
        let sum: f64 = block.iter().sum();
        let shift = sigma_a2 / lead * sum;
        out.extend(block.iter().map(|x| (x - shift) / sigma_e2));
        start += ng;
    }
    Ok((logdet, out))
}

/// Log-determinant of a symmetric positive-definite matrix via Cholesky.
pub(crate) fn chol_logdet(m: &DMatrix<f64>) -> Option<f64> {
    let c = m.clone().cholesky()?;
    Some(2.0 * c.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::random::{seeded, standard_normal};

    fn random_matrix(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = seeded(seed);
        DMatrix::from_fn(r, c, |_, _| standard_normal(&mut rng))
    }

    #[test]
    fn pseudo_det_identity_and_square() {
        assert!((pseudo_det(&DMatrix::identity(4, 4)).unwrap() - 1.0).abs() < 1e-14);
        let m = random_matrix(5, 5, 1);
        let det = m.clone().determinant().abs();
        assert!((pseudo_det(&m).unwrap() - det).abs() < 1e-10 * det);
    }

    #[test]
    fn pseudo_det_matches_gram_determinant() {
        let m = random_matrix(6, 3, 2);
        let direct = (m.transpose() * &m).determinant().sqrt();
        assert!((pseudo_det(&m).unwrap() - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn pseudo_det_rank_deficient_is_zero() {
        let mut m = random_matrix(6, 3, 3);
        let c0 = m.column(0).clone_owned();
        m.set_column(2, &(c0 * 2.0));
        assert_eq!(pseudo_det(&m).unwrap(), 0.0);
        assert!(pseudo_det(&random_matrix(2, 3, 4)).is_err());
    }

    #[test]
    fn re_cov_small_cases() {
        let (ld, _) = re_cov_logdet_solve(1.0, 1.0, &[2], &[0.3, -0.1]).unwrap();
        assert!((ld - 3.0_f64.ln()).abs() < 1e-14);
        let v = [1.0, 2.0, 3.0];
        let (ld, s) = re_cov_logdet_solve(0.0, 2.0, &[1, 2], &v).unwrap();
        assert!((ld - 3.0 * 2.0_f64.ln()).abs() < 1e-14);
        for (a, b) in s.iter().zip(v) {
            assert!((a - b / 2.0).abs() < 1e-15);
        }
        assert!(re_cov_logdet_solve(1.0, 0.0, &[1], &[1.0]).is_err());
    }

    fn dense_re_cov(sa: f64, se: f64, groups: &[usize]) -> DMatrix<f64> {
        let n: usize = groups.iter().sum();
        let mut m = DMatrix::identity(n, n) * se;
        let mut start = 0;
        for &g in groups {
            for i in start..start + g {
                for j in start..start + g {
                    m[(i, j)] += sa;
                }
            }
            start += g;
        }
        m
    }

    #[test]
    fn re_cov_matches_dense_solve() {
        let patterns: [&[usize]; 8] = [
            &[2, 3],
            &[1, 1, 1, 1, 1, 100],
            &[2, 2, 2, 2, 2, 100],
            &[2, 5, 60],
            &[4, 4, 4, 8, 48],
            &[5, 10, 15, 20, 25, 30],
            &[2, 2, 4, 6],
            &[6, 6, 8, 8, 10, 10],
        ];
        for (k, groups) in patterns.iter().enumerate() {
            let n: usize = groups.iter().sum();
            let v: Vec<f64> = random_matrix(n, 1, 10 + k as u64).iter().cloned().collect();
            let (sa, se) = (0.7, 1.9);
            let dense = dense_re_cov(sa, se, groups);
            let chol = dense.clone().cholesky().unwrap();
            let want = chol.solve(&DVector::from_column_slice(&v));
            let want_ld = chol_logdet(&dense).unwrap();
            let (ld, got) = re_cov_logdet_solve(sa, se, groups, &v).unwrap();
            assert!((ld - want_ld).abs() < 1e-10 * want_ld.abs().max(1.0));
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn spd_checks() {
        assert!(SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        let s = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        assert_eq!(s.vech(), vec![2.0, 0.5, 1.0]);
    }
}
