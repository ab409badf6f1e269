//! Dense reference computations for the random effects fiducial density.

use gfi_core::mcmc::ChainConfig;
use gfi_core::numerics::{gamma_cdf, ks_pvalue, seeded};
use gfi_core::ranef::{
    anova_mean_squares, re_jacobian_matrix, re_log_density, re_sample, simulate, ReModel, ReParams,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

const PATTERNS: [&[usize]; 7] = [
    &[1, 1, 1, 1, 1, 100],
    &[2, 2, 2, 2, 2, 100],
    &[2, 5, 60],
    &[4, 4, 4, 8, 48],
    &[5, 10, 15, 20, 25, 30],
    &[2, 2, 4, 6],
    &[6, 6, 8, 8, 10, 10],
];

fn membership(groups: &[usize]) -> DMatrix<f64> {
    let n: usize = groups.iter().sum();
    let mut s = DMatrix::zeros(n, n);
    let mut start = 0;
    for &g in groups {
        for i in start..start + g {
            for j in start..start + g {
                s[(i, j)] = 1.0;
            }
        }
        start += g;
    }
    s
}

fn dense_sigma(groups: &[usize], sa: f64, se: f64) -> DMatrix<f64> {
    let n: usize = groups.iter().sum();
    membership(groups) * sa + DMatrix::identity(n, n) * se
}

fn dense_log_density(y: &[f64], groups: &[usize], p: &ReParams) -> f64 {
    let n = y.len();
    let sigma = dense_sigma(groups, p.sigma_a2, p.sigma_e2);
    let inv = sigma.clone().try_inverse().unwrap();
    let r = DVector::from_column_slice(y).add_scalar(-p.beta[0]);
    let logdet = sigma.determinant().ln();
    let sr = &inv * &r;
    let mut jac = DMatrix::zeros(n, 3);
    jac.column_mut(0).fill(1.0);
    jac.set_column(1, &(&sr * 0.5));
    jac.set_column(2, &(membership(groups) * &sr * 0.5));
    let d = (jac.transpose() * &jac).determinant().sqrt();
    -0.5 * logdet - 0.5 * r.dot(&sr) + d.ln()
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let root = DMatrix::from_diagonal(&e.eigenvalues.map(|x| x.sqrt()));
    &e.eigenvectors * root * e.eigenvectors.transpose()
}

#[test]
fn structured_density_matches_dense_on_all_patterns() {
    let mut rng = seeded(1);
    for groups in PATTERNS {
        let model = ReModel::new(groups.to_vec(), None).unwrap();
        let truth = ReParams {
            beta: vec![1.0],
            sigma_a2: 1.0,
            sigma_e2: 2.0,
        };
        let y = simulate(&model, &truth, &mut rng).unwrap();
        for p in [
            ReParams {
                beta: vec![0.8],
                sigma_a2: 0.5,
                sigma_e2: 1.7,
            },
            ReParams {
                beta: vec![1.4],
                sigma_a2: 3.0,
                sigma_e2: 0.9,
            },
            ReParams {
                beta: vec![-0.3],
                sigma_a2: 0.0,
                sigma_e2: 2.2,
            },
        ] {
            let got = re_log_density(&y, &model, &p);
            let want = dense_log_density(&y, groups, &p);
            assert!(
                (got - want).abs() < 1e-8 * want.abs().max(1.0),
                "{groups:?}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn variance_columns_match_finite_differences() {
    let mut rng = seeded(2);
    for groups in [&[2usize, 3][..], &[2, 2, 4, 6], &[6, 6, 8, 8, 10, 10]] {
        let model = ReModel::new(groups.to_vec(), None).unwrap();
        let p = ReParams {
            beta: vec![0.5],
            sigma_a2: 0.7,
            sigma_e2: 1.3,
        };
        let y = simulate(&model, &p, &mut rng).unwrap();
        let jac = re_jacobian_matrix(&y, &model, &p).unwrap();
        let r = DVector::from_column_slice(&y).add_scalar(-p.beta[0]);
        let root = sym_sqrt(&dense_sigma(groups, p.sigma_a2, p.sigma_e2));
        let u = root.clone().try_inverse().unwrap() * r;
        let h = 1e-6;
        let forward = |sa: f64, se: f64| sym_sqrt(&dense_sigma(groups, sa, se)) * &u;
        let fd_e =
            (forward(p.sigma_a2, p.sigma_e2 + h) - forward(p.sigma_a2, p.sigma_e2 - h)) / (2.0 * h);
        let fd_a =
            (forward(p.sigma_a2 + h, p.sigma_e2) - forward(p.sigma_a2 - h, p.sigma_e2)) / (2.0 * h);
        let err_e = (&fd_e - jac.column(1)).norm() / fd_e.norm();
        let err_a = (&fd_a - jac.column(2)).norm() / fd_a.norm();
        assert!(err_e < 1e-5 && err_a < 1e-5, "{groups:?}: {err_e} {err_a}");
    }
}

#[test]
fn single_group_variance_matches_closed_form() {
    let n = 12;
    let model = ReModel::without_random_effect(n, None).unwrap();
    let mut rng = seeded(3);
    let y = simulate(
        &model,
        &ReParams {
            beta: vec![4.0],
            sigma_a2: 0.0,
            sigma_e2: 2.5,
        },
        &mut rng,
    )
    .unwrap();
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let cfg = ChainConfig {
        chains: 1,
        iterations: 101_000,
        burn_in: 1_000,
        thin: 10,
        seed: 4,
        ..Default::default()
    };
    let draws = re_sample(&y, &model, &cfg).unwrap();
    // SS / σ_e² ~ χ²_{n−1}, i.e. 1/σ_e² ~ Gamma((n−1)/2, SS/2)
    let prec: Vec<f64> = draws.iter().map(|d| 1.0 / d.params.sigma_e2).collect();
    let p = ks_pvalue(&prec, |x| {
        gamma_cdf(0.5 * (n as f64 - 1.0), 0.5 * ss, x).unwrap()
    });
    assert!(p > 0.01, "KS p = {p}");
}

#[test]
fn error_variance_concentrates_near_within_mean_square() {
    let groups = PATTERNS[6].to_vec();
    let model = ReModel::new(groups.clone(), None).unwrap();
    let mut rng = seeded(5);
    let y = simulate(
        &model,
        &ReParams {
            beta: vec![0.0],
            sigma_a2: 1.0,
            sigma_e2: 1.0,
        },
        &mut rng,
    )
    .unwrap();
    let (msw, _, _) = anova_mean_squares(&y, &groups);
    let cfg = ChainConfig {
        chains: 2,
        iterations: 6_000,
        burn_in: 1_000,
        seed: 6,
        ..Default::default()
    };
    let mut se: Vec<f64> = re_sample(&y, &model, &cfg)
        .unwrap()
        .iter()
        .map(|d| d.params.sigma_e2)
        .collect();
    se.sort_by(f64::total_cmp);
    let median = se[se.len() / 2];
    assert!(
        (median / msw - 1.0).abs() < 0.1,
        "median {median} vs MSW {msw}"
    );
}
