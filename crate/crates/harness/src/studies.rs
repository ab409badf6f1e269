//! Coverage studies.
//!
//! Each study crosses its cells with `replicates` independent datasets.
//! Replicate `r` of cell `c` simulates with seed `derive(base + r, 2c)` and
//! runs its sampler with `derive(base + r, 2c + 1)`, so every record is a
//! function of the spec alone. Jobs are spread over a rayon pool (size capped
//! by `GFI_THREADS`) and collected in job order.

use nalgebra::DMatrix;
use rayon::prelude::*;

use gfi_core::binom_n::{
    bayes_posterior_n, candidate_range, ds_masses, empirical_pmf, mean_abs_diff, sample_n,
    upper_interval,
};
use gfi_core::binom_np::{run_np_sampler, NpSamplerConfig};
use gfi_core::binom_p::{central_interval_p, BinPModel, Convention};
use gfi_core::mcmc::ChainConfig;
use gfi_core::mvn::{self, MvnData};
use gfi_core::numerics::{
    derive, quantile_sorted, sample_binomial, seeded, sorted_copy, SpdMatrix,
};
use gfi_core::ranef::{self, ReModel, ReParams};
use gfi_core::regions::{central_interval, euclidean, representatives, BallFit, BoxFit, CovRegion};
use rand::Rng;

use crate::record::{CoverageRecord, StudyOutput, ValueRecord};
use crate::spec::{Design, StudySpec};
use crate::HarnessError;

pub const MVN_RUN: (usize, usize, usize) = (20, 1000, 500);
pub const RANEF_RUN: (usize, usize, usize) = (2, 2000, 500);
pub const NP_RUN: (usize, usize) = (5000, 1000);

/// Seeds for the data and the sampler of replicate `r` in cell `c`.
pub fn replicate_seeds(base: u64, cell: usize, r: usize) -> (u64, u64) {
    let s = base.wrapping_add(r as u64);
    (derive(s, 2 * cell as u64), derive(s, 2 * cell as u64 + 1))
}

/// Worker pool sized by `GFI_THREADS` when set, else rayon's default.
pub fn worker_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GFI_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| HarnessError::Spec(format!("GFI_THREADS must be a count, got '{v}'")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn run_study(spec: &StudySpec) -> Result<StudyOutput, HarnessError> {
    spec.validate()?;
    let pool = worker_pool()?;
    pool.install(|| match &spec.design {
        Design::Mvn { mu, sigma, n } => run_mvn(spec, mu, sigma, *n),
        Design::Ranef {
            patterns,
            pairs,
            beta,
        } => run_ranef(spec, patterns, pairs, *beta),
        Design::BinomP { n, p, m } => run_binom_p(spec, *n, p, m),
        Design::BinomN {
            n0,
            p,
            m,
            eps1,
            draws,
        } => run_binom_n(spec, *n0, p, m, *eps1, *draws),
        Design::BinomNp { n, p, m } => run_binom_np(spec, n, p, *m),
    })
}

/// Runs `job(cell, replicate)` for every pair and concatenates the outputs in order.
fn replicate_all<F>(cells: usize, replicates: usize, job: F) -> Result<StudyOutput, HarnessError>
where
    F: Fn(usize, usize) -> Result<StudyOutput, HarnessError> + Sync,
{
    let jobs: Vec<(usize, usize)> = (0..cells)
        .flat_map(|c| (0..replicates).map(move |r| (c, r)))
        .collect();
    let parts: Vec<Result<StudyOutput, HarnessError>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let out = job(c, r);
            if r + 1 == replicates {
                log::info!("cell {} of {cells} done", c + 1);
            }
            out
        })
        .collect();
    let mut all = StudyOutput::default();
    for p in parts {
        let p = p?;
        all.coverage.extend(p.coverage);
        all.values.extend(p.values);
    }
    Ok(all)
}

struct Emit<'a> {
    family: &'a str,
    cell: &'a str,
    replicate: usize,
    out: StudyOutput,
}

impl<'a> Emit<'a> {
    fn new(family: &'a str, cell: &'a str, replicate: usize) -> Self {
        Self {
            family,
            cell,
            replicate,
            out: StudyOutput::default(),
        }
    }

    fn cover(&mut self, region: &str, level: f64, contained: bool, size: f64) {
        self.out.coverage.push(CoverageRecord {
            family: self.family.into(),
            cell: self.cell.into(),
            region: region.into(),
            level,
            replicate: self.replicate,
            contained,
            size: size.is_finite().then_some(size),
        });
    }

    fn value(&mut self, name: &str, value: f64) {
        self.out.values.push(ValueRecord {
            family: self.family.into(),
            cell: self.cell.into(),
            replicate: self.replicate,
            name: name.into(),
            value,
        });
    }
}

pub const MU_REGION: &str = "mu_euclidean";

fn run_mvn(
    spec: &StudySpec,
    mu: &[f64],
    sigma: &[Vec<f64>],
    n: usize,
) -> Result<StudyOutput, HarnessError> {
    let d = mu.len();
    let truth = SpdMatrix::new(DMatrix::from_fn(d, d, |i, j| sigma[i][j]))?;
    let run = spec.sampler.or(MVN_RUN.0, MVN_RUN.1, MVN_RUN.2);
    let cell = format!("n={n}");
    replicate_all(1, spec.replicates, |c, r| {
        let (data_seed, chain_seed) = replicate_seeds(spec.seed, c, r);
        let x = mvn::simulate(mu, &truth, n, &mut seeded(data_seed))?;
        let data = MvnData::new(x)?;
        let cfg = ChainConfig {
            chains: run.chains,
            iterations: run.iterations,
            burn_in: run.burn_in,
            thin: 1,
            proposal_sd: None,
            seed: chain_seed,
        };
        let draws = mvn::run_chains(&data, &cfg)?;
        let covs: Vec<SpdMatrix> = draws.iter().map(|d| d.cov.clone()).collect();
        let mus: Vec<Vec<f64>> = draws.iter().map(|d| d.mu.clone()).collect();
        let mut e = Emit::new("mvn", &cell, r);
        for region in CovRegion::ALL {
            let fit = region.fit(&covs)?;
            for &level in &spec.levels {
                let (inside, size) = fit.covers(&truth, level)?;
                e.cover(region.name(), level, inside, size);
            }
        }
        let ball = BallFit::fit_euclidean(&mus)?;
        let dist = euclidean(&ball.center, mu);
        for &level in &spec.levels {
            let radius = ball.radius(level);
            e.cover(MU_REGION, level, dist <= radius, radius);
        }
        Ok(e.out)
    })
}

/// Cell label of pattern `k` (1-based) and a variance pair.
pub fn ranef_cell(pattern: usize, (sa2, se2): (f64, f64)) -> String {
    format!("pattern={pattern},sa2={sa2},se2={se2}")
}

fn run_ranef(
    spec: &StudySpec,
    patterns: &[Vec<usize>],
    pairs: &[(f64, f64)],
    beta: f64,
) -> Result<StudyOutput, HarnessError> {
    let run = spec.sampler.or(RANEF_RUN.0, RANEF_RUN.1, RANEF_RUN.2);
    let cells: Vec<(usize, (f64, f64))> = (0..patterns.len())
        .flat_map(|k| pairs.iter().map(move |&pair| (k, pair)))
        .collect();
    let labels: Vec<String> = cells
        .iter()
        .map(|&(k, pair)| ranef_cell(k + 1, pair))
        .collect();
    replicate_all(cells.len(), spec.replicates, |c, r| {
        let (k, (sa2, se2)) = cells[c];
        let model = ReModel::new(patterns[k].clone(), None)?;
        let truth = ReParams {
            beta: vec![beta],
            sigma_a2: sa2,
            sigma_e2: se2,
        };
        let (data_seed, chain_seed) = replicate_seeds(spec.seed, c, r);
        let y = ranef::simulate(&model, &truth, &mut seeded(data_seed))?;
        let cfg = ChainConfig {
            chains: run.chains,
            iterations: run.iterations,
            burn_in: run.burn_in,
            thin: 1,
            proposal_sd: None,
            seed: chain_seed,
        };
        let draws = ranef::re_sample(&y, &model, &cfg)?;
        let a: Vec<f64> = draws.iter().map(|d| d.params.sigma_a2).collect();
        let s: Vec<f64> = draws.iter().map(|d| d.params.sigma_e2).collect();
        let mut e = Emit::new("ranef", &labels[c], r);
        for &level in &spec.levels {
            let (lo, hi) = central_interval(&a, level)?;
            e.cover("sigma_a2", level, lo <= sa2 && sa2 <= hi, hi - lo);
            let (lo, hi) = central_interval(&s, level)?;
            e.cover("sigma_e2", level, lo <= se2 && se2 <= hi, hi - lo);
        }
        Ok(e.out)
    })
}

pub fn binom_cell(p: f64, m: usize) -> String {
    format!("p={p},m={m}")
}

fn run_binom_p(
    spec: &StudySpec,
    n: u64,
    ps: &[f64],
    ms: &[usize],
) -> Result<StudyOutput, HarnessError> {
    let cells: Vec<(f64, usize)> = ps
        .iter()
        .flat_map(|&p| ms.iter().map(move |&m| (p, m)))
        .collect();
    let labels: Vec<String> = cells.iter().map(|&(p, m)| binom_cell(p, m)).collect();
    replicate_all(cells.len(), spec.replicates, |c, r| {
        let (p, m) = cells[c];
        let (data_seed, _) = replicate_seeds(spec.seed, c, r);
        let y = sample_binomial(n, p, m, &mut seeded(data_seed))?;
        let model = BinPModel::from_counts(n, &y)?;
        let mut e = Emit::new("binom_p", &labels[c], r);
        for (name, conv) in [
            ("arithmetic", Convention::Arithmetic),
            ("geometric", Convention::Geometric),
        ] {
            for &level in &spec.levels {
                let (lo, hi) = central_interval_p(model.total, model.pooled_trials(), level, conv)?;
                e.cover(name, level, lo <= p && p <= hi, hi - lo);
            }
        }
        Ok(e.out)
    })
}

/// `count` draws from an ascending `(n, prob)` pmf by inversion.
pub fn sample_pmf<R: Rng + ?Sized>(pmf: &[(u64, f64)], count: usize, rng: &mut R) -> Vec<u64> {
    let mut cum = Vec::with_capacity(pmf.len());
    let mut acc = 0.0;
    for &(_, w) in pmf {
        acc += w;
        cum.push(acc);
    }
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            pmf[cum.partition_point(|&c| c <= u).min(pmf.len() - 1)].0
        })
        .collect()
}

fn run_binom_n(
    spec: &StudySpec,
    n0: u64,
    ps: &[f64],
    ms: &[usize],
    eps1: f64,
    count: usize,
) -> Result<StudyOutput, HarnessError> {
    let cells: Vec<(f64, usize)> = ps
        .iter()
        .flat_map(|&p| ms.iter().map(move |&m| (p, m)))
        .collect();
    let labels: Vec<String> = cells.iter().map(|&(p, m)| binom_cell(p, m)).collect();
    replicate_all(cells.len(), spec.replicates, |c, r| {
        let (p, m) = cells[c];
        let (data_seed, draw_seed) = replicate_seeds(spec.seed, c, r);
        let y = sample_binomial(n0, p, m, &mut seeded(data_seed))?;
        let range = candidate_range(&y, p, eps1)?;
        let masses = ds_masses(range, &y, p)?;
        let mut rng = seeded(draw_seed);
        let fid = sample_n(&masses, count, &mut rng)?;
        let bayes = sample_pmf(&bayes_posterior_n(&y, p, range)?, count, &mut rng);
        let floor = *y.iter().max().unwrap();
        let mut e = Emit::new("binom_n", &labels[c], r);
        e.value("mad_fiducial", mean_abs_diff(&fid, n0));
        e.value("mad_bayes", mean_abs_diff(&bayes, n0));
        let (fpmf, bpmf) = (empirical_pmf(&fid), empirical_pmf(&bayes));
        for &level in &spec.levels {
            for (name, pmf) in [("fiducial_upper", &fpmf), ("bayes_upper", &bpmf)] {
                let s = upper_interval(pmf, level, floor)?;
                e.cover(name, level, s.contains(n0), s.len() as f64);
            }
        }
        Ok(e.out)
    })
}

pub fn np_cell(n: u64, p: f64) -> String {
    format!("n={n},p={p}")
}

/// Type-7 quantile where censored values count as `+∞`.
fn censored_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if b.is_infinite() {
        return f64::INFINITY;
    }
    a + frac * (b - a)
}

fn run_binom_np(
    spec: &StudySpec,
    ns: &[u64],
    ps: &[f64],
    m: usize,
) -> Result<StudyOutput, HarnessError> {
    let run = spec.sampler.or(1, NP_RUN.0, NP_RUN.1);
    let cells: Vec<(u64, f64)> = ns
        .iter()
        .flat_map(|&n| ps.iter().map(move |&p| (n, p)))
        .collect();
    let labels: Vec<String> = cells.iter().map(|&(n, p)| np_cell(n, p)).collect();
    replicate_all(cells.len(), spec.replicates, |c, r| {
        let (n0, p) = cells[c];
        let mu0 = n0 as f64 * p;
        let (data_seed, chain_seed) = replicate_seeds(spec.seed, c, r);
        let y = sample_binomial(n0, p, m, &mut seeded(data_seed))?;
        let cfg = NpSamplerConfig {
            iterations: run.iterations,
            burn_in: run.burn_in,
            seed: chain_seed,
            ..Default::default()
        };
        let res = run_np_sampler(&y, &cfg)?;
        let reps = representatives(&res.sets, &mut seeded(derive(chain_seed, 1)))?;
        let fit = BoxFit::fit(&res.sets, &reps)?;
        let mut e = Emit::new("binom_np", &labels[c], r);
        let unbounded = res.sets.iter().filter(|s| s.unbounded_tail).count();
        e.value(
            "unbounded_fraction",
            unbounded as f64 / res.sets.len() as f64,
        );
        e.value("mu_acceptance", res.mu_acceptance);
        e.value("n_acceptance", res.n_acceptance);
        let rep_n = sorted_copy(
            &reps
                .iter()
                .map(|&(n, _, cens)| if cens { f64::INFINITY } else { n as f64 })
                .collect::<Vec<_>>(),
        );
        let rep_mu = sorted_copy(&reps.iter().map(|r| r.1).collect::<Vec<_>>());
        let area = |b: &gfi_core::regions::NpBox| {
            if b.unbounded {
                f64::INFINITY
            } else {
                (b.n_hi - b.n_lo) * (b.mu_hi - b.mu_lo)
            }
        };
        for &level in &spec.levels {
            let b = fit.belief(level)?;
            e.cover("belief_box", level, b.contains(n0 as f64, mu0), area(&b));
            let q = fit.plausibility(level)?;
            e.cover(
                "plausibility_box",
                level,
                q.contains(n0 as f64, mu0),
                area(&q),
            );
            let a = (1.0 - level) / 2.0;
            let (lo, hi) = (
                censored_quantile(&rep_n, a),
                censored_quantile(&rep_n, 1.0 - a),
            );
            e.cover(
                "marginal_n",
                level,
                lo <= n0 as f64 && n0 as f64 <= hi,
                hi - lo,
            );
            let (lo, hi) = (
                quantile_sorted(&rep_mu, a),
                quantile_sorted(&rep_mu, 1.0 - a),
            );
            e.cover("marginal_mu", level, lo <= mu0 && mu0 <= hi, hi - lo);
        }
        Ok(e.out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn censored_quantiles() {
        let s = [1.0, 2.0, f64::INFINITY];
        assert_eq!(censored_quantile(&s, 0.0), 1.0);
        assert_eq!(censored_quantile(&s, 0.25), 1.5);
        assert_eq!(censored_quantile(&s, 0.5), 2.0);
        assert!(censored_quantile(&s, 0.75).is_infinite());
    }

    #[test]
    fn pmf_sampling_hits_support_only() {
        let pmf = [(3u64, 0.25), (7, 0.0), (9, 0.75)];
        let d = sample_pmf(&pmf, 2000, &mut seeded(1));
        assert!(d.iter().all(|&x| x == 3 || x == 9));
        let share = d.iter().filter(|&&x| x == 9).count() as f64 / 2000.0;
        assert!((share - 0.75).abs() < 0.05);
    }

    #[test]
    fn seeds_differ_across_cells_and_replicates() {
        assert_ne!(replicate_seeds(1, 0, 0), replicate_seeds(1, 1, 0));
        assert_ne!(replicate_seeds(1, 0, 0), replicate_seeds(1, 0, 1));
    }
}
