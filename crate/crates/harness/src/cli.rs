//! The `gfi` command line.
//!
//! Each subcommand produces one table. With `--out` the table goes to that
//! file and a short summary goes to standard output; without it the table
//! goes to standard output and the summary to standard error. `study` treats
//! `--out` as a directory and writes `coverage`, `values` and `summary` tables
//! into it.
//!
//! Exit status: 0 on success, 1 on runtime errors, 2 on argument errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use gfi_core::binom_n::{candidate_range, ds_masses, gfd_pmf, upper_interval};
use gfi_core::binom_np::{run_np_sampler, NpSamplerConfig, DEFAULT_EPS2};
use gfi_core::binom_p::{central_interval_p, gfd_sample_p, BinPModel, Convention};
use gfi_core::mcmc::ChainConfig;
use gfi_core::mvn::{self, MvnData};
use gfi_core::numerics::{derive, sample_binomial, seeded, SpdMatrix};
use gfi_core::ranef::{self, ReModel, ReParams};
use gfi_core::regions::{
    central_interval, euclidean_ball, representatives, BoxFit, CovRegion, CovRegionFit,
};

use crate::data;
use crate::record::{summarize, write_table, Format};
use crate::spec::{ranef_patterns, Family, StudySpec, MVN_MU, MVN_SIGMA};
use crate::studies::run_study;
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(
    name = "gfi",
    version,
    about = "Generalized fiducial inference samplers and coverage studies"
)]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (directory for `study`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    /// Iterations per chain, burn-in included.
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    #[arg(long = "burn-in", global = true)]
    pub burn_in: Option<usize>,
    /// Confidence level of the reported regions.
    #[arg(long, global = true, value_parser = parse_level)]
    pub level: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must lie in (0, 1), got {v}"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean and covariance of multivariate normal data.
    MvnSample(MvnArgs),
    /// Variance components of the one-way random effects model.
    RanefSample(RanefArgs),
    /// Binomial p with the number of trials known.
    BinomP(BinomPArgs),
    /// Binomial n with p known: focal intervals and their masses.
    BinomN(BinomNArgs),
    /// Binomial n and μ = np both unknown.
    BinomNp(BinomNpArgs),
    /// Runs a coverage study from a JSON spec, or the default design of a family.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
pub struct MvnArgs {
    /// Headered CSV, one observation per row.
    #[arg(long, conflicts_with = "simulate")]
    pub data: Option<PathBuf>,
    /// Simulate this many observations from the built-in four-dimensional design.
    #[arg(long)]
    pub simulate: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RanefArgs {
    /// Headered CSV with columns `y` and `group`.
    #[arg(long, conflicts_with = "pattern")]
    pub data: Option<PathBuf>,
    /// Simulate from group pattern 1 to 7.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
    pub pattern: Option<u8>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_a2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_e2: f64,
}

#[derive(Debug, Args)]
pub struct BinomSim {
    /// Simulate this many counts instead of reading `--data`.
    #[arg(long, conflicts_with = "data")]
    pub simulate: Option<usize>,
    /// Headered CSV with the counts in the first column.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BinomPArgs {
    /// Number of trials per count.
    #[arg(long)]
    pub n: u64,
    #[arg(long, value_parser = ["arithmetic", "geometric"], default_value = "geometric")]
    pub convention: String,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    /// True p when simulating.
    #[arg(long, default_value_t = 0.5)]
    pub true_p: f64,
    #[command(flatten)]
    pub source: BinomSim,
}

#[derive(Debug, Args)]
pub struct BinomNArgs {
    /// Known success probability.
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = gfi_core::binom_n::DEFAULT_EPS1)]
    pub eps1: f64,
    /// True n when simulating.
    #[arg(long, default_value_t = 10)]
    pub true_n: u64,
    #[command(flatten)]
    pub source: BinomSim,
}

#[derive(Debug, Args)]
pub struct BinomNpArgs {
    #[arg(long, default_value_t = DEFAULT_EPS2)]
    pub eps2: f64,
    #[arg(long, default_value_t = 15)]
    pub true_n: u64,
    #[arg(long, default_value_t = 0.5)]
    pub true_p: f64,
    #[command(flatten)]
    pub source: BinomSim,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// JSON study spec.
    pub spec: Option<PathBuf>,
    /// Run the built-in design of this family instead of a spec file.
    #[arg(long, value_enum, conflicts_with = "spec")]
    pub family: Option<Family>,
    /// Override the number of replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
}

/// Parses `args` and runs the command; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Table and summary of one command.
struct Report {
    table: Vec<u8>,
    summary: String,
}

pub fn execute(cli: &Cli) -> Result<(), HarnessError> {
    if let Command::Study(args) = &cli.command {
        return study(cli, args);
    }
    let report = match &cli.command {
        Command::MvnSample(a) => mvn_sample(cli, a)?,
        Command::RanefSample(a) => ranef_sample(cli, a)?,
        Command::BinomP(a) => binom_p(cli, a)?,
        Command::BinomN(a) => binom_n(cli, a)?,
        Command::BinomNp(a) => binom_np(cli, a)?,
        Command::Study(_) => unreachable!(),
    };
    emit(cli, &report)
}

fn emit(cli: &Cli, report: &Report) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(e.to_string());
    let ok_if_closed = |r: std::io::Result<()>| match r {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &report.table).map_err(|e| HarnessError::io(path, e))?;
            ok_if_closed(std::io::stdout().write_all(report.summary.as_bytes())).map_err(io)?;
        }
        None => {
            ok_if_closed(std::io::stdout().write_all(&report.table)).map_err(io)?;
            std::io::stderr()
                .write_all(report.summary.as_bytes())
                .map_err(io)?;
        }
    }
    Ok(())
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(1)
}

fn level(cli: &Cli) -> f64 {
    cli.level.unwrap_or(0.95)
}

fn chain_config(cli: &Cli, defaults: (usize, usize, usize)) -> ChainConfig {
    ChainConfig {
        chains: cli.chains.unwrap_or(defaults.0),
        iterations: cli.iters.unwrap_or(defaults.1),
        burn_in: cli.burn_in.unwrap_or(defaults.2),
        thin: 1,
        proposal_sd: None,
        seed: seed(cli),
    }
}

/// Simulated data use a seed derived from the base seed; samplers use the base seed.
fn data_seed(cli: &Cli) -> u64 {
    derive(seed(cli), 0)
}

/// Rows of numbers under named columns; emitted as CSV or as a JSON array of objects.
struct FlatTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FlatTable {
    fn to_bytes(&self, format: Format) -> Result<Vec<u8>, HarnessError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(|v| v.to_string()))?;
                }
                w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))
            }
            Format::Json => {
                let mut s = String::from("[");
                for (i, r) in self.rows.iter().enumerate() {
                    s.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
                    for (j, (c, v)) in self.columns.iter().zip(r).enumerate() {
                        let sep = if j == 0 { "" } else { ", " };
                        write!(
                            s,
                            "{sep}{}: {}",
                            serde_json::to_string(c)?,
                            json_number(*v)?
                        )
                        .unwrap();
                    }
                    s.push('}');
                }
                s.push_str("\n]\n");
                Ok(s.into_bytes())
            }
        }
    }
}

/// Integral values print without a fractional part.
fn json_number(v: f64) -> Result<String, HarnessError> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        return Ok(format!("{}", v as i64));
    }
    Ok(serde_json::to_string(&v)?)
}

fn mvn_sample(cli: &Cli, a: &MvnArgs) -> Result<Report, HarnessError> {
    let x = match (&a.data, a.simulate) {
        (Some(p), _) => data::read_matrix_file(p)?,
        (None, Some(n)) => {
            let sigma = SpdMatrix::new(DMatrix::from_fn(4, 4, |i, j| MVN_SIGMA[i][j]))?;
            mvn::simulate(&MVN_MU, &sigma, n, &mut seeded(data_seed(cli)))?
        }
        (None, None) => return Err(HarnessError::Data("give --data or --simulate".into())),
    };
    let data = MvnData::new(x)?;
    let d = data.d();
    let cfg = chain_config(cli, (4, 2000, 500));
    let draws = mvn::run_chains(&data, &cfg)?;
    let mut columns = vec!["chain".to_string(), "iter".to_string()];
    columns.extend((0..d * (d - 1) / 2).map(|k| format!("veck{k}")));
    columns.extend((0..d).map(|k| format!("lambda{k}")));
    columns.extend((0..d).map(|k| format!("mu{k}")));
    for i in 0..d {
        for j in i..d {
            columns.push(format!("cov{i}{j}"));
        }
    }
    let rows = draws
        .iter()
        .map(|dr| {
            let mut r = vec![dr.chain as f64, dr.iter as f64];
            r.extend_from_slice(dr.skew.veck());
            r.extend_from_slice(&dr.lambda);
            r.extend_from_slice(&dr.mu);
            r.extend(dr.cov.vech());
            r
        })
        .collect();
    let lvl = level(cli);
    let covs: Vec<SpdMatrix> = draws.iter().map(|d| d.cov.clone()).collect();
    let mut summary = String::new();
    for region in CovRegion::ALL {
        match region.fit(&covs)? {
            CovRegionFit::Ball { fit, .. } => {
                writeln!(summary, "{region}\tradius\t{}", fit.radius(lvl)).unwrap()
            }
            CovRegionFit::Interval { sorted, .. } => {
                let (lo, hi) = central_interval(&sorted, lvl)?;
                writeln!(summary, "{region}\tinterval\t{lo}\t{hi}").unwrap();
            }
        }
    }
    let mus: Vec<Vec<f64>> = draws.iter().map(|d| d.mu.clone()).collect();
    let ball = euclidean_ball(&mus, lvl)?;
    writeln!(summary, "mu_euclidean\tradius\t{}", ball.radius).unwrap();
    Ok(Report {
        table: FlatTable { columns, rows }.to_bytes(cli.format)?,
        summary,
    })
}

fn ranef_sample(cli: &Cli, a: &RanefArgs) -> Result<Report, HarnessError> {
    let (y, sizes) = match (&a.data, a.pattern) {
        (Some(p), _) => {
            let g = data::read_grouped_file(p)?;
            (g.y, g.group_sizes)
        }
        (None, Some(k)) => {
            let sizes = ranef_patterns()[k as usize - 1].clone();
            let model = ReModel::new(sizes.clone(), None)?;
            let truth = ReParams {
                beta: vec![0.0],
                sigma_a2: a.sigma_a2,
                sigma_e2: a.sigma_e2,
            };
            (
                ranef::simulate(&model, &truth, &mut seeded(data_seed(cli)))?,
                sizes,
            )
        }
        (None, None) => return Err(HarnessError::Data("give --data or --pattern".into())),
    };
    let model = ReModel::new(sizes, None)?;
    let cfg = chain_config(cli, (4, 2000, 500));
    let draws = ranef::re_sample(&y, &model, &cfg)?;
    let q = model.n_fixed();
    let mut columns = vec!["chain".to_string(), "iter".to_string()];
    columns.extend((0..q).map(|k| format!("beta{k}")));
    columns.push("sigma_a2".into());
    columns.push("sigma_e2".into());
    let rows = draws
        .iter()
        .map(|d| {
            let mut r = vec![d.chain as f64, d.iter as f64];
            r.extend_from_slice(&d.params.beta);
            r.push(d.params.sigma_a2);
            r.push(d.params.sigma_e2);
            r
        })
        .collect();
    let lvl = level(cli);
    let mut summary = String::new();
    for (name, vals) in [
        (
            "sigma_a2",
            draws.iter().map(|d| d.params.sigma_a2).collect::<Vec<_>>(),
        ),
        (
            "sigma_e2",
            draws.iter().map(|d| d.params.sigma_e2).collect(),
        ),
    ] {
        let (lo, hi) = central_interval(&vals, lvl)?;
        writeln!(summary, "{name}\tinterval\t{lo}\t{hi}").unwrap();
    }
    Ok(Report {
        table: FlatTable { columns, rows }.to_bytes(cli.format)?,
        summary,
    })
}

fn counts(cli: &Cli, src: &BinomSim, n: u64, p: f64) -> Result<Vec<u64>, HarnessError> {
    match (&src.data, src.simulate) {
        (Some(path), _) => data::read_counts_file(path),
        (None, Some(m)) => Ok(sample_binomial(n, p, m, &mut seeded(data_seed(cli)))?),
        (None, None) => Err(HarnessError::Data("give --data or --simulate".into())),
    }
}

fn binom_p(cli: &Cli, a: &BinomPArgs) -> Result<Report, HarnessError> {
    let y = counts(cli, &a.source, a.n, a.true_p)?;
    let model = BinPModel::from_counts(a.n, &y)?;
    let conv: Convention = a.convention.parse().map_err(HarnessError::Data)?;
    let (lo, hi) = central_interval_p(model.total, model.pooled_trials(), level(cli), conv)?;
    let draws = gfd_sample_p(&model, conv, a.draws, &mut seeded(seed(cli)));
    let table = FlatTable {
        columns: vec!["p".into()],
        rows: draws.into_iter().map(|p| vec![p]).collect(),
    };
    Ok(Report {
        table: table.to_bytes(cli.format)?,
        summary: format!("p\tinterval\t{lo}\t{hi}\n"),
    })
}

fn binom_n(cli: &Cli, a: &BinomNArgs) -> Result<Report, HarnessError> {
    let y = counts(cli, &a.source, a.true_n, a.p)?;
    let range = candidate_range(&y, a.p, a.eps1)?;
    let masses = ds_masses(range, &y, a.p)?;
    let table = FlatTable {
        columns: vec!["lo".into(), "hi".into(), "mass".into()],
        rows: masses
            .intervals
            .iter()
            .map(|(s, m)| vec![s.lo as f64, s.hi as f64, *m])
            .collect(),
    };
    let floor = *y.iter().max().unwrap();
    let up = upper_interval(&gfd_pmf(&masses), level(cli), floor)?;
    let summary = format!(
        "candidates\t{}\t{}\nempty_mass\t{}\nn\tupper_interval\t{}\t{}\n",
        range.lo, range.hi, masses.empty_mass, up.lo, up.hi
    );
    Ok(Report {
        table: table.to_bytes(cli.format)?,
        summary,
    })
}

fn binom_np(cli: &Cli, a: &BinomNpArgs) -> Result<Report, HarnessError> {
    let y = counts(cli, &a.source, a.true_n, a.true_p)?;
    let cfg = NpSamplerConfig {
        eps2: a.eps2,
        iterations: cli.iters.unwrap_or(5000),
        burn_in: cli.burn_in.unwrap_or(1000),
        seed: seed(cli),
        ..Default::default()
    };
    let res = run_np_sampler(&y, &cfg)?;
    let reps = representatives(&res.sets, &mut seeded(derive(seed(cli), 1)))?;
    let rows = res
        .sets
        .iter()
        .zip(&reps)
        .enumerate()
        .map(|(k, (s, r))| {
            vec![
                (cfg.burn_in + k) as f64,
                s.min_n().unwrap() as f64,
                s.max_n().unwrap() as f64,
                s.unbounded_tail as u8 as f64,
                s.mu_min().unwrap(),
                s.mu_max().unwrap(),
                r.0 as f64,
                r.1,
            ]
        })
        .collect();
    let columns = [
        "iter",
        "min_n",
        "max_n",
        "unbounded",
        "mu_min",
        "mu_max",
        "rep_n",
        "rep_mu",
    ];
    let table = FlatTable {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    };
    let fit = BoxFit::fit(&res.sets, &reps)?;
    let lvl = level(cli);
    let mut summary = String::new();
    for (name, b) in [
        ("belief_box", fit.belief(lvl)?),
        ("plausibility_box", fit.plausibility(lvl)?),
    ] {
        writeln!(
            summary,
            "{name}\t{}\t{}\t{}\t{}\t{}",
            b.n_lo,
            b.n_hi,
            b.mu_lo,
            b.mu_hi,
            if b.unbounded { "unbounded" } else { "bounded" }
        )
        .unwrap();
    }
    writeln!(
        summary,
        "acceptance\tmu\t{}\tn\t{}",
        res.mu_acceptance, res.n_acceptance
    )
    .unwrap();
    Ok(Report {
        table: table.to_bytes(cli.format)?,
        summary,
    })
}

fn study(cli: &Cli, a: &StudyArgs) -> Result<(), HarnessError> {
    let mut spec = match (&a.spec, a.family) {
        (Some(p), _) => StudySpec::load(p)?,
        (None, Some(f)) => StudySpec::default_for(f),
        (None, None) => return Err(HarnessError::Spec("give a spec file or --family".into())),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(r) = a.replicates {
        spec.replicates = r;
    }
    if let Some(l) = cli.level {
        spec.levels = vec![l];
    }
    spec.sampler.chains = cli.chains.unwrap_or(spec.sampler.chains);
    spec.sampler.iterations = cli.iters.unwrap_or(spec.sampler.iterations);
    spec.sampler.burn_in = cli.burn_in.unwrap_or(spec.sampler.burn_in);
    let out = run_study(&spec)?;
    let summary = summarize(&out.coverage);
    let dir = cli
        .out
        .clone()
        .or_else(|| spec.output.as_ref().map(PathBuf::from));
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
            let ext = cli.format.extension();
            write_file(
                &dir.join(format!("coverage.{ext}")),
                &out.coverage,
                cli.format,
            )?;
            write_file(&dir.join(format!("values.{ext}")), &out.values, cli.format)?;
            write_file(&dir.join(format!("summary.{ext}")), &summary, cli.format)?;
            write_table(&summary, cli.format, std::io::stdout().lock())
        }
        None => write_table(&summary, cli.format, std::io::stdout().lock()),
    }
}

fn write_file<T: serde::Serialize>(
    path: &Path,
    rows: &[T],
    format: Format,
) -> Result<(), HarnessError> {
    let f = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_table(rows, format, std::io::BufWriter::new(f))
}
