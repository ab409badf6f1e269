//! Study specifications as read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// One study: a model design plus replication settings.
///
/// ```json
/// { "family": "binom_n", "n0": 10, "p": [0.5, 0.99], "m": [100],
///   "eps1": 1e-8, "draws": 1000, "replicates": 300,
///   "levels": [0.8, 0.9, 0.95], "seed": 7 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    #[serde(flatten)]
    pub design: Design,
    pub replicates: usize,
    pub levels: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub sampler: SamplerSettings,
    /// Directory for the emitted tables.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    Mvn,
    Ranef,
    BinomP,
    BinomN,
    BinomNp,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Mvn => "mvn",
            Family::Ranef => "ranef",
            Family::BinomP => "binom_p",
            Family::BinomN => "binom_n",
            Family::BinomNp => "binom_np",
        }
    }
}

/// Truth and data sizes of each study family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Design {
    Mvn {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
        n: usize,
    },
    /// Every group pattern is crossed with every `(σ_a², σ_e²)` pair.
    Ranef {
        patterns: Vec<Vec<usize>>,
        pairs: Vec<(f64, f64)>,
        beta: f64,
    },
    BinomP {
        n: u64,
        p: Vec<f64>,
        m: Vec<usize>,
    },
    BinomN {
        n0: u64,
        p: Vec<f64>,
        m: Vec<usize>,
        eps1: f64,
        draws: usize,
    },
    BinomNp {
        n: Vec<u64>,
        p: Vec<f64>,
        m: usize,
    },
}

impl Design {
    pub fn family(&self) -> Family {
        match self {
            Design::Mvn { .. } => Family::Mvn,
            Design::Ranef { .. } => Family::Ranef,
            Design::BinomP { .. } => Family::BinomP,
            Design::BinomN { .. } => Family::BinomN,
            Design::BinomNp { .. } => Family::BinomNp,
        }
    }
}

/// Sampler run lengths. Zero fields mean "use the family default".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SamplerSettings {
    #[serde(default)]
    pub chains: usize,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
}

impl SamplerSettings {
    pub fn or(self, chains: usize, iterations: usize, burn_in: usize) -> Self {
        let pick = |a: usize, b: usize| if a == 0 { b } else { a };
        Self {
            chains: pick(self.chains, chains),
            iterations: pick(self.iterations, iterations),
            burn_in: pick(self.burn_in, burn_in),
        }
    }
}

pub const MVN_MU: [f64; 4] = [1.0, 2.0, 3.0, 1.0];
pub const MVN_SIGMA: [[f64; 4]; 4] = [
    [4.0, 1.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 1.0],
    [0.0, 0.0, 9.0, 1.0],
    [0.0, 1.0, 1.0, 4.0],
];

/// Group-size patterns 1 to 7, from most to least unbalanced.
pub fn ranef_patterns() -> Vec<Vec<usize>> {
    vec![
        vec![1, 1, 1, 1, 1, 100],
        vec![2, 2, 2, 2, 2, 100],
        vec![2, 5, 60],
        vec![4, 4, 4, 8, 48],
        vec![5, 10, 15, 20, 25, 30],
        vec![2, 2, 4, 6],
        vec![6, 6, 8, 8, 10, 10],
    ]
}

/// `(σ_a², σ_e²)` pairs, ordered by `η = σ_a²/σ_e²`.
pub const RANEF_PAIRS: [(f64, f64); 8] = [
    (0.1, 10.0),
    (0.5, 10.0),
    (1.0, 10.0),
    (0.5, 2.0),
    (1.0, 1.0),
    (2.0, 0.5),
    (5.0, 0.2),
    (10.0, 0.1),
];

pub const BINOM_N_PGRID: [f64; 12] = [
    0.01, 0.05, 0.1, 0.2, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99,
];

pub fn level_grid() -> Vec<f64> {
    vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
}

impl StudySpec {
    /// The published design of each family at desk scale.
    pub fn default_for(family: Family) -> Self {
        let (design, replicates, levels) = match family {
            Family::Mvn => (
                Design::Mvn {
                    mu: MVN_MU.to_vec(),
                    sigma: MVN_SIGMA.iter().map(|r| r.to_vec()).collect(),
                    n: 100,
                },
                200,
                level_grid(),
            ),
            Family::Ranef => (
                Design::Ranef {
                    patterns: ranef_patterns(),
                    pairs: RANEF_PAIRS.to_vec(),
                    beta: 0.0,
                },
                100,
                vec![0.8, 0.9, 0.95, 0.99],
            ),
            Family::BinomP => (
                Design::BinomP {
                    n: 10,
                    p: vec![0.05, 0.2, 0.5, 0.8, 0.95],
                    m: vec![1, 10],
                },
                300,
                level_grid(),
            ),
            Family::BinomN => (
                Design::BinomN {
                    n0: 10,
                    p: BINOM_N_PGRID.to_vec(),
                    m: vec![10, 50, 100],
                    eps1: 1e-8,
                    draws: 1000,
                },
                300,
                level_grid(),
            ),
            Family::BinomNp => (
                Design::BinomNp {
                    n: vec![15, 75],
                    p: vec![0.1, 0.5, 0.9],
                    m: 100,
                },
                50,
                vec![0.95],
            ),
        };
        Self {
            design,
            replicates,
            levels,
            seed: 1,
            sampler: SamplerSettings::default(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn family(&self) -> Family {
        self.design.family()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Spec(msg));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return bad(format!(
                "levels must be nonempty and lie in (0, 1), got {:?}",
                self.levels
            ));
        }
        let s = self.sampler;
        if s.iterations > 0 && s.burn_in >= s.iterations {
            return bad(format!(
                "burn_in ({}) must be below iterations ({})",
                s.burn_in, s.iterations
            ));
        }
        let probs_ok = |ps: &[f64]| !ps.is_empty() && ps.iter().all(|p| *p > 0.0 && *p < 1.0);
        match &self.design {
            Design::Mvn { mu, sigma, n } => {
                if sigma.len() != mu.len() || sigma.iter().any(|r| r.len() != mu.len()) {
                    return bad("sigma must be a square matrix matching mu".into());
                }
                if *n <= mu.len() {
                    return bad(format!("need n > d, got n = {n}"));
                }
            }
            Design::Ranef {
                patterns, pairs, ..
            } => {
                if patterns.is_empty() || pairs.is_empty() {
                    return bad("need at least one pattern and one parameter pair".into());
                }
                if pairs.iter().any(|(a, e)| !(*a >= 0.0 && *e > 0.0)) {
                    return bad("variance pairs need σ_a² ≥ 0 and σ_e² > 0".into());
                }
            }
            Design::BinomP { p, m, .. } => {
                if !probs_ok(p) || m.is_empty() || m.contains(&0) {
                    return bad("need p in (0, 1) and positive data sizes".into());
                }
            }
            Design::BinomN { p, m, draws, .. } => {
                if !probs_ok(p) || m.is_empty() || m.contains(&0) || *draws == 0 {
                    return bad("need p in (0, 1), positive data sizes and draws".into());
                }
            }
            Design::BinomNp { n, p, m } => {
                if !probs_ok(p) || n.is_empty() || *m == 0 {
                    return bad("need p in (0, 1), at least one n and m > 0".into());
                }
            }
        }
        Ok(())
    }
}
