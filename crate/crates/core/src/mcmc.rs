//! Settings shared by the Markov chain samplers.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Run length, chain count and seed for a multi-chain sampler.
///
/// Chain `k` draws from its own generator seeded with `seed + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub chains: usize,
    /// Total iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in iteration.
    pub thin: usize,
    /// Random-walk step size; `None` picks a model-specific default.
    pub proposal_sd: Option<f64>,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 2000,
            burn_in: 500,
            thin: 1,
            proposal_sd: None,
            seed: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return config("chains must be at least 1");
        }
        if self.burn_in >= self.iterations {
            return config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            ));
        }
        if self.thin == 0 {
            return config("thin must be at least 1");
        }
        if let Some(sd) = self.proposal_sd {
            if !(sd > 0.0 && sd.is_finite()) {
                return config(format!("proposal_sd must be positive, got {sd}"));
            }
        }
        Ok(())
    }

    /// Number of draws each chain keeps.
    pub fn kept_per_chain(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }

    pub(crate) fn keeps(&self, iter: usize) -> bool {
        iter >= self.burn_in && (iter - self.burn_in) % self.thin == 0
    }
}

/// Burn-in step-size adaptation toward a target acceptance rate.
///
/// Every `window` proposals the log step size moves by the difference between
/// the observed and target acceptance rates. Callers stop calling
/// [`Adapter::record`] once burn-in ends, which freezes the step.
#[derive(Debug, Clone)]
pub(crate) struct Adapter {
    pub sd: f64,
    target: f64,
    window: usize,
    tried: usize,
    accepted: usize,
}

impl Adapter {
    pub fn new(sd: f64, target: f64) -> Self {
        Self {
            sd,
            target,
            window: 50,
            tried: 0,
            accepted: 0,
        }
    }

    pub fn record(&mut self, accepted: bool) {
        self.tried += 1;
        self.accepted += accepted as usize;
        if self.tried == self.window {
            let rate = self.accepted as f64 / self.tried as f64;
            self.sd *= (2.0 * (rate - self.target)).exp();
            self.tried = 0;
            self.accepted = 0;
        }
    }
}

/// Logs a warning when a post-burn-in acceptance rate falls outside `[0.1, 0.6]`.
pub(crate) fn check_acceptance(what: &str, chain: usize, accepted: usize, tried: usize) {
    if tried == 0 {
        return;
    }
    let rate = accepted as f64 / tried as f64;
    if !(0.1..=0.6).contains(&rate) {
        log::warn!("{what}: chain {chain} acceptance rate {rate:.3} outside [0.1, 0.6]");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ChainConfig::default().validate().is_ok());
        assert!(ChainConfig {
            chains: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChainConfig {
            burn_in: 2000,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ChainConfig {
            proposal_sd: Some(-1.0),
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn kept_draw_count() {
        let c = ChainConfig {
            iterations: 110,
            burn_in: 10,
            thin: 3,
            ..Default::default()
        };
        let kept = (0..110).filter(|&i| c.keeps(i)).count();
        assert_eq!(kept, c.kept_per_chain());
    }

    #[test]
    fn adapter_shrinks_when_rejecting() {
        let mut a = Adapter::new(1.0, 0.3);
        for _ in 0..50 {
            a.record(false);
        }
        assert!(a.sd < 1.0);
    }
}
