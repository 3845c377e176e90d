//! Strict JSON configuration with per-scenario defaults.
//!
//! A config file names a registered scenario and overrides any subset of its
//! parameters. Unknown keys are rejected. Parsing resolves the file against
//! the scenario's baseline into a fully populated effective config, which
//! `simulate` echoes next to its outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adp::{GridKind, GridStrategy, ValueBasisKind};
use crate::error::{Error, Result};
use crate::gains::EpsilonBounds;
use crate::sysid::Activation;

/// Identifier basis families the registry can build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentifierBasisKind {
    /// `σ_f = [1, xᵀ]ᵀ` (identity activation, Y selecting the state).
    Passthrough,
    /// Random-ridge basis with the named activation and seeded `Y`.
    Tanh,
    Gaussian,
}

impl IdentifierBasisKind {
    pub fn activation(self) -> Activation {
        match self {
            IdentifierBasisKind::Passthrough => Activation::Identity,
            IdentifierBasisKind::Tanh => Activation::Tanh,
            IdentifierBasisKind::Gaussian => Activation::Gaussian,
        }
    }
}

macro_rules! optional_section {
    ($name:ident { $($(#[$meta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Clone, Debug, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$meta])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

optional_section!(PlantOverride {
    a: f64,
    b: f64,
});

optional_section!(DesiredOverride {
    x_d0: Vec<f64>,
    d: f64,
});

optional_section!(CostOverride {
    q_diag: Vec<f64>,
    r: Vec<Vec<f64>>,
});

optional_section!(IdentifierOverride {
    basis: IdentifierBasisKind,
    p: usize,
    y_seed: u64,
    y_scale: f64,
    bias: bool,
    k: f64,
    k_theta: f64,
    gamma_theta: f64,
    capacity: usize,
    window: usize,
    record_interval: usize,
    excitation_threshold: f64,
    d_bar: f64,
});

optional_section!(AdpGainsOverride {
    eta_c1: f64,
    eta_c2: f64,
    eta_a1: f64,
    eta_a2: f64,
    nu: f64,
    beta: f64,
    gamma_bar: f64,
});

optional_section!(GridOverride {
    n_points: usize,
    bounds: Vec<[f64; 2]>,
    strategy: GridStrategy,
    kind: GridKind,
});

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdpOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<ValueBasisKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<AdpGainsOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridOverride>,
}

optional_section!(SimOverride {
    t_final: f64,
    dt: f64,
    seed: u64,
    x0: Vec<f64>,
});

optional_section!(EpsilonOverride {
    eps: f64,
    eps_prime: f64,
    eps_theta: f64,
    eps_theta_d: f64,
    d_bar: f64,
});

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsCheckOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_e_bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_xd_bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_theta_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_ball: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonOverride>,
}

/// A user-facing config file: scenario name plus overrides.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desired: Option<DesiredOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifier: Option<IdentifierOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adp: Option<AdpOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains_check: Option<GainsCheckOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// Fully resolved configuration: every field concrete.
#[derive(Clone, Debug, Serialize)]
pub struct EffectiveConfig {
    pub scenario: String,
    pub plant: EffectivePlant,
    pub desired: EffectiveDesired,
    pub cost: EffectiveCost,
    pub identifier: EffectiveIdentifier,
    pub adp: EffectiveAdp,
    pub sim: EffectiveSim,
    pub gains_check: EffectiveGainsCheck,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectivePlant {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveDesired {
    pub x_d0: Vec<f64>,
    pub d: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveCost {
    pub q_diag: Vec<f64>,
    pub r: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveIdentifier {
    pub basis: IdentifierBasisKind,
    pub p: usize,
    pub y_seed: u64,
    pub y_scale: f64,
    pub bias: bool,
    pub k: f64,
    pub k_theta: f64,
    pub gamma_theta: f64,
    pub capacity: usize,
    pub window: usize,
    pub record_interval: usize,
    pub excitation_threshold: f64,
    pub d_bar: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveAdp {
    pub basis: ValueBasisKind,
    pub gains: crate::adp::AdpGains,
    pub w_c0: f64,
    pub w_a0: f64,
    pub gamma0: f64,
    pub grid: crate::adp::GridConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveSim {
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveGainsCheck {
    pub chi_e_bounds: Vec<[f64; 2]>,
    pub chi_xd_bounds: Vec<[f64; 2]>,
    pub n_samples: usize,
    pub sigma_theta_lb: f64,
    pub gamma_lb: f64,
    /// Grid-excitation floor; when absent the checker evaluates the grid
    /// excitation at the oracle weights instead.
    pub c_lb: Option<f64>,
    pub rho_ball: f64,
    pub epsilon: EpsilonBounds,
}

fn merge<T: Clone>(base: &mut T, over: &Option<T>) {
    if let Some(v) = over {
        *base = v.clone();
    }
}

impl EffectiveConfig {
    /// Apply a user override file on top of this baseline.
    pub fn apply(&mut self, cfg: &ScenarioConfig) {
        if let Some(p) = &cfg.plant {
            merge(&mut self.plant.a, &p.a);
            merge(&mut self.plant.b, &p.b);
        }
        if let Some(d) = &cfg.desired {
            merge(&mut self.desired.x_d0, &d.x_d0);
            merge(&mut self.desired.d, &d.d);
        }
        if let Some(c) = &cfg.cost {
            merge(&mut self.cost.q_diag, &c.q_diag);
            merge(&mut self.cost.r, &c.r);
        }
        if let Some(i) = &cfg.identifier {
            merge(&mut self.identifier.basis, &i.basis);
            merge(&mut self.identifier.p, &i.p);
            merge(&mut self.identifier.y_seed, &i.y_seed);
            merge(&mut self.identifier.y_scale, &i.y_scale);
            merge(&mut self.identifier.bias, &i.bias);
            merge(&mut self.identifier.k, &i.k);
            merge(&mut self.identifier.k_theta, &i.k_theta);
            merge(&mut self.identifier.gamma_theta, &i.gamma_theta);
            merge(&mut self.identifier.capacity, &i.capacity);
            merge(&mut self.identifier.window, &i.window);
            merge(&mut self.identifier.record_interval, &i.record_interval);
            merge(&mut self.identifier.excitation_threshold, &i.excitation_threshold);
            merge(&mut self.identifier.d_bar, &i.d_bar);
        }
        if let Some(a) = &cfg.adp {
            merge(&mut self.adp.basis, &a.basis);
            if let Some(g) = &a.gains {
                merge(&mut self.adp.gains.eta_c1, &g.eta_c1);
                merge(&mut self.adp.gains.eta_c2, &g.eta_c2);
                merge(&mut self.adp.gains.eta_a1, &g.eta_a1);
                merge(&mut self.adp.gains.eta_a2, &g.eta_a2);
                merge(&mut self.adp.gains.nu, &g.nu);
                merge(&mut self.adp.gains.beta, &g.beta);
                merge(&mut self.adp.gains.gamma_bar, &g.gamma_bar);
            }
            merge(&mut self.adp.w_c0, &a.w_c0);
            merge(&mut self.adp.w_a0, &a.w_a0);
            merge(&mut self.adp.gamma0, &a.gamma0);
            if let Some(g) = &a.grid {
                merge(&mut self.adp.grid.n_points, &g.n_points);
                merge(&mut self.adp.grid.bounds, &g.bounds);
                merge(&mut self.adp.grid.strategy, &g.strategy);
                merge(&mut self.adp.grid.kind, &g.kind);
            }
        }
        if let Some(s) = &cfg.sim {
            merge(&mut self.sim.t_final, &s.t_final);
            merge(&mut self.sim.dt, &s.dt);
            merge(&mut self.sim.seed, &s.seed);
            merge(&mut self.sim.x0, &s.x0);
        }
        if let Some(gc) = &cfg.gains_check {
            merge(&mut self.gains_check.chi_e_bounds, &gc.chi_e_bounds);
            merge(&mut self.gains_check.chi_xd_bounds, &gc.chi_xd_bounds);
            merge(&mut self.gains_check.n_samples, &gc.n_samples);
            merge(&mut self.gains_check.sigma_theta_lb, &gc.sigma_theta_lb);
            merge(&mut self.gains_check.gamma_lb, &gc.gamma_lb);
            if gc.c_lb.is_some() {
                self.gains_check.c_lb = gc.c_lb;
            }
            merge(&mut self.gains_check.rho_ball, &gc.rho_ball);
            if let Some(e) = &gc.epsilon {
                merge(&mut self.gains_check.epsilon.eps, &e.eps);
                merge(&mut self.gains_check.epsilon.eps_prime, &e.eps_prime);
                merge(&mut self.gains_check.epsilon.eps_theta, &e.eps_theta);
                merge(&mut self.gains_check.epsilon.eps_theta_d, &e.eps_theta_d);
                merge(&mut self.gains_check.epsilon.d_bar, &e.d_bar);
            }
        }
    }

    /// Positivity and consistency checks with field-addressed messages.
    pub fn validate(&self) -> Result<()> {
        self.adp.gains.validate()?;
        let positives = [
            ("identifier.k", self.identifier.k),
            ("identifier.k_theta", self.identifier.k_theta),
            ("identifier.gamma_theta", self.identifier.gamma_theta),
            ("sim.t_final", self.sim.t_final),
            ("sim.dt", self.sim.dt),
            ("adp.gamma0", self.adp.gamma0),
        ];
        for (name, v) in positives {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::ConfigError(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        if self.adp.gamma0 > self.adp.gains.gamma_bar {
            return Err(Error::ConfigError(format!(
                "adp.gamma0 ({}) must not exceed adp.gains.gamma_bar ({})",
                self.adp.gamma0, self.adp.gains.gamma_bar
            )));
        }
        if self.identifier.window < 3 || self.identifier.window.is_multiple_of(2) {
            return Err(Error::ConfigError(format!(
                "identifier.window must be odd and >= 3 (got {})",
                self.identifier.window
            )));
        }
        if self.identifier.capacity == 0 {
            return Err(Error::ConfigError(
                "identifier.capacity must be at least 1".to_string(),
            ));
        }
        if self.identifier.record_interval == 0 {
            return Err(Error::ConfigError(
                "identifier.record_interval must be at least 1".to_string(),
            ));
        }
        if self.identifier.excitation_threshold < 0.0 {
            return Err(Error::ConfigError(
                "identifier.excitation_threshold must be >= 0".to_string(),
            ));
        }
        if self.cost.q_diag.iter().any(|&q| q <= 0.0) {
            return Err(Error::ConfigError(
                "cost.q_diag entries must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Parse and resolve a config file. The result carries the effective
/// (default-filled) configuration and the requested output directory.
pub fn parse_config(path: &Path) -> Result<(EffectiveConfig, Option<String>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parse a config document from a string (used by tests and the CLI).
pub fn parse_config_str(text: &str) -> Result<(EffectiveConfig, Option<String>)> {
    let cfg: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))?;
    let mut effective = super::registry::baseline(&cfg.scenario)?;
    effective.apply(&cfg);
    effective.validate()?;
    Ok((effective, cfg.output_dir.clone()))
}
