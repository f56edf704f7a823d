use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean observation interval Δ̄ in seconds.
pub const DELTA_BAR: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Pendulum,
    Cartpole,
    Acrobot,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Pendulum, EnvKind::Cartpole, EnvKind::Acrobot];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Pendulum => "pendulum",
            EnvKind::Cartpole => "cartpole",
            EnvKind::Acrobot => "acrobot",
        }
    }

    /// Dimension of the raw state `[q, q̇]`.
    pub fn state_dim(self) -> usize {
        match self {
            EnvKind::Pendulum => 2,
            EnvKind::Cartpole | EnvKind::Acrobot => 4,
        }
    }

    pub fn obs_dim(self) -> usize {
        match self {
            EnvKind::Pendulum => 3,
            EnvKind::Cartpole => 5,
            EnvKind::Acrobot => 6,
        }
    }

    pub fn action_dim(self) -> usize {
        match self {
            EnvKind::Pendulum | EnvKind::Cartpole => 1,
            EnvKind::Acrobot => 2,
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pendulum" => Ok(EnvKind::Pendulum),
            "cartpole" => Ok(EnvKind::Cartpole),
            "acrobot" => Ok(EnvKind::Acrobot),
            _ => Err(Error::Config(format!("unknown environment `{s}`"))),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical constants of the simulated system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub gravity: f64,
    /// Pole / link length L.
    pub length: f64,
    /// Pendulum mass, pole mass, or mass of each acrobot link.
    pub mass: f64,
    /// Cart mass (cartpole only).
    pub cart_mass: f64,
}

/// Environment constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: EnvKind,
    pub b: f64,
    pub c: f64,
    pub a_max: Vec<f64>,
    pub x_init: Vec<f64>,
    pub q_star: Vec<f64>,
    pub tau: f64,
    pub delta_bar: f64,
    pub omega: f64,
    #[serde(default)]
    pub obs_noise_std: f64,
    pub physics: Physics,
}

impl EnvSpec {
    /// Standard constants for `kind` with no delay.
    pub fn new(kind: EnvKind) -> Self {
        let l = 1.0;
        let (b, a_max, x_init, q_star, physics) = match kind {
            EnvKind::Pendulum => (
                1e-2,
                vec![2.0],
                vec![0.1; 2],
                vec![0.0, l],
                Physics { gravity: 9.81, length: l, mass: 1.0, cart_mass: 0.0 },
            ),
            EnvKind::Cartpole => (
                1e-2,
                vec![3.0],
                vec![0.05; 4],
                vec![0.0, 0.0, l],
                Physics { gravity: 9.81, length: l, mass: 0.1, cart_mass: 1.0 },
            ),
            EnvKind::Acrobot => (
                1e-4,
                vec![4.0, 4.0],
                vec![0.1; 4],
                vec![0.0, 2.0 * l],
                Physics { gravity: 9.81, length: l, mass: 1.0, cart_mass: 0.0 },
            ),
        };
        Self {
            name: kind,
            b,
            c: 1e-2,
            a_max,
            x_init,
            q_star,
            tau: 0.0,
            delta_bar: DELTA_BAR,
            omega: 4.0 * DELTA_BAR,
            obs_noise_std: 0.0,
            physics,
        }
    }

    /// Sets τ = k·Δ̄.
    pub fn with_delay_steps(mut self, k: u32) -> Self {
        self.tau = k as f64 * self.delta_bar;
        self
    }

    pub fn with_obs_noise(mut self, std: f64) -> Self {
        self.obs_noise_std = std;
        self
    }

    pub fn kind(&self) -> EnvKind {
        self.name
    }

    pub fn state_dim(&self) -> usize {
        self.name.state_dim()
    }

    pub fn obs_dim(&self) -> usize {
        self.name.obs_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.name.action_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.a_max.len() != self.action_dim() || self.a_max.iter().any(|a| !(*a > 0.0)) {
            return bad(format!("a_max {:?} must have {} positive entries", self.a_max, self.action_dim()));
        }
        if self.x_init.len() != self.state_dim() || self.x_init.iter().any(|x| !(*x >= 0.0)) {
            return bad(format!("x_init {:?} must have {} non-negative entries", self.x_init, self.state_dim()));
        }
        let goal_dim = match self.name {
            EnvKind::Cartpole => 3,
            _ => 2,
        };
        if self.q_star.len() != goal_dim {
            return bad(format!("q_star needs {goal_dim} entries"));
        }
        if !(self.b >= 0.0 && self.c >= 0.0) {
            return bad("b and c must be non-negative".into());
        }
        if !(self.delta_bar > 0.0) || !(self.tau >= 0.0) || !(self.tau < self.omega) {
            return bad(format!("need 0 ≤ τ < ω and Δ̄ > 0 (τ={}, ω={}, Δ̄={})", self.tau, self.omega, self.delta_bar));
        }
        if !(self.obs_noise_std >= 0.0) {
            return bad("obs_noise_std must be non-negative".into());
        }
        let p = &self.physics;
        if !(p.gravity >= 0.0 && p.length > 0.0 && p.mass > 0.0) || (self.name == EnvKind::Cartpole && !(p.cart_mass > 0.0)) {
            return bad(format!("invalid physical constants {p:?}"));
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_config_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_config_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }
}
