use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Gamma, RateSchedule};
use crate::error::{bail, Result};
use crate::fluctuations::TestFunction;
use crate::lattice::MIN_RING_LEN;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sample,
    Simulate,
    Fluctuation,
    Ensembles,
    MapCheck,
    CurrentScaling,
    BgDecay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Normalization,
    Moments,
    Combinatorics,
    CanonicalMarginals,
    Sweep,
    Trajectory,
    Coupling,
    MeanCurrent,
    StaticVariance,
    Covariance,
    QuadraticVariation,
    Replay,
    Stationary,
    SupCurrent,
    BgDecay,
}

impl Kind {
    pub fn tasks(self) -> &'static [Task] {
        use Task::*;
        match self {
            Kind::Sample => &[Normalization, Moments],
            Kind::Ensembles => &[Combinatorics, CanonicalMarginals, Sweep],
            Kind::Simulate => &[Trajectory, Coupling, MeanCurrent],
            Kind::Fluctuation => &[StaticVariance, Covariance, QuadraticVariation],
            Kind::MapCheck => &[Replay, Stationary],
            Kind::CurrentScaling => &[SupCurrent],
            Kind::BgDecay => &[BgDecay],
        }
    }
}

fn d_rho() -> f64 {
    0.75
}
fn d_n() -> u32 {
    64
}
fn d_gamma() -> Gamma {
    Gamma::MinusInf
}
fn d_s() -> u8 {
    1
}
fn d_kappa() -> f64 {
    24.0
}
fn d_reps() -> usize {
    100
}
fn d_workers() -> usize {
    1
}
fn d_window() -> i64 {
    1
}
fn d_tf() -> Vec<TestFunction> {
    vec![TestFunction::gaussian(0.0, 1.0).expect("valid literal")]
}

/// One experiment, read from a single JSON document. Unset fields take defaults;
/// unknown fields are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<Kind>,
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default = "d_rho")]
    pub rho: f64,
    /// Density sweep; tasks that sweep fall back to their own list when empty.
    #[serde(default)]
    pub rhos: Vec<f64>,
    #[serde(rename = "N", default = "d_n")]
    pub n: u32,
    #[serde(rename = "Ns", default)]
    pub ns: Vec<u32>,
    #[serde(default = "d_gamma")]
    pub gamma: Gamma,
    #[serde(default = "d_s")]
    pub s_switch: u8,
    /// Exclusion ring length `L = ring_factor · N`; zero-range rings get `(1 − rho) L` sites.
    #[serde(default = "d_kappa")]
    pub ring_factor: f64,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default)]
    pub s_time: f64,
    #[serde(default = "d_reps")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_tf")]
    pub test_functions: Vec<TestFunction>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Size of the worker pool for replica-parallel tasks.
    #[serde(default = "d_workers")]
    pub workers: usize,
    #[serde(default)]
    pub ells: Vec<i64>,
    /// Window half-width for ensemble tasks, window length for mapping checks.
    #[serde(default = "d_window")]
    pub window: i64,
    #[serde(default)]
    pub max_ell: i64,
    #[serde(default)]
    pub min_events: u64,
    #[serde(default)]
    pub extra_particles: u64,
}

impl ExperimentConfig {
    /// Parses and validates; returns the config with the raw document for the manifest.
    pub fn from_json(text: &str) -> Result<(Self, serde_json::Value)> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| crate::FepError::Parse(e.to_string()))?;
        let cfg: Self = serde_json::from_value(raw.clone()).map_err(|e| crate::FepError::Parse(e.to_string()))?;
        Ok((cfg, raw))
    }

    pub fn resolved_task(&self) -> Result<Task> {
        let Some(kind) = self.kind else {
            bail!(InvalidArgument, "field `kind` is required");
        };
        let tasks = kind.tasks();
        match self.task {
            None => Ok(tasks[0]),
            Some(t) if tasks.contains(&t) => Ok(t),
            Some(t) => bail!(InvalidArgument, "field `task`: {t:?} does not belong to kind {kind:?}"),
        }
    }

    pub fn schedule(&self) -> Result<RateSchedule> {
        RateSchedule::new(self.s_switch, self.gamma, self.n)
            .map_err(|e| crate::FepError::InvalidArgument(format!("fields `s_switch`/`gamma`/`N`: {e}")))
    }

    pub fn schedule_for(&self, n: u32) -> Result<RateSchedule> {
        RateSchedule::new(self.s_switch, self.gamma, n)
            .map_err(|e| crate::FepError::InvalidArgument(format!("fields `s_switch`/`gamma`/`Ns`: {e}")))
    }

    pub fn ring_len(&self) -> usize {
        (self.ring_factor * self.n as f64).round() as usize
    }

    pub fn ring_len_for(&self, n: u32) -> usize {
        (self.ring_factor * n as f64).round() as usize
    }

    pub fn zr_sites_for(&self, n: u32) -> usize {
        ((1.0 - self.rho) * self.ring_len_for(n) as f64).round() as usize
    }

    /// Field-level checks that do not depend on the task.
    pub fn validate(&self) -> Result<Task> {
        let task = self.resolved_task()?;
        if !(self.rho > 0.5 && self.rho <= 1.0) {
            bail!(InvalidArgument, "field `rho`: {} outside (1/2, 1]", self.rho);
        }
        if let Some(r) = self.rhos.iter().find(|r| !(**r > 0.5 && **r <= 1.0)) {
            bail!(InvalidArgument, "field `rhos`: {r} outside (1/2, 1]");
        }
        if self.n == 0 || self.ns.contains(&0) {
            bail!(InvalidArgument, "fields `N`/`Ns` must be positive");
        }
        self.schedule()?;
        if !(self.ring_factor > 0.0 && self.ring_factor.is_finite()) {
            bail!(InvalidArgument, "field `ring_factor` must be positive");
        }
        if self.ring_len() < MIN_RING_LEN {
            bail!(InvalidArgument, "field `ring_factor`: ring of {} sites is too short", self.ring_len());
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            bail!(InvalidArgument, "field `t_end` must be finite and nonnegative");
        }
        if !(self.s_time >= 0.0 && self.s_time <= self.t_end) {
            bail!(InvalidArgument, "field `s_time` must lie in [0, t_end]");
        }
        if self.workers == 0 {
            bail!(InvalidArgument, "field `workers` must be at least 1");
        }
        if self.test_functions.is_empty() {
            bail!(InvalidArgument, "field `test_functions` must not be empty");
        }
        if self.window < 0 {
            bail!(InvalidArgument, "field `window` must be nonnegative");
        }
        Ok(task)
    }
}
