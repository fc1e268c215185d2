//! Experiment configuration: a flat TOML table whose keys default to the
//! desk-scale reference setup.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::crl::StepSchedule;
use crate::env::{ChannelConfig, PacketRegime, ScenarioConfig};
use crate::error::{Error, Result};

/// Which parts of the context-inference stack are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Latent context in the state and potential-based cost shaping.
    Cacrl,
    /// Latent context only; shaping term fixed at zero.
    CacrlMinus,
    /// Plain constrained actor-critic on the observable state.
    CsscaCrl,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Cacrl, Variant::CacrlMinus, Variant::CsscaCrl];

    pub fn uses_encoder(self) -> bool {
        !matches!(self, Variant::CsscaCrl)
    }

    pub fn uses_shaping(self) -> bool {
        matches!(self, Variant::Cacrl)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Cacrl => "cacrl",
            Variant::CacrlMinus => "cacrl-minus",
            Variant::CsscaCrl => "cssca-crl",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (expected cacrl, cacrl-minus or cssca-crl)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Stationary,
    Nonstationary,
}

/// Every knob of one run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Mean regime sojourn `E` in units of `batch_size` slots.
    pub episode_batches: f64,
    pub users: usize,
    pub antennas: usize,
    pub paths: usize,
    pub gain_db_min: f64,
    pub gain_db_max: f64,
    pub angular_spread_deg: f64,
    pub deadline: usize,
    pub max_dropout: f64,
    pub packet_regime: PacketRegime,
    pub slot_seconds: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub max_power: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub bits_scale: f64,
    pub channel_scale: f64,

    pub policy_hidden: Vec<usize>,
    pub critic_trunk: Vec<usize>,
    pub critic_head: Vec<usize>,
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Initial raw-space mean bias of the policy.
    pub policy_init_mean: f64,
    pub policy_init_std: f64,
    pub policy_sigma_floor: f64,

    /// `B`: slots collected per policy iteration.
    pub batch_size: usize,
    /// `T_cri`: critic mini-batches per iteration.
    pub critic_passes: usize,
    /// `N`: transitions in the context window.
    pub context_len: usize,
    /// `N_a`: action samples per value target.
    pub action_samples: usize,
    /// Pretraining length in episodes of `E` slots.
    pub pretrain_episodes: f64,
    /// Stop encoder and potential updates after pretraining.
    pub freeze_after_pretrain: bool,

    pub mu0: f64,
    pub eta0: f64,
    pub upsilon0: f64,
    pub mu_exp: f64,
    pub eta_exp: f64,
    pub upsilon_exp: f64,
    pub zeta: f64,
    pub param_box: f64,
    pub solver_max_iter: usize,
    pub solver_tol: f64,
    /// Use the encoder KL gradient without its constant variance term.
    pub strict_paper: bool,

    pub variant: Variant,
    pub seed: u64,
    pub iterations: usize,
    pub output_dir: PathBuf,
    pub eval_interval: usize,
    pub eval_slots: usize,
    pub checkpoint_interval: usize,
    /// Iterations averaged for the windowed dropout rate.
    pub metrics_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sched = StepSchedule::default();
        Self {
            scenario: Scenario::Stationary,
            episode_batches: 10.0,
            users: 2,
            antennas: 4,
            paths: 4,
            gain_db_min: -10.0,
            gain_db_max: 10.0,
            angular_spread_deg: 5.0,
            deadline: 10,
            max_dropout: 0.1,
            packet_regime: PacketRegime::Medium,
            slot_seconds: 1e-3,
            bandwidth_hz: 10e6,
            noise_dbm_per_hz: -100.0,
            max_power: 4.0,
            eps_min: 1e-3,
            eps_max: 1.0,
            bits_scale: 1e-4,
            channel_scale: 1.0,
            policy_hidden: vec![64, 64],
            critic_trunk: vec![64, 64],
            critic_head: vec![32],
            encoder_hidden: vec![64, 64],
            latent_dim: 5,
            policy_init_mean: 0.0,
            policy_init_std: 0.5,
            policy_sigma_floor: 1e-4,
            batch_size: 200,
            critic_passes: 10,
            context_len: 50,
            action_samples: 10,
            pretrain_episodes: 300.0,
            freeze_after_pretrain: false,
            mu0: sched.mu0,
            eta0: sched.eta0,
            upsilon0: sched.upsilon0,
            mu_exp: sched.mu_exp,
            eta_exp: sched.eta_exp,
            upsilon_exp: sched.upsilon_exp,
            zeta: 1.0,
            param_box: 10.0,
            solver_max_iter: 5000,
            solver_tol: 1e-9,
            strict_paper: false,
            variant: Variant::Cacrl,
            seed: 0,
            iterations: 300,
            output_dir: PathBuf::from("runs/default"),
            eval_interval: 50,
            eval_slots: 10_000,
            checkpoint_interval: 50,
            metrics_window: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn schedule(&self) -> StepSchedule {
        StepSchedule {
            mu0: self.mu0,
            eta0: self.eta0,
            upsilon0: self.upsilon0,
            mu_exp: self.mu_exp,
            eta_exp: self.eta_exp,
            upsilon_exp: self.upsilon_exp,
        }
    }

    /// Mean regime sojourn in slots; `None` when stationary.
    pub fn mean_episode_slots(&self) -> Option<f64> {
        match self.scenario {
            Scenario::Stationary => None,
            Scenario::Nonstationary => Some(self.episode_batches * self.batch_size as f64),
        }
    }

    /// Pretraining episodes converted to policy iterations, `⌈I·E/B⌉`. A
    /// stationary scenario has no episodes, so one episode counts as one
    /// batch there.
    pub fn pretrain_iterations(&self) -> usize {
        let per_episode = match self.scenario {
            Scenario::Stationary => 1.0,
            Scenario::Nonstationary => self.episode_batches,
        };
        (self.pretrain_episodes * per_episode).ceil() as usize
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        let k = self.users;
        ScenarioConfig {
            slot_seconds: self.slot_seconds,
            bandwidth_hz: self.bandwidth_hz,
            noise_dbm_per_hz: self.noise_dbm_per_hz,
            channel: ChannelConfig {
                antennas: self.antennas,
                users: k,
                paths: self.paths,
                gain_db: (self.gain_db_min, self.gain_db_max),
                angular_spread_deg: self.angular_spread_deg,
            },
            deadlines: vec![self.deadline; k],
            max_dropout: vec![self.max_dropout; k],
            mean_episode_slots: self.mean_episode_slots(),
            traffic: self.packet_regime.ranges(),
            max_power: self.max_power,
            eps_range: (self.eps_min, self.eps_max),
            bits_scale: self.bits_scale,
            channel_scale: self.channel_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.scenario_config().validate()?;
        self.schedule().validate()?;
        if self.users == 0 {
            return bad("users must be positive".into());
        }
        if self.batch_size == 0 || self.context_len == 0 {
            return bad("batch_size and context_len must be positive".into());
        }
        if self.batch_size < self.context_len {
            return bad(format!("batch_size {} must be at least context_len {}", self.batch_size, self.context_len));
        }
        if self.critic_passes == 0 || self.critic_passes >= self.batch_size {
            return bad(format!("critic_passes must lie in 1..{}", self.batch_size));
        }
        if self.action_samples == 0 {
            return bad("action_samples must be positive".into());
        }
        if self.variant.uses_encoder() && self.latent_dim == 0 {
            return bad("latent_dim must be positive when the encoder is active".into());
        }
        if self.scenario == Scenario::Nonstationary && !(self.episode_batches > 0.0) {
            return bad("episode_batches must be positive".into());
        }
        if !(self.pretrain_episodes >= 0.0) {
            return bad("pretrain_episodes must be nonnegative".into());
        }
        if !(self.zeta > 0.0 && self.param_box > 0.0) {
            return bad("zeta and param_box must be positive".into());
        }
        if !(self.policy_init_std > 0.0 && self.policy_sigma_floor > 0.0) {
            return bad("policy standard deviations must be positive".into());
        }
        if !(self.solver_tol > 0.0) || self.solver_max_iter == 0 {
            return bad("solver tolerance and iteration cap must be positive".into());
        }
        if self.metrics_window == 0 {
            return bad("metrics_window must be positive".into());
        }
        for (name, sizes) in [
            ("policy_hidden", &self.policy_hidden),
            ("critic_trunk", &self.critic_trunk),
            ("critic_head", &self.critic_head),
            ("encoder_hidden", &self.encoder_hidden),
        ] {
            if sizes.contains(&0) {
                return bad(format!("{name} contains an empty layer"));
            }
        }
        if self.critic_trunk.is_empty() {
            return bad("critic_trunk needs at least one layer".into());
        }
        Ok(())
    }
}
