//! Discrete-time multi-user MIMO downlink with hard-deadline packet queues.

pub mod channel;
pub mod precoder;
pub mod queue;
pub mod traffic;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use channel::{ChannelConfig, ChannelGeometry, ChannelMatrix, generate_channel};
pub use precoder::{compute_rates, rzf_precoder};
pub use queue::{PacketSlot, QueueState, UserSlotOutcome};
pub use traffic::{traffic_process_step, PacketRegime, TrafficRanges, TrafficRegime};

/// Physical and traffic parameters of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub slot_seconds: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub channel: ChannelConfig,
    pub deadlines: Vec<usize>,
    /// Allowed per-user dropout level `c_k`.
    pub max_dropout: Vec<f64>,
    /// `None` for stationary traffic.
    pub mean_episode_slots: Option<f64>,
    pub traffic: TrafficRanges,
    pub max_power: f64,
    pub eps_range: (f64, f64),
    pub bits_scale: f64,
    pub channel_scale: f64,
}

impl ScenarioConfig {
    pub fn users(&self) -> usize {
        self.channel.users
    }

    /// Noise power per user in watts.
    pub fn noise_power(&self) -> f64 {
        10f64.powf((self.noise_dbm_per_hz - 30.0) / 10.0) * self.bandwidth_hz
    }

    /// Length of the observable state vector.
    pub fn state_dim(&self) -> usize {
        2 * self.deadlines.iter().sum::<usize>() + 2 * self.users() * self.channel.antennas
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.traffic.validate()?;
        let k = self.users();
        if self.deadlines.len() != k || self.max_dropout.len() != k {
            return Err(Error::Config(format!(
                "expected {k} deadlines and dropout limits, got {} and {}",
                self.deadlines.len(),
                self.max_dropout.len()
            )));
        }
        if self.deadlines.iter().any(|&d| d == 0) {
            return Err(Error::Config("deadlines must be positive".into()));
        }
        if self.max_dropout.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config("dropout limits must lie in [0, 1]".into()));
        }
        if !(self.slot_seconds > 0.0 && self.bandwidth_hz > 0.0 && self.max_power > 0.0) {
            return Err(Error::Config("slot length, bandwidth and power cap must be positive".into()));
        }
        let (lo, hi) = self.eps_range;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Config(format!("regularization range [{lo}, {hi}] invalid")));
        }
        if let Some(e) = self.mean_episode_slots {
            if !(e >= 1.0) {
                return Err(Error::Config("mean episode length must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Per-user transmit powers plus the RZF regularization factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub power: Vec<f64>,
    pub eps: f64,
}

impl Action {
    pub fn validate(&self, max_power: Option<f64>) -> Result<()> {
        if self.power.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Numeric("negative or NaN transmit power".into()));
        }
        if let Some(cap) = max_power {
            if self.power.iter().any(|&p| p > cap) {
                return Err(Error::Numeric(format!("transmit power above cap {cap}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Numeric("regularization factor must be positive".into()));
        }
        Ok(())
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Costs emitted by one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSignal {
    /// Total scheduled power `R = Σ p_k` (W).
    pub power: f64,
    pub dropouts: Vec<bool>,
    /// `C'_k = C_k − c_k`.
    pub constraint: Vec<f64>,
    /// `C'_0 = R`.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub cost: CostSignal,
    pub rates: Vec<f64>,
    pub queues: Vec<UserSlotOutcome>,
}

/// Simulator state: queues, traffic regime and the channel for the coming slot.
#[derive(Debug, Clone)]
pub struct XrEnv {
    cfg: ScenarioConfig,
    queue: QueueState,
    regime: TrafficRegime,
    geometry: ChannelGeometry,
    channel: ChannelMatrix,
    noise: Vec<f64>,
}

impl XrEnv {
    pub fn new<R: Rng + ?Sized>(cfg: ScenarioConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let geometry = ChannelGeometry::sample(&cfg.channel, rng)?;
        let regime = TrafficRegime::sample(cfg.users(), &cfg.traffic, 0, rng)?;
        let channel = generate_channel(rng, &cfg.channel, &geometry)?;
        let queue = QueueState::new(&cfg.deadlines)?;
        let noise = vec![cfg.noise_power(); cfg.users()];
        Ok(Self {
            cfg,
            queue,
            regime,
            geometry,
            channel,
            noise,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn queue(&self) -> &QueueState {
        &self.queue
    }

    pub fn regime(&self) -> &TrafficRegime {
        &self.regime
    }

    pub fn channel(&self) -> &ChannelMatrix {
        &self.channel
    }

    /// Observable state: scaled queue ledger followed by Re/Im of the CSI.
    pub fn observe(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.cfg.state_dim());
        self.queue.features(self.cfg.bits_scale, &mut s);
        self.channel.features(self.cfg.channel_scale, &mut s);
        s
    }

    /// Precode, serve, expire, admit, then advance traffic and fading.
    pub fn step<R: Rng + ?Sized>(&mut self, action: &Action, rng: &mut R) -> Result<StepResult> {
        action.validate(Some(self.cfg.max_power))?;
        if action.power.len() != self.cfg.users() {
            return Err(Error::Shape {
                context: "env_step power",
                expected: self.cfg.users(),
                got: action.power.len(),
            });
        }
        let v = rzf_precoder(&self.channel, action.eps)?;
        let rates = compute_rates(
            &self.channel,
            &v,
            &action.power,
            &self.noise,
            self.cfg.bandwidth_hz,
        )?;
        let arrivals = self.regime.sample_arrivals(rng);
        let queues = self.queue.step(&rates, &arrivals, self.cfg.slot_seconds)?;
        self.regime = traffic_process_step(
            &self.regime,
            &self.cfg.traffic,
            self.cfg.mean_episode_slots,
            rng,
        )?;
        self.channel = generate_channel(rng, &self.cfg.channel, &self.geometry)?;

        let power = action.total_power();
        let dropouts: Vec<bool> = queues.iter().map(|q| q.dropout).collect();
        let constraint = dropouts
            .iter()
            .zip(&self.cfg.max_dropout)
            .map(|(&d, &c)| f64::from(u8::from(d)) - c)
            .collect();
        Ok(StepResult {
            cost: CostSignal {
                power,
                dropouts,
                constraint,
                objective: power,
            },
            rates,
            queues,
        })
    }
}
