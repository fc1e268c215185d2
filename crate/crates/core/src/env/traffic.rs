//! Regime-switching XR packet arrivals.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Packet-size class; fixes the ranges that arrival probabilities and mean
/// packet lengths are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketRegime {
    Short,
    Medium,
    Large,
}

impl PacketRegime {
    pub fn ranges(self) -> TrafficRanges {
        match self {
            PacketRegime::Short => TrafficRanges {
                arrival_prob: (0.6, 0.8),
                mean_bits: (5e3, 10e3),
            },
            PacketRegime::Medium => TrafficRanges {
                arrival_prob: (0.4, 0.6),
                mean_bits: (10e3, 15e3),
            },
            PacketRegime::Large => TrafficRanges {
                arrival_prob: (0.2, 0.4),
                mean_bits: (15e3, 20e3),
            },
        }
    }
}

impl std::str::FromStr for PacketRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "short" => Ok(Self::Short),
            "medium" => Ok(Self::Medium),
            "large" => Ok(Self::Large),
            other => Err(Error::Config(format!("unknown packet regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficRanges {
    pub arrival_prob: (f64, f64),
    /// Poisson mean packet length, in bits.
    pub mean_bits: (f64, f64),
}

impl TrafficRanges {
    pub fn validate(&self) -> Result<()> {
        let (plo, phi) = self.arrival_prob;
        if !(plo > 0.0 && phi < 1.0 && plo <= phi) {
            return Err(Error::Config(format!(
                "arrival probability range [{plo}, {phi}] must lie inside (0, 1)"
            )));
        }
        let (llo, lhi) = self.mean_bits;
        if !(llo > 0.0 && llo <= lhi && lhi.is_finite()) {
            return Err(Error::Config(format!(
                "mean packet length range [{llo}, {lhi}] must be positive and nonempty"
            )));
        }
        Ok(())
    }
}

/// Current arrival law; `id` is the ground-truth latent context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficRegime {
    pub arrival_prob: Vec<f64>,
    pub mean_bits: Vec<f64>,
    pub id: u64,
}

fn draw(rng: &mut (impl Rng + ?Sized), (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

impl TrafficRegime {
    pub fn sample<R: Rng + ?Sized>(
        users: usize,
        ranges: &TrafficRanges,
        id: u64,
        rng: &mut R,
    ) -> Result<Self> {
        ranges.validate()?;
        let arrival_prob = (0..users).map(|_| draw(rng, ranges.arrival_prob)).collect();
        let mean_bits = (0..users).map(|_| draw(rng, ranges.mean_bits)).collect();
        Ok(Self {
            arrival_prob,
            mean_bits,
            id,
        })
    }

    /// One Bernoulli arrival per user with a Poisson-distributed length.
    /// A zero-length draw is treated as no arrival.
    pub fn sample_arrivals<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Option<u64>> {
        self.arrival_prob
            .iter()
            .zip(&self.mean_bits)
            .map(|(&p, &lambda)| {
                if rng.gen::<f64>() < p {
                    let bits = Poisson::new(lambda)
                        .map(|d| d.sample(rng))
                        .unwrap_or(lambda);
                    let bits = bits.max(0.0) as u64;
                    (bits > 0).then_some(bits)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Advances the regime by one slot.
///
/// With probability `1/E` every user's arrival probability and mean length are
/// redrawn and the regime id increments; `None` means a stationary scenario.
pub fn traffic_process_step<R: Rng + ?Sized>(
    regime: &TrafficRegime,
    ranges: &TrafficRanges,
    mean_episode_slots: Option<f64>,
    rng: &mut R,
) -> Result<TrafficRegime> {
    let Some(e) = mean_episode_slots else {
        return Ok(regime.clone());
    };
    if !(e >= 1.0) {
        return Err(Error::Config(format!("mean episode length must be >= 1, got {e}")));
    }
    if rng.gen::<f64>() < 1.0 / e {
        TrafficRegime::sample(regime.arrival_prob.len(), ranges, regime.id + 1, rng)
    } else {
        Ok(regime.clone())
    }
}
