//! Sliding window of recent transitions and latent inference over it.

use std::collections::VecDeque;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::nn::gaussian::{aggregate, reparam_sample};
use crate::nn::{ContextEncoder, GaussianFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    /// Reparameterised draw from the fused posterior.
    Sample,
    /// Posterior mean; deterministic.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub posterior: GaussianFactor,
    pub latent: Vec<f64>,
    /// The standard-normal draw behind `latent` in sample mode.
    pub noise: Option<Vec<f64>>,
}

fn finish<R: Rng + ?Sized>(posterior: GaussianFactor, mode: ContextMode, rng: &mut R) -> Inference {
    match mode {
        ContextMode::Mean => Inference {
            latent: posterior.mean.clone(),
            posterior,
            noise: None,
        },
        ContextMode::Sample => {
            let xi: Vec<f64> = (0..posterior.dim()).map(|_| StandardNormal.sample(rng)).collect();
            Inference {
                latent: reparam_sample(&posterior, &xi),
                posterior,
                noise: Some(xi),
            }
        }
    }
}

/// Fuses one factor per transition and reads a latent off the result.
pub fn infer_context<R: Rng + ?Sized>(
    encoder: &ContextEncoder,
    psi: &[f64],
    transitions: &[&[f64]],
    mode: ContextMode,
    rng: &mut R,
) -> Result<Inference> {
    let posterior = encoder.infer(psi, transitions.iter().copied())?;
    Ok(finish(posterior, mode, rng))
}

#[derive(Debug, Clone)]
struct Entry {
    index: u64,
    features: Vec<f64>,
    factor: Option<GaussianFactor>,
}

/// The `capacity` most recent transitions, oldest first.
///
/// Factors are cached per entry and tagged with the encoder version they were
/// computed under, so each transition is encoded once per parameter update.
#[derive(Debug, Clone)]
pub struct ContextWindow {
    capacity: usize,
    entries: VecDeque<Entry>,
    version: Option<u64>,
}

impl ContextWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity + 1),
            version: None,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Absolute indices currently held.
    pub fn range(&self) -> Range<u64> {
        match (self.entries.front(), self.entries.back()) {
            (Some(a), Some(b)) => a.index..b.index + 1,
            _ => 0..0,
        }
    }

    /// Appends transition `index`, evicting the oldest beyond capacity.
    /// Indices must be consecutive.
    pub fn push(&mut self, index: u64, features: Vec<f64>) {
        if let Some(last) = self.entries.back() {
            debug_assert_eq!(last.index + 1, index, "context transitions must be consecutive");
        }
        if self.capacity == 0 {
            return;
        }
        self.entries.push_back(Entry {
            index,
            features,
            factor: None,
        });
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn features(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.entries.iter().map(|e| (e.index, e.features.as_slice()))
    }

    /// Latent inference over the whole window with encoder parameters `psi`
    /// identified by `version`.
    pub fn infer<R: Rng + ?Sized>(
        &mut self,
        encoder: &ContextEncoder,
        psi: &[f64],
        version: u64,
        mode: ContextMode,
        rng: &mut R,
    ) -> Result<Inference> {
        if self.version != Some(version) {
            for e in &mut self.entries {
                e.factor = None;
            }
            self.version = Some(version);
        }
        for e in &mut self.entries {
            if e.factor.is_none() {
                e.factor = Some(encoder.factor(psi, &e.features)?.factor);
            }
        }
        let posterior = aggregate(encoder.latent_dim(), self.entries.iter().filter_map(|e| e.factor.as_ref()))?;
        Ok(finish(posterior, mode, rng))
    }
}
