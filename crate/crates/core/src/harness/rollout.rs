//! Data collection: drives the simulator with the current policy and records
//! observation tuples together with their context transitions.

use rand::Rng;

use super::agent::Agent;
use crate::batch::{IterationBatch, ObservationTuple};
use crate::ci::{ContextMode, ContextWindow};
use crate::env::XrEnv;
use crate::error::Result;

/// Environment plus the sliding context window, persisting across
/// iterations.
#[derive(Debug, Clone)]
pub struct Rollout {
    env: XrEnv,
    window: ContextWindow,
    time: u64,
}

/// Counts gathered by a frozen-policy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub slots: usize,
    pub mean_power: f64,
    pub dropouts: Vec<u64>,
    pub resolved: Vec<u64>,
    pub dropout_rate: Vec<f64>,
}

impl EvalSummary {
    pub fn satisfies(&self, limits: &[f64]) -> bool {
        self.dropout_rate.iter().zip(limits).all(|(r, c)| r <= c)
    }
}

fn transition_features(state: &[f64], unit: &[f64], next_state: &[f64]) -> Vec<f64> {
    let mut f = Vec::with_capacity(2 * state.len() + unit.len());
    f.extend_from_slice(state);
    f.extend_from_slice(unit);
    f.extend_from_slice(next_state);
    f
}

impl Rollout {
    pub fn new(env: XrEnv, context_len: usize) -> Self {
        Self {
            env,
            window: ContextWindow::new(context_len),
            time: 0,
        }
    }

    pub fn env(&self) -> &XrEnv {
        &self.env
    }

    /// Slots simulated so far.
    pub fn time(&self) -> u64 {
        self.time
    }

    /// Runs `slots` slots under the agent's current policy with sampled
    /// latents.
    pub fn collect<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        agent: &Agent,
        slots: usize,
        env_rng: &mut R1,
        agent_rng: &mut R2,
    ) -> Result<IterationBatch> {
        let use_context = agent.latent_dim() > 0;
        let base = if self.window.is_empty() { self.time } else { self.window.range().start };
        let mut transitions: Vec<Vec<f64>> = if use_context {
            self.window.features().map(|(_, f)| f.to_vec()).collect()
        } else {
            Vec::new()
        };
        let theta = agent.theta().as_slice();
        let policy = agent.policy();
        let mut tuples = Vec::with_capacity(slots);
        let mut state = self.env.observe();
        let mut inf = agent.infer(&mut self.window, ContextMode::Sample, agent_rng)?;
        for _ in 0..slots {
            let context = if use_context { self.window.range() } else { 0..0 };
            let aug = Agent::augment(&state, inf.as_ref());
            let sample = policy.sample(theta, &aug, agent_rng)?;
            let unit = policy.space.unit(&sample.raw);
            let regime = self.env.regime().id;
            let res = self.env.step(&sample.action, env_rng)?;
            let next_state = self.env.observe();
            if use_context {
                let f = transition_features(&state, &unit, &next_state);
                self.window.push(self.time, f.clone());
                transitions.push(f);
            }
            self.time += 1;
            let next_inf = agent.infer(&mut self.window, ContextMode::Sample, agent_rng)?;
            let mut costs = Vec::with_capacity(1 + res.cost.constraint.len());
            costs.push(res.cost.objective);
            costs.extend_from_slice(&res.cost.constraint);
            let (latent, noise) = match inf {
                Some(i) => (i.latent, i.noise),
                None => (Vec::new(), None),
            };
            tuples.push(ObservationTuple {
                time: self.time - 1,
                state,
                latent,
                noise,
                context,
                raw_action: sample.raw,
                action_unit: unit,
                log_prob: sample.log_prob,
                power: sample.action.power,
                eps: sample.action.eps,
                reshaped: costs.clone(),
                costs,
                next_state: next_state.clone(),
                next_latent: next_inf.as_ref().map(|i| i.latent.clone()).unwrap_or_default(),
                dropouts: res.cost.dropouts,
                resolved: res.queues.iter().map(|q| q.resolved_packets()).collect(),
                regime,
            });
            state = next_state;
            inf = next_inf;
        }
        if use_context {
            IterationBatch::new(tuples, base, transitions)
        } else {
            Ok(IterationBatch::from_tuples(tuples))
        }
    }

    /// Frozen-policy evaluation on a copy of the current simulator: stochastic
    /// actions, posterior-mean latents, no parameter updates.
    pub fn evaluate<R: Rng + ?Sized>(&self, agent: &Agent, slots: usize, rng: &mut R) -> Result<EvalSummary> {
        let mut env = self.env.clone();
        let mut window = self.window.clone();
        let users = env.config().users();
        let use_context = agent.latent_dim() > 0;
        let theta = agent.theta().as_slice();
        let policy = agent.policy();
        let mut dropouts = vec![0u64; users];
        let mut resolved = vec![0u64; users];
        let mut power = 0.0;
        let mut time = self.time;
        let mut state = env.observe();
        for _ in 0..slots {
            let inf = agent.infer(&mut window, ContextMode::Mean, rng)?;
            let aug = Agent::augment(&state, inf.as_ref());
            let sample = policy.sample(theta, &aug, rng)?;
            let res = env.step(&sample.action, rng)?;
            let next_state = env.observe();
            if use_context {
                let unit = policy.space.unit(&sample.raw);
                window.push(time, transition_features(&state, &unit, &next_state));
            }
            time += 1;
            power += sample.action.total_power();
            for (k, q) in res.queues.iter().enumerate() {
                dropouts[k] += u64::from(q.dropout);
                resolved[k] += u64::from(q.resolved_packets());
            }
            state = next_state;
        }
        let dropout_rate = dropouts
            .iter()
            .zip(&resolved)
            .map(|(&d, &r)| super::metrics::dropout_rate(d, r))
            .collect();
        Ok(EvalSummary {
            slots,
            mean_power: power / slots.max(1) as f64,
            dropouts,
            resolved,
            dropout_rate,
        })
    }
}
