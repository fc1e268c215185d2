//! The learner: policy, critics, optional encoder, and one iteration of the
//! critic and actor updates.

use std::cell::Cell;

use rand::Rng;

use super::config::{ExperimentConfig, Variant};
use crate::batch::{concat, IterationBatch, ObservationTuple};
use crate::ci::{encoder_update, potential_update, potentials, reshape_costs, ContextMode, ContextWindow, Inference};
use crate::crl::{
    actor_step, build_surrogates, estimate_f_tilde, estimate_g_tilde, mix_theta, td_critic_update,
    update_vector_average, Branch, ParamBox, SolverOptions, StepSchedule, StepSizes,
};
use crate::error::{Error, Result};
use crate::nn::{ActionSpace, ContextEncoder, DualHeadNet, GaussianPolicy, ParamVector};

/// Learning-side settings copied out of the experiment configuration.
#[derive(Debug, Clone)]
pub struct AgentOptions {
    pub schedule: StepSchedule,
    pub critic_passes: usize,
    pub action_samples: usize,
    pub zeta: f64,
    pub param_box: ParamBox,
    pub solver: SolverOptions,
    pub omit_half_term: bool,
}

impl AgentOptions {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            schedule: cfg.schedule(),
            critic_passes: cfg.critic_passes,
            action_samples: cfg.action_samples,
            zeta: cfg.zeta,
            param_box: ParamBox::symmetric(cfg.param_box),
            solver: SolverOptions {
                max_iter: cfg.solver_max_iter,
                tol: cfg.solver_tol,
                ..SolverOptions::default()
            },
            omit_half_term: cfg.strict_paper,
        }
    }
}

/// What one call to [`Agent::learn`] did.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub steps: StepSizes,
    pub branch: Branch,
    pub dual_iterations: usize,
    pub max_surrogate: f64,
    /// Mean squared Bellman residual per cost index, averaged over passes.
    pub residual: Vec<f64>,
    /// Mean encoder KL over passes; 0 when the encoder is not trained.
    pub mean_kl: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    variant: Variant,
    opts: AgentOptions,
    policy: GaussianPolicy,
    theta: ParamVector,
    encoder: Option<(ContextEncoder, ParamVector)>,
    psi_version: u64,
    critic: DualHeadNet,
    /// One dual-head network per cost index `0..=K`.
    omegas: Vec<ParamVector>,
    f_hat: Vec<f64>,
    g_hat: Vec<Vec<f64>>,
    encoder_reads: Cell<u64>,
    potential_reads: Cell<u64>,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(cfg: &ExperimentConfig, state_dim: usize, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.users;
        let space = ActionSpace {
            users: k,
            max_power: cfg.max_power,
            eps_range: (cfg.eps_min, cfg.eps_max),
        };
        let action_dim = space.dim();
        let latent_dim = if cfg.variant.uses_encoder() { cfg.latent_dim } else { 0 };
        let aug_dim = state_dim + latent_dim;

        let mut policy = GaussianPolicy::new(aug_dim, &cfg.policy_hidden, space);
        policy.sigma_floor = cfg.policy_sigma_floor;
        let theta = policy.init(rng, cfg.policy_init_mean, cfg.policy_init_std);

        let encoder = if cfg.variant.uses_encoder() {
            let enc = ContextEncoder::new(2 * state_dim + action_dim, &cfg.encoder_hidden, latent_dim);
            let psi = enc.init(rng);
            Some((enc, psi))
        } else {
            None
        };

        let critic = DualHeadNet::new(aug_dim, action_dim, &cfg.critic_trunk, &cfg.critic_head);
        let omegas = (0..=k).map(|_| critic.init(rng)).collect();
        let n = theta.len();
        Ok(Self {
            variant: cfg.variant,
            opts: AgentOptions::from_config(cfg),
            policy,
            theta,
            encoder,
            psi_version: 0,
            critic,
            omegas,
            f_hat: vec![0.0; k + 1],
            g_hat: vec![vec![0.0; n]; k + 1],
            encoder_reads: Cell::new(0),
            potential_reads: Cell::new(0),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn policy(&self) -> &GaussianPolicy {
        &self.policy
    }

    pub fn theta(&self) -> &ParamVector {
        &self.theta
    }

    pub fn f_hat(&self) -> &[f64] {
        &self.f_hat
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.as_ref().map_or(0, |(e, _)| e.latent_dim())
    }

    /// Times the encoder parameters were read.
    pub fn encoder_reads(&self) -> u64 {
        self.encoder_reads.get()
    }

    /// Times a potential head was evaluated or trained.
    pub fn potential_reads(&self) -> u64 {
        self.potential_reads.get()
    }

    fn encoder(&self) -> Option<(&ContextEncoder, &[f64])> {
        self.encoder.as_ref().map(|(e, p)| {
            self.encoder_reads.set(self.encoder_reads.get() + 1);
            (e, p.as_slice())
        })
    }

    /// Latent for the current window, or `None` without an encoder.
    pub fn infer<R: Rng + ?Sized>(
        &self,
        window: &mut ContextWindow,
        mode: ContextMode,
        rng: &mut R,
    ) -> Result<Option<Inference>> {
        match self.encoder() {
            Some((enc, psi)) => window.infer(enc, psi, self.psi_version, mode, rng).map(Some),
            None => Ok(None),
        }
    }

    /// Fills `reshaped` for every tuple and returns the mean `|F_k|` per
    /// constraint.
    pub fn reshape(&self, tuples: &mut [ObservationTuple]) -> Result<Vec<f64>> {
        let k = self.omegas.len() - 1;
        if !self.variant.uses_shaping() {
            for t in tuples.iter_mut() {
                t.reshaped = t.costs.clone();
            }
            return Ok(vec![0.0; k]);
        }
        self.potential_reads.set(self.potential_reads.get() + 1);
        let params: Vec<&[f64]> = self.omegas[1..].iter().map(ParamVector::as_slice).collect();
        let mut magnitude = vec![0.0; k];
        // ṡ_{t+1} of one tuple is ṡ_t of the next, so each state is evaluated once.
        let mut v_now = match tuples.first() {
            Some(t) => potentials(&self.critic, &params, &t.augmented())?,
            None => return Ok(magnitude),
        };
        for t in tuples.iter_mut() {
            let v_next = potentials(&self.critic, &params, &t.next_augmented())?;
            let r = reshape_costs(&t.costs, &v_now, &v_next)?;
            t.reshaped = r.iter().map(|c| c.reshaped).collect();
            for (m, c) in magnitude.iter_mut().zip(&r[1..]) {
                *m += c.shaping.abs();
            }
            v_now = v_next;
        }
        let n = tuples.len() as f64;
        Ok(magnitude.into_iter().map(|m| m / n).collect())
    }

    /// Critic phase, gradient estimates and the actor update for iteration
    /// `iteration ≥ 1`. `train_context` gates encoder and potential updates.
    pub fn learn<R: Rng + ?Sized>(
        &mut self,
        batch: &IterationBatch,
        iteration: u64,
        train_context: bool,
        rng: &mut R,
    ) -> Result<LearnReport> {
        let tuples = &batch.tuples;
        let steps = self.opts.schedule.step_sizes(iteration);
        let k = self.omegas.len() - 1;

        let f_tilde = estimate_f_tilde(tuples)?;
        update_vector_average(&mut self.f_hat, &f_tilde, steps.eta);

        let ranges = batch.mini_batches(self.opts.critic_passes)?;
        let mut residual = vec![0.0; k + 1];
        let mut kl = 0.0;
        let train_encoder = train_context && self.encoder.is_some();
        let train_potential = train_context && self.variant.uses_shaping();
        for range in &ranges {
            let mb = &tuples[range.clone()];
            let successors = mb
                .iter()
                .map(|t| {
                    let s = self.policy.sample(self.theta.as_slice(), &t.next_augmented(), rng)?;
                    Ok(self.policy.space.unit(&s.raw))
                })
                .collect::<Result<Vec<_>>>()?;
            let nz = self.latent_dim();
            let mut latent_grad = train_encoder.then(|| vec![vec![0.0; nz]; mb.len()]);
            for (idx, omega) in self.omegas.iter_mut().enumerate() {
                let lg = if idx >= 1 { latent_grad.as_deref_mut() } else { None };
                let out = td_critic_update(
                    &self.critic,
                    omega.as_mut_slice(),
                    mb,
                    &successors,
                    idx,
                    self.f_hat[idx],
                    steps.upsilon,
                    lg,
                )?;
                residual[idx] += out.mean_sq_residual;
            }
            if let Some(lg) = &latent_grad {
                let (enc, psi) = self.encoder.as_mut().expect("train_encoder implies an encoder");
                self.encoder_reads.set(self.encoder_reads.get() + 1);
                kl += encoder_update(
                    enc,
                    psi.as_mut_slice(),
                    batch,
                    range.clone(),
                    lg,
                    self.opts.omit_half_term,
                    steps.upsilon,
                )?;
                self.psi_version += 1;
            }
            if train_potential {
                self.potential_reads.set(self.potential_reads.get() + 1);
                for omega in &mut self.omegas[1..] {
                    potential_update(
                        &self.critic,
                        omega.as_mut_slice(),
                        mb,
                        &self.policy,
                        self.theta.as_slice(),
                        self.opts.action_samples,
                        steps.upsilon,
                        rng,
                    )?;
                }
            }
        }
        let passes = ranges.len() as f64;
        residual.iter_mut().for_each(|r| *r /= passes);

        let critics: Vec<&[f64]> = self.omegas.iter().map(ParamVector::as_slice).collect();
        let g_tilde = estimate_g_tilde(&self.policy, self.theta.as_slice(), &self.critic, &critics, tuples)?;
        for (g, gt) in self.g_hat.iter_mut().zip(&g_tilde) {
            update_vector_average(g, gt, steps.eta);
        }

        let set = build_surrogates(
            self.theta.as_slice().to_vec(),
            self.f_hat.clone(),
            self.g_hat.clone(),
            vec![self.opts.zeta; k + 1],
        )?;
        let step = actor_step(&set, self.opts.param_box, &self.opts.solver)?;
        let next = mix_theta(self.theta.as_slice(), &step.theta_bar, steps.mu);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("policy update produced non-finite parameters".into()));
        }
        self.theta.set_values(next)?;

        Ok(LearnReport {
            steps,
            branch: step.branch,
            dual_iterations: step.iterations,
            max_surrogate: step.max_constraint,
            residual,
            mean_kl: if train_encoder { kl / passes } else { 0.0 },
        })
    }

    /// Augmented state `[s, z]`.
    pub fn augment(state: &[f64], latent: Option<&Inference>) -> Vec<f64> {
        match latent {
            Some(inf) => concat(state, &inf.latent),
            None => state.to_vec(),
        }
    }

    /// Every parameter vector with a stable name, for checkpoints.
    pub fn named_params(&self) -> Vec<(String, &ParamVector)> {
        let mut out = vec![("policy".to_string(), &self.theta)];
        if let Some((_, psi)) = &self.encoder {
            out.push(("encoder".to_string(), psi));
        }
        for (k, w) in self.omegas.iter().enumerate() {
            out.push((format!("critic_{k}"), w));
        }
        out
    }
}
