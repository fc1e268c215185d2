//! Diagonal Gaussian policy with a sigmoid squash onto the action box.
//!
//! Densities and scores live in the raw (pre-squash) space; the squash is a
//! fixed bijection, so score-function estimators over raw samples are exact.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::Mlp;
use super::params::{LayerShape, ParamVector};
use crate::env::Action;
use crate::error::{check_len, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps raw Gaussian draws onto `[0, p_max]^K × [ε_min, ε_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSpace {
    pub users: usize,
    pub max_power: f64,
    pub eps_range: (f64, f64),
}

impl ActionSpace {
    /// Raw dimension: one entry per user plus the regularization factor.
    pub fn dim(&self) -> usize {
        self.users + 1
    }

    /// Per-coordinate sigmoid of the raw sample, each in (0, 1).
    pub fn unit(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().map(|&g| sigmoid(g)).collect()
    }

    pub fn squash(&self, raw: &[f64]) -> Action {
        let (lo, hi) = self.eps_range;
        let power = raw[..self.users]
            .iter()
            .map(|&g| self.max_power * sigmoid(g))
            .collect();
        Action {
            power,
            eps: lo + (hi - lo) * sigmoid(raw[self.users]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicySample {
    pub raw: Vec<f64>,
    pub log_prob: f64,
    pub action: Action,
}

/// `θ = [θ_μ, θ_σ]`: one tanh network for the mean, one for the std.
#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    mean: Mlp,
    std: Mlp,
    pub space: ActionSpace,
    pub sigma_floor: f64,
}

/// Mean and standard deviation at one state, with the tapes that produced them.
pub struct PolicyHeads {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    mean_tape: super::mlp::Tape,
    std_tape: super::mlp::Tape,
}

impl GaussianPolicy {
    pub fn new(state_dim: usize, hidden: &[usize], space: ActionSpace) -> Self {
        Self {
            mean: Mlp::with_hidden(state_dim, hidden, space.dim(), false),
            std: Mlp::with_hidden(state_dim, hidden, space.dim(), false),
            space,
            sigma_floor: 1e-4,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.mean.input_dim()
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut l = self.mean.layers();
        l.extend(self.std.layers());
        l
    }

    fn split(&self) -> usize {
        self.mean.param_len()
    }

    /// Glorot init; the output layers are shrunk so the initial mean is near
    /// `mean_bias` and the initial std near `init_std`.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R, mean_bias: f64, init_std: f64) -> ParamVector {
        let mut p = ParamVector::glorot(self.layers(), rng);
        let split = self.split();
        let n_mean_layers = self.mean.layers().len();
        let std_bias = (init_std - self.sigma_floor).max(1e-6).exp_m1().ln();
        {
            let vals = p.as_mut_slice();
            let last = self.mean.layers()[n_mean_layers - 1];
            let off = self.mean.param_len() - last.len();
            shrink_output(&mut vals[off..split], last, 0.01, mean_bias);
            let last = *self.std.layers().last().unwrap();
            let off = split + self.std.param_len() - last.len();
            shrink_output(&mut vals[off..], last, 0.01, std_bias);
        }
        p
    }

    pub fn heads(&self, theta: &[f64], state: &[f64]) -> Result<PolicyHeads> {
        check_len("policy params", self.split() + self.std.param_len(), theta.len())?;
        let (tm, ts) = theta.split_at(self.split());
        let mean_tape = self.mean.forward(tm, state)?;
        let std_tape = self.std.forward(ts, state)?;
        let mean = mean_tape.output().to_vec();
        let std = std_tape
            .output()
            .iter()
            .map(|&o| softplus(o) + self.sigma_floor)
            .collect();
        Ok(PolicyHeads {
            mean,
            std,
            mean_tape,
            std_tape,
        })
    }

    pub fn log_density(heads: &PolicyHeads, raw: &[f64]) -> f64 {
        heads
            .mean
            .iter()
            .zip(&heads.std)
            .zip(raw)
            .map(|((m, s), g)| {
                let z = (g - m) / s;
                -s.ln() - HALF_LN_2PI - 0.5 * z * z
            })
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, theta: &[f64], state: &[f64], rng: &mut R) -> Result<PolicySample> {
        let heads = self.heads(theta, state)?;
        let raw = Self::sample_raw(&heads, rng);
        let log_prob = Self::log_density(&heads, &raw);
        Ok(PolicySample {
            action: self.space.squash(&raw),
            raw,
            log_prob,
        })
    }

    /// A raw-space draw from already evaluated heads.
    pub fn sample_raw<R: Rng + ?Sized>(heads: &PolicyHeads, rng: &mut R) -> Vec<f64> {
        heads
            .mean
            .iter()
            .zip(&heads.std)
            .map(|(m, s)| {
                let xi: f64 = StandardNormal.sample(rng);
                m + s * xi
            })
            .collect()
    }

    /// Deterministic action at the mean.
    pub fn mean_action(&self, theta: &[f64], state: &[f64]) -> Result<PolicySample> {
        let heads = self.heads(theta, state)?;
        let raw = heads.mean.clone();
        Ok(PolicySample {
            action: self.space.squash(&raw),
            log_prob: Self::log_density(&heads, &raw),
            raw,
        })
    }

    /// `∇_θ log π_θ(raw | state)`, accumulated into `grad` scaled by `weight`.
    /// Returns the log-density.
    pub fn logprob_grad_into(
        &self,
        theta: &[f64],
        state: &[f64],
        raw: &[f64],
        weight: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        check_len("policy raw sample", self.space.dim(), raw.len())?;
        check_len("policy grad", theta.len(), grad.len())?;
        let heads = self.heads(theta, state)?;
        let mut d_mean = Vec::with_capacity(raw.len());
        let mut d_pre_std = Vec::with_capacity(raw.len());
        for (((m, s), g), o) in heads
            .mean
            .iter()
            .zip(&heads.std)
            .zip(raw)
            .zip(heads.std_tape.output())
        {
            let r = g - m;
            d_mean.push(weight * r / (s * s));
            let d_std = -1.0 / s + r * r / (s * s * s);
            d_pre_std.push(weight * d_std * sigmoid(*o));
        }
        let split = self.split();
        let (tm, ts) = theta.split_at(split);
        let (gm, gs) = grad.split_at_mut(split);
        self.mean.backward(tm, &heads.mean_tape, &d_mean, Some(gm))?;
        self.std.backward(ts, &heads.std_tape, &d_pre_std, Some(gs))?;
        Ok(Self::log_density(&heads, raw))
    }

    pub fn logprob_grad(&self, theta: &[f64], state: &[f64], raw: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; theta.len()];
        self.logprob_grad_into(theta, state, raw, 1.0, &mut g)?;
        Ok(g)
    }
}

fn shrink_output(vals: &mut [f64], shape: LayerShape, scale: f64, bias: f64) {
    let (w, b) = vals.split_at_mut(shape.fan_in * shape.fan_out);
    for v in w {
        *v *= scale;
    }
    for v in b {
        *v = bias;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testing::{central_diff, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space() -> ActionSpace {
        ActionSpace {
            users: 2,
            max_power: 4.0,
            eps_range: (1e-3, 1.0),
        }
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn tiny_sigma_collapses_to_squashed_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pol = GaussianPolicy::new(4, &[8], space());
        pol.sigma_floor = 1e-6;
        let theta = pol.init(&mut rng, 0.3, 1e-6);
        let mut vals = theta.into_values();
        // push the std pre-activation far negative so softplus vanishes
        let n = vals.len();
        for v in &mut vals[n - 3..] {
            *v = -60.0;
        }
        let s = random_state(&mut rng, 4);
        let heads = pol.heads(&vals, &s).unwrap();
        let target = pol.space.squash(&heads.mean);
        for _ in 0..50 {
            let a = pol.sample(&vals, &s, &mut rng).unwrap().action;
            for (x, y) in a.power.iter().zip(&target.power) {
                assert!((x - y).abs() < 1e-5);
            }
            assert!((a.eps - target.eps).abs() < 1e-5);
        }
    }

    #[test]
    fn log_density_at_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pol = GaussianPolicy::new(3, &[5], space());
        let theta = pol.init(&mut rng, 0.0, 0.7);
        let s = random_state(&mut rng, 3);
        let heads = pol.heads(theta.as_slice(), &s).unwrap();
        let lp = GaussianPolicy::log_density(&heads, &heads.mean);
        let want: f64 = -heads.std.iter().map(|s| s.ln()).sum::<f64>()
            - 1.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((lp - want).abs() < 1e-12);
    }

    #[test]
    fn squash_stays_inside_box() {
        let sp = space();
        for g in [-1e3, -30.0, -1.0, 0.0, 2.0, 40.0, 1e3] {
            let a = sp.squash(&[g, -g, g]);
            for p in &a.power {
                assert!((0.0..=4.0).contains(p));
            }
            assert!((1e-3..=1.0).contains(&a.eps));
        }
    }

    #[test]
    fn score_vanishes_for_mean_path_at_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pol = GaussianPolicy::new(3, &[5], space());
        let theta = pol.init(&mut rng, 0.0, 0.5);
        let s = random_state(&mut rng, 3);
        let heads = pol.heads(theta.as_slice(), &s).unwrap();
        let g = pol.logprob_grad(theta.as_slice(), &s, &heads.mean).unwrap();
        assert!(g[..pol.split()].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn logprob_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pol = GaussianPolicy::new(4, &[6, 6], space());
        for _ in 0..10 {
            let theta = pol.init(&mut rng, 0.2, 0.6).into_values();
            let mut theta = theta;
            for v in theta.iter_mut() {
                *v += rng.gen_range(-0.3..0.3);
            }
            let s = random_state(&mut rng, 4);
            let raw = pol.sample(&theta, &s, &mut rng).unwrap().raw;
            let g = pol.logprob_grad(&theta, &s, &raw).unwrap();
            let num = central_diff(&theta, 1e-5, |t| {
                GaussianPolicy::log_density(&pol.heads(t, &s).unwrap(), &raw)
            });
            assert!(rel_err(&g, &num) < 1e-5, "{}", rel_err(&g, &num));
        }
    }

    #[test]
    fn huge_sigma_kills_mean_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pol = GaussianPolicy::new(2, &[4], space());
        let mut small = None;
        for bias in [0.0, 10.0, 1e3] {
            let theta = pol.init(&mut rng, 0.0, 1.0).into_values();
            let mut theta = theta;
            let n = theta.len();
            for v in &mut theta[n - 3..] {
                *v = bias;
            }
            let s = [0.3, -0.2];
            let raw = [1.0, -1.0, 0.5];
            let g = pol.logprob_grad(&theta, &s, &raw).unwrap();
            let norm = g[..pol.split()].iter().map(|v| v * v).sum::<f64>().sqrt();
            if let Some(prev) = small {
                assert!(norm < prev);
            }
            small = Some(norm);
        }
        assert!(small.unwrap() < 1e-4);
    }

    #[test]
    fn raw_density_self_normalizes() {
        // importance-weighted E[1] with a wide proposal should be ≈ 1
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sp = ActionSpace {
            users: 0,
            max_power: 1.0,
            eps_range: (0.1, 1.0),
        };
        let pol = GaussianPolicy::new(1, &[3], sp);
        let theta = pol.init(&mut rng, 0.4, 0.8);
        let heads = pol.heads(theta.as_slice(), &[0.2]).unwrap();
        let q_sd = 3.0;
        let n = 200_000;
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = StandardNormal.sample(&mut rng);
            let g = x * q_sd;
            let lq = -q_sd.ln() - HALF_LN_2PI - 0.5 * x * x;
            w.push((GaussianPolicy::log_density(&heads, &[g]) - lq).exp());
        }
        let mean = w.iter().sum::<f64>() / n as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 3.0 * (var / n as f64).sqrt());
    }
}
