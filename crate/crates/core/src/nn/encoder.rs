//! Context encoder: a factor network maps each transition tuple to a diagonal
//! Gaussian, and the factors are fused by precision weighting.

use rand::Rng;

use super::gaussian::{aggregate, GaussianFactor};
use super::mlp::{Mlp, Tape};
use super::params::{LayerShape, ParamVector};
use super::policy::{sigmoid, softplus};
use crate::error::{check_len, Result};

#[derive(Debug, Clone)]
pub struct ContextEncoder {
    net: Mlp,
    latent_dim: usize,
    var_floor: f64,
}

/// One evaluated factor together with its forward record.
#[derive(Debug, Clone)]
pub struct FactorPass {
    pub factor: GaussianFactor,
    tape: Tape,
}

impl ContextEncoder {
    pub fn new(tuple_dim: usize, hidden: &[usize], latent_dim: usize) -> Self {
        Self {
            net: Mlp::with_hidden(tuple_dim, hidden, 2 * latent_dim, false),
            latent_dim,
            var_floor: 1e-4,
        }
    }

    pub fn tuple_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        self.net.layers()
    }

    pub fn param_len(&self) -> usize {
        self.net.param_len()
    }

    /// Glorot weights with a shrunken output layer, so initial factors sit
    /// near `N(0, softplus(0) + floor)`.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let mut p = ParamVector::glorot(self.layers(), rng);
        let last = self.layers().len() - 1;
        let off = p.layer_offset(last);
        for w in &mut p.as_mut_slice()[off..] {
            *w *= 0.1;
        }
        p
    }

    pub fn factor(&self, psi: &[f64], tuple: &[f64]) -> Result<FactorPass> {
        check_len("ContextEncoder params", self.param_len(), psi.len())?;
        let tape = self.net.forward(psi, tuple)?;
        let out = tape.output();
        let n = self.latent_dim;
        let factor = GaussianFactor {
            mean: out[..n].to_vec(),
            var: out[n..].iter().map(|r| softplus(*r) + self.var_floor).collect(),
        };
        Ok(FactorPass { factor, tape })
    }

    /// Accumulates `⟨du, u⟩ + ⟨dv, v⟩` gradients into `grad`.
    pub fn factor_backward(&self, psi: &[f64], pass: &FactorPass, du: &[f64], dv: &[f64], grad: &mut [f64]) -> Result<()> {
        let n = self.latent_dim;
        check_len("ContextEncoder du", n, du.len())?;
        check_len("ContextEncoder dv", n, dv.len())?;
        let raw = &pass.tape.output()[n..];
        let mut cot = Vec::with_capacity(2 * n);
        cot.extend_from_slice(du);
        cot.extend(dv.iter().zip(raw).map(|(d, r)| d * sigmoid(*r)));
        self.net.backward(psi, &pass.tape, &cot, Some(grad))?;
        Ok(())
    }

    /// Fused posterior over a window of tuples.
    pub fn infer<'a, I>(&self, psi: &[f64], tuples: I) -> Result<GaussianFactor>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let factors = tuples
            .into_iter()
            .map(|t| self.factor(psi, t).map(|p| p.factor))
            .collect::<Result<Vec<_>>>()?;
        aggregate(self.latent_dim, &factors)
    }
}
