//! Encoder gradient: Bellman residuals pulled back through the sampled
//! latents, plus the KL of each fused posterior to the standard normal.

use crate::batch::IterationBatch;
use crate::error::{check_len, Error, Result};
use crate::nn::gaussian::{aggregate, aggregate_backward, kl_grad, kl_to_standard, reparam_backward};
use crate::nn::{ContextEncoder, FactorPass, GaussianFactor};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGradient {
    pub grad: Vec<f64>,
    /// Mean KL of the tuples' posteriors to the prior.
    pub mean_kl: f64,
}

/// Gradient w.r.t. `psi` of `Σ_t ⟨c_t, z_t(ψ)⟩ + Σ_t KL_t(ψ)` over the tuples
/// in `range`, where `c_t = latent_cot[t − range.start]` and each `z_t` is
/// rebuilt from its context at `psi` with the stored noise.
///
/// Every transition referenced by the mini-batch is encoded and
/// back-propagated once, however many windows contain it.
pub fn encoder_gradient(
    encoder: &ContextEncoder,
    psi: &[f64],
    batch: &IterationBatch,
    range: std::ops::Range<usize>,
    latent_cot: &[Vec<f64>],
    omit_half_term: bool,
) -> Result<EncoderGradient> {
    let tuples = &batch.tuples[range];
    if tuples.is_empty() {
        return Err(Error::EmptyBatch("encoder_gradient"));
    }
    check_len("encoder_gradient cotangents", tuples.len(), latent_cot.len())?;
    let n = encoder.latent_dim();
    let lo = tuples.iter().map(|t| t.context.start).min().unwrap_or(0);
    let hi = tuples.iter().map(|t| t.context.end).max().unwrap_or(0).max(lo);
    let span = (hi - lo) as usize;

    let mut passes: Vec<Option<FactorPass>> = vec![None; span];
    for t in tuples {
        for idx in t.context.clone() {
            let slot = &mut passes[(idx - lo) as usize];
            if slot.is_none() {
                *slot = Some(encoder.factor(psi, batch.transition(idx))?);
            }
        }
    }

    let mut acc_u = vec![vec![0.0; n]; span];
    let mut acc_v = vec![vec![0.0; n]; span];
    let mut kl_total = 0.0;
    for (t, cot) in tuples.iter().zip(latent_cot) {
        check_len("encoder_gradient cotangent", n, cot.len())?;
        let xi = t.noise.as_ref().ok_or(Error::MissingNoise(t.time as usize))?;
        check_len("encoder_gradient noise", n, xi.len())?;
        let factors: Vec<&GaussianFactor> = t
            .context
            .clone()
            .map(|idx| &passes[(idx - lo) as usize].as_ref().expect("encoded above").factor)
            .collect();
        let agg = aggregate(n, factors.iter().copied())?;
        kl_total += kl_to_standard(&agg);
        if factors.is_empty() {
            // The prior does not depend on ψ.
            continue;
        }
        let (mut dm, mut dv) = reparam_backward(&agg, xi, cot);
        let (km, kv) = kl_grad(&agg, omit_half_term);
        for j in 0..n {
            dm[j] += km[j];
            dv[j] += kv[j];
        }
        for (idx, (du_f, dv_f)) in t.context.clone().zip(aggregate_backward(&factors, &agg, &dm, &dv)) {
            let i = (idx - lo) as usize;
            for j in 0..n {
                acc_u[i][j] += du_f[j];
                acc_v[i][j] += dv_f[j];
            }
        }
    }

    let mut grad = vec![0.0; psi.len()];
    for (i, pass) in passes.iter().enumerate() {
        if let Some(pass) = pass {
            encoder.factor_backward(psi, pass, &acc_u[i], &acc_v[i], &mut grad)?;
        }
    }
    Ok(EncoderGradient {
        grad,
        mean_kl: kl_total / tuples.len() as f64,
    })
}

/// `ψ ← ψ − step · gradient`; returns the mean KL before the step.
pub fn encoder_update(
    encoder: &ContextEncoder,
    psi: &mut [f64],
    batch: &IterationBatch,
    range: std::ops::Range<usize>,
    latent_cot: &[Vec<f64>],
    omit_half_term: bool,
    step: f64,
) -> Result<f64> {
    let g = encoder_gradient(encoder, psi, batch, range, latent_cot, omit_half_term)?;
    for (p, d) in psi.iter_mut().zip(&g.grad) {
        *p -= step * d;
    }
    Ok(g.mean_kl)
}
