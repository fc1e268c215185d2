//! Average-cost TD(0) updates for the Q heads.

use crate::batch::ObservationTuple;
use crate::error::{check_len, Error, Result};
use crate::nn::DualHeadNet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdOutcome {
    /// Mean squared Bellman residual before the step.
    pub mean_sq_residual: f64,
}

/// One semi-gradient step on critic `cost_index`.
///
/// The residual of tuple `t` is `Q(ṡ_t, a_t) − Ċ'_t + f̂ − Q(ṡ_{t+1}, a'_{t+1})`
/// with the successor action taken from `successors`; the bootstrap term is not
/// differentiated. The parameter step is `−step · Σ_t residual_t ∇_ω Q(ṡ_t, a_t)`.
///
/// When `latent_grad` is given, `residual_t · ∂Q(ṡ_t, a_t)/∂z_t` is added to
/// entry `t`, evaluated at the pre-step parameters.
#[allow(clippy::too_many_arguments)]
pub fn td_critic_update(
    net: &DualHeadNet,
    omega: &mut [f64],
    tuples: &[ObservationTuple],
    successors: &[Vec<f64>],
    cost_index: usize,
    f_hat: f64,
    step: f64,
    mut latent_grad: Option<&mut [Vec<f64>]>,
) -> Result<TdOutcome> {
    if tuples.is_empty() {
        return Err(Error::EmptyBatch("td_critic_update"));
    }
    check_len("td_critic_update successors", tuples.len(), successors.len())?;
    if let Some(lg) = latent_grad.as_deref() {
        check_len("td_critic_update latent_grad", tuples.len(), lg.len())?;
    }
    let mut grad = vec![0.0; omega.len()];
    let mut sq = 0.0;
    for (idx, (t, a_next)) in tuples.iter().zip(successors).enumerate() {
        let s = t.augmented();
        let pass = net.q_forward(omega, &s, &t.action_unit)?;
        let target = net.q_value(omega, &t.next_augmented(), a_next)?;
        let residual = pass.value() - t.reshaped[cost_index] + f_hat - target;
        sq += residual * residual;
        let ds = net.q_backward(omega, &pass, residual, Some(&mut grad))?;
        if let Some(lg) = latent_grad.as_deref_mut() {
            let z_grad = &ds[t.state.len()..];
            check_len("td_critic_update latent", lg[idx].len(), z_grad.len())?;
            for (acc, g) in lg[idx].iter_mut().zip(z_grad) {
                *acc += g;
            }
        }
    }
    for (w, g) in omega.iter_mut().zip(&grad) {
        *w -= step * g;
    }
    Ok(TdOutcome {
        mean_sq_residual: sq / tuples.len() as f64,
    })
}
