//! Sample-average value and gradient estimates with recursive smoothing.

use crate::batch::ObservationTuple;
use crate::error::{check_len, Error, Result};
use crate::nn::{DualHeadNet, GaussianPolicy};

/// Batch mean of the (reshaped) costs, one entry per cost index `0..=K`.
pub fn estimate_f_tilde(tuples: &[ObservationTuple]) -> Result<Vec<f64>> {
    let first = tuples.first().ok_or(Error::EmptyBatch("estimate_f_tilde"))?;
    let mut sum = vec![0.0; first.reshaped.len()];
    for t in tuples {
        check_len("estimate_f_tilde costs", sum.len(), t.reshaped.len())?;
        for (s, c) in sum.iter_mut().zip(&t.reshaped) {
            *s += c;
        }
    }
    let n = tuples.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// `(1 − η)·prev + η·new`.
pub fn update_scalar_average(prev: f64, new: f64, eta: f64) -> f64 {
    (1.0 - eta) * prev + eta * new
}

/// In-place vector form of [`update_scalar_average`].
pub fn update_vector_average(prev: &mut [f64], new: &[f64], eta: f64) {
    for (p, n) in prev.iter_mut().zip(new) {
        *p = update_scalar_average(*p, *n, eta);
    }
}

/// Likelihood-ratio gradient estimates `mean_t Q_k(ṡ_t, a_t) ∇_θ log π_θ(a_t|ṡ_t)`
/// for every critic `k`.
pub fn estimate_g_tilde(
    policy: &GaussianPolicy,
    theta: &[f64],
    net: &DualHeadNet,
    critics: &[&[f64]],
    tuples: &[ObservationTuple],
) -> Result<Vec<Vec<f64>>> {
    if tuples.is_empty() {
        return Err(Error::EmptyBatch("estimate_g_tilde"));
    }
    let mut out = vec![vec![0.0; theta.len()]; critics.len()];
    let mut score = vec![0.0; theta.len()];
    let n = tuples.len() as f64;
    for t in tuples {
        let s = t.augmented();
        score.iter_mut().for_each(|v| *v = 0.0);
        policy.logprob_grad_into(theta, &s, &t.raw_action, 1.0, &mut score)?;
        let q_values = critics
            .iter()
            .map(|w| net.q_value(w, &s, &t.action_unit))
            .collect::<Result<Vec<f64>>>()?;
        for (g, q) in out.iter_mut().zip(q_values) {
            let w = q / n;
            for (gi, si) in g.iter_mut().zip(&score) {
                *gi += w * si;
            }
        }
    }
    Ok(out)
}
