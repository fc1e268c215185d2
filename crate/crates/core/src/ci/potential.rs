//! Regression of the V heads onto Monte-Carlo action averages of the Q heads.

use rand::Rng;

use crate::batch::ObservationTuple;
use crate::error::{Error, Result};
use crate::nn::{DualHeadNet, GaussianPolicy};

/// `(1/n_a) Σ Q(ṡ, a_n)` with `a_n ~ π_θ(·|ṡ)`.
///
/// `policy_state` is what the policy sees at `ṡ`; `state` is what the
/// critic sees.
pub fn value_target<R: Rng + ?Sized>(
    net: &DualHeadNet,
    omega: &[f64],
    policy: &GaussianPolicy,
    theta: &[f64],
    state: &[f64],
    n_a: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_a == 0 {
        return Err(Error::Config("value target needs at least one action sample".into()));
    }
    let trunk = net.trunk_forward(omega, state)?;
    let features = trunk.output();
    let heads = policy.heads(theta, state)?;
    let mut sum = 0.0;
    for _ in 0..n_a {
        let raw = GaussianPolicy::sample_raw(&heads, rng);
        let unit = policy.space.unit(&raw);
        sum += net.q_value_from_features(omega, features, &unit)?;
    }
    Ok(sum / n_a as f64)
}

/// One step on `Σ_t (V(ṡ_t) − V̂_t)²` with targets computed at the pre-step
/// parameters. Returns the mean squared error before the step.
#[allow(clippy::too_many_arguments)]
pub fn potential_update<R: Rng + ?Sized>(
    net: &DualHeadNet,
    omega: &mut [f64],
    tuples: &[ObservationTuple],
    policy: &GaussianPolicy,
    theta: &[f64],
    n_a: usize,
    step: f64,
    rng: &mut R,
) -> Result<f64> {
    if tuples.is_empty() {
        return Err(Error::EmptyBatch("potential_update"));
    }
    let mut grad = vec![0.0; omega.len()];
    let mut sq = 0.0;
    for t in tuples {
        let s = t.augmented();
        let target = value_target(net, omega, policy, theta, &s, n_a, rng)?;
        let pass = net.v_forward(omega, &s)?;
        let err = pass.value() - target;
        sq += err * err;
        net.v_backward(omega, &pass, 2.0 * err, &mut grad)?;
    }
    for (w, g) in omega.iter_mut().zip(&grad) {
        *w -= step * g;
    }
    Ok(sq / tuples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::tests::tuple;
    use crate::nn::ActionSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (DualHeadNet, Vec<f64>, GaussianPolicy, Vec<f64>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let space = ActionSpace {
            users: 1,
            max_power: 4.0,
            eps_range: (0.1, 1.0),
        };
        let policy = GaussianPolicy::new(2, &[6], space);
        let theta = policy.init(&mut rng, 0.0, 0.5).into_values();
        let net = DualHeadNet::new(2, 2, &[6], &[5]);
        let omega = net.init(&mut rng).into_values();
        (net, omega, policy, theta, rng)
    }

    #[test]
    fn constant_q_gives_constant_target() {
        let (net, mut omega, policy, theta, mut rng) = setup();
        // Zero the Q head's weights; its output bias becomes the value.
        let r = net.q_head_range();
        omega[r.clone()].iter_mut().for_each(|w| *w = 0.0);
        omega[r.end - 1] = 2.5;
        for n_a in [1, 7, 50] {
            let v = value_target(&net, &omega, &policy, &theta, &[0.3, -0.4], n_a, &mut rng).unwrap();
            assert_eq!(v, 2.5);
        }
    }

    #[test]
    fn one_small_step_reduces_error() {
        let (net, omega, policy, theta, _) = setup();
        let batch: Vec<_> = (0..8).map(|t| tuple(t, &[1.0, 0.0])).collect();
        let mse = |w: &[f64]| {
            let mut r = ChaCha8Rng::seed_from_u64(5);
            batch
                .iter()
                .map(|t| {
                    let s = t.augmented();
                    let target = value_target(&net, &omega, &policy, &theta, &s, 64, &mut r).unwrap();
                    (net.v_value(w, &s).unwrap() - target).powi(2)
                })
                .sum::<f64>()
        };
        let mut stepped = omega.clone();
        let mut r = ChaCha8Rng::seed_from_u64(5);
        // Replicate the targets' noise by drawing in the same order.
        potential_update(&net, &mut stepped, &batch, &policy, &theta, 64, 1e-3, &mut r).unwrap();
        assert!(mse(&stepped) < mse(&omega));
    }

    #[test]
    fn update_leaves_q_head_untouched() {
        let (net, omega, policy, theta, mut rng) = setup();
        let batch: Vec<_> = (0..4).map(|t| tuple(t, &[1.0, 0.0])).collect();
        let mut stepped = omega.clone();
        potential_update(&net, &mut stepped, &batch, &policy, &theta, 3, 1e-2, &mut rng).unwrap();
        let q = net.q_head_range();
        assert_eq!(stepped[q.clone()], omega[q]);
        assert_ne!(stepped[net.v_head_range()], omega[net.v_head_range()]);
    }

    #[test]
    fn zero_samples_rejected() {
        let (net, omega, policy, theta, mut rng) = setup();
        assert!(value_target(&net, &omega, &policy, &theta, &[0.0, 0.0], 0, &mut rng).is_err());
    }
}
