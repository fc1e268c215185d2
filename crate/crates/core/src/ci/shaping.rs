//! Potential-based cost shaping `Ċ'_k = C'_k + V_k(ṡ') − V_k(ṡ)` for the
//! constraint costs; the power cost is passed through.

use crate::error::{check_len, Result};
use crate::nn::DualHeadNet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReshapedCost {
    pub original: f64,
    pub shaping: f64,
    pub reshaped: f64,
}

/// `costs` has entries `0..=K`; `v_now` and `v_next` hold the potentials of
/// constraints `1..=K`.
pub fn reshape_costs(costs: &[f64], v_now: &[f64], v_next: &[f64]) -> Result<Vec<ReshapedCost>> {
    let k = costs.len().saturating_sub(1);
    check_len("reshape_costs current potentials", k, v_now.len())?;
    check_len("reshape_costs next potentials", k, v_next.len())?;
    Ok(costs
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let shaping = if i == 0 { 0.0 } else { v_next[i - 1] - v_now[i - 1] };
            ReshapedCost {
                original: c,
                shaping,
                reshaped: c + shaping,
            }
        })
        .collect())
}

/// V-head outputs of the given critics at one augmented state.
pub fn potentials(net: &DualHeadNet, params: &[&[f64]], state: &[f64]) -> Result<Vec<f64>> {
    let features = |p: &[f64]| net.v_value(p, state);
    params.iter().map(|p| features(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_or_constant_potentials_change_nothing() {
        let costs = [1.5, 0.9, -0.1];
        for c in [0.0, 3.7] {
            let r = reshape_costs(&costs, &[c, c], &[c, c]).unwrap();
            for (x, orig) in r.iter().zip(costs) {
                assert_eq!(x.reshaped, orig);
                assert_eq!(x.shaping, 0.0);
            }
        }
    }

    #[test]
    fn power_cost_is_never_shaped() {
        let r = reshape_costs(&[2.0, 0.0], &[5.0], &[-1.0]).unwrap();
        assert_eq!(r[0].reshaped, 2.0);
        assert_eq!(r[1].reshaped, -6.0);
    }

    #[test]
    fn telescopes_along_a_trajectory() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let net = DualHeadNet::new(3, 2, &[6], &[4]);
        let p = net.init(&mut rng).into_values();
        let states: Vec<Vec<f64>> = (0..=200).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let v: Vec<f64> = states.iter().map(|s| potentials(&net, &[&p], s).unwrap()[0]).collect();
        let mut orig = 0.0;
        let mut shaped = 0.0;
        for t in 0..200 {
            let c = [0.0, rng.gen_range(-0.1..0.9)];
            let r = reshape_costs(&c, &v[t..t + 1], &v[t + 1..t + 2]).unwrap();
            orig += r[1].original;
            shaped += r[1].reshaped;
        }
        assert!((shaped - orig - (v[200] - v[0])).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_lengths() {
        assert!(reshape_costs(&[1.0, 0.0], &[], &[0.0]).is_err());
    }
}
