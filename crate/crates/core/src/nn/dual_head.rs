//! Critic with a shared state trunk feeding a Q head and a V head.
//!
//! Parameter layout: `[trunk | Q head | V head]`. The Q head sees the trunk
//! features concatenated with the action; the V head sees the features only.

use rand::Rng;

use super::mlp::{Mlp, Tape};
use super::params::{LayerShape, ParamVector};
use crate::error::{check_len, Result};

#[derive(Debug, Clone)]
pub struct DualHeadNet {
    trunk: Mlp,
    q_head: Mlp,
    v_head: Mlp,
    action_dim: usize,
}

/// Forward record of the trunk plus one head.
pub struct HeadPass {
    pub trunk: Tape,
    pub head: Tape,
}

impl HeadPass {
    pub fn value(&self) -> f64 {
        self.head.output()[0]
    }
}

impl DualHeadNet {
    pub fn new(state_dim: usize, action_dim: usize, trunk_hidden: &[usize], head_hidden: &[usize]) -> Self {
        assert!(!trunk_hidden.is_empty(), "dual-head trunk needs at least one layer");
        let feat = *trunk_hidden.last().unwrap();
        let trunk = Mlp::new(
            std::iter::once(state_dim).chain(trunk_hidden.iter().copied()).collect(),
            true,
        );
        Self {
            trunk,
            q_head: Mlp::with_hidden(feat + action_dim, head_hidden, 1, false),
            v_head: Mlp::with_hidden(feat, head_hidden, 1, false),
            action_dim,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut l = self.trunk.layers();
        l.extend(self.q_head.layers());
        l.extend(self.v_head.layers());
        l
    }

    pub fn param_len(&self) -> usize {
        self.trunk.param_len() + self.q_head.param_len() + self.v_head.param_len()
    }

    fn ranges(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>) {
        let a = self.trunk.param_len();
        let b = a + self.q_head.param_len();
        let c = b + self.v_head.param_len();
        (0..a, a..b, b..c)
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        ParamVector::glorot(self.layers(), rng)
    }

    pub fn trunk_forward(&self, params: &[f64], state: &[f64]) -> Result<Tape> {
        check_len("DualHeadNet params", self.param_len(), params.len())?;
        let (t, _, _) = self.ranges();
        self.trunk.forward(&params[t], state)
    }

    pub fn q_from_trunk(&self, params: &[f64], trunk: Tape, action: &[f64]) -> Result<HeadPass> {
        check_len("DualHeadNet action", self.action_dim, action.len())?;
        let (_, q, _) = self.ranges();
        let mut input = Vec::with_capacity(trunk.output().len() + action.len());
        input.extend_from_slice(trunk.output());
        input.extend_from_slice(action);
        let head = self.q_head.forward(&params[q], &input)?;
        Ok(HeadPass { trunk, head })
    }

    /// Q value from an existing trunk pass without keeping a tape.
    pub fn q_value_from_features(&self, params: &[f64], features: &[f64], action: &[f64]) -> Result<f64> {
        let (_, q, _) = self.ranges();
        let mut input = Vec::with_capacity(features.len() + action.len());
        input.extend_from_slice(features);
        input.extend_from_slice(action);
        Ok(self.q_head.forward(&params[q], &input)?.output()[0])
    }

    pub fn q_forward(&self, params: &[f64], state: &[f64], action: &[f64]) -> Result<HeadPass> {
        let trunk = self.trunk_forward(params, state)?;
        self.q_from_trunk(params, trunk, action)
    }

    pub fn q_value(&self, params: &[f64], state: &[f64], action: &[f64]) -> Result<f64> {
        Ok(self.q_forward(params, state, action)?.value())
    }

    pub fn v_forward(&self, params: &[f64], state: &[f64]) -> Result<HeadPass> {
        let trunk = self.trunk_forward(params, state)?;
        let (_, _, v) = self.ranges();
        let head = self.v_head.forward(&params[v], trunk.output())?;
        Ok(HeadPass { trunk, head })
    }

    pub fn v_value(&self, params: &[f64], state: &[f64]) -> Result<f64> {
        Ok(self.v_forward(params, state)?.value())
    }

    /// Backprop `cot · Q`; accumulates into `grad` (trunk and Q head) and
    /// returns `∂Q/∂state · cot`.
    pub fn q_backward(&self, params: &[f64], pass: &HeadPass, cot: f64, grad: Option<&mut [f64]>) -> Result<Vec<f64>> {
        let (t, q, _) = self.ranges();
        let feat = pass.trunk.output().len();
        match grad {
            Some(g) => {
                check_len("DualHeadNet grad", self.param_len(), g.len())?;
                let (gt, rest) = g.split_at_mut(t.end);
                let gq = &mut rest[..q.len()];
                let d_in = self.q_head.backward(&params[q], &pass.head, &[cot], Some(gq))?;
                self.trunk.backward(&params[t], &pass.trunk, &d_in[..feat], Some(gt))
            }
            None => {
                let d_in = self.q_head.backward(&params[q], &pass.head, &[cot], None)?;
                self.trunk.backward(&params[t], &pass.trunk, &d_in[..feat], None)
            }
        }
    }

    /// Backprop `cot · V` into trunk and V head.
    pub fn v_backward(&self, params: &[f64], pass: &HeadPass, cot: f64, grad: &mut [f64]) -> Result<Vec<f64>> {
        check_len("DualHeadNet grad", self.param_len(), grad.len())?;
        let (t, _, v) = self.ranges();
        let (gt, rest) = grad.split_at_mut(t.end);
        let gv = &mut rest[v.start - t.end..];
        let d_feat = self.v_head.backward(&params[v], &pass.head, &[cot], Some(gv))?;
        self.trunk.backward(&params[t], &pass.trunk, &d_feat, Some(gt))
    }

    /// Index range of the trunk parameters.
    pub fn trunk_range(&self) -> std::ops::Range<usize> {
        self.ranges().0
    }

    pub fn q_head_range(&self) -> std::ops::Range<usize> {
        self.ranges().1
    }

    pub fn v_head_range(&self) -> std::ops::Range<usize> {
        self.ranges().2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testing::{central_diff, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn heads_share_the_trunk() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = DualHeadNet::new(3, 2, &[5, 4], &[3]);
        let p = net.init(&mut rng);
        let s = [0.1, -0.4, 0.9];
        let a = [0.3, 0.7];
        let mut gq = vec![0.0; net.param_len()];
        let pass = net.q_forward(p.as_slice(), &s, &a).unwrap();
        net.q_backward(p.as_slice(), &pass, 1.0, Some(&mut gq)).unwrap();
        assert!(gq[net.v_head_range()].iter().all(|v| *v == 0.0));
        assert!(gq[net.trunk_range()].iter().any(|v| *v != 0.0));

        let mut gv = vec![0.0; net.param_len()];
        let pass = net.v_forward(p.as_slice(), &s).unwrap();
        net.v_backward(p.as_slice(), &pass, 1.0, &mut gv).unwrap();
        assert!(gv[net.q_head_range()].iter().all(|v| *v == 0.0));
        assert!(gv[net.trunk_range()].iter().any(|v| *v != 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = DualHeadNet::new(4, 2, &[6, 5], &[4]);
        for _ in 0..10 {
            let p = net.init(&mut rng).into_values();
            let s: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];

            let pass = net.q_forward(&p, &s, &a).unwrap();
            let mut g = vec![0.0; p.len()];
            let ds = net.q_backward(&p, &pass, 1.0, Some(&mut g)).unwrap();
            let num = central_diff(&p, 1e-5, |q| net.q_value(q, &s, &a).unwrap());
            assert!(rel_err(&g, &num) < 1e-5);
            let num_s = central_diff(&s, 1e-5, |x| net.q_value(&p, x, &a).unwrap());
            assert!(rel_err(&ds, &num_s) < 1e-5);

            let pass = net.v_forward(&p, &s).unwrap();
            let mut g = vec![0.0; p.len()];
            net.v_backward(&p, &pass, 1.0, &mut g).unwrap();
            let num = central_diff(&p, 1e-5, |q| net.v_value(q, &s).unwrap());
            assert!(rel_err(&g, &num) < 1e-5);
        }
    }
}
