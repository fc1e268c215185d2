//! Per-slot transition records and the per-iteration batch.

use std::ops::Range;

use crate::error::{Error, Result};

/// One slot of experience collected under a fixed policy.
///
/// The augmented state is `[state, latent]`; `latent` is empty when no
/// context encoder is in use.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTuple {
    /// Absolute slot index since the start of the run.
    pub time: u64,
    pub state: Vec<f64>,
    pub latent: Vec<f64>,
    /// Standard-normal draw used to sample `latent`, kept for pathwise
    /// gradients. `None` when the latent was not sampled.
    pub noise: Option<Vec<f64>>,
    /// Absolute indices of the transitions the latent was inferred from.
    pub context: Range<u64>,
    pub raw_action: Vec<f64>,
    /// Per-coordinate sigmoid of `raw_action`; this is what critics consume.
    pub action_unit: Vec<f64>,
    pub log_prob: f64,
    pub power: Vec<f64>,
    pub eps: f64,
    /// Unshaped costs: index 0 is the power cost, `1..=K` the shifted
    /// dropout costs.
    pub costs: Vec<f64>,
    /// Costs after potential shaping; index 0 always equals `costs[0]`.
    pub reshaped: Vec<f64>,
    pub next_state: Vec<f64>,
    pub next_latent: Vec<f64>,
    pub dropouts: Vec<bool>,
    /// Packets that left the queue this slot (fully served or dropped).
    pub resolved: Vec<u32>,
    pub regime: u64,
}

impl ObservationTuple {
    pub fn augmented(&self) -> Vec<f64> {
        concat(&self.state, &self.latent)
    }

    pub fn next_augmented(&self) -> Vec<f64> {
        concat(&self.next_state, &self.next_latent)
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Encoder input `(s, a, s')` for this slot's transition.
    pub fn transition_features(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(2 * self.state.len() + self.action_unit.len());
        f.extend_from_slice(&self.state);
        f.extend_from_slice(&self.action_unit);
        f.extend_from_slice(&self.next_state);
        f
    }

    pub fn users(&self) -> usize {
        self.power.len()
    }
}

pub(crate) fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// `B` consecutive tuples plus every transition their contexts refer to.
#[derive(Debug, Clone, Default)]
pub struct IterationBatch {
    pub tuples: Vec<ObservationTuple>,
    transition_base: u64,
    transitions: Vec<Vec<f64>>,
}

impl IterationBatch {
    /// `transitions[j]` holds the features of transition `transition_base + j`.
    pub fn new(tuples: Vec<ObservationTuple>, transition_base: u64, transitions: Vec<Vec<f64>>) -> Result<Self> {
        let end = transition_base + transitions.len() as u64;
        for t in &tuples {
            if t.context.start < transition_base || t.context.end > end {
                return Err(Error::Config(format!(
                    "tuple at slot {} refers to transitions {:?} outside {}..{}",
                    t.time, t.context, transition_base, end
                )));
            }
        }
        Ok(Self {
            tuples,
            transition_base,
            transitions,
        })
    }

    /// Batch without context bookkeeping.
    pub fn from_tuples(tuples: Vec<ObservationTuple>) -> Self {
        Self {
            tuples,
            transition_base: 0,
            transitions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn transition(&self, index: u64) -> &[f64] {
        &self.transitions[(index - self.transition_base) as usize]
    }

    /// Contiguous, disjoint, covering split into `parts` pieces whose sizes
    /// differ by at most one.
    pub fn mini_batches(&self, parts: usize) -> Result<Vec<Range<usize>>> {
        let n = self.len();
        if parts == 0 || parts > n {
            return Err(Error::Config(format!("cannot split {n} tuples into {parts} mini-batches")));
        }
        let base = n / parts;
        let extra = n % parts;
        let mut out = Vec::with_capacity(parts);
        let mut start = 0;
        for p in 0..parts {
            let len = base + usize::from(p < extra);
            out.push(start..start + len);
            start += len;
        }
        Ok(out)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// A tuple with the given costs and small fixed states.
    pub(crate) fn tuple(time: u64, costs: &[f64]) -> ObservationTuple {
        let k = costs.len() - 1;
        ObservationTuple {
            time,
            state: vec![0.1 * time as f64, -0.2],
            latent: Vec::new(),
            noise: None,
            context: 0..0,
            raw_action: vec![0.0; k + 1],
            action_unit: vec![0.5; k + 1],
            log_prob: 0.0,
            power: vec![costs[0] / k.max(1) as f64; k],
            eps: 0.5,
            costs: costs.to_vec(),
            reshaped: costs.to_vec(),
            next_state: vec![0.1 * (time + 1) as f64, -0.2],
            next_latent: Vec::new(),
            dropouts: vec![false; k],
            resolved: vec![0; k],
            regime: 0,
        }
    }

    #[test]
    fn mini_batches_cover_disjointly() {
        let b = IterationBatch::from_tuples((0..23).map(|t| tuple(t, &[1.0, 0.0])).collect());
        let parts = b.mini_batches(5).unwrap();
        assert_eq!(parts.len(), 5);
        assert_eq!(parts[0].start, 0);
        assert_eq!(parts.last().unwrap().end, 23);
        for w in parts.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        let sizes: Vec<usize> = parts.iter().map(|r| r.len()).collect();
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
        assert!(b.mini_batches(0).is_err());
        assert!(b.mini_batches(24).is_err());
    }

    #[test]
    fn context_must_be_stored() {
        let mut t = tuple(3, &[1.0, 0.0]);
        t.context = 1..3;
        assert!(IterationBatch::new(vec![t.clone()], 2, vec![vec![0.0]; 4]).is_err());
        let b = IterationBatch::new(vec![t], 1, vec![vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(b.transition(2), &[2.0]);
    }

    #[test]
    fn transition_features_concatenate() {
        let t = tuple(1, &[1.0, 0.0]);
        assert_eq!(t.transition_features(), vec![0.1, -0.2, 0.5, 0.5, 0.2, -0.2]);
    }
}
