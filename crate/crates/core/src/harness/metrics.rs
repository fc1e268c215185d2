//! Per-iteration metrics and their CSV encoding.

use std::collections::VecDeque;
use std::io::Write;

use crate::batch::ObservationTuple;
use crate::crl::Branch;
use crate::error::Result;

/// Dropout and resolved-packet counts over the last few iterations.
#[derive(Debug, Clone)]
pub struct DropoutWindow {
    capacity: usize,
    entries: VecDeque<(Vec<u64>, Vec<u64>)>,
}

impl DropoutWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: VecDeque::new(),
        }
    }

    pub fn push(&mut self, dropouts: Vec<u64>, resolved: Vec<u64>) {
        self.entries.push_back((dropouts, resolved));
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    /// Per-user dropouts divided by resolved packets; 0 when nothing resolved.
    pub fn rates(&self, users: usize) -> Vec<f64> {
        let mut d = vec![0u64; users];
        let mut r = vec![0u64; users];
        for (dd, rr) in &self.entries {
            for k in 0..users {
                d[k] += dd[k];
                r[k] += rr[k];
            }
        }
        d.iter().zip(&r).map(|(&d, &r)| dropout_rate(d, r)).collect()
    }
}

pub fn dropout_rate(dropouts: u64, resolved: u64) -> f64 {
    if resolved == 0 {
        0.0
    } else {
        dropouts as f64 / resolved as f64
    }
}

/// Per-user `(dropouts, resolved packets)` summed over a batch.
pub fn batch_counts(tuples: &[ObservationTuple]) -> (Vec<u64>, Vec<u64>) {
    let users = tuples.first().map_or(0, ObservationTuple::users);
    let mut d = vec![0u64; users];
    let mut r = vec![0u64; users];
    for t in tuples {
        for k in 0..users {
            d[k] += u64::from(t.dropouts[k]);
            r[k] += u64::from(t.resolved[k]);
        }
    }
    (d, r)
}

/// Quantities read off the batch itself.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMetrics {
    pub mean_power: f64,
    pub dropout_rate: Vec<f64>,
    pub satisfied: bool,
    pub regime: u64,
}

/// Pushes the batch into `window` and reads the windowed rates.
pub fn compute_metrics(tuples: &[ObservationTuple], window: &mut DropoutWindow, limits: &[f64]) -> BatchMetrics {
    let n = tuples.len().max(1) as f64;
    let mean_power = tuples.iter().map(ObservationTuple::total_power).sum::<f64>() / n;
    let (d, r) = batch_counts(tuples);
    window.push(d, r);
    let dropout_rate = window.rates(limits.len());
    let satisfied = dropout_rate.iter().zip(limits).all(|(r, c)| r <= c);
    BatchMetrics {
        mean_power,
        dropout_rate,
        satisfied,
        regime: tuples.last().map_or(0, |t| t.regime),
    }
}

/// One CSV row per policy iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iteration: usize,
    pub phase: &'static str,
    pub batch: BatchMetrics,
    pub branch: Branch,
    pub f_hat: Vec<f64>,
    /// Largest constraint surrogate at the solver output.
    pub max_surrogate: f64,
    pub dual_iterations: usize,
    pub mu: f64,
    pub eta: f64,
    pub upsilon: f64,
    /// Checksum of the policy parameters that collected the batch.
    pub theta_collect: String,
    /// Checksum of the parameters produced by this iteration.
    pub theta_next: String,
    pub mean_kl: f64,
    /// Mean squared Bellman residual per cost index.
    pub residual: Vec<f64>,
    /// Mean absolute shaping term per constraint.
    pub shaping: Vec<f64>,
    /// Batch mean of the latent norm; 0 without an encoder.
    pub z_norm: f64,
}

impl MetricsRow {
    pub fn header(users: usize) -> Vec<String> {
        let mut h: Vec<String> = ["iteration", "phase", "mean_power"].iter().map(|s| s.to_string()).collect();
        h.extend((1..=users).map(|k| format!("dropout_rate_{k}")));
        h.extend(["satisfied", "branch", "regime"].iter().map(|s| s.to_string()));
        h.extend((0..=users).map(|k| format!("f_hat_{k}")));
        h.extend(
            ["max_surrogate", "dual_iterations", "mu", "eta", "upsilon", "theta_collect", "theta_next", "mean_kl"]
                .iter()
                .map(|s| s.to_string()),
        );
        h.extend((0..=users).map(|k| format!("residual_{k}")));
        h.extend((1..=users).map(|k| format!("shaping_{k}")));
        h.push("z_norm".into());
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.iteration.to_string(),
            self.phase.to_string(),
            self.batch.mean_power.to_string(),
        ];
        r.extend(self.batch.dropout_rate.iter().map(f64::to_string));
        r.push(u8::from(self.batch.satisfied).to_string());
        r.push(self.branch.as_str().to_string());
        r.push(self.batch.regime.to_string());
        r.extend(self.f_hat.iter().map(f64::to_string));
        r.push(self.max_surrogate.to_string());
        r.push(self.dual_iterations.to_string());
        r.push(self.mu.to_string());
        r.push(self.eta.to_string());
        r.push(self.upsilon.to_string());
        r.push(self.theta_collect.clone());
        r.push(self.theta_next.clone());
        r.push(self.mean_kl.to_string());
        r.extend(self.residual.iter().map(f64::to_string));
        r.extend(self.shaping.iter().map(f64::to_string));
        r.push(self.z_norm.to_string());
        r
    }
}

/// CSV writer that flushes after every row so a failed run leaves a usable
/// partial log.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W, users: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(MetricsRow::header(users))?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<()> {
        self.inner.write_record(row.record())?;
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::tests::tuple;

    fn with_counts(time: u64, dropout: bool, resolved: u32) -> ObservationTuple {
        let mut t = tuple(time, &[1.0, 0.0]);
        t.dropouts = vec![dropout];
        t.resolved = vec![resolved];
        t
    }

    #[test]
    fn empty_window_rate_is_zero() {
        let mut w = DropoutWindow::new(10);
        let b: Vec<_> = (0..5).map(|t| with_counts(t, false, 0)).collect();
        let m = compute_metrics(&b, &mut w, &[0.1]);
        assert_eq!(m.dropout_rate, vec![0.0]);
        assert!(m.satisfied);
    }

    #[test]
    fn one_dropout_in_ten_resolutions() {
        let mut w = DropoutWindow::new(10);
        let mut b: Vec<_> = (0..9).map(|t| with_counts(t, false, 1)).collect();
        b.push(with_counts(9, true, 1));
        let m = compute_metrics(&b, &mut w, &[0.1]);
        assert_eq!(m.dropout_rate, vec![0.1]);
        assert!(m.satisfied);
        let m = compute_metrics(&b[9..], &mut w, &[0.1]);
        assert!((m.dropout_rate[0] - 2.0 / 11.0).abs() < 1e-15);
        assert!(!m.satisfied);
    }

    #[test]
    fn window_forgets_old_iterations() {
        let mut w = DropoutWindow::new(2);
        w.push(vec![5], vec![5]);
        w.push(vec![0], vec![5]);
        w.push(vec![0], vec![5]);
        assert_eq!(w.rates(1), vec![0.0]);
    }

    #[test]
    fn power_is_mean_of_summed_actions() {
        let mut w = DropoutWindow::new(1);
        let mut b: Vec<_> = (0..4).map(|t| tuple(t, &[0.0, 0.0, 0.0])).collect();
        for (i, t) in b.iter_mut().enumerate() {
            t.power = vec![0.25 * i as f64, 1.0];
        }
        let m = compute_metrics(&b, &mut w, &[0.1, 0.1]);
        assert_eq!(m.mean_power, (0.0 + 0.25 + 0.5 + 0.75 + 4.0) / 4.0);
    }

    #[test]
    fn header_and_record_align() {
        let row = MetricsRow {
            iteration: 1,
            phase: "pretrain",
            batch: BatchMetrics {
                mean_power: 1.0,
                dropout_rate: vec![0.0, 0.1],
                satisfied: true,
                regime: 0,
            },
            branch: Branch::Objective,
            f_hat: vec![1.0, -0.1, -0.1],
            max_surrogate: -0.1,
            dual_iterations: 3,
            mu: 0.2,
            eta: 1.0,
            upsilon: 1e-3,
            theta_collect: "a".into(),
            theta_next: "b".into(),
            mean_kl: 0.0,
            residual: vec![0.0; 3],
            shaping: vec![0.0; 2],
            z_norm: 0.0,
        };
        assert_eq!(MetricsRow::header(2).len(), row.record().len());
        let mut buf = Vec::new();
        let mut w = MetricsWriter::new(&mut buf, 2).unwrap();
        w.write(&row).unwrap();
        drop(w);
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
