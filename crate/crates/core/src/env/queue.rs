//! Deadline-indexed per-user packet ledgers.
//!
//! Each user owns `D_k` slots indexed by age (0 = newest). A packet that
//! arrives in slot `t` is eligible for service for `D_k` slots; whatever is
//! left after the last of them is dropped.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// One ledger entry: original and remaining bits. `bits == 0` marks an empty slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketSlot {
    pub bits: u64,
    pub remaining: u64,
}

impl PacketSlot {
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    /// `ledgers[k][age]`.
    ledgers: Vec<Vec<PacketSlot>>,
}

/// What happened to one user during one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UserSlotOutcome {
    pub backlog_before: u64,
    pub served: u64,
    pub dropped_bits: u64,
    pub backlog_after: u64,
    pub dropout: bool,
    pub completed_packets: u32,
    pub arrived_bits: u64,
}

impl UserSlotOutcome {
    /// Packets that left the ledger this slot, either fully served or dropped.
    pub fn resolved_packets(&self) -> u32 {
        self.completed_packets + u32::from(self.dropout)
    }
}

impl QueueState {
    pub fn new(deadlines: &[usize]) -> Result<Self> {
        if deadlines.is_empty() {
            return Err(Error::Config("queue needs at least one user".into()));
        }
        if deadlines.iter().any(|&d| d == 0) {
            return Err(Error::Config("deadlines must be at least one slot".into()));
        }
        Ok(Self {
            ledgers: deadlines
                .iter()
                .map(|&d| vec![PacketSlot::default(); d])
                .collect(),
        })
    }

    pub fn from_ledgers(ledgers: Vec<Vec<PacketSlot>>) -> Result<Self> {
        for l in &ledgers {
            if l.is_empty() {
                return Err(Error::Config("ledger length must equal a positive deadline".into()));
            }
            if l.iter().any(|s| s.remaining > s.bits) {
                return Err(Error::Config("remaining bits exceed original bits".into()));
            }
        }
        Ok(Self { ledgers })
    }

    pub fn users(&self) -> usize {
        self.ledgers.len()
    }

    pub fn ledger(&self, user: usize) -> &[PacketSlot] {
        &self.ledgers[user]
    }

    pub fn deadlines(&self) -> Vec<usize> {
        self.ledgers.iter().map(Vec::len).collect()
    }

    pub fn backlog(&self, user: usize) -> u64 {
        self.ledgers[user].iter().map(|s| s.remaining).sum()
    }

    /// Total number of ledger slots over all users.
    pub fn total_slots(&self) -> usize {
        self.ledgers.iter().map(Vec::len).sum()
    }

    /// `(b, b̄)` for every slot, user-major then by age, multiplied by `scale`.
    pub fn features(&self, scale: f64, out: &mut Vec<f64>) {
        for ledger in &self.ledgers {
            for slot in ledger {
                out.push(slot.bits as f64 * scale);
                out.push(slot.remaining as f64 * scale);
            }
        }
    }

    /// Serves, expires, then admits, for every user.
    ///
    /// `rates` are in bit/s; each user may send `floor(τ0·R_k)` bits this slot,
    /// drained oldest packet first. The slot at age `D_k − 1` then leaves the
    /// ledger and counts as a dropout iff it still holds unserved bits.
    pub fn step(
        &mut self,
        rates: &[f64],
        arrivals: &[Option<u64>],
        slot_seconds: f64,
    ) -> Result<Vec<UserSlotOutcome>> {
        check_len("queue_step rates", self.users(), rates.len())?;
        check_len("queue_step arrivals", self.users(), arrivals.len())?;
        if rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::Numeric("rates must be nonnegative".into()));
        }
        let mut out = Vec::with_capacity(self.users());
        for (k, ledger) in self.ledgers.iter_mut().enumerate() {
            let capacity = service_capacity(rates[k], slot_seconds);
            out.push(step_ledger(ledger, capacity, arrivals[k]));
        }
        Ok(out)
    }
}

/// Whole bits deliverable in one slot at rate `rate`.
pub fn service_capacity(rate: f64, slot_seconds: f64) -> u64 {
    let bits = (rate * slot_seconds).floor();
    if bits >= u64::MAX as f64 {
        u64::MAX
    } else {
        bits as u64
    }
}

fn step_ledger(ledger: &mut [PacketSlot], capacity: u64, arrival: Option<u64>) -> UserSlotOutcome {
    let backlog_before: u64 = ledger.iter().map(|s| s.remaining).sum();
    let mut budget = capacity;
    let mut completed = 0;
    for slot in ledger.iter_mut().rev() {
        if budget == 0 {
            break;
        }
        if slot.remaining == 0 {
            continue;
        }
        let take = slot.remaining.min(budget);
        slot.remaining -= take;
        budget -= take;
        if slot.remaining == 0 {
            completed += 1;
        }
    }
    let served = capacity - budget;

    let expiring = ledger[ledger.len() - 1];
    let dropped_bits = expiring.remaining;
    ledger.rotate_right(1);
    ledger[0] = PacketSlot::default();
    let backlog_after: u64 = ledger.iter().map(|s| s.remaining).sum();

    let arrived_bits = arrival.unwrap_or(0);
    if arrived_bits > 0 {
        ledger[0] = PacketSlot {
            bits: arrived_bits,
            remaining: arrived_bits,
        };
    }
    UserSlotOutcome {
        backlog_before,
        served,
        dropped_bits,
        backlog_after,
        dropout: dropped_bits > 0,
        completed_packets: completed,
        arrived_bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(ledger: Vec<(u64, u64)>) -> QueueState {
        QueueState::from_ledgers(vec![ledger
            .into_iter()
            .map(|(bits, remaining)| PacketSlot { bits, remaining })
            .collect()])
        .unwrap()
    }

    #[test]
    fn full_drain_leaves_nothing() {
        let mut q = single(vec![(100, 100), (0, 0), (300, 250)]);
        let o = q.step(&[1e6], &[None], 1e-3).unwrap();
        assert_eq!(o[0].served, 350);
        assert!(!o[0].dropout);
        assert_eq!(q.backlog(0), 0);
        assert_eq!(o[0].completed_packets, 2);
    }

    #[test]
    fn zero_rate_expiry_drops() {
        let mut q = single(vec![(0, 0), (0, 0), (5000, 5000)]);
        let o = q.step(&[0.0], &[None], 1e-3).unwrap();
        assert!(o[0].dropout);
        assert_eq!(o[0].dropped_bits, 5000);
        assert_eq!(q.backlog(0), 0);
    }

    #[test]
    fn partial_head_service_carries_over() {
        let mut q = single(vec![(0, 0), (5000, 5000), (0, 0)]);
        // τ0·R = 3000 bits
        let o = q.step(&[3e6], &[None], 1e-3).unwrap();
        assert!(!o[0].dropout);
        assert_eq!(q.ledger(0)[2], PacketSlot { bits: 5000, remaining: 2000 });
    }

    #[test]
    fn service_is_oldest_first() {
        let mut q = single(vec![(1000, 1000), (0, 0), (800, 800), (0, 0)]);
        q.step(&[1e6], &[Some(7)], 1e-3).unwrap();
        // 1000 bits of budget: oldest (800) done, newest gets 200
        assert_eq!(q.ledger(0)[0], PacketSlot { bits: 7, remaining: 7 });
        assert_eq!(q.ledger(0)[1], PacketSlot { bits: 1000, remaining: 800 });
        assert_eq!(q.ledger(0)[3], PacketSlot { bits: 800, remaining: 0 });
    }

    #[test]
    fn fractional_capacity_is_floored() {
        assert_eq!(service_capacity(2999.9e3, 1e-3), 2999);
        assert_eq!(service_capacity(0.0, 1e-3), 0);
    }

    #[test]
    fn packet_lives_for_exactly_deadline_slots() {
        let mut q = QueueState::new(&[3]).unwrap();
        q.step(&[0.0], &[Some(10)], 1e-3).unwrap();
        for _ in 0..2 {
            let o = q.step(&[0.0], &[None], 1e-3).unwrap();
            assert!(!o[0].dropout);
        }
        let o = q.step(&[0.0], &[None], 1e-3).unwrap();
        assert!(o[0].dropout);
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut q = QueueState::new(&[2, 2]).unwrap();
        assert!(q.step(&[1.0], &[None, None], 1e-3).is_err());
        assert!(QueueState::new(&[0]).is_err());
    }

    fn replay_dropout(ledger: &[PacketSlot], capacity: u64) -> bool {
        // oldest slot is served first, so it keeps bits iff it alone exceeds capacity
        ledger.last().unwrap().remaining > capacity
    }

    proptest! {
        #[test]
        fn conservation_and_indicator(
            slots in proptest::collection::vec((0u64..20_000, 0u64..=100), 1..12),
            rate in 0.0f64..2e7,
            arrival in proptest::option::of(1u64..20_000),
        ) {
            let ledger: Vec<PacketSlot> = slots
                .iter()
                .map(|&(b, pct)| PacketSlot { bits: b, remaining: b * pct / 100 })
                .collect();
            let cap = service_capacity(rate, 1e-3);
            let expect_drop = replay_dropout(&ledger, cap);
            let mut q = QueueState::from_ledgers(vec![ledger]).unwrap();
            let o = q.step(&[rate], &[arrival], 1e-3).unwrap()[0];
            prop_assert_eq!(o.backlog_before, o.served + o.backlog_after + o.dropped_bits);
            prop_assert_eq!(o.dropout, expect_drop);
            prop_assert!(q.ledger(0).iter().all(|s| s.remaining <= s.bits));
            prop_assert_eq!(q.backlog(0), o.backlog_after + arrival.unwrap_or(0));
        }
    }
}
