//! Per-kind service queues with patience deadlines.
//!
//! A staff member that becomes idle takes the longest-waiting entry across
//! every kind it can serve.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::agents::{can_serve, CustomerId, ServiceKind, StaffRole};
use crate::engine::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("customer {0} is already queued")]
    DuplicateEnqueue(CustomerId),
    #[error("patience deadline {deadline} precedes join time {join}")]
    DeadlineBeforeJoin { join: SimTime, deadline: SimTime },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueEntry {
    pub customer: CustomerId,
    pub kind: ServiceKind,
    pub join_time: SimTime,
    /// `None` means the customer never gives up.
    pub patience_deadline: Option<SimTime>,
    /// Global arrival order, used to break join-time ties.
    pub ticket: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Discipline {
    #[default]
    Fifo,
}

#[derive(Clone, Debug)]
pub struct ServiceQueue {
    pub kind: ServiceKind,
    pub discipline: Discipline,
    entries: VecDeque<QueueEntry>,
}

impl ServiceQueue {
    pub fn new(kind: ServiceKind) -> Self {
        ServiceQueue { kind, discipline: Discipline::Fifo, entries: VecDeque::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The entry this queue would serve next.
    pub fn head(&self) -> Option<&QueueEntry> {
        match self.discipline {
            Discipline::Fifo => self.entries.front(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &QueueEntry> {
        self.entries.iter()
    }
}

/// Flow counts for one service kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct KindTally {
    pub served_immediately: u64,
    pub enqueued: u64,
    pub served_from_queue: u64,
    pub reneged: u64,
    pub flushed: u64,
}

impl KindTally {
    pub fn balanced(&self) -> bool {
        self.enqueued == self.served_from_queue + self.reneged + self.flushed
    }
}

#[derive(Clone, Debug)]
pub struct ServiceQueues {
    queues: Vec<ServiceQueue>,
    queued: BTreeSet<CustomerId>,
    tallies: [KindTally; 5],
    next_ticket: u64,
}

impl Default for ServiceQueues {
    fn default() -> Self {
        Self::new()
    }
}

impl ServiceQueues {
    pub fn new() -> Self {
        ServiceQueues {
            queues: ServiceKind::ALL.iter().map(|&k| ServiceQueue::new(k)).collect(),
            queued: BTreeSet::new(),
            tallies: [KindTally::default(); 5],
            next_ticket: 0,
        }
    }

    pub fn queue(&self, kind: ServiceKind) -> &ServiceQueue {
        &self.queues[kind.index()]
    }

    pub fn tally(&self, kind: ServiceKind) -> &KindTally {
        &self.tallies[kind.index()]
    }

    pub fn tallies(&self) -> [KindTally; 5] {
        self.tallies
    }

    pub fn total_waiting(&self) -> usize {
        self.queued.len()
    }

    pub fn is_queued(&self, customer: CustomerId) -> bool {
        self.queued.contains(&customer)
    }

    pub fn note_immediate(&mut self, kind: ServiceKind) {
        self.tallies[kind.index()].served_immediately += 1;
    }

    pub fn enqueue(
        &mut self,
        customer: CustomerId,
        kind: ServiceKind,
        join_time: SimTime,
        patience_deadline: Option<SimTime>,
    ) -> Result<QueueEntry, ServiceError> {
        if self.queued.contains(&customer) {
            return Err(ServiceError::DuplicateEnqueue(customer));
        }
        if let Some(deadline) = patience_deadline {
            if deadline < join_time {
                return Err(ServiceError::DeadlineBeforeJoin { join: join_time, deadline });
            }
        }
        let entry = QueueEntry { customer, kind, join_time, patience_deadline, ticket: self.next_ticket };
        self.next_ticket += 1;
        self.queued.insert(customer);
        self.queues[kind.index()].entries.push_back(entry);
        self.tallies[kind.index()].enqueued += 1;
        Ok(entry)
    }

    fn remove(&mut self, customer: CustomerId) -> Option<QueueEntry> {
        if !self.queued.remove(&customer) {
            return None;
        }
        for q in &mut self.queues {
            if let Some(pos) = q.entries.iter().position(|e| e.customer == customer) {
                return q.entries.remove(pos);
            }
        }
        unreachable!("queued set and queues out of sync for {customer}")
    }

    /// Removes a customer whose patience ran out. `None` when the customer
    /// is no longer queued (already served), which makes late renege events
    /// harmless.
    pub fn renege(&mut self, customer: CustomerId) -> Option<QueueEntry> {
        let entry = self.remove(customer)?;
        self.tallies[entry.kind.index()].reneged += 1;
        Some(entry)
    }

    /// Removes a customer sent home at closing time.
    pub fn flush(&mut self, customer: CustomerId) -> Option<QueueEntry> {
        let entry = self.remove(customer)?;
        self.tallies[entry.kind.index()].flushed += 1;
        Some(entry)
    }

    /// Oldest waiting entry among the kinds `role` can serve, without
    /// removing it.
    pub fn peek_next(&self, role: StaffRole) -> Option<&QueueEntry> {
        self.queues
            .iter()
            .filter(|q| can_serve(role, q.kind))
            .filter_map(ServiceQueue::head)
            .min_by(|a, b| a.join_time.cmp(&b.join_time).then(a.ticket.cmp(&b.ticket)))
    }

    /// Takes the oldest compatible waiting entry for a staff member of
    /// `role` that has just become free.
    pub fn allocate_next(&mut self, role: StaffRole) -> Option<QueueEntry> {
        let kind = self.peek_next(role)?.kind;
        let entry = self.queues[kind.index()].entries.pop_front()?;
        self.queued.remove(&entry.customer);
        self.tallies[kind.index()].served_from_queue += 1;
        Some(entry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{stream_rng, StreamId};
    use rand::Rng;

    fn t(m: f64) -> SimTime {
        SimTime::from_minutes(m)
    }

    #[test]
    fn fifo_serves_earliest_first() {
        let mut q = ServiceQueues::new();
        q.enqueue(CustomerId(1), ServiceKind::Till, t(1.0), Some(t(9.0))).unwrap();
        q.enqueue(CustomerId(2), ServiceKind::Till, t(2.0), Some(t(9.0))).unwrap();
        assert_eq!(q.allocate_next(StaffRole::Cashier).unwrap().customer, CustomerId(1));
        assert_eq!(q.allocate_next(StaffRole::Cashier).unwrap().customer, CustomerId(2));
        assert!(q.allocate_next(StaffRole::Cashier).is_none());
    }

    #[test]
    fn duplicate_enqueue_is_rejected() {
        let mut q = ServiceQueues::new();
        q.enqueue(CustomerId(1), ServiceKind::HelpL1, t(0.0), Some(t(3.0))).unwrap();
        assert_eq!(
            q.enqueue(CustomerId(1), ServiceKind::Till, t(0.0), None),
            Err(ServiceError::DuplicateEnqueue(CustomerId(1)))
        );
        assert!(q.enqueue(CustomerId(2), ServiceKind::Till, t(5.0), Some(t(4.0))).is_err());
    }

    #[test]
    fn zero_patience_entry_is_still_valid() {
        let mut q = ServiceQueues::new();
        let e = q.enqueue(CustomerId(3), ServiceKind::Refund, t(7.0), Some(t(7.0))).unwrap();
        assert_eq!(e.patience_deadline, Some(e.join_time));
        assert!(q.renege(CustomerId(3)).is_some());
    }

    #[test]
    fn renege_after_service_is_inert() {
        let mut q = ServiceQueues::new();
        q.enqueue(CustomerId(1), ServiceKind::Till, t(0.0), Some(t(5.0))).unwrap();
        q.allocate_next(StaffRole::Cashier).unwrap();
        assert!(q.renege(CustomerId(1)).is_none());
        let tally = q.tally(ServiceKind::Till);
        assert_eq!((tally.enqueued, tally.served_from_queue, tally.reneged), (1, 1, 0));
    }

    #[test]
    fn multi_skill_seller_takes_oldest_across_kinds() {
        let mut q = ServiceQueues::new();
        q.enqueue(CustomerId(1), ServiceKind::HelpL1, t(1.0), None).unwrap();
        q.enqueue(CustomerId(2), ServiceKind::HelpL2, t(2.0), None).unwrap();
        let e = q.allocate_next(StaffRole::SellerL2).unwrap();
        assert_eq!((e.customer, e.kind), (CustomerId(1), ServiceKind::HelpL1));
        // level-1 sellers cannot take the remaining level-2 request
        assert!(q.allocate_next(StaffRole::SellerL1).is_none());
        assert_eq!(q.allocate_next(StaffRole::SellerL2).unwrap().customer, CustomerId(2));
    }

    #[test]
    fn cashier_ignores_help_queues() {
        let mut q = ServiceQueues::new();
        q.enqueue(CustomerId(1), ServiceKind::HelpL1, t(1.0), None).unwrap();
        q.enqueue(CustomerId(2), ServiceKind::HelpL2, t(1.0), None).unwrap();
        assert!(q.allocate_next(StaffRole::Cashier).is_none());
        assert!(q.allocate_next(StaffRole::Manager).is_none());
    }

    #[test]
    fn equal_join_times_break_by_ticket() {
        let mut q = ServiceQueues::new();
        q.enqueue(CustomerId(9), ServiceKind::Refund, t(4.0), None).unwrap();
        q.enqueue(CustomerId(8), ServiceKind::Till, t(4.0), None).unwrap();
        assert_eq!(q.allocate_next(StaffRole::Cashier).unwrap().customer, CustomerId(9));
    }

    /// Hand-executed oracle: a list of waiting customers, each serving
    /// instant picks the minimum join time among unexpired waiters.
    #[test]
    fn random_small_instances_match_fifo_oracle() {
        let mut rng = stream_rng(77, StreamId::Decisions);
        for _ in 0..500 {
            let mut q = ServiceQueues::new();
            let mut oracle: Vec<(f64, u32, f64)> = vec![]; // (join, id, deadline)
            let mut served_q = vec![];
            let mut served_o = vec![];
            let n = rng.gen_range(1..=6u32);
            let mut clock = 0.0;
            let mut next_id = 0;
            // interleave arrivals, serves and renege checks
            for _ in 0..(3 * n) {
                clock += f64::from(rng.gen_range(0..3u32));
                // renege whatever has expired
                let mut expired: Vec<u32> = oracle.iter().filter(|e| e.2 < clock).map(|e| e.1).collect();
                expired.sort_unstable();
                for id in expired {
                    oracle.retain(|e| e.1 != id);
                    assert!(q.renege(CustomerId(id)).is_some());
                }
                match rng.gen_range(0..3u32) {
                    0 | 1 if next_id < n => {
                        let deadline = clock + f64::from(rng.gen_range(0..5u32));
                        q.enqueue(CustomerId(next_id), ServiceKind::Till, t(clock), Some(t(deadline)))
                            .unwrap();
                        oracle.push((clock, next_id, deadline));
                        next_id += 1;
                    }
                    _ => {
                        // up to two cashiers free up
                        for _ in 0..rng.gen_range(1..=2u32) {
                            if let Some(e) = q.allocate_next(StaffRole::Cashier) {
                                served_q.push(e.customer.0);
                            }
                            if let Some(pos) = (0..oracle.len()).min_by(|&a, &b| {
                                oracle[a].0.total_cmp(&oracle[b].0).then(oracle[a].1.cmp(&oracle[b].1))
                            }) {
                                served_o.push(oracle.remove(pos).1);
                            }
                        }
                    }
                }
            }
            assert_eq!(served_q, served_o);
        }
    }

    #[test]
    fn tallies_balance_after_mixed_outcomes() {
        let mut q = ServiceQueues::new();
        for i in 0..10 {
            q.enqueue(CustomerId(i), ServiceKind::HelpL2, t(f64::from(i)), None).unwrap();
        }
        q.renege(CustomerId(3));
        q.flush(CustomerId(4));
        while q.allocate_next(StaffRole::SellerL2).is_some() {}
        let tally = q.tally(ServiceKind::HelpL2);
        assert!(tally.balanced());
        assert_eq!((tally.served_from_queue, tally.reneged, tally.flushed), (8, 1, 1));
        assert_eq!(q.total_waiting(), 0);
    }
}
