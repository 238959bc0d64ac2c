//! Service level index bookkeeping, satisfaction classes, and the
//! end-of-run KPI record with its conservation audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Customer, ServiceKind, StaffMember, StaffRole};
use crate::service::KindTally;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SatisfactionEvent {
    PurchaseCompleted,
    HelpReceived,
    RefundGrantedByCashier,
    RefundViaManager,
    RenegedFromQueue,
    LeftAtCloseUnserved,
    LeftWithoutBuying,
}

impl SatisfactionEvent {
    pub const ALL: [SatisfactionEvent; 7] = [
        SatisfactionEvent::PurchaseCompleted,
        SatisfactionEvent::HelpReceived,
        SatisfactionEvent::RefundGrantedByCashier,
        SatisfactionEvent::RefundViaManager,
        SatisfactionEvent::RenegedFromQueue,
        SatisfactionEvent::LeftAtCloseUnserved,
        SatisfactionEvent::LeftWithoutBuying,
    ];
}

/// Integer index change per satisfaction event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatisfactionWeights {
    pub purchase_completed: i64,
    pub help_received: i64,
    pub refund_granted_by_cashier: i64,
    pub refund_via_manager: i64,
    pub reneged_from_queue: i64,
    pub left_at_close_unserved: i64,
    pub left_without_buying: i64,
}

impl Default for SatisfactionWeights {
    fn default() -> Self {
        SatisfactionWeights {
            purchase_completed: 2,
            help_received: 1,
            refund_granted_by_cashier: 1,
            refund_via_manager: 0,
            reneged_from_queue: -2,
            left_at_close_unserved: -1,
            left_without_buying: 0,
        }
    }
}

impl SatisfactionWeights {
    pub fn zero() -> Self {
        SatisfactionWeights {
            purchase_completed: 0,
            help_received: 0,
            refund_granted_by_cashier: 0,
            refund_via_manager: 0,
            reneged_from_queue: 0,
            left_at_close_unserved: 0,
            left_without_buying: 0,
        }
    }

    pub fn weight(&self, event: SatisfactionEvent) -> i64 {
        match event {
            SatisfactionEvent::PurchaseCompleted => self.purchase_completed,
            SatisfactionEvent::HelpReceived => self.help_received,
            SatisfactionEvent::RefundGrantedByCashier => self.refund_granted_by_cashier,
            SatisfactionEvent::RefundViaManager => self.refund_via_manager,
            SatisfactionEvent::RenegedFromQueue => self.reneged_from_queue,
            SatisfactionEvent::LeftAtCloseUnserved => self.left_at_close_unserved,
            SatisfactionEvent::LeftWithoutBuying => self.left_without_buying,
        }
    }
}

/// Applies the event's weight to the customer's index and returns the new
/// value.
pub fn record(customer: &mut Customer, event: SatisfactionEvent, weights: &SatisfactionWeights) -> i64 {
    customer.satisfaction += weights.weight(event);
    customer.satisfaction
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SatisfactionClass {
    Unsatisfied,
    Neutral,
    Satisfied,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SatisfactionBin {
    VeryDissatisfied,
    Dissatisfied,
    Neutral,
    Satisfied,
    VerySatisfied,
}

pub fn classify3(index: i64) -> SatisfactionClass {
    match index {
        i if i > 0 => SatisfactionClass::Satisfied,
        0 => SatisfactionClass::Neutral,
        _ => SatisfactionClass::Unsatisfied,
    }
}

/// Five bins: below −5, −5..=−2, −1..=1, 2..=5, above 5.
pub fn classify5(index: i64) -> SatisfactionBin {
    match index {
        i if i < -5 => SatisfactionBin::VeryDissatisfied,
        -5..=-2 => SatisfactionBin::Dissatisfied,
        -1..=1 => SatisfactionBin::Neutral,
        2..=5 => SatisfactionBin::Satisfied,
        _ => SatisfactionBin::VerySatisfied,
    }
}

pub fn classify(index: i64) -> (SatisfactionClass, SatisfactionBin) {
    (classify3(index), classify5(index))
}

/// Counters accumulated while a run executes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Counters {
    pub entries: u64,
    pub exits: u64,
    pub transactions: u64,
    pub refunds: u64,
    pub refunds_via_manager: u64,
    pub lost_footfall: u64,
    /// Refund decisions taken for amounts at or below the threshold.
    pub routed_sub_threshold: u64,
    pub routed_sub_threshold_to_manager: u64,
    pub routed_over_threshold: u64,
    pub open_days: u64,
    /// Latest exit after closing time, over all days, in minutes.
    pub max_minutes_to_empty: f64,
    /// Customers queued at a till or for a refund when the store closed.
    pub committed_at_close: u64,
    /// Neutral (index = 0) customers at the end of each week.
    pub weekly_neutral: Vec<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RoleUtilization {
    pub cashier: f64,
    pub seller_l1: f64,
    pub seller_l2: f64,
    pub manager: f64,
}

impl RoleUtilization {
    pub fn get(&self, role: StaffRole) -> f64 {
        match role {
            StaffRole::Cashier => self.cashier,
            StaffRole::SellerL1 => self.seller_l1,
            StaffRole::SellerL2 => self.seller_l2,
            StaffRole::Manager => self.manager,
        }
    }

    fn set(&mut self, role: StaffRole, value: f64) {
        match role {
            StaffRole::Cashier => self.cashier = value,
            StaffRole::SellerL1 => self.seller_l1 = value,
            StaffRole::SellerL2 => self.seller_l2 = value,
            StaffRole::Manager => self.manager = value,
        }
    }
}

/// Outputs of one replication.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub pool_size: u64,
    pub entries: u64,
    pub exits: u64,
    pub transactions: u64,
    pub refunds: u64,
    pub refunds_via_manager: u64,
    pub lost_footfall: u64,
    pub satisfied: u64,
    pub neutral: u64,
    pub unsatisfied: u64,
    pub very_dissatisfied: u64,
    pub dissatisfied: u64,
    pub neutral_5: u64,
    pub satisfied_5: u64,
    pub very_satisfied: u64,
    pub overall_satisfaction: i64,
    pub refund_seekers: u64,
    /// Mean index among customers who ever asked for a refund.
    pub refund_satisfaction: f64,
    pub utilization: RoleUtilization,
    pub routed_sub_threshold: u64,
    pub routed_sub_threshold_to_manager: u64,
    pub routed_over_threshold: u64,
    pub queues: [KindTally; 5],
    pub weekly_neutral: Vec<u64>,
    pub open_days: u64,
    pub max_minutes_to_empty: f64,
    pub committed_at_close: u64,
}

/// Names of the scalar KPIs, in CSV column order.
pub const KPI_NAMES: [&str; 32] = [
    "entries",
    "exits",
    "transactions",
    "refunds",
    "refunds_via_manager",
    "lost_footfall",
    "satisfied",
    "neutral",
    "unsatisfied",
    "very_dissatisfied",
    "dissatisfied",
    "neutral_5",
    "satisfied_5",
    "very_satisfied",
    "overall_satisfaction",
    "refund_seekers",
    "refund_satisfaction",
    "util_cashier",
    "util_seller_l1",
    "util_seller_l2",
    "util_manager",
    "manager_refund_fraction",
    "reneges_help_l1",
    "reneges_help_l2",
    "reneges_till",
    "reneges_refund",
    "enqueued_help",
    "enqueued_till",
    "enqueued_refund",
    "flushed_at_close",
    "neutral_week1",
    "max_minutes_to_empty",
];

impl MetricsRecord {
    pub fn tally(&self, kind: ServiceKind) -> &KindTally {
        &self.queues[kind.index()]
    }

    /// Share of sub-threshold refund decisions that needed a manager.
    pub fn manager_refund_fraction(&self) -> f64 {
        if self.routed_sub_threshold == 0 {
            0.0
        } else {
            self.routed_sub_threshold_to_manager as f64 / self.routed_sub_threshold as f64
        }
    }

    /// Scalar KPIs aligned with [`KPI_NAMES`].
    pub fn kpi_values(&self) -> [f64; 32] {
        let q = |k: ServiceKind| self.tally(k);
        let u = &self.utilization;
        [
            self.entries as f64,
            self.exits as f64,
            self.transactions as f64,
            self.refunds as f64,
            self.refunds_via_manager as f64,
            self.lost_footfall as f64,
            self.satisfied as f64,
            self.neutral as f64,
            self.unsatisfied as f64,
            self.very_dissatisfied as f64,
            self.dissatisfied as f64,
            self.neutral_5 as f64,
            self.satisfied_5 as f64,
            self.very_satisfied as f64,
            self.overall_satisfaction as f64,
            self.refund_seekers as f64,
            self.refund_satisfaction,
            u.cashier,
            u.seller_l1,
            u.seller_l2,
            u.manager,
            self.manager_refund_fraction(),
            q(ServiceKind::HelpL1).reneged as f64,
            q(ServiceKind::HelpL2).reneged as f64,
            q(ServiceKind::Till).reneged as f64,
            q(ServiceKind::Refund).reneged as f64,
            (q(ServiceKind::HelpL1).enqueued + q(ServiceKind::HelpL2).enqueued) as f64,
            q(ServiceKind::Till).enqueued as f64,
            q(ServiceKind::Refund).enqueued as f64,
            self.queues.iter().map(|t| t.flushed).sum::<u64>() as f64,
            self.weekly_neutral.first().copied().unwrap_or(0) as f64,
            self.max_minutes_to_empty,
        ]
    }

    pub fn kpi(&self, name: &str) -> Option<f64> {
        let i = KPI_NAMES.iter().position(|&n| n == name)?;
        Some(self.kpi_values()[i])
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("run failed its audit: {}", .violations.join("; "))]
pub struct AuditError {
    pub violations: Vec<String>,
}

/// Everything [`finalize`] needs from a finished run.
pub struct RunSnapshot<'a> {
    pub customers: &'a [Customer],
    pub staff: &'a [StaffMember],
    pub tallies: [KindTally; 5],
    pub counters: &'a Counters,
    pub open_minutes: f64,
    pub in_store: usize,
    pub still_queued: usize,
}

/// Builds the record and checks every conservation identity. All failures
/// are collected, not just the first.
pub fn finalize(run: RunSnapshot<'_>) -> Result<MetricsRecord, AuditError> {
    let mut violations = vec![];
    let c = run.counters;

    let mut class3 = [0u64; 3];
    let mut class5 = [0u64; 5];
    let mut overall = 0i64;
    let (mut refund_seekers, mut refund_index_sum) = (0u64, 0i64);
    for customer in run.customers {
        let (c3, c5) = classify(customer.satisfaction);
        class3[c3 as usize] += 1;
        class5[c5 as usize] += 1;
        overall += customer.satisfaction;
        if customer.sought_refund {
            refund_seekers += 1;
            refund_index_sum += customer.satisfaction;
        }
        let (sign3, sign5) = (c3 as i32 - 1, (c5 as i32 - 2).signum());
        if sign5 != 0 && sign5 != sign3 {
            violations.push(format!("customer {} has inconsistent classes", customer.id));
        }
    }

    let mut utilization = RoleUtilization::default();
    for role in StaffRole::ALL {
        let members: Vec<&StaffMember> = run.staff.iter().filter(|s| s.role == role).collect();
        for s in &members {
            if s.is_busy() {
                violations.push(format!("staff {} still busy at end of run", s.id));
            }
            if s.busy_minutes > run.open_minutes + 1e-6 {
                violations.push(format!(
                    "staff {} busy {} min exceeds open time {}",
                    s.id, s.busy_minutes, run.open_minutes
                ));
            }
        }
        let value = if members.is_empty() || run.open_minutes <= 0.0 {
            0.0
        } else {
            members.iter().map(|s| s.busy_minutes).sum::<f64>() / (members.len() as f64 * run.open_minutes)
        };
        if !(0.0..=1.0 + 1e-9).contains(&value) {
            violations.push(format!("{} utilization {value} outside [0, 1]", role.name()));
        }
        utilization.set(role, value.min(1.0));
    }

    let pool_size = run.customers.len() as u64;
    if c.entries != c.exits {
        violations.push(format!("entries {} != exits {}", c.entries, c.exits));
    }
    if run.in_store != 0 {
        violations.push(format!("{} customers still in the department", run.in_store));
    }
    if run.still_queued != 0 {
        violations.push(format!("{} customers still queued", run.still_queued));
    }
    for kind in ServiceKind::ALL {
        let t = run.tallies[kind.index()];
        if !t.balanced() {
            violations.push(format!(
                "{} queue: enqueued {} != served {} + reneged {} + flushed {}",
                kind.name(),
                t.enqueued,
                t.served_from_queue,
                t.reneged,
                t.flushed
            ));
        }
    }
    if class3.iter().sum::<u64>() != pool_size {
        violations.push("satisfaction classes do not cover the pool".into());
    }
    if c.transactions > c.entries {
        violations.push(format!("transactions {} exceed entries {}", c.transactions, c.entries));
    }
    let visits: u64 = run.customers.iter().map(|c| u64::from(c.visits)).sum();
    if visits != c.entries {
        violations.push(format!("pool visit count {visits} != entries {}", c.entries));
    }

    if !violations.is_empty() {
        return Err(AuditError { violations });
    }

    Ok(MetricsRecord {
        pool_size,
        entries: c.entries,
        exits: c.exits,
        transactions: c.transactions,
        refunds: c.refunds,
        refunds_via_manager: c.refunds_via_manager,
        lost_footfall: c.lost_footfall,
        satisfied: class3[2],
        neutral: class3[1],
        unsatisfied: class3[0],
        very_dissatisfied: class5[0],
        dissatisfied: class5[1],
        neutral_5: class5[2],
        satisfied_5: class5[3],
        very_satisfied: class5[4],
        overall_satisfaction: overall,
        refund_seekers,
        refund_satisfaction: if refund_seekers == 0 {
            0.0
        } else {
            refund_index_sum as f64 / refund_seekers as f64
        },
        utilization,
        routed_sub_threshold: c.routed_sub_threshold,
        routed_sub_threshold_to_manager: c.routed_sub_threshold_to_manager,
        routed_over_threshold: c.routed_over_threshold,
        queues: run.tallies,
        weekly_neutral: c.weekly_neutral.clone(),
        open_days: c.open_days,
        max_minutes_to_empty: c.max_minutes_to_empty,
        committed_at_close: c.committed_at_close,
    })
}
