//! One department over its whole lifespan: arrivals, the customer
//! statechart, staff assignment and closing-time behaviour.

use std::fmt;

use crate::agents::{
    after_refund, can_serve, choose_goal, decide_purchase, refund_route, wants_help, AfterRefund,
    CustomerGoal, CustomerId, CustomerState, ModelError, PurchaseDecision, RefundRequest, RefundRoute,
    ServiceKind, StaffId, StaffMember, StaffRole, Trigger,
};
use crate::engine::{Calendar, Fired, RngStreams, Scheduler, SimTime, MINUTES_PER_HOUR, MINUTES_PER_WEEK};
use crate::harness::ScenarioConfig;
use crate::metrics::{
    self, classify3, Counters, MetricsRecord, RunSnapshot, SatisfactionClass, SatisfactionEvent,
};
use crate::population::{next_arrival_gap, sample_triangular, CustomerPool, FootfallTable, TriangularSpec};
use crate::service::ServiceQueues;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreEvent {
    /// Draw the next arrival from the current hour's rate.
    ArrivalCheck,
    Arrival,
    Closing {
        day: u32,
    },
    CloseAudit {
        day: u32,
    },
    WeekEnd {
        week: u32,
    },
    BrowseDone {
        customer: CustomerId,
        token: u64,
    },
    ServiceDone {
        staff: StaffId,
    },
    Renege {
        customer: CustomerId,
        token: u64,
    },
}

impl fmt::Display for StoreEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreEvent::ArrivalCheck => write!(f, "arrival-check"),
            StoreEvent::Arrival => write!(f, "arrival"),
            StoreEvent::Closing { day } => write!(f, "closing d{day}"),
            StoreEvent::CloseAudit { day } => write!(f, "close-audit d{day}"),
            StoreEvent::WeekEnd { week } => write!(f, "week-end w{week}"),
            StoreEvent::BrowseDone { customer, token } => write!(f, "browse-done {customer}#{token}"),
            StoreEvent::ServiceDone { staff } => write!(f, "service-done {staff}"),
            StoreEvent::Renege { customer, token } => write!(f, "renege {customer}#{token}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LogEntry {
    Dispatch {
        time: SimTime,
        seq: u64,
        event: StoreEvent,
    },
    Satisfaction {
        time: SimTime,
        customer: CustomerId,
        event: SatisfactionEvent,
        weight: i64,
    },
    Service {
        staff: StaffId,
        role: StaffRole,
        kind: ServiceKind,
        customer: CustomerId,
        start: SimTime,
        end: SimTime,
        open_minutes: f64,
    },
    ManagerLeg {
        time: SimTime,
        customer: CustomerId,
        amount: f64,
    },
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEntry::Dispatch { time, seq, event } => write!(f, "{time} #{seq} {event}"),
            LogEntry::Satisfaction { time, customer, event, weight } => {
                write!(f, "{time} sat {customer} {event:?} {weight:+}")
            }
            LogEntry::Service { staff, role, kind, customer, start, end, open_minutes } => write!(
                f,
                "{end} svc {staff} {} {} {customer} from {start} open {open_minutes:.4}",
                role.name(),
                kind.name()
            ),
            LogEntry::ManagerLeg { time, customer, amount } => {
                write!(f, "{time} manager-leg {customer} {amount:.2}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub record_log: bool,
    /// Check after every event that no idle staff member could serve a
    /// waiting customer.
    pub audit_work_conservation: bool,
    /// The department must be empty this many minutes after closing.
    pub close_window: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { record_log: false, audit_work_conservation: false, close_window: 15.0 }
    }
}

pub struct Department<'a> {
    config: &'a ScenarioConfig,
    options: RunOptions,
    calendar: Calendar,
    footfall: FootfallTable,
    sched: Scheduler<StoreEvent>,
    rng: RngStreams,
    pool: CustomerPool,
    staff: Vec<StaffMember>,
    queues: ServiceQueues,
    counters: Counters,
    log: Vec<LogEntry>,
    /// Close time of the most recent open day.
    last_close: SimTime,
}

impl<'a> Department<'a> {
    /// `config` must already be validated.
    pub fn new(config: &'a ScenarioConfig, seed: u64, options: RunOptions) -> Result<Self, ModelError> {
        let calendar = config.calendar();
        let pool = CustomerPool::new(config.population.size, &config.population.mix)?;
        let s = config.staffing;
        let mut staff = vec![];
        for (role, count) in [
            (StaffRole::Cashier, s.cashiers),
            (StaffRole::SellerL1, s.sellers_l1),
            (StaffRole::SellerL2, s.sellers_l2),
            (StaffRole::Manager, s.managers),
        ] {
            for _ in 0..count {
                staff.push(StaffMember::new(StaffId(staff.len() as u32), role));
            }
        }
        let mut dept = Department {
            config,
            options,
            footfall: config.footfall_table(),
            calendar,
            sched: Scheduler::new(),
            rng: RngStreams::new(seed),
            pool,
            staff,
            queues: ServiceQueues::new(),
            counters: Counters::default(),
            log: vec![],
            last_close: SimTime::ZERO,
        };
        dept.schedule_calendar()?;
        Ok(dept)
    }

    fn schedule_calendar(&mut self) -> Result<(), ModelError> {
        self.sched.schedule(SimTime::ZERO, StoreEvent::ArrivalCheck)?;
        for day in 0..self.calendar.number_of_days() {
            if let Some((_, close)) = self.calendar.open_interval(day) {
                self.sched.schedule(close, StoreEvent::Closing { day })?;
            }
        }
        for week in 1..=self.calendar.lifespan_weeks {
            let at = SimTime::from_minutes(f64::from(week) * MINUTES_PER_WEEK);
            self.sched.schedule(at, StoreEvent::WeekEnd { week })?;
        }
        Ok(())
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn pool(&self) -> &CustomerPool {
        &self.pool
    }

    pub fn staff(&self) -> &[StaffMember] {
        &self.staff
    }

    pub fn queues(&self) -> &ServiceQueues {
        &self.queues
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn calendar(&self) -> &Calendar {
        &self.calendar
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<LogEntry> {
        std::mem::take(&mut self.log)
    }

    /// Runs to the end of the lifespan.
    pub fn run(&mut self) -> Result<(), ModelError> {
        let end = self.calendar.end();
        self.run_until(end)
    }

    pub fn run_until(&mut self, end: SimTime) -> Result<(), ModelError> {
        while let Some(fired) = self.sched.pop_due(end) {
            self.dispatch(fired)?;
            if self.options.audit_work_conservation {
                self.check_work_conservation()?;
            }
        }
        self.sched.advance_to(end)?;
        Ok(())
    }

    pub fn finalize(&self) -> Result<MetricsRecord, metrics::AuditError> {
        metrics::finalize(RunSnapshot {
            customers: self.pool.customers(),
            staff: &self.staff,
            tallies: self.queues.tallies(),
            counters: &self.counters,
            open_minutes: self.calendar.total_open_minutes(),
            in_store: self.pool.in_store(),
            still_queued: self.queues.total_waiting(),
        })
    }

    fn store_open(&self) -> bool {
        self.calendar.is_open(self.now()).unwrap_or(false)
    }

    fn dispatch(&mut self, fired: Fired<StoreEvent>) -> Result<(), ModelError> {
        if self.options.record_log {
            self.log.push(LogEntry::Dispatch { time: fired.time, seq: fired.seq, event: fired.event });
        }
        match fired.event {
            StoreEvent::ArrivalCheck => self.schedule_next_arrival(),
            StoreEvent::Arrival => {
                self.on_arrival()?;
                self.schedule_next_arrival()
            }
            StoreEvent::Closing { day } => self.on_store_closing(day),
            StoreEvent::CloseAudit { day } => self.on_close_audit(day),
            StoreEvent::WeekEnd { .. } => {
                let neutral = self
                    .pool
                    .customers()
                    .iter()
                    .filter(|c| classify3(c.satisfaction) == SatisfactionClass::Neutral)
                    .count();
                self.counters.weekly_neutral.push(neutral as u64);
                Ok(())
            }
            StoreEvent::BrowseDone { customer, token } => {
                if self.pool.get(customer).token == token {
                    self.on_browse_done(customer)?;
                }
                Ok(())
            }
            StoreEvent::ServiceDone { staff } => self.on_service_done(staff),
            StoreEvent::Renege { customer, token } => {
                if self.pool.get(customer).token == token {
                    self.on_renege(customer)?;
                }
                Ok(())
            }
        }
    }

    /// Piecewise-constant Poisson arrivals: draw within the current hour,
    /// and if the draw overshoots the hour, restart at the boundary.
    fn schedule_next_arrival(&mut self) -> Result<(), ModelError> {
        let now = self.now();
        let hour_end = ((now.minutes() / MINUTES_PER_HOUR).floor() + 1.0) * MINUTES_PER_HOUR;
        let gap = next_arrival_gap(now.weekday(), now.hour_of_day(), &self.footfall, &mut self.rng.arrivals);
        match gap {
            Some(g) if now.minutes() + g < hour_end => {
                self.sched.schedule(now.plus(g), StoreEvent::Arrival)?;
            }
            _ => {
                let at = SimTime::from_minutes(hour_end);
                if at < self.calendar.end() {
                    self.sched.schedule(at, StoreEvent::ArrivalCheck)?;
                }
            }
        }
        Ok(())
    }

    fn on_arrival(&mut self) -> Result<(), ModelError> {
        if !self.store_open() {
            return Ok(());
        }
        let now = self.now();
        match self.pool.release_from_pool(now, &mut self.rng.pool_selection) {
            Some(id) => {
                self.counters.entries += 1;
                self.on_enter(id)
            }
            None => {
                self.counters.lost_footfall += 1;
                Ok(())
            }
        }
    }

    fn record(&mut self, id: CustomerId, event: SatisfactionEvent) {
        let weights = &self.config.weights;
        metrics::record(self.pool.get_mut(id), event, weights);
        if self.options.record_log {
            self.log.push(LogEntry::Satisfaction {
                time: self.sched.now(),
                customer: id,
                event,
                weight: weights.weight(event),
            });
        }
    }

    fn apply(&mut self, id: CustomerId, trigger: Trigger) -> Result<CustomerState, ModelError> {
        self.pool.get_mut(id).apply(trigger)
    }

    fn on_enter(&mut self, id: CustomerId) -> Result<(), ModelError> {
        let probs = &self.config.probabilities;
        let rule = &self.config.likelihood_rule;
        let customer = self.pool.get(id);
        let profile = customer.kind.profile();
        let goal = choose_goal(
            customer.purchases,
            probs.ask_refund,
            profile.ask_refund,
            rule,
            &mut self.rng.decisions,
        )?;
        self.pool.get_mut(id).set_goal(goal)?;
        match goal {
            CustomerGoal::Refund => {
                let amount = sample_triangular(&self.config.refunds.amount, &mut self.rng.refund_amounts);
                let c = self.pool.get_mut(id);
                c.sought_refund = true;
                c.refund = Some(RefundRequest { amount });
                self.seek_service(id, ServiceKind::Refund)
            }
            CustomerGoal::Purchase => {
                self.apply(id, Trigger::Browse)?;
                self.start_browsing(id)
            }
        }
    }

    fn start_browsing(&mut self, id: CustomerId) -> Result<(), ModelError> {
        if !self.store_open() {
            return self.leave_at_close(id);
        }
        let spec = self
            .config
            .likelihood_rule
            .adjust_delay(self.config.durations.browse, crate::population::LikelihoodClass::Moderate);
        let delay = sample_triangular(&spec, &mut self.rng.delays);
        let token = self.pool.get_mut(id).invalidate_timers();
        self.sched.schedule_in(delay, StoreEvent::BrowseDone { customer: id, token })?;
        Ok(())
    }

    fn on_browse_done(&mut self, id: CustomerId) -> Result<(), ModelError> {
        let probs = &self.config.probabilities;
        let class = self.pool.get(id).kind.profile().ask_help;
        if wants_help(probs.ask_help, class, &self.config.likelihood_rule, &mut self.rng.decisions)? {
            self.apply(id, Trigger::AskHelp)?;
            let kind = if rand::Rng::gen::<f64>(&mut self.rng.decisions) < probs.level2_help {
                ServiceKind::HelpL2
            } else {
                ServiceKind::HelpL1
            };
            self.seek_service(id, kind)
        } else {
            self.apply(id, Trigger::SkipHelp)?;
            self.decide(id)
        }
    }

    fn decide(&mut self, id: CustomerId) -> Result<(), ModelError> {
        if !self.store_open() {
            return self.leave_at_close(id);
        }
        let class = self.pool.get(id).kind.profile().buy;
        let decision = decide_purchase(
            self.config.probabilities.conversion_rate,
            class,
            &self.config.likelihood_rule,
            &mut self.rng.decisions,
        )?;
        match decision {
            PurchaseDecision::Buy => self.seek_service(id, ServiceKind::Till),
            PurchaseDecision::Leave => {
                self.record(id, SatisfactionEvent::LeftWithoutBuying);
                self.apply(id, Trigger::Leave)?;
                self.exit(id)
            }
        }
    }

    fn idle_staff_for(&self, kind: ServiceKind) -> Option<usize> {
        kind.preferred_roles()
            .iter()
            .find_map(|&role| self.staff.iter().position(|s| s.role == role && !s.is_busy()))
    }

    /// Try for direct service, otherwise queue with a patience deadline.
    fn seek_service(&mut self, id: CustomerId, kind: ServiceKind) -> Result<(), ModelError> {
        let now = self.now();
        let manager_leg = kind == ServiceKind::ManagerAuth;
        if let Some(idx) = self.idle_staff_for(kind) {
            if !manager_leg {
                self.apply(id, Trigger::ServeNow)?;
            }
            self.queues.note_immediate(kind);
            return self.start_service(idx, id, kind);
        }
        if !manager_leg {
            self.apply(id, Trigger::Queue)?;
        }
        let token = self.pool.get_mut(id).invalidate_timers();
        let deadline = if manager_leg {
            None
        } else {
            let wait = self.pool.get(id).kind.profile().wait;
            let spec = self.config.likelihood_rule.adjust_delay(self.config.durations.patience, wait);
            Some(now.plus(sample_triangular(&spec, &mut self.rng.delays)))
        };
        self.queues.enqueue(id, kind, now, deadline)?;
        if let Some(at) = deadline {
            self.sched.schedule(at, StoreEvent::Renege { customer: id, token })?;
        }
        Ok(())
    }

    fn service_spec(&self, kind: ServiceKind) -> TriangularSpec {
        let d = &self.config.durations;
        match kind {
            ServiceKind::HelpL1 => d.help_l1,
            ServiceKind::HelpL2 => d.help_l2,
            ServiceKind::Till => d.till,
            ServiceKind::Refund => d.refund,
            ServiceKind::ManagerAuth => d.manager_auth,
        }
    }

    fn start_service(
        &mut self,
        staff_idx: usize,
        id: CustomerId,
        kind: ServiceKind,
    ) -> Result<(), ModelError> {
        let now = self.now();
        self.staff[staff_idx].assign(id, kind, now)?;
        let duration = sample_triangular(&self.service_spec(kind), &mut self.rng.delays);
        let staff = self.staff[staff_idx].id;
        self.sched.schedule_in(duration, StoreEvent::ServiceDone { staff })?;
        Ok(())
    }

    fn on_service_done(&mut self, staff: StaffId) -> Result<(), ModelError> {
        let idx = staff.0 as usize;
        let now = self.now();
        let start =
            self.staff[idx].current.map(|a| a.start).expect("service completion for an idle staff member");
        let open_minutes = self.calendar.open_overlap(start, now);
        let done = self.staff[idx].release(open_minutes).expect("assignment present");
        if self.options.record_log {
            self.log.push(LogEntry::Service {
                staff,
                role: self.staff[idx].role,
                kind: done.kind,
                customer: done.customer,
                start,
                end: now,
                open_minutes,
            });
        }
        let id = done.customer;
        match done.kind {
            ServiceKind::HelpL1 | ServiceKind::HelpL2 => {
                self.record(id, SatisfactionEvent::HelpReceived);
                self.apply(id, Trigger::ServiceDone)?;
                self.decide(id)?;
            }
            ServiceKind::Till => {
                self.counters.transactions += 1;
                self.pool.get_mut(id).purchases += 1;
                self.record(id, SatisfactionEvent::PurchaseCompleted);
                self.apply(id, Trigger::Depart)?;
                self.exit(id)?;
            }
            ServiceKind::Refund => {
                let request = self.pool.get(id).refund.expect("refund customer carries a request");
                let policy = &self.config.refunds;
                let route =
                    refund_route(&request, policy.empowerment, policy.threshold, &mut self.rng.decisions);
                if request.amount > policy.threshold {
                    self.counters.routed_over_threshold += 1;
                } else {
                    self.counters.routed_sub_threshold += 1;
                    if route == RefundRoute::ManagerRequired {
                        self.counters.routed_sub_threshold_to_manager += 1;
                    }
                }
                match route {
                    RefundRoute::CashierHandles => self.grant_refund(id, false)?,
                    RefundRoute::ManagerRequired => {
                        if self.options.record_log {
                            self.log.push(LogEntry::ManagerLeg {
                                time: now,
                                customer: id,
                                amount: request.amount,
                            });
                        }
                        self.apply(id, Trigger::NeedManager)?;
                        self.seek_service(id, ServiceKind::ManagerAuth)?;
                    }
                }
            }
            ServiceKind::ManagerAuth => self.grant_refund(id, true)?,
        }
        self.allocate_next(idx)
    }

    fn grant_refund(&mut self, id: CustomerId, via_manager: bool) -> Result<(), ModelError> {
        self.counters.refunds += 1;
        if via_manager {
            self.counters.refunds_via_manager += 1;
            self.record(id, SatisfactionEvent::RefundViaManager);
        } else {
            self.record(id, SatisfactionEvent::RefundGrantedByCashier);
        }
        let next = after_refund(self.config.probabilities.regoal, &mut self.rng.decisions);
        let c = self.pool.get_mut(id);
        c.goal = match next {
            AfterRefund::Regoal => Some(CustomerGoal::Purchase),
            AfterRefund::Leave => None,
        };
        c.refund = None;
        c.purchases = c.purchases.saturating_sub(1);
        match next {
            AfterRefund::Regoal => {
                self.apply(id, Trigger::Regoal)?;
                self.start_browsing(id)
            }
            AfterRefund::Leave => {
                self.apply(id, Trigger::Depart)?;
                self.exit(id)
            }
        }
    }

    fn allocate_next(&mut self, staff_idx: usize) -> Result<(), ModelError> {
        if self.staff[staff_idx].is_busy() {
            return Ok(());
        }
        let role = self.staff[staff_idx].role;
        if let Some(entry) = self.queues.allocate_next(role) {
            let id = entry.customer;
            self.pool.get_mut(id).invalidate_timers();
            if entry.kind != ServiceKind::ManagerAuth {
                self.apply(id, Trigger::ServiceStart)?;
            }
            self.start_service(staff_idx, id, entry.kind)?;
        }
        Ok(())
    }

    fn on_renege(&mut self, id: CustomerId) -> Result<(), ModelError> {
        if self.queues.renege(id).is_none() {
            return Ok(());
        }
        self.pool.get_mut(id).invalidate_timers();
        self.record(id, SatisfactionEvent::RenegedFromQueue);
        self.apply(id, Trigger::Renege)?;
        self.exit(id)
    }

    fn leave_at_close(&mut self, id: CustomerId) -> Result<(), ModelError> {
        self.pool.get_mut(id).invalidate_timers();
        self.queues.flush(id);
        self.record(id, SatisfactionEvent::LeftAtCloseUnserved);
        self.apply(id, Trigger::StoreClosing)?;
        self.exit(id)
    }

    fn exit(&mut self, id: CustomerId) -> Result<(), ModelError> {
        let now = self.now();
        self.counters.exits += 1;
        if now > self.last_close && !self.store_open() {
            let late = now.minutes() - self.last_close.minutes();
            self.counters.max_minutes_to_empty = self.counters.max_minutes_to_empty.max(late);
        }
        let resting = sample_triangular(&self.config.population.resting, &mut self.rng.delays);
        self.pool.return_to_pool(id, now, resting)?;
        Ok(())
    }

    fn on_store_closing(&mut self, day: u32) -> Result<(), ModelError> {
        self.counters.open_days += 1;
        self.last_close = self.now();
        let leaving: Vec<CustomerId> =
            self.pool.customers().iter().filter(|c| c.state.exits_at_close()).map(|c| c.id).collect();
        self.counters.committed_at_close += self
            .pool
            .customers()
            .iter()
            .filter(|c| matches!(c.state, CustomerState::QueuedAtTill | CustomerState::QueuedForRefund))
            .count() as u64;
        for id in leaving {
            self.leave_at_close(id)?;
        }
        self.sched.schedule_in(self.options.close_window, StoreEvent::CloseAudit { day })?;
        Ok(())
    }

    fn on_close_audit(&mut self, day: u32) -> Result<(), ModelError> {
        let occupancy = self.pool.in_store();
        if occupancy > 0 {
            return Err(ModelError::NotEmptyAfterClose {
                day,
                occupancy,
                minutes: self.options.close_window,
            });
        }
        Ok(())
    }

    /// No idle staff member may be compatible with a waiting customer.
    pub fn check_work_conservation(&self) -> Result<(), ModelError> {
        for s in self.staff.iter().filter(|s| !s.is_busy()) {
            for kind in ServiceKind::ALL {
                if can_serve(s.role, kind) && !self.queues.queue(kind).is_empty() {
                    return Err(ModelError::IdleWhileWaiting { time: self.now(), role: s.role, kind });
                }
            }
        }
        Ok(())
    }
}
