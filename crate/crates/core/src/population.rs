//! Customer typology, likelihood adjustment, duration sampling, footfall
//! and the finite customer pool.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Customer, CustomerId, CustomerState};
use crate::engine::{Calendar, SimTime, DAY_NAMES, MINUTES_PER_HOUR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopulationError {
    #[error("invalid triangular spec (min {min}, mode {mode}, max {max}): need 0 <= min <= mode <= max")]
    InvalidTriangular { min: f64, mode: f64, max: f64 },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("customer mix must sum to 1, got {0}")]
    MixSum(f64),
    #[error("customer mix proportion for {0} is negative or not finite")]
    MixEntry(CustomerType),
    #[error("pool size must be positive")]
    EmptyPool,
    #[error("customer {0} is not leaving the store")]
    NotExiting(CustomerId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodClass {
    Low,
    Moderate,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerType {
    ShoppingEnthusiast,
    SolutionDemander,
    ServiceSeeker,
    DisinterestedShopper,
    InternetShopper,
}

impl CustomerType {
    pub const ALL: [CustomerType; 5] = [
        CustomerType::ShoppingEnthusiast,
        CustomerType::SolutionDemander,
        CustomerType::ServiceSeeker,
        CustomerType::DisinterestedShopper,
        CustomerType::InternetShopper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CustomerType::ShoppingEnthusiast => "shopping_enthusiast",
            CustomerType::SolutionDemander => "solution_demander",
            CustomerType::ServiceSeeker => "service_seeker",
            CustomerType::DisinterestedShopper => "disinterested_shopper",
            CustomerType::InternetShopper => "internet_shopper",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn profile(self) -> &'static CustomerTypeProfile {
        &PROFILES[self as usize]
    }
}

impl fmt::Display for CustomerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Likelihood of each decision for one customer type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CustomerTypeProfile {
    pub kind: CustomerType,
    pub buy: LikelihoodClass,
    pub wait: LikelihoodClass,
    pub ask_help: LikelihoodClass,
    pub ask_refund: LikelihoodClass,
}

use LikelihoodClass::{High, Low, Moderate};

pub const PROFILES: [CustomerTypeProfile; 5] = [
    CustomerTypeProfile {
        kind: CustomerType::ShoppingEnthusiast,
        buy: High,
        wait: Moderate,
        ask_help: Moderate,
        ask_refund: Low,
    },
    CustomerTypeProfile {
        kind: CustomerType::SolutionDemander,
        buy: High,
        wait: Low,
        ask_help: Low,
        ask_refund: Low,
    },
    CustomerTypeProfile {
        kind: CustomerType::ServiceSeeker,
        buy: Moderate,
        wait: High,
        ask_help: High,
        ask_refund: Low,
    },
    CustomerTypeProfile {
        kind: CustomerType::DisinterestedShopper,
        buy: Low,
        wait: Low,
        ask_help: Low,
        ask_refund: High,
    },
    CustomerTypeProfile {
        kind: CustomerType::InternetShopper,
        buy: Low,
        wait: High,
        ask_help: High,
        ask_refund: Low,
    },
];

/// How Low/High likelihoods are derived from the Moderate (base) value.
///
/// `shift` is the fraction of the distance toward the relevant bound:
/// High moves `shift` of the way up to the upper bound, Low moves `shift` of
/// the way down to the lower bound. The default of 0.5 is the midpoint rule.
/// Base probabilities of exactly 0 or 1 are left unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodRule {
    pub shift: f64,
}

impl Default for LikelihoodRule {
    fn default() -> Self {
        LikelihoodRule { shift: 0.5 }
    }
}

impl LikelihoodRule {
    pub fn adjust_probability(&self, base: f64, class: LikelihoodClass) -> Result<f64, PopulationError> {
        if !(0.0..=1.0).contains(&base) {
            return Err(PopulationError::ProbabilityOutOfRange(base));
        }
        // an impossible or certain action stays so for every type
        if base == 0.0 || base == 1.0 {
            return Ok(base);
        }
        Ok(match class {
            Moderate => base,
            High => base + (1.0 - base) * self.shift,
            Low => base - base * self.shift,
        })
    }

    pub fn adjust_delay(&self, spec: TriangularSpec, class: LikelihoodClass) -> TriangularSpec {
        let mode = match class {
            Moderate => spec.mode,
            High => spec.mode + (spec.max - spec.mode) * self.shift,
            Low => spec.mode - (spec.mode - spec.min) * self.shift,
        };
        TriangularSpec { mode, ..spec }
    }
}

/// Midpoint-rule probability adjustment.
pub fn adjust_probability(base: f64, class: LikelihoodClass) -> Result<f64, PopulationError> {
    LikelihoodRule::default().adjust_probability(base, class)
}

/// Midpoint-rule adjustment of a triangular mode; bounds are kept.
pub fn adjust_delay(spec: TriangularSpec, class: LikelihoodClass) -> TriangularSpec {
    LikelihoodRule::default().adjust_delay(spec, class)
}

/// Triangular distribution over minutes (or pounds, for refund amounts).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangularSpec {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl TriangularSpec {
    pub fn new(min: f64, mode: f64, max: f64) -> Result<Self, PopulationError> {
        let spec = TriangularSpec { min, mode, max };
        spec.validate()?;
        Ok(spec)
    }

    pub const fn point(value: f64) -> Self {
        TriangularSpec { min: value, mode: value, max: value }
    }

    pub fn validate(&self) -> Result<(), PopulationError> {
        let TriangularSpec { min, mode, max } = *self;
        let ok = [min, mode, max].iter().all(|v| v.is_finite()) && 0.0 <= min && min <= mode && mode <= max;
        if ok {
            Ok(())
        } else {
            Err(PopulationError::InvalidTriangular { min, mode, max })
        }
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.mode + self.max) / 3.0
    }

    /// Inverse-CDF transform of a uniform `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let TriangularSpec { min, mode, max } = *self;
        let width = max - min;
        if width <= 0.0 {
            return min;
        }
        let split = (mode - min) / width;
        let x = if u < split {
            min + (u * width * (mode - min)).sqrt()
        } else {
            max - ((1.0 - u) * width * (max - mode)).sqrt()
        };
        x.clamp(min, max)
    }
}

pub fn sample_triangular<R: Rng + ?Sized>(spec: &TriangularSpec, rng: &mut R) -> f64 {
    spec.quantile(rng.gen::<f64>())
}

/// Exponential draw with the given mean.
pub fn sample_exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], so the log is finite
    -(1.0 - rng.gen::<f64>()).ln() * mean
}

/// Expected arrivals per hour, by weekday (Monday first) and hour of day.
#[derive(Clone, Debug, PartialEq)]
pub struct FootfallTable {
    pub rate: [[f64; 24]; 7],
}

impl FootfallTable {
    pub fn zeros() -> Self {
        FootfallTable { rate: [[0.0; 24]; 7] }
    }

    /// `rate` per hour in every hour that overlaps the calendar's open
    /// interval; zero elsewhere.
    pub fn uniform(calendar: &Calendar, rate: f64) -> Self {
        let mut table = Self::zeros();
        for (day, row) in table.rate.iter_mut().enumerate() {
            if let Some(h) = calendar.hours(day) {
                for (hour, cell) in row.iter_mut().enumerate() {
                    if hour_overlaps(hour, h.open, h.close) {
                        *cell = rate;
                    }
                }
            }
        }
        table
    }

    pub fn rate(&self, weekday: usize, hour: usize) -> f64 {
        self.rate[weekday][hour]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.rate.iter_mut().flatten().for_each(|r| *r *= factor);
        out
    }

    /// Field paths of cells that are negative, non-finite, or positive
    /// outside the opening hours.
    pub fn problems(&self, calendar: &Calendar) -> Vec<(String, String)> {
        let mut out = vec![];
        for (day, row) in self.rate.iter().enumerate() {
            let hours = calendar.hours(day);
            for (hour, &r) in row.iter().enumerate() {
                let path = format!("footfall.{}[{}]", DAY_NAMES[day], hour);
                if !r.is_finite() || r < 0.0 {
                    out.push((path, format!("rate {r} must be a non-negative number")));
                } else if r > 0.0 && !hours.is_some_and(|h| hour_overlaps(hour, h.open, h.close)) {
                    out.push((path, format!("rate {r} is positive while the store is closed")));
                }
            }
        }
        out
    }
}

fn hour_overlaps(hour: usize, open: f64, close: f64) -> bool {
    let start = hour as f64 * MINUTES_PER_HOUR;
    start < close && start + MINUTES_PER_HOUR > open
}

/// Gap to the next arrival under the hour's rate, or `None` when the rate is
/// zero.
pub fn next_arrival_gap<R: Rng + ?Sized>(
    weekday: usize,
    hour: usize,
    table: &FootfallTable,
    rng: &mut R,
) -> Option<f64> {
    let lambda = table.rate(weekday, hour);
    if lambda > 0.0 {
        Some(sample_exponential(MINUTES_PER_HOUR / lambda, rng))
    } else {
        None
    }
}

/// Proportion of the pool per customer type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CustomerMix(pub BTreeMap<CustomerType, f64>);

impl CustomerMix {
    pub fn even() -> Self {
        CustomerMix(CustomerType::ALL.iter().map(|&t| (t, 0.2)).collect())
    }

    pub fn only(kind: CustomerType) -> Self {
        CustomerMix(BTreeMap::from([(kind, 1.0)]))
    }

    pub fn from_pairs(pairs: &[(CustomerType, f64)]) -> Self {
        CustomerMix(pairs.iter().copied().collect())
    }

    pub fn share(&self, kind: CustomerType) -> f64 {
        self.0.get(&kind).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), PopulationError> {
        for (&kind, &p) in &self.0 {
            if !p.is_finite() || p < 0.0 {
                return Err(PopulationError::MixEntry(kind));
            }
        }
        // an empty sum is -0.0
        let total: f64 = self.0.values().sum::<f64>() + 0.0;
        if (total - 1.0).abs() > 1e-9 {
            return Err(PopulationError::MixSum(total));
        }
        Ok(())
    }

    /// Largest-remainder apportionment of `size` agents.
    pub fn apportion(&self, size: usize) -> Vec<(CustomerType, usize)> {
        let quotas: Vec<(CustomerType, f64)> =
            CustomerType::ALL.iter().map(|&t| (t, self.share(t) * size as f64)).collect();
        let mut counts: Vec<(CustomerType, usize)> =
            quotas.iter().map(|&(t, q)| (t, q.floor() as usize)).collect();
        let assigned: usize = counts.iter().map(|c| c.1).sum();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a].1 - quotas[a].1.floor();
            let rb = quotas[b].1 - quotas[b].1.floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().take(size.saturating_sub(assigned)) {
            counts[i].1 += 1;
        }
        counts
    }
}

/// Fixed population of customers. Members are either in the store, resting,
/// or available for release.
#[derive(Clone, Debug)]
pub struct CustomerPool {
    customers: Vec<Customer>,
    available: Vec<CustomerId>,
    resting: BinaryHeap<Reverse<(SimTime, CustomerId)>>,
    in_store: usize,
}

impl CustomerPool {
    pub fn new(size: usize, mix: &CustomerMix) -> Result<Self, PopulationError> {
        if size == 0 {
            return Err(PopulationError::EmptyPool);
        }
        mix.validate()?;
        let mut customers = Vec::with_capacity(size);
        for (kind, count) in mix.apportion(size) {
            for _ in 0..count {
                let id = CustomerId(customers.len() as u32);
                customers.push(Customer::new(id, kind));
            }
        }
        let available = customers.iter().map(|c| c.id).collect();
        Ok(CustomerPool { customers, available, resting: BinaryHeap::new(), in_store: 0 })
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    pub fn in_store(&self) -> usize {
        self.in_store
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn get(&self, id: CustomerId) -> &Customer {
        &self.customers[id.index()]
    }

    pub fn get_mut(&mut self, id: CustomerId) -> &mut Customer {
        &mut self.customers[id.index()]
    }

    fn wake(&mut self, now: SimTime) {
        while let Some(&Reverse((until, id))) = self.resting.peek() {
            if until > now {
                break;
            }
            self.resting.pop();
            self.available.push(id);
        }
    }

    /// Number of members that could be released at `now`.
    pub fn eligible(&mut self, now: SimTime) -> usize {
        self.wake(now);
        self.available.len()
    }

    /// Picks a uniformly random eligible member and moves it to `Entering`.
    pub fn release_from_pool<R: Rng + ?Sized>(&mut self, now: SimTime, rng: &mut R) -> Option<CustomerId> {
        self.wake(now);
        if self.available.is_empty() {
            return None;
        }
        let slot = rng.gen_range(0..self.available.len());
        let id = self.available.swap_remove(slot);
        let c = &mut self.customers[id.index()];
        debug_assert_eq!(c.state, CustomerState::InPool);
        c.state = CustomerState::Entering;
        c.visits += 1;
        self.in_store += 1;
        Some(id)
    }

    /// Returns a leaving customer to the pool. The satisfaction index and
    /// purchase history are kept.
    pub fn return_to_pool(
        &mut self,
        id: CustomerId,
        now: SimTime,
        resting_minutes: f64,
    ) -> Result<(), PopulationError> {
        let c = &mut self.customers[id.index()];
        if c.state != CustomerState::Exiting {
            return Err(PopulationError::NotExiting(id));
        }
        c.state = CustomerState::InPool;
        c.resting_until = now.plus(resting_minutes.max(0.0));
        c.goal = None;
        c.refund = None;
        self.in_store -= 1;
        self.resting.push(Reverse((c.resting_until, id)));
        Ok(())
    }
}
