//! Scenario files: schema, (de)serialization in TOML or JSON, validation
//! and the bundled presets.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Calendar, OpenHours, DAY_NAMES};
use crate::metrics::SatisfactionWeights;
use crate::population::{CustomerMix, FootfallTable, LikelihoodRule, TriangularSpec};

/// One validation failure, addressed by its field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {format} scenario: {message}")]
    Parse { format: &'static str, message: String },
    #[error("invalid scenario:\n  {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<Issue>),
    #[error("unknown preset {0:?} (expected atv-like or ww-like)")]
    UnknownPreset(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DayHours {
    /// "HH:MM"
    pub open: String,
    pub close: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monday: Option<DayHours>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuesday: Option<DayHours>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wednesday: Option<DayHours>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thursday: Option<DayHours>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friday: Option<DayHours>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturday: Option<DayHours>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sunday: Option<DayHours>,
}

impl CalendarConfig {
    fn days(&self) -> [&Option<DayHours>; 7] {
        [
            &self.monday,
            &self.tuesday,
            &self.wednesday,
            &self.thursday,
            &self.friday,
            &self.saturday,
            &self.sunday,
        ]
    }
}

impl Default for CalendarConfig {
    fn default() -> Self {
        let h = |open: &str, close: &str| Some(DayHours { open: open.into(), close: close.into() });
        CalendarConfig {
            monday: h("09:00", "20:00"),
            tuesday: h("09:00", "20:00"),
            wednesday: h("09:00", "20:00"),
            thursday: h("09:00", "20:00"),
            friday: h("09:00", "20:00"),
            saturday: h("09:00", "20:00"),
            sunday: h("11:00", "17:00"),
        }
    }
}

/// Hourly arrival rates; 24 entries per day, hour 0 first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FootfallConfig {
    pub monday: Vec<f64>,
    pub tuesday: Vec<f64>,
    pub wednesday: Vec<f64>,
    pub thursday: Vec<f64>,
    pub friday: Vec<f64>,
    pub saturday: Vec<f64>,
    pub sunday: Vec<f64>,
}

impl FootfallConfig {
    fn days(&self) -> [&Vec<f64>; 7] {
        [
            &self.monday,
            &self.tuesday,
            &self.wednesday,
            &self.thursday,
            &self.friday,
            &self.saturday,
            &self.sunday,
        ]
    }

    fn days_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.monday,
            &mut self.tuesday,
            &mut self.wednesday,
            &mut self.thursday,
            &mut self.friday,
            &mut self.saturday,
            &mut self.sunday,
        ]
    }

    pub fn from_table(table: &FootfallTable) -> Self {
        let mut out = FootfallConfig {
            monday: vec![],
            tuesday: vec![],
            wednesday: vec![],
            thursday: vec![],
            friday: vec![],
            saturday: vec![],
            sunday: vec![],
        };
        for (dst, row) in out.days_mut().into_iter().zip(table.rate.iter()) {
            *dst = row.to_vec();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub size: usize,
    pub mix: CustomerMix,
    /// Minutes spent out of the department between visits.
    pub resting: TriangularSpec,
}

/// Moderate-likelihood base probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probabilities {
    pub conversion_rate: f64,
    pub ask_help: f64,
    pub ask_refund: f64,
    /// Chance that a refunded customer goes on to shop.
    pub regoal: f64,
    /// Share of help requests that need a level-2 seller.
    pub level2_help: f64,
}

/// Triangular duration specs, in minutes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Durations {
    pub browse: TriangularSpec,
    pub help_l1: TriangularSpec,
    pub help_l2: TriangularSpec,
    pub till: TriangularSpec,
    pub refund: TriangularSpec,
    pub manager_auth: TriangularSpec,
    pub patience: TriangularSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefundPolicy {
    /// Refund value in pounds.
    pub amount: TriangularSpec,
    pub threshold: f64,
    /// Probability that a cashier settles a sub-threshold refund alone.
    pub empowerment: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Staffing {
    pub cashiers: u32,
    pub sellers_l1: u32,
    pub sellers_l2: u32,
    pub managers: u32,
}

impl Staffing {
    /// `cashiers` on the tills and the rest of `total` on the floor, level-2
    /// sellers taking the rounded-down half.
    pub fn split(total: u32, cashiers: u32, managers: u32) -> Self {
        let sellers = total.saturating_sub(cashiers);
        Staffing { cashiers, sellers_l1: sellers - sellers / 2, sellers_l2: sellers / 2, managers }
    }
}

fn default_weeks() -> u32 {
    10
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_weeks")]
    pub lifespan_weeks: u32,
    /// Multiplies every footfall rate.
    #[serde(default = "default_scale")]
    pub footfall_scale: f64,
    #[serde(default)]
    pub calendar: CalendarConfig,
    pub footfall: FootfallConfig,
    pub population: PopulationConfig,
    pub probabilities: Probabilities,
    pub durations: Durations,
    pub refunds: RefundPolicy,
    pub staffing: Staffing,
    #[serde(default)]
    pub weights: SatisfactionWeights,
    #[serde(default)]
    pub likelihood_rule: LikelihoodRule,
}

const ATV_LIKE: &str = include_str!("../../scenarios/atv-like.toml");
const WW_LIKE: &str = include_str!("../../scenarios/ww-like.toml");

pub const PRESETS: [&str; 2] = ["atv-like", "ww-like"];

fn parse_clock(s: &str) -> Option<f64> {
    let (h, m) = s.split_once(':')?;
    let (h, m): (u32, u32) = (h.trim().parse().ok()?, m.trim().parse().ok()?);
    (m < 60 && h * 60 + m <= 24 * 60).then(|| f64::from(h * 60 + m))
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let text = match name {
            "atv-like" => ATV_LIKE,
            "ww-like" => WW_LIKE,
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        };
        Self::from_toml_str(text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { format: "TOML", message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| ConfigError::Parse { format: "JSON", message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a `.toml` or `.json` file; other extensions are sniffed.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            Some("toml") => Self::from_toml_str(&text),
            _ if text.trim_start().starts_with('{') => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes to TOML")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes to JSON")
    }

    /// The calendar; call only on a validated config.
    pub fn calendar(&self) -> Calendar {
        let mut days = [None; 7];
        for (slot, day) in days.iter_mut().zip(self.calendar.days()) {
            *slot = day
                .as_ref()
                .and_then(|h| Some(OpenHours::new(parse_clock(&h.open)?, parse_clock(&h.close)?)));
        }
        Calendar { days, lifespan_weeks: self.lifespan_weeks }
    }

    /// Footfall rates after `footfall_scale`.
    pub fn footfall_table(&self) -> FootfallTable {
        let mut table = FootfallTable::zeros();
        for (row, src) in table.rate.iter_mut().zip(self.footfall.days()) {
            for (cell, &r) in row.iter_mut().zip(src.iter()) {
                *cell = r * self.footfall_scale;
            }
        }
        table
    }

    pub fn set_footfall(&mut self, table: &FootfallTable) {
        self.footfall = FootfallConfig::from_table(table);
        self.footfall_scale = 1.0;
    }

    /// Every invariant violation, not just the first.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = vec![];
        let mut push = |path: &str, message: String| out.push(Issue { path: path.to_string(), message });

        if self.lifespan_weeks == 0 {
            push("lifespan_weeks", "must be at least 1".into());
        }
        if !(self.footfall_scale.is_finite() && self.footfall_scale >= 0.0) {
            push("footfall_scale", "must be a non-negative number".into());
        }

        let mut calendar_ok = true;
        for (name, day) in DAY_NAMES.iter().zip(self.calendar.days()) {
            if let Some(h) = day {
                match (parse_clock(&h.open), parse_clock(&h.close)) {
                    (Some(o), Some(c)) if o < c => {}
                    (Some(_), Some(_)) => {
                        calendar_ok = false;
                        push(&format!("calendar.{name}"), "opening must precede closing".into());
                    }
                    _ => {
                        calendar_ok = false;
                        push(&format!("calendar.{name}"), "times must be HH:MM within 00:00..24:00".into());
                    }
                }
            }
        }

        let mut footfall_ok = true;
        for (name, row) in DAY_NAMES.iter().zip(self.footfall.days()) {
            if row.len() != 24 {
                footfall_ok = false;
                push(&format!("footfall.{name}"), format!("expected 24 hourly rates, got {}", row.len()));
            }
        }
        if calendar_ok && footfall_ok {
            for (path, message) in self.footfall_table().problems(&self.calendar()) {
                push(&path, message);
            }
        }

        if self.population.size == 0 {
            push("population.size", "must be positive".into());
        }
        if let Err(e) = self.population.mix.validate() {
            push("population.mix", e.to_string());
        }

        let p = &self.probabilities;
        for (name, value) in [
            ("conversion_rate", p.conversion_rate),
            ("ask_help", p.ask_help),
            ("ask_refund", p.ask_refund),
            ("regoal", p.regoal),
            ("level2_help", p.level2_help),
        ] {
            if !(0.0..=1.0).contains(&value) {
                push(&format!("probabilities.{name}"), format!("{value} outside [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.refunds.empowerment) {
            push("refunds.empowerment", format!("{} outside [0, 1]", self.refunds.empowerment));
        }
        if !(self.refunds.threshold.is_finite() && self.refunds.threshold > 0.0) {
            push("refunds.threshold", "must be positive".into());
        }

        let d = &self.durations;
        for (path, spec) in [
            ("durations.browse", &d.browse),
            ("durations.help_l1", &d.help_l1),
            ("durations.help_l2", &d.help_l2),
            ("durations.till", &d.till),
            ("durations.refund", &d.refund),
            ("durations.manager_auth", &d.manager_auth),
            ("durations.patience", &d.patience),
            ("population.resting", &self.population.resting),
            ("refunds.amount", &self.refunds.amount),
        ] {
            if let Err(e) = spec.validate() {
                push(path, e.to_string());
            }
        }
        if self.refunds.amount.max <= 0.0 {
            push("refunds.amount", "refund amounts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.likelihood_rule.shift) {
            push("likelihood_rule.shift", "must lie in [0, 1]".into());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }
}
