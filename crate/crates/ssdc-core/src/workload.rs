//! Degradable service catalog, task instances and resource-limit policies.
//!
//! Each service exposes a ladder of feature levels; level 0 is always "off"
//! with zero demand and zero utility. Stripping features means walking down
//! the ladder. Limit policies cover the cross product of
//! {intermittent, quota, supply} x {energy, communication, memory, computation}.

use crate::ids::{NodeId, ServiceId, TaskId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("service {id}: {reason}")]
    InvalidService { id: ServiceId, reason: String },
    #[error("service {0}: level {1} out of range")]
    LevelOutOfRange(ServiceId, usize),
    #[error("quota policy: {0}")]
    InvalidPolicy(String),
    #[error("usage history does not cover the policy window")]
    ShortHistory,
}

/// Demand vector over the four modeled resources.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceVec {
    pub cpu_mips: f64,
    pub gpu_mflops: f64,
    pub mem_mb: f64,
    pub bandwidth_mbit: f64,
}

impl ResourceVec {
    pub const ZERO: Self = Self {
        cpu_mips: 0.0,
        gpu_mflops: 0.0,
        mem_mb: 0.0,
        bandwidth_mbit: 0.0,
    };

    pub fn new(cpu_mips: f64, gpu_mflops: f64, mem_mb: f64, bandwidth_mbit: f64) -> Self {
        Self {
            cpu_mips,
            gpu_mflops,
            mem_mb,
            bandwidth_mbit,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            cpu_mips: self.cpu_mips + other.cpu_mips,
            gpu_mflops: self.gpu_mflops + other.gpu_mflops,
            mem_mb: self.mem_mb + other.mem_mb,
            bandwidth_mbit: self.bandwidth_mbit + other.bandwidth_mbit,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            cpu_mips: self.cpu_mips * k,
            gpu_mflops: self.gpu_mflops * k,
            mem_mb: self.mem_mb * k,
            bandwidth_mbit: self.bandwidth_mbit * k,
        }
    }

    /// Componentwise `self <= other`, with a tiny slack so that budgets equal
    /// to a demand count as fitting.
    pub fn fits_within(&self, other: &Self) -> bool {
        const EPS: f64 = 1e-9;
        self.cpu_mips <= other.cpu_mips + EPS
            && self.gpu_mflops <= other.gpu_mflops + EPS
            && self.mem_mb <= other.mem_mb + EPS
            && self.bandwidth_mbit <= other.bandwidth_mbit + EPS
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    pub fn non_negative(&self) -> bool {
        self.cpu_mips >= 0.0
            && self.gpu_mflops >= 0.0
            && self.mem_mb >= 0.0
            && self.bandwidth_mbit >= 0.0
    }
}

/// One rung of a service's feature ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLevel {
    pub level: usize,
    pub demand: ResourceVec,
    pub power_overhead_w: f64,
    pub utility: f64,
}

impl FeatureLevel {
    pub fn off() -> Self {
        Self {
            level: 0,
            demand: ResourceVec::ZERO,
            power_overhead_w: 0.0,
            utility: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    Mta,
    FileHosting,
    Wiki,
    AiInference,
    HpcBatch,
}

/// A degradable service. `priority` 1 is the most important.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub id: ServiceId,
    pub kind: ServiceKind,
    pub priority: u32,
    /// Ladder of levels; index 0 is the "off" level.
    pub levels: Vec<FeatureLevel>,
    /// Viability floor: the service counts as served at `level >= min_level`.
    pub min_level: usize,
    pub smartphone_eligible: bool,
    pub replication: u32,
    pub interruptible: bool,
    /// May keep running in the peer-to-peer degraded mode.
    #[serde(default)]
    pub peer_eligible: bool,
    /// Optional reporting target for availability, in [0, 1].
    #[serde(default)]
    pub availability_target: Option<f64>,
}

impl Service {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let fail = |reason: String| {
            Err(WorkloadError::InvalidService {
                id: self.id.clone(),
                reason,
            })
        };
        if self.levels.is_empty() {
            return fail("at least the off level is required".into());
        }
        let zero = &self.levels[0];
        if zero.level != 0 || !zero.demand.is_zero() || zero.utility != 0.0 {
            return fail("level 0 must have zero demand and zero utility".into());
        }
        for (i, l) in self.levels.iter().enumerate() {
            if l.level != i {
                return fail(format!(
                    "level field {} does not match position {i}",
                    l.level
                ));
            }
            if !l.demand.non_negative() || l.power_overhead_w < 0.0 || l.utility < 0.0 {
                return fail(format!("level {i} has negative demand, power or utility"));
            }
        }
        for pair in self.levels.windows(2) {
            if !pair[0].demand.fits_within(&pair[1].demand)
                || pair[0].utility > pair[1].utility
                || pair[0].power_overhead_w > pair[1].power_overhead_w + 1e-9
            {
                return fail("demands and utility must be non-decreasing with level".into());
            }
        }
        if self.min_level >= self.levels.len() {
            return fail(format!(
                "min_level {} exceeds max level {}",
                self.min_level,
                self.levels.len() - 1
            ));
        }
        if self.replication < 1 {
            return fail("replication must be at least 1".into());
        }
        if self.kind == ServiceKind::HpcBatch && !self.interruptible {
            return fail("batch computing services must be interruptible".into());
        }
        Ok(())
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Whether a replica at `level` needs a GPU.
    pub fn requires_gpu_at(&self, level: usize) -> bool {
        self.levels
            .get(level)
            .is_some_and(|l| l.demand.gpu_mflops > 0.0)
    }
}

/// One replica of a service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: TaskId,
    pub service: ServiceId,
    pub level: usize,
    pub node: Option<NodeId>,
    pub requires_gpu: bool,
}

/// Total demand of a service at `level`: per-replica demand and power
/// overhead, both multiplied by the replication factor.
pub fn demand_at(service: &Service, level: usize) -> Result<(ResourceVec, f64), WorkloadError> {
    let l = service
        .levels
        .get(level)
        .ok_or_else(|| WorkloadError::LevelOutOfRange(service.id.clone(), level))?;
    let r = f64::from(service.replication);
    Ok((l.demand.scale(r), l.power_overhead_w * r))
}

/// Highest level whose total demand fits the budget componentwise.
/// Level 0 always fits.
pub fn strip_to_budget(service: &Service, budget: &ResourceVec) -> usize {
    let mut best = 0;
    for level in 0..=service.max_level() {
        let (demand, _) = demand_at(service, level).expect("level in range");
        if demand.fits_within(budget) {
            best = level;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotaMode {
    Intermittent,
    Quota,
    Supply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitedResource {
    Energy,
    Communication,
    Memory,
    Computation,
}

/// A limit policy: exactly one (mode, resource) pair with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaPolicy {
    pub mode: QuotaMode,
    pub resource: LimitedResource,
    /// Sliding window length in steps (quota mode).
    #[serde(default)]
    pub window_steps: u64,
    /// Usage cap over the window (quota mode).
    #[serde(default)]
    pub cap: f64,
    /// Allowed intervals `[start, end)` in steps (intermittent mode).
    #[serde(default)]
    pub schedule: Vec<(u64, u64)>,
}

impl QuotaPolicy {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.cap < 0.0 {
            return Err(WorkloadError::InvalidPolicy(
                "cap must be non-negative".into(),
            ));
        }
        match self.mode {
            QuotaMode::Quota if self.window_steps == 0 => Err(WorkloadError::InvalidPolicy(
                "quota mode needs a positive window".into(),
            )),
            QuotaMode::Intermittent if self.schedule.iter().any(|(s, e)| e <= s) => Err(
                WorkloadError::InvalidPolicy("schedule intervals must be non-empty".into()),
            ),
            _ => Ok(()),
        }
    }

    fn in_schedule(&self, t: u64) -> bool {
        self.schedule.iter().any(|&(s, e)| t >= s && t < e)
    }
}

/// Inputs for a quota decision at step `t`.
#[derive(Debug, Clone, Copy)]
pub struct QuotaContext<'a> {
    /// Per-step usage of the limited resource, indexed by step, up to `t`.
    pub usage: &'a [f64],
    /// Usage the caller intends to incur this step.
    pub requested: f64,
    /// Instantaneous supply of the resource (supply mode).
    pub supply: f64,
    /// Instantaneous demand for the resource (supply mode).
    pub demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuotaDecision {
    Allow,
    Throttle(f64),
    Deny,
}

impl QuotaDecision {
    /// Multiplier on the requested usage implied by the decision.
    pub fn factor(&self) -> f64 {
        match self {
            QuotaDecision::Allow => 1.0,
            QuotaDecision::Throttle(f) => *f,
            QuotaDecision::Deny => 0.0,
        }
    }
}

/// Evaluates a policy at step `t`.
///
/// Quota mode never lets the window total exceed the cap: when the remaining
/// allowance is smaller than the request it throttles to exactly the
/// allowance, and denies once the allowance is gone.
pub fn enforce_quota(
    policy: &QuotaPolicy,
    ctx: &QuotaContext,
    t: u64,
) -> Result<QuotaDecision, WorkloadError> {
    match policy.mode {
        QuotaMode::Intermittent => Ok(if policy.in_schedule(t) {
            QuotaDecision::Allow
        } else {
            QuotaDecision::Deny
        }),
        QuotaMode::Quota => {
            let t = t as usize;
            if ctx.usage.len() < t {
                return Err(WorkloadError::ShortHistory);
            }
            let start = t.saturating_sub(policy.window_steps as usize);
            let used: f64 = ctx.usage[start..t].iter().sum();
            let allowance = policy.cap - used;
            if allowance <= 1e-12 {
                Ok(QuotaDecision::Deny)
            } else if ctx.requested <= allowance {
                Ok(QuotaDecision::Allow)
            } else {
                Ok(QuotaDecision::Throttle(allowance / ctx.requested))
            }
        }
        QuotaMode::Supply => {
            if ctx.demand <= 0.0 {
                return Ok(QuotaDecision::Allow);
            }
            let ratio = ctx.supply / ctx.demand;
            Ok(if ratio >= 1.0 {
                QuotaDecision::Allow
            } else if ratio <= 0.0 {
                QuotaDecision::Deny
            } else {
                QuotaDecision::Throttle(ratio)
            })
        }
    }
}
