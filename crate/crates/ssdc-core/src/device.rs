//! Static capabilities and dynamic state of salvaged nodes: power, thermal
//! behaviour, batteries and failures.
//!
//! Power follows a linear utilization model between idle and peak draw. A
//! node that is down draws nothing: it is off, not sleeping. Failures are
//! memoryless, sampled per step from the exponential MTBF.

use crate::ids::{NodeId, TaskId};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("node {0}: peak power must be positive")]
    ZeroPeakPower(NodeId),
    #[error("node {0} has no GPU")]
    NoGpu(NodeId),
    #[error("utilization {0} outside [0, 1]")]
    UtilizationOutOfRange(f64),
    #[error("invalid node spec {id}: {reason}")]
    InvalidSpec { id: NodeId, reason: String },
    #[error("inventory file: {0}")]
    BadInventory(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Desktop,
    Laptop,
    Server,
    Smartphone,
    SingleBoard,
}

impl NodeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "desktop" => Some(Self::Desktop),
            "laptop" => Some(Self::Laptop),
            "server" => Some(Self::Server),
            "smartphone" => Some(Self::Smartphone),
            "single_board" | "singleboard" => Some(Self::SingleBoard),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Desktop => "desktop",
            Self::Laptop => "laptop",
            Self::Server => "server",
            Self::Smartphone => "smartphone",
            Self::SingleBoard => "single_board",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpuSpec {
    pub gpu_mflops: f64,
    pub gpu_mem_mb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub capacity_wh: f64,
    pub max_charge_w: f64,
    pub max_discharge_w: f64,
}

/// Static description of a salvaged device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub kind: NodeKind,
    pub cpu_mips: f64,
    pub cpu_mflops: f64,
    pub gpu: Option<GpuSpec>,
    pub mem_mb: f64,
    pub bandwidth_mbit: f64,
    /// Network attachments. For smartphones this counts the USB-Ethernet path.
    pub nic_count: u32,
    pub idle_power_w: f64,
    pub peak_power_w: f64,
    pub battery: Option<BatterySpec>,
    pub thermal_threshold_c: f64,
    pub thermal_mass_j_per_c: f64,
    pub dissipation_w_per_c: f64,
    pub embodied_kgco2e: f64,
    pub first_life_years: f64,
    pub mtbf_hours: f64,
}

impl NodeSpec {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let fail = |reason: &str| {
            Err(DeviceError::InvalidSpec {
                id: self.id.clone(),
                reason: reason.to_owned(),
            })
        };
        if self.idle_power_w < 0.0 {
            return fail("idle power must be non-negative");
        }
        if self.peak_power_w < self.idle_power_w {
            return fail("peak power must be at least idle power");
        }
        if !(self.mtbf_hours > 0.0) {
            return fail("mtbf must be positive");
        }
        if self.kind == NodeKind::Smartphone && self.battery.is_none() {
            return fail("smartphones must have a battery");
        }
        if let Some(b) = &self.battery {
            if b.capacity_wh < 0.0 || b.max_charge_w < 0.0 || b.max_discharge_w < 0.0 {
                return fail("battery parameters must be non-negative");
            }
        }
        if self.cpu_mips < 0.0 || self.cpu_mflops < 0.0 || self.mem_mb < 0.0 {
            return fail("capacities must be non-negative");
        }
        if !(self.thermal_mass_j_per_c > 0.0) {
            return fail("thermal mass must be positive");
        }
        if self.dissipation_w_per_c < 0.0 {
            return fail("dissipation must be non-negative");
        }
        if self.first_life_years < 0.0 || self.embodied_kgco2e < 0.0 {
            return fail("lifecycle parameters must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownReason {
    Failed,
    Thermal,
    EnergyShed,
    Retired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Up,
    Down(DownReason),
}

impl NodeStatus {
    pub fn is_up(&self) -> bool {
        matches!(self, NodeStatus::Up)
    }
}

/// Per-resource utilization fractions, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Utilization {
    pub cpu: f64,
    pub gpu: f64,
    pub mem: f64,
    pub bandwidth: f64,
}

/// Dynamic condition of a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub status: NodeStatus,
    pub temperature_c: f64,
    /// Stored energy in Wh; zero when the node has no battery.
    pub battery_soc_wh: f64,
    pub utilization: Utilization,
    pub assigned: Vec<TaskId>,
}

impl NodeState {
    pub fn new(spec: &NodeSpec, ambient_c: f64) -> Self {
        Self {
            status: NodeStatus::Up,
            temperature_c: ambient_c,
            battery_soc_wh: spec.battery.map_or(0.0, |b| b.capacity_wh),
            utilization: Utilization::default(),
            assigned: Vec::new(),
        }
    }

    /// Takes the node down, clearing assignments (down nodes run nothing).
    pub fn set_down(&mut self, reason: DownReason) {
        self.status = NodeStatus::Down(reason);
        self.assigned.clear();
        self.utilization = Utilization::default();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComputeResource {
    Cpu,
    Gpu,
}

/// Computing power per unit energy. `mi_per_joule` is zero for the GPU
/// rating, which is expressed in FLOP throughput only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyRating {
    pub mi_per_joule: f64,
    pub mflop_per_joule: f64,
}

/// Ratio of computing power to energy consumed at peak draw. Numerically
/// equal to rate-per-watt since 1 W is 1 J/s.
pub fn efficiency(
    spec: &NodeSpec,
    resource: ComputeResource,
) -> Result<EfficiencyRating, DeviceError> {
    if !(spec.peak_power_w > 0.0) {
        return Err(DeviceError::ZeroPeakPower(spec.id.clone()));
    }
    match resource {
        ComputeResource::Cpu => Ok(EfficiencyRating {
            mi_per_joule: spec.cpu_mips / spec.peak_power_w,
            mflop_per_joule: spec.cpu_mflops / spec.peak_power_w,
        }),
        ComputeResource::Gpu => {
            let gpu = spec
                .gpu
                .as_ref()
                .ok_or_else(|| DeviceError::NoGpu(spec.id.clone()))?;
            Ok(EfficiencyRating {
                mi_per_joule: 0.0,
                mflop_per_joule: gpu.gpu_mflops / spec.peak_power_w,
            })
        }
    }
}

/// Linear power model: idle draw plus utilization times the idle-to-peak span.
pub fn power_draw(spec: &NodeSpec, utilization: f64) -> Result<f64, DeviceError> {
    if !(0.0..=1.0).contains(&utilization) {
        return Err(DeviceError::UtilizationOutOfRange(utilization));
    }
    Ok(spec.idle_power_w + utilization * (spec.peak_power_w - spec.idle_power_w))
}

/// Emitted when a thermal step pushes a node past its shutdown threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalShutdown {
    pub temperature_c: f64,
    pub threshold_c: f64,
}

/// One lumped-mass thermal step:
/// `T' = T + dt * (P - dissipation * (T - ambient)) / thermal_mass`.
///
/// If the node is up and the new temperature exceeds the threshold, the node
/// shuts itself down (smartphones in particular protect themselves) and the
/// shutdown is reported.
pub fn step_thermal(
    state: &mut NodeState,
    spec: &NodeSpec,
    drawn_power_w: f64,
    ambient_c: f64,
    dt_s: f64,
) -> Option<ThermalShutdown> {
    debug_assert!(dt_s > 0.0 && spec.thermal_mass_j_per_c > 0.0);
    let t = state.temperature_c;
    let flux = drawn_power_w - spec.dissipation_w_per_c * (t - ambient_c);
    state.temperature_c = t + dt_s * flux / spec.thermal_mass_j_per_c;
    if state.status.is_up() && state.temperature_c > spec.thermal_threshold_c {
        state.set_down(DownReason::Thermal);
        return Some(ThermalShutdown {
            temperature_c: state.temperature_c,
            threshold_c: spec.thermal_threshold_c,
        });
    }
    None
}

/// Probability of at least one failure in `dt_s` under the exponential model.
pub fn failure_probability(mtbf_hours: f64, dt_s: f64) -> f64 {
    1.0 - (-dt_s / (3600.0 * mtbf_hours)).exp()
}

/// Bernoulli failure draw. Always consumes exactly one value from the RNG so
/// the stream stays aligned regardless of the outcome.
pub fn sample_failure(spec: &NodeSpec, dt_s: f64, rng: &mut impl Rng) -> bool {
    let p = failure_probability(spec.mtbf_hours, dt_s);
    rng.gen::<f64>() < p
}

pub const INVENTORY_HEADER: &[&str] = &[
    "id",
    "kind",
    "cpu_mips",
    "cpu_mflops",
    "gpu_mflops",
    "gpu_mem_mb",
    "mem_mb",
    "bandwidth_mbit",
    "nic_count",
    "idle_power_w",
    "peak_power_w",
    "battery_capacity_wh",
    "battery_max_charge_w",
    "battery_max_discharge_w",
    "thermal_threshold_c",
    "thermal_mass_j_per_c",
    "dissipation_w_per_c",
    "embodied_kgco2e",
    "first_life_years",
    "mtbf_hours",
];

fn parse_opt(field: &str) -> Result<Option<f64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| format!("bad number {field:?}: {e}"))
}

fn parse_req(field: &str, name: &str) -> Result<f64, String> {
    field
        .parse::<f64>()
        .map_err(|e| format!("bad {name} {field:?}: {e}"))
}

/// Reads a node inventory in the documented column order
/// (see [`INVENTORY_HEADER`]). GPU and battery columns may be left empty.
/// Lines starting with `#` are comments.
pub fn read_inventory(reader: impl Read) -> Result<Vec<NodeSpec>, DeviceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut specs = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2; // header is line 1
        let record = record.map_err(|e| DeviceError::BadInventory(format!("line {row}: {e}")))?;
        if record.len() != INVENTORY_HEADER.len() {
            return Err(DeviceError::BadInventory(format!(
                "line {row}: expected {} columns, got {}",
                INVENTORY_HEADER.len(),
                record.len()
            )));
        }
        let bad = |e: String| DeviceError::BadInventory(format!("line {row}: {e}"));
        let kind = NodeKind::parse(&record[1])
            .ok_or_else(|| bad(format!("unknown kind {:?}", &record[1])))?;
        let gpu = match (
            parse_opt(&record[4]).map_err(bad)?,
            parse_opt(&record[5]).map_err(bad)?,
        ) {
            (Some(gpu_mflops), Some(gpu_mem_mb)) => Some(GpuSpec {
                gpu_mflops,
                gpu_mem_mb,
            }),
            (None, None) => None,
            _ => {
                return Err(bad(
                    "gpu_mflops and gpu_mem_mb must both be set or both empty".into(),
                ))
            }
        };
        let battery = match (
            parse_opt(&record[11]).map_err(bad)?,
            parse_opt(&record[12]).map_err(bad)?,
            parse_opt(&record[13]).map_err(bad)?,
        ) {
            (Some(capacity_wh), Some(max_charge_w), Some(max_discharge_w)) => Some(BatterySpec {
                capacity_wh,
                max_charge_w,
                max_discharge_w,
            }),
            (None, None, None) => None,
            _ => return Err(bad("battery columns must all be set or all empty".into())),
        };
        let spec = NodeSpec {
            id: NodeId::new(record[0].to_owned()),
            kind,
            cpu_mips: parse_req(&record[2], "cpu_mips").map_err(bad)?,
            cpu_mflops: parse_req(&record[3], "cpu_mflops").map_err(bad)?,
            gpu,
            mem_mb: parse_req(&record[6], "mem_mb").map_err(bad)?,
            bandwidth_mbit: parse_req(&record[7], "bandwidth_mbit").map_err(bad)?,
            nic_count: record[8]
                .parse::<u32>()
                .map_err(|e| bad(format!("bad nic_count: {e}")))?,
            idle_power_w: parse_req(&record[9], "idle_power_w").map_err(bad)?,
            peak_power_w: parse_req(&record[10], "peak_power_w").map_err(bad)?,
            battery,
            thermal_threshold_c: parse_req(&record[14], "thermal_threshold_c").map_err(bad)?,
            thermal_mass_j_per_c: parse_req(&record[15], "thermal_mass_j_per_c").map_err(bad)?,
            dissipation_w_per_c: parse_req(&record[16], "dissipation_w_per_c").map_err(bad)?,
            embodied_kgco2e: parse_req(&record[17], "embodied_kgco2e").map_err(bad)?,
            first_life_years: parse_req(&record[18], "first_life_years").map_err(bad)?,
            mtbf_hours: parse_req(&record[19], "mtbf_hours").map_err(bad)?,
        };
        spec.validate()?;
        specs.push(spec);
    }
    Ok(specs)
}

/// Writes an inventory in the documented column order.
pub fn write_inventory(specs: &[NodeSpec], writer: impl Write) -> Result<(), DeviceError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(INVENTORY_HEADER)
        .map_err(|e| DeviceError::BadInventory(e.to_string()))?;
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in specs {
        wtr.write_record(&[
            s.id.to_string(),
            s.kind.as_str().to_owned(),
            s.cpu_mips.to_string(),
            s.cpu_mflops.to_string(),
            fmt_opt(s.gpu.map(|g| g.gpu_mflops)),
            fmt_opt(s.gpu.map(|g| g.gpu_mem_mb)),
            s.mem_mb.to_string(),
            s.bandwidth_mbit.to_string(),
            s.nic_count.to_string(),
            s.idle_power_w.to_string(),
            s.peak_power_w.to_string(),
            fmt_opt(s.battery.map(|b| b.capacity_wh)),
            fmt_opt(s.battery.map(|b| b.max_charge_w)),
            fmt_opt(s.battery.map(|b| b.max_discharge_w)),
            s.thermal_threshold_c.to_string(),
            s.thermal_mass_j_per_c.to_string(),
            s.dissipation_w_per_c.to_string(),
            s.embodied_kgco2e.to_string(),
            s.first_life_years.to_string(),
            s.mtbf_hours.to_string(),
        ])
        .map_err(|e| DeviceError::BadInventory(e.to_string()))?;
    }
    wtr.flush()
        .map_err(|e| DeviceError::BadInventory(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(idle: f64, peak: f64) -> NodeSpec {
        NodeSpec {
            id: NodeId::new("n0"),
            kind: NodeKind::Desktop,
            cpu_mips: 2000.0,
            cpu_mflops: 1000.0,
            gpu: None,
            mem_mb: 4096.0,
            bandwidth_mbit: 1000.0,
            nic_count: 1,
            idle_power_w: idle,
            peak_power_w: peak,
            battery: None,
            thermal_threshold_c: 80.0,
            thermal_mass_j_per_c: 100.0,
            dissipation_w_per_c: 1.0,
            embodied_kgco2e: 300.0,
            first_life_years: 6.0,
            mtbf_hours: 30000.0,
        }
    }

    #[test]
    fn efficiency_simple_ratio() {
        let s = spec(10.0, 40.0);
        let e = efficiency(&s, ComputeResource::Cpu).unwrap();
        assert_eq!(e.mi_per_joule, 50.0);
        assert_eq!(e.mflop_per_joule, 25.0);
    }

    #[test]
    fn efficiency_gpu_requires_gpu() {
        let s = spec(10.0, 40.0);
        assert!(matches!(
            efficiency(&s, ComputeResource::Gpu),
            Err(DeviceError::NoGpu(_))
        ));
        let mut with_gpu = s;
        with_gpu.gpu = Some(GpuSpec {
            gpu_mflops: 8000.0,
            gpu_mem_mb: 512.0,
        });
        let e = efficiency(&with_gpu, ComputeResource::Gpu).unwrap();
        assert_eq!(e.mflop_per_joule, 200.0);
    }

    #[test]
    fn efficiency_rejects_zero_peak() {
        let s = spec(0.0, 0.0);
        assert!(matches!(
            efficiency(&s, ComputeResource::Cpu),
            Err(DeviceError::ZeroPeakPower(_))
        ));
    }

    #[test]
    fn power_draw_endpoints_and_midpoint() {
        let s = spec(20.0, 60.0);
        assert_eq!(power_draw(&s, 0.0).unwrap(), 20.0);
        assert_eq!(power_draw(&s, 1.0).unwrap(), 60.0);
        assert_eq!(power_draw(&s, 0.5).unwrap(), 40.0);
        assert!(power_draw(&s, 1.5).is_err());
        assert!(power_draw(&s, -0.1).is_err());
    }

    #[test]
    fn thermal_equilibrium_holds() {
        let s = spec(10.0, 40.0);
        let mut state = NodeState::new(&s, 25.0);
        state.temperature_c = 35.0;
        // Drawn power exactly balances dissipation toward ambient.
        let balanced = s.dissipation_w_per_c * (35.0 - 25.0);
        let event = step_thermal(&mut state, &s, balanced, 25.0, 60.0);
        assert!(event.is_none());
        assert_relative_eq!(state.temperature_c, 35.0, max_relative = 1e-12);
    }

    #[test]
    fn thermal_no_power_at_ambient_is_stationary() {
        let s = spec(10.0, 40.0);
        let mut state = NodeState::new(&s, 22.0);
        let event = step_thermal(&mut state, &s, 0.0, 22.0, 60.0);
        assert!(event.is_none());
        assert_eq!(state.temperature_c, 22.0);
    }

    #[test]
    fn thermal_trip_near_threshold() {
        // T=39.9, threshold 40, ambient 25, dissipation 1 W/C, mass 100 J/C,
        // 500 W for one second: T' = 39.9 + (500 - 14.9)/100 = 44.751.
        let mut s = spec(10.0, 40.0);
        s.thermal_threshold_c = 40.0;
        let mut state = NodeState::new(&s, 25.0);
        state.temperature_c = 39.9;
        state.assigned.push(TaskId::new("t0"));
        let event = step_thermal(&mut state, &s, 500.0, 25.0, 1.0).unwrap();
        assert_relative_eq!(event.temperature_c, 44.751, max_relative = 1e-12);
        assert_eq!(state.status, NodeStatus::Down(DownReason::Thermal));
        assert!(state.assigned.is_empty());
    }

    #[test]
    fn thermal_converges_to_fixed_point() {
        let s = spec(10.0, 40.0);
        let mut state = NodeState::new(&s, 20.0);
        let power = 30.0;
        for _ in 0..100_000 {
            step_thermal(&mut state, &s, power, 20.0, 1.0);
        }
        let fixed_point = 20.0 + power / s.dissipation_w_per_c;
        assert_relative_eq!(state.temperature_c, fixed_point, max_relative = 1e-6);
    }

    #[test]
    fn failure_probability_identities() {
        assert_relative_eq!(
            failure_probability(1.0, 3600.0),
            0.6321205588285577,
            max_relative = 1e-12
        );
        assert!(failure_probability(f64::INFINITY, 3600.0) == 0.0);
    }

    #[test]
    fn failure_rate_matches_analytic_within_two_percent() {
        // Monte-Carlo against the closed form over 1e5 seeded steps.
        let mut s = spec(10.0, 40.0);
        s.mtbf_hours = 10.0;
        let dt = 3600.0;
        let p = failure_probability(s.mtbf_hours, dt);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut hits = 0u32;
        for _ in 0..n {
            if sample_failure(&s, dt, &mut rng) {
                hits += 1;
            }
        }
        let empirical = f64::from(hits) / f64::from(n);
        assert!(
            (empirical - p).abs() / p < 0.02,
            "empirical {empirical} vs analytic {p}"
        );
    }

    #[test]
    fn sample_failure_is_seed_deterministic() {
        let s = spec(10.0, 40.0);
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            assert_eq!(
                sample_failure(&s, 60.0, &mut a),
                sample_failure(&s, 60.0, &mut b)
            );
        }
    }

    #[test]
    fn smartphone_requires_battery() {
        let mut s = spec(0.5, 4.0);
        s.kind = NodeKind::Smartphone;
        assert!(s.validate().is_err());
        s.battery = Some(BatterySpec {
            capacity_wh: 12.0,
            max_charge_w: 10.0,
            max_discharge_w: 10.0,
        });
        assert!(s.validate().is_ok());
    }

    #[test]
    fn inventory_round_trip() {
        let mut phone = spec(0.5, 4.0);
        phone.id = NodeId::new("ph-01");
        phone.kind = NodeKind::Smartphone;
        phone.gpu = Some(GpuSpec {
            gpu_mflops: 40000.0,
            gpu_mem_mb: 2048.0,
        });
        phone.battery = Some(BatterySpec {
            capacity_wh: 12.0,
            max_charge_w: 10.0,
            max_discharge_w: 10.0,
        });
        let specs = vec![spec(10.0, 40.0), phone];
        let mut buf = Vec::new();
        write_inventory(&specs, &mut buf).unwrap();
        let read = read_inventory(buf.as_slice()).unwrap();
        assert_eq!(read, specs);
    }

    #[test]
    fn inventory_rejects_half_specified_gpu() {
        let mut buf = Vec::new();
        write_inventory(&[spec(10.0, 40.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace("n0,desktop,2000,1000,,,", "n0,desktop,2000,1000,5,,");
        assert!(read_inventory(text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn power_draw_monotone_and_bounded(
            idle in 0.0..50.0f64,
            span in 0.0..200.0f64,
            u1 in 0.0..1.0f64,
            u2 in 0.0..1.0f64,
        ) {
            let s = spec(idle, idle + span);
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            let p_lo = power_draw(&s, lo).unwrap();
            let p_hi = power_draw(&s, hi).unwrap();
            prop_assert!(p_lo <= p_hi + 1e-12);
            prop_assert!(p_lo >= idle - 1e-12 && p_hi <= idle + span + 1e-12);
        }

        #[test]
        fn efficiency_depends_only_on_ratio(
            mips in 1.0..1e6f64,
            peak in 1.0..1e3f64,
            k in 0.01..100.0f64,
        ) {
            let mut a = spec(0.0, peak);
            a.cpu_mips = mips;
            let mut b = spec(0.0, peak * k);
            b.cpu_mips = mips * k;
            let ea = efficiency(&a, ComputeResource::Cpu).unwrap();
            let eb = efficiency(&b, ComputeResource::Cpu).unwrap();
            prop_assert!((ea.mi_per_joule - eb.mi_per_joule).abs()
                <= 1e-9 * ea.mi_per_joule.abs().max(1.0));
        }
    }
}
