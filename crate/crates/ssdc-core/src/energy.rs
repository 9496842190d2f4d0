//! Supply-side model: photovoltaic trace, grid schedule, UPS bank and the
//! pooled smartphone batteries, plus persistence forecasting and the energy
//! ledger.
//!
//! All flows are accounted at the bus. A ledger record balances exactly:
//! `supplied_pv + supplied_grid = consumed + shed + battery_delta`, where
//! `battery_delta` is the net bus-side flow into storage (charging input
//! minus discharged delivery, conversion losses included inside) and `shed`
//! is curtailed photovoltaic production.
//!
//! Draw merit order is PV, then grid, then UPS, then phone batteries:
//! renewables first, phones last because they double as compute nodes.

use crate::ids::NodeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("step {0} outside trace of length {1}")]
    StepOutOfRange(u64, usize),
    #[error("persistence forecast needs one full day of history ({needed} steps, have {have})")]
    InsufficientHistory { needed: u64, have: u64 },
    #[error("trace step length {dt_s} s must divide one day")]
    BadTraceStep { dt_s: f64 },
    #[error("invalid energy config: {0}")]
    InvalidConfig(String),
}

/// Photovoltaic production trace, one sample per simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvTrace {
    pub start_time_s: f64,
    pub dt_s: f64,
    pub watts: Vec<f64>,
}

impl PvTrace {
    pub fn new(dt_s: f64, watts: Vec<f64>) -> Result<Self, EnergyError> {
        if !(dt_s > 0.0) {
            return Err(EnergyError::InvalidConfig("trace dt must be positive".into()));
        }
        if watts.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(EnergyError::InvalidConfig(
                "trace values must be non-negative".into(),
            ));
        }
        Ok(Self {
            start_time_s: 0.0,
            dt_s,
            watts,
        })
    }

    /// Constant production, mostly for tests and synthetic scenarios.
    pub fn constant(dt_s: f64, watts: f64, steps: usize) -> Result<Self, EnergyError> {
        Self::new(dt_s, vec![watts; steps])
    }

    /// Synthetic clear-sky diurnal cycle: a half-sine bump between 6h and 18h
    /// of each simulated day, zero at night.
    pub fn diurnal(dt_s: f64, peak_w: f64, steps: usize) -> Result<Self, EnergyError> {
        let day = 86_400.0;
        let watts = (0..steps)
            .map(|k| {
                let t = (k as f64 * dt_s) % day;
                let frac = (t - 6.0 * 3600.0) / (12.0 * 3600.0);
                if (0.0..=1.0).contains(&frac) {
                    peak_w * (std::f64::consts::PI * frac).sin()
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(dt_s, watts)
    }

    pub fn len(&self) -> usize {
        self.watts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.watts.is_empty()
    }

    pub fn at(&self, step: u64) -> Result<f64, EnergyError> {
        self.watts
            .get(step as usize)
            .copied()
            .ok_or(EnergyError::StepOutOfRange(step, self.watts.len()))
    }

    pub fn steps_per_day(&self) -> Result<u64, EnergyError> {
        let day = 86_400.0;
        let steps = day / self.dt_s;
        if (steps - steps.round()).abs() > 1e-9 || steps < 1.0 {
            return Err(EnergyError::BadTraceStep { dt_s: self.dt_s });
        }
        Ok(steps.round() as u64)
    }
}

/// Grid connection with an on/off schedule, in steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSource {
    /// Intervals `[start, end)` during which the grid is available.
    pub intervals: Vec<(u64, u64)>,
    pub max_power_w: f64,
    pub carbon_intensity_g_per_kwh: f64,
}

impl GridSource {
    pub fn always_on(max_power_w: f64, carbon_intensity_g_per_kwh: f64) -> Self {
        Self {
            intervals: vec![(0, u64::MAX)],
            max_power_w,
            carbon_intensity_g_per_kwh,
        }
    }

    pub fn off() -> Self {
        Self {
            intervals: vec![],
            max_power_w: 0.0,
            carbon_intensity_g_per_kwh: 0.0,
        }
    }

    pub fn is_available(&self, step: u64) -> bool {
        self.intervals.iter().any(|&(s, e)| step >= s && step < e)
    }

    pub fn available_power(&self, step: u64) -> f64 {
        if self.is_available(step) {
            self.max_power_w
        } else {
            0.0
        }
    }
}

/// Uninterruptible power supply bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpsBank {
    pub capacity_wh: f64,
    pub soc_wh: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    pub max_rate_w: f64,
}

impl UpsBank {
    pub fn validate(&self) -> Result<(), EnergyError> {
        if self.capacity_wh < 0.0 || self.soc_wh < 0.0 || self.soc_wh > self.capacity_wh + 1e-9 {
            return Err(EnergyError::InvalidConfig(
                "UPS soc must lie in [0, capacity]".into(),
            ));
        }
        for eff in [self.charge_efficiency, self.discharge_efficiency] {
            if !(eff > 0.0 && eff <= 1.0) {
                return Err(EnergyError::InvalidConfig(
                    "UPS efficiencies must be in (0, 1]".into(),
                ));
            }
        }
        if self.max_rate_w < 0.0 {
            return Err(EnergyError::InvalidConfig(
                "UPS max rate must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Energy the bank can deliver to the bus within `dt_s`.
    pub fn deliverable_wh(&self, dt_s: f64) -> f64 {
        (self.max_rate_w * dt_s / 3600.0).min(self.soc_wh * self.discharge_efficiency)
    }

    /// Discharges to deliver up to `request_wh` to the bus; returns delivery.
    pub fn discharge(&mut self, request_wh: f64, dt_s: f64) -> f64 {
        let delivered = request_wh.max(0.0).min(self.deliverable_wh(dt_s));
        self.soc_wh = (self.soc_wh - delivered / self.discharge_efficiency).max(0.0);
        delivered
    }

    /// Charges from up to `offer_wh` of bus energy; returns the bus energy
    /// absorbed (losses land inside the bank).
    pub fn charge(&mut self, offer_wh: f64, dt_s: f64) -> f64 {
        let headroom_input = (self.capacity_wh - self.soc_wh).max(0.0) / self.charge_efficiency;
        let absorbed = offer_wh
            .max(0.0)
            .min(self.max_rate_w * dt_s / 3600.0)
            .min(headroom_input);
        self.soc_wh = (self.soc_wh + absorbed * self.charge_efficiency).min(self.capacity_wh);
        absorbed
    }
}

/// One pooled smartphone battery. Phones charge and discharge losslessly in
/// this model; their spec carries no efficiency figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoneBattery {
    pub node: NodeId,
    pub capacity_wh: f64,
    pub soc_wh: f64,
    pub max_charge_w: f64,
    pub max_discharge_w: f64,
    /// Floor below which the pool never discharges, keeping the phone's own
    /// administrative duties powered.
    pub reserve_wh: f64,
}

impl PhoneBattery {
    fn discharge_headroom_wh(&self, dt_s: f64) -> f64 {
        (self.soc_wh - self.reserve_wh)
            .max(0.0)
            .min(self.max_discharge_w * dt_s / 3600.0)
    }

    fn charge_headroom_wh(&self, dt_s: f64) -> f64 {
        (self.capacity_wh - self.soc_wh)
            .max(0.0)
            .min(self.max_charge_w * dt_s / 3600.0)
    }
}

/// The pooled smartphone batteries, ordered by node id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhonePool {
    pub phones: Vec<PhoneBattery>,
}

impl PhonePool {
    pub fn new(mut phones: Vec<PhoneBattery>) -> Self {
        phones.sort_by(|a, b| a.node.cmp(&b.node));
        Self { phones }
    }

    pub fn deliverable_wh(&self, dt_s: f64) -> f64 {
        self.phones.iter().map(|p| p.discharge_headroom_wh(dt_s)).sum()
    }

    pub fn total_soc_wh(&self) -> f64 {
        self.phones.iter().map(|p| p.soc_wh).sum()
    }
}

/// Even, rate- and reserve-respecting draw from the pooled phone batteries.
///
/// The draw is split equally across phones that still have headroom, in
/// rounds, which is the limit of a fine-grained round-robin: nobody is
/// drained ahead of the others.
pub fn phone_pool_to_system(pool: &mut PhonePool, demand_wh: f64, dt_s: f64) -> f64 {
    let mut remaining = demand_wh.max(0.0);
    let mut headroom: Vec<f64> = pool
        .phones
        .iter()
        .map(|p| p.discharge_headroom_wh(dt_s))
        .collect();
    let mut drawn = vec![0.0; headroom.len()];
    while remaining > 1e-12 {
        let open: Vec<usize> = (0..headroom.len())
            .filter(|&i| headroom[i] > 1e-12)
            .collect();
        if open.is_empty() {
            break;
        }
        let share = remaining / open.len() as f64;
        let mut progressed = false;
        for i in open {
            let take = share.min(headroom[i]);
            if take > 0.0 {
                headroom[i] -= take;
                drawn[i] += take;
                remaining -= take;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let mut delivered = 0.0;
    for (phone, d) in pool.phones.iter_mut().zip(&drawn) {
        phone.soc_wh = (phone.soc_wh - d).max(phone.reserve_wh.min(phone.soc_wh));
        delivered += d;
    }
    delivered
}

/// Charges the pool from `offer_wh` of bus energy, split evenly like the
/// discharge path. Returns the energy absorbed.
pub fn charge_phone_pool(pool: &mut PhonePool, offer_wh: f64, dt_s: f64) -> f64 {
    let mut remaining = offer_wh.max(0.0);
    let mut headroom: Vec<f64> = pool
        .phones
        .iter()
        .map(|p| p.charge_headroom_wh(dt_s))
        .collect();
    let mut stored = vec![0.0; headroom.len()];
    while remaining > 1e-12 {
        let open: Vec<usize> = (0..headroom.len())
            .filter(|&i| headroom[i] > 1e-12)
            .collect();
        if open.is_empty() {
            break;
        }
        let share = remaining / open.len() as f64;
        let mut progressed = false;
        for i in open {
            let take = share.min(headroom[i]);
            if take > 0.0 {
                headroom[i] -= take;
                stored[i] += take;
                remaining -= take;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let mut absorbed = 0.0;
    for (phone, s) in pool.phones.iter_mut().zip(&stored) {
        phone.soc_wh = (phone.soc_wh + s).min(phone.capacity_wh);
        absorbed += s;
    }
    absorbed
}

/// Instantaneous availability per source, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplyBreakdown {
    pub pv_w: f64,
    pub grid_w: f64,
    pub ups_w: f64,
    pub phones_w: f64,
}

impl SupplyBreakdown {
    pub fn total_w(&self) -> f64 {
        self.pv_w + self.grid_w + self.ups_w + self.phones_w
    }
}

/// Per-source availability at `step`. Storage sources report their rate
/// limit when they hold any energy; the energy bound itself binds in
/// [`draw_power`].
pub fn available_power(
    step: u64,
    pv: &PvTrace,
    grid: &GridSource,
    ups: &UpsBank,
    pool: &PhonePool,
) -> Result<SupplyBreakdown, EnergyError> {
    let pv_w = pv.at(step)?;
    let grid_w = grid.available_power(step);
    let ups_w = if ups.soc_wh > 1e-12 { ups.max_rate_w } else { 0.0 };
    let phones_w: f64 = pool
        .phones
        .iter()
        .map(|p| {
            if p.soc_wh > p.reserve_wh + 1e-12 {
                p.max_discharge_w
            } else {
                0.0
            }
        })
        .sum();
    Ok(SupplyBreakdown {
        pv_w,
        grid_w,
        ups_w,
        phones_w,
    })
}

/// Per-source fulfilment of one step's demand, in Wh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DrawResult {
    pub from_pv_wh: f64,
    pub from_grid_wh: f64,
    pub from_ups_wh: f64,
    pub from_phones_wh: f64,
    pub unmet_wh: f64,
}

impl DrawResult {
    pub fn fulfilled_wh(&self) -> f64 {
        self.from_pv_wh + self.from_grid_wh + self.from_ups_wh + self.from_phones_wh
    }
}

/// Draws `demand_w` for `dt_s` through the merit order, mutating storage.
/// Shortfall is data, not an error.
pub fn draw_power(
    demand_w: f64,
    dt_s: f64,
    step: u64,
    pv_w: f64,
    grid: &GridSource,
    ups: &mut UpsBank,
    pool: &mut PhonePool,
) -> DrawResult {
    let dt_h = dt_s / 3600.0;
    let demand_wh = demand_w.max(0.0) * dt_h;
    let from_pv_wh = demand_wh.min(pv_w.max(0.0) * dt_h);
    let mut remaining = demand_wh - from_pv_wh;
    let from_grid_wh = remaining.min(grid.available_power(step) * dt_h);
    remaining -= from_grid_wh;
    let from_ups_wh = ups.discharge(remaining, dt_s);
    remaining -= from_ups_wh;
    let from_phones_wh = phone_pool_to_system(pool, remaining, dt_s);
    remaining -= from_phones_wh;
    DrawResult {
        from_pv_wh,
        from_grid_wh,
        from_ups_wh,
        from_phones_wh,
        unmet_wh: remaining.max(0.0),
    }
}

/// Where surplus went: absorbed by the UPS, absorbed by phones, curtailed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChargeResult {
    pub to_ups_wh: f64,
    pub to_phones_wh: f64,
    pub shed_wh: f64,
}

impl ChargeResult {
    pub fn stored_wh(&self) -> f64 {
        self.to_ups_wh + self.to_phones_wh
    }
}

/// Routes `surplus_w` into storage, UPS first then the phone pool; whatever
/// neither can take is curtailed and reported as shed.
pub fn charge_storage(
    surplus_w: f64,
    dt_s: f64,
    ups: &mut UpsBank,
    pool: &mut PhonePool,
) -> ChargeResult {
    let surplus_wh = surplus_w.max(0.0) * dt_s / 3600.0;
    let to_ups_wh = ups.charge(surplus_wh, dt_s);
    let to_phones_wh = charge_phone_pool(pool, surplus_wh - to_ups_wh, dt_s);
    ChargeResult {
        to_ups_wh,
        to_phones_wh,
        shed_wh: (surplus_wh - to_ups_wh - to_phones_wh).max(0.0),
    }
}

/// Persistence forecast: the predicted value at `now + k` is the observed
/// value at the same time yesterday. Needs one full day of history.
pub fn forecast_pv(trace: &PvTrace, now: u64, horizon: u64) -> Result<Vec<f64>, EnergyError> {
    let period = trace.steps_per_day()?;
    if now < period {
        return Err(EnergyError::InsufficientHistory {
            needed: period,
            have: now,
        });
    }
    (0..horizon)
        .map(|k| trace.at(now + k - period))
        .collect()
}

/// One per-step ledger record. All quantities in Wh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub step: u64,
    pub supplied_grid_wh: f64,
    pub supplied_pv_wh: f64,
    /// Net bus-side flow into storage: charge input minus discharge delivery.
    pub battery_delta_wh: f64,
    pub consumed_wh: f64,
    /// Curtailed photovoltaic production.
    pub shed_wh: f64,
    pub unmet_wh: f64,
}

impl LedgerRecord {
    /// `supplied - (consumed + shed + battery_delta)`; zero up to float noise.
    pub fn residual_wh(&self) -> f64 {
        self.supplied_grid_wh + self.supplied_pv_wh
            - (self.consumed_wh + self.shed_wh + self.battery_delta_wh)
    }
}

/// Append-only energy ledger with cumulative totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub records: Vec<LedgerRecord>,
    pub total_grid_wh: f64,
    pub total_pv_wh: f64,
    pub total_consumed_wh: f64,
    pub total_shed_wh: f64,
    pub total_unmet_wh: f64,
}

impl EnergyLedger {
    pub fn push(&mut self, record: LedgerRecord) {
        self.total_grid_wh += record.supplied_grid_wh;
        self.total_pv_wh += record.supplied_pv_wh;
        self.total_consumed_wh += record.consumed_wh;
        self.total_shed_wh += record.shed_wh;
        self.total_unmet_wh += record.unmet_wh;
        self.records.push(record);
    }

    /// Largest per-step relative balance residual.
    pub fn max_relative_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| {
                let scale = (r.supplied_grid_wh + r.supplied_pv_wh).abs().max(1.0);
                (r.residual_wh() / scale).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self, writer: impl std::io::Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "step",
            "supplied_grid_wh",
            "supplied_pv_wh",
            "battery_delta_wh",
            "consumed_wh",
            "shed_wh",
            "unmet_wh",
        ])?;
        for r in &self.records {
            w.write_record(&[
                r.step.to_string(),
                r.supplied_grid_wh.to_string(),
                r.supplied_pv_wh.to_string(),
                r.battery_delta_wh.to_string(),
                r.consumed_wh.to_string(),
                r.shed_wh.to_string(),
                r.unmet_wh.to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn from_csv(reader: impl std::io::Read) -> Result<Self, EnergyError> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
        let mut ledger = Self::default();
        for (i, record) in rdr.records().enumerate() {
            let record = record
                .map_err(|e| EnergyError::InvalidConfig(format!("ledger row {}: {e}", i + 1)))?;
            let f = |j: usize| -> Result<f64, EnergyError> {
                record[j]
                    .parse()
                    .map_err(|e| EnergyError::InvalidConfig(format!("ledger row {}: {e}", i + 1)))
            };
            ledger.push(LedgerRecord {
                step: record[0].parse().map_err(|e| {
                    EnergyError::InvalidConfig(format!("ledger row {}: {e}", i + 1))
                })?,
                supplied_grid_wh: f(1)?,
                supplied_pv_wh: f(2)?,
                battery_delta_wh: f(3)?,
                consumed_wh: f(4)?,
                shed_wh: f(5)?,
                unmet_wh: f(6)?,
            });
        }
        Ok(ledger)
    }
}

/// The combined supply side as the simulation engine drives it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySystem {
    pub pv: PvTrace,
    pub grid: GridSource,
    pub ups: UpsBank,
    pub pool: PhonePool,
    pub ledger: EnergyLedger,
    /// Whether the UPS may top up from the grid on request.
    pub allow_grid_charge: bool,
}

/// What one energy step produced, for the engine and the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEnergy {
    pub breakdown: SupplyBreakdown,
    pub draw: DrawResult,
    pub stored_wh: f64,
    pub shed_wh: f64,
}

impl EnergySystem {
    /// Advances one step: draws `demand_w` through the merit order, then
    /// routes PV surplus (and, when requested and allowed, grid energy) into
    /// storage, and appends the ledger record.
    pub fn advance(
        &mut self,
        step: u64,
        demand_w: f64,
        dt_s: f64,
        grid_charge_requested: bool,
    ) -> Result<StepEnergy, EnergyError> {
        let dt_h = dt_s / 3600.0;
        let breakdown = available_power(step, &self.pv, &self.grid, &self.ups, &self.pool)?;
        let pv_w = breakdown.pv_w;
        let draw = draw_power(demand_w, dt_s, step, pv_w, &self.grid, &mut self.ups, &mut self.pool);

        let pv_production_wh = pv_w * dt_h;
        let surplus_w = (pv_production_wh - draw.from_pv_wh).max(0.0) / dt_h;
        let charge = charge_storage(surplus_w, dt_s, &mut self.ups, &mut self.pool);

        // Optional grid top-up for the UPS, bounded by the grid headroom left
        // after serving the load.
        let mut grid_to_ups_wh = 0.0;
        if grid_charge_requested && self.allow_grid_charge && self.grid.is_available(step) {
            let headroom_wh = (self.grid.max_power_w * dt_h - draw.from_grid_wh).max(0.0);
            grid_to_ups_wh = self.ups.charge(headroom_wh, dt_s);
        }

        let battery_delta_wh = charge.stored_wh() + grid_to_ups_wh
            - (draw.from_ups_wh + draw.from_phones_wh);
        self.ledger.push(LedgerRecord {
            step,
            supplied_grid_wh: draw.from_grid_wh + grid_to_ups_wh,
            supplied_pv_wh: pv_production_wh,
            battery_delta_wh,
            consumed_wh: draw.fulfilled_wh(),
            shed_wh: charge.shed_wh,
            unmet_wh: draw.unmet_wh,
        });
        Ok(StepEnergy {
            breakdown,
            draw,
            stored_wh: charge.stored_wh() + grid_to_ups_wh,
            shed_wh: charge.shed_wh,
        })
    }

    /// Stored energy usable for planning: UPS (after discharge losses) plus
    /// phone headroom above the reserve floors.
    pub fn stored_reachable_wh(&self) -> f64 {
        self.ups.soc_wh * self.ups.discharge_efficiency
            + self
                .pool
                .phones
                .iter()
                .map(|p| (p.soc_wh - p.reserve_wh).max(0.0))
                .sum::<f64>()
    }
}
