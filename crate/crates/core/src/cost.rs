//! Monetary and loyalty cost of a reallocation.
//!
//! Durations are seconds unless a name says otherwise; money is euro.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::model::{CostParams, DemandEntry, ModeKind, OpCost};

/// The scheduled link a vehicle is pulled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceLink {
    pub line: String,
    pub from: String,
    pub to: String,
    /// Minutes.
    pub headway: f64,
    /// Passengers boarding at `from` for this line over one headway.
    pub volume: f64,
}

impl SourceLink {
    pub fn same_link(&self, other: &SourceLink) -> bool {
        self.line == other.line && self.from == other.from && self.to == other.to
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVehicle {
    pub id: String,
    pub mode: ModeKind,
    pub op_cost: OpCost,
    pub capacity: u32,
    /// `None` for free and depot vehicles.
    pub source: Option<SourceLink>,
    /// Access leg to the disrupted origin, km.
    pub d_ri: f64,
    /// Service leg across the disruption, km.
    pub d_ij: f64,
    /// Arrival duration at the disrupted origin, seconds.
    pub ta: f64,
}

impl CandidateVehicle {
    pub fn distance(&self) -> f64 {
        vehicle_distance(self.d_ri, self.d_ij)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateRates;

impl fmt::Display for DegenerateRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("p_max equals p_min; the late payment phase is undefined")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DegenerateRates {}

/// Passengers a demand entry sends from `origin` to `destination` by `mode`
/// in `[start, end)`.
pub fn blocked_volume(
    demand: &[DemandEntry],
    origin: &str,
    destination: &str,
    mode: ModeKind,
    start: f64,
    end: f64,
) -> f64 {
    demand
        .iter()
        .filter(|e| e.origin == origin && e.destination == destination && e.mode == mode)
        .map(|e| e.volume_between(start, end))
        .sum()
}

pub fn payment_phase(ta: f64, td: f64, p_min: f64, p_max: f64) -> Result<f64, DegenerateRates> {
    if p_max == p_min {
        return Err(DegenerateRates);
    }
    Ok(if ta <= td / 2.0 {
        1.0
    } else if ta < td {
        0.0
    } else {
        -p_min / (p_max - p_min)
    })
}

/// Bracket `y * p_max + (1 - y) * p_min` of the service rate. The late
/// branch cancels to zero; it is returned as an exact zero, which also
/// covers `p_max == p_min`.
pub fn payment_factor(ta: f64, td: f64, p_min: f64, p_max: f64) -> f64 {
    match payment_phase(ta, td, p_min, p_max) {
        Ok(y) => {
            let f = y * p_max + (1.0 - y) * p_min;
            if math::abs(f) < 1e-12 {
                0.0
            } else {
                f
            }
        }
        Err(DegenerateRates) => {
            if ta >= td {
                0.0
            } else {
                p_min
            }
        }
    }
}

/// Service rate, euro per passenger-km, for a vehicle driving `distance` km.
pub fn service_rate(op_cost: &OpCost, distance: f64, y: f64, p_min: f64, p_max: f64) -> f64 {
    let f = y * p_max + (1.0 - y) * p_min;
    let f = if math::abs(f) < 1e-12 { 0.0 } else { f };
    op_cost.rate(distance) * f
}

pub fn vehicle_distance(d_ri: f64, d_ij: f64) -> f64 {
    d_ri + d_ij
}

/// Cost of a vehicle's trip at the full operating rate.
pub fn nominal_transfer(c: &CandidateVehicle) -> f64 {
    let d = c.distance();
    c.op_cost.rate(d) * c.capacity as f64 * d
}

/// Payment for the vehicle's trip, discounted by its payment phase.
pub fn transfer_cost(c: &CandidateVehicle, td: f64, params: &CostParams) -> f64 {
    let d = c.distance();
    let cs = c.op_cost.rate(d) * payment_factor(c.ta, td, params.p_min, params.p_max);
    cs * c.capacity as f64 * d
}

/// Arrangement fee `ca_rate * transfer` spread over the arrival duration in
/// minutes, with the divisor clamped to at least one minute.
pub fn arrangement_cost(transfer: f64, ca_rate: f64, ta: f64) -> f64 {
    let minutes = ta / 60.0;
    ca_rate * transfer / minutes.max(1.0)
}

/// Mean arrival duration of the selected vehicles of `mode`; zero when none.
pub fn avg_arrival<'a, I>(selected: I, mode: ModeKind) -> f64
where
    I: IntoIterator<Item = &'a CandidateVehicle>,
{
    mean_sorted(
        selected
            .into_iter()
            .filter(|c| c.mode == mode)
            .map(|c| c.ta)
            .collect(),
    )
}

/// Mean summed in ascending order, so equal multisets give equal bits.
pub fn mean_sorted(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn leaving_rate(min_ta: f64, td: f64, alpha: f64, beta: f64) -> f64 {
    let t = min_ta.max(0.0).min(td);
    alpha + (1.0 - beta - alpha) * t / td
}

pub fn willingness_to_wait(ta: f64, td: f64, theta: f64) -> f64 {
    let t = ta.max(0.0).min(td);
    1.0 - (1.0 - theta) * t / td
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassengerSplit {
    /// Blocked passengers, rounded to whole passengers.
    pub v: u64,
    pub vl: u64,
    pub vw: u64,
    pub served: u64,
    pub l: f64,
}

impl PassengerSplit {
    pub fn zero() -> Self {
        Self {
            v: 0,
            vl: 0,
            vw: 0,
            served: 0,
            l: 0.0,
        }
    }
}

pub fn passenger_split(v: f64, l: f64, served_capacity: u64) -> PassengerSplit {
    let v = math::round(v.max(0.0)) as u64;
    let vl = (math::round(l * v as f64) as u64).min(v);
    let rest = v - vl;
    PassengerSplit {
        v,
        vl,
        vw: rest.saturating_sub(served_capacity),
        served: rest.min(served_capacity),
        l,
    }
}

/// Leaving and waiting cost at a disrupted origin over a disruption of
/// `td` seconds.
pub fn loyalty_main(split: &PassengerSplit, td: f64, params: &CostParams) -> (f64, f64) {
    let hours = td / 3600.0;
    (
        (params.cl + hours * params.ct) * split.vl as f64,
        hours * params.ct * split.vw as f64,
    )
}

/// Leaving and waiting cost at a station that loses one departure of a line
/// with `headway` minutes.
pub fn loyalty_deliberate(split: &PassengerSplit, headway: f64, params: &CostParams) -> (f64, f64) {
    let hours = headway / 60.0;
    (
        (params.cl + hours * params.ct) * split.vl as f64,
        hours * params.ct * split.vw as f64,
    )
}

/// Split at a deliberately disrupted station: passengers face one extra
/// headway, nobody is bridged.
pub fn deliberate_split(source: &SourceLink, td: f64, params: &CostParams) -> PassengerSplit {
    let l = leaving_rate(source.headway * 60.0, td, params.alpha, params.beta);
    passenger_split(source.volume, l, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleCost {
    pub id: String,
    pub transfer: f64,
    pub arrangement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub transfer: f64,
    pub arrangement: f64,
    pub z1: f64,
    pub leaving_main: f64,
    pub waiting_main: f64,
    pub leaving_deliberate: f64,
    pub waiting_deliberate: f64,
    pub z2: f64,
    pub total: f64,
    pub main_split: PassengerSplit,
    pub vehicles: Vec<VehicleCost>,
}

/// Everything the objective needs besides the selection itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostContext {
    /// Blocked passengers at the disrupted origin.
    pub v: f64,
    /// Disruption duration, seconds.
    pub td: f64,
    pub params: CostParams,
}

/// Per-vehicle monetary cost, independent of the rest of the selection.
pub fn vehicle_cost(c: &CandidateVehicle, ctx: &CostContext) -> VehicleCost {
    let transfer = transfer_cost(c, ctx.td, &ctx.params);
    let arrangement = arrangement_cost(nominal_transfer(c), ctx.params.ca_rate, c.ta);
    VehicleCost {
        id: c.id.clone(),
        transfer,
        arrangement,
    }
}

/// Cost of selecting `selected` (indices into `candidates`).
///
/// Vehicle costs are summed in ascending order of value and deliberate
/// stations in link order, so two selections whose vehicles have the same
/// costs give bit-identical totals whatever their indices.
pub fn evaluate(
    candidates: &[CandidateVehicle],
    selected: &[usize],
    ctx: &CostContext,
) -> CostBreakdown {
    let p = &ctx.params;
    let mut vehicles: Vec<VehicleCost> = Vec::with_capacity(selected.len());
    let mut min_ta = f64::INFINITY;
    let mut cap = 0u64;
    let mut sources: Vec<&SourceLink> = Vec::new();
    for &k in selected {
        let c = &candidates[k];
        vehicles.push(vehicle_cost(c, ctx));
        min_ta = min_ta.min(c.ta);
        cap += c.capacity as u64;
        if let Some(s) = &c.source {
            if !sources.iter().any(|o| o.same_link(s)) {
                sources.push(s);
            }
        }
    }
    let mut order: Vec<usize> = (0..vehicles.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (&vehicles[a], &vehicles[b]);
        va.transfer
            .total_cmp(&vb.transfer)
            .then(va.arrangement.total_cmp(&vb.arrangement))
    });
    let mut transfer = 0.0;
    let mut arrangement = 0.0;
    for &k in &order {
        transfer += vehicles[k].transfer;
        arrangement += vehicles[k].arrangement;
    }
    sources.sort_by(|a, b| (&a.line, &a.from, &a.to).cmp(&(&b.line, &b.from, &b.to)));
    let l = if selected.is_empty() {
        1.0 - p.beta
    } else {
        leaving_rate(min_ta, ctx.td, p.alpha, p.beta)
    };
    let main_split = passenger_split(ctx.v, l, cap);
    let (leaving_main, waiting_main) = loyalty_main(&main_split, ctx.td, p);
    let mut leaving_deliberate = 0.0;
    let mut waiting_deliberate = 0.0;
    for s in sources {
        let (a, b) = loyalty_deliberate(&deliberate_split(s, ctx.td, p), s.headway, p);
        leaving_deliberate += a;
        waiting_deliberate += b;
    }
    vehicles.sort_by(|a, b| a.id.cmp(&b.id));
    let z1 = transfer + arrangement;
    let z2 = leaving_main + waiting_main + leaving_deliberate + waiting_deliberate;
    CostBreakdown {
        transfer,
        arrangement,
        z1,
        leaving_main,
        waiting_main,
        leaving_deliberate,
        waiting_deliberate,
        z2,
        total: z1 + z2,
        main_split,
        vehicles,
    }
}
