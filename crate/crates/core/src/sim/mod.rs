//! Mesoscopic discrete-event simulation of a day of travel.
//!
//! Scheduled lines run their timetable with finite capacity, link travel
//! times follow a volume-delay curve, stranded passengers leave or wait for
//! the replacement vehicles of a plan, and every passenger's in-vehicle,
//! walking and waiting time is recorded.

mod engine;
pub(crate) mod router;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::model::ModeKind;

pub use engine::{run, SimError};

/// Length of the slices over which entering vehicles are counted, seconds.
pub const SLICE: f64 = 300.0;

/// Volume-delay curve: `t_ff * (1 + 0.15 (volume / capacity)^4)`.
pub fn link_travel_time(free_flow: f64, volume: f64, capacity: f64) -> f64 {
    free_flow * vdf(volume, capacity)
}

pub(crate) fn vdf(volume: f64, capacity: f64) -> f64 {
    1.0 + 0.15 * math::pow4(volume / capacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentState {
    Arrived,
    /// Left a disrupted station and reached the destination another way.
    Rerouted,
    Unserved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentKpi {
    pub id: u64,
    pub origin: String,
    pub destination: String,
    pub mode: ModeKind,
    pub depart: f64,
    pub state: AgentState,
    /// Seconds.
    pub travel: f64,
    pub in_vehicle: f64,
    pub walk: f64,
    pub wait: f64,
    /// Km.
    pub distance: f64,
    pub stranded: bool,
    pub left: bool,
    pub bridged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleKpi {
    pub id: String,
    pub mode: ModeKind,
    pub dispatch: f64,
    /// Seconds from dispatch to arrival at the disrupted origin.
    pub ta_sim: f64,
    pub passengers: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub agents: usize,
    pub served: usize,
    pub unserved: usize,
    /// Means over served agents, seconds and km.
    pub avg_travel: f64,
    pub avg_in_vehicle: f64,
    pub avg_walk: f64,
    pub avg_wait: f64,
    pub avg_distance: f64,
    pub stranded: usize,
    pub left: usize,
    pub bridged: usize,
    pub leave_fraction: f64,
    /// Mean arrival duration of the replacement vehicles, seconds.
    pub avg_ta_sim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Board,
    Alight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub vehicle: String,
    pub agent: u64,
    pub station: String,
    /// Passengers on board after the event.
    pub onboard: u32,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub aggregate: Aggregate,
    pub agents: Vec<AgentKpi>,
    pub vehicles: Vec<VehicleKpi>,
    pub ta_sim_per_mode: BTreeMap<ModeKind, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEvent>,
}

/// Per-vehicle and per-mode simulated arrival durations.
pub fn measure_ta(report: &KpiReport) -> (BTreeMap<String, f64>, BTreeMap<ModeKind, f64>) {
    let per_vehicle = report
        .vehicles
        .iter()
        .map(|v| (v.id.clone(), v.ta_sim))
        .collect();
    (per_vehicle, per_mode_mean(&report.vehicles))
}

pub(crate) fn per_mode_mean(vehicles: &[VehicleKpi]) -> BTreeMap<ModeKind, f64> {
    let mut acc: BTreeMap<ModeKind, Vec<f64>> = BTreeMap::new();
    for v in vehicles {
        acc.entry(v.mode).or_default().push(v.ta_sim);
    }
    acc.into_iter()
        .map(|(m, xs)| (m, crate::cost::mean_sorted(xs)))
        .collect()
}

pub(crate) fn aggregate(agents: &[AgentKpi], vehicles: &[VehicleKpi]) -> Aggregate {
    let served: Vec<&AgentKpi> = agents
        .iter()
        .filter(|a| a.state != AgentState::Unserved)
        .collect();
    let mean = |f: &dyn Fn(&AgentKpi) -> f64| {
        if served.is_empty() {
            0.0
        } else {
            served.iter().map(|a| f(a)).sum::<f64>() / served.len() as f64
        }
    };
    let stranded = agents.iter().filter(|a| a.stranded).count();
    let left = agents.iter().filter(|a| a.left).count();
    let avg_ta_sim = if vehicles.is_empty() {
        0.0
    } else {
        vehicles.iter().map(|v| v.ta_sim).sum::<f64>() / vehicles.len() as f64
    };
    Aggregate {
        agents: agents.len(),
        served: served.len(),
        unserved: agents.len() - served.len(),
        avg_travel: mean(&|a| a.travel),
        avg_in_vehicle: mean(&|a| a.in_vehicle),
        avg_walk: mean(&|a| a.walk),
        avg_wait: mean(&|a| a.wait),
        avg_distance: mean(&|a| a.distance),
        stranded,
        left,
        bridged: agents.iter().filter(|a| a.bridged).count(),
        leave_fraction: if stranded == 0 {
            0.0
        } else {
            left as f64 / stranded as f64
        },
        avg_ta_sim,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vdf_examples() {
        assert_eq!(link_travel_time(100.0, 0.0, 1800.0), 100.0);
        assert!((link_travel_time(100.0, 1800.0, 1800.0) - 115.0).abs() < 1e-9);
        assert!((link_travel_time(100.0, 3600.0, 1800.0) - 340.0).abs() < 1e-9);
    }
}
