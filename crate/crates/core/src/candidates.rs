//! Vehicles that may be pulled to bridge the disruption.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cost::{CandidateVehicle, SourceLink};
use crate::graph::{blocked_links, shortest_path};
use crate::model::{
    Assignment, CostParams, DisruptionSpec, Location, Scenario, TransitLine, Vehicle,
};
use crate::partition::{PartitionError, StationPartition};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateWarning {
    /// The vehicle cannot reach the disrupted origin, or cannot drive the
    /// bridge, on links open to its mode.
    NoPath {
        vehicle: String,
        from: String,
        to: String,
    },
}

impl fmt::Display for CandidateWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateWarning::NoPath { vehicle, from, to } => {
                write!(f, "vehicle {}: no path {} -> {}", vehicle, from, to)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub origin: String,
    pub destination: String,
    pub candidates: Vec<CandidateVehicle>,
    pub warnings: Vec<CandidateWarning>,
}

fn line_is_disrupted(line: &TransitLine, d: &DisruptionSpec) -> bool {
    line.stops
        .windows(2)
        .any(|w| d.affects(line.mode, &w[0], &w[1]))
}

/// Passengers boarding `line` at `r` for a later stop within one headway
/// after the disruption starts.
pub fn source_volume(scenario: &Scenario, line: &TransitLine, r: &str, start: f64) -> f64 {
    let Some(pos) = line.stops.iter().position(|s| s == r) else {
        return 0.0;
    };
    let later = &line.stops[pos + 1..];
    let end = start + line.headway * 60.0;
    scenario
        .demand()
        .iter()
        .filter(|e| e.mode == line.mode && e.origin == r && later.contains(&e.destination))
        .map(|e| e.volume_between(start, end))
        .sum()
}

/// Station a vehicle starts from: the origin of its current link, its
/// waiting station (points snap to the nearest one) or its depot.
pub fn vehicle_start(scenario: &Scenario, v: &Vehicle) -> usize {
    match &v.assignment {
        Assignment::Scheduled { link, .. } => scenario.station_idx(&link.0).expect("validated"),
        Assignment::Free(Location::Station(s)) | Assignment::Depot(s) => {
            scenario.station_idx(s).expect("validated")
        }
        Assignment::Free(Location::Point(p)) => scenario.nearest_station(p),
    }
}

/// Every vehicle allowed to serve the bridge, with its access and service
/// distances and free-flow arrival duration.
///
/// Scheduled vehicles are dropped when their line runs over a disrupted link
/// or its headway exceeds `params.h_max`.
pub fn candidate_vehicles(
    scenario: &Scenario,
    d: &DisruptionSpec,
    partition: &StationPartition,
    params: &CostParams,
) -> Result<CandidateSet, PartitionError> {
    let (i, j) = partition.bridge_pair()?;
    let blocked = blocked_links(scenario, d);
    let ii = scenario.station_idx(&i).expect("partition station");
    let jj = scenario.station_idx(&j).expect("partition station");
    let mut candidates = Vec::new();
    let mut warnings = Vec::new();

    for v in scenario.vehicles() {
        let Some(mode) = scenario.mode(v.mode) else {
            continue;
        };
        let (start, source) = match &v.assignment {
            Assignment::Scheduled { line, link } => {
                let line = scenario.line(line).expect("validated line");
                if line_is_disrupted(line, d) || partition.pi(&link.0, &link.1) {
                    continue;
                }
                if line.headway > params.h_max {
                    continue;
                }
                let source = SourceLink {
                    line: line.id.clone(),
                    from: link.0.clone(),
                    to: link.1.clone(),
                    headway: line.headway,
                    volume: source_volume(scenario, line, &link.0, d.start as f64),
                };
                (vehicle_start(scenario, v), Some(source))
            }
            _ => (vehicle_start(scenario, v), None),
        };
        let access = shortest_path(scenario, start, ii, v.mode, &blocked);
        let service = shortest_path(scenario, ii, jj, v.mode, &blocked);
        let (access, service) = match (access, service) {
            (Some(a), Some(s)) => (a, s),
            (a, _) => {
                let (from, to) = if a.is_none() {
                    (scenario.stations()[start].id.clone(), i.clone())
                } else {
                    (i.clone(), j.clone())
                };
                warnings.push(CandidateWarning::NoPath {
                    vehicle: v.id.clone(),
                    from,
                    to,
                });
                continue;
            }
        };
        candidates.push(CandidateVehicle {
            id: v.id.clone(),
            mode: v.mode,
            op_cost: mode.op_cost,
            capacity: scenario.vehicle_capacity(v),
            source,
            d_ri: access.length,
            d_ij: service.length,
            ta: 3600.0 * access.length / mode.default_speed,
        });
    }
    Ok(CandidateSet {
        origin: i,
        destination: j,
        candidates,
        warnings,
    })
}
