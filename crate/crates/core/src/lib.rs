//! Disruption management for multimodal transit networks.
//!
//! When a rail link fails, stranded passengers can be bridged by pulling
//! in-service vehicles (buses, taxis, automated vans) off their current
//! assignment. This crate evaluates the monetary and loyalty cost of every
//! such reallocation, finds the cost-optimal one exactly, replays it in a
//! mesoscopic discrete-event simulator and couples the two until the
//! optimizer's arrival estimates agree with the simulated ones.
//!
//! The crate is `no_std` (with `alloc`). File formats, the CLI and wall-clock
//! timing live in the `raas` companion crate; enabling the `std` feature here
//! only turns on solver timing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod candidates;
pub mod cost;
pub mod coupling;
pub mod graph;
mod math;
pub mod model;
pub mod optimizer;
pub mod partition;
pub mod sim;
pub mod strategy;
pub mod synth;

pub use candidates::{candidate_vehicles, CandidateWarning};
pub use cost::{CandidateVehicle, CostBreakdown, PassengerSplit, SourceLink};
pub use model::{
    Assignment, CostParams, DemandBin, DemandEntry, DisruptionSpec, Link, Location, Mode, ModeKind,
    OpCost, Point, Scenario, ScenarioFile, Station, TransitLine, ValidationError, Vehicle,
    SCHEMA_VERSION,
};
pub use optimizer::{Method, Problem, ReallocationPlan, SolveOptions, SolveReport};
pub use partition::{apply_disruption, StationPartition};
pub use sim::KpiReport;
pub use strategy::{run_strategy, Setup, StrategyKind};
