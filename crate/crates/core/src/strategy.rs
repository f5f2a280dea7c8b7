//! The six ways of answering a disruption, from solving to simulating.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::candidates::{candidate_vehicles, CandidateSet};
use crate::cost::{self, CandidateVehicle, CostContext};
use crate::model::{Assignment, DisruptionSpec, ModeKind, Scenario};
use crate::optimizer::{self, Method, Problem, ReallocationPlan, SolveOptions, SolveReport};
use crate::partition::{apply_disruption, PartitionError, StationPartition};
use crate::sim::{self, KpiReport, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    /// No disruption at all.
    Normal,
    /// Disruption, nobody is sent.
    DoNothing,
    /// Any in-service vehicle of any mode.
    Raas,
    /// Reserve buses from the depot.
    BusBridging,
    TaxiBridging,
    VanBridging,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Normal,
        StrategyKind::DoNothing,
        StrategyKind::Raas,
        StrategyKind::BusBridging,
        StrategyKind::TaxiBridging,
        StrategyKind::VanBridging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Normal => "Normal",
            StrategyKind::DoNothing => "DoNothing",
            StrategyKind::Raas => "RaaS",
            StrategyKind::BusBridging => "BusBridging",
            StrategyKind::TaxiBridging => "TaxiBridging",
            StrategyKind::VanBridging => "VanBridging",
        }
    }

    /// Case-insensitive; `-` and `_` are ignored.
    pub fn parse(s: &str) -> Option<StrategyKind> {
        let key: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .flat_map(|c| c.to_lowercase())
            .collect();
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().to_lowercase() == key)
    }

    /// Whether the strategy sends vehicles.
    pub fn bridges(self) -> bool {
        !matches!(self, StrategyKind::Normal | StrategyKind::DoNothing)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyError {
    /// A disrupted strategy on a scenario without a disruption.
    NoDisruption,
    Partition(PartitionError),
    Sim(SimError),
}

impl fmt::Display for StrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyError::NoDisruption => f.write_str("scenario has no disruption"),
            StrategyError::Partition(e) => write!(f, "{}", e),
            StrategyError::Sim(e) => write!(f, "{}", e),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StrategyError {}

impl From<PartitionError> for StrategyError {
    fn from(e: PartitionError) -> Self {
        StrategyError::Partition(e)
    }
}

impl From<SimError> for StrategyError {
    fn from(e: SimError) -> Self {
        StrategyError::Sim(e)
    }
}

/// Everything the strategies share for one disruption.
#[derive(Debug, Clone)]
pub struct Setup {
    pub disruption: DisruptionSpec,
    pub partition: StationPartition,
    pub candidates: CandidateSet,
    /// Vehicles waiting at a depot.
    pub depot: BTreeSet<String>,
    pub ctx: CostContext,
}

/// Blocked passengers over every disrupted pair during the disruption.
pub fn blocked_passengers(scenario: &Scenario, d: &DisruptionSpec, p: &StationPartition) -> f64 {
    let start = d.start as f64;
    let end = d.end() as f64;
    p.od_pairs
        .iter()
        .map(|(o, t)| cost::blocked_volume(scenario.demand(), o, t, d.mode, start, end))
        .sum()
}

impl Setup {
    pub fn new(scenario: &Scenario, d: &DisruptionSpec) -> Result<Setup, PartitionError> {
        let partition = apply_disruption(scenario, d)?;
        let candidates = candidate_vehicles(scenario, d, &partition, scenario.cost_params())?;
        let depot = scenario
            .vehicles()
            .iter()
            .filter(|v| matches!(v.assignment, Assignment::Depot(_)))
            .map(|v| v.id.clone())
            .collect();
        let ctx = CostContext {
            v: blocked_passengers(scenario, d, &partition),
            td: d.duration as f64,
            params: *scenario.cost_params(),
        };
        Ok(Setup {
            disruption: d.clone(),
            partition,
            candidates,
            depot,
            ctx,
        })
    }

    fn admits(&self, kind: StrategyKind, c: &CandidateVehicle) -> bool {
        let depot = self.depot.contains(&c.id);
        match kind {
            StrategyKind::Normal | StrategyKind::DoNothing => false,
            StrategyKind::Raas => !depot,
            StrategyKind::BusBridging => depot && c.mode == ModeKind::Bus,
            StrategyKind::TaxiBridging => !depot && c.mode == ModeKind::Taxi,
            StrategyKind::VanBridging => !depot && c.mode == ModeKind::AutomatedVan,
        }
    }

    /// The optimization problem of `kind`, with each mode's arrival
    /// durations multiplied by its factor in `factors` (1 when absent).
    pub fn problem(
        &self,
        kind: StrategyKind,
        factors: &BTreeMap<ModeKind, f64>,
    ) -> (Problem, SolveOptions) {
        let candidates = self
            .candidates
            .candidates
            .iter()
            .filter(|c| self.admits(kind, c))
            .map(|c| {
                let mut c = c.clone();
                if let Some(f) = factors.get(&c.mode) {
                    c.ta *= f;
                }
                c
            })
            .collect();
        let bridging = matches!(
            kind,
            StrategyKind::BusBridging | StrategyKind::TaxiBridging | StrategyKind::VanBridging
        );
        let options = SolveOptions {
            coverage: bridging,
            nearest_first: bridging,
            node_limit: None,
        };
        (
            Problem {
                candidates,
                ctx: self.ctx,
            },
            options,
        )
    }

    pub fn solve(
        &self,
        kind: StrategyKind,
        factors: &BTreeMap<ModeKind, f64>,
    ) -> (ReallocationPlan, SolveReport) {
        let (problem, options) = self.problem(kind, factors);
        optimizer::solve(&problem, Method::BranchAndBound, &options)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: StrategyKind,
    /// `None` for Normal.
    pub plan: Option<ReallocationPlan>,
    pub solve: Option<SolveReport>,
    pub kpi: KpiReport,
}

/// Simulates `plan` (or nothing) under the setup's disruption.
pub fn simulate(
    scenario: &Scenario,
    setup: &Setup,
    plan: &ReallocationPlan,
    seed: u64,
    trace: bool,
) -> Result<KpiReport, SimError> {
    let plan = if plan.is_empty() { None } else { Some(plan) };
    sim::run(scenario, Some(&setup.disruption), plan, seed, trace)
}

/// Solves and simulates one strategy on the scenario's own disruption.
pub fn run_strategy(
    scenario: &Scenario,
    kind: StrategyKind,
    seed: u64,
    trace: bool,
) -> Result<Outcome, StrategyError> {
    if kind == StrategyKind::Normal {
        let kpi = sim::run(scenario, None, None, seed, trace)?;
        return Ok(Outcome {
            kind,
            plan: None,
            solve: None,
            kpi,
        });
    }
    let d = scenario.disruption().ok_or(StrategyError::NoDisruption)?;
    let setup = Setup::new(scenario, d)?;
    let (plan, report) = setup.solve(kind, &BTreeMap::new());
    let kpi = simulate(scenario, &setup, &plan, seed, trace)?;
    Ok(Outcome {
        kind,
        plan: Some(plan),
        solve: if kind.bridges() { Some(report) } else { None },
        kpi,
    })
}

/// Parameter varied by a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Blocked passengers.
    Volume,
    Alpha,
    CaRate,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<SweepParam> {
        match s {
            "volume" | "v" => Some(SweepParam::Volume),
            "alpha" => Some(SweepParam::Alpha),
            "ca_rate" | "ca-rate" | "arrangement_rate" => Some(SweepParam::CaRate),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Volume => "volume",
            SweepParam::Alpha => "alpha",
            SweepParam::CaRate => "ca_rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub strategy: StrategyKind,
    pub vehicles: usize,
    pub z1: f64,
    pub z2: f64,
    /// Leaving part of the loyalty cost, main and deliberate stations.
    pub z2_leaving: f64,
    pub objective: f64,
    /// Do-nothing objective at the same parameter value.
    pub do_nothing: f64,
}

impl Setup {
    /// Copy with one parameter replaced.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Setup {
        let mut s = self.clone();
        match param {
            SweepParam::Volume => s.ctx.v = value,
            SweepParam::Alpha => s.ctx.params.alpha = value,
            SweepParam::CaRate => s.ctx.params.ca_rate = value,
        }
        s
    }

    /// Optimizer-only evaluation of `kind` at one sweep point.
    pub fn sweep_row(&self, param: SweepParam, value: f64, kind: StrategyKind) -> SweepRow {
        let s = self.with_param(param, value);
        let none = BTreeMap::new();
        let (plan, _) = s.solve(kind, &none);
        let (dn, _) = s.solve(StrategyKind::DoNothing, &none);
        let c = &plan.cost_breakdown;
        SweepRow {
            value,
            strategy: kind,
            vehicles: plan.vehicle_count(),
            z1: c.z1,
            z2: c.z2,
            z2_leaving: c.leaving_main + c.leaving_deliberate,
            objective: plan.objective,
            do_nothing: dn.objective,
        }
    }
}
