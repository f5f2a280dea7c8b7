//! Exact choice of which candidate vehicles to reallocate.
//!
//! The objective is the full monetary plus loyalty cost of a selection,
//! evaluated directly (the leaving rate depends on the earliest arrival, the
//! waiting volume is clipped at zero). Two exact methods are provided:
//! depth-first branch and bound and plain enumeration, which serves as the
//! reference for testing.

mod bnb;
mod enumerate;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cost::{self, CandidateVehicle, CostBreakdown, CostContext};
use crate::model::ModeKind;

pub use bnb::lower_bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BranchAndBound,
    /// Every subset of the feasible candidates; exponential, for small
    /// instances only.
    Enumerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    /// Rank selections that leave nobody waiting unserved ahead of all
    /// others, cost second: a bridging service must carry everyone who
    /// waits when it can.
    pub coverage: bool,
    /// A vehicle may be selected only if every candidate arriving earlier is
    /// selected too.
    pub nearest_first: bool,
    /// Stop branch and bound after this many nodes.
    pub node_limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub candidates: Vec<CandidateVehicle>,
    pub ctx: CostContext,
}

/// A link of a scheduled line that loses a departure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeliberateLink {
    pub line: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReallocationPlan {
    /// Selected vehicle ids, sorted.
    pub gamma: Vec<String>,
    pub xi: Vec<DeliberateLink>,
    #[serde(rename = "U")]
    pub u: BTreeMap<ModeKind, u32>,
    #[serde(rename = "TA_per_mode")]
    pub ta_per_mode: BTreeMap<ModeKind, f64>,
    pub cost_breakdown: CostBreakdown,
    pub objective: f64,
}

impl ReallocationPlan {
    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn vehicle_count(&self) -> usize {
        self.gamma.len()
    }

    /// Mean arrival duration over all selected vehicles.
    pub fn mean_arrival(&self) -> f64 {
        let n: u32 = self.u.values().sum();
        if n == 0 {
            return 0.0;
        }
        let total: f64 = self
            .u
            .iter()
            .map(|(m, &k)| self.ta_per_mode[m] * k as f64)
            .sum();
        total / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub nodes_explored: u64,
    pub best_bound: f64,
    pub proven_optimal: bool,
    /// Seconds; zero when built without `std`.
    pub wall_time: f64,
}

/// Links whose scheduled vehicle is pulled away by the selection.
pub fn induced_xi(candidates: &[CandidateVehicle], selected: &[usize]) -> Vec<DeliberateLink> {
    let mut xi: Vec<DeliberateLink> = selected
        .iter()
        .filter_map(|&k| candidates[k].source.as_ref())
        .map(|s| DeliberateLink {
            line: s.line.clone(),
            from: s.from.clone(),
            to: s.to.clone(),
        })
        .collect();
    xi.sort();
    xi.dedup();
    xi
}

/// Builds the plan for a selection of candidate indices.
pub fn plan_for(problem: &Problem, selected: &[usize]) -> ReallocationPlan {
    let mut selected = selected.to_vec();
    selected.sort_unstable();
    let cands = &problem.candidates;
    let cost_breakdown = cost::evaluate(cands, &selected, &problem.ctx);
    let mut u = BTreeMap::new();
    for &k in &selected {
        *u.entry(cands[k].mode).or_insert(0u32) += 1;
    }
    let ta_per_mode = u
        .keys()
        .map(|&m| (m, cost::avg_arrival(selected.iter().map(|&k| &cands[k]), m)))
        .collect();
    let mut gamma: Vec<String> = selected.iter().map(|&k| cands[k].id.clone()).collect();
    gamma.sort();
    ReallocationPlan {
        gamma,
        xi: induced_xi(cands, &selected),
        u,
        ta_per_mode,
        objective: cost_breakdown.total,
        cost_breakdown,
    }
}

/// Ranking key of an evaluated selection.
#[derive(Debug, Clone)]
pub(crate) struct Score {
    pub vw: u64,
    pub objective: f64,
    pub selected: Vec<usize>,
    /// Sorted ids, for the final tie-break.
    pub ids: Vec<String>,
}

impl Score {
    pub(crate) fn new(problem: &Problem, selected: &[usize]) -> Self {
        let mut selected = selected.to_vec();
        selected.sort_unstable();
        let c = cost::evaluate(&problem.candidates, &selected, &problem.ctx);
        let mut ids: Vec<String> = selected
            .iter()
            .map(|&k| problem.candidates[k].id.clone())
            .collect();
        ids.sort();
        Score {
            vw: c.main_split.vw,
            objective: c.total,
            selected,
            ids,
        }
    }

    pub(crate) fn cmp(&self, other: &Score, coverage: bool) -> Ordering {
        let primary = if coverage {
            (self.vw > 0).cmp(&(other.vw > 0))
        } else {
            Ordering::Equal
        };
        primary
            .then(self.objective.total_cmp(&other.objective))
            .then(self.selected.len().cmp(&other.selected.len()))
            .then_with(|| self.ids.cmp(&other.ids))
    }
}

/// Candidates that can be selected at all: arrival within the disruption.
pub(crate) fn feasible(problem: &Problem) -> Vec<bool> {
    problem
        .candidates
        .iter()
        .map(|c| c.ta <= problem.ctx.td)
        .collect()
}

/// Candidate indices ordered by arrival, for the nearest-first rule.
pub(crate) fn arrival_order(problem: &Problem, allowed: &[bool]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..problem.candidates.len())
        .filter(|&k| allowed[k])
        .collect();
    order.sort_by(|&a, &b| {
        problem.candidates[a]
            .ta
            .total_cmp(&problem.candidates[b].ta)
            .then(a.cmp(&b))
    });
    order
}

pub fn solve(
    problem: &Problem,
    method: Method,
    options: &SolveOptions,
) -> (ReallocationPlan, SolveReport) {
    #[cfg(feature = "std")]
    let started = std::time::Instant::now();
    let (best, nodes, proven, bound) = match method {
        Method::BranchAndBound => bnb::search(problem, options),
        Method::Enumerate => enumerate::search(problem, options),
    };
    #[cfg(feature = "std")]
    let wall_time = started.elapsed().as_secs_f64();
    #[cfg(not(feature = "std"))]
    let wall_time = 0.0;
    let plan = plan_for(problem, &best.selected);
    let report = SolveReport {
        nodes_explored: nodes,
        best_bound: if proven { plan.objective } else { bound },
        proven_optimal: proven,
        wall_time,
    };
    (plan, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::SourceLink;
    use crate::model::{CostParams, OpCost};
    use alloc::string::ToString;
    use alloc::vec;

    fn ctx(v: f64) -> CostContext {
        CostContext {
            v,
            td: 7200.0,
            params: CostParams::default(),
        }
    }

    fn cand(id: &str, mode: ModeKind, ta: f64) -> CandidateVehicle {
        let (op_cost, capacity) = match mode {
            ModeKind::Bus => (OpCost::Flat(0.454), 70),
            ModeKind::Taxi => (
                OpCost::Affine {
                    per_km: 1.72,
                    base: 2.2,
                },
                4,
            ),
            _ => (OpCost::Flat(0.36), 8),
        };
        CandidateVehicle {
            id: id.to_string(),
            mode,
            op_cost,
            capacity,
            source: None,
            d_ri: ta / 3600.0 * 25.0,
            d_ij: 12.0,
            ta,
        }
    }

    #[test]
    fn bus_beats_expensive_taxi() {
        let p = Problem {
            candidates: vec![
                cand("bus", ModeKind::Bus, 300.0),
                cand("taxi", ModeKind::Taxi, 200.0),
            ],
            ctx: ctx(100.0),
        };
        let mut best: Option<(f64, Vec<usize>)> = None;
        for mask in 0..4usize {
            let sel: Vec<usize> = (0..2).filter(|k| mask >> k & 1 == 1).collect();
            let obj = cost::evaluate(&p.candidates, &sel, &p.ctx).total;
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, sel));
            }
        }
        let (oracle, sel) = best.unwrap();
        assert_eq!(sel, vec![0]);
        for m in [Method::BranchAndBound, Method::Enumerate] {
            let (plan, report) = solve(&p, m, &SolveOptions::default());
            assert_eq!(plan.gamma, vec!["bus".to_string()]);
            assert_eq!(plan.objective, oracle);
            assert!(report.proven_optimal);
        }
    }

    #[test]
    fn no_candidates_gives_do_nothing() {
        let p = Problem {
            candidates: vec![],
            ctx: ctx(300.0),
        };
        let (plan, _) = solve(&p, Method::BranchAndBound, &SolveOptions::default());
        assert!(plan.is_empty());
        assert!((plan.objective - 7395.0).abs() < 1e-9);
    }

    #[test]
    fn late_candidate_is_never_selected() {
        let mut late = cand("late", ModeKind::Bus, 7300.0);
        late.d_ri = 0.0;
        let p = Problem {
            candidates: vec![late],
            ctx: ctx(300.0),
        };
        for m in [Method::BranchAndBound, Method::Enumerate] {
            let (plan, _) = solve(&p, m, &SolveOptions::default());
            assert!(plan.is_empty());
        }
    }

    #[test]
    fn xi_follows_selected_sources() {
        let src = SourceLink {
            line: "L".to_string(),
            from: "R".to_string(),
            to: "S".to_string(),
            headway: 10.0,
            volume: 5.0,
        };
        let mut a = cand("a", ModeKind::Bus, 100.0);
        a.source = Some(src.clone());
        let mut b = cand("b", ModeKind::Bus, 120.0);
        b.source = Some(src);
        let t = cand("t", ModeKind::Taxi, 60.0);
        let cands = vec![a, b, t];
        let one = induced_xi(&cands, &[0]);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].from, "R");
        assert!(induced_xi(&cands, &[2]).is_empty());
        assert_eq!(induced_xi(&cands, &[0, 1]), one);
    }
}
