//! Alternating optimization and simulation until the optimizer's arrival
//! durations match the simulated ones.
//!
//! Each mode carries a factor on its free-flow arrival durations. After every
//! simulation the factor moves halfway towards the ratio that would have
//! reproduced the simulated durations.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{ModeKind, Scenario};
use crate::optimizer::ReallocationPlan;
use crate::sim::KpiReport;
use crate::strategy::{simulate, Setup, StrategyError, StrategyKind};

pub const DAMPING: f64 = 0.5;
pub const FACTOR_RANGE: (f64, f64) = (0.1, 10.0);
/// Arrival durations below this many seconds are compared as if they took
/// this long.
pub const GAP_FLOOR: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub i: u32,
    #[serde(rename = "TA_opt")]
    pub ta_opt: BTreeMap<ModeKind, f64>,
    #[serde(rename = "TA_sim")]
    pub ta_sim: BTreeMap<ModeKind, f64>,
    /// Factors the iteration was solved with.
    pub speed_factors: BTreeMap<ModeKind, f64>,
    pub gap: f64,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupled {
    /// Minimum-objective iterate.
    pub plan: ReallocationPlan,
    pub kpi: KpiReport,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

/// Largest relative disagreement over the modes of the plan.
pub fn relative_gap(ta_opt: &BTreeMap<ModeKind, f64>, ta_sim: &BTreeMap<ModeKind, f64>) -> f64 {
    ta_opt
        .iter()
        .map(|(m, &opt)| {
            let sim = ta_sim.get(m).copied().unwrap_or(opt);
            (sim - opt).abs() / opt.max(GAP_FLOOR)
        })
        .fold(0.0, f64::max)
}

fn update(factors: &mut BTreeMap<ModeKind, f64>, rec: &IterationRecord) {
    for (m, &opt) in &rec.ta_opt {
        let Some(&sim) = rec.ta_sim.get(m) else {
            continue;
        };
        if opt <= 0.0 {
            continue;
        }
        let f = factors.entry(*m).or_insert(1.0);
        let next = *f * (1.0 + DAMPING * (sim / opt - 1.0));
        *f = next.clamp(FACTOR_RANGE.0, FACTOR_RANGE.1);
    }
}

/// Runs the loop for `kind` on the scenario's disruption.
///
/// Panics if `tol <= 0` or `max_iter == 0`.
pub fn fixed_point(
    scenario: &Scenario,
    kind: StrategyKind,
    seed: u64,
    tol: f64,
    max_iter: u32,
) -> Result<Coupled, StrategyError> {
    assert!(
        tol > 0.0 && max_iter >= 1,
        "tolerance and iteration cap must be positive"
    );
    let d = scenario.disruption().ok_or(StrategyError::NoDisruption)?;
    let setup = Setup::new(scenario, d)?;
    let mut factors: BTreeMap<ModeKind, f64> = BTreeMap::new();
    let mut iterations = Vec::new();
    let mut best: Option<(ReallocationPlan, KpiReport)> = None;
    let mut converged = false;
    for i in 0..max_iter {
        let (plan, _) = setup.solve(kind, &factors);
        let kpi = simulate(scenario, &setup, &plan, seed, false)?;
        let gap = relative_gap(&plan.ta_per_mode, &kpi.ta_sim_per_mode);
        converged = gap <= tol;
        let rec = IterationRecord {
            i,
            ta_opt: plan.ta_per_mode.clone(),
            ta_sim: kpi.ta_sim_per_mode.clone(),
            speed_factors: factors.clone(),
            gap,
            objective: plan.objective,
            converged,
        };
        update(&mut factors, &rec);
        iterations.push(rec);
        if best
            .as_ref()
            .is_none_or(|(b, _)| plan.objective < b.objective)
        {
            best = Some((plan, kpi));
        }
        if converged {
            break;
        }
    }
    let (plan, kpi) = best.expect("at least one iteration");
    Ok(Coupled {
        plan,
        kpi,
        iterations,
        converged,
    })
}
