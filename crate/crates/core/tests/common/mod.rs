#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use raas_core::cost::{CandidateVehicle, CostContext, SourceLink};
use raas_core::{CostParams, ModeKind, OpCost, Problem, ReallocationPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random instance: mixed modes, a few shared source links, some
/// candidates arriving after the disruption ends.
pub fn instance(seed: u64, n: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let links: Vec<SourceLink> = (0..3)
        .map(|k| SourceLink {
            line: format!("L{}", k),
            from: format!("R{}", k),
            to: format!("S{}", k),
            headway: [5.0, 10.0, 15.0][rng.gen_range(0..3)],
            volume: rng.gen_range(0.0..40.0),
        })
        .collect();
    let td = 7200.0;
    let candidates = (0..n)
        .map(|k| {
            let (mode, op_cost, capacity, speed) = match rng.gen_range(0..4) {
                0 => (ModeKind::Bus, OpCost::Flat(0.454), 70, 25.0),
                1 => (
                    ModeKind::Taxi,
                    OpCost::Affine {
                        per_km: 1.72,
                        base: 2.2,
                    },
                    4,
                    30.0,
                ),
                2 => (ModeKind::AutomatedVan, OpCost::Flat(0.36), 8, 25.0),
                _ => (ModeKind::Tram, OpCost::Flat(0.196), 180, 20.0),
            };
            let d_ri: f64 = rng.gen_range(0.0..40.0);
            let source = if mode == ModeKind::Bus || mode == ModeKind::Tram {
                if rng.gen_bool(0.7) {
                    Some(links[rng.gen_range(0..links.len())].clone())
                } else {
                    None
                }
            } else {
                None
            };
            CandidateVehicle {
                id: format!("c{:02}", k),
                mode,
                op_cost,
                capacity,
                source,
                d_ri,
                d_ij: rng.gen_range(1.0..20.0),
                ta: 3600.0 * d_ri / speed * rng.gen_range(0.5..1.5),
            }
        })
        .collect();
    Problem {
        candidates,
        ctx: CostContext {
            v: rng.gen_range(0.0..400.0_f64).round(),
            td,
            params: CostParams::default(),
        },
    }
}

fn rate(op: &OpCost, d: f64) -> f64 {
    match *op {
        OpCost::Flat(r) => r,
        OpCost::Affine { per_km, base } => per_km * d + base,
    }
}

/// Objective written out from the formulas.
pub fn oracle_objective(p: &Problem, selected: &[usize]) -> f64 {
    let c = &p.ctx.params;
    let td = p.ctx.td;
    let td_h = td / 3600.0;
    let mut z1 = 0.0;
    let mut min_ta = f64::INFINITY;
    let mut cap = 0.0;
    let mut links: Vec<&SourceLink> = Vec::new();
    for &k in selected {
        let x = &p.candidates[k];
        let d = x.d_ri + x.d_ij;
        let full = rate(&x.op_cost, d) * x.capacity as f64 * d;
        let paid = if x.ta <= td / 2.0 {
            c.p_max
        } else if x.ta < td {
            c.p_min
        } else {
            0.0
        };
        z1 += full * paid + c.ca_rate * full / (x.ta / 60.0).max(1.0);
        min_ta = min_ta.min(x.ta);
        cap += x.capacity as f64;
        if let Some(s) = &x.source {
            if !links
                .iter()
                .any(|o| o.line == s.line && o.from == s.from && o.to == s.to)
            {
                links.push(s);
            }
        }
    }
    let l = if selected.is_empty() {
        1.0 - c.beta
    } else {
        c.alpha + (1.0 - c.beta - c.alpha) * min_ta.clamp(0.0, td) / td
    };
    let v = p.ctx.v.round();
    let vl = (l * v).round().min(v);
    let vw = (v - vl - cap).max(0.0);
    let mut z2 = (c.cl + td_h * c.ct) * vl + td_h * c.ct * vw;
    for s in links {
        let h = s.headway / 60.0;
        let ls = c.alpha + (1.0 - c.beta - c.alpha) * (s.headway * 60.0).min(td) / td;
        let vs = s.volume.round();
        let vls = (ls * vs).round();
        z2 += (c.cl + h * c.ct) * vls + h * c.ct * (vs - vls);
    }
    z1 + z2
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Checks a plan against the constraints without reusing optimizer code.
pub fn validate(p: &Problem, plan: &ReallocationPlan, coverage: bool) -> Result<(), String> {
    let by_id: BTreeMap<&str, usize> = p
        .candidates
        .iter()
        .enumerate()
        .map(|(k, c)| (c.id.as_str(), k))
        .collect();
    let mut sel = Vec::new();
    for id in &plan.gamma {
        sel.push(*by_id.get(id.as_str()).ok_or(format!("unknown id {}", id))?);
    }
    let unique: BTreeSet<usize> = sel.iter().copied().collect();
    if unique.len() != sel.len() {
        return Err("vehicle selected twice".into());
    }
    // xi is exactly the set of source links of selected vehicles
    let want: BTreeSet<(String, String, String)> = sel
        .iter()
        .filter_map(|&k| p.candidates[k].source.as_ref())
        .map(|s| (s.line.clone(), s.from.clone(), s.to.clone()))
        .collect();
    let got: BTreeSet<(String, String, String)> = plan
        .xi
        .iter()
        .map(|x| (x.line.clone(), x.from.clone(), x.to.clone()))
        .collect();
    if want != got || got.len() != plan.xi.len() {
        return Err(format!("xi {:?} != {:?}", got, want));
    }
    let h_max = p.ctx.params.h_max;
    for &k in &sel {
        if let Some(s) = &p.candidates[k].source {
            if s.headway > h_max {
                return Err(format!(
                    "{} sourced from a headway above the cap",
                    p.candidates[k].id
                ));
            }
        }
    }
    let mut counts: BTreeMap<ModeKind, u32> = BTreeMap::new();
    let mut ta_sum: BTreeMap<ModeKind, f64> = BTreeMap::new();
    for &k in &sel {
        let c = &p.candidates[k];
        *counts.entry(c.mode).or_default() += 1;
        *ta_sum.entry(c.mode).or_default() += c.ta;
    }
    if counts != plan.u {
        return Err(format!("U {:?} != {:?}", plan.u, counts));
    }
    for (m, n) in &counts {
        let avg = ta_sum[m] / *n as f64;
        if avg > p.ctx.td {
            return Err(format!("mean arrival of {:?} exceeds the disruption", m));
        }
        if !close(avg, plan.ta_per_mode[m], 1e-12) {
            return Err("TA_per_mode mismatch".into());
        }
    }
    let oracle = oracle_objective(p, &sel);
    if !close(oracle, plan.objective, 1e-9) {
        return Err(format!("objective {} vs oracle {}", plan.objective, oracle));
    }
    // a bridging service may cost more than doing nothing
    if !coverage && plan.objective > oracle_objective(p, &[]) + 1e-9 {
        return Err("worse than doing nothing".into());
    }
    Ok(())
}
