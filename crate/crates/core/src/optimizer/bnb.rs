//! Depth-first branch and bound.
//!
//! Candidates are branched on in order of cost per seat, include first. A
//! node's bound is the committed cost plus the cheapest way to handle the
//! remaining blocked passengers: every undecided vehicle is assumed to
//! arrive as early as the earliest of them, and the seats still needed are
//! bought fractionally from the undecided vehicles by cost per seat, or left
//! waiting at the waiting-cost price.
//!
//! Among vehicles with the same source (or none), one that is no larger, no
//! earlier and strictly more expensive than another is only selected if the
//! other one is.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{arrival_order, feasible, Problem, Score, SolveOptions};
use crate::cost::{self, CandidateVehicle, SourceLink};

struct Prepared<'a> {
    problem: &'a Problem,
    allowed: Vec<bool>,
    /// Monetary cost of each candidate.
    cost: Vec<f64>,
    /// Candidates sorted by cost per seat.
    by_seat: Vec<usize>,
    /// Price of one leaving passenger.
    q: f64,
    /// Price of one unserved waiting passenger.
    p: f64,
}

impl<'a> Prepared<'a> {
    fn new(problem: &'a Problem) -> Self {
        let allowed = feasible(problem);
        let cost: Vec<f64> = problem
            .candidates
            .iter()
            .map(|c| {
                let vc = cost::vehicle_cost(c, &problem.ctx);
                vc.transfer + vc.arrangement
            })
            .collect();
        let mut by_seat: Vec<usize> = (0..cost.len()).filter(|&k| allowed[k]).collect();
        let seat = |k: usize| cost[k] / problem.candidates[k].capacity as f64;
        by_seat.sort_by(|&a, &b| {
            seat(a)
                .total_cmp(&seat(b))
                .then(
                    problem.candidates[a]
                        .ta
                        .total_cmp(&problem.candidates[b].ta),
                )
                .then_with(|| problem.candidates[a].id.cmp(&problem.candidates[b].id))
                .then(a.cmp(&b))
        });
        let hours = problem.ctx.td / 3600.0;
        let params = &problem.ctx.params;
        Prepared {
            problem,
            allowed,
            cost,
            by_seat,
            q: params.cl + hours * params.ct,
            p: hours * params.ct,
        }
    }

    fn cands(&self) -> &[CandidateVehicle] {
        &self.problem.candidates
    }

    /// Leaving passengers when the earliest vehicle arrives after `min_ta`
    /// (`None`: nobody comes).
    fn leaving(&self, min_ta: Option<f64>) -> u64 {
        let ctx = &self.problem.ctx;
        let l = match min_ta {
            Some(t) => cost::leaving_rate(t, ctx.td, ctx.params.alpha, ctx.params.beta),
            None => 1.0 - ctx.params.beta,
        };
        cost::passenger_split(ctx.v, l, 0).vl
    }

    fn blocked(&self) -> u64 {
        cost::passenger_split(self.problem.ctx.v, 0.0, 0).v
    }

    fn deliberate(&self, sources: &[&SourceLink]) -> f64 {
        let ctx = &self.problem.ctx;
        sources
            .iter()
            .map(|s| {
                let (a, b) = cost::loyalty_deliberate(
                    &cost::deliberate_split(s, ctx.td, &ctx.params),
                    s.headway,
                    &ctx.params,
                );
                a + b
            })
            .sum()
    }

    /// Bound on every completion of `committed` using only `undecided`.
    fn bound(&self, committed: &[usize], undecided: &dyn Fn(usize) -> bool) -> f64 {
        let cands = self.cands();
        let mut fixed = 0.0;
        let mut cap = 0u64;
        let mut min_ta: Option<f64> = None;
        let mut sources: Vec<&SourceLink> = Vec::new();
        let mut lower_ta = |t: f64| {
            min_ta = Some(min_ta.map_or(t, |m: f64| m.min(t)));
        };
        for &k in committed {
            fixed += self.cost[k];
            cap += cands[k].capacity as u64;
            lower_ta(cands[k].ta);
            if let Some(s) = &cands[k].source {
                if !sources.iter().any(|o| o.same_link(s)) {
                    sources.push(s);
                }
            }
        }
        for &k in &self.by_seat {
            if undecided(k) {
                lower_ta(cands[k].ta);
            }
        }
        let vl = self.leaving(min_ta);
        let mut need = self.blocked().saturating_sub(vl).saturating_sub(cap) as f64;
        let mut cover = 0.0;
        for &k in &self.by_seat {
            if need <= 0.0 {
                break;
            }
            if !undecided(k) {
                continue;
            }
            let c = &cands[k];
            let per_seat = self.cost[k] / c.capacity as f64;
            if per_seat >= self.p {
                break;
            }
            let take = need.min(c.capacity as f64);
            cover += per_seat * take;
            need -= take;
        }
        cover += self.p * need;
        fixed + self.deliberate(&sources) + self.q * vl as f64 + cover
    }

    /// Whether `a` makes `b` pointless: same source, at least as many seats,
    /// no later, cheaper (or identical with a smaller id).
    fn dominates(&self, a: usize, b: usize) -> bool {
        let (ca, cb) = (&self.cands()[a], &self.cands()[b]);
        let same_source = match (&ca.source, &cb.source) {
            (None, None) => true,
            (Some(x), Some(y)) => x.same_link(y),
            _ => false,
        };
        if !same_source || ca.capacity < cb.capacity || ca.ta > cb.ta {
            return false;
        }
        let (xa, xb) = (self.cost[a], self.cost[b]);
        if xa < xb - 1e-9 * xb.abs().max(1.0) {
            return true;
        }
        let va = cost::vehicle_cost(ca, &self.problem.ctx);
        let vb = cost::vehicle_cost(cb, &self.problem.ctx);
        va.transfer == vb.transfer
            && va.arrangement == vb.arrangement
            && ca.capacity == cb.capacity
            && ca.ta == cb.ta
            && ca.id < cb.id
    }
}

/// Lower bound on the objective of every selection that agrees with
/// `decisions` (`Some(true)` selected, `Some(false)` rejected, `None` open).
pub fn lower_bound(problem: &Problem, decisions: &[Option<bool>]) -> f64 {
    let prep = Prepared::new(problem);
    let committed: Vec<usize> = (0..decisions.len())
        .filter(|&k| decisions[k] == Some(true))
        .collect();
    let open = |k: usize| decisions[k].is_none() && prep.allowed[k];
    prep.bound(&committed, &open)
}

fn eps(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

struct Search<'a> {
    prep: Prepared<'a>,
    options: SolveOptions,
    order: Vec<usize>,
    rank: Vec<usize>,
    dominators: Vec<Vec<usize>>,
    /// Seats among `order[pos..]`.
    suffix_cap: Vec<u64>,
    excluded: Vec<bool>,
    committed: Vec<usize>,
    best: Score,
    nodes: u64,
    aborted: bool,
}

impl<'a> Search<'a> {
    fn offer(&mut self, selected: &[usize]) {
        let s = Score::new(self.prep.problem, selected);
        if s.cmp(&self.best, self.options.coverage) == Ordering::Less {
            self.best = s;
        }
    }

    fn prune(&self, pos: usize) -> bool {
        let rank = &self.rank;
        let open = |k: usize| rank[k] != usize::MAX && rank[k] >= pos;
        let lb = self.prep.bound(&self.committed, &open);
        let worse = lb > self.best.objective + eps(self.best.objective);
        if !self.options.coverage {
            return worse;
        }
        let cands = self.prep.cands();
        let cap: u64 = self
            .committed
            .iter()
            .map(|&k| cands[k].capacity as u64)
            .sum();
        let min_ta = self.committed.iter().map(|&k| cands[k].ta).reduce(f64::min);
        let vl_hi = self.prep.leaving(min_ta);
        let vw_lb = self
            .prep
            .blocked()
            .saturating_sub(vl_hi)
            .saturating_sub(cap)
            .saturating_sub(self.suffix_cap[pos]);
        let (lb_short, best_short) = (vw_lb > 0, self.best.vw > 0);
        lb_short & !best_short || (lb_short == best_short && worse)
    }

    fn node(&mut self, pos: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if let Some(limit) = self.options.node_limit {
            if self.nodes > limit {
                self.aborted = true;
                return;
            }
        }
        if pos == self.order.len() {
            let selected = self.committed.clone();
            self.offer(&selected);
            return;
        }
        if self.prune(pos) {
            return;
        }
        let k = self.order[pos];
        if !self.dominators[k].iter().any(|&a| self.excluded[a]) {
            self.committed.push(k);
            self.node(pos + 1);
            self.committed.pop();
        }
        self.excluded[k] = true;
        self.node(pos + 1);
        self.excluded[k] = false;
    }
}

pub(super) fn search(problem: &Problem, options: &SolveOptions) -> (Score, u64, bool, f64) {
    let prep = Prepared::new(problem);
    let n = problem.candidates.len();
    let mut best = Score::new(problem, &[]);

    if options.nearest_first {
        // Only prefixes of the arrival order qualify.
        let order = arrival_order(problem, &prep.allowed);
        for len in 1..=order.len() {
            let s = Score::new(problem, &order[..len]);
            if s.cmp(&best, options.coverage) == Ordering::Less {
                best = s;
            }
        }
        let bound = best.objective;
        return (best, order.len() as u64 + 1, true, bound);
    }

    let order = prep.by_seat.clone();
    let mut rank = vec![usize::MAX; n];
    for (r, &k) in order.iter().enumerate() {
        rank[k] = r;
    }
    let mut dominators = vec![Vec::new(); n];
    if !options.coverage {
        for &b in &order {
            for &a in &order[..rank[b]] {
                if prep.dominates(a, b) {
                    dominators[b].push(a);
                }
            }
        }
    }
    let mut suffix_cap = vec![0u64; order.len() + 1];
    for pos in (0..order.len()).rev() {
        suffix_cap[pos] = suffix_cap[pos + 1] + problem.candidates[order[pos]].capacity as u64;
    }
    // Greedy incumbents: cheapest seats first.
    for len in 1..=order.len() {
        let s = Score::new(problem, &order[..len]);
        if s.cmp(&best, options.coverage) == Ordering::Less {
            best = s;
        }
    }
    let root_bound = {
        let open = |k: usize| rank[k] != usize::MAX;
        prep.bound(&[], &open)
    };

    let mut s = Search {
        prep,
        options: *options,
        order,
        rank,
        dominators,
        suffix_cap,
        excluded: vec![false; n],
        committed: Vec::new(),
        best,
        nodes: 0,
        aborted: false,
    };
    s.node(0);
    let proven = !s.aborted;
    let bound = root_bound.min(s.best.objective);
    (s.best, s.nodes, proven, bound)
}
