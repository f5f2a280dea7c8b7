use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::router::{walk_seconds, Leg, Net};
use super::{
    aggregate, per_mode_mean, vdf, AgentKpi, AgentState, KpiReport, TraceEvent, TraceKind,
    VehicleKpi, SLICE,
};
use crate::candidates::vehicle_start;
use crate::graph::{blocked_links, shortest_path};
use crate::math;
use crate::model::{DisruptionSpec, ModeKind, Scenario};
use crate::optimizer::ReallocationPlan;
use crate::partition::{apply_disruption, PartitionError};

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Partition(PartitionError),
    UnknownVehicle(String),
    /// A replacement vehicle cannot reach or drive the bridge.
    NoPath(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Partition(e) => write!(f, "{}", e),
            SimError::UnknownVehicle(v) => write!(f, "plan names unknown vehicle {}", v),
            SimError::NoPath(v) => write!(f, "replacement vehicle {} has no path", v),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

#[derive(Clone, Copy, Debug)]
enum Ev {
    Start(u32),
    WalkDone(u32),
    Trip { trip: u32, pos: u32 },
    DisruptionStart,
    DisruptionEnd,
    AtOrigin(u32),
    AtDestination(u32),
}

struct Queued {
    time: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        o.time.total_cmp(&self.time).then(o.seq.cmp(&self.seq))
    }
}

struct Agent {
    entry: usize,
    origin: usize,
    dest: usize,
    depart: f64,
    station: usize,
    legs: VecDeque<Leg>,
    state: Option<AgentState>,
    in_vehicle: f64,
    walk: f64,
    wait: f64,
    distance: f64,
    wait_since: f64,
    board_time: f64,
    stranded: bool,
    left: bool,
    bridged: bool,
}

struct Trip {
    line: usize,
    k: u32,
    onboard: Vec<u32>,
}

struct Replacement {
    id: String,
    mode: ModeKind,
    start: usize,
    speed: f64,
    capacity: u32,
    onboard: Vec<u32>,
    ta_sim: f64,
    passengers: u32,
    service_km: f64,
}

struct Disruption {
    start: f64,
    end: f64,
    origin: usize,
    destination: usize,
    leave_rate: f64,
    /// `(line, station)` pairs whose next departure is pulled.
    xi: BTreeSet<(usize, usize)>,
    blocked: BTreeSet<usize>,
}

struct Sim<'a> {
    scenario: &'a Scenario,
    net: Net,
    seed: u64,
    heap: BinaryHeap<Queued>,
    seq: u64,
    agents: Vec<Agent>,
    trips: Vec<Trip>,
    queues: Vec<Vec<VecDeque<u32>>>,
    entering: BTreeMap<(usize, i64), u32>,
    dis: Option<Disruption>,
    vehicles: Vec<Replacement>,
    bridge_queue: VecDeque<u32>,
    loading: VecDeque<u32>,
    xi_used: BTreeSet<(usize, usize)>,
    trace: Option<Vec<TraceEvent>>,
}

/// Simulates the scenario's day.
///
/// With `disruption` set and no `plan`, nobody is sent to bridge and stranded
/// passengers leave at the maximum rate.
pub fn run(
    scenario: &Scenario,
    disruption: Option<&DisruptionSpec>,
    plan: Option<&ReallocationPlan>,
    seed: u64,
    trace: bool,
) -> Result<KpiReport, SimError> {
    let disruption = disruption.filter(|d| !d.affected_links.is_empty());
    let net = Net::new(scenario, disruption);
    let mut sim = Sim {
        scenario,
        queues: net
            .lines
            .iter()
            .map(|l| vec![VecDeque::new(); l.stops.len()])
            .collect(),
        net,
        seed,
        heap: BinaryHeap::new(),
        seq: 0,
        agents: Vec::new(),
        trips: Vec::new(),
        entering: BTreeMap::new(),
        dis: None,
        vehicles: Vec::new(),
        bridge_queue: VecDeque::new(),
        loading: VecDeque::new(),
        xi_used: BTreeSet::new(),
        trace: if trace { Some(Vec::new()) } else { None },
    };
    if let Some(d) = disruption {
        sim.setup_disruption(d, plan)?;
    }
    sim.spawn_agents();
    sim.spawn_trips();
    while let Some(Queued { time, ev, .. }) = sim.heap.pop() {
        sim.handle(time, ev)?;
    }
    Ok(sim.report())
}

impl<'a> Sim<'a> {
    fn push(&mut self, time: f64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Queued {
            time,
            seq: self.seq,
            ev,
        });
    }

    fn setup_disruption(
        &mut self,
        d: &DisruptionSpec,
        plan: Option<&ReallocationPlan>,
    ) -> Result<(), SimError> {
        let s = self.scenario;
        let partition = apply_disruption(s, d).map_err(SimError::Partition)?;
        let (i, j) = partition.bridge_pair().map_err(SimError::Partition)?;
        let params = s.cost_params();
        let leave_rate = plan.map_or(1.0 - params.beta, |p| {
            if p.is_empty() {
                1.0 - params.beta
            } else {
                p.cost_breakdown.main_split.l
            }
        });
        let mut xi = BTreeSet::new();
        if let Some(p) = plan {
            for x in &p.xi {
                let line = self.net.lines.iter().position(|l| l.id == x.line);
                let st = s.station_idx(&x.from);
                if let (Some(l), Some(st)) = (line, st) {
                    xi.insert((l, st));
                }
            }
            for id in &p.gamma {
                let v = s
                    .vehicles()
                    .iter()
                    .find(|v| &v.id == id)
                    .ok_or_else(|| SimError::UnknownVehicle(id.clone()))?;
                let speed = s.mode(v.mode).map_or(30.0, |m| m.default_speed);
                self.vehicles.push(Replacement {
                    id: id.clone(),
                    mode: v.mode,
                    start: vehicle_start(s, v),
                    speed,
                    capacity: s.vehicle_capacity(v),
                    onboard: Vec::new(),
                    ta_sim: 0.0,
                    passengers: 0,
                    service_km: 0.0,
                });
            }
        }
        self.dis = Some(Disruption {
            start: d.start as f64,
            end: d.end() as f64,
            origin: s.station_idx(&i).expect("partition station"),
            destination: s.station_idx(&j).expect("partition station"),
            leave_rate,
            xi,
            blocked: blocked_links(s, d),
        });
        self.push(d.start as f64, Ev::DisruptionStart);
        self.push(d.end() as f64, Ev::DisruptionEnd);
        Ok(())
    }

    fn spawn_agents(&mut self) {
        let s = self.scenario;
        let mut pending: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
        for (e, entry) in s.demand().iter().enumerate() {
            let o = s.station_idx(&entry.origin).expect("validated");
            let d = s.station_idx(&entry.destination).expect("validated");
            for bin in &entry.bins {
                let len = (bin.end - bin.start) as f64;
                let count = math::round(bin.rate * len / 3600.0) as usize;
                for k in 0..count {
                    let t = bin.start as f64 + (k as f64 + 0.5) * len / count as f64;
                    pending.push((t, e, k, o, d));
                }
            }
        }
        pending.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (t, e, _, o, d) in pending {
            let mode = s.demand()[e].mode;
            let legs = match self.net.direct(o, d, mode) {
                Some(leg) => Some(vec![leg]),
                None => self.net.route(o, d, false),
            };
            let id = self.agents.len() as u32;
            let state = if legs.is_none() {
                Some(AgentState::Unserved)
            } else {
                None
            };
            self.agents.push(Agent {
                entry: e,
                origin: o,
                dest: d,
                depart: t,
                station: o,
                legs: legs.unwrap_or_default().into(),
                state,
                in_vehicle: 0.0,
                walk: 0.0,
                wait: 0.0,
                distance: 0.0,
                wait_since: t,
                board_time: t,
                stranded: false,
                left: false,
                bridged: false,
            });
            if state.is_none() {
                self.push(t, Ev::Start(id));
            }
        }
    }

    fn spawn_trips(&mut self) {
        for li in 0..self.net.lines.len() {
            let (w0, w1, h) = {
                let l = &self.net.lines[li];
                (l.window[0] as f64, l.window[1] as f64, l.headway * 60.0)
            };
            let mut k = 0u32;
            loop {
                let t = w0 + k as f64 * h;
                if t > w1 {
                    break;
                }
                let id = self.trips.len() as u32;
                self.trips.push(Trip {
                    line: li,
                    k,
                    onboard: Vec::new(),
                });
                self.push(t, Ev::Trip { trip: id, pos: 0 });
                k += 1;
            }
        }
    }

    fn active(&self, t: f64) -> bool {
        self.dis.as_ref().is_some_and(|d| d.start <= t && t < d.end)
    }

    /// Registers a vehicle entering `link` at `t` and returns the resulting
    /// delay factor.
    fn enter(&mut self, link: usize, t: f64) -> f64 {
        let slice = math::floor(t / SLICE) as i64;
        let count = self.entering.entry((link, slice)).or_insert(0);
        *count += 1;
        let volume = *count as f64 * (3600.0 / SLICE);
        vdf(volume, self.scenario.links()[link].capacity)
    }

    /// Drives `links` from `t0` at `speed`; returns the duration.
    fn drive(&mut self, links: &[usize], t0: f64, speed: f64) -> f64 {
        let mut km = 0.0;
        for &l in links {
            let t = t0 + 3600.0 * km / speed;
            let factor = self.enter(l, t);
            let link = &self.scenario.links()[l];
            let ratio = speed / link.free_flow_speed.min(speed) * factor;
            km += link.length * ratio;
        }
        3600.0 * km / speed
    }

    fn log(
        &mut self,
        t: f64,
        kind: TraceKind,
        vehicle: String,
        agent: u32,
        station: usize,
        onboard: usize,
        capacity: u32,
    ) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TraceEvent {
                time: t,
                kind,
                vehicle,
                agent: agent as u64,
                station: self.scenario.stations()[station].id.clone(),
                onboard: onboard as u32,
                capacity,
            });
        }
    }

    fn trip_label(&self, trip: usize) -> String {
        let t = &self.trips[trip];
        format!("{}#{}", self.net.lines[t.line].id, t.k)
    }

    fn handle(&mut self, t: f64, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::Start(a) => self.begin_leg(a, t),
            Ev::WalkDone(a) => {
                let ag = &mut self.agents[a as usize];
                if let Some(Leg::Walk { to, .. }) = ag.legs.pop_front() {
                    ag.station = to;
                }
                self.begin_leg(a, t);
            }
            Ev::Trip { trip, pos } => self.trip_at(trip as usize, pos as usize, t),
            Ev::DisruptionStart => self.disruption_start(t)?,
            Ev::DisruptionEnd => self.disruption_end(t)?,
            Ev::AtOrigin(v) => {
                let end = self.dis.as_ref().map_or(t, |d| d.end);
                if t < end {
                    self.loading.push_back(v);
                    self.try_load(t)?;
                }
            }
            Ev::AtDestination(v) => self.unload(v as usize, t),
        }
        Ok(())
    }

    fn begin_leg(&mut self, a: u32, t: f64) {
        loop {
            let ag = &mut self.agents[a as usize];
            match ag.legs.front().cloned() {
                None => {
                    ag.state = Some(if ag.left {
                        AgentState::Rerouted
                    } else {
                        AgentState::Arrived
                    });
                    return;
                }
                Some(Leg::Walk { km, .. }) => {
                    let dur = walk_seconds(km);
                    ag.walk += dur;
                    ag.distance += km;
                    self.push(t + dur, Ev::WalkDone(a));
                    return;
                }
                Some(Leg::Ride {
                    line,
                    board,
                    alight,
                }) => {
                    if board >= alight {
                        ag.legs.pop_front();
                        continue;
                    }
                    self.join_queue(a, line, board, t);
                    return;
                }
            }
        }
    }

    fn join_queue(&mut self, a: u32, line: usize, pos: usize, t: f64) {
        let l = &self.net.lines[line];
        let at_origin = self.dis.as_ref().is_some_and(|d| l.stops[pos] == d.origin);
        if self.active(t) && at_origin && l.disrupted_hop[pos] {
            self.strand(a, t);
            return;
        }
        self.agents[a as usize].wait_since = t;
        self.queues[line][pos].push_back(a);
    }

    fn leave_draw(&self, a: u32) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(a as u64);
        rng.gen::<f64>()
    }

    fn strand(&mut self, a: u32, t: f64) {
        let (origin, rate) = {
            let d = self.dis.as_ref().expect("stranding needs a disruption");
            (d.origin, d.leave_rate)
        };
        let u = self.leave_draw(a);
        let ag = &mut self.agents[a as usize];
        ag.stranded = true;
        ag.station = origin;
        if u < rate {
            ag.left = true;
            let dest = ag.dest;
            match self.net.route(origin, dest, true) {
                Some(legs) => {
                    self.agents[a as usize].legs = legs.into();
                    self.begin_leg(a, t);
                }
                None => self.agents[a as usize].state = Some(AgentState::Unserved),
            }
        } else {
            ag.wait_since = t;
            self.bridge_queue.push_back(a);
            // loading only happens from events, never recursively here
            let _ = self.try_load(t);
        }
    }

    /// Ends the current ride segment of `a` at stop `pos` of `line`.
    fn close_segment(&mut self, a: u32, line: usize, pos: usize, t: f64) {
        let cum = &self.net.lines[line].cum;
        let station = self.net.lines[line].stops[pos];
        let ag = &mut self.agents[a as usize];
        if let Some(Leg::Ride { board, .. }) = ag.legs.front_mut() {
            ag.in_vehicle += t - ag.board_time;
            ag.distance += cum[pos] - cum[*board];
            *board = pos;
        }
        ag.station = station;
    }

    fn trip_at(&mut self, trip: usize, pos: usize, t: f64) {
        let line = self.trips[trip].line;
        let station = self.net.lines[line].stops[pos];
        let cap = self.net.lines[line].capacity;
        let last = pos + 1 == self.net.lines[line].stops.len();

        // alight
        let onboard = core::mem::take(&mut self.trips[trip].onboard);
        let mut staying = Vec::with_capacity(onboard.len());
        let mut alighting = Vec::new();
        for a in onboard {
            match self.agents[a as usize].legs.front() {
                Some(Leg::Ride { alight, .. }) if *alight == pos => alighting.push(a),
                _ => staying.push(a),
            }
        }
        self.trips[trip].onboard = staying;
        let label = if self.trace.is_some() {
            self.trip_label(trip)
        } else {
            String::new()
        };
        for (n, &a) in alighting.iter().enumerate() {
            self.close_segment(a, line, pos, t);
            self.agents[a as usize].legs.pop_front();
            let left_on = self.trips[trip].onboard.len() + alighting.len() - n - 1;
            self.log(
                t,
                TraceKind::Alight,
                label.clone(),
                a,
                station,
                left_on,
                cap,
            );
        }
        for a in alighting {
            self.begin_leg(a, t);
        }
        if last {
            return;
        }

        let short_turn = self.active(t) && self.net.lines[line].disrupted_hop[pos];
        let pulled = {
            let key = (line, station);
            let hit = self
                .dis
                .as_ref()
                .is_some_and(|d| t >= d.start && d.xi.contains(&key))
                && !self.xi_used.contains(&key);
            if hit {
                self.xi_used.insert(key);
            }
            hit
        };
        if short_turn || pulled {
            let riders = core::mem::take(&mut self.trips[trip].onboard);
            let n = riders.len();
            for (k, &a) in riders.iter().enumerate() {
                self.close_segment(a, line, pos, t);
                self.log(
                    t,
                    TraceKind::Alight,
                    label.clone(),
                    a,
                    station,
                    n - k - 1,
                    cap,
                );
            }
            for a in riders {
                self.join_queue(a, line, pos, t);
            }
            return;
        }

        // board
        while self.trips[trip].onboard.len() < cap as usize {
            let Some(a) = self.queues[line][pos].pop_front() else {
                break;
            };
            let ag = &mut self.agents[a as usize];
            ag.wait += t - ag.wait_since;
            ag.board_time = t;
            self.trips[trip].onboard.push(a);
            let on = self.trips[trip].onboard.len();
            self.log(t, TraceKind::Board, label.clone(), a, station, on, cap);
        }

        let (link, hop) = {
            let l = &self.net.lines[line];
            (l.links[pos], l.hop_time[pos])
        };
        let factor = self.enter(link, t);
        self.push(
            t + hop * factor,
            Ev::Trip {
                trip: trip as u32,
                pos: (pos + 1) as u32,
            },
        );
    }

    fn disruption_start(&mut self, t: f64) -> Result<(), SimError> {
        let origin = self.dis.as_ref().map(|d| d.origin).unwrap_or(usize::MAX);
        for li in 0..self.net.lines.len() {
            for pos in 0..self.net.lines[li].stops.len() {
                let l = &self.net.lines[li];
                if l.stops[pos] == origin && pos + 1 < l.stops.len() && l.disrupted_hop[pos] {
                    let queued: Vec<u32> = self.queues[li][pos].drain(..).collect();
                    for a in queued {
                        let ag = &mut self.agents[a as usize];
                        ag.wait += t - ag.wait_since;
                        self.strand(a, t);
                    }
                }
            }
        }
        let blocked = self
            .dis
            .as_ref()
            .map(|d| d.blocked.clone())
            .unwrap_or_default();
        for v in 0..self.vehicles.len() {
            let (start, mode, speed) = {
                let r = &self.vehicles[v];
                (r.start, r.mode, r.speed)
            };
            let path = shortest_path(self.scenario, start, origin, mode, &blocked)
                .ok_or_else(|| SimError::NoPath(self.vehicles[v].id.clone()))?;
            let dur = self.drive(&path.links, t, speed);
            self.vehicles[v].ta_sim = dur;
            self.push(t + dur, Ev::AtOrigin(v as u32));
        }
        Ok(())
    }

    fn try_load(&mut self, t: f64) -> Result<(), SimError> {
        let origin = match self.dis.as_ref() {
            Some(d) => d.origin,
            None => return Ok(()),
        };
        while let Some(&v) = self.loading.front() {
            let v = v as usize;
            while self.vehicles[v].onboard.len() < self.vehicles[v].capacity as usize {
                let Some(a) = self.bridge_queue.pop_front() else {
                    break;
                };
                let ag = &mut self.agents[a as usize];
                ag.wait += t - ag.wait_since;
                ag.board_time = t;
                ag.bridged = true;
                let r = &mut self.vehicles[v];
                r.onboard.push(a);
                r.passengers += 1;
                let (id, on, cap) = (r.id.clone(), r.onboard.len(), r.capacity);
                self.log(t, TraceKind::Board, id, a, origin, on, cap);
            }
            if self.vehicles[v].onboard.len() < self.vehicles[v].capacity as usize {
                break;
            }
            self.loading.pop_front();
            self.depart(v, t)?;
        }
        Ok(())
    }

    fn depart(&mut self, v: usize, t: f64) -> Result<(), SimError> {
        let (origin, destination, blocked) = {
            let d = self.dis.as_ref().expect("bridge needs a disruption");
            (d.origin, d.destination, d.blocked.clone())
        };
        let mode = self.vehicles[v].mode;
        let path = shortest_path(self.scenario, origin, destination, mode, &blocked)
            .ok_or_else(|| SimError::NoPath(self.vehicles[v].id.clone()))?;
        let speed = self.vehicles[v].speed;
        let dur = self.drive(&path.links, t, speed);
        self.vehicles[v].service_km = path.length;
        self.push(t + dur, Ev::AtDestination(v as u32));
        Ok(())
    }

    fn unload(&mut self, v: usize, t: f64) {
        let destination = self
            .dis
            .as_ref()
            .expect("bridge needs a disruption")
            .destination;
        let riders = core::mem::take(&mut self.vehicles[v].onboard);
        let (id, cap, km) = {
            let r = &self.vehicles[v];
            (r.id.clone(), r.capacity, r.service_km)
        };
        let n = riders.len();
        for (k, &a) in riders.iter().enumerate() {
            let ag = &mut self.agents[a as usize];
            ag.in_vehicle += t - ag.board_time;
            ag.distance += km;
            ag.station = destination;
            if let Some(Leg::Ride {
                line,
                board,
                alight,
            }) = ag.legs.front().cloned()
            {
                let l = &self.net.lines[line];
                let at = l.stops[board..]
                    .iter()
                    .position(|&s| s == destination)
                    .map(|p| p + board);
                match at {
                    Some(p) if p < alight => {
                        ag.legs[0] = Leg::Ride {
                            line,
                            board: p,
                            alight,
                        };
                    }
                    _ => {
                        ag.legs.pop_front();
                    }
                }
            }
            self.log(
                t,
                TraceKind::Alight,
                id.clone(),
                a,
                destination,
                n - k - 1,
                cap,
            );
        }
        for a in riders {
            self.begin_leg(a, t);
        }
    }

    fn disruption_end(&mut self, t: f64) -> Result<(), SimError> {
        let waiting: Vec<u32> = self.loading.drain(..).collect();
        for v in waiting {
            if !self.vehicles[v as usize].onboard.is_empty() {
                self.depart(v as usize, t)?;
            }
        }
        let queued: Vec<u32> = self.bridge_queue.drain(..).collect();
        for a in queued {
            let ag = &mut self.agents[a as usize];
            ag.wait += t - ag.wait_since;
            if let Some(Leg::Ride { line, board, .. }) = ag.legs.front().cloned() {
                self.join_queue(a, line, board, t);
            }
        }
        Ok(())
    }

    fn report(self) -> KpiReport {
        let s = self.scenario;
        let agents: Vec<AgentKpi> = self
            .agents
            .iter()
            .enumerate()
            .map(|(id, a)| {
                let entry = &s.demand()[a.entry];
                AgentKpi {
                    id: id as u64,
                    origin: s.stations()[a.origin].id.clone(),
                    destination: s.stations()[a.dest].id.clone(),
                    mode: entry.mode,
                    depart: a.depart,
                    state: a.state.unwrap_or(AgentState::Unserved),
                    travel: a.in_vehicle + a.walk,
                    in_vehicle: a.in_vehicle,
                    walk: a.walk,
                    wait: a.wait,
                    distance: a.distance,
                    stranded: a.stranded,
                    left: a.left,
                    bridged: a.bridged,
                }
            })
            .collect();
        let vehicles: Vec<VehicleKpi> = self
            .vehicles
            .iter()
            .map(|r| VehicleKpi {
                id: r.id.clone(),
                mode: r.mode,
                dispatch: self.dis.as_ref().map_or(0.0, |d| d.start),
                ta_sim: r.ta_sim,
                passengers: r.passengers,
            })
            .collect();
        KpiReport {
            aggregate: aggregate(&agents, &vehicles),
            ta_sim_per_mode: per_mode_mean(&vehicles),
            agents,
            vehicles,
            trace: self.trace.unwrap_or_default(),
        }
    }
}
