//! Synthetic commuter-rail corridor.
//!
//! A straight rail trunk with one long inter-station gap (the link that
//! fails), a road running alongside it, bus lines crossing the trunk at the
//! station in front of the gap, a slow bus line detouring through villages
//! around the gap that leavers can fall back on, free taxi and van fleets
//! scattered around the gap, and a remote bus depot.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::model::{
    Assignment, CostParams, DemandBin, DemandEntry, DisruptionSpec, Link, Location, Mode, ModeKind,
    OpCost, Point, Scenario, ScenarioFile, Station, TransitLine, Vehicle, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CorridorSpec {
    /// Trunk stations, at least 4.
    pub stations: usize,
    pub trunk_km: f64,
    /// Index of the trunk station in front of the long gap.
    pub gap_after: usize,
    pub gap_km: f64,
    pub crossing_lines: usize,
    pub taxis: usize,
    pub vans: usize,
    pub depot_buses: usize,
    pub depot_km: f64,
    /// Radius around the gap in which taxis and vans wait, km.
    pub fleet_radius_km: f64,
    /// Vehicles per hour on road links.
    pub road_capacity: f64,
    /// Passengers per hour between the two gap stations during the peak.
    pub peak_rate: f64,
    pub rail_headway: f64,
    pub disruption_start: u32,
    pub disruption_duration: u32,
}

impl Default for CorridorSpec {
    fn default() -> Self {
        Self {
            stations: 47,
            trunk_km: 80.0,
            gap_after: 23,
            gap_km: 12.0,
            crossing_lines: 4,
            taxis: 240,
            vans: 60,
            depot_buses: 8,
            depot_km: 27.0,
            fleet_radius_km: 10.0,
            road_capacity: 1800.0,
            peak_rate: 150.0,
            rail_headway: 5.0,
            disruption_start: 7 * 3600,
            disruption_duration: 7200,
        }
    }
}

impl CorridorSpec {
    /// Same corridor with road capacity low enough that replacement vehicles
    /// are slowed down by each other.
    pub fn congested() -> Self {
        Self {
            road_capacity: 20.0,
            ..Self::default()
        }
    }

    /// Same corridor with road capacity so high that travel times never
    /// leave free flow.
    pub fn uncongested() -> Self {
        Self {
            road_capacity: 1e9,
            ..Self::default()
        }
    }
}

const SERVICE: [u32; 2] = [5 * 3600, 13 * 3600];
/// Demand stops an hour before service ends so every trip can finish.
const DEMAND: [u32; 2] = [5 * 3600, 12 * 3600];
const HEADWAYS: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
const BUS_SPEED: f64 = 25.0;

pub fn trunk_id(k: usize) -> String {
    format!("T{}", k)
}

fn default_modes() -> Vec<Mode> {
    let m = |kind, op_cost, capacity, default_speed| Mode {
        kind,
        op_cost,
        capacity,
        default_speed,
    };
    vec![
        m(ModeKind::Rail, OpCost::Flat(0.139), 400, 60.0),
        m(ModeKind::Subway, OpCost::Flat(0.194), 300, 35.0),
        m(ModeKind::Tram, OpCost::Flat(0.196), 180, 20.0),
        m(ModeKind::Bus, OpCost::Flat(0.454), 70, BUS_SPEED),
        m(
            ModeKind::Taxi,
            OpCost::Affine {
                per_km: 1.72,
                base: 2.2,
            },
            4,
            30.0,
        ),
        m(ModeKind::AutomatedVan, OpCost::Flat(0.36), 8, 25.0),
    ]
}

/// Trunk gap lengths: one long gap, the rest of the trunk split evenly at
/// metre precision with the last gap taking the remainder.
fn trunk_gaps(spec: &CorridorSpec) -> Vec<f64> {
    let n = spec.stations - 1;
    let gap_after = spec.gap_after.min(n - 1);
    let regular = math::round3((spec.trunk_km - spec.gap_km) / (n - 1) as f64);
    let mut gaps = vec![regular; n];
    gaps[gap_after] = spec.gap_km;
    let last = if gap_after == n - 1 { n - 2 } else { n - 1 };
    let others: f64 = gaps
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != last)
        .map(|(_, g)| *g)
        .sum();
    gaps[last] = math::round3(spec.trunk_km - others);
    gaps
}

struct Builder {
    stations: Vec<Station>,
    links: Vec<Link>,
}

impl Builder {
    fn station(&mut self, id: String, name: String, p: Point) {
        self.stations.push(Station {
            id,
            name,
            position: p,
        });
    }

    fn pos(&self, id: &str) -> Point {
        self.stations.iter().find(|s| s.id == id).unwrap().position
    }

    fn link_pair(
        &mut self,
        a: &str,
        b: &str,
        length: f64,
        speed: f64,
        cap: f64,
        modes: &[ModeKind],
    ) {
        for (from, to) in [(a, b), (b, a)] {
            self.links.push(Link {
                id: format!("{}-{}-{}", from, to, modes[0]),
                from: from.to_string(),
                to: to.to_string(),
                length,
                free_flow_speed: speed,
                capacity: cap,
                modes_allowed: modes.to_vec(),
            });
        }
    }

    fn road_pair(&mut self, a: &str, b: &str, cap: f64) {
        let d = math::round3(self.pos(a).distance(&self.pos(b)) / 1000.0).max(0.001);
        self.link_pair(
            a,
            b,
            d,
            50.0,
            cap,
            &[ModeKind::Bus, ModeKind::Taxi, ModeKind::AutomatedVan],
        );
    }
}

fn hourly_bins(rng: &mut ChaCha8Rng, base: f64, peak: f64) -> Vec<DemandBin> {
    (DEMAND[0] / 3600..DEMAND[1] / 3600)
        .map(|h| {
            let peak_hour = (7..9).contains(&h);
            let r = if peak_hour { peak } else { base };
            DemandBin {
                start: h * 3600,
                end: (h + 1) * 3600,
                rate: math::round(r * rng.gen_range(0.8..1.2)),
            }
        })
        .collect()
}

/// Buses in service along a line, spread over its links.
fn place_buses(line: &TransitLine, lengths: &[f64], out: &mut Vec<Vehicle>) {
    let one_way_min: f64 = lengths.iter().sum::<f64>() / BUS_SPEED * 60.0;
    let n = (math::round(one_way_min / line.headway) as usize).max(1);
    let links = line.stops.len() - 1;
    for k in 0..n {
        let at = k * links / n;
        out.push(Vehicle {
            id: format!("bus-{}-{}", line.id, k),
            mode: ModeKind::Bus,
            assignment: Assignment::Scheduled {
                line: line.id.clone(),
                link: (line.stops[at].clone(), line.stops[at + 1].clone()),
            },
            capacity: None,
        });
    }
}

fn line_lengths(b: &Builder, stops: &[String]) -> Vec<f64> {
    stops
        .windows(2)
        .map(|w| b.pos(&w[0]).distance(&b.pos(&w[1])) / 1000.0)
        .collect()
}

/// Deterministic corridor for `seed`.
pub fn synth_corridor(seed: u64, spec: &CorridorSpec) -> Scenario {
    assert!(spec.stations >= 4, "corridor needs at least 4 stations");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder {
        stations: Vec::new(),
        links: Vec::new(),
    };
    let n = spec.stations;
    let gi = spec.gap_after.min(n - 2);
    let gaps = trunk_gaps(spec);

    let mut x = 0.0;
    for k in 0..n {
        b.station(
            trunk_id(k),
            format!("Trunk {}", k),
            Point::new(x * 1000.0, 0.0),
        );
        if k + 1 < n {
            x += gaps[k];
        }
    }
    for k in 0..n - 1 {
        let (a, c) = (trunk_id(k), trunk_id(k + 1));
        b.link_pair(&a, &c, gaps[k], 100.0, 60.0, &[ModeKind::Rail]);
        b.link_pair(
            &a,
            &c,
            gaps[k],
            50.0,
            spec.road_capacity,
            &[ModeKind::Bus, ModeKind::Taxi, ModeKind::AutomatedVan],
        );
    }

    let trunk: Vec<String> = (0..n).map(trunk_id).collect();
    let mut lines = vec![
        TransitLine {
            id: "R-up".into(),
            mode: ModeKind::Rail,
            stops: trunk.clone(),
            headway: spec.rail_headway,
            service_window: SERVICE,
        },
        TransitLine {
            id: "R-down".into(),
            mode: ModeKind::Rail,
            stops: trunk.iter().rev().cloned().collect(),
            headway: spec.rail_headway,
            service_window: SERVICE,
        },
    ];

    // Crossing bus lines through the station in front of the gap.
    let hub = trunk_id(gi);
    let hub_pos = b.pos(&hub);
    let mut headways: Vec<f64> = (0..spec.crossing_lines)
        .map(|_| *HEADWAYS.choose(&mut rng).unwrap())
        .collect();
    let eligible = |hs: &[f64]| hs.iter().filter(|&&h| h <= 15.0).count();
    let mut k = 0;
    while eligible(&headways) < 2.min(headways.len()) {
        headways[k] = HEADWAYS[rng.gen_range(0..3)];
        k += 1;
    }
    let mut vehicles = Vec::new();
    let mut crossing_stops: Vec<Vec<String>> = Vec::new();
    for (c, &h) in headways.iter().enumerate() {
        let span = core::f64::consts::FRAC_PI_2;
        let phi = core::f64::consts::FRAC_PI_4
            + (c as f64 + rng.gen_range(0.3..0.7)) * span / spec.crossing_lines as f64;
        let (dx, dy) = (libm::cos(phi), libm::sin(phi));
        let mut stops = Vec::new();
        for s in 0..7i32 {
            if s == 3 {
                stops.push(hub.clone());
                continue;
            }
            let spacing = rng.gen_range(700.0..1300.0);
            let off = (s - 3) as f64 * spacing;
            let id = format!("X{}-{}", c, s);
            b.station(
                id.clone(),
                format!("Crossing {} stop {}", c, s),
                Point::new(
                    math::round(hub_pos.x + off * dx),
                    math::round(hub_pos.y + off * dy),
                ),
            );
            stops.push(id);
        }
        for w in stops.windows(2) {
            b.road_pair(&w[0], &w[1], spec.road_capacity);
        }
        for (dir, ordered) in [
            ("a", stops.clone()),
            ("b", stops.iter().rev().cloned().collect()),
        ] {
            let line = TransitLine {
                id: format!("X{}{}", c, dir),
                mode: ModeKind::Bus,
                stops: ordered,
                headway: h,
                service_window: SERVICE,
            };
            let lengths = line_lengths(&b, &line.stops);
            place_buses(&line, &lengths, &mut vehicles);
            lines.push(line);
        }
        crossing_stops.push(stops);
    }

    // Slow bus detouring through villages south of the gap.
    let lo = gi.saturating_sub(2);
    let hi = (gi + 3).min(n - 1);
    let next_pos = b.pos(&trunk_id(gi + 1));
    let mut villages = Vec::new();
    for (k, (fx, y)) in [(1.0 / 6.0, -4000.0), (0.5, -5000.0), (5.0 / 6.0, -4000.0)]
        .into_iter()
        .enumerate()
    {
        let id = format!("V{}", k);
        let x = hub_pos.x + fx * (next_pos.x - hub_pos.x);
        b.station(
            id.clone(),
            format!("Village {}", k),
            Point::new(math::round(x), y),
        );
        villages.push(id);
    }
    let mut parallel: Vec<String> = (lo..=gi).map(trunk_id).collect();
    parallel.extend(villages.iter().cloned());
    parallel.extend((gi + 1..=hi).map(trunk_id));
    for w in [
        &hub,
        &villages[0],
        &villages[1],
        &villages[2],
        &trunk_id(gi + 1),
    ]
    .windows(2)
    {
        b.road_pair(w[0], w[1], spec.road_capacity);
    }
    for (dir, ordered) in [
        ("a", parallel.clone()),
        ("b", parallel.iter().rev().cloned().collect()),
    ] {
        let line = TransitLine {
            id: format!("P{}", dir),
            mode: ModeKind::Bus,
            stops: ordered,
            headway: 20.0,
            service_window: SERVICE,
        };
        let lengths = line_lengths(&b, &line.stops);
        place_buses(&line, &lengths, &mut vehicles);
        lines.push(line);
    }

    // Depot.
    b.station(
        "DEPOT".into(),
        "Bus depot".into(),
        Point::new(hub_pos.x, hub_pos.y - spec.depot_km * 1000.0),
    );
    b.link_pair(
        "DEPOT",
        &hub,
        spec.depot_km,
        50.0,
        spec.road_capacity,
        &[ModeKind::Bus, ModeKind::Taxi, ModeKind::AutomatedVan],
    );
    for k in 0..spec.depot_buses {
        vehicles.push(Vehicle {
            id: format!("depot-bus-{}", k),
            mode: ModeKind::Bus,
            assignment: Assignment::Depot("DEPOT".into()),
            capacity: None,
        });
    }

    // Free fleets around the gap.
    let centre = Point::new((hub_pos.x + b.pos(&trunk_id(gi + 1)).x) / 2.0, 0.0);
    let r = spec.fleet_radius_km * 1000.0;
    for (mode, count, prefix) in [
        (ModeKind::Taxi, spec.taxis, "taxi"),
        (ModeKind::AutomatedVan, spec.vans, "van"),
    ] {
        for k in 0..count {
            let rho = r * math::sqrt(rng.gen_range(0.0..1.0));
            let ang = rng.gen_range(0.0..core::f64::consts::TAU);
            let p = Point::new(
                math::round(centre.x + rho * libm::cos(ang)),
                math::round(centre.y + rho * libm::sin(ang)),
            );
            vehicles.push(Vehicle {
                id: format!("{}-{}", prefix, k),
                mode,
                assignment: Assignment::Free(Location::Point(p)),
                capacity: None,
            });
        }
    }

    // Demand.
    let mut demand = Vec::new();
    let main = DemandEntry {
        origin: hub.clone(),
        destination: trunk_id(gi + 1),
        mode: ModeKind::Rail,
        bins: (DEMAND[0] / 3600..DEMAND[1] / 3600)
            .map(|h| DemandBin {
                start: h * 3600,
                end: (h + 1) * 3600,
                rate: if (7..9).contains(&h) {
                    spec.peak_rate
                } else {
                    math::round(spec.peak_rate * 0.2)
                },
            })
            .collect(),
    };
    demand.push(main);
    // Rail trips that stay on one side of the gap.
    for _ in 0..12 {
        let left = rng.gen_bool(0.5);
        let (a, c) = if left {
            let a = rng.gen_range(0..gi);
            let c = rng.gen_range(0..=gi);
            (a, c)
        } else {
            let a = rng.gen_range(gi + 1..n);
            let c = rng.gen_range(gi + 1..n);
            (a, c)
        };
        if a == c {
            continue;
        }
        let base = rng.gen_range(2.0..6.0);
        demand.push(DemandEntry {
            origin: trunk_id(a),
            destination: trunk_id(c),
            mode: ModeKind::Rail,
            bins: hourly_bins(&mut rng, base, base * 2.0),
        });
    }
    // Bus trips boarding on the crossing lines.
    for stops in &crossing_stops {
        for _ in 0..3 {
            let a = rng.gen_range(0..stops.len());
            let mut c = rng.gen_range(0..stops.len());
            if c == a {
                c = (a + 1 + rng.gen_range(0..stops.len() - 1)) % stops.len();
            }
            let base = rng.gen_range(3.0..8.0);
            demand.push(DemandEntry {
                origin: stops[a].clone(),
                destination: stops[c].clone(),
                mode: ModeKind::Bus,
                bins: hourly_bins(&mut rng, base, base * 2.0),
            });
        }
    }
    merge_duplicates(&mut demand);

    let disruption = DisruptionSpec {
        mode: ModeKind::Rail,
        affected_links: vec![(hub.clone(), trunk_id(gi + 1))],
        start: spec.disruption_start,
        duration: spec.disruption_duration,
    };

    let file = ScenarioFile {
        schema_version: SCHEMA_VERSION,
        stations: b.stations,
        links: b.links,
        modes: default_modes(),
        lines,
        vehicles,
        demand,
        cost_params: CostParams::default(),
        disruption: Some(disruption),
    };
    Scenario::new(file).expect("synthetic corridor is valid")
}

/// Entries sharing origin, destination and mode are summed bin by bin (all
/// synthetic entries use the same hourly bins).
fn merge_duplicates(demand: &mut Vec<DemandEntry>) {
    let mut out: Vec<DemandEntry> = Vec::new();
    for e in demand.drain(..) {
        match out
            .iter_mut()
            .find(|o| o.origin == e.origin && o.destination == e.destination && o.mode == e.mode)
        {
            Some(o) => {
                for (ob, eb) in o.bins.iter_mut().zip(&e.bins) {
                    ob.rate += eb.rate;
                }
            }
            None => out.push(e),
        }
    }
    *demand = out;
}
