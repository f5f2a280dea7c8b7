//! Time-shortest itineraries over transit lines and walking.
//!
//! The search graph has one node per station and one per (line, stop
//! position). Boarding costs half a headway, riding costs the free-flow hop
//! time, alighting is free, and stations closer than the walking radius are
//! joined by walk edges.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::model::{DisruptionSpec, ModeKind, Scenario};

pub(crate) const WALK_SPEED: f64 = 4.8;
pub(crate) const WALK_RADIUS_KM: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Leg {
    Walk {
        to: usize,
        km: f64,
    },
    Ride {
        line: usize,
        board: usize,
        alight: usize,
    },
}

pub(crate) struct LineInfo {
    pub id: alloc::string::String,
    pub mode: ModeKind,
    pub stops: Vec<usize>,
    /// Link index of each hop.
    pub links: Vec<usize>,
    /// Cumulative km from the first stop.
    pub cum: Vec<f64>,
    /// Free-flow seconds per hop.
    pub hop_time: Vec<f64>,
    pub headway: f64,
    pub window: [u32; 2],
    pub capacity: u32,
    /// Hops over a disrupted link.
    pub disrupted_hop: Vec<bool>,
}

impl LineInfo {
    pub fn position(&self, station: usize) -> Option<usize> {
        self.stops.iter().position(|&s| s == station)
    }
}

pub(crate) struct Net {
    pub lines: Vec<LineInfo>,
    pub walk: Vec<Vec<(usize, f64)>>,
    offset: Vec<usize>,
    nodes: usize,
}

/// Seconds to cross `length` km at the slower of link and vehicle speed.
pub(crate) fn free_flow_seconds(length: f64, link_speed: f64, mode_speed: f64) -> f64 {
    3600.0 * length / link_speed.min(mode_speed)
}

impl Net {
    pub fn new(scenario: &Scenario, disruption: Option<&DisruptionSpec>) -> Self {
        let mut lines = Vec::new();
        for line in scenario.lines() {
            let mode = scenario.mode(line.mode);
            let speed = mode.map_or(30.0, |m| m.default_speed);
            let stops: Vec<usize> = line
                .stops
                .iter()
                .map(|s| scenario.station_idx(s).expect("validated"))
                .collect();
            let mut links = Vec::new();
            let mut cum = vec![0.0];
            let mut hop_time = Vec::new();
            let mut disrupted_hop = Vec::new();
            for w in stops.windows(2) {
                let l = scenario
                    .link_between(w[0], w[1], line.mode)
                    .expect("validated line");
                let link = &scenario.links()[l];
                links.push(l);
                cum.push(cum.last().unwrap() + link.length);
                hop_time.push(free_flow_seconds(link.length, link.free_flow_speed, speed));
                disrupted_hop
                    .push(disruption.is_some_and(|d| d.affects(line.mode, &link.from, &link.to)));
            }
            lines.push(LineInfo {
                id: line.id.clone(),
                mode: line.mode,
                stops,
                links,
                cum,
                hop_time,
                headway: line.headway,
                window: line.service_window,
                capacity: mode.map_or(1, |m| m.capacity),
                disrupted_hop,
            });
        }
        let stations = scenario.stations();
        let mut walk = vec![Vec::new(); stations.len()];
        for (a, sa) in stations.iter().enumerate() {
            for (b, sb) in stations.iter().enumerate() {
                if a == b {
                    continue;
                }
                let km = sa.position.distance(&sb.position) / 1000.0;
                if km <= WALK_RADIUS_KM {
                    walk[a].push((b, km));
                }
            }
        }
        let mut offset = Vec::with_capacity(lines.len());
        let mut nodes = stations.len();
        for l in &lines {
            offset.push(nodes);
            nodes += l.stops.len();
        }
        Net {
            lines,
            walk,
            offset,
            nodes,
        }
    }

    /// Itinerary from `from` to `to` minimizing expected time; hops on
    /// disrupted links are avoided when `avoid_disrupted` is set.
    pub fn route(&self, from: usize, to: usize, avoid_disrupted: bool) -> Option<Vec<Leg>> {
        if from == to {
            return Some(Vec::new());
        }
        let n_st = self.walk.len();
        let mut dist = vec![f64::INFINITY; self.nodes];
        let mut prev: Vec<usize> = vec![usize::MAX; self.nodes];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Item(0.0, from));
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == to {
                break;
            }
            let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Item>| {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Item(nd, v));
                }
            };
            if u < n_st {
                for &(v, km) in &self.walk[u] {
                    relax(v, km / WALK_SPEED * 3600.0, &mut heap);
                }
                for (li, line) in self.lines.iter().enumerate() {
                    for (pos, &s) in line.stops.iter().enumerate() {
                        if s == u && pos + 1 < line.stops.len() {
                            relax(self.offset[li] + pos, line.headway * 30.0, &mut heap);
                        }
                    }
                }
            } else {
                let (li, pos) = self.line_pos(u);
                let line = &self.lines[li];
                relax(line.stops[pos], 0.0, &mut heap);
                if pos + 1 < line.stops.len() && !(avoid_disrupted && line.disrupted_hop[pos]) {
                    relax(u + 1, line.hop_time[pos], &mut heap);
                }
            }
        }
        if !dist[to].is_finite() {
            return None;
        }
        let mut nodes = vec![to];
        let mut cur = to;
        while prev[cur] != usize::MAX {
            cur = prev[cur];
            nodes.push(cur);
        }
        nodes.reverse();
        let mut legs = Vec::new();
        let mut k = 0;
        while k + 1 < nodes.len() {
            let (a, b) = (nodes[k], nodes[k + 1]);
            if a < n_st && b < n_st {
                let km = self.walk[a]
                    .iter()
                    .find(|&&(s, _)| s == b)
                    .map(|&(_, km)| km)
                    .unwrap_or(0.0);
                legs.push(Leg::Walk { to: b, km });
                k += 1;
            } else if a < n_st {
                // board: ride until the next station node
                let (li, board) = self.line_pos(b);
                let mut j = k + 1;
                while j + 1 < nodes.len() && nodes[j + 1] >= n_st {
                    j += 1;
                }
                let (_, alight) = self.line_pos(nodes[j]);
                legs.push(Leg::Ride {
                    line: li,
                    board,
                    alight,
                });
                k = j + 1;
            } else {
                k += 1;
            }
        }
        Some(legs)
    }

    fn line_pos(&self, node: usize) -> (usize, usize) {
        let li = match self.offset.binary_search(&node) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (li, node - self.offset[li])
    }

    /// First line of `mode` running from `from` to a later stop `to`.
    pub fn direct(&self, from: usize, to: usize, mode: ModeKind) -> Option<Leg> {
        self.lines.iter().enumerate().find_map(|(li, l)| {
            if l.mode != mode {
                return None;
            }
            let a = l.position(from)?;
            let b = l.stops[a + 1..].iter().position(|&s| s == to)? + a + 1;
            Some(Leg::Ride {
                line: li,
                board: a,
                alight: b,
            })
        })
    }
}

#[derive(Clone, Copy)]
struct Item(f64, usize);

impl PartialEq for Item {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// Walking seconds for `km`.
pub(crate) fn walk_seconds(km: f64) -> f64 {
    km / WALK_SPEED * 3600.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_corridor, CorridorSpec};

    #[test]
    fn direct_ride_on_the_trunk() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let net = Net::new(&s, s.disruption());
        let a = s.station_idx("T23").unwrap();
        let b = s.station_idx("T24").unwrap();
        let leg = net.direct(a, b, ModeKind::Rail).unwrap();
        match leg {
            Leg::Ride { line, .. } => assert_eq!(net.lines[line].id, "R-up"),
            _ => panic!(),
        }
        let legs = net.route(a, b, false).unwrap();
        assert_eq!(legs.len(), 1);
    }

    #[test]
    fn avoiding_the_gap_uses_another_line() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let net = Net::new(&s, s.disruption());
        let a = s.station_idx("T23").unwrap();
        let b = s.station_idx("T26").unwrap();
        let legs = net.route(a, b, true).unwrap();
        for leg in &legs {
            if let Leg::Ride {
                line,
                board,
                alight,
            } = leg
            {
                let l = &net.lines[*line];
                assert!((*board..*alight).all(|h| !l.disrupted_hop[h]));
            }
        }
        assert!(legs.iter().any(
            |l| matches!(l, Leg::Ride { line, .. } if net.lines[*line].mode == ModeKind::Bus)
        ));
    }
}
