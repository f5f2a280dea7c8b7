//! Shortest paths on the link graph, weighted by link length.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::model::{ModeKind, Scenario};

/// A path as an ordered list of link indices and its total length in km.
///
/// `length` is accumulated source-first, link by link, so a caller summing
/// the same link lengths in order gets the identical float.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub links: Vec<usize>,
    pub length: f64,
}

impl Path {
    pub fn empty() -> Self {
        Path {
            links: Vec::new(),
            length: 0.0,
        }
    }
}

#[derive(Clone, Copy)]
struct Entry {
    dist: f64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Shortest path from station `from` to station `to` using only links that
/// admit `mode` and are not in `blocked`.
pub fn shortest_path(
    scenario: &Scenario,
    from: usize,
    to: usize,
    mode: ModeKind,
    blocked: &BTreeSet<usize>,
) -> Option<Path> {
    if from == to {
        return Some(Path::empty());
    }
    let n = scenario.stations().len();
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: from,
    });
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        if node == to {
            break;
        }
        for &l in scenario.outgoing(node) {
            let link = &scenario.links()[l];
            if !link.allows(mode) || blocked.contains(&l) {
                continue;
            }
            let next = scenario.station_idx(&link.to).expect("validated link");
            let nd = d + link.length;
            if nd < dist[next] {
                dist[next] = nd;
                via[next] = Some(l);
                heap.push(Entry {
                    dist: nd,
                    node: next,
                });
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut links = Vec::new();
    let mut cur = to;
    while let Some(l) = via[cur] {
        links.push(l);
        cur = scenario
            .station_idx(&scenario.links()[l].from)
            .expect("validated link");
    }
    links.reverse();
    Some(Path {
        links,
        length: dist[to],
    })
}

/// Link indices a disruption takes out of service for its own mode.
pub fn blocked_links(scenario: &Scenario, d: &crate::model::DisruptionSpec) -> BTreeSet<usize> {
    d.affected_links
        .iter()
        .filter_map(|(a, b)| scenario.link_for(a, b, d.mode))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_corridor, CorridorSpec};

    #[test]
    fn path_length_matches_sum_of_links() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let a = s.station_idx("T10").unwrap();
        let b = s.station_idx("T14").unwrap();
        let p = shortest_path(&s, a, b, ModeKind::Rail, &BTreeSet::new()).unwrap();
        assert_eq!(p.links.len(), 4);
        let mut sum = 0.0;
        for &l in &p.links {
            sum += s.links()[l].length;
        }
        assert_eq!(sum, p.length);
    }

    #[test]
    fn blocked_link_forces_detour_or_none() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let d = s.disruption().unwrap().clone();
        let blocked = blocked_links(&s, &d);
        let (i, j) = &d.affected_links[0];
        let a = s.station_idx(i).unwrap();
        let b = s.station_idx(j).unwrap();
        assert!(shortest_path(&s, a, b, ModeKind::Rail, &blocked).is_none());
        assert!(shortest_path(&s, a, b, ModeKind::Bus, &BTreeSet::new()).is_some());
    }
}
