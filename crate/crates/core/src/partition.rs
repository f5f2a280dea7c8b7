//! Station partition induced by a disruption.
//!
//! For every mode the stations it serves split into disrupted origins,
//! their destinations, and the undisrupted remainder. The disrupted mode's
//! affected links carry `pi = 1`; every other link carries `pi = 0`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{DisruptionSpec, ModeKind, Scenario};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModePartition {
    /// Disrupted origins.
    pub disrupted: BTreeSet<String>,
    /// Destinations of disrupted origins.
    pub destinations: BTreeSet<String>,
    /// Undisrupted stations serving the mode.
    pub undisrupted: BTreeSet<String>,
    /// Destinations of undisrupted origins.
    pub undisrupted_destinations: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationPartition {
    pub disrupted_mode: ModeKind,
    pub by_mode: BTreeMap<ModeKind, ModePartition>,
    /// Links with `pi = 1`, as `(from, to)` station ids.
    pub disrupted_links: BTreeSet<(String, String)>,
    /// Disrupted origin-destination pairs of the disrupted mode.
    pub od_pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionError {
    UnknownLink(String, String),
    /// The affected links do not form a single chain to bridge.
    UnsupportedDisruption,
}

impl fmt::Display for PartitionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionError::UnknownLink(a, b) => write!(f, "unknown link {} -> {}", a, b),
            PartitionError::UnsupportedDisruption => {
                f.write_str("affected links must form one contiguous chain")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PartitionError {}

impl StationPartition {
    pub fn pi(&self, from: &str, to: &str) -> bool {
        self.disrupted_links
            .iter()
            .any(|(a, b)| a == from && b == to)
    }

    /// The single origin-destination pair a bridge must cover: the first
    /// disrupted origin of the chain and its last destination.
    pub fn bridge_pair(&self) -> Result<(String, String), PartitionError> {
        let part = &self.by_mode[&self.disrupted_mode];
        let starts: Vec<&String> = part.disrupted.difference(&part.destinations).collect();
        let ends: Vec<&String> = part.destinations.difference(&part.disrupted).collect();
        if starts.len() != 1 || ends.len() != 1 {
            return Err(PartitionError::UnsupportedDisruption);
        }
        Ok((starts[0].clone(), ends[0].clone()))
    }
}

fn served_stations(scenario: &Scenario, mode: ModeKind) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if mode.is_scheduled() {
        for line in scenario.lines().iter().filter(|l| l.mode == mode) {
            out.extend(line.stops.iter().cloned());
        }
    } else {
        for link in scenario.links().iter().filter(|l| l.allows(mode)) {
            out.insert(link.from.clone());
            out.insert(link.to.clone());
        }
    }
    out
}

/// Mode-`mode` links as `(from, to)` pairs: consecutive stops of its lines
/// for scheduled modes, otherwise every link admitting it.
fn mode_links(scenario: &Scenario, mode: ModeKind) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    if mode.is_scheduled() {
        for line in scenario.lines().iter().filter(|l| l.mode == mode) {
            for w in line.stops.windows(2) {
                out.insert((w[0].clone(), w[1].clone()));
            }
        }
    } else {
        for link in scenario.links().iter().filter(|l| l.allows(mode)) {
            out.insert((link.from.clone(), link.to.clone()));
        }
    }
    out
}

pub fn apply_disruption(
    scenario: &Scenario,
    d: &DisruptionSpec,
) -> Result<StationPartition, PartitionError> {
    for (a, b) in &d.affected_links {
        if scenario.link_for(a, b, d.mode).is_none() {
            return Err(PartitionError::UnknownLink(a.clone(), b.clone()));
        }
    }
    let disrupted_links: BTreeSet<(String, String)> = d.affected_links.iter().cloned().collect();

    let mut modes: BTreeSet<ModeKind> = scenario.modes().iter().map(|m| m.kind).collect();
    modes.insert(d.mode);

    let mut by_mode = BTreeMap::new();
    for mode in modes {
        let served = served_stations(scenario, mode);
        let links = mode_links(scenario, mode);
        let mut part = ModePartition::default();
        if mode == d.mode {
            for (a, b) in &disrupted_links {
                part.disrupted.insert(a.clone());
                part.destinations.insert(b.clone());
            }
        }
        part.undisrupted = served
            .iter()
            .filter(|s| !part.disrupted.contains(*s))
            .cloned()
            .collect();
        for (a, b) in &links {
            if part.undisrupted.contains(a) && !disrupted_links.contains(&(a.clone(), b.clone())) {
                part.undisrupted_destinations.insert(b.clone());
            }
        }
        by_mode.insert(mode, part);
    }

    let mut od_pairs: Vec<(String, String)> = disrupted_links.iter().cloned().collect();
    od_pairs.sort();

    Ok(StationPartition {
        disrupted_mode: d.mode,
        by_mode,
        disrupted_links,
        od_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_corridor, CorridorSpec};
    use alloc::string::ToString;
    use alloc::vec;

    fn rail(links: &[(&str, &str)]) -> DisruptionSpec {
        DisruptionSpec {
            mode: ModeKind::Rail,
            affected_links: links
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            start: 7 * 3600,
            duration: 7200,
        }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_link() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let p = apply_disruption(&s, &rail(&[("T10", "T11")])).unwrap();
        let rp = &p.by_mode[&ModeKind::Rail];
        assert_eq!(rp.disrupted, set(&["T10"]));
        assert_eq!(rp.destinations, set(&["T11"]));
        assert!(p.pi("T10", "T11"));
        assert!(!p.pi("T11", "T10"));
        assert_eq!(p.bridge_pair().unwrap(), ("T10".into(), "T11".into()));
    }

    #[test]
    fn empty_affected_set_is_identity() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let p = apply_disruption(&s, &rail(&[])).unwrap();
        assert!(p.disrupted_links.is_empty());
        assert!(p.by_mode[&ModeKind::Rail].disrupted.is_empty());
        assert!(p.bridge_pair().is_err());
    }

    #[test]
    fn consecutive_links_chain() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let p = apply_disruption(&s, &rail(&[("T10", "T11"), ("T11", "T12")])).unwrap();
        let rp = &p.by_mode[&ModeKind::Rail];
        assert_eq!(rp.disrupted, set(&["T10", "T11"]));
        assert_eq!(rp.destinations, set(&["T11", "T12"]));
        assert_eq!(p.bridge_pair().unwrap(), ("T10".into(), "T12".into()));
    }

    #[test]
    fn unknown_link_is_an_error() {
        let s = synth_corridor(1, &CorridorSpec::default());
        let e = apply_disruption(&s, &rail(&[("T10", "T30")])).unwrap_err();
        assert_eq!(e, PartitionError::UnknownLink("T10".into(), "T30".into()));
    }

    #[test]
    fn partitions_are_disjoint_and_cover() {
        let s = synth_corridor(3, &CorridorSpec::default());
        let p = apply_disruption(&s, &rail(&[("T20", "T21")])).unwrap();
        for (mode, part) in &p.by_mode {
            assert!(part.disrupted.is_disjoint(&part.undisrupted));
            let served = served_stations(&s, *mode);
            let union: BTreeSet<String> =
                part.disrupted.union(&part.undisrupted).cloned().collect();
            assert_eq!(union, served, "{}", mode);
        }
        assert_eq!(p.od_pairs, vec![("T20".to_string(), "T21".to_string())]);
    }
}
