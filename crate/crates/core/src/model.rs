//! Scenario data: stations, links, modes, lines, fleets, demand and the
//! exogenous cost parameters.
//!
//! [`ScenarioFile`] is the serialized form. [`Scenario`] is the validated,
//! indexed form every other module works with; it is immutable once built.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance in meters.
    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        crate::math::sqrt(dx * dx + dy * dy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    pub id: String,
    pub name: String,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Rail,
    Subway,
    Tram,
    Bus,
    Taxi,
    AutomatedVan,
}

impl ModeKind {
    pub const ALL: [ModeKind; 6] = [
        ModeKind::Rail,
        ModeKind::Subway,
        ModeKind::Tram,
        ModeKind::Bus,
        ModeKind::Taxi,
        ModeKind::AutomatedVan,
    ];

    /// Modes that run on a timetable along a [`TransitLine`].
    pub fn is_scheduled(self) -> bool {
        matches!(
            self,
            ModeKind::Rail | ModeKind::Subway | ModeKind::Tram | ModeKind::Bus
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Rail => "rail",
            ModeKind::Subway => "subway",
            ModeKind::Tram => "tram",
            ModeKind::Bus => "bus",
            ModeKind::Taxi => "taxi",
            ModeKind::AutomatedVan => "automated_van",
        }
    }

    pub fn parse(s: &str) -> Option<ModeKind> {
        ModeKind::ALL.iter().copied().find(|m| m.name() == s)
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operating cost of a mode in euro per passenger-km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OpCost {
    Flat(f64),
    /// Distance-dependent rate `per_km * distance + base`, used for taxis.
    Affine {
        per_km: f64,
        base: f64,
    },
}

impl OpCost {
    /// Rate for a trip of `distance_km` kilometers.
    pub fn rate(&self, distance_km: f64) -> f64 {
        match *self {
            OpCost::Flat(rate) => rate,
            OpCost::Affine { per_km, base } => per_km * distance_km + base,
        }
    }

    fn is_nonnegative(&self) -> bool {
        match *self {
            OpCost::Flat(rate) => rate.is_finite() && rate >= 0.0,
            OpCost::Affine { per_km, base } => {
                per_km.is_finite() && base.is_finite() && per_km >= 0.0 && base >= 0.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub kind: ModeKind,
    pub op_cost: OpCost,
    /// Passengers per vehicle.
    pub capacity: u32,
    /// km/h
    pub default_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub id: String,
    pub from: String,
    pub to: String,
    /// km
    pub length: f64,
    /// km/h
    pub free_flow_speed: f64,
    /// vehicles/hour
    pub capacity: f64,
    pub modes_allowed: Vec<ModeKind>,
}

impl Link {
    pub fn allows(&self, mode: ModeKind) -> bool {
        self.modes_allowed.contains(&mode)
    }

    /// Free-flow traversal time in seconds.
    pub fn free_flow_time(&self) -> f64 {
        3600.0 * self.length / self.free_flow_speed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitLine {
    pub id: String,
    pub mode: ModeKind,
    pub stops: Vec<String>,
    /// Minutes between consecutive departures.
    pub headway: f64,
    /// `[start, end]` in seconds from midnight.
    pub service_window: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Location {
    Station(String),
    Point(Point),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Assignment {
    /// In service on `line`, currently on the link `(from, to)`.
    Scheduled {
        line: String,
        link: (String, String),
    },
    /// Unscheduled fleet vehicle (taxi, van) waiting at a location.
    Free(Location),
    /// Reserve vehicle parked at a depot station.
    Depot(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vehicle {
    pub id: String,
    pub mode: ModeKind,
    pub assignment: Assignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandBin {
    pub start: u32,
    pub end: u32,
    /// passengers/hour
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandEntry {
    pub origin: String,
    pub destination: String,
    pub mode: ModeKind,
    pub bins: Vec<DemandBin>,
}

impl DemandEntry {
    /// Integral of the piecewise-constant rate over `[start, end)` seconds.
    pub fn volume_between(&self, start: f64, end: f64) -> f64 {
        self.bins
            .iter()
            .map(|bin| {
                let lo = (bin.start as f64).max(start);
                let hi = (bin.end as f64).min(end);
                if hi > lo {
                    bin.rate * (hi - lo) / 3600.0
                } else {
                    0.0
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisruptionSpec {
    pub mode: ModeKind,
    pub affected_links: Vec<(String, String)>,
    /// Seconds from midnight.
    pub start: u32,
    /// Seconds.
    pub duration: u32,
}

impl DisruptionSpec {
    pub fn end(&self) -> u32 {
        self.start + self.duration
    }

    pub fn affects(&self, mode: ModeKind, from: &str, to: &str) -> bool {
        mode == self.mode
            && self
                .affected_links
                .iter()
                .any(|(a, b)| a == from && b == to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Cost of a leaving passenger, euro.
    pub cl: f64,
    /// Cost of time, euro per passenger-hour.
    pub ct: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Arrangement fee as a fraction of the nominal transfer cost.
    pub ca_rate: f64,
    /// Floor of the leaving rate.
    pub alpha: f64,
    /// Floor of the waiting rate.
    pub beta: f64,
    /// Minutes.
    pub h_max: f64,
    /// Minimum willingness to wait.
    pub theta: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            cl: 2.5,
            ct: 11.2,
            p_min: 0.3,
            p_max: 1.0,
            ca_rate: 0.2,
            alpha: 0.1,
            beta: 0.1,
            h_max: 15.0,
            theta: 0.2,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let err = |field: &'static str, reason: &str| {
            Err(ValidationError::new(field, "cost_params", reason))
        };
        let all = [
            self.cl,
            self.ct,
            self.p_min,
            self.p_max,
            self.ca_rate,
            self.alpha,
            self.beta,
            self.h_max,
            self.theta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return err("CostParams", "non-finite value");
        }
        if self.cl < 0.0 || self.ct < 0.0 || self.ca_rate < 0.0 {
            return err("CostParams.cost", "costs must be nonnegative");
        }
        if !(0.0 <= self.p_min && self.p_min <= self.p_max && self.p_max <= 1.0) {
            return err("CostParams.payment", "requires 0 <= p_min <= p_max <= 1");
        }
        if !(0.0..=1.0).contains(&self.alpha)
            || !(0.0..=1.0).contains(&self.beta)
            || !(0.0..=1.0).contains(&self.theta)
            || self.alpha + self.beta > 1.0
        {
            return err(
                "CostParams.rates",
                "alpha, beta, theta must lie in [0, 1] with alpha + beta <= 1",
            );
        }
        if self.h_max <= 0.0 {
            return err("CostParams.h_max", "must be positive");
        }
        Ok(())
    }
}

/// A named invariant violation, with the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub field: &'static str,
    pub entity: String,
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: &'static str, entity: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field,
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.field, self.entity, self.reason)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ValidationError {}

/// Serialized scenario. Field order matches the JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub stations: Vec<Station>,
    pub links: Vec<Link>,
    pub modes: Vec<Mode>,
    pub lines: Vec<TransitLine>,
    pub vehicles: Vec<Vehicle>,
    pub demand: Vec<DemandEntry>,
    pub cost_params: CostParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disruption: Option<DisruptionSpec>,
}

/// Validated scenario with lookup indices.
#[derive(Debug, Clone)]
pub struct Scenario {
    file: ScenarioFile,
    station_index: BTreeMap<String, usize>,
    line_index: BTreeMap<String, usize>,
    /// `(from, to)` station indices to link indices, in file order.
    link_index: BTreeMap<(usize, usize), Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl Scenario {
    /// Validates every invariant and builds the indices.
    pub fn new(file: ScenarioFile) -> Result<Self, ValidationError> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(ValidationError::new(
                "schema_version",
                format!("{}", file.schema_version),
                format!("expected {}", SCHEMA_VERSION),
            ));
        }

        let mut station_index = BTreeMap::new();
        for (idx, st) in file.stations.iter().enumerate() {
            if !st.position.x.is_finite() || !st.position.y.is_finite() {
                return Err(ValidationError::new(
                    "Station.position",
                    &st.id,
                    "coordinates must be finite",
                ));
            }
            if station_index.insert(st.id.clone(), idx).is_some() {
                return Err(ValidationError::new("Station.id", &st.id, "duplicate id"));
            }
        }

        let mut seen_modes = BTreeSet::new();
        for mode in &file.modes {
            if !seen_modes.insert(mode.kind) {
                return Err(ValidationError::new(
                    "Mode.kind",
                    mode.kind.name(),
                    "mode defined twice",
                ));
            }
            if mode.capacity < 1 {
                return Err(ValidationError::new(
                    "Mode.capacity",
                    mode.kind.name(),
                    "must be at least 1",
                ));
            }
            if !mode.op_cost.is_nonnegative() {
                return Err(ValidationError::new(
                    "Mode.op_cost",
                    mode.kind.name(),
                    "must be finite and nonnegative",
                ));
            }
            if !(mode.default_speed.is_finite() && mode.default_speed > 0.0) {
                return Err(ValidationError::new(
                    "Mode.default_speed",
                    mode.kind.name(),
                    "must be positive",
                ));
            }
        }

        let mut link_ids = BTreeSet::new();
        let mut link_index: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut outgoing = alloc::vec![Vec::new(); file.stations.len()];
        for (idx, link) in file.links.iter().enumerate() {
            if !link_ids.insert(link.id.as_str()) {
                return Err(ValidationError::new("Link.id", &link.id, "duplicate id"));
            }
            let from = *station_index
                .get(&link.from)
                .ok_or_else(|| ValidationError::new("Link.from", &link.id, "unknown station"))?;
            let to = *station_index
                .get(&link.to)
                .ok_or_else(|| ValidationError::new("Link.to", &link.id, "unknown station"))?;
            if from == to {
                return Err(ValidationError::new("Link.to", &link.id, "self loop"));
            }
            if !(link.length.is_finite() && link.length > 0.0) {
                return Err(ValidationError::new("Link.length", &link.id, "must be > 0"));
            }
            if !(link.free_flow_speed.is_finite() && link.free_flow_speed > 0.0) {
                return Err(ValidationError::new(
                    "Link.free_flow_speed",
                    &link.id,
                    "must be > 0",
                ));
            }
            if !(link.capacity > 0.0) || link.capacity.is_nan() {
                return Err(ValidationError::new(
                    "Link.capacity",
                    &link.id,
                    "must be > 0",
                ));
            }
            if link.modes_allowed.is_empty() {
                return Err(ValidationError::new(
                    "Link.modes_allowed",
                    &link.id,
                    "no mode allowed",
                ));
            }
            link_index.entry((from, to)).or_default().push(idx);
            outgoing[from].push(idx);
        }

        let mut scenario = Scenario {
            file,
            station_index,
            line_index: BTreeMap::new(),
            link_index,
            outgoing,
        };

        for (idx, line) in scenario.file.lines.iter().enumerate() {
            if scenario.line_index.insert(line.id.clone(), idx).is_some() {
                return Err(ValidationError::new(
                    "TransitLine.id",
                    &line.id,
                    "duplicate id",
                ));
            }
            if !line.mode.is_scheduled() {
                return Err(ValidationError::new(
                    "TransitLine.mode",
                    &line.id,
                    "lines must be rail, subway, tram or bus",
                ));
            }
            if !seen_modes.contains(&line.mode) {
                return Err(ValidationError::new(
                    "TransitLine.mode",
                    &line.id,
                    "mode not defined in modes",
                ));
            }
            if line.stops.len() < 2 {
                return Err(ValidationError::new(
                    "TransitLine.stops",
                    &line.id,
                    "needs at least two stops",
                ));
            }
            if !(line.headway.is_finite() && line.headway > 0.0) {
                return Err(ValidationError::new(
                    "TransitLine.headway",
                    &line.id,
                    "must be > 0",
                ));
            }
            if line.service_window[0] >= line.service_window[1] {
                return Err(ValidationError::new(
                    "TransitLine.service_window",
                    &line.id,
                    "start must precede end",
                ));
            }
            for pair in line.stops.windows(2) {
                if scenario.link_for(&pair[0], &pair[1], line.mode).is_none() {
                    return Err(ValidationError::new(
                        "TransitLine.stops",
                        &line.id,
                        format!("no {} link {} -> {}", line.mode, pair[0], pair[1]),
                    ));
                }
            }
        }

        let mut vehicle_ids = BTreeSet::new();
        for v in &scenario.file.vehicles {
            if !vehicle_ids.insert(v.id.as_str()) {
                return Err(ValidationError::new("Vehicle.id", &v.id, "duplicate id"));
            }
            if !seen_modes.contains(&v.mode) {
                return Err(ValidationError::new(
                    "Vehicle.mode",
                    &v.id,
                    "mode not defined in modes",
                ));
            }
            if v.capacity == Some(0) {
                return Err(ValidationError::new(
                    "Vehicle.capacity",
                    &v.id,
                    "must be at least 1",
                ));
            }
            match &v.assignment {
                Assignment::Scheduled { line, link } => {
                    let line = scenario.line(line).ok_or_else(|| {
                        ValidationError::new("Vehicle.assignment", &v.id, "unknown line")
                    })?;
                    if line.mode != v.mode {
                        return Err(ValidationError::new(
                            "Vehicle.assignment",
                            &v.id,
                            "line mode differs from vehicle mode",
                        ));
                    }
                    let on_line = line
                        .stops
                        .windows(2)
                        .any(|w| w[0] == link.0 && w[1] == link.1);
                    if !on_line {
                        return Err(ValidationError::new(
                            "Vehicle.assignment",
                            &v.id,
                            "link is not served by the line",
                        ));
                    }
                }
                Assignment::Free(loc) => {
                    if v.mode.is_scheduled() {
                        return Err(ValidationError::new(
                            "Vehicle.assignment",
                            &v.id,
                            "scheduled modes cannot be free-floating",
                        ));
                    }
                    match loc {
                        Location::Station(s) if !scenario.station_index.contains_key(s) => {
                            return Err(ValidationError::new(
                                "Vehicle.assignment",
                                &v.id,
                                "unknown station",
                            ));
                        }
                        Location::Point(p) if !(p.x.is_finite() && p.y.is_finite()) => {
                            return Err(ValidationError::new(
                                "Vehicle.assignment",
                                &v.id,
                                "coordinates must be finite",
                            ));
                        }
                        _ => {}
                    }
                }
                Assignment::Depot(s) => {
                    if !scenario.station_index.contains_key(s) {
                        return Err(ValidationError::new(
                            "Vehicle.assignment",
                            &v.id,
                            "unknown depot station",
                        ));
                    }
                }
            }
        }

        for entry in &scenario.file.demand {
            let entity = format!("{}->{}", entry.origin, entry.destination);
            if !scenario.station_index.contains_key(&entry.origin)
                || !scenario.station_index.contains_key(&entry.destination)
            {
                return Err(ValidationError::new(
                    "DemandProfile.station",
                    entity,
                    "unknown station",
                ));
            }
            let mut bins: Vec<&DemandBin> = entry.bins.iter().collect();
            bins.sort_by_key(|b| b.start);
            for bin in &bins {
                if bin.start >= bin.end {
                    return Err(ValidationError::new(
                        "DemandProfile.bins",
                        entity,
                        "bin start must precede end",
                    ));
                }
                if !(bin.rate.is_finite() && bin.rate >= 0.0) {
                    return Err(ValidationError::new(
                        "DemandProfile.rate",
                        entity,
                        "rates must be finite and >= 0",
                    ));
                }
            }
            if bins.windows(2).any(|w| w[1].start < w[0].end) {
                return Err(ValidationError::new(
                    "DemandProfile.bins",
                    entity,
                    "bins overlap",
                ));
            }
        }

        scenario.file.cost_params.validate()?;

        if let Some(d) = &scenario.file.disruption {
            scenario.check_disruption(d)?;
        }

        Ok(scenario)
    }

    /// Checks a disruption against this network.
    pub fn check_disruption(&self, d: &DisruptionSpec) -> Result<(), ValidationError> {
        if d.duration == 0 {
            return Err(ValidationError::new(
                "DisruptionSpec.duration",
                d.mode.name(),
                "must be > 0",
            ));
        }
        for (from, to) in &d.affected_links {
            if self.link_for(from, to, d.mode).is_none() {
                return Err(ValidationError::new(
                    "DisruptionSpec.affected_links",
                    format!("{}->{}", from, to),
                    format!("no {} link", d.mode),
                ));
            }
        }
        Ok(())
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    pub fn into_file(self) -> ScenarioFile {
        self.file
    }

    pub fn stations(&self) -> &[Station] {
        &self.file.stations
    }

    pub fn links(&self) -> &[Link] {
        &self.file.links
    }

    pub fn lines(&self) -> &[TransitLine] {
        &self.file.lines
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.file.vehicles
    }

    pub fn demand(&self) -> &[DemandEntry] {
        &self.file.demand
    }

    pub fn cost_params(&self) -> &CostParams {
        &self.file.cost_params
    }

    pub fn disruption(&self) -> Option<&DisruptionSpec> {
        self.file.disruption.as_ref()
    }

    pub fn station_idx(&self, id: &str) -> Option<usize> {
        self.station_index.get(id).copied()
    }

    pub fn station(&self, id: &str) -> Option<&Station> {
        self.station_idx(id).map(|i| &self.file.stations[i])
    }

    pub fn line(&self, id: &str) -> Option<&TransitLine> {
        self.line_index.get(id).map(|&i| &self.file.lines[i])
    }

    pub fn mode(&self, kind: ModeKind) -> Option<&Mode> {
        self.file.modes.iter().find(|m| m.kind == kind)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.file.modes
    }

    /// Outgoing link indices of station `idx`.
    pub fn outgoing(&self, idx: usize) -> &[usize] {
        &self.outgoing[idx]
    }

    /// First link `from -> to` that admits `mode`.
    pub fn link_for(&self, from: &str, to: &str, mode: ModeKind) -> Option<usize> {
        let a = self.station_idx(from)?;
        let b = self.station_idx(to)?;
        self.link_between(a, b, mode)
    }

    pub fn link_between(&self, from: usize, to: usize, mode: ModeKind) -> Option<usize> {
        self.link_index
            .get(&(from, to))?
            .iter()
            .copied()
            .find(|&l| self.file.links[l].allows(mode))
    }

    /// Nearest station to `p`; ties go to the lower index.
    pub fn nearest_station(&self, p: &Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (idx, st) in self.file.stations.iter().enumerate() {
            let d = st.position.distance(p);
            if d < best_d {
                best = idx;
                best_d = d;
            }
        }
        best
    }

    /// Returns a copy with `f` applied to the underlying file, re-validated.
    pub fn modified(&self, f: impl FnOnce(&mut ScenarioFile)) -> Result<Scenario, ValidationError> {
        let mut file = self.file.clone();
        f(&mut file);
        Scenario::new(file)
    }

    /// Capacity of a vehicle, honoring its override.
    pub fn vehicle_capacity(&self, v: &Vehicle) -> u32 {
        v.capacity
            .or_else(|| self.mode(v.mode).map(|m| m.capacity))
            .unwrap_or(1)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} stations, {} links, {} lines, {} vehicles",
            self.file.stations.len(),
            self.file.links.len(),
            self.file.lines.len(),
            self.file.vehicles.len()
        )
    }
}
