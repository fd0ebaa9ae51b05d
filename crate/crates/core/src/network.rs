//! Road network with time-dependent, FIFO-guaranteed link travel times.
//!
//! Speed profiles are sampled every five minutes between 04:30 and 21:20 and
//! expressed as a fraction of the link's free-flow speed. Outside that window
//! (and on links without a profile) traffic runs at free flow. A link's
//! traversal time is fixed by the speed at the instant the vehicle enters it.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::time::Minute;

/// First profile breakpoint, 04:30.
pub const PROFILE_START: Minute = 270.0;
/// Last profile breakpoint, 21:20.
pub const PROFILE_END: Minute = 1280.0;
/// Spacing between breakpoints in minutes.
pub const PROFILE_STEP: Minute = 5.0;
/// Number of breakpoints, 04:30 through 21:20 inclusive.
pub const PROFILE_LEN: usize = 203;

/// Tolerance for FIFO and travel-time comparisons, in minutes.
pub const TIME_TOLERANCE: f64 = 1e-9;

pub type NodeIndex = usize;
pub type LinkIndex = usize;

/// Minute-of-day of breakpoint `k`.
pub fn breakpoint_minute(k: usize) -> Minute {
    PROFILE_START + PROFILE_STEP * k as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// Functional road class, 0 (motorway) through 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoadClass(u8);

impl RoadClass {
    pub const MAX: u8 = 6;

    pub fn new(frc: u8) -> Result<Self> {
        if frc > Self::MAX {
            return Err(Error::invalid(
                "road class",
                format!("FRC {frc} outside 0..=6"),
            ));
        }
        Ok(Self(frc))
    }

    pub fn frc(self) -> u8 {
        self.0
    }
}

/// Speed as a fraction of free flow at each five-minute breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    id: String,
    values: Arc<[f64]>,
}

impl SpeedProfile {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.len() != PROFILE_LEN {
            return Err(Error::invalid(
                format!("profile {id}"),
                format!("profile length {} (expected {PROFILE_LEN})", values.len()),
            ));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && **v <= 1.0))
        {
            return Err(Error::invalid(
                format!("profile {id}"),
                format!("value {v} at breakpoint {k} outside (0, 1]"),
            ));
        }
        Ok(Self {
            id,
            values: values.into(),
        })
    }

    /// Constant profile, mostly useful for tests.
    pub fn constant(id: impl Into<String>, fraction: f64) -> Result<Self> {
        Self::new(id, vec![fraction; PROFILE_LEN])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Speed fraction at minute `t`.
    pub fn fraction(&self, t: Minute) -> f64 {
        profile_fraction(&self.values, t)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.id.clone(), self.values.iter().map(|v| v * s).collect())
    }
}

/// Linear interpolation between breakpoints; 1.0 outside 04:30–21:20.
pub fn profile_fraction(values: &[f64], t: Minute) -> f64 {
    if !(PROFILE_START..=PROFILE_END).contains(&t) {
        return 1.0;
    }
    let pos = (t - PROFILE_START) / PROFILE_STEP;
    let k = (pos.floor() as usize).min(PROFILE_LEN - 1);
    let frac = pos - k as f64;
    if frac == 0.0 || k + 1 == PROFILE_LEN {
        values[k]
    } else {
        values[k] + (values[k + 1] - values[k]) * frac
    }
}

/// Directed road link.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// Unique id of this directed link.
    pub id: String,
    /// Id of the input row; both directions of a two-way row share it.
    pub source_id: String,
    pub from: NodeIndex,
    pub to: NodeIndex,
    pub length_m: f64,
    pub freeflow_kmh: f64,
    pub road_class: RoadClass,
    /// Index into [`Network::profiles`]; `None` means always free flow.
    pub profile: Option<usize>,
    pub is_loop: bool,
}

impl Link {
    /// Traversal minutes at 100% speed.
    pub fn freeflow_minutes(&self) -> f64 {
        self.length_m / 1000.0 / self.freeflow_kmh * 60.0
    }
}

/// Traversal minutes for a vehicle entering `link` at `t`, evaluated directly
/// from the profile without FIFO repair.
pub fn link_entry_travel_time(link: &Link, profile: Option<&SpeedProfile>, t: Minute) -> f64 {
    let fraction = profile.map_or(1.0, |p| p.fraction(t));
    link.length_m / 1000.0 / (link.freeflow_kmh * fraction) * 60.0
}

/// Banned manoeuvre from one link to another through `via`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TurnRestriction {
    pub via: NodeIndex,
    pub from_link: LinkIndex,
    pub to_link: LinkIndex,
}

/// Entry-time dependent traversal time of one link.
///
/// The raw arrival function is `a(t) = t + base / f(t)` with `f` the
/// interpolated profile. A repaired function instead evaluates the lower
/// envelope `min_{s >= t} a(s)`, i.e. the best arrival achievable by waiting
/// at the link entrance, which is non-decreasing by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeFunction {
    base: f64,
    fractions: Option<Arc<[f64]>>,
    /// `suffix_min[k]` = infimum of `a(s)` over `s >= breakpoint k`.
    suffix_min: Option<Vec<f64>>,
}

impl TravelTimeFunction {
    pub fn new(link: &Link, profile: Option<&SpeedProfile>) -> Self {
        Self {
            base: link.freeflow_minutes(),
            fractions: profile.map(|p| p.values.clone()),
            suffix_min: None,
        }
    }

    pub fn freeflow_minutes(&self) -> f64 {
        self.base
    }

    pub fn is_repaired(&self) -> bool {
        self.suffix_min.is_some()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.fractions.is_some()
    }

    fn fraction(&self, t: Minute) -> f64 {
        match &self.fractions {
            Some(v) => profile_fraction(v, t),
            None => 1.0,
        }
    }

    /// Arrival without repair.
    pub fn raw_arrival(&self, t: Minute) -> Minute {
        t + self.base / self.fraction(t)
    }

    /// Arrival minute for a vehicle entering at `t`.
    pub fn arrival(&self, t: Minute) -> Minute {
        let (Some(values), Some(suffix)) = (&self.fractions, &self.suffix_min) else {
            return self.raw_arrival(t);
        };
        if t > PROFILE_END {
            return t + self.base;
        }
        if t < PROFILE_START {
            return (t + self.base).min(suffix[0]);
        }
        let k = (((t - PROFILE_START) / PROFILE_STEP).floor() as usize).min(PROFILE_LEN - 1);
        if k == PROFILE_LEN - 1 {
            return self.raw_arrival(t).min(suffix[k]);
        }
        let end = breakpoint_minute(k + 1);
        let local = self.segment_min(values, k, t, end);
        local.min(suffix[k + 1])
    }

    /// Traversal minutes for entry at `t` (repaired if applicable).
    pub fn travel_time(&self, t: Minute) -> f64 {
        self.arrival(t) - t
    }

    /// Minimum of the raw arrival over `[from, to]` inside segment `k`.
    /// `a` is convex on a segment, so the minimum is at the clamped
    /// stationary point.
    fn segment_min(&self, values: &[f64], k: usize, from: Minute, to: Minute) -> Minute {
        let f0 = values[k];
        let slope = (values[k + 1] - f0) / PROFILE_STEP;
        let s = if slope > 0.0 {
            let f_star = (self.base * slope).sqrt();
            let s_star = breakpoint_minute(k) + (f_star - f0) / slope;
            s_star.clamp(from, to)
        } else {
            from
        };
        self.raw_arrival(s)
    }

    /// True when the raw arrival function decreases somewhere.
    fn raw_violates_fifo(&self) -> bool {
        let Some(values) = &self.fractions else {
            return false;
        };
        // Leaving the window returns to free flow: a downward jump unless the
        // last breakpoint is already 1.0.
        if values[PROFILE_LEN - 1] < 1.0 {
            return true;
        }
        (0..PROFILE_LEN - 1).any(|k| {
            let slope = (values[k + 1] - values[k]) / PROFILE_STEP;
            // a'(s) = 1 - base * slope / f(s)^2 is most negative at the segment start.
            slope > 0.0 && values[k] * values[k] < self.base * slope
        })
    }

    /// Profile breakpoints of the function; empty for constant functions.
    pub fn lattice(&self) -> Vec<Minute> {
        if self.fractions.is_none() {
            return Vec::new();
        }
        (0..PROFILE_LEN).map(breakpoint_minute).collect()
    }
}

/// All lattice pairs `t1 < t2` whose arrivals violate FIFO by more than `tol`.
pub fn fifo_check(f: &TravelTimeFunction, tol: f64) -> Vec<(Minute, Minute)> {
    let lattice = f.lattice();
    let arrivals: Vec<f64> = lattice.iter().map(|&t| f.arrival(t)).collect();
    let mut violations = Vec::new();
    for i in 0..lattice.len() {
        for j in i + 1..lattice.len() {
            if arrivals[i] > arrivals[j] + tol {
                violations.push((lattice[i], lattice[j]));
            }
        }
    }
    violations
}

/// Replaces the arrival function by its free-waiting lower envelope.
/// FIFO-compliant functions are returned unchanged.
pub fn fifo_repair(f: &TravelTimeFunction) -> TravelTimeFunction {
    if !f.raw_violates_fifo() {
        return TravelTimeFunction {
            suffix_min: None,
            ..f.clone()
        };
    }
    let values = f.fractions.as_ref().expect("time-dependent function");
    let mut suffix = vec![0.0; PROFILE_LEN];
    // Right after 21:20 the link is back at free flow.
    let mut best = (PROFILE_END + f.base).min(f.raw_arrival(PROFILE_END));
    suffix[PROFILE_LEN - 1] = best;
    for k in (0..PROFILE_LEN - 1).rev() {
        let seg = f.segment_min(values, k, breakpoint_minute(k), breakpoint_minute(k + 1));
        best = best.min(seg);
        suffix[k] = best;
    }
    TravelTimeFunction {
        suffix_min: Some(suffix),
        ..f.clone()
    }
}

/// Per-link summary of what FIFO repair changed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepairReport {
    pub links_checked: usize,
    pub links_repaired: Vec<RepairedLink>,
    pub breakpoints_total: usize,
    pub breakpoints_changed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairedLink {
    pub link_id: String,
    pub breakpoints_changed: usize,
    /// Largest reduction of arrival time at a breakpoint, minutes.
    pub max_gain: f64,
}

impl RepairReport {
    pub fn changed_fraction(&self) -> f64 {
        if self.breakpoints_total == 0 {
            0.0
        } else {
            self.breakpoints_changed as f64 / self.breakpoints_total as f64
        }
    }
}

/// Input description of one link row before direction expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub freeflow_kmh: f64,
    pub frc: u8,
    pub oneway: bool,
    pub profile_id: Option<String>,
    pub allow_loop: bool,
}

/// Immutable road network with repaired travel-time functions.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    profiles: Vec<SpeedProfile>,
    restrictions: Vec<TurnRestriction>,
    banned: HashSet<(LinkIndex, LinkIndex)>,
    ttfs: Vec<TravelTimeFunction>,
    out_links: Vec<Vec<LinkIndex>>,
    in_links: Vec<Vec<LinkIndex>>,
}

impl Network {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn profiles(&self) -> &[SpeedProfile] {
        &self.profiles
    }

    pub fn restrictions(&self) -> &[TurnRestriction] {
        &self.restrictions
    }

    pub fn ttf(&self, link: LinkIndex) -> &TravelTimeFunction {
        &self.ttfs[link]
    }

    pub fn out_links(&self, node: NodeIndex) -> &[LinkIndex] {
        &self.out_links[node]
    }

    pub fn in_links(&self, node: NodeIndex) -> &[LinkIndex] {
        &self.in_links[node]
    }

    pub fn link_profile(&self, link: LinkIndex) -> Option<&SpeedProfile> {
        self.links[link].profile.map(|p| &self.profiles[p])
    }

    /// Raw (unrepaired) entry-time traversal minutes.
    pub fn entry_travel_time(&self, link: LinkIndex, t: Minute) -> f64 {
        link_entry_travel_time(&self.links[link], self.link_profile(link), t)
    }

    pub fn is_banned(&self, from_link: LinkIndex, to_link: LinkIndex) -> bool {
        self.banned.contains(&(from_link, to_link))
    }

    /// Same topology with every profile removed.
    pub fn free_flow(&self) -> Network {
        let mut net = self.clone();
        for l in &mut net.links {
            l.profile = None;
        }
        net.profiles.clear();
        net.ttfs = net
            .links
            .iter()
            .map(|l| TravelTimeFunction::new(l, None))
            .collect();
        net
    }

    /// Same topology with every profile value multiplied by `s` in (0, 1].
    pub fn with_scaled_profiles(&self, s: f64) -> Result<(Network, RepairReport)> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::invalid(
                "profile scale",
                format!("{s} outside (0, 1]"),
            ));
        }
        let mut net = self.clone();
        net.profiles = self
            .profiles
            .iter()
            .map(|p| p.scaled(s))
            .collect::<Result<_>>()?;
        let report = net.rebuild_ttfs();
        Ok((net, report))
    }

    fn rebuild_ttfs(&mut self) -> RepairReport {
        let mut report = RepairReport {
            links_checked: self.links.len(),
            ..Default::default()
        };
        self.ttfs = Vec::with_capacity(self.links.len());
        for link in &self.links {
            let profile = link.profile.map(|p| &self.profiles[p]);
            let raw = TravelTimeFunction::new(link, profile);
            let repaired = fifo_repair(&raw);
            let lattice = raw.lattice();
            report.breakpoints_total += lattice.len();
            if repaired.is_repaired() {
                let mut changed = 0;
                let mut max_gain: f64 = 0.0;
                for &t in &lattice {
                    let gain = raw.arrival(t) - repaired.arrival(t);
                    if gain > TIME_TOLERANCE {
                        changed += 1;
                        max_gain = max_gain.max(gain);
                    }
                }
                report.breakpoints_changed += changed;
                report.links_repaired.push(RepairedLink {
                    link_id: link.id.clone(),
                    breakpoints_changed: changed,
                    max_gain,
                });
            }
            self.ttfs.push(repaired);
        }
        report
    }

    /// Index of the node nearest to `(x, y)`; ties go to the lowest index.
    pub fn nearest_node(&self, x: f64, y: f64) -> Option<NodeIndex> {
        let mut best: Option<(f64, NodeIndex)> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = (n.x - x).powi(2) + (n.y - y).powi(2);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Validating builder for [`Network`].
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    nodes: Vec<Node>,
    node_index: HashMap<String, NodeIndex>,
    profiles: Vec<SpeedProfile>,
    profile_index: HashMap<String, usize>,
    links: Vec<Link>,
    /// Row id -> directed link indices.
    link_rows: HashMap<String, Vec<LinkIndex>>,
    restrictions: Vec<TurnRestriction>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>, x: f64, y: f64) -> Result<NodeIndex> {
        let id = id.into();
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::invalid(
                format!("node {id}"),
                "non-finite coordinate",
            ));
        }
        if self.node_index.contains_key(&id) {
            return Err(Error::invalid(format!("node {id}"), "duplicate id"));
        }
        let idx = self.nodes.len();
        self.node_index.insert(id.clone(), idx);
        self.nodes.push(Node { id, x, y });
        Ok(idx)
    }

    pub fn add_profile(&mut self, profile: SpeedProfile) -> Result<usize> {
        if self.profile_index.contains_key(profile.id()) {
            return Err(Error::invalid(
                format!("profile {}", profile.id()),
                "duplicate id",
            ));
        }
        let idx = self.profiles.len();
        self.profile_index.insert(profile.id().to_owned(), idx);
        self.profiles.push(profile);
        Ok(idx)
    }

    /// Adds one link row; two-way rows produce a second link `<id>:rev`.
    pub fn add_link(&mut self, spec: LinkSpec) -> Result<Vec<LinkIndex>> {
        let what = || format!("link {}", spec.id);
        if self.link_rows.contains_key(&spec.id) {
            return Err(Error::invalid(what(), "duplicate id"));
        }
        let from = *self
            .node_index
            .get(&spec.from)
            .ok_or_else(|| Error::invalid(what(), format!("unknown from node {}", spec.from)))?;
        let to = *self
            .node_index
            .get(&spec.to)
            .ok_or_else(|| Error::invalid(what(), format!("unknown to node {}", spec.to)))?;
        if !(spec.length_m > 0.0 && spec.length_m.is_finite()) {
            return Err(Error::invalid(
                what(),
                format!("non-positive length {}", spec.length_m),
            ));
        }
        if !(spec.freeflow_kmh > 0.0 && spec.freeflow_kmh.is_finite()) {
            return Err(Error::invalid(
                what(),
                format!("non-positive speed {}", spec.freeflow_kmh),
            ));
        }
        if from == to && !spec.allow_loop {
            return Err(Error::invalid(what(), "from and to are the same node"));
        }
        let road_class =
            RoadClass::new(spec.frc).map_err(|e| Error::invalid(what(), e.to_string()))?;
        let profile = match &spec.profile_id {
            Some(p) => Some(
                *self
                    .profile_index
                    .get(p)
                    .ok_or_else(|| Error::invalid(what(), format!("unknown profile {p}")))?,
            ),
            None => None,
        };
        let mut dirs = vec![(spec.id.clone(), from, to)];
        if !spec.oneway {
            dirs.push((format!("{}:rev", spec.id), to, from));
        }
        let mut out = Vec::with_capacity(dirs.len());
        for (id, from, to) in dirs {
            out.push(self.links.len());
            self.links.push(Link {
                id,
                source_id: spec.id.clone(),
                from,
                to,
                length_m: spec.length_m,
                freeflow_kmh: spec.freeflow_kmh,
                road_class,
                profile,
                is_loop: from == to,
            });
        }
        self.link_rows.insert(spec.id.clone(), out.clone());
        Ok(out)
    }

    /// Bans the turn `from_link -> to_link` at `via`. Link ids are row ids;
    /// the direction is chosen by which end touches `via`.
    pub fn add_restriction(&mut self, via: &str, from_link: &str, to_link: &str) -> Result<()> {
        let what = || format!("restriction {from_link}->{via}->{to_link}");
        let via_idx = *self
            .node_index
            .get(via)
            .ok_or_else(|| Error::invalid(what(), format!("unknown via node {via}")))?;
        let pick = |row: &str, entering: bool| -> Result<LinkIndex> {
            let dirs = self
                .link_rows
                .get(row)
                .ok_or_else(|| Error::invalid(what(), format!("unknown link {row}")))?;
            dirs.iter()
                .copied()
                .find(|&l| {
                    let link = &self.links[l];
                    if entering {
                        link.to == via_idx
                    } else {
                        link.from == via_idx
                    }
                })
                .ok_or_else(|| {
                    let side = if entering { "enter" } else { "exit" };
                    Error::invalid(what(), format!("link {row} does not {side} node {via}"))
                })
        };
        let from_idx = pick(from_link, true)?;
        let to_idx = pick(to_link, false)?;
        let r = TurnRestriction {
            via: via_idx,
            from_link: from_idx,
            to_link: to_idx,
        };
        if !self.restrictions.contains(&r) {
            self.restrictions.push(r);
        }
        Ok(())
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIndex> {
        self.node_index.get(id).copied()
    }

    /// Finalizes the network, applying FIFO repair to every link.
    pub fn build(self) -> (Network, RepairReport) {
        let n = self.nodes.len();
        let mut out_links = vec![Vec::new(); n];
        let mut in_links = vec![Vec::new(); n];
        for (i, l) in self.links.iter().enumerate() {
            out_links[l.from].push(i);
            in_links[l.to].push(i);
        }
        let banned = self
            .restrictions
            .iter()
            .map(|r| (r.from_link, r.to_link))
            .collect();
        let mut net = Network {
            nodes: self.nodes,
            links: self.links,
            profiles: self.profiles,
            restrictions: self.restrictions,
            banned,
            ttfs: Vec::new(),
            out_links,
            in_links,
        };
        let report = net.rebuild_ttfs();
        (net, report)
    }
}
