//! Time-dependent one-to-all queries on the FIFO network.
//!
//! Search states are link entries (edge-based expansion): the label of a link
//! state is the arrival time at the link's head node. Banned turns are simply
//! missing transitions. Each zone contributes one virtual origin state and one
//! virtual target state, joined to its attachment node by fixed-speed
//! connectors that ignore speed profiles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{LinkIndex, Network, NodeIndex};
use crate::time::{DepartureSchedule, Minute};

/// Where a zone centroid joins the road network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attachment {
    pub node: NodeIndex,
    /// Connector traversal minutes, same in both directions.
    pub connector_minutes: f64,
}

/// Edge-expanded graph used by the time-dependent search.
#[derive(Debug, Clone)]
pub struct SearchGraph {
    network: Arc<Network>,
    /// CSR offsets into `turn_targets`, one row per link.
    turn_offsets: Vec<usize>,
    turn_targets: Vec<LinkIndex>,
    attachments: Vec<Option<Attachment>>,
    /// CSR offsets into `node_zones`, one row per node.
    node_zone_offsets: Vec<usize>,
    node_zones: Vec<usize>,
}

/// Kinds of search states, decoded from a flat state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Link(LinkIndex),
    Origin(usize),
    Target(usize),
}

impl SearchGraph {
    /// Expands `network` into link states; every allowed
    /// `(from_link, via, to_link)` triple becomes exactly one transition.
    pub fn build(network: Arc<Network>, attachments: Vec<Option<Attachment>>) -> Self {
        let links = network.links();
        let mut turn_offsets = Vec::with_capacity(links.len() + 1);
        let mut turn_targets = Vec::new();
        turn_offsets.push(0);
        for (l, link) in links.iter().enumerate() {
            for &m in network.out_links(link.to) {
                if !network.is_banned(l, m) {
                    turn_targets.push(m);
                }
            }
            turn_offsets.push(turn_targets.len());
        }

        let n = network.nodes().len();
        let mut per_node = vec![Vec::new(); n];
        for (z, a) in attachments.iter().enumerate() {
            if let Some(a) = a {
                per_node[a.node].push(z);
            }
        }
        let mut node_zone_offsets = Vec::with_capacity(n + 1);
        let mut node_zones = Vec::with_capacity(attachments.len());
        node_zone_offsets.push(0);
        for zs in per_node {
            node_zones.extend(zs);
            node_zone_offsets.push(node_zones.len());
        }

        Self {
            network,
            turn_offsets,
            turn_targets,
            attachments,
            node_zone_offsets,
            node_zones,
        }
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn zone_count(&self) -> usize {
        self.attachments.len()
    }

    pub fn attachment(&self, zone: usize) -> Option<&Attachment> {
        self.attachments.get(zone).and_then(Option::as_ref)
    }

    /// Link-to-link transitions (turns) in the expanded graph.
    pub fn turn_count(&self) -> usize {
        self.turn_targets.len()
    }

    pub fn state_count(&self) -> usize {
        self.network.links().len() + 2 * self.zone_count()
    }

    pub fn decode(&self, state: usize) -> State {
        let l = self.network.links().len();
        let z = self.zone_count();
        if state < l {
            State::Link(state)
        } else if state < l + z {
            State::Origin(state - l)
        } else {
            State::Target(state - l - z)
        }
    }

    fn origin_state(&self, zone: usize) -> usize {
        self.network.links().len() + zone
    }

    fn target_state(&self, zone: usize) -> usize {
        self.network.links().len() + self.zone_count() + zone
    }

    pub fn turns(&self, link: LinkIndex) -> &[LinkIndex] {
        &self.turn_targets[self.turn_offsets[link]..self.turn_offsets[link + 1]]
    }

    fn zones_at(&self, node: NodeIndex) -> &[usize] {
        &self.node_zones[self.node_zone_offsets[node]..self.node_zone_offsets[node + 1]]
    }
}

/// Result of one time-dependent query.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalLabels {
    pub origin: usize,
    pub depart: Minute,
    /// Arrival minute per target zone; `None` marks unreachable zones.
    pub arrivals: Vec<Option<Minute>>,
}

impl ArrivalLabels {
    /// Travel minutes to `target`, `None` if unreachable.
    pub fn travel_time(&self, target: usize) -> Option<f64> {
        self.arrivals[target].map(|a| a - self.depart)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    time: f64,
    state: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // Min-heap on time, then on state index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Earliest arrival at every target state from a set of origin zones that all
/// leave at `depart`.
fn search(graph: &SearchGraph, origins: &[usize], depart: Minute) -> Result<Vec<Option<Minute>>> {
    let net = &graph.network;
    let links = net.links();
    let zone_count = graph.zone_count();
    let mut labels = vec![f64::INFINITY; graph.state_count()];
    let mut settled = vec![false; graph.state_count()];
    let mut heap = BinaryHeap::new();

    for &o in origins {
        let a = graph.attachment(o).ok_or(Error::DetachedOrigin(o))?;
        let s = graph.origin_state(o);
        let t = depart + a.connector_minutes;
        if t < labels[s] {
            labels[s] = t;
            heap.push(HeapEntry { time: t, state: s });
        }
    }

    let reach_targets =
        |node: NodeIndex, time: f64, labels: &mut Vec<f64>, heap: &mut BinaryHeap<HeapEntry>| {
            for &z in graph.zones_at(node) {
                let a = graph.attachments[z].expect("attached zone");
                let s = graph.target_state(z);
                let t = time + a.connector_minutes;
                if t < labels[s] {
                    labels[s] = t;
                    heap.push(HeapEntry { time: t, state: s });
                }
            }
        };

    let attached_targets = graph.attachments.iter().filter(|a| a.is_some()).count();
    let mut targets_done = 0;
    while let Some(HeapEntry { time, state }) = heap.pop() {
        if settled[state] {
            continue;
        }
        settled[state] = true;
        match graph.decode(state) {
            State::Target(_) => {
                targets_done += 1;
                if targets_done == attached_targets {
                    break;
                }
            }
            State::Origin(z) => {
                let node = graph.attachments[z].expect("attached origin").node;
                for &m in net.out_links(node) {
                    let t = net.ttf(m).arrival(time);
                    if t < labels[m] {
                        labels[m] = t;
                        heap.push(HeapEntry { time: t, state: m });
                    }
                }
                reach_targets(node, time, &mut labels, &mut heap);
            }
            State::Link(l) => {
                for &m in graph.turns(l) {
                    if settled[m] {
                        continue;
                    }
                    let t = net.ttf(m).arrival(time);
                    if t < labels[m] {
                        labels[m] = t;
                        heap.push(HeapEntry { time: t, state: m });
                    }
                }
                reach_targets(links[l].to, time, &mut labels, &mut heap);
            }
        }
    }

    Ok((0..zone_count)
        .map(|z| {
            let t = labels[graph.target_state(z)];
            t.is_finite().then_some(t)
        })
        .collect())
}

/// Minimum arrival at every zone for a vehicle leaving `origin` at `depart`,
/// with each link's cost fixed at its entry instant.
pub fn td_one_to_all(graph: &SearchGraph, origin: usize, depart: Minute) -> Result<ArrivalLabels> {
    if origin >= graph.zone_count() {
        return Err(Error::DetachedOrigin(origin));
    }
    let mut arrivals = search(graph, &[origin], depart)?;
    arrivals[origin] = Some(depart);
    Ok(ArrivalLabels {
        origin,
        depart,
        arrivals,
    })
}

/// Per-target minimum over all origins leaving at `depart`. Origins keep
/// their connector cost to themselves.
pub fn td_multi_source(
    graph: &SearchGraph,
    origins: &[usize],
    depart: Minute,
) -> Result<Vec<Option<Minute>>> {
    search(graph, origins, depart)
}

/// Dense travel-time tensor `c[i][j][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    zones: usize,
    schedule: DepartureSchedule,
    /// Indexed `(t * zones + i) * zones + j`; infinity marks unreachable.
    minutes: Vec<f64>,
}

impl CostTensor {
    pub fn zone_count(&self) -> usize {
        self.zones
    }

    pub fn schedule(&self) -> &DepartureSchedule {
        &self.schedule
    }

    /// Travel minutes from `i` to `j` departing at instant index `t`.
    pub fn get(&self, i: usize, j: usize, t: usize) -> Option<f64> {
        let v = self.minutes[(t * self.zones + i) * self.zones + j];
        v.is_finite().then_some(v)
    }

    /// Row of travel minutes from `i` at instant `t`; infinity = unreachable.
    pub fn row(&self, i: usize, t: usize) -> &[f64] {
        let start = (t * self.zones + i) * self.zones;
        &self.minutes[start..start + self.zones]
    }

    pub fn raw(&self) -> &[f64] {
        &self.minutes
    }
}

/// Travel minutes from `origin` to every zone, diagonal forced to zero.
pub fn cost_row(graph: &SearchGraph, origin: usize, depart: Minute) -> Result<Vec<f64>> {
    let labels = td_one_to_all(graph, origin, depart)?;
    let mut row: Vec<f64> = labels
        .arrivals
        .iter()
        .map(|a| a.map_or(f64::INFINITY, |a| a - depart))
        .collect();
    row[origin] = 0.0;
    Ok(row)
}

/// One query per (origin, departure), fanned out over the rayon pool.
pub fn od_cost_tensor(graph: &SearchGraph, departures: &DepartureSchedule) -> Result<CostTensor> {
    let zones = graph.zone_count();
    let jobs: Vec<(usize, usize)> = (0..departures.len())
        .flat_map(|t| (0..zones).map(move |i| (t, i)))
        .collect();
    let rows: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(t, i)| cost_row(graph, i, departures.instants()[t]))
        .collect::<Result<_>>()?;
    let mut minutes = Vec::with_capacity(zones * zones * departures.len());
    for row in rows {
        minutes.extend(row);
    }
    Ok(CostTensor {
        zones,
        schedule: departures.clone(),
        minutes,
    })
}
