#![allow(dead_code)]

use std::sync::Arc;

use dynacc_core::network::{breakpoint_minute, LinkSpec, PROFILE_LEN};
use dynacc_core::routing::{Attachment, SearchGraph};
use dynacc_core::{Network, NetworkBuilder, SpeedProfile};
use rand::seq::SliceRandom;
use rand::Rng;

/// Speed profile with a slow random walk and occasional sharp drops and
/// recoveries, so that some links need FIFO repair.
pub fn random_profile(rng: &mut impl Rng, id: &str) -> SpeedProfile {
    let mut v = Vec::with_capacity(PROFILE_LEN);
    let mut x: f64 = rng.gen_range(0.3..1.0);
    for _ in 0..PROFILE_LEN {
        x += rng.gen_range(-0.08..0.08);
        if rng.gen_bool(0.04) {
            x = rng.gen_range(0.05..1.0);
        }
        x = x.clamp(0.05, 1.0);
        v.push(x);
    }
    SpeedProfile::new(id, v).unwrap()
}

pub struct RandomCase {
    pub graph: SearchGraph,
    pub zones: usize,
}

/// Network with at most 50 nodes and 200 directed links, random profiles,
/// some two-way rows, random banned turns and a handful of zones.
pub fn random_case(rng: &mut impl Rng) -> RandomCase {
    let n = rng.gen_range(2..=50);
    let mut b = NetworkBuilder::new();
    for i in 0..n {
        b.add_node(
            format!("n{i}"),
            rng.gen_range(0.0..20_000.0),
            rng.gen_range(0.0..20_000.0),
        )
        .unwrap();
    }
    let profiles = rng.gen_range(1..=6);
    for p in 0..profiles {
        b.add_profile(random_profile(rng, &format!("p{p}")))
            .unwrap();
    }
    let target_links = rng.gen_range(1..=200);
    let mut directed = 0;
    let mut rows: Vec<(String, usize, usize, bool)> = Vec::new();
    while directed < target_links {
        let from = rng.gen_range(0..n);
        let mut to = rng.gen_range(0..n);
        if to == from {
            to = (from + 1) % n;
        }
        let oneway = directed + 2 > target_links || rng.gen_bool(0.7);
        let id = format!("l{}", rows.len());
        b.add_link(LinkSpec {
            id: id.clone(),
            from: format!("n{from}"),
            to: format!("n{to}"),
            length_m: rng.gen_range(50.0..6_000.0),
            freeflow_kmh: rng.gen_range(15.0..130.0),
            frc: rng.gen_range(0..=6),
            oneway,
            profile_id: rng
                .gen_bool(0.8)
                .then(|| format!("p{}", rng.gen_range(0..profiles))),
            allow_loop: false,
        })
        .unwrap();
        rows.push((id, from, to, oneway));
        directed += if oneway { 1 } else { 2 };
    }
    let bans = rng.gen_range(0..=rows.len() / 3);
    for _ in 0..bans {
        let (a, _, via, oneway_a) = rows.choose(rng).unwrap().clone();
        if !oneway_a {
            continue;
        }
        let next: Vec<_> = rows.iter().filter(|r| r.1 == via && r.3).collect();
        if let Some((c, ..)) = next.choose(rng) {
            b.add_restriction(&format!("n{via}"), &a, c).unwrap();
        }
    }
    let (net, _) = b.build();
    let zones = rng.gen_range(1..=8);
    let attachments = (0..zones)
        .map(|_| {
            rng.gen_bool(0.95).then(|| Attachment {
                node: rng.gen_range(0..n),
                connector_minutes: rng.gen_range(0.0..4.0),
            })
        })
        .collect();
    RandomCase {
        graph: SearchGraph::build(Arc::new(net), attachments),
        zones,
    }
}

/// Departure instants biased towards the profile window and its edges.
pub fn random_departure(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(0.0..1440.0),
        1 => breakpoint_minute(rng.gen_range(0..PROFILE_LEN)),
        _ => rng.gen_range(250.0..1300.0),
    }
}

/// Earliest arrivals by label correcting over link entries: every link label
/// is relaxed through every allowed turn until nothing improves. Arrival
/// functions are non-decreasing, so the fixpoint is the earliest arrival.
pub fn oracle_arrivals(graph: &SearchGraph, origin: usize, depart: f64) -> Vec<Option<f64>> {
    let net: &Network = graph.network();
    let links = net.links();
    let zones = graph.zone_count();
    let mut out = vec![None; zones];
    let Some(o) = graph.attachment(origin) else {
        return out;
    };
    let start = depart + o.connector_minutes;
    let mut label = vec![f64::INFINITY; links.len()];
    for (l, link) in links.iter().enumerate() {
        if link.from == o.node {
            label[l] = net.ttf(l).arrival(start);
        }
    }
    loop {
        let mut changed = false;
        for l in 0..links.len() {
            if !label[l].is_finite() {
                continue;
            }
            for (m, next) in links.iter().enumerate() {
                if next.from != links[l].to || net.is_banned(l, m) {
                    continue;
                }
                let t = net.ttf(m).arrival(label[l]);
                if t < label[m] {
                    label[m] = t;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for (z, slot) in out.iter_mut().enumerate() {
        let Some(a) = graph.attachment(z) else {
            continue;
        };
        let mut best = if a.node == o.node {
            start
        } else {
            f64::INFINITY
        };
        for (l, link) in links.iter().enumerate() {
            if link.to == a.node {
                best = best.min(label[l]);
            }
        }
        if best.is_finite() {
            *slot = Some(best + a.connector_minutes);
        }
    }
    out[origin] = Some(depart);
    out
}
