//! End-to-end run: buffer selection, routing, accessibility, metrics,
//! classification.

use std::sync::Arc;

use rayon::prelude::*;

use crate::accessibility::{
    accessibility_from_row, cumulative_population_curve, global_metrics, global_profile, relative,
    zonal_summary, zone_metrics, CurveRow, DecayParams, GlobalMetrics, GlobalProfile, ZonalSummary,
    ZoneMetrics,
};
use crate::clustering::{classify, kmeans_longitudinal, ReferenceProfileSet};
use crate::error::{Error, Result};
use crate::io::{read_references, LoadedScenario, ScenarioConfig};
use crate::network::{Network, RepairReport};
use crate::routing::{cost_row, SearchGraph};
use crate::time::{DepartureSchedule, Minute};
use crate::zoning::{attach_zones, compute_border_buffer, distance_to_downtown, StudyArea, Zone};

/// Scenario with its buffer resolved and search graphs built.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub config: ScenarioConfig,
    pub network: Arc<Network>,
    pub repair: RepairReport,
    /// Study and buffer zones in grid order.
    pub zones: Vec<Zone>,
    /// Indices into `zones`.
    pub area: StudyArea,
    pub graph: SearchGraph,
    pub freeflow_graph: SearchGraph,
    pub schedule: DepartureSchedule,
    pub decay: DecayParams,
}

impl PreparedScenario {
    /// Destination weights: population of study zones, plus buffer zones
    /// unless disabled.
    pub fn opportunities(&self) -> Vec<f64> {
        self.zones
            .iter()
            .map(|z| {
                if z.in_study_area || self.config.buffer_destinations {
                    z.population as f64
                } else {
                    0.0
                }
            })
            .collect()
    }
}

pub fn prepare(loaded: LoadedScenario) -> Result<PreparedScenario> {
    let LoadedScenario {
        config,
        data,
        network,
        repair,
        zones: grid,
    } = loaded;
    let network = Arc::new(network);
    let all_attachments = attach_zones(&grid, &network, config.connector_kmh);
    if grid
        .iter()
        .zip(&all_attachments)
        .any(|(z, a)| z.in_study_area && a.is_none())
    {
        return Err(Error::invalid(
            "study area",
            "network has no nodes to attach zones to",
        ));
    }
    let probe = SearchGraph::build(network.clone(), all_attachments.clone());
    let buffer = compute_border_buffer(&grid, &probe, config.buffer_threshold_min)?;

    let mut keep = vec![false; grid.len()];
    for (i, z) in grid.iter().enumerate() {
        keep[i] = z.in_study_area;
    }
    for &b in &buffer {
        keep[b] = true;
    }
    let kept: Vec<usize> = (0..grid.len()).filter(|&i| keep[i]).collect();
    let attachments: Vec<_> = kept.iter().map(|&i| all_attachments[i]).collect();
    let zones: Vec<Zone> = kept.iter().map(|&i| grid[i].clone()).collect();
    let area = StudyArea {
        study: (0..zones.len())
            .filter(|&i| zones[i].in_study_area)
            .collect(),
        buffer: (0..zones.len())
            .filter(|&i| !zones[i].in_study_area)
            .collect(),
        downtown: data.downtown,
    };
    log::info!(
        "{} study zones, {} buffer zones within {} min",
        area.study.len(),
        area.buffer.len(),
        config.buffer_threshold_min
    );
    let graph = SearchGraph::build(network.clone(), attachments.clone());
    let freeflow_graph = SearchGraph::build(Arc::new(network.free_flow()), attachments);
    Ok(PreparedScenario {
        schedule: config.schedule()?,
        decay: config.decay()?,
        config,
        network,
        repair,
        zones,
        area,
        graph,
        freeflow_graph,
    })
}

/// `A_i^t` for each origin in `origins` at each instant of `schedule`,
/// one query per (origin, instant) spread over the rayon pool.
pub fn accessibility_series(
    graph: &SearchGraph,
    origins: &[usize],
    opportunities: &[f64],
    schedule: &[Minute],
    decay: &DecayParams,
) -> Result<Vec<Vec<f64>>> {
    let jobs: Vec<(usize, Minute)> = origins
        .iter()
        .flat_map(|&o| schedule.iter().map(move |&t| (o, t)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(o, t)| {
            Ok(accessibility_from_row(
                &cost_row(graph, o, t)?,
                opportunities,
                decay,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(values
        .chunks(schedule.len().max(1))
        .map(<[f64]>::to_vec)
        .collect())
}

/// Everything the reports are built from.
#[derive(Debug, Clone)]
pub struct RunResults {
    pub name: String,
    pub crs: String,
    /// Study zones, in the order of every per-zone vector below.
    pub zones: Vec<Zone>,
    pub instants: Vec<Minute>,
    pub series: Vec<Vec<f64>>,
    pub freeflow: Vec<f64>,
    pub global: GlobalProfile,
    pub global_metrics: GlobalMetrics,
    pub zone_metrics: Vec<ZoneMetrics>,
    pub zonal_summary: ZonalSummary,
    pub curve: Vec<CurveRow>,
    pub references: ReferenceProfileSet,
    pub repair: RepairReport,
    pub downtown: (f64, f64),
}

impl RunResults {
    /// This scenario's global relative profile as a one-entry reference set.
    pub fn global_reference(&self) -> ReferenceProfileSet {
        let mut r = ReferenceProfileSet::new();
        r.insert(self.name.clone(), self.global.relative.clone())
            .expect("single entry");
        r
    }
}

fn references(p: &PreparedScenario, relative_series: &[Vec<f64>]) -> Result<ReferenceProfileSet> {
    if let Some(path) = &p.config.references {
        return read_references(&p.config.resolve(path));
    }
    let mut distinct: Vec<Vec<u64>> = relative_series
        .iter()
        .map(|s| s.iter().map(|v| v.to_bits()).collect())
        .collect();
    distinct.sort_unstable();
    distinct.dedup();
    let k = p.config.clusters.clamp(1, distinct.len().max(1));
    let km = kmeans_longitudinal(
        relative_series,
        k,
        p.config.kmeans_seed,
        p.config.kmeans_max_iter,
    )?;
    let mut refs = ReferenceProfileSet::new();
    for (c, centroid) in km.centroids.into_iter().enumerate() {
        refs.insert(format!("cluster{}", c + 1), relative(&centroid))?;
    }
    Ok(refs)
}

pub fn run(p: &PreparedScenario) -> Result<RunResults> {
    let instants = p.schedule.instants();
    let opportunities = p.opportunities();
    let study = &p.area.study;

    log::info!(
        "routing {} origins x {} departures",
        study.len(),
        instants.len()
    );
    let series = accessibility_series(&p.graph, study, &opportunities, instants, &p.decay)?;
    let freeflow: Vec<f64> =
        accessibility_series(&p.freeflow_graph, study, &opportunities, &[0.0], &p.decay)?
            .into_iter()
            .map(|v| v[0])
            .collect();

    let weights: Vec<f64> = study
        .iter()
        .map(|&i| p.zones[i].population as f64)
        .collect();
    let slices: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
    let global = global_profile(&slices, &weights)?;
    let mut gm = global_metrics(
        &global.values,
        instants,
        p.config.morning_window,
        p.config.afternoon_window,
    );
    let ff_slices: Vec<&[f64]> = freeflow.iter().map(std::slice::from_ref).collect();
    gm.freeflow = Some(global_profile(&ff_slices, &weights)?.values[0]);

    let relative_series: Vec<Vec<f64>> = series.iter().map(|s| relative(s)).collect();
    let refs = references(p, &relative_series)?;
    let mut metrics = Vec::with_capacity(study.len());
    for (k, &i) in study.iter().enumerate() {
        let mut m = zone_metrics(
            &p.zones[i].id,
            &series[k],
            instants,
            p.config.morning_window,
            p.config.afternoon_window,
            freeflow[k],
        );
        m.cluster_label = Some(classify(&relative_series[k], &refs)?.0);
        metrics.push(m);
    }

    let zones: Vec<Zone> = study.iter().map(|&i| p.zones[i].clone()).collect();
    let rings: Vec<(f64, u64)> = zones
        .iter()
        .map(|z| (distance_to_downtown(z, p.area.downtown), z.population))
        .collect();
    let curve = cumulative_population_curve(&rings, p.config.ring_width_km)?;

    Ok(RunResults {
        name: p.config.name.clone(),
        crs: p.config.crs.clone(),
        zonal_summary: zonal_summary(&metrics),
        zones,
        instants: instants.to_vec(),
        series,
        freeflow,
        global,
        global_metrics: gm,
        zone_metrics: metrics,
        curve,
        references: refs,
        repair: p.repair.clone(),
        downtown: p.area.downtown,
    })
}
