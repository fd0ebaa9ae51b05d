//! 2×2 km analysis grid, population aggregation and the border buffer.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::routing::{td_multi_source, Attachment, SearchGraph};

/// Edge length of an analysis cell, meters.
pub const CELL_SIZE_M: i64 = 2000;
/// Edge length of a population raster cell, meters.
pub const RASTER_CELL_M: i64 = 1000;
/// Area of an analysis cell, km².
pub const CELL_AREA_KM2: f64 = 4.0;

/// Axis-aligned extent in projected meters; all edges on the 2 km lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extent {
    pub xmin: i64,
    pub ymin: i64,
    pub xmax: i64,
    pub ymax: i64,
}

impl Extent {
    pub fn new(xmin: i64, ymin: i64, xmax: i64, ymax: i64) -> Result<Self> {
        if [xmin, ymin, xmax, ymax]
            .iter()
            .any(|v| v.rem_euclid(CELL_SIZE_M) != 0)
        {
            return Err(Error::invalid(
                "extent",
                format!("edges must be multiples of {CELL_SIZE_M} m"),
            ));
        }
        if xmax <= xmin || ymax <= ymin {
            return Err(Error::invalid("extent", "empty"));
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    /// Smallest aligned extent covering every raster cell.
    pub fn covering(raster: &[RasterCell]) -> Result<Self> {
        let first = raster
            .first()
            .ok_or_else(|| Error::invalid("population raster", "no cells"))?;
        let (mut xmin, mut ymin) = (first.x, first.y);
        let (mut xmax, mut ymax) = (first.x, first.y);
        for c in raster {
            xmin = xmin.min(c.x);
            ymin = ymin.min(c.y);
            xmax = xmax.max(c.x + RASTER_CELL_M);
            ymax = ymax.max(c.y + RASTER_CELL_M);
        }
        let down = |v: i64| v.div_euclid(CELL_SIZE_M) * CELL_SIZE_M;
        let up = |v: i64| -(-v).div_euclid(CELL_SIZE_M) * CELL_SIZE_M;
        Self::new(down(xmin), down(ymin), up(xmax), up(ymax))
    }

    pub fn cols(&self) -> usize {
        ((self.xmax - self.xmin) / CELL_SIZE_M) as usize
    }

    pub fn rows(&self) -> usize {
        ((self.ymax - self.ymin) / CELL_SIZE_M) as usize
    }
}

/// One 1 km² population count, keyed by its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterCell {
    pub x: i64,
    pub y: i64,
    pub population: u64,
}

/// A 2×2 km analysis cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: String,
    pub row: usize,
    pub col: usize,
    /// Lower-left corner, meters.
    pub x0: i64,
    pub y0: i64,
    pub population: u64,
    pub in_study_area: bool,
}

impl Zone {
    pub fn centroid(&self) -> (f64, f64) {
        let half = CELL_SIZE_M as f64 / 2.0;
        (self.x0 as f64 + half, self.y0 as f64 + half)
    }

    /// Cell corners, counter-clockwise from the lower-left, closed.
    pub fn ring(&self) -> [(i64, i64); 5] {
        let (x, y, s) = (self.x0, self.y0, CELL_SIZE_M);
        [(x, y), (x + s, y), (x + s, y + s), (x, y + s), (x, y)]
    }
}

pub fn cell_id(x0: i64, y0: i64) -> String {
    format!("2kmN{}E{}", y0 / 1000, x0 / 1000)
}

/// Aggregates 1 km² counts into 2×2 km zones covering `extent`, row-major
/// from the south-west corner. Zero-population zones are kept.
pub fn build_grid(extent: Extent, raster: &[RasterCell]) -> Result<Vec<Zone>> {
    let (rows, cols) = (extent.rows(), extent.cols());
    let mut pops = vec![0u64; rows * cols];
    let mut seen = HashSet::with_capacity(raster.len());
    for c in raster {
        if c.x.rem_euclid(RASTER_CELL_M) != 0 || c.y.rem_euclid(RASTER_CELL_M) != 0 {
            return Err(Error::invalid(
                "population raster",
                format!("cell ({}, {}) is not aligned to the 1 km grid", c.x, c.y),
            ));
        }
        if c.x < extent.xmin || c.x >= extent.xmax || c.y < extent.ymin || c.y >= extent.ymax {
            return Err(Error::invalid(
                "population raster",
                format!("cell ({}, {}) lies outside the extent", c.x, c.y),
            ));
        }
        if !seen.insert((c.x, c.y)) {
            return Err(Error::invalid(
                "population raster",
                format!("duplicate cell ({}, {})", c.x, c.y),
            ));
        }
        let col = ((c.x - extent.xmin) / CELL_SIZE_M) as usize;
        let row = ((c.y - extent.ymin) / CELL_SIZE_M) as usize;
        pops[row * cols + col] += c.population;
    }
    let mut zones = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let x0 = extent.xmin + col as i64 * CELL_SIZE_M;
            let y0 = extent.ymin + row as i64 * CELL_SIZE_M;
            zones.push(Zone {
                id: cell_id(x0, y0),
                row,
                col,
                x0,
                y0,
                population: pops[row * cols + col],
                in_study_area: false,
            });
        }
    }
    Ok(zones)
}

/// Flags the zones whose lower-left corners are listed in `cells`.
pub fn mark_study_cells(zones: &mut [Zone], cells: &[(i64, i64)]) -> Result<()> {
    let index: BTreeMap<(i64, i64), usize> = zones
        .iter()
        .enumerate()
        .map(|(i, z)| ((z.x0, z.y0), i))
        .collect();
    for &(x, y) in cells {
        let i = index.get(&(x, y)).ok_or_else(|| {
            Error::invalid(
                "study cells",
                format!("({x}, {y}) is not a cell of the grid"),
            )
        })?;
        zones[*i].in_study_area = true;
    }
    Ok(())
}

/// Attaches each zone centroid to its nearest network node through
/// connectors traversed at `connector_kmh`.
pub fn attach_zones(
    zones: &[Zone],
    network: &Network,
    connector_kmh: f64,
) -> Vec<Option<Attachment>> {
    zones
        .iter()
        .map(|z| {
            let (x, y) = z.centroid();
            network.nearest_node(x, y).map(|node| {
                let n = &network.nodes()[node];
                let d_km = ((n.x - x).powi(2) + (n.y - y).powi(2)).sqrt() / 1000.0;
                Attachment {
                    node,
                    connector_minutes: d_km / connector_kmh * 60.0,
                }
            })
        })
        .collect()
}

/// Study zones, buffer zones and the downtown reference point. Indices refer
/// to the zone list the area was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyArea {
    pub study: Vec<usize>,
    pub buffer: Vec<usize>,
    pub downtown: (f64, f64),
}

/// Zones outside the study area whose centroid is reachable from some study
/// centroid within `threshold_min` minutes leaving at midnight.
///
/// `graph` must have one attachment per entry of `zones`.
pub fn compute_border_buffer(
    zones: &[Zone],
    graph: &SearchGraph,
    threshold_min: f64,
) -> Result<Vec<usize>> {
    let study: Vec<usize> = (0..zones.len())
        .filter(|&i| zones[i].in_study_area && graph.attachment(i).is_some())
        .collect();
    if study.is_empty() {
        return Ok(Vec::new());
    }
    let arrivals = td_multi_source(graph, &study, 0.0)?;
    Ok((0..zones.len())
        .filter(|&j| !zones[j].in_study_area)
        .filter(|&j| arrivals[j].is_some_and(|a| a <= threshold_min))
        .collect())
}

/// Euclidean distance from the zone centroid to `downtown`, km.
pub fn distance_to_downtown(zone: &Zone, downtown: (f64, f64)) -> f64 {
    let (x, y) = zone.centroid();
    ((x - downtown.0).powi(2) + (y - downtown.1).powi(2)).sqrt() / 1000.0
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::network::{LinkSpec, NetworkBuilder};

    fn raster(cells: &[(i64, i64, u64)]) -> Vec<RasterCell> {
        cells
            .iter()
            .map(|&(x, y, population)| RasterCell { x, y, population })
            .collect()
    }

    #[test]
    fn four_cells_sum_into_one_zone() {
        let ext = Extent::new(0, 0, 2000, 2000).unwrap();
        let r = raster(&[(0, 0, 10), (1000, 0, 20), (0, 1000, 30), (1000, 1000, 40)]);
        let zones = build_grid(ext, &r).unwrap();
        assert_eq!(zones.len(), 1);
        assert_eq!(zones[0].population, 100);
        assert_eq!(zones[0].centroid(), (1000.0, 1000.0));
    }

    #[test]
    fn empty_region_and_zone_count() {
        let ext = Extent::new(0, 0, 4000, 4000).unwrap();
        let zones = build_grid(ext, &raster(&[(3000, 3000, 7)])).unwrap();
        assert_eq!(zones.len(), 4);
        assert_eq!(zones[0].population, 0);
        assert_eq!(zones[3].population, 7);
        assert_eq!(zones.iter().map(|z| z.population).sum::<u64>(), 7);
    }

    #[test]
    fn misaligned_inputs_error() {
        assert!(Extent::new(0, 0, 3000, 4000).is_err());
        let ext = Extent::new(0, 0, 4000, 4000).unwrap();
        assert!(build_grid(ext, &raster(&[(500, 0, 1)])).is_err());
        assert!(build_grid(ext, &raster(&[(4000, 0, 1)])).is_err());
        assert!(build_grid(ext, &raster(&[(0, 0, 1), (0, 0, 2)])).is_err());
    }

    #[test]
    fn covering_extent_snaps_outwards() {
        let r = raster(&[(-1000, 3000, 1), (5000, 7000, 1)]);
        let ext = Extent::covering(&r).unwrap();
        assert_eq!(ext, Extent::new(-2000, 2000, 6000, 8000).unwrap());
    }

    #[test]
    fn downtown_distance() {
        let z = Zone {
            id: cell_id(2000, 2000),
            row: 0,
            col: 0,
            x0: 2000,
            y0: 2000,
            population: 0,
            in_study_area: true,
        };
        assert_eq!(distance_to_downtown(&z, (3000.0, 3000.0)), 0.0);
        assert!((distance_to_downtown(&z, (0.0, -1000.0)) - 5.0).abs() < 1e-12);
        // (3000 - 1234.5, 3000 - 987.0) -> hypot(1.7655, 2.013) km
        let expected = (1.7655f64 * 1.7655 + 2.013 * 2.013).sqrt();
        assert!((distance_to_downtown(&z, (1234.5, 987.0)) - expected).abs() < 1e-12);
    }

    /// A straight motorway along y = 1000 with nodes every 2 km.
    fn motorway(kmh: f64) -> Arc<Network> {
        let mut b = NetworkBuilder::new();
        for k in 0..=10 {
            b.add_node(format!("n{k}"), 1000.0 + 2000.0 * k as f64, 1000.0)
                .unwrap();
        }
        for k in 0..10 {
            b.add_link(LinkSpec {
                id: format!("m{k}"),
                from: format!("n{k}"),
                to: format!("n{}", k + 1),
                length_m: 2000.0,
                freeflow_kmh: kmh,
                frc: 0,
                oneway: false,
                profile_id: None,
                allow_loop: false,
            })
            .unwrap();
        }
        Arc::new(b.build().0)
    }

    #[test]
    fn buffer_threshold_is_inclusive_and_disjoint() {
        let ext = Extent::new(0, 0, 22_000, 2000).unwrap();
        let mut zones = build_grid(ext, &[]).unwrap();
        mark_study_cells(&mut zones, &[(0, 0)]).unwrap();
        let net = motorway(90.0);
        let att = attach_zones(&zones, &net, 20.0);
        // Centroids sit on nodes: connectors are zero-length.
        assert!(att.iter().all(|a| a.unwrap().connector_minutes == 0.0));
        let g = SearchGraph::build(net, att);
        // 10 km at 90 km/h = 6.67 min -> zone 5 is in; 15 min reaches 22.5 km.
        let buffer = compute_border_buffer(&zones, &g, 15.0).unwrap();
        assert!(buffer.contains(&5));
        assert!(!buffer.contains(&0));
        assert_eq!(buffer, (1..=10).collect::<Vec<_>>());
        // zone 10 is exactly 20 km = 13.33 min away; cut just below it.
        let b13 = compute_border_buffer(&zones, &g, 20.0 / 90.0 * 60.0 - 0.01).unwrap();
        assert_eq!(b13, (1..=9).collect::<Vec<_>>());
        let b_big = compute_border_buffer(&zones, &g, 20.0).unwrap();
        assert!(b13.iter().all(|z| b_big.contains(z)));
    }

    #[test]
    fn strict_threshold_excludes_just_over() {
        // A zone exactly 15.01 minutes away is excluded.
        let ext = Extent::new(0, 0, 4000, 2000).unwrap();
        let mut zones = build_grid(ext, &[]).unwrap();
        mark_study_cells(&mut zones, &[(0, 0)]).unwrap();
        let kmh = 2.0 / 15.01 * 60.0;
        let net = motorway(kmh);
        let g = SearchGraph::build(net.clone(), attach_zones(&zones, &net, 20.0));
        assert!(compute_border_buffer(&zones, &g, 15.0).unwrap().is_empty());
        assert_eq!(compute_border_buffer(&zones, &g, 15.02).unwrap(), vec![1]);
    }
}
