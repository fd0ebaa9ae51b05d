//! Deterministic ring-radial test cities with congestion waves.
//!
//! Inbound radial links slow down in the morning, more so far from the
//! centre; outbound radial links slow down in the afternoon, more so near the
//! centre; ring links get an attenuated mix of both. The opposite direction of
//! each radial receives a fraction of the other wave. Population decays
//! exponentially from downtown.

use std::f64::consts::{LN_2, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::ScenarioData;
use crate::network::{breakpoint_minute, LinkSpec, Node, SpeedProfile, PROFILE_LEN};
use crate::time::Minute;
use crate::zoning::{Extent, RasterCell, CELL_SIZE_M, RASTER_CELL_M};

/// Gaussian speed dip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    /// Maximum loss of speed, fraction in [0, 1).
    pub depth: f64,
    pub center: Minute,
    /// Minutes from the centre at which half the depth remains.
    pub half_width: Minute,
}

impl Dip {
    fn shape(&self, t: Minute) -> f64 {
        let z = (t - self.center) / self.half_width;
        (-LN_2 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub rings: usize,
    pub radials: usize,
    pub ring_spacing_km: f64,
    /// Study cells are those whose centroid lies within this radius.
    /// Defaults to two kilometres inside the outer ring.
    pub study_radius_km: Option<f64>,
    /// Persons per density unit; a cell at downtown holds about 100 units
    /// per km², so doubling this doubles every cell exactly.
    pub core_population: u64,
    pub density_decay_per_km: f64,
    pub morning: Dip,
    pub afternoon: Dip,
    /// Share of a radial's wave withheld from the opposite direction, [0, 1].
    pub direction_asymmetry: f64,
    /// Share of the radial waves applied to ring links, [0, 1].
    pub ring_attenuation: f64,
    pub radial_kmh: f64,
    pub ring_kmh: f64,
    pub ban_u_turns: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rings: 15,
            radials: 32,
            ring_spacing_km: 2.0,
            study_radius_km: None,
            core_population: 40,
            density_decay_per_km: 0.1,
            morning: Dip {
                depth: 0.55,
                center: 495.0,
                half_width: 70.0,
            },
            afternoon: Dip {
                depth: 0.5,
                center: 1050.0,
                half_width: 100.0,
            },
            direction_asymmetry: 0.7,
            ring_attenuation: 0.6,
            radial_kmh: 70.0,
            ring_kmh: 50.0,
            ban_u_turns: true,
            seed: 42,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::invalid("synthetic city", reason));
        if self.rings == 0 || self.radials < 3 {
            return bad("need at least 1 ring and 3 radials");
        }
        if !(self.ring_spacing_km > 0.0) {
            return bad("ring spacing must be > 0");
        }
        for d in [self.morning, self.afternoon] {
            if !(0.0..1.0).contains(&d.depth) {
                return bad("dip depth must be in [0, 1)");
            }
            if !(d.half_width > 0.0) {
                return bad("dip half-width must be > 0");
            }
        }
        if !(0.0..=1.0).contains(&self.direction_asymmetry)
            || !(0.0..=1.0).contains(&self.ring_attenuation)
        {
            return bad("asymmetry and attenuation must be in [0, 1]");
        }
        if !(self.radial_kmh > 0.0 && self.ring_kmh > 0.0) {
            return bad("speeds must be > 0");
        }
        Ok(())
    }

    pub fn outer_radius_km(&self) -> f64 {
        self.rings as f64 * self.ring_spacing_km
    }

    pub fn study_radius(&self) -> f64 {
        self.study_radius_km
            .unwrap_or((self.outer_radius_km() - 2.0).max(self.ring_spacing_km))
    }
}

/// Downtown sits at the centre of a 2 km cell.
pub const DOWNTOWN: (f64, f64) = (3_601_000.0, 3_201_000.0);

#[derive(Clone, Copy)]
enum Wave {
    Inbound,
    Outbound,
    Ring,
}

fn profile_values(spec: &SynthSpec, wave: Wave, u: f64) -> Vec<f64> {
    let keep = 1.0 - spec.direction_asymmetry;
    // Morning depth grows with radius, afternoon depth shrinks.
    let dm = spec.morning.depth * u;
    let da = spec.afternoon.depth * (1.0 - u);
    let (wm, wa) = match wave {
        Wave::Inbound => (dm, da * keep),
        Wave::Outbound => (dm * keep, da),
        Wave::Ring => (dm * spec.ring_attenuation, da * spec.ring_attenuation),
    };
    (0..PROFILE_LEN)
        .map(|k| {
            let t = breakpoint_minute(k);
            let loss = wm * spec.morning.shape(t) + wa * spec.afternoon.shape(t);
            (1.0 - loss).clamp(1e-3, 1.0)
        })
        .collect()
}

/// Builds a complete scenario in the ingest data model.
pub fn generate(spec: &SynthSpec) -> Result<ScenarioData> {
    spec.validate()?;
    let outer = spec.outer_radius_km();
    let (cx, cy) = DOWNTOWN;

    let node_id = |r: usize, k: usize| {
        if r == 0 {
            "c".to_owned()
        } else {
            format!("r{r}_{k}")
        }
    };
    let mut nodes = vec![Node {
        id: node_id(0, 0),
        x: cx,
        y: cy,
    }];
    for r in 1..=spec.rings {
        let rho = r as f64 * spec.ring_spacing_km * 1000.0;
        for k in 0..spec.radials {
            let theta = TAU * (k as f64 + 0.5) / spec.radials as f64;
            nodes.push(Node {
                id: node_id(r, k),
                x: cx + rho * theta.cos(),
                y: cy + rho * theta.sin(),
            });
        }
    }
    let pos = |r: usize, k: usize| {
        if r == 0 {
            0
        } else {
            1 + (r - 1) * spec.radials + k
        }
    };
    let dist = |a: usize, b: usize| {
        let (p, q) = (&nodes[a], &nodes[b]);
        ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
    };

    let mut profiles = Vec::with_capacity(3 * spec.rings);
    for r in 1..=spec.rings {
        let u = r as f64 * spec.ring_spacing_km / outer;
        for (name, wave) in [
            ("in", Wave::Inbound),
            ("out", Wave::Outbound),
            ("ring", Wave::Ring),
        ] {
            profiles.push(SpeedProfile::new(
                format!("{name}_{r}"),
                profile_values(spec, wave, u),
            )?);
        }
    }

    let mut links = Vec::new();
    let mut restrictions = Vec::new();
    let link = |id: String, from: usize, to: usize, kmh: f64, frc: u8, profile: String| LinkSpec {
        id,
        from: node_id_of(&nodes, from),
        to: node_id_of(&nodes, to),
        length_m: dist(from, to),
        freeflow_kmh: kmh,
        frc,
        oneway: true,
        profile_id: Some(profile),
        allow_loop: false,
    };
    for r in 1..=spec.rings {
        for k in 0..spec.radials {
            let (outer_node, inner_node) = (pos(r, k), pos(r - 1, k));
            links.push(link(
                format!("in_{r}_{k}"),
                outer_node,
                inner_node,
                spec.radial_kmh,
                2,
                format!("in_{r}"),
            ));
            links.push(link(
                format!("out_{r}_{k}"),
                inner_node,
                outer_node,
                spec.radial_kmh,
                2,
                format!("out_{r}"),
            ));
            let next = pos(r, (k + 1) % spec.radials);
            links.push(link(
                format!("cw_{r}_{k}"),
                outer_node,
                next,
                spec.ring_kmh,
                3,
                format!("ring_{r}"),
            ));
            links.push(link(
                format!("ccw_{r}_{k}"),
                next,
                outer_node,
                spec.ring_kmh,
                3,
                format!("ring_{r}"),
            ));
            if spec.ban_u_turns {
                let via = |p: usize| node_id_of(&nodes, p);
                restrictions.push((
                    via(inner_node),
                    format!("in_{r}_{k}"),
                    format!("out_{r}_{k}"),
                ));
                restrictions.push((
                    via(outer_node),
                    format!("out_{r}_{k}"),
                    format!("in_{r}_{k}"),
                ));
                restrictions.push((via(next), format!("cw_{r}_{k}"), format!("ccw_{r}_{k}")));
                restrictions.push((
                    via(outer_node),
                    format!("ccw_{r}_{k}"),
                    format!("cw_{r}_{k}"),
                ));
            }
        }
    }

    // Population raster over a square reaching a few km past the outer ring.
    let half_cells = ((outer + 4.0) / 2.0).ceil() as i64;
    let cell_x0 = (cx as i64 - CELL_SIZE_M / 2) - half_cells * CELL_SIZE_M;
    let cell_y0 = (cy as i64 - CELL_SIZE_M / 2) - half_cells * CELL_SIZE_M;
    let side = (2 * half_cells + 1) * CELL_SIZE_M;
    let extent = Extent::new(cell_x0, cell_y0, cell_x0 + side, cell_y0 + side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut population = Vec::new();
    let n1 = side / RASTER_CELL_M;
    for j in 0..n1 {
        for i in 0..n1 {
            let x = cell_x0 + i * RASTER_CELL_M;
            let y = cell_y0 + j * RASTER_CELL_M;
            let h = RASTER_CELL_M as f64 / 2.0;
            let d_km = ((x as f64 + h - cx).powi(2) + (y as f64 + h - cy).powi(2)).sqrt() / 1000.0;
            let jitter: f64 = rng.gen_range(0.9..1.1);
            let units = (100.0 * (-spec.density_decay_per_km * d_km).exp() * jitter).round() as u64;
            population.push(RasterCell {
                x,
                y,
                population: spec.core_population * units,
            });
        }
    }

    let study_r = spec.study_radius() * 1000.0;
    let mut study_cells = Vec::new();
    for j in 0..(2 * half_cells + 1) {
        for i in 0..(2 * half_cells + 1) {
            let x = cell_x0 + i * CELL_SIZE_M;
            let y = cell_y0 + j * CELL_SIZE_M;
            let h = CELL_SIZE_M as f64 / 2.0;
            if ((x as f64 + h - cx).powi(2) + (y as f64 + h - cy).powi(2)).sqrt() <= study_r {
                study_cells.push((x, y));
            }
        }
    }

    Ok(ScenarioData {
        nodes,
        links,
        profiles,
        restrictions,
        population,
        study_cells,
        downtown: DOWNTOWN,
        extent: Some(extent),
    })
}

fn node_id_of(nodes: &[Node], idx: usize) -> String {
    nodes[idx].id.clone()
}
