use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::accessibility::DecayParams;
use crate::error::{Error, Result};
use crate::time::{format_hhmm, parse_hhmm, DepartureSchedule, Minute, TimeWindow};
use crate::zoning::Extent;

/// Scenario parameters. Paths are stored as written; use
/// [`ScenarioConfig::resolve`] to anchor them to the config directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub base_dir: PathBuf,
    pub nodes: PathBuf,
    pub links: PathBuf,
    pub profiles: PathBuf,
    pub restrictions: Option<PathBuf>,
    pub population: PathBuf,
    pub study_cells: PathBuf,
    pub extent: Option<Extent>,
    pub downtown: Option<(f64, f64)>,
    pub beta: f64,
    pub departure_start: Minute,
    pub departure_step: Minute,
    pub departure_count: usize,
    pub connector_kmh: f64,
    pub morning_window: TimeWindow,
    pub afternoon_window: TimeWindow,
    pub buffer_threshold_min: f64,
    /// Whether buffer zones count as destinations.
    pub buffer_destinations: bool,
    pub ring_width_km: f64,
    pub crs: String,
    pub references: Option<PathBuf>,
    pub clusters: usize,
    pub kmeans_seed: u64,
    pub kmeans_max_iter: usize,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            base_dir: PathBuf::from("."),
            nodes: "nodes.csv".into(),
            links: "links.csv".into(),
            profiles: "profiles.csv".into(),
            restrictions: None,
            population: "population.csv".into(),
            study_cells: "study_cells.csv".into(),
            extent: None,
            downtown: None,
            beta: 0.065,
            departure_start: 0.0,
            departure_step: 15.0,
            departure_count: 96,
            connector_kmh: 20.0,
            morning_window: TimeWindow::morning(),
            afternoon_window: TimeWindow::afternoon(),
            buffer_threshold_min: 15.0,
            buffer_destinations: true,
            ring_width_km: 2.0,
            crs: "EPSG:3035".into(),
            references: None,
            clusters: 4,
            kmeans_seed: 1,
            kmeans_max_iter: 100,
            output_dir: "out".into(),
        }
    }
}

/// Keys accepted in config files, in the order they are written.
pub const CONFIG_KEYS: [&str; 26] = [
    "name",
    "nodes",
    "links",
    "profiles",
    "restrictions",
    "population",
    "study_cells",
    "extent",
    "downtown",
    "beta",
    "departure_start",
    "departure_step",
    "departure_count",
    "connector_kmh",
    "morning_window",
    "afternoon_window",
    "buffer_threshold_min",
    "buffer_destinations",
    "ring_width_km",
    "crs",
    "references",
    "clusters",
    "kmeans_seed",
    "kmeans_max_iter",
    "output_dir",
    "base_dir",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::invalid(format!("config {key}"), format!("cannot parse {v:?}")))
}

fn pair(key: &str, v: &str) -> Result<(f64, f64)> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| Error::invalid(format!("config {key}"), "expected x,y"))?;
    Ok((num(key, a.trim())?, num(key, b.trim())?))
}

fn optional_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl ScenarioConfig {
    /// Sets one key; used for both file parsing and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "name" => self.name = v.to_owned(),
            "base_dir" => self.base_dir = v.into(),
            "nodes" => self.nodes = v.into(),
            "links" => self.links = v.into(),
            "profiles" => self.profiles = v.into(),
            "restrictions" => self.restrictions = optional_path(v),
            "population" => self.population = v.into(),
            "study_cells" => self.study_cells = v.into(),
            "extent" => {
                self.extent = if v.is_empty() {
                    None
                } else {
                    let parts: Vec<i64> = v
                        .split(',')
                        .map(|p| num(key, p.trim()))
                        .collect::<Result<_>>()?;
                    let [a, b, c, d] = parts[..] else {
                        return Err(Error::invalid(
                            "config extent",
                            "expected xmin,ymin,xmax,ymax",
                        ));
                    };
                    Some(Extent::new(a, b, c, d)?)
                }
            }
            "downtown" => {
                self.downtown = if v.is_empty() {
                    None
                } else {
                    Some(pair(key, v)?)
                }
            }
            "beta" => self.beta = DecayParams::new(num(key, v)?)?.beta,
            "departure_start" => self.departure_start = parse_hhmm(v)?,
            "departure_step" => {
                let s: f64 = num(key, v)?;
                if !(s > 0.0) {
                    return Err(Error::invalid("config departure_step", "must be > 0"));
                }
                self.departure_step = s;
            }
            "departure_count" => {
                let c: usize = num(key, v)?;
                if c == 0 {
                    return Err(Error::invalid("config departure_count", "must be >= 1"));
                }
                self.departure_count = c;
            }
            "connector_kmh" => {
                let s: f64 = num(key, v)?;
                if !(s > 0.0) {
                    return Err(Error::invalid("config connector_kmh", "must be > 0"));
                }
                self.connector_kmh = s;
            }
            "morning_window" => self.morning_window = TimeWindow::parse(v)?,
            "afternoon_window" => self.afternoon_window = TimeWindow::parse(v)?,
            "buffer_threshold_min" => self.buffer_threshold_min = num(key, v)?,
            "buffer_destinations" => {
                self.buffer_destinations = match v {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => {
                        return Err(Error::invalid(
                            "config buffer_destinations",
                            "expected true/false",
                        ))
                    }
                }
            }
            "ring_width_km" => self.ring_width_km = num(key, v)?,
            "crs" => self.crs = v.to_owned(),
            "references" => self.references = optional_path(v),
            "clusters" => self.clusters = num(key, v)?,
            "kmeans_seed" => self.kmeans_seed = num(key, v)?,
            "kmeans_max_iter" => self.kmeans_max_iter = num(key, v)?,
            "output_dir" => self.output_dir = v.into(),
            other => return Err(Error::invalid("config", format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self {
            base_dir: base_dir.to_owned(),
            ..Self::default()
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::invalid("config", format!("line {}: expected key = value", n + 1))
            })?;
            cfg.set(k.trim(), v)
                .map_err(|e| Error::invalid("config", format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Anchors a configured path to the config directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn schedule(&self) -> Result<DepartureSchedule> {
        DepartureSchedule::regular(
            self.departure_start,
            self.departure_step,
            self.departure_count,
        )
    }

    pub fn decay(&self) -> Result<DecayParams> {
        DecayParams::new(self.beta)
    }

    /// Serializes back to `key = value` form (without `base_dir`).
    pub fn to_text(&self) -> String {
        let p = |p: &Path| p.display().to_string();
        let o = |p: &Option<PathBuf>| {
            p.as_deref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("nodes", p(&self.nodes));
        kv("links", p(&self.links));
        kv("profiles", p(&self.profiles));
        kv("restrictions", o(&self.restrictions));
        kv("population", p(&self.population));
        kv("study_cells", p(&self.study_cells));
        kv(
            "extent",
            self.extent
                .map(|e| format!("{},{},{},{}", e.xmin, e.ymin, e.xmax, e.ymax))
                .unwrap_or_default(),
        );
        kv(
            "downtown",
            self.downtown
                .map(|(x, y)| format!("{x},{y}"))
                .unwrap_or_default(),
        );
        kv("beta", self.beta.to_string());
        kv("departure_start", format_hhmm(self.departure_start));
        kv("departure_step", self.departure_step.to_string());
        kv("departure_count", self.departure_count.to_string());
        kv("connector_kmh", self.connector_kmh.to_string());
        kv("morning_window", self.morning_window.to_string());
        kv("afternoon_window", self.afternoon_window.to_string());
        kv(
            "buffer_threshold_min",
            self.buffer_threshold_min.to_string(),
        );
        kv("buffer_destinations", self.buffer_destinations.to_string());
        kv("ring_width_km", self.ring_width_km.to_string());
        kv("crs", self.crs.clone());
        kv("references", o(&self.references));
        kv("clusters", self.clusters.to_string());
        kv("kmeans_seed", self.kmeans_seed.to_string());
        kv("kmeans_max_iter", self.kmeans_max_iter.to_string());
        kv("output_dir", p(&self.output_dir));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# demo\nname = demo\nbeta = 0.1\ndownton = 1,2\n";
        assert!(ScenarioConfig::parse(text, Path::new(".")).is_err());
        let text = "name = demo\nbeta = 0.1 # faster decay\ndowntown = 1000, 2000\nextent = 0,0,4000,4000\nbuffer_destinations = false\n";
        let c = ScenarioConfig::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(c.name, "demo");
        assert_eq!(c.beta, 0.1);
        assert_eq!(c.downtown, Some((1000.0, 2000.0)));
        assert!(!c.buffer_destinations);
        assert_eq!(c.resolve(Path::new("a.csv")), PathBuf::from("/tmp/a.csv"));
        let again = ScenarioConfig::parse(&c.to_text(), Path::new("/tmp")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn invalid_values() {
        let mut c = ScenarioConfig::default();
        assert!(c.set("beta", "0").is_err());
        assert!(c.set("departure_count", "0").is_err());
        assert!(c.set("departure_step", "-5").is_err());
        assert!(c.set("extent", "0,0,3000,4000").is_err());
        assert!(c.set("morning_window", "12:00-05:00").is_err());
        assert_eq!(c.schedule().unwrap().len(), 96);
    }

    #[test]
    fn every_key_is_settable() {
        let c = ScenarioConfig::default();
        for line in c.to_text().lines() {
            let (k, v) = line.split_once('=').unwrap();
            ScenarioConfig::default().set(k.trim(), v).unwrap();
        }
        assert_eq!(c.to_text().lines().count() + 1, CONFIG_KEYS.len());
    }
}
