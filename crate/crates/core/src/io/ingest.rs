use std::fs::File;
use std::path::{Path, PathBuf};

use crate::clustering::ReferenceProfileSet;
use crate::error::{Error, Result};
use crate::network::{
    breakpoint_minute, LinkSpec, Network, Node, RepairReport, SpeedProfile, PROFILE_LEN,
};
use crate::time::format_compact;
use crate::zoning::{build_grid, mark_study_cells, Extent, RasterCell, Zone};

use super::{row_of, ScenarioConfig, ScenarioData, SourceFiles};

/// A validated scenario ready for the pipeline.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub data: ScenarioData,
    pub network: Network,
    pub repair: RepairReport,
    /// Full analysis grid with study flags set.
    pub zones: Vec<Zone>,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[String]) -> Result<()> {
    let got = rdr.headers().map_err(|source| Error::Csv {
        path: path.to_owned(),
        source,
    })?;
    let got: Vec<&str> = got.iter().collect();
    if got != expected {
        return Err(Error::ingest(
            path,
            1,
            format!(
                "header {:?}, expected {:?}",
                got.join(","),
                expected.join(",")
            ),
        ));
    }
    Ok(())
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| (*s).to_owned()).collect()
}

/// Reads every record as owned strings, checking the field count.
fn records(
    path: &Path,
    expected_header: &[String],
    fields: Option<usize>,
) -> Result<Vec<Vec<String>>> {
    let mut rdr = open(path)?;
    check_header(path, &mut rdr, expected_header)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })?;
        let row: Vec<String> = rec.iter().map(str::to_owned).collect();
        if let Some(n) = fields {
            if row.len() != n {
                return Err(Error::ingest(
                    path,
                    row_of(i),
                    format!("expected {n} fields, found {}", row.len()),
                ));
            }
        }
        out.push(row);
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, i: usize, name: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::ingest(path, row_of(i), format!("bad {name} {v:?}")))
}

fn profile_header() -> Vec<String> {
    std::iter::once("id".to_owned())
        .chain((0..PROFILE_LEN).map(|k| format!("p{}", format_compact(breakpoint_minute(k)))))
        .collect()
}

/// Header of reference profile files for a 96-instant day.
pub fn reference_header(len: usize, instants: &[f64]) -> Vec<String> {
    std::iter::once("label".to_owned())
        .chain(
            instants
                .iter()
                .take(len)
                .map(|&t| format!("t{}", format_compact(t))),
        )
        .collect()
}

fn read_nodes(path: &Path) -> Result<Vec<Node>> {
    records(path, &strs(&["id", "x", "y"]), Some(3))?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(Node {
                id: r[0].clone(),
                x: field(path, i, "x", &r[1])?,
                y: field(path, i, "y", &r[2])?,
            })
        })
        .collect()
}

fn parse_bool(path: &Path, i: usize, v: &str) -> Result<bool> {
    match v {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(Error::ingest(path, row_of(i), format!("bad oneway {v:?}"))),
    }
}

const LINK_HEADER: [&str; 8] = [
    "id",
    "from",
    "to",
    "length_m",
    "freeflow_kmh",
    "frc",
    "oneway",
    "profile_id",
];

fn read_links(path: &Path) -> Result<Vec<LinkSpec>> {
    records(path, &strs(&LINK_HEADER), Some(8))?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(LinkSpec {
                id: r[0].clone(),
                from: r[1].clone(),
                to: r[2].clone(),
                length_m: field(path, i, "length_m", &r[3])?,
                freeflow_kmh: field(path, i, "freeflow_kmh", &r[4])?,
                frc: field(path, i, "frc", &r[5])?,
                oneway: parse_bool(path, i, &r[6])?,
                profile_id: (!r[7].is_empty()).then(|| r[7].clone()),
                allow_loop: false,
            })
        })
        .collect()
}

fn read_profiles(path: &Path) -> Result<Vec<SpeedProfile>> {
    records(path, &profile_header(), None)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let values: Vec<f64> = r[1..]
                .iter()
                .map(|v| field(path, i, "fraction", v))
                .collect::<Result<_>>()?;
            SpeedProfile::new(r[0].clone(), values)
                .map_err(|e| Error::ingest(path, row_of(i), e.to_string()))
        })
        .collect()
}

fn read_restrictions(path: &Path) -> Result<Vec<(String, String, String)>> {
    Ok(
        records(path, &strs(&["via", "from_link", "to_link"]), Some(3))?
            .into_iter()
            .map(|r| (r[0].clone(), r[1].clone(), r[2].clone()))
            .collect(),
    )
}

fn read_population(path: &Path) -> Result<Vec<RasterCell>> {
    records(path, &strs(&["cell_x", "cell_y", "pop"]), Some(3))?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(RasterCell {
                x: field(path, i, "cell_x", &r[0])?,
                y: field(path, i, "cell_y", &r[1])?,
                population: field(path, i, "pop", &r[2])?,
            })
        })
        .collect()
}

fn read_study_cells(path: &Path) -> Result<Vec<(i64, i64)>> {
    records(path, &strs(&["cell_x", "cell_y"]), Some(2))?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok((
                field(path, i, "cell_x", &r[0])?,
                field(path, i, "cell_y", &r[1])?,
            ))
        })
        .collect()
}

fn source_files(cfg: &ScenarioConfig) -> SourceFiles {
    SourceFiles {
        nodes: cfg.resolve(&cfg.nodes),
        links: cfg.resolve(&cfg.links),
        profiles: cfg.resolve(&cfg.profiles),
        restrictions: cfg
            .restrictions
            .as_ref()
            .map(|p| cfg.resolve(p))
            .unwrap_or_else(|| PathBuf::from("restrictions")),
    }
}

/// Reads every table named by `cfg` without building the network.
pub fn read_scenario_data(cfg: &ScenarioConfig) -> Result<ScenarioData> {
    let files = source_files(cfg);
    let downtown = cfg
        .downtown
        .ok_or_else(|| Error::invalid("config", "downtown is not set"))?;
    Ok(ScenarioData {
        nodes: read_nodes(&files.nodes)?,
        links: read_links(&files.links)?,
        profiles: read_profiles(&files.profiles)?,
        restrictions: match &cfg.restrictions {
            Some(_) => read_restrictions(&files.restrictions)?,
            None => Vec::new(),
        },
        population: read_population(&cfg.resolve(&cfg.population))?,
        study_cells: read_study_cells(&cfg.resolve(&cfg.study_cells))?,
        downtown,
        extent: cfg.extent,
    })
}

/// Loads, validates and FIFO-repairs the scenario described by a config file.
pub fn load_scenario(config_path: &Path) -> Result<LoadedScenario> {
    let config = ScenarioConfig::from_file(config_path)?;
    load_with_config(config)
}

pub(crate) fn load_with_config(config: ScenarioConfig) -> Result<LoadedScenario> {
    let data = read_scenario_data(&config)?;
    LoadedScenario::from_data(config, data)
}

impl LoadedScenario {
    /// Validates in-memory tables as if they had been read from `config`'s
    /// files; errors name those files.
    pub fn from_data(config: ScenarioConfig, data: ScenarioData) -> Result<Self> {
        let (network, repair) = data.build_network(&source_files(&config))?;
        let pop_path = config.resolve(&config.population);
        let extent = match data.extent {
            Some(e) => e,
            None => Extent::covering(&data.population)
                .map_err(|e| Error::ingest(&pop_path, 1, e.to_string()))?,
        };
        let mut zones = build_grid(extent, &data.population)
            .map_err(|e| Error::ingest(&pop_path, 1, e.to_string()))?;
        mark_study_cells(&mut zones, &data.study_cells)
            .map_err(|e| Error::ingest(config.resolve(&config.study_cells), 1, e.to_string()))?;
        if !zones.iter().any(|z| z.in_study_area) {
            return Err(Error::invalid("study area", "no study cells"));
        }
        log::info!(
            "loaded {}: {} nodes, {} links, {} zones; FIFO repair touched {} links",
            config.name,
            network.nodes().len(),
            network.links().len(),
            zones.len(),
            repair.links_repaired.len()
        );
        Ok(Self {
            config,
            data,
            network,
            repair,
            zones,
        })
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let wrap = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>())
            .map_err(wrap)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes the scenario tables and a config file into `dir`; returns the
/// config path. `template` supplies every non-path setting.
pub fn write_scenario(
    data: &ScenarioData,
    dir: &Path,
    template: &ScenarioConfig,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })?;
    write_rows(
        &dir.join("nodes.csv"),
        &strs(&["id", "x", "y"]),
        data.nodes
            .iter()
            .map(|n| [n.id.clone(), n.x.to_string(), n.y.to_string()]),
    )?;
    write_rows(
        &dir.join("links.csv"),
        &strs(&LINK_HEADER),
        data.links.iter().map(|l| {
            [
                l.id.clone(),
                l.from.clone(),
                l.to.clone(),
                l.length_m.to_string(),
                l.freeflow_kmh.to_string(),
                l.frc.to_string(),
                u8::from(l.oneway).to_string(),
                l.profile_id.clone().unwrap_or_default(),
            ]
        }),
    )?;
    write_rows(
        &dir.join("profiles.csv"),
        &profile_header(),
        data.profiles.iter().map(|p| {
            std::iter::once(p.id().to_owned())
                .chain(p.values().iter().map(|v| v.to_string()))
                .collect::<Vec<_>>()
        }),
    )?;
    write_rows(
        &dir.join("restrictions.csv"),
        &strs(&["via", "from_link", "to_link"]),
        data.restrictions
            .iter()
            .map(|(v, f, t)| [v.clone(), f.clone(), t.clone()]),
    )?;
    write_rows(
        &dir.join("population.csv"),
        &strs(&["cell_x", "cell_y", "pop"]),
        data.population
            .iter()
            .map(|c| [c.x.to_string(), c.y.to_string(), c.population.to_string()]),
    )?;
    write_rows(
        &dir.join("study_cells.csv"),
        &strs(&["cell_x", "cell_y"]),
        data.study_cells
            .iter()
            .map(|(x, y)| [x.to_string(), y.to_string()]),
    )?;
    let cfg = ScenarioConfig {
        nodes: "nodes.csv".into(),
        links: "links.csv".into(),
        profiles: "profiles.csv".into(),
        restrictions: Some("restrictions.csv".into()),
        population: "population.csv".into(),
        study_cells: "study_cells.csv".into(),
        extent: data.extent,
        downtown: Some(data.downtown),
        ..template.clone()
    };
    let path = dir.join("scenario.cfg");
    std::fs::write(&path, cfg.to_text()).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Reads `label,t0000,...` reference profiles.
pub fn read_references(path: &Path) -> Result<ReferenceProfileSet> {
    let mut rdr = open(path)?;
    let header = rdr
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })?
        .clone();
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(Error::ingest(path, 1, "header must start with label"));
    }
    let width = header.len();
    let mut set = ReferenceProfileSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })?;
        if rec.len() != width {
            return Err(Error::ingest(
                path,
                row_of(i),
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        let values: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|v| field(path, i, "value", v))
            .collect::<Result<_>>()?;
        set.insert(&rec[0], values)
            .map_err(|e| Error::ingest(path, row_of(i), e.to_string()))?;
    }
    Ok(set)
}

pub fn write_references(path: &Path, refs: &ReferenceProfileSet, instants: &[f64]) -> Result<()> {
    let len = refs.iter().next().map_or(0, |(_, p)| p.len());
    write_rows(
        path,
        &reference_header(len, instants),
        refs.iter().map(|(l, p)| {
            std::iter::once(l.to_owned())
                .chain(p.iter().map(|v| format!("{v:.6}")))
                .collect::<Vec<_>>()
        }),
    )
}
