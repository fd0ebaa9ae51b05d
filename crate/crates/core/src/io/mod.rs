//! Input files, configuration and report serialization.
//!
//! All inputs are headed CSV files; the scenario configuration is a flat
//! `key = value` text file whose relative paths resolve against the
//! configuration file's directory.

mod config;
mod ingest;
mod report;

use std::path::{Path, PathBuf};

pub use config::{ScenarioConfig, CONFIG_KEYS};
pub use ingest::{
    load_scenario, read_references, read_scenario_data, write_references, write_scenario,
    LoadedScenario,
};
pub use report::{
    read_csv_table, write_assignments, write_curve, write_reports, CsvTable, REPORT_FILES,
};

use crate::error::{Error, Result};
use crate::network::{LinkSpec, Network, NetworkBuilder, Node, RepairReport, SpeedProfile};
use crate::zoning::{Extent, RasterCell};

/// Everything the input files describe, before validation into a network.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub nodes: Vec<Node>,
    pub links: Vec<LinkSpec>,
    pub profiles: Vec<SpeedProfile>,
    /// `(via, from_link, to_link)` banned turns.
    pub restrictions: Vec<(String, String, String)>,
    pub population: Vec<RasterCell>,
    /// Lower-left corners of the 2 km study cells.
    pub study_cells: Vec<(i64, i64)>,
    pub downtown: (f64, f64),
    pub extent: Option<Extent>,
}

/// Where each table came from, for error messages.
#[derive(Debug, Clone)]
pub struct SourceFiles {
    pub nodes: PathBuf,
    pub links: PathBuf,
    pub profiles: PathBuf,
    pub restrictions: PathBuf,
}

impl Default for SourceFiles {
    fn default() -> Self {
        Self {
            nodes: "nodes".into(),
            links: "links".into(),
            profiles: "profiles".into(),
            restrictions: "restrictions".into(),
        }
    }
}

/// CSV row number (1-based, header is row 1) of the `i`-th record.
fn row_of(i: usize) -> usize {
    i + 2
}

fn at(file: &Path, i: usize) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Invalid { what, reason } => {
            Error::ingest(file, row_of(i), format!("{what}: {reason}"))
        }
        other => other,
    }
}

impl ScenarioData {
    /// Validates the tables into a network and applies FIFO repair.
    pub fn build_network(&self, files: &SourceFiles) -> Result<(Network, RepairReport)> {
        let mut b = NetworkBuilder::new();
        for (i, n) in self.nodes.iter().enumerate() {
            b.add_node(n.id.clone(), n.x, n.y)
                .map_err(at(&files.nodes, i))?;
        }
        for (i, p) in self.profiles.iter().enumerate() {
            b.add_profile(p.clone()).map_err(at(&files.profiles, i))?;
        }
        for (i, l) in self.links.iter().enumerate() {
            b.add_link(l.clone()).map_err(at(&files.links, i))?;
        }
        for (i, (via, from, to)) in self.restrictions.iter().enumerate() {
            b.add_restriction(via, from, to)
                .map_err(at(&files.restrictions, i))?;
        }
        Ok(b.build())
    }
}
