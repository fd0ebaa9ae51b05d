use std::path::Path;

use serde_json::{json, Map, Value};

use crate::accessibility::{CurveRow, ZoneMetrics, ZONE_METRICS_FIELDS};
use crate::error::{Error, Result};
use crate::pipeline::RunResults;
use crate::time::{format_compact, format_hhmm, Minute};

use super::ingest::write_rows;
use super::write_references;

/// Files produced by [`write_reports`].
pub const REPORT_FILES: [&str; 10] = [
    "global_profile.csv",
    "global_metrics.csv",
    "zone_series.csv",
    "zone_metrics.csv",
    "zones.geojson",
    "cumulative_population.csv",
    "zonal_summary.csv",
    "reference_profile.csv",
    "cluster_references.csv",
    "fifo_repair.csv",
];

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| (*x).to_owned()).collect()
}

fn mpu(v: f64) -> String {
    format!("{v:.6}")
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn instant(t: Option<Minute>) -> String {
    t.map(format_hhmm).unwrap_or_default()
}

fn zone_metric_values(m: &ZoneMetrics) -> Vec<String> {
    vec![
        m.zone_id.clone(),
        mpu(m.freeflow_access),
        instant(m.morning_peak_instant),
        instant(m.afternoon_peak_instant),
        mpu(m.morning_ratio),
        mpu(m.afternoon_ratio),
        format_hhmm(m.worst_instant),
        m.worst_is_morning.to_string(),
        mpu(m.peak_gap),
        m.cluster_label.clone().unwrap_or_default(),
    ]
}

fn zone_metric_properties(m: &ZoneMetrics) -> Map<String, Value> {
    let t = |v: Option<Minute>| v.map_or(Value::Null, |t| Value::from(format_hhmm(t)));
    let mut p = Map::new();
    p.insert("zone_id".into(), m.zone_id.clone().into());
    p.insert("freeflow_access".into(), m.freeflow_access.into());
    p.insert("morning_peak_instant".into(), t(m.morning_peak_instant));
    p.insert("afternoon_peak_instant".into(), t(m.afternoon_peak_instant));
    p.insert("morning_ratio".into(), m.morning_ratio.into());
    p.insert("afternoon_ratio".into(), m.afternoon_ratio.into());
    p.insert("worst_instant".into(), format_hhmm(m.worst_instant).into());
    p.insert("worst_is_morning".into(), m.worst_is_morning.into());
    p.insert("peak_gap".into(), m.peak_gap.into());
    p.insert(
        "cluster_label".into(),
        m.cluster_label.clone().map_or(Value::Null, Value::from),
    );
    debug_assert_eq!(p.len(), ZONE_METRICS_FIELDS.len());
    p
}

fn geojson(results: &RunResults) -> Value {
    let features: Vec<Value> = results
        .zones
        .iter()
        .zip(&results.zone_metrics)
        .map(|(z, m)| {
            let ring: Vec<Value> = z.ring().iter().map(|&(x, y)| json!([x, y])).collect();
            json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": [ring] },
                "properties": Value::Object(zone_metric_properties(m)),
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "name": results.name,
        "crs_name": results.crs,
        "features": features,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes every report of a completed run into `outdir`.
pub fn write_reports(results: &RunResults, outdir: &Path) -> Result<()> {
    std::fs::create_dir_all(outdir).map_err(io_err(outdir))?;
    let g = &results.global;
    write_rows(
        &outdir.join("global_profile.csv"),
        &s(&["instant", "mpu", "relative"]),
        results
            .instants
            .iter()
            .enumerate()
            .map(|(k, &t)| [format_hhmm(t), mpu(g.values[k]), mpu(g.relative[k])]),
    )?;

    let gm = &results.global_metrics;
    write_rows(
        &outdir.join("global_metrics.csv"),
        &s(&[
            "max_mpu",
            "mean_mpu",
            "median_mpu",
            "mean_over_max_pct",
            "median_over_max_pct",
            "morning_peak",
            "afternoon_peak",
            "freeflow_mpu",
        ]),
        [[
            mpu(gm.max),
            mpu(gm.mean),
            mpu(gm.median),
            pct(gm.mean_pct),
            pct(gm.median_pct),
            instant(gm.morning_peak),
            instant(gm.afternoon_peak),
            gm.freeflow.map(mpu).unwrap_or_default(),
        ]],
    )?;

    let mut series_header = vec!["zone_id".to_owned()];
    series_header.extend(
        results
            .instants
            .iter()
            .map(|&t| format!("t{}", format_compact(t))),
    );
    write_rows(
        &outdir.join("zone_series.csv"),
        &series_header,
        results.zones.iter().zip(&results.series).map(|(z, v)| {
            std::iter::once(z.id.clone())
                .chain(v.iter().map(|&x| mpu(x)))
                .collect::<Vec<_>>()
        }),
    )?;

    write_rows(
        &outdir.join("zone_metrics.csv"),
        &s(&ZONE_METRICS_FIELDS),
        results.zone_metrics.iter().map(zone_metric_values),
    )?;

    let zs = &results.zonal_summary;
    write_rows(
        &outdir.join("zonal_summary.csv"),
        &s(&[
            "max_freeflow_mpu",
            "cells_above_80pct_of_max_pct",
            "cells_worst_morning_pct",
            "cells_worst_afternoon_pct",
        ]),
        [[
            mpu(zs.max_freeflow_access),
            pct(zs.above_80pct_share),
            pct(zs.worst_morning_share),
            pct(zs.worst_afternoon_share),
        ]],
    )?;

    write_curve(&outdir.join("cumulative_population.csv"), &results.curve)?;

    write_references(
        &outdir.join("reference_profile.csv"),
        &results.global_reference(),
        &results.instants,
    )?;
    write_references(
        &outdir.join("cluster_references.csv"),
        &results.references,
        &results.instants,
    )?;

    write_rows(
        &outdir.join("fifo_repair.csv"),
        &s(&["link_id", "breakpoints_changed", "max_gain_min"]),
        results.repair.links_repaired.iter().map(|r| {
            [
                r.link_id.clone(),
                r.breakpoints_changed.to_string(),
                mpu(r.max_gain),
            ]
        }),
    )?;

    let path = outdir.join("zones.geojson");
    let mut text = serde_json::to_string(&geojson(results)).expect("serializable");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(())
}

pub fn write_curve(path: &Path, curve: &[CurveRow]) -> Result<()> {
    write_rows(
        path,
        &s(&["distance_km", "cumulative_population", "net_density"]),
        curve.iter().map(|r| {
            [
                format!("{:.3}", r.distance_km),
                r.cumulative_population.to_string(),
                mpu(r.net_density),
            ]
        }),
    )
}

/// One row per zone: `zone_id,label,distance`.
pub fn write_assignments(path: &Path, rows: &[(String, String, f64)]) -> Result<()> {
    write_rows(
        path,
        &s(&["zone_id", "label", "distance"]),
        rows.iter().map(|(z, l, d)| [z.clone(), l.clone(), mpu(*d)]),
    )
}

/// Generic headed CSV table, used to read reports back.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn value(&self, row: usize, name: &str) -> Option<&str> {
        self.column(name)
            .and_then(|c| self.rows.get(row).and_then(|r| r.get(c)))
            .map(String::as_str)
    }
}

pub fn read_csv_table(path: &Path) -> Result<CsvTable> {
    let wrap = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(wrap)?;
    let header = rdr
        .headers()
        .map_err(wrap)?
        .iter()
        .map(str::to_owned)
        .collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(wrap)?;
    Ok(CsvTable { header, rows })
}
