//! Potential accessibility and the congestion metrics derived from it.
//!
//! `A_i^t = Σ_j D_j · exp(-β · c_ij^t)`: every destination's population is
//! discounted exponentially by the travel minutes needed to reach it when
//! leaving zone `i` at instant `t`. Values are in MPU, i.e. decayed
//! population equivalents.

use crate::error::{Error, Result};
use crate::routing::CostTensor;
use crate::time::{Minute, TimeWindow};

/// Split between morning and afternoon for the worst-instant flag.
pub const NOON: Minute = 720.0;

/// Relative values closer than this count as tied; travel times are
/// differences of clock minutes and carry rounding noise of about 1e-13.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Exponential impedance decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    /// Decay rate per minute; the weight is `exp(-beta * c)`.
    pub beta: f64,
}

impl DecayParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("{beta} must be > 0")));
        }
        Ok(Self { beta })
    }

    /// Weight for a known, non-negative cost.
    #[inline]
    pub fn weight(&self, minutes: f64) -> f64 {
        (-self.beta * minutes).exp()
    }
}

impl Default for DecayParams {
    fn default() -> Self {
        Self { beta: 0.065 }
    }
}

/// Decay weight for `cost` minutes; unreachable (`None`) weighs 0.
pub fn decay(cost: Option<f64>, params: &DecayParams) -> Result<f64> {
    match cost {
        None => Ok(0.0),
        Some(c) if c < 0.0 || c.is_nan() => Err(Error::NegativeCost(c)),
        Some(c) if c.is_infinite() => Ok(0.0),
        Some(c) => Ok(params.weight(c)),
    }
}

/// Accessibility from one row of travel minutes (infinity = unreachable).
pub fn accessibility_from_row(row: &[f64], opportunities: &[f64], params: &DecayParams) -> f64 {
    debug_assert_eq!(row.len(), opportunities.len());
    row.iter()
        .zip(opportunities)
        .filter(|(c, _)| c.is_finite())
        .map(|(&c, &d)| d * params.weight(c))
        .sum()
}

/// `A_i^t` for origin `i` at instant index `t`.
pub fn zone_accessibility(
    i: usize,
    t: usize,
    tensor: &CostTensor,
    opportunities: &[f64],
    params: &DecayParams,
) -> f64 {
    accessibility_from_row(tensor.row(i, t), opportunities, params)
}

/// Divides by the series maximum; an all-zero series maps to all ones.
pub fn relative(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > 0.0 {
        values.iter().map(|v| v / max).collect()
    } else {
        vec![1.0; values.len()]
    }
}

/// One zone's accessibility at every departure instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilitySeries {
    pub zone: usize,
    pub values: Vec<f64>,
}

impl AccessibilitySeries {
    pub fn relative(&self) -> Vec<f64> {
        relative(&self.values)
    }
}

/// Population-weighted mean accessibility of the study area per instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalProfile {
    pub values: Vec<f64>,
    pub relative: Vec<f64>,
}

/// Weighted mean of `series` at each instant, weights = origin populations.
pub fn global_profile(series: &[&[f64]], weights: &[f64]) -> Result<GlobalProfile> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let len = series.first().map_or(0, |s| s.len());
    let mut values = vec![0.0; len];
    for (s, &w) in series.iter().zip(weights) {
        for (acc, v) in values.iter_mut().zip(s.iter()) {
            *acc += v * w;
        }
    }
    for v in &mut values {
        *v /= total;
    }
    let relative = relative(&values);
    Ok(GlobalProfile { values, relative })
}

/// Instant indices of the lowest relative value in each window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Peaks {
    pub morning: Option<usize>,
    pub afternoon: Option<usize>,
}

/// Argmin of `relative` among instants in `window`; ties go to the earliest.
fn window_argmin(relative: &[f64], instants: &[Minute], window: TimeWindow) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, (&r, &t)) in relative.iter().zip(instants).enumerate() {
        if window.contains(t) && best.is_none_or(|b| r < relative[b] - TIE_TOLERANCE) {
            best = Some(k);
        }
    }
    best
}

pub fn detect_peaks(
    relative: &[f64],
    instants: &[Minute],
    morning: TimeWindow,
    afternoon: TimeWindow,
) -> Peaks {
    Peaks {
        morning: window_argmin(relative, instants, morning),
        afternoon: window_argmin(relative, instants, afternoon),
    }
}

/// Normalized difference between the better and worse peak ratios,
/// `(best - worst) / (1 - worst)`; 0 when neither peak loses anything.
pub fn peak_gap(morning_ratio: f64, afternoon_ratio: f64) -> f64 {
    let best = morning_ratio.max(afternoon_ratio);
    let worst = morning_ratio.min(afternoon_ratio);
    if worst >= 1.0 {
        0.0
    } else {
        (best - worst) / (1.0 - worst)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Summary of the global profile: the columns of the global results table.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMetrics {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// 100 · mean / max.
    pub mean_pct: f64,
    /// 100 · median / max.
    pub median_pct: f64,
    /// `None` when the window shows no loss at all.
    pub morning_peak: Option<Minute>,
    pub afternoon_peak: Option<Minute>,
    /// Global value under the dedicated free-flow run, when available.
    pub freeflow: Option<f64>,
}

pub fn global_metrics(
    values: &[f64],
    instants: &[Minute],
    morning: TimeWindow,
    afternoon: TimeWindow,
) -> GlobalMetrics {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let median = median(values);
    let rel = relative(values);
    let peaks = detect_peaks(&rel, instants, morning, afternoon);
    let congested = |k: Option<usize>| {
        k.filter(|&k| rel[k] < 1.0 - TIE_TOLERANCE)
            .map(|k| instants[k])
    };
    GlobalMetrics {
        max,
        mean,
        median,
        mean_pct: 100.0 * mean / max,
        median_pct: 100.0 * median / max,
        morning_peak: congested(peaks.morning),
        afternoon_peak: congested(peaks.afternoon),
        freeflow: None,
    }
}

/// Per-zone congestion summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMetrics {
    pub zone_id: String,
    /// Accessibility with every profile at 100%, MPU.
    pub freeflow_access: f64,
    pub morning_peak_instant: Option<Minute>,
    pub afternoon_peak_instant: Option<Minute>,
    /// Relative value at the morning peak instant.
    pub morning_ratio: f64,
    pub afternoon_ratio: f64,
    pub worst_instant: Minute,
    pub worst_is_morning: bool,
    pub peak_gap: f64,
    pub cluster_label: Option<String>,
}

/// Field names of [`ZoneMetrics`] in serialization order.
pub const ZONE_METRICS_FIELDS: [&str; 10] = [
    "zone_id",
    "freeflow_access",
    "morning_peak_instant",
    "afternoon_peak_instant",
    "morning_ratio",
    "afternoon_ratio",
    "worst_instant",
    "worst_is_morning",
    "peak_gap",
    "cluster_label",
];

pub fn zone_metrics(
    zone_id: &str,
    values: &[f64],
    instants: &[Minute],
    morning: TimeWindow,
    afternoon: TimeWindow,
    freeflow_access: f64,
) -> ZoneMetrics {
    let rel = relative(values);
    let peaks = detect_peaks(&rel, instants, morning, afternoon);
    let ratio = |k: Option<usize>| k.map_or(1.0, |k| rel[k]);
    let morning_ratio = ratio(peaks.morning);
    let afternoon_ratio = ratio(peaks.afternoon);
    let mut worst = 0;
    for k in 1..rel.len() {
        if rel[k] < rel[worst] - TIE_TOLERANCE {
            worst = k;
        }
    }
    let worst_instant = instants[worst];
    ZoneMetrics {
        zone_id: zone_id.to_owned(),
        freeflow_access,
        morning_peak_instant: peaks.morning.map(|k| instants[k]),
        afternoon_peak_instant: peaks.afternoon.map(|k| instants[k]),
        morning_ratio,
        afternoon_ratio,
        worst_instant,
        worst_is_morning: worst_instant < NOON,
        peak_gap: peak_gap(morning_ratio, afternoon_ratio),
        cluster_label: None,
    }
}

/// Zone-level shares for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalSummary {
    /// Free-flow accessibility of the best zone, MPU.
    pub max_freeflow_access: f64,
    /// % of zones with free-flow accessibility above 80% of the best zone.
    pub above_80pct_share: f64,
    /// % of zones whose worst instant falls in the morning.
    pub worst_morning_share: f64,
    pub worst_afternoon_share: f64,
}

pub fn zonal_summary(metrics: &[ZoneMetrics]) -> ZonalSummary {
    let n = metrics.len().max(1) as f64;
    let max = metrics
        .iter()
        .map(|m| m.freeflow_access)
        .fold(0.0, f64::max);
    let above = metrics
        .iter()
        .filter(|m| m.freeflow_access > 0.8 * max)
        .count() as f64;
    let morning = metrics.iter().filter(|m| m.worst_is_morning).count() as f64;
    ZonalSummary {
        max_freeflow_access: max,
        above_80pct_share: 100.0 * above / n,
        worst_morning_share: 100.0 * morning / n,
        worst_afternoon_share: 100.0 * (metrics.len() as f64 - morning) / n,
    }
}

/// One ring of the cumulative population curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    /// Outer radius of the ring, km.
    pub distance_km: f64,
    pub cumulative_population: u64,
    /// Ring population per km² of populated cells in the ring.
    pub net_density: f64,
}

/// Population accumulated outwards from downtown in rings of `ring_km`.
/// `zones` are `(distance_km, population)` pairs.
pub fn cumulative_population_curve(zones: &[(f64, u64)], ring_km: f64) -> Result<Vec<CurveRow>> {
    if !(ring_km > 0.0) {
        return Err(Error::invalid(
            "ring width",
            format!("{ring_km} must be > 0"),
        ));
    }
    let max_d = zones.iter().map(|z| z.0).fold(0.0, f64::max);
    let rings = ((max_d / ring_km).ceil() as usize).max(1);
    let mut ring_pop = vec![0u64; rings];
    let mut ring_cells = vec![0usize; rings];
    for &(d, p) in zones {
        // ring k covers (k·w, (k+1)·w]; distance 0 belongs to ring 0
        let k = ((d / ring_km).ceil() as usize)
            .saturating_sub(1)
            .min(rings - 1);
        ring_pop[k] += p;
        if p > 0 {
            ring_cells[k] += 1;
        }
    }
    let mut cumulative = 0;
    Ok((0..rings)
        .map(|k| {
            cumulative += ring_pop[k];
            let area = ring_cells[k] as f64 * crate::zoning::CELL_AREA_KM2;
            CurveRow {
                distance_km: (k + 1) as f64 * ring_km,
                cumulative_population: cumulative,
                net_density: if area > 0.0 {
                    ring_pop[k] as f64 / area
                } else {
                    0.0
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::DepartureSchedule;

    fn windows() -> (TimeWindow, TimeWindow) {
        (TimeWindow::morning(), TimeWindow::afternoon())
    }

    #[test]
    fn decay_examples() {
        let p = DecayParams::default();
        assert_eq!(decay(Some(0.0), &p).unwrap(), 1.0);
        // exp(-0.975), evaluated independently
        assert!((decay(Some(15.0), &p).unwrap() - 0.377_192_353_563_157).abs() < 1e-12);
        assert_eq!(decay(None, &p).unwrap(), 0.0);
        assert!(matches!(decay(Some(-1.0), &p), Err(Error::NegativeCost(_))));
        assert!(DecayParams::new(0.0).is_err());
    }

    #[test]
    fn two_zone_accessibility() {
        let p = DecayParams::default();
        let row = [0.0, 10.0];
        let a = accessibility_from_row(&row, &[100.0, 200.0], &p);
        // 100 + 200 e^{-0.65}
        assert!((a - 204.409_155_352_203).abs() < 1e-9, "{a}");
        assert_eq!(accessibility_from_row(&[0.0], &[100.0], &p), 100.0);
        assert_eq!(
            accessibility_from_row(&[0.0, f64::INFINITY], &[100.0, 200.0], &p),
            100.0
        );
    }

    #[test]
    fn global_profile_weighted_mean() {
        let a = [10.0];
        let b = [20.0];
        let g = global_profile(&[&a, &b], &[1.0, 3.0]).unwrap();
        assert_eq!(g.values, vec![17.5]);
        let g = global_profile(&[&a, &b], &[2.0, 2.0]).unwrap();
        assert_eq!(g.values, vec![15.0]);
        assert!(matches!(
            global_profile(&[&a], &[0.0]),
            Err(Error::ZeroWeight)
        ));
        let s = [3.0, 1.0, 2.0];
        let g = global_profile(&[&s], &[5.0]).unwrap();
        assert_eq!(g.values, s.to_vec());
    }

    #[test]
    fn mean_and_median_percentages() {
        let sched = DepartureSchedule::default();
        let (m, a) = windows();
        // London: one instant at the max, the rest chosen so the mean matches.
        let (max, mean) = (1_673_785.74, 1_438_593.62);
        let rest = (mean * 96.0 - max) / 95.0;
        let mut v = vec![rest; 96];
        v[0] = max;
        let g = global_metrics(&v, sched.instants(), m, a);
        assert!((g.mean_pct - 85.95).abs() < 0.01, "{}", g.mean_pct);
        // Paris median / max.
        let (max, med) = (2_405_382.98, 1_994_151.89);
        let mut v = vec![med; 96];
        v[0] = max;
        let g = global_metrics(&v, sched.instants(), m, a);
        assert!((g.median_pct - 82.90).abs() < 0.01, "{}", g.median_pct);
    }

    #[test]
    fn constant_profile_metrics() {
        let sched = DepartureSchedule::default();
        let (m, a) = windows();
        let g = global_metrics(&[42.0; 96], sched.instants(), m, a);
        assert_eq!(g.mean_pct, 100.0);
        assert_eq!(g.median_pct, 100.0);
        assert_eq!(g.morning_peak, None);
        assert_eq!(g.afternoon_peak, None);
    }

    #[test]
    fn median_uses_middle_pair() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn peak_detection() {
        let sched = DepartureSchedule::default();
        let (m, a) = windows();
        let idx = |hh: usize, mm: usize| (hh * 60 + mm) / 15;
        let mut r = vec![1.0; 96];
        r[idx(8, 0)] = 0.7;
        r[idx(17, 0)] = 0.75;
        r[idx(17, 15)] = 0.75;
        let p = detect_peaks(&r, sched.instants(), m, a);
        assert_eq!(p.morning, Some(idx(8, 0)));
        assert_eq!(p.afternoon, Some(idx(17, 0)));
    }

    #[test]
    fn peak_gap_examples() {
        assert!((peak_gap(0.8, 0.7) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(peak_gap(0.7, 0.7), 0.0);
        assert_eq!(peak_gap(1.0, 0.5), 1.0);
        assert_eq!(peak_gap(1.0, 1.0), 0.0);
    }

    #[test]
    fn zone_metrics_worst_morning() {
        let sched = DepartureSchedule::default();
        let (m, a) = windows();
        let mut v = vec![100.0; 96];
        v[32] = 65.0; // 08:00
        v[68] = 80.0; // 17:00
        let z = zone_metrics("z", &v, sched.instants(), m, a, 100.0);
        assert_eq!(z.worst_instant, 480.0);
        assert!(z.worst_is_morning);
        assert_eq!(z.morning_ratio, 0.65);
        assert_eq!(z.afternoon_ratio, 0.8);
        assert!((z.peak_gap - 0.15 / 0.35).abs() < 1e-12);

        let flat = zone_metrics("f", &[50.0; 96], sched.instants(), m, a, 50.0);
        assert_eq!((flat.morning_ratio, flat.afternoon_ratio), (1.0, 1.0));
        assert_eq!(flat.peak_gap, 0.0);
    }

    #[test]
    fn cumulative_curve() {
        let c = cumulative_population_curve(&[(0.0, 100)], 2.0).unwrap();
        assert_eq!(c[0].cumulative_population, 100);
        assert_eq!(c[0].net_density, 25.0);
        // Ring 1: two cells at 1 km (10 + 30); ring 2: one cell at 3 km (50)
        // and an empty one.
        let zones = [(1.0, 10), (1.5, 30), (3.0, 50), (3.9, 0)];
        let c = cumulative_population_curve(&zones, 2.0).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].cumulative_population, 40);
        assert_eq!(c[1].cumulative_population, 90);
        assert_eq!(c[0].net_density, 40.0 / 8.0);
        assert_eq!(c[1].net_density, 50.0 / 4.0);
        assert!(cumulative_population_curve(&zones, 0.0).is_err());
    }
}
