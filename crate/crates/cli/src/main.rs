use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dynacc_core::accessibility::{cumulative_population_curve, relative};
use dynacc_core::clustering::classify;
use dynacc_core::io::{
    read_references, read_scenario_data, write_assignments, write_curve, write_reports,
    write_scenario, LoadedScenario, ScenarioConfig,
};
use dynacc_core::pipeline::{accessibility_series, prepare, run};
use dynacc_core::synthgen::{generate, SynthSpec};
use dynacc_core::time::parse_hhmm;
use dynacc_core::zoning::distance_to_downtown;

/// Congestion-aware potential accessibility on time-dependent road networks.
#[derive(Parser)]
#[command(name = "dynacc", version)]
struct Cli {
    /// Rayon worker threads; defaults to one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic ring-radial scenario.
    Synth(SynthArgs),
    /// Load and validate a scenario without routing.
    Validate(ScenarioArgs),
    /// Full pipeline: routing, accessibility, metrics, classification, reports.
    Run(RunArgs),
    /// Classify every study zone against a reference profile file.
    Classify(ClassifyArgs),
    /// Cumulative population by distance from downtown.
    Curve(CurveArgs),
}

/// Overrides for scenario configuration keys.
#[derive(Args, Default)]
struct ConfigFlags {
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    links: Option<String>,
    #[arg(long)]
    profiles: Option<String>,
    #[arg(long)]
    restrictions: Option<String>,
    #[arg(long)]
    population: Option<String>,
    #[arg(long)]
    study_cells: Option<String>,
    /// xmin,ymin,xmax,ymax in metres, aligned to 2 km.
    #[arg(long)]
    extent: Option<String>,
    /// x,y in metres.
    #[arg(long, allow_hyphen_values = true)]
    downtown: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// HH:MM
    #[arg(long)]
    departure_start: Option<String>,
    /// Minutes.
    #[arg(long)]
    departure_step: Option<String>,
    #[arg(long)]
    departure_count: Option<String>,
    #[arg(long)]
    connector_kmh: Option<String>,
    /// HH:MM-HH:MM
    #[arg(long)]
    morning_window: Option<String>,
    /// HH:MM-HH:MM
    #[arg(long)]
    afternoon_window: Option<String>,
    #[arg(long)]
    buffer_threshold_min: Option<String>,
    #[arg(long)]
    buffer_destinations: Option<String>,
    #[arg(long)]
    ring_width_km: Option<String>,
    #[arg(long)]
    crs: Option<String>,
    #[arg(long)]
    references: Option<String>,
    #[arg(long)]
    clusters: Option<String>,
    #[arg(long)]
    kmeans_seed: Option<String>,
    #[arg(long)]
    kmeans_max_iter: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// Any configuration key as key=value; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigFlags {
    fn pairs(&self) -> Vec<(&'static str, &String)> {
        let fields = [
            ("name", &self.name),
            ("nodes", &self.nodes),
            ("links", &self.links),
            ("profiles", &self.profiles),
            ("restrictions", &self.restrictions),
            ("population", &self.population),
            ("study_cells", &self.study_cells),
            ("extent", &self.extent),
            ("downtown", &self.downtown),
            ("beta", &self.beta),
            ("departure_start", &self.departure_start),
            ("departure_step", &self.departure_step),
            ("departure_count", &self.departure_count),
            ("connector_kmh", &self.connector_kmh),
            ("morning_window", &self.morning_window),
            ("afternoon_window", &self.afternoon_window),
            ("buffer_threshold_min", &self.buffer_threshold_min),
            ("buffer_destinations", &self.buffer_destinations),
            ("ring_width_km", &self.ring_width_km),
            ("crs", &self.crs),
            ("references", &self.references),
            ("clusters", &self.clusters),
            ("kmeans_seed", &self.kmeans_seed),
            ("kmeans_max_iter", &self.kmeans_max_iter),
            ("output_dir", &self.output_dir),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }

    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        for (k, v) in self.pairs() {
            set_from_cli(cfg, k, v).with_context(|| format!("--{}", k.replace('_', "-")))?;
        }
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            set_from_cli(cfg, k.trim(), v).with_context(|| format!("--set {kv}"))?;
        }
        Ok(())
    }
}

const PATH_KEYS: [&str; 9] = [
    "nodes",
    "links",
    "profiles",
    "restrictions",
    "population",
    "study_cells",
    "references",
    "output_dir",
    "base_dir",
];

/// Paths given on the command line are relative to the working directory,
/// not to the config file.
fn set_from_cli(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<()> {
    let value = value.trim();
    if PATH_KEYS.contains(&key) && !value.is_empty() && Path::new(value).is_relative() {
        let abs = std::env::current_dir()?.join(value);
        cfg.set(key, &abs.to_string_lossy())?;
    } else {
        cfg.set(key, value)?;
    }
    Ok(())
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario configuration file.
    config: PathBuf,
    #[command(flatten)]
    flags: ConfigFlags,
}

impl ScenarioArgs {
    fn load(&self) -> Result<LoadedScenario> {
        let mut cfg = ScenarioConfig::from_file(&self.config)?;
        self.flags.apply(&mut cfg)?;
        let data = read_scenario_data(&cfg)?;
        Ok(LoadedScenario::from_data(cfg, data)?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Report directory; overrides output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output CSV (zone_id,label,distance); defaults to
    /// <output_dir>/assignments.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output CSV; defaults to <output_dir>/cumulative_population.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for the generated scenario files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 15)]
    rings: usize,
    #[arg(long, default_value_t = 32)]
    radials: usize,
    #[arg(long, default_value_t = 2.0)]
    ring_spacing_km: f64,
    /// Study cells lie within this radius; default two km inside the outer ring.
    #[arg(long)]
    study_radius_km: Option<f64>,
    #[arg(long, default_value_t = 40)]
    core_population: u64,
    #[arg(long, default_value_t = 0.1)]
    density_decay_per_km: f64,
    #[arg(long, default_value_t = 0.55)]
    morning_depth: f64,
    #[arg(long, default_value = "08:15")]
    morning_center: String,
    #[arg(long, default_value_t = 70.0)]
    morning_half_width: f64,
    #[arg(long, default_value_t = 0.5)]
    afternoon_depth: f64,
    #[arg(long, default_value = "17:30")]
    afternoon_center: String,
    #[arg(long, default_value_t = 100.0)]
    afternoon_half_width: f64,
    #[arg(long, default_value_t = 0.7)]
    direction_asymmetry: f64,
    #[arg(long, default_value_t = 0.6)]
    ring_attenuation: f64,
    #[arg(long, default_value_t = 70.0)]
    radial_kmh: f64,
    #[arg(long, default_value_t = 50.0)]
    ring_kmh: f64,
    /// Allow U-turns at every node.
    #[arg(long)]
    allow_u_turns: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Settings written into the generated scenario.cfg.
    #[command(flatten)]
    flags: ConfigFlags,
}

impl SynthArgs {
    fn spec(&self) -> Result<SynthSpec> {
        let mut spec = SynthSpec {
            rings: self.rings,
            radials: self.radials,
            ring_spacing_km: self.ring_spacing_km,
            study_radius_km: self.study_radius_km,
            core_population: self.core_population,
            density_decay_per_km: self.density_decay_per_km,
            direction_asymmetry: self.direction_asymmetry,
            ring_attenuation: self.ring_attenuation,
            radial_kmh: self.radial_kmh,
            ring_kmh: self.ring_kmh,
            ban_u_turns: !self.allow_u_turns,
            seed: self.seed,
            ..SynthSpec::default()
        };
        spec.morning.depth = self.morning_depth;
        spec.morning.center = parse_hhmm(&self.morning_center)?;
        spec.morning.half_width = self.morning_half_width;
        spec.afternoon.depth = self.afternoon_depth;
        spec.afternoon.center = parse_hhmm(&self.afternoon_center)?;
        spec.afternoon.half_width = self.afternoon_half_width;
        Ok(spec)
    }
}

fn output_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.resolve(&cfg.output_dir)
}

fn synth(args: &SynthArgs) -> Result<()> {
    let data = generate(&args.spec()?)?;
    let mut template = ScenarioConfig {
        name: "synthetic".into(),
        ..ScenarioConfig::default()
    };
    args.flags.apply(&mut template)?;
    let path = write_scenario(&data, &args.out, &template)?;
    println!(
        "wrote {} ({} nodes, {} links, {} study cells)",
        path.display(),
        data.nodes.len(),
        data.links.len(),
        data.study_cells.len()
    );
    Ok(())
}

fn validate(args: &ScenarioArgs) -> Result<()> {
    let s = args.load()?;
    let study = s.zones.iter().filter(|z| z.in_study_area).count();
    println!("scenario {}", s.config.name);
    println!("  nodes: {}", s.network.nodes().len());
    println!("  directed links: {}", s.network.links().len());
    println!("  speed profiles: {}", s.network.profiles().len());
    println!("  banned turns: {}", s.network.restrictions().len());
    println!("  grid zones: {} ({} in study area)", s.zones.len(), study);
    println!(
        "  FIFO repair: {} of {} links, {} of {} breakpoints ({:.3}%)",
        s.repair.links_repaired.len(),
        s.repair.links_checked,
        s.repair.breakpoints_changed,
        s.repair.breakpoints_total,
        100.0 * s.repair.changed_fraction()
    );
    println!("ok");
    Ok(())
}

fn run_cmd(args: &RunArgs) -> Result<()> {
    let loaded = args.scenario.load()?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| output_dir(&loaded.config));
    let prepared = prepare(loaded)?;
    let results = run(&prepared)?;
    write_reports(&results, &out)?;
    let g = &results.global_metrics;
    println!(
        "{}: {} study zones, mean/max {:.2}%, median/max {:.2}%; reports in {}",
        results.name,
        results.zones.len(),
        g.mean_pct,
        g.median_pct,
        out.display()
    );
    Ok(())
}

fn classify_cmd(args: &ClassifyArgs) -> Result<()> {
    let loaded = args.scenario.load()?;
    let Some(refs_path) = loaded.config.references.clone() else {
        bail!("no reference profiles: pass --references FILE");
    };
    let refs = read_references(&loaded.config.resolve(&refs_path))?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| output_dir(&loaded.config).join("assignments.csv"));
    let p = prepare(loaded)?;
    let series = accessibility_series(
        &p.graph,
        &p.area.study,
        &p.opportunities(),
        p.schedule.instants(),
        &p.decay,
    )?;
    let mut rows = Vec::with_capacity(series.len());
    for (&i, s) in p.area.study.iter().zip(&series) {
        let (label, d) = classify(&relative(s), &refs)?;
        rows.push((p.zones[i].id.clone(), label, d));
    }
    create_parent(&out)?;
    write_assignments(&out, &rows)?;
    println!(
        "classified {} zones against {} references into {}",
        rows.len(),
        refs.len(),
        out.display()
    );
    Ok(())
}

fn curve_cmd(args: &CurveArgs) -> Result<()> {
    let s = args.scenario.load()?;
    let downtown = s.data.downtown;
    let rings: Vec<(f64, u64)> = s
        .zones
        .iter()
        .filter(|z| z.in_study_area)
        .map(|z| (distance_to_downtown(z, downtown), z.population))
        .collect();
    let curve = cumulative_population_curve(&rings, s.config.ring_width_km)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| output_dir(&s.config).join("cumulative_population.csv"));
    create_parent(&out)?;
    write_curve(&out, &curve)?;
    println!("{} rings written to {}", curve.len(), out.display());
    Ok(())
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    log::debug!("worker threads: {}", rayon::current_num_threads());
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Validate(a) => validate(a),
        Command::Run(a) => run_cmd(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Curve(a) => curve_cmd(a),
    }
}
