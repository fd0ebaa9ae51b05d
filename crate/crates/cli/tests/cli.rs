use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dynacc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynacc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth_small(dir: &Path) {
    ok(&dynacc(
        &[
            "synth",
            "--out",
            "city",
            "--rings",
            "4",
            "--radials",
            "8",
            "--name",
            "small",
        ],
        dir,
    ));
}

const REPORTS: [&str; 10] = [
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

#[test]
fn synth_validate_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_small(dir);
    let cfg = fs::read_to_string(dir.join("city/scenario.cfg")).unwrap();
    assert!(cfg.contains("name = small"));

    let v = ok(&dynacc(&["validate", "city/scenario.cfg"], dir));
    assert!(v.contains("directed links: 128"), "{v}");
    assert!(v.trim_end().ends_with("ok"));

    let r = ok(&dynacc(&["run", "city/scenario.cfg", "--out", "out"], dir));
    assert!(r.contains("study zones"), "{r}");
    for f in REPORTS {
        assert!(dir.join("out").join(f).is_file(), "{f}");
    }
}

#[test]
fn worker_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_small(dir);
    for (workers, out) in [("1", "a"), ("3", "b")] {
        ok(&dynacc(
            &[
                "--workers",
                workers,
                "run",
                "city/scenario.cfg",
                "--out",
                out,
            ],
            dir,
        ));
    }
    for f in REPORTS {
        let a = fs::read(dir.join("a").join(f)).unwrap();
        let b = fs::read(dir.join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn config_flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_small(dir);
    ok(&dynacc(
        &[
            "run",
            "city/scenario.cfg",
            "--departure-count",
            "4",
            "--departure-step",
            "360",
            "--set",
            "clusters=2",
            "--output-dir",
            "flagged",
        ],
        dir,
    ));
    let profile = fs::read_to_string(dir.join("flagged/global_profile.csv")).unwrap();
    let instants: Vec<&str> = profile
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(instants, ["00:00", "06:00", "12:00", "18:00"]);
    let refs = fs::read_to_string(dir.join("flagged/cluster_references.csv")).unwrap();
    assert_eq!(refs.lines().count(), 3);
}

#[test]
fn classify_and_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_small(dir);
    ok(&dynacc(&["run", "city/scenario.cfg", "--out", "out"], dir));
    ok(&dynacc(
        &[
            "classify",
            "city/scenario.cfg",
            "--references",
            "out/cluster_references.csv",
            "--out",
            "assign.csv",
        ],
        dir,
    ));
    let assign = fs::read_to_string(dir.join("assign.csv")).unwrap();
    let mut lines = assign.lines();
    assert_eq!(lines.next(), Some("zone_id,label,distance"));
    assert_eq!(lines.count(), 29);

    // classifying against a scenario's own global profile gives one label
    ok(&dynacc(
        &[
            "classify",
            "city/scenario.cfg",
            "--references",
            "out/reference_profile.csv",
            "--out",
            "self.csv",
        ],
        dir,
    ));
    let own = fs::read_to_string(dir.join("self.csv")).unwrap();
    assert!(own
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("small")));

    ok(&dynacc(
        &["curve", "city/scenario.cfg", "--out", "curve.csv"],
        dir,
    ));
    let curve = fs::read_to_string(dir.join("curve.csv")).unwrap();
    assert_eq!(
        curve.lines().next(),
        Some("distance_km,cumulative_population,net_density")
    );
    let last: u64 = curve
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let series = fs::read_to_string(dir.join("out/cumulative_population.csv")).unwrap();
    let reported: u64 = series
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(last, reported);
}

#[test]
fn validation_failures_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_small(dir);
    let profiles = dir.join("city/profiles.csv");
    let text = fs::read_to_string(&profiles).unwrap();
    let broken: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 1 {
                l[..l.rfind(',').unwrap()].to_owned()
            } else {
                l.to_owned()
            }
        })
        .collect();
    fs::write(&profiles, broken.join("\n")).unwrap();
    let out = dynacc(&["validate", "city/scenario.cfg"], dir);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("profile length") && err.contains("profiles.csv"),
        "{err}"
    );

    let out = dynacc(&["run", "city/scenario.cfg", "--set", "nonsense=1"], dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));

    let out = dynacc(&["run", "missing.cfg"], dir);
    assert!(!out.status.success());

    let out = dynacc(&["classify", "city/scenario.cfg"], dir);
    assert!(!out.status.success());
}
