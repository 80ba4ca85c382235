//! End-to-end runs of the `evodyn` binary on the bundled scenarios.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SUBCOMMANDS: [&str; 6] = [
    "equilibria",
    "simulate",
    "critical-mass",
    "select",
    "flows",
    "escape",
];

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn evodyn(sub: &str, config: &Path, out: &Path, overrides: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_evodyn"));
    cmd.arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out);
    for o in overrides {
        cmd.args(["--override", o]);
    }
    cmd.output().unwrap()
}

/// Small grid and short horizon so every subcommand runs quickly.
const FAST: [&str; 4] = [
    "grid.n=400",
    "sim.t_end=5",
    "sim.dt=0.01",
    "escape.t_end=10",
];

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = fs::read(&path).unwrap();
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for config in ["canonical.ini", "coordination.ini"] {
        let (a, b) = (
            tmp.path().join(format!("{config}-a")),
            tmp.path().join(format!("{config}-b")),
        );
        for sub in SUBCOMMANDS {
            // The coordination game has no positive-externality escape scenario.
            if config == "coordination.ini" && sub == "escape" {
                continue;
            }
            for dir in [&a, &b] {
                let out = evodyn(sub, &scenario(config), dir, &FAST);
                assert!(
                    out.status.success(),
                    "{config} {sub}: {}",
                    String::from_utf8_lossy(&out.stderr)
                );
            }
        }
        let (fa, fb) = (files(&a), files(&b));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{config} outputs differ between runs");
    }
}

#[test]
fn csv_outputs_have_one_header_row() {
    let tmp = tempfile::tempdir().unwrap();
    let overrides = [&FAST[..], &["sim.snapshot_times=1,2.5"]].concat();
    for sub in SUBCOMMANDS {
        let out = evodyn(sub, &scenario("canonical.ini"), tmp.path(), &overrides);
        assert!(
            out.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let expected = [
        ("trajectory.csv", "t,xbar"),
        ("snapshots.csv", "t,theta,x"),
        ("cutoff_deficit.csv", "xbar,deficit"),
        ("flows.csv", "q,m,source"),
        ("deficits.csv", "q,m,source"),
        ("bound.csv", "t,xbarbar"),
    ];
    for (name, header) in expected {
        let text = fs::read_to_string(tmp.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header), "{name}");
        assert!(lines.clone().count() > 0, "{name} has no rows");
        assert!(lines.all(|l| l != header), "{name} repeats its header");
    }
}

#[test]
fn canonical_reports_match_the_example() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenario("canonical.ini");
    for sub in ["equilibria", "select", "simulate"] {
        let out = evodyn(sub, &config, tmp.path(), &["grid.n=1000"]);
        assert!(
            out.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    let eq = json(&tmp.path().join("equilibria.json"));
    let found: Vec<(f64, String)> = eq["equilibria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["xbar"].as_f64().unwrap(),
                e["stability"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let expected = [(0.0, "stable"), (0.2, "unstable"), (0.25, "stable")];
    assert_eq!(found.len(), 3);
    for ((x, s), (xe, se)) in found.iter().zip(expected) {
        assert!((x - xe).abs() < 1e-6);
        assert_eq!(s, se);
    }

    let sel = json(&tmp.path().join("select.json"));
    assert_eq!(sel["selected"].as_f64(), Some(0.0));
    let thresholds = sel["thresholds"].as_array().unwrap();
    let overall = |x: f64| {
        thresholds
            .iter()
            .find(|t| (t["xbar_star"].as_f64().unwrap() - x).abs() < 1e-6)
            .unwrap()["overall"]
            .as_f64()
            .unwrap()
    };
    assert!((overall(0.0) - 0.05).abs() < 1e-6);
    assert!((overall(0.25) - 0.000625).abs() < 1e-9);
    assert!(tmp.path().join("sweep_000/select.json").exists());

    let text = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let xs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(
        xs.windows(2).all(|w| w[1] <= w[0]),
        "trajectory is not monotone"
    );
    assert!(*xs.last().unwrap() < 0.01);
}

fn error_of(out: &Output) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"].clone()
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.ini");
    fs::write(
        &bad,
        "[game]\nfamily = affine\na = 2.45\nb = -0.05\nslope = 1\n",
    )
    .unwrap();
    let out = evodyn("equilibria", &bad, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_of(&out);
    assert_eq!(err["kind"], "config");
    assert_eq!(err["line"], 5);

    let out = evodyn(
        "equilibria",
        &tmp.path().join("missing.ini"),
        tmp.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));

    let out = evodyn(
        "equilibria",
        &scenario("canonical.ini"),
        tmp.path(),
        &["grid.n=1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analysis_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    // 0.15 lies outside the certified decrease set, so no escape is certified.
    let out = evodyn(
        "escape",
        &scenario("canonical.ini"),
        tmp.path(),
        &["grid.n=400", "escape.xbar_dagger=0.15"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["kind"], "input");
    assert!(!tmp.path().join("escape.json").exists());
}
