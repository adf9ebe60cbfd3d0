use std::path::Path;
use std::process::{Command, Output};

use pointsel_harness::scenario::DeviceEntry;
use pointsel_harness::Scenario;

fn pointsel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointsel"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn pointsel")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn room(dir: &Path) {
    let mut s = Scenario::new("room");
    for (id, p) in [
        ("lamp", [3.0, 0.0, 5.0]),
        ("tv", [3.0, 1.5, 5.0]),
        ("fan", [0.0, 0.0, 8.0]),
    ] {
        s.devices.push(DeviceEntry {
            id: id.into(),
            label: id.into(),
            position_m: p,
            registered_at_s: 0.0,
            registration_gap_m: 0.0,
            registration_angle_deg: 0.0,
        });
    }
    s.write(&dir.join("s.json")).unwrap();
}

#[test]
fn simulate_then_select_prints_one_line() {
    let dir = tempfile::tempdir().unwrap();
    room(dir.path());
    let sim = pointsel(
        dir.path(),
        &[
            "simulate",
            "--scenario",
            "s.json",
            "--user",
            "0,0,5",
            "--device",
            "lamp",
            "--seed",
            "3",
            "--out",
            "g.csv",
        ],
    );
    assert!(
        sim.status.success(),
        "{}",
        String::from_utf8_lossy(&sim.stderr)
    );

    let sel = pointsel(
        dir.path(),
        &["select", "--scenario", "s.json", "--trace", "g.csv"],
    );
    assert!(sel.status.success());
    let out = stdout(&sel);
    assert_eq!(out.lines().count(), 1);
    let fields: Vec<&str> = out.trim().split(',').collect();
    assert_eq!(fields[0], "lamp");
    assert_eq!(fields.len(), 4);
    assert!(fields[1].starts_with("lamp:"));
    for f in &fields[1..] {
        let (_, score) = f.split_once(':').unwrap();
        score.parse::<f64>().unwrap();
    }

    let est = pointsel(dir.path(), &["estimate", "--trace", "g.csv"]);
    assert!(est.status.success());
    let lines: Vec<String> = stdout(&est).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    let row: Vec<f64> = lines[1]
        .split(',')
        .take(10)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(row[3] > 0.95, "direction should be close to +x: {row:?}");
    assert_eq!(row[6], 110.0);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--user",
        "-0.5,0.2,4",
        "--toward",
        "2,0,6",
        "--seed",
        "9",
    ];
    let a = pointsel(dir.path(), &args);
    let b = pointsel(dir.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--axis",
        "displacement",
        "--trials",
        "100",
        "--seed",
        "7",
    ];
    let a = pointsel(dir.path(), &args);
    let b = pointsel(dir.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 7);
}

#[test]
fn register_adds_a_device_or_asks_to_move() {
    let dir = tempfile::tempdir().unwrap();
    room(dir.path());
    let d = dir.path();
    for (name, user, seed) in [
        ("a.csv", "-1,0,4", "1"),
        ("b.csv", "0.5,0,3", "2"),
        ("c.csv", "-0.8,0,4", "3"),
    ] {
        let o = pointsel(
            d,
            &[
                "simulate",
                "--scenario",
                "s.json",
                "--user",
                user,
                "--toward",
                "2,0.5,6",
                "--seed",
                seed,
                "--jitter",
                "0",
                "--out",
                name,
            ],
        );
        assert!(o.status.success());
    }
    let ok = pointsel(
        d,
        &[
            "register",
            "--scenario",
            "s.json",
            "--first",
            "a.csv",
            "--second",
            "b.csv",
            "--label",
            "plant",
            "--write",
        ],
    );
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let row = stdout(&ok).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("registered,dev-0004,"), "{row}");
    let s = Scenario::read(&d.join("s.json")).unwrap();
    assert_eq!(s.devices.len(), 4);
    let p = s.devices[3].position_m;
    let err = ((p[0] - 2.0).powi(2) + (p[1] - 0.5).powi(2) + (p[2] - 6.0).powi(2)).sqrt();
    assert!(err < 0.6, "{p:?}");

    let near = pointsel(
        d,
        &[
            "register",
            "--scenario",
            "s.json",
            "--first",
            "a.csv",
            "--second",
            "c.csv",
        ],
    );
    assert!(near.status.success());
    assert!(stdout(&near)
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("guidance-needed,"));
    assert_eq!(Scenario::read(&d.join("s.json")).unwrap().devices.len(), 4);
}

#[test]
fn calibrate_creates_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointsel(
        dir.path(),
        &[
            "calibrate",
            "--scenario",
            "new.json",
            "--target-median-deg",
            "2.33",
            "--trials",
            "10",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = Scenario::read(&dir.path().join("new.json")).unwrap();
    let c = s.calibration.unwrap();
    assert_eq!(c.target_median_deg, 2.33);
    assert!((c.achieved_median_deg - 2.33).abs() <= 1e-3);
    assert_eq!(s.noise, c.base_noise.scaled(c.scale));
}

#[test]
fn invalid_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        pointsel(d, &["sweep", "--axis", "displacement", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pointsel(d, &["sweep", "--axis", "sideways"]).status.code(),
        Some(2)
    );
    assert_eq!(
        pointsel(d, &["sweep", "--axis", "direction", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(pointsel(d, &["frobnicate"]).status.code(), Some(2));

    std::fs::write(
        d.join("bad.csv"),
        "timestamp_s,distance_m,azimuth_deg,elevation_deg\n0.2,5,0,0\n0.1,5,0,0\n",
    )
    .unwrap();
    let o = pointsel(d, &["estimate", "--trace", "bad.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    std::fs::write(
        d.join("v2.json"),
        "{\"format_version\": 2, \"name\": \"x\"}",
    )
    .unwrap();
    let o = pointsel(
        d,
        &["sweep", "--axis", "direction", "--scenario", "v2.json"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unsupported format_version 2"));

    std::fs::write(d.join("empty.json"), Scenario::new("empty").to_json()).unwrap();
    room(d);
    pointsel(
        d,
        &[
            "simulate", "--user", "0,0,5", "--toward", "3,0,5", "--out", "g.csv",
        ],
    );
    let o = pointsel(
        d,
        &["select", "--scenario", "empty.json", "--trace", "g.csv"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("catalog is empty"));
}
