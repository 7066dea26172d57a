use std::path::Path;
use std::process::{Command, Output};

use opnav_core::ephemeris::{EphemerisEntry, EphemerisTable};
use opnav_core::geometry::{los_from_pixel, CameraModel, PointingAngles};
use opnav_core::nalgebra::{Vector2, Vector3};
use opnav_core::AU_KM;

fn opnav(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opnav"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn opnav")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn render_then_process_finds_the_planet() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(opnav(d, &["synth-sky", "--out", "sky.txt"]));
    ok(opnav(d, &["build-catalog", "--in", "sky.txt", "--out", "db.kv"]));

    let (alpha, delta, phi) = (40.0f64, 10.0f64, 30.0f64);
    let sc = Vector3::new(1.5e8, -2.0e8, 1.0e6);
    let att = PointingAngles::new(alpha.to_radians(), delta.to_radians(), phi.to_radians());
    let truth_px = Vector2::new(612.4, 300.7);
    let dir_n = att.matrix().transpose() * los_from_pixel(&CameraModel::default(), &truth_px);
    EphemerisTable::new(vec![EphemerisEntry {
        name: "Target".into(),
        epoch: "T0".into(),
        position_km: sc + dir_n * 2.0 * AU_KM,
        magnitude: 0.5,
    }])
    .unwrap()
    .save(d.join("eph.txt"))
    .unwrap();
    std::fs::write(
        d.join("scene.txt"),
        format!(
            "catalog = sky.txt\nephemeris = eph.txt\nalpha_deg = {alpha}\ndelta_deg = {delta}\nphi_deg = {phi}\n\
             sc_position_km = {},{},{}\nseed = 5\nextra = 200.5,800.5,3.0 # unknown source\n",
            sc.x, sc.y, sc.z
        ),
    )
    .unwrap();
    ok(opnav(
        d,
        &[
            "render",
            "--scene",
            "scene.txt",
            "--out",
            "frame.pgm",
            "--truth",
            "frame.truth",
        ],
    ));
    let truth = std::fs::read_to_string(d.join("frame.truth")).unwrap();
    assert!(truth
        .lines()
        .any(|l| l.starts_with("planet,Target,") && l.ends_with(",1")));
    assert!(truth.lines().any(|l| l.starts_with("extra,")));

    let position = format!("{},{},{}", sc.x + 5e3, sc.y - 5e3, sc.z);
    let out = ok(opnav(
        d,
        &[
            "process",
            "--image",
            "frame.pgm",
            "--db",
            "db.kv",
            "--ephemeris",
            "eph.txt",
            "--sc-position",
            &position,
        ],
    ));
    assert!(out.lines().filter(|l| l.starts_with("match,")).count() >= 3);
    assert!(out.lines().any(|l| l.starts_with("spike,")));
    assert!(out.lines().any(|l| l.starts_with("quaternion,")));
    let beacon = out
        .lines()
        .find(|l| l.starts_with("beacon,Target,"))
        .expect("beacon line");
    let f: Vec<&str> = beacon.split(',').collect();
    assert_eq!(f[7], "detected", "{beacon}");
    let (x, y): (f64, f64) = (f[8].parse().unwrap(), f[9].parse().unwrap());
    assert!((x - truth_px.x).hypot(y - truth_px.y) < 0.5, "{beacon}");
}

#[test]
fn print_config_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(opnav(dir.path(), &["print-config"]));
    assert!(text.contains("threshold_t = 20"));
    std::fs::write(dir.path().join("c.txt"), text).unwrap();
    std::fs::write(dir.path().join("sky.txt"), "").unwrap();
    // the dumped defaults load back; the empty catalog is what fails
    let out = opnav(
        dir.path(),
        &[
            "montecarlo",
            "--n",
            "1",
            "--out",
            "mc",
            "--config",
            "c.txt",
            "--catalog",
            "sky.txt",
        ],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!err.contains("c.txt"), "{err}");
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.cfg"), "threshold_t = 20\nbogus = 3\n").unwrap();
    for args in [
        &["process", "--image", "missing.pgm", "--db", "missing.kv"][..],
        &["montecarlo", "--n", "2", "--out", "mc", "--config", "bad.cfg"][..],
        &["build-catalog", "--in", "missing.txt", "--out", "db.kv"][..],
    ] {
        let out = opnav(d, args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "));
    }
    let err =
        String::from_utf8(opnav(d, &["montecarlo", "--n", "2", "--out", "mc", "--config", "bad.cfg"]).stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("bogus"));
}
