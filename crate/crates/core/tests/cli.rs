//! The `ogs` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ogs::icgen::{generate, IcKind, IcSpec};
use ogs::io::{load_snapshot, AnalysisTable};
use ogs::model::{preset, ModelKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ogs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ogs")).args(args).env_remove("OGS_OUT").output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn simulate(dir: &Path, tmax: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate", "--model", "quintic", "--n", "64", "--box-jeans", "64", "--ic", "waterbag", "--vparam", "2",
        "--tmax", tmax, "--seed", "3", "--out",
    ];
    args.push(dir.to_str().unwrap());
    args.extend_from_slice(extra);
    ogs(&args)
}

fn write_points(path: &Path, xs: &[f64]) {
    let mut t = AnalysisTable::new(["x"]);
    for &x in xs {
        t.push(vec![x]).unwrap();
    }
    t.write(fs::File::create(path).unwrap()).unwrap();
}

#[test]
fn zero_duration_run_writes_the_initial_condition() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), "0", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let snap = load_snapshot(&dir.path().join("snap_00000.tsv")).unwrap();
    let params = preset(ModelKind::Quintic, 64, 64.0).unwrap();
    let spec = IcSpec { kind: IcKind::Waterbag, n_particles: 64, box_length: 64.0, velocity_scale: 2.0, seed: 3 };
    let ic = generate(&spec, &params).unwrap();
    assert_eq!(snap.positions, ic.positions);
    assert_eq!(snap.velocities, ic.velocities);
    assert_eq!(snap.tau, 0.0);
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = simulate(dir.path(), "3", &["--snap-every", "1"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for k in 0..=3 {
        let name = format!("snap_{k:05}.tsv");
        let (x, y) = (fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        assert_eq!(x, y, "{name} differs");
    }
    assert!(!a.path().join("snap_00004.tsv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ogs"))
        .args(["simulate", "--model", "rf", "--n", "8", "--box-jeans", "8", "--vparam", "1", "--tmax", "0.5"])
        .env("OGS_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let last = load_snapshot(&dir.path().join("snap_00001.tsv")).unwrap();
    assert_eq!(last.tau, 0.5);
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ogs(&["simulate", "--bogus"]).status.code(), Some(2));
    assert_eq!(simulate(dir.path(), "-1", &[]).status.code(), Some(2));
    let out = ogs(&["simulate", "--model", "sideways", "--n", "8", "--box-jeans", "8", "--vparam", "1", "--tmax", "1", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "# ogs-snapshot v1\nmodel\tquintic\ngarbage\n").unwrap();
    let out = ogs(&["analyze", "dq", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let missing = dir.path().join("absent.tsv");
    assert_eq!(ogs(&["analyze", "corr", "--input", missing.to_str().unwrap()]).status.code(), Some(2));
    let no_x = dir.path().join("nox.tsv");
    fs::write(&no_x, "y\n1\n2\n").unwrap();
    assert_eq!(ogs(&["analyze", "dq", "--input", no_x.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn dq_of_uniform_points_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let xs: Vec<f64> = (0..1 << 16).map(|_| rng.random::<f64>()).collect();
    let input = dir.path().join("uniform.tsv");
    write_points(&input, &xs);
    let output = dir.path().join("dq.tsv");
    let out = ogs(&[
        "analyze", "dq", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap(),
        "--q", "0,1,2", "--min-mean-occupancy", "10",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("chosen"));
    let table = AnalysisTable::read(std::io::BufReader::new(fs::File::open(&output).unwrap())).unwrap();
    for d in table.column("D_q").unwrap() {
        assert!((d - 1.0).abs() < 0.03, "D_q = {d}");
    }
}

#[test]
fn correlation_of_a_clump_peaks_in_the_first_bin() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut xs: Vec<f64> = (0..4000).map(|_| rng.random_range(-1.0..1.0)).collect();
    xs.extend((0..200).map(|i| 0.1 + 1e-7 * i as f64));
    let input = dir.path().join("clump.tsv");
    write_points(&input, &xs);
    let out = ogs(&[
        "analyze", "corr", "--input", input.to_str().unwrap(), "--bin", "1e-4", "--r-max", "0.05", "--linear",
        "--window=-0.5:0.5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = AnalysisTable::read(out.stdout.as_slice()).unwrap();
    let c = table.column("C_r").unwrap();
    let rest = c[1..].iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    // Background points next to the clump add pairs in lumps of 200, so the
    // other bins are noisy; the clump still dominates.
    assert!(c[0] > 20.0 * rest, "first {} rest {rest}", c[0]);
}

#[test]
fn symmetric_cascade_bench_is_exact() {
    let out = ogs(&["bench-binomial", "--p", "0.5", "--levels", "12"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = AnalysisTable::read(out.stdout.as_slice()).unwrap();
    let errors = table.column("rel_error").unwrap();
    assert_eq!(errors.len(), 5);
    assert!(errors.iter().all(|e| *e < 1e-3), "{errors:?}");
}

#[test]
fn falpha_and_pointwise_run_on_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), "1", &[]).status.success());
    let snap = dir.path().join("snap_00001.tsv");
    let out = ogs(&["analyze", "falpha", "--input", snap.to_str().unwrap(), "--q=-1:2:0.5", "--min-decades", "0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = AnalysisTable::read(out.stdout.as_slice()).unwrap();
    let alpha = table.column("alpha").unwrap();
    assert!((3..=7).contains(&alpha.len()) && alpha.iter().all(|a| a.is_finite()), "{alpha:?}");
    let out = ogs(&["analyze", "pointwise", "--input", snap.to_str().unwrap(), "--r-min", "0.5", "--r-max", "8", "--centers", "16"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("median"));
}
