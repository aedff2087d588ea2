use std::fs;
use std::path::Path;

use harmtile::cli::run;
use serde_json::Value;

fn call(args: &[&str], out: &Path) -> i32 {
    let mut all = vec!["harmtile"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", out.to_str().unwrap()]);
    run(all)
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_envelope() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(call(&["solve", "--input", "FIX-QUAD"], dir.path()), 0);
    let doc = read(&dir.path().join("solution.json"));
    assert!(doc["version"].is_string());
    assert_eq!(doc["config"]["command"], "solve");
    let e = doc["result"]["energy"].as_f64().unwrap();
    assert!((e - 13.0 / 11.0).abs() < 1e-12);
}

#[test]
fn every_command_runs_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    for fixture in ["FIX-QUAD", "FIX-ANN", "FIX-PANTS2"] {
        for cmd in ["index", "decompose", "tile", "verify"] {
            assert_eq!(
                call(&[cmd, "--input", fixture], dir.path()),
                0,
                "{cmd} {fixture}"
            );
        }
    }
    assert!(dir.path().join("surface.json").exists());
    assert!(fs::read_dir(dir.path()).unwrap().any(|e| e
        .unwrap()
        .path()
        .extension()
        .is_some_and(|x| x == "svg")));
}

#[test]
fn gen_round_trips_through_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(call(&["gen", "--input", "RANDOM:11:annulus"], a.path()), 0);
    assert_eq!(call(&["gen", "--input", "RANDOM:11:annulus"], b.path()), 0);
    let fa = a.path().join("RANDOM-11-annulus.json");
    let text = fs::read_to_string(&fa).unwrap();
    assert_eq!(
        text,
        fs::read_to_string(b.path().join("RANDOM-11-annulus.json")).unwrap()
    );
    let out = tempfile::tempdir().unwrap();
    assert_eq!(
        call(&["verify", "--input", fa.to_str().unwrap()], out.path()),
        0
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        call(&["solve", "--input", "NO-SUCH-FIXTURE"], dir.path()),
        2
    );
    assert_eq!(
        call(
            &["tile", "--input", "FIX-QUAD", "--raster", "10"],
            dir.path()
        ),
        2
    );
    assert_eq!(
        call(
            &["solve", "--input", "FIX-QUAD", "--tol-rel", "-1"],
            dir.path()
        ),
        2
    );
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        call(&["solve", "--input", bad.to_str().unwrap()], dir.path()),
        2
    );
    assert_eq!(run(["harmtile", "frobnicate"]), 2);
}
