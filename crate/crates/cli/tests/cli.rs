use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eipack"));
    c.env_remove("EIPACK_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn path_str(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_reports() {
    let o = run(&["bounds", "--d", "8", "--r", "3", "--n", "5"]);
    assert_eq!(code(&o), 0);
    let v = report(&o);
    assert_eq!(v["bounds"]["case_label"], "IV");
    assert_eq!(v["bounds"]["eitff_excluded"], true);
    assert_eq!(v["tolerances"]["rank_rel"], 1e-8);

    let v = report(&run(&["bounds", "--d", "4", "--r", "2", "--n", "4"]));
    assert_eq!(v["counting"]["k3"], 4);
    assert_eq!(v["radon_hurwitz"]["R"], 2);

    assert_eq!(code(&run(&["bounds", "--d", "2", "--r", "3", "--n", "2"])), 2);
    assert_eq!(code(&run(&["bounds", "--d", "8"])), 2);
}

#[test]
fn table_rows() {
    let lines = |args: &[&str]| stdout(&run(args)).lines().count() - 1;
    assert_eq!(lines(&["table", "--dmax", "29"]), 36);
    assert_eq!(lines(&["table", "--dmax", "8"]), 1);
    assert_eq!(lines(&["table", "--dmax", "29", "--naimark"]), 72);
    assert_eq!(lines(&["table", "--dmax", "29", "--complete"]), 39);
    assert!(lines(&["table", "--dmax", "30"]) > 36);
    let out = stdout(&run(&["table", "--dmax", "8"]));
    assert_eq!(out, "d,r,n,case\n8,3,5,IV\n");
    assert_eq!(code(&run(&["table", "--dmax", "7"])), 2);
}

#[test]
fn construct_eitff2r_round_trip() {
    let file = tmp("eitff_c_8_4_8.json");
    let o = run(&["construct", "eitff2r", "--r", "4", "--field", "C", "--out", path_str(&file)]);
    assert_eq!(code(&o), 0);
    let built = report(&o);
    assert_eq!(built["sequence"]["n"], 8);
    assert_eq!(built["certificate"]["is_eitff"], true);
    assert_eq!(built["dim_kn"]["satisfied"], true);
    assert_eq!(built["provenance"]["operation"], "eitff2r");

    let o = run(&["verify", path_str(&file), "--expect-eitff", "--expect-dim-kn-eq-n"]);
    assert_eq!(code(&o), 0);
    let checked = report(&o);
    assert_eq!(checked["certificate"], built["certificate"]);
    assert_eq!(checked["corner"]["dims"].as_array().unwrap().last().unwrap(), 8);
}

#[test]
fn construct_eitff2r_rejects_n() {
    assert_eq!(code(&run(&["construct", "eitff2r", "--r", "3", "--n", "6", "--field", "C"])), 2);
    let v = report(&run(&["construct", "eitff2r", "--r", "3", "--field", "C"]));
    assert_eq!(v["sequence"]["n"], 4);
    assert_eq!(v["sequence"]["d"], 6);
}

#[test]
fn construct_ei3() {
    let v = report(&run(&["construct", "ei3", "--d", "5", "--r", "2", "--alpha", "0.5"]));
    assert_eq!(v["sequence"]["field"], "C");
    assert!((v["certificate"]["alpha"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((v["certificate"]["coherence"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(code(&run(&["construct", "ei3", "--d", "5", "--r", "2"])), 2);
}

#[test]
fn construct_counterexample() {
    let file = tmp("counterexample_r3.json");
    let o = run(&["construct", "counterexample", "--r", "3", "--field", "R", "--out", path_str(&file)]);
    assert_eq!(code(&o), 0);
    let v = report(&o);
    assert_eq!(v["certificate"]["is_eitff"], true);
    assert_eq!(v["dim_kn"]["dims"][2], 6);
    assert_eq!(v["dim_kn"]["satisfied"], false);

    let o = run(&["verify", path_str(&file), "--expect-dim-kn-eq-n"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dim_kn_eq_n"));
    assert_eq!(code(&run(&["verify", path_str(&file), "--expect-eitff"])), 0);
    assert_eq!(code(&run(&["construct", "counterexample", "--r", "4"])), 1);
}

#[test]
fn unsupported_parameters_exit_one() {
    assert_eq!(code(&run(&["construct", "eitff2r", "--r", "16", "--field", "R"])), 1);
    assert_eq!(code(&run(&["construct", "ei3", "--d", "4", "--r", "2", "--alpha", "0.5"])), 1);
}

#[test]
fn derived_constructions() {
    let triv = tmp("trivial_r_2_2_3.json");
    assert_eq!(code(&run(&["construct", "trivial", "--r", "2", "--n", "3", "--out", path_str(&triv)])), 0);
    let v = report(&run(&["construct", "naimark", "--input", path_str(&triv)]));
    assert_eq!(v["sequence"]["d"], 4);
    assert_eq!(v["certificate"]["is_eitff"], true);
    assert!((v["certificate"]["alpha"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let v = report(&run(&["construct", "hoggar", "--r", "1"]));
    assert_eq!((v["sequence"]["field"].clone(), v["sequence"]["d"].clone()), ("R".into(), 4.into()));
    assert_eq!(v["certificate"]["is_eitff"], true);

    let real = tmp("eitff_r_4_2_4.json");
    assert_eq!(code(&run(&["construct", "eitff2r", "--r", "2", "--out", path_str(&real)])), 0);
    let v = report(&run(&["construct", "dsum", "--input", path_str(&real), "--input", path_str(&real)]));
    assert_eq!(v["sequence"]["d"], 8);
    assert_eq!(v["certificate"]["is_eitff"], true);
    assert_eq!(code(&run(&["construct", "dsum", "--input", path_str(&real)])), 2);
    assert_eq!(code(&run(&["construct", "hoggar", "--input", path_str(&real)])), 2);
}

#[test]
fn seeds_pick_the_orientation() {
    let canonical = report(&run(&["construct", "eitff2r", "--r", "4"]));
    let seeded = report(&run(&["construct", "eitff2r", "--r", "4", "--seed", "7"]));
    assert_eq!(seeded["certificate"]["is_eitff"], true);
    assert_eq!(seeded["provenance"]["parameters"]["seed"], 7);
    assert_eq!(canonical["provenance"]["parameters"]["seed"], 0);

    let a = tmp("seed_env.json");
    let b = tmp("seed_flag.json");
    let o = bin()
        .args(["construct", "eitff2r", "--r", "2", "--out", path_str(&a)])
        .env("EIPACK_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["construct", "eitff2r", "--r", "2", "--seed", "11", "--out", path_str(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn verify_input_errors() {
    let file = tmp("corrupt.json");
    assert_eq!(code(&run(&["construct", "trivial", "--r", "1", "--n", "2", "--out", path_str(&file)])), 0);
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    v["isometries"][0][0][0] = 3.0.into();
    std::fs::write(&file, v.to_string()).unwrap();
    let o = run(&["verify", path_str(&file)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotIsometry"));

    let garbage = tmp("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(code(&run(&["verify", path_str(&garbage)])), 2);
    assert_eq!(code(&run(&["verify", path_str(&tmp("missing.json"))])), 2);
}

#[test]
fn verify_explicit_index_set() {
    let file = tmp("eitff_r_4_2_4_j.json");
    assert_eq!(code(&run(&["construct", "eitff2r", "--r", "2", "--out", path_str(&file)])), 0);
    let o = run(&["verify", path_str(&file), "--J", "1,2,4", "--corner-max", "2"]);
    assert_eq!(code(&o), 0);
    let v = report(&o);
    assert_eq!(v["corner_j"]["indices"], serde_json::json!([0, 1, 3]));
    assert_eq!(v["corner_j"]["dim"], 4);
    assert_eq!(v["corner"]["dims"], serde_json::json!([8, 6]));
    assert_eq!(code(&run(&["verify", path_str(&file), "--J", "5"])), 2);
}

#[test]
fn ingested_formula_failures_are_warnings() {
    // three copies of one plane: alpha = 1, so the corner formulas do not apply
    let file = tmp("repeated.json");
    let doc = serde_json::json!({
        "schema_version": 1, "field": "R", "d": 2, "r": 1, "n": 3,
        "isometries": [[[1.0], [0.0]], [[1.0], [0.0]], [[1.0], [0.0]]]
    });
    std::fs::write(&file, doc.to_string()).unwrap();
    let o = run(&["verify", path_str(&file)]);
    assert_eq!(code(&o), 0);
    assert!(!report(&o)["warnings"].as_array().unwrap().is_empty());
    assert_eq!(code(&run(&["verify", path_str(&file), "--expect-eitff"])), 1);
}

#[test]
fn corner_command() {
    let file = tmp("eitff_c_2_1_4.json");
    assert_eq!(code(&run(&["construct", "eitff2r", "--r", "1", "--field", "C", "--out", path_str(&file)])), 0);
    let v = report(&run(&["corner", path_str(&file)]));
    assert_eq!(v["corner"]["dim"], 4);
    assert_eq!(v["corner"]["basis"].as_array().unwrap().len(), 4);
    let v = report(&run(&["corner", path_str(&file), "--J", "2"]));
    assert_eq!(v["corner"]["dim"], 4);
}

#[test]
fn plotdata_csv() {
    let out = stdout(&run(&["plotdata", "--nmax", "8", "--grid", "400"]));
    let header = out.lines().next().unwrap();
    assert_eq!(header, "x,spark,welch_2,welch_3,welch_4,welch_5,welch_6,welch_7,welch_8,marker");
    assert!(!out.contains('\r'));
    let markers: Vec<(f64, f64, String)> = out
        .lines()
        .skip(1)
        .filter(|l| !l.ends_with(','))
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            (cells[0].parse().unwrap(), cells[1].parse().unwrap(), cells.last().unwrap().to_string())
        })
        .collect();
    let has = |x: f64, y: f64, kind: &str| {
        markers.iter().any(|(mx, my, k)| (mx - x).abs() < 1e-12 && (my - y).abs() < 1e-12 && k == kind)
    };
    assert!(has(2.5, 0.5, "filled"));
    assert!(has(27.0 / 7.0, 1.0 / 3.0, "open"));
    assert!(has(16.0 / 7.0, 0.5, "x"));

    let file = tmp("plot.csv");
    assert_eq!(code(&run(&["plotdata", "--nmax", "4", "--grid", "6", "--out", path_str(&file)])), 0);
    assert!(std::fs::read_to_string(&file).unwrap().starts_with("x,spark,welch_2,welch_3,welch_4,marker\n"));
}

#[test]
fn tolerance_flags_are_reported() {
    let v = report(&run(&["--tol-rank", "1e-7", "bounds", "--d", "8", "--r", "3", "--n", "5", "--tol-res", "1e-8"]));
    assert_eq!(v["tolerances"]["rank_rel"], 1e-7);
    assert_eq!(v["tolerances"]["residual_abs"], 1e-8);
}
