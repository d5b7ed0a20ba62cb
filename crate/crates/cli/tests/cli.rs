use std::path::PathBuf;
use std::process::{Command, Output};

fn ssalt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssalt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("ssalt-cli-{}-{name}", std::process::id()))
}

fn write(name: &str, contents: &str) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn empty_dataset_is_a_parse_error() {
    let path = write("empty.txt", "");
    let out = ssalt(&["fit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn ill_posed_dataset_has_its_own_exit_code() {
    // risk 2 never fails under the first stress level
    let path = write(
        "ill_posed.txt",
        "N = 20\ntau1 = 2\ntau2 = 4\nstress = 1, 2\nx0 = 0\nrisks = 2\n1, 3, 0\n2, 2, 0\n3, 2, 2\n4, 1, 3\n",
    );
    let out = ssalt(&["fit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_file_is_a_generic_error() {
    let out = ssalt(&["fit", scratch("does-not-exist").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_output_is_byte_identical_across_runs() {
    let a_json = scratch("fit-a.json");
    let b_json = scratch("fit-b.json");
    let a = ssalt(&[
        "fit",
        "--bundled",
        "electronic-devices",
        "--out",
        a_json.to_str().unwrap(),
    ]);
    let b = ssalt(&[
        "fit",
        "--bundled",
        "electronic-devices",
        "--out",
        b_json.to_str().unwrap(),
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read(&a_json).unwrap(), std::fs::read(&b_json).unwrap());
}

#[test]
fn fit_json_reports_every_beta() {
    let json = scratch("fit-betas.json");
    let out = ssalt(&[
        "fit",
        "--bundled",
        "electronic-devices",
        "--beta",
        "0",
        "--beta",
        "0.5",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let fits = doc["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    assert_eq!(fits[1]["beta"], 0.5);
    assert_eq!(fits[0]["params"].as_array().unwrap().len(), 4);
    assert_eq!(fits[0]["covariance"].as_array().unwrap().len(), 4);
    assert_eq!(doc["dataset"]["sample_size"], 35);
}

#[test]
fn characterize_prints_table_blocks() {
    let json = scratch("characterize.json");
    let out = ssalt(&[
        "characterize",
        "--bundled",
        "electronic-devices",
        "--t0",
        "4",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    for needle in ["MTTF", "R(4)", "median", "transformed CI"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 18);
    let mttf = rows[0]["estimate"]["value"].as_f64().unwrap();
    let lower = rows[0]["estimate"]["ci_transformed"]["lower"].as_f64().unwrap();
    assert!(lower > 0.0 && lower < mttf);
}

#[test]
fn time_scale_rescales_echoed_times() {
    let path = write(
        "hours.txt",
        "N = 35\ntau1 = 500\ntau2 = 600\ntemperatures = 293, 353\nreference_temperature = 293\nrisks = 2\n\
         200, 2, 5\n300, 6, 0\n500, 2, 1\n525, 2, 6\n550, 2, 4\n600, 1, 0\n",
    );
    let json = scratch("hours.json");
    let out = ssalt(&[
        "characterize",
        path.to_str().unwrap(),
        "--time-scale",
        "100",
        "--beta",
        "0",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["dataset"]["tau1"], 5.0);
    assert_eq!(doc["dataset"]["time_scale"], 100.0);
    let bundled = ssalt(&["characterize", "--bundled", "electronic-devices", "--beta", "0"]);
    assert_eq!(stdout(&bundled), stdout(&out));
}

#[test]
fn bootstrap_is_reproducible_for_a_seed() {
    let args = [
        "bootstrap",
        "--bundled",
        "electronic-devices",
        "--beta",
        "0",
        "--B",
        "200",
        "--seed",
        "7",
    ];
    let a = ssalt(&args);
    let b = ssalt(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("BCa"));
}

#[test]
fn sensitivity_and_simulate_read_scenario_files() {
    let scenario = write(
        "scenario.txt",
        "epsilon = 0, 0.2\ncontamination_intervals = 2, 3\nreplications = 20\nbetas = 0, 1\nseed = 11\n",
    );
    let out = ssalt(&[
        "sensitivity",
        "--scenario",
        scenario.to_str().unwrap(),
        "--beta",
        "0",
        "--beta",
        "1",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("self-standardized"));

    let json = scratch("sim.json");
    let out = ssalt(&["simulate", scenario.to_str().unwrap(), "--out", json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["mse"].as_array().unwrap().len(), 4);
    assert_eq!(doc["coverage"].as_array().unwrap().len(), 8);
}

#[test]
fn bad_scenario_key_reports_its_line() {
    let scenario = write("bad-scenario.txt", "# comment\nreplications = 10\nwidth = 3\n");
    let out = ssalt(&["simulate", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
