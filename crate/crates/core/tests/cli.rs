use std::collections::BTreeSet;
use std::io::Write as _;
use std::process::Command;

use evanescent::cli::{self, OPERATIONS};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("evanescent").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let (code, out, err) = run(&full);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

fn bundled_table_path() -> String {
    format!("{}/../../data/mesons.tbl", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn transit_headline() {
    let v = json(&["transit", "--n", "1.6", "--closure", "paper"]);
    assert!((v["speed_ratio"].as_f64().unwrap() - 4.7699).abs() < 5e-3);
}

#[test]
fn transit_full_prediction() {
    let v = json(&[
        "transit", "--n", "1.6", "--closure", "paper", "--rho", "1e28", "--sigma-model", "thomson", "--length", "10",
        "--tau1", "1e-9",
    ]);
    assert_eq!(v["free_path_source"], "scatterers");
    assert!((v["speed_ratio"].as_f64().unwrap() - 4.7699).abs() < 5e-3);
    assert!(v["group_index"].as_f64().unwrap() > 1.0);
    let (code, _, err) = run(&["transit", "--closure", "explicit", "--rho", "1", "--sigma", "1"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn transit_reads_medium_file() {
    let medium = temp_file("rho = 1e28\nsigma_model = thomson\nn = 1.6\n");
    let path = medium.path().to_str().unwrap();
    let v = json(&["transit", "--medium", path, "--length", "1"]);
    assert_eq!(v["n"], 1.6);
    assert!((v["free_path"].as_f64().unwrap() - 1.5032).abs() < 1e-3);
}

#[test]
fn particles_bundled_table() {
    let path = bundled_table_path();
    let v = json(&["particles", "--table", &path]);
    let products = v["products"].as_array().unwrap();
    assert!((products[0]["product"].as_f64().unwrap() - 0.4737).abs() < 1e-4);
    assert!((products[1]["product"].as_f64().unwrap() - 0.7771).abs() < 1e-4);
    let bound = &v["bounds"][0];
    assert!((bound["tau_bound"].as_f64().unwrap() - 3.47e-14).abs() < 1e-16);
    assert!((bound["tau_bound_published_factor"].as_f64().unwrap() - 5.38e-14).abs() < 1e-16);
    // the built-in copy is the same table
    let bundled = json(&["particles"]);
    assert_eq!(bundled["products"], v["products"]);
}

#[test]
fn particles_bad_table_is_parse_error() {
    let table = temp_file("K0 | -3.48e-12 | 0.896e-10 | short_lived\n");
    let (code, out, err) = run(&["particles", "--table", table.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("line 1, field 2") && err.contains("delta_m must be positive"), "{err}");
}

#[test]
fn transmutation_graph() {
    let v = json(&["particles", "transmute", "--species", "nu_e,nu_mu,nu_tau"]);
    let allowed: Vec<(String, String)> = v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["status"] == "allowed")
        .map(|e| (e["from"].as_str().unwrap().into(), e["to"].as_str().unwrap().into()))
        .collect();
    assert_eq!(allowed.len(), 3);
    assert!(allowed.contains(&("nu_e".into(), "nu_tau".into())));
    let (code, _, _) = run(&["particles", "transmute", "--species", "a:1,b:1"]);
    assert_eq!(code, 1);
    let v = json(&["particles", "transmute", "--species", "a:1,b:1", "--ties", "no-edge"]);
    assert_eq!(v["edges"].as_array().unwrap().len(), 0);
}

#[test]
fn neutrino_estimate_flags() {
    let v = json(&["particles", "neutrino", "--L-km", "1000", "--E-GeV", "1"]);
    assert!((v["delta_m2"].as_f64().unwrap() - 2e-3).abs() < 1e-15);
    let flags = v["step_log"].as_array().unwrap().iter().filter(|s| !s["flag"].is_null()).count();
    assert!(flags >= 3);
}

#[test]
fn mc_is_byte_identical() {
    let args = ["mc", "--ell", "1", "--jump", "3.7699", "--L", "100", "--walkers", "20000", "--seed", "42"];
    for format in ["json", "csv"] {
        let mut full = vec!["--format", format];
        full.extend_from_slice(&args);
        let (c1, a, _) = run(&full);
        let mut threaded = full.clone();
        threaded.extend_from_slice(&["--threads", "3"]);
        let (c2, b, _) = run(&threaded);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(a, b, "{format}");
    }
}

#[test]
fn mc_csv_columns() {
    let (code, out, _) = run(&[
        "--format", "csv", "mc", "--ell", "1", "--L", "20", "--walkers", "100", "--seed", "7", "--sweep-n", "1.2,1.6",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "seed,n_walkers,ell,jump,tau1,L,speed_ratio,stderr,mean_scatters");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("7,100,1,"));
}

#[test]
fn mc_requires_seed() {
    let (code, _, err) = run(&["mc", "--ell", "1", "--L", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("--seed"), "{err}");
}

#[test]
fn validation_and_parse_exit_codes() {
    assert_eq!(run(&["tau", "path", "--delta-omega", "0"]).0, 1);
    assert_eq!(run(&["medium", "free-path", "--rho", "-1"]).0, 1);
    assert_eq!(run(&["tau", "path", "--delta-omega", "abc"]).0, 2);
    assert_eq!(run(&["nonsense"]).0, 2);
    assert_eq!(run(&[]).0, 2);
}

#[test]
fn negative_numbers_are_values() {
    let v = json(&["tau", "path", "--delta-omega", "-2e9"]);
    assert!(v["formation_path"].as_f64().unwrap() > 0.0);
    let v = json(&["bounds", "min-time", "--delta-e", "-1e-3", "--kind", "decay"]);
    assert_eq!(v["minimal_times"][0]["advanced"], true);
}

#[test]
fn propagator_on_shell_reports_weight() {
    let k = 1.0;
    let omega = format!("{}", k * 2.997_924_58e8);
    let v = json(&["tau", "propagator", "--omega", &omega, "--k", "1"]);
    assert_eq!(v["on_shell"], true);
    assert!((v["tau1_delta_weight"].as_f64().unwrap() + std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn tabulated_response() {
    let t0 = 2e-9;
    let rows: String = (0..201)
        .map(|i| {
            let w = 1e9 + 1e6 * i as f64;
            format!("{w} {} {}\n", (w * t0).cos(), (w * t0).sin())
        })
        .collect();
    let f = temp_file(&format!("# omega re im\n{rows}"));
    let v = json(&["tau", "pair", "--response", f.path().to_str().unwrap(), "--omega", "1.1e9", "--step", "1e6"]);
    assert!((v["tau1"].as_f64().unwrap() - t0).abs() < 1e-3 * t0);
}

#[test]
fn rs_from_json_file() {
    let f = temp_file(r#"{"a": [[0, 1], [1, 0]], "b": [[0, [0, -1]], [[0, 1], 0]], "psi": [1, 0]}"#);
    let v = json(&["bounds", "rs", "--input", f.path().to_str().unwrap()]);
    assert_eq!(v["lhs"], 1.0);
    assert_eq!(v["rhs"], 1.0);
    let bad = temp_file("{not json");
    assert_eq!(run(&["bounds", "rs", "--input", bad.path().to_str().unwrap()]).0, 2);
}

#[test]
fn spreads_from_grid_files() {
    let grid = temp_file("1 1 1 3\n0\n0\n0\n-1 0 1\n1 2 1\n");
    let p = grid.path().to_str().unwrap();
    let v = json(&["bounds", "spreads", "--time-grid", p, "--energy-grid", p]);
    assert!((v["delta_t"].as_f64().unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn config_file_merges_under_flags() {
    let cfg = temp_file("# defaults\nell = 1\nL = 50\nwalkers = 500\nseed = 3\nformat = csv\n");
    let path = cfg.path().to_str().unwrap();
    let (code, out, err) = run(&["mc", "--config", path, "--seed", "9"]);
    assert_eq!(code, 0, "{err}");
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "9");
    assert_eq!(row[1], "500");
    assert_eq!(row[5], "50");

    let bad = temp_file("bogus = 1\n");
    let (code, _, err) = run(&["mc", "--config", bad.path().to_str().unwrap(), "--ell", "1", "--L", "1", "--seed", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn text_and_csv_formats() {
    let (_, text, _) = run(&["--format", "text", "bounds", "maxima", "--delta-e", "1e-6", "--count", "2"]);
    assert!(text.contains("[maxima]"));
    let (_, csv, _) = run(&["--format", "csv", "medium", "free-path", "--rho", "1e28"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "rho,sigma,sigma_model,free_path");
}

#[test]
fn json_numbers_round_trip() {
    let v = json(&["transit", "--n", "1.6"]);
    let ratio = v["speed_ratio"].as_f64().unwrap();
    assert_eq!(ratio, evanescent::medium::closure_speed_ratio(1.6).unwrap());
}

#[test]
fn every_operation_has_one_subcommand() {
    let expected: BTreeSet<&str> = [
        "temporal::temporal_pair",
        "temporal::photon_propagator_times",
        "temporal::mixed_formation_time",
        "temporal::renormalized_formation_time",
        "temporal::formation_path",
        "temporal::massive_temporal",
        "temporal::massive_formation_leading",
        "medium::free_path",
        "medium::tunneling_condition",
        "medium::marginal_detuning",
        "medium::wavelength_condition",
        "medium::resonant_cross_section",
        "medium::resonance_condition",
        "medium::transit_prediction",
        "medium::closure_speed_ratio",
        "transport::simulate",
        "transport::sweep",
        "uncertainty::minimal_time",
        "uncertainty::transition_probability",
        "uncertainty::transition_maxima",
        "uncertainty::rs_bound",
        "uncertainty::mt_projector_bound",
        "uncertainty::wigner_spreads",
        "particles::load_particle_table",
        "particles::uncertainty_product",
        "particles::lifetime_bound",
        "particles::allowed_transmutations",
        "particles::neutrino_mass_estimate",
    ]
    .into_iter()
    .collect();
    let listed: Vec<&str> = OPERATIONS.iter().map(|(op, _)| *op).collect();
    let unique: BTreeSet<&str> = listed.iter().copied().collect();
    assert_eq!(unique.len(), listed.len(), "an operation is listed twice");
    assert_eq!(unique, expected);
    for (op, sub) in OPERATIONS {
        let mut args: Vec<&str> = sub.split(' ').collect();
        args.push("--help");
        let (code, out, _) = run(&args);
        assert_eq!(code, 0, "{op} -> {sub}");
        assert!(out.contains("Usage:"), "{sub}");
    }
}

#[test]
fn binary_exit_codes_and_env_format() {
    let exe = env!("CARGO_BIN_EXE_evanescent");
    let ok = Command::new(exe)
        .args(["transit", "--n", "1.6"])
        .env("EVANESCENT_FORMAT", "csv")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.starts_with("n,closure,jump_ratio,speed_ratio\n"), "{text}");
    let explicit = Command::new(exe)
        .args(["--format", "json", "transit", "--n", "1.6"])
        .env("EVANESCENT_FORMAT", "csv")
        .output()
        .unwrap();
    assert!(String::from_utf8(explicit.stdout).unwrap().starts_with('{'));

    let parse = Command::new(exe).args(["mc"]).output().unwrap();
    assert_eq!(parse.status.code(), Some(2));
    assert!(parse.stdout.is_empty());
    let invalid = Command::new(exe).args(["tau", "path", "--delta-omega", "0"]).output().unwrap();
    assert_eq!(invalid.status.code(), Some(1));
    assert!(!invalid.stderr.is_empty());
}
