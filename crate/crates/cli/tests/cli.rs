use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use edrelax::casekit::{build_counterexample_case, serialize_case, serialize_case_with_forecast};
use edrelax::{
    Generator, Horizon, LmpForecast, LoadProfile, Network, NetworkCase, PriceModel, QuadraticCost,
    StorageDevice,
};
use tempfile::TempDir;

fn edrelax(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edrelax"))
        .args(args)
        .current_dir(dir)
        .env_remove("EDRELAX_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn one_bus(steps: usize, storages: usize) -> NetworkCase {
    NetworkCase {
        horizon: Horizon { steps, dt: 1.0 },
        network: Network::single_bus(),
        generators: vec![Generator::thermal(
            0,
            0.0,
            200.0,
            200.0,
            QuadraticCost::new(0.05, 20.0),
        )],
        storages: (0..storages)
            .map(|_| StorageDevice::constant(0, steps, 10.0, 20.0, 5.0, 0.95, 0.95, 0.0))
            .collect(),
        prices: PriceModel::neglected(storages),
        loads: LoadProfile {
            demand: vec![(0..steps).map(|t| 40.0 + 20.0 * t as f64).collect()],
        },
    }
}

fn counterexample(dir: &TempDir) -> PathBuf {
    write(
        dir,
        "ce.json",
        &serialize_case(&build_counterexample_case()),
    )
}

#[test]
fn solve_writes_csv_with_one_row_per_step() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let o = edrelax(
        &[
            "solve",
            case.to_str().unwrap(),
            "--csv",
            "d.csv",
            "--out",
            "sol.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,total_load,total_wind,total_p_ch,total_p_dc,net_storage_power,lambda"
    );
    assert_eq!(lines.count(), 4);
    let sol: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sol.json")).unwrap()).unwrap();
    assert_eq!(sol["schema"], "edrelax-solution/1");
    assert_eq!(sol["solution"]["status"], "optimal");
    assert_eq!(
        sol["solution"]["duals"]["lambda"].as_array().unwrap().len(),
        4
    );
}

#[test]
fn solve_streams_json_to_stdout() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let o = edrelax(&["solve", case.to_str().unwrap(), "--out", "-"], dir.path());
    assert_eq!(code(&o), 0);
    let sol: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(sol["schema"], "edrelax-solution/1");
    assert!(stderr(&o).contains("optimal"));
}

#[test]
fn infeasible_case_exits_two_with_diagnosis() {
    let dir = TempDir::new().unwrap();
    let mut case = build_counterexample_case();
    for d in &mut case.loads.demand[1] {
        *d = 180.0;
    }
    let path = write(&dir, "bad.json", &serialize_case(&case));
    let o = edrelax(&["solve", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("infeasible"), "{}", stderr(&o));
}

#[test]
fn verify_flags_counterexample_with_witnesses() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let o = edrelax(&["verify", case.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("storage 0 step 0"), "{}", stdout(&o));
}

#[test]
fn verify_reads_saved_solutions() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let o = edrelax(
        &["solve", case.to_str().unwrap(), "--out", "sol.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let o = edrelax(&["verify", "sol.json", "--tol", "100"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn storage_free_case_is_exact() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "plain.json", &serialize_case(&one_bus(3, 0)));
    let o = edrelax(
        &["verify", path.to_str().unwrap(), "--out", "-"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["report"]["max_product"], 0.0);
}

#[test]
fn check_group_a_fails_on_counterexample() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let o = edrelax(
        &[
            "check",
            case.to_str().unwrap(),
            "--group",
            "a",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("price margin"), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["satisfied"], false);
    assert_eq!(report["mode"], "a_posteriori");
}

#[test]
fn forecast_floor_is_printed() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let mut csv = String::from("bus,step,lmp_forecast\n");
    for b in 0..2 {
        for t in 0..4 {
            csv.push_str(&format!("{b},{t},20\n"));
        }
    }
    let forecast = write(&dir, "lmp.csv", &csv);
    let o = edrelax(
        &[
            "check",
            case.to_str().unwrap(),
            "--forecast",
            forecast.to_str().unwrap(),
            "--mape",
            "0.01",
        ],
        dir.path(),
    );
    assert!(
        stdout(&o).contains("price floor min 19.4000"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn incomplete_forecast_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let forecast = write(&dir, "lmp.csv", "bus,step,lmp_forecast\n0,0,20\n");
    let o = edrelax(
        &[
            "check",
            case.to_str().unwrap(),
            "--forecast",
            forecast.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 65);
    assert!(stderr(&o).contains("forecast missing"), "{}", stderr(&o));
}

#[test]
fn a_priori_without_forecast_is_rejected() {
    let dir = TempDir::new().unwrap();
    let case = counterexample(&dir);
    let o = edrelax(&["check", case.to_str().unwrap(), "--priori"], dir.path());
    assert_eq!(code(&o), 64);
}

#[test]
fn neglected_prices_with_positive_forecast_recommend_a_or_c() {
    let dir = TempDir::new().unwrap();
    let case = one_bus(3, 1);
    let forecast = LmpForecast {
        forecast: vec![vec![25.0, 26.0, 28.0]],
        mape: 0.01,
    };
    let path = write(
        &dir,
        "s2.json",
        &serialize_case_with_forecast(&case, Some(&forecast)),
    );
    let o = edrelax(&["check", path.to_str().unwrap(), "--out", "-"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["mode"], "a_priori");
    let group = report["group"].as_str().unwrap();
    assert!(group == "A" || group == "C", "{group}");
}

#[test]
fn oracle_reports_patterns_and_gaps() {
    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.json", &serialize_case(&one_bus(2, 1)));
    let o = edrelax(
        &["oracle", toy.to_str().unwrap(), "--out", "-", "--table"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["patterns_enumerated"], 4);
    assert_eq!(report["table"].as_array().unwrap().len(), 4);

    let case = counterexample(&dir);
    let o = edrelax(
        &["oracle", case.to_str().unwrap(), "--out", "-"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["comparison"]["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_budget_exceeded_exits_four() {
    let dir = TempDir::new().unwrap();
    let o = edrelax(&["gen", "ieee30", "--out", "ieee30.json"], dir.path());
    assert_eq!(code(&o), 0);
    let o = edrelax(&["oracle", "ieee30.json"], dir.path());
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("budget"));
}

#[test]
fn gen_writes_a_loadable_case_to_stdout() {
    let dir = TempDir::new().unwrap();
    let o = edrelax(&["gen", "counterexample"], dir.path());
    assert_eq!(code(&o), 0);
    let case = edrelax::casekit::parse_case(&o.stdout).unwrap();
    assert_eq!(case, build_counterexample_case());
}

#[test]
fn sweep_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = edrelax(
        &[
            "sweep",
            "--instances",
            "4",
            "--seed",
            "7",
            "--target",
            "satisfy-c",
        ],
        dir.path(),
    );
    let b = edrelax(
        &[
            "sweep",
            "--instances",
            "4",
            "--seed",
            "7",
            "--target",
            "satisfy-c",
        ],
        dir.path(),
    );
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    assert!(csv.starts_with(
        "instance,seed,buses,storages,steps,status,cond_a,cond_b,cond_c,max_product,exact,oracle_gap"
    ));
    assert_eq!(csv.lines().count(), 5);
    assert!(stderr(&a).contains("C 4/4 exact"), "{}", stderr(&a));
}

#[test]
fn input_errors_map_to_stable_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&edrelax(&["solve", "missing.json"], dir.path())), 66);
    assert_eq!(code(&edrelax(&["frobnicate"], dir.path())), 64);
    assert_eq!(code(&edrelax(&["--help"], dir.path())), 0);

    let broken = write(&dir, "broken.json", "{\"schema\": \"edrelax-case/1\"}");
    let o = edrelax(&["solve", broken.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 65);

    let case = counterexample(&dir);
    let o = edrelax(
        &["verify", case.to_str().unwrap(), "--tol", "0"],
        dir.path(),
    );
    assert_eq!(code(&o), 64);

    let o = Command::new(env!("CARGO_BIN_EXE_edrelax"))
        .args(["gen", "counterexample"])
        .env("EDRELAX_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn thread_cap_keeps_output_identical() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_edrelax"))
            .args(["sweep", "--instances", "3", "--seed", "11"])
            .env("EDRELAX_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run("1").stdout, run("2").stdout);
}

#[test]
fn ieee30_solves_to_a_96_row_dispatch() {
    let dir = TempDir::new().unwrap();
    let o = edrelax(&["gen", "ieee30", "--out", "ieee30.json"], dir.path());
    assert_eq!(code(&o), 0);
    let o = edrelax(
        &["solve", "ieee30.json", "--csv", "dispatch.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("dispatch.csv")).unwrap();
    assert_eq!(csv.lines().count(), 97);
}
