use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn matdyn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matdyn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn thresholds_csv_holds_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"thresholds": {"alphas": [0, 0.1]}, "plots": false}"#,
    );
    let out = matdyn(
        &["thresholds", "--config", &cfg, "--out", "res"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("res/thresholds.csv"));
    assert_eq!(
        header,
        [
            "alpha",
            "yp_star",
            "yp_dstar",
            "yp_dstar_tilde",
            "tangency_I"
        ]
    );
    assert_eq!(rows.len(), 2);
    let v: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!((v[0][1] - 5673.0).abs() <= 1.0 && (v[1][1] - 588.0).abs() <= 1.0);
    assert!((v[0][2] / 987735.0 - 1.0).abs() <= 1e-3 && (v[1][2] / 102462.0 - 1.0).abs() <= 1e-3);
    assert!(v.iter().all(|r| r[3] > r[2]));
    assert!(!dir.path().join("res/thresholds.svg").exists());
}

#[test]
fn floats_are_written_with_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"thresholds": {"alphas": [0.1]}}"#,
    );
    let out = matdyn(&["thresholds", "--config", &cfg, "--out", "."], dir.path());
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("thresholds.csv"));
    let mantissa = rows[0][1]
        .split('e')
        .next()
        .unwrap()
        .replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{}", rows[0][1]);
    assert!(fs::read_to_string(dir.path().join("thresholds.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn simulation_from_extinction_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"control": {"Y_P": 1000, "alpha": 0.05},
            "solver": {"t_end": 100},
            "simulate": {"initial_state": [0, 0, 0, 0], "output_step": 10}}"#,
    );
    let out = matdyn(&["simulate", "--config", &cfg, "--out", "sim"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("sim/trajectory.csv"));
    assert_eq!(header, ["t", "I", "Y", "F", "M", "regime"]);
    assert_eq!(rows.len(), 11);
    for r in &rows {
        for x in &r[1..5] {
            assert_eq!(x.parse::<f64>().unwrap(), 0.0);
        }
        assert_eq!(r[5], "scarcity");
    }
    assert_eq!(rows.last().unwrap()[0].parse::<f64>().unwrap(), 100.0);
}

#[test]
fn uncontrolled_simulation_approaches_endemic_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"control": {"Y_P": 1e6}, "solver": {"t_end": 3000}, "simulate": {"variant": "full-no-control"}}"#,
    );
    let out = matdyn(&["simulate", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = read_csv(&dir.path().join("out/trajectory.csv"));
    let last: Vec<f64> = rows.last().unwrap()[1..5]
        .iter()
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((last[3] - 1497.92).abs() < 0.01, "{last:?}");
    assert_eq!(rows.last().unwrap()[5], "abundance");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"parameters": {"r": -0.1}}"#);
    let out = matdyn(&["equilibria", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("parameters.r"), "{}", stderr(&out));
    assert!(!dir.path().join("out").exists());

    let bad = write(dir.path(), "bad.json", "{\"control\": ");
    let out = matdyn(&["equilibria", "--config", &bad], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"));
}

#[test]
fn numerical_failure_exits_with_two_and_flags_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"solver": {"max_steps": 3}}"#);
    let out = matdyn(&["simulate", "--config", &cfg, "--out", "sim"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(dir.path().join("sim/trajectory.failed").exists());
    let (_, rows) = read_csv(&dir.path().join("sim/trajectory.csv"));
    assert!(!rows.is_empty() && rows.len() <= 5);
}

#[test]
fn equilibria_lists_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"control": {"Y_P": 100000, "alpha": 0}}"#,
    );
    let out = matdyn(&["equilibria", "--config", &cfg], dir.path());
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("out/equilibria.csv"));
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["TE", "EE_MD1", "EE_MD2"]);
    assert_eq!(rows[2][6], "stable");
    assert_eq!(rows[1][6], "unstable");
}

#[test]
fn run_dispatches_on_experiment_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"experiment": "bifurcation", "bifurcation": {"points": 5, "yp_min": 1000, "yp_max": 1e6}}"#,
    );
    let out = matdyn(&["run", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("out/bifurcation.csv"));
    assert_eq!(header, ["yp", "label", "yf_value", "stability"]);
    assert!(rows.len() >= 5);

    let none = write(dir.path(), "none.json", "{}");
    assert_eq!(
        matdyn(&["run", "--config", &none], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn small_basin_grid_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"control": {"Y_P": 5500, "alpha": 0.1},
            "basins": {"first_points": 3, "second_points": 4},
            "verify_bounds": {"initial_states": [[10, 5, 5, 5]], "t_end": 100}}"#,
    );
    let out = matdyn(&["basins", "--config", &cfg, "--workers", "2"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("out/basins.csv"));
    assert_eq!(header, ["coord1", "coord2", "label"]);
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().any(|r| r[2] == "TE"));

    let out = matdyn(&["verify-bounds", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = read_csv(&dir.path().join("out/bounds.csv"));
    assert_eq!(rows[0][5], "true");
}

#[test]
fn unknown_repro_id_lists_the_available_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = matdyn(&["repro", "fig99"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("fig99") && err.contains("ee-star") && err.contains("reduction49"),
        "{err}"
    );
    let listed = matdyn(&["repro"], dir.path());
    assert!(stdout(&listed).contains("fig12"));
}

#[test]
fn repro_ee_star_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = matdyn(&["repro", "ee-star"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("(992, 319, 1407, 1498)") && text.contains("overall PASS"),
        "{text}"
    );
    assert!(dir.path().join("out/ee-star/equilibria.csv").exists());
}

#[test]
fn repro_n0_reports_the_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = matdyn(&["repro", "n0"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("N0 = 122.566"), "{text}");
    let verdict = fs::read_to_string(dir.path().join("out/n0/verdict.txt")).unwrap();
    assert!(verdict.contains("PASS closed form and spectral radius agree"));
}

#[test]
fn repro_fig6_draws_solid_and_dotted_branches() {
    let dir = tempfile::tempdir().unwrap();
    let out = matdyn(&["repro", "fig6"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("overall PASS"), "{}", stdout(&out));
    let svg = fs::read_to_string(dir.path().join("out/fig6/bifurcation.svg")).unwrap();
    assert!(
        svg.contains("stroke-dasharray")
            && svg.contains("EE_MD1 (unstable)")
            && svg.contains("EE_MD2 (stable)")
    );
    let (_, rows) = read_csv(&dir.path().join("out/fig6/bifurcation.csv"));
    assert!(rows.iter().any(|r| r[1] == "EE_sharp" && r[3] == "stable"));
}

#[test]
fn repro_fig12_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = matdyn(&["repro", "fig12", "--out", "a"], dir.path());
    let b = matdyn(
        &["repro", "fig12", "--out", "b", "--workers", "1"],
        dir.path(),
    );
    assert_eq!(stdout(&a).replace("a/", ""), stdout(&b).replace("b/", ""));
    let read = |d: &str| fs::read(dir.path().join(d).join("fig12/gap.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let (_, rows) = read_csv(&dir.path().join("a/fig12/gap.csv"));
    let gap_at_01: f64 = rows
        .iter()
        .find(|r| r[0].parse::<f64>().unwrap() == 0.1)
        .unwrap()[3]
        .parse()
        .unwrap();
    assert!((1e4..2e4).contains(&gap_at_01), "{gap_at_01}");
}

#[test]
fn help_documents_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&matdyn(&["--help"], dir.path()));
    for cols in [
        "t, I, Y, F, M, regime",
        "alpha, yp_star, yp_dstar, yp_dstar_tilde, tangency_I",
        "yp, label, yf_value, stability",
        "coord1, coord2, label",
    ] {
        assert!(text.contains(cols), "missing {cols}");
    }
}

#[test]
fn schema_subcommand_prints_the_shipped_schema() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&matdyn(&["schema"], dir.path()));
    assert_eq!(text, matdyn_cli::config::CONFIG_SCHEMA);
}
