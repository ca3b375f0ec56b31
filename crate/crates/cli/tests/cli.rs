use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn spnn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spnn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SPNN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> PathBuf {
    let o = spnn(args, out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let line = stdout
        .lines()
        .find(|l| l.trim_start().starts_with("wrote "))
        .expect("wrote line");
    PathBuf::from(line.trim_start().trim_start_matches("wrote "))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn device_sweep_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ok(&["device-sweep", "--set", "trials=200"], tmp.path());
    let (header, rows) = read_csv(&dir.join("device-sweep.csv"));
    assert_eq!(header, ["theta", "il_o1_db", "il_o2_db", "xp_o1_dbm", "xp_o2_dbm"]);
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[100][0].parse::<f64>().unwrap(), std::f64::consts::PI);
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["trials"], 200);
    assert_eq!(cfg["gain_db"], 17.0);
}

#[test]
fn layer_stats_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["layer-stats", "--seed", "11", "--set", "trials=100"];
    let da = ok(&args, a.path());
    let db = ok(&args, b.path());
    for f in ["layer-stats.csv", "layer-stats-summary.csv", "config.json"] {
        assert_eq!(
            std::fs::read(da.join(f)).unwrap(),
            std::fs::read(db.join(f)).unwrap(),
            "{f}"
        );
    }
    let (_, rows) = read_csv(&da.join("layer-stats.csv"));
    assert_eq!(rows.len(), 8);
    let dc = ok(&["layer-stats", "--seed", "12", "--set", "trials=100"], a.path());
    assert_ne!(da, dc, "seed is part of the output key");
}

#[test]
fn network_grid_has_twelve_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ok(&["network-stats", "--set", "networks=1"], tmp.path());
    let (header, rows) = read_csv(&dir.join("network-stats.csv"));
    assert_eq!(rows.len(), 12);
    let mzi = header.iter().position(|h| h == "mzi_count").unwrap();
    assert_eq!(rows[11][0], "64");
    assert_eq!(rows[11][mzi], (3 * 64 * 63 + 3 * 64).to_string());
}

#[test]
fn penalty_and_compile() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ok(
        &["power-penalty", "--set", "n=4", "--set", "m=2", "--set", "networks=2"],
        tmp.path(),
    );
    let (_, rows) = read_csv(&dir.join("power-penalty.csv"));
    assert_eq!(rows.len(), 8);
    let dir = ok(
        &["compile", "--set", "n=4", "--set", "m=2", "--set", "networks=1"],
        tmp.path(),
    );
    let layout: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("layout.json")).unwrap()).unwrap();
    assert_eq!(layout.as_array().unwrap().len(), 2);
    let (_, rows) = read_csv(&dir.join("placements.csv"));
    assert_eq!(rows.len(), 2 * (4 * 3 + 4));
}

#[test]
fn weight_file_network() {
    let tmp = tempfile::tempdir().unwrap();
    let w = tmp.path().join("w.json");
    let eye = r#"{"rows": 2, "cols": 2, "data": [[1, 0], [0, 0], [0, 0], [1, 0]]}"#;
    std::fs::write(&w, format!("[{eye}, {eye}]")).unwrap();
    let set = format!(
        "weights={{\"source\":\"file\",\"path\":{}}}",
        serde_json::Value::String(w.display().to_string())
    );
    let dir = ok(&["power-penalty", "--set", &set], tmp.path());
    let (_, rows) = read_csv(&dir.join("power-penalty.csv"));
    assert_eq!(rows.len(), 2);
}

#[test]
fn train_then_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ok(&["train", "--set", "epochs=3"], tmp.path());
    let (_, curve) = read_csv(&dir.join("loss-curve.csv"));
    assert_eq!(curve.len(), 3);
    let provenance = std::fs::read_to_string(dir.join("dataset.json")).unwrap();
    assert!(provenance.contains("fft2d-lowfreq-block-unitnorm/1"));
    let model = dir.join("model.json");
    let set_model = format!("model={}", serde_json::Value::String(model.display().to_string()));

    let lossless = [
        "--set",
        "alpha_L_db=0",
        "--set",
        "alpha_m_db=0",
        "--set",
        "alpha_p_db_per_cm=0",
    ];
    let mut args = vec!["accuracy", "--set", &set_model];
    args.extend(lossless);
    let d = ok(&args, tmp.path());
    let (h, rows) = read_csv(&d.join("accuracy.csv"));
    let acc = h.iter().position(|x| x == "accuracy_pct").unwrap();
    let nom = h.iter().position(|x| x == "nominal_pct").unwrap();
    assert_eq!(rows[0][acc], rows[0][nom]);

    let d = ok(
        &["loss-sweep", "--set", &set_model, "--set", "sweep_points=3"],
        tmp.path(),
    );
    assert_eq!(read_csv(&d.join("loss-sweep.csv")).1.len(), 9);
    let d = ok(
        &["joint-sample", "--set", &set_model, "--set", "joint_instances=4"],
        tmp.path(),
    );
    assert_eq!(read_csv(&d.join("joint-sample.csv")).1.len(), 4);
    let d = ok(
        &[
            "tolerance",
            "--set",
            &set_model,
            "--set",
            "tolerance_curve_points=2",
            "--set",
            "tolerance_samples=5",
        ],
        tmp.path(),
    );
    let (_, rows) = read_csv(&d.join("tolerance.csv"));
    assert!(rows.len() >= 5);
    let d = ok(
        &[
            "xtalk-grid",
            "--set",
            &set_model,
            "--set",
            "xb_grid=[-30,-20]",
            "--set",
            "xc_grid=[-25,-18]",
        ],
        tmp.path(),
    );
    assert_eq!(read_csv(&d.join("xtalk-grid.csv")).1.len(), 3);
}

#[test]
fn bad_configs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spnn(
        &["device-sweep", "--set", "xB_db=-10", "--set", "xC_db=-20"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = spnn(&["device-sweep", "--set", "thetas=5"], tmp.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("thetas"));
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, "{\n  \"n\": 8,\n  \"m\": ,\n}").unwrap();
    let o = spnn(&["device-sweep", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("line 3"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    std::fs::write(&cfg, r#"{"experiment": "train"}"#).unwrap();
    let o = spnn(&["device-sweep", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolved configuration"));
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_spnn"))
        .args(["device-sweep", "--set", "trials=10", "--set", "theta_points=3"])
        .env("SPNN_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let entries: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn dry_run_echoes_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spnn(&["accuracy", "--dry-run", "--seed", "5"], tmp.path());
    let cfg: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["xC_db"], -18.0);
}
