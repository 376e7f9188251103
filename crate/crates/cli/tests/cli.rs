use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linkpred"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_SCENE: &str = r#"
duration_s = 130.0
frame_rate = 10.0
image_width = 128
image_height = 72
noise_stddev_db = 0.5
los_corridor_m = 0.6
rng_seed = 1
rx_position = { x = 4.0, y = 6.0 }
camera = { x_min = -1.0, x_max = 9.0, z_max = 2.5 }

[[tx_points]]
name = "A"
position = { x = 2.0, y = 0.0 }
baseline_dbm = -45.0

[[tx_points]]
name = "B"
position = { x = 6.0, y = 0.0 }
baseline_dbm = -45.0

[obstacle]
width_m = 0.5
height_m = 1.7
track_y_m = 3.0
attenuation_db = 10.0

[obstacle.trajectory]
kind = "sweep"
x_min = 0.0
x_max = 8.0
speed_min = 1.0
speed_max = 2.0

[[tx]]
id = "sta0"
schedule = [{ point = "A", from_s = 0.0, to_s = 65.0 }, { point = "B", from_s = 65.0, to_s = 130.0 }]

[[tx]]
id = "sta1"
schedule = [{ point = "B", from_s = 0.0, to_s = 130.0 }]
"#;

const SMALL_ENGINE: &str = r#"
n_stas = 2
queue_capacity = 300
retrain_min_interval_s = 10.0
min_train_samples = 50

[gbrt]
num_leaves = 8

[pipeline]
w = 8
n_img = 5
t0 = 0.5
n_r = 21
t_f = 1.0
frame_rate = 10.0
"#;

fn fixtures(dir: &Path) -> (String, String) {
    let scene = dir.join("small.toml");
    let engine = dir.join("small_engine.toml");
    fs::write(&scene, SMALL_SCENE).unwrap();
    fs::write(&engine, SMALL_ENGINE).unwrap();
    (scene.display().to_string(), engine.display().to_string())
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn table_header(path: PathBuf) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn simulate_writes_full_power_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a");
    let o = run(&["simulate", "--scene", "outdoor_mobile", "--seed", "7", "--out", &s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("power.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,tx_id,power_dbm"));
    // 600 s at one beacon per 0.1 s, two transmitters.
    assert_eq!(lines.count(), 2 * 6000);
    assert!(out.join("manifest.toml").is_file());
    assert!(out.join("scene.toml").is_file());
}

#[test]
fn simulate_frame_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let (scene, _) = fixtures(tmp.path());
    let out = tmp.path().join("f");
    let o = run(&["simulate", "--scene", &scene, "--out", &s(&out), "--frame-stride", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let frames: Vec<_> = fs::read_dir(out.join("frames")).unwrap().collect();
    assert_eq!(frames.len(), 13);
    let raw = fs::read(out.join("frames/frame_00000.raw")).unwrap();
    assert_eq!(raw.len(), 8 + 128 * 72 * 3);
}

#[test]
fn missing_scene_exits_2_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--scene", "/no/such/scene.toml", "--out", &s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("/no/such/scene.toml"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn second_run_refuses_without_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let (scene, _) = fixtures(tmp.path());
    let out = s(&tmp.path().join("o"));
    let args = ["simulate", "--scene", scene.as_str(), "--out", out.as_str()];
    assert!(run(&args).status.success());
    let again = run(&args);
    assert!(!again.status.success());
    assert!(stderr(&again).contains("--overwrite"));
    let mut forced = args.to_vec();
    forced.push("--overwrite");
    assert!(run(&forced).status.success());
}

#[test]
fn invalid_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, SMALL_SCENE.replace("noise_stddev_db = 0.5", "noise_stddev_db = -0.5")).unwrap();
    let o = run(&["simulate", "--scene", &s(&bad), "--out", &s(&tmp.path().join("o"))]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("noise_stddev_db"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    fs::write(&bad, "duration_s = [").unwrap();
    let o = run(&["simulate", "--scene", &s(&bad), "--out", &s(&tmp.path().join("o2"))]);
    assert!(!o.status.success());
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);
}

#[test]
fn evaluate_grid_is_deterministic_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let (scene, engine) = fixtures(tmp.path());
    let eval = |name: &str| {
        let out = tmp.path().join(name);
        let o = run(&[
            "evaluate", "--scene", &scene, "--engine", &engine, "--seeds", "1,2", "--out", &s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = eval("a");
    let b = eval("b");
    assert_eq!(table_header(a.join("errors.csv")), "window_start,window_end,RP-Im,Im,RP,Native");
    for f in ["errors.csv", "errors.txt", "errors_seed1.csv", "logs/rp-im_seed2.csv", "logs/native_seed1.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("plots/rp-im_seed1_sta0.svg").is_file());
    assert!(a.join("logs/rp-im_seed1_training.csv").is_file());
    assert!(!a.join("logs/native_seed1_training.csv").exists());

    // Re-scoring one recorded log reproduces that method's column.
    let out = tmp.path().join("r");
    let o = run(&["replay", &s(&a.join("logs/rp-im_seed1.csv")), "--out", &s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let replayed = fs::read_to_string(out.join("errors.csv")).unwrap();
    let full = fs::read_to_string(a.join("errors_seed1.csv")).unwrap();
    let first_col: Vec<String> = full
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    let replayed_rows: Vec<&str> = replayed.lines().skip(1).collect();
    assert_eq!(replayed_rows, first_col);
}

#[test]
fn evaluate_single_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let (scene, engine) = fixtures(tmp.path());
    let out = tmp.path().join("one");
    let o = run(&[
        "evaluate", "--scene", &scene, "--engine", &engine, "--method", "RP", "--seed", "4", "--out", &s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(table_header(out.join("errors.csv")), "window_start,window_end,RP");
    let logs: Vec<_> = fs::read_dir(out.join("logs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.contains("training"))
        .collect();
    assert_eq!(logs, vec!["rp_seed4.csv"]);
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seeds = [4]"));
}

#[test]
fn ablate_three_queue_lengths() {
    let tmp = tempfile::tempdir().unwrap();
    let (scene, engine) = fixtures(tmp.path());
    let out = tmp.path().join("abl");
    let o = run(&[
        "ablate", "--scene", &scene, "--engine", &engine, "--method", "RP", "--tq", "15,50,inf", "--out", &s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(table_header(out.join("ablation.csv")), "window_start,window_end,15 s,50 s,inf");
    let o = run(&["ablate", "--scene", &scene, "--tq", "0", "--out", &s(&tmp.path().join("x"))]);
    assert!(!o.status.success());
}

#[test]
fn timing_report_and_tick_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let (scene, engine) = fixtures(tmp.path());
    let o = run(&["timing", "--scene", &scene, "--ticks", "0", "--out", &s(&tmp.path().join("t0"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ticks"));

    let out = tmp.path().join("t");
    let o = run(&["timing", "--scene", &scene, "--engine", &engine, "--ticks", "30", "--out", &s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("timing.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["image_load", "image_reduction", "data_combination", "ml_prediction", "total"]);
}
