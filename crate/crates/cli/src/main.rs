#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use linkpred::engine::log::{read_predictions_csv, write_predictions_csv, write_training_csv};
use linkpred::engine::{EngineConfig, MethodKind};
use linkpred::harness::{
    ablate_queue, ablation_table, measure_timing, plot_svg, run_scenario, windowed_rmse, ErrorTable, QueueSeconds,
    DEFAULT_WINDOW_S, SCORE_START_S,
};
use linkpred::scene::io::{write_frame_raw, write_power_csv};
use linkpred::scene::{Frame, Scene, SceneConfig};

#[derive(Parser)]
#[command(name = "linkpred", version, about = "Camera-assisted received power prediction testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scene and write its power trace (and optionally frames).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also dump every N-th frame as raw RGB.
        #[arg(long, value_name = "N")]
        frame_stride: Option<usize>,
    },
    /// Run methods over seeds and write logs, plots and windowed RMSE tables.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        /// Comma-separated methods.
        #[arg(long, value_delimiter = ',', default_value = "RP-Im,Im,RP,Native")]
        method: Vec<MethodKind>,
    },
    /// Queue-length ablation: one run per T_q, same seeds.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        #[arg(long, default_value = "RP-Im")]
        method: MethodKind,
        /// Comma-separated queue lengths in seconds; `inf` for unbounded.
        #[arg(long, value_delimiter = ',', default_value = "15,50,inf")]
        tq: Vec<QueueSeconds>,
    },
    /// Per-step wall time of the prediction path.
    Timing {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "RP-Im")]
        method: MethodKind,
        #[arg(long, default_value_t = 500)]
        ticks: usize,
    },
    /// Re-score a recorded prediction log.
    Replay {
        /// Prediction log CSV written by `evaluate`.
        log: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        overwrite: bool,
        #[arg(long, default_value_t = DEFAULT_WINDOW_S)]
        window: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Scene name under configs/ or a path to a scene file.
    #[arg(long)]
    scene: String,
    /// Engine profile name under configs/ or a path; built-in defaults if absent.
    #[arg(long)]
    engine: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct Seeds {
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
}

impl Seeds {
    fn list(&self) -> Vec<u64> {
        match (self.seed, self.seeds.is_empty()) {
            (Some(s), _) => vec![s],
            (None, true) => vec![1],
            (None, false) => self.seeds.clone(),
        }
    }
}

/// Failure caused by the invocation itself; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Serialize)]
struct Manifest {
    command: &'static str,
    scene: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    engine: Option<String>,
    seeds: Vec<u64>,
    methods: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tq: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ticks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_stride: Option<usize>,
}

fn configs_dirs() -> Vec<PathBuf> {
    vec![
        PathBuf::from("configs"),
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs"),
    ]
}

/// A bare name resolves to `configs/<name>.toml`; anything else is a path.
fn resolve(arg: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(arg);
    let is_name = !arg.contains('/') && !arg.contains('\\') && !arg.ends_with(".toml");
    if !is_name {
        if direct.is_file() {
            return Ok(direct);
        }
        return Err(UsageError(format!("config file not found: {}", direct.display())).into());
    }
    for dir in configs_dirs() {
        let p = dir.join(format!("{arg}.toml"));
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(UsageError(format!("config file not found: configs/{arg}.toml")).into())
}

fn load_scene(arg: &str) -> Result<(PathBuf, SceneConfig)> {
    let path = resolve(arg)?;
    let cfg = SceneConfig::load(&path)?;
    Ok((path, cfg))
}

fn load_engine(arg: Option<&str>) -> Result<(String, EngineConfig)> {
    match arg {
        None => Ok(("built-in defaults".into(), EngineConfig::default())),
        Some(a) => {
            let path = resolve(a)?;
            let cfg = EngineConfig::load(&path)?;
            Ok((path.display().to_string(), cfg))
        }
    }
}

/// Creates `out`, refusing a non-empty directory unless `overwrite`.
fn prepare_out(out: &Path, overwrite: bool) -> Result<()> {
    if out.exists() {
        if !out.is_dir() {
            bail!("output path {} exists and is not a directory", out.display());
        }
        let non_empty = fs::read_dir(out)?.next().is_some();
        if non_empty && !overwrite {
            return Err(UsageError(format!(
                "output directory {} is not empty; pass --overwrite to replace its contents",
                out.display()
            ))
            .into());
        }
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn write_manifest(out: &Path, manifest: &Manifest, scene: &SceneConfig, engine: Option<&EngineConfig>) -> Result<()> {
    fs::write(out.join("manifest.toml"), toml::to_string(manifest)?)?;
    fs::write(out.join("scene.toml"), scene.to_toml_string())?;
    if let Some(e) = engine {
        fs::write(out.join("engine.toml"), e.to_toml_string())?;
    }
    Ok(())
}

fn write_table(out: &Path, stem: &str, table: &ErrorTable) -> Result<()> {
    table.write_csv(create(&out.join(format!("{stem}.csv")))?)?;
    fs::write(out.join(format!("{stem}.txt")), table.to_text())?;
    Ok(())
}

fn file_label(m: MethodKind) -> &'static str {
    match m {
        MethodKind::RpIm => "rp-im",
        MethodKind::Im => "im",
        MethodKind::Rp => "rp",
        MethodKind::Native => "native",
    }
}

fn simulate(common: &Common, seed: u64, frame_stride: Option<usize>) -> Result<()> {
    let (scene_path, cfg) = load_scene(&common.scene)?;
    if frame_stride == Some(0) {
        return Err(UsageError("--frame-stride must be at least 1".into()).into());
    }
    prepare_out(&common.out, common.overwrite)?;
    let scene = Scene::with_seed(cfg.clone(), seed)?;
    write_power_csv(create(&common.out.join("power.csv"))?, &scene.power_trace())?;
    if let Some(stride) = frame_stride {
        let mut frame = Frame {
            t: 0.0,
            width: 0,
            height: 0,
            pixels: Vec::new(),
        };
        for i in (0..cfg.frame_count()).step_by(stride) {
            scene.render_into(scene.frame_time(i), &mut frame)?;
            write_frame_raw(create(&common.out.join(format!("frames/frame_{i:05}.raw")))?, &frame)?;
        }
    }
    let manifest = Manifest {
        command: "simulate",
        scene: scene_path.display().to_string(),
        engine: None,
        seeds: vec![seed],
        methods: Vec::new(),
        tq: Vec::new(),
        ticks: None,
        frame_stride,
    };
    write_manifest(&common.out, &manifest, &cfg, None)?;
    println!(
        "wrote {} power samples to {}",
        cfg.beacon_count() * cfg.n_tx(),
        common.out.join("power.csv").display()
    );
    Ok(())
}

fn evaluate(common: &Common, seeds: &[u64], methods: &[MethodKind]) -> Result<()> {
    let (scene_path, scene) = load_scene(&common.scene)?;
    let (engine_src, engine) = load_engine(common.engine.as_deref())?;
    if methods.is_empty() {
        return Err(UsageError("--method needs at least one method".into()).into());
    }
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    prepare_out(&common.out, common.overwrite)?;
    let mut tables = Vec::new();
    for &seed in seeds {
        let log = run_scenario::<f64>(&scene, &engine, &methods, seed)
            .with_context(|| format!("cell scene={} seed={seed} failed", common.scene))?;
        for &m in &methods {
            let recs: Vec<_> = log.method(m).cloned().collect();
            let stem = format!("{}_seed{seed}", file_label(m));
            write_predictions_csv(create(&common.out.join("logs").join(format!("{stem}.csv")))?, &recs)?;
            if let Some(tr) = log.training.get(&m) {
                write_training_csv(create(&common.out.join("logs").join(format!("{stem}_training.csv")))?, tr)?;
            }
            for sta in 0..scene.n_tx() {
                let path = common.out.join("plots").join(format!("{stem}_sta{sta}.svg"));
                create(&path)?.write_all(plot_svg(&recs, sta, m).as_bytes())?;
            }
        }
        let table = windowed_rmse(&log.predictions, DEFAULT_WINDOW_S, SCORE_START_S, scene.duration_s);
        write_table(&common.out, &format!("errors_seed{seed}"), &table)?;
        tables.push(table);
    }
    let mean = ErrorTable::mean(&tables).expect("at least one seed");
    write_table(&common.out, "errors", &mean)?;
    let manifest = Manifest {
        command: "evaluate",
        scene: scene_path.display().to_string(),
        engine: Some(engine_src),
        seeds: seeds.to_vec(),
        methods: methods.iter().map(|m| m.to_string()).collect(),
        tq: Vec::new(),
        ticks: None,
        frame_stride: None,
    };
    write_manifest(&common.out, &manifest, &scene, Some(&engine))?;
    print!("{}", mean.to_text());
    Ok(())
}

fn ablate(common: &Common, seeds: &[u64], method: MethodKind, tq: &[QueueSeconds]) -> Result<()> {
    let (scene_path, scene) = load_scene(&common.scene)?;
    let (engine_src, engine) = load_engine(common.engine.as_deref())?;
    if method == MethodKind::Native {
        return Err(UsageError("ablation needs a learned method, not Native".into()).into());
    }
    if tq.is_empty() {
        return Err(UsageError("--tq needs at least one value".into()).into());
    }
    prepare_out(&common.out, common.overwrite)?;
    let mut per_seed = Vec::new();
    for &seed in seeds {
        let runs = ablate_queue::<f64>(&scene, &engine, tq, method, seed)
            .with_context(|| format!("cell scene={} seed={seed} failed", common.scene))?;
        let mut cells = Vec::new();
        for (q, log) in &runs {
            let name = q.to_string().replace(' ', "");
            write_predictions_csv(
                create(&common.out.join("logs").join(format!("{}_tq{name}_seed{seed}.csv", file_label(method))))?,
                &log.predictions,
            )?;
            cells.push((*q, windowed_rmse(&log.predictions, DEFAULT_WINDOW_S, SCORE_START_S, scene.duration_s)));
        }
        let table = ablation_table(&cells, method);
        write_table(&common.out, &format!("ablation_seed{seed}"), &table)?;
        per_seed.push(table);
    }
    let mean = ErrorTable::mean(&per_seed).expect("at least one seed");
    write_table(&common.out, "ablation", &mean)?;
    let manifest = Manifest {
        command: "ablate",
        scene: scene_path.display().to_string(),
        engine: Some(engine_src),
        seeds: seeds.to_vec(),
        methods: vec![method.to_string()],
        tq: tq.iter().map(|q| q.to_string()).collect(),
        ticks: None,
        frame_stride: None,
    };
    write_manifest(&common.out, &manifest, &scene, Some(&engine))?;
    print!("{}", mean.to_text());
    Ok(())
}

fn timing(common: &Common, seed: u64, method: MethodKind, ticks: usize) -> Result<()> {
    if ticks == 0 {
        return Err(UsageError("--ticks must be at least 1".into()).into());
    }
    let Some(kind) = method.feature_kind() else {
        return Err(UsageError("timing needs a learned method, not Native".into()).into());
    };
    let (scene_path, scene) = load_scene(&common.scene)?;
    let (engine_src, engine) = load_engine(common.engine.as_deref())?;
    prepare_out(&common.out, common.overwrite)?;
    let report = measure_timing::<f64>(&scene, &engine, kind, ticks, seed)?;
    fs::write(common.out.join("timing.csv"), report.to_csv())?;
    fs::write(common.out.join("timing.txt"), report.to_text())?;
    let manifest = Manifest {
        command: "timing",
        scene: scene_path.display().to_string(),
        engine: Some(engine_src),
        seeds: vec![seed],
        methods: vec![method.to_string()],
        tq: Vec::new(),
        ticks: Some(ticks),
        frame_stride: None,
    };
    write_manifest(&common.out, &manifest, &scene, Some(&engine))?;
    print!("{}", report.to_text());
    Ok(())
}

fn replay(log: &Path, out: &Path, overwrite: bool, window: f64) -> Result<()> {
    if !log.is_file() {
        return Err(UsageError(format!("log file not found: {}", log.display())).into());
    }
    if !(window > 0.0) {
        return Err(UsageError("--window must be positive".into()).into());
    }
    let file = File::open(log).with_context(|| format!("cannot read {}", log.display()))?;
    let records = read_predictions_csv(std::io::BufReader::new(file)).with_context(|| format!("{}", log.display()))?;
    let last = records.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    if !last.is_finite() || last < SCORE_START_S {
        bail!("{} has no predictions at or after {SCORE_START_S} s", log.display());
    }
    // A log inside an evaluate directory ends where its scene ends.
    let run_scene = log.parent().and_then(Path::parent).map(|d| d.join("scene.toml"));
    let to = match run_scene.filter(|p| p.is_file()) {
        Some(p) => SceneConfig::load(&p).with_context(|| format!("{}", p.display()))?.duration_s,
        None => SCORE_START_S + ((last - SCORE_START_S) / window).floor() * window + window,
    };
    prepare_out(out, overwrite)?;
    let table = windowed_rmse(&records, window, SCORE_START_S, to);
    write_table(out, "errors", &table)?;
    print!("{}", table.to_text());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            seed,
            frame_stride,
        } => simulate(&common, seed, frame_stride),
        Command::Evaluate { common, seeds, method } => evaluate(&common, &seeds.list(), &method),
        Command::Ablate {
            common,
            seeds,
            method,
            tq,
        } => ablate(&common, &seeds.list(), method, &tq),
        Command::Timing {
            common,
            seed,
            method,
            ticks,
        } => timing(&common, seed, method, ticks),
        Command::Replay {
            log,
            out,
            overwrite,
            window,
        } => replay(&log, &out, overwrite, window),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
