use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde_json::json;
use splatflow::cost::{sweep_bandwidth, unused_preprocess_fraction};
use splatflow::gcc::{render_gcc_with_stats, subview_rects};
use splatflow::metrics::{compare, coverage_report};
use splatflow::scene::{gen_scene, load_cameras, load_model, occluded_scene, save_cameras, save_model, write_image, SceneSpec};
use splatflow::tile;
use splatflow::{Camera, Category, GaussianModel, OutputImage, TrafficLedger};

use crate::args::{
    CompareArgs, ConfigArgs, GenSceneArgs, InputArgs, Pipeline, RenderArgs, StatsArgs, SweepArgs,
};
use crate::report::{InputFile, RunManifest};

/// Command failure, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Invalid flag combination or value (exit 2).
    Usage(String),
    /// Load, render or write failure (exit 1).
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

pub type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

struct Loaded {
    model: GaussianModel,
    cam: Camera,
}

fn load(input: &InputArgs, manifest: &mut RunManifest) -> Result<Loaded, Failure> {
    let model = load_model(&input.model).context("loading model")?;
    let cameras = load_cameras(&input.cameras).context("loading cameras")?;
    let cam = cameras.get(input.camera_index).cloned().ok_or_else(|| {
        anyhow!(
            "loading cameras: camera index {} out of range ({} cameras)",
            input.camera_index,
            cameras.len()
        )
    })?;
    manifest.inputs.insert("model".into(), InputFile::hash(&input.model)?);
    manifest.inputs.insert("cameras".into(), InputFile::hash(&input.cameras)?);
    Ok(Loaded { model, cam })
}

fn validate(cfg: &ConfigArgs) -> Result<(), Failure> {
    cfg.tile().validate().map_err(usage)?;
    cfg.gcc().validate().map_err(usage)
}

fn config_snapshot(input: &InputArgs, cfg: &ConfigArgs, threads: usize) -> serde_json::Value {
    json!({
        "camera_index": input.camera_index,
        "threads": threads,
        "tile": cfg.tile(),
        "gcc": cfg.gcc(),
    })
}

fn save(img: &OutputImage, path: &Path, manifest: &mut RunManifest, key: &str) -> Result<(), Failure> {
    write_image(img, path).context("writing image")?;
    manifest.outputs.insert(key.into(), path.display().to_string());
    Ok(())
}

fn finish(mut manifest: RunManifest, start: Instant, report: Option<&Path>) -> Outcome {
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(report)?;
    Ok(())
}

struct Rendered {
    image: OutputImage,
    ledger: TrafficLedger,
    details: serde_json::Value,
}

fn render_tile(l: &Loaded, cfg: &ConfigArgs) -> Rendered {
    let tcfg = cfg.tile();
    let mut ledger = TrafficLedger::new();
    let projected = tile::preprocess_all(&l.model, &l.cam, &tcfg, &mut ledger);
    let bins = tile::bin_to_tiles(&projected, &l.cam, &tcfg, &mut ledger);
    let image = tile::render_tiles(&bins, &projected, &l.cam, &tcfg, &mut ledger);
    let details = json!({
        "projected": projected.len(),
        "kv_pairs": bins.kv.len(),
        "tiles": bins.tiles_x * bins.tiles_y,
        "load_stats": ledger.load_stats(),
    });
    Rendered { image, ledger, details }
}

fn render_gcc(l: &Loaded, cfg: &ConfigArgs) -> Rendered {
    let gcfg = cfg.gcc();
    let mut ledger = TrafficLedger::new();
    let (image, stats) = render_gcc_with_stats(&l.model, &l.cam, &gcfg, &mut ledger);
    let subviews = gcfg.cmode.map(|s| subview_rects(l.cam.width, l.cam.height, s));
    let details = json!({
        "stats": stats,
        "subviews": subviews,
        "load_stats": ledger.load_stats(),
    });
    Rendered { image, ledger, details }
}

pub fn render(args: &RenderArgs, threads: usize) -> Outcome {
    let start = Instant::now();
    validate(&args.config)?;
    let mut snapshot = config_snapshot(&args.input, &args.config, threads);
    let name = match args.pipeline {
        Pipeline::Tile => "tile",
        Pipeline::Gcc => "gcc",
    };
    snapshot["pipeline"] = json!(name);
    let mut manifest = RunManifest::new("render", snapshot);
    let loaded = load(&args.input, &mut manifest)?;
    let r = match args.pipeline {
        Pipeline::Tile => render_tile(&loaded, &args.config),
        Pipeline::Gcc => render_gcc(&loaded, &args.config),
    };
    save(&r.image, &args.out, &mut manifest, "image")?;
    manifest.ledger.insert(name.into(), r.ledger.report());
    manifest.details = r.details;
    finish(manifest, start, args.input.report.as_deref())
}

pub fn compare_pipelines(args: &CompareArgs, threads: usize) -> Outcome {
    let start = Instant::now();
    validate(&args.config)?;
    let mut manifest = RunManifest::new("compare", config_snapshot(&args.input, &args.config, threads));
    let loaded = load(&args.input, &mut manifest)?;
    let t = render_tile(&loaded, &args.config);
    let g = render_gcc(&loaded, &args.config);
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        save(&t.image, &dir.join("tile.png"), &mut manifest, "tile_image")?;
        save(&g.image, &dir.join("gcc.png"), &mut manifest, "gcc_image")?;
    }
    manifest.quality = Some(compare(&t.image, &g.image).context("comparing images")?);
    let delta: serde_json::Map<_, _> = Category::ALL
        .iter()
        .map(|&c| {
            let d = g.ledger.bytes(c) as i64 - t.ledger.bytes(c) as i64;
            (c.name().to_string(), json!(d))
        })
        .collect();
    manifest.details = json!({
        "bytes_delta_gcc_minus_tile": delta,
        "bytes_ratio_gcc_over_tile": ratio(g.ledger.bytes_total(), t.ledger.bytes_total()),
        "ops_ratio_gcc_over_tile": ratio(g.ledger.ops.total(), t.ledger.ops.total()),
        "load_stats": { "tile": t.ledger.load_stats(), "gcc": g.ledger.load_stats() },
        "unused_preprocess": unused_preprocess_fraction(&t.ledger, &g.ledger),
        "tile": t.details,
        "gcc": g.details,
    });
    manifest.ledger.insert("tile".into(), t.ledger.report());
    manifest.ledger.insert("gcc".into(), g.ledger.report());
    finish(manifest, start, args.input.report.as_deref())
}

fn ratio(a: u64, b: u64) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

pub const CSV_HEADER: &str = "gaussian,aabb_px,obb_px,alpha_px";

pub fn stats(args: &StatsArgs, threads: usize) -> Outcome {
    let start = Instant::now();
    validate(&args.config)?;
    let mut manifest = RunManifest::new("stats", config_snapshot(&args.input, &args.config, threads));
    let loaded = load(&args.input, &mut manifest)?;
    let (totals, per) = coverage_report(&loaded.model, &loaded.cam, &args.config.tile());
    if let Some(path) = &args.csv {
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for c in &per {
            text.push_str(&format!("{},{},{},{}\n", c.src, c.aabb_px, c.obb_px, c.alpha_px));
        }
        fs::write(path, text).with_context(|| format!("writing csv {}", path.display()))?;
        manifest.outputs.insert("csv".into(), path.display().to_string());
    }
    let t = render_tile(&loaded, &args.config);
    let g = render_gcc(&loaded, &args.config);
    manifest.details = json!({
        "coverage": totals,
        "load_stats": { "tile": t.ledger.load_stats(), "gcc": g.ledger.load_stats() },
    });
    manifest.ledger.insert("tile".into(), t.ledger.report());
    manifest.ledger.insert("gcc".into(), g.ledger.report());
    finish(manifest, start, args.input.report.as_deref())
}

pub fn sweep(args: &SweepArgs, threads: usize) -> Outcome {
    let start = Instant::now();
    validate(&args.config)?;
    if let Some(bw) = args.bandwidths.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(usage(format!("bandwidth must be positive, got {bw}")));
    }
    if !(args.compute_rate > 0.0 && args.compute_rate.is_finite()) {
        return Err(usage(format!("compute rate must be positive, got {}", args.compute_rate)));
    }
    let mut snapshot = config_snapshot(&args.input, &args.config, threads);
    snapshot["bandwidths"] = json!(args.bandwidths);
    snapshot["compute_rate"] = json!(args.compute_rate);
    let mut manifest = RunManifest::new("sweep", snapshot);
    let loaded = load(&args.input, &mut manifest)?;
    let t = render_tile(&loaded, &args.config);
    let g = render_gcc(&loaded, &args.config);
    let table = sweep_bandwidth(
        &[("tile", &t.ledger), ("gcc", &g.ledger)],
        args.compute_rate,
        &args.bandwidths,
    )
    .map_err(usage)?;
    if !table.is_monotone() {
        return Err(Failure::Runtime(anyhow!("sweep: estimated time increased with bandwidth")));
    }
    manifest.details = serde_json::to_value(&table).context("serializing sweep")?;
    manifest.ledger.insert("tile".into(), t.ledger.report());
    manifest.ledger.insert("gcc".into(), g.ledger.report());
    finish(manifest, start, args.input.report.as_deref())
}

pub fn gen_scene_cmd(args: &GenSceneArgs, threads: usize) -> Outcome {
    let start = Instant::now();
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let spec = SceneSpec {
        camera: Camera::looking_down_z(args.width, args.height, args.focal),
        depth_range: (args.depth_min, args.depth_max),
        opacity_range: (args.opacity_min, args.opacity_max),
        scale_range: (args.scale_min, args.scale_max),
        ..SceneSpec::default()
    };
    spec.validate().map_err(usage)?;
    let model = if args.occluder {
        occluded_scene(args.seed, args.n, &spec)
    } else {
        gen_scene(args.seed, args.n, &spec)
    }
    .context("generating scene")?;
    save_model(&model, &args.out).context("writing model")?;

    let mut manifest = RunManifest::new(
        "gen-scene",
        json!({ "seed": args.seed, "n": args.n, "occluder": args.occluder, "threads": threads, "spec": spec }),
    );
    manifest.outputs.insert("model".into(), args.out.display().to_string());
    if let Some(path) = &args.cameras_out {
        save_cameras(std::slice::from_ref(&spec.camera), path).context("writing cameras")?;
        manifest.outputs.insert("cameras".into(), path.display().to_string());
    }
    manifest.details = json!({
        "seed": args.seed,
        "gaussians": model.count(),
        "model_sha256": InputFile::hash(&args.out)?.sha256,
    });
    finish(manifest, start, args.report.as_deref())
}
