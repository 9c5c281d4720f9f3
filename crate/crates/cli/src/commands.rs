use std::io::Write;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use sightwalk_core::{load_dataset, load_frame, save_dataset, ActionLabel, Bucket, ClassTable, RgbdFrame};
use sightwalk_eval::{benchmark_navigation, evaluate_methods, DepthT, IdentityStub, Methods, ModelPolicy, PolicySpec};
use sightwalk_interact::{serve, ConnectionConfig, ModelPerception, ServeConfig};
use sightwalk_nets::{predict_instruction, segment, train_navigation, train_segmentation, NavArch, NavModel, SegArch, SegModel, SemanticSource};
use sightwalk_synth::sim::{ConstantPolicy, OraclePolicy, RandomPolicy};
use sightwalk_synth::{
    generate_corridor, generate_dataset_with, simulate_walk, BucketCount, CorridorConfig, OracleConfig, Policy,
    RenderSettings, Sampling, SceneClasses, StepView, WalkConfig,
};

use crate::args::*;
use crate::config::usage;

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| usage(format!("missing --{flag} (flag or config key `{flag}`)")))
}

pub fn gen_data(a: &GenDataArgs, out: &mut dyn Write) -> Result<()> {
    if a.per_bucket == 0 || a.low_obstacle == Some(0) {
        return Err(usage("--per-bucket and --low-obstacle must be at least 1"));
    }
    let counts: Vec<BucketCount> = Bucket::ALL
        .iter()
        .map(|&bucket| BucketCount {
            bucket,
            count: match (bucket, a.low_obstacle) {
                (Bucket::LowObstacle, Some(n)) => n,
                _ => a.per_bucket,
            },
        })
        .collect();
    let render = RenderSettings {
        width: a.width,
        height: a.height,
        ..RenderSettings::default()
    };
    let sampling = Sampling {
        walk_fraction: a.walk_fraction,
        max_walk_steps: a.max_walk_steps,
    };
    let ds = generate_dataset_with(
        &counts,
        a.seed,
        &ClassTable::default(),
        a.split.into(),
        &render,
        &OracleConfig::default(),
        &sampling,
    )?;
    let manifest = save_dataset(&ds, &a.out)?;
    let [l, s, r] = ds.manifest.label_counts();
    writeln!(out, "wrote {} samples to {} (left {l}, straight {s}, right {r})", ds.len(), manifest.display())?;
    Ok(())
}

pub fn train_seg(a: &TrainSegArgs, out: &mut dyn Write) -> Result<()> {
    let data = required(&a.data, "data")?;
    let ds = load_dataset(data).with_context(|| format!("loading {}", data.display()))?;
    let arch = SegArch::new(a.widths.clone(), ds.classes().len())?;
    let config = a.train.config(sightwalk_core::TrainConfig::default().input_side);
    let model = train_segmentation(&ds, &arch, &config)?;
    std::fs::create_dir_all(&a.out)?;
    let path = a.out.join("segnet.ckpt");
    model.save(&path)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn load_seg(path: &Path) -> Result<SegModel> {
    SegModel::load(path).with_context(|| format!("loading segnet {}", path.display()))
}

fn load_nav(path: &Path) -> Result<NavModel> {
    NavModel::load(path).with_context(|| format!("loading navnet {}", path.display()))
}

pub fn train_nav(a: &TrainNavArgs, out: &mut dyn Write) -> Result<()> {
    let data = required(&a.data, "data")?;
    let ds = load_dataset(data).with_context(|| format!("loading {}", data.display()))?;
    let seg = match a.semantics.as_str() {
        "gt" => None,
        path => Some(load_seg(Path::new(path))?),
    };
    let source = seg.as_ref().map_or(SemanticSource::GroundTruth, SemanticSource::Model);
    let arch = NavArch {
        widths: a.widths.clone(),
        pool_rows: a.pool_rows,
        pool_cols: a.pool_cols,
        ..NavArch::new(a.mode, a.input_side, ds.classes().len())
    };
    let model = train_navigation(&ds, source, &arch, &a.train.config(a.input_side))?;
    std::fs::create_dir_all(&a.out)?;
    let path = a.out.join(format!("navnet-{}.ckpt", a.mode));
    model.save(&path)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

pub fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(other) = a.stub.as_deref().filter(|s| *s != "identity") {
        return Err(usage(format!("--stub: unknown stub `{other}` (expected `identity`)")));
    }
    let data = required(&a.data, "data")?;
    let test = load_dataset(data).with_context(|| format!("loading {}", data.display()))?;
    let seg = a.segnet.as_deref().map(load_seg).transpose()?;
    let source = seg.as_ref().map_or(SemanticSource::GroundTruth, SemanticSource::Model);
    let report = match a.stub.as_deref() {
        Some(_) => evaluate_methods(&test, &Methods::uniform(&IdentityStub), source)?,
        None => {
            let rgb_c = load_nav(required(&a.rgb_c, "rgb-c")?)?;
            let rgbd_c = load_nav(required(&a.rgbd_c, "rgbd-c")?)?;
            let rgbds = load_nav(required(&a.rgbds, "rgbds")?)?;
            let methods = Methods {
                rgb_c: &rgb_c,
                depth_t: &DepthT,
                rgbd_c: &rgbd_c,
                rgbds: &rgbds,
            };
            evaluate_methods(&test, &methods, source)?
        }
    };
    report.write(&a.out)?;
    write!(out, "{}", report.to_text())?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let classes = SceneClasses::default();
    let plans: Vec<_> = (0..a.corridors as u64)
        .map(|i| generate_corridor(a.seed.wrapping_add(i), &CorridorConfig::default(), &classes))
        .collect();
    let nav = a.navnet.as_deref().map(load_nav).transpose()?;
    let seg = a.segnet.as_deref().map(load_seg).transpose()?;
    let mut specs = Vec::new();
    for name in &a.policies {
        let spec = match name.as_str() {
            "oracle" => PolicySpec::new("oracle", |_| Box::new(OraclePolicy::default())),
            "random" => PolicySpec::new("random", |seed| Box::new(RandomPolicy::new(seed))),
            "straight" => PolicySpec::new("straight", |_| Box::new(ConstantPolicy(ActionLabel::GoStraight))),
            "model" => {
                let model = nav.as_ref().ok_or_else(|| usage("policy `model` needs --navnet"))?;
                let source = seg.as_ref().map_or(SemanticSource::GroundTruth, SemanticSource::Model);
                PolicySpec::new(format!("model-{}", model.arch.mode), move |_| Box::new(ModelPolicy { model, source }))
            }
            other => return Err(usage(format!("--policies: unknown policy `{other}`"))),
        };
        specs.push(spec);
    }
    let walk = WalkConfig {
        max_steps: a.max_steps,
        seed: a.seed,
        ..WalkConfig::default()
    };
    let report = benchmark_navigation(&plans, &specs, a.trials, &walk)?;
    report.write(&a.out)?;
    write!(out, "{}", report.summary())?;
    Ok(())
}

pub fn infer(a: &InferArgs, out: &mut dyn Write) -> Result<()> {
    let nav = load_nav(required(&a.navnet, "navnet")?)?;
    let (frame, given) = load_frame(required(&a.rgb, "rgb")?, required(&a.depth, "depth")?, a.semantic.as_deref())?;
    let semantic = match (nav.arch.mode.needs_semantics(), given, &a.segnet) {
        (false, _, _) => None,
        (true, Some(s), _) => Some(s),
        (true, None, Some(path)) => Some(segment(&load_seg(path)?, &frame)?),
        (true, None, None) => return Err(usage("an rgbds navnet needs --semantic or --segnet")),
    };
    let result = predict_instruction(&nav, &frame, semantic.as_ref())?;
    writeln!(out, "{}", serde_json::to_string(&result)?)?;
    Ok(())
}

fn listen_addr(value: &str, flag: &str) -> Result<Option<SocketAddr>> {
    if value == "off" {
        return Ok(None);
    }
    value
        .parse()
        .map(Some)
        .map_err(|e| usage(format!("--{flag} {value}: {e}")))
}

/// Frames seen along the pilot's walk through one corridor.
fn corridor_frames(seed: u64) -> Result<Vec<RgbdFrame>> {
    let plan = generate_corridor(seed, &CorridorConfig::default(), &SceneClasses::default());
    let mut oracle = OraclePolicy::default();
    let mut frames = Vec::new();
    let mut record = |v: &StepView<'_>| {
        frames.push(v.render.frame.clone());
        oracle.act(v)
    };
    simulate_walk(&plan, &mut record, &WalkConfig { seed, ..WalkConfig::default() })?;
    Ok(frames)
}

pub fn serve_cmd(a: &ServeArgs, out: &mut dyn Write) -> Result<()> {
    let nav = load_nav(required(&a.navnet, "navnet")?)?;
    let seg = load_seg(required(&a.segnet, "segnet")?)?;
    if a.near_mm == 0 || a.near_mm >= a.far_mm {
        return Err(usage("--near-mm must be positive and below --far-mm"));
    }
    let frames = match &a.data {
        Some(dir) => load_dataset(dir)?.samples.into_iter().map(|s| s.frame).collect(),
        None => corridor_frames(a.corridor_seed)?,
    };
    if frames.is_empty() {
        bail!("the frame source is empty");
    }
    let config = ServeConfig {
        tcp: listen_addr(&a.tcp, "tcp")?,
        ws: listen_addr(&a.ws, "ws")?,
        frame_interval: Duration::from_millis(a.interval_ms),
        connection: ConnectionConfig {
            near_mm: a.near_mm,
            far_mm: a.far_mm,
            ..ConnectionConfig::default()
        },
    };
    let server = serve(config, Box::new(frames.into_iter().cycle()), Arc::new(ModelPerception { seg, nav }))?;
    if let Some(addr) = server.tcp_addr() {
        writeln!(out, "tcp listening on {addr}")?;
    }
    if let Some(addr) = server.ws_addr() {
        writeln!(out, "websocket listening on ws://{addr}/")?;
    }
    out.flush()?;
    match a.duration_s {
        Some(s) if s.is_finite() && s >= 0.0 => {
            std::thread::sleep(Duration::from_secs_f64(s));
            server.shutdown();
        }
        Some(s) => return Err(usage(format!("--duration-s {s}: must be a finite number >= 0"))),
        None => server.run_forever(),
    }
    Ok(())
}
